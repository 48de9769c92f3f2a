use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use super::ifs::{Cylinder, SelfSimilar, MAX_COVER_DEPTH};
use super::Ball;
use crate::error::{Error, Result};
use crate::par;
use crate::symbolic::{
    BakerParams, Orbit, Point, Prefixed, RandomSymbols, SymbolicPoint, DEFAULT_DEPTH,
};

/// Consecutive singularity rejections tolerated before giving up.
pub const MAX_RESAMPLES: u32 = 1000;

/// Rejection sampler attempts per conditional draw.
const MAX_REJECTIONS: u32 = 1_000_000;

/// Run `f` again whenever it fails on the singularity line, counting rejections.
pub fn with_resampling<T>(rejected: &mut u64, mut f: impl FnMut() -> Result<T>) -> Result<T> {
    let mut last = None;
    for _ in 0..MAX_RESAMPLES {
        match f() {
            Err(e @ Error::OnSingularity { .. }) => {
                *rejected += 1;
                last = Some(e);
            }
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Draws points distributed according to the SRB measure: past and future symbols
/// i.i.d. with `P(0) = alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrbSampler {
    params: BakerParams,
    seed: u64,
    depth: usize,
}

impl SrbSampler {
    pub fn new(params: BakerParams, seed: u64) -> Self {
        Self {
            params,
            seed,
            depth: DEFAULT_DEPTH,
        }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth.max(1);
        self
    }

    pub fn params(&self) -> &BakerParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Random stream for one block of an experiment tagged `salt`.
    pub fn rng(&self, salt: u64, block: u64) -> ChaCha8Rng {
        par::block_rng(self.seed, salt, block)
    }

    pub fn source<R: RngCore>(&self, rng: R) -> RandomSymbols<R> {
        RandomSymbols::new(rng, &self.params)
    }

    pub fn sample_x<R: RngCore>(&self, src: &mut RandomSymbols<R>) -> f64 {
        (0..self.depth).fold(0.0, |x, _| {
            let (r, o) = self.params.x_branch(src.draw());
            o + r * x
        })
    }

    pub fn sample_y<R: RngCore>(&self, src: &mut RandomSymbols<R>) -> f64 {
        (0..self.depth).fold(0.0, |y, _| {
            let (r, o) = self.params.y_branch(src.draw());
            o + r * y
        })
    }

    pub fn sample_point<R: RngCore>(&self, src: &mut RandomSymbols<R>) -> Point {
        let x = self.sample_x(src);
        Point::new(x, self.sample_y(src))
    }

    pub fn sample_symbolic<R: RngCore>(&self, src: &mut RandomSymbols<R>) -> SymbolicPoint {
        let past: Vec<u8> = (0..self.depth).map(|_| src.draw()).collect();
        let future: Vec<u8> = (0..self.depth).map(|_| src.draw()).collect();
        SymbolicPoint::from_symbols(self.params, &past, &future)
            .expect("sampled symbols are binary")
    }
}

/// One SRB-distributed point with `sampler.depth()` symbols on each side.
pub fn sample_srb<R: RngCore>(sampler: &SrbSampler, rng: R) -> SymbolicPoint {
    sampler.sample_symbolic(&mut sampler.source(rng))
}

#[derive(Debug, Clone)]
struct Cover {
    cylinders: Vec<Cylinder>,
    cumulative: Vec<f64>,
}

impl Cover {
    fn new(ifs: &SelfSimilar, lo: f64, hi: f64) -> Self {
        let cylinders = ifs.cover(lo, hi, MAX_COVER_DEPTH);
        let cumulative = cylinders
            .iter()
            .scan(0.0, |acc, c| {
                *acc += c.mass;
                Some(*acc)
            })
            .collect();
        Self {
            cylinders,
            cumulative,
        }
    }

    fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn pick<R: Rng>(&self, rng: &mut R) -> &Cylinder {
        let u = rng.random::<f64>() * self.total();
        let i = self.cumulative.partition_point(|&c| c <= u);
        &self.cylinders[i.min(self.cylinders.len() - 1)]
    }
}

/// Exact sampler for the SRB measure conditioned on a box, optionally restricted
/// further to a ball by rejection.
///
/// The box is decomposed into maximal product cylinders; a cylinder is chosen
/// with probability proportional to its mass and the remaining symbols are drawn
/// i.i.d. Boundary slivers below the deepest cover level are omitted.
#[derive(Debug, Clone)]
pub struct ConditionalSampler {
    params: BakerParams,
    x: Cover,
    y: Cover,
    accept: Option<Ball>,
}

impl ConditionalSampler {
    /// Condition on `ball`.
    pub fn new(params: &BakerParams, ball: &Ball) -> Result<Self> {
        let mut s = Self::for_box(params, ball.bounding_box())?;
        s.accept = Some(ball.clone());
        Ok(s)
    }

    /// Condition on the box `(x_lo, x_hi, y_lo, y_hi)`.
    pub fn for_box(params: &BakerParams, bbox: (f64, f64, f64, f64)) -> Result<Self> {
        let (x_lo, x_hi, y_lo, y_hi) = bbox;
        let x = Cover::new(&SelfSimilar::horizontal(params), x_lo, x_hi);
        let y = Cover::new(&SelfSimilar::vertical(params), y_lo, y_hi);
        if x.total() <= 0.0 || y.total() <= 0.0 {
            return Err(Error::ZeroHits {
                what: format!("box [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}] (zero SRB mass)"),
            });
        }
        Ok(Self {
            params: *params,
            x,
            y,
            accept: None,
        })
    }

    /// SRB mass of the covered box.
    pub fn box_mass(&self) -> f64 {
        self.x.total() * self.y.total()
    }

    /// Draw one point of the box. Returns `x`; the future symbols defining `y`
    /// (cylinder prefix plus `depth` free symbols) are written to `prefix`.
    fn draw_box<R: RngCore>(
        &self,
        depth: usize,
        src: &mut RandomSymbols<R>,
        prefix: &mut Vec<u8>,
    ) -> (f64, f64) {
        let xc = *self.x.pick(src.rng_mut());
        let x_rest = (0..depth).fold(0.0, |x, _| {
            let (r, o) = self.params.x_branch(src.draw());
            o + r * x
        });
        let yc = *self.y.pick(src.rng_mut());
        prefix.clear();
        prefix.extend(yc.symbols());
        prefix.extend((0..depth).map(|_| src.draw()));
        let y = prefix.iter().rev().fold(0.0, |y, &s| {
            let (r, o) = self.params.y_branch(s);
            o + r * y
        });
        (xc.lo + xc.width * x_rest, y)
    }

    /// Draw one point of the conditioned set; see [`ConditionalSampler::draw_box`].
    fn draw<R: RngCore>(
        &self,
        depth: usize,
        src: &mut RandomSymbols<R>,
        prefix: &mut Vec<u8>,
    ) -> Result<Point> {
        for _ in 0..MAX_REJECTIONS {
            let (x, y) = self.draw_box(depth, src, prefix);
            let p = Point::new(x, y);
            if self.accept.as_ref().is_none_or(|b| b.contains(p)) {
                return Ok(p);
            }
        }
        Err(Error::ZeroHits {
            what: "ball inside its bounding box (rejection sampler exhausted)".into(),
        })
    }

    /// Draw a point of the box without orbit bookkeeping.
    pub fn sample_point<R: RngCore>(&self, depth: usize, src: &mut RandomSymbols<R>) -> Point {
        let mut prefix = Vec::with_capacity(MAX_COVER_DEPTH as usize + depth);
        let (x, y) = self.draw_box(depth, src, &mut prefix);
        Point::new(x, y)
    }
}

/// Reusable orbit generator with SRB, Lebesgue or conditioned initial points.
#[derive(Debug)]
pub struct OrbitRunner<R = ChaCha8Rng> {
    sampler: SrbSampler,
    orbit: Orbit,
    stream: Prefixed<RandomSymbols<R>>,
    scratch: Vec<u8>,
}

impl<R: RngCore> OrbitRunner<R> {
    /// `chunk` is passed to [`Orbit::with_capacity`].
    pub fn new(sampler: &SrbSampler, rng: R, chunk: usize) -> Self {
        Self {
            sampler: *sampler,
            orbit: Orbit::with_capacity(sampler.params(), 0.0, sampler.depth(), chunk),
            stream: Prefixed::new(Vec::new(), sampler.source(rng)),
            scratch: Vec::new(),
        }
    }

    pub fn rng(&mut self) -> &mut R {
        self.stream.rest_mut().rng_mut()
    }

    /// Start from an SRB-distributed point.
    pub fn start_srb(&mut self) {
        let x0 = self.sampler.sample_x(self.stream.rest_mut());
        self.stream.reset_prefix();
        self.orbit.reset(x0);
    }

    /// Start from a Lebesgue-distributed point and discard `burn_in` steps.
    pub fn start_lebesgue(&mut self, burn_in: usize) -> Result<()> {
        let x0 = self.rng().random::<f64>();
        self.stream.reset_prefix();
        self.orbit.reset(x0);
        self.orbit.skip(burn_in, &mut self.stream)
    }

    /// Start from a point drawn from the SRB measure conditioned by `cs`.
    pub fn start_conditional(&mut self, cs: &ConditionalSampler) -> Result<Point> {
        let depth = self.sampler.depth();
        let p = cs.draw(depth, self.stream.rest_mut(), &mut self.scratch)?;
        self.stream.reset_prefix().extend_from_slice(&self.scratch);
        self.orbit.reset(p.x);
        Ok(p)
    }

    #[inline]
    pub fn next_point(&mut self) -> Result<Point> {
        self.orbit.next_point(&mut self.stream)
    }
}
