//! Streaming evaluation of long orbits.
//!
//! Re-evaluating a point from its symbol window costs `O(depth)` per step.
//! Along an orbit both coordinates can be produced in amortized `O(1)`: `x`
//! contracts forward (`x_{k+1} = f_{s_k}(x_k)`, errors shrink) while `y` is
//! recovered chunk by chunk with a backward pass over the future symbols
//! (`y_k = g_{s_k}(y_{k+1})`, again contracting). Each chunk keeps a lookahead of
//! `depth` symbols so every emitted `y` is accurate to `max(alpha, beta)^depth`.

use rand::{Rng, RngCore};

use super::{BakerParams, Padding, Point, SymbolicPoint, DEFAULT_DEPTH};
use crate::error::{Error, Result};

/// Orbits passing within this distance of the discontinuity line are rejected.
pub const SINGULARITY_TOL: f64 = 8.881_784_197_001_252e-16; // 2^-50

const CHUNK: usize = 2048;

/// Supplier of future symbols.
pub trait SymbolSource {
    /// `None` once the source is exhausted.
    fn next_symbol(&mut self) -> Option<u8>;
}

/// I.i.d. symbols with `P(0) = alpha`.
#[derive(Debug, Clone)]
pub struct RandomSymbols<R> {
    rng: R,
    alpha: f64,
    fair: bool,
    cache: u64,
    left: u32,
}

impl<R: RngCore> RandomSymbols<R> {
    pub fn new(rng: R, params: &BakerParams) -> Self {
        Self {
            rng,
            alpha: params.alpha(),
            fair: params.is_fair(),
            cache: 0,
            left: 0,
        }
    }

    pub fn into_rng(self) -> R {
        self.rng
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }

    #[inline]
    pub fn draw(&mut self) -> u8 {
        if self.fair {
            if self.left == 0 {
                self.cache = self.rng.next_u64();
                self.left = 64;
            }
            let s = (self.cache & 1) as u8;
            self.cache >>= 1;
            self.left -= 1;
            s
        } else {
            u8::from(!self.rng.random_bool(self.alpha))
        }
    }
}

impl<R: RngCore> SymbolSource for RandomSymbols<R> {
    #[inline]
    fn next_symbol(&mut self) -> Option<u8> {
        Some(self.draw())
    }
}

impl<S: SymbolSource + ?Sized> SymbolSource for &mut S {
    #[inline]
    fn next_symbol(&mut self) -> Option<u8> {
        (**self).next_symbol()
    }
}

/// A fixed prefix followed by another source.
#[derive(Debug, Clone)]
pub struct Prefixed<S> {
    prefix: Vec<u8>,
    pos: usize,
    rest: S,
}

impl<S> Prefixed<S> {
    pub fn new(prefix: Vec<u8>, rest: S) -> Self {
        Self {
            prefix,
            pos: 0,
            rest,
        }
    }
}

impl<S> Prefixed<S> {
    /// Empty the prefix and return it for refilling.
    pub fn reset_prefix(&mut self) -> &mut Vec<u8> {
        self.prefix.clear();
        self.pos = 0;
        &mut self.prefix
    }

    pub fn rest_mut(&mut self) -> &mut S {
        &mut self.rest
    }
}

impl<S: SymbolSource> SymbolSource for Prefixed<S> {
    #[inline]
    fn next_symbol(&mut self) -> Option<u8> {
        if self.pos < self.prefix.len() {
            self.pos += 1;
            Some(self.prefix[self.pos - 1])
        } else {
            self.rest.next_symbol()
        }
    }
}

/// The stored future of a point, optionally padded with zeros.
#[derive(Debug, Clone)]
pub struct StoredSymbols {
    symbols: Vec<u8>,
    pos: usize,
    pad_zero: bool,
}

impl StoredSymbols {
    pub fn from_point(point: &SymbolicPoint) -> Self {
        Self {
            symbols: point.future_symbols().collect(),
            pos: 0,
            pad_zero: point.padding() == Padding::Zero,
        }
    }
}

impl SymbolSource for StoredSymbols {
    #[inline]
    fn next_symbol(&mut self) -> Option<u8> {
        match self.symbols.get(self.pos) {
            Some(&s) => {
                self.pos += 1;
                Some(s)
            }
            None if self.pad_zero => Some(0),
            None => None,
        }
    }
}

/// Forward orbit `z, Tz, T^2 z, ...` produced from a starting `x` and a stream of
/// future symbols supplied on each call.
///
/// The buffers are reusable: call [`Orbit::reset`] to start a new orbit without
/// reallocating.
#[derive(Debug, Clone)]
pub struct Orbit {
    alpha: f64,
    x_ratio: [f64; 2],
    x_offset: [f64; 2],
    y_ratio: [f64; 2],
    y_offset: [f64; 2],
    lookahead: usize,
    exhausted: bool,
    symbols: Vec<u8>,
    ys: Vec<f64>,
    filled: usize,
    valid: usize,
    idx: usize,
    x: f64,
    step: u64,
}

impl Orbit {
    /// [`DEFAULT_DEPTH`] symbols of lookahead, chunks of 2048 steps.
    pub fn new(params: &BakerParams, x0: f64) -> Self {
        Self::with_capacity(params, x0, DEFAULT_DEPTH, CHUNK)
    }

    /// `chunk` is the number of points produced per backward pass; short orbits
    /// should use a small chunk so that few symbols are drawn in vain.
    pub fn with_capacity(params: &BakerParams, x0: f64, lookahead: usize, chunk: usize) -> Self {
        let (xr0, xo0) = params.x_branch(0);
        let (xr1, xo1) = params.x_branch(1);
        let (yr0, yo0) = params.y_branch(0);
        let (yr1, yo1) = params.y_branch(1);
        let lookahead = lookahead.max(1);
        let chunk = chunk.max(1);
        Self {
            alpha: params.alpha(),
            x_ratio: [xr0, xr1],
            x_offset: [xo0, xo1],
            y_ratio: [yr0, yr1],
            y_offset: [yo0, yo1],
            lookahead,
            exhausted: false,
            symbols: vec![0; chunk + lookahead],
            ys: vec![0.0; chunk],
            filled: 0,
            valid: 0,
            idx: 0,
            x: x0,
            step: 0,
        }
    }

    /// Discard buffered symbols and restart from horizontal coordinate `x0`.
    pub fn reset(&mut self, x0: f64) {
        self.exhausted = false;
        self.filled = 0;
        self.valid = 0;
        self.idx = 0;
        self.x = x0;
        self.step = 0;
    }

    /// Number of points emitted so far.
    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    fn refill<S: SymbolSource + ?Sized>(&mut self, source: &mut S) -> Result<()> {
        let keep = self.filled - self.valid;
        self.symbols.copy_within(self.valid..self.filled, 0);
        let mut filled = keep;
        let cap = self.symbols.len();
        while filled < cap && !self.exhausted {
            match source.next_symbol() {
                Some(s) => {
                    self.symbols[filled] = s;
                    filled += 1;
                }
                None => self.exhausted = true,
            }
        }
        self.filled = filled;
        self.idx = 0;
        if filled <= self.lookahead {
            self.valid = 0;
            return Err(Error::InsufficientDepth {
                needed: self.lookahead + 1,
                available: filled,
            });
        }
        self.valid = filled - self.lookahead;
        let mut y = 0.0;
        for j in (0..filled).rev() {
            let s = self.symbols[j] as usize;
            y = self.y_offset[s] + self.y_ratio[s] * y;
            if j < self.valid {
                self.ys[j] = y;
            }
        }
        Ok(())
    }

    /// Current point, then advance by one application of the map.
    ///
    /// Fails with [`Error::OnSingularity`] if the current point lies within
    /// [`SINGULARITY_TOL`] of the discontinuity line, and with
    /// [`Error::InsufficientDepth`] once a finite source cannot supply the
    /// lookahead. `source` must be the same stream on every call until the next
    /// reset.
    #[inline]
    pub fn next_point<S: SymbolSource + ?Sized>(&mut self, source: &mut S) -> Result<Point> {
        if self.idx == self.valid {
            self.refill(source)?;
        }
        let s = self.symbols[self.idx] as usize;
        let y = self.ys[self.idx];
        if (y - self.alpha).abs() < SINGULARITY_TOL {
            return Err(Error::OnSingularity {
                y,
                alpha: self.alpha,
            });
        }
        let p = Point::new(self.x, y);
        self.x = self.x_offset[s] + self.x_ratio[s] * self.x;
        self.idx += 1;
        self.step += 1;
        Ok(p)
    }

    /// Advance `n` steps without inspecting the points (singularity checks still apply).
    pub fn skip<S: SymbolSource + ?Sized>(&mut self, n: usize, source: &mut S) -> Result<()> {
        for _ in 0..n {
            self.next_point(source)?;
        }
        Ok(())
    }

    /// Orbit of a stored point together with its symbol stream; `x` is evaluated
    /// from at most [`DEFAULT_DEPTH`] past symbols (padded under zero padding).
    pub fn from_point(point: &SymbolicPoint) -> Result<(Self, StoredSymbols)> {
        Self::from_point_for(point, 1)
    }

    /// As [`Orbit::from_point`], shrinking the lookahead under strict padding so
    /// that `steps` points can be produced from the stored future.
    pub fn from_point_for(point: &SymbolicPoint, steps: usize) -> Result<(Self, StoredSymbols)> {
        let (depth, lookahead) = match point.padding() {
            Padding::Zero => (DEFAULT_DEPTH, DEFAULT_DEPTH),
            Padding::Strict => {
                if point.future_len() <= steps {
                    return Err(Error::InsufficientDepth {
                        needed: steps + 1,
                        available: point.future_len(),
                    });
                }
                (
                    DEFAULT_DEPTH.min(point.past_len()),
                    DEFAULT_DEPTH.min(point.future_len() - steps),
                )
            }
        };
        let x0 = point.x_at_depth(depth)?;
        Ok((
            Self::with_capacity(point.params(), x0, lookahead, CHUNK),
            StoredSymbols::from_point(point),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::Word;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stream_matches_window_evaluation() {
        let params = BakerParams::new(0.4, 0.3, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let past: Vec<u8> = (0..64).map(|_| rng.random_range(0..2)).collect();
        let fut: Vec<u8> = (0..5000).map(|_| rng.random_range(0..2)).collect();
        let p = SymbolicPoint::from_symbols(params, &past, &fut).unwrap();
        let (mut orbit, mut src) = Orbit::from_point(&p).unwrap();
        for k in [0usize, 1, 2, 100, 2047, 2048, 2049, 4000] {
            while (orbit.steps_taken() as usize) < k {
                orbit.next_point(&mut src).unwrap();
            }
            let streamed = orbit.next_point(&mut src).unwrap();
            let direct = p.apply_shift(k).unwrap().evaluate_coords(64).unwrap();
            assert!((streamed.x - direct.x).abs() < 1e-14, "x at {k}");
            assert!((streamed.y - direct.y).abs() < 1e-14, "y at {k}");
        }
    }

    #[test]
    fn strict_finite_source_runs_out() {
        let params = BakerParams::classical();
        let p = SymbolicPoint::from_symbols(params, &[0; 64], &[0; 100]).unwrap();
        let (mut orbit, mut src) = Orbit::from_point(&p).unwrap();
        let mut n = 0;
        while orbit.next_point(&mut src).is_ok() {
            n += 1;
        }
        assert!(n > 0 && n < 100);
    }

    #[test]
    fn zero_padded_fixed_point_runs_forever() {
        let params = BakerParams::classical();
        let p = SymbolicPoint::from_symbols(params, &[0; 4], &[0; 4])
            .unwrap()
            .with_padding(Padding::Zero);
        let (mut orbit, mut src) = Orbit::from_point(&p).unwrap();
        for _ in 0..10_000 {
            assert_eq!(orbit.next_point(&mut src).unwrap(), Point::new(0.0, 0.0));
        }
    }

    #[test]
    fn period_two_orbit_alternates() {
        let w: Word = "01".parse().unwrap();
        let pp = SymbolicPoint::periodic_with_capacity(BakerParams::classical(), &w, 64, 5000);
        let (mut orbit, mut src) = Orbit::from_point(&pp.point).unwrap();
        for k in 0..4000 {
            let z = orbit.next_point(&mut src).unwrap();
            let (ex, ey) = if k % 2 == 0 {
                (2.0 / 3.0, 1.0 / 3.0)
            } else {
                (1.0 / 3.0, 2.0 / 3.0)
            };
            assert!((z.x - ex).abs() < 1e-15 && (z.y - ey).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_orbits_are_flagged() {
        // y = 0.1000... sits exactly on the discontinuity.
        let params = BakerParams::classical();
        let mut fut = vec![0u8; 200];
        fut[0] = 1;
        let p = SymbolicPoint::from_symbols(params, &[0; 64], &fut).unwrap();
        let (mut orbit, mut src) = Orbit::from_point(&p).unwrap();
        assert!(matches!(
            orbit.next_point(&mut src),
            Err(Error::OnSingularity { .. })
        ));
    }

    #[test]
    fn random_symbols_have_requested_bias() {
        let params = BakerParams::new(0.3, 0.5, 0.5).unwrap();
        let mut src = RandomSymbols::new(ChaCha8Rng::seed_from_u64(9), &params);
        let n = 200_000;
        let zeros = (0..n).filter(|_| src.draw() == 0).count() as f64 / n as f64;
        assert!((zeros - 0.3).abs() < 0.005);
        let fair = BakerParams::classical();
        let mut src = RandomSymbols::new(ChaCha8Rng::seed_from_u64(9), &fair);
        let zeros = (0..n).filter(|_| src.draw() == 0).count() as f64 / n as f64;
        assert!((zeros - 0.5).abs() < 0.005);
    }
}
