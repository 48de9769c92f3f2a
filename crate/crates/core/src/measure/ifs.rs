use crate::symbolic::BakerParams;

/// Deepest cylinder level used when covering intervals. Beyond it the uncovered
/// boundary mass is below `max(alpha, beta)^60`.
pub const MAX_COVER_DEPTH: u32 = 60;

/// A self-similar probability measure on [0, 1] generated by two affine
/// contractions `t -> offset[s] + ratio[s] t` chosen with probabilities `weight[s]`.
///
/// The SRB measure of the baker's map is the product of two such measures: the
/// horizontal one (ratios `gamma_a, gamma_b`) and the vertical one, which is
/// Lebesgue measure written with ratios `alpha, beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilar {
    ratio: [f64; 2],
    offset: [f64; 2],
    weight: [f64; 2],
}

/// The image of [0, 1] under the composition of contractions coded by the first
/// `depth` bits of `bits` (bit 0 applied outermost).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    pub bits: u64,
    pub depth: u32,
    pub lo: f64,
    pub width: f64,
    pub mass: f64,
}

impl Cylinder {
    pub fn symbols(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.depth).map(move |i| ((self.bits >> i) & 1) as u8)
    }
}

impl SelfSimilar {
    pub fn horizontal(params: &BakerParams) -> Self {
        let (r0, o0) = params.x_branch(0);
        let (r1, o1) = params.x_branch(1);
        Self {
            ratio: [r0, r1],
            offset: [o0, o1],
            weight: [params.alpha(), params.beta()],
        }
    }

    pub fn vertical(params: &BakerParams) -> Self {
        let (r0, o0) = params.y_branch(0);
        let (r1, o1) = params.y_branch(1);
        Self {
            ratio: [r0, r1],
            offset: [o0, o1],
            weight: [params.alpha(), params.beta()],
        }
    }

    #[inline]
    pub fn branch(&self, s: u8) -> (f64, f64) {
        (self.ratio[s as usize], self.offset[s as usize])
    }

    /// Barycenter of the measure.
    pub fn mean(&self) -> f64 {
        let num = self.weight[0] * self.offset[0] + self.weight[1] * self.offset[1];
        num / (1.0 - self.weight[0] * self.ratio[0] - self.weight[1] * self.ratio[1])
    }

    /// Point coded by `symbols`, outermost first.
    pub fn point<I>(&self, symbols: I) -> f64
    where
        I: IntoIterator<Item = u8>,
        I::IntoIter: DoubleEndedIterator,
    {
        symbols.into_iter().rev().fold(0.0, |t, s| {
            let (r, o) = self.branch(s);
            o + r * t
        })
    }

    /// Mass of `[0, t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut scale = 1.0;
        let mut u = t;
        loop {
            if u <= 0.0 {
                return acc;
            }
            if u >= 1.0 {
                return acc + scale;
            }
            if scale < 1e-18 {
                return acc + scale * u;
            }
            let end0 = self.offset[0] + self.ratio[0];
            if u < end0 {
                if u <= self.offset[0] {
                    return acc;
                }
                u = (u - self.offset[0]) / self.ratio[0];
                scale *= self.weight[0];
            } else if u <= self.offset[1] {
                return acc + scale * self.weight[0];
            } else {
                acc += scale * self.weight[0];
                u = (u - self.offset[1]) / self.ratio[1];
                scale *= self.weight[1];
            }
        }
    }

    /// Mass of the interval `[lo, hi]` intersected with [0, 1].
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        (self.cdf(hi) - self.cdf(lo)).max(0.0)
    }

    /// Maximal cylinders of depth at most `max_depth` contained in `[lo, hi]`,
    /// left to right.
    pub fn cover(&self, lo: f64, hi: f64, max_depth: u32) -> Vec<Cylinder> {
        let mut out = Vec::new();
        let mut stack = vec![Cylinder {
            bits: 0,
            depth: 0,
            lo: 0.0,
            width: 1.0,
            mass: 1.0,
        }];
        while let Some(c) = stack.pop() {
            let c_hi = c.lo + c.width;
            if c.lo >= hi || c_hi <= lo || c.mass == 0.0 {
                continue;
            }
            if c.lo >= lo && c_hi <= hi {
                out.push(c);
                continue;
            }
            if c.depth >= max_depth.min(63) {
                continue;
            }
            for s in [1u8, 0] {
                let (r, o) = self.branch(s);
                stack.push(Cylinder {
                    bits: c.bits | (u64::from(s) << c.depth),
                    depth: c.depth + 1,
                    lo: c.lo + c.width * o,
                    width: c.width * r,
                    mass: c.mass * self.weight[s as usize],
                });
            }
        }
        out
    }
}
