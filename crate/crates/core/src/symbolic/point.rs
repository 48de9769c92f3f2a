use std::sync::Arc;

use super::{BakerParams, Point, Word};
use crate::error::{Error, Result};

/// Symbols consumed on each side by default. For the classical map this puts the
/// truncation error at 2^-64, below double precision.
pub const DEFAULT_DEPTH: usize = 64;

/// What to do when evaluation needs more symbols than are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Padding {
    /// Fail with [`Error::InsufficientDepth`].
    #[default]
    Strict,
    /// Treat missing symbols as 0. Bias is at most the contraction ratio to the
    /// number of real symbols used.
    Zero,
}

/// A point of the attractor encoded by a finite window of its bi-infinite
/// itinerary.
///
/// Symbols are packed 64 per word. Absolute position 0 holds the most remote past
/// symbol; the cursor holds symbol index 0, whose value selects the branch of the
/// current `y`. Past symbols determine `x` through the horizontal contractions,
/// future symbols determine `y` through the inverse branches of the base map.
/// Shifting moves the cursor and shares the buffer.
#[derive(Debug, Clone)]
pub struct SymbolicPoint {
    params: BakerParams,
    bits: Arc<[u64]>,
    len: usize,
    cursor: usize,
    padding: Padding,
}

impl SymbolicPoint {
    /// `past[0]` is symbol -1, `past[1]` symbol -2 and so on; `future[0]` is symbol 0.
    pub fn from_symbols(params: BakerParams, past: &[u8], future: &[u8]) -> Result<Self> {
        if past.iter().chain(future).any(|&s| s > 1) {
            return Err(Error::InvalidInput("symbols must be 0 or 1".into()));
        }
        let len = past.len() + future.len();
        let mut bits = vec![0u64; len.div_ceil(64).max(1)];
        let symbols = past.iter().rev().chain(future.iter());
        for (pos, &s) in symbols.enumerate() {
            bits[pos / 64] |= (s as u64) << (pos % 64);
        }
        Ok(Self::from_packed(params, bits, len, past.len()))
    }

    /// Build from a packed buffer laid out as described on the type.
    pub(crate) fn from_packed(
        params: BakerParams,
        bits: Vec<u64>,
        len: usize,
        cursor: usize,
    ) -> Self {
        debug_assert!(cursor <= len && bits.len() * 64 >= len);
        Self {
            params,
            bits: bits.into(),
            len,
            cursor,
            padding: Padding::Strict,
        }
    }

    pub fn with_padding(mut self, padding: Padding) -> Self {
        self.padding = padding;
        self
    }

    pub fn params(&self) -> &BakerParams {
        &self.params
    }

    pub fn padding(&self) -> Padding {
        self.padding
    }

    /// Number of stored symbols at negative indices.
    pub fn past_len(&self) -> usize {
        self.cursor
    }

    /// Number of stored symbols at indices `>= 0`.
    pub fn future_len(&self) -> usize {
        self.len - self.cursor
    }

    #[inline]
    fn bit(&self, pos: usize) -> u8 {
        ((self.bits[pos / 64] >> (pos % 64)) & 1) as u8
    }

    /// Symbol at signed index `i`, if stored.
    pub fn symbol(&self, i: i64) -> Option<u8> {
        let pos = self.cursor as i64 + i;
        (pos >= 0 && (pos as usize) < self.len).then(|| self.bit(pos as usize))
    }

    fn padded(&self, i: i64, depth: usize, available: usize) -> Result<u8> {
        match self.symbol(i) {
            Some(s) => Ok(s),
            None if self.padding == Padding::Zero => Ok(0),
            None => Err(Error::InsufficientDepth {
                needed: depth,
                available,
            }),
        }
    }

    /// Horizontal coordinate from `depth` past symbols.
    pub fn x_at_depth(&self, depth: usize) -> Result<f64> {
        let mut x = 0.0;
        for i in (1..=depth as i64).rev() {
            let (ratio, offset) = self
                .params
                .x_branch(self.padded(-i, depth, self.past_len())?);
            x = offset + ratio * x;
        }
        Ok(x)
    }

    /// Vertical coordinate from `depth` future symbols.
    pub fn y_at_depth(&self, depth: usize) -> Result<f64> {
        let mut y = 0.0;
        for i in (0..depth as i64).rev() {
            let (ratio, offset) = self
                .params
                .y_branch(self.padded(i, depth, self.future_len())?);
            y = offset + ratio * y;
        }
        Ok(y)
    }

    /// Coordinates within `max(gamma_a, gamma_b)^depth` in x and
    /// `max(alpha, beta)^depth` in y of the encoded point.
    pub fn evaluate_coords(&self, depth: usize) -> Result<Point> {
        if depth == 0 {
            return Err(Error::InvalidInput("depth must be positive".into()));
        }
        Ok(Point::new(self.x_at_depth(depth)?, self.y_at_depth(depth)?))
    }

    /// Coordinates at [`DEFAULT_DEPTH`].
    pub fn coords(&self) -> Result<Point> {
        self.evaluate_coords(DEFAULT_DEPTH)
    }

    /// Exact symbolic realization of `steps` applications of the map.
    pub fn apply_shift(&self, steps: usize) -> Result<Self> {
        if steps > self.future_len() {
            return Err(Error::InsufficientDepth {
                needed: steps,
                available: self.future_len(),
            });
        }
        let mut out = self.clone();
        out.cursor += steps;
        Ok(out)
    }

    /// Stored future symbols starting at index 0.
    pub fn future_symbols(&self) -> impl Iterator<Item = u8> + '_ {
        (self.cursor..self.len).map(move |pos| self.bit(pos))
    }

    /// Past symbols in order -1, -2, ...
    pub fn past_symbols(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.cursor).rev().map(move |pos| self.bit(pos))
    }

    /// Periodic point coded by the bi-infinite repetition of `word`, with
    /// [`DEFAULT_DEPTH`] symbols on each side plus room for [`DEFAULT_DEPTH`] shifts.
    pub fn periodic(params: BakerParams, word: &Word) -> PeriodicPoint {
        Self::periodic_with_capacity(params, word, DEFAULT_DEPTH, DEFAULT_DEPTH)
    }

    /// Periodic point with `depth` symbols on each side and `orbit_len` extra
    /// future symbols so that shifts up to `orbit_len` keep full depth.
    pub fn periodic_with_capacity(
        params: BakerParams,
        word: &Word,
        depth: usize,
        orbit_len: usize,
    ) -> PeriodicPoint {
        let future_len = depth + orbit_len;
        let len = depth + future_len;
        let mut bits = vec![0u64; len.div_ceil(64).max(1)];
        for pos in 0..len {
            let idx = pos as i64 - depth as i64;
            bits[pos / 64] |= (word.periodic_symbol(idx) as u64) << (pos % 64);
        }
        PeriodicPoint {
            point: Self::from_packed(params, bits, len, depth),
            minimal_period: word.minimal_period(),
            word: word.primitive(),
        }
    }
}

/// A periodic point together with its minimal period.
#[derive(Debug, Clone)]
pub struct PeriodicPoint {
    pub point: SymbolicPoint,
    pub minimal_period: usize,
    /// Primitive word of length `minimal_period`.
    pub word: Word,
}
