use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest word accepted from text input.
pub const MAX_WORD_LEN: usize = 4096;

/// A nonempty finite word over the alphabet {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidInput("empty symbol word".into()));
        }
        if let Some(bad) = symbols.iter().find(|&&s| s > 1) {
            return Err(Error::InvalidInput(format!("symbol {bad} not in {{0,1}}")));
        }
        Ok(Self(symbols))
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Smallest `q` dividing the length such that the word is a power of its
    /// length-`q` prefix.
    pub fn minimal_period(&self) -> usize {
        let n = self.0.len();
        (1..=n)
            .filter(|q| n % q == 0)
            .find(|&q| (q..n).all(|i| self.0[i] == self.0[i - q]))
            .unwrap_or(n)
    }

    /// The primitive root, e.g. `01` for `0101`.
    pub fn primitive(&self) -> Word {
        Word(self.0[..self.minimal_period()].to_vec())
    }

    /// Symbol at position `i` of the bi-infinite repetition, with index 0 at the
    /// first letter.
    pub fn periodic_symbol(&self, i: i64) -> u8 {
        let n = self.0.len() as i64;
        self.0[i.rem_euclid(n) as usize]
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() > MAX_WORD_LEN {
            return Err(Error::InvalidInput(format!(
                "word of length {} exceeds {MAX_WORD_LEN}",
                s.len()
            )));
        }
        let symbols = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidInput(format!("invalid symbol {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Word::new(symbols)
    }
}

impl TryFrom<String> for Word {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}
