//! Solution encoding for layer-wise pruning and the ratio-bounded
//! bit-wise mutation operator.
//!
//! A [`LayerGenome`] is a retain/prune mask over one layer's filters
//! (`true` = retain). Mutation scans the bits in index order and flips
//! each with probability `rate`; a 1→0 flip is only admitted while the
//! running zero-count of the vector under construction stays strictly
//! below `l * ratio_bound`, which caps how many filters a single
//! mutation can mark for pruning.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenomeError {
    #[error("genome length must be at least 1")]
    EmptyGenome,
    #[error("mutation rate must lie in [0, 1], got {0}")]
    InvalidRate(f64),
    #[error("ratio bound must lie in (0, 1], got {0}")]
    InvalidRatioBound(f64),
    #[error("invalid genome bit-string character {0:?}")]
    InvalidBitChar(char),
}

/// Retain/prune mask over one layer's filters. `true` keeps the filter.
///
/// Serializes as a bit-string (`"110101"`) in archive and report files.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerGenome {
    bits: Vec<bool>,
}

impl LayerGenome {
    /// The all-ones genome `I_0` of length `l`: nothing pruned.
    pub fn all_ones(l: usize) -> Result<Self, GenomeError> {
        if l == 0 {
            return Err(GenomeError::EmptyGenome);
        }
        Ok(Self {
            bits: vec![true; l],
        })
    }

    pub fn from_bits(bits: Vec<bool>) -> Result<Self, GenomeError> {
        if bits.is_empty() {
            return Err(GenomeError::EmptyGenome);
        }
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length ≥ 1 by construction
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of retained (true) bits.
    pub fn retained(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Number of pruned (false) bits.
    pub fn zero_count(&self) -> usize {
        self.bits.len() - self.retained()
    }

    pub fn is_all_ones(&self) -> bool {
        self.bits.iter().all(|b| *b)
    }

    /// Indices of retained filters, ascending.
    pub fn kept_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
            .collect()
    }
}

impl fmt::Display for LayerGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for LayerGenome {
    type Err = GenomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(GenomeError::InvalidBitChar(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_bits(bits)
    }
}

impl Serialize for LayerGenome {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for LayerGenome {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Mutation rate and the per-mutation bound on the fraction of pruned bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationParams {
    pub rate: f64,
    pub ratio_bound: f64,
}

impl MutationParams {
    pub fn new(rate: f64, ratio_bound: f64) -> Result<Self, GenomeError> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(GenomeError::InvalidRate(rate));
        }
        if !(ratio_bound > 0.0 && ratio_bound <= 1.0) {
            return Err(GenomeError::InvalidRatioBound(ratio_bound));
        }
        Ok(Self { rate, ratio_bound })
    }
}

/// Bit-wise mutation with a ratio bound.
///
/// Scans bits in ascending index order; for each bit draws `q` uniform in
/// [0,1) and on `q < rate` flips a 0 to 1 unconditionally, or a 1 to 0
/// only if the zero-count of the vector built so far would stay within
/// `l * ratio_bound` after the flip. The bound is compared against the
/// exact real value, unrounded, so at most `⌊l·r⌋` zeros result. Zeros
/// inherited from the parent count against the bound.
pub fn mutate<R: Rng + ?Sized>(
    parent: &LayerGenome,
    params: MutationParams,
    rng: &mut R,
) -> LayerGenome {
    let l = parent.len();
    let cap = l as f64 * params.ratio_bound;
    let mut bits = parent.bits.clone();
    let mut zeros = parent.zero_count();
    for bit in bits.iter_mut() {
        let q: f64 = rng.gen();
        if q < params.rate {
            if !*bit {
                *bit = true;
                zeros -= 1;
            } else if (zeros + 1) as f64 <= cap {
                *bit = false;
                zeros += 1;
            }
        }
    }
    LayerGenome { bits }
}
