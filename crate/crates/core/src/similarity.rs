//! Word-parallel similarity between realizations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::realization::{popcount, tail_mask, Realization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMeasure {
    /// Fraction of positions where both agree (infected or not).
    Xnor,
    /// Shared infected nodes over the union of infected nodes.
    Jaccard,
}

impl SimilarityMeasure {
    pub fn name(self) -> &'static str {
        match self {
            SimilarityMeasure::Xnor => "xnor",
            SimilarityMeasure::Jaccard => "jaccard",
        }
    }

    pub fn eval(self, a: &Realization, b: &Realization) -> Result<f64> {
        match self {
            SimilarityMeasure::Xnor => xnor_similarity(a, b),
            SimilarityMeasure::Jaccard => jaccard_similarity(a, b),
        }
    }
}

impl std::str::FromStr for SimilarityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xnor" => Ok(SimilarityMeasure::Xnor),
            "jaccard" => Ok(SimilarityMeasure::Jaccard),
            other => Err(Error::param(format!(
                "unknown similarity measure {other:?} (expected xnor or jaccard)"
            ))),
        }
    }
}

fn xnor_agreements(a: &[u64], b: &[u64], len: usize) -> usize {
    let last = a.len().saturating_sub(1);
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            let mut agree = !(x ^ y);
            if i == last {
                agree &= tail_mask(len);
            }
            popcount(agree) as usize
        })
        .sum()
}

fn jaccard_ratio(intersection: usize, union: usize) -> f64 {
    if union == 0 {
        1.0
    } else {
        intersection as f64 / union as f64
    }
}

pub fn xnor_similarity(a: &Realization, b: &Realization) -> Result<f64> {
    a.check_same_len(b)?;
    if a.is_empty() {
        return Ok(1.0);
    }
    Ok(xnor_agreements(a.words(), b.words(), a.len()) as f64 / a.len() as f64)
}

/// `|a AND b| / |a OR b|`, with two empty sets counted as identical.
pub fn jaccard_similarity(a: &Realization, b: &Realization) -> Result<f64> {
    a.check_same_len(b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in a.words().iter().zip(b.words()) {
        inter += popcount(x & y) as usize;
        union += popcount(x | y) as usize;
    }
    Ok(jaccard_ratio(inter, union))
}

/// Either measure restricted to the positions set in `observed`.
pub fn masked_similarity(
    measure: SimilarityMeasure,
    a: &Realization,
    b: &Realization,
    observed: &Realization,
) -> Result<f64> {
    a.check_same_len(b)?;
    a.check_same_len(observed)?;
    Comparator::new(measure, a, Some(observed))?.score(b)
}

/// Similarity against one fixed reference realization, with the reference's
/// mask and popcounts precomputed for repeated scoring.
#[derive(Debug, Clone)]
pub struct Comparator {
    measure: SimilarityMeasure,
    reference: Realization,
    mask: Option<Realization>,
    observed_count: usize,
}

impl Comparator {
    /// `mask` of `None` observes every node. An explicit mask needs at least
    /// one set bit.
    pub fn new(
        measure: SimilarityMeasure,
        reference: &Realization,
        mask: Option<&Realization>,
    ) -> Result<Self> {
        let observed_count = match mask {
            Some(m) => {
                reference.check_same_len(m)?;
                let c = m.count_ones();
                if c == 0 {
                    return Err(Error::param("observation mask selects no nodes"));
                }
                c
            }
            None => reference.len(),
        };
        Ok(Comparator {
            measure,
            reference: reference.clone(),
            mask: mask.cloned(),
            observed_count,
        })
    }

    pub fn measure(&self) -> SimilarityMeasure {
        self.measure
    }

    pub fn score(&self, other: &Realization) -> Result<f64> {
        self.reference.check_same_len(other)?;
        Ok(self.score_words(other.words()))
    }

    /// Caller guarantees `other` has the reference's length.
    pub(crate) fn score_words(&self, other: &[u64]) -> f64 {
        let r = self.reference.words();
        match (self.measure, &self.mask) {
            (SimilarityMeasure::Xnor, None) => {
                if self.observed_count == 0 {
                    return 1.0;
                }
                xnor_agreements(r, other, self.reference.len()) as f64 / self.observed_count as f64
            }
            (SimilarityMeasure::Xnor, Some(m)) => {
                let agree: usize = r
                    .iter()
                    .zip(other)
                    .zip(m.words())
                    .map(|((x, y), k)| popcount(!(x ^ y) & k) as usize)
                    .sum();
                agree as f64 / self.observed_count as f64
            }
            (SimilarityMeasure::Jaccard, mask) => {
                let (mut inter, mut union) = (0usize, 0usize);
                match mask {
                    None => {
                        for (x, y) in r.iter().zip(other) {
                            inter += popcount(x & y) as usize;
                            union += popcount(x | y) as usize;
                        }
                    }
                    Some(m) => {
                        for ((x, y), k) in r.iter().zip(other).zip(m.words()) {
                            inter += popcount(x & y & k) as usize;
                            union += popcount((x | y) & k) as usize;
                        }
                    }
                }
                jaccard_ratio(inter, union)
            }
        }
    }
}
