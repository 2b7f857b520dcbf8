//! Options, presentations and the Luce choice rule used to generate
//! synthetic user feedback.
//!
//! Option identifiers are 0-based. Human-facing output adds one so that
//! "option 3" in a report refers to index 2.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of a [`PreferenceVector`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Index of an option in `[0, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OptionId(pub usize);

impl OptionId {
    pub fn index(self) -> usize {
        self.0
    }

    /// 1-based number used in reports.
    pub fn display_number(self) -> usize {
        self.0 + 1
    }
}

impl From<usize> for OptionId {
    fn from(index: usize) -> Self {
        OptionId(index)
    }
}

/// A point on the probability simplex: choice probabilities over the full option set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PreferenceVector(Vec<f64>);

impl PreferenceVector {
    /// Validates that `weights` is non-negative, finite and sums to one.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPreference("empty weight vector".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidPreference(format!(
                "weight {i} is {w}, expected a finite non-negative value"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidPreference(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(PreferenceVector(weights))
    }

    /// Normalizes non-negative weights with a positive finite sum.
    pub fn from_unnormalized(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidPreference(format!(
                "cannot normalize weights with total {total}"
            )));
        }
        Ok(PreferenceVector(
            weights.iter().map(|w| w / total).collect(),
        ))
    }

    pub fn uniform(k: usize) -> Self {
        PreferenceVector(vec![1.0 / k as f64; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, option: OptionId) -> f64 {
        self.0[option.0]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for PreferenceVector {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        PreferenceVector::new(weights)
    }
}

impl From<PreferenceVector> for Vec<f64> {
    fn from(p: PreferenceVector) -> Self {
        p.0
    }
}

impl std::ops::Index<usize> for PreferenceVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A non-empty, sorted, duplicate-free set of options shown together.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Presentation(Vec<OptionId>);

impl Presentation {
    /// Canonical form of an arbitrary collection of options; see [`canonical_presentation`].
    pub fn new<I>(options: I, k: usize) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<OptionId>,
    {
        let mut members: Vec<OptionId> = options.into_iter().map(Into::into).collect();
        if members.is_empty() {
            return Err(Error::EmptyPresentation);
        }
        if let Some(bad) = members.iter().find(|o| o.0 >= k) {
            return Err(Error::UnknownOption { option: bad.0, k });
        }
        members.sort_unstable();
        members.dedup();
        Ok(Presentation(members))
    }

    /// The presentation containing every option.
    pub fn full(k: usize) -> Self {
        Presentation((0..k).map(OptionId).collect())
    }

    pub fn members(&self) -> &[OptionId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, option: OptionId) -> bool {
        self.0.binary_search(&option).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = OptionId> + '_ {
        self.0.iter().copied()
    }

    /// Total mass of the presented options under `weights`.
    pub fn mass(&self, weights: &[f64]) -> f64 {
        self.0.iter().map(|o| weights[o.0]).sum()
    }

    /// Parses the `i|j|...` form produced by `Display`.
    pub fn parse(s: &str, k: usize) -> Result<Self> {
        let ids = s
            .split('|')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidConfig(format!("bad presentation entry {part:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Presentation::new(ids, k)
    }

    fn ensure_within(&self, k: usize) -> Result<()> {
        match self.0.last() {
            Some(last) if last.0 >= k => Err(Error::UnknownOption { option: last.0, k }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, o) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{}", o.0)?;
        }
        Ok(())
    }
}

/// One step of an interaction log: what was shown at time `t` and what was picked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub t: usize,
    pub presented: Presentation,
    pub chosen: OptionId,
}

impl InteractionRecord {
    pub fn new(t: usize, presented: Presentation, chosen: OptionId) -> Result<Self> {
        ensure_presented(&presented, chosen)?;
        Ok(InteractionRecord {
            t,
            presented,
            chosen,
        })
    }
}

pub(crate) fn ensure_presented(presentation: &Presentation, option: OptionId) -> Result<()> {
    if presentation.contains(option) {
        Ok(())
    } else {
        Err(Error::OptionNotPresented {
            option: option.0,
            presentation: presentation.to_string(),
        })
    }
}

/// Sorts and deduplicates `options` into a [`Presentation`].
pub fn canonical_presentation<I>(options: I, k: usize) -> Result<Presentation>
where
    I: IntoIterator,
    I::Item: Into<OptionId>,
{
    Presentation::new(options, k)
}

/// Probability that a Luce-rational user with preferences `theta` picks `option`
/// when shown `presentation`: `theta[option] / sum(theta[j] for j in presentation)`.
pub fn luce_choice_probability(
    theta: &PreferenceVector,
    presentation: &Presentation,
    option: OptionId,
) -> Result<f64> {
    presentation.ensure_within(theta.len())?;
    ensure_presented(presentation, option)?;
    let mass = presentation.mass(theta.as_slice());
    if mass <= 0.0 {
        return Err(Error::DegeneratePresentation);
    }
    Ok(theta.get(option) / mass)
}

/// Draws the option a simulated user picks from `presentation`.
pub fn sample_user_choice<R: Rng + ?Sized>(
    theta: &PreferenceVector,
    presentation: &Presentation,
    rng: &mut R,
) -> Result<OptionId> {
    presentation.ensure_within(theta.len())?;
    let mass = presentation.mass(theta.as_slice());
    if mass <= 0.0 {
        return Err(Error::DegeneratePresentation);
    }
    // Exactly one draw per call, so the user stream stays aligned across
    // episodes that differ only in what was presented.
    let target = rng.random::<f64>() * mass;
    if presentation.len() == 1 {
        return Ok(presentation.0[0]);
    }
    let mut acc = 0.0;
    let mut last_positive = presentation.0[0];
    for option in presentation.iter() {
        let w = theta.get(option);
        if w > 0.0 {
            last_positive = option;
        }
        acc += w;
        if target < acc {
            return Ok(option);
        }
    }
    // Rounding can leave `target` marginally above the accumulated mass.
    Ok(last_positive)
}
