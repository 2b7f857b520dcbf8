//! Presentation mechanisms: rank a posterior draw (Thompson) or the posterior
//! mean (greedy) and show the top `L` options allowed by the active constraint.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::choice::{OptionId, Presentation};
use crate::error::{Error, Result};
use crate::model::PreferenceModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Thompson,
    Greedy,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Thompson => "thompson",
            PolicyKind::Greedy => "greedy",
        }
    }
}

/// Options that must appear in a presentation (`forced`) and options that may
/// appear at all (`pool`). Both are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresentationConstraint {
    forced: Vec<OptionId>,
    pool: Vec<OptionId>,
}

impl PresentationConstraint {
    pub fn unconstrained(k: usize) -> Self {
        PresentationConstraint {
            forced: Vec::new(),
            pool: (0..k).map(OptionId).collect(),
        }
    }

    pub fn new<F, P>(forced: F, pool: P, k: usize) -> Result<Self>
    where
        F: IntoIterator<Item = OptionId>,
        P: IntoIterator<Item = OptionId>,
    {
        let mut forced: Vec<OptionId> = forced.into_iter().collect();
        let mut pool: Vec<OptionId> = pool.into_iter().collect();
        forced.sort_unstable();
        forced.dedup();
        pool.sort_unstable();
        pool.dedup();
        if let Some(bad) = forced.iter().chain(&pool).find(|o| o.0 >= k) {
            return Err(Error::UnknownOption { option: bad.0, k });
        }
        if let Some(outside) = forced.iter().find(|o| pool.binary_search(o).is_err()) {
            return Err(Error::InfeasibleConstraint(format!(
                "forced option {} is outside the pool",
                outside.0
            )));
        }
        Ok(PresentationConstraint { forced, pool })
    }

    pub fn forced(&self) -> &[OptionId] {
        &self.forced
    }

    pub fn pool(&self) -> &[OptionId] {
        &self.pool
    }

    pub fn is_unconstrained(&self, k: usize) -> bool {
        self.forced.is_empty() && self.pool.len() == k
    }

    /// Checks `|forced| <= l <= |pool|`.
    pub fn check_feasible(&self, l: usize) -> Result<()> {
        if l == 0 {
            return Err(Error::InfeasibleConstraint(
                "presentation size must be positive".into(),
            ));
        }
        if self.forced.len() > l {
            return Err(Error::InfeasibleConstraint(format!(
                "{} forced options do not fit in {l} slots",
                self.forced.len()
            )));
        }
        if self.pool.len() < l {
            return Err(Error::InfeasibleConstraint(format!(
                "pool of {} options cannot fill {l} slots",
                self.pool.len()
            )));
        }
        Ok(())
    }

    /// `forced ⊆ presentation ⊆ pool` and `|presentation| = l`.
    pub fn is_satisfied_by(&self, presentation: &Presentation, l: usize) -> bool {
        presentation.len() == l
            && self.forced.iter().all(|o| presentation.contains(*o))
            && presentation
                .iter()
                .all(|o| self.pool.binary_search(&o).is_ok())
    }

    fn candidates(&self) -> Vec<OptionId> {
        self.pool
            .iter()
            .copied()
            .filter(|o| self.forced.binary_search(o).is_err())
            .collect()
    }
}

/// `forced` plus the highest-scoring `l - |forced|` remaining pool members.
///
/// Ties are broken uniformly at random with `rng`; a fixed index order would
/// systematically favour low-numbered options.
pub fn rank_top_l<R: Rng + ?Sized>(
    scores: &[f64],
    l: usize,
    constraint: &PresentationConstraint,
    rng: &mut R,
) -> Result<Presentation> {
    constraint.check_feasible(l)?;
    let k = scores.len();
    let mut candidates = constraint.candidates();
    let open = l - constraint.forced.len();
    if open < candidates.len() {
        candidates.shuffle(rng);
        // Stable sort keeps the shuffled order among equal scores.
        candidates.sort_by(|a, b| scores[b.0].total_cmp(&scores[a.0]));
    }
    candidates.truncate(open);
    Presentation::new(constraint.forced.iter().copied().chain(candidates), k)
}

/// Picks the next presentation for `model` under `constraint`.
///
/// The model is consulted only when the constraint leaves a choice to make.
pub fn select_presentation<M: PreferenceModel, R: Rng + ?Sized>(
    model: &mut M,
    kind: PolicyKind,
    l: usize,
    constraint: &PresentationConstraint,
    rng: &mut R,
) -> Result<Presentation> {
    constraint.check_feasible(l)?;
    let k = model.k();
    if constraint.pool.len() == l {
        return Presentation::new(constraint.pool.iter().copied(), k);
    }
    if constraint.forced.len() == l {
        return Presentation::new(constraint.forced.iter().copied(), k);
    }
    let scores = match kind {
        PolicyKind::Thompson => model.sample_weights(rng)?,
        PolicyKind::Greedy => model.point_estimate(rng)?.into_inner(),
    };
    rank_top_l(&scores, l, constraint, rng)
}
