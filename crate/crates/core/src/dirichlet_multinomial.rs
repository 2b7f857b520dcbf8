//! Presentation-blind baseline: a conjugate Dirichlet posterior over raw choice counts.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::choice::{ensure_presented, OptionId, PreferenceVector, Presentation};
use crate::dirichlet_luce::{check_presentation, validate_alpha};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPosterior {
    alpha: Vec<f64>,
    choice_counts: Vec<u64>,
}

impl DirichletPosterior {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        validate_alpha(&alpha)?;
        let k = alpha.len();
        Ok(DirichletPosterior {
            alpha,
            choice_counts: vec![0; k],
        })
    }

    pub fn flat(k: usize) -> Result<Self> {
        Self::new(vec![1.0; k])
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn choice_counts(&self) -> &[u64] {
        &self.choice_counts
    }

    /// Counts `chosen`. The presentation is validated and then discarded.
    pub fn observe(&mut self, presented: &Presentation, chosen: OptionId) -> Result<()> {
        check_presentation(presented, self.k())?;
        ensure_presented(presented, chosen)?;
        self.choice_counts[chosen.0] += 1;
        Ok(())
    }

    /// `(alpha_k + c_k) / (sum(alpha) + sum(c))`.
    pub fn posterior_mean(&self) -> PreferenceVector {
        let shapes: Vec<f64> = self.shapes().collect();
        PreferenceVector::from_unnormalized(&shapes).expect("alpha validated at construction")
    }

    /// Exact `Dirichlet(alpha + c)` draw via normalized gamma variates.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PreferenceVector {
        let draws: Vec<f64> = self
            .shapes()
            .map(|shape| {
                Gamma::new(shape, 1.0)
                    .expect("shape is positive")
                    .sample(rng)
            })
            .collect();
        match PreferenceVector::from_unnormalized(&draws) {
            Ok(theta) => theta,
            // Every gamma draw underflowed (tiny shapes); fall back to the mean.
            Err(_) => self.posterior_mean(),
        }
    }

    fn shapes(&self) -> impl Iterator<Item = f64> + '_ {
        self.alpha
            .iter()
            .zip(&self.choice_counts)
            .map(|(a, c)| a + *c as f64)
    }
}
