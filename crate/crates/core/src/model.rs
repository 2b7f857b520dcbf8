//! A common interface over the two inference engines so that policies and the
//! harness can swap one for the other without further changes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::choice::{OptionId, PreferenceVector, Presentation};
use crate::dirichlet_luce::{
    draw_posterior_sample, posterior_mean_mc, DirichletLucePosterior, GibbsState, McBudget,
};
use crate::dirichlet_multinomial::DirichletPosterior;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[serde(alias = "dirichlet-luce")]
    DirichletLuce,
    #[serde(alias = "dirichlet-multinomial")]
    DirichletMultinomial,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::DirichletLuce => "dirichlet_luce",
            ModelKind::DirichletMultinomial => "dirichlet_multinomial",
        }
    }
}

/// What a presentation policy needs from a posterior.
pub trait PreferenceModel {
    fn k(&self) -> usize;

    fn observe(&mut self, presented: &Presentation, chosen: OptionId) -> Result<()>;

    /// A posterior draw of the option weights. The weights need not be
    /// normalized; only their order matters to the policies.
    fn sample_weights<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>>;

    /// Cheap point estimate used by the greedy policy at every interaction.
    fn point_estimate<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<PreferenceVector>;

    /// Reported estimate, computed with the full budget.
    fn final_estimate<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<PreferenceVector>;
}

/// Dirichlet-Luce posterior with a persistent Gibbs chain for Thompson draws.
#[derive(Debug, Clone)]
pub struct LuceLearner {
    posterior: DirichletLucePosterior,
    chain: Option<GibbsState>,
    /// Sweeps between consecutive Thompson draws on the warm chain.
    pub thompson_sweeps: usize,
    /// Warm-chain states averaged for a greedy point estimate.
    pub greedy_sweeps: usize,
    pub estimate_budget: McBudget,
}

impl LuceLearner {
    pub fn new(posterior: DirichletLucePosterior) -> Self {
        LuceLearner {
            posterior,
            chain: None,
            thompson_sweeps: 5,
            greedy_sweeps: 20,
            estimate_budget: McBudget::default(),
        }
    }

    pub fn posterior(&self) -> &DirichletLucePosterior {
        &self.posterior
    }

    fn advance<R: Rng + ?Sized>(&mut self, sweeps: usize, rng: &mut R) -> Result<&GibbsState> {
        let (_, state) = draw_posterior_sample(&self.posterior, self.chain.take(), sweeps, rng)?;
        Ok(self.chain.insert(state))
    }
}

impl PreferenceModel for LuceLearner {
    fn k(&self) -> usize {
        self.posterior.k()
    }

    fn observe(&mut self, presented: &Presentation, chosen: OptionId) -> Result<()> {
        self.posterior.observe(presented, chosen)
    }

    fn sample_weights<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        let sweeps = self.thompson_sweeps;
        Ok(self.advance(sweeps, rng)?.lambda().to_vec())
    }

    fn point_estimate<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<PreferenceVector> {
        let mut acc = vec![0.0; self.k()];
        for _ in 0..self.greedy_sweeps.max(1) {
            let theta = self.advance(1, rng)?.theta();
            for (a, t) in acc.iter_mut().zip(theta.as_slice()) {
                *a += t;
            }
        }
        PreferenceVector::from_unnormalized(&acc)
    }

    fn final_estimate<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<PreferenceVector> {
        if self.posterior.observations() == 0 {
            return Ok(self.posterior.prior_mean());
        }
        posterior_mean_mc(&self.posterior, self.estimate_budget, rng)
    }
}

impl PreferenceModel for DirichletPosterior {
    fn k(&self) -> usize {
        DirichletPosterior::k(self)
    }

    fn observe(&mut self, presented: &Presentation, chosen: OptionId) -> Result<()> {
        DirichletPosterior::observe(self, presented, chosen)
    }

    fn sample_weights<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        Ok(self.sample(rng).into_inner())
    }

    fn point_estimate<R: Rng + ?Sized>(&mut self, _rng: &mut R) -> Result<PreferenceVector> {
        Ok(self.posterior_mean())
    }

    fn final_estimate<R: Rng + ?Sized>(&mut self, _rng: &mut R) -> Result<PreferenceVector> {
        Ok(self.posterior_mean())
    }
}

/// Either engine, chosen at runtime.
#[derive(Debug, Clone)]
pub enum Learner {
    Luce(LuceLearner),
    Multinomial(DirichletPosterior),
}

impl Learner {
    pub fn kind(&self) -> ModelKind {
        match self {
            Learner::Luce(_) => ModelKind::DirichletLuce,
            Learner::Multinomial(_) => ModelKind::DirichletMultinomial,
        }
    }
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $body:expr) => {
        match $self {
            Learner::Luce($m) => $body,
            Learner::Multinomial($m) => $body,
        }
    };
}

impl PreferenceModel for Learner {
    fn k(&self) -> usize {
        dispatch!(self, m => PreferenceModel::k(m))
    }

    fn observe(&mut self, presented: &Presentation, chosen: OptionId) -> Result<()> {
        dispatch!(self, m => PreferenceModel::observe(m, presented, chosen))
    }

    fn sample_weights<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        dispatch!(self, m => m.sample_weights(rng))
    }

    fn point_estimate<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<PreferenceVector> {
        dispatch!(self, m => m.point_estimate(rng))
    }

    fn final_estimate<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<PreferenceVector> {
        dispatch!(self, m => m.final_estimate(rng))
    }
}
