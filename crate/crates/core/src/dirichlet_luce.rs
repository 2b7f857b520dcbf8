//! Presentation-conditioned Bayesian inference over choice probabilities.
//!
//! The posterior density on the simplex is
//!
//! ```text
//! p(theta | data) ∝ prod_k theta_k^(alpha_k + c_k - 1) * prod_C (sum_{j in C} theta_j)^(-n_C)
//! ```
//!
//! where `c_k` counts how often option `k` was chosen and `n_C` how often the
//! presentation `C` was shown. Neither moments nor the normalizer are available
//! in closed form, so summaries come from a Gibbs sampler over unnormalized
//! weights `lambda` with one auxiliary gamma variable `z_C` per distinct
//! presentation:
//!
//! ```text
//! z_C      ~ Gamma(n_C,             rate = sum_{j in C} lambda_j)
//! lambda_k ~ Gamma(alpha_k + c_k,   rate = 1 + sum_{C containing k} z_C)
//! ```
//!
//! Integrating `z_C` out recovers the `(sum_{j in C} theta_j)^(-n_C)` factor, so
//! `theta = lambda / sum(lambda)` has the posterior above as its stationary law.
//! Under that joint, the total `sum(lambda)` is `Gamma(sum(alpha), 1)` and
//! independent of `theta`; each sweep therefore starts by redrawing the total
//! from that law. Without it the total performs a random walk with step size
//! of order `1/sqrt(n)` and the chain needs `O(n)` sweeps to forget its start.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::choice::{ensure_presented, OptionId, PreferenceVector, Presentation};
use crate::error::{Error, Result};

const LAMBDA_MIN: f64 = 1e-300;
const LAMBDA_MAX: f64 = 1e300;
/// A chain is declared divergent once more than this fraction of its sweeps needed clamping.
const MAX_CLAMPED_FRACTION: f64 = 1e-3;

/// Prior pseudo-counts plus the sufficient statistics of a presentation/choice log.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletLucePosterior {
    alpha: Vec<f64>,
    choice_counts: Vec<u64>,
    exposure_counts: BTreeMap<Presentation, u64>,
}

impl DirichletLucePosterior {
    /// Fresh posterior with prior `Dirichlet(alpha)`. Requires `K >= 2` and every `alpha_k > 0`.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        validate_alpha(&alpha)?;
        let k = alpha.len();
        Ok(DirichletLucePosterior {
            alpha,
            choice_counts: vec![0; k],
            exposure_counts: BTreeMap::new(),
        })
    }

    /// Flat prior, `alpha_k = 1`.
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

    pub fn exposure_counts(&self) -> &BTreeMap<Presentation, u64> {
        &self.exposure_counts
    }

    /// Number of recorded interactions.
    pub fn observations(&self) -> u64 {
        self.choice_counts.iter().sum()
    }

    pub fn prior_mean(&self) -> PreferenceVector {
        PreferenceVector::from_unnormalized(&self.alpha).expect("alpha validated at construction")
    }

    /// Records that `chosen` was picked out of `presented`.
    pub fn observe(&mut self, presented: &Presentation, chosen: OptionId) -> Result<()> {
        check_presentation(presented, self.k())?;
        ensure_presented(presented, chosen)?;
        self.choice_counts[chosen.0] += 1;
        match self.exposure_counts.get_mut(presented) {
            Some(n) => *n += 1,
            None => {
                self.exposure_counts.insert(presented.clone(), 1);
            }
        }
        Ok(())
    }

    /// `sum_k (alpha_k + c_k - 1) log theta_k - sum_C n_C log(sum_{j in C} theta_j)`.
    ///
    /// Returns `-inf` where the density vanishes on the boundary and
    /// [`Error::BoundaryDensity`] where it diverges.
    pub fn log_unnormalized_density(&self, theta: &PreferenceVector) -> Result<f64> {
        if theta.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                got: theta.len(),
            });
        }
        let mut log_density = 0.0;
        let mut vanishes = false;
        for (k, (&a, &c)) in self.alpha.iter().zip(&self.choice_counts).enumerate() {
            let exponent = a + c as f64 - 1.0;
            let t = theta[k];
            if t > 0.0 {
                log_density += exponent * t.ln();
            } else if exponent < 0.0 {
                return Err(Error::BoundaryDensity { option: k });
            } else if exponent > 0.0 {
                vanishes = true;
            }
        }
        for (presentation, &n) in &self.exposure_counts {
            let mass = presentation.mass(theta.as_slice());
            if mass <= 0.0 {
                let option = presentation.members()[0].0;
                return Err(Error::BoundaryDensity { option });
            }
            log_density -= n as f64 * mass.ln();
        }
        Ok(if vanishes {
            f64::NEG_INFINITY
        } else {
            log_density
        })
    }

    fn shapes(&self) -> impl Iterator<Item = f64> + '_ {
        self.alpha
            .iter()
            .zip(&self.choice_counts)
            .map(|(a, c)| a + *c as f64)
    }
}

pub(crate) fn validate_alpha(alpha: &[f64]) -> Result<()> {
    if alpha.len() < 2 {
        return Err(Error::InvalidPrior(format!(
            "need at least 2 options, got {}",
            alpha.len()
        )));
    }
    if let Some((k, a)) = alpha
        .iter()
        .enumerate()
        .find(|(_, a)| !a.is_finite() || **a <= 0.0)
    {
        return Err(Error::InvalidPrior(format!(
            "alpha[{k}] = {a}, pseudo-counts must be positive"
        )));
    }
    Ok(())
}

pub(crate) fn check_presentation(presented: &Presentation, k: usize) -> Result<()> {
    match presented.members().last() {
        Some(last) if last.0 >= k => Err(Error::UnknownOption { option: last.0, k }),
        _ => Ok(()),
    }
}

/// State of the augmented Gibbs chain.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    lambda: Vec<f64>,
    z: BTreeMap<Presentation, f64>,
    sweeps: u64,
    clamped_sweeps: u64,
}

impl GibbsState {
    /// Starts a chain at `lambda_k ~ Gamma(alpha_k + c_k, 1)`, with no auxiliaries yet.
    pub fn initialize<R: Rng + ?Sized>(post: &DirichletLucePosterior, rng: &mut R) -> Result<Self> {
        let lambda = post
            .shapes()
            .map(|shape| draw_gamma(shape, 1.0, rng))
            .collect::<Option<Vec<_>>>()
            .ok_or(Error::SamplerDivergence {
                sweeps: 0,
                clamped: 0,
            })?;
        let mut state = GibbsState {
            lambda,
            z: BTreeMap::new(),
            sweeps: 0,
            clamped_sweeps: 0,
        };
        if state.clamp() {
            state.clamped_sweeps += 1;
        }
        Ok(state)
    }

    /// Builds a state from explicit unnormalized weights.
    pub fn from_lambda(lambda: Vec<f64>) -> Result<Self> {
        if lambda.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(Error::InvalidConfig(
                "chain weights must be positive and finite".into(),
            ));
        }
        Ok(GibbsState {
            lambda,
            z: BTreeMap::new(),
            sweeps: 0,
            clamped_sweeps: 0,
        })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn auxiliaries(&self) -> &BTreeMap<Presentation, f64> {
        &self.z
    }

    /// Sweeps run on this chain so far.
    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    /// Current normalized weights.
    pub fn theta(&self) -> PreferenceVector {
        PreferenceVector::from_unnormalized(&self.lambda).expect("chain weights are positive")
    }

    fn clamp(&mut self) -> bool {
        let mut clamped = false;
        for l in &mut self.lambda {
            if *l < LAMBDA_MIN {
                *l = LAMBDA_MIN;
                clamped = true;
            } else if *l > LAMBDA_MAX {
                *l = LAMBDA_MAX;
                clamped = true;
            }
        }
        clamped
    }

    fn divergence(&self) -> Error {
        Error::SamplerDivergence {
            sweeps: self.sweeps,
            clamped: self.clamped_sweeps,
        }
    }

    fn record_sweep(&mut self, clamped: bool) -> Result<()> {
        self.sweeps += 1;
        if clamped {
            self.clamped_sweeps += 1;
        }
        if self.clamped_sweeps as f64 > MAX_CLAMPED_FRACTION * self.sweeps as f64 {
            return Err(self.divergence());
        }
        Ok(())
    }
}

fn draw_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Option<f64> {
    if !(rate.is_finite() && rate > 0.0) {
        return None;
    }
    let x = Gamma::new(shape, 1.0 / rate).ok()?.sample(rng);
    x.is_finite().then_some(x)
}

/// One systematic-scan sweep: total-mass refresh, then every `z_C`, then every `lambda_k`.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut GibbsState,
    post: &DirichletLucePosterior,
    rng: &mut R,
) -> Result<()> {
    let k = post.k();
    if state.lambda.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: state.lambda.len(),
        });
    }

    let total: f64 = state.lambda.iter().sum();
    let alpha_total: f64 = post.alpha.iter().sum();
    let new_total = draw_gamma(alpha_total, 1.0, rng).ok_or_else(|| state.divergence())?;
    let scale = new_total / total;
    if !scale.is_finite() {
        return Err(state.divergence());
    }
    state.lambda.iter_mut().for_each(|l| *l *= scale);

    let mut rates = vec![1.0; k];
    for (presentation, &n) in &post.exposure_counts {
        let mass = presentation.mass(&state.lambda);
        let z = draw_gamma(n as f64, mass, rng).ok_or_else(|| state.divergence())?;
        match state.z.get_mut(presentation) {
            Some(slot) => *slot = z,
            None => {
                state.z.insert(presentation.clone(), z);
            }
        }
        for o in presentation.iter() {
            rates[o.0] += z;
        }
    }

    for (slot, (shape, rate)) in state.lambda.iter_mut().zip(post.shapes().zip(rates)) {
        *slot = draw_gamma(shape, rate, rng).unwrap_or(f64::NAN);
    }
    if state.lambda.iter().any(|l| l.is_nan()) {
        return Err(state.divergence());
    }
    let clamped = state.clamp();
    state.record_sweep(clamped)
}

/// Runs `sweeps` sweeps from `warm_state` (or a fresh chain) and returns the
/// final normalized weights along with the chain for reuse.
pub fn draw_posterior_sample<R: Rng + ?Sized>(
    post: &DirichletLucePosterior,
    warm_state: Option<GibbsState>,
    sweeps: usize,
    rng: &mut R,
) -> Result<(PreferenceVector, GibbsState)> {
    if sweeps == 0 {
        return Err(Error::InvalidConfig("sweeps must be at least 1".into()));
    }
    let mut state = match warm_state {
        Some(state) => state,
        None => GibbsState::initialize(post, rng)?,
    };
    for _ in 0..sweeps {
        gibbs_sweep(&mut state, post, rng)?;
    }
    Ok((state.theta(), state))
}

/// Monte Carlo budget for a posterior summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McBudget {
    pub samples: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for McBudget {
    fn default() -> Self {
        McBudget {
            samples: 4000,
            burn_in: 1000,
            thin: 1,
        }
    }
}

/// Posterior mean of `theta` from a fresh chain: `burn_in` discarded sweeps,
/// then `samples` states taken every `thin` sweeps.
pub fn posterior_mean_mc<R: Rng + ?Sized>(
    post: &DirichletLucePosterior,
    budget: McBudget,
    rng: &mut R,
) -> Result<PreferenceVector> {
    if budget.samples == 0 || budget.thin == 0 {
        return Err(Error::InvalidConfig(
            "samples and thin must be at least 1".into(),
        ));
    }
    let mut state = GibbsState::initialize(post, rng)?;
    for _ in 0..budget.burn_in {
        gibbs_sweep(&mut state, post, rng)?;
    }
    let mut acc = vec![0.0; post.k()];
    for _ in 0..budget.samples {
        for _ in 0..budget.thin {
            gibbs_sweep(&mut state, post, rng)?;
        }
        let total: f64 = state.lambda.iter().sum();
        for (a, l) in acc.iter_mut().zip(&state.lambda) {
            *a += l / total;
        }
    }
    PreferenceVector::from_unnormalized(&acc)
}
