//! Brute-force posterior summaries for small `K`, used to validate the Gibbs
//! sampler.
//!
//! The simplex is discretized into the compositions `n` of `m` into `K`
//! non-negative parts. Each composition stands for a cell centred at
//! `theta_i = (n_i + 1/2) / (m + K/2)`, which keeps every evaluation point in
//! the interior even when the density diverges at the boundary. Weights are
//! normalized in log space.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::choice::{OptionId, PreferenceVector};
use crate::dirichlet_luce::DirichletLucePosterior;
use crate::error::{Error, Result};

pub const MAX_ORACLE_K: usize = 4;
pub const MAX_GRID_POINTS: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    resolution: usize,
}

impl GridSpec {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 10 {
            return Err(Error::InvalidGrid(format!(
                "resolution {resolution} is below the minimum of 10"
            )));
        }
        Ok(GridSpec { resolution })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// `C(m + K - 1, K - 1)`.
    pub fn point_count(&self, k: usize) -> u128 {
        let m = self.resolution as u128;
        (1..k as u128).fold(1u128, |acc, i| acc * (m + i) / i)
    }

    fn check(&self, k: usize) -> Result<()> {
        if k > MAX_ORACLE_K {
            return Err(Error::OracleTooLarge { k });
        }
        let points = self.point_count(k);
        if points > MAX_GRID_POINTS {
            return Err(Error::InvalidGrid(format!(
                "{points} grid points exceed the limit of {MAX_GRID_POINTS}"
            )));
        }
        Ok(())
    }

    fn cell_width(&self, k: usize) -> f64 {
        1.0 / (self.resolution as f64 + k as f64 / 2.0)
    }
}

/// Calls `visit` with every cell centre of the grid.
fn for_each_cell(k: usize, grid: GridSpec, mut visit: impl FnMut(&[f64])) {
    fn recurse(
        parts: &mut Vec<usize>,
        remaining: usize,
        k: usize,
        width: f64,
        point: &mut Vec<f64>,
        visit: &mut dyn FnMut(&[f64]),
    ) {
        if parts.len() == k - 1 {
            parts.push(remaining);
            point.clear();
            point.extend(parts.iter().map(|&n| (n as f64 + 0.5) * width));
            visit(point);
            parts.pop();
            return;
        }
        for n in 0..=remaining {
            parts.push(n);
            recurse(parts, remaining - n, k, width, point, visit);
            parts.pop();
        }
    }
    let width = grid.cell_width(k);
    let mut parts = Vec::with_capacity(k);
    let mut point = Vec::with_capacity(k);
    recurse(
        &mut parts,
        grid.resolution,
        k,
        width,
        &mut point,
        &mut visit,
    );
}

/// Grid-weighted posterior: calls `visit(theta, weight)` with weights that sum to one.
fn for_each_weighted_cell(
    post: &DirichletLucePosterior,
    grid: GridSpec,
    mut visit: impl FnMut(&[f64], f64),
) -> Result<()> {
    let k = post.k();
    grid.check(k)?;
    let log_weight = |theta: &[f64]| -> Result<f64> {
        // Cell centres sum to one up to rounding; renormalize for the validator.
        let theta = PreferenceVector::from_unnormalized(theta)?;
        post.log_unnormalized_density(&theta)
    };

    let mut max_log = f64::NEG_INFINITY;
    let mut failure = None;
    for_each_cell(k, grid, |theta| match log_weight(theta) {
        Ok(lw) => max_log = max_log.max(lw),
        Err(e) => {
            failure.get_or_insert(e);
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if !max_log.is_finite() {
        return Err(Error::NumericUnderflow);
    }

    let mut total = 0.0;
    for_each_cell(k, grid, |theta| {
        total += (log_weight(theta).unwrap_or(f64::NEG_INFINITY) - max_log).exp();
    });
    if total.is_nan() || total <= 0.0 {
        return Err(Error::NumericUnderflow);
    }
    for_each_cell(k, grid, |theta| {
        let w = (log_weight(theta).unwrap_or(f64::NEG_INFINITY) - max_log).exp() / total;
        visit(theta, w);
    });
    Ok(())
}

/// Posterior mean of `theta` by quadrature over the grid.
pub fn grid_posterior_mean(
    post: &DirichletLucePosterior,
    grid: GridSpec,
) -> Result<PreferenceVector> {
    let mut acc = vec![0.0; post.k()];
    for_each_weighted_cell(post, grid, |theta, w| {
        for (a, t) in acc.iter_mut().zip(theta) {
            *a += w * t;
        }
    })?;
    PreferenceVector::from_unnormalized(&acc)
}

/// Histogram of the marginal posterior of `theta_option` over `bins` equal bins of `[0, 1]`.
///
/// Each cell spreads its mass uniformly over its own width along the
/// `option` axis, so a flat posterior yields an exactly flat histogram.
pub fn grid_marginal_histogram(
    post: &DirichletLucePosterior,
    option: OptionId,
    bins: usize,
    grid: GridSpec,
) -> Result<Vec<f64>> {
    let k = post.k();
    if option.0 >= k {
        return Err(Error::UnknownOption {
            option: option.0,
            k,
        });
    }
    if bins == 0 {
        return Err(Error::InvalidGrid(
            "histogram needs at least one bin".into(),
        ));
    }
    let half = grid.cell_width(k) / 2.0;
    let bin_width = 1.0 / bins as f64;
    let mut masses = vec![0.0; bins];
    for_each_weighted_cell(post, grid, |theta, w| {
        let lo = (theta[option.0] - half).max(0.0);
        let hi = (theta[option.0] + half).min(1.0);
        let first = ((lo / bin_width) as usize).min(bins - 1);
        let last = ((hi / bin_width) as usize).min(bins - 1);
        for (b, mass) in masses.iter_mut().enumerate().take(last + 1).skip(first) {
            let b_lo = b as f64 * bin_width;
            let overlap = hi.min(b_lo + bin_width) - lo.max(b_lo);
            if overlap > 0.0 {
                *mass += w * overlap / (hi - lo);
            }
        }
    })?;
    let total: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= total);
    Ok(masses)
}

/// Self-normalized importance sampling estimate of the posterior mean, with a
/// `Dirichlet(alpha + c)` proposal and weights `prod_C (sum_{j in C} theta_j)^(-n_C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceEstimate {
    pub mean: PreferenceVector,
    pub effective_sample_size: f64,
}

pub fn importance_sampling_mean<R: Rng + ?Sized>(
    post: &DirichletLucePosterior,
    draws: usize,
    rng: &mut R,
) -> Result<ImportanceEstimate> {
    if draws == 0 {
        return Err(Error::InvalidConfig("need at least one draw".into()));
    }
    let gammas = post
        .alpha()
        .iter()
        .zip(post.choice_counts())
        .map(|(a, c)| Gamma::new(a + *c as f64, 1.0).expect("positive shape"))
        .collect::<Vec<_>>();
    let mut samples = Vec::with_capacity(draws);
    let mut log_weights = Vec::with_capacity(draws);
    for _ in 0..draws {
        let raw: Vec<f64> = gammas.iter().map(|g| g.sample(rng)).collect();
        let total: f64 = raw.iter().sum();
        let theta: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let lw: f64 = post
            .exposure_counts()
            .iter()
            .map(|(c, n)| -(*n as f64) * c.mass(&theta).ln())
            .sum();
        samples.push(theta);
        log_weights.push(lw);
    }
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NumericUnderflow);
    }
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    let mut acc = vec![0.0; post.k()];
    for (theta, w) in samples.iter().zip(&weights) {
        for (a, t) in acc.iter_mut().zip(theta) {
            *a += w * t / sum;
        }
    }
    Ok(ImportanceEstimate {
        mean: PreferenceVector::from_unnormalized(&acc)?,
        effective_sample_size: sum * sum / sum_sq,
    })
}
