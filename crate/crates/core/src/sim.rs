//! Episodes, replicated experiments and their metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choice::{sample_user_choice, InteractionRecord, OptionId, PreferenceVector};
use crate::config::{late_window, Scenario, ScenarioConfig};
use crate::dirichlet_luce::{DirichletLucePosterior, McBudget};
use crate::dirichlet_multinomial::DirichletPosterior;
use crate::error::{Error, Result};
use crate::model::{Learner, LuceLearner, ModelKind, PreferenceModel};
use crate::policy::{select_presentation, PresentationConstraint};
use crate::rng::{episode_stream, StreamTag};

/// Constraint in force at interaction `t` (1-based).
pub fn constraint_schedule(config: &ScenarioConfig, t: usize) -> PresentationConstraint {
    let k = config.k;
    let all = || (0..k).map(OptionId);
    let restricted = |pool: &[usize]| {
        PresentationConstraint::new([], pool.iter().copied().map(OptionId), k)
            .expect("pool validated with the config")
    };
    match config.scenario {
        Scenario::Free => PresentationConstraint::unconstrained(k),
        Scenario::Promotion => PresentationConstraint::new([config.promoted()], all(), k)
            .expect("promoted option validated with the config"),
        Scenario::Censorship | Scenario::UnfairComparison if t <= config.init_phase_length => {
            restricted(&config.init_pool)
        }
        Scenario::Censorship | Scenario::UnfairComparison => {
            PresentationConstraint::unconstrained(k)
        }
    }
}

/// The log of one simulated user/system interaction sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrajectory {
    pub run_index: usize,
    pub records: Vec<InteractionRecord>,
    /// Estimate right after the constrained initial phase, for scenarios that have one.
    pub init_phase_estimate: Option<PreferenceVector>,
    pub final_estimate: PreferenceVector,
    pub presented_counts: Vec<u64>,
    pub chosen_counts: Vec<u64>,
}

impl EpisodeTrajectory {
    /// Builds a trajectory from records, deriving the per-option counts.
    pub fn from_records(
        run_index: usize,
        k: usize,
        records: Vec<InteractionRecord>,
        init_phase_estimate: Option<PreferenceVector>,
        final_estimate: PreferenceVector,
    ) -> Self {
        let mut presented_counts = vec![0; k];
        let mut chosen_counts = vec![0; k];
        for r in &records {
            for o in r.presented.iter() {
                presented_counts[o.0] += 1;
            }
            chosen_counts[r.chosen.0] += 1;
        }
        EpisodeTrajectory {
            run_index,
            records,
            init_phase_estimate,
            final_estimate,
            presented_counts,
            chosen_counts,
        }
    }
}

fn new_learner(config: &ScenarioConfig) -> Result<Learner> {
    Ok(match config.model {
        ModelKind::DirichletLuce => {
            let mut learner = LuceLearner::new(DirichletLucePosterior::new(config.alpha.clone())?);
            learner.thompson_sweeps = config.thompson_sweeps;
            learner.estimate_budget = McBudget {
                samples: config.estimate_samples,
                burn_in: config.estimate_burn_in,
                thin: config.thin,
            };
            Learner::Luce(learner)
        }
        ModelKind::DirichletMultinomial => {
            Learner::Multinomial(DirichletPosterior::new(config.alpha.clone())?)
        }
    })
}

/// Runs episode `run_index`. The result depends only on `config` and `run_index`.
pub fn run_episode(config: &ScenarioConfig, run_index: usize) -> Result<EpisodeTrajectory> {
    config.validate()?;
    let seed = config.master_seed;
    let run = run_index as u64;
    let mut policy_rng = episode_stream(seed, run, StreamTag::Policy);
    let mut user_rng = episode_stream(seed, run, StreamTag::User);
    let mut estimator_rng = episode_stream(seed, run, StreamTag::Estimator);

    let theta = config.theta();
    let mut learner = new_learner(config)?;
    let mut records = Vec::with_capacity(config.t);
    let mut init_phase_estimate = None;
    let fail = |t: usize, e: Error| Error::EpisodeFailed {
        run: run_index,
        t,
        source: Box::new(e),
    };

    for t in 1..=config.t {
        let constraint = constraint_schedule(config, t);
        let presented = select_presentation(
            &mut learner,
            config.policy,
            config.l,
            &constraint,
            &mut policy_rng,
        )
        .map_err(|e| fail(t, e))?;
        let chosen = sample_user_choice(&theta, &presented, &mut user_rng)?;
        learner.observe(&presented, chosen)?;
        records.push(InteractionRecord::new(t, presented, chosen)?);

        if config.scenario.has_initial_phase() && t == config.init_phase_length {
            init_phase_estimate = Some(
                learner
                    .final_estimate(&mut estimator_rng)
                    .map_err(|e| fail(t, e))?,
            );
        }
    }

    let final_estimate = learner
        .final_estimate(&mut estimator_rng)
        .map_err(|e| fail(config.t, e))?;
    Ok(EpisodeTrajectory::from_records(
        run_index,
        config.k,
        records,
        init_phase_estimate,
        final_estimate,
    ))
}

/// Per-episode diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub abs_error: Vec<f64>,
    /// Fraction of interactions in which each option was presented.
    pub presentation_frequency: Vec<f64>,
    /// Fraction of late-window presentations equal to the true top-L set.
    pub late_window_top_l_rate: f64,
}

/// Indices of the `l` largest entries of `theta`, sorted ascending.
pub fn true_top_l(theta: &PreferenceVector, l: usize) -> Vec<OptionId> {
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|a, b| theta[*b].total_cmp(&theta[*a]).then(a.cmp(b)));
    let mut top: Vec<OptionId> = order.into_iter().take(l).map(OptionId).collect();
    top.sort_unstable();
    top
}

pub fn compute_metrics(
    trajectory: &EpisodeTrajectory,
    theta_true: &PreferenceVector,
    l: usize,
) -> EpisodeMetrics {
    compute_metrics_with_window(
        trajectory,
        theta_true,
        l,
        late_window(trajectory.records.len()),
    )
}

/// As [`compute_metrics`] with an explicit late-window length.
pub fn compute_metrics_with_window(
    trajectory: &EpisodeTrajectory,
    theta_true: &PreferenceVector,
    l: usize,
    window: usize,
) -> EpisodeMetrics {
    let abs_error = trajectory
        .final_estimate
        .as_slice()
        .iter()
        .zip(theta_true.as_slice())
        .map(|(e, t)| (e - t).abs())
        .collect();
    let steps = trajectory.records.len();
    let presentation_frequency = trajectory
        .presented_counts
        .iter()
        .map(|c| {
            if steps == 0 {
                0.0
            } else {
                *c as f64 / steps as f64
            }
        })
        .collect();
    let top = true_top_l(theta_true, l);
    let window = window.min(steps);
    let late = &trajectory.records[steps - window..];
    let hits = late
        .iter()
        .filter(|r| r.presented.members() == top.as_slice())
        .count();
    let late_window_top_l_rate = if window == 0 {
        0.0
    } else {
        hits as f64 / window as f64
    };
    EpisodeMetrics {
        abs_error,
        presentation_frequency,
        late_window_top_l_rate,
    }
}

/// Mean and population standard deviation (divisor `n`) of each component.
pub fn mean_and_std(vectors: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let Some(first) = vectors.first() else {
        return (Vec::new(), Vec::new());
    };
    let n = vectors.len() as f64;
    let k = first.len();
    let mean: Vec<f64> = (0..k)
        .map(|i| vectors.iter().map(|v| v[i]).sum::<f64>() / n)
        .collect();
    let std = (0..k)
        .map(|i| {
            let var = vectors
                .iter()
                .map(|v| (v[i] - mean[i]).powi(2))
                .sum::<f64>()
                / n;
            var.sqrt()
        })
        .collect();
    (mean, std)
}

/// Cross-run aggregate of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub runs: usize,
    pub mean_estimate: Vec<f64>,
    /// Population standard deviation across runs.
    pub std_estimate: Vec<f64>,
    pub mean_abs_error: Vec<f64>,
    pub mean_presentation_frequency: Vec<f64>,
    /// Mean over runs of the per-run late-window top-L rate.
    pub late_window_top_l_rate: f64,
    pub late_window: usize,
    pub mean_init_phase_estimate: Option<Vec<f64>>,
    pub std_init_phase_estimate: Option<Vec<f64>>,
    pub final_estimates: Vec<PreferenceVector>,
    pub init_phase_estimates: Vec<Option<PreferenceVector>>,
    pub run_metrics: Vec<EpisodeMetrics>,
    /// Kept in memory only; written out separately as the trajectory file.
    #[serde(skip)]
    pub trajectories: Option<Vec<EpisodeTrajectory>>,
}

/// Reduces completed episodes (in run order) into a summary.
pub fn aggregate(
    trajectories: Vec<EpisodeTrajectory>,
    theta_true: &PreferenceVector,
    l: usize,
    keep_trajectories: bool,
) -> ExperimentSummary {
    let metrics: Vec<EpisodeMetrics> = trajectories
        .iter()
        .map(|t| compute_metrics(t, theta_true, l))
        .collect();
    let finals: Vec<&[f64]> = trajectories
        .iter()
        .map(|t| t.final_estimate.as_slice())
        .collect();
    let (mean_estimate, std_estimate) = mean_and_std(&finals);
    let errors: Vec<&[f64]> = metrics.iter().map(|m| m.abs_error.as_slice()).collect();
    let (mean_abs_error, _) = mean_and_std(&errors);
    let freqs: Vec<&[f64]> = metrics
        .iter()
        .map(|m| m.presentation_frequency.as_slice())
        .collect();
    let (mean_presentation_frequency, _) = mean_and_std(&freqs);
    let runs = trajectories.len();
    let late_window_top_l_rate = if runs == 0 {
        0.0
    } else {
        metrics
            .iter()
            .map(|m| m.late_window_top_l_rate)
            .sum::<f64>()
            / runs as f64
    };

    let init: Option<Vec<&[f64]>> = trajectories
        .iter()
        .map(|t| {
            t.init_phase_estimate
                .as_ref()
                .map(PreferenceVector::as_slice)
        })
        .collect();
    let (mean_init_phase_estimate, std_init_phase_estimate) = match init {
        Some(v) if !v.is_empty() => {
            let (m, s) = mean_and_std(&v);
            (Some(m), Some(s))
        }
        _ => (None, None),
    };

    ExperimentSummary {
        runs,
        mean_estimate,
        std_estimate,
        mean_abs_error,
        mean_presentation_frequency,
        late_window_top_l_rate,
        late_window: trajectories
            .first()
            .map_or(0, |t| late_window(t.records.len())),
        mean_init_phase_estimate,
        std_init_phase_estimate,
        final_estimates: trajectories
            .iter()
            .map(|t| t.final_estimate.clone())
            .collect(),
        init_phase_estimates: trajectories
            .iter()
            .map(|t| t.init_phase_estimate.clone())
            .collect(),
        run_metrics: metrics,
        trajectories: keep_trajectories.then_some(trajectories),
    }
}

/// Runs `config.runs` episodes on up to `workers` threads (`None`: all cores)
/// and aggregates them.
pub fn run_experiment(
    config: &ScenarioConfig,
    workers: Option<usize>,
    keep_trajectories: bool,
) -> Result<ExperimentSummary> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let trajectories = pool.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|run| run_episode(config, run))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(aggregate(
        trajectories,
        &config.theta(),
        config.l,
        keep_trajectories,
    ))
}
