//! Bayesian preference learning under systematic exposure.
//!
//! Two inference engines learn a user's choice probabilities from the options
//! they picked out of what the system showed them:
//!
//! * [`dirichlet_luce`] conditions on every presentation and is sampled by
//!   gamma-augmented Gibbs;
//! * [`dirichlet_multinomial`] ignores presentations and is conjugate.
//!
//! [`policy`] turns a posterior into the next presentation (Thompson or
//! greedy), and [`sim`] replays promotion, censorship and unfair-comparison
//! scenarios against a Luce-rational simulated user.

pub mod choice;
pub mod cli;
pub mod config;
pub mod dirichlet_luce;
pub mod dirichlet_multinomial;
pub mod error;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod sim;

pub use choice::{
    canonical_presentation, luce_choice_probability, sample_user_choice, InteractionRecord,
    OptionId, PreferenceVector, Presentation,
};
pub use config::{PartialConfig, Scenario, ScenarioConfig};
pub use dirichlet_luce::{
    draw_posterior_sample, gibbs_sweep, posterior_mean_mc, DirichletLucePosterior, GibbsState,
    McBudget,
};
pub use dirichlet_multinomial::DirichletPosterior;
pub use error::{Error, Result};
pub use model::{Learner, LuceLearner, ModelKind, PreferenceModel};
pub use policy::{rank_top_l, select_presentation, PolicyKind, PresentationConstraint};
pub use sim::{
    compute_metrics, constraint_schedule, run_episode, run_experiment, EpisodeTrajectory,
    ExperimentSummary,
};
