use lucelab::config::PartialConfig;
use lucelab::sim::{compute_metrics, mean_and_std};
use lucelab::{run_episode, run_experiment, ModelKind, Scenario, ScenarioConfig};

fn config(scenario: Scenario, model: ModelKind) -> ScenarioConfig {
    PartialConfig {
        scenario: Some(scenario),
        model: Some(model),
        master_seed: Some(2024),
        ..Default::default()
    }
    .resolve()
    .unwrap()
}

#[test]
fn free_play_recovers_every_component() {
    let summary = run_experiment(
        &config(Scenario::Free, ModelKind::DirichletLuce),
        Some(4),
        false,
    )
    .unwrap();
    for (k, err) in summary.mean_abs_error.iter().enumerate() {
        assert!(*err <= 0.05, "option {k}: mean abs error {err}");
    }
    assert!(summary.std_estimate.iter().all(|s| *s >= 0.0));
    assert!((0.0..=1.0).contains(&summary.late_window_top_l_rate));
}

#[test]
fn aggregates_are_recomputable_from_runs() {
    let mut c = config(Scenario::Censorship, ModelKind::DirichletMultinomial);
    c.t = 1500;
    c.runs = 4;
    let summary = run_experiment(&c, Some(2), true).unwrap();
    let finals: Vec<&[f64]> = summary
        .final_estimates
        .iter()
        .map(|e| e.as_slice())
        .collect();
    let (mean, std) = mean_and_std(&finals);
    assert_eq!(mean, summary.mean_estimate);
    assert_eq!(std, summary.std_estimate);

    let trajectories = summary.trajectories.as_ref().unwrap();
    assert_eq!(trajectories.len(), 4);
    for (run, trajectory) in trajectories.iter().enumerate() {
        assert_eq!(trajectory.run_index, run);
        assert_eq!(trajectory, &run_episode(&c, run).unwrap());
        let metrics = compute_metrics(trajectory, &c.theta(), c.l);
        assert_eq!(metrics, summary.run_metrics[run]);
        for record in &trajectory.records[..c.init_phase_length] {
            assert!(record.presented.iter().all(|o| c.init_pool.contains(&o.0)));
        }
    }
}

#[test]
fn greedy_policy_runs_end_to_end() {
    for model in [ModelKind::DirichletLuce, ModelKind::DirichletMultinomial] {
        let mut c = config(Scenario::Promotion, model);
        c.policy = lucelab::PolicyKind::Greedy;
        c.t = 1000;
        c.runs = 2;
        let summary = run_experiment(&c, Some(2), false).unwrap();
        let total: f64 = summary.mean_estimate.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(summary.mean_presentation_frequency[2], 1.0);
    }
}
