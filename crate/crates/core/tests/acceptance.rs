//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lucelab::config::PartialConfig;
use lucelab::oracle::{grid_posterior_mean, GridSpec};
use lucelab::{
    draw_posterior_sample, luce_choice_probability, posterior_mean_mc, run_episode, run_experiment,
    sample_user_choice, select_presentation, DirichletLucePosterior, DirichletPosterior,
    ExperimentSummary, Learner, LuceLearner, McBudget, ModelKind, OptionId, PolicyKind,
    PreferenceVector, Presentation, PresentationConstraint, Scenario,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORKERS: usize = 4;

type Criterion = (&'static str, Duration, fn() -> Check);

struct Check {
    ok: bool,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            ok: true,
            notes: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, note: String) {
        if !ok {
            self.notes.push(format!("FAILED {note}"));
        } else {
            self.notes.push(note);
        }
        self.ok &= ok;
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("({})", parts.join(", "))
}

fn presentation(ids: &[usize], k: usize) -> Presentation {
    Presentation::new(ids.iter().map(|&i| OptionId(i)), k).unwrap()
}

fn experiment(scenario: Scenario, model: ModelKind) -> ExperimentSummary {
    let config = PartialConfig {
        scenario: Some(scenario),
        model: Some(model),
        ..Default::default()
    }
    .resolve()
    .unwrap();
    run_experiment(&config, Some(WORKERS), false).unwrap()
}

fn oracle_equivalence() -> Check {
    let mut check = Check::new();
    let budget = McBudget {
        samples: 4000,
        burn_in: 1000,
        thin: 1,
    };
    let grid = GridSpec::new(400).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20_001);

    let mut single = DirichletLucePosterior::flat(3).unwrap();
    single
        .observe(&presentation(&[0, 1], 3), OptionId(0))
        .unwrap();
    let exact = [4.0 / 9.0, 2.0 / 9.0, 1.0 / 3.0];
    let on_grid = grid_posterior_mean(&single, grid).unwrap();
    let gibbs = posterior_mean_mc(&single, budget, &mut rng).unwrap();
    let d = max_abs_diff(on_grid.as_slice(), &exact);
    check.require(
        d <= 0.005,
        format!("single obs grid vs exact {d:.5} <= 0.005"),
    );
    let d = max_abs_diff(gibbs.as_slice(), on_grid.as_slice());
    check.require(
        d <= 0.02,
        format!("single obs gibbs vs grid {d:.4} <= 0.02"),
    );
    let d = max_abs_diff(gibbs.as_slice(), &exact);
    check.require(
        d <= 0.02,
        format!("single obs gibbs vs exact {d:.4} <= 0.02"),
    );

    let theta = PreferenceVector::new(vec![0.5, 0.3, 0.2]).unwrap();
    let shapes: [&[usize]; 4] = [&[0, 1], &[0, 2], &[1, 2], &[0, 1, 2]];
    for dataset in 0..3 {
        let mut post = DirichletLucePosterior::flat(3).unwrap();
        for _ in 0..10 {
            let shown = presentation(shapes.choose(&mut rng).unwrap(), 3);
            let chosen = sample_user_choice(&theta, &shown, &mut rng).unwrap();
            post.observe(&shown, chosen).unwrap();
        }
        let on_grid = grid_posterior_mean(&post, grid).unwrap();
        let gibbs = posterior_mean_mc(&post, budget, &mut rng).unwrap();
        let d = max_abs_diff(gibbs.as_slice(), on_grid.as_slice());
        check.require(
            d <= 0.02,
            format!("10-obs dataset {dataset} gibbs vs grid {d:.4} <= 0.02"),
        );
    }
    check
}

fn reduction_identity() -> Check {
    let mut check = Check::new();
    let k = 5;
    let theta = PreferenceVector::new(vec![0.40, 0.25, 0.16, 0.11, 0.08]).unwrap();
    let full = Presentation::full(k);
    let mut rng = ChaCha8Rng::seed_from_u64(20_002);
    let mut luce = DirichletLucePosterior::flat(k).unwrap();
    let mut multinomial = DirichletPosterior::flat(k).unwrap();
    for _ in 0..200 {
        let chosen = sample_user_choice(&theta, &full, &mut rng).unwrap();
        luce.observe(&full, chosen).unwrap();
        multinomial.observe(&full, chosen).unwrap();
    }
    let dl = posterior_mean_mc(&luce, McBudget::default(), &mut rng).unwrap();
    let dm = multinomial.posterior_mean();
    let d = max_abs_diff(dl.as_slice(), dm.as_slice());
    check.require(
        d <= 0.01,
        format!(
            "DL {} vs DM {} max diff {d:.4} <= 0.01",
            fmt(dl.as_slice()),
            fmt(dm.as_slice())
        ),
    );
    check
}

fn unexplored_independence() -> Check {
    let mut check = Check::new();
    let k = 5;
    let alpha = vec![1.0, 2.0, 1.0, 1.5, 2.5];
    let unseen = 4;
    let t = 300;
    let theta = PreferenceVector::new(vec![0.40, 0.25, 0.16, 0.11, 0.08]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20_003);
    let mut luce = DirichletLucePosterior::new(alpha.clone()).unwrap();
    let mut multinomial = DirichletPosterior::new(alpha.clone()).unwrap();
    let mut seen: Vec<usize> = (0..k).filter(|&i| i != unseen).collect();
    for _ in 0..t {
        seen.shuffle(&mut rng);
        let shown = presentation(&seen[..2], k);
        let chosen = sample_user_choice(&theta, &shown, &mut rng).unwrap();
        luce.observe(&shown, chosen).unwrap();
        multinomial.observe(&shown, chosen).unwrap();
    }
    let total: f64 = alpha.iter().sum();
    let prior = alpha[unseen] / total;
    let dl = posterior_mean_mc(&luce, McBudget::default(), &mut rng).unwrap();
    let d = (dl[unseen] - prior).abs();
    check.require(
        d <= 0.01,
        format!(
            "DL mean_4 {:.4} vs prior {prior:.4}, diff {d:.4} <= 0.01",
            dl[unseen]
        ),
    );
    let dm = multinomial.posterior_mean()[unseen];
    let expected = alpha[unseen] / (total + t as f64);
    check.require(
        (dm - expected).abs() <= 1e-12 && dm < prior,
        format!("DM mean_4 {dm:.6} = alpha/(sum alpha + T) = {expected:.6} < prior"),
    );
    check
}

fn promotion() -> Check {
    let mut check = Check::new();
    let dl = experiment(Scenario::Promotion, ModelKind::DirichletLuce);
    let dm = experiment(Scenario::Promotion, ModelKind::DirichletMultinomial);
    let d = (dl.mean_estimate[2] - 0.16).abs();
    check.require(
        d <= 0.05,
        format!(
            "DL theta_2 {:.4}, |err| {d:.4} <= 0.05",
            dl.mean_estimate[2]
        ),
    );
    let bias = dm.mean_estimate[2] - 0.16;
    check.require(
        bias >= 0.05,
        format!(
            "DM theta_2 {:.4}, bias {bias:.4} >= 0.05",
            dm.mean_estimate[2]
        ),
    );
    check
}

fn censorship() -> Check {
    let mut check = Check::new();
    let dl = experiment(Scenario::Censorship, ModelKind::DirichletLuce);
    let dm = experiment(Scenario::Censorship, ModelKind::DirichletMultinomial);
    check.require(
        dl.late_window_top_l_rate >= 0.8,
        format!("DL late top-2 rate {:.4} >= 0.8", dl.late_window_top_l_rate),
    );
    let m = &dl.mean_estimate;
    let ordered = m[0].min(m[1]) > m[3].max(m[4]);
    check.require(ordered, format!("DL ranks 0,1 above 3,4 in {}", fmt(m)));
    let excess = dm.mean_estimate[3] + dm.mean_estimate[4] - (0.11 + 0.08);
    check.require(
        excess >= 0.1,
        format!("DM theta_3+theta_4 excess {excess:.4} >= 0.1"),
    );
    check
}

fn unfair_comparison() -> Check {
    let mut check = Check::new();
    let dl = experiment(Scenario::UnfairComparison, ModelKind::DirichletLuce);
    let mut early_low = 0;
    let mut recovered = 0;
    let mut both = 0;
    for (init, fin) in dl.init_phase_estimates.iter().zip(&dl.final_estimates) {
        let init = init
            .as_ref()
            .expect("unfair scenario records the initial phase");
        let a = init[1] < 0.25;
        let b = fin[1] > fin[2];
        early_low += a as usize;
        recovered += b as usize;
        both += (a && b) as usize;
    }
    let runs = dl.runs;
    check.require(
        runs == 10 && both >= 9,
        format!(
            "initial theta_1 < 0.25 in {early_low}/{runs}, final theta_1 > theta_2 in {recovered}/{runs}, both in {both}/{runs} (need 9)"
        ),
    );
    check
}

fn random_constraint<R: Rng>(k: usize, l: usize, rng: &mut R) -> PresentationConstraint {
    let mut ids: Vec<usize> = (0..k).collect();
    ids.shuffle(rng);
    let pool_size = rng.random_range(l..=k);
    let forced_size = rng.random_range(0..=l);
    let pool = ids[..pool_size].to_vec();
    let forced = pool[..forced_size].to_vec();
    PresentationConstraint::new(
        forced.into_iter().map(OptionId),
        pool.into_iter().map(OptionId),
        k,
    )
    .unwrap()
}

fn invariants() -> Check {
    let mut check = Check::new();
    let cases = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(20_007);

    let mut iia_worst: f64 = 0.0;
    let mut norm_worst: f64 = 0.0;
    for _ in 0..cases {
        let k = rng.random_range(2..=8);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let theta = PreferenceVector::from_unnormalized(&raw).unwrap();
        let mut ids: Vec<usize> = (0..k).collect();
        ids.shuffle(&mut rng);
        let size = rng.random_range(2..=k);
        let shown = presentation(&ids[..size], k);
        let total: f64 = shown
            .iter()
            .map(|o| luce_choice_probability(&theta, &shown, o).unwrap())
            .sum();
        norm_worst = norm_worst.max((total - 1.0).abs());
        let (i, j) = (OptionId(ids[0]), OptionId(ids[1]));
        let ratio = luce_choice_probability(&theta, &shown, i).unwrap()
            / luce_choice_probability(&theta, &shown, j).unwrap();
        iia_worst = iia_worst.max((ratio / (theta.get(i) / theta.get(j)) - 1.0).abs());
    }
    check.require(
        iia_worst <= 1e-12,
        format!("IIA worst rel err {iia_worst:.1e}"),
    );
    check.require(
        norm_worst <= 1e-12,
        format!("normalization worst {norm_worst:.1e}"),
    );

    let mut violations = 0;
    let mut stat_mismatch = 0;
    for case in 0..cases {
        let k = rng.random_range(2..=8);
        let l = rng.random_range(1..=k);
        let constraint = random_constraint(k, l, &mut rng);
        let mut luce = DirichletLucePosterior::flat(k).unwrap();
        let mut multinomial = DirichletPosterior::flat(k).unwrap();
        for _ in 0..rng.random_range(0..6) {
            let mut ids: Vec<usize> = (0..k).collect();
            ids.shuffle(&mut rng);
            let size = rng.random_range(1..=k);
            let shown = presentation(&ids[..size], k);
            let chosen = *shown.members().choose(&mut rng).unwrap();
            luce.observe(&shown, chosen).unwrap();
            multinomial.observe(&shown, chosen).unwrap();
        }
        let chosen: u64 = luce.choice_counts().iter().sum();
        let exposed: u64 = luce.exposure_counts().values().sum();
        stat_mismatch += (chosen != exposed) as usize;
        let policy = if case % 4 == 3 {
            PolicyKind::Greedy
        } else {
            PolicyKind::Thompson
        };
        let mut learner = if case % 2 == 0 {
            Learner::Luce(LuceLearner::new(luce))
        } else {
            Learner::Multinomial(multinomial)
        };
        let shown = select_presentation(&mut learner, policy, l, &constraint, &mut rng).unwrap();
        let forced_in = constraint.forced().iter().all(|o| shown.contains(*o));
        let within_pool = shown.iter().all(|o| constraint.pool().contains(&o));
        if !(forced_in && within_pool && shown.len() == l) {
            violations += 1;
        }
    }
    check.require(
        violations == 0,
        format!("constraint violations {violations}/{cases}"),
    );
    check.require(
        stat_mismatch == 0,
        format!("sum c_k != sum n_C in {stat_mismatch}/{cases}"),
    );

    let config = PartialConfig {
        scenario: Some(Scenario::Censorship),
        t: Some(2000),
        runs: Some(3),
        master_seed: Some(77),
        ..Default::default()
    }
    .resolve()
    .unwrap();
    let a = run_episode(&config, 1).unwrap();
    let b = run_episode(&config, 1).unwrap();
    let bits = |v: &PreferenceVector| v.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let same = a.records == b.records
        && bits(&a.final_estimate) == bits(&b.final_estimate)
        && a.init_phase_estimate.as_ref().map(bits) == b.init_phase_estimate.as_ref().map(bits);
    check.require(same, "episode replay bit-exact".into());
    let serial = run_experiment(&config, Some(1), false).unwrap();
    let parallel = run_experiment(&config, Some(WORKERS), false).unwrap();
    check.require(
        serial == parallel,
        format!("experiment identical with 1 and {WORKERS} workers"),
    );
    let sufficient = a.chosen_counts.iter().sum::<u64>() == a.records.len() as u64;
    check.require(
        sufficient,
        "episode choice counts match interactions".into(),
    );
    check
}

fn sampler_marginal() -> Check {
    let mut check = Check::new();
    let bins = 50;
    let draws = 10_000;
    let mut post = DirichletLucePosterior::flat(2).unwrap();
    post.observe(&presentation(&[0, 1], 2), OptionId(0))
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20_008);
    let (_, mut state) = draw_posterior_sample(&post, None, 1000, &mut rng).unwrap();
    let mut counts = vec![0usize; bins];
    for _ in 0..draws {
        let (theta, next) = draw_posterior_sample(&post, Some(state), 1, &mut rng).unwrap();
        state = next;
        let b = ((theta[0] * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    // Beta(2, 1) has CDF x^2.
    let tv: f64 = (0..bins)
        .map(|b| {
            let (lo, hi) = (b as f64 / bins as f64, (b + 1) as f64 / bins as f64);
            (counts[b] as f64 / draws as f64 - (hi * hi - lo * lo)).abs()
        })
        .sum::<f64>()
        / 2.0;
    check.require(tv <= 0.05, format!("TV to Beta(2,1) {tv:.4} <= 0.05"));
    check
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "1 oracle equivalence",
            Duration::from_secs(10),
            oracle_equivalence,
        ),
        (
            "2 reduction identity",
            Duration::from_secs(5),
            reduction_identity,
        ),
        (
            "3 unexplored independence",
            Duration::from_secs(5),
            unexplored_independence,
        ),
        ("4 promotion scenario", Duration::from_secs(300), promotion),
        (
            "5 censorship scenario",
            Duration::from_secs(300),
            censorship,
        ),
        (
            "6 unfair-comparison scenario",
            Duration::from_secs(300),
            unfair_comparison,
        ),
        ("7 invariant suites", Duration::from_secs(30), invariants),
        (
            "8 sampler marginal check",
            Duration::from_secs(10),
            sampler_marginal,
        ),
    ];
    let mut failures = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let mut check = run();
        let elapsed = start.elapsed();
        check.require(
            elapsed <= limit,
            format!(
                "runtime {:.2}s <= {}s",
                elapsed.as_secs_f64(),
                limit.as_secs()
            ),
        );
        let verdict = if check.ok { "PASS" } else { "FAIL" };
        println!("{verdict} [{name}] {}", check.notes.join("; "));
        failures += !check.ok as usize;
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
