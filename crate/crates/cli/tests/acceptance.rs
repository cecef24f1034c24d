//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, SQRT_2};
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use tbell_cli::commands::{
    analyze_path, analyze_tally, cmd_analyze, cmd_optimize, cmd_simulate, cmd_sweep, optimize, AnalyzeArgs,
    DisturbanceKind, ModelKind, OptimizeArgs, SimulateArgs, SweepArgs, SweepFormat,
};
use tbell_cli::config::DEFAULT_SEED;
use tbell_core::analysis::{correlator_estimate, delta_feasibility};
use tbell_core::engine::{run_experiment, run_tally};
use tbell_core::quantum::{correlator, state_from_amplitudes};
use tbell_core::realist::{counting_lemma_margin, pair_marginal, CountingForm};
use tbell_core::search::{first_non_violating, noise_sweep};
use tbell_core::{
    ConditionalTable, Direction, Disturbance, ExperimentPlan, Model, Outcome, QubitState, RealityDist,
    RealityType, Setting, SettingTriple,
};

type Verdict = (bool, String);

fn quantum_plan(state: QubitState, n: u64, seed: u64) -> ExperimentPlan {
    ExperimentPlan::new(Model::Quantum { state }, SettingTriple::canonical_optimal(), n, seed)
}

fn c1_maximal_violation() -> Verdict {
    let start = Instant::now();
    let plan = quantum_plan(QubitState::pure(Direction::Z), 1_000_000, DEFAULT_SEED);
    let report = analyze_tally(&run_tally(&plan).unwrap(), None).unwrap();
    let elapsed = start.elapsed();
    let r = report.correlator_form;
    let z = r.z_score.unwrap_or(f64::NAN);
    let ok = (r.lhs - SQRT_2).abs() <= 0.01 && z > 5.0 && elapsed < Duration::from_secs(10);
    (ok, format!("lhs {:.6} (target {SQRT_2:.6} +/- 0.01), z {z:.1}, {elapsed:.2?}", r.lhs))
}

fn c2_state_independence() -> Verdict {
    let triple = SettingTriple::canonical_optimal();
    let mut worst: f64 = 0.0;
    let mut states = 0;
    for (i, s) in [0.0, 0.3, FRAC_1_SQRT_2, 0.9, 1.0].into_iter().enumerate() {
        for (j, phi) in [0.0, FRAC_PI_2].into_iter().enumerate() {
            let state = state_from_amplitudes(s, phi, Direction::Z).unwrap();
            let t = run_tally(&quantum_plan(state, 1_000_000, 100 + 2 * i as u64 + j as u64)).unwrap();
            for (x, y) in Setting::ordered_pairs() {
                let e = correlator_estimate(&t, x, y).unwrap();
                let want = correlator(&triple.direction(x), &triple.direction(y));
                let dev = (e.value - want).abs();
                let ratio = if e.stderr > 0.0 {
                    dev / e.stderr
                } else if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(ratio);
            }
            states += 1;
        }
    }
    (worst <= 4.0, format!("{states} states x 9 pairs, worst deviation {worst:.2} stderr"))
}

fn c3_lhv_soundness() -> Verdict {
    let start = Instant::now();
    let mut rng = tbell_core::rng::throw_stream(3, 0);
    let mut worst_exact = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let d = RealityDist::sample_uniform(&mut rng);
        let table = ConditionalTable::exact_realist(&d);
        worst_exact = worst_exact.max(table.wigner().unwrap().max_margin);
        worst_exact = worst_exact.max(table.correlator_form().unwrap().margin);
    }
    let mut exceed = 0;
    let mut worst_z = f64::NEG_INFINITY;
    for run in 0..100u64 {
        let d = RealityDist::sample_uniform(&mut rng);
        let plan = ExperimentPlan::new(Model::Realist { dist: d }, SettingTriple::canonical_optimal(), 100_000, run);
        let table = ConditionalTable::from_tally(&run_tally(&plan).unwrap());
        let w = table.wigner().unwrap();
        let reports = w.forms.iter().map(|f| f.report).chain([table.correlator_form().unwrap()]);
        for r in reports {
            if r.margin > 4.0 * r.stderr_lhs {
                exceed += 1;
            }
            if r.stderr_lhs > 0.0 {
                worst_z = worst_z.max(r.margin / r.stderr_lhs);
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = worst_exact <= 1e-12 && exceed == 0 && elapsed < Duration::from_secs(60);
    (
        ok,
        format!("max exact margin {worst_exact:.3e}, sampled margins > 4 stderr: {exceed} (max {worst_z:.2}), {elapsed:.2?}"),
    )
}

fn c4_counting_tightness() -> Verdict {
    let mut min = f64::INFINITY;
    for i in 0..8 {
        let d = RealityDist::point_mass(RealityType::from_index(i));
        min = min.min(counting_lemma_margin(&d));
        for f in CountingForm::all() {
            let m = f.margin(&d);
            if m < 0.0 {
                return (false, format!("negative margin {m} for {f:?}"));
            }
        }
    }
    (min == 0.0, format!("min margin over point masses {min}"))
}

fn c5_factor_nine() -> Verdict {
    let d = RealityDist::new([0.05, 0.2, 0.1, 0.15, 0.08, 0.12, 0.25, 0.05]).unwrap();
    let n = 900_000u64;
    let plan = ExperimentPlan::new(Model::Realist { dist: d }, SettingTriple::canonical_optimal(), n, 5);
    let t = run_tally(&plan).unwrap();
    let count = t.cell(Setting::A, Setting::B, Outcome::Plus, Outcome::Minus) as f64;
    let want = n as f64 / 9.0 * pair_marginal(&d, Setting::A, Outcome::Plus, Setting::B, Outcome::Minus).unwrap();
    let tol = 4.0 * (n as f64).sqrt();
    ((count - want).abs() <= tol, format!("N[a+,b-] = {count}, expected {want:.1}, tolerance {tol:.1}"))
}

fn c6_perfect_correlation() -> Verdict {
    let triple = SettingTriple::canonical_optimal();
    let dist = RealityDist::new([0.3, 0.0, 0.1, 0.2, 0.05, 0.15, 0.1, 0.1]).unwrap();
    let models = [
        Model::Quantum { state: QubitState::mixed() },
        Model::Quantum { state: state_from_amplitudes(0.3, 1.0, Direction::X).unwrap() },
        Model::Realist { dist: RealityDist::uniform() },
        Model::Realist { dist },
        Model::Invasive { dist, disturbance: Disturbance::quantum_mimicking(&triple) },
    ];
    let mut same = 0usize;
    let mut broken = 0usize;
    for (i, model) in models.into_iter().enumerate() {
        let plan = ExperimentPlan::new(model, triple, 200_000, 60 + i as u64);
        for r in run_experiment(&plan).unwrap().iter().filter(|r| r.is_same_setting()) {
            same += 1;
            if r.first_outcome != r.second_outcome {
                broken += 1;
            }
        }
    }
    (broken == 0, format!("{same} same-setting throws across 5 runs, {broken} disagree"))
}

fn c7_optimizer() -> Verdict {
    let args = OptimizeArgs {
        grid_step: 10.0,
        tol: 1e-12,
        orthogonal_ab: false,
        workers: None,
        out: None,
    };
    let r = optimize(&args).unwrap().result;
    let ok = (r.objective - SQRT_2).abs() <= 1e-8 && r.max_evaluated <= SQRT_2 + 1e-9;
    (
        ok,
        format!(
            "objective {:.12}, max evaluated {:.12}, target {SQRT_2:.12} (unconstrained supremum is 3/2)",
            r.objective, r.max_evaluated
        ),
    )
}

fn c8_noise_threshold() -> Verdict {
    let thr = (SQRT_2 - 1.0) / 2.0;
    let flips = delta_feasibility(thr - 1e-9) && !delta_feasibility(thr + 1e-9) && !delta_feasibility(thr);
    let etas: Vec<f64> = (0..=20).map(|k| 0.10 + 0.005 * k as f64).collect();
    let rows = noise_sweep(&etas, 1_000_000, 8).unwrap();
    let eta_star = (1.0 - FRAC_1_SQRT_2) / 2.0;
    let flip = first_non_violating(&rows);
    let flip_ok = flip.is_some_and(|f| (f - eta_star).abs() <= 0.01);
    let delta_ok = rows.iter().all(|r| (r.delta + 2.0 * r.eta).abs() <= 4.0 * r.delta_stderr);
    let worst = rows
        .iter()
        .map(|r| (r.delta + 2.0 * r.eta).abs() / r.delta_stderr)
        .fold(0.0, f64::max);
    (
        flips && flip_ok && delta_ok,
        format!(
            "feasibility flips at {thr:.4}: {flips}; violation ends at eta {flip:?} (expected {eta_star:.4} +/- 0.01); delta vs -2 eta worst {worst:.2} stderr"
        ),
    )
}

fn c9_invasive() -> Verdict {
    let triple = SettingTriple::canonical_optimal();
    let dist = RealityDist::uniform();
    let plan = ExperimentPlan::new(
        Model::Invasive { dist, disturbance: Disturbance::quantum_mimicking(&triple) },
        triple,
        1_000_000,
        9,
    );
    let t = run_tally(&plan).unwrap();
    let mut worst: f64 = 0.0;
    for (x, y) in Setting::ordered_pairs().filter(|(x, y)| x != y) {
        let e = correlator_estimate(&t, x, y).unwrap();
        worst = worst.max((e.value - correlator(&triple.direction(x), &triple.direction(y))).abs() / e.stderr);
    }
    let r = analyze_tally(&t, None).unwrap().correlator_form;
    let ok = worst <= 4.0 && r.violated;
    (ok, format!("worst correlator deviation {worst:.2} stderr, lhs {:.4}, z {:.1}", r.lhs, r.z_score.unwrap_or(f64::NAN)))
}

fn simulate_args(workers: usize, out: PathBuf) -> SimulateArgs {
    SimulateArgs {
        model: ModelKind::Invasive,
        s: 1.0,
        phi: 0.0,
        e: "0,0,1".into(),
        bloch: None,
        weights: Some("1,2,3,4,5,6,7,8".into()),
        disturbance: DisturbanceKind::Quantum,
        triple: Some("1,0,0:0,1,0:1,1,0".into()),
        throws: 200_000,
        seed: Some(10),
        entropy: false,
        flip: 0.05,
        workers: Some(workers),
        out: Some(out),
        no_meta: false,
    }
}

fn c10_reproducibility() -> Verdict {
    let dir = tempfile::TempDir::new().unwrap();
    let p = |name: &str| dir.path().join(name);
    let mut notes = Vec::new();
    let mut ok = true;
    for w in [1usize, 8] {
        cmd_simulate(&simulate_args(w, p(&format!("rec{w}.jsonl")))).unwrap();
        cmd_analyze(&AnalyzeArgs { input: p(&format!("rec{w}.jsonl")), out: Some(p(&format!("rep{w}.json"))) }).unwrap();
        cmd_optimize(&OptimizeArgs {
            grid_step: 20.0,
            tol: 1e-10,
            orthogonal_ab: false,
            workers: Some(w),
            out: Some(p(&format!("opt{w}.json"))),
        })
        .unwrap();
        cmd_sweep(&SweepArgs {
            eta: "0,0.1,0.2".into(),
            throws: 100_000,
            seed: Some(10),
            entropy: false,
            format: SweepFormat::Json,
            workers: Some(w),
            out: Some(p(&format!("sweep{w}.json"))),
        })
        .unwrap();
    }
    for stem in ["rec{}.jsonl", "rep{}.json", "opt{}.json", "sweep{}.json"] {
        let a = fs::read(p(&stem.replace("{}", "1"))).unwrap();
        let b = fs::read(p(&stem.replace("{}", "8"))).unwrap();
        let same = a == b && !a.is_empty();
        ok &= same;
        notes.push(format!("{}: {}", stem.replace("{}", ""), if same { "identical" } else { "DIFFER" }));
    }
    // the analysis of a file does not depend on how it was produced
    ok &= analyze_path(&p("rec1.jsonl")).is_ok();
    (ok, notes.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("maximal quantum violation", c1_maximal_violation),
        ("state independence", c2_state_independence),
        ("realist soundness", c3_lhv_soundness),
        ("counting lemma tightness", c4_counting_tightness),
        ("factor nine", c5_factor_nine),
        ("perfect correlation", c6_perfect_correlation),
        ("optimizer correctness", c7_optimizer),
        ("noise threshold", c8_noise_threshold),
        ("invasive model", c9_invasive),
        ("reproducibility", c10_reproducibility),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        println!("criterion {:>2} {:<26} {}  {detail}", i + 1, name, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
