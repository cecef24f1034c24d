//! Maximization of `(a + b)·c − a·b` over setting triples and the flip-noise
//! sweep at the optimal triple.
//!
//! The objective is invariant under rigid rotations, so the search pins
//! `a = x̂` and keeps `b` in the xy-plane: `b = (cos t, sin t, 0)` and
//! `c = (sin θ cos φ, sin θ sin φ, cos θ)`. A coarse grid over `(t, θ, φ)`
//! seeds a Nelder-Mead refinement.
//!
//! Over all triples the supremum is 3/2, reached at `a·b = −1/2` with `c`
//! along `a + b`. Restricted to `a ⊥ b` it is √2, reached with `c` along
//! `a + b`.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{geometric_lhs, ConditionalTable, InequalityReport};
use crate::domain::{Direction, SettingTriple};
use crate::engine::{run_tally, ExperimentPlan, Model};
use crate::error::{Error, Result};
use crate::quantum::QubitState;

/// Refinement step cap.
pub const MAX_ITERATIONS: usize = 10_000;

/// Supremum of the objective over all triples.
pub const GLOBAL_MAXIMUM: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub triple: SettingTriple,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective evaluations, grid included.
    pub evaluations: usize,
    /// Largest objective seen at any evaluated triple.
    pub max_evaluated: f64,
}

impl SearchResult {
    fn fixed(triple: SettingTriple) -> Self {
        let objective = geometric_lhs(&triple);
        SearchResult {
            triple,
            objective,
            iterations: 0,
            converged: true,
            evaluations: 1,
            max_evaluated: objective,
        }
    }
}

/// Canonical optimum among triples with `a ⊥ b`: `a = x̂`, `b = ŷ`,
/// `c = (x̂ + ŷ)/√2`, objective √2.
pub fn analytic_optimum() -> SearchResult {
    SearchResult::fixed(SettingTriple::canonical_optimal())
}

/// `a = x̂`, `b` at 120° from `a`, `c = a + b`; objective 3/2.
pub fn unconstrained_optimum() -> SearchResult {
    let b = Direction::from_spherical(PI / 2.0, 2.0 * PI / 3.0);
    let c = Direction::from_spherical(PI / 2.0, PI / 3.0);
    SearchResult::fixed(SettingTriple::new(Direction::X, b, c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// All triples; free angles `(t, θ, φ)`.
    #[default]
    Free,
    /// `b = ŷ` held orthogonal to `a`; free angles `(θ, φ)` of `c`.
    OrthogonalAb,
}

/// Triple for the reduced angles `[t, θ, φ]`.
pub fn triple_from_angles(p: &[f64; 3]) -> SettingTriple {
    let b = Direction::from_spherical(PI / 2.0, p[0]);
    let c = Direction::from_spherical(p[1], p[2]);
    SettingTriple::new(Direction::X, b, c)
}

fn triple_orthogonal(p: &[f64; 2]) -> SettingTriple {
    SettingTriple::new(Direction::X, Direction::Y, Direction::from_spherical(p[0], p[1]))
}

fn grid_axis(step: f64, upper: f64, inclusive: bool) -> Vec<f64> {
    let n = (upper / step).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    if !inclusive {
        v.retain(|x| *x < upper - 1e-12);
    }
    v
}

#[derive(Debug)]
struct SimplexOutcome<const N: usize> {
    best: [f64; N],
    value: f64,
    iterations: usize,
    converged: bool,
    evaluations: usize,
    max_evaluated: f64,
}

/// Nelder-Mead maximization with standard coefficients (reflect 1,
/// expand 2, contract 1/2, shrink 1/2). Stops when the spread of the
/// simplex values drops below `tol`.
fn nelder_mead_max<const N: usize>(
    f: impl Fn(&[f64; N]) -> f64,
    start: [f64; N],
    step: f64,
    tol: f64,
    max_iter: usize,
) -> SimplexOutcome<N> {
    let mut evaluations = 0;
    let mut max_evaluated = f64::NEG_INFINITY;
    let mut eval = |p: &[f64; N]| {
        let v = f(p);
        evaluations += 1;
        max_evaluated = max_evaluated.max(v);
        v
    };

    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((start, eval(&start)));
    for i in 0..N {
        let mut p = start;
        p[i] += step;
        simplex.push((p, eval(&p)));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // best first
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        if simplex[0].1 - simplex[N].1 < tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; N];
        for (p, _) in &simplex[..N] {
            for k in 0..N {
                centroid[k] += p[k] / N as f64;
            }
        }
        let worst = simplex[N];
        let along = |coef: f64| -> [f64; N] {
            std::array::from_fn(|k| centroid[k] + coef * (worst.0[k] - centroid[k]))
        };

        let reflected = along(-1.0);
        let fr = eval(&reflected);
        if fr > simplex[0].1 {
            let expanded = along(-2.0);
            let fe = eval(&expanded);
            simplex[N] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr > simplex[N - 1].1 {
            simplex[N] = (reflected, fr);
            continue;
        }
        let contracted = if fr > worst.1 { along(-0.5) } else { along(0.5) };
        let fc = eval(&contracted);
        if fc > worst.1.max(fr) {
            simplex[N] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0;
        for entry in simplex.iter_mut().skip(1) {
            let p: [f64; N] = std::array::from_fn(|k| best[k] + 0.5 * (entry.0[k] - best[k]));
            *entry = (p, eval(&p));
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    SimplexOutcome {
        best: simplex[0].0,
        value: simplex[0].1,
        iterations,
        converged,
        evaluations,
        max_evaluated,
    }
}

/// Grid evaluation then restarted simplex refinement over `N` angles.
fn grid_then_refine<const N: usize>(
    objective: impl Fn(&[f64; N]) -> f64 + Sync,
    to_triple: impl Fn(&[f64; N]) -> SettingTriple,
    points: Vec<[f64; N]>,
    step: f64,
    refine_tol: f64,
) -> SearchResult {
    let values: Vec<f64> = points.par_iter().map(&objective).collect();
    let (best_idx, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });

    let mut evaluations = points.len();
    let mut max_evaluated = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut best = points[best_idx];
    let mut best_value = values[best_idx];
    let mut iterations = 0;
    let mut converged = false;
    let mut simplex_step = step / 2.0;

    while iterations < MAX_ITERATIONS {
        let run = nelder_mead_max(&objective, best, simplex_step, refine_tol, MAX_ITERATIONS - iterations);
        iterations += run.iterations;
        evaluations += run.evaluations;
        max_evaluated = max_evaluated.max(run.max_evaluated);
        let improvement = run.value - best_value;
        if run.value > best_value {
            best = run.best;
            best_value = run.value;
        }
        if !run.converged {
            break;
        }
        if improvement < refine_tol {
            converged = true;
            break;
        }
        simplex_step = (simplex_step / 4.0).max(1e-6);
    }

    SearchResult {
        triple: to_triple(&best),
        objective: best_value,
        iterations,
        converged,
        evaluations,
        max_evaluated,
    }
}

fn check_search_params(grid_step_deg: f64, refine_tol: f64) -> Result<()> {
    if !(grid_step_deg > 0.0 && grid_step_deg <= 30.0) {
        return Err(Error::InvalidSearch(format!(
            "grid step {grid_step_deg} deg outside (0, 30]"
        )));
    }
    if !(refine_tol > 0.0 && refine_tol.is_finite()) {
        return Err(Error::InvalidSearch(format!("tolerance {refine_tol} must be positive")));
    }
    Ok(())
}

/// Coarse grid with spacing `grid_step_deg` followed by simplex refinement
/// until the simplex spread is below `refine_tol`. The refinement restarts
/// from its best point until a restart stops improving the objective.
pub fn maximize_violation(grid_step_deg: f64, refine_tol: f64) -> Result<SearchResult> {
    maximize_violation_in(SearchMode::Free, grid_step_deg, refine_tol)
}

pub fn maximize_violation_in(mode: SearchMode, grid_step_deg: f64, refine_tol: f64) -> Result<SearchResult> {
    check_search_params(grid_step_deg, refine_tol)?;
    let step = grid_step_deg.to_radians();
    let thetas = grid_axis(step, PI, true);
    let phis = grid_axis(step, 2.0 * PI, false);
    Ok(match mode {
        SearchMode::Free => {
            let ts = grid_axis(step, PI, true);
            let mut points = Vec::with_capacity(ts.len() * thetas.len() * phis.len());
            for &t in &ts {
                for &th in &thetas {
                    for &ph in &phis {
                        points.push([t, th, ph]);
                    }
                }
            }
            let f = |p: &[f64; 3]| geometric_lhs(&triple_from_angles(p));
            grid_then_refine(f, triple_from_angles, points, step, refine_tol)
        }
        SearchMode::OrthogonalAb => {
            let mut points = Vec::with_capacity(thetas.len() * phis.len());
            for &th in &thetas {
                for &ph in &phis {
                    points.push([th, ph]);
                }
            }
            let f = |p: &[f64; 2]| geometric_lhs(&triple_orthogonal(p));
            grid_then_refine(f, triple_orthogonal, points, step, refine_tol)
        }
    })
}

/// Best objective found with `c` fixed to `−(a + b)/‖a + b‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntiAlignedResult {
    /// `a·b` at the best point.
    pub ab_dot: f64,
    pub objective: f64,
    /// Least upper bound of `−√(2 + 2t) − t` over `t ∈ (−1, 1]`,
    /// approached as `t → −1` and never attained.
    pub supremum: f64,
}

/// Sweeps `t = a·b` over `samples` points of `(−1, 1]` with `c` pinned
/// against `a + b`. The objective `−√(2 + 2t) − t` decreases in `t`, so
/// the best point is the one closest to `t = −1`.
pub fn maximize_antialigned(samples: usize) -> Result<AntiAlignedResult> {
    if samples < 2 {
        return Err(Error::InvalidSearch("need at least 2 samples".into()));
    }
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for i in 0..samples {
        // angle between a and b in [0, π), excluding the antipodal point
        let angle = PI * i as f64 / samples as f64;
        let a = Direction::X;
        let b = Direction::from_spherical(PI / 2.0, angle);
        let sum = [a.x() + b.x(), a.y() + b.y(), a.z() + b.z()];
        let Ok(c) = Direction::new(-sum[0], -sum[1], -sum[2]) else {
            continue;
        };
        let v = geometric_lhs(&SettingTriple::new(a, b, c));
        if v > best.1 {
            best = (a.dot(&b), v);
        }
    }
    Ok(AntiAlignedResult {
        ab_dot: best.0,
        objective: best.1,
        supremum: 1.0,
    })
}

/// One row of the flip-noise sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta: f64,
    /// Mean of `E(x,x) − 1` over the three settings.
    pub delta: f64,
    pub delta_stderr: f64,
    /// Symmetrized correlator-form left-hand side.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `(1 − 2η)√2`.
    pub expected_lhs: f64,
    pub violated: bool,
    pub z_score: Option<f64>,
}

/// Quantum model at the canonical optimal triple, with every second
/// outcome flipped independently with probability `η`. Every row uses the
/// same `seed`, so rows differ only through the flips.
pub fn noise_sweep(eta_values: &[f64], n_throws: u64, seed: u64) -> Result<Vec<SweepRow>> {
    if let Some(bad) = eta_values.iter().find(|e| !(0.0..=0.5).contains(*e)) {
        return Err(Error::InvalidPlan(format!("eta {bad} outside [0, 1/2]")));
    }
    let triple = SettingTriple::canonical_optimal();
    let state = QubitState::pure(Direction::Z);
    eta_values
        .iter()
        .map(|&eta| {
            let plan = ExperimentPlan::new(Model::Quantum { state }, triple, n_throws, seed)
                .with_second_flip(eta);
            let table = ConditionalTable::from_tally(&run_tally(&plan)?);
            let diag = table.noise_diagnostics()?;
            let report: InequalityReport = table.symmetrized()?;
            let (delta, delta_stderr) = diag.mean_delta();
            Ok(SweepRow {
                eta,
                delta,
                delta_stderr,
                lhs: report.lhs,
                lhs_stderr: report.stderr_lhs,
                expected_lhs: (1.0 - 2.0 * eta) * SQRT_2,
                violated: report.violated,
                z_score: report.z_score,
            })
        })
        .collect()
}

/// First `η` in the sweep at which the violation flag is off, if any.
pub fn first_non_violating(rows: &[SweepRow]) -> Option<f64> {
    rows.iter().find(|r| !r.violated).map(|r| r.eta)
}
