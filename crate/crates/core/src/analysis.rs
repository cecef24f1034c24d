//! Tallies of throw records, conditional probabilities and correlators, and
//! evaluation of the inequality forms and the noise diagnostics.
//!
//! Probabilities are conditional on the ordered setting pair: a cell count
//! is divided by the number of throws with that pair. Every evaluation goes
//! through a [`ConditionalTable`], which is either estimated from a
//! [`Tally`] (with binomial standard errors) or computed exactly from a
//! model (standard errors zero).

use std::fmt;
use std::ops::{Add, AddAssign};

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};

use crate::domain::{Outcome, Setting, SettingTriple, ThrowRecord};
use crate::error::{Error, Result};
use crate::quantum::{joint_probability, QubitState};
use crate::realist::{
    conditional_throw_probability, invasive_conditional_probability, setting_permutations,
    Disturbance, RealityDist,
};

/// Counts per (first setting, second setting, first outcome, second outcome).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    counts: [[[[u64; 2]; 2]; 3]; 3],
    total: u64,
}

impl Tally {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a ThrowRecord>) -> Self {
        let mut t = Tally::default();
        for r in records {
            t.record(r);
        }
        t
    }

    pub fn record(&mut self, r: &ThrowRecord) {
        self.counts[r.first_setting.index()][r.second_setting.index()][r.first_outcome.index()]
            [r.second_outcome.index()] += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn cell(&self, s1: Setting, s2: Setting, alpha: Outcome, beta: Outcome) -> u64 {
        self.counts[s1.index()][s2.index()][alpha.index()][beta.index()]
    }

    /// Throws with ordered pair `(s1, s2)`.
    pub fn pair_count(&self, s1: Setting, s2: Setting) -> u64 {
        self.counts[s1.index()][s2.index()].iter().flatten().sum()
    }

    pub fn cells(&self) -> Vec<TallyCell> {
        let mut out = Vec::with_capacity(36);
        for (s1, s2) in Setting::ordered_pairs() {
            for alpha in Outcome::BOTH {
                for beta in Outcome::BOTH {
                    out.push(TallyCell {
                        first_setting: s1,
                        second_setting: s2,
                        first_outcome: alpha,
                        second_outcome: beta,
                        count: self.cell(s1, s2, alpha, beta),
                    });
                }
            }
        }
        out
    }
}

impl AddAssign for Tally {
    fn add_assign(&mut self, rhs: Tally) {
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..2 {
                    for b in 0..2 {
                        self.counts[i][j][a][b] += rhs.counts[i][j][a][b];
                    }
                }
            }
        }
        self.total += rhs.total;
    }
}

impl Add for Tally {
    type Output = Tally;

    fn add(mut self, rhs: Tally) -> Tally {
        self += rhs;
        self
    }
}

impl Serialize for Tally {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Tally", 2)?;
        st.serialize_field("total", &self.total)?;
        st.serialize_field("cells", &self.cells())?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyCell {
    pub first_setting: Setting,
    pub second_setting: Setting,
    pub first_outcome: Outcome,
    pub second_outcome: Outcome,
    pub count: u64,
}

pub fn tally(records: &[ThrowRecord]) -> Tally {
    Tally::from_records(records)
}

/// Outcome probabilities for one ordered setting pair.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PairCell {
    probs: [[f64; 2]; 2],
    /// Sample size; `None` for exact probabilities.
    n: Option<u64>,
}

/// Conditional outcome probabilities for all nine ordered setting pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    pairs: [[Option<PairCell>; 3]; 3],
}

impl ConditionalTable {
    pub fn from_tally(t: &Tally) -> Self {
        let mut pairs = [[None; 3]; 3];
        for (s1, s2) in Setting::ordered_pairs() {
            let n = t.pair_count(s1, s2);
            if n == 0 {
                continue;
            }
            let mut probs = [[0.0; 2]; 2];
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    probs[a.index()][b.index()] = t.cell(s1, s2, a, b) as f64 / n as f64;
                }
            }
            pairs[s1.index()][s2.index()] = Some(PairCell { probs, n: Some(n) });
        }
        ConditionalTable { pairs }
    }

    fn exact(f: impl Fn(Setting, Outcome, Setting, Outcome) -> f64) -> Self {
        let mut pairs = [[None; 3]; 3];
        for (s1, s2) in Setting::ordered_pairs() {
            let mut probs = [[0.0; 2]; 2];
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    probs[a.index()][b.index()] = f(s1, a, s2, b);
                }
            }
            pairs[s1.index()][s2.index()] = Some(PairCell { probs, n: None });
        }
        ConditionalTable { pairs }
    }

    pub fn exact_quantum(state: &QubitState, triple: &SettingTriple) -> Self {
        Self::exact(|s1, a, s2, b| {
            joint_probability(state, &triple.direction(s1), a, &triple.direction(s2), b)
        })
    }

    pub fn exact_realist(dist: &RealityDist) -> Self {
        Self::exact(|s1, a, s2, b| conditional_throw_probability(dist, s1, a, s2, b))
    }

    pub fn exact_invasive(dist: &RealityDist, disturbance: &Disturbance) -> Self {
        Self::exact(|s1, a, s2, b| invasive_conditional_probability(dist, disturbance, s1, a, s2, b))
    }

    fn pair(&self, s1: Setting, s2: Setting) -> Result<&PairCell> {
        self.pairs[s1.index()][s2.index()]
            .as_ref()
            .ok_or(Error::InsufficientData(s1, s2))
    }

    pub fn has_pair(&self, s1: Setting, s2: Setting) -> bool {
        self.pairs[s1.index()][s2.index()].is_some()
    }

    /// Pairs with no data, in row-major order.
    pub fn missing_pairs(&self) -> Vec<(Setting, Setting)> {
        Setting::ordered_pairs().filter(|(x, y)| !self.has_pair(*x, *y)).collect()
    }

    pub fn probability(&self, s1: Setting, alpha: Outcome, s2: Setting, beta: Outcome) -> Result<f64> {
        Ok(self.pair(s1, s2)?.probs[alpha.index()][beta.index()])
    }

    /// Binomial standard error of [`Self::probability`].
    pub fn probability_stderr(&self, s1: Setting, alpha: Outcome, s2: Setting, beta: Outcome) -> Result<f64> {
        let cell = self.pair(s1, s2)?;
        let p = cell.probs[alpha.index()][beta.index()];
        Ok(match cell.n {
            Some(n) => (p * (1.0 - p) / n as f64).max(0.0).sqrt(),
            None => 0.0,
        })
    }

    /// `1 − 2[P(+-) + P(-+)]`. Exactly 1 when the mismatch cells are empty,
    /// and exactly symmetric for the realist model.
    pub fn correlator(&self, s1: Setting, s2: Setting) -> Result<CorrelatorEstimate> {
        let cell = self.pair(s1, s2)?;
        let p = &cell.probs;
        let value = (1.0 - 2.0 * (p[0][1] + p[1][0])).clamp(-1.0, 1.0);
        Ok(match cell.n {
            Some(n) => CorrelatorEstimate::sampled(value, n),
            None => CorrelatorEstimate::exact(value),
        })
    }

    /// `P(++) + P(--) − P(+-) − P(-+)`; equals [`Self::correlator`] when the
    /// four cells are exhaustive.
    pub fn correlator_signed_sum(&self, s1: Setting, s2: Setting) -> Result<f64> {
        let p = &self.pair(s1, s2)?.probs;
        Ok(p[0][0] + p[1][1] - p[0][1] - p[1][0])
    }

    pub fn wigner(&self) -> Result<WignerReport> {
        let forms = WignerForm::all()
            .into_iter()
            .map(|form| Ok(WignerFormReport { form, report: form.evaluate(self)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(WignerReport::new(forms))
    }

    /// `E(a,c) + E(b,c) − E(a,b) ≤ 1`.
    pub fn correlator_form(&self) -> Result<InequalityReport> {
        use Setting::{A, B, C};
        Ok(correlator_inequality(
            &self.correlator(A, C)?,
            &self.correlator(B, C)?,
            &self.correlator(A, B)?,
        ))
    }

    pub fn reference_bell(&self) -> Result<InequalityReport> {
        use Setting::{A, B, C};
        Ok(reference_bell_1964(
            &self.correlator(A, B)?,
            &self.correlator(A, C)?,
            &self.correlator(B, C)?,
        ))
    }

    pub fn noise_diagnostics(&self) -> Result<NoiseDiagnostics> {
        let deltas = Setting::ALL
            .iter()
            .map(|&s| {
                let e = self.correlator(s, s)?;
                Ok(SettingDelta {
                    setting: s,
                    value: e.value - 1.0,
                    stderr: e.stderr,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let pairs = UNORDERED_PAIRS
            .iter()
            .map(|&(n, m)| {
                let nm = self.correlator(n, m)?;
                let mn = self.correlator(m, n)?;
                let se = nm.stderr.hypot(mn.stderr);
                Ok(PairSymmetry {
                    first: n,
                    second: m,
                    antisym: nm.value - mn.value,
                    antisym_stderr: se,
                    sym: (nm.value + mn.value) / 2.0,
                    sym_stderr: se / 2.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let delta_max = deltas
            .iter()
            .map(|d| d.value.abs())
            .chain(pairs.iter().map(|p| p.antisym.abs()))
            .fold(0.0, f64::max);
        Ok(NoiseDiagnostics {
            deltas,
            pairs,
            delta_max,
        })
    }

    /// `sym(a,c) + sym(b,c) − sym(a,b) ≤ 1` with `sym(n,m) = (E(n,m) + E(m,n))/2`.
    pub fn symmetrized(&self) -> Result<InequalityReport> {
        use Setting::{A, B, C};
        let sym = |n, m| -> Result<(f64, f64)> {
            let nm = self.correlator(n, m)?;
            let mn = self.correlator(m, n)?;
            Ok(((nm.value + mn.value) / 2.0, nm.stderr.hypot(mn.stderr) / 2.0))
        };
        let (ac, se_ac) = sym(A, C)?;
        let (bc, se_bc) = sym(B, C)?;
        let (ab, se_ab) = sym(A, B)?;
        let se = (se_ac * se_ac + se_bc * se_bc + se_ab * se_ab).sqrt();
        Ok(InequalityReport::new(ac + bc - ab, 1.0, se))
    }
}

const UNORDERED_PAIRS: [(Setting, Setting); 3] = [
    (Setting::A, Setting::B),
    (Setting::A, Setting::C),
    (Setting::B, Setting::C),
];

pub fn pair_probability(t: &Tally, s1: Setting, alpha: Outcome, s2: Setting, beta: Outcome) -> Result<f64> {
    let n = t.pair_count(s1, s2);
    if n == 0 {
        return Err(Error::InsufficientData(s1, s2));
    }
    Ok(t.cell(s1, s2, alpha, beta) as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Throws with this ordered pair; zero for exact values.
    pub n_pair: u64,
}

impl CorrelatorEstimate {
    /// Plug-in binomial error `√((1 − E²)/n)`.
    pub fn sampled(value: f64, n_pair: u64) -> Self {
        let value = value.clamp(-1.0, 1.0);
        CorrelatorEstimate {
            value,
            stderr: ((1.0 - value * value).max(0.0) / n_pair as f64).sqrt(),
            n_pair,
        }
    }

    pub fn exact(value: f64) -> Self {
        CorrelatorEstimate {
            value: value.clamp(-1.0, 1.0),
            stderr: 0.0,
            n_pair: 0,
        }
    }
}

pub fn correlator_estimate(t: &Tally, s1: Setting, s2: Setting) -> Result<CorrelatorEstimate> {
    let n = t.pair_count(s1, s2);
    if n == 0 {
        return Err(Error::InsufficientData(s1, s2));
    }
    use Outcome::{Minus, Plus};
    let agree = t.cell(s1, s2, Plus, Plus) + t.cell(s1, s2, Minus, Minus);
    let disagree = t.cell(s1, s2, Plus, Minus) + t.cell(s1, s2, Minus, Plus);
    let value = (agree as f64 - disagree as f64) / n as f64;
    Ok(CorrelatorEstimate::sampled(value, n))
}

/// An evaluated inequality `lhs ≤ bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub bound: f64,
    pub margin: f64,
    pub stderr_lhs: f64,
    /// `margin / stderr_lhs`; absent when the standard error is zero.
    pub z_score: Option<f64>,
    pub violated: bool,
}

impl InequalityReport {
    pub fn new(lhs: f64, bound: f64, stderr_lhs: f64) -> Self {
        let margin = lhs - bound;
        InequalityReport {
            lhs,
            bound,
            margin,
            stderr_lhs,
            z_score: (stderr_lhs > 0.0).then(|| margin / stderr_lhs),
            violated: margin > 0.0,
        }
    }

    /// True when the margin exceeds `k` standard errors.
    pub fn exceeds(&self, k: f64) -> bool {
        self.margin > k * self.stderr_lhs
    }
}

/// `P(x^σ, y^τ) ≤ P(x^σ, z^ρ) + P(y^τ, z^−ρ)`, written as
/// `lhs = P(x^σ, y^τ) − P(x^σ, z^ρ) − P(y^τ, z^−ρ) ≤ 0`.
///
/// The `(A,B,C)` form with `σ = +` is `P(a⁺,b⁻) ≤ P(a⁺,c⁻) + P(b⁻,c⁺)` and
/// with `σ = −` its mirror `P(a⁻,b⁺) ≤ P(a⁻,c⁺) + P(b⁺,c⁻)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WignerForm {
    pub x: Setting,
    pub y: Setting,
    pub z: Setting,
    pub sigma: Outcome,
}

impl WignerForm {
    pub fn new(x: Setting, y: Setting, z: Setting, sigma: Outcome) -> Self {
        WignerForm { x, y, z, sigma }
    }

    /// 6 setting orderings times the two sign patterns.
    pub fn all() -> Vec<WignerForm> {
        setting_permutations()
            .into_iter()
            .flat_map(|(x, y, z)| Outcome::BOTH.map(|s| WignerForm::new(x, y, z, s)))
            .collect()
    }

    /// The three probability terms `(first, second, third)`, each as
    /// `(s1, α, s2, β)`.
    pub fn terms(&self) -> [(Setting, Outcome, Setting, Outcome); 3] {
        let sigma = self.sigma;
        let tau = -sigma;
        let rho = -sigma;
        [
            (self.x, sigma, self.y, tau),
            (self.x, sigma, self.z, rho),
            (self.y, tau, self.z, -rho),
        ]
    }

    pub fn evaluate(&self, table: &ConditionalTable) -> Result<InequalityReport> {
        let [t0, t1, t2] = self.terms();
        let p = |t: (Setting, Outcome, Setting, Outcome)| table.probability(t.0, t.1, t.2, t.3);
        let se = |t: (Setting, Outcome, Setting, Outcome)| table.probability_stderr(t.0, t.1, t.2, t.3);
        let lhs = p(t0)? - p(t1)? - p(t2)?;
        // the three terms come from distinct ordered pairs, hence independent
        let stderr = (se(t0)?.powi(2) + se(t1)?.powi(2) + se(t2)?.powi(2)).sqrt();
        Ok(InequalityReport::new(lhs, 0.0, stderr))
    }
}

impl fmt::Display for WignerForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = |t: (Setting, Outcome, Setting, Outcome)| {
            format!(
                "P({}{},{}{})",
                t.0.to_string().to_lowercase(),
                t.1,
                t.2.to_string().to_lowercase(),
                t.3
            )
        };
        let [t0, t1, t2] = self.terms();
        write!(f, "{} <= {} + {}", term(t0), term(t1), term(t2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerFormReport {
    #[serde(serialize_with = "serialize_display")]
    pub form: WignerForm,
    #[serde(flatten)]
    pub report: InequalityReport,
}

fn serialize_display<S: serde::Serializer, T: fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Every mirrored Wigner form and the largest margin among them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerReport {
    pub forms: Vec<WignerFormReport>,
    pub max_margin: f64,
    pub any_violated: bool,
}

impl WignerReport {
    fn new(forms: Vec<WignerFormReport>) -> Self {
        let max_margin = forms.iter().map(|f| f.report.margin).fold(f64::NEG_INFINITY, f64::max);
        let any_violated = forms.iter().any(|f| f.report.violated);
        WignerReport {
            forms,
            max_margin,
            any_violated,
        }
    }

    pub fn get(&self, form: &WignerForm) -> Option<&InequalityReport> {
        self.forms.iter().find(|f| f.form == *form).map(|f| &f.report)
    }

    /// The form with the largest margin.
    pub fn worst(&self) -> &WignerFormReport {
        self.forms
            .iter()
            .max_by(|a, b| a.report.margin.total_cmp(&b.report.margin))
            .expect("twelve forms")
    }
}

pub fn wigner_inequality(t: &Tally) -> Result<WignerReport> {
    ConditionalTable::from_tally(t).wigner()
}

/// `E(a,c) + E(b,c) − E(a,b) ≤ 1`.
pub fn correlator_inequality(
    e_ac: &CorrelatorEstimate,
    e_bc: &CorrelatorEstimate,
    e_ab: &CorrelatorEstimate,
) -> InequalityReport {
    let lhs = e_ac.value + e_bc.value - e_ab.value;
    let se = (e_ac.stderr.powi(2) + e_bc.stderr.powi(2) + e_ab.stderr.powi(2)).sqrt();
    InequalityReport::new(lhs, 1.0, se)
}

/// `|E(a,b) − E(a,c) − E(b,c)| ≤ 1`, for comparison only.
pub fn reference_bell_1964(
    e_ab: &CorrelatorEstimate,
    e_ac: &CorrelatorEstimate,
    e_bc: &CorrelatorEstimate,
) -> InequalityReport {
    let lhs = (e_ab.value - e_ac.value - e_bc.value).abs();
    let se = (e_ab.stderr.powi(2) + e_ac.stderr.powi(2) + e_bc.stderr.powi(2)).sqrt();
    InequalityReport::new(lhs, 1.0, se)
}

/// `(a + b)·c − a·b`.
pub fn geometric_lhs(triple: &SettingTriple) -> f64 {
    let (a, b, c) = (triple.a, triple.b, triple.c);
    a.dot(&c) + b.dot(&c) - a.dot(&b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingDelta {
    pub setting: Setting,
    /// `E(x,x) − 1`.
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSymmetry {
    pub first: Setting,
    pub second: Setting,
    /// `E(n,m) − E(m,n)`.
    pub antisym: f64,
    pub antisym_stderr: f64,
    /// `(E(n,m) + E(m,n))/2`.
    pub sym: f64,
    pub sym_stderr: f64,
}

/// Departures from perfect correlation and from symmetry of the correlators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDiagnostics {
    pub deltas: Vec<SettingDelta>,
    pub pairs: Vec<PairSymmetry>,
    pub delta_max: f64,
}

impl NoiseDiagnostics {
    pub fn delta(&self, s: Setting) -> &SettingDelta {
        &self.deltas[s.index()]
    }

    fn pair(&self, n: Setting, m: Setting) -> Option<(&PairSymmetry, f64)> {
        self.pairs.iter().find_map(|p| {
            if (p.first, p.second) == (n, m) {
                Some((p, 1.0))
            } else if (p.first, p.second) == (m, n) {
                Some((p, -1.0))
            } else {
                None
            }
        })
    }

    /// Symmetric part; `sym(n,m) == sym(m,n)`. `None` for `n == m`.
    pub fn sym(&self, n: Setting, m: Setting) -> Option<f64> {
        self.pair(n, m).map(|(p, _)| p.sym)
    }

    /// Antisymmetric part `E(n,m) − E(m,n)`. `None` for `n == m`.
    pub fn antisym(&self, n: Setting, m: Setting) -> Option<f64> {
        self.pair(n, m).map(|(p, sign)| sign * p.antisym)
    }

    /// Mean of the three `E(x,x) − 1` and its standard error.
    pub fn mean_delta(&self) -> (f64, f64) {
        let k = self.deltas.len() as f64;
        let mean = self.deltas.iter().map(|d| d.value).sum::<f64>() / k;
        let se = self.deltas.iter().map(|d| d.stderr * d.stderr).sum::<f64>().sqrt() / k;
        (mean, se)
    }
}

pub fn noise_diagnostics(t: &Tally) -> Result<NoiseDiagnostics> {
    ConditionalTable::from_tally(t).noise_diagnostics()
}

pub fn symmetrized_inequality(t: &Tally) -> Result<InequalityReport> {
    ConditionalTable::from_tally(t).symmetrized()
}

/// Largest δ for which a maximal violation survives a `2δ` degradation.
pub const DELTA_THRESHOLD: f64 = (std::f64::consts::SQRT_2 - 1.0) / 2.0;

/// Whether `2δ < √2 − 1`.
pub fn delta_feasibility(delta: f64) -> bool {
    2.0 * delta < std::f64::consts::SQRT_2 - 1.0
}
