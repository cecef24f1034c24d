//! EPR-realist model. Each system carries one of eight reality types
//! `(a^α b^β c^γ)`, fixing the result of a measurement at every setting.
//! Perfect correlation means a throw reads both of its outcomes from the
//! same reality.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Outcome, Setting, SettingTriple, ThrowRecord};
use crate::error::{Error, Result};
use crate::rng::categorical;

/// Predetermined outcomes at settings A, B, C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RealityType {
    pub alpha: Outcome,
    pub beta: Outcome,
    pub gamma: Outcome,
}

impl RealityType {
    /// All eight types ordered `+++, ++-, +-+, +--, -++, -+-, --+, ---`.
    pub fn all() -> [RealityType; 8] {
        std::array::from_fn(Self::from_index)
    }

    pub fn from_index(i: usize) -> RealityType {
        assert!(i < 8, "reality index {i} out of range");
        let bit = |k: usize| if (i >> k) & 1 == 0 { Outcome::Plus } else { Outcome::Minus };
        RealityType {
            alpha: bit(2),
            beta: bit(1),
            gamma: bit(0),
        }
    }

    pub fn index(&self) -> usize {
        self.alpha.index() * 4 + self.beta.index() * 2 + self.gamma.index()
    }

    pub fn outcome(&self, s: Setting) -> Outcome {
        match s {
            Setting::A => self.alpha,
            Setting::B => self.beta,
            Setting::C => self.gamma,
        }
    }

    /// Sign label such as `+-+`.
    pub fn label(&self) -> String {
        format!("{}{}{}", self.alpha, self.beta, self.gamma)
    }
}

impl fmt::Display for RealityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a{}b{}c{})", self.alpha, self.beta, self.gamma)
    }
}

/// Normalized frequencies of the eight reality types, indexed as in
/// [`RealityType::all`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 8]", into = "[f64; 8]")]
pub struct RealityDist {
    weights: [f64; 8],
}

impl RealityDist {
    /// Accepts raw counts or frequencies and normalizes them.
    pub fn new(weights: [f64; 8]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weights must be finite and non-negative: {weights:?}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(RealityDist {
            weights: weights.map(|w| w / total),
        })
    }

    pub fn uniform() -> Self {
        RealityDist { weights: [0.125; 8] }
    }

    pub fn point_mass(r: RealityType) -> Self {
        let mut weights = [0.0; 8];
        weights[r.index()] = 1.0;
        RealityDist { weights }
    }

    /// Uniform draw from the probability simplex.
    pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let raw: [f64; 8] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
        RealityDist::new(raw).expect("exponential draws are positive")
    }

    pub fn weights(&self) -> &[f64; 8] {
        &self.weights
    }

    pub fn weight(&self, r: RealityType) -> f64 {
        self.weights[r.index()]
    }

    /// Total weight of types with outcome `alpha` at `s`.
    pub fn single_marginal(&self, s: Setting, alpha: Outcome) -> f64 {
        RealityType::all()
            .iter()
            .filter(|r| r.outcome(s) == alpha)
            .map(|r| self.weight(*r))
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RealityType {
        RealityType::from_index(categorical(rng, &self.weights))
    }
}

impl TryFrom<[f64; 8]> for RealityDist {
    type Error = Error;

    fn try_from(w: [f64; 8]) -> Result<Self> {
        RealityDist::new(w)
    }
}

impl From<RealityDist> for [f64; 8] {
    fn from(d: RealityDist) -> [f64; 8] {
        d.weights
    }
}

/// Normalized `N(s1^α s2^β)`.
pub fn pair_marginal(
    dist: &RealityDist,
    s1: Setting,
    alpha: Outcome,
    s2: Setting,
    beta: Outcome,
) -> Result<f64> {
    if s1 == s2 {
        return Err(Error::InvalidMarginal(s1));
    }
    Ok(RealityType::all()
        .iter()
        .filter(|r| r.outcome(s1) == alpha && r.outcome(s2) == beta)
        .map(|r| dist.weight(*r))
        .sum())
}

fn marginal(dist: &RealityDist, s1: Setting, alpha: Outcome, s2: Setting, beta: Outcome) -> f64 {
    pair_marginal(dist, s1, alpha, s2, beta).expect("distinct settings")
}

/// `N(a⁺c⁻) + N(b⁻c⁺) − N(a⁺b⁻)`, non-negative for every distribution.
pub fn counting_lemma_margin(dist: &RealityDist) -> f64 {
    use Outcome::{Minus, Plus};
    use Setting::{A, B, C};
    marginal(dist, A, Plus, C, Minus) + marginal(dist, B, Minus, C, Plus)
        - marginal(dist, A, Plus, B, Minus)
}

/// One relabelling of the counting lemma:
/// `N(x^σ z^ρ) + N(y^τ z^−ρ) − N(x^σ y^τ) ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountingForm {
    pub x: Setting,
    pub y: Setting,
    pub z: Setting,
    pub sigma: Outcome,
    pub tau: Outcome,
    pub rho: Outcome,
}

impl CountingForm {
    /// All 6 setting orderings times all 8 sign assignments.
    pub fn all() -> Vec<CountingForm> {
        let mut out = Vec::with_capacity(48);
        for (x, y, z) in setting_permutations() {
            for sigma in Outcome::BOTH {
                for tau in Outcome::BOTH {
                    for rho in Outcome::BOTH {
                        out.push(CountingForm { x, y, z, sigma, tau, rho });
                    }
                }
            }
        }
        out
    }

    pub fn margin(&self, dist: &RealityDist) -> f64 {
        marginal(dist, self.x, self.sigma, self.z, self.rho)
            + marginal(dist, self.y, self.tau, self.z, -self.rho)
            - marginal(dist, self.x, self.sigma, self.y, self.tau)
    }
}

pub(crate) fn setting_permutations() -> [(Setting, Setting, Setting); 6] {
    use Setting::{A, B, C};
    [(A, B, C), (A, C, B), (B, A, C), (B, C, A), (C, A, B), (C, B, A)]
}

/// Conditional probability of the throw `[s1^α, s2^β]` given that the
/// ordered pair `(s1, s2)` was chosen.
pub fn conditional_throw_probability(
    dist: &RealityDist,
    s1: Setting,
    alpha: Outcome,
    s2: Setting,
    beta: Outcome,
) -> f64 {
    if s1 == s2 {
        if alpha == beta {
            dist.single_marginal(s1, alpha)
        } else {
            0.0
        }
    } else {
        marginal(dist, s1, alpha, s2, beta)
    }
}

/// Probability of the throw `[s1^α, s2^β]` when the ordered pair is chosen
/// uniformly among the nine.
pub fn exact_throw_probability(
    dist: &RealityDist,
    s1: Setting,
    alpha: Outcome,
    s2: Setting,
    beta: Outcome,
) -> f64 {
    conditional_throw_probability(dist, s1, alpha, s2, beta) / 9.0
}

/// Draws a reality and reads both outcomes from it.
pub fn sample_throw<R: Rng + ?Sized>(
    throw_id: u64,
    dist: &RealityDist,
    pair: (Setting, Setting),
    rng: &mut R,
) -> ThrowRecord {
    let reality = dist.sample(rng);
    ThrowRecord {
        throw_id,
        first_setting: pair.0,
        first_outcome: reality.outcome(pair.0),
        second_setting: pair.1,
        second_outcome: reality.outcome(pair.1),
    }
}

/// How the reality is replaced between the two measurements of a throw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Disturbance {
    /// The reality is kept.
    Identity,
    /// The reality is redrawn from a distribution chosen by the first
    /// setting and outcome. Index with [`Disturbance::slot`].
    Redraw { table: Vec<RealityDist> },
}

impl Disturbance {
    pub fn slot(s: Setting, alpha: Outcome) -> usize {
        s.index() * 2 + alpha.index()
    }

    /// Checks that each conditional distribution only weights realities
    /// agreeing with the first outcome at the first setting.
    pub fn redraw(table: Vec<RealityDist>) -> Result<Self> {
        if table.len() != 6 {
            return Err(Error::InvalidModel(format!(
                "disturbance table needs 6 entries (3 settings x 2 outcomes), got {}",
                table.len()
            )));
        }
        for s in Setting::ALL {
            for alpha in Outcome::BOTH {
                let d = &table[Self::slot(s, alpha)];
                let stray = d.single_marginal(s, -alpha);
                if stray > 1e-12 {
                    return Err(Error::InvalidModel(format!(
                        "disturbance after [{s}{alpha}] puts weight {stray} on realities with {s}{}",
                        -alpha
                    )));
                }
            }
        }
        Ok(Disturbance::Redraw { table })
    }

    /// Redraw rule that reproduces the qubit transition probabilities:
    /// after `α` at `x`, the reality at every other setting `y` is `β` with
    /// probability `(1 + αβ x·y)/2`, independently across settings.
    pub fn quantum_mimicking(triple: &SettingTriple) -> Self {
        let mut table = Vec::with_capacity(6);
        for s in Setting::ALL {
            for alpha in Outcome::BOTH {
                let x = triple.direction(s);
                let weights = RealityType::all().map(|r| {
                    Setting::ALL
                        .iter()
                        .map(|&t| {
                            if t == s {
                                if r.outcome(t) == alpha { 1.0 } else { 0.0 }
                            } else {
                                let y = triple.direction(t);
                                (1.0 + alpha.sign() * r.outcome(t).sign() * x.dot(&y)) / 2.0
                            }
                        })
                        .product()
                });
                table.push(RealityDist::new(weights).expect("product weights are normalizable"));
            }
        }
        Disturbance::redraw(table).expect("consistent by construction")
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Disturbance::Identity => Ok(()),
            Disturbance::Redraw { table } => Disturbance::redraw(table.clone()).map(|_| ()),
        }
    }
}

/// Like [`sample_throw`], but the reality is redrawn per `disturb` after the
/// first readout.
pub fn invasive_sample_throw<R: Rng + ?Sized>(
    throw_id: u64,
    dist: &RealityDist,
    disturb: &Disturbance,
    pair: (Setting, Setting),
    rng: &mut R,
) -> ThrowRecord {
    let reality = dist.sample(rng);
    let first_outcome = reality.outcome(pair.0);
    let after = match disturb {
        Disturbance::Identity => reality,
        Disturbance::Redraw { table } => table[Disturbance::slot(pair.0, first_outcome)].sample(rng),
    };
    ThrowRecord {
        throw_id,
        first_setting: pair.0,
        first_outcome,
        second_setting: pair.1,
        second_outcome: after.outcome(pair.1),
    }
}

/// Conditional throw probability under the invasive model.
pub fn invasive_conditional_probability(
    dist: &RealityDist,
    disturb: &Disturbance,
    s1: Setting,
    alpha: Outcome,
    s2: Setting,
    beta: Outcome,
) -> f64 {
    match disturb {
        Disturbance::Identity => conditional_throw_probability(dist, s1, alpha, s2, beta),
        Disturbance::Redraw { table } => {
            dist.single_marginal(s1, alpha)
                * table[Disturbance::slot(s1, alpha)].single_marginal(s2, beta)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::throw_stream;
    use Outcome::{Minus, Plus};
    use Setting::{A, B};

    fn rt(a: Outcome, b: Outcome, c: Outcome) -> RealityType {
        RealityType { alpha: a, beta: b, gamma: c }
    }

    fn four_type_dist() -> RealityDist {
        let mut w = [0.0; 8];
        w[rt(Plus, Minus, Plus).index()] = 3.0;
        w[rt(Plus, Minus, Minus).index()] = 5.0;
        w[rt(Plus, Plus, Minus).index()] = 2.0;
        w[rt(Minus, Minus, Plus).index()] = 7.0;
        RealityDist::new(w).unwrap()
    }

    #[test]
    fn reality_indexing_roundtrips() {
        let all = RealityType::all();
        for (i, r) in all.iter().enumerate() {
            assert_eq!(r.index(), i);
        }
        assert_eq!(all[0].label(), "+++");
        assert_eq!(all[5].label(), "-+-");
        assert_eq!(all[7].label(), "---");
    }

    #[test]
    fn dist_normalizes_counts() {
        let d = RealityDist::new([1.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 4.0]).unwrap();
        assert_eq!(d.weights()[7], 0.5);
        assert!((d.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(RealityDist::new([0.0; 8]).is_err());
        assert!(RealityDist::new([1.0, -0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(RealityDist::new([f64::NAN, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn pair_marginal_examples() {
        let pm = RealityDist::point_mass(rt(Plus, Minus, Plus));
        assert_eq!(pair_marginal(&pm, A, Plus, B, Minus).unwrap(), 1.0);
        let u = RealityDist::uniform();
        for (s1, s2) in Setting::ordered_pairs().filter(|(x, y)| x != y) {
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    assert_eq!(pair_marginal(&u, s1, a, s2, b).unwrap(), 0.25);
                }
            }
        }
        let d = four_type_dist();
        assert!((pair_marginal(&d, A, Plus, B, Minus).unwrap() - 8.0 / 17.0).abs() < 1e-15);
        assert_eq!(pair_marginal(&d, B, Plus, B, Plus), Err(Error::InvalidMarginal(B)));
    }

    #[test]
    fn counting_lemma_examples() {
        assert_eq!(counting_lemma_margin(&RealityDist::uniform()), 0.25);
        let pm = RealityDist::point_mass(rt(Plus, Minus, Plus));
        assert_eq!(counting_lemma_margin(&pm), 0.0);
        assert!((counting_lemma_margin(&four_type_dist()) - 9.0 / 17.0).abs() < 1e-15);
    }

    #[test]
    fn counting_lemma_tight_over_point_masses() {
        // brute force: every point mass gives 0 or 1; the minimum is 0
        let margins: Vec<f64> = RealityType::all()
            .iter()
            .map(|r| counting_lemma_margin(&RealityDist::point_mass(*r)))
            .collect();
        assert!(margins.iter().all(|m| *m == 0.0 || *m == 1.0));
        assert_eq!(margins.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
    }

    #[test]
    fn throw_probability_examples() {
        let u = RealityDist::uniform();
        assert!((exact_throw_probability(&u, A, Plus, B, Minus) - 1.0 / 36.0).abs() < 1e-15);
        let d = four_type_dist();
        for s in Setting::ALL {
            assert_eq!(exact_throw_probability(&d, s, Plus, s, Minus), 0.0);
            assert_eq!(exact_throw_probability(&d, s, Minus, s, Plus), 0.0);
        }
        let mut total = 0.0;
        for (s1, s2) in Setting::ordered_pairs() {
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    total += exact_throw_probability(&d, s1, a, s2, b);
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_throws_read_the_reality() {
        let pm = RealityDist::point_mass(rt(Plus, Minus, Plus));
        let mut rng = throw_stream(1, 0);
        for i in 0..100 {
            let r = sample_throw(i, &pm, (A, B), &mut rng);
            assert_eq!((r.first_outcome, r.second_outcome), (Plus, Minus));
        }
    }

    #[test]
    fn same_setting_throws_agree() {
        let d = four_type_dist();
        let mut rng = throw_stream(2, 0);
        for i in 0..10_000 {
            let r = sample_throw(i, &d, (B, B), &mut rng);
            assert_eq!(r.first_outcome, r.second_outcome);
        }
    }

    #[test]
    fn disturbance_consistency_is_enforced() {
        let mut table = vec![RealityDist::uniform(); 6];
        assert!(matches!(Disturbance::redraw(table.clone()), Err(Error::InvalidModel(_))));
        for s in Setting::ALL {
            for a in Outcome::BOTH {
                let w = RealityType::all().map(|r| if r.outcome(s) == a { 1.0 } else { 0.0 });
                table[Disturbance::slot(s, a)] = RealityDist::new(w).unwrap();
            }
        }
        assert!(Disturbance::redraw(table.clone()).is_ok());
        table.pop();
        assert!(Disturbance::redraw(table).is_err());
    }

    #[test]
    fn identity_disturbance_matches_plain_sampling() {
        let d = four_type_dist();
        for (i, pair) in Setting::ordered_pairs().enumerate() {
            let mut r1 = throw_stream(5, i as u64);
            let mut r2 = throw_stream(5, i as u64);
            for k in 0..200 {
                assert_eq!(
                    sample_throw(k, &d, pair, &mut r1),
                    invasive_sample_throw(k, &d, &Disturbance::Identity, pair, &mut r2)
                );
            }
        }
    }

    #[test]
    fn quantum_mimicking_same_setting_still_correlated() {
        let dist = Disturbance::quantum_mimicking(&SettingTriple::canonical_optimal());
        let d = RealityDist::uniform();
        let mut rng = throw_stream(3, 0);
        for i in 0..5000 {
            for s in Setting::ALL {
                let r = invasive_sample_throw(i, &d, &dist, (s, s), &mut rng);
                assert_eq!(r.first_outcome, r.second_outcome);
            }
        }
        for s in Setting::ALL {
            assert_eq!(invasive_conditional_probability(&d, &dist, s, Plus, s, Minus), 0.0);
        }
    }
}
