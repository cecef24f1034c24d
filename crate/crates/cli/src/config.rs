//! Parsing of vectors, weights and triples given on the command line.

use std::hash::{BuildHasher, Hasher};

use log::warn;
use tbell_core::{Direction, RealityDist, SettingTriple};

use crate::error::{CliError, Result};

/// Seed used when neither `--seed` nor `--entropy` is given.
pub const DEFAULT_SEED: u64 = 0x7be1_1000;

/// Renormalizing an input vector by more than this is logged.
pub const RENORMALIZATION_WARNING: f64 = 1e-6;

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            let v: f64 = t
                .parse()
                .map_err(|_| CliError::Config(format!("{what}: cannot parse {t:?} as a number")))?;
            if !v.is_finite() {
                return Err(CliError::Config(format!("{what}: {t:?} is not finite")));
            }
            Ok(v)
        })
        .collect()
}

/// `"x,y,z"` as a unit direction.
pub fn parse_direction(text: &str, what: &str) -> Result<Direction> {
    let v = parse_floats(text, what)?;
    let [x, y, z] = v[..] else {
        return Err(CliError::Config(format!("{what}: expected 3 components, got {}", v.len())));
    };
    let norm = (x * x + y * y + z * z).sqrt();
    let d = Direction::new(x, y, z).map_err(|e| CliError::Config(format!("{what}: {e}")))?;
    if (norm - 1.0).abs() > RENORMALIZATION_WARNING {
        warn!("{what}: renormalized ({x}, {y}, {z}) with norm {norm}");
    }
    Ok(d)
}

/// `"ax,ay,az:bx,by,bz:cx,cy,cz"`.
pub fn parse_triple(text: &str) -> Result<SettingTriple> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, c] = parts[..] else {
        return Err(CliError::Config(format!(
            "triple: expected 3 colon-separated vectors, got {}",
            parts.len()
        )));
    };
    let triple = SettingTriple::new(
        parse_direction(a, "triple a")?,
        parse_direction(b, "triple b")?,
        parse_direction(c, "triple c")?,
    );
    if triple.is_degenerate() {
        warn!("triple has coincident or opposite settings");
    }
    Ok(triple)
}

/// Eight comma-separated weights in the order `+++, ++-, +-+, +--, -++, -+-, --+, ---`.
pub fn parse_weights(text: &str) -> Result<RealityDist> {
    let v = parse_floats(text, "weights")?;
    let w: [f64; 8] = v
        .as_slice()
        .try_into()
        .map_err(|_| CliError::Config(format!("weights: expected 8 values, got {}", v.len())))?;
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > RENORMALIZATION_WARNING && sum > 0.0 {
        warn!("weights: renormalized from total {sum}");
    }
    RealityDist::new(w).map_err(|e| CliError::Config(format!("weights: {e}")))
}

/// Comma-separated list of flip probabilities.
pub fn parse_etas(text: &str) -> Result<Vec<f64>> {
    let v = parse_floats(text, "eta")?;
    if let Some(bad) = v.iter().find(|e| !(0.0..=0.5).contains(*e)) {
        return Err(CliError::Config(format!("eta: {bad} outside [0, 0.5]")));
    }
    Ok(v)
}

/// Seed from the flags: explicit, fresh entropy, or the fixed default.
pub fn resolve_seed(seed: Option<u64>, entropy: bool) -> Result<u64> {
    match (seed, entropy) {
        (Some(_), true) => Err(CliError::Config("--seed and --entropy are mutually exclusive".into())),
        (Some(s), false) => Ok(s),
        (None, true) => Ok(std::collections::hash_map::RandomState::new().build_hasher().finish()),
        (None, false) => Ok(DEFAULT_SEED),
    }
}
