//! Geometric and protocol-level value types shared by the models and the
//! analysis: measurement directions, the three setting labels, dichotomic
//! outcomes and the record of a single throw.

use std::fmt;
use std::ops::Neg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the norm of a constructed [`Direction`].
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Unit vector on the Bloch sphere. Always normalized on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    x: f64,
    y: f64,
    z: f64,
}

impl Direction {
    pub const X: Direction = Direction { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Direction = Direction { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Direction = Direction { x: 0.0, y: 0.0, z: 1.0 };

    /// Normalizes `(x, y, z)`. Fails on the zero vector and on non-finite input.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidDirection(x, y, z));
        }
        Ok(Direction {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }

    /// Unit vector at polar angle `theta` and azimuth `phi` (radians).
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Direction {
            x: st * cp,
            y: st * sp,
            z: ct,
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        norm3(self.to_array())
    }

    /// Dot product clamped to `[-1, 1]`; exactly 1 for identical directions.
    pub fn dot(&self, other: &Direction) -> f64 {
        if self == other {
            return 1.0;
        }
        dot3(self.to_array(), other.to_array()).clamp(-1.0, 1.0)
    }

    /// Some unit vector orthogonal to `self`. Deterministic.
    pub fn orthogonal(&self) -> Direction {
        // cross with the coordinate axis least aligned with self
        let v = self.to_array();
        let axis = if v[0].abs() <= v[1].abs() && v[0].abs() <= v[2].abs() {
            [1.0, 0.0, 0.0]
        } else if v[1].abs() <= v[2].abs() {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let c = cross3(v, axis);
        Direction::from_array(c).expect("cross product with least-aligned axis is nonzero")
    }

    pub fn cross(&self, other: &Direction) -> [f64; 3] {
        cross3(self.to_array(), other.to_array())
    }
}

impl Neg for Direction {
    type Output = Direction;

    fn neg(self) -> Direction {
        Direction {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

impl Serialize for Direction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 3]>::deserialize(deserializer)?;
        Direction::from_array(v).map_err(serde::de::Error::custom)
    }
}

pub fn unit_vector(x: f64, y: f64, z: f64) -> Result<Direction> {
    Direction::new(x, y, z)
}

pub fn dot(u: &Direction, v: &Direction) -> f64 {
    u.dot(v)
}

pub(crate) fn dot3(u: [f64; 3], v: [f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

pub(crate) fn norm3(u: [f64; 3]) -> f64 {
    dot3(u, u).sqrt()
}

pub(crate) fn cross3(u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

/// One of the three external parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    A,
    B,
    C,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::A, Setting::B, Setting::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Setting> {
        Self::ALL.get(i).copied()
    }

    /// All nine ordered pairs, repeats included, in row-major order.
    pub fn ordered_pairs() -> impl Iterator<Item = (Setting, Setting)> {
        Self::ALL
            .into_iter()
            .flat_map(|s1| Self::ALL.into_iter().map(move |s2| (s1, s2)))
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Setting::A => "A",
            Setting::B => "B",
            Setting::C => "C",
        };
        f.write_str(s)
    }
}

/// Dichotomic measurement result, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i64 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn sign(self) -> f64 {
        self.value() as f64
    }

    /// 0 for `+1`, 1 for `-1`.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn flipped(self) -> Outcome {
        -self
    }
}

impl Neg for Outcome {
    type Output = Outcome;

    fn neg(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl TryFrom<i64> for Outcome {
    type Error = String;

    fn try_from(v: i64) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(format!("outcome must be 1 or -1, got {other}")),
        }
    }
}

impl From<Outcome> for i64 {
    fn from(o: Outcome) -> i64 {
        o.value()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+",
            Outcome::Minus => "-",
        })
    }
}

/// The directions assigned to settings A, B and C. Degenerate triples
/// (repeated or antipodal directions) are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingTriple {
    pub a: Direction,
    pub b: Direction,
    pub c: Direction,
}

impl SettingTriple {
    pub fn new(a: Direction, b: Direction, c: Direction) -> Self {
        SettingTriple { a, b, c }
    }

    /// a = x, b = y, c = (x + y)/√2.
    pub fn canonical_optimal() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        SettingTriple {
            a: Direction::X,
            b: Direction::Y,
            c: Direction { x: h, y: h, z: 0.0 },
        }
    }

    pub fn direction(&self, s: Setting) -> Direction {
        match s {
            Setting::A => self.a,
            Setting::B => self.b,
            Setting::C => self.c,
        }
    }

    /// True when two of the directions coincide or are antipodal.
    pub fn is_degenerate(&self) -> bool {
        const EPS: f64 = 1e-12;
        [(self.a, self.b), (self.a, self.c), (self.b, self.c)]
            .iter()
            .any(|(u, v)| 1.0 - u.dot(v).abs() < EPS)
    }

    pub fn to_arrays(&self) -> [[f64; 3]; 3] {
        [self.a.to_array(), self.b.to_array(), self.c.to_array()]
    }
}

/// One throw: two consecutive measurements at independently chosen settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThrowRecord {
    pub throw_id: u64,
    pub first_setting: Setting,
    pub first_outcome: Outcome,
    pub second_setting: Setting,
    pub second_outcome: Outcome,
}

impl ThrowRecord {
    pub fn is_same_setting(&self) -> bool {
        self.first_setting == self.second_setting
    }

    /// Product of the two outcomes as ±1.
    pub fn product(&self) -> i64 {
        self.first_outcome.value() * self.second_outcome.value()
    }
}
