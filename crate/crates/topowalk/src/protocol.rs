//! Protocol descriptions shared by every analysis: walk families, rotation
//! angles and their linear relations, step counts, momenta, inhomogeneity
//! profiles, and the tolerance bundle.
//!
//! Angles are radians throughout. Momentum components live in the first
//! Brillouin zone `[-pi, pi]`; constructors wrap values into the zone.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// The four implemented walk protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Simple1d,
    Split1d,
    Simple2d,
    Split2d,
}

impl Family {
    pub fn dimension(&self) -> usize {
        match self {
            Family::Simple1d | Family::Split1d => 1,
            Family::Simple2d | Family::Split2d => 2,
        }
    }

    pub fn is_split(&self) -> bool {
        matches!(self, Family::Split1d | Family::Split2d)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Family::Simple1d => "simple1d",
            Family::Split1d => "split1d",
            Family::Simple2d => "simple2d",
            Family::Split2d => "split2d",
        }
    }

    pub const ALL: [Family; 4] = [
        Family::Simple1d,
        Family::Split1d,
        Family::Simple2d,
        Family::Split2d,
    ];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simple1d" => Ok(Family::Simple1d),
            "split1d" => Ok(Family::Split1d),
            "simple2d" => Ok(Family::Simple2d),
            "split2d" => Ok(Family::Split2d),
            other => Err(format!(
                "unknown family `{other}` (expected simple1d|split1d|simple2d|split2d)"
            )),
        }
    }
}

/// Linear tie between the two split-protocol angles: `beta = slope * alpha + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleRelation {
    pub slope: f64,
    pub intercept: f64,
}

impl AngleRelation {
    pub fn new(slope: f64, intercept: f64) -> Self {
        assert!(slope.is_finite() && intercept.is_finite());
        AngleRelation { slope, intercept }
    }

    pub fn beta_for(&self, alpha: f64) -> f64 {
        self.slope * alpha + self.intercept
    }

    /// `beta = (alpha + pi)/3`, the relation used for the cell-structure runs.
    pub fn third_shifted() -> Self {
        AngleRelation::new(1.0 / 3.0, PI / 3.0)
    }
}

/// A walk protocol together with its rotation angles.
///
/// When a split variant carries a relation, the stored `beta` is ignored and
/// recomputed from `alpha` on every read, so sweeps that move `alpha` stay
/// consistent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProtocolSpec {
    Simple1d {
        theta: f64,
    },
    Split1d {
        alpha: f64,
        beta: f64,
        relation: Option<AngleRelation>,
    },
    Simple2d {
        theta: f64,
    },
    Split2d {
        alpha: f64,
        beta: f64,
        relation: Option<AngleRelation>,
    },
}

impl ProtocolSpec {
    pub fn simple_1d(theta: f64) -> Self {
        ProtocolSpec::Simple1d { theta }
    }

    pub fn split_1d(alpha: f64, beta: f64) -> Self {
        ProtocolSpec::Split1d {
            alpha,
            beta,
            relation: None,
        }
    }

    pub fn split_1d_related(alpha: f64, relation: AngleRelation) -> Self {
        ProtocolSpec::Split1d {
            alpha,
            beta: relation.beta_for(alpha),
            relation: Some(relation),
        }
    }

    pub fn simple_2d(theta: f64) -> Self {
        ProtocolSpec::Simple2d { theta }
    }

    pub fn split_2d(alpha: f64, beta: f64) -> Self {
        ProtocolSpec::Split2d {
            alpha,
            beta,
            relation: None,
        }
    }

    pub fn split_2d_related(alpha: f64, relation: AngleRelation) -> Self {
        ProtocolSpec::Split2d {
            alpha,
            beta: relation.beta_for(alpha),
            relation: Some(relation),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ProtocolSpec::Simple1d { .. } => Family::Simple1d,
            ProtocolSpec::Split1d { .. } => Family::Split1d,
            ProtocolSpec::Simple2d { .. } => Family::Simple2d,
            ProtocolSpec::Split2d { .. } => Family::Split2d,
        }
    }

    pub fn dimension(&self) -> usize {
        self.family().dimension()
    }

    /// The swept angle: theta for simple protocols, alpha for split ones.
    pub fn primary_angle(&self) -> f64 {
        match self {
            ProtocolSpec::Simple1d { theta } | ProtocolSpec::Simple2d { theta } => *theta,
            ProtocolSpec::Split1d { alpha, .. } | ProtocolSpec::Split2d { alpha, .. } => *alpha,
        }
    }

    /// Second coin angle with any relation applied; `None` for simple protocols.
    pub fn effective_beta(&self) -> Option<f64> {
        match self {
            ProtocolSpec::Simple1d { .. } | ProtocolSpec::Simple2d { .. } => None,
            ProtocolSpec::Split1d {
                alpha,
                beta,
                relation,
            }
            | ProtocolSpec::Split2d {
                alpha,
                beta,
                relation,
            } => Some(relation.map_or(*beta, |r| r.beta_for(*alpha))),
        }
    }

    /// Same protocol with the primary angle replaced (relation re-applied on read).
    pub fn with_primary_angle(&self, angle: f64) -> Self {
        let mut next = *self;
        match &mut next {
            ProtocolSpec::Simple1d { theta } | ProtocolSpec::Simple2d { theta } => *theta = angle,
            ProtocolSpec::Split1d { alpha, .. } | ProtocolSpec::Split2d { alpha, .. } => {
                *alpha = angle
            }
        }
        next
    }

    /// Step-scaled half angles `(T a / 2, T b / 2)` entering the coins.
    pub fn half_angles(&self, t: StepIndex) -> (f64, Option<f64>) {
        let scale = 0.5 * f64::from(t.get());
        (
            scale * self.primary_angle(),
            self.effective_beta().map(|b| scale * b),
        )
    }

    pub fn angles_finite(&self) -> bool {
        self.primary_angle().is_finite() && self.effective_beta().is_none_or(f64::is_finite)
    }
}

/// Number of steps; the coin angles scale linearly with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StepIndex(u32);

impl StepIndex {
    pub fn new(t: u32) -> Option<Self> {
        (t >= 1).then_some(StepIndex(t))
    }

    pub fn get(&self) -> u32 {
        self.0
    }
}

impl fmt::Display for StepIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Step count 1; handy default.
pub const T1: StepIndex = StepIndex(1);

impl TryFrom<u32> for StepIndex {
    type Error = String;
    fn try_from(t: u32) -> Result<Self, Self::Error> {
        StepIndex::new(t).ok_or_else(|| "step count must be at least 1".to_string())
    }
}

/// Wrap a momentum component into `[-pi, pi]`, keeping the endpoints.
pub fn wrap_momentum(k: f64) -> f64 {
    if (-PI..=PI).contains(&k) {
        return k;
    }
    let w = (k + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid maps +pi to -pi; fold it back so endpoint grids stay intact.
    if w == -PI && k > 0.0 {
        PI
    } else {
        w
    }
}

/// A point of the first Brillouin zone; `ky` is absent for 1D protocols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    pub kx: f64,
    pub ky: Option<f64>,
}

impl Momentum {
    pub fn one(kx: f64) -> Self {
        Momentum {
            kx: wrap_momentum(kx),
            ky: None,
        }
    }

    pub fn two(kx: f64, ky: f64) -> Self {
        Momentum {
            kx: wrap_momentum(kx),
            ky: Some(wrap_momentum(ky)),
        }
    }

    pub fn is_2d(&self) -> bool {
        self.ky.is_some()
    }

    pub fn dimension(&self) -> usize {
        if self.is_2d() {
            2
        } else {
            1
        }
    }

    /// The reflected point `-k`, wrapped back into the zone.
    pub fn reflected(&self) -> Self {
        Momentum {
            kx: wrap_momentum(-self.kx),
            ky: self.ky.map(|k| wrap_momentum(-k)),
        }
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ky {
            Some(ky) => write!(f, "({:.6}, {:.6})", self.kx, ky),
            None => write!(f, "{:.6}", self.kx),
        }
    }
}

/// Position-dependent coin profile `alpha(x) = alpha1 * tanh(x / width)`,
/// with the second angle tied to the first through `beta_relation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneousProfile {
    pub alpha1: f64,
    pub width: f64,
    pub beta_relation: AngleRelation,
}

impl InhomogeneousProfile {
    pub fn new(alpha1: f64) -> Self {
        InhomogeneousProfile {
            alpha1,
            width: 3.0,
            beta_relation: AngleRelation::third_shifted(),
        }
    }

    pub fn with_width(mut self, width: f64) -> Self {
        assert!(width > 0.0, "profile width must be positive");
        self.width = width;
        self
    }

    pub fn with_relation(mut self, relation: AngleRelation) -> Self {
        self.beta_relation = relation;
        self
    }

    /// Local coin angles at signed position `x`.
    pub fn angles_at(&self, x: f64) -> (f64, f64) {
        let alpha = self.alpha1 * (x / self.width).tanh();
        (alpha, self.beta_relation.beta_for(alpha))
    }

    /// Homogeneous protocol with the angles frozen at position `x`.
    pub fn frozen_at(&self, x: f64) -> ProtocolSpec {
        let (alpha, beta) = self.angles_at(x);
        ProtocolSpec::split_1d(alpha, beta)
    }
}

/// Numerical thresholds used across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `|sin E|` below this marks a gapless point (Bloch vector ill-defined).
    pub gap_eps: f64,
    /// Trigonometric factors below this count as exactly zero when
    /// classifying flat bands.
    pub flat_eps: f64,
    /// Allowed deviation from unitarity for protocol products.
    pub unitarity_eps: f64,
    /// Distance to the nearest integer accepted when quantizing invariants.
    pub invariant_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gap_eps: 1e-9,
            flat_eps: 1e-9,
            unitarity_eps: 1e-12,
            invariant_eps: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("gap_eps", self.gap_eps),
            ("flat_eps", self.flat_eps),
            ("unitarity_eps", self.unitarity_eps),
            ("invariant_eps", self.invariant_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("tolerance {name} must be strictly positive"));
            }
        }
        Ok(())
    }
}

/// Endpoint-inclusive uniform grid over `[-pi, pi]`.
pub fn brillouin_grid(samples: usize) -> Vec<f64> {
    assert!(samples >= 2, "a momentum grid needs at least two samples");
    let step = 2.0 * PI / (samples as f64 - 1.0);
    (0..samples).map(|i| -PI + step * i as f64).collect()
}
