//! Momentum-space analysis of the walk protocols.
//!
//! For each protocol the one-step unitary in momentum space is an ordered
//! product of diagonal shift phases and real coin rotations, the rightmost
//! factor acting first:
//!
//! - simple 1D:  `U(k)  = e^{i k sz} C(Ta/2)`
//! - split 1D:   `U(k)  = S_up C(Ta/2) S_down C(Tb/2)`
//! - simple 2D:  `U(k)  = e^{i ky sz} e^{i kx sz} C(Ta/2)`
//! - split 2D:   `U(k)  = e^{i ky sz} C(Ta/2) e^{i kx sz} C(Tb/2)`
//!
//! with `C(phi) = e^{-i phi sy}`, `S_up = diag(1, e^{-ik})`, and
//! `S_down = diag(e^{ik}, 1)`. Writing `U = cos E - i sin E (n . sigma)`
//! gives the band energy `E(k)` (positive branch in `[0, pi]`), the Bloch
//! vector `n(k)`, and the group velocity of the positive branch. The trace
//! of `U` is real for all four products, so `cos E = tr U / 2`.
//!
//! The Bloch vector is always extracted from the unitary itself; the
//! closed-form component expressions are kept in [`reference`] for
//! comparison only, since some printed variants fail the orthogonality
//! check against the chiral axis.

use crate::mat2::{self, ComplexAmplitude, Mat2, Spinor, IDENTITY};
use crate::protocol::{brillouin_grid, Family, Momentum, ProtocolSpec, StepIndex, Tolerances};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KspaceError {
    #[error("family {family} expects a {expected}D momentum, got {got}D")]
    DimensionMismatch {
        family: Family,
        expected: usize,
        got: usize,
    },
    #[error("operation `{op}` does not support family {family}")]
    UnsupportedFamily { family: Family, op: &'static str },
    #[error("momentum grid needs at least 2 samples, got {0}")]
    GridTooSmall(usize),
}

fn check_dimension(spec: &ProtocolSpec, k: &Momentum) -> Result<(), KspaceError> {
    let expected = spec.dimension();
    let got = k.dimension();
    if expected != got {
        return Err(KspaceError::DimensionMismatch {
            family: spec.family(),
            expected,
            got,
        });
    }
    Ok(())
}

/// Shift moving only the up component forward: `diag(1, e^{-ik})` in momentum space.
fn shift_up(k: f64) -> Mat2 {
    Mat2::new(
        ComplexAmplitude::new(1.0, 0.0),
        ComplexAmplitude::new(0.0, 0.0),
        ComplexAmplitude::new(0.0, 0.0),
        ComplexAmplitude::from_polar(1.0, -k),
    )
}

/// Shift moving only the down component backward: `diag(e^{ik}, 1)`.
fn shift_down(k: f64) -> Mat2 {
    Mat2::new(
        ComplexAmplitude::from_polar(1.0, k),
        ComplexAmplitude::new(0.0, 0.0),
        ComplexAmplitude::new(0.0, 0.0),
        ComplexAmplitude::new(1.0, 0.0),
    )
}

/// One-step unitary of the protocol at momentum `k`, coins frozen at step `t`.
pub fn step_unitary(
    spec: &ProtocolSpec,
    t: StepIndex,
    k: Momentum,
) -> Result<Mat2, KspaceError> {
    check_dimension(spec, &k)?;
    let (ha, hb) = spec.half_angles(t);
    let u = match spec.family() {
        Family::Simple1d => Mat2::phase_z(k.kx) * Mat2::rotation_y(ha),
        Family::Split1d => {
            shift_up(k.kx)
                * Mat2::rotation_y(ha)
                * shift_down(k.kx)
                * Mat2::rotation_y(hb.expect("split protocol carries a second angle"))
        }
        Family::Simple2d => {
            Mat2::phase_z(k.ky.unwrap()) * Mat2::phase_z(k.kx) * Mat2::rotation_y(ha)
        }
        Family::Split2d => {
            Mat2::phase_z(k.ky.unwrap())
                * Mat2::rotation_y(ha)
                * Mat2::phase_z(k.kx)
                * Mat2::rotation_y(hb.expect("split protocol carries a second angle"))
        }
    };
    Ok(u)
}

/// The dispersion argument `cos E(k)` in closed form.
///
/// Shapes: `amp cos(k) + offset` for the single-momentum protocols and
/// `amp_sum cos(kx+ky) - amp_diff cos(kx-ky)` for the split 2D one.
#[derive(Debug, Clone, Copy)]
pub(crate) enum BandShape {
    SingleCos { amp: f64, offset: f64 },
    DoubleCos { amp_sum: f64, amp_diff: f64 },
}

impl BandShape {
    pub(crate) fn cos_energy(&self, spec_family: Family, k: Momentum) -> f64 {
        match self {
            BandShape::SingleCos { amp, offset } => {
                let arg = match spec_family {
                    Family::Simple2d => k.kx + k.ky.expect("2D momentum"),
                    _ => k.kx,
                };
                amp * arg.cos() + offset
            }
            BandShape::DoubleCos { amp_sum, amp_diff } => {
                let ky = k.ky.expect("2D momentum");
                amp_sum * (k.kx + ky).cos() - amp_diff * (k.kx - ky).cos()
            }
        }
    }

    /// True when the dispersion is independent of momentum.
    pub(crate) fn is_flat(&self, eps: f64) -> bool {
        match self {
            BandShape::SingleCos { amp, .. } => amp.abs() < eps,
            BandShape::DoubleCos { amp_sum, amp_diff } => {
                amp_sum.abs() < eps && amp_diff.abs() < eps
            }
        }
    }
}

pub(crate) fn band_shape(spec: &ProtocolSpec, t: StepIndex) -> BandShape {
    let (ha, hb) = spec.half_angles(t);
    match spec.family() {
        Family::Simple1d | Family::Simple2d => BandShape::SingleCos {
            amp: ha.cos(),
            offset: 0.0,
        },
        Family::Split1d => BandShape::SingleCos {
            amp: ha.cos() * hb.unwrap().cos(),
            offset: -(ha.sin() * hb.unwrap().sin()),
        },
        Family::Split2d => BandShape::DoubleCos {
            amp_sum: ha.cos() * hb.unwrap().cos(),
            amp_diff: ha.sin() * hb.unwrap().sin(),
        },
    }
}

/// True when the protocol's bands are momentum-independent at step `t`.
pub fn has_flat_bands(spec: &ProtocolSpec, t: StepIndex, tol: &Tolerances) -> bool {
    band_shape(spec, t).is_flat(tol.flat_eps)
}

/// The two energy bands at one momentum; `e_minus = -e_plus` by tracelessness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPair {
    pub e_plus: f64,
    pub e_minus: f64,
}

impl BandPair {
    /// Distance of the positive branch to the nearest gap-closing energy (0 or pi).
    pub fn gap_distance(&self) -> f64 {
        self.e_plus.min(std::f64::consts::PI - self.e_plus)
    }
}

const COS_CLAMP_EPS: f64 = 1e-12;

fn arccos_clamped(c: f64) -> f64 {
    assert!(
        c.abs() <= 1.0 + COS_CLAMP_EPS,
        "dispersion argument {c} outside [-1, 1]: protocol product lost unitarity"
    );
    c.clamp(-1.0, 1.0).acos()
}

/// Closed-form band energies; agrees with the eigenphases of [`step_unitary`].
///
/// Panics if momentum dimensionality disagrees with the family; callers that
/// take user input should validate through [`step_unitary`] first.
pub fn dispersion(spec: &ProtocolSpec, t: StepIndex, k: Momentum) -> BandPair {
    assert_eq!(
        spec.dimension(),
        k.dimension(),
        "momentum dimensionality must match the protocol family"
    );
    let c = band_shape(spec, t).cos_energy(spec.family(), k);
    let e_plus = arccos_clamped(c);
    BandPair {
        e_plus,
        e_minus: -e_plus,
    }
}

/// Bloch vector of the effective two-band generator at one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlochVector {
    Defined { n: [f64; 3] },
    IllDefined,
}

impl BlochVector {
    pub fn as_array(&self) -> Option<[f64; 3]> {
        match self {
            BlochVector::Defined { n } => Some(*n),
            BlochVector::IllDefined => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, BlochVector::Defined { .. })
    }
}

/// Extract `(cos E, sin E, n)` from a protocol unitary, or `None` at gapless points.
fn solve_bloch(u: &Mat2, gap_eps: f64) -> (f64, f64, Option<[f64; 3]>) {
    let cos_e = 0.5 * u.trace().re;
    let sin_e = (1.0 - cos_e * cos_e).max(0.0).sqrt();
    if sin_e < gap_eps {
        return (cos_e, sin_e, None);
    }
    // U - cos E = -i sin E (n . sigma): multiply by i / sin E and read the
    // Pauli components off the Hermitian remainder.
    let m = *u - IDENTITY.scale(ComplexAmplitude::new(cos_e, 0.0));
    let p = m.scale(ComplexAmplitude::new(0.0, 1.0 / sin_e));
    let nx = 0.5 * (p.e[0][1].re + p.e[1][0].re);
    let ny = 0.5 * (p.e[1][0].im - p.e[0][1].im);
    let nz = 0.5 * (p.e[0][0].re - p.e[1][1].re);
    (cos_e, sin_e, Some([nx, ny, nz]))
}

/// Bloch vector `n(k)`, ill-defined exactly where `|sin E| < gap_eps`.
pub fn bloch_vector(
    spec: &ProtocolSpec,
    t: StepIndex,
    k: Momentum,
    tol: &Tolerances,
) -> BlochVector {
    let u = step_unitary(spec, t, k).expect("momentum dimensionality must match the family");
    match solve_bloch(&u, tol.gap_eps).2 {
        Some(n) => BlochVector::Defined { n },
        None => BlochVector::IllDefined,
    }
}

/// Group velocity of the positive energy branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityValue {
    Defined { vx: f64, vy: Option<f64> },
    IllDefined,
}

impl VelocityValue {
    pub fn vx(&self) -> Option<f64> {
        match self {
            VelocityValue::Defined { vx, .. } => Some(*vx),
            VelocityValue::IllDefined => None,
        }
    }
}

/// Closed-form group velocity of the positive branch; zero on flat bands,
/// ill-defined at all other gapless points.
pub fn group_velocity(
    spec: &ProtocolSpec,
    t: StepIndex,
    k: Momentum,
    tol: &Tolerances,
) -> VelocityValue {
    assert_eq!(spec.dimension(), k.dimension());
    let shape = band_shape(spec, t);
    let two_d = spec.dimension() == 2;
    if shape.is_flat(tol.flat_eps) {
        return VelocityValue::Defined {
            vx: 0.0,
            vy: two_d.then_some(0.0),
        };
    }
    let cos_e = shape.cos_energy(spec.family(), k);
    let sin_e = (1.0 - cos_e * cos_e).max(0.0).sqrt();
    if sin_e < tol.gap_eps {
        return VelocityValue::IllDefined;
    }
    match shape {
        BandShape::SingleCos { amp, .. } => {
            let arg = match spec.family() {
                Family::Simple2d => k.kx + k.ky.unwrap(),
                _ => k.kx,
            };
            let v = amp * arg.sin() / sin_e;
            VelocityValue::Defined {
                vx: v,
                vy: two_d.then_some(v),
            }
        }
        BandShape::DoubleCos { amp_sum, amp_diff } => {
            let ky = k.ky.unwrap();
            let s_plus = (k.kx + ky).sin();
            let s_minus = (k.kx - ky).sin();
            VelocityValue::Defined {
                vx: (amp_sum * s_plus - amp_diff * s_minus) / sin_e,
                vy: Some((amp_sum * s_plus + amp_diff * s_minus) / sin_e),
            }
        }
    }
}

/// Chiral axis and operator of a protocol with a momentum-independent
/// chiral symmetry.
#[derive(Debug, Clone, Copy)]
pub struct ChiralData {
    pub axis: [f64; 3],
    pub gamma_op: Mat2,
}

/// Internal: chiral axis for the three families that have one. The split 2D
/// protocol admits no constant axis perpendicular to `n(k)` for generic
/// angles, so it returns `None`.
pub(crate) fn chiral_axis(spec: &ProtocolSpec, t: StepIndex) -> Option<[f64; 3]> {
    let (ha, hb) = spec.half_angles(t);
    match spec.family() {
        Family::Simple1d | Family::Simple2d => Some([ha.cos(), 0.0, ha.sin()]),
        Family::Split1d => {
            let hb = hb.unwrap();
            Some([hb.cos(), 0.0, hb.sin()])
        }
        Family::Split2d => None,
    }
}

/// Chiral data for the 1D families. The axis is set by the first coin
/// applied in the protocol; the operator is `axis . sigma`.
pub fn chiral_data(spec: &ProtocolSpec, t: StepIndex) -> Result<ChiralData, KspaceError> {
    if spec.dimension() != 1 {
        return Err(KspaceError::UnsupportedFamily {
            family: spec.family(),
            op: "chiral_data",
        });
    }
    let axis = chiral_axis(spec, t).expect("1D families always carry a chiral axis");
    Ok(ChiralData {
        axis,
        gamma_op: Mat2::from_axis(axis),
    })
}

/// Largest residuals of the protocol's symmetry identities over a momentum grid.
///
/// With `H(k) = E(k) n(k) . sigma` and `G` the chiral operator:
/// chiral `G H(k) G + H(k)`, particle-hole `H*(k) + H(-k)`, time reversal
/// `G H*(k) G - H(-k)`, band parity `E(k) - E(-k)`, plus `|det U - 1|` and
/// the phase-sum check on the eigenvalue pair. Gapless samples are skipped
/// for the H-based identities. Chiral and time-reversal entries are `None`
/// for the split 2D family, which has no constant chiral axis.
#[derive(Debug, Clone, Copy)]
pub struct SymmetryReport {
    pub max_chiral_residual: Option<f64>,
    pub max_ph_residual: f64,
    pub max_tr_residual: Option<f64>,
    pub max_even_energy_residual: f64,
    pub max_det_deviation: f64,
    pub max_trace_residual: f64,
}

impl SymmetryReport {
    /// Largest residual across all checks that apply to the family.
    pub fn worst(&self) -> f64 {
        [
            self.max_chiral_residual.unwrap_or(0.0),
            self.max_ph_residual,
            self.max_tr_residual.unwrap_or(0.0),
            self.max_even_energy_residual,
            self.max_det_deviation,
            self.max_trace_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn hamiltonian_from(u: &Mat2, gap_eps: f64) -> Option<Mat2> {
    let (cos_e, _sin_e, n) = solve_bloch(u, gap_eps);
    let n = n?;
    let e = arccos_clamped(cos_e);
    Some(Mat2::from_axis([n[0] * e, n[1] * e, n[2] * e]))
}

/// Verify the symmetry identities numerically on a uniform grid
/// (`grid_size` points per momentum axis).
pub fn symmetry_report(
    spec: &ProtocolSpec,
    t: StepIndex,
    grid_size: usize,
    tol: &Tolerances,
) -> Result<SymmetryReport, KspaceError> {
    if grid_size < 2 {
        return Err(KspaceError::GridTooSmall(grid_size));
    }
    let axis = brillouin_grid(grid_size);
    let points: Vec<Momentum> = if spec.dimension() == 1 {
        axis.iter().map(|&k| Momentum::one(k)).collect()
    } else {
        axis.iter()
            .flat_map(|&kx| axis.iter().map(move |&ky| Momentum::two(kx, ky)))
            .collect()
    };
    let gamma = chiral_axis(spec, t).map(Mat2::from_axis);

    struct PointResiduals {
        chiral: f64,
        ph: f64,
        tr: f64,
        even_e: f64,
        det: f64,
        trace: f64,
    }

    let per_point: Vec<PointResiduals> = points
        .par_iter()
        .map(|&k| {
            let u = step_unitary(spec, t, k).expect("grid momenta match the family");
            let u_neg = step_unitary(spec, t, k.reflected()).expect("grid momenta match");
            let det = (u.det() - ComplexAmplitude::new(1.0, 0.0)).norm();
            let pair = mat2::eigendecompose(&u);
            let trace = (pair.values[0].arg() + pair.values[1].arg()).abs();
            let e_here = dispersion(spec, t, k).e_plus;
            let e_neg = dispersion(spec, t, k.reflected()).e_plus;
            let even_e = (e_here - e_neg).abs();

            let mut chiral = 0.0;
            let mut ph = 0.0;
            let mut tr = 0.0;
            if let (Some(h), Some(h_neg)) = (
                hamiltonian_from(&u, tol.gap_eps),
                hamiltonian_from(&u_neg, tol.gap_eps),
            ) {
                ph = (h.conj() + h_neg).norm();
                if let Some(g) = gamma {
                    chiral = (g * h * g + h).norm();
                    tr = (g * h.conj() * g - h_neg).norm();
                }
            }
            PointResiduals {
                chiral,
                ph,
                tr,
                even_e,
                det,
                trace,
            }
        })
        .collect();

    let fold_max = |f: fn(&PointResiduals) -> f64| per_point.iter().map(f).fold(0.0, f64::max);
    Ok(SymmetryReport {
        max_chiral_residual: gamma.map(|_| fold_max(|p| p.chiral)),
        max_ph_residual: fold_max(|p| p.ph),
        max_tr_residual: gamma.map(|_| fold_max(|p| p.tr)),
        max_even_energy_residual: fold_max(|p| p.even_e),
        max_det_deviation: fold_max(|p| p.det),
        max_trace_residual: fold_max(|p| p.trace),
    })
}

/// Summary statistics of the positive band over a momentum grid.
#[derive(Debug, Clone, Copy)]
pub struct BandStats {
    pub min_e_plus: f64,
    pub max_e_plus: f64,
    /// Smallest distance of the band to a gap-closing energy (0 or pi).
    pub min_gap_distance: f64,
    /// Band spread `max - min`; ~0 for flat bands.
    pub spread: f64,
}

/// Scan the positive band on a `samples`-per-axis grid.
pub fn band_statistics(spec: &ProtocolSpec, t: StepIndex, samples: usize) -> BandStats {
    let axis = brillouin_grid(samples.max(2));
    let points: Vec<Momentum> = if spec.dimension() == 1 {
        axis.iter().map(|&k| Momentum::one(k)).collect()
    } else {
        axis.iter()
            .flat_map(|&kx| axis.iter().map(move |&ky| Momentum::two(kx, ky)))
            .collect()
    };
    let mut min_e = f64::INFINITY;
    let mut max_e = f64::NEG_INFINITY;
    let mut min_gap = f64::INFINITY;
    for k in points {
        let bands = dispersion(spec, t, k);
        min_e = min_e.min(bands.e_plus);
        max_e = max_e.max(bands.e_plus);
        min_gap = min_gap.min(bands.gap_distance());
    }
    BandStats {
        min_e_plus: min_e,
        max_e_plus: max_e,
        min_gap_distance: min_gap,
        spread: max_e - min_e,
    }
}

/// Positive-branch eigenvector of the step unitary, paired with `e^{-i E+}`.
///
/// The eigenvalue ordering convention puts `e^{+i E+}` first, so the
/// positive-branch (energy `E+`) stationary state is the second pair.
pub fn positive_branch_state(
    spec: &ProtocolSpec,
    t: StepIndex,
    k: Momentum,
) -> Result<(ComplexAmplitude, Spinor), KspaceError> {
    let u = step_unitary(spec, t, k)?;
    let pair = mat2::eigendecompose(&u);
    Ok((pair.values[1], pair.vectors[1]))
}

/// Printed closed-form Bloch components, kept verbatim for comparison against
/// the unitary-derived vector. Several components disagree with the
/// derivation (and with `axis . n = 0`); see the tests pinning the deviations.
pub mod reference {
    use super::*;

    /// Closed-form Bloch vector candidates per family, unnormalized checks
    /// left to the caller. Returns `None` when `|sin E| < gap_eps`.
    pub fn printed_bloch(
        spec: &ProtocolSpec,
        t: StepIndex,
        k: Momentum,
        tol: &Tolerances,
    ) -> Option<[f64; 3]> {
        let (ha, hb) = spec.half_angles(t);
        let shape = band_shape(spec, t);
        let cos_e = shape.cos_energy(spec.family(), k);
        let sin_e = (1.0 - cos_e * cos_e).max(0.0).sqrt();
        if sin_e < tol.gap_eps {
            return None;
        }
        let n = match spec.family() {
            Family::Simple1d => {
                let (s, c) = (ha.sin(), ha.cos());
                [
                    c * k.kx.sin() / sin_e,
                    s * k.kx.cos() / sin_e,
                    -c * k.kx.sin() / sin_e,
                ]
            }
            Family::Split1d => {
                let hb = hb.unwrap();
                let (sa, ca) = (ha.sin(), ha.cos());
                let (sb, cb) = (hb.sin(), hb.cos());
                [
                    ca * sb * k.kx.sin() / sin_e,
                    (sa * cb + k.kx.cos() * ca * sb) / sin_e,
                    -(ca * cb * k.kx.sin()) / sin_e,
                ]
            }
            Family::Simple2d => {
                let kk = k.kx + k.ky.unwrap();
                let (s, c) = (ha.sin(), ha.cos());
                [
                    c * kk.sin() / sin_e,
                    s * kk.cos() / sin_e,
                    c * kk.sin() / sin_e,
                ]
            }
            Family::Split2d => {
                let hb = hb.unwrap();
                let ky = k.ky.unwrap();
                let (sa, ca) = (ha.sin(), ha.cos());
                let (sb, cb) = (hb.sin(), hb.cos());
                let (sp, sm) = ((k.kx + ky).sin(), (k.kx - ky).sin());
                let (cp, cm) = ((k.kx + ky).cos(), (k.kx - ky).cos());
                [
                    (sp * ca * sb - sm * sa * cb) / sin_e,
                    (cp * ca * sb + cm * sa * cb) / sin_e,
                    -(sp * ca * cb - sm * sa * sb) / sin_e,
                ]
            }
        };
        Some(n)
    }

    /// Componentwise deviation of the printed formulas from the
    /// unitary-derived Bloch vector.
    pub fn printed_bloch_deviation(
        spec: &ProtocolSpec,
        t: StepIndex,
        k: Momentum,
        tol: &Tolerances,
    ) -> Option<[f64; 3]> {
        let printed = printed_bloch(spec, t, k, tol)?;
        let derived = bloch_vector(spec, t, k, tol).as_array()?;
        Some([
            (printed[0] - derived[0]).abs(),
            (printed[1] - derived[1]).abs(),
            (printed[2] - derived[2]).abs(),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::AngleRelation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn t(n: u32) -> StepIndex {
        StepIndex::new(n).unwrap()
    }

    fn random_spec(rng: &mut ChaCha8Rng) -> (ProtocolSpec, Momentum) {
        let family = Family::ALL[rng.gen_range(0..4)];
        let spec = match family {
            Family::Simple1d => ProtocolSpec::simple_1d(rng.gen_range(0.0..2.0 * PI)),
            Family::Simple2d => ProtocolSpec::simple_2d(rng.gen_range(0.0..2.0 * PI)),
            Family::Split1d => {
                ProtocolSpec::split_1d(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI))
            }
            Family::Split2d => {
                ProtocolSpec::split_2d(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI))
            }
        };
        let k = if family.dimension() == 1 {
            Momentum::one(rng.gen_range(-PI..PI))
        } else {
            Momentum::two(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI))
        };
        (spec, k)
    }

    #[test]
    fn zero_rotation_at_zero_momentum_is_identity() {
        let u = step_unitary(&ProtocolSpec::simple_1d(0.0), t(1), Momentum::one(0.0)).unwrap();
        assert!(u.max_abs_diff(&IDENTITY) < 1e-15);
    }

    #[test]
    fn flat_coin_has_zero_trace_and_half_pi_bands() {
        // T=2, theta=pi/2 puts the coin at a quarter turn: bands pin to pi/2.
        let spec = ProtocolSpec::simple_1d(PI / 2.0);
        for k in [-2.0, 0.0, 0.7, PI] {
            let u = step_unitary(&spec, t(2), Momentum::one(k)).unwrap();
            assert!(u.trace().norm() < 1e-14);
            let bands = dispersion(&spec, t(2), Momentum::one(k));
            assert!((bands.e_plus - PI / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn split_with_zero_angles_reduces_to_free_shift() {
        let spec = ProtocolSpec::split_1d(0.0, 0.0);
        for k in [-1.2, 0.0, 0.4, 2.9] {
            let u = step_unitary(&spec, t(1), Momentum::one(k)).unwrap();
            assert!((u.trace().re - 2.0 * k.cos()).abs() < 1e-14);
            assert!(u.trace().im.abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let e = step_unitary(&ProtocolSpec::simple_1d(0.3), t(1), Momentum::two(0.1, 0.2));
        assert!(matches!(e, Err(KspaceError::DimensionMismatch { .. })));
        let e = step_unitary(&ProtocolSpec::simple_2d(0.3), t(1), Momentum::one(0.1));
        assert!(matches!(e, Err(KspaceError::DimensionMismatch { .. })));
    }

    #[test]
    fn unitarity_of_random_protocols() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let (spec, k) = random_spec(&mut rng);
            let tt = t(rng.gen_range(1..=12));
            let u = step_unitary(&spec, tt, k).unwrap();
            assert!(u.is_unitary(1e-13));
            assert!((u.det() - ComplexAmplitude::new(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn dispersion_matches_eigenphases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let (spec, k) = random_spec(&mut rng);
            let tt = t(rng.gen_range(1..=12));
            let bands = dispersion(&spec, tt, k);
            let u = step_unitary(&spec, tt, k).unwrap();
            let pair = mat2::eigendecompose(&u);
            let eig_e = pair.values[0].arg();
            assert!(
                (bands.e_plus - eig_e).abs() < 1e-10,
                "closed form {} vs eigenphase {} for {:?}",
                bands.e_plus,
                eig_e,
                spec
            );
        }
    }

    #[test]
    fn known_dispersion_values() {
        // Identity coin: E = |k|.
        let bands = dispersion(&ProtocolSpec::simple_1d(0.0), t(1), Momentum::one(PI / 3.0));
        assert!((bands.e_plus - PI / 3.0).abs() < 1e-14);
        // T=4, theta=pi closes the gap at k=0.
        let bands = dispersion(&ProtocolSpec::simple_1d(PI), t(4), Momentum::one(0.0));
        assert!(bands.e_plus.abs() < 1e-12);
        // 2D flat bands at T=8, theta=pi/8.
        let spec = ProtocolSpec::simple_2d(PI / 8.0);
        for (kx, ky) in [(0.0, 0.0), (1.0, -2.0), (PI, PI / 2.0)] {
            let bands = dispersion(&spec, t(8), Momentum::two(kx, ky));
            assert!((bands.e_plus - PI / 2.0).abs() < 1e-13);
        }
        // Split with both half angles at pi/2 pins the bands to +-pi.
        let spec = ProtocolSpec::split_1d(PI / 3.0, PI / 3.0);
        for k in [-2.0, 0.3] {
            let bands = dispersion(&spec, t(3), Momentum::one(k));
            assert!((bands.e_plus - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn bloch_vector_on_flat_band() {
        // T=2, theta=pi/2: cos factor vanishes, n = (sin k, cos k, 0).
        let spec = ProtocolSpec::simple_1d(PI / 2.0);
        let tol = Tolerances::default();
        let k = PI / 4.0;
        let n = bloch_vector(&spec, t(2), Momentum::one(k), &tol)
            .as_array()
            .unwrap();
        assert!((n[0] - k.sin()).abs() < 1e-13);
        assert!((n[1] - k.cos()).abs() < 1e-13);
        assert!(n[2].abs() < 1e-13);
    }

    #[test]
    fn bloch_vector_ill_defined_at_closing() {
        let tol = Tolerances::default();
        let v = bloch_vector(&ProtocolSpec::simple_1d(PI), t(4), Momentum::one(0.0), &tol);
        assert_eq!(v, BlochVector::IllDefined);
    }

    #[test]
    fn bloch_vector_unit_norm_and_chiral_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tol = Tolerances::default();
        for _ in 0..500 {
            let (spec, k) = random_spec(&mut rng);
            let tt = t(rng.gen_range(1..=12));
            if let BlochVector::Defined { n } = bloch_vector(&spec, tt, k, &tol) {
                let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                assert!((norm - 1.0).abs() < 1e-10);
                if let Some(a) = chiral_axis(&spec, tt) {
                    let dot = a[0] * n[0] + a[1] * n[1] + a[2] * n[2];
                    assert!(dot.abs() < 1e-10, "axis not orthogonal: {dot}");
                }
            }
        }
    }

    #[test]
    fn velocity_branch_relation_and_parity() {
        // nz = -V+ wherever both are defined, and V(k) = -V(-k).
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tol = Tolerances::default();
        for _ in 0..400 {
            let one_d = rng.gen_bool(0.5);
            let spec = if one_d {
                ProtocolSpec::split_1d(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI))
            } else {
                ProtocolSpec::simple_1d(rng.gen_range(0.0..2.0 * PI))
            };
            let tt = t(rng.gen_range(1..=10));
            let k = Momentum::one(rng.gen_range(-PI..PI));
            let v = group_velocity(&spec, tt, k, &tol);
            let v_neg = group_velocity(&spec, tt, k.reflected(), &tol);
            if let (VelocityValue::Defined { vx, .. }, VelocityValue::Defined { vx: wx, .. }) =
                (v, v_neg)
            {
                assert!(vx.abs() <= 1.0 + 1e-12);
                assert!((vx + wx).abs() < 1e-12);
                if !has_flat_bands(&spec, tt, &tol) {
                    if let BlochVector::Defined { n } = bloch_vector(&spec, tt, k, &tol) {
                        assert!((n[2] + vx).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn velocity_zero_on_flat_bands_and_unit_on_free_line() {
        let tol = Tolerances::default();
        // Flat: theta = pi/T.
        for n in 1..=8u32 {
            let spec = ProtocolSpec::simple_1d(PI / f64::from(n));
            for k in brillouin_grid(33) {
                match group_velocity(&spec, t(n), Momentum::one(k), &tol) {
                    VelocityValue::Defined { vx, .. } => assert!(vx.abs() < 1e-12),
                    VelocityValue::IllDefined => panic!("flat band velocity must be zero"),
                }
            }
        }
        // Free line: theta = 0, positive branch has unit slope.
        let v = group_velocity(&ProtocolSpec::simple_1d(0.0), t(1), Momentum::one(PI / 3.0), &tol);
        assert_eq!(v.vx(), Some(1.0));
    }

    #[test]
    fn simple_2d_velocity_components_match() {
        let tol = Tolerances::default();
        let spec = ProtocolSpec::simple_2d(0.9);
        let v = group_velocity(&spec, t(5), Momentum::two(0.4, -1.1), &tol);
        if let VelocityValue::Defined { vx, vy } = v {
            assert_eq!(Some(vx), vy);
        } else {
            panic!("gapped point expected");
        }
    }

    #[test]
    fn velocity_matches_finite_difference_of_dispersion() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let tol = Tolerances::default();
        let h = 1e-6;
        for _ in 0..200 {
            let (spec, k) = random_spec(&mut rng);
            let tt = t(rng.gen_range(1..=8));
            let bands = dispersion(&spec, tt, k);
            if bands.gap_distance() < 0.1 {
                continue;
            }
            if let VelocityValue::Defined { vx, vy } = group_velocity(&spec, tt, k, &tol) {
                assert!(vx.abs() <= 1.0 + 1e-12);
                if let Some(vy) = vy {
                    assert!(vy.abs() <= 1.0 + 1e-12);
                }
                let (kp, km) = if spec.dimension() == 1 {
                    (Momentum::one(k.kx + h), Momentum::one(k.kx - h))
                } else {
                    (
                        Momentum::two(k.kx + h, k.ky.unwrap()),
                        Momentum::two(k.kx - h, k.ky.unwrap()),
                    )
                };
                let num =
                    (dispersion(&spec, tt, kp).e_plus - dispersion(&spec, tt, km).e_plus) / (2.0 * h);
                assert!((num - vx).abs() < 1e-5, "vx {vx} vs fd {num}");
                if let (Some(vy), Some(ky)) = (vy, k.ky) {
                    let num = (dispersion(&spec, tt, Momentum::two(k.kx, ky + h)).e_plus
                        - dispersion(&spec, tt, Momentum::two(k.kx, ky - h)).e_plus)
                        / (2.0 * h);
                    assert!((num - vy).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn chiral_operator_squares_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let spec = ProtocolSpec::split_1d(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
            let data = chiral_data(&spec, t(rng.gen_range(1..=12))).unwrap();
            assert!((data.gamma_op * data.gamma_op).max_abs_diff(&IDENTITY) < 1e-12);
            assert!(data.gamma_op.is_hermitian(1e-14));
            assert!(data.gamma_op.is_unitary(1e-13));
        }
        assert!(chiral_data(&ProtocolSpec::simple_2d(0.3), t(2)).is_err());
    }

    #[test]
    fn chiral_operator_closed_forms() {
        // Quarter-turn coin: axis (0,0,1), operator diag(1,-1).
        let data = chiral_data(&ProtocolSpec::simple_1d(PI / 2.0), t(2)).unwrap();
        assert!(data.gamma_op.max_abs_diff(&mat2::SIGMA_Z) < 1e-14);
        // Cell-wall flat closing at T=6, alpha=pi/2, beta=(alpha+pi)/3: -sigma_z.
        let rel = AngleRelation::third_shifted();
        let data =
            chiral_data(&ProtocolSpec::split_1d_related(PI / 2.0, rel), t(6)).unwrap();
        assert!(data.gamma_op.max_abs_diff(&(-mat2::SIGMA_Z)) < 1e-12);
        // Central linear closing at alpha=0: (-1)^{T/2} sigma_x = -sigma_x.
        let data = chiral_data(&ProtocolSpec::split_1d_related(0.0, rel), t(6)).unwrap();
        assert!(data.gamma_op.max_abs_diff(&(-mat2::SIGMA_X)) < 1e-12);
    }

    #[test]
    fn symmetry_report_residuals_small() {
        let tol = Tolerances::default();
        let cases = [
            (ProtocolSpec::simple_1d(0.7), 3u32, 256usize),
            (
                ProtocolSpec::split_1d_related(0.4, AngleRelation::third_shifted()),
                6,
                256,
            ),
            (ProtocolSpec::simple_2d(0.53), 4, 16),
        ];
        for (spec, n, grid) in cases {
            let report = symmetry_report(&spec, t(n), grid, &tol).unwrap();
            assert!(report.worst() < 1e-10, "{spec:?}: {report:?}");
            assert!(report.max_even_energy_residual < 1e-12);
        }
        // Split 2D: no chiral axis; the remaining identities still hold.
        let report =
            symmetry_report(&ProtocolSpec::split_2d(0.8, -1.3), t(5), 16, &tol).unwrap();
        assert!(report.max_chiral_residual.is_none());
        assert!(report.max_tr_residual.is_none());
        assert!(report.max_ph_residual < 1e-10);
        assert!(report.max_det_deviation < 1e-12);
        assert!(report.max_even_energy_residual < 1e-12);
    }

    #[test]
    fn symmetry_report_rejects_tiny_grid() {
        let e = symmetry_report(
            &ProtocolSpec::simple_1d(0.3),
            t(2),
            1,
            &Tolerances::default(),
        );
        assert!(matches!(e, Err(KspaceError::GridTooSmall(1))));
    }

    #[test]
    fn printed_bloch_deviations_are_pinned() {
        // The printed x component for the simple protocols carries the other
        // trig factor; the derived vector is the one orthogonal to the axis.
        let tol = Tolerances::default();
        let spec = ProtocolSpec::simple_1d(0.9);
        let k = Momentum::one(0.7);
        let dev = reference::printed_bloch_deviation(&spec, t(3), k, &tol).unwrap();
        let (ha, _) = spec.half_angles(t(3));
        let sin_e = (1.0 - (ha.cos() * k.kx.cos()).powi(2)).sqrt();
        let expected_dx = ((ha.cos() - ha.sin()) * k.kx.sin() / sin_e).abs();
        assert!((dev[0] - expected_dx).abs() < 1e-12);
        assert!(dev[1] < 1e-12); // y component agrees
        assert!(dev[2] < 1e-12); // z component agrees

        // Split 1D printed components all match the derivation.
        let spec = ProtocolSpec::split_1d(0.8, -0.5);
        let dev = reference::printed_bloch_deviation(&spec, t(4), k, &tol).unwrap();
        assert!(dev.iter().all(|d| *d < 1e-12), "{dev:?}");

        // Split 2D: x and y match, z misses the sign of the second term.
        let spec = ProtocolSpec::split_2d(0.8, -0.5);
        let k2 = Momentum::two(0.7, 0.3);
        let dev = reference::printed_bloch_deviation(&spec, t(4), k2, &tol).unwrap();
        assert!(dev[0] < 1e-12 && dev[1] < 1e-12);
        let (ha, hb) = spec.half_angles(t(4));
        let shape = band_shape(&spec, t(4));
        let cos_e = shape.cos_energy(Family::Split2d, k2);
        let sin_e = (1.0 - cos_e * cos_e).sqrt();
        let expected_dz =
            (2.0 * ha.sin() * hb.unwrap().sin() * (k2.kx - k2.ky.unwrap()).sin() / sin_e).abs();
        assert!((dev[2] - expected_dz).abs() < 1e-10);
    }

    #[test]
    fn shape_extrema_bound_sampled_dispersion() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let (spec, _) = random_spec(&mut rng);
            let tt = t(rng.gen_range(1..=10));
            let shape = band_shape(&spec, tt);
            let (mut seen_max, mut seen_min) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..64 {
                let frac = i as f64 / 63.0;
                let k = if spec.dimension() == 1 {
                    Momentum::one(-PI + 2.0 * PI * frac)
                } else {
                    Momentum::two(-PI + 2.0 * PI * frac, rng.gen_range(-PI..PI))
                };
                let c = shape.cos_energy(spec.family(), k);
                seen_max = seen_max.max(c);
                seen_min = seen_min.min(c);
            }
            let (lo, hi) = match shape {
                BandShape::SingleCos { amp, offset } => {
                    (-amp.abs() + offset, amp.abs() + offset)
                }
                BandShape::DoubleCos { amp_sum, amp_diff } => {
                    let reach = amp_sum.abs() + amp_diff.abs();
                    (-reach, reach)
                }
            };
            assert!(seen_max <= hi + 1e-12);
            assert!(seen_min >= lo - 1e-12);
        }
    }

    #[test]
    fn band_statistics_detect_flat_and_gapped() {
        let stats = band_statistics(&ProtocolSpec::simple_2d(PI / 8.0), t(8), 32);
        assert!(stats.spread < 1e-12);
        assert!((stats.min_e_plus - PI / 2.0).abs() < 1e-12);
        let stats = band_statistics(&ProtocolSpec::simple_2d(PI / 5.0), t(8), 64);
        assert!(stats.min_gap_distance > 0.1);
    }
}
