//! Topological invariants and boundary-state taxonomy.
//!
//! Gap closings of the two-band spectrum happen only at band energy 0 or
//! +-pi. Writing the dispersion argument as `cos E(k) = amp cos k + offset`
//! (single-momentum protocols), its extrema over the zone are `+-|amp| +
//! offset`, so closings along a parameter scan are the tangency points where
//! an extremum reaches +-1. The locator evaluates the tangency distances in
//! cancellation-free form (`1 - cos x = 2 sin^2(x/2)` per sign branch) and
//! refines scan-local minima by golden-section search; tangencies never
//! change sign, so plain bracketing would miss them.
//!
//! Closings are classified by the trigonometric structure at the closing
//! angle: a single surviving cosine at full weight makes the bands the free
//! line (linear closing, Dirac cone); a vanishing momentum amplitude makes
//! them flat; anything else is a nonlinear tangency (Fermi arc). The verdict
//! is cross-checked by probing the band slope at the gapless momentum.

use crate::kspace::{self, band_shape, BandShape, BlochVector};
use crate::protocol::{
    AngleRelation, Family, InhomogeneousProfile, Momentum, ProtocolSpec, StepIndex, Tolerances,
};
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("operation `{op}` does not support family {family}")]
    UnsupportedFamily { family: Family, op: &'static str },
    #[error("momentum argument {0} admits no real closing-angle solutions (use -pi, 0, or pi)")]
    InvalidMomentum(f64),
    #[error("band structure is gapless on the integration grid near k={0}")]
    GaplessOnGrid(f64),
    #[error("band structure is gapless at scan endpoint alpha={0}")]
    EndpointGapless(f64),
    #[error("closed-form winding expression needs sin(T theta / 2) > 0, got {0}")]
    WindingDomain(f64),
    #[error("analytic verdict {analytic:?} disagrees with numeric probe {numeric:?}")]
    VerdictConflict {
        analytic: BoundaryKind,
        numeric: BoundaryKind,
    },
    #[error("scan needs at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("invariant resolution must be at least {need}, got {got}")]
    ResolutionTooSmall { need: usize, got: usize },
}

/// Which band energy a closing touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnergySector {
    Zero,
    PlusMinusPi,
}

impl std::fmt::Display for EnergySector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnergySector::Zero => "E=0",
            EnergySector::PlusMinusPi => "E=pi",
        })
    }
}

/// Taxonomy of gap closings / boundary states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    DiracCone,
    FermiArc,
    FlatBand,
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundaryKind::DiracCone => "dirac-cone",
            BoundaryKind::FermiArc => "fermi-arc",
            BoundaryKind::FlatBand => "flat-band",
        })
    }
}

/// A located gap-closing (or flat-band) event in a parameter scan.
///
/// `solution_index` is the integer labeling the analytic solution branch for
/// closed-form enumerations; numeric scans store the event's ordinal
/// position. `flat` marks momentum-independent bands. Flat events coming
/// from the analytic flat-band query sit at band energy pi/2 and do not
/// close the gap; for them the gapless invariant does not apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapClosing {
    pub angle: f64,
    pub momentum: Momentum,
    pub energy_sector: EnergySector,
    pub solution_index: i64,
    pub flat: bool,
}

/// What to enumerate analytically: closings of one sector, or the flat-band
/// angles (bands pinned to +-pi/2, gap open).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosingQuery {
    Sector(EnergySector),
    FlatBand,
}

/// A real-valued invariant with its quantization, when within tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantValue {
    pub value: f64,
    pub quantized: Option<i64>,
    pub resolution: usize,
}

impl InvariantValue {
    fn new(value: f64, resolution: usize, invariant_eps: f64) -> Self {
        let nearest = value.round();
        let quantized = ((value - nearest).abs() < invariant_eps).then_some(nearest as i64);
        InvariantValue {
            value,
            quantized,
            resolution,
        }
    }
}

/// Counts of gap closings at the two energies along a parameter path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathInvariants {
    pub q0: usize,
    pub qpi: usize,
}

/// Ordered boundary events in an angle window plus the cell-pattern flag.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub alpha_range: (f64, f64),
    pub ordered_boundaries: Vec<(f64, BoundaryKind, EnergySector)>,
    /// True when the ordered kinds contain the contiguous run
    /// flat, Fermi arc, Dirac cone, Fermi arc, flat.
    pub cell_pattern: bool,
}

fn fit_momentum(family: Family, k: Momentum) -> Momentum {
    if family.dimension() == 1 {
        Momentum::one(k.kx)
    } else {
        Momentum::two(k.kx, k.ky.unwrap_or(0.0))
    }
}

// ---------------------------------------------------------------------------
// analytic closing angles
// ---------------------------------------------------------------------------

/// All solutions of `angle = (4 pi c + shift)/T` inside `[0, 2 pi]`.
fn branch_solutions(t: f64, shift: f64, out: &mut Vec<(f64, i64)>) {
    let lo = ((-shift) / (4.0 * PI)).floor() as i64 - 1;
    let hi = ((2.0 * PI * t - shift) / (4.0 * PI)).ceil() as i64 + 1;
    for c in lo..=hi {
        let angle = (4.0 * PI * c as f64 + shift) / t;
        if (-1e-12..=2.0 * PI + 1e-12).contains(&angle) {
            out.push((angle.clamp(0.0, 2.0 * PI), c));
        }
    }
}

/// Closed-form closing angles of the simple protocols in `[0, 2 pi]`.
///
/// Real solutions exist only where the momentum argument (k, or kx+ky) sits
/// at -pi, 0, or pi. The pi sector closes at `4 pi c / T` for argument +-pi
/// and `(4 pi c +- 2 pi)/T` at 0; the zero sector swaps the two lists; the
/// flat-band query returns `(4 pi c +- pi)/T`, where the bands pin to pi/2.
/// Every solution is re-verified against the dispersion.
pub fn analytic_gap_angles(
    family: Family,
    t: StepIndex,
    query: ClosingQuery,
    k: Momentum,
) -> Result<Vec<GapClosing>, TopologyError> {
    if family.is_split() {
        return Err(TopologyError::UnsupportedFamily {
            family,
            op: "analytic_gap_angles",
        });
    }
    let k_arg = crate::protocol::wrap_momentum(match family {
        Family::Simple1d => k.kx,
        Family::Simple2d => k.kx + k.ky.unwrap_or(0.0),
        _ => unreachable!(),
    });
    let at_zero = k_arg.abs() < 1e-12;
    let at_edge = (k_arg.abs() - PI).abs() < 1e-12;
    if !matches!(query, ClosingQuery::FlatBand) && !at_zero && !at_edge {
        return Err(TopologyError::InvalidMomentum(k_arg));
    }

    let tf = f64::from(t.get());
    let mut raw: Vec<(f64, i64)> = Vec::new();
    match query {
        ClosingQuery::Sector(EnergySector::PlusMinusPi) => {
            if at_edge {
                branch_solutions(tf, 0.0, &mut raw);
            } else {
                branch_solutions(tf, 2.0 * PI, &mut raw);
                branch_solutions(tf, -2.0 * PI, &mut raw);
            }
        }
        ClosingQuery::Sector(EnergySector::Zero) => {
            if at_zero {
                branch_solutions(tf, 0.0, &mut raw);
            } else {
                branch_solutions(tf, 2.0 * PI, &mut raw);
                branch_solutions(tf, -2.0 * PI, &mut raw);
            }
        }
        ClosingQuery::FlatBand => {
            branch_solutions(tf, PI, &mut raw);
            branch_solutions(tf, -PI, &mut raw);
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    raw.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-10);

    let spec_for = |angle: f64| match family {
        Family::Simple1d => ProtocolSpec::simple_1d(angle),
        _ => ProtocolSpec::simple_2d(angle),
    };
    let probe = fit_momentum(family, k);

    let mut out = Vec::with_capacity(raw.len());
    for (angle, c) in raw {
        let spec = spec_for(angle);
        match query {
            ClosingQuery::Sector(sector) => {
                let e = kspace::dispersion(&spec, t, probe).e_plus;
                let target = match sector {
                    EnergySector::Zero => 0.0,
                    EnergySector::PlusMinusPi => PI,
                };
                assert!(
                    (e - target).abs() < 1e-9,
                    "analytic solution {angle} misses its sector target"
                );
                out.push(GapClosing {
                    angle,
                    momentum: probe,
                    energy_sector: sector,
                    solution_index: c,
                    flat: false,
                });
            }
            ClosingQuery::FlatBand => {
                assert!(band_shape(&spec, t).is_flat(1e-9));
                out.push(GapClosing {
                    angle,
                    momentum: probe,
                    energy_sector: EnergySector::PlusMinusPi,
                    solution_index: c,
                    flat: true,
                });
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// numeric closing location
// ---------------------------------------------------------------------------

/// Distance of the zone maximum of `cos E` from +1, in exact trigonometric
/// form. Zero iff the gap closes at energy zero for some momentum.
fn zero_sector_distance(spec: &ProtocolSpec, t: StepIndex) -> f64 {
    let (ha, hb) = spec.half_angles(t);
    match band_shape(spec, t) {
        BandShape::SingleCos { amp, .. } => match hb {
            None => fold_abs_cos_distance(ha, amp >= 0.0),
            Some(hb) => {
                if amp >= 0.0 {
                    2.0 * (0.5 * (ha + hb)).sin().powi(2)
                } else {
                    2.0 * (0.5 * (ha - hb)).cos().powi(2)
                }
            }
        },
        BandShape::DoubleCos { amp_sum, amp_diff } => {
            double_cos_distance(ha, hb.unwrap(), amp_sum, amp_diff)
        }
    }
}

/// Distance of the zone minimum of `cos E` from -1; zero iff the gap closes
/// at energy +-pi for some momentum.
fn pi_sector_distance(spec: &ProtocolSpec, t: StepIndex) -> f64 {
    let (ha, hb) = spec.half_angles(t);
    match band_shape(spec, t) {
        BandShape::SingleCos { amp, .. } => match hb {
            None => fold_abs_cos_distance(ha, amp >= 0.0),
            Some(hb) => {
                if amp >= 0.0 {
                    2.0 * (0.5 * (ha - hb)).sin().powi(2)
                } else {
                    2.0 * (0.5 * (ha + hb)).cos().powi(2)
                }
            }
        },
        BandShape::DoubleCos { amp_sum, amp_diff } => {
            double_cos_distance(ha, hb.unwrap(), amp_sum, amp_diff)
        }
    }
}

/// `1 - |cos h|` as `2 sin^2(h/2)` or `2 cos^2(h/2)` depending on the sign.
fn fold_abs_cos_distance(h: f64, cos_nonneg: bool) -> f64 {
    if cos_nonneg {
        2.0 * (0.5 * h).sin().powi(2)
    } else {
        2.0 * (0.5 * h).cos().powi(2)
    }
}

/// `1 - |amp_sum| - |amp_diff|` folded into the four exact sign branches;
/// for the double-cos shape both sector extrema are symmetric, so the same
/// distance serves both detectors.
fn double_cos_distance(ha: f64, hb: f64, amp_sum: f64, amp_diff: f64) -> f64 {
    match (amp_sum >= 0.0, amp_diff >= 0.0) {
        (true, true) => 2.0 * (0.5 * (ha - hb)).sin().powi(2),
        (true, false) => 2.0 * (0.5 * (ha + hb)).sin().powi(2),
        (false, true) => 2.0 * (0.5 * (ha + hb)).cos().powi(2),
        (false, false) => 2.0 * (0.5 * (ha - hb)).cos().powi(2),
    }
}

/// Golden-section minimization of a continuous scalar function.
fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > width {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    if f(mid) <= f1.min(f2) {
        mid
    } else if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Minima of a sampled non-negative function that reach (numerical) zero.
fn tangency_roots(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    samples: usize,
    accept: f64,
) -> Vec<f64> {
    let step = (hi - lo) / (samples as f64 - 1.0);
    let values: Vec<f64> = (0..samples).map(|i| f(lo + step * i as f64)).collect();
    let mut roots = Vec::new();
    for i in 0..samples {
        let left = if i == 0 { f64::INFINITY } else { values[i - 1] };
        let right = if i + 1 == samples {
            f64::INFINITY
        } else {
            values[i + 1]
        };
        if values[i] <= left && values[i] <= right {
            let a = (lo + step * i as f64 - step).max(lo);
            let b = (lo + step * i as f64 + step).min(hi);
            let x = golden_min(f, a, b, 1e-12);
            if f(x) <= accept {
                roots.push(x.clamp(lo, hi));
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
    roots
}

/// Representative gapless momentum for a located closing.
fn representative_momentum(spec: &ProtocolSpec, t: StepIndex, sector: EnergySector) -> Momentum {
    let target = match sector {
        EnergySector::Zero => 1.0,
        EnergySector::PlusMinusPi => -1.0,
    };
    match band_shape(spec, t) {
        BandShape::SingleCos { amp, .. } => {
            let k = if amp * target >= 0.0 { 0.0 } else { PI };
            if spec.dimension() == 1 {
                Momentum::one(k)
            } else {
                // Any split of the momentum sum works; put it all on kx.
                Momentum::two(k, 0.0)
            }
        }
        BandShape::DoubleCos { amp_sum, amp_diff } => {
            let kp = if amp_sum * target >= 0.0 { 0.0 } else { PI };
            let km = if -amp_diff * target >= 0.0 { 0.0 } else { PI };
            Momentum::two(0.5 * (kp + km), 0.5 * (kp - km))
        }
    }
}

/// Scan the primary angle for gap closings.
///
/// Closings that shut both sectors at the same angle (the free-line points
/// where the cosine amplitude reaches magnitude one) are recorded once and
/// attributed to the zero sector. Flat bands that stay away from energies 0
/// and +-pi do not close the gap and are not reported.
pub fn locate_gap_closings(
    spec: &ProtocolSpec,
    t: StepIndex,
    alpha_range: (f64, f64),
    samples: usize,
) -> Result<Vec<GapClosing>, TopologyError> {
    if samples < 64 {
        return Err(TopologyError::TooFewSamples {
            need: 64,
            got: samples,
        });
    }
    let (lo, hi) = alpha_range;
    assert!(hi > lo, "empty scan range");
    let accept = Tolerances::default().gap_eps.powi(2);
    let f_zero = |a: f64| zero_sector_distance(&spec.with_primary_angle(a), t);
    let f_pi = |a: f64| pi_sector_distance(&spec.with_primary_angle(a), t);
    let zero_roots = tangency_roots(&f_zero, lo, hi, samples, accept);
    let pi_roots = tangency_roots(&f_pi, lo, hi, samples, accept);

    let mut events: Vec<(f64, EnergySector)> = zero_roots
        .iter()
        .map(|&a| (a, EnergySector::Zero))
        .collect();
    for &a in &pi_roots {
        // Both-sector points keep the zero-sector attribution.
        if !zero_roots.iter().any(|&z| (z - a).abs() < 1e-8) {
            events.push((a, EnergySector::PlusMinusPi));
        }
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0));

    let flat_eps = Tolerances::default().flat_eps;
    Ok(events
        .into_iter()
        .enumerate()
        .map(|(i, (angle, sector))| {
            let local = spec.with_primary_angle(angle);
            GapClosing {
                angle,
                momentum: representative_momentum(&local, t, sector),
                energy_sector: sector,
                solution_index: i as i64,
                flat: band_shape(&local, t).is_flat(flat_eps),
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// boundary classification
// ---------------------------------------------------------------------------

/// Classification from the trigonometric closing conditions alone, valid at
/// any parameter point (not only at verified closings).
///
/// Flat: every momentum amplitude of `cos E` vanishes. Dirac: exactly one
/// cosine term survives, necessarily at full weight when the gap closes, so
/// the bands are the free line. Fermi arc: anything else.
pub fn boundary_kind_from_conditions(
    spec: &ProtocolSpec,
    t: StepIndex,
    tol: &Tolerances,
) -> BoundaryKind {
    let shape = band_shape(spec, t);
    if shape.is_flat(tol.flat_eps) {
        return BoundaryKind::FlatBand;
    }
    match shape {
        BandShape::SingleCos { .. } => {
            let (ha, hb) = spec.half_angles(t);
            let sin_product = hb.map_or(0.0, |hb| ha.sin() * hb.sin());
            if sin_product.abs() < tol.flat_eps {
                BoundaryKind::DiracCone
            } else {
                BoundaryKind::FermiArc
            }
        }
        BandShape::DoubleCos { amp_sum, amp_diff } => {
            if amp_sum.abs() < tol.flat_eps || amp_diff.abs() < tol.flat_eps {
                BoundaryKind::DiracCone
            } else {
                BoundaryKind::FermiArc
            }
        }
    }
}

/// One-sided slope of the band toward its closing energy at the gapless
/// momentum; for 2D closings the steeper of the two diagonal momentum
/// directions is reported.
fn closing_slope(spec: &ProtocolSpec, t: StepIndex, closing: &GapClosing) -> f64 {
    let delta = 1e-3;
    let gap_dist = |k: Momentum| {
        let e = kspace::dispersion(spec, t, k).e_plus;
        match closing.energy_sector {
            EnergySector::Zero => e,
            EnergySector::PlusMinusPi => PI - e,
        }
    };
    let k0 = closing.momentum;
    match k0.ky {
        None => gap_dist(Momentum::one(k0.kx + delta)) / delta,
        Some(ky) => {
            // Diagonal steps advance kx+ky (respectively kx-ky) by 2 delta.
            let along_sum = gap_dist(Momentum::two(k0.kx + delta, ky + delta)) / (2.0 * delta);
            let along_diff = gap_dist(Momentum::two(k0.kx + delta, ky - delta)) / (2.0 * delta);
            along_sum.max(along_diff)
        }
    }
}

/// Classify a located closing; the analytic conditions decide, and a
/// numerical probe of the dispersion must agree or an error is raised.
///
/// When the supplied point is not actually gapless at its stored momentum
/// (condition checks at arbitrary parameter points are allowed), the
/// analytic verdict is returned without probing.
pub fn classify_boundary(
    spec: &ProtocolSpec,
    t: StepIndex,
    closing: &GapClosing,
) -> Result<BoundaryKind, TopologyError> {
    let tol = Tolerances::default();
    let local = spec.with_primary_angle(closing.angle);
    let analytic = boundary_kind_from_conditions(&local, t, &tol);

    let probe_k = fit_momentum(local.family(), closing.momentum);
    let e = kspace::dispersion(&local, t, probe_k).e_plus;
    let gap = match closing.energy_sector {
        EnergySector::Zero => e,
        EnergySector::PlusMinusPi => PI - e,
    };
    if gap > 1e-6 {
        return Ok(analytic);
    }

    let numeric = if kspace::band_statistics(&local, t, 65).spread < 1e-9 {
        BoundaryKind::FlatBand
    } else {
        let slope = closing_slope(&local, t, closing);
        if (slope - 1.0).abs() < 1e-3 {
            BoundaryKind::DiracCone
        } else {
            BoundaryKind::FermiArc
        }
    };
    if numeric == analytic {
        Ok(analytic)
    } else {
        Err(TopologyError::VerdictConflict { analytic, numeric })
    }
}

// ---------------------------------------------------------------------------
// invariants
// ---------------------------------------------------------------------------

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Bloch field over a periodic 1D grid, failing on any gapless sample.
fn bloch_field_1d(
    spec: &ProtocolSpec,
    t: StepIndex,
    resolution: usize,
    tol: &Tolerances,
) -> Result<Vec<[f64; 3]>, TopologyError> {
    let h = 2.0 * PI / resolution as f64;
    let field: Vec<Result<[f64; 3], f64>> = (0..resolution)
        .into_par_iter()
        .map(|i| {
            let k = -PI + h * i as f64;
            match kspace::bloch_vector(spec, t, Momentum::one(k), tol) {
                BlochVector::Defined { n } => Ok(n),
                BlochVector::IllDefined => Err(k),
            }
        })
        .collect();
    field
        .into_iter()
        .collect::<Result<Vec<_>, f64>>()
        .map_err(TopologyError::GaplessOnGrid)
}

/// Winding of the Bloch vector about the chiral axis over the zone:
/// `(1/2 pi) int (n x dn/dk) . axis dk`, trapezoid on the periodic grid with
/// centered finite differences.
pub fn winding_number(
    spec: &ProtocolSpec,
    t: StepIndex,
    resolution: usize,
) -> Result<InvariantValue, TopologyError> {
    if spec.dimension() != 1 {
        return Err(TopologyError::UnsupportedFamily {
            family: spec.family(),
            op: "winding_number",
        });
    }
    if resolution < 256 {
        return Err(TopologyError::ResolutionTooSmall {
            need: 256,
            got: resolution,
        });
    }
    let tol = Tolerances::default();
    let axis = kspace::chiral_data(spec, t)
        .expect("1D families carry a chiral axis")
        .axis;
    let field = bloch_field_1d(spec, t, resolution, &tol)?;
    let n = resolution;
    let h = 2.0 * PI / n as f64;
    let total: f64 = (0..n)
        .map(|i| {
            let fwd = field[(i + 1) % n];
            let bwd = field[(i + n - 1) % n];
            let dn = [
                (fwd[0] - bwd[0]) / (2.0 * h),
                (fwd[1] - bwd[1]) / (2.0 * h),
                (fwd[2] - bwd[2]) / (2.0 * h),
            ];
            dot(cross(field[i], dn), axis) * h
        })
        .sum();
    Ok(InvariantValue::new(
        total / (2.0 * PI),
        resolution,
        tol.invariant_eps,
    ))
}

/// Literal closed-form winding expression `-sin(h) sqrt(csc h)` with
/// `h = T theta / 2`. Reference only: generally non-integer; the quadrature
/// of [`winding_number`] is the invariant.
pub fn winding_closed_form(t: StepIndex, theta: f64) -> Result<f64, TopologyError> {
    let h = 0.5 * f64::from(t.get()) * theta;
    let s = h.sin();
    // Roundoff guard: sin at an exact multiple of pi lands near 1e-16.
    if s <= 1e-12 {
        return Err(TopologyError::WindingDomain(s));
    }
    Ok(-s * (1.0 / s).sqrt())
}

/// Zak-phase mode: the signed ratio or its absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZakMode {
    Signed,
    Absolute,
}

/// Zak-phase ratio value; tangent poles and vanishing denominators are
/// surfaced as the divergence marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZakValue {
    Finite(f64),
    Divergent,
}

impl ZakValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            ZakValue::Finite(v) => Some(*v),
            ZakValue::Divergent => None,
        }
    }
}

/// Zak-phase ratio `tan(T alpha / 2) / tan(T beta / 2)`.
///
/// Map reading: the ratio is 1 on gap closings; magnitudes above one mark
/// trivial phases, below one non-trivial ones.
pub fn zak_phase(t: StepIndex, alpha: f64, beta: f64, mode: ZakMode) -> ZakValue {
    let scale = 0.5 * f64::from(t.get());
    let (ha, hb) = (scale * alpha, scale * beta);
    if ha.cos().abs() < 1e-12 || hb.cos().abs() < 1e-12 {
        return ZakValue::Divergent;
    }
    let tb = hb.tan();
    if tb.abs() < 1e-12 {
        return ZakValue::Divergent;
    }
    let c = ha.tan() / tb;
    ZakValue::Finite(match mode {
        ZakMode::Signed => c,
        ZakMode::Absolute => c.abs(),
    })
}

/// Chern number of the positive band over the two-dimensional zone:
/// `(1/4 pi) int (dn/dkx x dn/dky) . n d^2 k` on a periodic grid.
pub fn chern_number(
    spec: &ProtocolSpec,
    t: StepIndex,
    resolution: usize,
) -> Result<InvariantValue, TopologyError> {
    if spec.dimension() != 2 {
        return Err(TopologyError::UnsupportedFamily {
            family: spec.family(),
            op: "chern_number",
        });
    }
    if resolution < 64 {
        return Err(TopologyError::ResolutionTooSmall {
            need: 64,
            got: resolution,
        });
    }
    let tol = Tolerances::default();
    let n = resolution;
    let h = 2.0 * PI / n as f64;
    let field: Vec<Result<[f64; 3], f64>> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let k = Momentum::two(-PI + h * i as f64, -PI + h * j as f64);
            match kspace::bloch_vector(spec, t, k, &tol) {
                BlochVector::Defined { n } => Ok(n),
                BlochVector::IllDefined => Err(k.kx),
            }
        })
        .collect();
    let field = field
        .into_iter()
        .collect::<Result<Vec<_>, f64>>()
        .map_err(TopologyError::GaplessOnGrid)?;
    let at = |i: usize, j: usize| field[(i % n) * n + (j % n)];
    let total: f64 = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let dx = diff_scaled(at(i + 1, j), at(i + n - 1, j), 2.0 * h);
            let dy = diff_scaled(at(i, j + 1), at(i, j + n - 1), 2.0 * h);
            dot(cross(dx, dy), at(i, j)) * h * h
        })
        .sum();
    Ok(InvariantValue::new(
        total / (4.0 * PI),
        resolution,
        tol.invariant_eps,
    ))
}

fn diff_scaled(a: [f64; 3], b: [f64; 3], denom: f64) -> [f64; 3] {
    [
        (a[0] - b[0]) / denom,
        (a[1] - b[1]) / denom,
        (a[2] - b[2]) / denom,
    ]
}

/// Count gap closings of each sector along a path of the primary angle.
/// Closing angles count once; points that close both gaps count toward the
/// zero sector. Both endpoints must be gapped.
pub fn path_invariants(
    spec: &ProtocolSpec,
    t: StepIndex,
    start_alpha: f64,
    end_alpha: f64,
    samples: usize,
) -> Result<PathInvariants, TopologyError> {
    if samples < 128 {
        return Err(TopologyError::TooFewSamples {
            need: 128,
            got: samples,
        });
    }
    let accept = Tolerances::default().gap_eps.powi(2);
    for endpoint in [start_alpha, end_alpha] {
        let local = spec.with_primary_angle(endpoint);
        if zero_sector_distance(&local, t) <= accept || pi_sector_distance(&local, t) <= accept {
            return Err(TopologyError::EndpointGapless(endpoint));
        }
    }
    let (lo, hi) = if start_alpha <= end_alpha {
        (start_alpha, end_alpha)
    } else {
        (end_alpha, start_alpha)
    };
    let closings = locate_gap_closings(spec, t, (lo, hi), samples)?;
    let q0 = closings
        .iter()
        .filter(|c| c.energy_sector == EnergySector::Zero)
        .count();
    Ok(PathInvariants {
        q0,
        qpi: closings.len() - q0,
    })
}

/// Locate, classify, and order the boundary events of a linearly related
/// split walk over an angle window, and flag the five-event cell pattern.
pub fn enumerate_cells(
    t: StepIndex,
    relation: AngleRelation,
    alpha_range: (f64, f64),
    samples: usize,
) -> Result<CellReport, TopologyError> {
    let spec = ProtocolSpec::split_1d_related(alpha_range.0, relation);
    let closings = locate_gap_closings(&spec, t, alpha_range, samples)?;
    let mut ordered = Vec::with_capacity(closings.len());
    for c in &closings {
        let kind = classify_boundary(&spec, t, c)?;
        ordered.push((c.angle, kind, c.energy_sector));
    }
    let kinds: Vec<BoundaryKind> = ordered.iter().map(|b| b.1).collect();
    let pattern = [
        BoundaryKind::FlatBand,
        BoundaryKind::FermiArc,
        BoundaryKind::DiracCone,
        BoundaryKind::FermiArc,
        BoundaryKind::FlatBand,
    ];
    let cell_pattern = kinds.windows(5).any(|w| w == pattern);
    Ok(CellReport {
        alpha_range,
        ordered_boundaries: ordered,
        cell_pattern,
    })
}

/// Winding number of the homogeneous walk whose angles are frozen at the
/// profile's position `x`; errors with the gapless marker when the local
/// walk sits on a transition.
pub fn position_resolved_invariant(
    profile: &InhomogeneousProfile,
    t: StepIndex,
    x: i64,
    resolution: usize,
) -> Result<InvariantValue, TopologyError> {
    let spec = profile.frozen_at(x as f64);
    winding_number(&spec, t, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kspace::{bloch_vector, chiral_data};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t(n: u32) -> StepIndex {
        StepIndex::new(n).unwrap()
    }

    #[test]
    fn analytic_zero_sector_solutions_t4() {
        let set = analytic_gap_angles(
            Family::Simple1d,
            t(4),
            ClosingQuery::Sector(EnergySector::Zero),
            Momentum::one(0.0),
        )
        .unwrap();
        let angles: Vec<f64> = set.iter().map(|c| c.angle).collect();
        let expect = [0.0, PI, 2.0 * PI];
        assert_eq!(angles.len(), expect.len());
        for (a, e) in angles.iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }

        let set = analytic_gap_angles(
            Family::Simple1d,
            t(4),
            ClosingQuery::Sector(EnergySector::Zero),
            Momentum::one(PI),
        )
        .unwrap();
        let angles: Vec<f64> = set.iter().map(|c| c.angle).collect();
        assert_eq!(angles.len(), 2);
        assert!((angles[0] - PI / 2.0).abs() < 1e-12);
        assert!((angles[1] - 3.0 * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_flat_band_solutions_t2() {
        let set = analytic_gap_angles(
            Family::Simple1d,
            t(2),
            ClosingQuery::FlatBand,
            Momentum::one(0.0),
        )
        .unwrap();
        let angles: Vec<f64> = set.iter().map(|c| c.angle).collect();
        assert_eq!(angles.len(), 2);
        assert!((angles[0] - PI / 2.0).abs() < 1e-12);
        assert!((angles[1] - 3.0 * PI / 2.0).abs() < 1e-12);
        assert!(set.iter().all(|c| c.flat));
    }

    #[test]
    fn analytic_rejects_generic_momentum() {
        let e = analytic_gap_angles(
            Family::Simple1d,
            t(4),
            ClosingQuery::Sector(EnergySector::Zero),
            Momentum::one(0.7),
        );
        assert!(matches!(e, Err(TopologyError::InvalidMomentum(_))));
    }

    #[test]
    fn numeric_closings_match_analytic_simple1d() {
        for n in 2..=8u32 {
            let spec = ProtocolSpec::simple_1d(0.0);
            let found = locate_gap_closings(&spec, t(n), (0.0, 2.0 * PI), 512).unwrap();
            // Closings at every multiple of 2 pi / T, spaced exactly 2 pi / T.
            let expected: Vec<f64> = (0..=n)
                .map(|m| 2.0 * PI * f64::from(m) / f64::from(n))
                .collect();
            assert_eq!(found.len(), expected.len(), "T={n}");
            for (c, e) in found.iter().zip(&expected) {
                assert!((c.angle - e).abs() < 1e-8, "T={n}: {} vs {e}", c.angle);
            }
            for pair in found.windows(2) {
                let spacing = pair[1].angle - pair[0].angle;
                assert!((spacing - 2.0 * PI / f64::from(n)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn numeric_t4_matches_spec_set() {
        let spec = ProtocolSpec::simple_1d(0.0);
        let found = locate_gap_closings(&spec, t(4), (0.0, 2.0 * PI), 512).unwrap();
        let expect = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0, 2.0 * PI];
        assert_eq!(found.len(), 5);
        for (c, e) in found.iter().zip(expect) {
            assert!((c.angle - e).abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate_equal_angle_relation_is_gapless_at_pi() {
        // With beta tied equal to alpha the ratio marker is 1 everywhere and
        // the pi gap stays closed along the whole line: the step unitary at
        // k = pi is minus the identity for every angle.
        let rel = AngleRelation::new(1.0, 0.0);
        let spec = ProtocolSpec::split_1d_related(0.0, rel);
        for i in 0..=100 {
            let a = 2.0 * PI * i as f64 / 100.0;
            let local = spec.with_primary_angle(a);
            let u = kspace::step_unitary(&local, t(1), Momentum::one(PI)).unwrap();
            assert!((u.trace().re + 2.0).abs() < 1e-12);
            match zak_phase(t(1), a, a, ZakMode::Signed) {
                ZakValue::Finite(c) => assert!((c - 1.0).abs() < 1e-9),
                ZakValue::Divergent => {} // tangent poles along the line
            }
        }
        // The zero gap only closes where cos(T alpha) = 1.
        let f = |a: f64| zero_sector_distance(&spec.with_primary_angle(a), t(1));
        assert!(f(0.0) < 1e-18);
        assert!(f(2.0 * PI) < 1e-18);
        assert!(f(PI) > 0.1);
    }

    #[test]
    fn cell_structure_at_t6() {
        let report = enumerate_cells(
            t(6),
            AngleRelation::third_shifted(),
            (-PI / 2.0 - 1e-3, PI / 2.0 + 1e-3),
            512,
        )
        .unwrap();
        assert!(report.cell_pattern);
        assert_eq!(report.ordered_boundaries.len(), 5);
        let expect_angles = [-PI / 2.0, -PI / 4.0, 0.0, PI / 4.0, PI / 2.0];
        let expect_kinds = [
            BoundaryKind::FlatBand,
            BoundaryKind::FermiArc,
            BoundaryKind::DiracCone,
            BoundaryKind::FermiArc,
            BoundaryKind::FlatBand,
        ];
        for ((angle, kind, _), (ea, ek)) in report
            .ordered_boundaries
            .iter()
            .zip(expect_angles.iter().zip(expect_kinds))
        {
            assert!((angle - ea).abs() < 1e-8);
            assert_eq!(*kind, ek);
        }
    }

    #[test]
    fn no_cell_pattern_at_t2() {
        let report = enumerate_cells(
            t(2),
            AngleRelation::third_shifted(),
            (-PI / 2.0 - 1e-3, PI / 2.0 + 1e-3),
            512,
        )
        .unwrap();
        assert!(!report.cell_pattern);
    }

    #[test]
    fn sparse_windows_and_empty_ranges() {
        // Only the Fermi arc at pi/4 lives in this window.
        let report =
            enumerate_cells(t(6), AngleRelation::third_shifted(), (0.05, 1.0), 128).unwrap();
        assert_eq!(report.ordered_boundaries.len(), 1);
        assert_eq!(report.ordered_boundaries[0].1, BoundaryKind::FermiArc);
        assert!(!report.cell_pattern);
        // No closings at all.
        let report =
            enumerate_cells(t(6), AngleRelation::third_shifted(), (0.05, 0.2), 128).unwrap();
        assert!(report.ordered_boundaries.is_empty());
        assert!(!report.cell_pattern);
    }

    #[test]
    fn classify_conditions_examples() {
        let tol = Tolerances::default();
        // First factor at a turning point forces the linear verdict.
        let spec = ProtocolSpec::split_1d(2.0 * PI / 3.0, 0.4);
        assert_eq!(
            boundary_kind_from_conditions(&spec, t(3), &tol),
            BoundaryKind::DiracCone
        );
        // Second coin at a quarter turn flattens the bands.
        let spec = ProtocolSpec::split_1d(0.77, PI);
        assert_eq!(
            boundary_kind_from_conditions(&spec, t(1), &tol),
            BoundaryKind::FlatBand
        );
        // Split 2D with one vanishing product but non-flat bands is linear.
        let spec = ProtocolSpec::split_2d(2.0 * PI / 3.0, 2.0 * PI / 3.0);
        assert_eq!(
            boundary_kind_from_conditions(&spec, t(3), &tol),
            BoundaryKind::DiracCone
        );
    }

    #[test]
    fn simple1d_closings_all_dirac() {
        for n in 2..=8u32 {
            let spec = ProtocolSpec::simple_1d(0.0);
            for c in locate_gap_closings(&spec, t(n), (0.0, 2.0 * PI), 512).unwrap() {
                assert_eq!(
                    classify_boundary(&spec, t(n), &c).unwrap(),
                    BoundaryKind::DiracCone
                );
            }
        }
    }

    #[test]
    fn winding_quantizes_and_flips_across_closings() {
        let v = winding_number(&ProtocolSpec::simple_1d(PI / 2.0), t(1), 2048).unwrap();
        assert_eq!(v.quantized, Some(-1));
        // The coin half-angle crosses a turning point at theta = 2 pi for
        // T = 1; the quantized winding flips there.
        let before = winding_number(&ProtocolSpec::simple_1d(2.0 * PI - 0.3), t(1), 2048).unwrap();
        let after = winding_number(&ProtocolSpec::simple_1d(2.0 * PI + 0.3), t(1), 2048).unwrap();
        assert_eq!(before.quantized, Some(-1));
        assert_eq!(after.quantized, Some(1));
    }

    #[test]
    fn winding_matches_phase_unwrap_oracle() {
        // Independent route: unwrap the angle of n(k) in the frame of the
        // great circle perpendicular to the chiral axis.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let tol = Tolerances::default();
        let mut checked = 0;
        while checked < 20 {
            let spec = if rng.gen_bool(0.5) {
                ProtocolSpec::simple_1d(rng.gen_range(0.0..2.0 * PI))
            } else {
                ProtocolSpec::split_1d(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI))
            };
            let tt = t(rng.gen_range(1..=6));
            if kspace::band_statistics(&spec, tt, 512).min_gap_distance < 0.05 {
                continue;
            }
            let v = winding_number(&spec, tt, 2048).unwrap();
            let axis = chiral_data(&spec, tt).unwrap().axis;
            let e1 = [axis[2], 0.0, -axis[0]];
            let e2 = cross(axis, e1);
            let res = 4096;
            let mut prev: Option<f64> = None;
            let mut acc = 0.0;
            for i in 0..=res {
                let k = -PI + 2.0 * PI * i as f64 / res as f64;
                let n = match bloch_vector(&spec, tt, Momentum::one(k), &tol) {
                    BlochVector::Defined { n } => n,
                    BlochVector::IllDefined => panic!("gapped spec expected"),
                };
                let phase = dot(n, e2).atan2(dot(n, e1));
                if let Some(p) = prev {
                    let mut d = phase - p;
                    while d > PI {
                        d -= 2.0 * PI;
                    }
                    while d < -PI {
                        d += 2.0 * PI;
                    }
                    acc += d;
                }
                prev = Some(phase);
            }
            let oracle = acc / (2.0 * PI);
            assert!(
                (oracle - v.value).abs() < 1e-3,
                "quadrature {} vs unwrap {} for {spec:?}",
                v.value,
                oracle
            );
            checked += 1;
        }
    }

    #[test]
    fn winding_rejects_gapless_grid() {
        let e = winding_number(&ProtocolSpec::simple_1d(PI), t(2), 2048);
        assert!(matches!(e, Err(TopologyError::GaplessOnGrid(_))));
    }

    #[test]
    fn winding_closed_form_values() {
        // Half angle at pi: cosecant singular, domain error.
        let v = winding_closed_form(t(2), PI).unwrap_err();
        assert!(matches!(v, TopologyError::WindingDomain(_)));
        // Half angle pi/6: -sin(pi/6) sqrt(csc(pi/6)) = -0.5 sqrt(2).
        let v = winding_closed_form(t(1), PI / 3.0).unwrap();
        assert!((v - (-0.5 * 2.0f64.sqrt())).abs() < 1e-12);
        // Half angle pi/2: -1.
        let v = winding_closed_form(t(2), PI / 2.0).unwrap();
        assert!((v + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zak_phase_cases() {
        // Numerator tangent zero: ratio 0 (to roundoff).
        match zak_phase(t(2), PI, PI / 4.0, ZakMode::Signed) {
            ZakValue::Finite(c) => assert!(c.abs() < 1e-12),
            ZakValue::Divergent => panic!(),
        }
        // Pole of the denominator tangent: divergent.
        assert_eq!(zak_phase(t(1), 0.3, PI, ZakMode::Signed), ZakValue::Divergent);
        // Vanishing denominator: divergent.
        assert_eq!(
            zak_phase(t(1), 0.3, 2.0 * PI, ZakMode::Signed),
            ZakValue::Divergent
        );
        // Equal angles: ratio 1.
        match zak_phase(t(1), 0.9, 0.9, ZakMode::Signed) {
            ZakValue::Finite(c) => assert!((c - 1.0).abs() < 1e-12),
            ZakValue::Divergent => panic!(),
        }
        // Absolute mode is non-negative.
        match zak_phase(t(1), -0.8, 0.4, ZakMode::Absolute) {
            ZakValue::Finite(v) => assert!(v >= 0.0),
            ZakValue::Divergent => panic!(),
        }
    }

    #[test]
    fn chern_vanishes_for_both_2d_families() {
        let v = chern_number(&ProtocolSpec::simple_2d(PI / 5.0), t(8), 64).unwrap();
        assert_eq!(v.quantized, Some(0));
        assert!(v.value.abs() < 1e-3);
        let spec = ProtocolSpec::split_2d_related(PI / 5.0, AngleRelation::third_shifted());
        let v = chern_number(&spec, t(8), 64).unwrap();
        assert_eq!(v.quantized, Some(0));
        // Doubling the resolution barely moves the value.
        let v2 = chern_number(&spec, t(8), 128).unwrap();
        assert!((v.value - v2.value).abs() < 1e-4);
    }

    #[test]
    fn path_counts() {
        // No closings on a short gapped path.
        let spec = ProtocolSpec::simple_1d(0.0);
        let p = path_invariants(&spec, t(4), 0.2, 0.6, 256).unwrap();
        assert_eq!(p, PathInvariants { q0: 0, qpi: 0 });
        // Crossing theta = pi/2 at T=4: one closing, zero sector.
        let p = path_invariants(&spec, t(4), PI / 4.0, 3.0 * PI / 4.0, 256).unwrap();
        assert_eq!(p, PathInvariants { q0: 1, qpi: 0 });
        // The full cell carries five closings.
        let spec = ProtocolSpec::split_1d_related(0.0, AngleRelation::third_shifted());
        let p = path_invariants(&spec, t(6), -PI / 2.0 - 0.05, PI / 2.0 + 0.05, 512).unwrap();
        assert_eq!(p.q0 + p.qpi, 5);
        // Gapless endpoint is rejected.
        let e = path_invariants(&spec, t(6), -PI / 2.0, 0.1, 256);
        assert!(matches!(e, Err(TopologyError::EndpointGapless(_))));
    }

    #[test]
    fn position_resolved_limits() {
        let profile = InhomogeneousProfile::new(1.2);
        // Far from the interface the local invariant equals the homogeneous
        // one at the saturated angle.
        let far = position_resolved_invariant(&profile, t(6), 40, 1024).unwrap();
        let (alpha, beta) = profile.angles_at(1e9);
        let homog = winding_number(&ProtocolSpec::split_1d(alpha, beta), t(6), 1024).unwrap();
        assert_eq!(far.quantized, homog.quantized);
        assert!(far.quantized.is_some());
        // At the interface centre the angles collapse to (0, pi/3); gapped at T=4.
        let centre = position_resolved_invariant(&profile, t(4), 0, 1024).unwrap();
        let homog = winding_number(&ProtocolSpec::split_1d(0.0, PI / 3.0), t(4), 1024).unwrap();
        assert_eq!(centre.quantized, homog.quantized);
        // At T=6 the centre sits exactly on a linear closing: gapless marker.
        assert!(matches!(
            position_resolved_invariant(&profile, t(6), 0, 1024),
            Err(TopologyError::GaplessOnGrid(_))
        ));
    }

    #[test]
    fn classifier_totality_on_random_scans() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let spec = ProtocolSpec::split_1d(0.0, rng.gen_range(-PI..PI));
            let tt = t(rng.gen_range(2..=8));
            for c in locate_gap_closings(&spec, tt, (-PI, PI), 512).unwrap() {
                classify_boundary(&spec, tt, &c).unwrap();
            }
        }
    }
}
