//! Position-space evolution of the walks on periodic rings and tori.
//!
//! Two coin-indexing modes are supported. Under `ByStepNumber` the coin
//! angle at step m is `m * angle / 2`, the product-of-steps picture in which
//! the walk is actually run. Under `Frozen(T)` every step uses `T * angle /
//! 2`, the stroboscopic walk whose one-step unitary is the object analyzed
//! in momentum space; the plane-wave check and the interface probe use this
//! mode so that bulk invariants and dynamics refer to the same generator.
//!
//! Geometry is periodic only. A ring larger than twice the step count keeps
//! the wavefront from wrapping, which makes the ring indistinguishable from
//! the infinite line; `Trajectory::wrap_margin_ok` records whether that
//! margin held.

use crate::kspace;
use crate::mat2::{ComplexAmplitude, Mat2, Spinor};
use crate::protocol::{
    Family, InhomogeneousProfile, Momentum, ProtocolSpec, StepIndex,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RealspaceError {
    #[error("lattice extent must be at least 4, got {0}")]
    ExtentTooSmall(usize),
    #[error("initial position {position} outside extent {extent}")]
    PositionOutOfRange { position: i64, extent: usize },
    #[error("initial spinor norm {0} is not 1")]
    UnnormalizedSpinor(f64),
    #[error("state geometry is {state_dim}D but family {family} walks in {family_dim}D")]
    GeometryMismatch {
        family: Family,
        family_dim: usize,
        state_dim: usize,
    },
    #[error("evolution needs at least one step")]
    NoSteps,
    #[error("momentum {0} is not commensurate with extent {1}")]
    IncommensurateMomentum(f64, usize),
    #[error("inhomogeneous stepping is one-dimensional")]
    InhomogeneousNeedsRing,
}

/// Periodic lattice: a ring or a torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeGeometry {
    Ring { extent: usize },
    Torus { nx: usize, ny: usize },
}

impl LatticeGeometry {
    pub fn ring(extent: usize) -> Result<Self, RealspaceError> {
        if extent < 4 {
            return Err(RealspaceError::ExtentTooSmall(extent));
        }
        Ok(LatticeGeometry::Ring { extent })
    }

    pub fn torus(nx: usize, ny: usize) -> Result<Self, RealspaceError> {
        if nx < 4 || ny < 4 {
            return Err(RealspaceError::ExtentTooSmall(nx.min(ny)));
        }
        Ok(LatticeGeometry::Torus { nx, ny })
    }

    pub fn dimension(&self) -> usize {
        match self {
            LatticeGeometry::Ring { .. } => 1,
            LatticeGeometry::Torus { .. } => 2,
        }
    }

    pub fn sites(&self) -> usize {
        match self {
            LatticeGeometry::Ring { extent } => *extent,
            LatticeGeometry::Torus { nx, ny } => nx * ny,
        }
    }
}

/// Signed coordinate of a ring index, centred on zero.
pub fn signed_coordinate(index: usize, extent: usize) -> i64 {
    let i = index as i64;
    let n = extent as i64;
    if i <= n / 2 {
        i
    } else {
        i - n
    }
}

fn wrap_index(position: i64, extent: usize) -> usize {
    position.rem_euclid(extent as i64) as usize
}

/// Amplitude field over (sites x 2 internal states) with a step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    pub geometry: LatticeGeometry,
    /// Layout: `[site * 2 + spin]`, spin 0 = up; torus sites are row-major
    /// with y outer.
    pub amplitudes: Vec<ComplexAmplitude>,
    pub step: usize,
}

impl WalkState {
    pub fn total_norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Per-site probability; sums to one.
    pub fn position_distribution(&self) -> Vec<f64> {
        self.amplitudes
            .chunks_exact(2)
            .map(|pair| pair[0].norm_sqr() + pair[1].norm_sqr())
            .collect()
    }

    /// Mean signed position of a ring state.
    pub fn mean_position(&self) -> f64 {
        let LatticeGeometry::Ring { extent } = self.geometry else {
            panic!("mean position is defined for ring states")
        };
        self.position_distribution()
            .iter()
            .enumerate()
            .map(|(i, p)| p * signed_coordinate(i, extent) as f64)
            .sum()
    }

    /// Position variance of a ring state about its mean.
    pub fn position_variance(&self) -> f64 {
        let LatticeGeometry::Ring { extent } = self.geometry else {
            panic!("variance is defined for ring states")
        };
        let mean = self.mean_position();
        self.position_distribution()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let x = signed_coordinate(i, extent) as f64;
                p * (x - mean) * (x - mean)
            })
            .sum()
    }

    /// Probability within `|x| <= window` of a ring state.
    pub fn window_probability(&self, window: usize) -> f64 {
        let LatticeGeometry::Ring { extent } = self.geometry else {
            panic!("window probability is defined for ring states")
        };
        self.position_distribution()
            .iter()
            .enumerate()
            .filter(|(i, _)| signed_coordinate(*i, extent).unsigned_abs() as usize <= window)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Delta-localized normalized state at one site.
pub fn new_state(
    geometry: LatticeGeometry,
    position: &[i64],
    spinor: Spinor,
) -> Result<WalkState, RealspaceError> {
    if !spinor.is_normalized(1e-12) {
        return Err(RealspaceError::UnnormalizedSpinor(spinor.norm()));
    }
    let site = match geometry {
        LatticeGeometry::Ring { extent } => {
            let &[x] = position else {
                return Err(RealspaceError::PositionOutOfRange {
                    position: *position.first().unwrap_or(&0),
                    extent,
                });
            };
            if x.unsigned_abs() as usize > extent / 2 {
                return Err(RealspaceError::PositionOutOfRange {
                    position: x,
                    extent,
                });
            }
            wrap_index(x, extent)
        }
        LatticeGeometry::Torus { nx, ny } => {
            let &[x, y] = position else {
                return Err(RealspaceError::PositionOutOfRange {
                    position: *position.first().unwrap_or(&0),
                    extent: nx,
                });
            };
            if x.unsigned_abs() as usize > nx / 2 || y.unsigned_abs() as usize > ny / 2 {
                return Err(RealspaceError::PositionOutOfRange {
                    position: x.max(y),
                    extent: nx.min(ny),
                });
            }
            wrap_index(y, ny) * nx + wrap_index(x, nx)
        }
    };
    let mut amplitudes = vec![ComplexAmplitude::new(0.0, 0.0); geometry.sites() * 2];
    amplitudes[site * 2] = spinor.up;
    amplitudes[site * 2 + 1] = spinor.down;
    Ok(WalkState {
        geometry,
        amplitudes,
        step: 0,
    })
}

/// How the coin angle scales during evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoinScaling {
    /// Step m applies coin angle `m * angle / 2`.
    ByStepNumber,
    /// Every step applies `T * angle / 2`, the stroboscopic generator.
    Frozen(StepIndex),
}

impl CoinScaling {
    fn factor(&self, next_step: usize) -> f64 {
        match self {
            CoinScaling::ByStepNumber => next_step as f64,
            CoinScaling::Frozen(t) => f64::from(t.get()),
        }
    }
}

fn apply_uniform_coin(state: &mut WalkState, half_angle: f64) {
    let coin = Mat2::rotation_y(half_angle);
    for pair in state.amplitudes.chunks_exact_mut(2) {
        let s = coin.apply(&Spinor::new(pair[0], pair[1]));
        pair[0] = s.up;
        pair[1] = s.down;
    }
}

/// Shift kinds on the ring / torus.
#[derive(Clone, Copy)]
enum ShiftKind {
    /// up -> x+1, down -> x-1
    Both,
    /// up -> x+1, down stays
    UpOnly,
    /// down -> x-1, up stays
    DownOnly,
}

fn apply_shift_1d(state: &mut WalkState, kind: ShiftKind) {
    let LatticeGeometry::Ring { extent } = state.geometry else {
        unreachable!()
    };
    let n = extent;
    let old = state.amplitudes.clone();
    for site in 0..n {
        let up_src = match kind {
            ShiftKind::Both | ShiftKind::UpOnly => (site + n - 1) % n,
            ShiftKind::DownOnly => site,
        };
        let down_src = match kind {
            ShiftKind::Both | ShiftKind::DownOnly => (site + 1) % n,
            ShiftKind::UpOnly => site,
        };
        state.amplitudes[site * 2] = old[up_src * 2];
        state.amplitudes[site * 2 + 1] = old[down_src * 2 + 1];
    }
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

fn apply_shift_2d(state: &mut WalkState, axis: Axis) {
    let LatticeGeometry::Torus { nx, ny } = state.geometry else {
        unreachable!()
    };
    let old = state.amplitudes.clone();
    for y in 0..ny {
        for x in 0..nx {
            let site = y * nx + x;
            let (up_src, down_src) = match axis {
                Axis::X => (y * nx + (x + nx - 1) % nx, y * nx + (x + 1) % nx),
                Axis::Y => (((y + ny - 1) % ny) * nx + x, ((y + 1) % ny) * nx + x),
            };
            state.amplitudes[site * 2] = old[up_src * 2];
            state.amplitudes[site * 2 + 1] = old[down_src * 2 + 1];
        }
    }
}

/// Advance one step of a homogeneous protocol, factors applied right to left.
pub fn apply_step(
    state: &WalkState,
    spec: &ProtocolSpec,
    scaling: CoinScaling,
) -> Result<WalkState, RealspaceError> {
    if spec.dimension() != state.geometry.dimension() {
        return Err(RealspaceError::GeometryMismatch {
            family: spec.family(),
            family_dim: spec.dimension(),
            state_dim: state.geometry.dimension(),
        });
    }
    let mut next = state.clone();
    let m = state.step + 1;
    let factor = scaling.factor(m);
    let half = 0.5 * factor;
    match spec {
        ProtocolSpec::Simple1d { theta } => {
            apply_uniform_coin(&mut next, half * theta);
            apply_shift_1d(&mut next, ShiftKind::Both);
        }
        ProtocolSpec::Split1d { alpha, .. } => {
            let beta = spec.effective_beta().unwrap();
            apply_uniform_coin(&mut next, half * beta);
            apply_shift_1d(&mut next, ShiftKind::DownOnly);
            apply_uniform_coin(&mut next, half * alpha);
            apply_shift_1d(&mut next, ShiftKind::UpOnly);
        }
        ProtocolSpec::Simple2d { theta } => {
            apply_uniform_coin(&mut next, half * theta);
            apply_shift_2d(&mut next, Axis::X);
            apply_shift_2d(&mut next, Axis::Y);
        }
        ProtocolSpec::Split2d { alpha, .. } => {
            let beta = spec.effective_beta().unwrap();
            apply_uniform_coin(&mut next, half * beta);
            apply_shift_2d(&mut next, Axis::X);
            apply_uniform_coin(&mut next, half * alpha);
            apply_shift_2d(&mut next, Axis::Y);
        }
    }
    next.step = m;
    debug_assert!((next.total_norm_sqr() - 1.0).abs() < 1e-13);
    Ok(next)
}

/// Advance one split step with position-dependent coin angles.
pub fn apply_inhomogeneous_step(
    state: &WalkState,
    profile: &InhomogeneousProfile,
    scaling: CoinScaling,
) -> Result<WalkState, RealspaceError> {
    let LatticeGeometry::Ring { extent } = state.geometry else {
        return Err(RealspaceError::InhomogeneousNeedsRing);
    };
    let mut next = state.clone();
    let m = state.step + 1;
    let half = 0.5 * scaling.factor(m);

    let site_angles: Vec<(f64, f64)> = (0..extent)
        .map(|i| profile.angles_at(signed_coordinate(i, extent) as f64))
        .collect();
    let apply_site_coin = |state: &mut WalkState, pick_beta: bool| {
        for (site, pair) in state.amplitudes.chunks_exact_mut(2).enumerate() {
            let (alpha, beta) = site_angles[site];
            let angle = if pick_beta { beta } else { alpha };
            let coin = Mat2::rotation_y(half * angle);
            let s = coin.apply(&Spinor::new(pair[0], pair[1]));
            pair[0] = s.up;
            pair[1] = s.down;
        }
    };
    apply_site_coin(&mut next, true);
    apply_shift_1d(&mut next, ShiftKind::DownOnly);
    apply_site_coin(&mut next, false);
    apply_shift_1d(&mut next, ShiftKind::UpOnly);
    next.step = m;
    debug_assert!((next.total_norm_sqr() - 1.0).abs() < 1e-13);
    Ok(next)
}

/// A stepper bundles what `evolve` needs to advance one step.
#[derive(Debug, Clone, Copy)]
pub enum Stepper {
    Protocol {
        spec: ProtocolSpec,
        scaling: CoinScaling,
    },
    Inhomogeneous {
        profile: InhomogeneousProfile,
        scaling: CoinScaling,
    },
}

impl Stepper {
    pub fn apply(&self, state: &WalkState) -> Result<WalkState, RealspaceError> {
        match self {
            Stepper::Protocol { spec, scaling } => apply_step(state, spec, *scaling),
            Stepper::Inhomogeneous { profile, scaling } => {
                apply_inhomogeneous_step(state, profile, *scaling)
            }
        }
    }
}

/// Observables recorded along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Norm,
    MeanPosition,
    Variance,
    WindowProbability { window: usize },
}

/// One recorded step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub norm: Option<f64>,
    pub mean_position: Option<f64>,
    pub variance: Option<f64>,
    pub window_probability: Option<f64>,
}

/// Per-step observable records, including the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    /// True when the ring was large enough that the wavefront could not wrap
    /// (extent > 2 * steps + 2).
    pub wrap_margin_ok: bool,
}

fn record(state: &WalkState, observables: &[Observable]) -> StepRecord {
    let mut rec = StepRecord {
        step: state.step,
        norm: None,
        mean_position: None,
        variance: None,
        window_probability: None,
    };
    for obs in observables {
        match obs {
            Observable::Norm => rec.norm = Some(state.total_norm_sqr()),
            Observable::MeanPosition => rec.mean_position = Some(state.mean_position()),
            Observable::Variance => rec.variance = Some(state.position_variance()),
            Observable::WindowProbability { window } => {
                rec.window_probability = Some(state.window_probability(*window))
            }
        }
    }
    rec
}

/// Evolve `steps` steps, recording the requested observables at every step
/// (the initial state included). Returns the final state and the records.
pub fn evolve(
    state: &WalkState,
    stepper: &Stepper,
    steps: usize,
    observables: &[Observable],
) -> Result<(WalkState, Trajectory), RealspaceError> {
    if steps == 0 {
        return Err(RealspaceError::NoSteps);
    }
    let wrap_margin_ok = match state.geometry {
        LatticeGeometry::Ring { extent } => extent > 2 * steps + 2,
        LatticeGeometry::Torus { nx, ny } => nx.min(ny) > 2 * steps + 2,
    };
    let mut records = Vec::with_capacity(steps + 1);
    let mut current = state.clone();
    records.push(record(&current, observables));
    for _ in 0..steps {
        current = stepper.apply(&current)?;
        records.push(record(&current, observables));
    }
    Ok((
        current,
        Trajectory {
            records,
            wrap_margin_ok,
        },
    ))
}

/// Deviation between one frozen-coin real-space step applied to a plane-wave
/// stationary state and the phase `e^{-i E+}` predicted in momentum space.
///
/// The plane wave `psi_x = e^{-i k x} v / sqrt(N)` with `v` the positive
/// branch eigenvector ties the real-space shift convention to the momentum
/// diagonalization; the momentum must be commensurate with the ring.
pub fn plane_wave_eigencheck(
    spec: &ProtocolSpec,
    t: StepIndex,
    k: Momentum,
    extent: usize,
) -> Result<f64, RealspaceError> {
    let commensurate = |kc: f64| {
        let cycles = kc * extent as f64 / (2.0 * std::f64::consts::PI);
        (cycles - cycles.round()).abs() < 1e-9
    };
    if !commensurate(k.kx) || !k.ky.is_none_or(commensurate) {
        return Err(RealspaceError::IncommensurateMomentum(k.kx, extent));
    }
    let (lambda, v) = kspace::positive_branch_state(spec, t, k).map_err(|_| {
        RealspaceError::GeometryMismatch {
            family: spec.family(),
            family_dim: spec.dimension(),
            state_dim: k.dimension(),
        }
    })?;

    let geometry = if spec.dimension() == 1 {
        LatticeGeometry::ring(extent)?
    } else {
        LatticeGeometry::torus(extent, extent)?
    };
    let sites = geometry.sites();
    let norm = (sites as f64).sqrt().recip();
    let mut amplitudes = Vec::with_capacity(sites * 2);
    match geometry {
        LatticeGeometry::Ring { extent } => {
            for x in 0..extent {
                let phase = ComplexAmplitude::from_polar(norm, -k.kx * x as f64);
                amplitudes.push(v.up * phase);
                amplitudes.push(v.down * phase);
            }
        }
        LatticeGeometry::Torus { nx, ny } => {
            let ky = k.ky.unwrap();
            for y in 0..ny {
                for x in 0..nx {
                    let phase = ComplexAmplitude::from_polar(
                        norm,
                        -(k.kx * x as f64 + ky * y as f64),
                    );
                    amplitudes.push(v.up * phase);
                    amplitudes.push(v.down * phase);
                }
            }
        }
    }
    let state = WalkState {
        geometry,
        amplitudes,
        step: 0,
    };
    let stepped = apply_step(&state, spec, CoinScaling::Frozen(t))?;
    let deviation: f64 = stepped
        .amplitudes
        .iter()
        .zip(&state.amplitudes)
        .map(|(new, old)| (*new - *old * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(deviation)
}

/// Time-averaged probability near the interface of the inhomogeneous walk.
///
/// Evolves a balanced delta state at the origin for `T` frozen-coin steps
/// and averages the window probability over steps 1..=T. Comparisons are
/// always against a paired homogeneous run (same engine, saturated angles);
/// the probe makes no absolute claim.
pub fn interface_localization(
    profile: &InhomogeneousProfile,
    t: StepIndex,
    window: usize,
    extent: usize,
) -> Result<f64, RealspaceError> {
    let geometry = LatticeGeometry::ring(extent)?;
    assert!(window < extent / 2, "window must fit inside the ring");
    let state = new_state(geometry, &[0], Spinor::balanced())?;
    let stepper = Stepper::Inhomogeneous {
        profile: *profile,
        scaling: CoinScaling::Frozen(t),
    };
    let steps = t.get() as usize;
    let (_, traj) = evolve(&state, &stepper, steps, &[Observable::WindowProbability { window }])?;
    let total: f64 = traj.records[1..]
        .iter()
        .map(|r| r.window_probability.unwrap())
        .sum();
    Ok(total / steps as f64)
}

/// Paired homogeneous baseline for [`interface_localization`]: the same run
/// with the coin angles frozen at the profile's saturated (+) bulk.
pub fn homogeneous_baseline(
    profile: &InhomogeneousProfile,
    t: StepIndex,
    window: usize,
    extent: usize,
) -> Result<f64, RealspaceError> {
    let geometry = LatticeGeometry::ring(extent)?;
    assert!(window < extent / 2);
    let state = new_state(geometry, &[0], Spinor::balanced())?;
    let (alpha, beta) = (profile.alpha1, profile.beta_relation.beta_for(profile.alpha1));
    let stepper = Stepper::Protocol {
        spec: ProtocolSpec::split_1d(alpha, beta),
        scaling: CoinScaling::Frozen(t),
    };
    let steps = t.get() as usize;
    let (_, traj) = evolve(&state, &stepper, steps, &[Observable::WindowProbability { window }])?;
    let total: f64 = traj.records[1..]
        .iter()
        .map(|r| r.window_probability.unwrap())
        .sum();
    Ok(total / steps as f64)
}
