//! Position-space evolution on a ring: ballistic drift under the identity
//! coin, dispersive spreading at a generic angle, and the bounded
//! oscillation of a frozen flat-band walk, plus the plane-wave check tying
//! the evolution to the momentum-space bands.
//!
//! Run: cargo run --example realspace_walk

use std::f64::consts::PI;
use topowalk::mat2::Spinor;
use topowalk::realspace::{
    evolve, new_state, plane_wave_eigencheck, CoinScaling, LatticeGeometry, Observable, Stepper,
};
use topowalk::{Momentum, ProtocolSpec, StepIndex};

fn main() {
    let ring = LatticeGeometry::ring(256).unwrap();
    let steps = 60;
    let observables = [Observable::Norm, Observable::MeanPosition, Observable::Variance];

    let runs = [
        ("drift (theta=0)", ProtocolSpec::simple_1d(0.0), CoinScaling::ByStepNumber, Spinor::up_state()),
        ("dispersive (theta=0.6)", ProtocolSpec::simple_1d(0.6), CoinScaling::ByStepNumber, Spinor::balanced()),
        (
            "flat band (frozen T=2, theta=pi/2)",
            ProtocolSpec::simple_1d(PI / 2.0),
            CoinScaling::Frozen(StepIndex::new(2).unwrap()),
            Spinor::balanced(),
        ),
    ];
    for (label, spec, scaling, spinor) in runs {
        let state = new_state(ring, &[0], spinor).unwrap();
        let stepper = Stepper::Protocol { spec, scaling };
        let (final_state, traj) = evolve(&state, &stepper, steps, &observables).unwrap();
        let last = traj.records.last().unwrap();
        println!("{label}");
        println!(
            "  after {steps} steps: norm = {:.12}, <x> = {:+.3}, var = {:.3}",
            last.norm.unwrap(),
            last.mean_position.unwrap(),
            last.variance.unwrap()
        );
        let dist = final_state.position_distribution();
        let support = dist.iter().filter(|p| **p > 1e-6).count();
        println!("  sites with weight > 1e-6: {support}");
    }

    println!("\nplane-wave stationarity (one frozen step vs e^(-i E+)):");
    for (label, spec, k) in [
        ("simple1d T=3", ProtocolSpec::simple_1d(0.7), Momentum::one(2.0 * PI * 5.0 / 64.0)),
        ("split1d  T=5", ProtocolSpec::split_1d(0.8, -0.4), Momentum::one(2.0 * PI * 9.0 / 64.0)),
    ] {
        let t = StepIndex::new(if label.contains("T=3") { 3 } else { 5 }).unwrap();
        let dev = plane_wave_eigencheck(&spec, t, k, 64).unwrap();
        println!("  {label}: deviation = {dev:.2e}");
    }
}
