//! Band structure basics: energies, group velocities, and Bloch vectors for
//! the four protocols, including gapless and flat-band points.
//!
//! Run: cargo run --example dispersion_and_velocity

use std::f64::consts::PI;
use topowalk::kspace::{bloch_vector, dispersion, group_velocity, BlochVector, VelocityValue};
use topowalk::{Momentum, ProtocolSpec, StepIndex, Tolerances};

fn show(label: &str, spec: &ProtocolSpec, t: StepIndex, k: Momentum) {
    let tol = Tolerances::default();
    let bands = dispersion(spec, t, k);
    print!("{label:28} k={k}  E+ = {:+.6}", bands.e_plus);
    match group_velocity(spec, t, k, &tol) {
        VelocityValue::Defined { vx, vy: Some(vy) } => print!("  V = ({vx:+.4}, {vy:+.4})"),
        VelocityValue::Defined { vx, vy: None } => print!("  V = {vx:+.4}"),
        VelocityValue::IllDefined => print!("  V = ill-defined"),
    }
    match bloch_vector(spec, t, k, &tol) {
        BlochVector::Defined { n } => println!("  n = ({:+.4}, {:+.4}, {:+.4})", n[0], n[1], n[2]),
        BlochVector::IllDefined => println!("  n = ill-defined"),
    }
}

fn main() {
    let t4 = StepIndex::new(4).unwrap();
    let t8 = StepIndex::new(8).unwrap();

    println!("-- simple 1D, T=4, theta=0.9 (gapped) --");
    let spec = ProtocolSpec::simple_1d(0.9);
    for k in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        show("simple1d", &spec, t4, Momentum::one(k));
    }

    println!("\n-- simple 1D, T=4, theta=pi (gap closes at k=0) --");
    let spec = ProtocolSpec::simple_1d(PI);
    for k in [0.0, 0.05, 0.5] {
        show("simple1d@closing", &spec, t4, Momentum::one(k));
    }

    println!("\n-- split 1D, T=4, alpha=0.8, beta=-0.5 --");
    let spec = ProtocolSpec::split_1d(0.8, -0.5);
    for k in [-PI, -1.0, 0.0, 1.0] {
        show("split1d", &spec, t4, Momentum::one(k));
    }

    println!("\n-- simple 2D, T=8, theta=pi/8 (flat bands at E=pi/2) --");
    let spec = ProtocolSpec::simple_2d(PI / 8.0);
    for (kx, ky) in [(0.0, 0.0), (1.0, -2.0), (PI, 0.3)] {
        show("simple2d@flat", &spec, t8, Momentum::two(kx, ky));
    }

    println!("\n-- split 2D, T=8, alpha=pi/5, beta=(alpha+pi)/3 --");
    let beta = (PI / 5.0 + PI) / 3.0;
    let spec = ProtocolSpec::split_2d(PI / 5.0, beta);
    for (kx, ky) in [(0.1, 0.2), (-1.5, 0.8), (2.0, -2.5)] {
        show("split2d", &spec, t8, Momentum::two(kx, ky));
    }
}
