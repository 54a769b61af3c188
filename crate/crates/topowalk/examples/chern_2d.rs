//! Chern numbers of the two-dimensional protocols: both vanish in every
//! gapped phase (the Bloch vector never wraps the sphere), shown with a
//! resolution-doubling convergence check.
//!
//! Run: cargo run --example chern_2d

use std::f64::consts::PI;
use topowalk::topology::chern_number;
use topowalk::{AngleRelation, ProtocolSpec, StepIndex};

fn main() {
    let t8 = StepIndex::new(8).unwrap();
    let cases = [
        ("simple2d theta=pi/5", ProtocolSpec::simple_2d(PI / 5.0)),
        (
            "split2d  alpha=pi/5, beta=(alpha+pi)/3",
            ProtocolSpec::split_2d_related(PI / 5.0, AngleRelation::third_shifted()),
        ),
        ("split2d  alpha=0.7, beta=-1.1", ProtocolSpec::split_2d(0.7, -1.1)),
    ];
    for (label, spec) in cases {
        let coarse = chern_number(&spec, t8, 64).unwrap();
        let fine = chern_number(&spec, t8, 128).unwrap();
        println!("{label}");
        println!(
            "  C(res  64) = {:+.3e}   quantized {}",
            coarse.value,
            coarse.quantized.map_or("-".into(), |q| q.to_string())
        );
        println!(
            "  C(res 128) = {:+.3e}   refinement shift {:.1e}",
            fine.value,
            (fine.value - coarse.value).abs()
        );
    }
    println!("\nGapless parameter points are rejected rather than integrated:");
    let gapless = ProtocolSpec::simple_2d(PI / 4.0); // closes at T=8
    match chern_number(&gapless, t8, 64) {
        Ok(_) => println!("  unexpected success"),
        Err(e) => println!("  simple2d theta=pi/4: {e}"),
    }
}
