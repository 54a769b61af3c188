//! Topological invariants in one dimension: the quantized winding number,
//! its sign flip across a gap closing, the non-integer closed-form
//! expression kept for reference, and the Zak-ratio map that separates
//! trivial from non-trivial phases.
//!
//! Run: cargo run --example winding_and_zak

use std::f64::consts::PI;
use topowalk::topology::{winding_closed_form, winding_number, zak_phase, ZakMode, ZakValue};
use topowalk::{ProtocolSpec, StepIndex};

fn main() {
    let t1 = StepIndex::new(1).unwrap();

    println!("winding across the T=1 closing at theta = 2 pi:");
    for theta in [1.2, 2.0, 3.0, 4.5, 5.8, 2.0 * PI + 0.3, 2.0 * PI + 1.0] {
        let v = winding_number(&ProtocolSpec::simple_1d(theta), t1, 2048).unwrap();
        println!(
            "  theta = {theta:6.3}:  winding = {:+.6}  (quantized {})",
            v.value,
            v.quantized.map_or("-".into(), |q| format!("{q:+}")),
        );
    }

    println!("\nclosed-form reference expression (generally non-integer):");
    for theta in [PI / 3.0, PI / 2.0, 2.0] {
        match winding_closed_form(t1, theta) {
            Ok(v) => println!("  theta = {theta:.4}: {v:+.6}"),
            Err(e) => println!("  theta = {theta:.4}: {e}"),
        }
    }
    println!("  (the quadrature above is the invariant; this is kept for comparison)");

    println!("\nZak ratio tan(T a/2)/tan(T b/2) along beta = pi/3, T=3:");
    let t3 = StepIndex::new(3).unwrap();
    for i in 0..=10 {
        let alpha = -PI + 2.0 * PI * i as f64 / 10.0;
        let line = match zak_phase(t3, alpha, PI / 3.0, ZakMode::Absolute) {
            ZakValue::Finite(c) => format!(
                "{c:8.4}  ({})",
                if c > 1.0 {
                    "trivial"
                } else if c < 1.0 {
                    "non-trivial"
                } else {
                    "closing"
                }
            ),
            ZakValue::Divergent => "divergent".to_string(),
        };
        println!("  alpha = {alpha:+.4}:  |C| = {line}");
    }
}
