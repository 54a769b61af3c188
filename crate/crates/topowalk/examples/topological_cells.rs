//! Cell structures of the split-step walk with linearly related coin angles
//! (beta = (alpha + pi)/3): at T=6 the window [-pi/2, pi/2] carries two
//! flat-band walls, two Fermi arcs, and a Dirac cone between them, so one
//! cell hosts every kind of boundary state.
//!
//! Run: cargo run --example topological_cells

use std::f64::consts::PI;
use topowalk::topology::enumerate_cells;
use topowalk::{AngleRelation, StepIndex};

fn main() {
    let relation = AngleRelation::third_shifted();
    for n in 2..=8u32 {
        let t = StepIndex::new(n).unwrap();
        let report = enumerate_cells(t, relation, (-PI / 2.0 - 1e-3, PI / 2.0 + 1e-3), 512)
            .expect("scan succeeds");
        println!(
            "T={n}: {} boundary events, cell pattern {}",
            report.ordered_boundaries.len(),
            if report.cell_pattern { "PRESENT" } else { "absent" }
        );
        for (angle, kind, sector) in &report.ordered_boundaries {
            println!("    alpha = {angle:+.6}   {kind:10}   {sector}");
        }
    }
    println!("\nThe five-event flat/fermi/dirac/fermi/flat run appears at T=6:");
    println!("two dispersionless walls enclose a linear crossing flanked by");
    println!("two nonlinear tangencies, separating four gapped phases.");
}
