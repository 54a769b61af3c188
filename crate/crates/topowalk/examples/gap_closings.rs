//! Gap-closing enumeration two ways: the closed-form angle sets of the
//! simple protocols against the numeric tangency scan, plus the 2 pi / T
//! spacing law that packs closings denser as the step count grows.
//!
//! Run: cargo run --example gap_closings

use std::f64::consts::PI;
use topowalk::topology::{analytic_gap_angles, locate_gap_closings, ClosingQuery, EnergySector};
use topowalk::{Family, Momentum, ProtocolSpec, StepIndex};

fn main() {
    println!("simple 1D closings in [0, 2pi], numeric scan vs analytic solutions\n");
    for n in 2..=8u32 {
        let t = StepIndex::new(n).unwrap();
        let numeric =
            locate_gap_closings(&ProtocolSpec::simple_1d(0.0), t, (0.0, 2.0 * PI), 512).unwrap();

        let mut analytic: Vec<f64> = Vec::new();
        for sector in [EnergySector::Zero, EnergySector::PlusMinusPi] {
            for k in [0.0, PI] {
                for c in analytic_gap_angles(
                    Family::Simple1d,
                    t,
                    ClosingQuery::Sector(sector),
                    Momentum::one(k),
                )
                .unwrap()
                {
                    analytic.push(c.angle);
                }
            }
        }
        analytic.sort_by(f64::total_cmp);
        analytic.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

        let worst = numeric
            .iter()
            .zip(&analytic)
            .map(|(c, a)| (c.angle - a).abs())
            .fold(0.0, f64::max);
        println!(
            "T={n}: {} closings, spacing 2pi/T = {:.6}, numeric-analytic mismatch {:.1e}",
            numeric.len(),
            2.0 * PI / f64::from(n),
            worst
        );
        let angles: Vec<String> = numeric.iter().map(|c| format!("{:.4}", c.angle)).collect();
        println!("      at theta = [{}]", angles.join(", "));
    }

    println!("\nflat-band angles (bands pinned to E=pi/2, gap open):");
    for n in [2u32, 4, 6] {
        let t = StepIndex::new(n).unwrap();
        let flats = analytic_gap_angles(
            Family::Simple1d,
            t,
            ClosingQuery::FlatBand,
            Momentum::one(0.0),
        )
        .unwrap();
        let angles: Vec<String> = flats.iter().map(|c| format!("{:.4}", c.angle)).collect();
        println!("T={n}: [{}]", angles.join(", "));
    }
}
