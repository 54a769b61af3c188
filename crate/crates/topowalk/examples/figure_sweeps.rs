//! Reproduce the headline phase diagrams as data: band surfaces over
//! (angle x momentum) for T = 2..8, the Zak-ratio maps, and the flat-band
//! slice of the 2D walk. Writes CSV grids and SVG heatmaps under ./out.
//!
//! Run: cargo run --example figure_sweeps

use std::f64::consts::PI;
use std::path::Path;
use topowalk::sweep::{
    export_csv, export_svg_heatmap, run_sweep, AxisSpec, MomentumAxes, Palette, Quantity,
    SweepRequest,
};
use topowalk::{AngleRelation, ProtocolSpec, StepIndex, Tolerances};

fn t(n: u32) -> StepIndex {
    StepIndex::new(n).unwrap()
}

fn write(request: &SweepRequest, base: &str) {
    let result = run_sweep(request).expect("valid request");
    let csvs = export_csv(&result, Path::new(&format!("out/{base}.csv"))).unwrap();
    let svgs =
        export_svg_heatmap(&result, Path::new(&format!("out/{base}.svg")), Palette::Diverging)
            .unwrap();
    for p in csvs.iter().chain(&svgs) {
        println!("wrote {}", p.display());
    }
}

fn main() {
    std::fs::create_dir_all("out").unwrap();
    let tol = Tolerances::default();

    // Positive band and group velocity of the simple walk, T = 2..8.
    write(
        &SweepRequest {
            spec: ProtocolSpec::simple_1d(0.0),
            t_list: (2..=8).map(t).collect(),
            angle_axis: AxisSpec::new("theta", 0.0, 2.0 * PI, 201),
            momentum_axes: MomentumAxes::One(AxisSpec::new("k", -PI, PI, 201)),
            quantity: Quantity::EnergyPlus,
            tolerances: tol,
            invariant_resolution: 1024,
        },
        "simple1d_energy",
    );
    write(
        &SweepRequest {
            spec: ProtocolSpec::simple_1d(0.0),
            t_list: (2..=8).map(t).collect(),
            angle_axis: AxisSpec::new("theta", 0.0, 2.0 * PI, 201),
            momentum_axes: MomentumAxes::One(AxisSpec::new("k", -PI, PI, 201)),
            quantity: Quantity::VelocityPlus,
            tolerances: tol,
            invariant_resolution: 1024,
        },
        "simple1d_velocity",
    );

    // Split walk with beta fixed: energy surfaces and the |C| map.
    write(
        &SweepRequest {
            spec: ProtocolSpec::split_1d(0.0, PI / 3.0),
            t_list: (2..=8).map(t).collect(),
            angle_axis: AxisSpec::new("alpha", -PI, PI, 201),
            momentum_axes: MomentumAxes::One(AxisSpec::new("k", -PI, PI, 201)),
            quantity: Quantity::EnergyPlus,
            tolerances: tol,
            invariant_resolution: 1024,
        },
        "split1d_fixed_beta_energy",
    );
    write(
        &SweepRequest {
            spec: ProtocolSpec::split_1d(0.0, PI / 3.0),
            t_list: (2..=8).map(t).collect(),
            angle_axis: AxisSpec::new("alpha", -PI, PI, 401),
            momentum_axes: MomentumAxes::None,
            quantity: Quantity::ZakAbsolute,
            tolerances: tol,
            invariant_resolution: 1024,
        },
        "split1d_fixed_beta_zak",
    );

    // Related angles: the cell-bearing diagrams.
    write(
        &SweepRequest {
            spec: ProtocolSpec::split_1d_related(0.0, AngleRelation::third_shifted()),
            t_list: (2..=8).map(t).collect(),
            angle_axis: AxisSpec::new("alpha", -PI, PI, 201),
            momentum_axes: MomentumAxes::One(AxisSpec::new("k", -PI, PI, 201)),
            quantity: Quantity::EnergyPlus,
            tolerances: tol,
            invariant_resolution: 1024,
        },
        "split1d_related_energy",
    );

    // 2D: flat-band slice at theta = pi/8 and the gapped slice at pi/5, T=8.
    for (theta, name) in [(PI / 8.0, "simple2d_flat_slice"), (PI / 5.0, "simple2d_gapped_slice")] {
        write(
            &SweepRequest {
                spec: ProtocolSpec::simple_2d(theta),
                t_list: vec![t(8)],
                angle_axis: AxisSpec::new("theta", theta, theta, 1),
                momentum_axes: MomentumAxes::Two(
                    AxisSpec::new("kx", -PI, PI, 101),
                    AxisSpec::new("ky", -PI, PI, 101),
                ),
                quantity: Quantity::EnergyPlus,
                tolerances: tol,
                invariant_resolution: 1024,
            },
            name,
        );
    }

    // Position-resolved winding of the inhomogeneous walk at T=6.
    write(
        &SweepRequest {
            spec: ProtocolSpec::split_1d_related(0.0, AngleRelation::third_shifted()),
            t_list: vec![t(6)],
            angle_axis: AxisSpec::new("alpha1", 0.1, 1.5, 57),
            momentum_axes: MomentumAxes::One(AxisSpec::new("x", 1.0, 9.0, 9)),
            quantity: Quantity::PositionInvariant,
            tolerances: tol,
            invariant_resolution: 512,
        },
        "inhomogeneous_winding_map",
    );

    println!("done; open the SVGs in a browser or feed the CSVs to a plotter");
}
