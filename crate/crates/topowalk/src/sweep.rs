//! Grid engines over (angle x momentum) or (angle x step) parameter planes,
//! with deterministic CSV and SVG heatmap export.
//!
//! Ill-defined cells (gapless points, divergent ratio values) are recorded
//! as sentinels and never interpolated. Exports carry no timestamps and use
//! fixed-width scientific notation, so identical requests produce
//! byte-identical files regardless of worker count.
//!
//! CSV schema, one file per grid:
//! `# topowalk v1, family=<..>, T=<..>, quantity=<..>` then the column line
//! `axis1,axis2,value,gapless` and one row-major data line per cell; values
//! print with 17 significant digits and ill-defined cells carry the literal
//! token `nan` with `gapless=1`.

use crate::kspace::{self, VelocityValue};
use crate::protocol::{Momentum, ProtocolSpec, StepIndex, Tolerances};
use crate::topology::{self, ZakMode, ZakValue};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep request: {0}")]
    InvalidRequest(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed sweep csv: {0}")]
    Parse(String),
}

/// Quantity evaluated on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    EnergyPlus,
    VelocityPlus,
    GapIndicator,
    ZakSigned,
    ZakAbsolute,
    Winding,
    Chern,
    PositionInvariant,
}

impl Quantity {
    pub fn label(&self) -> &'static str {
        match self {
            Quantity::EnergyPlus => "energy_plus",
            Quantity::VelocityPlus => "velocity_plus",
            Quantity::GapIndicator => "gap_indicator",
            Quantity::ZakSigned => "zak_signed",
            Quantity::ZakAbsolute => "zak_absolute",
            Quantity::Winding => "winding",
            Quantity::Chern => "chern",
            Quantity::PositionInvariant => "position_invariant",
        }
    }

    /// Momentum-resolved quantities grid over (angle x momentum); the rest
    /// grid over (angle x step) or (angle x position).
    pub fn momentum_resolved(&self) -> bool {
        matches!(
            self,
            Quantity::EnergyPlus | Quantity::VelocityPlus | Quantity::GapIndicator
        )
    }
}

/// One sampled axis, endpoint-inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

impl AxisSpec {
    pub fn new(name: &str, min: f64, max: f64, samples: usize) -> Self {
        AxisSpec {
            name: name.to_string(),
            min,
            max,
            samples,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.samples == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.samples as f64 - 1.0);
        (0..self.samples).map(|i| self.min + step * i as f64).collect()
    }

    fn validate(&self, min_samples: usize) -> Result<(), SweepError> {
        if self.samples < min_samples {
            return Err(SweepError::InvalidRequest(format!(
                "axis {} needs at least {min_samples} samples, got {}",
                self.name, self.samples
            )));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return Err(SweepError::InvalidRequest(format!(
                "axis {} has a degenerate range",
                self.name
            )));
        }
        if self.samples > 1 && self.max == self.min {
            return Err(SweepError::InvalidRequest(format!(
                "axis {} has zero width but several samples",
                self.name
            )));
        }
        Ok(())
    }
}

/// Momentum axes of a request: one sampled component, a sampled plane, or
/// none (invariant quantities). For position-invariant sweeps the single
/// axis is reinterpreted as an integer position range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MomentumAxes {
    None,
    One(AxisSpec),
    Two(AxisSpec, AxisSpec),
}

/// A full sweep request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRequest {
    pub spec: ProtocolSpec,
    pub t_list: Vec<StepIndex>,
    pub angle_axis: AxisSpec,
    pub momentum_axes: MomentumAxes,
    pub quantity: Quantity,
    pub tolerances: Tolerances,
    /// Integration resolution for winding/Chern cells.
    pub invariant_resolution: usize,
}

impl SweepRequest {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.t_list.is_empty() {
            return Err(SweepError::InvalidRequest("empty step list".into()));
        }
        self.tolerances
            .validate()
            .map_err(SweepError::InvalidRequest)?;
        if self.quantity.momentum_resolved() {
            // Exactly two varying axes among angle and momentum components.
            let mut varying = usize::from(self.angle_axis.samples > 1);
            match &self.momentum_axes {
                MomentumAxes::None => {
                    return Err(SweepError::InvalidRequest(
                        "momentum-resolved quantity needs a momentum axis".into(),
                    ))
                }
                MomentumAxes::One(k) => {
                    if self.spec.dimension() != 1 {
                        return Err(SweepError::InvalidRequest(
                            "2D family needs two momentum axes".into(),
                        ));
                    }
                    varying += usize::from(k.samples > 1);
                }
                MomentumAxes::Two(kx, ky) => {
                    if self.spec.dimension() != 2 {
                        return Err(SweepError::InvalidRequest(
                            "1D family takes a single momentum axis".into(),
                        ));
                    }
                    varying += usize::from(kx.samples > 1) + usize::from(ky.samples > 1);
                }
            }
            if varying != 2 {
                return Err(SweepError::InvalidRequest(format!(
                    "momentum-resolved sweeps need exactly two varying axes, got {varying}"
                )));
            }
            for axis in self.axes_for_validation() {
                if axis.samples > 1 {
                    axis.validate(8)?;
                } else {
                    axis.validate(1)?;
                }
            }
        } else {
            self.angle_axis.validate(8)?;
            match (&self.quantity, &self.momentum_axes) {
                (Quantity::PositionInvariant, MomentumAxes::One(x)) => x.validate(2)?,
                (Quantity::PositionInvariant, _) => {
                    return Err(SweepError::InvalidRequest(
                        "position-invariant sweeps take one position axis".into(),
                    ))
                }
                (_, MomentumAxes::None) => {}
                _ => {
                    return Err(SweepError::InvalidRequest(
                        "invariant quantities take no momentum axis".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    fn axes_for_validation(&self) -> Vec<&AxisSpec> {
        let mut v = vec![&self.angle_axis];
        match &self.momentum_axes {
            MomentumAxes::None => {}
            MomentumAxes::One(k) => v.push(k),
            MomentumAxes::Two(kx, ky) => {
                v.push(kx);
                v.push(ky);
            }
        }
        v
    }
}

/// How a grid relates to the step list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridLabel {
    /// One grid per step count.
    PerStep(StepIndex),
    /// The step count is the column axis.
    StepAxis,
}

/// A rectangular result grid; `values[r * cols + c]`, NaN marks sentinel
/// cells (also flagged in `gapless`).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub label: GridLabel,
    pub rows: usize,
    pub cols: usize,
    pub row_axis: (String, Vec<f64>),
    pub col_axis: (String, Vec<f64>),
    pub values: Vec<f64>,
    pub gapless: Vec<bool>,
}

impl Grid {
    pub fn value(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn is_gapless(&self, r: usize, c: usize) -> bool {
        self.gapless[r * self.cols + c]
    }

    /// FNV-1a hash over the value bit patterns; stable fingerprint.
    pub fn content_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for v in &self.values {
            eat(&v.to_bits().to_le_bytes());
        }
        for g in &self.gapless {
            eat(&[u8::from(*g)]);
        }
        h
    }
}

/// Result of a sweep: the request echo, the grids, and the tool version.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub request: SweepRequest,
    pub grids: Vec<Grid>,
    pub version: &'static str,
}

const VERSION: &str = env!("CARGO_PKG_VERSION");
const SENTINEL: f64 = f64::NAN;

type Cell = (f64, bool);
type Axis = (String, Vec<f64>);
type CellEval = Box<dyn Fn(f64, f64) -> Cell + Sync>;

fn momentum_cell(
    spec: &ProtocolSpec,
    t: StepIndex,
    k: Momentum,
    quantity: Quantity,
    tol: &Tolerances,
) -> Cell {
    match quantity {
        Quantity::EnergyPlus => {
            let bands = kspace::dispersion(spec, t, k);
            (bands.e_plus, bands.gap_distance() < tol.gap_eps)
        }
        Quantity::VelocityPlus => match kspace::group_velocity(spec, t, k, tol) {
            VelocityValue::Defined { vx, .. } => (vx, false),
            VelocityValue::IllDefined => (SENTINEL, true),
        },
        Quantity::GapIndicator => {
            let gap = kspace::dispersion(spec, t, k).gap_distance();
            (gap, gap < tol.gap_eps)
        }
        _ => unreachable!("momentum_cell only serves momentum-resolved quantities"),
    }
}

fn invariant_cell(
    spec: &ProtocolSpec,
    t: StepIndex,
    quantity: Quantity,
    resolution: usize,
) -> Cell {
    match quantity {
        Quantity::ZakSigned | Quantity::ZakAbsolute => {
            let mode = if quantity == Quantity::ZakSigned {
                ZakMode::Signed
            } else {
                ZakMode::Absolute
            };
            let alpha = spec.primary_angle();
            let beta = spec.effective_beta().unwrap_or(alpha);
            match topology::zak_phase(t, alpha, beta, mode) {
                ZakValue::Finite(v) => (v, false),
                ZakValue::Divergent => (SENTINEL, true),
            }
        }
        Quantity::Winding => match topology::winding_number(spec, t, resolution) {
            Ok(v) => (v.value, false),
            Err(_) => (SENTINEL, true),
        },
        Quantity::Chern => match topology::chern_number(spec, t, resolution.max(64)) {
            Ok(v) => (v.value, false),
            Err(_) => (SENTINEL, true),
        },
        _ => unreachable!(),
    }
}

/// Run a sweep; cells evaluate independently (in parallel) and sentinel
/// cells never abort the grid.
pub fn run_sweep(request: &SweepRequest) -> Result<SweepResult, SweepError> {
    request.validate()?;
    let tol = request.tolerances;
    let quantity = request.quantity;
    let mut grids = Vec::new();

    if quantity.momentum_resolved() {
        for &t in &request.t_list {
            let (row_axis, col_axis, eval): (Axis, Axis, CellEval) = match &request.momentum_axes {
                MomentumAxes::One(kaxis) => {
                    let spec = request.spec;
                    (
                        (request.angle_axis.name.clone(), request.angle_axis.values()),
                        (kaxis.name.clone(), kaxis.values()),
                        Box::new(move |angle, k| {
                            momentum_cell(
                                &spec.with_primary_angle(angle),
                                t,
                                Momentum::one(k),
                                quantity,
                                &tol,
                            )
                        }),
                    )
                }
                MomentumAxes::Two(kx, ky) => {
                    let spec = request.spec;
                    if request.angle_axis.samples == 1 {
                        let angle = request.angle_axis.min;
                        (
                            (kx.name.clone(), kx.values()),
                            (ky.name.clone(), ky.values()),
                            Box::new(move |kxv, kyv| {
                                momentum_cell(
                                    &spec.with_primary_angle(angle),
                                    t,
                                    Momentum::two(kxv, kyv),
                                    quantity,
                                    &tol,
                                )
                            }),
                        )
                    } else {
                        // Angle varies: the fixed momentum component is the
                        // single-sample one.
                        let (vary, fixed, fixed_is_ky) = if ky.samples == 1 {
                            (kx.clone(), ky.min, true)
                        } else {
                            (ky.clone(), kx.min, false)
                        };
                        (
                            (request.angle_axis.name.clone(), request.angle_axis.values()),
                            (vary.name.clone(), vary.values()),
                            Box::new(move |angle, kv| {
                                let k = if fixed_is_ky {
                                    Momentum::two(kv, fixed)
                                } else {
                                    Momentum::two(fixed, kv)
                                };
                                momentum_cell(
                                    &spec.with_primary_angle(angle),
                                    t,
                                    k,
                                    quantity,
                                    &tol,
                                )
                            }),
                        )
                    }
                }
                MomentumAxes::None => unreachable!("validated"),
            };
            grids.push(fill_grid(
                GridLabel::PerStep(t),
                row_axis,
                col_axis,
                eval.as_ref(),
            ));
        }
    } else if quantity == Quantity::PositionInvariant {
        let MomentumAxes::One(xaxis) = &request.momentum_axes else {
            unreachable!("validated")
        };
        let ProtocolSpec::Split1d {
            relation: Some(relation),
            ..
        } = request.spec
        else {
            return Err(SweepError::InvalidRequest(
                "position-invariant sweeps need a related split 1D protocol".into(),
            ));
        };
        let resolution = request.invariant_resolution.max(256);
        for &t in &request.t_list {
            let positions: Vec<f64> = xaxis.values().iter().map(|x| x.round()).collect();
            let row_axis = ("alpha1".to_string(), request.angle_axis.values());
            let col_axis = ("x".to_string(), positions.clone());
            let eval = move |alpha1: f64, x: f64| -> Cell {
                let profile = crate::protocol::InhomogeneousProfile::new(alpha1)
                    .with_relation(relation);
                match topology::position_resolved_invariant(&profile, t, x as i64, resolution) {
                    Ok(v) => (v.value, false),
                    Err(_) => (SENTINEL, true),
                }
            };
            grids.push(fill_grid(GridLabel::PerStep(t), row_axis, col_axis, &eval));
        }
    } else {
        // Invariant quantities: rows are angles, columns are step counts.
        let row_axis = (request.angle_axis.name.clone(), request.angle_axis.values());
        let col_axis = (
            "T".to_string(),
            request.t_list.iter().map(|t| f64::from(t.get())).collect(),
        );
        let t_list = request.t_list.clone();
        let spec = request.spec;
        let resolution = request.invariant_resolution.max(256);
        let eval = move |angle: f64, t_val: f64| -> Cell {
            let t = t_list
                .iter()
                .copied()
                .find(|t| f64::from(t.get()) == t_val)
                .expect("column values come from the step list");
            invariant_cell(&spec.with_primary_angle(angle), t, quantity, resolution)
        };
        grids.push(fill_grid(GridLabel::StepAxis, row_axis, col_axis, &eval));
    }

    Ok(SweepResult {
        request: request.clone(),
        grids,
        version: VERSION,
    })
}

fn fill_grid(
    label: GridLabel,
    row_axis: (String, Vec<f64>),
    col_axis: (String, Vec<f64>),
    eval: &(dyn Fn(f64, f64) -> Cell + Sync),
) -> Grid {
    let rows = row_axis.1.len();
    let cols = col_axis.1.len();
    let cells: Vec<Cell> = (0..rows * cols)
        .into_par_iter()
        .map(|idx| {
            let (r, c) = (idx / cols, idx % cols);
            eval(row_axis.1[r], col_axis.1[c])
        })
        .collect();
    Grid {
        label,
        rows,
        cols,
        row_axis,
        col_axis,
        values: cells.iter().map(|c| c.0).collect(),
        gapless: cells.iter().map(|c| c.1).collect(),
    }
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// 17-significant-digit scientific notation; `nan` for sentinel cells.
fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn t_field(result: &SweepResult, grid: &Grid) -> String {
    match grid.label {
        GridLabel::PerStep(t) => t.to_string(),
        GridLabel::StepAxis => result
            .request
            .t_list
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join("|"),
    }
}

/// Output path for a grid: the base path, suffixed `_T<n>` before the
/// extension when the result holds several per-step grids.
pub fn grid_path(base: &Path, result: &SweepResult, grid: &Grid) -> PathBuf {
    let needs_suffix = result.grids.len() > 1;
    if !needs_suffix {
        return base.to_path_buf();
    }
    let GridLabel::PerStep(t) = grid.label else {
        return base.to_path_buf();
    };
    let stem = base.file_stem().unwrap_or_default().to_string_lossy();
    let ext = base
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    base.with_file_name(format!("{stem}_T{t}{ext}"))
}

fn write_csv_into(result: &SweepResult, grid: &Grid, out: &mut String) {
    let req = &result.request;
    out.push_str(&format!(
        "# topowalk v1, family={}, T={}, quantity={}\n",
        req.spec.family(),
        t_field(result, grid),
        req.quantity.label()
    ));
    out.push_str("axis1,axis2,value,gapless\n");
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_value(grid.row_axis.1[r]),
                fmt_value(grid.col_axis.1[c]),
                fmt_value(grid.value(r, c)),
                u8::from(grid.is_gapless(r, c))
            ));
        }
    }
}

/// Serialize one grid to the CSV schema.
pub fn csv_string(result: &SweepResult, grid: &Grid) -> String {
    let mut out = String::new();
    write_csv_into(result, grid, &mut out);
    out
}

/// Write every grid of the result; returns the paths written.
pub fn export_csv(result: &SweepResult, base: &Path) -> Result<Vec<PathBuf>, SweepError> {
    let mut paths = Vec::new();
    for grid in &result.grids {
        let path = grid_path(base, result, grid);
        let mut file = std::fs::File::create(&path)?;
        file.write_all(csv_string(result, grid).as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}

/// A parsed CSV grid: (axis1, axis2, value, gapless) rows.
pub type ParsedCsv = Vec<(f64, f64, f64, bool)>;

/// Parse a grid CSV back; used by the round-trip self-test and external
/// tooling.
pub fn parse_csv(text: &str) -> Result<ParsedCsv, SweepError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| SweepError::Parse("empty file".into()))?;
    if !header.starts_with("# topowalk v1") {
        return Err(SweepError::Parse("missing schema header".into()));
    }
    let columns = lines
        .next()
        .ok_or_else(|| SweepError::Parse("missing column line".into()))?;
    if columns != "axis1,axis2,value,gapless" {
        return Err(SweepError::Parse(format!("unexpected columns `{columns}`")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(SweepError::Parse(format!("row {i}: wrong arity")));
        }
        let parse = |s: &str| -> Result<f64, SweepError> {
            if s == "nan" {
                Ok(f64::NAN)
            } else {
                s.parse::<f64>()
                    .map_err(|e| SweepError::Parse(format!("row {i}: {e}")))
            }
        };
        rows.push((
            parse(parts[0])?,
            parse(parts[1])?,
            parse(parts[2])?,
            parts[3] == "1",
        ));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// SVG heatmap
// ---------------------------------------------------------------------------

/// Color palettes for the heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Palette {
    /// Blue through white to red, centered on the data midpoint.
    Diverging,
    /// Dark to light single hue.
    Sequential,
}

impl std::str::FromStr for Palette {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "diverging" => Ok(Palette::Diverging),
            "sequential" => Ok(Palette::Sequential),
            other => Err(format!("unknown palette `{other}`")),
        }
    }
}

fn palette_color(palette: Palette, x: f64) -> (u8, u8, u8) {
    let x = x.clamp(0.0, 1.0);
    match palette {
        Palette::Diverging => {
            // 0 -> blue, 0.5 -> white, 1 -> red.
            if x < 0.5 {
                let u = x * 2.0;
                let c = (60.0 + 195.0 * u) as u8;
                (c, c, 255)
            } else {
                let u = (x - 0.5) * 2.0;
                let c = (255.0 - 195.0 * u) as u8;
                (255, c, c)
            }
        }
        Palette::Sequential => {
            let c = (30.0 + 225.0 * x) as u8;
            (c, c, (60.0 + 160.0 * x) as u8)
        }
    }
}

const GAPLESS_COLOR: &str = "#2e8b57";

/// Render one grid to a standalone SVG heatmap string.
pub fn svg_string(result: &SweepResult, grid: &Grid, palette: Palette) -> String {
    let cell = 6.0_f64;
    let margin_left = 70.0;
    let margin_bottom = 46.0;
    let margin_top = 30.0;
    let margin_right = 16.0;
    let w = margin_left + grid.cols as f64 * cell + margin_right;
    let h = margin_top + grid.rows as f64 * cell + margin_bottom;

    let finite: Vec<f64> = grid.values.iter().copied().filter(|v| v.is_finite()).collect();
    let (lo, hi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.1}\" height=\"{h:.1}\" viewBox=\"0 0 {w:.1} {h:.1}\">\n"
    ));
    s.push_str(&format!(
        "<!-- topowalk v{} family={} quantity={} T={} -->\n",
        result.version,
        result.request.spec.family(),
        result.request.quantity.label(),
        t_field(result, grid)
    ));
    s.push_str(&format!(
        "<title>{} ({} x {})</title>\n",
        result.request.quantity.label(),
        grid.rows,
        grid.cols
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"white\"/>\n"
    ));
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let x = margin_left + c as f64 * cell;
            // Row index grows upward: first row at the bottom.
            let y = margin_top + (grid.rows - 1 - r) as f64 * cell;
            let fill = if grid.is_gapless(r, c) || !grid.value(r, c).is_finite() {
                GAPLESS_COLOR.to_string()
            } else {
                let (red, green, blue) = palette_color(palette, (grid.value(r, c) - lo) / span);
                format!("#{red:02x}{green:02x}{blue:02x}")
            };
            s.push_str(&format!(
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell:.1}\" height=\"{cell:.1}\" fill=\"{fill}\"/>\n"
            ));
        }
    }
    // Axis labels: name plus range endpoints.
    let x_mid = margin_left + grid.cols as f64 * cell / 2.0;
    let y_mid = margin_top + grid.rows as f64 * cell / 2.0;
    let bottom = margin_top + grid.rows as f64 * cell;
    s.push_str(&format!(
        "<text x=\"{x_mid:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
        bottom + 30.0,
        grid.col_axis.0
    ));
    s.push_str(&format!(
        "<text x=\"{margin_left:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"9\">{:.3}</text>\n",
        bottom + 14.0,
        grid.col_axis.1.first().copied().unwrap_or(0.0)
    ));
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"9\">{:.3}</text>\n",
        margin_left + grid.cols as f64 * cell,
        bottom + 14.0,
        grid.col_axis.1.last().copied().unwrap_or(0.0)
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{y_mid:.1}\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 16 {y_mid:.1})\">{}</text>\n",
        grid.row_axis.0
    ));
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"9\">{:.3}</text>\n",
        margin_left - 4.0,
        bottom,
        grid.row_axis.1.first().copied().unwrap_or(0.0)
    ));
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"9\">{:.3}</text>\n",
        margin_left - 4.0,
        margin_top + 8.0,
        grid.row_axis.1.last().copied().unwrap_or(0.0)
    ));
    s.push_str(&format!(
        "<text x=\"{x_mid:.1}\" y=\"18\" text-anchor=\"middle\" font-size=\"12\">{} [{} .. {}]</text>\n",
        result.request.quantity.label(),
        fmt_axis(lo),
        fmt_axis(hi)
    ));
    s.push_str("</svg>\n");
    s
}

fn fmt_axis(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "-".to_string()
    }
}

/// Write every grid of the result as an SVG heatmap.
pub fn export_svg_heatmap(
    result: &SweepResult,
    base: &Path,
    palette: Palette,
) -> Result<Vec<PathBuf>, SweepError> {
    let mut paths = Vec::new();
    for grid in &result.grids {
        let path = grid_path(base, result, grid);
        let mut file = std::fs::File::create(&path)?;
        file.write_all(svg_string(result, grid, palette).as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}
