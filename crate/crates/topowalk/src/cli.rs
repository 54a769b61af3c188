//! Command-line front end: `dispersion | invariants | classify | evolve |
//! sweep | verify`.
//!
//! Every command accepts `--config <file>` (TOML, schema line
//! `schema = "topowalk/v1"`, unknown keys rejected) with flag > config >
//! default precedence. Angle arguments accept pi expressions such as `pi`,
//! `-pi/4`, `2pi/5`, `0.7`. Exit codes: 0 success, 1 numerical or invariant
//! failure, 2 usage error. Worker count comes from `--threads`, then the
//! `TOPOWALK_THREADS` environment variable, then the machine default.

use crate::kspace::{self, BlochVector, VelocityValue};
use crate::protocol::{
    AngleRelation, Family, InhomogeneousProfile, Momentum, ProtocolSpec, StepIndex, Tolerances,
};
use crate::realspace::{self, CoinScaling, LatticeGeometry, Observable, Stepper};
use crate::sweep::{self, AxisSpec, MomentumAxes, Palette, Quantity, SweepRequest};
use crate::topology::{self, BoundaryKind, ZakMode, ZakValue};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const CONFIG_SCHEMA: &str = "topowalk/v1";

const EXIT_OK: i32 = 0;
const EXIT_NUMERIC: i32 = 1;
const EXIT_USAGE: i32 = 2;

// ---------------------------------------------------------------------------
// angle expressions
// ---------------------------------------------------------------------------

/// Parse `pi` expressions: `[sign][coef][*]pi[/div]` or a plain number.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s = text.trim().replace(' ', "");
    if s.is_empty() {
        return Err("empty angle expression".into());
    }
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    let lower = rest.to_ascii_lowercase();
    let Some(pi_pos) = lower.find("pi") else {
        // Plain number or plain fraction a/b.
        if let Some((num, den)) = rest.split_once('/') {
            let n: f64 = num
                .parse()
                .map_err(|_| format!("cannot parse angle `{text}`"))?;
            let d: f64 = den
                .parse()
                .map_err(|_| format!("cannot parse angle `{text}`"))?;
            if d == 0.0 {
                return Err(format!("zero divisor in `{text}`"));
            }
            return finite(sign * n / d, text);
        }
        return rest
            .parse::<f64>()
            .map_err(|_| format!("cannot parse angle `{text}`"))
            .and_then(|v| finite(sign * v, text));
    };
    let coef_text = &lower[..pi_pos];
    let coef = if coef_text.is_empty() {
        1.0
    } else {
        coef_text
            .strip_suffix('*')
            .unwrap_or(coef_text)
            .parse::<f64>()
            .map_err(|_| format!("bad coefficient in `{text}`"))?
    };
    let tail = &lower[pi_pos + 2..];
    let div = if tail.is_empty() {
        1.0
    } else {
        tail.strip_prefix('/')
            .ok_or_else(|| format!("unexpected trailing `{tail}` in `{text}`"))?
            .parse::<f64>()
            .map_err(|_| format!("bad divisor in `{text}`"))?
    };
    if div == 0.0 {
        return Err(format!("zero divisor in `{text}`"));
    }
    finite(sign * coef * PI / div, text)
}

fn finite(v: f64, text: &str) -> Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("angle `{text}` is not finite"))
    }
}

fn parse_pair(text: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `a,b`, got `{text}`"));
    }
    Ok((parse_angle(parts[0])?, parse_angle(parts[1])?))
}

// ---------------------------------------------------------------------------
// config file
// ---------------------------------------------------------------------------

/// Number that may be written as a float or a pi expression string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumExpr {
    Float(f64),
    Expr(String),
}

impl NumExpr {
    fn value(&self) -> Result<f64, String> {
        match self {
            NumExpr::Float(v) => Ok(*v),
            NumExpr::Expr(s) => parse_angle(s),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    pub gap_eps: Option<f64>,
    pub flat_eps: Option<f64>,
    pub unitarity_eps: Option<f64>,
    pub invariant_eps: Option<f64>,
}

impl TolerancesConfig {
    fn apply(&self, base: Tolerances) -> Tolerances {
        Tolerances {
            gap_eps: self.gap_eps.unwrap_or(base.gap_eps),
            flat_eps: self.flat_eps.unwrap_or(base.flat_eps),
            unitarity_eps: self.unitarity_eps.unwrap_or(base.unitarity_eps),
            invariant_eps: self.invariant_eps.unwrap_or(base.invariant_eps),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub family: Option<String>,
    pub t: Option<u32>,
    pub theta: Option<NumExpr>,
    pub alpha: Option<NumExpr>,
    pub beta: Option<NumExpr>,
    /// `[s1, s2]` meaning `beta = s1 * alpha + s2`.
    pub relation: Option<[NumExpr; 2]>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    #[serde(flatten)]
    pub protocol: ProtocolConfig,
    pub k: Option<String>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InvariantsConfig {
    #[serde(flatten)]
    pub protocol: ProtocolConfig,
    pub resolution: Option<usize>,
    pub from: Option<NumExpr>,
    pub to: Option<NumExpr>,
    pub samples: Option<usize>,
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    #[serde(flatten)]
    pub protocol: ProtocolConfig,
    pub range: Option<[NumExpr; 2]>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(flatten)]
    pub protocol: ProtocolConfig,
    pub steps: Option<usize>,
    pub extent: Option<usize>,
    pub position: Option<i64>,
    pub frozen: Option<bool>,
    pub inhomogeneous: Option<bool>,
    pub alpha1: Option<NumExpr>,
    pub width: Option<f64>,
    pub window: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub name: Option<String>,
    pub min: NumExpr,
    pub max: NumExpr,
    pub samples: usize,
}

impl AxisConfig {
    fn to_axis(&self, default_name: &str) -> Result<AxisSpec, String> {
        Ok(AxisSpec::new(
            self.name.as_deref().unwrap_or(default_name),
            self.min.value()?,
            self.max.value()?,
            self.samples,
        ))
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(flatten)]
    pub protocol: ProtocolConfig,
    pub t_list: Option<Vec<u32>>,
    pub quantity: Option<String>,
    pub angle_axis: Option<AxisConfig>,
    pub momentum_axis: Option<AxisConfig>,
    pub momentum_axis_y: Option<AxisConfig>,
    pub invariant_resolution: Option<usize>,
    pub out_csv: Option<PathBuf>,
    pub out_svg: Option<PathBuf>,
    pub palette: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub grid: Option<usize>,
    pub sets: Option<usize>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub eigencheck_cases: Option<usize>,
}

/// Root of the TOML run configuration.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    pub dispersion: Option<DispersionConfig>,
    pub invariants: Option<InvariantsConfig>,
    pub classify: Option<ClassifyConfig>,
    pub evolve: Option<EvolveConfig>,
    pub sweep: Option<SweepConfig>,
    pub verify: Option<VerifyConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| format!("config parse error: {e}"))?;
        match config.schema.as_deref() {
            Some(CONFIG_SCHEMA) => Ok(config),
            Some(other) => Err(format!(
                "unsupported config schema `{other}` (expected `{CONFIG_SCHEMA}`)"
            )),
            None => Err(format!(
                "config must declare `schema = \"{CONFIG_SCHEMA}\"`"
            )),
        }
    }
}

// ---------------------------------------------------------------------------
// argument parsing
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "topowalk",
    version,
    about = "Discrete-time quantum walks with step-scaled coins: bands, invariants, boundary states"
)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker thread cap (default: TOPOWALK_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Band energies, group velocity, and Bloch vector at one momentum.
    Dispersion(DispersionArgs),
    /// Winding, Zak-ratio, Chern, or path-counting invariants.
    Invariants(InvariantsArgs),
    /// Locate gap closings, classify them, and report cell patterns.
    Classify(ClassifyArgs),
    /// Evolve a walker in position space and export the trajectory.
    Evolve(EvolveArgs),
    /// Grid sweeps with CSV / SVG heatmap export.
    Sweep(SweepArgs),
    /// Numerical verification suite: symmetry identities and the
    /// plane-wave cross-check.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct ProtocolArgs {
    /// simple1d | split1d | simple2d | split2d
    #[arg(long)]
    family: Option<String>,
    /// Step count scaling the coin angles.
    #[arg(short = 'T', long)]
    t: Option<u32>,
    /// Rotation angle for simple protocols (pi expressions allowed).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// First rotation angle for split protocols.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Second rotation angle for split protocols.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Linear relation `s1,s2` meaning beta = s1*alpha + s2.
    #[arg(long, allow_hyphen_values = true)]
    relation: Option<String>,
}

#[derive(Args, Debug)]
struct DispersionArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Momentum `k` or `kx,ky` (pi expressions allowed).
    #[arg(long, allow_hyphen_values = true)]
    k: Option<String>,
    /// text | csv
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug)]
struct InvariantsArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Winding number over the zone (1D families).
    #[arg(long)]
    winding: bool,
    /// Zak-phase ratio of the split coin angles.
    #[arg(long)]
    zak: bool,
    /// Chern number over the zone (2D families).
    #[arg(long)]
    chern: bool,
    /// Count gap closings along a path of the primary angle.
    #[arg(long)]
    path: bool,
    /// Integration resolution.
    #[arg(long)]
    resolution: Option<usize>,
    /// Path start angle.
    #[arg(long, allow_hyphen_values = true)]
    from: Option<String>,
    /// Path end angle.
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    /// Path scan samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Zak mode: signed | absolute
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Angle scan range `lo,hi` for split protocols.
    #[arg(long = "alpha-range", allow_hyphen_values = true)]
    alpha_range: Option<String>,
    /// Angle scan range `lo,hi` for simple protocols.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    /// Scan samples.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    extent: Option<usize>,
    /// Initial position (signed; ring coordinates).
    #[arg(long)]
    position: Option<i64>,
    /// Freeze the coin scale at T instead of the step number.
    #[arg(long)]
    frozen: bool,
    /// Position-dependent coin profile (split 1D).
    #[arg(long)]
    inhomogeneous: bool,
    /// Profile amplitude.
    #[arg(long, allow_hyphen_values = true)]
    alpha1: Option<String>,
    /// Profile width.
    #[arg(long)]
    width: Option<f64>,
    /// Window half-width for the retained-probability column.
    #[arg(long)]
    window: Option<usize>,
    /// Trajectory CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// energy_plus | velocity_plus | gap_indicator | zak_signed |
    /// zak_absolute | winding | chern | position_invariant
    #[arg(long)]
    quantity: Option<String>,
    /// Step counts, comma separated.
    #[arg(long = "t-list")]
    t_list: Option<String>,
    /// Angle axis `name,min,max,samples`.
    #[arg(long = "angle-axis", allow_hyphen_values = true)]
    angle_axis: Option<String>,
    /// Momentum axis `min,max,samples` (or position axis).
    #[arg(long = "momentum-axis", allow_hyphen_values = true)]
    momentum_axis: Option<String>,
    /// Second momentum axis `min,max,samples` for 2D families.
    #[arg(long = "momentum-axis-y", allow_hyphen_values = true)]
    momentum_axis_y: Option<String>,
    #[arg(long)]
    resolution: Option<usize>,
    /// CSV output base path.
    #[arg(long = "out")]
    out_csv: Option<PathBuf>,
    /// SVG heatmap base path.
    #[arg(long = "svg")]
    out_svg: Option<PathBuf>,
    /// diverging | sequential
    #[arg(long)]
    palette: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Grid points per momentum axis (1D; 2D uses the square root scale).
    #[arg(long)]
    grid: Option<usize>,
    /// Random parameter sets per family.
    #[arg(long)]
    sets: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Residual threshold.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Plane-wave cross-check case count.
    #[arg(long = "eigencheck-cases")]
    eigencheck_cases: Option<usize>,
}

// ---------------------------------------------------------------------------
// entry points
// ---------------------------------------------------------------------------

/// Run from process arguments; returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args())
}

/// Run from explicit arguments; returns the exit code.
pub fn run_from<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message; help/version requests exit 0.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let config = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(msg) => {
                eprintln!("error: {msg}");
                return EXIT_USAGE;
            }
        },
        None => RunConfig::default(),
    };
    init_threads(cli.threads.or(config.threads));
    let tolerances = config.tolerances.apply(Tolerances::default());
    if let Err(msg) = tolerances.validate() {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }

    let outcome = match cli.command {
        Command::Dispersion(args) => cmd_dispersion(&args, &config, &tolerances),
        Command::Invariants(args) => cmd_invariants(&args, &config),
        Command::Classify(args) => cmd_classify(&args, &config),
        Command::Evolve(args) => cmd_evolve(&args, &config),
        Command::Sweep(args) => cmd_sweep(&args, &config, &tolerances),
        Command::Verify(args) => cmd_verify(&args, &config),
    };
    match outcome {
        Ok(code) => code,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CmdError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NUMERIC
        }
    }
}

fn init_threads(requested: Option<usize>) {
    let n = requested.or_else(|| {
        std::env::var("TOPOWALK_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        // Ignore failure: the global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

enum CmdError {
    Usage(String),
    Numeric(String),
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CmdError> {
    Err(CmdError::Usage(msg.into()))
}

// ---------------------------------------------------------------------------
// protocol resolution
// ---------------------------------------------------------------------------

struct ResolvedProtocol {
    spec: ProtocolSpec,
    t: StepIndex,
}

fn resolve_protocol(
    args: &ProtocolArgs,
    config: Option<&ProtocolConfig>,
) -> Result<ResolvedProtocol, CmdError> {
    let fam_text = args
        .family
        .clone()
        .or_else(|| config.and_then(|c| c.family.clone()));
    let Some(fam_text) = fam_text else {
        return usage("missing --family");
    };
    let family: Family = fam_text.parse().map_err(CmdError::Usage)?;
    let t = args
        .t
        .or_else(|| config.and_then(|c| c.t))
        .ok_or(CmdError::Usage("missing -T/--t step count".into()))?;
    let t = StepIndex::new(t).ok_or(CmdError::Usage("step count must be >= 1".into()))?;

    let angle = |flag: &Option<String>, cfg: Option<&NumExpr>| -> Result<Option<f64>, CmdError> {
        if let Some(text) = flag {
            return parse_angle(text).map(Some).map_err(CmdError::Usage);
        }
        match cfg {
            Some(expr) => expr.value().map(Some).map_err(CmdError::Usage),
            None => Ok(None),
        }
    };
    let theta = angle(&args.theta, config.and_then(|c| c.theta.as_ref()))?;
    let alpha = angle(&args.alpha, config.and_then(|c| c.alpha.as_ref()))?;
    let beta = angle(&args.beta, config.and_then(|c| c.beta.as_ref()))?;
    let relation = if let Some(text) = &args.relation {
        let (s1, s2) = parse_pair(text).map_err(CmdError::Usage)?;
        Some(AngleRelation::new(s1, s2))
    } else if let Some([s1, s2]) = config.and_then(|c| c.relation.as_ref()) {
        Some(AngleRelation::new(
            s1.value().map_err(CmdError::Usage)?,
            s2.value().map_err(CmdError::Usage)?,
        ))
    } else {
        None
    };

    let spec = match family {
        Family::Simple1d | Family::Simple2d => {
            let Some(theta) = theta else {
                return usage("missing --theta for a simple protocol");
            };
            if family == Family::Simple1d {
                ProtocolSpec::simple_1d(theta)
            } else {
                ProtocolSpec::simple_2d(theta)
            }
        }
        Family::Split1d | Family::Split2d => {
            let Some(alpha) = alpha else {
                return usage("missing --alpha for a split protocol");
            };
            let beta = match (beta, relation) {
                (_, Some(rel)) => rel.beta_for(alpha),
                (Some(b), None) => b,
                (None, None) => return usage("split protocols need --beta or --relation"),
            };
            match family {
                Family::Split1d => ProtocolSpec::Split1d {
                    alpha,
                    beta,
                    relation,
                },
                _ => ProtocolSpec::Split2d {
                    alpha,
                    beta,
                    relation,
                },
            }
        }
    };
    if !spec.angles_finite() {
        return usage("protocol angles must be finite");
    }
    Ok(ResolvedProtocol { spec, t })
}

fn parse_momentum(text: &str, family: Family) -> Result<Momentum, CmdError> {
    let parts: Vec<&str> = text.split(',').collect();
    match (family.dimension(), parts.as_slice()) {
        (1, [k]) => Ok(Momentum::one(parse_angle(k).map_err(CmdError::Usage)?)),
        (2, [kx, ky]) => Ok(Momentum::two(
            parse_angle(kx).map_err(CmdError::Usage)?,
            parse_angle(ky).map_err(CmdError::Usage)?,
        )),
        (d, _) => usage(format!("family needs a {d}-component momentum, got `{text}`")),
    }
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

fn cmd_dispersion(
    args: &DispersionArgs,
    config: &RunConfig,
    tol: &Tolerances,
) -> Result<i32, CmdError> {
    let section = config.dispersion.as_ref();
    let resolved = resolve_protocol(&args.protocol, section.map(|s| &s.protocol))?;
    let k_text = args
        .k
        .clone()
        .or_else(|| section.and_then(|s| s.k.clone()))
        .ok_or(CmdError::Usage("missing --k momentum".into()))?;
    let k = parse_momentum(&k_text, resolved.spec.family())?;
    let format = args
        .format
        .clone()
        .or_else(|| section.and_then(|s| s.format.clone()))
        .unwrap_or_else(|| "text".into());

    kspace::step_unitary(&resolved.spec, resolved.t, k)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let bands = kspace::dispersion(&resolved.spec, resolved.t, k);
    let gapless = bands.gap_distance() < tol.gap_eps;
    let velocity = kspace::group_velocity(&resolved.spec, resolved.t, k, tol);
    let bloch = kspace::bloch_vector(&resolved.spec, resolved.t, k, tol);

    match format.as_str() {
        "csv" => {
            println!("k,e_plus,e_minus,gapless,vx,vy,nx,ny,nz");
            let (vx, vy) = match velocity {
                VelocityValue::Defined { vx, vy } => {
                    (format!("{vx:.16e}"), vy.map_or("".into(), |v| format!("{v:.16e}")))
                }
                VelocityValue::IllDefined => ("nan".into(), "nan".into()),
            };
            let n = match bloch {
                BlochVector::Defined { n } => {
                    format!("{:.16e},{:.16e},{:.16e}", n[0], n[1], n[2])
                }
                BlochVector::IllDefined => "nan,nan,nan".into(),
            };
            println!(
                "{},{:.16e},{:.16e},{},{vx},{vy},{n}",
                k,
                bands.e_plus,
                bands.e_minus,
                u8::from(gapless)
            );
        }
        "text" => {
            println!(
                "family={} T={} k={}",
                resolved.spec.family(),
                resolved.t,
                k
            );
            println!(
                "E+ = {:+.12}  E- = {:+.12}  ({})",
                bands.e_plus,
                bands.e_minus,
                if gapless { "gapless" } else { "gapped" }
            );
            match velocity {
                VelocityValue::Defined { vx, vy: Some(vy) } => {
                    println!("V  = ({vx:+.12}, {vy:+.12})")
                }
                VelocityValue::Defined { vx, vy: None } => println!("V  = {vx:+.12}"),
                VelocityValue::IllDefined => println!("V  = ill-defined"),
            }
            match bloch {
                BlochVector::Defined { n } => {
                    println!("n  = ({:+.12}, {:+.12}, {:+.12})", n[0], n[1], n[2])
                }
                BlochVector::IllDefined => println!("n  = ill-defined"),
            }
        }
        other => return usage(format!("unknown format `{other}`")),
    }
    Ok(EXIT_OK)
}

fn cmd_invariants(args: &InvariantsArgs, config: &RunConfig) -> Result<i32, CmdError> {
    let section = config.invariants.as_ref();
    let resolved = resolve_protocol(&args.protocol, section.map(|s| &s.protocol))?;
    let resolution = args
        .resolution
        .or_else(|| section.and_then(|s| s.resolution))
        .unwrap_or(2048);
    let picked =
        u8::from(args.winding) + u8::from(args.zak) + u8::from(args.chern) + u8::from(args.path);
    if picked != 1 {
        return usage("pick exactly one of --winding, --zak, --chern, --path");
    }

    if args.winding {
        let v = topology::winding_number(&resolved.spec, resolved.t, resolution)
            .map_err(|e| CmdError::Numeric(e.to_string()))?;
        println!(
            "winding value={:+.8} quantized={} resolution={}",
            v.value,
            v.quantized.map_or("none".into(), |q| q.to_string()),
            v.resolution
        );
    } else if args.chern {
        let v = topology::chern_number(&resolved.spec, resolved.t, resolution.min(512))
            .map_err(|e| CmdError::Numeric(e.to_string()))?;
        println!(
            "chern value={:+.8} quantized={} resolution={}",
            v.value,
            v.quantized.map_or("none".into(), |q| q.to_string()),
            v.resolution
        );
    } else if args.zak {
        let mode_text = args
            .mode
            .clone()
            .or_else(|| section.and_then(|s| s.mode.clone()))
            .unwrap_or_else(|| "signed".into());
        let mode = match mode_text.as_str() {
            "signed" => ZakMode::Signed,
            "absolute" => ZakMode::Absolute,
            other => return usage(format!("unknown zak mode `{other}`")),
        };
        let alpha = resolved.spec.primary_angle();
        let beta = resolved
            .spec
            .effective_beta()
            .ok_or(CmdError::Usage("zak ratio needs a split protocol".into()))?;
        match topology::zak_phase(resolved.t, alpha, beta, mode) {
            ZakValue::Finite(v) => println!("zak value={v:+.8}"),
            ZakValue::Divergent => println!("zak value=divergent"),
        }
    } else {
        let from = args
            .from
            .as_deref()
            .map(parse_angle)
            .or_else(|| section.and_then(|s| s.from.as_ref()).map(|e| e.value()))
            .transpose()
            .map_err(CmdError::Usage)?
            .ok_or(CmdError::Usage("missing --from".into()))?;
        let to = args
            .to
            .as_deref()
            .map(parse_angle)
            .or_else(|| section.and_then(|s| s.to.as_ref()).map(|e| e.value()))
            .transpose()
            .map_err(CmdError::Usage)?
            .ok_or(CmdError::Usage("missing --to".into()))?;
        let samples = args
            .samples
            .or_else(|| section.and_then(|s| s.samples))
            .unwrap_or(512);
        let p = topology::path_invariants(&resolved.spec, resolved.t, from, to, samples)
            .map_err(|e| CmdError::Numeric(e.to_string()))?;
        println!("path q0={} qpi={}", p.q0, p.qpi);
    }
    Ok(EXIT_OK)
}

fn cmd_classify(args: &ClassifyArgs, config: &RunConfig) -> Result<i32, CmdError> {
    let section = config.classify.as_ref();
    let resolved = resolve_protocol_for_classify(args, section)?;
    let range_text = args.alpha_range.clone().or_else(|| args.range.clone());
    let range = if let Some(text) = range_text {
        parse_pair(&text).map_err(CmdError::Usage)?
    } else if let Some([lo, hi]) = section.and_then(|s| s.range.as_ref()) {
        (
            lo.value().map_err(CmdError::Usage)?,
            hi.value().map_err(CmdError::Usage)?,
        )
    } else {
        return usage("missing --alpha-range / --range");
    };
    if range.1 <= range.0 {
        println!("no closings (empty range)");
        return Ok(EXIT_OK);
    }
    let samples = args
        .samples
        .or_else(|| section.and_then(|s| s.samples))
        .unwrap_or(512);

    let closings = topology::locate_gap_closings(&resolved.spec, resolved.t, range, samples)
        .map_err(|e| CmdError::Numeric(e.to_string()))?;
    println!("angle           sector  kind        flat");
    let mut kinds = Vec::new();
    for c in &closings {
        let kind = topology::classify_boundary(&resolved.spec, resolved.t, c)
            .map_err(|e| CmdError::Numeric(e.to_string()))?;
        kinds.push(kind);
        println!(
            "{:+.10}  {:6}  {:10}  {}",
            c.angle,
            c.energy_sector.to_string(),
            kind.to_string(),
            if c.flat { "yes" } else { "no" }
        );
    }
    let pattern = [
        BoundaryKind::FlatBand,
        BoundaryKind::FermiArc,
        BoundaryKind::DiracCone,
        BoundaryKind::FermiArc,
        BoundaryKind::FlatBand,
    ];
    if kinds.windows(5).any(|w| w == pattern) {
        println!("pattern: CELL");
    }
    println!("{} closings", closings.len());
    Ok(EXIT_OK)
}

fn resolve_protocol_for_classify(
    args: &ClassifyArgs,
    section: Option<&ClassifyConfig>,
) -> Result<ResolvedProtocol, CmdError> {
    // The scan angle is the primary one, so a placeholder value is fine.
    let mut proto = args.protocol.clone();
    if proto.theta.is_none() && proto.alpha.is_none() {
        proto.theta = Some("0".into());
        proto.alpha = Some("0".into());
    }
    if proto.beta.is_none() && proto.relation.is_none() {
        proto.beta = Some("0".into());
    }
    resolve_protocol(&proto, section.map(|s| &s.protocol))
}

fn cmd_evolve(args: &EvolveArgs, config: &RunConfig) -> Result<i32, CmdError> {
    let section = config.evolve.as_ref();
    let inhomogeneous = args.inhomogeneous
        || section.and_then(|s| s.inhomogeneous).unwrap_or(false);
    let steps = args
        .steps
        .or_else(|| section.and_then(|s| s.steps))
        .ok_or(CmdError::Usage("missing --steps".into()))?;
    let extent = args
        .extent
        .or_else(|| section.and_then(|s| s.extent))
        .unwrap_or(2 * steps + 4);
    let position = args
        .position
        .or_else(|| section.and_then(|s| s.position))
        .unwrap_or(0);
    let frozen = args.frozen || section.and_then(|s| s.frozen).unwrap_or(false);
    let window = args
        .window
        .or_else(|| section.and_then(|s| s.window))
        .unwrap_or(4);

    let (stepper, dim, t) = if inhomogeneous {
        let alpha1 = args
            .alpha1
            .as_deref()
            .map(parse_angle)
            .or_else(|| section.and_then(|s| s.alpha1.as_ref()).map(|e| e.value()))
            .transpose()
            .map_err(CmdError::Usage)?
            .ok_or(CmdError::Usage("missing --alpha1".into()))?;
        let width = args
            .width
            .or_else(|| section.and_then(|s| s.width))
            .unwrap_or(3.0);
        let t = args
            .protocol
            .t
            .or_else(|| section.and_then(|s| s.protocol.t))
            .unwrap_or(steps as u32);
        let t = StepIndex::new(t.max(1)).unwrap();
        let profile = InhomogeneousProfile::new(alpha1).with_width(width);
        let scaling = if frozen {
            CoinScaling::Frozen(t)
        } else {
            CoinScaling::ByStepNumber
        };
        (
            Stepper::Inhomogeneous { profile, scaling },
            1usize,
            t,
        )
    } else {
        // The step count only enters through frozen-coin evolution; default
        // it to the number of steps so plain runs need no -T flag.
        let mut proto = args.protocol.clone();
        if proto.t.is_none() && section.is_none_or(|s| s.protocol.t.is_none()) {
            proto.t = Some((steps as u32).max(1));
        }
        let resolved = resolve_protocol(&proto, section.map(|s| &s.protocol))?;
        let scaling = if frozen {
            CoinScaling::Frozen(resolved.t)
        } else {
            CoinScaling::ByStepNumber
        };
        (
            Stepper::Protocol {
                spec: resolved.spec,
                scaling,
            },
            resolved.spec.dimension(),
            resolved.t,
        )
    };

    let geometry = if dim == 1 {
        LatticeGeometry::ring(extent).map_err(|e| CmdError::Usage(e.to_string()))?
    } else {
        LatticeGeometry::torus(extent, extent).map_err(|e| CmdError::Usage(e.to_string()))?
    };
    let positions: Vec<i64> = if dim == 1 {
        vec![position]
    } else {
        vec![position, position]
    };
    let state = realspace::new_state(geometry, &positions, crate::mat2::Spinor::up_state())
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let observables: Vec<Observable> = if dim == 1 {
        vec![
            Observable::Norm,
            Observable::MeanPosition,
            Observable::Variance,
            Observable::WindowProbability { window },
        ]
    } else {
        vec![Observable::Norm]
    };
    let (final_state, trajectory) = realspace::evolve(&state, &stepper, steps, &observables)
        .map_err(|e| CmdError::Numeric(e.to_string()))?;
    if !trajectory.wrap_margin_ok {
        eprintln!(
            "warning: extent {extent} < 2*steps+2; the wavefront can wrap around the ring"
        );
    }

    let mut csv = String::new();
    let _ = writeln!(
        csv,
        "# topowalk v1, family={}, T={}, quantity=trajectory",
        if inhomogeneous {
            "split1d".to_string()
        } else {
            match &stepper {
                Stepper::Protocol { spec, .. } => spec.family().to_string(),
                Stepper::Inhomogeneous { .. } => "split1d".to_string(),
            }
        },
        t
    );
    // axis2 codes: 0 norm, 1 mean position, 2 variance, 3 window probability.
    let _ = writeln!(csv, "axis1,axis2,value,gapless");
    for rec in &trajectory.records {
        let mut push = |code: usize, v: Option<f64>| {
            if let Some(v) = v {
                let _ = writeln!(csv, "{:.16e},{:.16e},{v:.16e},0", rec.step as f64, code as f64);
            }
        };
        push(0, rec.norm);
        push(1, rec.mean_position);
        push(2, rec.variance);
        push(3, rec.window_probability);
    }
    match args.out.clone().or_else(|| section.and_then(|s| s.out.clone())) {
        Some(path) => {
            std::fs::write(&path, csv).map_err(|e| CmdError::Numeric(e.to_string()))?;
            println!("trajectory written to {}", path.display());
        }
        None => print!("{csv}"),
    }
    if dim == 1 {
        println!("# final mean position = {:+.6}", final_state.mean_position());
        println!("# final norm          = {:.12}", final_state.total_norm_sqr());
    }
    Ok(EXIT_OK)
}

fn cmd_sweep(args: &SweepArgs, config: &RunConfig, tol: &Tolerances) -> Result<i32, CmdError> {
    let section = config.sweep.as_ref();
    let quantity_text = args
        .quantity
        .clone()
        .or_else(|| section.and_then(|s| s.quantity.clone()))
        .ok_or(CmdError::Usage("missing --quantity".into()))?;
    let quantity = match quantity_text.as_str() {
        "energy_plus" => Quantity::EnergyPlus,
        "velocity_plus" => Quantity::VelocityPlus,
        "gap_indicator" => Quantity::GapIndicator,
        "zak_signed" => Quantity::ZakSigned,
        "zak_absolute" => Quantity::ZakAbsolute,
        "winding" => Quantity::Winding,
        "chern" => Quantity::Chern,
        "position_invariant" => Quantity::PositionInvariant,
        other => return usage(format!("unknown quantity `{other}`")),
    };

    // The swept protocol needs a placeholder primary angle, and the step
    // count may come from the step list alone.
    let mut proto = args.protocol.clone();
    if proto.theta.is_none() && proto.alpha.is_none() {
        proto.theta = Some("0".into());
        proto.alpha = Some("0".into());
    }
    if proto.beta.is_none() && proto.relation.is_none() {
        proto.beta = Some("pi/3".into());
    }
    if proto.t.is_none() && section.is_none_or(|s| s.protocol.t.is_none()) {
        let first = args
            .t_list
            .as_ref()
            .and_then(|text| text.split(',').next()?.trim().parse::<u32>().ok())
            .or_else(|| {
                section
                    .and_then(|s| s.t_list.as_ref())
                    .and_then(|l| l.first().copied())
            });
        proto.t = first.map(|n| n.max(1));
    }
    let resolved = resolve_protocol(&proto, section.map(|s| &s.protocol))?;

    let t_list: Vec<StepIndex> = if let Some(text) = &args.t_list {
        text.split(',')
            .map(|s| {
                s.trim()
                    .parse::<u32>()
                    .ok()
                    .and_then(StepIndex::new)
                    .ok_or(CmdError::Usage(format!("bad step count `{s}`")))
            })
            .collect::<Result<_, _>>()?
    } else if let Some(list) = section.and_then(|s| s.t_list.clone()) {
        list.into_iter()
            .map(|n| StepIndex::new(n).ok_or(CmdError::Usage("step count must be >= 1".into())))
            .collect::<Result<_, _>>()?
    } else {
        vec![resolved.t]
    };

    let parse_axis = |text: &str, default_name: &str| -> Result<AxisSpec, CmdError> {
        let parts: Vec<&str> = text.split(',').collect();
        match parts.as_slice() {
            [name, min, max, samples] => Ok(AxisSpec::new(
                name,
                parse_angle(min).map_err(CmdError::Usage)?,
                parse_angle(max).map_err(CmdError::Usage)?,
                samples
                    .parse()
                    .map_err(|_| CmdError::Usage(format!("bad sample count `{samples}`")))?,
            )),
            [min, max, samples] => Ok(AxisSpec::new(
                default_name,
                parse_angle(min).map_err(CmdError::Usage)?,
                parse_angle(max).map_err(CmdError::Usage)?,
                samples
                    .parse()
                    .map_err(|_| CmdError::Usage(format!("bad sample count `{samples}`")))?,
            )),
            _ => usage(format!("axis `{text}` must be `[name,]min,max,samples`")),
        }
    };

    let angle_axis = if let Some(text) = &args.angle_axis {
        parse_axis(text, "angle")?
    } else if let Some(axis) = section.and_then(|s| s.angle_axis.as_ref()) {
        axis.to_axis("angle").map_err(CmdError::Usage)?
    } else {
        return usage("missing --angle-axis");
    };
    let momentum_axis = if let Some(text) = &args.momentum_axis {
        Some(parse_axis(text, "k")?)
    } else if let Some(axis) = section.and_then(|s| s.momentum_axis.as_ref()) {
        Some(axis.to_axis("k").map_err(CmdError::Usage)?)
    } else {
        None
    };
    let momentum_axis_y = if let Some(text) = &args.momentum_axis_y {
        Some(parse_axis(text, "ky")?)
    } else if let Some(axis) = section.and_then(|s| s.momentum_axis_y.as_ref()) {
        Some(axis.to_axis("ky").map_err(CmdError::Usage)?)
    } else {
        None
    };
    let momentum_axes = match (momentum_axis, momentum_axis_y) {
        (None, None) => MomentumAxes::None,
        (Some(k), None) => MomentumAxes::One(k),
        (Some(kx), Some(ky)) => MomentumAxes::Two(kx, ky),
        (None, Some(_)) => return usage("--momentum-axis-y needs --momentum-axis"),
    };

    let request = SweepRequest {
        spec: resolved.spec,
        t_list,
        angle_axis,
        momentum_axes,
        quantity,
        tolerances: *tol,
        invariant_resolution: args
            .resolution
            .or_else(|| section.and_then(|s| s.invariant_resolution))
            .unwrap_or(1024),
    };
    let result = sweep::run_sweep(&request).map_err(|e| match e {
        sweep::SweepError::InvalidRequest(m) => CmdError::Usage(m),
        other => CmdError::Numeric(other.to_string()),
    })?;

    let out_csv = args
        .out_csv
        .clone()
        .or_else(|| section.and_then(|s| s.out_csv.clone()));
    let out_svg = args
        .out_svg
        .clone()
        .or_else(|| section.and_then(|s| s.out_svg.clone()));
    let palette = args
        .palette
        .clone()
        .or_else(|| section.and_then(|s| s.palette.clone()))
        .map(|p| p.parse::<Palette>())
        .transpose()
        .map_err(CmdError::Usage)?
        .unwrap_or(Palette::Diverging);

    if out_csv.is_none() && out_svg.is_none() {
        // No destination: print the first grid to stdout.
        print!("{}", sweep::csv_string(&result, &result.grids[0]));
        return Ok(EXIT_OK);
    }
    if let Some(base) = out_csv {
        for path in
            sweep::export_csv(&result, &base).map_err(|e| CmdError::Numeric(e.to_string()))?
        {
            println!("csv written to {}", path.display());
        }
    }
    if let Some(base) = out_svg {
        for path in sweep::export_svg_heatmap(&result, &base, palette)
            .map_err(|e| CmdError::Numeric(e.to_string()))?
        {
            println!("svg written to {}", path.display());
        }
    }
    Ok(EXIT_OK)
}

fn cmd_verify(args: &VerifyArgs, config: &RunConfig) -> Result<i32, CmdError> {
    let section = config.verify.as_ref();
    let grid = args
        .grid
        .or_else(|| section.and_then(|s| s.grid))
        .unwrap_or(256);
    if grid < 2 {
        return usage("--grid must be at least 2");
    }
    let sets = args
        .sets
        .or_else(|| section.and_then(|s| s.sets))
        .unwrap_or(8);
    let seed = args
        .seed
        .or_else(|| section.and_then(|s| s.seed))
        .or(config.seed)
        .unwrap_or(7);
    let threshold = args
        .tolerance
        .or_else(|| section.and_then(|s| s.tolerance))
        .unwrap_or(1e-10);
    let eigencheck_cases = args
        .eigencheck_cases
        .or_else(|| section.and_then(|s| s.eigencheck_cases))
        .unwrap_or(25);

    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all_ok = true;
    println!("symmetry suite: grid={grid} sets={sets} threshold={threshold:.1e}");
    println!("family    T   chiral       particle-hole  time-rev     E-parity     |det-1|      |trH|");
    for family in Family::ALL {
        let grid_size = if family.dimension() == 1 {
            grid
        } else {
            // Match the total point count of the 1D grids.
            ((grid as f64).sqrt().round() as usize).max(2)
        };
        for _ in 0..sets {
            let t = StepIndex::new(rng.gen_range(1..=12)).unwrap();
            let spec = match family {
                Family::Simple1d => ProtocolSpec::simple_1d(rng.gen_range(0.0..2.0 * PI)),
                Family::Simple2d => ProtocolSpec::simple_2d(rng.gen_range(0.0..2.0 * PI)),
                Family::Split1d => {
                    ProtocolSpec::split_1d(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI))
                }
                Family::Split2d => {
                    ProtocolSpec::split_2d(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI))
                }
            };
            let report = kspace::symmetry_report(&spec, t, grid_size, &tol)
                .map_err(|e| CmdError::Numeric(e.to_string()))?;
            let fmt_opt = |v: Option<f64>| match v {
                Some(v) => format!("{v:10.3e}"),
                None => "     -    ".to_string(),
            };
            let ok = report.worst() < threshold;
            all_ok &= ok;
            println!(
                "{:9} {:3} {}  {:10.3e}   {}  {:10.3e}  {:10.3e}  {:10.3e}{}",
                family.label(),
                t,
                fmt_opt(report.max_chiral_residual),
                report.max_ph_residual,
                fmt_opt(report.max_tr_residual),
                report.max_even_energy_residual,
                report.max_det_deviation,
                report.max_trace_residual,
                if ok { "" } else { "  FAIL" }
            );
        }
    }

    println!("plane-wave cross-check: {eigencheck_cases} cases");
    let extent = 32usize;
    let mut worst_dev = 0.0f64;
    for _ in 0..eigencheck_cases {
        let family = Family::ALL[rng.gen_range(0..4)];
        let t = StepIndex::new(rng.gen_range(1..=10)).unwrap();
        let pick = |rng: &mut ChaCha8Rng| {
            2.0 * PI * rng.gen_range(0..extent as i64) as f64 / extent as f64
        };
        let (spec, k, extent_used) = match family {
            Family::Simple1d => (
                ProtocolSpec::simple_1d(rng.gen_range(0.0..2.0 * PI)),
                Momentum::one(pick(&mut rng)),
                extent,
            ),
            Family::Split1d => (
                ProtocolSpec::split_1d(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)),
                Momentum::one(pick(&mut rng)),
                extent,
            ),
            Family::Simple2d => (
                ProtocolSpec::simple_2d(rng.gen_range(0.0..2.0 * PI)),
                Momentum::two(pick(&mut rng), pick(&mut rng)),
                extent,
            ),
            Family::Split2d => (
                ProtocolSpec::split_2d(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)),
                Momentum::two(pick(&mut rng), pick(&mut rng)),
                extent,
            ),
        };
        let dev = realspace::plane_wave_eigencheck(&spec, t, k, extent_used)
            .map_err(|e| CmdError::Numeric(e.to_string()))?;
        worst_dev = worst_dev.max(dev);
    }
    let eig_ok = worst_dev < threshold;
    all_ok &= eig_ok;
    println!(
        "worst plane-wave deviation = {worst_dev:.3e}{}",
        if eig_ok { "" } else { "  FAIL" }
    );

    if all_ok {
        println!("verify: all residuals below {threshold:.1e}");
        Ok(EXIT_OK)
    } else {
        println!("verify: FAILURES above {threshold:.1e}");
        Ok(EXIT_NUMERIC)
    }
}
