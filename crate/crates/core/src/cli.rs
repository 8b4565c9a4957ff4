//! The `modent` command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a bound is violated, 2 on
//! usage, configuration or input errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::constants::{bound_for, c_n, d_n, k_const, ZERO_REGIME_RECOMPUTED};
use crate::error::{Error, Result};
use crate::fit::{fit_h_const, fit_h_family, verdict, FitReport, SearchRange};
use crate::glue::{build_phi, GlueInstance, GlueResult};
use crate::model::{AlphaCase, Box3, EntropyFn, Interpolation, Regime, SimplexGrid, SolutionFamily, SumFunction};
use crate::perturb::{NoiseField, NoiseMode};
use crate::residuals::{audit_chain, measure_eps_covering, ChainAudit, ChainStep, EpsPair};
use crate::tables::{
    format_interval_fn2, format_sum_function, parse_interval_fn2, parse_sum_function, read_text, write_atomic,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const LONG_ABOUT: &str = "\
Stability laboratory for f(x,y,z) = f(x,y+z,0) + (y+z)^alpha f(0, y/(y+z), z/(y+z)).

Any flag may also be set in a TOML file passed with --config, using the flag
name without the leading dashes as key (e.g. `box-hi = 1.0`). Flags given on
the command line override the file; unset values fall back to the defaults
shown for each flag.

Exit codes: 0 = all checks pass, 1 = a bound is violated, 2 = usage error.";

#[derive(Debug, Parser)]
#[command(name = "modent", version, about = "Stability laboratory for the modified entropy equation", long_about = LONG_ABOUT)]
pub struct Cli {
    /// TOML file with values for any flag; command-line flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print K(alpha) and the coefficients c_n, d_n for n = 1..n as CSV
    Constants(ConstantsArgs),
    /// Measure residuals, fit the nearest exact solution and check the bound
    Verify(ExperimentArgs),
    /// Build a sum-function from near-associative tables A and B
    Glue(GlueArgs),
    /// Repeat `verify` over a list of amplitudes, box indices or exponents
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct ConstantsArgs {
    /// Exponent alpha (> 0, != 1) [default: 2]
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Largest box index n [default: 10]
    #[arg(long)]
    pub n: Option<u32>,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct ExperimentArgs {
    /// Exponent alpha (!= 1) [default: -1]
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Box index n of the alpha > 0 bound; the box must lie in ]0, n]^3 [default: ceil(box-hi) when alpha > 0]
    #[arg(long)]
    pub n: Option<u32>,
    /// Lower coordinate of the sampling box [default: box-hi / grid]
    #[arg(long)]
    pub box_lo: Option<f64>,
    /// Upper coordinate of the sampling box [default: 4]
    #[arg(long)]
    pub box_hi: Option<f64>,
    /// Lattice points per axis [default: 16]
    #[arg(long)]
    pub grid: Option<usize>,
    /// Family coefficient a [default: 2]
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Sum-function: `closure` (constant -a), `const:<c>`, or a sum-function table file [default: closure]
    #[arg(long, value_name = "SPEC")]
    pub phi: Option<String>,
    /// Noise seed [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise amplitude, >= 0 [default: 0.001]
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Noise mode [default: general]
    #[arg(long, value_name = "MODE")]
    pub noise_mode: Option<NoiseMode>,
    /// Subdivision of the simplex grid used by the chain audit [default: 20]
    #[arg(long)]
    pub simplex: Option<usize>,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Write the fitted sum-function table here
    #[arg(long, value_name = "FILE")]
    pub table_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct GlueArgs {
    /// Table of A on (U+V) x W; requires --b-table
    #[arg(long, value_name = "FILE")]
    pub a_table: Option<PathBuf>,
    /// Table of B on U x (V+W); requires --a-table
    #[arg(long, value_name = "FILE")]
    pub b_table: Option<PathBuf>,
    /// Hypothesis tolerance eps [default: the measured sup |A(u+v,w) - B(u,v+w)|]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Seed of a generated instance (used without tables) [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise amplitude of a generated instance [default: 0.01]
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Length of U = [0, u-len] for a generated instance [default: 1]
    #[arg(long)]
    pub u_len: Option<f64>,
    /// Length of V = [0, v-len] for a generated instance [default: 1]
    #[arg(long)]
    pub v_len: Option<f64>,
    /// Length of W = [0, w-len] for a generated instance [default: 2]
    #[arg(long)]
    pub w_len: Option<f64>,
    /// Lattice step of a generated instance [default: 0.125]
    #[arg(long)]
    pub step: Option<f64>,
    /// Directory to save a generated instance as a.tbl and b.tbl
    #[arg(long, value_name = "DIR")]
    pub save_instance: Option<PathBuf>,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Write the glued sum-function table here
    #[arg(long, value_name = "FILE")]
    pub table_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vary {
    Amplitude,
    N,
    Alpha,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub base: ExperimentArgs,
    /// Parameter to vary [default: amplitude]
    #[arg(long, value_enum)]
    pub vary: Option<Vary>,
    /// Comma-separated parameter values; empty gives a header-only CSV [default: 0,1e-4,1e-3]
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
struct SweepFileArgs {
    vary: Option<Vary>,
    values: Option<String>,
}

/// Every key a config file may contain.
const CONFIG_KEYS: &[&str] = &[
    "alpha", "n", "box-lo", "box-hi", "grid", "a", "phi", "seed", "amplitude", "noise-mode", "simplex", "out",
    "table-out", "a-table", "b-table", "eps", "u-len", "v-len", "w-len", "step", "save-instance", "vary", "values",
];

fn load_config(path: Option<&Path>) -> Result<toml::Table> {
    let Some(path) = path else {
        return Ok(toml::Table::new());
    };
    let text = read_text(path)?;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.message().to_string(),
    })?;
    if let Some(bad) = table.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(Error::usage(format!("{}: unknown config key `{bad}`", path.display())));
    }
    Ok(table)
}

fn from_config<T: for<'de> Deserialize<'de>>(table: &toml::Table) -> Result<T> {
    toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e: toml::de::Error| Error::usage(format!("config file: {}", e.message())))
}

macro_rules! overlay {
    ($flags:expr, $file:expr; $($field:ident),+) => {
        $( if $flags.$field.is_none() { $flags.$field = $file.$field; } )+
    };
}

impl ExperimentArgs {
    fn overlay(mut self, file: ExperimentArgs) -> Self {
        overlay!(self, file; alpha, n, box_lo, box_hi, grid, a, phi, seed, amplitude, noise_mode, simplex, out, table_out);
        self
    }
}

/// How the exact part's sum-function is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiSource {
    Closure,
    Constant(f64),
    Table(PathBuf),
}

impl PhiSource {
    fn parse(s: &str) -> Result<Self> {
        if s == "closure" {
            return Ok(PhiSource::Closure);
        }
        if let Some(c) = s.strip_prefix("const:") {
            let c: f64 = c
                .trim()
                .parse()
                .map_err(|_| Error::usage(format!("`--phi {s}`: `{c}` is not a number")))?;
            if !c.is_finite() {
                return Err(Error::usage("--phi constant must be finite"));
            }
            return Ok(PhiSource::Constant(c));
        }
        Ok(PhiSource::Table(PathBuf::from(s)))
    }

    fn describe(&self) -> String {
        match self {
            PhiSource::Closure => "closure".into(),
            PhiSource::Constant(c) => format!("const:{c}"),
            PhiSource::Table(p) => p.display().to_string(),
        }
    }
}

/// Fully resolved `verify` configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub case: AlphaCase,
    pub n: Option<u32>,
    pub domain: Box3,
    pub a: f64,
    pub phi: PhiSource,
    pub seed: u64,
    pub amplitude: f64,
    pub mode: NoiseMode,
    pub simplex: SimplexGrid,
}

impl Experiment {
    pub fn resolve(args: &ExperimentArgs) -> Result<Self> {
        let case = AlphaCase::new(args.alpha.unwrap_or(-1.0))?;
        let hi = args.box_hi.unwrap_or(4.0);
        let grid = args.grid.unwrap_or(16);
        if grid > 400 {
            return Err(Error::usage(format!("grid {grid} is too large (max 400)")));
        }
        let domain = match args.box_lo {
            Some(lo) => Box3::new(lo, hi, grid)?,
            None => Box3::with_default_lo(hi, grid)?,
        };
        let n = match (case.regime(), args.n) {
            (Regime::PositiveNotOne, None) => Some(hi.ceil().max(1.0) as u32),
            (_, n) => n,
        };
        let amplitude = args.amplitude.unwrap_or(1e-3);
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::usage(format!("amplitude must be finite and >= 0, got {amplitude}")));
        }
        let a = args.a.unwrap_or(2.0);
        if !a.is_finite() {
            return Err(Error::usage("a must be finite"));
        }
        let m = args.simplex.unwrap_or(20);
        if m > 2000 {
            return Err(Error::usage(format!("simplex subdivision {m} is too large (max 2000)")));
        }
        Ok(Self {
            case,
            n,
            domain,
            a,
            phi: PhiSource::parse(args.phi.as_deref().unwrap_or("closure"))?,
            seed: args.seed.unwrap_or(42),
            amplitude,
            mode: args.noise_mode.unwrap_or(NoiseMode::General),
            simplex: SimplexGrid::new(m)?,
        })
    }

    pub fn family(&self) -> Result<SolutionFamily> {
        let alpha = self.case.alpha();
        let (lo, hi) = ((3.0 * self.domain.lo()).min(1.0), (3.0 * self.domain.n()).max(1.0));
        match &self.phi {
            PhiSource::Closure => SolutionFamily::closed_constant_for_box(self.a, alpha, &self.domain),
            PhiSource::Constant(c) => SolutionFamily::new(self.a, alpha, SumFunction::constant(*c, lo, hi)?),
            PhiSource::Table(path) => {
                let phi = parse_sum_function(path, &read_text(path)?, Interpolation::PiecewiseLinear)?;
                SolutionFamily::new(self.a, alpha, phi)
            }
        }
    }

    pub fn candidate(&self) -> Result<EntropyFn> {
        let noise = NoiseField::for_box(self.seed, self.amplitude, &self.domain, self.mode)?;
        Ok(EntropyFn {
            family: Some(self.family()?),
            noise: Some(noise),
            domain: self.domain,
        })
    }

    /// Runs the verdict, the chain audit and the one-variable fit.
    pub fn run(&self) -> Result<Outcome> {
        let f = self.candidate()?;
        let fit = verdict(&f, &self.case, &self.domain, self.n, &SearchRange::default())?;
        let alpha = self.case.alpha();
        let covering = measure_eps_covering(&f, alpha, &self.domain, &self.simplex)?;
        let audit = audit_chain(&f, alpha, covering, &self.domain, &self.simplex)?;
        let h_fit = self.h_fit(&f, covering, &audit)?;
        Ok(Outcome {
            fit,
            covering,
            audit,
            h_fit,
        })
    }

    /// Fits `h(t) = f(0, 1-t, t)` on `t = i / m` by the one-variable family of
    /// the regime and compares with the superstability estimate where one exists.
    fn h_fit(&self, f: &EntropyFn, eps: EpsPair, audit: &ChainAudit) -> Result<HFitSection> {
        let m = self.simplex.m();
        let samples = (1..m)
            .map(|i| {
                let t = i as f64 / m as f64;
                Ok((t, f.eval(0.0, 1.0 - t, t)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let alpha = self.case.alpha();
        let fundamental_eps = audit.fundamental.measured;
        Ok(match self.case.regime() {
            Regime::Zero => {
                let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
                let (c, sup_error) = fit_h_const(&values)?;
                let permitted = 63.0 * (eps.eps1 + 4.0 * eps.eps2);
                HFitSection {
                    form: "c".into(),
                    a: None,
                    b: None,
                    c: Some(c),
                    sup_error,
                    fundamental_eps,
                    permitted: Some(permitted),
                    permitted_rule: Some("63 (eps1 + 4 eps2)".into()),
                    holds: Some(sup_error <= permitted + 1e-9 * (1.0 + permitted)),
                }
            }
            regime => {
                let fit = fit_h_family(&samples, alpha)?;
                let permitted = match regime {
                    Regime::PositiveNotOne => Some(k_const(alpha)? * fundamental_eps),
                    _ => None,
                };
                HFitSection {
                    form: "a t^alpha + b ((1-t)^alpha - 1)".into(),
                    a: Some(fit.a),
                    b: Some(fit.b),
                    c: None,
                    sup_error: fit.sup_error,
                    fundamental_eps,
                    permitted,
                    permitted_rule: permitted.map(|_| "K(alpha) * fundamental_eps".into()),
                    holds: permitted.map(|p| fit.sup_error <= p + 1e-9 * (1.0 + p)),
                }
            }
        })
    }
}

pub struct Outcome {
    pub fit: FitReport,
    pub covering: EpsPair,
    pub audit: ChainAudit,
    pub h_fit: HFitSection,
}

#[derive(Debug, Clone, Serialize)]
pub struct HFitSection {
    pub form: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub sup_error: f64,
    pub fundamental_eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permitted: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permitted_rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holds: Option<bool>,
}

#[derive(Serialize)]
struct VerifyReport {
    generated_at: u64,
    report: &'static str,
    config: ConfigEcho,
    eps: EpsSection,
    fit: FitSection,
    bound: BoundSection,
    verdict: VerdictSection,
    chain_audit: ChainSection,
    h_fit: HFitSection,
}

#[derive(Serialize)]
struct ConfigEcho {
    alpha: f64,
    regime: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
    box_lo: f64,
    box_hi: f64,
    grid: usize,
    a: f64,
    phi: String,
    seed: u64,
    amplitude: f64,
    noise_mode: &'static str,
    simplex_m: usize,
}

#[derive(Serialize)]
struct EpsSection {
    sampled_on: &'static str,
    eps1: f64,
    eps2: f64,
}

#[derive(Serialize)]
struct FitSection {
    best_a: f64,
    sup_error: f64,
    worst_point: [f64; 3],
    phi_knots: usize,
}

#[derive(Serialize)]
struct BoundSection {
    label: String,
    coef_eps1: f64,
    coef_eps2: f64,
    value: f64,
    /// Tighter constant from re-adding the alpha = 0 chain; reported only.
    #[serde(skip_serializing_if = "Option::is_none")]
    recomputed: Option<RecomputedBound>,
}

#[derive(Serialize)]
struct RecomputedBound {
    label: &'static str,
    coef_eps1: f64,
    coef_eps2: f64,
    value: f64,
}

#[derive(Serialize)]
struct VerdictSection {
    pass: bool,
    sup_error: f64,
    bound_value: f64,
    margin: f64,
}

#[derive(Serialize)]
struct StepSection {
    measured: f64,
    permitted: f64,
    permitted_rule: &'static str,
    holds: bool,
    provable: f64,
    holds_provable: bool,
}

#[derive(Serialize)]
struct ChainSection {
    sampled_on: &'static str,
    eps1: f64,
    eps2: f64,
    all_hold: bool,
    all_hold_provable: bool,
    reduction: StepSection,
    exchange: StepSection,
    simplex: StepSection,
    fundamental: StepSection,
}

fn step_section(step: ChainStep, rule: &'static str) -> StepSection {
    StepSection {
        measured: step.measured,
        permitted: step.permitted,
        permitted_rule: rule,
        holds: step.holds(),
        provable: step.provable,
        holds_provable: step.holds_provable(),
    }
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::usage(format!("cannot render report: {e}")))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verify_report(exp: &Experiment, outcome: &Outcome) -> VerifyReport {
    let fit = &outcome.fit;
    let d = &exp.domain;
    VerifyReport {
        generated_at: timestamp(),
        report: "modent verify v1",
        config: ConfigEcho {
            alpha: exp.case.alpha(),
            regime: exp.case.regime().label(),
            n: exp.n,
            box_lo: d.lo(),
            box_hi: d.n(),
            grid: d.grid(),
            a: exp.a,
            phi: exp.phi.describe(),
            seed: exp.seed,
            amplitude: exp.amplitude,
            noise_mode: exp.mode.as_str(),
            simplex_m: exp.simplex.m(),
        },
        eps: EpsSection {
            sampled_on: "box lattice and its derived boundary points",
            eps1: fit.eps.eps1,
            eps2: fit.eps.eps2,
        },
        fit: FitSection {
            best_a: fit.best_a,
            sup_error: fit.sup_error,
            worst_point: fit.worst_point,
            phi_knots: fit.phi.knots().len(),
        },
        bound: BoundSection {
            label: fit.bound.label.clone(),
            coef_eps1: fit.bound.coef_eps1,
            coef_eps2: fit.bound.coef_eps2,
            value: fit.bound_value,
            recomputed: (fit.bound.regime == Regime::Zero).then(|| {
                let (c1, c2) = ZERO_REGIME_RECOMPUTED;
                RecomputedBound {
                    label: "recomputed:alpha=0:191e1+759e2",
                    coef_eps1: c1,
                    coef_eps2: c2,
                    value: c1 * fit.eps.eps1 + c2 * fit.eps.eps2,
                }
            }),
        },
        verdict: VerdictSection {
            pass: fit.pass,
            sup_error: fit.sup_error,
            bound_value: fit.bound_value,
            margin: fit.bound_value - fit.sup_error,
        },
        chain_audit: ChainSection {
            sampled_on: "box lattice, simplex triples and every boundary point the audit evaluates",
            eps1: outcome.covering.eps1,
            eps2: outcome.covering.eps2,
            all_hold: outcome.audit.all_hold(),
            all_hold_provable: outcome.audit.all_hold_provable(),
            reduction: step_section(outcome.audit.reduction, "eps1 + eps2"),
            exchange: step_section(outcome.audit.exchange, "eps1 + 2 eps2"),
            simplex: step_section(outcome.audit.simplex, "eps1 + 2 eps2"),
            fundamental: step_section(outcome.audit.fundamental, "eps1 + 4 eps2"),
        },
        h_fit: outcome.h_fit.clone(),
    }
}

fn cmd_verify(args: ExperimentArgs) -> Result<i32> {
    let exp = Experiment::resolve(&args)?;
    let outcome = exp.run()?;
    let report = to_toml(&verify_report(&exp, &outcome))?;
    if let Some(path) = &args.table_out {
        write_atomic(path, &format_sum_function(&outcome.fit.phi))?;
    }
    emit(args.out.as_deref(), &report)?;
    if outcome.fit.pass {
        Ok(EXIT_PASS)
    } else {
        let [x, y, z] = outcome.fit.worst_point;
        eprintln!(
            "bound violated: sup error {} exceeds {} = {}; worst point ({x}, {y}, {z})",
            outcome.fit.sup_error, outcome.fit.bound.label, outcome.fit.bound_value
        );
        Ok(EXIT_VIOLATION)
    }
}

fn cmd_constants(args: ConstantsArgs) -> Result<i32> {
    let alpha = args.alpha.unwrap_or(2.0);
    let n_max = args.n.unwrap_or(10);
    let k = k_const(alpha)?;
    let mut out = format!("# alpha={alpha} K={k}\nn,c_n,d_n\n");
    for n in 1..=n_max {
        let _ = writeln!(out, "{n},{},{}", c_n(alpha, n)?, d_n(alpha, n)?);
    }
    emit(args.out.as_deref(), &out)?;
    Ok(EXIT_PASS)
}

#[derive(Serialize)]
struct GlueReport {
    generated_at: u64,
    report: &'static str,
    instance: InstanceSection,
    hypothesis: HypothesisSection,
    cover: CoverSection,
    deviations: DeviationSection,
    verdict: GlueVerdict,
}

#[derive(Serialize)]
struct InstanceSection {
    source: String,
    u: [f64; 2],
    v: [f64; 2],
    w: [f64; 2],
    step: f64,
}

#[derive(Serialize)]
struct HypothesisSection {
    eps_measured: f64,
    eps_used: f64,
    witness_uvw: [f64; 3],
}

#[derive(Serialize)]
struct CoverSection {
    windows: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct DeviationSection {
    dev_a: f64,
    dev_a_bound: f64,
    dev_a_bound_rule: &'static str,
    worst_a_pq: [f64; 2],
    dev_b: f64,
    dev_b_bound: f64,
    dev_b_bound_rule: &'static str,
    worst_b_ts: [f64; 2],
}

#[derive(Serialize)]
struct GlueVerdict {
    pass: bool,
}

impl GlueArgs {
    fn overlay(mut self, file: GlueArgs) -> Self {
        overlay!(self, file; a_table, b_table, eps, seed, amplitude, u_len, v_len, w_len, step, save_instance, out, table_out);
        self
    }
}

fn glue_instance(args: &GlueArgs) -> Result<(GlueInstance, String)> {
    match (&args.a_table, &args.b_table) {
        (Some(pa), Some(pb)) => {
            let a = parse_interval_fn2(pa, &read_text(pa)?)?;
            let b = parse_interval_fn2(pb, &read_text(pb)?)?;
            Ok((GlueInstance::from_tables(a, b)?, format!("tables {} {}", pa.display(), pb.display())))
        }
        (None, None) => {
            let seed = args.seed.unwrap_or(42);
            let amplitude = args.amplitude.unwrap_or(0.01);
            let lengths = [args.u_len.unwrap_or(1.0), args.v_len.unwrap_or(1.0), args.w_len.unwrap_or(2.0)];
            let step = args.step.unwrap_or(0.125);
            if lengths.iter().any(|l| *l / step > 4000.0) {
                return Err(Error::usage("instance has more than 4000 steps per interval"));
            }
            let inst = GlueInstance::seeded(seed, amplitude, lengths, step)?;
            Ok((inst, format!("generated seed={seed} amplitude={amplitude}")))
        }
        _ => Err(Error::usage("--a-table and --b-table must be given together")),
    }
}

fn cmd_glue(args: GlueArgs) -> Result<i32> {
    let (inst, source) = glue_instance(&args)?;
    if let Some(dir) = &args.save_instance {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.clone(),
            message: e.to_string(),
        })?;
        write_atomic(&dir.join("a.tbl"), &format_interval_fn2(&inst.a))?;
        write_atomic(&dir.join("b.tbl"), &format_interval_fn2(&inst.b))?;
    }
    let (measured, (u, v, w)) = inst.measure_eps();
    let eps = args.eps.unwrap_or(measured);
    let res: GlueResult = build_phi(&inst, eps)?;
    let pass = res.within_bounds(eps);
    let span = |s: &crate::glue::IntervalSpec| [s.lo(), s.hi()];
    let report = GlueReport {
        generated_at: timestamp(),
        report: "modent glue v1",
        instance: InstanceSection {
            source,
            u: span(&inst.u),
            v: span(&inst.v),
            w: span(&inst.w),
            step: inst.u.step(),
        },
        hypothesis: HypothesisSection {
            eps_measured: measured,
            eps_used: eps,
            witness_uvw: [u, v, w],
        },
        cover: CoverSection {
            windows: res.cover.iter().map(|c| [c.w1, c.w2]).collect(),
        },
        deviations: DeviationSection {
            dev_a: res.dev_a,
            dev_a_bound: 2.0 * eps,
            dev_a_bound_rule: "2 eps",
            worst_a_pq: [res.worst_a.0, res.worst_a.1],
            dev_b: res.dev_b,
            dev_b_bound: eps,
            dev_b_bound_rule: "eps",
            worst_b_ts: [res.worst_b.0, res.worst_b.1],
        },
        verdict: GlueVerdict { pass },
    };
    if let Some(path) = &args.table_out {
        write_atomic(path, &format_sum_function(&res.phi))?;
    }
    emit(args.out.as_deref(), &to_toml(&report)?)?;
    if pass {
        Ok(EXIT_PASS)
    } else {
        eprintln!(
            "bound violated: dev_a = {} (bound {}) at (p, q) = {:?}, dev_b = {} (bound {eps}) at (t, s) = {:?}",
            res.dev_a,
            2.0 * eps,
            res.worst_a,
            res.dev_b,
            res.worst_b
        );
        Ok(EXIT_VIOLATION)
    }
}

/// One CSV row of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub vary: &'static str,
    pub value: String,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub sup_error: Option<f64>,
    pub bound_value: Option<f64>,
    pub slack: Option<f64>,
    pub pass: bool,
    pub error: String,
}

fn parse_values(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect()
}

/// Runs the sweep; a row that fails to evaluate is flagged rather than
/// aborting the rest.
pub fn sweep_rows(base: &ExperimentArgs, vary: Vary, values: &str) -> Result<Vec<SweepRow>> {
    let name = match vary {
        Vary::Amplitude => "amplitude",
        Vary::N => "n",
        Vary::Alpha => "alpha",
    };
    let mut rows = Vec::new();
    for tok in parse_values(values) {
        let mut args = base.clone();
        let parsed: Result<()> = match vary {
            Vary::Amplitude => tok.parse().map(|v| args.amplitude = Some(v)).map_err(|_| ()),
            Vary::N => tok.parse().map(|v| args.n = Some(v)).map_err(|_| ()),
            Vary::Alpha => tok.parse().map(|v| args.alpha = Some(v)).map_err(|_| ()),
        }
        .map_err(|_| Error::usage(format!("sweep value `{tok}` is not a valid {name}")));
        parsed?;
        let row = match Experiment::resolve(&args).and_then(|exp| {
            let f = exp.candidate()?;
            verdict(&f, &exp.case, &exp.domain, exp.n, &SearchRange::default())
        }) {
            Ok(rep) => SweepRow {
                vary: name,
                value: tok.to_string(),
                eps1: Some(rep.eps.eps1),
                eps2: Some(rep.eps.eps2),
                sup_error: Some(rep.sup_error),
                bound_value: Some(rep.bound_value),
                slack: Some(rep.bound_value - rep.sup_error),
                pass: rep.pass,
                error: String::new(),
            },
            Err(e) => SweepRow {
                vary: name,
                value: tok.to_string(),
                eps1: None,
                eps2: None,
                sup_error: None,
                bound_value: None,
                slack: None,
                pass: false,
                error: e.to_string(),
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::usage(format!("cannot render CSV: {e}"));
    w.write_record(["vary", "value", "eps1", "eps2", "sup_error", "bound_value", "slack", "pass", "error"])
        .map_err(to_err)?;
    for r in rows {
        w.serialize(r).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::usage(format!("cannot render CSV: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::usage(e.to_string()))
}

fn cmd_sweep(args: SweepArgs, file: SweepFileArgs) -> Result<i32> {
    let vary = args.vary.or(file.vary).unwrap_or(Vary::Amplitude);
    let values = args.values.or(file.values).unwrap_or_else(|| "0,1e-4,1e-3".into());
    // reject a bad base configuration up front
    Experiment::resolve(&args.base)?;
    let rows = sweep_rows(&args.base, vary, &values)?;
    emit(args.base.out.as_deref(), &sweep_csv(&rows)?)?;
    if rows.iter().any(|r| !r.error.is_empty()) {
        for r in rows.iter().filter(|r| !r.error.is_empty()) {
            eprintln!("{} = {}: {}", r.vary, r.value, r.error);
        }
        return Ok(EXIT_USAGE);
    }
    Ok(if rows.iter().all(|r| r.pass) { EXIT_PASS } else { EXIT_VIOLATION })
}

fn dispatch(cli: Cli) -> Result<i32> {
    let file = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Constants(args) => {
            let mut from: ConstantsArgs = from_config(&file)?;
            from.alpha = args.alpha.or(from.alpha);
            from.n = args.n.or(from.n);
            from.out = args.out.or(from.out);
            cmd_constants(from)
        }
        Command::Verify(args) => cmd_verify(args.overlay(from_config(&file)?)),
        Command::Glue(args) => cmd_glue(args.overlay(from_config(&file)?)),
        Command::Sweep(mut args) => {
            args.base = args.base.overlay(from_config(&file)?);
            cmd_sweep(args, from_config(&file)?)
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_VIOLATION
            }
        }
    }
}

/// Bound label of a regime, for callers that only need the text.
pub fn bound_label(alpha: f64, n: Option<u32>) -> Result<String> {
    Ok(bound_for(&AlphaCase::new(alpha)?, n)?.label)
}
