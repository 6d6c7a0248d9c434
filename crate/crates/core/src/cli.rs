//! Command-line front end: one subcommand per operation, JSON or CSV on
//! stdout (or `--out`), and a [`RunManifest`] sidecar for every run.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::arithmetic::{expand, golden, silver, DioParams};
use crate::cocycle::{lyapunov, Cocycle, QpMap, ScalarMap, ScalarTrigPoly, TrigPoly};
use crate::error::{Error, Result};
use crate::linalg2::Mat2;
use crate::renorm::{action_degree, normalize, reduction_pipeline, renormalize_deep, PipelineParams};
use crate::rotnum::fibered_rotation_number;
use crate::spectral::{
    amo_potential, butterfly, inclusion_radius, schrodinger, spectrum_measure, spectrum_scan,
    ScanParams,
};

pub const SCHEMA_VERSION: u32 = 1;
/// Default worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "QPCOCYCLE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "qpcocycle", version, about = "Quasiperiodic SL(2,R) cocycle laboratory")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Emit JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Emit CSV (tabular commands only).
    #[arg(long, global = true)]
    pub csv: bool,
    /// Write output to this file; the manifest goes to `<out>.manifest.json`.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    /// Explicit manifest path. Without it and without `--out` the manifest
    /// is printed to stderr.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Continued-fraction expansion.
    Cfrac(CfracArgs),
    /// Lyapunov exponent of a cocycle.
    Lyapunov(LyapunovArgs),
    /// Uniform-hyperbolicity scan of a Schrödinger family over an energy grid.
    Spectrum(SpectrumArgs),
    /// Classification over an (alpha, E) grid for the almost Mathieu family.
    Butterfly(ButterflyArgs),
    /// Fibered rotation number.
    Rotnum(RotnumArgs),
    /// Generators of the depth-n renormalization on window samples.
    Renorm(RenormArgs),
    /// Renormalize, fit, and reduce to a constant rotation.
    Reduce(ReduceArgs),
}

/// `golden`, `silver` or a number.
pub fn parse_frequency(s: &str) -> std::result::Result<f64, String> {
    match s {
        "golden" => Ok(golden()),
        "silver" => Ok(silver()),
        _ => s.parse::<f64>().map_err(|e| format!("bad frequency {s:?}: {e}")),
    }
}

/// `zero`, `amo:λ`, `cos:a0,a1,…` (`Σ a_k cos 2πkx`) or `@file.json`.
pub fn parse_potential(s: &str) -> Result<ScalarMap> {
    let bad = |why: &str| Error::Parse(format!("potential {s:?}: {why}"));
    if s == "zero" {
        return Ok(ScalarMap::zero());
    }
    if let Some(path) = s.strip_prefix('@') {
        let text = fs::read_to_string(path).map_err(|e| bad(&e.to_string()))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| bad(&e.to_string()))?;
        return ScalarMap::from_json(&v);
    }
    match s.split_once(':') {
        Some(("amo", l)) => Ok(amo_potential(parse_number(l).map_err(|e| bad(&e))?)),
        Some(("cos", list)) => {
            let a = list
                .split(',')
                .map(parse_number)
                .collect::<std::result::Result<Vec<f64>, String>>()
                .map_err(|e| bad(&e))?;
            Ok(ScalarMap::Trig(ScalarTrigPoly::cosine_series(&a)?))
        }
        _ => Err(bad("expected zero, amo:λ, cos:a0,a1,… or @file.json")),
    }
}

fn parse_number(s: &str) -> std::result::Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(x) => Err(format!("{x} is not finite")),
        Err(e) => Err(format!("{s:?}: {e}")),
    }
}

/// `rotation:θ`, `conjugated-rotation:θ:ε` (`R_θ` conjugated by
/// `R_{ε sin 2πx}` over the frequency `alpha`), `winding:k` or `@file.json`.
pub fn parse_map(s: &str, alpha: f64) -> Result<QpMap> {
    let bad = |why: &str| Error::Parse(format!("map {s:?}: {why}"));
    if let Some(path) = s.strip_prefix('@') {
        let text = fs::read_to_string(path).map_err(|e| bad(&e.to_string()))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| bad(&e.to_string()))?;
        return QpMap::from_json(&v);
    }
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<f64> { parse_number(parts[i]).map_err(|e| bad(&e)) };
    match (parts[0], parts.len()) {
        ("rotation", 2) => Ok(QpMap::constant(Mat2::rotation(num(1)?))),
        ("conjugated-rotation", 3) => {
            let (theta, eps) = (num(1)?, num(2)?);
            let b = |x: f64| Mat2::rotation(eps * (std::f64::consts::TAU * x).sin());
            let map = TrigPoly::from_fn(1, 64, |x| b(x + alpha) * Mat2::rotation(theta) * b(x).adjugate())?;
            Ok(QpMap::Trig(map))
        }
        ("winding", 2) => {
            let k = num(1)?;
            if k.fract() != 0.0 {
                return Err(bad("winding must be an integer"));
            }
            Ok(QpMap::Trig(TrigPoly::rotation_winding(k as i64)))
        }
        _ => Err(bad("expected rotation:θ, conjugated-rotation:θ:ε, winding:k or @file.json")),
    }
}

/// Where the cocycle comes from: a matrix map or a Schrödinger family.
#[derive(Args, Debug, Serialize)]
pub struct CocycleArgs {
    /// Frequency: a number in (0,1), `golden` or `silver`.
    #[arg(long, default_value = "golden", value_parser = parse_frequency)]
    pub alpha: f64,
    /// Matrix map: `rotation:θ`, `conjugated-rotation:θ:ε`, `winding:k` or `@file.json`.
    /// When absent the Schrödinger cocycle of `--potential` at `--energy` is used.
    #[arg(long)]
    pub map: Option<String>,
    /// Potential: `zero`, `amo:λ`, `cos:a0,a1,…` or `@file.json`.
    #[arg(long, default_value = "zero")]
    pub potential: String,
    #[arg(long, short = 'E', default_value_t = 0.0, allow_negative_numbers = true)]
    pub energy: f64,
}

impl CocycleArgs {
    pub fn build(&self) -> Result<Cocycle> {
        match &self.map {
            None => schrodinger(&parse_potential(&self.potential)?, self.energy, self.alpha),
            Some(spec) => Cocycle::new(self.alpha, parse_map(spec, self.alpha)?),
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct CfracArgs {
    #[arg(long, value_parser = parse_frequency)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub depth: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct LyapunovArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub cocycle: CocycleArgs,
    /// Iterates per sample.
    #[arg(long, short = 'n', default_value_t = 4096)]
    pub n: u64,
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct SpectrumArgs {
    /// Almost Mathieu coupling; overrides `--potential`.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value = "zero")]
    pub potential: String,
    #[arg(long, default_value = "golden", value_parser = parse_frequency)]
    pub alpha: f64,
    #[arg(long = "dE", alias = "de", default_value_t = 1e-3)]
    pub de: f64,
    /// Defaults to the inclusion interval rounded out to the grid.
    #[arg(long, allow_negative_numbers = true)]
    pub e_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub e_max: Option<f64>,
    /// Cone-field grid points.
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    #[arg(long, default_value_t = 1 << 14)]
    pub n_max: u64,
    /// Rotation-number iterations; 0 skips the IDS column.
    #[arg(long, default_value_t = 1 << 16)]
    pub n_iter: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ButterflyArgs {
    #[arg(long)]
    pub lambda: f64,
    /// `<alphas>x<energies>`.
    #[arg(long, default_value = "64x256")]
    pub grid: String,
    #[arg(long, default_value_t = 128)]
    pub cone_grid: usize,
    #[arg(long, default_value_t = 4096)]
    pub n_max: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct RotnumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub cocycle: CocycleArgs,
    #[arg(long, default_value_t = 1 << 16)]
    pub n_iter: u64,
    #[arg(long, default_value_t = 0.0)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub w0: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct RenormArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub cocycle: CocycleArgs,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x_star: f64,
    #[arg(long, default_value_t = 1.0)]
    pub halfwidth: f64,
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ReduceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub cocycle: CocycleArgs,
    #[arg(long, default_value_t = 5)]
    pub depth: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x_star: f64,
    /// Fourier modes of the SO(2) reducer.
    #[arg(long, short = 'K', default_value_t = 32)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub halfwidth: f64,
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[arg(long, default_value_t = 1 << 16)]
    pub n_iter: u64,
}

/// Sidecar describing a run; equal manifests (ignoring `timestamp`) give
/// byte-identical outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub params: Value,
    pub format: String,
    pub library_version: String,
    pub seed: u64,
    pub timestamp: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

/// Rendered result of a subcommand.
pub struct Output {
    json: Value,
    csv: Option<String>,
}

impl Output {
    fn json(v: Value) -> Self {
        Output { json: v, csv: None }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Cfrac(_) => "cfrac",
            Command::Lyapunov(_) => "lyapunov",
            Command::Spectrum(_) => "spectrum",
            Command::Butterfly(_) => "butterfly",
            Command::Rotnum(_) => "rotnum",
            Command::Renorm(_) => "renorm",
            Command::Reduce(_) => "reduce",
        }
    }

    fn seed(&self) -> u64 {
        match self {
            Command::Lyapunov(a) => a.seed,
            Command::Spectrum(a) => a.seed,
            _ => 0,
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Spectrum(_) | Command::Butterfly(_) => Format::Csv,
            _ => Format::Json,
        }
    }

    pub fn execute(&self) -> Result<Output> {
        match self {
            Command::Cfrac(a) => cmd_cfrac(a),
            Command::Lyapunov(a) => cmd_lyapunov(a),
            Command::Spectrum(a) => cmd_spectrum(a),
            Command::Butterfly(a) => cmd_butterfly(a),
            Command::Rotnum(a) => cmd_rotnum(a),
            Command::Renorm(a) => cmd_renorm(a),
            Command::Reduce(a) => cmd_reduce(a),
        }
    }
}

/// `p/q` with `q ≤ 10⁶` within `1e−12` of `alpha`, if any.
pub fn nearby_rational(alpha: f64) -> Option<(i64, i64)> {
    (1..=1_000_000i64).find_map(|q| {
        let p = (q as f64 * alpha).round();
        // |qα − p| is O(q·ε) for a float rational, ≥ 1/(√5 q) for golden
        ((q as f64).mul_add(alpha, -p).abs() <= 1e-9).then_some((p as i64, q))
    })
}

pub fn cmd_cfrac(a: &CfracArgs) -> Result<Output> {
    let cf = expand(a.alpha, a.depth).map_err(|e| match (&e, nearby_rational(a.alpha)) {
        (Error::PrecisionExhausted { .. }, Some((p, q))) => {
            Error::Degenerate(format!("alpha = {} is rational to working precision ({p}/{q})", a.alpha))
        }
        _ => e,
    })?;
    let j = cf.to_json();
    let mut csv = String::from("n,a,p,q,beta\n");
    // a starts at a_1; level 0 leaves it blank
    for n in 0..j.q.len() {
        let a_n = n.checked_sub(1).map(|i| j.a[i].to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{},{}\n", n, a_n, j.p[n], j.q[n], j.beta[n]));
    }
    Ok(Output {
        json: to_value(&j),
        csv: Some(csv),
    })
}

pub fn cmd_lyapunov(a: &LyapunovArgs) -> Result<Output> {
    let c = a.cocycle.build()?;
    let est = lyapunov(&c, a.n, a.samples, a.seed)?;
    Ok(Output::json(to_value(&est)))
}

pub fn cmd_spectrum(a: &SpectrumArgs) -> Result<Output> {
    let v = match a.lambda {
        Some(l) => amo_potential(l),
        None => parse_potential(&a.potential)?,
    };
    if !(a.de > 0.0) {
        return Err(Error::Domain(format!("dE must be positive, got {}", a.de)));
    }
    let r = (inclusion_radius(&v) / a.de).ceil() * a.de;
    let (e_min, e_max) = (a.e_min.unwrap_or(-r), a.e_max.unwrap_or(r));
    let params = ScanParams {
        grid_size: a.grid,
        n_max: a.n_max,
        n_iter: a.n_iter,
        seed: a.seed,
        ..ScanParams::default()
    };
    let scan = spectrum_scan(&v, a.alpha, e_min, e_max, a.de, params)?;
    let measure = spectrum_measure(&scan).ok();
    let mut json = to_value(&scan);
    json["measure"] = json!(measure);
    json["potential"] = v.to_json();
    Ok(Output {
        json,
        csv: Some(scan.to_csv()),
    })
}

/// `"64x256"` → `(64, 256)`.
pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("grid {s:?}: expected <alphas>x<energies>"));
    let (a, e) = s.split_once('x').ok_or_else(bad)?;
    let (a, e) = (a.parse::<usize>().map_err(|_| bad())?, e.parse::<usize>().map_err(|_| bad())?);
    if a == 0 || e < 2 {
        return Err(bad());
    }
    Ok((a, e))
}

pub fn cmd_butterfly(a: &ButterflyArgs) -> Result<Output> {
    let (na, ne) = parse_grid(&a.grid)?;
    let r = inclusion_radius(&amo_potential(a.lambda));
    let alphas: Vec<f64> = (0..na).map(|j| (j as f64 + 0.5) / na as f64).collect();
    // symmetric about 0 so the E ↦ −E symmetry can be read off row by row
    let energies: Vec<f64> = (0..ne)
        .map(|j| r * (2.0 * j as f64 - (ne - 1) as f64) / (ne - 1) as f64)
        .collect();
    let b = butterfly(a.lambda, &alphas, &energies, a.cone_grid, a.n_max)?;
    Ok(Output {
        json: to_value(&b),
        csv: Some(b.to_csv()),
    })
}

pub fn cmd_rotnum(a: &RotnumArgs) -> Result<Output> {
    let c = a.cocycle.build()?;
    let rho = fibered_rotation_number(&c, a.n_iter, a.x0, a.w0)?;
    Ok(Output::json(json!({
        "value": rho.value,
        "lift": rho.lift,
        "spread": rho.spread,
        "n_iter": rho.n_iter,
    })))
}

pub fn cmd_renorm(a: &RenormArgs) -> Result<Output> {
    let c = a.cocycle.build()?;
    let phi = normalize(&c)?;
    let deep = renormalize_deep(&phi, a.depth, a.x_star, a.halfwidth)?;
    let degree = action_degree(&deep)?;
    let xs = deep.window_samples(a.samples);
    let mut csv = String::from("x,g10_a,g10_b,g10_c,g10_d,g01_a,g01_b,g01_c,g01_d\n");
    let mut rows = Vec::with_capacity(xs.len());
    for &x in &xs {
        let (p, q) = (deep.gen10.eval(x), deep.gen01.eval(x));
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            x, p.a, p.b, p.c, p.d, q.a, q.b, q.c, q.d
        ));
        rows.push(json!({"x": x, "gen10": [p.a, p.b, p.c, p.d], "gen01": [q.a, q.b, q.c, q.d]}));
    }
    Ok(Output {
        json: json!({
            "depth": a.depth,
            "x_star": a.x_star,
            "gamma10": deep.gen10.gamma,
            "gamma01": deep.gen01.gamma,
            "window": [deep.window.0, deep.window.1],
            "degree": degree,
            "samples": rows,
        }),
        csv: Some(csv),
    })
}

pub fn cmd_reduce(a: &ReduceArgs) -> Result<Output> {
    let c = a.cocycle.build()?;
    let params = PipelineParams {
        depth: a.depth,
        x_star: a.x_star,
        k_modes: a.k,
        window_halfwidth: a.halfwidth,
        samples: a.samples,
        n_iter: a.n_iter,
        dio: DioParams::new(1e-3, 2.0, 1000)?,
        ..PipelineParams::default()
    };
    Ok(Output::json(to_value(&reduction_pipeline(&c, params)?)))
}

/// Parse, run, write. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Domain("--threads must be at least 1".into()));
        }
        // a pool that already exists (repeated in-process runs) is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let format = if cli.csv {
        Format::Csv
    } else if cli.json {
        Format::Json
    } else {
        cli.command.default_format()
    };
    let out = cli.command.execute()?;
    let body = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out.json).expect("serializable");
            s.push('\n');
            s
        }
        Format::Csv => out.csv.ok_or_else(|| {
            Error::Domain(format!("{} has no tabular output; use --json", cli.command.name()))
        })?,
    };
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        command: cli.command.name().into(),
        params: command_params(&cli.command),
        format: match format {
            Format::Json => "json".into(),
            Format::Csv => "csv".into(),
        },
        library_version: env!("CARGO_PKG_VERSION").into(),
        seed: cli.command.seed(),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    let manifest_text = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
    match &cli.out {
        Some(path) => {
            write(path, &body)?;
            let sidecar = cli.manifest.clone().unwrap_or_else(|| sidecar_path(path));
            write(&sidecar, &manifest_text)?;
        }
        None => {
            print!("{body}");
            match &cli.manifest {
                Some(p) => write(p, &manifest_text)?,
                None => eprint!("{manifest_text}"),
            }
        }
    }
    Ok(())
}

fn command_params(c: &Command) -> Value {
    // `{"spectrum": {...}}` → `{...}`
    match to_value(c) {
        Value::Object(m) => m.into_iter().next().map(|(_, v)| v).unwrap_or(Value::Null),
        other => other,
    }
}

/// `<out>.manifest.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_aliases() {
        assert_eq!(parse_frequency("golden").unwrap(), golden());
        assert_eq!(parse_frequency("silver").unwrap(), silver());
        assert_eq!(parse_frequency("0.25").unwrap(), 0.25);
        assert!(parse_frequency("bronze").is_err());
    }

    #[test]
    fn potential_specs() {
        assert_eq!(parse_potential("zero").unwrap().eval(0.3), 0.0);
        assert!((parse_potential("amo:2").unwrap().eval(0.0) - 2.0).abs() < 1e-15);
        let v = parse_potential("cos:1,0.5").unwrap();
        assert!((v.eval(0.0) - 1.5).abs() < 1e-15);
        for bad in ["amo", "amo:x", "cos:", "sin:1", "@/nonexistent.json"] {
            assert!(matches!(parse_potential(bad), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn map_specs() {
        let m = parse_map("rotation:0.25", golden()).unwrap();
        assert!((m.eval(0.1) - Mat2::rotation(0.25)).operator_norm() < 1e-15);
        assert!(parse_map("winding:1.5", golden()).is_err());
        assert!(parse_map("rotation", golden()).is_err());
        let args = CocycleArgs {
            alpha: golden(),
            map: Some("conjugated-rotation:0.15:0.1".into()),
            potential: "zero".into(),
            energy: 0.0,
        };
        let c = args.build().unwrap();
        let b = |x: f64| Mat2::rotation(0.1 * (std::f64::consts::TAU * x).sin());
        let x = 0.3;
        let expect = b(x + golden()) * Mat2::rotation(0.15) * b(x).adjugate();
        assert!((c.eval(x) - expect).operator_norm() < 1e-12);
    }

    #[test]
    fn rationals_are_named() {
        assert_eq!(nearby_rational(0.5), Some((1, 2)));
        assert_eq!(nearby_rational(0.375), Some((3, 8)));
        assert_eq!(nearby_rational(golden()), None);
        let args = CfracArgs { alpha: 0.5, depth: 4 };
        assert!(matches!(cmd_cfrac(&args), Err(Error::Degenerate(_))));
    }

    #[test]
    fn grid_spec() {
        assert_eq!(parse_grid("64x256").unwrap(), (64, 256));
        assert!(parse_grid("64").is_err());
        assert!(parse_grid("0x10").is_err());
    }

    #[test]
    fn sidecar_next_to_output() {
        assert_eq!(sidecar_path(Path::new("/tmp/a.csv")), PathBuf::from("/tmp/a.csv.manifest.json"));
    }
}
