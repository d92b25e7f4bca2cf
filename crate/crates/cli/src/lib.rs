//! `qwalk` command-line front end: walks, analyses, spectra and the
//! reproduction suite, written as header-stamped artifacts.
//!
//! Exit codes: 0 success, 1 precondition error (with a JSON error object on
//! stderr), 2 a reproduction check outside its tolerance.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use qwalk::analysis::{analyze, AnalysisReport};
use qwalk::artifact::{Artifact, ArtifactData};
use qwalk::classical::binomial_distribution;
use qwalk::distribution::{Distribution, Protocol, SliceKind};
use qwalk::error::WalkError;
use qwalk::reproduce::{reproduce, Report, Session, Target, MAX_2D, TABLE_I};
use qwalk::spectral::{dft, dft2d, spectrum_slice};
use qwalk::{oracle, walk1d, walk2d};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PRECONDITION: i32 = 1;
pub const EXIT_TOLERANCE: i32 = 2;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "QWALK_OUT";

/// Sites with smaller probability are skipped by `oracle --compare`.
pub const ORACLE_FLOOR: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "qwalk", version, about = "Discrete-time quantum walk simulation and analysis")]
struct Cli {
    /// Directory receiving artifacts.
    #[arg(long, global = true, env = OUT_ENV, default_value = "runs")]
    out: PathBuf,
    /// Worker threads, 0 for one per core. Artifacts do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Encoding for distributions and reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Walk2dProtocol {
    Tensor,
    Aqw,
    Grover,
}

impl From<Walk2dProtocol> for Protocol {
    fn from(p: Walk2dProtocol) -> Self {
        match p {
            Walk2dProtocol::Tensor => Protocol::Tensor2d,
            Walk2dProtocol::Aqw => Protocol::Aqw2d,
            Walk2dProtocol::Grover => Protocol::Grover2d,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the symmetric Hadamard walk (or its classical counterpart).
    Walk1d(Walk1dArgs),
    /// Run a 2D walk and write the full grid.
    Walk2d(Walk2dArgs),
    /// Evaluate the stationary-phase integral solution.
    Oracle(OracleArgs),
    /// Peaks, reference points, envelope fits and beats of a 1D distribution.
    Analyze(AnalyzeArgs),
    /// Fourier transform of a 1D or 2D distribution.
    Spectrum(SpectrumArgs),
    /// Regenerate a published table or figure and compare it.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
struct Walk1dArgs {
    #[arg(long)]
    n: usize,
    /// Extra step counts at which to write the distribution.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<usize>,
    /// Binomial walk instead of the quantum walk.
    #[arg(long)]
    classical: bool,
}

#[derive(Args, Debug)]
struct Walk2dArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Walk2dProtocol::Aqw)]
    protocol: Walk2dProtocol,
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<usize>,
    /// Also write slices A, B and C.
    #[arg(long)]
    slices: bool,
    /// Allow N above the desk-scale limit.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    n: usize,
    /// Compare against the simulation and report the largest relative error.
    #[arg(long)]
    compare: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long, required_unless_present = "input", conflicts_with = "input")]
    n: Option<usize>,
    /// Distribution CSV written by `walk1d`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Closed peak-count window `lo:hi`; repeatable.
    #[arg(long = "window", value_parser = parse_window)]
    windows: Vec<(i64, i64)>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long, required_unless_present = "input", conflicts_with = "input")]
    n: Option<usize>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Transform a 2D walk instead of the 1D walk.
    #[arg(long, value_enum)]
    protocol: Option<Walk2dProtocol>,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// `table1`..`table5`, `fig4`..`fig20`, or `all`.
    target: String,
    /// Step counts; defaults to the desk-scale set of the target.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Add the N = 10^6 runs.
    #[arg(long)]
    full: bool,
}

fn parse_window(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("window `{s}` is not lo:hi"))?;
    let lo = a.trim().parse().map_err(|_| format!("bad window start `{a}`"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad window end `{b}`"))?;
    if lo > hi {
        return Err(format!("window `{s}` is reversed"));
    }
    Ok((lo, hi))
}

/// Settings that determine artifact contents. The output directory and
/// thread count are deliberately absent.
#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub protocol: Option<&'static str>,
    pub ns: Vec<usize>,
    pub checkpoints: Vec<usize>,
    pub format: &'static str,
    pub options: serde_json::Value,
}

impl RunConfig {
    /// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn meta(&self) -> Vec<(&'static str, String)> {
        vec![("tool", format!("qwalk {}", env!("CARGO_PKG_VERSION"))), ("config", self.hash())]
    }
}

#[derive(Debug)]
enum Failure {
    Precondition { kind: &'static str, message: String },
    Tolerance(usize),
}

impl From<WalkError> for Failure {
    fn from(e: WalkError) -> Self {
        Failure::Precondition { kind: error_kind(&e), message: e.to_string() }
    }
}

fn precondition(kind: &'static str, message: impl Into<String>) -> Failure {
    Failure::Precondition { kind, message: message.into() }
}

fn error_kind(e: &WalkError) -> &'static str {
    match e {
        WalkError::CheckpointOutOfRange { .. } => "checkpoint_out_of_range",
        WalkError::OutOfDomain { .. } => "out_of_domain",
        WalkError::EmptyWindow { .. } => "empty_window",
        WalkError::WindowTooSmall { .. } => "window_too_small",
        WalkError::NonPositive { .. } => "non_positive",
        WalkError::InsufficientData(_) => "insufficient_data",
        WalkError::NotNormalized { .. } => "not_normalized",
        WalkError::ImaginaryResidual { .. } => "imaginary_residual",
        WalkError::GridMismatch(_) => "grid_mismatch",
        WalkError::ExactBoundExceeded { .. } => "exact_bound_exceeded",
        WalkError::UnsupportedProtocol(_) => "unsupported_protocol",
        WalkError::Eigen(_) => "eigen",
        WalkError::Parse(_) => "parse",
        WalkError::Io(_) => "io",
        WalkError::Json(_) => "json",
    }
}

/// Parse `args` (program name first), execute, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => return report_failure(&precondition("usage", e.to_string().trim_end())),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => return report_failure(&precondition("threads", e.to_string())),
    };
    match pool.install(|| execute(&cli)) {
        Ok(()) => EXIT_OK,
        Err(f) => report_failure(&f),
    }
}

fn report_failure(f: &Failure) -> i32 {
    match f {
        Failure::Precondition { kind, message } => {
            eprintln!("{}", json!({ "error": kind, "message": message }));
            EXIT_PRECONDITION
        }
        Failure::Tolerance(failed) => {
            eprintln!("{}", json!({ "error": "tolerance", "message": format!("{failed} checks outside tolerance") }));
            EXIT_TOLERANCE
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Walk1d(a) => walk1d_cmd(cli, a),
        Command::Walk2d(a) => walk2d_cmd(cli, a),
        Command::Oracle(a) => oracle_cmd(cli, a),
        Command::Analyze(a) => analyze_cmd(cli, a),
        Command::Spectrum(a) => spectrum_cmd(cli, a),
        Command::Reproduce(a) => reproduce_cmd(cli, a),
    }
}

fn format_tag(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn config(cli: &Cli, command: &'static str, protocol: Option<Protocol>, ns: Vec<usize>) -> RunConfig {
    RunConfig {
        command,
        protocol: protocol.map(Protocol::tag),
        ns,
        checkpoints: Vec::new(),
        format: format_tag(cli.format),
        options: json!({}),
    }
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact], cfg: &RunConfig) -> Result<Vec<PathBuf>, Failure> {
    fs::create_dir_all(dir).map_err(|e| precondition("io", format!("{}: {e}", dir.display())))?;
    let meta = cfg.meta();
    let mut written = Vec::new();
    for a in artifacts {
        for (name, body) in a.render(&meta)? {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| precondition("io", format!("{}: {e}", path.display())))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn print_written(cli: &Cli, cfg: &RunConfig, written: &[PathBuf], extra: serde_json::Value) {
    match cli.format {
        Format::Json => {
            let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
            println!("{}", json!({ "config": cfg, "config_hash": cfg.hash(), "files": files, "result": extra }));
        }
        Format::Csv => {
            for p in written {
                println!("{}", p.display());
            }
            if !extra.is_null() {
                println!("{extra}");
            }
        }
    }
}

fn distribution_artifact(cli: &Cli, name: String, d: Distribution) -> Result<Artifact, Failure> {
    Ok(match cli.format {
        Format::Csv => Artifact::new(name, ArtifactData::Distribution(d)),
        Format::Json => {
            let value = serde_json::to_value(&d).map_err(WalkError::from)?;
            Artifact::new(name, ArtifactData::Json { protocol: d.protocol(), value })
        }
    })
}

fn step_counts(n: usize, checkpoints: &[usize]) -> Result<Vec<usize>, Failure> {
    if let Some(&c) = checkpoints.iter().find(|&&c| c > n) {
        return Err(WalkError::CheckpointOutOfRange { checkpoint: c, n }.into());
    }
    let mut ns: Vec<usize> = checkpoints.iter().copied().chain([n]).collect();
    ns.sort_unstable();
    ns.dedup();
    Ok(ns)
}

fn walk1d_cmd(cli: &Cli, a: &Walk1dArgs) -> Result<(), Failure> {
    let ns = step_counts(a.n, &a.checkpoints)?;
    let protocol = if a.classical { Protocol::Classical1d } else { Protocol::Quantum1d };
    let mut cfg = config(cli, "walk1d", Some(protocol), vec![a.n]);
    cfg.checkpoints = ns.clone();
    let runs: Vec<Distribution> = if a.classical {
        ns.iter().map(|&n| binomial_distribution(n)).collect()
    } else {
        walk1d::evolve(a.n, &ns.iter().copied().collect())?.into_values().collect()
    };
    let mut artifacts = Vec::new();
    let mut totals = serde_json::Map::new();
    for d in runs {
        let total = d.total();
        if (total - 1.0).abs() > walk1d::drift_tolerance(d.n_steps()) {
            return Err(WalkError::NotNormalized { total }.into());
        }
        totals.insert(d.n_steps().to_string(), json!(total));
        artifacts.push(distribution_artifact(cli, format!("{}_n{}", protocol.tag(), d.n_steps()), d)?);
    }
    let written = write_artifacts(&cli.out, &artifacts, &cfg)?;
    print_written(cli, &cfg, &written, json!({ "total_probability": totals }));
    Ok(())
}

fn check_2d(n: usize, force: bool) -> Result<(), Failure> {
    if n > MAX_2D && !force {
        return Err(precondition(
            "n_too_large",
            format!("2D runs are limited to N <= {MAX_2D}; pass --force to override"),
        ));
    }
    Ok(())
}

fn walk2d_cmd(cli: &Cli, a: &Walk2dArgs) -> Result<(), Failure> {
    check_2d(a.n, a.force)?;
    let ns = step_counts(a.n, &a.checkpoints)?;
    let protocol = Protocol::from(a.protocol);
    let mut cfg = config(cli, "walk2d", Some(protocol), vec![a.n]);
    cfg.checkpoints = ns.clone();
    cfg.options = json!({ "slices": a.slices });
    let runs = walk2d::evolve2d(protocol, a.n, &ns.iter().copied().collect())?;
    let mut artifacts = Vec::new();
    for (n, g) in runs {
        let stem = format!("{}_n{n}", protocol.tag());
        if a.slices {
            for kind in [SliceKind::A, SliceKind::B, SliceKind::C] {
                let s = walk2d::slice(&g, kind)?;
                artifacts.push(distribution_artifact(cli, format!("{stem}_slice{kind:?}"), s)?);
            }
        }
        artifacts.push(Artifact::new(stem, ArtifactData::Grid(g)));
    }
    let written = write_artifacts(&cli.out, &artifacts, &cfg)?;
    print_written(cli, &cfg, &written, serde_json::Value::Null);
    Ok(())
}

fn oracle_cmd(cli: &Cli, a: &OracleArgs) -> Result<(), Failure> {
    let mut cfg = config(cli, "oracle", Some(Protocol::Quantum1d), vec![a.n]);
    cfg.options = json!({ "compare": a.compare });
    let exact = oracle::analytic_distribution(a.n);
    let mut extra = serde_json::Value::Null;
    let mut artifacts = vec![distribution_artifact(cli, format!("oracle_n{}", a.n), exact.clone())?];
    if a.compare {
        let err = oracle::compare(&exact, &walk1d::distribution(a.n), ORACLE_FLOOR)?;
        extra = json!({ "n": a.n, "max_relative_error": err, "floor": ORACLE_FLOOR });
        artifacts.push(Artifact::new(
            format!("oracle_compare_n{}", a.n),
            ArtifactData::Json { protocol: Protocol::Quantum1d, value: extra.clone() },
        ));
    }
    let written = write_artifacts(&cli.out, &artifacts, &cfg)?;
    print_written(cli, &cfg, &written, extra);
    Ok(())
}

/// Table I windows when `n` has a published row, otherwise ten equal
/// windows over `[0, n]`.
fn default_windows(n: usize) -> Vec<(i64, i64)> {
    let published: Vec<(i64, i64)> =
        TABLE_I.iter().filter(|(m, _)| *m == n).flat_map(|(_, row)| row.iter().map(|w| (w.0, w.1))).collect();
    if !published.is_empty() {
        return published;
    }
    let step = (n as i64 / 10).max(1);
    (0..10).map(|i| (i * step, (i + 1) * step)).filter(|w| w.0 <= n as i64).collect()
}

fn load_distribution(path: &Path) -> Result<Distribution, Failure> {
    let text = fs::read_to_string(path).map_err(|e| precondition("io", format!("{}: {e}", path.display())))?;
    Ok(Distribution::from_csv(&text)?)
}

fn analyze_cmd(cli: &Cli, a: &AnalyzeArgs) -> Result<(), Failure> {
    let d = match (&a.input, a.n) {
        (Some(p), _) => load_distribution(p)?,
        (None, Some(n)) => walk1d::distribution(n),
        (None, None) => return Err(precondition("usage", "either --n or --input is required")),
    };
    if d.protocol() != Protocol::Quantum1d {
        return Err(WalkError::UnsupportedProtocol(format!("analyze expects {}", Protocol::Quantum1d)).into());
    }
    let n = d.n_steps();
    let windows = if a.windows.is_empty() { default_windows(n) } else { a.windows.clone() };
    let mut cfg = config(cli, "analyze", Some(d.protocol()), vec![n]);
    cfg.options = json!({ "windows": windows, "input": a.input.as_ref().map(|_| input_digest(&d)) });
    let report: AnalysisReport = analyze(&d, &windows)?;
    let mut artifacts = vec![Artifact::new(
        format!("analysis_n{n}"),
        ArtifactData::Json { protocol: d.protocol(), value: serde_json::to_value(&report).map_err(WalkError::from)? },
    )];
    if cli.format == Format::Csv {
        let rows = report
            .windows
            .iter()
            .map(|w| vec![w.window.0.to_string(), w.window.1.to_string(), w.count.to_string()])
            .collect();
        artifacts.push(Artifact::table(format!("peaks_n{n}"), d.protocol(), &["lo", "hi", "peaks"], rows));
    }
    let written = write_artifacts(&cli.out, &artifacts, &cfg)?;
    let summary = json!({ "n": n, "x_max": report.x_max, "total_peaks": report.total_peaks });
    print_written(cli, &cfg, &written, summary);
    Ok(())
}

/// Content digest of an input distribution, so the config hash tracks data
/// rather than file paths.
fn input_digest(d: &Distribution) -> String {
    let digest = Sha256::digest(d.to_csv().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn spectrum_cmd(cli: &Cli, a: &SpectrumArgs) -> Result<(), Failure> {
    if let Some(p) = a.protocol {
        let n = a.n.ok_or_else(|| precondition("usage", "2D spectra need --n"))?;
        check_2d(n, a.force)?;
        let protocol = Protocol::from(p);
        let cfg = config(cli, "spectrum", Some(protocol), vec![n]);
        let mut w = walk2d::WalkState2D::new(protocol)?;
        w.advance_to(n);
        let s2 = dft2d(&w.probability())?;
        let stem = format!("spectrum_{}_n{n}", protocol.tag());
        let mut artifacts = Vec::new();
        for kind in [SliceKind::A, SliceKind::B, SliceKind::C] {
            let s = spectrum_slice(&s2, kind);
            artifacts.push(Artifact::new(format!("{stem}_slice{kind:?}"), ArtifactData::Spectrum(s)));
        }
        artifacts.push(Artifact::new(stem, ArtifactData::Spectrum2D { protocol, spectrum: s2 }));
        let written = write_artifacts(&cli.out, &artifacts, &cfg)?;
        print_written(cli, &cfg, &written, serde_json::Value::Null);
        return Ok(());
    }
    let d = match (&a.input, a.n) {
        (Some(p), _) => load_distribution(p)?,
        (None, Some(n)) => walk1d::distribution(n),
        (None, None) => return Err(precondition("usage", "either --n or --input is required")),
    };
    let n = d.n_steps();
    let mut cfg = config(cli, "spectrum", Some(d.protocol()), vec![n]);
    cfg.options = json!({ "input": a.input.as_ref().map(|_| input_digest(&d)) });
    let s = dft(&d)?;
    let summary = json!({
        "n": n,
        "fourier_peaks_per_half": qwalk::spectral::fourier_peak_count(&s),
        "fourier_total_peaks": qwalk::spectral::total_fourier_peaks(&s),
    });
    let artifacts = vec![Artifact::new(format!("spectrum_n{n}"), ArtifactData::Spectrum(s))];
    let written = write_artifacts(&cli.out, &artifacts, &cfg)?;
    print_written(cli, &cfg, &written, summary);
    Ok(())
}

fn reproduce_cmd(cli: &Cli, a: &ReproduceArgs) -> Result<(), Failure> {
    let targets: Vec<Target> = if a.target.eq_ignore_ascii_case("all") {
        if !a.n.is_empty() {
            return Err(precondition("usage", "`reproduce all` runs each target at its own step counts; drop --n"));
        }
        Target::ALL.to_vec()
    } else {
        vec![a.target.parse::<Target>()?]
    };
    let mut session = Session::new();
    let mut failed = 0;
    let mut reports: Vec<Report> = Vec::new();
    for t in targets {
        let ns = if a.n.is_empty() { t.default_ns(a.full) } else { a.n.clone() };
        if t.protocol().is_2d() && t != Target::Table4 && t != Target::Table5 && t != Target::Fig20 {
            if let Some(&n) = ns.iter().find(|&&n| n > MAX_2D) {
                return Err(precondition("n_too_large", format!("2D runs are limited to N <= {MAX_2D}, got {n}")));
            }
        }
        let mut cfg = config(cli, "reproduce", Some(t.protocol()), ns.clone());
        cfg.options = json!({ "target": t.id(), "full": a.full });
        let report = reproduce(&mut session, t, &ns)?;
        let mut artifacts = report.artifacts.clone();
        artifacts.push(Artifact::new(
            "report",
            ArtifactData::Json {
                protocol: t.protocol(),
                value: serde_json::to_value(&report).map_err(WalkError::from)?,
            },
        ));
        write_artifacts(&cli.out.join(t.id()), &artifacts, &cfg)?;
        failed += report.checks.iter().filter(|c| !c.pass).count();
        if cli.format == Format::Csv {
            for c in &report.checks {
                println!("{t} {}", c.line());
            }
            let verdict = if report.passed() { "PASS" } else { "FAIL" };
            println!(
                "{t}: {verdict} ({}/{} checks)",
                report.checks.iter().filter(|c| c.pass).count(),
                report.checks.len()
            );
        }
        reports.push(report);
    }
    if cli.format == Format::Json {
        println!("{}", serde_json::to_string_pretty(&reports).map_err(WalkError::from)?);
    }
    if failed > 0 {
        return Err(Failure::Tolerance(failed));
    }
    Ok(())
}
