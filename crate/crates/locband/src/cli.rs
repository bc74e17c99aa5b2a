//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed verification or runtime failure,
//! 2 usage or input errors, 3 degenerate plan in theory mode.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

use locband_core::calibration::{derive_plan, CalibrationPlan, Mode, PlanParams};
use locband_core::density::by_name;
use locband_core::{
    build_band, build_kde_table, reference_global_band, select_profile, split_sample, AnalyticDensity, Error, Half,
    Kernel,
};

use crate::harness::{self, stream, ExperimentReport};
use crate::io::{self, apply_param, mode_name, parse_mode, parse_pairs, plan_to_pairs};
use crate::verify::verify_inequalities;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "locband", version, about = "Locally adaptive confidence bands for densities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Sample size; `simulate coverage|adaptivity` accept a comma list.
    #[arg(long, global = true)]
    pub n: Option<String>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub reps: Option<u32>,
    /// Master seed; overrides LOCBAND_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub mode: Option<ModeArg>,
    #[arg(long, global = true)]
    pub c2: Option<f64>,
    #[arg(long, global = true)]
    pub lstar: Option<f64>,
    #[arg(long, global = true)]
    pub density: Option<String>,
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// CSV destination; metadata goes to `<out>.meta`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma list of verification suites.
    #[arg(long, global = true)]
    pub suite: Option<String>,
    /// Flat key=value file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Maximum size for `simulate gumbel`.
    #[arg(long, global = true)]
    pub m: Option<u32>,
    /// Comma list of probe points for `simulate adaptivity`.
    #[arg(long, global = true)]
    pub probes: Option<String>,
    /// Fault injection for testing the verifier.
    #[arg(long, global = true)]
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Theory,
    Practical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Declare the rectangular kernel to be of order 2.
    KernelOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    Coverage,
    Adaptivity,
    Window,
    Gumbel,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band from a data file, one value per line.
    Band,
    /// Seeded Monte Carlo experiment.
    Simulate {
        #[arg(value_enum)]
        kind: SimKind,
    },
    /// Inequality suite; exits 1 if any item fails.
    Verify,
    /// True density with local and global bands per mesh cell.
    Curves,
    /// Threshold calibration on the uniform density.
    CalibrateC2,
    /// Prints the derived plan as key=value lines.
    Plan,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Degenerate(String),
    VerifyFailed(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::VerifyFailed(_) | CliError::Runtime(_) => 1,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Degenerate(m) | CliError::VerifyFailed(m) | CliError::Runtime(m) => m,
        }
    }
}

fn runtime(e: Error) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Settings after merging defaults, config file, environment and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub ns: Option<Vec<u64>>,
    pub alpha: f64,
    pub reps: Option<u32>,
    pub seed: u64,
    pub mode: Mode,
    pub density: Option<String>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub suites: Vec<String>,
    pub m: u32,
    pub probes: Vec<f64>,
    /// Plan knobs other than `n`, applied in order.
    pub plan_overrides: Vec<(String, String)>,
}

impl Resolved {
    fn echo(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("config.alpha".to_string(), self.alpha.to_string()),
            ("config.seed".to_string(), self.seed.to_string()),
            ("config.mode".to_string(), mode_name(self.mode).to_string()),
            ("config.m".to_string(), self.m.to_string()),
        ];
        if let Some(ns) = &self.ns {
            v.push(("config.n".into(), ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")));
        }
        if let Some(r) = self.reps {
            v.push(("config.reps".into(), r.to_string()));
        }
        if let Some(d) = &self.density {
            v.push(("config.density".into(), d.clone()));
        }
        if let Some(p) = &self.input {
            v.push(("config.input".into(), p.display().to_string()));
        }
        if let Some(p) = &self.out {
            v.push(("config.out".into(), p.display().to_string()));
        }
        if !self.suites.is_empty() {
            v.push(("config.suite".into(), self.suites.join(",")));
        }
        v.push(("config.probes".into(), self.probes.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")));
        for (k, val) in &self.plan_overrides {
            v.push((format!("config.{k}"), val.clone()));
        }
        v
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| CliError::Usage(format!("{key}: cannot parse '{x}'"))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, s: &str) -> Result<T, CliError> {
    s.trim().parse::<T>().map_err(|_| CliError::Usage(format!("{key}: cannot parse '{s}'")))
}

/// Merges `config` text, the `LOCBAND_SEED` value and the flags.
pub fn resolve(cli: &Cli, config: Option<&str>, env_seed: Option<&str>) -> Result<Resolved, CliError> {
    let mut r = Resolved {
        ns: None,
        alpha: 0.1,
        reps: None,
        seed: DEFAULT_SEED,
        mode: Mode::Practical,
        density: None,
        input: None,
        out: None,
        suites: Vec::new(),
        m: 4096,
        probes: vec![0.5, 0.9],
        plan_overrides: Vec::new(),
    };
    if let Some(text) = config {
        let pairs = parse_pairs(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        for (k, v) in pairs {
            match k.as_str() {
                "n" => r.ns = Some(parse_list("n", &v)?),
                "alpha" => r.alpha = parse_one("alpha", &v)?,
                "reps" => r.reps = Some(parse_one("reps", &v)?),
                "seed" => r.seed = parse_one("seed", &v)?,
                "mode" => {
                    r.mode = parse_mode(&v).ok_or_else(|| CliError::Usage(format!("config: bad mode '{v}'")))?
                }
                "density" => r.density = Some(v),
                "input" => r.input = Some(PathBuf::from(v)),
                "out" => r.out = Some(PathBuf::from(v)),
                "suite" => r.suites = v.split(',').map(|s| s.trim().to_string()).collect(),
                "m" => r.m = parse_one("m", &v)?,
                "probes" => r.probes = parse_list("probes", &v)?,
                "lstar" => r.plan_overrides.push(("l_star".into(), v)),
                k if io::is_param_key(k) => r.plan_overrides.push((k.to_string(), v)),
                k if io::is_derived_key(k) => {}
                k => return Err(CliError::Usage(format!("config: unknown key '{k}'"))),
            }
        }
    }
    if let Some(s) = env_seed {
        r.seed = parse_one("LOCBAND_SEED", s)?;
    }
    if let Some(n) = &cli.n {
        r.ns = Some(parse_list("--n", n)?);
    }
    if let Some(a) = cli.alpha {
        r.alpha = a;
    }
    if cli.reps.is_some() {
        r.reps = cli.reps;
    }
    if let Some(s) = cli.seed {
        r.seed = s;
    }
    if let Some(m) = cli.mode {
        r.mode = match m {
            ModeArg::Theory => Mode::Theory,
            ModeArg::Practical => Mode::Practical,
        };
    }
    if let Some(c2) = cli.c2 {
        r.plan_overrides.push(("c2".into(), c2.to_string()));
    }
    if let Some(l) = cli.lstar {
        r.plan_overrides.push(("l_star".into(), l.to_string()));
    }
    if cli.density.is_some() {
        r.density = cli.density.clone();
    }
    if cli.input.is_some() {
        r.input = cli.input.clone();
    }
    if cli.out.is_some() {
        r.out = cli.out.clone();
    }
    if let Some(s) = &cli.suite {
        r.suites = s.split(',').map(|x| x.trim().to_string()).collect();
    }
    if let Some(m) = cli.m {
        r.m = m;
    }
    if let Some(p) = &cli.probes {
        r.probes = parse_list("--probes", p)?;
    }
    if !(r.alpha > 0.0 && r.alpha < 1.0) {
        return Err(CliError::Usage(format!("alpha = {} outside (0, 1)", r.alpha)));
    }
    Ok(r)
}

fn plan_params(r: &Resolved, n: u64, kernel: &Kernel) -> Result<PlanParams, CliError> {
    let mut p = PlanParams::practical(n, kernel);
    p.mode = r.mode;
    for (k, v) in &r.plan_overrides {
        apply_param(&mut p, k, v).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(p)
}

fn plan_for(r: &Resolved, n: u64, kernel: &Kernel) -> Result<CalibrationPlan, CliError> {
    let p = plan_params(r, n, kernel)?;
    derive_plan(&p, kernel).map_err(|e| match (p.mode, &e) {
        (Mode::Theory, Error::EmptyBandwidthGrid { .. } | Error::InvalidConstants(_)) => {
            CliError::Degenerate(format!("theory-mode plan is degenerate: {e}"))
        }
        (_, Error::InvalidConstants(_)) => CliError::Usage(e.to_string()),
        _ => runtime(e),
    })
}

fn density(r: &Resolved, default: &str) -> Result<AnalyticDensity, CliError> {
    let name = r.density.as_deref().unwrap_or(default);
    by_name(name).map_err(|e| CliError::Usage(e.to_string()))
}

fn single_n(r: &Resolved, default: u64) -> Result<u64, CliError> {
    match &r.ns {
        None => Ok(default),
        Some(v) if v.len() == 1 => Ok(v[0]),
        Some(_) => Err(CliError::Usage("this command takes a single --n".into())),
    }
}

/// What a command produced: CSV body and metadata lines.
pub struct Output {
    pub csv: String,
    pub meta: Vec<(String, String)>,
}

fn meta_text(meta: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in meta {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}

fn report_output(r: &Resolved, rep: ExperimentReport) -> Output {
    let mut meta = r.echo();
    meta.extend(io::parse_pairs(&rep.metadata()).expect("report metadata is key=value"));
    Output { csv: rep.to_csv(), meta }
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn cmd_band(r: &Resolved, kernel: &Kernel) -> Result<Output, CliError> {
    let path = r.input.as_ref().ok_or_else(|| CliError::Usage("band needs --input".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let data = io::parse_data(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if data.len() < 4 {
        return Err(CliError::Usage(format!("{}: need at least 4 values, found {}", path.display(), data.len())));
    }
    let mut meta = r.echo();
    if let Some(ns) = &r.ns {
        if ns.as_slice() != [data.len() as u64] {
            meta.push(("warning.n".into(), format!("--n ignored; the file holds {} values", data.len())));
        }
    }
    let plan = plan_for(r, data.len() as u64, kernel)?;
    let split = split_sample(&data).map_err(runtime)?;
    let table = build_kde_table(&split, &plan, kernel, Half::Second).map_err(runtime)?;
    let profile = select_profile(&table, &plan).map_err(runtime)?;
    let band = build_band(&split, &profile, &plan, kernel, r.alpha).map_err(runtime)?;
    meta.extend(plan_to_pairs(&plan).into_iter().map(|(k, v)| (format!("plan.{k}"), v)));
    meta.push(("q_n".into(), band.q_n.to_string()));
    for (i, w) in plan.warnings.iter().enumerate() {
        meta.push((format!("warning.{i}"), w.clone()));
    }
    Ok(Output { csv: io::band_csv(&band), meta })
}

fn cmd_simulate(r: &Resolved, kind: SimKind, kernel: &Kernel) -> Result<Output, CliError> {
    let rep = match kind {
        SimKind::Coverage => {
            let p = density(r, "peak")?;
            let ns = r.ns.clone().unwrap_or_else(|| vec![1 << 12]);
            let reps = r.reps.unwrap_or(100);
            if ns.len() == 1 {
                let plan = plan_for(r, ns[0], kernel)?;
                harness::run_coverage(&p, &plan, kernel, r.alpha, reps, r.seed)
            } else {
                for &n in &ns {
                    plan_for(r, n, kernel)?;
                }
                let params = plan_params(r, ns[0], kernel)?;
                harness::run_coverage_trend(&p, &params, &ns, kernel, r.alpha, reps, r.seed)
            }
        }
        SimKind::Adaptivity => {
            let p = density(r, "peak")?;
            let ns = r.ns.clone().unwrap_or_else(|| vec![1 << 12, 1 << 14, 1 << 16]);
            let plans = ns.iter().map(|&n| plan_for(r, n, kernel)).collect::<Result<Vec<_>, _>>()?;
            harness::run_adaptivity(&p, &plans, kernel, r.alpha, r.reps.unwrap_or(50), r.seed, &r.probes)
        }
        SimKind::Window => {
            let p = density(r, "peak")?;
            let plan = plan_for(r, single_n(r, 1 << 14)?, kernel)?;
            harness::run_window_check(&p, &plan, kernel, r.reps.unwrap_or(100), r.seed)
        }
        SimKind::Gumbel => harness::run_gumbel_calibration(kernel, r.m, r.reps.unwrap_or(5000), r.seed),
    }
    .map_err(|e| match e {
        Error::InvalidConfiguration(_) | Error::OracleUnavailable(_) => CliError::Usage(e.to_string()),
        e => runtime(e),
    })?;
    Ok(report_output(r, rep))
}

fn cmd_verify(r: &Resolved, kernel: &Kernel) -> Result<(Output, bool, Vec<String>), CliError> {
    let report = verify_inequalities(kernel, &r.suites).map_err(|e| match e {
        Error::InvalidConfiguration(_) => CliError::Usage(e.to_string()),
        e => runtime(e),
    })?;
    let failed: Vec<String> = report.failures().map(|i| format!("{}:{}", i.suite, i.name)).collect();
    let mut meta = r.echo();
    meta.push(("kernel".into(), kernel.name().to_string()));
    meta.push(("items".into(), report.items.len().to_string()));
    meta.push(("failed".into(), failed.join(",")));
    Ok((Output { csv: report.to_csv(), meta }, report.all_passed(), failed))
}

fn cmd_curves(r: &Resolved, kernel: &Kernel) -> Result<Output, CliError> {
    let p = density(r, "peak")?;
    let n = single_n(r, 1 << 14)?;
    let plan = plan_for(r, n, kernel)?;
    let mut rng = stream(r.seed, 0, 0);
    let data = p.sample(n as usize, &mut rng).map_err(runtime)?;
    let split = split_sample(&data).map_err(runtime)?;
    let table = build_kde_table(&split, &plan, kernel, Half::Second).map_err(runtime)?;
    let profile = select_profile(&table, &plan).map_err(runtime)?;
    let local = build_band(&split, &profile, &plan, kernel, r.alpha).map_err(runtime)?;
    let global = reference_global_band(&split, &plan, kernel, r.alpha).map_err(runtime)?;
    let mut csv = String::from("k,t,density,local_lo,local_hi,global_lo,global_hi,h_loc,j_hat\n");
    for (c, g) in local.cells.iter().zip(&global.cells) {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            c.k,
            c.t_hi,
            p.evaluate(c.t_hi),
            c.lo(),
            c.hi(),
            g.lo(),
            g.hi(),
            c.h_loc,
            c.j_hat_right.expect("adaptive band records exponents")
        );
    }
    let mut meta = r.echo();
    meta.extend(plan_to_pairs(&plan).into_iter().map(|(k, v)| (format!("plan.{k}"), v)));
    Ok(Output { csv, meta })
}

fn cmd_calibrate(r: &Resolved, kernel: &Kernel) -> Result<Output, CliError> {
    let n = single_n(r, 1 << 14)?;
    let params = plan_params(r, n, kernel)?;
    let rep = harness::calibrate_c2(kernel, &params, r.reps.unwrap_or(50), r.seed, 0.05, 0.95).map_err(runtime)?;
    eprintln!("c2 = {}", rep.summary_value("c2").expect("stat"));
    Ok(report_output(r, rep))
}

fn emit(r: &Resolved, out: &Output) -> Result<(), CliError> {
    match &r.out {
        Some(path) => {
            std::fs::write(path, &out.csv)
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
            let meta = sidecar(path);
            std::fs::write(&meta, meta_text(&out.meta))
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", meta.display())))?;
        }
        None => {
            print!("{}", out.csv);
            eprint!("{}", meta_text(&out.meta));
        }
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => Some(
            std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let env_seed = std::env::var("LOCBAND_SEED").ok();
    let r = resolve(cli, config.as_deref(), env_seed.as_deref())?;
    let mut kernel = Kernel::rectangular();
    if cli.fault == Some(Fault::KernelOrder) {
        kernel = kernel.with_declared_order(2);
    }
    match &cli.command {
        Command::Band => emit(&r, &cmd_band(&r, &kernel)?),
        Command::Simulate { kind } => emit(&r, &cmd_simulate(&r, *kind, &kernel)?),
        Command::Verify => {
            let (out, ok, failed) = cmd_verify(&r, &kernel)?;
            emit(&r, &out)?;
            if ok {
                Ok(())
            } else {
                Err(CliError::VerifyFailed(format!("failed items: {}", failed.join(", "))))
            }
        }
        Command::Curves => emit(&r, &cmd_curves(&r, &kernel)?),
        Command::CalibrateC2 => emit(&r, &cmd_calibrate(&r, &kernel)?),
        Command::Plan => {
            let n = single_n(&r, 1 << 12)?;
            let plan = plan_for(&r, n, &kernel)?;
            print!("{}", io::plan_to_text(&plan));
            for w in &plan.warnings {
                eprintln!("warning: {w}");
            }
            Ok(())
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return 0;
            }
            eprintln!("\n{}", Cli::command().render_usage());
            return 2;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("locband").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flag_beats_env_beats_config() {
        let c = cli(&["plan"]);
        assert_eq!(resolve(&c, Some("seed=5\n"), None).unwrap().seed, 5);
        assert_eq!(resolve(&c, Some("seed=5\n"), Some("7")).unwrap().seed, 7);
        let c = cli(&["plan", "--seed", "9"]);
        assert_eq!(resolve(&c, Some("seed=5\n"), Some("7")).unwrap().seed, 9);
    }

    #[test]
    fn config_keys() {
        let c = cli(&["plan", "--c2", "0.4"]);
        let r = resolve(&c, Some("c2=0.9\nkappa1=0.7\nlstar=2\n"), None).unwrap();
        let p = plan_params(&r, 1000, &Kernel::rectangular()).unwrap();
        assert_eq!((p.c2, p.kappa1, p.l_star), (0.4, 0.7, 2.0));
        match resolve(&c, Some("nope=1\n"), None) {
            Err(CliError::Usage(m)) => assert!(m.contains("nope")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn theory_mode_degenerates() {
        let c = cli(&["plan", "--mode", "theory", "--n", "2048"]);
        let r = resolve(&c, None, None).unwrap();
        assert!(matches!(plan_for(&r, 2048, &Kernel::rectangular()), Err(CliError::Degenerate(_))));
    }
}
