//! Command line front end.
//!
//! Exit codes: 0 success, 2 usage, 3 numeric failure, 4 unlisted type in a
//! `sweep --strict`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use isosoliton::classifier::{
    self, classify, domain_report, endpoint_seeds, seed_grid, sweep, TypeIndex, DEFAULT_CROSSING_TOL,
};
use isosoliton::integrator::{endpoint_seed, maximal_trace, Direction, IntegratorConfig, Trace};
use isosoliton::output::{self, Overlays, PlotKind};
use isosoliton::verify::{self, Ambient, GraphSample, IsoparametricFn};
use isosoliton::{Error, PhasePoint, SolitonParams};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "ISOSOLITON_OUT_DIR";

// Like println!, but a closed stdout is not an error.
macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "isosoliton", version, about = "Isoparametric translating solitons on spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one maximal solution and write its samples.
    Trace(TraceArgs),
    /// Integrate and classify one maximal solution.
    Classify(ClassifyArgs),
    /// Classify a grid of seeds.
    Sweep(SweepArgs),
    /// Run finite difference checks.
    Verify(VerifyArgs),
    /// Describe the domain on the sphere for a given type.
    Domain(DomainArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    n: u32,
    /// Common multiplicity (k = 1, 3, 6, or both equal for k = 2, 4).
    #[arg(long, conflicts_with_all = ["m1", "m2"])]
    m: Option<u32>,
    #[arg(long, requires = "m2")]
    m1: Option<u32>,
    #[arg(long, requires = "m1")]
    m2: Option<u32>,
}

impl ParamArgs {
    fn build(&self) -> Result<SolitonParams, Error> {
        let (m1, m2) = match (self.m, self.m1, self.m2) {
            (Some(m), _, _) => (m, m),
            (None, Some(a), Some(b)) => (a, b),
            _ => match self.k {
                // the height function realises k = 1 with m = n - 1
                1 => (self.n.saturating_sub(1), self.n.saturating_sub(1)),
                2 | 4 if (2 * self.n.saturating_sub(1)) % (2 * self.k) == 0 => {
                    let m = self.n.saturating_sub(1) / self.k;
                    (m, m)
                }
                2 | 3 | 4 | 6 => {
                    return Err(Error::InvalidParams(format!(
                        "k = {} needs --m or --m1/--m2",
                        self.k
                    )))
                }
                // let the catalog report the bad k
                _ => (1, 1),
            },
        };
        SolitonParams::new(self.k, self.n, m1, m2)
    }
}

#[derive(Args, Clone)]
struct IntegratorArgs {
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1e8)]
    blowup_threshold: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: usize,
    /// Offset from the endpoint for endpoint shooting.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 4096)]
    max_samples: usize,
    /// Keep every accepted step.
    #[arg(long)]
    full_resolution: bool,
}

impl IntegratorArgs {
    fn build(&self) -> Result<IntegratorConfig, Error> {
        let cfg = IntegratorConfig {
            tol: self.tol,
            blowup_threshold: self.blowup_threshold,
            max_steps: self.max_steps,
            epsilon: self.epsilon,
            max_samples: self.max_samples,
            full_resolution: self.full_resolution,
            ..IntegratorConfig::default()
        };
        cfg.validate()?;
        if !(cfg.epsilon <= 1e-4) {
            return Err(Error::Domain("epsilon must lie in (0, 1e-4]".into()));
        }
        Ok(cfg)
    }
}

#[derive(Args, Clone)]
struct SeedArgs {
    #[arg(long, allow_hyphen_values = true, requires = "seed_psi", conflicts_with = "endpoint")]
    seed_r: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "seed_r")]
    seed_psi: Option<f64>,
    /// Shoot from the endpoint -1 or 1.
    #[arg(long, allow_hyphen_values = true, value_parser = ["-1", "1", "+1"])]
    endpoint: Option<String>,
}

impl SeedArgs {
    fn build(&self, p: &SolitonParams, cfg: &IntegratorConfig) -> Result<Option<PhasePoint>, Error> {
        match (&self.endpoint, self.seed_r, self.seed_psi) {
            (Some(e), _, _) => {
                let which = if e == "-1" { Direction::Left } else { Direction::Right };
                endpoint_seed(p, which, cfg.epsilon).map(Some)
            }
            (None, Some(r), Some(psi)) => PhasePoint::new(r, psi).map(Some),
            _ => Ok(None),
        }
    }
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output directory (default: $ISOSOLITON_OUT_DIR or the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutArgs {
    fn dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Clone)]
struct PlotArgs {
    #[arg(long)]
    no_eta: bool,
    #[arg(long)]
    no_zeta: bool,
    #[arg(long)]
    no_r_line: bool,
}

impl PlotArgs {
    fn overlays(&self) -> Overlays {
        Overlays {
            eta: !self.no_eta,
            zeta: !self.no_zeta,
            r_line: !self.no_r_line,
        }
    }
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    integ: IntegratorArgs,
    #[command(flatten)]
    out: OutArgs,
    #[command(flatten)]
    plot: PlotArgs,
    /// Output formats.
    #[arg(long, value_delimiter = ',', default_values = ["csv", "json"])]
    format: Vec<Format>,
    /// Also write SVG plots of psi, V' and V.
    #[arg(long)]
    svg: bool,
    /// File name stem for the csv and json outputs.
    #[arg(long, default_value = "trace")]
    name: String,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    integ: IntegratorArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Tolerance for the zero crossing relative to R.
    #[arg(long, default_value_t = DEFAULT_CROSSING_TOL)]
    crossing_tol: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    integ: IntegratorArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Grid size as NRxNPSI.
    #[arg(long, default_value = "21x21")]
    grid: String,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', num_args = 2, default_values_t = [-0.9, 0.9])]
    r_range: Vec<f64>,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', num_args = 2, default_values_t = [-5.0, 5.0])]
    psi_range: Vec<f64>,
    /// Append the two endpoint shooting seeds.
    #[arg(long)]
    with_endpoints: bool,
    /// Exit with code 4 if any seed is unlisted.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = DEFAULT_CROSSING_TOL)]
    crossing_tol: f64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Check {
    GrimReaper,
    Sphere,
    Ode,
    Identities,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    check: Check,
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = verify::DEFAULT_FD_STEP)]
    fd_step: f64,
    #[arg(long, default_value_t = 1)]
    rng_seed: u64,
    /// Include per-point residuals in the json report.
    #[arg(long)]
    verbose: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct DomainArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Shape type, I to VII.
    #[arg(long = "type")]
    shape: String,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    integ: IntegratorArgs,
    #[command(flatten)]
    out: OutArgs,
}

enum Failure {
    Usage(String),
    Numeric(Error),
    Unlisted(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e)
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Numeric(e.into()))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Numeric(e.into()))?;
    say!("wrote {}", path.display());
    Ok(path)
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn setup(
    params: &ParamArgs,
    integ: &IntegratorArgs,
    seed: &SeedArgs,
) -> Result<(SolitonParams, IntegratorConfig, Option<PhasePoint>), Failure> {
    let p = params.build().map_err(usage)?;
    let cfg = integ.build().map_err(usage)?;
    let s = seed.build(&p, &cfg).map_err(usage)?;
    Ok((p, cfg, s))
}

fn require_seed(s: Option<PhasePoint>) -> Result<PhasePoint, Failure> {
    s.ok_or_else(|| Failure::Usage("give --seed-r and --seed-psi, or --endpoint".into()))
}

fn run_trace(a: &TraceArgs) -> Result<(), Failure> {
    let (p, cfg, seed) = setup(&a.params, &a.integ, &a.seed)?;
    let seed = require_seed(seed)?;
    let trace = maximal_trace(&p, seed, &cfg)?;
    let dir = a.out.dir();
    let label = match classify(&trace, DEFAULT_CROSSING_TOL) {
        Ok(s) => format!("type {} / {} / {}", s.labels.psi, s.labels.vprime, s.labels.v),
        Err(e) => e.to_string(),
    };
    say!(
        "left {:?} at {:.12}, right {:?} at {:.12}; {label}",
        trace.left_event.kind, trace.left_event.location, trace.right_event.kind, trace.right_event.location
    );
    if a.format.contains(&Format::Csv) {
        write(&dir, &format!("{}.csv", a.name), &output::trace_csv(&trace))?;
    }
    if a.format.contains(&Format::Json) {
        write(&dir, &format!("{}.json", a.name), &pretty(&output::trace_json(&trace)))?;
    }
    if a.svg || a.format.contains(&Format::Svg) {
        for kind in [PlotKind::Psi, PlotKind::VPrime, PlotKind::V] {
            let svg = output::trace_svg(&trace, kind, a.plot.overlays(), &label);
            write(&dir, &format!("{}.svg", kind.file_stem()), &svg)?;
        }
    }
    if !trace.is_complete() {
        return Err(Failure::Numeric(Error::IncompleteTrace(
            "step budget exhausted; outputs cover the integrated part".into(),
        )));
    }
    Ok(())
}

fn classify_trace(p: &SolitonParams, trace: &Trace, tol: f64) -> Result<serde_json::Value, Failure> {
    let shape = classify(trace, tol)?;
    let domain = match domain_report(p, &shape) {
        Ok(d) => Some(d),
        Err(Error::UnsupportedK(_)) => None,
        Err(e) => return Err(e.into()),
    };
    say!("type {} / {} / {}", shape.labels.psi, shape.labels.vprime, shape.labels.v);
    if let Some(note) = &shape.note {
        say!("note: {note}");
    }
    Ok(output::classify_json(trace, &shape, domain.as_ref()))
}

fn run_classify(a: &ClassifyArgs) -> Result<(), Failure> {
    let (p, cfg, seed) = setup(&a.params, &a.integ, &a.seed)?;
    let seed = require_seed(seed)?;
    let trace = maximal_trace(&p, seed, &cfg)?;
    let v = classify_trace(&p, &trace, a.crossing_tol)?;
    write(&a.out.dir(), "classify.json", &pretty(&v))?;
    Ok(())
}

fn parse_grid(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Usage(format!("grid must look like 21x21, got {s:?}"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn run_sweep(a: &SweepArgs) -> Result<(), Failure> {
    let p = a.params.build().map_err(usage)?;
    let cfg = a.integ.build().map_err(usage)?;
    let (nr, npsi) = parse_grid(&a.grid)?;
    let mut seeds = seed_grid((a.r_range[0], a.r_range[1]), (a.psi_range[0], a.psi_range[1]), nr, npsi)
        .map_err(usage)?;
    if a.with_endpoints {
        seeds.extend(endpoint_seeds(&p, cfg.epsilon)?);
    }
    let report = sweep(&p, &seeds, &cfg, a.crossing_tol);
    let dir = a.out.dir();
    say!("type  count");
    for (t, c) in &report.histogram {
        say!("{t:<5} {c}");
    }
    say!("note: {}", report.note);
    if report.unlisted > 0 {
        say!("WARNING: {} seed(s) produced an unlisted feature tuple", report.unlisted);
    }
    if report.errors > 0 {
        say!("WARNING: {} seed(s) failed", report.errors);
    }
    let json = serde_json::to_value(&report).map_err(|e| Failure::Numeric(e.into()))?;
    write(&dir, "sweep.json", &pretty(&json))?;
    write(&dir, "sweep.csv", &output::sweep_csv(&report))?;
    write(&dir, "histogram.csv", &output::histogram_csv(&report))?;
    if a.strict && report.unlisted > 0 {
        return Err(Failure::Unlisted(report.unlisted));
    }
    Ok(())
}

fn run_verify(a: &VerifyArgs) -> Result<(), Failure> {
    if !(a.fd_step > 0.0) || a.points == 0 {
        return Err(Failure::Usage("--fd-step and --points must be positive".into()));
    }
    let all = a.check == Check::All;
    let mut report = serde_json::Map::new();

    if all || a.check == Check::GrimReaper {
        let sample = GraphSample {
            ambient: Ambient::Euclidean(2),
            points: verify::grim_reaper_points(a.points, 1.2, a.rng_seed),
            u: &verify::grim_reaper,
            fd_step: a.fd_step,
        };
        let r = verify::soliton_residual(&sample, a.verbose)?;
        say!("grim-reaper: max |residual - 1| = {:.3e}", r.max_dev);
        report.insert("grim_reaper".into(), serde_json::to_value(r).unwrap_or_default());
    }
    if all || a.check == Check::Sphere {
        let p = SolitonParams::new(1, 2, 1, 1)?;
        let cfg = IntegratorConfig::default();
        let trace = maximal_trace(&p, endpoint_seed(&p, Direction::Left, cfg.epsilon)?, &cfg)?;
        let band = (-0.95, trace.right_event.location - 0.1);
        let r = verify::sphere_trace_residual(&trace, band, a.points, a.fd_step, a.rng_seed)?;
        say!(
            "sphere (k=1, n=2, endpoint solution, r in [{:.3}, {:.3}]): max |residual - 1| = {:.3e}",
            band.0, band.1, r.max_dev
        );
        report.insert(
            "sphere".into(),
            json!({"band": band, "residual": r}),
        );
    }
    if all || a.check == Check::Ode {
        let mut out = Vec::new();
        for (k, n, m1, m2) in [(1, 2, 1, 1), (2, 3, 1, 1), (2, 4, 1, 2), (3, 4, 1, 1)] {
            let p = SolitonParams::new(k, n, m1, m2)?;
            let cfg = IntegratorConfig::default();
            let trace = maximal_trace(&p, PhasePoint::new(p.r_const(), 0.0)?, &cfg)?;
            let s = verify::general_ode_residual(&p, &trace)?;
            say!("ode k={k} n={n} m1={m1} m2={m2}: max relative residual = {:.3e}", s.max_rel);
            out.push(json!({"params": p, "residual": s}));
        }
        report.insert("ode".into(), json!(out));
    }
    if all || a.check == Check::Identities {
        let mut out = Vec::new();
        for f in [
            IsoparametricFn::k1(2)?,
            IsoparametricFn::k1(4)?,
            IsoparametricFn::k2(3, 1)?,
            IsoparametricFn::k2(3, 2)?,
            IsoparametricFn::k2(5, 3)?,
        ] {
            let r = verify::isoparametric_identities(&f, a.points, a.rng_seed)?;
            say!(
                "identities {:?}: fd {:.1e}/{:.1e}, ambient {:.1e}/{:.1e}",
                f, r.gradient_fd, r.laplacian_fd, r.gradient_ambient, r.laplacian_ambient
            );
            out.push(serde_json::to_value(r).unwrap_or_default());
        }
        report.insert("identities".into(), json!(out));
    }
    write(&a.out.dir(), "verify.json", &pretty(&serde_json::Value::Object(report)))?;
    Ok(())
}

fn run_domain(a: &DomainArgs) -> Result<(), Failure> {
    let (p, cfg, seed) = setup(&a.params, &a.integ, &a.seed)?;
    let want = TypeIndex::parse(&a.shape)
        .ok_or_else(|| Failure::Usage(format!("unknown type {:?}", a.shape)))?;
    if !matches!(p.k, 1..=3) {
        return Err(usage(Error::UnsupportedK(p.k)));
    }
    let seed = match (seed, want) {
        (Some(s), _) => s,
        (None, TypeIndex::VI) => endpoint_seed(&p, Direction::Left, cfg.epsilon)?,
        (None, TypeIndex::VII) => endpoint_seed(&p, Direction::Right, cfg.epsilon)?,
        (None, _) => {
            return Err(Failure::Usage(format!(
                "type {want} needs a seed (--seed-r, --seed-psi)"
            )))
        }
    };
    let trace = maximal_trace(&p, seed, &cfg)?;
    let shape = classifier::classify(&trace, DEFAULT_CROSSING_TOL)?;
    if shape.index != Some(want) {
        return Err(Failure::Numeric(Error::Precondition(format!(
            "seed ({}, {}) gives type {}, not {want}",
            seed.r, seed.psi, shape.labels.v
        ))));
    }
    let d = domain_report(&p, &shape)?;
    let v = json!({"params": p, "seed": seed, "type": shape.labels, "domain": d});
    say!("{}", serde_json::to_string(&d.description).unwrap_or_default());
    write(&a.out.dir(), "domain.json", &pretty(&v))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Trace(a) => run_trace(a),
        Command::Classify(a) => run_classify(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Verify(a) => run_verify(a),
        Command::Domain(a) => run_domain(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("{}", json!({"error": e.to_string()}));
            ExitCode::from(3)
        }
        Err(Failure::Unlisted(n)) => {
            eprintln!("error: {n} unlisted type(s) in strict mode");
            ExitCode::from(4)
        }
    }
}
