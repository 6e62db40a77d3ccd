//! `seqgrad` command-line tool.

mod ranges;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use seqgrad_core::gc::CodeFamily;
use seqgrad_core::m_sgc::ChunkInfo;
use seqgrad_core::straggler::{
    gen_conforming, gen_ge, gen_ge_profile, gen_periodic_bursty, gen_uniform, read_pattern,
    read_profile, write_pattern, write_profile, ConformanceTracker,
};
use seqgrad_core::tuner::{gc_grid, m_grid, probe_then_switch, sr_grid};
use seqgrad_core::{
    derive_m_params, derive_m_rep_params, derive_sr_params, derive_sr_rep_params, fit_slope,
    grid_search, lb_arbitrary, lb_bursty, optimality_gap, run, to_f64, ArbitraryModel,
    AssumedModel, BurstyModel, DelayProfile, Fraction, GeParams, PerRoundModel, Scheme, SimConfig,
    SimInput, SimReport, StragglerPattern, TuneConfig, WaitoutPolicy,
};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] seqgrad_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_parameter_error() => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } | CliError::Usage(_) => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser)]
#[command(
    name = "seqgrad",
    version,
    about = "Sequential gradient coding: simulation, bounds and parameter tuning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scheme round by round on a straggler pattern or delay profile.
    Simulate(SimulateArgs),
    /// Rank candidate parameters on a reference delay profile.
    Tune(TuneArgs),
    /// Print load lower bounds and scheme loads.
    Bounds(BoundsArgs),
    /// Check a straggler pattern against a straggler model.
    CheckPattern(CheckArgs),
    /// Generate a straggler pattern or delay profile CSV.
    GenPattern(GenArgs),
    /// Print a scheme's data placement.
    Layout(LayoutArgs),
}

#[derive(Args, Clone, Debug)]
struct SchemeArgs {
    /// no-coding, gc, gc-rep, sr-sgc, sr-sgc-rep, m-sgc or m-sgc-rep.
    #[arg(long)]
    scheme: String,
    #[arg(long)]
    n: usize,
    #[arg(long = "B")]
    burst: Option<usize>,
    #[arg(long = "W")]
    window: Option<usize>,
    #[arg(long)]
    lambda: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
}

impl SchemeArgs {
    fn scheme(&self) -> CliResult<Scheme> {
        let scheme = Scheme::from_name(&self.scheme, self.s, self.burst, self.window, self.lambda)?;
        scheme.validate(self.n)?;
        Ok(scheme)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum WaitoutArg {
    /// Enforce the scheme's design straggler model.
    Design,
    /// Never wait out stragglers.
    Off,
}

#[derive(Args)]
#[command(group(ArgGroup::new("input").required(true).args(["pattern", "profile", "gen"])))]
struct SimulateArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Number of jobs J (defaults to the input length minus T, or 100 for --gen).
    #[arg(long)]
    jobs: Option<usize>,
    /// Straggler threshold for delay profiles.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Straggler pattern CSV.
    #[arg(long)]
    pattern: Option<PathBuf>,
    /// Delay profile CSV (timed mode).
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Generated pattern: ge:pS,pN | periodic | uniform:p | none.
    #[arg(long)]
    gen: Option<String>,
    #[arg(long, env = "SEQGRAD_SEED", default_value_t = 0)]
    seed: u64,
    /// Gradient dimension for numeric decode checks (0 = combinatorial only).
    #[arg(long, default_value_t = 0)]
    dim: usize,
    #[arg(long, value_enum, default_value = "design")]
    waitout: WaitoutArg,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-round CSV log path.
    #[arg(long)]
    rounds_csv: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("slope").required(true).args(["alpha", "fit_samples"])))]
struct TuneArgs {
    /// Reference delay profile CSV measured at load 1/n.
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Seconds per unit of normalized load.
    #[arg(long)]
    alpha: Option<f64>,
    /// CSV of `load,seconds` samples to fit alpha from.
    #[arg(long)]
    fit_samples: Option<PathBuf>,
    /// SR-SGC grid, e.g. `B=1..2;W=2..5;lambda=1..40`.
    #[arg(long)]
    grid_sr: Option<String>,
    /// M-SGC grid, e.g. `B=1..3;W=2..6;lambda=8..256:8`.
    #[arg(long)]
    grid_m: Option<String>,
    /// GC grid, e.g. `s=1..40`.
    #[arg(long)]
    grid_gc: Option<String>,
    /// Jobs in the estimation horizon (defaults to the profile length).
    #[arg(long)]
    jobs: Option<usize>,
    /// Run T_probe uncoded rounds first, tune on them, then switch.
    #[arg(long)]
    probe: Option<usize>,
    /// Ranking CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full JSON result path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long = "B")]
    burst: usize,
    #[arg(long = "W")]
    window: usize,
    #[arg(long)]
    lambda: usize,
    /// Arbitrary model N (defaults to B).
    #[arg(long = "N")]
    max_per_worker: Option<usize>,
    /// Arbitrary model W' (defaults to W+B-1).
    #[arg(long = "Wp")]
    window_arbitrary: Option<usize>,
    /// Arbitrary model lambda' (defaults to lambda).
    #[arg(long = "lambda-p")]
    lambda_arbitrary: Option<usize>,
    /// Sweep W over a list such as `4..40` and write CSV.
    #[arg(long)]
    sweep_w: Option<String>,
    /// CSV path for the sweep (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelKind {
    Bursty,
    Arbitrary,
    PerRound,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[arg(long = "B")]
    burst: Option<usize>,
    /// Window length (W, or W' for the arbitrary model).
    #[arg(long = "W")]
    window: Option<usize>,
    #[arg(long)]
    lambda: Option<usize>,
    #[arg(long = "N")]
    max_per_worker: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
}

impl ModelArgs {
    fn model(&self) -> CliResult<AssumedModel> {
        let need = |v: Option<usize>, flag: &str| {
            v.ok_or_else(|| usage(format!("this model needs --{flag}")))
        };
        Ok(
            match self.model.ok_or_else(|| usage("--model is required"))? {
                ModelKind::Bursty => AssumedModel::Bursty(BurstyModel::new(
                    need(self.burst, "B")?,
                    need(self.window, "W")?,
                    need(self.lambda, "lambda")?,
                )?),
                ModelKind::Arbitrary => AssumedModel::Arbitrary(ArbitraryModel::new(
                    need(self.max_per_worker, "N")?,
                    need(self.window, "W")?,
                    need(self.lambda, "lambda")?,
                )?),
                ModelKind::PerRound => AssumedModel::PerRound(PerRoundModel {
                    s: need(self.s, "s")?,
                }),
            },
        )
    }
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    pattern: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    /// ge:pS,pN | periodic | uniform:p | conforming:p | ge-profile:pS,pN
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    rounds: usize,
    #[command(flatten)]
    model: ModelArgs,
    /// Non-straggler time range for ge-profile, `lo,hi` seconds.
    #[arg(long, default_value = "1.0,1.3")]
    fast: String,
    /// Straggler time range for ge-profile, `lo,hi` seconds.
    #[arg(long, default_value = "2.6,5.0")]
    slow: String,
    #[arg(long, env = "SEQGRAD_SEED", default_value_t = 0)]
    seed: u64,
    /// CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LayoutArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// JSON path for the chunk table.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Provenance record written next to every report file.
#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    argv: Vec<String>,
    config: Value,
    version: &'static str,
    seed: Option<u64>,
    /// Input path -> SHA-256 of its contents.
    inputs: BTreeMap<String, String>,
}

struct Context {
    argv: Vec<String>,
    inputs: BTreeMap<String, String>,
}

impl Context {
    fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.inputs.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(&bytes)),
        );
        Ok(bytes)
    }

    fn write_with_manifest(
        &self,
        path: &Path,
        contents: &[u8],
        subcommand: &str,
        config: Value,
        seed: Option<u64>,
    ) -> CliResult<()> {
        write_file(path, contents)?;
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            argv: self.argv.clone(),
            config,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            inputs: self.inputs.clone(),
        };
        let mut manifest_path = path.as_os_str().to_owned();
        manifest_path.push(".manifest.json");
        write_file(Path::new(&manifest_path), &to_json(&manifest))
    }
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("report serializes");
    s.push(b'\n');
    s
}

fn frac(f: Fraction) -> String {
    format!("{f} ({:.6})", to_f64(f))
}

fn parse_pair(spec: &str, what: &str) -> CliResult<(f64, f64)> {
    let (a, b) = spec
        .split_once(',')
        .ok_or_else(|| usage(format!("{what} expects two comma-separated numbers")))?;
    let p = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("{what}: {x:?} is not a number")))
    };
    Ok((p(a)?, p(b)?))
}

fn parse_prob(spec: &str, what: &str) -> CliResult<f64> {
    spec.trim()
        .parse::<f64>()
        .map_err(|_| usage(format!("{what}: {spec:?} is not a number")))
}

fn simulate(args: SimulateArgs, ctx: &mut Context) -> CliResult<u8> {
    let n = args.scheme.n;
    let scheme = args.scheme.scheme()?;
    let delay = scheme.delay(n)?;
    let (input, jobs, source) = if let Some(path) = &args.pattern {
        let p = read_pattern(&ctx.read(path)?[..])?;
        let jobs = args.jobs.unwrap_or(p.rounds().saturating_sub(delay));
        (SimInput::Pattern(p), jobs, json!({"pattern": path}))
    } else if let Some(path) = &args.profile {
        let p = read_profile(&ctx.read(path)?[..])?;
        let jobs = args.jobs.unwrap_or(p.rounds().saturating_sub(delay));
        (
            SimInput::Timed {
                profile: p,
                mu: args.mu,
            },
            jobs,
            json!({"profile": path, "mu": args.mu}),
        )
    } else {
        let spec = args.gen.as_deref().expect("clap enforces one input");
        let jobs = args.jobs.unwrap_or(100);
        let rounds = jobs + delay;
        let pattern = match spec.split_once(':').unwrap_or((spec, "")) {
            ("ge", ps) => {
                let (p_s, p_n) = parse_pair(ps, "--gen ge")?;
                gen_ge(n, rounds, &GeParams::new(p_s, p_n, args.seed)?)
            }
            ("uniform", p) => gen_uniform(n, rounds, parse_prob(p, "--gen uniform")?, args.seed),
            ("periodic", _) => {
                let need = |v: Option<usize>, f: &str| {
                    v.ok_or_else(|| usage(format!("--gen periodic needs --{f}")))
                };
                let m = BurstyModel::new(
                    need(args.scheme.burst, "B")?,
                    need(args.scheme.window, "W")?,
                    need(args.scheme.lambda, "lambda")?,
                )?;
                gen_periodic_bursty(n, rounds, &m)?
            }
            ("none", _) => StragglerPattern::empty(n, rounds),
            _ => return Err(usage(format!("unknown --gen {spec:?}"))),
        };
        (SimInput::Pattern(pattern), jobs, json!({"gen": spec}))
    };
    if jobs == 0 {
        return Err(usage("input too short for a single job"));
    }
    let waitout = match args.waitout {
        WaitoutArg::Design => WaitoutPolicy::Design,
        WaitoutArg::Off => WaitoutPolicy::Disabled,
    };
    let config = SimConfig {
        n,
        jobs,
        scheme,
        input,
        waitout,
        dim: args.dim,
        seed: args.seed,
    };
    let report = run(&config)?;
    print_sim_summary(&report);

    if let Some(path) = &args.rounds_csv {
        write_file(path, &rounds_csv(&report)?)?;
    }
    if let Some(path) = &args.out {
        let resolved = json!({
            "scheme": scheme, "n": n, "jobs": jobs, "delay": delay, "input": source,
            "waitout": args.waitout, "dim": args.dim, "seed": args.seed,
        });
        ctx.write_with_manifest(
            path,
            &to_json(&report),
            "simulate",
            resolved,
            Some(args.seed),
        )?;
    }
    Ok(0)
}

fn print_sim_summary(r: &SimReport) {
    println!("scheme       {}", r.scheme);
    println!("n            {}", r.n);
    println!("load         {}", frac(r.load));
    println!("delay T      {}", r.delay);
    println!("jobs         {}", r.jobs);
    println!("max delay    {}", r.max_delay());
    println!("wait-outs    {}", r.waitout_count);
    if let Some(t) = r.total_runtime {
        println!("runtime      {t:.3} s");
    }
    if let Some(e) = r.max_residual {
        println!("max residual {e:.3e}");
    }
}

fn rounds_csv(r: &SimReport) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| usage(e.to_string());
    w.write_record([
        "round",
        "duration_s",
        "clock_s",
        "waited",
        "observed",
        "accepted",
        "completed_jobs",
    ])
    .map_err(csv_err)?;
    for (rec, (clock, done)) in r.rounds.iter().zip(r.completion_curve()) {
        w.write_record([
            rec.round.to_string(),
            rec.duration.map_or(String::new(), |d| d.to_string()),
            if rec.duration.is_some() {
                clock.to_string()
            } else {
                String::new()
            },
            u8::from(rec.waited).to_string(),
            rec.observed.len().to_string(),
            rec.accepted.len().to_string(),
            done.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| usage(e.to_string()))
}

fn read_fit_samples(bytes: &[u8]) -> CliResult<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| usage(format!("fit samples: {e}")))?;
        let cells: Vec<&str> = rec.iter().collect();
        if cells.len() != 2 {
            return Err(usage(format!(
                "fit samples: expected load,seconds, got {cells:?}"
            )));
        }
        match (cells[0].parse::<f64>(), cells[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => out.push((x, y)),
            _ if out.is_empty() => continue, // header
            _ => return Err(usage(format!("fit samples: bad row {cells:?}"))),
        }
    }
    Ok(out)
}

fn tune(args: TuneArgs, ctx: &mut Context) -> CliResult<u8> {
    let profile: DelayProfile = read_profile(&ctx.read(&args.profile)?[..])?;
    let n = profile.n();
    let alpha = match (args.alpha, &args.fit_samples) {
        (Some(a), _) => a,
        (None, Some(path)) => {
            let fit = fit_slope(&read_fit_samples(&ctx.read(path)?)?)?;
            println!(
                "fitted alpha {:.6} s per unit load (intercept {:.6}, rms residual {:.3e})",
                fit.alpha, fit.intercept, fit.residual
            );
            fit.alpha
        }
        (None, None) => unreachable!("clap requires one of --alpha, --fit-samples"),
    };
    let grid_err = |e: String| usage(e);
    let mut candidates = vec![Scheme::NoCoding];
    if let Some(spec) = &args.grid_gc {
        let g = ranges::parse_grid(spec, &["s"]).map_err(grid_err)?;
        candidates.extend(gc_grid(n, &g["s"]));
    }
    if let Some(spec) = &args.grid_sr {
        let g = ranges::parse_grid(spec, &["B", "W", "lambda"]).map_err(grid_err)?;
        candidates.extend(sr_grid(n, &g["B"], &g["W"], &g["lambda"], false));
    }
    if let Some(spec) = &args.grid_m {
        let g = ranges::parse_grid(spec, &["B", "W", "lambda"]).map_err(grid_err)?;
        candidates.extend(m_grid(n, &g["B"], &g["W"], &g["lambda"], false));
    }
    if candidates.len() == 1 {
        return Err(usage(
            "no valid candidates: pass at least one of --grid-gc, --grid-sr, --grid-m",
        ));
    }
    let resolved = |jobs: usize| {
        json!({
            "profile": args.profile, "n": n, "mu": args.mu, "alpha": alpha, "jobs": jobs,
            "grid_gc": args.grid_gc, "grid_sr": args.grid_sr, "grid_m": args.grid_m, "probe": args.probe,
            "candidates": candidates.len(),
        })
    };

    if let Some(probe) = args.probe {
        let max_delay = candidates
            .iter()
            .map(|c| c.delay(n))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        let jobs = args
            .jobs
            .unwrap_or(profile.rounds().saturating_sub(max_delay));
        let report = probe_then_switch(&profile, args.mu, probe, jobs, candidates.clone(), alpha)?;
        println!(
            "probe rounds {probe}: {:.3} s uncoded",
            report.probe.total_runtime.unwrap_or(0.0)
        );
        println!("chosen       {}", report.chosen);
        println!(
            "coded phase  {:.3} s, {} wait-outs",
            report.coded.total_runtime.unwrap_or(0.0),
            report.coded.waitout_count
        );
        println!("total        {:.3} s", report.total_runtime);
        if let Some(path) = &args.out {
            write_file(path, &ranking_csv(&report.tune.ranking)?)?;
        }
        if let Some(path) = &args.report {
            ctx.write_with_manifest(path, &to_json(&report), "tune", resolved(jobs), None)?;
        }
        return Ok(0);
    }

    let jobs = args.jobs.unwrap_or(profile.rounds());
    let result = grid_search(
        &TuneConfig {
            profile,
            mu: args.mu,
            jobs,
            candidates: candidates.clone(),
        },
        alpha,
    )?;
    println!(
        "{:<12} {:<28} {:>10} {:>14} {:>9}",
        "scheme", "params", "load", "runtime_s", "waitouts"
    );
    for c in result.best.values() {
        println!(
            "{:<12} {:<28} {:>10.6} {:>14.3} {:>9}",
            c.scheme.name(),
            c.scheme.params_label(),
            to_f64(c.load),
            c.estimated_runtime,
            c.waitout_count
        );
    }
    println!("best overall: {}", result.winner().scheme);
    if let Some(path) = &args.out {
        ctx.write_with_manifest(
            path,
            &ranking_csv(&result.ranking)?,
            "tune",
            resolved(jobs),
            None,
        )?;
    }
    if let Some(path) = &args.report {
        ctx.write_with_manifest(path, &to_json(&result), "tune", resolved(jobs), None)?;
    }
    Ok(0)
}

fn ranking_csv(ranking: &[seqgrad_core::Candidate]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| usage(e.to_string());
    w.write_record([
        "scheme",
        "params",
        "load",
        "estimated_runtime_s",
        "waitout_count",
    ])
    .map_err(csv_err)?;
    for c in ranking {
        w.write_record([
            c.scheme.name().to_string(),
            c.scheme.params_label(),
            format!("{:.8}", to_f64(c.load)),
            format!("{:.6}", c.estimated_runtime),
            c.waitout_count.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| usage(e.to_string()))
}

fn bounds(args: BoundsArgs, ctx: &mut Context) -> CliResult<u8> {
    let (n, b, w, l) = (args.n, args.burst, args.window, args.lambda);
    let k = args.max_per_worker.unwrap_or(b);
    let wp = args.window_arbitrary.unwrap_or(w + b - 1);
    let lp = args.lambda_arbitrary.unwrap_or(l);
    let lb = lb_bursty(n, b, w, l)?;
    println!("L_B* = {}", frac(lb));
    match lb_arbitrary(n, k, wp, lp) {
        Ok(la) => println!("L_A* (N={k}, W'={wp}, lambda'={lp}) = {}", frac(la)),
        Err(e) => println!("L_A* (N={k}, W'={wp}, lambda'={lp}) undefined: {e}"),
    }
    match optimality_gap(n, b, w, l) {
        Ok(r) => {
            println!("M-SGC load = {}", frac(r.load));
            println!(
                "M-SGC gap = {}, gap*W = {}",
                frac(r.gap),
                frac(r.gap_times_window)
            );
        }
        Err(e) => println!("M-SGC n/a: {e}"),
    }
    match derive_sr_params(n, b, w, l) {
        Ok(p) => println!("SR-SGC load = {} (s={})", frac(p.load()), p.s),
        Err(e) => println!("SR-SGC n/a: {e}"),
    }
    if l < n {
        println!(
            "GC load (s=lambda) = {}",
            frac(Fraction::new(l as i64 + 1, n as i64))
        );
    }

    if let Some(spec) = &args.sweep_w {
        let ws = ranges::parse_list(spec).map_err(usage)?;
        let mut out = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| usage(e.to_string());
        out.write_record([
            "W",
            "bound",
            "bound_f64",
            "load",
            "load_f64",
            "gap",
            "gap_f64",
            "gap_times_W_f64",
        ])
        .map_err(csv_err)?;
        for w in ws {
            let r = optimality_gap(n, b, w, l)?;
            out.write_record([
                w.to_string(),
                r.bound.to_string(),
                to_f64(r.bound).to_string(),
                r.load.to_string(),
                to_f64(r.load).to_string(),
                r.gap.to_string(),
                to_f64(r.gap).to_string(),
                to_f64(r.gap_times_window).to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = out.into_inner().map_err(|e| usage(e.to_string()))?;
        match &args.out {
            Some(path) => {
                let resolved = json!({"n": n, "B": b, "W": spec, "lambda": l});
                ctx.write_with_manifest(path, &bytes, "bounds", resolved, None)?;
            }
            None => print!("{}", String::from_utf8_lossy(&bytes)),
        }
    }
    Ok(0)
}

fn check_pattern(args: CheckArgs, ctx: &mut Context) -> CliResult<u8> {
    let model = args.model.model()?;
    let pattern = read_pattern(&ctx.read(&args.pattern)?[..])?;
    let mut tracker = ConformanceTracker::new(pattern.n(), model);
    let violation = (1..=pattern.rounds()).find(|&t| !tracker.push(pattern.column(t)));
    match violation {
        None => {
            println!("conforms");
            Ok(0)
        }
        Some(t) => {
            println!("does not conform: first violation in the window ending at round {t}");
            Ok(1)
        }
    }
}

fn gen_pattern(args: GenArgs, ctx: &mut Context) -> CliResult<u8> {
    let (n, rounds) = (args.n, args.rounds);
    let (kind, param) = args
        .kind
        .split_once(':')
        .unwrap_or((args.kind.as_str(), ""));
    let mut buf = Vec::new();
    match kind {
        "ge" => {
            let (p_s, p_n) = parse_pair(param, "ge")?;
            write_pattern(
                &mut buf,
                &gen_ge(n, rounds, &GeParams::new(p_s, p_n, args.seed)?),
            )?;
        }
        "uniform" => write_pattern(
            &mut buf,
            &gen_uniform(n, rounds, parse_prob(param, "uniform")?, args.seed),
        )?,
        "periodic" => {
            let AssumedModel::Bursty(m) = args.model.model()? else {
                return Err(usage("periodic patterns need --model bursty"));
            };
            write_pattern(&mut buf, &gen_periodic_bursty(n, rounds, &m)?)?;
        }
        "conforming" => {
            let model = args.model.model()?;
            write_pattern(
                &mut buf,
                &gen_conforming(
                    n,
                    rounds,
                    &model,
                    parse_prob(param, "conforming")?,
                    args.seed,
                ),
            )?;
        }
        "ge-profile" => {
            let (p_s, p_n) = parse_pair(param, "ge-profile")?;
            let fast = parse_pair(&args.fast, "--fast")?;
            let slow = parse_pair(&args.slow, "--slow")?;
            write_profile(
                &mut buf,
                &gen_ge_profile(n, rounds, &GeParams::new(p_s, p_n, args.seed)?, fast, slow)?,
            )?;
        }
        other => return Err(usage(format!("unknown --kind {other:?}"))),
    }
    match &args.out {
        Some(path) => {
            let resolved = json!({
                "kind": args.kind, "n": n, "rounds": rounds, "seed": args.seed,
                "fast": args.fast, "slow": args.slow,
                "model": args.model.model.map(|m| format!("{m:?}")),
                "B": args.model.burst, "W": args.model.window, "lambda": args.model.lambda,
                "N": args.model.max_per_worker, "s": args.model.s,
            });
            ctx.write_with_manifest(path, &buf, "gen-pattern", resolved, Some(args.seed))?;
        }
        None => print!("{}", String::from_utf8_lossy(&buf)),
    }
    Ok(0)
}

fn equal_chunks(n: usize, s: usize, family: CodeFamily) -> Vec<ChunkInfo> {
    let mut chunks: Vec<ChunkInfo> = (0..n)
        .map(|index| ChunkInfo {
            index,
            size: Fraction::new(1, n as i64),
            workers: Vec::new(),
        })
        .collect();
    for w in 0..n {
        for c in family.support(w, n, s) {
            chunks[c].workers.push(w);
        }
    }
    chunks
}

fn layout(args: LayoutArgs, ctx: &mut Context) -> CliResult<u8> {
    let n = args.scheme.n;
    let scheme = args.scheme.scheme()?;
    let chunks = match scheme {
        Scheme::NoCoding => equal_chunks(n, 0, CodeFamily::Cyclic),
        Scheme::Gc { s } => equal_chunks(n, s, CodeFamily::Cyclic),
        Scheme::GcRep { s } => equal_chunks(n, s, CodeFamily::Replicated),
        Scheme::SrSgc {
            burst,
            window,
            lambda,
        } => equal_chunks(
            n,
            derive_sr_params(n, burst, window, lambda)?.s,
            CodeFamily::Cyclic,
        ),
        Scheme::SrSgcRep {
            burst,
            window,
            lambda,
        } => equal_chunks(
            n,
            derive_sr_rep_params(n, burst, window, lambda)?.s,
            CodeFamily::Replicated,
        ),
        Scheme::MSgc {
            burst,
            window,
            lambda,
        } => derive_m_params(n, burst, window, lambda)?.layout(),
        Scheme::MSgcRep {
            burst,
            window,
            lambda,
        } => derive_m_rep_params(n, burst, window, lambda)?.layout(),
    };
    println!(
        "{scheme}: {} chunks, load {}, delay {}",
        chunks.len(),
        frac(scheme.load(n)?),
        scheme.delay(n)?
    );
    println!("{:>6} {:>12}  workers", "chunk", "size");
    for c in &chunks {
        let ws: Vec<String> = c.workers.iter().map(usize::to_string).collect();
        println!(
            "{:>6} {:>12}  {}",
            c.index,
            c.size.to_string(),
            ws.join(" ")
        );
    }
    let mut per_worker: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in &chunks {
        for &w in &c.workers {
            per_worker.entry(w).or_default().push(c.index);
        }
    }
    for (w, cs) in &per_worker {
        let cs: Vec<String> = cs.iter().map(usize::to_string).collect();
        println!("worker {w}: {}", cs.join(" "));
    }
    if let Some(path) = &args.out {
        let resolved = json!({"scheme": scheme, "n": n});
        ctx.write_with_manifest(
            path,
            &to_json(&json!({"scheme": scheme, "chunks": chunks})),
            "layout",
            resolved,
            None,
        )?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut ctx = Context {
        argv,
        inputs: BTreeMap::new(),
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, &mut ctx),
        Command::Tune(a) => tune(a, &mut ctx),
        Command::Bounds(a) => bounds(a, &mut ctx),
        Command::CheckPattern(a) => check_pattern(a, &mut ctx),
        Command::GenPattern(a) => gen_pattern(a, &mut ctx),
        Command::Layout(a) => layout(a, &mut ctx),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
