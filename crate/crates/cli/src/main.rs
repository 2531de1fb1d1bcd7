//! `deconv`: adaptive density deconvolution from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use deconv_core::config::{
    parse_estimate_config, parse_experiment_config, parse_simulate_str, threads_from_env,
    EstimateConfig, GridSpec,
};
use deconv_core::estimator::{penalty_table, KnPolicy, PenaltyVariant};
use deconv_core::harness::{
    estimate_density, run_experiment, simulate_observations, PenaltySettings,
};
use deconv_core::io::{
    fmt_f64, manifest_path_for, read_samples, to_json_bytes, write_bytes, write_density_csv,
    write_json, write_samples, write_table_csv, RunManifest,
};
use deconv_core::noise_models::{delta_m_scaled, gamma_m, NoiseModel};
use deconv_core::quadrature::QuadratureSpec;
use deconv_core::{DeconvError, Result};

#[derive(Parser)]
#[command(
    name = "deconv",
    version,
    about = "Adaptive density deconvolution on Shannon spaces"
)]
struct Cli {
    /// Worker threads (default: DECONV_THREADS, then one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select a resolution and write the density estimate on a grid.
    Estimate(EstimateArgs),
    /// Emit a sample path of a process, optionally with additive noise.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo risk experiment from a config file.
    Experiment(ExperimentArgs),
    /// Tabulate Delta(m), Gamma(m) and pen(m).
    Penalties(PenaltiesArgs),
}

#[derive(Args)]
struct PenaltyArgs {
    /// supersmooth, ordinary, refined_beta, refined_tau or no_noise
    #[arg(long)]
    penalty: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    beta_sum: Option<f64>,
    #[arg(long)]
    tau_sum: Option<f64>,
}

impl PenaltyArgs {
    fn apply(&self, p: &mut PenaltySettings) -> Result<()> {
        if let Some(v) = &self.penalty {
            p.variant = Some(PenaltyVariant::parse(v)?);
        }
        if let Some(a) = self.a {
            p.a = a;
        }
        if self.beta_sum.is_some() {
            p.beta_sum = self.beta_sum;
        }
        if self.tau_sum.is_some() {
            p.tau_sum = self.tau_sum;
        }
        Ok(())
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Config file with the same keys as the flags (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Observations, one per line, optional header.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    noise_scale: Option<f64>,
    #[command(flatten)]
    penalty: PenaltyArgs,
    /// auto, exact or a fixed integer
    #[arg(long)]
    kn: Option<String>,
    /// Evaluation grid lo:hi:step
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Density CSV (x,ghat).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Selection report JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Contrast and penalty table CSV for plotting.
    #[arg(long)]
    tables: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Config file with process.*, target.*, noise.* and n keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    process: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    noise_scale: Option<f64>,
    #[arg(long)]
    seed: u64,
    /// Observations Z = X + eps, header `z`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Required: no run draws entropy from the system.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Per-n summary CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PenaltiesArgs {
    #[arg(long)]
    noise: String,
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    #[arg(long)]
    n: usize,
    /// Largest m tabulated (default m_n).
    #[arg(long)]
    m_max: Option<usize>,
    #[command(flatten)]
    penalty: PenaltyArgs,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_threads(flag: Option<usize>, config: Option<usize>) -> Result<()> {
    let threads = match flag.or(config) {
        Some(t) => Some(t),
        None => threads_from_env()?,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(DeconvError::config("threads", "must be positive"));
        }
        // a second call only fails if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    Ok(())
}

fn finish_manifest(
    mut manifest: RunManifest,
    started: Instant,
    inputs: &[&Path],
    outputs: &[&Path],
) -> Result<()> {
    let Some(primary) = outputs.first() else {
        return Ok(());
    };
    for p in inputs {
        manifest.add_input(p)?;
    }
    for p in outputs {
        manifest.add_output(p)?;
    }
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(&manifest_path_for(primary))
}

fn estimate(args: EstimateArgs, threads: Option<usize>) -> Result<()> {
    let started = Instant::now();
    let mut cfg = match &args.config {
        Some(path) => parse_estimate_config(path)?,
        None => {
            let input = args
                .input
                .clone()
                .ok_or_else(|| DeconvError::config("input", "missing required key(s): input"))?;
            let name = args.noise.clone().ok_or_else(|| {
                DeconvError::config("noise.name", "missing required key(s): noise.name")
            })?;
            EstimateConfig::new(
                input,
                NoiseModel::builtin(&name, args.noise_scale.unwrap_or(1.0))?,
            )
        }
    };
    if args.config.is_some() {
        if let Some(i) = &args.input {
            cfg.input = i.clone();
        }
        if args.noise.is_some() || args.noise_scale.is_some() {
            let name = args
                .noise
                .clone()
                .unwrap_or_else(|| cfg.noise.family().name().to_string());
            cfg.noise = NoiseModel::builtin(&name, args.noise_scale.unwrap_or(cfg.noise.scale()))?;
        }
    }
    args.penalty.apply(&mut cfg.penalty)?;
    if let Some(k) = &args.kn {
        cfg.k_policy = KnPolicy::parse(k)?;
    }
    if let Some(g) = &args.grid {
        cfg.grid = GridSpec::parse(g)?;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    if args.report.is_some() {
        cfg.report = args.report.clone();
    }
    init_threads(threads, cfg.threads)?;

    let samples = read_samples(&cfg.input)?;
    let grid = cfg.grid.points();
    let (report, ghat) = estimate_density(
        &samples,
        &cfg.noise,
        &cfg.penalty,
        cfg.k_policy,
        &grid,
        &cfg.quad,
    )?;
    println!(
        "n = {}  m_hat = {}  m_n = {}  pen = {}  kn = {}",
        report.n,
        report.m_hat,
        report.m_n,
        report.penalty.variant.name(),
        report.k_policy.label()
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let mut outputs: Vec<&Path> = Vec::new();
    if let Some(out) = &cfg.out {
        write_density_csv(out, &grid, &ghat)?;
        outputs.push(out);
    }
    if let Some(path) = &cfg.report {
        write_json(path, &report)?;
        outputs.push(path);
    }
    if let Some(path) = &args.tables {
        let rows: Vec<Vec<f64>> = (0..report.m_n)
            .map(|i| {
                vec![
                    (i + 1) as f64,
                    report.contrast_values[i],
                    report.penalty_values[i],
                    report.objective_values[i],
                    report.k_n_values[i] as f64,
                ]
            })
            .collect();
        write_table_csv(
            path,
            &["m", "contrast", "penalty", "objective", "k_n"],
            &rows,
        )?;
        outputs.push(path);
    }
    let config_echo =
        serde_json::to_value(&cfg).map_err(|e| DeconvError::Numerical(e.to_string()))?;
    let manifest = RunManifest::new("estimate", config_echo, None);
    finish_manifest(manifest, started, &[&cfg.input], &outputs)
}

fn simulate(args: SimulateArgs, threads: Option<usize>) -> Result<()> {
    let started = Instant::now();
    let mut text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| DeconvError::io(p, e))?,
        None => String::new(),
    };
    text.push('\n');
    if let Some(v) = &args.process {
        text.push_str(&format!("process.name = {v:?}\n"));
    }
    if let Some(v) = &args.target {
        text.push_str(&format!("target.name = {v:?}\n"));
    }
    if let Some(v) = args.kappa {
        text.push_str(&format!("process.kappa = {}\n", fmt_f64(v)));
    }
    if let Some(v) = args.n {
        text.push_str(&format!("n = {v}\n"));
    }
    if let Some(v) = &args.noise {
        text.push_str(&format!("noise.name = {v:?}\n"));
    }
    if let Some(v) = args.noise_scale {
        text.push_str(&format!("noise.scale = {}\n", fmt_f64(v)));
    }
    let source = args
        .config
        .clone()
        .unwrap_or_else(|| PathBuf::from("<flags>"));
    let cfg = parse_simulate_str(&text, &source)?;
    init_threads(threads, None)?;
    for w in cfg.process.warnings() {
        eprintln!("warning: {w}");
    }
    let z = simulate_observations(&cfg.process, &cfg.noise, cfg.n, args.seed);
    write_samples(&args.out, "z", &z)?;
    println!(
        "wrote {} observations from {} to {}",
        cfg.n,
        cfg.process.name(),
        args.out.display()
    );
    let echo = serde_json::json!({
        "process": serde_json::to_value(&cfg.process).map_err(|e| DeconvError::Numerical(e.to_string()))?,
        "noise": serde_json::to_value(&cfg.noise).map_err(|e| DeconvError::Numerical(e.to_string()))?,
        "n": cfg.n,
    });
    let manifest = RunManifest::new("simulate", echo, Some(args.seed));
    let inputs: Vec<&Path> = args.config.iter().map(|p| p.as_path()).collect();
    finish_manifest(manifest, started, &inputs, &[&args.out])
}

fn experiment(args: ExperimentArgs, threads: Option<usize>) -> Result<()> {
    let started = Instant::now();
    let (mut cfg, extras) = parse_experiment_config(&args.config)?;
    if let Some(s) = extras.seed {
        if s != args.seed {
            eprintln!(
                "warning: --seed {} overrides seed = {s} from the config",
                args.seed
            );
        }
    }
    cfg.seed = args.seed;
    init_threads(threads, extras.threads)?;
    let report = run_experiment(&cfg)?;
    let bytes = to_json_bytes(&report)?;
    write_bytes(&args.out, &bytes)?;
    let mut outputs: Vec<&Path> = vec![&args.out];
    println!(
        "{:>8} {:>4} {:>6} {:>14} {:>14} {:>8}",
        "n", "m_n", "m_or", "mise", "oracle", "ratio"
    );
    for r in &report.results {
        println!(
            "{:>8} {:>4} {:>6} {:>14.6e} {:>14.6e} {:>8.4}",
            r.n, r.m_n, r.oracle.m_breve, r.adaptive.mean, r.oracle_mise, r.ratio
        );
    }
    if let Some(f) = &report.rate_fit {
        println!(
            "rate fit: slope {:.4} (se {:.4}) against {}",
            f.slope, f.se, f.regressor
        );
    }
    if let Some(path) = &args.csv {
        let rows: Vec<Vec<f64>> = report
            .results
            .iter()
            .map(|r| {
                vec![
                    r.n as f64,
                    r.m_n as f64,
                    r.oracle.m_breve as f64,
                    r.adaptive.mean,
                    r.adaptive.se,
                    r.adaptive.median,
                    r.adaptive.trimmed_mean,
                    r.oracle_mise,
                    r.oracle_se,
                    r.ratio,
                    r.failures as f64,
                ]
            })
            .collect();
        write_table_csv(
            path,
            &[
                "n",
                "m_n",
                "oracle_m",
                "mise_mean",
                "mise_se",
                "mise_median",
                "mise_trimmed",
                "oracle_mise",
                "oracle_se",
                "ratio",
                "failures",
            ],
            &rows,
        )?;
        outputs.push(path);
    }
    let echo = serde_json::to_value(&cfg).map_err(|e| DeconvError::Numerical(e.to_string()))?;
    let manifest = RunManifest::new("experiment", echo, Some(args.seed));
    finish_manifest(manifest, started, &[&args.config], &outputs)?;
    if !report.valid {
        return Err(DeconvError::Numerical(format!(
            "{} replications failed, above the {}% limit; report marked invalid",
            report.failures,
            deconv_core::harness::MAX_FAILURE_FRACTION * 100.0
        )));
    }
    Ok(())
}

fn penalties(args: PenaltiesArgs, threads: Option<usize>) -> Result<()> {
    init_threads(threads, None)?;
    let quad = QuadratureSpec::default();
    let noise = NoiseModel::builtin(&args.noise, args.noise_scale)?;
    if args.n < 1 {
        return Err(DeconvError::config("n", "must be positive"));
    }
    let mut settings = PenaltySettings::default();
    args.penalty.apply(&mut settings)?;
    let (cfg, note) = settings.fixed_or_independent(&noise)?;
    if let Some(w) = note {
        eprintln!("warning: {w}");
    }
    let m_max = args
        .m_max
        .unwrap_or_else(|| deconv_core::estimator::m_grid_max(&noise, args.n).m_n);
    if m_max == 0 {
        return Err(DeconvError::config("m_max", "must be positive"));
    }
    let pen = penalty_table(&cfg, &noise, m_max, args.n, &quad)?;
    let mut rows = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let d = delta_m_scaled(&noise, m, &quad)?;
        rows.push(vec![
            m as f64,
            d.value(),
            d.ln(),
            gamma_m(noise.smoothness(), m),
            pen[m - 1],
        ]);
    }
    let header = ["m", "delta", "ln_delta", "gamma", "pen"];
    match &args.out {
        Some(path) => {
            write_table_csv(path, &header, &rows)?;
            let echo = serde_json::json!({
                "noise": serde_json::to_value(&noise).map_err(|e| DeconvError::Numerical(e.to_string()))?,
                "n": args.n,
                "penalty": serde_json::to_value(cfg).map_err(|e| DeconvError::Numerical(e.to_string()))?,
            });
            finish_manifest(
                RunManifest::new("penalties", echo, None),
                Instant::now(),
                &[],
                &[path],
            )
        }
        None => {
            println!("{}", header.join(","));
            for r in rows {
                let cells: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
                println!("{}", cells.join(","));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => estimate(a, cli.threads),
        Command::Simulate(a) => simulate(a, cli.threads),
        Command::Experiment(a) => experiment(a, cli.threads),
        Command::Penalties(a) => penalties(a, cli.threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
