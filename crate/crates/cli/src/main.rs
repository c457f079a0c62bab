//! `shorcert`: simulate, certify and factor with phase-estimation order finding.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 simulator
//! capacity exceeded, 3 I/O error, 4 factoring attempt cap exhausted.

mod artifacts;
mod error;
mod manifest;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use shorcert::cert::{self, acceptance_set, window_mass, CertifyParams, PValueMethod, SuccessModel, DEFAULT_NU};
use shorcert::circuit::Backend;
use shorcert::noise::NoiseSpec;
use shorcert::numtheory::{classical_success_fraction, OrderFindingInstance};
use shorcert::shor::{
    coprime_bases, order_finding_run, shor_factor, DistributionCache, FactoringResult, OrderFindingRun, Source,
};
use shorcert::sim::rng_stream;
use shorcert::{CertificationReport, ExperimentConfig, Histogram, PaperExperiment, WindowMode};

use artifacts::Meta;
use error::CliError;
use manifest::{ReportFormat, RunManifest};

#[derive(Parser)]
#[command(name = "shorcert", version, about = "Simulate and certify Shor order-finding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a histogram from a manifest or flags, then certify it.
    Simulate(SimulateArgs),
    /// Certify a histogram file against the acceptance windows of an order.
    Certify(CertifyArgs),
    /// Run the randomized factoring loop on N.
    Factor(FactorArgs),
    /// Re-run one of the recorded experiments (N15, N21, N35_a4, N35_a8 or all).
    Replicate(ReplicateArgs),
    /// Simulate and certify every coprime base of N in parallel.
    Sweep(SweepArgs),
}

/// Options shared by the commands that simulate or certify.
#[derive(Args, Default, Clone)]
struct RunOpts {
    #[arg(long)]
    seed: Option<u64>,
    /// perm | arith
    #[arg(long)]
    backend: Option<Backend>,
    /// none | trunc:KEPT[,nozero] | uniform:LAMBDA
    #[arg(long)]
    noise: Option<NoiseSpec>,
    /// strict | inclusive
    #[arg(long)]
    mode: Option<WindowMode>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory [default: shorcert-out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG bar chart.
    #[arg(long)]
    plot: bool,
}

impl RunOpts {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if let Some(n) = self.noise {
            cfg.noise = n;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
    }

    fn out_dir(&self, fallback: Option<&Path>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| fallback.map(Path::to_path_buf))
            .unwrap_or_else(|| PathBuf::from("shorcert-out"))
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML run manifest; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    modulus: Option<u64>,
    #[arg(long)]
    base: Option<u64>,
    #[arg(long)]
    phase_bits: Option<u32>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<ReportFormat>,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args)]
struct CertifyArgs {
    /// Histogram as CSV (`y,bitstring,count`) or JSON.
    histogram: PathBuf,
    #[arg(long)]
    modulus: u64,
    /// Base whose order sets the windows.
    #[arg(long)]
    base: Option<u64>,
    /// Order, when the base is not given.
    #[arg(long)]
    order: Option<u64>,
    /// exact | normal
    #[arg(long, default_value = "exact")]
    method: PValueMethod,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args)]
struct FactorArgs {
    modulus: u64,
    /// Pin the base instead of drawing it at random.
    #[arg(long)]
    base: Option<u64>,
    #[arg(long)]
    phase_bits: Option<u32>,
    #[arg(long, default_value_t = shorcert::shor::DEFAULT_ATTEMPT_CAP)]
    attempt_cap: u32,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args)]
struct ReplicateArgs {
    name: String,
    /// simulate | paper-counts
    #[arg(long, default_value = "paper-counts")]
    source: Source,
    /// exact | normal
    #[arg(long, default_value = "exact")]
    method: PValueMethod,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args)]
struct SweepArgs {
    modulus: u64,
    #[arg(long)]
    phase_bits: Option<u32>,
    #[arg(long, default_value_t = shorcert::shor::DEFAULT_SHOTS)]
    shots: u64,
    /// Worker threads (0 uses every core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    run: RunOpts,
}

fn config_value(cfg: &ExperimentConfig) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    v["phase_bits"] = json!(cfg.resolved_phase_bits());
    v["backend"] = json!(cfg.backend.to_string());
    v["noise"] = json!(cfg.noise.to_string());
    v
}

fn announce(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn certify_run(run: &OrderFindingRun, cfg: &ExperimentConfig, method: PValueMethod) -> Result<CertificationReport, CliError> {
    let params = CertifyParams::new(cfg.modulus, Some(run.instance.base()), run.instance.order())
        .alpha(cfg.alpha)
        .mode(cfg.mode)
        .method(method);
    Ok(cert::certify(&run.histogram, &params)?.with_run(cfg.seed, cfg.backend, cfg.noise))
}

fn write_plot(
    dir: &Path,
    stem: &str,
    hist: &Histogram,
    order: u64,
    mode: WindowMode,
    title: &str,
    meta: &Meta,
) -> Result<PathBuf, CliError> {
    let windows = acceptance_set(hist.grid_size(), order, mode)?;
    let svg = plot::histogram_svg(hist, Some(&windows), title, &serde_json::to_string(meta)?);
    let path = dir.join(format!("{stem}_histogram.svg"));
    artifacts::write_text(&path, &svg)?;
    Ok(path)
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let manifest = match &args.config {
        Some(path) => Some(RunManifest::load(path)?),
        None => None,
    };
    let mut cfg = match (&manifest, args.modulus) {
        (_, Some(n)) => {
            let mut cfg = match &manifest {
                Some(m) => m.experiment()?,
                None => ExperimentConfig::new(n),
            };
            cfg.modulus = n;
            cfg
        }
        (Some(m), None) => m.experiment()?,
        (None, None) => return Err(CliError::Config("give --config or --modulus".into())),
    };
    if args.base.is_some() {
        cfg.base = args.base;
    }
    if args.phase_bits.is_some() {
        cfg.phase_bits = args.phase_bits;
    }
    if let Some(s) = args.shots {
        cfg.shots = s;
    }
    args.run.apply(&mut cfg);
    let base_dir = manifest.as_ref().and_then(|m| m.out.clone());
    let out = args.run.out_dir(base_dir.as_deref());
    let plot = args.run.plot || manifest.as_ref().and_then(|m| m.plot).unwrap_or(false);
    let format = args
        .format
        .or_else(|| manifest.as_ref().and_then(|m| m.format))
        .unwrap_or_default();
    cfg.validate()?;

    let run = order_finding_run(&cfg, &mut DistributionCache::new(), &mut rng_stream(cfg.seed, 0))?;
    let report = certify_run(&run, &cfg, PValueMethod::Exact)?;
    let mut resolved = cfg;
    resolved.base = Some(run.instance.base());
    let stem = manifest
        .as_ref()
        .and_then(|m| m.name.clone())
        .unwrap_or_else(|| format!("N{}_a{}_t{}", cfg.modulus, run.instance.base(), run.phase_bits));
    let meta = Meta::new("simulate", Some(cfg.seed), config_value(&resolved));

    artifacts::ensure_dir(&out)?;
    let mut written = artifacts::write_histogram(&out, &stem, &run.histogram, &meta)?;
    written.push(artifacts::write_report(&out, &stem, &report, &meta, format)?);
    if plot {
        let title = format!(
            "N={} a={} t={} shots={} ({})",
            cfg.modulus,
            run.instance.base(),
            run.phase_bits,
            cfg.shots,
            cfg.noise
        );
        written.push(write_plot(&out, &stem, &run.histogram, run.instance.order(), cfg.mode, &title, &meta)?);
    }
    announce(&written);
    println!("{}", report.summary_line());
    Ok(())
}

/// Histogram plus any `key=value` provenance found in the file.
fn read_histogram(path: &Path) -> Result<(Histogram, serde_json::Map<String, Value>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let bad = |e: shorcert::Error| CliError::Config(format!("{}: {e}", path.display()));
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let body = doc.get("histogram").unwrap_or(&doc);
        let hist = Histogram::from_json_value(body).map_err(bad)?;
        let source = doc.get("meta").and_then(Value::as_object).cloned().unwrap_or_default();
        Ok((hist, source))
    } else {
        let hist = Histogram::read_csv(text.as_bytes()).map_err(bad)?;
        let source = text
            .lines()
            .filter_map(|l| l.strip_prefix("# "))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
            .collect();
        Ok((hist, source))
    }
}

fn certify_file(args: CertifyArgs) -> Result<(), CliError> {
    let (hist, source) = read_histogram(&args.histogram)?;
    let order = match (args.base, args.order) {
        (Some(a), given) => {
            let r = OrderFindingInstance::new(args.modulus, a)?.order();
            if let Some(g) = given.filter(|&g| g != r) {
                return Err(CliError::Config(format!(
                    "--order {g} disagrees with the order {r} of {a} mod {}",
                    args.modulus
                )));
            }
            r
        }
        (None, Some(r)) => r,
        (None, None) => return Err(CliError::Config("give --base or --order".into())),
    };
    let mut params = CertifyParams::new(args.modulus, args.base, order).method(args.method);
    if let Some(alpha) = args.run.alpha {
        params = params.alpha(alpha);
    }
    if let Some(mode) = args.run.mode {
        params = params.mode(mode);
    }
    let mut report = cert::certify(&hist, &params)?;
    let source_seed = source
        .get("seed")
        .and_then(|v| v.as_u64().or_else(|| v.as_str().and_then(|s| s.parse().ok())));
    report.seed = source_seed;

    let out = args.run.out_dir(None);
    let stem = args
        .histogram
        .file_stem()
        .map(|s| s.to_string_lossy().trim_end_matches("_histogram").to_string())
        .unwrap_or_else(|| "histogram".into());
    let meta = Meta::new(
        "certify",
        source_seed,
        json!({
            "histogram": args.histogram.display().to_string(),
            "modulus": args.modulus,
            "base": args.base,
            "order": order,
            "alpha": params.alpha,
            "mode": params.mode.to_string(),
            "method": params.method,
            "source": source,
        }),
    );
    artifacts::ensure_dir(&out)?;
    let mut written = vec![artifacts::write_report(&out, &stem, &report, &meta, args.format)?];
    if args.run.plot {
        let title = report.summary_line();
        written.push(write_plot(&out, &stem, &hist, order, params.mode, &title, &meta)?);
    }
    announce(&written);
    println!("{}", report.summary_line());
    Ok(())
}

fn describe(attempt: &shorcert::shor::Attempt) -> String {
    let opt = |v: Option<u64>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
    format!(
        "a={} y={} r={} {}",
        attempt.base,
        opt(attempt.outcome),
        opt(attempt.recovered_order),
        attempt.branch
    )
}

fn factor(args: FactorArgs) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::new(args.modulus);
    cfg.base = args.base;
    cfg.phase_bits = args.phase_bits;
    cfg.attempt_cap = args.attempt_cap;
    args.run.apply(&mut cfg);
    let result: FactoringResult = shor_factor(&cfg, &mut DistributionCache::new())?;

    let out = args.run.out_dir(None);
    let meta = Meta::new("factor", Some(cfg.seed), config_value(&cfg));
    artifacts::ensure_dir(&out)?;
    let path = out.join(format!("factor_{}.json", args.modulus));
    artifacts::write_json(&path, &meta, &result)?;
    announce(&[path]);

    match result.factors {
        Some((p, q)) => println!("{} = {p} × {q}", args.modulus),
        None => println!("{}: no factor found", args.modulus),
    }
    for (i, attempt) in result.attempts.iter().enumerate() {
        println!("  attempt {}: {}", i + 1, describe(attempt));
    }
    if result.succeeded() {
        Ok(())
    } else {
        Err(CliError::CapExhausted(format!(
            "no factor of {} within {} attempts",
            args.modulus, cfg.attempt_cap
        )))
    }
}

fn replicate(args: ReplicateArgs) -> Result<(), CliError> {
    let experiments: Vec<PaperExperiment> = if args.name.eq_ignore_ascii_case("all") {
        PaperExperiment::ALL.to_vec()
    } else {
        vec![args.name.parse()?]
    };
    let out = args.run.out_dir(None);
    artifacts::ensure_dir(&out)?;
    let source_name = match args.source {
        Source::Simulate => "simulate",
        Source::PaperCounts => "paper-counts",
    };
    let mut written = Vec::new();
    let mut lines = Vec::new();
    for exp in experiments {
        let rec = exp.recorded();
        let mut cfg = exp.config(0);
        args.run.apply(&mut cfg);
        let stem = format!("{exp}_{source_name}");
        let mut config = config_value(&cfg);
        config["experiment"] = json!(exp.name());
        config["source"] = json!(source_name);
        config["method"] = json!(args.method);
        let report = match args.source {
            Source::PaperCounts => {
                config["recorded_hits"] = json!(rec.hits);
                let params = CertifyParams::new(rec.modulus, Some(rec.base), rec.order)
                    .alpha(cfg.alpha)
                    .mode(cfg.mode)
                    .method(args.method);
                let report = cert::certify_counts(rec.hits, rec.shots, rec.grid_size(), &params)?;
                let meta = Meta::new("replicate", None, config);
                written.push(artifacts::write_report(&out, &stem, &report, &meta, args.format)?);
                if args.run.plot {
                    eprintln!("{exp}: recorded counts carry no histogram, skipping plot");
                }
                report
            }
            Source::Simulate => {
                let run = order_finding_run(&cfg, &mut DistributionCache::new(), &mut rng_stream(cfg.seed, 0))?;
                let report = certify_run(&run, &cfg, args.method)?;
                let meta = Meta::new("replicate", Some(cfg.seed), config);
                written.extend(artifacts::write_histogram(&out, &stem, &run.histogram, &meta)?);
                written.push(artifacts::write_report(&out, &stem, &report, &meta, args.format)?);
                if args.run.plot {
                    let title = format!("{exp} simulated, {} shots", cfg.shots);
                    written.push(write_plot(&out, &stem, &run.histogram, rec.order, cfg.mode, &title, &meta)?);
                }
                report
            }
        };
        lines.push(format!("{exp}: {}", report.summary_line()));
    }
    announce(&written);
    for line in lines {
        println!("{line}");
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    base: u64,
    order: u64,
    ideal_window_mass: f64,
    classical_ok: bool,
    #[serde(flatten)]
    report: CertificationReport,
}

#[derive(Serialize)]
struct SweepSummary {
    modulus: u64,
    nu_exact: f64,
    nu_default: f64,
    /// Success model at the smallest ideal window mass across bases.
    worst_case: SuccessModel,
    rows: Vec<SweepRow>,
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let mut template = ExperimentConfig::new(args.modulus);
    template.phase_bits = args.phase_bits;
    template.shots = args.shots;
    args.run.apply(&mut template);
    template.validate()?;
    shorcert::shor::check_factorable(args.modulus)?;
    let t = template.resolved_phase_bits();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let rows: Result<Vec<SweepRow>, CliError> = pool.install(|| {
        coprime_bases(args.modulus)
            .into_par_iter()
            .map(|a| {
                // each base gets its own generator stream so rows do not depend on scheduling
                let cfg = ExperimentConfig {
                    base: Some(a),
                    ..template
                };
                let mut rng = rng_stream(cfg.seed, a);
                let run = order_finding_run(&cfg, &mut DistributionCache::new(), &mut rng)?;
                let order = run.instance.order();
                let report = certify_run(&run, &cfg, PValueMethod::Exact)?;
                let ideal = shorcert::sim::ideal_qpe_distribution(order, t)?;
                let strict = acceptance_set(1 << t, order, WindowMode::Strict)?;
                let half = shorcert::numtheory::mod_pow(a, order / 2, args.modulus)?;
                Ok(SweepRow {
                    base: a,
                    order,
                    ideal_window_mass: window_mass(&ideal, &strict),
                    classical_ok: order % 2 == 0 && half != args.modulus - 1,
                    report,
                })
            })
            .collect()
    });
    let rows = rows?;
    let worst_mass = rows
        .iter()
        .map(|r| r.ideal_window_mass)
        .fold(f64::INFINITY, f64::min);
    let summary = SweepSummary {
        modulus: args.modulus,
        nu_exact: classical_success_fraction(args.modulus)?,
        nu_default: DEFAULT_NU,
        worst_case: cert::success_model(worst_mass, DEFAULT_NU, args.modulus)?,
        rows,
    };

    let out = args.run.out_dir(None);
    artifacts::ensure_dir(&out)?;
    let mut config = config_value(&template);
    config["base"] = json!("all coprime");
    let meta = Meta::new("sweep", Some(template.seed), config);
    let stem = format!("sweep_N{}", args.modulus);
    let json_path = out.join(format!("{stem}.json"));
    artifacts::write_json(&json_path, &meta, &summary)?;
    let csv_path = out.join(format!("{stem}.csv"));
    let reports: Vec<CertificationReport> = summary.rows.iter().map(|r| r.report.clone()).collect();
    artifacts::write_report_table(&csv_path, &reports, &meta)?;
    announce(&[json_path, csv_path]);

    println!(
        "N={} t={t}: nu = {:.4} (exact), worst ideal window mass {:.4}, expected repetitions {:.2}",
        args.modulus, summary.nu_exact, worst_mass, summary.worst_case.expected_repetitions
    );
    for row in &summary.rows {
        println!(
            "  a={:<3} r={:<3} ideal mass {:.4}  {}",
            row.base,
            row.order,
            row.ideal_window_mass,
            row.report.summary_line()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Certify(a) => certify_file(a),
        Command::Factor(a) => factor(a),
        Command::Replicate(a) => replicate(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
