//! `rwafd`: simulate reaction-wheel telemetry and diagnose friction anomalies.
//!
//! Every stage of the diagnosis can be run on its own, reading the previous
//! stage's output file, or end to end with `diagnose`.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rwa_friction::assign::AssignmentResult;
use rwa_friction::bench::{self, Suite};
use rwa_friction::changepoint::{ChangepointList, DetectorConfig};
use rwa_friction::classify::{self, AnomalyClassifiers, ProcessedDataset, ProcessedEntry};
use rwa_friction::io;
use rwa_friction::model::{anomaly_names, AnomalyStatus, RwaModel, TelemetryWindow};
use rwa_friction::par::Execution;
use rwa_friction::pipeline::{self, FitReport};
use rwa_friction::simulate::{self, Scenario};
use rwa_friction::{Config, Error, Result};

#[derive(Parser)]
#[command(name = "rwafd", version, about = "Reaction-wheel friction anomaly diagnosis")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Format of single-stage outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Run on one thread even when built with parallel support.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct TelemetryInput {
    /// Telemetry CSV with `k,omega,f_hat` or raw `t,omega,I,V` columns.
    #[arg(long)]
    input: PathBuf,
    /// Wheel inertia for raw input.
    #[arg(long, default_value_t = 1.0)]
    inertia: f64,
    /// Motor torque constant for raw input.
    #[arg(long, default_value_t = 1.0)]
    torque_constant: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Write the default configuration.
    InitConfig,
    /// Simulate a labeled dataset with ground truth.
    Simulate {
        /// Model JSON replacing the scenario's nominal model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Scenario JSON replacing the configuration's scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Detect changepoints in one telemetry window.
    Detect(TelemetryInput),
    /// Fit per-interval dry friction given detected changepoints.
    Estimate {
        #[command(flatten)]
        input: TelemetryInput,
        /// Output of `detect`.
        #[arg(long)]
        changepoints: PathBuf,
    },
    /// Attribute changepoints to switching systems.
    Assign {
        /// Output of `estimate`.
        #[arg(long)]
        fit: PathBuf,
    },
    /// Classify an assignment with trained models.
    Classify {
        /// Output of `assign`.
        #[arg(long)]
        assignment: PathBuf,
        #[arg(long)]
        models: PathBuf,
    },
    /// Run detection, estimation and assignment over a labeled dataset.
    Process {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Train the anomaly classifiers.
    Train {
        /// Output of `process`.
        #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
        processed: Option<PathBuf>,
        /// Labeled dataset, processed first.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// All four stages on one window.
    Diagnose {
        #[command(flatten)]
        input: TelemetryInput,
        #[arg(long)]
        models: PathBuf,
    },
    /// Run a benchmark suite (cpd, rmse, assign, accuracy, bins, timing, all).
    Bench {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    BenchCpd,
    BenchRmse,
    BenchAssign,
    BenchAccuracy,
    BenchBins,
    BenchTiming,
}

#[derive(Serialize, serde::Deserialize)]
struct DetectOutput {
    sigma_v: f64,
    detector: DetectorConfig,
    #[serde(flatten)]
    changepoints: ChangepointList,
}

struct Ctx {
    cfg: Config,
    seed: u64,
    out: PathBuf,
    format: Format,
    exec: Execution,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn emit<T: Serialize, R: Serialize>(&self, stem: &str, doc: &T, rows: impl FnOnce() -> Vec<R>) -> Result<PathBuf> {
        let p = match self.format {
            Format::Json => {
                let p = self.path(&format!("{stem}.json"));
                io::write_json(&p, doc)?;
                p
            }
            Format::Csv => {
                let p = self.path(&format!("{stem}.csv"));
                io::write_csv(&p, &rows())?;
                p
            }
        };
        println!("wrote {}", p.display());
        Ok(p)
    }
}

fn read_window(input: &TelemetryInput) -> Result<TelemetryWindow> {
    let mut header = String::new();
    std::fs::File::open(&input.input)
        .and_then(|f| BufReader::new(f).read_line(&mut header))
        .map_err(|e| Error::io(&input.input, e))?;
    if header.trim_start().starts_with("t,") {
        let raw = io::read_raw_csv(&input.input, input.inertia, input.torque_constant)?;
        simulate::friction_from_raw(&raw)
    } else {
        io::read_telemetry_csv(&input.input)
    }
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let cfg: Config = match path {
        Some(p) => io::read_json(p)?,
        None => Config::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct IndexRow {
    index: usize,
    score: f64,
}

#[derive(Serialize)]
struct IntervalRow {
    start: usize,
    end: usize,
    f: f64,
    rejection_cost: Option<f64>,
}

#[derive(Serialize)]
struct LabelRow {
    changepoint: usize,
    fss: usize,
}

#[derive(Serialize)]
struct FlagRow {
    anomaly: String,
    detected: bool,
}

fn flag_rows(theta: &AnomalyStatus) -> Vec<FlagRow> {
    anomaly_names(theta.theta_s.len())
        .into_iter()
        .enumerate()
        .map(|(i, anomaly)| FlagRow {
            anomaly,
            detected: theta.get(i),
        })
        .collect()
}

fn detect(ctx: &Ctx, input: &TelemetryInput) -> Result<()> {
    let w = read_window(input)?;
    let p = &ctx.cfg.pipeline;
    let sigma_v = pipeline::noise_level(&w, p)?;
    let changepoints = pipeline::detect_stage(&w, p, sigma_v)?;
    let doc = DetectOutput {
        sigma_v,
        detector: p.detector.resolve(sigma_v)?,
        changepoints,
    };
    ctx.emit("changepoints", &doc, || {
        doc.changepoints
            .indices
            .iter()
            .zip(&doc.changepoints.scores)
            .map(|(&index, &score)| IndexRow { index, score })
            .collect()
    })?;
    Ok(())
}

fn estimate(ctx: &Ctx, input: &TelemetryInput, changepoints: &Path) -> Result<()> {
    let w = read_window(input)?;
    let det: DetectOutput = io::read_json(changepoints)?;
    let fit = pipeline::estimate_stage(&w, &det.changepoints.indices, &ctx.cfg.pipeline, det.sigma_v)?;
    ctx.emit("fit", &fit, || {
        fit.intervals
            .intervals
            .iter()
            .zip(&fit.fit.f)
            .enumerate()
            .map(|(i, (&(start, end), &f))| IntervalRow {
                start,
                end,
                f,
                rejection_cost: fit.fit.rejection_costs.get(i).copied(),
            })
            .collect()
    })?;
    Ok(())
}

fn assign(ctx: &Ctx, fit: &Path) -> Result<()> {
    let fit: FitReport = io::read_json(fit)?;
    let a = pipeline::assign_stage(&fit, &ctx.cfg.pipeline)?;
    ctx.emit("assignment", &a, || {
        fit.changepoints
            .iter()
            .zip(&a.u)
            .map(|(&changepoint, &fss)| LabelRow { changepoint, fss })
            .collect()
    })?;
    Ok(())
}

fn classify_cmd(ctx: &Ctx, assignment: &Path, models: &Path) -> Result<()> {
    let a: AssignmentResult = io::read_json(assignment)?;
    let models: AnomalyClassifiers = io::read_json(models)?;
    let theta = models.classify(a.f_bar_d, a.f_v, &a.per_fss)?;
    ctx.emit("theta", &theta, || flag_rows(&theta))?;
    Ok(())
}

fn process(ctx: &Ctx, dataset: &Path) -> Result<ProcessedDataset> {
    let data = io::read_dataset(dataset)?;
    let p = pipeline::build_processed_dataset(&data, &ctx.cfg.pipeline, ctx.exec)?;
    io::write_jsonl(&ctx.path("processed.jsonl"), &p.entries)?;
    io::write_json(&ctx.path("failures.json"), &p.failures)?;
    println!(
        "processed {} windows ({} failed) into {}",
        p.entries.len(),
        p.failures.len(),
        ctx.path("processed.jsonl").display()
    );
    Ok(p)
}

fn train(ctx: &Ctx, processed: Option<&Path>, dataset: Option<&Path>) -> Result<()> {
    let data = match (processed, dataset) {
        (Some(p), _) => ProcessedDataset {
            entries: io::read_jsonl::<ProcessedEntry>(p)?,
            failures: Vec::new(),
        },
        (None, Some(d)) => process(ctx, d)?,
        (None, None) => return Err(Error::InvalidConfig("train needs --processed or --dataset".into())),
    };
    let b = &ctx.cfg.bench;
    let (models, report) = classify::train_all(
        &data,
        &ctx.cfg.pipeline.train,
        b.train_fraction,
        b.n_repeats,
        ctx.seed,
        ctx.exec,
    )?;
    io::write_json(&ctx.path("models.json"), &models)?;
    io::write_json(&ctx.path("models/dry.json"), &models.dry)?;
    io::write_json(&ctx.path("models/viscous.json"), &models.viscous)?;
    for (s, m) in models.fss.iter().enumerate() {
        io::write_json(&ctx.path(&format!("models/fss{}.json", s + 1)), m)?;
    }
    io::write_json(&ctx.path("accuracy.json"), &report)?;
    bench::write_matrix(&ctx.path("accuracy_mean.csv"), &report.classes, &report.detectors, &report.mean)?;
    for (a, name) in report.detectors.iter().enumerate() {
        println!("{name}: mean detection {:.3}", report.detection(a));
    }
    println!("worst cross-detection {:.3}", report.worst_cross_detection());
    println!("wrote {}", ctx.path("models.json").display());
    Ok(())
}

fn diagnose(ctx: &Ctx, input: &TelemetryInput, models: &Path) -> Result<()> {
    let w = read_window(input)?;
    let models: AnomalyClassifiers = io::read_json(models)?;
    let r = pipeline::diagnose(&w, &ctx.cfg.pipeline, &models)?;
    // timings go to their own file so the report itself is reproducible
    io::write_json(&ctx.path("timings.json"), &r.timings)?;
    let mut doc = serde_json::to_value(&r)?;
    if let Some(m) = doc.as_object_mut() {
        m.remove("timings");
    }
    ctx.emit("diagnosis", &doc, || flag_rows(&r.theta_hat))?;
    let names = anomaly_names(r.theta_hat.theta_s.len());
    let found: Vec<&str> = names
        .iter()
        .enumerate()
        .filter(|(i, _)| r.theta_hat.get(*i))
        .map(|(_, n)| n.as_str())
        .collect();
    println!(
        "anomalies: {} ({} changepoints, {:.1} ms)",
        if found.is_empty() { "none".into() } else { found.join(", ") },
        r.fit.changepoints.len(),
        r.timings.total_ms()
    );
    Ok(())
}

fn simulate_cmd(ctx: &Ctx, model: Option<&Path>, scenario: Option<&Path>) -> Result<()> {
    let mut sc: Scenario = match scenario {
        Some(p) => io::read_json(p)?,
        None => ctx.cfg.scenario.clone(),
    };
    if let Some(p) = model {
        sc.model = io::read_json::<RwaModel>(p)?;
    }
    let d = simulate::make_dataset(&sc, ctx.seed, ctx.exec)?;
    let index = io::write_dataset(&ctx.out, &d.dataset)?;
    io::write_jsonl(&ctx.path("truth.jsonl"), &d.truth)?;
    println!("simulated {} windows into {}", d.dataset.len(), index.display());
    Ok(())
}

fn bench_cmd(ctx: &Ctx, suite: Suite) -> Result<()> {
    let summary = bench::run_benchmarks(suite, &ctx.cfg, ctx.seed, &ctx.out, ctx.exec)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    if let Command::InitConfig = cli.command {
        let p = g.out.join("config.json");
        io::write_json(&p, &Config::default())?;
        println!("wrote {}", p.display());
        return Ok(());
    }
    let ctx = Ctx {
        cfg: load_config(g.config.as_deref())?,
        seed: g.seed,
        out: g.out,
        format: g.format,
        exec: if g.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    match &cli.command {
        Command::InitConfig => unreachable!(),
        Command::Simulate { model, scenario } => simulate_cmd(&ctx, model.as_deref(), scenario.as_deref()),
        Command::Detect(input) => detect(&ctx, input),
        Command::Estimate { input, changepoints } => estimate(&ctx, input, changepoints),
        Command::Assign { fit } => assign(&ctx, fit),
        Command::Classify { assignment, models } => classify_cmd(&ctx, assignment, models),
        Command::Process { dataset } => process(&ctx, dataset).map(|_| ()),
        Command::Train { processed, dataset } => train(&ctx, processed.as_deref(), dataset.as_deref()),
        Command::Diagnose { input, models } => diagnose(&ctx, input, models),
        Command::Bench { suite } => bench_cmd(&ctx, suite.parse()?),
        Command::BenchCpd => bench_cmd(&ctx, Suite::Cpd),
        Command::BenchRmse => bench_cmd(&ctx, Suite::Rmse),
        Command::BenchAssign => bench_cmd(&ctx, Suite::Assign),
        Command::BenchAccuracy => bench_cmd(&ctx, Suite::Accuracy),
        Command::BenchBins => bench_cmd(&ctx, Suite::Bins),
        Command::BenchTiming => bench_cmd(&ctx, Suite::Timing),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
