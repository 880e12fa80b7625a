//! `rfdfar`: command-line front end for the recognition pipeline.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime or data errors.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rfdfar_core::channel::{generate_trace, ChannelConfig, DatasetConfig, GestureEnvelopeSpec, TraceKey};
use rfdfar_core::cv::{kfold_cv, loso_cv, metrics, ConfusionMatrix};
use rfdfar_core::emotion::{aggregate, write_alerts_csv, AlertPolicy, EmotionStream};
use rfdfar_core::eval::{run_scenario_with, run_sweep_with, save_report, Scenario, ScenarioSpec, SweepSpec};
use rfdfar_core::features::{featurize_dataset, parse_feature_list, FeatureTable, DEFAULT_WINDOW};
use rfdfar_core::knn::{fit, KnnModel, Weighting};
use rfdfar_core::preprocess::{preprocess, PreprocessConfig, DEFAULT_LEVELS, DEFAULT_SMOOTH_LEN};
use rfdfar_core::trace::{read_trace, write_trace, TraceFormat};
use rfdfar_core::{Exec, GestureLabel, SnrDb};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(name = "rfdfar", version, about = "Device-free activity and emotion recognition from RF amplitude traces")]
struct Cli {
    /// Master seed for every random step (default 42)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Run everything on the calling thread
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesise one received trace for a gesture at a target SNR
    Simulate(SimulateArgs),
    /// Rectify, wavelet-denoise and smooth a trace
    Denoise(DenoiseArgs),
    /// Window traces and compute per-window features
    Featurize(FeaturizeArgs),
    /// Fit a k-NN model on a feature table
    Train(TrainArgs),
    /// Classify every row of a feature table
    Predict(PredictArgs),
    /// Cross-validate a feature table
    Cv(CvArgs),
    /// Turn a per-window emotion stream into alerts
    Alerts(AlertsArgs),
    /// Run an SNR (or distance) sweep
    Sweep(SweepArgs),
    /// Run the driving or conversation scenario
    Scenario(ScenarioArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Binary,
}

#[derive(Args, Debug)]
struct TraceOut {
    /// Output trace file
    #[arg(long)]
    out: PathBuf,
    /// Output encoding; inferred from the extension (.bin/.f32 = binary) when absent
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl TraceOut {
    fn format(&self) -> TraceFormat {
        match self.format {
            Some(Format::Csv) => TraceFormat::Csv,
            Some(Format::Binary) => TraceFormat::Binary,
            None => TraceFormat::from_path(&self.out),
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    gesture: String,
    /// Target SNR in dB, or "inf" for no noise
    #[arg(long, default_value = "42")]
    snr: String,
    /// Seconds
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long, default_value_t = 1.0e6)]
    sample_rate: f64,
    #[arg(long, default_value_t = 100.0e3)]
    tone: f64,
    /// Simulated subject index (selects per-subject envelope factors)
    #[arg(long, default_value_t = 0)]
    subject: usize,
    /// Repetition index
    #[arg(long, default_value_t = 0)]
    rep: usize,
    /// Relative spread of per-subject envelope factors
    #[arg(long, default_value_t = 0.15)]
    subject_spread: f64,
    /// Standard deviation of the block-wise noise floor in dB
    #[arg(long, default_value_t = ChannelConfig::default().floor_jitter_db)]
    floor_jitter: f64,
    /// Noise floor block length in seconds
    #[arg(long, default_value_t = ChannelConfig::default().floor_block)]
    floor_block: f64,
    #[command(flatten)]
    output: TraceOut,
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: usize,
    #[arg(long, default_value_t = DEFAULT_SMOOTH_LEN)]
    smooth: usize,
    /// Skip amplitude detection and denoise the samples as they are
    #[arg(long)]
    raw: bool,
    #[command(flatten)]
    output: TraceOut,
}

#[derive(Args, Debug)]
struct FeaturizeArgs {
    /// Input traces (repeat or list several)
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Comma-separated subset of mean,std,entropy,zero_crossings,avg_derivative, or "all"
    #[arg(long, default_value = "mean,std")]
    features: String,
}

#[derive(Args, Debug, Clone)]
struct KnnArgs {
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// uniform or inverse
    #[arg(long, default_value = "inverse")]
    weighting: String,
}

impl KnnArgs {
    fn weighting(&self) -> Result<Weighting> {
        Ok(self.weighting.parse()?)
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    knn: KnnArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    /// Predictions CSV (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Leave one subject out instead of k-fold
    #[arg(long)]
    loso: bool,
    #[command(flatten)]
    knn: KnnArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AlertsArgs {
    /// CSV of time_s,label rows; labels are emotions or gestures
    #[arg(long = "in")]
    input: PathBuf,
    /// Window period for single-row streams
    #[arg(long, default_value_t = 0.1)]
    period: f64,
    #[arg(long, default_value_t = AlertPolicy::default().sustain_threshold)]
    sustain: f64,
    #[arg(long, default_value_t = AlertPolicy::default().episode_count_threshold)]
    episodes: usize,
    #[arg(long, default_value_t = AlertPolicy::default().gap_tolerance)]
    gap: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// TOML sweep spec; defaults apply to every missing key
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// driving, conversation2m or conversation5m
    #[arg(long)]
    name: String,
    #[arg(long)]
    subjects: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `RFDFAR_THREADS` caps the worker pool; 0 or unset means one per core.
fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("RFDFAR_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .with_context(|| format!("RFDFAR_THREADS must be a non-negative integer, got '{v}'"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match cli.command {
        Command::Simulate(a) => simulate(a, seed),
        Command::Denoise(a) => denoise(a, exec),
        Command::Featurize(a) => featurize(a, exec),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Cv(a) => cv(a, seed, exec),
        Command::Alerts(a) => alerts(a),
        Command::Sweep(a) => sweep(a, cli.seed, exec),
        Command::Scenario(a) => scenario(a, seed, exec),
    }
}

fn parse_snr(s: &str) -> Result<SnrDb> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(SnrDb::NOISELESS);
    }
    let v: f64 = s.parse().with_context(|| format!("bad SNR '{s}'"))?;
    Ok(SnrDb::new(v)?)
}

/// Buffered writer to a file, or stdout when no path is given.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn simulate(a: SimulateArgs, seed: u64) -> Result<()> {
    let gesture: GestureLabel = a.gesture.parse()?;
    let mut cfg = DatasetConfig::new(vec![GestureEnvelopeSpec::preset(gesture)], parse_snr(&a.snr)?, seed);
    cfg.subjects = a.subject + 1;
    cfg.repetitions = a.rep + 1;
    cfg.duration = a.duration;
    cfg.sample_rate = a.sample_rate;
    cfg.tone_freq = a.tone;
    cfg.subject_spread = a.subject_spread;
    cfg.channel.floor_jitter_db = a.floor_jitter;
    cfg.channel.floor_block = a.floor_block;
    cfg.channel.validate()?;
    let trace = generate_trace(&cfg, TraceKey { subject: a.subject, repetition: a.rep, gesture: 0 })?;
    write_trace(&trace, &a.output.out, a.output.format())?;
    log::info!("wrote {} samples to {}", trace.len(), a.output.out.display());
    Ok(())
}

fn denoise(a: DenoiseArgs, exec: Exec) -> Result<()> {
    let trace = read_trace(&a.input)?;
    let cfg = PreprocessConfig { levels: a.levels, smooth_len: a.smooth, detect_amplitude: !a.raw };
    let out = preprocess(&trace, &cfg, exec)?;
    write_trace(&out, &a.output.out, a.output.format())?;
    Ok(())
}

fn featurize(a: FeaturizeArgs, exec: Exec) -> Result<()> {
    let traces = a
        .inputs
        .iter()
        .map(|p| read_trace(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let table = featurize_dataset(&traces, a.window, &parse_feature_list(&a.features)?, exec)?;
    table.save(&a.out)?;
    log::info!("wrote {} feature rows to {}", table.len(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let table = FeatureTable::load(&a.input)?;
    let model = fit(&table, a.knn.k, a.knn.weighting()?)?;
    model.save(&a.out)?;
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = KnnModel::load(&a.model)?;
    let table = FeatureTable::load(&a.input)?;
    let predictions = model.predict_table(&table)?;
    let mut w = sink(a.out.as_deref())?;
    writeln!(w, "row,predicted,label")?;
    let mut labelled = 0;
    let mut correct = 0;
    for (i, (p, row)) in predictions.iter().zip(&table.rows).enumerate() {
        let label = row.label.as_deref().unwrap_or("");
        writeln!(w, "{i},{},{label}", p.label)?;
        if !label.is_empty() {
            labelled += 1;
            correct += usize::from(label == p.label);
        }
    }
    w.flush()?;
    if labelled > 0 {
        eprintln!("accuracy {correct}/{labelled} = {}", correct as f64 / labelled as f64);
    }
    Ok(())
}

fn write_matrix(w: &mut dyn Write, cm: &ConfusionMatrix) -> Result<()> {
    let m = metrics(cm)?;
    let ratio = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into());
    writeln!(w, "# accuracy {}", m.accuracy)?;
    writeln!(w, "truth\\predicted,{},precision,recall", cm.classes.join(","))?;
    for (i, c) in cm.classes.iter().enumerate() {
        let counts: Vec<String> = cm.counts[i].iter().map(u64::to_string).collect();
        writeln!(w, "{c},{},{},{}", counts.join(","), ratio(m.precision[i]), ratio(m.recall[i]))?;
    }
    Ok(())
}

fn cv(a: CvArgs, seed: u64, exec: Exec) -> Result<()> {
    let table = FeatureTable::load(&a.input)?;
    let weighting = a.knn.weighting()?;
    let mut w = sink(a.out.as_deref())?;
    if a.loso {
        let r = loso_cv(&table, a.knn.k, weighting, exec)?;
        for (s, acc) in &r.per_subject {
            writeln!(w, "# subject {s} accuracy {acc}")?;
        }
        write_matrix(&mut w, &r.pooled)?;
    } else {
        let cm = kfold_cv(&table, a.folds, a.knn.k, weighting, seed, exec)?;
        write_matrix(&mut w, &cm)?;
    }
    w.flush()?;
    Ok(())
}

fn alerts(a: AlertsArgs) -> Result<()> {
    let file = File::open(&a.input).with_context(|| format!("cannot open {}", a.input.display()))?;
    let stream = EmotionStream::read_csv(BufReader::new(file), &a.input, a.period)?;
    let policy = AlertPolicy { sustain_threshold: a.sustain, episode_count_threshold: a.episodes, gap_tolerance: a.gap };
    let alerts = aggregate(&stream, &policy)?;
    for al in &alerts {
        eprintln!(
            "ALERT {} {} from {:.1} s to {:.1} s ({:.1} s)",
            al.kind.as_str(),
            al.emotion,
            al.start,
            al.end,
            al.end - al.start
        );
    }
    let mut w = sink(a.out.as_deref())?;
    write_alerts_csv(&alerts, &mut w)?;
    w.flush()?;
    Ok(())
}

fn sweep(a: SweepArgs, seed: Option<u64>, exec: Exec) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => SweepSpec::load(p)?,
        None => SweepSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let report = run_sweep_with(&spec, exec)?;
    match &a.out {
        Some(p) => save_report(&report, p)?,
        None => {
            let mut w = sink(None)?;
            rfdfar_core::eval::write_report(&report, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn scenario(a: ScenarioArgs, seed: u64, exec: Exec) -> Result<()> {
    let name: Scenario = a.name.parse()?;
    let mut spec = ScenarioSpec::preset(name);
    spec.seed = seed;
    if let Some(n) = a.subjects {
        spec.subjects = n;
    }
    if let Some(n) = a.reps {
        spec.repetitions = n;
    }
    if let Some(s) = a.snr {
        spec.snr = SnrDb::new(s)?;
    }
    if let Some(d) = a.duration {
        if d.is_nan() || d <= 0.0 {
            bail!("duration must be positive");
        }
        spec.duration_s = d;
    }
    let report = run_scenario_with(&spec, exec)?;
    let mut w = sink(a.out.as_deref())?;
    report.write_csv(&mut w)?;
    w.flush()?;
    eprintln!(
        "{}: individual k-fold {:.3}, pooled k-fold {:.3}, leave-one-subject-out {:.3}",
        name,
        report.mean_individual_kfold(),
        report.pooled_kfold.accuracy,
        report.mean_loso()
    );
    Ok(())
}
