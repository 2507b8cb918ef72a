//! `beamlab`: corpus synthesis, scene simulation, beamforming, scoring and
//! feature export from the command line.
//!
//! Exit status: 0 on success, 1 when some scenes failed or a processing
//! error occurred, 2 on configuration errors.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use beamlab::beamformer::MvdrOptions;
use beamlab::metrics::{evaluate_dataset, write_report, MethodOutputs};
use beamlab::pipeline::{beamform_dataset, export_features, BatchReport, Feature, Method};
use beamlab::rir::{export_rir, simulate_rir, ArrayGeometry, RirOptions, RoomSpec};
use beamlab::scene::{
    generate_dataset, make_corpus, make_noise_dir, Dataset, DatasetOptions, Preset, ScenarioConfig,
    SynthCorpusOptions,
};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use crate::config::ConfigError;

const RUN_SCHEMA: &str = "beamlab.run/1";

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "beamlab",
    version,
    about = "Multichannel target-speaker extraction lab"
)]
struct Cli {
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true, env = "BEAMLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// `key = value` file of default flags; command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Cmd {
    /// Synthesize a speech-like corpus and a directory of noise recordings.
    MakeCorpus(MakeCorpusArgs),
    /// Simulate a dataset of reverberant multichannel scenes.
    Simulate(SimulateArgs),
    /// Run a beamformer over every scene of a dataset.
    Beamform(BeamformArgs),
    /// Score the mixture and beamformer outputs with SI-SDR and STOI.
    Evaluate(EvaluateArgs),
    /// Dump per-scene tensors for external training code.
    ExportFeatures(ExportArgs),
    /// Simulate and export the impulse responses of one source.
    Rir(RirArgs),
}

#[derive(Debug, Args, Serialize)]
struct MakeCorpusArgs {
    #[arg(long, default_value_t = 8)]
    speakers: usize,
    #[arg(long, default_value_t = 4)]
    utterances: usize,
    #[arg(long, default_value_t = 3.0)]
    min_duration: f64,
    #[arg(long, default_value_t = 6.0)]
    max_duration: f64,
    #[arg(long, default_value_t = 16_000)]
    sample_rate: u32,
    /// Length of each noise recording; 0 skips the noise directory.
    #[arg(long, default_value_t = 30.0)]
    noise_duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PresetArg {
    Random,
    SameDoa,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// Number of scenes.
    #[arg(short = 'n', long, default_value_t = 10)]
    scenes: usize,
    /// Corpus root: one subdirectory of WAV files per speaker.
    #[arg(long)]
    corpus: PathBuf,
    /// Directory of noise WAVs; synthetic pink noise when omitted.
    #[arg(long)]
    noise_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PresetArg::Random)]
    preset: PresetArg,
    #[arg(long, default_value_t = 3.0)]
    min_duration: f64,
    #[arg(long, default_value_t = 6.0)]
    max_duration: f64,
    /// Length of the auxiliary desired-plus-noise and noise-only segments.
    #[arg(long, default_value_t = 2.0)]
    aux_seconds: f64,
    #[arg(long)]
    no_sensor_noise: bool,
    /// JSON file overriding scenario ranges (room size, T60, SNR, array).
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MethodArg {
    OracleMvdr,
    EstimatedMvdr,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::OracleMvdr => Method::OracleMvdr,
            MethodArg::EstimatedMvdr => Method::EstimatedMvdr,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct BeamformArgs {
    /// Dataset directory or its index.json.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
}

#[derive(Debug, Args, Serialize)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Directories of enhanced `<scene_id>.wav`, labelled by name.
    /// Defaults to the beamformer directories found in the output directory.
    #[arg(long, value_delimiter = ',')]
    method_dir: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FeatureArg {
    Rtf,
    Doa,
    Stft,
}

impl From<FeatureArg> for Feature {
    fn from(f: FeatureArg) -> Self {
        match f {
            FeatureArg::Rtf => Feature::Rtf,
            FeatureArg::Doa => Feature::Doa,
            FeatureArg::Stft => Feature::Stft,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct ExportArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    feature: FeatureArg,
}

#[derive(Debug, Args, Serialize)]
struct RirArgs {
    /// Room size `LX,LY,LZ` in metres.
    #[arg(long, value_delimiter = ',', default_values_t = [6.0, 5.0, 3.0])]
    room: Vec<f64>,
    #[arg(long, default_value_t = 0.4)]
    t60: f64,
    /// Source position `X,Y,Z`.
    #[arg(long, value_delimiter = ',', required = true)]
    source: Vec<f64>,
    /// Array centre `X,Y,Z`; room centre at 1.5 m height by default.
    #[arg(long, value_delimiter = ',')]
    center: Option<Vec<f64>>,
    #[arg(long, default_value_t = 4)]
    mics: usize,
    #[arg(long, default_value_t = 0.08)]
    spacing: f64,
    /// Array axis azimuth in degrees from the room x-axis.
    #[arg(long, default_value_t = 0.0)]
    azimuth: f64,
    #[arg(long, default_value_t = 8000)]
    sample_rate: u32,
    #[arg(long)]
    anechoic: bool,
    /// File stem inside the output directory.
    #[arg(long, default_value = "rir")]
    name: String,
}

/// What a run wrote; partial failures map to exit code 1.
#[derive(Debug, Default)]
struct Outcome {
    failed: usize,
}

impl From<&BatchReport> for Outcome {
    fn from(r: &BatchReport) -> Self {
        Self {
            failed: r.failed.len(),
        }
    }
}

#[derive(Serialize)]
struct ResolvedConfig<'a> {
    schema: &'a str,
    version: &'a str,
    argv: Vec<String>,
    #[serde(flatten)]
    cli: &'a Cli,
}

fn point(v: &[f64], what: &str) -> Result<[f64; 3]> {
    match v {
        [x, y, z] => Ok([*x, *y, *z]),
        _ => Err(ConfigError {
            path: None,
            message: format!("--{what} needs three comma-separated values"),
        }
        .into()),
    }
}

fn make_corpus_cmd(cli: &Cli, a: &MakeCorpusArgs) -> Result<Outcome> {
    let opts = SynthCorpusOptions {
        speakers: a.speakers,
        utterances_per_speaker: a.utterances,
        duration_range_s: [a.min_duration, a.max_duration],
        sample_rate_hz: a.sample_rate,
        seed: cli.seed,
    };
    let corpus = cli.out_dir.join("corpus");
    let files = make_corpus(&corpus, &opts)?;
    info!("wrote {} utterances to {}", files.len(), corpus.display());
    if a.noise_duration > 0.0 {
        let noise = cli.out_dir.join("noise");
        make_noise_dir(&noise, a.noise_duration, a.sample_rate, cli.seed)?;
        info!("wrote noise recordings to {}", noise.display());
    }
    Ok(Outcome::default())
}

fn simulate_cmd(cli: &Cli, a: &SimulateArgs) -> Result<Outcome> {
    let scenario = match &a.scenario {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| p.display().to_string())?;
            serde_json::from_str::<ScenarioConfig>(&text).map_err(|e| ConfigError {
                path: Some(p.clone()),
                message: e.to_string(),
            })?
        }
        None => ScenarioConfig::default(),
    };
    let opts = DatasetOptions {
        n_scenes: a.scenes,
        seed: cli.seed,
        preset: match a.preset {
            PresetArg::Random => Preset::Random,
            PresetArg::SameDoa => Preset::SameDoa,
        },
        scenario,
        duration_range_s: [a.min_duration, a.max_duration],
        aux_segment_s: a.aux_seconds,
        sensor_noise: !a.no_sensor_noise,
        ..DatasetOptions::default()
    };
    let index = generate_dataset(&opts, &a.corpus, a.noise_dir.as_deref(), &cli.out_dir)?;
    info!(
        "{} scenes written, {} failed",
        index.scenes.len(),
        index.failed.len()
    );
    Ok(Outcome {
        failed: index.failed.len(),
    })
}

fn beamform_cmd(cli: &Cli, a: &BeamformArgs) -> Result<Outcome> {
    let dataset = Dataset::open(&a.dataset)?;
    let report = beamform_dataset(
        &dataset,
        a.method.into(),
        &MvdrOptions::default(),
        &cli.out_dir,
    )?;
    info!(
        "{} outputs written, {} failed",
        report.written.len(),
        report.failed.len()
    );
    Ok((&report).into())
}

fn discover_methods(out_dir: &Path) -> Vec<PathBuf> {
    [Method::OracleMvdr, Method::EstimatedMvdr]
        .iter()
        .map(|m| out_dir.join(m.label()))
        .filter(|d| d.is_dir())
        .collect()
}

fn evaluate_cmd(cli: &Cli, a: &EvaluateArgs) -> Result<Outcome> {
    let dataset = Dataset::open(&a.dataset)?;
    let dirs = if a.method_dir.is_empty() {
        discover_methods(&cli.out_dir)
    } else {
        a.method_dir.clone()
    };
    for d in &dirs {
        if !d.is_dir() {
            bail!(ConfigError {
                path: Some(d.clone()),
                message: "method directory does not exist".into(),
            });
        }
    }
    let methods: Vec<MethodOutputs> = dirs.iter().map(|d| MethodOutputs::from_dir(d)).collect();
    let report = evaluate_dataset(&dataset, &methods)?;
    let (csv, _) = write_report(&report, &cli.out_dir)?;
    for m in &report.aggregate {
        info!(
            "{:<14} SI-SDR {:7.2} dB  STOI {:.3}  ({} scenes)",
            m.method, m.si_sdr_db.mean, m.stoi.mean, m.scenes
        );
    }
    info!("wrote {}", csv.display());
    if !report.skipped.is_empty() {
        warn!("{} scene/method pairs skipped", report.skipped.len());
    }
    Ok(Outcome {
        failed: report.skipped.len(),
    })
}

fn export_cmd(cli: &Cli, a: &ExportArgs) -> Result<Outcome> {
    let dataset = Dataset::open(&a.dataset)?;
    let report = export_features(
        &dataset,
        a.feature.into(),
        &MvdrOptions::default(),
        &cli.out_dir,
    )?;
    info!(
        "{} headers written, {} scenes failed",
        report.written.len(),
        report.failed.len()
    );
    Ok((&report).into())
}

fn rir_cmd(cli: &Cli, a: &RirArgs) -> Result<Outcome> {
    let dims = point(&a.room, "room")?;
    let room = RoomSpec::new(dims, a.t60);
    let center = match &a.center {
        Some(c) => point(c, "center")?,
        None => [dims[0] / 2.0, dims[1] / 2.0, 1.5f64.min(dims[2] / 2.0)],
    };
    let array = ArrayGeometry::uniform_linear(center, a.mics, a.spacing, a.azimuth.to_radians());
    let source = point(&a.source, "source")?;
    let opts = RirOptions {
        sample_rate_hz: a.sample_rate,
        anechoic: a.anechoic,
        max_order: None,
    };
    let rirs = simulate_rir(&room, &array, &source, &opts)?;
    std::fs::create_dir_all(&cli.out_dir).with_context(|| cli.out_dir.display().to_string())?;
    let stem = cli.out_dir.join(&a.name);
    export_rir(&stem, &rirs, &room, &array, Some(cli.seed))?;
    info!(
        "wrote {} ({} taps)",
        stem.with_extension("wav").display(),
        rirs.len()
    );
    Ok(Outcome::default())
}

fn write_resolved(cli: &Cli, argv: &[OsString]) -> Result<()> {
    std::fs::create_dir_all(&cli.out_dir).with_context(|| cli.out_dir.display().to_string())?;
    let resolved = ResolvedConfig {
        schema: RUN_SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        argv: argv
            .iter()
            .map(|a| a.to_string_lossy().into_owned())
            .collect(),
        cli,
    };
    let path = cli.out_dir.join("resolved_config.json");
    let mut text = serde_json::to_string_pretty(&resolved)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| path.display().to_string())
}

fn run(cli: &Cli, argv: &[OsString]) -> Result<Outcome> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!(ConfigError {
                path: None,
                message: "--jobs must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    write_resolved(cli, argv)?;
    match &cli.command {
        Cmd::MakeCorpus(a) => make_corpus_cmd(cli, a),
        Cmd::Simulate(a) => simulate_cmd(cli, a),
        Cmd::Beamform(a) => beamform_cmd(cli, a),
        Cmd::Evaluate(a) => evaluate_cmd(cli, a),
        Cmd::ExportFeatures(a) => export_cmd(cli, a),
        Cmd::Rir(a) => rir_cmd(cli, a),
    }
}

/// Configuration problems exit with 2, everything else with 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    use beamlab::Error as E;
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<E>() {
        Some(
            E::InvalidConfig(_)
            | E::InvalidGeometry(_)
            | E::InfeasibleReverb { .. }
            | E::EmptyCorpus(_)
            | E::NotEnoughSpeakers(_)
            | E::SchemaMismatch { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let argv = match config::merge(&Cli::command(), std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::command()
        .try_get_matches_from(&argv)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli, &argv) {
        Ok(o) if o.failed > 0 => {
            warn!("{} scenes failed", o.failed);
            ExitCode::from(1)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
