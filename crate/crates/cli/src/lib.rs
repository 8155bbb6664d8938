//! Command-line driver: configuration, manifests and subcommands.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qbm_core::election::{
    build_targets, enumerate_win_probability, run_forecast, state_error_distributions, synth_country, tally_election,
    tipping_point_correlations, vote_share_to_probability, ForecastConfig, HistogramSpec, Outcome, StateRoster,
};
use qbm_core::io;
use qbm_core::sampler::{AnnealConfig, AnnealerSettings, ChainStrength, GibbsConfig, SamplerKind};
use qbm_core::trainer::{
    chain_length_experiment, init_model, train, ExperimentConfig, ExperimentSampler, TrainerConfig,
};

/// Environment variable naming the default directory holding
/// `roster.csv`, `polls.csv` and `history.csv`.
pub const DATA_DIR_ENV: &str = "QBM_DATA_DIR";

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "qbm",
    version,
    about = "Boltzmann machine training and electoral-college forecasts"
)]
pub struct Cli {
    /// JSON configuration file; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SamplerName {
    Exact,
    Gibbs,
    Annealer,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SamplerFlags {
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerName>,
    #[arg(long)]
    pub beta_final: Option<f64>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Chain strength as a multiple of the largest split coupling.
    #[arg(long, conflicts_with = "chain_strength")]
    pub chain_factor: Option<f64>,
    /// Fixed physical chain strength.
    #[arg(long)]
    pub chain_strength: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainerFlags {
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub reads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on a JSON targets file and write the trace.
    Train {
        #[arg(long)]
        targets: Option<PathBuf>,
        #[command(flatten)]
        sampler: SamplerFlags,
        #[command(flatten)]
        trainer: TrainerFlags,
    },
    /// Chain-length experiment against random targets.
    Chains {
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        multiplier: Option<usize>,
        #[arg(long)]
        target_seed: Option<u64>,
        #[command(flatten)]
        sampler: SamplerFlags,
        #[command(flatten)]
        trainer: TrainerFlags,
    },
    /// Full forecast with the national-error meta-model.
    Forecast {
        /// Directory with roster.csv, polls.csv and history.csv.
        #[arg(long, env = DATA_DIR_ENV)]
        data_dir: Option<PathBuf>,
        /// Error models in the national-error grid.
        #[arg(long)]
        error_models: Option<usize>,
        /// States to leave out of the model, comma separated.
        #[arg(long, value_delimiter = ',')]
        exclude: Option<Vec<String>>,
        #[command(flatten)]
        sampler: SamplerFlags,
        #[command(flatten)]
        trainer: TrainerFlags,
    },
    /// Write a synthetic country.
    Synth {
        #[arg(long)]
        states: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare enumerated and sampled P(D win) on synthetic countries.
    Validate {
        #[arg(long)]
        states: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        sampler: SamplerFlags,
    },
    /// Repeat a run recorded in a manifest.
    Rerun { manifest: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainsConfig {
    pub nodes: usize,
    pub multiplier: usize,
    pub target_seed: u64,
    pub window_start: usize,
    pub window_end: usize,
}

impl Default for ChainsConfig {
    fn default() -> Self {
        ChainsConfig {
            nodes: 5,
            multiplier: 1,
            target_seed: 0,
            window_start: 191,
            window_end: 200,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElectionConfig {
    pub forecast: ForecastConfig,
    pub exclude: Vec<String>,
    pub histogram: HistogramSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub states: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { states: 5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidateConfig {
    pub states: usize,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            states: 5,
            seed: 0,
            samples: 10_000,
            tolerance: 0.02,
        }
    }
}

/// Everything a run depends on. Input paths are recorded as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub sampler: SamplerKind,
    pub trainer: TrainerConfig,
    pub chains: ChainsConfig,
    pub election: ElectionConfig,
    pub synth: SynthConfig,
    pub validate: ValidateConfig,
    pub targets: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sampler: SamplerKind::Gibbs(GibbsConfig::default()),
            trainer: TrainerConfig::default(),
            chains: ChainsConfig::default(),
            election: ElectionConfig::default(),
            synth: SynthConfig::default(),
            validate: ValidateConfig::default(),
            targets: None,
            data_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Which subcommand a manifest replays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Train,
    Chains,
    Forecast,
    Synth,
    Validate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub task: Task,
    pub config: RunConfig,
    pub versions: Versions,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub qbm_cli: String,
    pub qbm_core: String,
}

impl Versions {
    fn current() -> Self {
        Versions {
            qbm_cli: env!("CARGO_PKG_VERSION").to_string(),
            qbm_core: qbm_core::VERSION.to_string(),
        }
    }
}

fn apply_sampler(sampler: &mut SamplerKind, flags: &SamplerFlags) {
    if let Some(name) = flags.sampler {
        *sampler = match (name, *sampler) {
            (SamplerName::Exact, _) => SamplerKind::Exact,
            (SamplerName::Gibbs, SamplerKind::Gibbs(g)) => SamplerKind::Gibbs(g),
            (SamplerName::Gibbs, _) => SamplerKind::Gibbs(GibbsConfig::default()),
            (SamplerName::Annealer, SamplerKind::Annealer(a)) => SamplerKind::Annealer(a),
            (SamplerName::Annealer, _) => SamplerKind::Annealer(AnnealerSettings::new(AnnealConfig::default(), 1)),
        };
    }
    if let SamplerKind::Annealer(a) = sampler {
        if let Some(b) = flags.beta_final {
            a.anneal.beta_final = b;
        }
        if let Some(s) = flags.sweeps {
            a.anneal.sweeps = s;
        }
        if let Some(f) = flags.chain_factor {
            a.chain_strength = ChainStrength::Relative(f);
        }
        if let Some(v) = flags.chain_strength {
            a.chain_strength = ChainStrength::Fixed(v);
        }
    }
}

fn apply_trainer(trainer: &mut TrainerConfig, flags: &TrainerFlags) {
    if let Some(v) = flags.iterations {
        trainer.iterations = v;
    }
    if let Some(v) = flags.step {
        trainer.step_size = v;
    }
    if let Some(v) = flags.reads {
        trainer.reads_per_iteration = v;
    }
    if let Some(v) = flags.seed {
        trainer.seed = v;
    }
}

/// Resolves the subcommand and the effective configuration (file, then
/// flags).
pub fn resolve(command: &Command, base: RunConfig) -> Result<(Task, RunConfig)> {
    let mut cfg = base;
    let task = match command {
        Command::Train {
            targets,
            sampler,
            trainer,
        } => {
            apply_sampler(&mut cfg.sampler, sampler);
            apply_trainer(&mut cfg.trainer, trainer);
            if targets.is_some() {
                cfg.targets = targets.clone();
            }
            Task::Train
        }
        Command::Chains {
            nodes,
            multiplier,
            target_seed,
            sampler,
            trainer,
        } => {
            if !matches!(cfg.sampler, SamplerKind::Annealer(_)) && sampler.sampler.is_none() {
                cfg.sampler = SamplerKind::Annealer(AnnealerSettings::new(AnnealConfig::default(), 1));
            }
            apply_sampler(&mut cfg.sampler, sampler);
            apply_trainer(&mut cfg.trainer, trainer);
            if let Some(v) = nodes {
                cfg.chains.nodes = *v;
            }
            if let Some(v) = multiplier {
                cfg.chains.multiplier = *v;
            }
            if let Some(v) = target_seed {
                cfg.chains.target_seed = *v;
            }
            Task::Chains
        }
        Command::Forecast {
            data_dir,
            error_models,
            exclude,
            sampler,
            trainer,
        } => {
            apply_sampler(&mut cfg.sampler, sampler);
            apply_trainer(&mut cfg.trainer, trainer);
            if let Some(seed) = trainer.seed {
                cfg.election.forecast.seed = seed;
            }
            if data_dir.is_some() {
                cfg.data_dir = data_dir.clone();
            }
            if let Some(count) = error_models {
                cfg.election.forecast.grid.count = *count;
            }
            if let Some(list) = exclude {
                cfg.election.exclude = list.clone();
            }
            Task::Forecast
        }
        Command::Synth { states, seed } => {
            if let Some(v) = states {
                cfg.synth.states = *v;
            }
            if let Some(v) = seed {
                cfg.synth.seed = *v;
            }
            Task::Synth
        }
        Command::Validate {
            states,
            seed,
            samples,
            sampler,
        } => {
            apply_sampler(&mut cfg.sampler, sampler);
            if let Some(v) = states {
                cfg.validate.states = *v;
            }
            if let Some(v) = seed {
                cfg.validate.seed = *v;
            }
            if let Some(v) = samples {
                cfg.validate.samples = *v;
            }
            Task::Validate
        }
        Command::Rerun { .. } => bail!("rerun is resolved from its manifest"),
    };
    cfg.sampler.validate()?;
    cfg.trainer.validate()?;
    Ok((task, cfg))
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = out.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Runs one task, writing its outputs and the manifest into `out`. Returns
/// the output file names.
pub fn execute(task: Task, cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let outputs = match task {
        Task::Train => run_train(cfg, out)?,
        Task::Chains => run_chains(cfg, out)?,
        Task::Forecast => run_forecast_task(cfg, out)?,
        Task::Synth => run_synth(cfg, out)?,
        Task::Validate => run_validate(cfg, out)?,
    };
    let manifest = Manifest {
        task,
        config: cfg.clone(),
        versions: Versions::current(),
        outputs: outputs.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(out.join(MANIFEST_FILE), text + "\n")?;
    Ok(outputs)
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
}

fn run_train(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let path = cfg.targets.as_ref().context("train needs --targets")?;
    let targets = io::load_targets(path)?;
    let mut model = init_model(targets.n_units(), &cfg.trainer)?;
    let trace = train(&mut model, &targets, &cfg.sampler, &cfg.trainer)?;
    io::write_trace(create(out, "trace.csv")?, &trace)?;
    fs::write(out.join("model.json"), serde_json::to_string_pretty(&model)? + "\n")?;
    Ok(vec!["trace.csv".into(), "model.json".into()])
}

fn run_chains(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let c = &cfg.chains;
    let mut exp = ExperimentConfig {
        node_count: c.nodes,
        chain_multiplier: c.multiplier,
        target_seed: c.target_seed,
        trainer_seed: cfg.trainer.seed,
        rmse_window: c.window_start..=c.window_end,
        trainer: cfg.trainer,
        ..Default::default()
    };
    match cfg.sampler {
        SamplerKind::Annealer(a) => {
            exp.anneal = a.anneal;
            exp.chain_strength = a.chain_strength;
            exp.chimera = a.chimera;
        }
        SamplerKind::Exact => exp.sampler = ExperimentSampler::Exact,
        SamplerKind::Gibbs(_) => bail!("chains runs with the annealer or exact sampler"),
    }
    let report = chain_length_experiment(&exp)?;
    io::write_experiment_report(
        create(out, "chains_report.csv")?,
        &report,
        (c.window_start, c.window_end),
    )?;
    io::write_experiment_series(create(out, "chains_series.csv")?, &report)?;
    Ok(vec!["chains_report.csv".into(), "chains_series.csv".into()])
}

fn load_election_data(cfg: &RunConfig) -> Result<io::Datasets> {
    let dir = cfg
        .data_dir
        .as_ref()
        .with_context(|| format!("forecast needs --data-dir or {DATA_DIR_ENV}"))?;
    let mut data = io::load_datasets(
        &dir.join("roster.csv"),
        &dir.join("polls.csv"),
        &dir.join("history.csv"),
    )?;
    if !cfg.election.exclude.is_empty() {
        for name in &cfg.election.exclude {
            if data.roster.get(name).is_none() {
                bail!("cannot exclude unknown state {name}");
            }
        }
        let names: Vec<&str> = cfg.election.exclude.iter().map(String::as_str).collect();
        data.roster = data.roster.excluding(&names);
        let kept = data.roster.included_names();
        data.history = data.history.aligned(&kept)?;
    }
    Ok(data)
}

fn run_forecast_task(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let data = load_election_data(cfg)?;
    let run = run_forecast(
        &data.polls,
        &data.history,
        &data.roster,
        &cfg.sampler,
        &cfg.trainer,
        &cfg.election.forecast,
    )?;
    io::write_forecast(create(out, "forecast.csv")?, &run.series)?;

    let mut samples = Vec::new();
    let mut outcomes = Vec::new();
    for m in &run.models {
        samples.extend(m.final_samples.iter().cloned());
        outcomes.extend(m.final_outcomes.iter().copied());
    }
    let r = tipping_point_correlations(&samples, &outcomes)?;
    io::write_tipping_points(create(out, "tipping_points.csv")?, &run.states, &r)?;

    let windows: Vec<_> = run.models.iter().flat_map(|m| m.windows.iter().cloned()).collect();
    let hists = state_error_distributions(&windows, &cfg.election.histogram)?;
    io::write_state_errors(create(out, "state_errors.csv")?, &run.states, &hists)?;

    let mut w = csv_writer(out, "summed_error.csv")?;
    w.write_record(["shift", "iteration", "summed_error"])?;
    for m in &run.models {
        for (k, e) in m.summed_errors.iter().enumerate() {
            w.write_record([m.shift.to_string(), (k + 1).to_string(), e.to_string()])?;
        }
    }
    w.flush()?;
    Ok(vec![
        "forecast.csv".into(),
        "tipping_points.csv".into(),
        "state_errors.csv".into(),
        "summed_error.csv".into(),
    ])
}

fn csv_writer(out: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(out, name)?))
}

fn run_synth(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let country = synth_country(cfg.synth.states, cfg.synth.seed)?;
    io::write_country(out, &country)?;
    Ok(vec!["roster.csv".into(), "polls.csv".into(), "history.csv".into()])
}

/// Result of one small-country oracle check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationRow {
    pub seed: u64,
    pub enumerated: f64,
    pub sampled: f64,
}

/// Trains on the first snapshot of a synthetic country, then compares
/// P(D win) from enumeration with the sampled estimate.
pub fn validate_country(
    states: usize,
    seed: u64,
    samples: usize,
    sampler: &SamplerKind,
    trainer: &TrainerConfig,
) -> Result<ValidationRow> {
    let country = synth_country(states, seed)?;
    let roster: &StateRoster = &country.roster;
    let snap = &country.polls[0];
    let probs = snap
        .shares
        .iter()
        .map(|&(d, r)| vote_share_to_probability(d, r, &Default::default()))
        .collect::<qbm_core::Result<Vec<f64>>>()?;
    let targets = build_targets(&probs, &country.history)?;
    let trainer = TrainerConfig {
        seed,
        keep_snapshots: false,
        ..*trainer
    };
    let mut model = init_model(states, &trainer)?;
    train(&mut model, &targets, &SamplerKind::Exact, &trainer)?;
    let threshold = roster.majority_threshold();
    let enumerated = enumerate_win_probability(&model, roster, threshold)?;
    let batch = sampler.sample(&model, samples, qbm_core::seed::derive(seed, &[0x5A]))?;
    let mut wins = 0usize;
    for s in batch.iter() {
        if tally_election(s, roster, threshold)?.0 == Outcome::DemWin {
            wins += 1;
        }
    }
    Ok(ValidationRow {
        seed,
        enumerated,
        sampled: wins as f64 / samples as f64,
    })
}

fn run_validate(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let v = &cfg.validate;
    let row = validate_country(v.states, v.seed, v.samples, &cfg.sampler, &cfg.trainer)?;
    let diff = (row.enumerated - row.sampled).abs();
    let mut w = csv_writer(out, "validate.csv")?;
    w.write_record(["states", "seed", "p_enumerated", "p_sampled", "abs_diff", "pass"])?;
    w.write_record([
        v.states.to_string(),
        v.seed.to_string(),
        row.enumerated.to_string(),
        row.sampled.to_string(),
        diff.to_string(),
        (diff <= v.tolerance).to_string(),
    ])?;
    w.flush()?;
    if diff > v.tolerance {
        bail!(
            "sampled P(D win) {} differs from enumerated {} by {diff} (tolerance {})",
            row.sampled,
            row.enumerated,
            v.tolerance
        );
    }
    Ok(vec!["validate.csv".into()])
}

/// Parses `argv` and runs it; returns the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let (task, cfg) = match &cli.command {
        Command::Rerun { manifest } => {
            let m = load_manifest(manifest)?;
            (m.task, m.config)
        }
        command => {
            let base = match &cli.config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            resolve(command, base)?
        }
    };
    let outputs = execute(task, &cfg, &cli.out)?;
    for name in outputs {
        println!("{}", cli.out.join(name).display());
    }
    Ok(())
}
