//! Run directories: manifest, per-generation statistics, champions and
//! checkpoints.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nagi_core::evolution::Champion;
use nagi_core::{Evolution, GenerationStats, Genome, Mode, TaskRunner};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const CONFIG: &str = "config.toml";
pub const STATS: &str = "stats.csv";
pub const CHECKPOINT: &str = "checkpoint.json";

pub const STATS_HEADER: [&str; 11] = [
    "generation",
    "fitness_min",
    "fitness_mean",
    "fitness_max",
    "acc_min",
    "acc_mean",
    "acc_max",
    "eos_min",
    "eos_mean",
    "eos_max",
    "species_count",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChampionKind {
    Fitness,
    Accuracy,
    EosAccuracy,
}

impl ChampionKind {
    pub const ALL: [ChampionKind; 3] = [ChampionKind::Fitness, ChampionKind::Accuracy, ChampionKind::EosAccuracy];

    pub fn file_name(self) -> &'static str {
        match self {
            ChampionKind::Fitness => "champion_fitness.json",
            ChampionKind::Accuracy => "champion_accuracy.json",
            ChampionKind::EosAccuracy => "champion_eos.json",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ChampionKind::Fitness => "fitness",
            ChampionKind::Accuracy => "accuracy",
            ChampionKind::EosAccuracy => "eos_accuracy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub task: String,
    pub profile: String,
    pub master_seed: u64,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub generations_completed: usize,
    pub config: RunConfig,
}

/// A champion with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChampionRecord {
    pub format_version: u32,
    pub selected_by: String,
    pub generation: usize,
    pub genome_key: u64,
    pub fitness: f64,
    pub accuracy: f64,
    pub eos_accuracy: f64,
    pub config: RunConfig,
    pub genome: Genome,
}

impl ChampionRecord {
    pub fn new(kind: ChampionKind, c: &Champion, config: &RunConfig) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            selected_by: kind.label().to_string(),
            generation: c.generation,
            genome_key: c.key,
            fitness: c.fitness,
            accuracy: c.accuracy,
            eos_accuracy: c.eos_accuracy,
            config: config.clone(),
            genome: c.genome.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let rec: Self = serde_json::from_str(&text).map_err(|e| CliError::json(path, &text, e))?;
        if rec.format_version != FORMAT_VERSION {
            return Err(CliError::Usage(format!(
                "{}: unsupported champion format_version {} (expected {FORMAT_VERSION})",
                path.display(),
                rec.format_version
            )));
        }
        rec.genome.validate()?;
        Ok(rec)
    }

    pub fn runner(&self, mode: Mode) -> TaskRunner {
        let c = &self.config;
        TaskRunner::new(c.task, c.environment.clone(), c.evolution.genome, mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: RunConfig,
    pub evolution: Evolution,
}

pub struct RunOptions {
    pub resume: bool,
    pub progress: bool,
}

pub struct RunSummary {
    pub dir: PathBuf,
    pub history: Vec<GenerationStats>,
    pub champions: Vec<(ChampionKind, ChampionRecord)>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn stats_csv(history: &[GenerationStats]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(STATS_HEADER).expect("in-memory write");
    for s in history {
        w.write_record(&[
            s.generation.to_string(),
            s.fitness.min.to_string(),
            s.fitness.mean.to_string(),
            s.fitness.max.to_string(),
            s.accuracy.min.to_string(),
            s.accuracy.mean.to_string(),
            s.accuracy.max.to_string(),
            s.eos_accuracy.min.to_string(),
            s.eos_accuracy.mean.to_string(),
            s.eos_accuracy.max.to_string(),
            s.species_count.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

fn champions_of(evo: &Evolution, config: &RunConfig) -> Vec<(ChampionKind, ChampionRecord)> {
    let a = &evo.archive;
    [
        (ChampionKind::Fitness, &a.by_fitness),
        (ChampionKind::Accuracy, &a.by_accuracy),
        (ChampionKind::EosAccuracy, &a.by_eos_accuracy),
    ]
    .into_iter()
    .filter_map(|(k, c)| c.as_ref().map(|c| (k, ChampionRecord::new(k, c, config))))
    .collect()
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializes") + "\n"
}

/// Runs (or resumes) an evolution and persists everything into `dir`.
pub fn evolve_run(config: &RunConfig, dir: &Path, opts: &RunOptions) -> Result<RunSummary> {
    config.validate()?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let checkpoint_path = dir.join(CHECKPOINT);
    let manifest_path = dir.join(MANIFEST);

    let (mut evo, started) = if opts.resume && checkpoint_path.exists() {
        let text = fs::read_to_string(&checkpoint_path).map_err(|e| CliError::io(&checkpoint_path, e))?;
        let cp: Checkpoint =
            serde_json::from_str(&text).map_err(|e| CliError::json(&checkpoint_path, &text, e))?;
        if cp.config != *config {
            return Err(CliError::Usage(format!(
                "{}: checkpoint was written with a different configuration",
                checkpoint_path.display()
            )));
        }
        let started = fs::read_to_string(&manifest_path)
            .ok()
            .and_then(|t| serde_json::from_str::<RunManifest>(&t).ok())
            .map_or_else(unix_now, |m| m.started_unix);
        (cp.evolution, started)
    } else {
        let (n_in, n_out) = config.task.arity();
        (Evolution::new(config.evolution, n_in, n_out)?, unix_now())
    };

    let manifest = |evo: &Evolution, finished: Option<u64>| RunManifest {
        format_version: FORMAT_VERSION,
        task: config.task.id().to_string(),
        profile: config.profile.to_string(),
        master_seed: config.evolution.master_seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: finished,
        generations_completed: evo.generation,
        config: config.clone(),
    };
    write(&dir.join(CONFIG), &config.to_toml())?;
    write(&manifest_path, &to_json(&manifest(&evo, None)))?;

    let save_checkpoint = |evo: &Evolution| -> Result<()> {
        let cp = Checkpoint { format_version: FORMAT_VERSION, config: config.clone(), evolution: evo.clone() };
        write(&checkpoint_path, &serde_json::to_string(&cp).expect("serializes"))
    };
    let save_champions = |evo: &Evolution| -> Result<()> {
        for (kind, rec) in champions_of(evo, config) {
            write(&dir.join(kind.file_name()), &to_json(&rec))?;
        }
        Ok(())
    };

    let runner = TaskRunner::new(config.task, config.environment.clone(), config.evolution.genome, Mode::Train);
    let stats_path = dir.join(STATS);
    write(&stats_path, &stats_csv(&evo.history))?;
    while !evo.is_finished() {
        let s = evo.step(&runner)?;
        if opts.progress {
            eprintln!(
                "gen {:>4}  fitness {:.3}/{:.3}  acc {:.3}/{:.3}  eos {:.3}/{:.3}  species {}",
                s.generation,
                s.fitness.mean,
                s.fitness.max,
                s.accuracy.mean,
                s.accuracy.max,
                s.eos_accuracy.mean,
                s.eos_accuracy.max,
                s.species_count
            );
        }
        write(&stats_path, &stats_csv(&evo.history))?;
        save_champions(&evo)?;
        if config.checkpoint_every > 0 && evo.generation % config.checkpoint_every == 0 {
            save_checkpoint(&evo)?;
        }
    }

    save_checkpoint(&evo)?;
    save_champions(&evo)?;
    write(&manifest_path, &to_json(&manifest(&evo, Some(unix_now()))))?;
    Ok(RunSummary { dir: dir.to_path_buf(), champions: champions_of(&evo, config), history: evo.history })
}
