use std::fs;
use std::path::Path;

use nagi_cli::commands::{export_curves, inspect, test_champion, test_report_csv, CURVES_DIR};
use nagi_cli::run::{Checkpoint, CHECKPOINT, STATS};
use nagi_cli::{evolve_run, ChampionKind, ChampionRecord, CliError, Profile, RunConfig, RunOptions};
use nagi_core::genome::init_genome;
use nagi_core::seed::rng_from;
use nagi_core::TaskKind;

const QUIET: RunOptions = RunOptions { resume: false, progress: false };

fn tiny(task: TaskKind, seed: u64, gens: usize) -> RunConfig {
    let mut c = RunConfig::profile_defaults(task, Profile::Desk);
    c.evolution.population_size = 6;
    c.evolution.generations = gens;
    c.evolution.master_seed = seed;
    c.environment.lifetime.sample_steps = 200;
    c.environment.cartpole.schedule.max_iterations = 20;
    c
}

fn stats(dir: &Path) -> String {
    fs::read_to_string(dir.join(STATS)).unwrap()
}

#[test]
fn evolve_writes_a_complete_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(TaskKind::FoodForaging, 7, 4);
    evolve_run(&cfg, dir.path(), &QUIET).unwrap();
    for f in ["manifest.json", "config.toml", STATS, CHECKPOINT] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    for k in ChampionKind::ALL {
        let rec = ChampionRecord::load(&dir.path().join(k.file_name())).unwrap();
        assert_eq!(rec.config, cfg);
    }
    let s = stats(dir.path());
    assert_eq!(s.lines().count(), 1 + 4);
    assert!(s.starts_with("generation,fitness_min,fitness_mean,fitness_max,acc_min,acc_mean,acc_max,eos_min,eos_mean,eos_max,species_count\n"));
    let echoed = RunConfig::merge_toml(&cfg, &fs::read_to_string(dir.path().join("config.toml")).unwrap()).unwrap();
    assert_eq!(echoed, cfg);
}

#[test]
fn desk_food_profile_has_thirty_generations() {
    let c = RunConfig::resolve(TaskKind::FoodForaging, Profile::Desk, None, Some(7)).unwrap();
    assert_eq!(c.evolution.generations, 30);
    assert_eq!(c.evolution.master_seed, 7);
    let c = RunConfig::resolve(TaskKind::LogicGate, Profile::Paper, None, None).unwrap();
    assert!(c.to_toml().contains("population_size = 100"));
    assert!(c.to_toml().contains("generations = 1000"));
}

#[test]
fn same_seed_gives_identical_stats_for_every_task() {
    for task in TaskKind::ALL {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        evolve_run(&tiny(task, 3, 3), a.path(), &QUIET).unwrap();
        evolve_run(&tiny(task, 3, 3), b.path(), &QUIET).unwrap();
        assert_eq!(stats(a.path()), stats(b.path()), "{task}");
    }
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let full = tempfile::tempdir().unwrap();
    evolve_run(&tiny(TaskKind::LogicGate, 5, 6), full.path(), &QUIET).unwrap();

    let split = tempfile::tempdir().unwrap();
    let mut first = tiny(TaskKind::LogicGate, 5, 6);
    first.checkpoint_every = 3;
    evolve_run(&first, split.path(), &QUIET).unwrap();
    let cp_path = split.path().join(CHECKPOINT);
    let mut cp: Checkpoint = serde_json::from_str(&fs::read_to_string(&cp_path).unwrap()).unwrap();
    assert_eq!(cp.evolution.generation, 6);

    // Rebuild the state at generation 3 by rerunning a 3-generation prefix.
    let prefix = tempfile::tempdir().unwrap();
    let mut short = tiny(TaskKind::LogicGate, 5, 3);
    short.checkpoint_every = 3;
    evolve_run(&short, prefix.path(), &QUIET).unwrap();
    let short_cp: Checkpoint =
        serde_json::from_str(&fs::read_to_string(prefix.path().join(CHECKPOINT)).unwrap()).unwrap();
    cp.evolution = short_cp.evolution;
    cp.evolution.config.generations = 6;
    fs::write(&cp_path, serde_json::to_string(&cp).unwrap()).unwrap();

    evolve_run(&first, split.path(), &RunOptions { resume: true, progress: false }).unwrap();
    assert_eq!(stats(split.path()), stats(full.path()));
}

#[test]
fn resume_rejects_a_different_config() {
    let dir = tempfile::tempdir().unwrap();
    evolve_run(&tiny(TaskKind::FoodForaging, 1, 2), dir.path(), &QUIET).unwrap();
    let err = evolve_run(&tiny(TaskKind::FoodForaging, 2, 2), dir.path(), &RunOptions { resume: true, progress: false });
    assert!(matches!(err, Err(CliError::Usage(_))));
}

fn champion(task: TaskKind) -> (tempfile::TempDir, ChampionRecord) {
    let dir = tempfile::tempdir().unwrap();
    evolve_run(&tiny(task, 9, 2), dir.path(), &QUIET).unwrap();
    let rec = ChampionRecord::load(&dir.path().join(ChampionKind::Accuracy.file_name())).unwrap();
    (dir, rec)
}

#[test]
fn classification_report_has_table_columns_and_average() {
    let (_d, rec) = champion(TaskKind::LogicGate);
    let evals = test_champion(&rec, 3, 0).unwrap();
    let csv = test_report_csv(&rec, &evals);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "sim,accuracy,eos_accuracy,input_order,environment_order");
    assert_eq!(lines.len(), 1 + 3 + 1);
    assert!(lines[4].starts_with("average,"));
    for e in &evals {
        let mut gates = e.condition_order.clone();
        gates.sort();
        assert_eq!(gates, ["AND", "NAND", "NOR", "OR"]);
    }
}

#[test]
fn cartpole_report_lists_steps_per_test_size() {
    let (_d, rec) = champion(TaskKind::CartPole);
    let evals = test_champion(&rec, 2, 0).unwrap();
    let csv = test_report_csv(&rec, &evals);
    assert_eq!(csv.lines().next().unwrap(), "sim,fitness,steps_0.4,steps_0.6,environment_order");
    assert_eq!(csv.lines().count(), 1 + 2 + 1);
}

#[test]
fn zero_sims_gives_header_only() {
    let (_d, rec) = champion(TaskKind::FoodForaging);
    let csv = test_report_csv(&rec, &test_champion(&rec, 0, 0).unwrap());
    assert_eq!(csv, "sim,accuracy,eos_accuracy,input_order,environment_order\n");
}

#[test]
fn test_seed_reproduces_reports() {
    let (_d, rec) = champion(TaskKind::FoodForaging);
    let a = test_report_csv(&rec, &test_champion(&rec, 3, 42).unwrap());
    let b = test_report_csv(&rec, &test_champion(&rec, 3, 42).unwrap());
    assert_eq!(a, b);
}

#[test]
fn arity_mismatch_names_expected_interface() {
    let (_d, mut rec) = champion(TaskKind::FoodForaging);
    rec.config.task = TaskKind::CartPole;
    let msg = test_champion(&rec, 1, 0).unwrap_err().to_string();
    assert!(msg.contains("expected 12 inputs / 2 outputs"), "{msg}");
}

#[test]
fn inspect_initial_genome_lists_six_nodes_and_eight_edges() {
    let (dir, mut rec) = champion(TaskKind::FoodForaging);
    rec.genome = init_genome(4, 2, &rec.config.evolution.genome, &mut rng_from(0, &[]));
    let path = dir.path().join("init.json");
    fs::write(&path, serde_json::to_string_pretty(&rec).unwrap()).unwrap();
    let (json, dot) = inspect(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 6);
    assert_eq!(v["edges"].as_array().unwrap().len(), 8);
    let out = &v["nodes"][4];
    for key in ["id", "kind", "neurotransmitter", "rule_kind", "bias", "rule_params"] {
        assert!(out.get(key).is_some(), "output node lacks {key}");
    }
    assert_eq!(fs::read_to_string(&dot).unwrap().matches(" -> ").count(), 8);
    assert_eq!(inspect(&path).unwrap().0, json);
}

#[test]
fn corrupt_champion_reports_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"format_version\": 1,\n  oops\n}").unwrap();
    match inspect(&path) {
        Err(CliError::Parse { line, offset, .. }) => {
            assert_eq!(line, 3);
            assert_eq!(offset, 27);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn export_curves_is_checked_and_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    evolve_run(&tiny(TaskKind::FoodForaging, 2, 5), dir.path(), &QUIET).unwrap();
    let files = export_curves(dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    let first: Vec<String> = files.iter().map(|f| fs::read_to_string(f).unwrap()).collect();
    for text in &first {
        assert_eq!(text.lines().count(), 1 + 5);
        for line in text.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert!(v[1] <= v[2] && v[2] <= v[3], "{line}");
        }
    }
    export_curves(dir.path()).unwrap();
    let again: Vec<String> = files.iter().map(|f| fs::read_to_string(f).unwrap()).collect();
    assert_eq!(first, again);
    assert!(dir.path().join(CURVES_DIR).is_dir());
}

#[test]
fn export_curves_without_stats_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(export_curves(dir.path()), Err(CliError::Usage(_))));
}
