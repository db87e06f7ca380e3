//! Champion replay, topology inspection and curve export.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nagi_core::genome::NodeKind;
use nagi_core::seed::derive_seed;
use nagi_core::task::Evaluation;
use nagi_core::{Genome, Mode, TaskKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::run::{ChampionRecord, STATS};

/// Runs `n_sims` test lifetimes of a champion. Simulation `i` uses seed
/// `derive_seed(seed, [i])` for its weights and orders.
pub fn test_champion(rec: &ChampionRecord, n_sims: usize, seed: u64) -> Result<Vec<Evaluation>> {
    let runner = rec.runner(Mode::Test);
    (0..n_sims)
        .map(|i| runner.evaluate_detailed(&rec.genome, derive_seed(seed, &[i as u64])).map_err(CliError::from))
        .collect()
}

/// Steps balanced at each test pole size, in `sizes` order.
pub fn steps_by_size(eval: &Evaluation, sizes: &[f64]) -> Vec<u64> {
    sizes
        .iter()
        .map(|&s| eval.report.condition_runs.iter().filter(|r| r.pole_size == s).map(|r| r.steps).sum())
        .collect()
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

/// Report CSV. Classification tasks get `sim, accuracy, eos_accuracy,
/// input_order, environment_order`; cart-pole gets `sim, fitness,
/// steps_<size>..., environment_order`. Non-empty reports end with an
/// `average` row.
pub fn test_report_csv(rec: &ChampionRecord, evals: &[Evaluation]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rec.config.task == TaskKind::CartPole {
        let sizes = &rec.config.environment.cartpole.schedule.test_sizes;
        let mut header = vec!["sim".to_string(), "fitness".to_string()];
        header.extend(sizes.iter().map(|s| format!("steps_{s}")));
        header.push("environment_order".into());
        w.write_record(&header).expect("in-memory write");
        for (i, e) in evals.iter().enumerate() {
            let mut row = vec![i.to_string(), format!("{:.4}", e.report.fitness)];
            row.extend(steps_by_size(e, sizes).iter().map(u64::to_string));
            row.push(e.condition_order.join(" "));
            w.write_record(&row).expect("in-memory write");
        }
        if !evals.is_empty() {
            let mut row = vec!["average".to_string(), format!("{:.4}", mean(evals.iter().map(|e| e.report.fitness)))];
            for k in 0..sizes.len() {
                row.push(format!("{:.1}", mean(evals.iter().map(|e| steps_by_size(e, sizes)[k] as f64))));
            }
            row.push(String::new());
            w.write_record(&row).expect("in-memory write");
        }
    } else {
        w.write_record(["sim", "accuracy", "eos_accuracy", "input_order", "environment_order"])
            .expect("in-memory write");
        for (i, e) in evals.iter().enumerate() {
            w.write_record([
                i.to_string(),
                format!("{:.4}", e.report.accuracy),
                format!("{:.4}", e.report.eos_accuracy),
                e.input_order.join(" "),
                e.condition_order.join(" "),
            ])
            .expect("in-memory write");
        }
        if !evals.is_empty() {
            w.write_record([
                "average".to_string(),
                format!("{:.4}", mean(evals.iter().map(|e| e.report.accuracy))),
                format!("{:.4}", mean(evals.iter().map(|e| e.report.eos_accuracy))),
                String::new(),
                String::new(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: u32,
    pub kind: NodeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neurotransmitter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule_params: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub innovation: u64,
    pub from: u32,
    pub to: u32,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub task: TaskKind,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

pub fn topology(task: TaskKind, g: &Genome) -> Topology {
    let nodes = g
        .nodes
        .iter()
        .map(|n| NodeRecord {
            id: n.id,
            kind: n.kind,
            neurotransmitter: n.loci.map(|l| label(&l.neurotransmitter)),
            rule_kind: n.loci.map(|l| label(&l.rule.kind)),
            bias: n.loci.map(|l| l.bias),
            rule_params: n.loci.map(|l| l.rule.params()),
        })
        .collect();
    let edges = g
        .connections
        .iter()
        .map(|c| EdgeRecord { innovation: c.innovation, from: c.from, to: c.to, enabled: c.enabled })
        .collect();
    Topology { task, nodes, edges }
}

/// Graphviz description: inputs on the left, outputs on the right,
/// inhibitory neurons drawn as boxes, disabled connections dashed.
pub fn to_dot(t: &Topology) -> String {
    let mut s = String::from("digraph champion {\n  rankdir=LR;\n");
    for (kind, rank) in [(NodeKind::Input, "source"), (NodeKind::Output, "sink")] {
        let ids: Vec<String> = t.nodes.iter().filter(|n| n.kind == kind).map(|n| format!("n{}", n.id)).collect();
        let _ = writeln!(s, "  {{ rank={rank}; {}; }}", ids.join("; "));
    }
    for n in &t.nodes {
        let shape = match n.neurotransmitter.as_deref() {
            Some("inhibitory") => "box",
            _ => "ellipse",
        };
        let mut lbl = format!("{:?} {}", n.kind, n.id);
        if let Some(r) = &n.rule_kind {
            lbl.push_str(&format!("\\n{r}"));
        }
        if n.bias == Some(true) {
            lbl.push_str("\\nbias");
        }
        let _ = writeln!(s, "  n{} [label=\"{lbl}\", shape={shape}];", n.id);
    }
    for e in &t.edges {
        let style = if e.enabled { "solid" } else { "dashed" };
        let _ = writeln!(s, "  n{} -> n{} [label=\"{}\", style={style}];", e.from, e.to, e.innovation);
    }
    s.push_str("}\n");
    s
}

/// Writes the `.dot` file next to the champion and returns the JSON
/// topology document.
pub fn inspect(path: &Path) -> Result<(String, PathBuf)> {
    let rec = ChampionRecord::load(path)?;
    let topo = topology(rec.config.task, &rec.genome);
    let dot_path = path.with_extension("dot");
    fs::write(&dot_path, to_dot(&topo)).map_err(|e| CliError::io(&dot_path, e))?;
    Ok((serde_json::to_string_pretty(&topo).expect("serializes") + "\n", dot_path))
}

#[derive(Debug, Deserialize)]
struct StatsRow {
    generation: usize,
    fitness_min: f64,
    fitness_mean: f64,
    fitness_max: f64,
    acc_min: f64,
    acc_mean: f64,
    acc_max: f64,
    eos_min: f64,
    eos_mean: f64,
    eos_max: f64,
}

type MetricFn = fn(&StatsRow) -> (f64, f64, f64);

pub const CURVES_DIR: &str = "curves";
pub const CURVE_FILES: [&str; 3] = ["fitness.csv", "accuracy.csv", "eos_accuracy.csv"];

/// Splits `stats.csv` into one `generation,min,mean,max` file per metric
/// under `<run-dir>/curves/`.
pub fn export_curves(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let stats = run_dir.join(STATS);
    if !stats.is_file() {
        return Err(CliError::Usage(format!("{}: no {STATS} found; is this a run directory?", run_dir.display())));
    }
    let mut reader = csv::Reader::from_path(&stats).map_err(|e| CliError::Csv { path: stats.clone(), source: e })?;
    let rows: Vec<StatsRow> = reader
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Csv { path: stats.clone(), source: e })?;
    let out_dir = run_dir.join(CURVES_DIR);
    fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
    let metrics: [MetricFn; 3] = [
        |r| (r.fitness_min, r.fitness_mean, r.fitness_max),
        |r| (r.acc_min, r.acc_mean, r.acc_max),
        |r| (r.eos_min, r.eos_mean, r.eos_max),
    ];
    let mut written = Vec::new();
    for (name, get) in CURVE_FILES.iter().zip(metrics) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["generation", "min", "mean", "max"]).expect("in-memory write");
        for r in &rows {
            let (min, mean, max) = get(r);
            if !(min <= mean && mean <= max) {
                return Err(CliError::Usage(format!(
                    "{}: generation {} has {name} min {min}, mean {mean}, max {max} out of order",
                    stats.display(),
                    r.generation
                )));
            }
            w.write_record([r.generation.to_string(), min.to_string(), mean.to_string(), max.to_string()])
                .expect("in-memory write");
        }
        let path = out_dir.join(name);
        fs::write(&path, w.into_inner().expect("in-memory flush")).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
