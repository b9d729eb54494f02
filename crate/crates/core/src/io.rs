//! File formats: map files, episode records and line-delimited datasets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use crate::episode::{Episode, EpisodeError, Termination, Traversals, WorldConfig};
use crate::graph::SubtaskGraph;
use crate::hash::text_hash;
use crate::lang::{instruction_log_text, instruction_text, parse_description};
use crate::mapgen::{generate_feasible, MapGenConfig, MapGenError};
use crate::oracle::{rollout, OracleError, OracleRollout, RolloutMode};
use crate::task::Task;
use crate::world::{reconstruct_map, Action, GridMap, ObsError, Observation};

pub const SCHEMA_VERSION: u32 = 1;
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance stamped on every exported artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub schema: u32,
    pub engine_version: String,
    pub config_hash: u64,
}

impl Provenance {
    pub fn of(graph: &SubtaskGraph) -> Self {
        Provenance {
            schema: SCHEMA_VERSION,
            engine_version: ENGINE_VERSION.to_string(),
            config_hash: graph.fingerprint(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record on line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("schema {found} is not supported (expected {expected})")]
    Schema { found: u32, expected: u32 },
    #[error("record was produced by a different subtask graph ({found:#x})")]
    ConfigMismatch { found: u64 },
    #[error("bad map: {0}")]
    Map(#[from] ObsError),
    #[error("unparseable task text: {0}")]
    Task(String),
    #[error("unknown action {0:?}")]
    Action(String),
    #[error("replay diverged at step {step}: {field}")]
    Divergence { step: usize, field: &'static str },
    #[error(transparent)]
    Episode(#[from] EpisodeError),
}

/// A single map on disk, in observation layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapFile {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub seed: u64,
    pub grid: Vec<Vec<[u8; 3]>>,
}

impl MapFile {
    pub fn new(graph: &SubtaskGraph, map: &GridMap, seed: u64) -> Self {
        MapFile {
            provenance: Provenance::of(graph),
            seed,
            grid: grid_of(map),
        }
    }

    pub fn map(&self) -> Result<GridMap, IoError> {
        check_schema(self.provenance.schema)?;
        map_of(&self.grid)
    }
}

fn grid_of(map: &GridMap) -> Vec<Vec<[u8; 3]>> {
    crate::world::observe_map(map, String::new()).grid
}

fn map_of(grid: &[Vec<[u8; 3]>]) -> Result<GridMap, IoError> {
    Ok(reconstruct_map(&Observation {
        grid: grid.to_vec(),
        inventory: String::new(),
    })?)
}

fn check_schema(found: u32) -> Result<(), IoError> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(IoError::Schema {
            found,
            expected: SCHEMA_VERSION,
        })
    }
}

/// Previous image, action, reward, resulting image and inventory, plus the
/// oracle instruction in force.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub prev: Vec<Vec<[u8; 3]>>,
    pub action: String,
    pub reward: i32,
    pub next: Vec<Vec<[u8; 3]>>,
    pub inventory: String,
    pub instruction: String,
    /// Phrase of the subtask completed by this step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completed: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub task: String,
    pub goal_id: u64,
    pub map_seed: u64,
    pub initial: Vec<Vec<[u8; 3]>>,
    /// Equals `transitions.len()`.
    pub length: usize,
    pub transitions: Vec<Transition>,
    /// The gold description; identical to `task` for oracle demonstrations.
    pub description: String,
    /// One log-form instruction per span, without constraint suffixes.
    pub instruction_log: Vec<String>,
    pub outcome: Option<Termination>,
    pub total_reward: i64,
    pub traversals: Traversals,
}

impl EpisodeRecord {
    /// Build a record by stepping the rollout's actions afresh.
    pub fn from_rollout(graph: &SubtaskGraph, r: &OracleRollout, map_seed: u64) -> Result<Self, IoError> {
        let mut episode = Episode::new(graph, r.initial_map.clone(), r.task.clone(), WorldConfig::default())?;
        let mut transitions = Vec::with_capacity(r.len());
        for (action, ins) in r.actions.iter().zip(&r.step_instructions) {
            let prev = grid_of(&episode.world.map);
            let step = episode.step(graph, *action)?;
            let obs = episode.observe(graph);
            transitions.push(Transition {
                prev,
                action: action.name().to_string(),
                reward: step.reward,
                next: obs.grid,
                inventory: obs.inventory,
                instruction: instruction_text(graph, ins),
                completed: step.completed.map(|s| graph.phrase(s).to_string()),
            });
        }
        let text = r.task.text(graph);
        Ok(EpisodeRecord {
            provenance: Provenance::of(graph),
            goal_id: text_hash(&r.task.goal.text(graph)),
            task: text.clone(),
            map_seed,
            initial: grid_of(&r.initial_map),
            length: transitions.len(),
            transitions,
            description: text,
            instruction_log: r
                .instructions
                .iter()
                .map(|s| instruction_log_text(graph, &s.instruction, false))
                .collect(),
            outcome: episode.termination,
            total_reward: episode.total_reward,
            traversals: episode.traversals,
        })
    }

    /// Copy keeping only the last `n` transitions.
    pub fn truncated(&self, n: usize) -> EpisodeRecord {
        let mut out = self.clone();
        let skip = out.transitions.len().saturating_sub(n);
        out.transitions.drain(..skip);
        out.length = out.transitions.len();
        out
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serialises")
    }
}

/// Re-run a record from its initial map; every reward, image and inventory
/// must match. Returns the final episode state.
pub fn replay(graph: &SubtaskGraph, record: &EpisodeRecord) -> Result<Episode, IoError> {
    check_schema(record.provenance.schema)?;
    if record.provenance.config_hash != graph.fingerprint() {
        return Err(IoError::ConfigMismatch {
            found: record.provenance.config_hash,
        });
    }
    let task: Task = parse_description(graph, &record.task).map_err(|e| IoError::Task(e.to_string()))?;
    let mut episode = Episode::new(graph, map_of(&record.initial)?, task, WorldConfig::default())?;
    for (i, t) in record.transitions.iter().enumerate() {
        let diverged = |field| IoError::Divergence { step: i, field };
        let action = Action::from_name(&t.action).ok_or_else(|| IoError::Action(t.action.clone()))?;
        if grid_of(&episode.world.map) != t.prev {
            return Err(diverged("prev"));
        }
        let step = episode.step(graph, action).map_err(|_| diverged("termination"))?;
        let obs = episode.observe(graph);
        if step.reward != t.reward {
            return Err(diverged("reward"));
        }
        if obs.grid != t.next {
            return Err(diverged("next"));
        }
        if obs.inventory != t.inventory {
            return Err(diverged("inventory"));
        }
        if step.completed.map(|s| graph.phrase(s).to_string()) != t.completed {
            return Err(diverged("completed"));
        }
    }
    let n = record.transitions.len();
    if episode.termination != record.outcome {
        return Err(IoError::Divergence {
            step: n,
            field: "outcome",
        });
    }
    if episode.total_reward != record.total_reward {
        return Err(IoError::Divergence {
            step: n,
            field: "total_reward",
        });
    }
    Ok(episode)
}

/// Why a task produced no record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Skipped {
    pub task: String,
    pub demo: u32,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct Dataset {
    pub records: Vec<EpisodeRecord>,
    pub skipped: Vec<Skipped>,
}

/// Map seed base for the `demo`-th demonstration under a dataset seed.
pub fn demo_seed(seed: u64, demo: u32) -> u64 {
    text_hash(&format!("demo:{seed}:{demo}"))
}

#[derive(Debug, thiserror::Error)]
enum DemoError {
    #[error(transparent)]
    MapGen(#[from] MapGenError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("demonstration did not complete")]
    Incomplete,
}

fn one_demo(graph: &SubtaskGraph, mapgen: &MapGenConfig, task: &Task, seed: u64) -> Result<EpisodeRecord, DemoError> {
    let (map, map_seed) = generate_feasible(graph, mapgen, task, seed)?;
    let r = rollout(graph, map, task, RolloutMode::Demonstration, WorldConfig::default())?;
    if !r.completed() {
        return Err(DemoError::Incomplete);
    }
    Ok(EpisodeRecord::from_rollout(graph, &r, map_seed)?)
}

/// One oracle demonstration record per (task, demo index), in input order.
pub fn export_dataset(
    graph: &SubtaskGraph,
    mapgen: &MapGenConfig,
    tasks: &[String],
    demos_per_task: u32,
    seed: u64,
) -> Dataset {
    let jobs: Vec<(usize, u32)> = (0..tasks.len())
        .flat_map(|t| (0..demos_per_task).map(move |d| (t, d)))
        .collect();
    let results: Vec<Result<EpisodeRecord, Skipped>> = jobs
        .par_iter()
        .map(|&(ti, demo)| {
            let text = &tasks[ti];
            let skip = |reason: String| Skipped {
                task: text.clone(),
                demo,
                reason,
            };
            let task = parse_description(graph, text).map_err(|e| skip(e.to_string()))?;
            one_demo(graph, mapgen, &task, demo_seed(seed, demo)).map_err(|e| skip(e.to_string()))
        })
        .collect();
    let mut out = Dataset::default();
    for r in results {
        match r {
            Ok(rec) => out.records.push(rec),
            Err(s) => out.skipped.push(s),
        }
    }
    out
}

pub fn write_jsonl<W: Write>(mut w: W, records: &[EpisodeRecord]) -> Result<(), IoError> {
    for r in records {
        writeln!(w, "{}", r.to_line())?;
    }
    Ok(())
}

/// Streaming reader over a line-delimited record file.
pub fn read_jsonl<R: BufRead>(r: R) -> impl Iterator<Item = Result<EpisodeRecord, IoError>> {
    r.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(IoError::Io(e))),
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(
            serde_json::from_str::<EpisodeRecord>(&l)
                .map_err(|source| IoError::Json { line: i + 1, source })
                .and_then(|rec| check_schema(rec.provenance.schema).map(|_| rec)),
        ),
    })
}
