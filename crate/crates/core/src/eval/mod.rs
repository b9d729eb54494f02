//! Evaluation: instance construction, the three scenarios driven over the
//! wire protocol, and the completion, traversal and exact-match metrics.

pub mod oracle_agent;
pub mod protocol;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::episode::{Episode, EpisodeError, Traversals, WorldConfig};
use crate::graph::SubtaskGraph;
use crate::hash::text_hash;
use crate::io::{EpisodeRecord, IoError, Provenance};
use crate::lang::{exact_match, instruction_text, Instruction, MatchScope};
use crate::mapgen::{generate_feasible, MapGenConfig, MapGenError};
use crate::oracle::{expert_step, rollout, OracleError, OracleRollout, PathCost, RolloutMode};
use crate::task::{GoalCategory, Task};
use crate::world::{Action, GridMap};
pub use protocol::{Agent, AgentError, DemoStep, Payload, ScenarioKind, StepMessage};

pub const DEMO_MAPS: u32 = 5;
pub const REPLICATION_MAPS: u32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    MapGen(#[from] MapGenError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error("prediction and gold lists differ in length ({predicted} vs {gold})")]
    LengthMismatch { predicted: usize, gold: usize },
}

/// One demonstration paired with one fresh map to replicate the task on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalInstance {
    pub task_text: String,
    pub task: Task,
    pub demo_index: u32,
    pub demo_map_seed: u64,
    pub demo: OracleRollout,
    pub replication_index: u32,
    pub replication_map_seed: u64,
    pub replication_map: GridMap,
}

impl EvalInstance {
    /// Stable key used to sort results.
    pub fn key(&self) -> (String, u32, u32) {
        (self.task_text.clone(), self.demo_index, self.replication_index)
    }
}

/// Five demonstration maps, each paired with three distinct replication maps.
pub fn build_eval_instances(
    graph: &SubtaskGraph,
    mapgen: &MapGenConfig,
    task: &Task,
    base_seed: u64,
) -> Result<Vec<EvalInstance>, EvalError> {
    let text = task.text(graph);
    let mut out = Vec::new();
    for d in 0..DEMO_MAPS {
        let (demo_map, demo_map_seed) =
            generate_feasible(graph, mapgen, task, text_hash(&format!("eval-demo:{base_seed}:{d}")))?;
        let demo = rollout(
            graph,
            demo_map.clone(),
            task,
            RolloutMode::Demonstration,
            WorldConfig::default(),
        )?;
        let mut r = 0;
        let mut salt = 0u32;
        while r < REPLICATION_MAPS {
            let seed = text_hash(&format!("eval-rep:{base_seed}:{d}:{r}:{salt}"));
            let (map, map_seed) = generate_feasible(graph, mapgen, task, seed)?;
            salt += 1;
            if map_seed == demo_map_seed || map == demo_map {
                continue;
            }
            out.push(EvalInstance {
                task_text: text.clone(),
                task: task.clone(),
                demo_index: d,
                demo_map_seed,
                demo: demo.clone(),
                replication_index: r,
                replication_map_seed: map_seed,
                replication_map: map,
            });
            r += 1;
            salt = 0;
        }
    }
    Ok(out)
}

/// The demonstration as the agent sees it: images, actions, rewards and
/// inventories only.
pub fn demo_steps(graph: &SubtaskGraph, demo: &OracleRollout) -> Result<Vec<DemoStep>, EvalError> {
    let record = EpisodeRecord::from_rollout(graph, demo, 0)?;
    Ok(record
        .transitions
        .into_iter()
        .map(|t| DemoStep {
            prev: t.prev,
            action: t.action,
            reward: t.reward,
            next: t.next,
            inventory: t.inventory,
        })
        .collect())
}

pub fn payload_for(graph: &SubtaskGraph, kind: ScenarioKind, instance: &EvalInstance) -> Result<Payload, EvalError> {
    Ok(match kind {
        ScenarioKind::Demonstration => Payload::Demonstration {
            demonstration: demo_steps(graph, &instance.demo)?,
        },
        ScenarioKind::Description => Payload::Description {
            description: instance.task_text.clone(),
        },
        ScenarioKind::Instruction => Payload::Instruction {},
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeFlag {
    ProtocolViolation,
    Timeout,
    AgentFailure,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub task: String,
    pub demo_index: u32,
    pub replication_index: u32,
    pub category: GoalCategory,
    pub constraint_category: String,
    pub scenario: ScenarioKind,
    pub completed: bool,
    pub outcome: Option<String>,
    pub steps: u16,
    pub traversals: Traversals,
    pub gold_description: String,
    pub predicted_description: Option<String>,
    /// Expert instruction at each step, when the expert has one.
    pub gold_instructions: Vec<Option<String>>,
    pub predicted_instructions: Vec<Option<String>>,
    pub flag: Option<EpisodeFlag>,
}

fn flag_of(e: &AgentError) -> EpisodeFlag {
    match e {
        AgentError::Timeout => EpisodeFlag::Timeout,
        AgentError::Protocol(_) => EpisodeFlag::ProtocolViolation,
        AgentError::Closed | AgentError::Failed(_) => EpisodeFlag::AgentFailure,
    }
}

/// Drive one episode on the replication map until termination or until the
/// agent misbehaves, which ends the episode incomplete and flagged.
pub fn run_episode(
    graph: &SubtaskGraph,
    kind: ScenarioKind,
    agent: &mut dyn Agent,
    instance: &EvalInstance,
    config: WorldConfig,
) -> Result<EpisodeResult, EvalError> {
    let mut episode = Episode::new(graph, instance.replication_map.clone(), instance.task.clone(), config)?;
    let mut result = EpisodeResult {
        task: instance.task_text.clone(),
        demo_index: instance.demo_index,
        replication_index: instance.replication_index,
        category: instance.task.goal.category(),
        constraint_category: instance.task.constraints.category(),
        scenario: kind,
        completed: false,
        outcome: None,
        steps: 0,
        traversals: Traversals::default(),
        gold_description: instance.task_text.clone(),
        predicted_description: None,
        gold_instructions: Vec::new(),
        predicted_instructions: Vec::new(),
        flag: None,
    };
    if let Err(e) = agent.handshake(&payload_for(graph, kind, instance)?) {
        result.flag = Some(flag_of(&e));
        return Ok(result);
    }
    let cost = PathCost::default();
    let mut reward = 0;
    while !episode.is_done() {
        let gold = expert_step(graph, &episode, RolloutMode::Expert, &cost).ok().map(|s| {
            instruction_text(
                graph,
                &Instruction {
                    target: s.item.instruction_target(),
                    constraints: instance.task.constraints,
                },
            )
        });
        let obs = episode.observe(graph);
        let msg = StepMessage {
            step: episode.step_count(),
            grid: obs.grid,
            inventory: obs.inventory,
            reward,
            instruction: if kind == ScenarioKind::Instruction {
                gold.clone()
            } else {
                None
            },
        };
        let reply = match agent.act(&msg) {
            Ok(r) => r,
            Err(e) => {
                result.flag = Some(flag_of(&e));
                break;
            }
        };
        let Some(action) = Action::from_name(&reply.action) else {
            result.flag = Some(EpisodeFlag::ProtocolViolation);
            break;
        };
        if reply.description.is_some() {
            result.predicted_description = reply.description;
        }
        result.gold_instructions.push(gold);
        result.predicted_instructions.push(reply.instruction);
        reward = episode.step(graph, action)?.reward;
    }
    result.outcome = episode.termination.map(|t| t.name().to_string());
    result.completed = result.flag.is_none() && episode.termination == Some(crate::episode::Termination::GoalComplete);
    result.steps = episode.step_count();
    result.traversals = episode.traversals;
    let _ = agent.end(result.outcome.clone(), result.steps);
    Ok(result)
}

/// Run every instance, fanning out over `workers` agents; results come back
/// in instance order regardless of scheduling.
pub fn run_eval<F>(
    graph: &SubtaskGraph,
    kind: ScenarioKind,
    instances: &[EvalInstance],
    workers: usize,
    make_agent: F,
) -> Result<Vec<EpisodeResult>, EvalError>
where
    F: Fn() -> Result<Box<dyn Agent>, AgentError> + Sync,
{
    let workers = workers.clamp(1, instances.len().max(1));
    let mut slots: Vec<Option<Result<EpisodeResult, EvalError>>> = (0..instances.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let make_agent = &make_agent;
                s.spawn(move || {
                    let mut agent = make_agent();
                    let mut out = Vec::new();
                    for i in (w..instances.len()).step_by(workers) {
                        let r = match agent.as_mut() {
                            Ok(a) => run_episode(graph, kind, a.as_mut(), &instances[i], WorldConfig::default()),
                            Err(e) => Ok(failed_result(kind, &instances[i], flag_of(e))),
                        };
                        out.push((i, r));
                    }
                    out
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("eval worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every slot filled")).collect()
}

fn failed_result(kind: ScenarioKind, instance: &EvalInstance, flag: EpisodeFlag) -> EpisodeResult {
    EpisodeResult {
        task: instance.task_text.clone(),
        demo_index: instance.demo_index,
        replication_index: instance.replication_index,
        category: instance.task.goal.category(),
        constraint_category: instance.task.constraints.category(),
        scenario: kind,
        completed: false,
        outcome: None,
        steps: 0,
        traversals: Traversals::default(),
        gold_description: instance.task_text.clone(),
        predicted_description: None,
        gold_instructions: Vec::new(),
        predicted_instructions: Vec::new(),
        flag: Some(flag),
    }
}

// ------------------------------------------------------------------ metrics

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraversalRow {
    pub episodes: usize,
    /// Mean entries onto reward terrain per episode.
    pub reward: f64,
    /// Mean entries onto penalty terrain per episode.
    pub penalty: f64,
}

/// Mean reward and penalty traversals, grouped by constraint category.
pub fn traversal_stats(results: &[EpisodeResult]) -> BTreeMap<String, TraversalRow> {
    let mut sums: BTreeMap<String, (usize, u64, u64)> = BTreeMap::new();
    for r in results {
        let e = sums.entry(r.constraint_category.clone()).or_default();
        e.0 += 1;
        e.1 += r.traversals.reward as u64;
        e.2 += r.traversals.penalty as u64;
    }
    sums.into_iter()
        .map(|(k, (n, rw, pn))| {
            (
                k,
                TraversalRow {
                    episodes: n,
                    reward: rw as f64 / n as f64,
                    penalty: pn as f64 / n as f64,
                },
            )
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriberEm {
    pub full: f64,
    pub goal: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstructorEm {
    /// Share of all steps whose predicted instruction matched.
    pub all: f64,
    /// Share of episodes whose final instruction matched.
    pub last: f64,
}

fn pct(hits: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * hits as f64 / n as f64
    }
}

/// Exact match of predicted against gold descriptions, whole text and
/// first sentence.
pub fn describer_em(predicted: &[String], gold: &[String]) -> Result<DescriberEm, EvalError> {
    if predicted.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            gold: gold.len(),
        });
    }
    let count = |scope| {
        predicted
            .iter()
            .zip(gold)
            .filter(|(p, g)| exact_match(p, g, scope))
            .count()
    };
    Ok(DescriberEm {
        full: pct(count(MatchScope::Full), gold.len()),
        goal: pct(count(MatchScope::GoalSentence), gold.len()),
    })
}

/// Exact match of per-step instruction predictions, pooled over steps and
/// on each episode's final step.
pub fn instructor_em(
    predicted: &[Vec<Option<String>>],
    gold: &[Vec<Option<String>>],
) -> Result<InstructorEm, EvalError> {
    if predicted.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            gold: gold.len(),
        });
    }
    let mut steps = 0;
    let mut step_hits = 0;
    let mut last_hits = 0;
    for (p, g) in predicted.iter().zip(gold) {
        if p.len() != g.len() {
            return Err(EvalError::LengthMismatch {
                predicted: p.len(),
                gold: g.len(),
            });
        }
        let same = |a: &Option<String>, b: &Option<String>| a.is_some() && a == b;
        steps += g.len();
        step_hits += p.iter().zip(g).filter(|(a, b)| same(a, b)).count();
        if let (Some(a), Some(b)) = (p.last(), g.last()) {
            last_hits += usize::from(same(a, b));
        }
    }
    Ok(InstructorEm {
        all: pct(step_hits, steps),
        last: pct(last_hits, gold.len()),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub episodes: usize,
    pub completed: usize,
    pub completion: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub scenario: ScenarioKind,
    pub episodes: usize,
    pub completion: f64,
    pub flagged: usize,
    pub by_category: BTreeMap<String, CategoryRow>,
    pub traversals: BTreeMap<String, TraversalRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub describer: Option<DescriberEm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instructor: Option<InstructorEm>,
}

/// Aggregate results after sorting them by instance key, so the report does
/// not depend on the order episodes finished in.
pub fn report(graph: &SubtaskGraph, kind: ScenarioKind, results: &[EpisodeResult]) -> EvalReport {
    let mut sorted: Vec<&EpisodeResult> = results.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.task, a.demo_index, a.replication_index).cmp(&(&b.task, b.demo_index, b.replication_index))
    });
    let mut by_category: BTreeMap<String, CategoryRow> = BTreeMap::new();
    for r in &sorted {
        let row = by_category.entry(r.category.name().to_string()).or_default();
        row.episodes += 1;
        row.completed += usize::from(r.completed);
    }
    for row in by_category.values_mut() {
        row.completion = pct(row.completed, row.episodes);
    }
    let completed = sorted.iter().filter(|r| r.completed).count();
    let owned: Vec<EpisodeResult> = sorted.iter().map(|r| (*r).clone()).collect();

    let described: Vec<&EpisodeResult> = sorted
        .iter()
        .copied()
        .filter(|r| r.predicted_description.is_some())
        .collect();
    let describer = (!described.is_empty()).then(|| {
        let p: Vec<String> = described
            .iter()
            .map(|r| r.predicted_description.clone().unwrap())
            .collect();
        let g: Vec<String> = described.iter().map(|r| r.gold_description.clone()).collect();
        describer_em(&p, &g).expect("aligned")
    });
    let instructed: Vec<&EpisodeResult> = sorted
        .iter()
        .copied()
        .filter(|r| r.predicted_instructions.iter().any(Option::is_some))
        .collect();
    let instructor = (!instructed.is_empty()).then(|| {
        let p: Vec<_> = instructed.iter().map(|r| r.predicted_instructions.clone()).collect();
        let g: Vec<_> = instructed.iter().map(|r| r.gold_instructions.clone()).collect();
        instructor_em(&p, &g).expect("aligned")
    });
    EvalReport {
        provenance: Provenance::of(graph),
        scenario: kind,
        episodes: sorted.len(),
        completion: pct(completed, sorted.len()),
        flagged: sorted.iter().filter(|r| r.flag.is_some()).count(),
        by_category,
        traversals: traversal_stats(&owned),
        describer,
        instructor,
    }
}
