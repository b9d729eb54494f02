//! Scripted expert: plans the necessary subtasks, picks the next one by
//! canonical rank, and walks to it along terrain-weighted shortest paths.
//!
//! The plan is recomputed from the episode state on every query, so the
//! expert can resume from any state an agent leaves it in.

pub mod nav;

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::episode::{Episode, EpisodeError, StepResult, Termination, Traversals, WorldConfig};
use crate::graph::{Location, ObjectId, SubtaskGraph, SubtaskId, SubtaskKind};
use crate::lang::{Instruction, InstructionTarget};
use crate::task::{achievable_subtasks, atom_satisfied, goal_attainable, EndGoal, GoalAtom, Task};
use crate::world::{Action, GridMap, Pos, Terrain, WorldState};
pub use nav::{NavError, PathCost};

/// One entry of the expert's to-do list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanItem {
    Do {
        subtask: SubtaskId,
    },
    OnTerrain {
        subtask: SubtaskId,
        dest: Terrain,
    },
    OnEmptyCell {
        subtask: SubtaskId,
    },
    Cover {
        subtask: SubtaskId,
        target: Terrain,
    },
    Clear {
        subtask: SubtaskId,
        object: ObjectId,
    },
    /// Gather an object standing on a cell of `dest` to free it for a build.
    FreeCell {
        subtask: SubtaskId,
        dest: Terrain,
    },
    GoTo {
        object: ObjectId,
    },
}

impl PlanItem {
    pub fn subtask(&self) -> Option<SubtaskId> {
        match *self {
            PlanItem::Do { subtask }
            | PlanItem::OnTerrain { subtask, .. }
            | PlanItem::OnEmptyCell { subtask }
            | PlanItem::Cover { subtask, .. }
            | PlanItem::Clear { subtask, .. }
            | PlanItem::FreeCell { subtask, .. } => Some(subtask),
            PlanItem::GoTo { .. } => None,
        }
    }

    pub fn instruction_target(&self) -> InstructionTarget {
        match *self {
            PlanItem::Do { subtask } | PlanItem::Clear { subtask, .. } | PlanItem::FreeCell { subtask, .. } => {
                InstructionTarget::Do { subtask }
            }
            PlanItem::OnTerrain { subtask, dest } => InstructionTarget::OnTerrain { subtask, dest },
            PlanItem::OnEmptyCell { subtask } => InstructionTarget::OnEmptyCell { subtask },
            PlanItem::Cover { subtask, target } => InstructionTarget::Cover { subtask, target },
            PlanItem::GoTo { object } => InstructionTarget::GoTo { object },
        }
    }

    pub fn from_instruction(target: InstructionTarget) -> PlanItem {
        match target {
            InstructionTarget::Do { subtask } => PlanItem::Do { subtask },
            InstructionTarget::OnTerrain { subtask, dest } => PlanItem::OnTerrain { subtask, dest },
            InstructionTarget::OnEmptyCell { subtask } => PlanItem::OnEmptyCell { subtask },
            InstructionTarget::Cover { subtask, target } => PlanItem::Cover { subtask, target },
            InstructionTarget::GoTo { object } => PlanItem::GoTo { object },
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("episode already terminated")]
    Terminated,
    #[error("goal is unattainable")]
    Unattainable,
    #[error("no eligible plan item among {0} remaining")]
    Deadlock(usize),
    #[error("plan is empty but the goal is not satisfied")]
    EmptyPlan,
    #[error("plan item target unreachable")]
    Unreachable,
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error("rollout did not complete the task ({0:?})")]
    Incomplete(Option<Termination>),
}

/// Necessary work remaining for `goal` in the current state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub items: Vec<PlanItem>,
}

fn free_cells(map: &GridMap) -> Vec<Pos> {
    map.interior().filter(|p| map.cell(*p).object.is_none()).collect()
}

/// Free cells, preferring those without terrain.
fn plain_cells(map: &GridMap) -> Vec<Pos> {
    let free = free_cells(map);
    let bare: Vec<Pos> = free
        .iter()
        .copied()
        .filter(|p| map.cell(*p).terrain.is_none())
        .collect();
    if bare.is_empty() {
        free
    } else {
        bare
    }
}

/// Cells where the item can be carried out. Shared by the expert and by
/// instruction executors.
pub fn item_targets(graph: &SubtaskGraph, map: &GridMap, item: &PlanItem) -> Vec<Pos> {
    match *item {
        PlanItem::Do { subtask } => match graph.spec(subtask).location {
            Location::AtObject(o) => map.positions_with_object(o),
            Location::EmptyCell => plain_cells(map),
            Location::AnyCell => {
                let cells = plain_cells(map);
                if cells.is_empty() {
                    map.interior().collect()
                } else {
                    cells
                }
            }
        },
        PlanItem::OnTerrain { subtask, dest } => {
            let needs_free = graph.spec(subtask).location == Location::EmptyCell;
            map.interior()
                .filter(|p| {
                    let c = map.cell(*p);
                    c.terrain == Some(dest) && (!needs_free || c.object.is_none())
                })
                .collect()
        }
        PlanItem::OnEmptyCell { .. } => plain_cells(map),
        PlanItem::Cover { target, .. } => map.positions_with_terrain(target),
        PlanItem::Clear { object, .. } => map.positions_with_object(object),
        PlanItem::FreeCell { subtask, dest } => map
            .interior()
            .filter(|p| {
                let c = map.cell(*p);
                c.terrain == Some(dest) && c.object.is_some_and(|o| graph.gather_for_object(o) == Some(subtask))
            })
            .collect(),
        PlanItem::GoTo { object } => map
            .interior()
            .filter(|p| map.cell(*p).object.is_some_and(|o| graph.is_landmark(o, object)))
            .collect(),
    }
}

/// Gathers that would free a cell of `dest`, cheapest rank first; only the
/// first one that is still achievable is planned.
fn blocking_gathers(graph: &SubtaskGraph, world: &WorldState, dest: Terrain) -> Option<PlanItem> {
    let achievable = achievable_subtasks(graph, world);
    world
        .map
        .positions_with_terrain(dest)
        .iter()
        .filter_map(|p| world.map.cell(*p).object)
        .filter_map(|o| graph.gather_for_object(o))
        .filter(|g| achievable[g.0 as usize])
        .min_by_key(|g| (graph.rank(*g), *g))
        .map(|subtask| PlanItem::FreeCell { subtask, dest })
}

pub fn plan(graph: &SubtaskGraph, world: &WorldState, goal: &EndGoal) -> Plan {
    let mut items: Vec<PlanItem> = Vec::new();
    let map = &world.map;
    for atom in goal.atoms() {
        if atom_satisfied(world, &atom) {
            continue;
        }
        match atom {
            GoalAtom::Subtask { subtask } => items.push(PlanItem::Do { subtask }),
            GoalAtom::OnTerrain { subtask, dest } => {
                let item = PlanItem::OnTerrain { subtask, dest };
                items.push(item);
                let is_build = graph.spec(subtask).kind == SubtaskKind::Build;
                if is_build && item_targets(graph, map, &item).is_empty() {
                    if let Some(place) = graph.place_for_terrain(dest) {
                        items.push(PlanItem::OnEmptyCell { subtask: place });
                    } else {
                        items.extend(blocking_gathers(graph, world, dest));
                    }
                }
            }
            GoalAtom::Cover { subtask, target } => items.push(PlanItem::Cover { subtask, target }),
        }
    }
    if let EndGoal::ClearItems { objects } = goal {
        for o in objects {
            if map.count_object(*o) > 0 {
                if let Some(subtask) = graph.gather_for_object(*o) {
                    items.push(PlanItem::Clear { subtask, object: *o });
                }
            }
        }
    }

    let roots: Vec<SubtaskId> = items.iter().filter_map(PlanItem::subtask).collect();
    let achievable = achievable_subtasks(graph, world);
    let closure: BTreeSet<SubtaskId> = graph.closure_with(&roots, |_, groups| {
        groups
            .iter()
            .find(|g| g.iter().all(|s| achievable[s.0 as usize]))
            .or_else(|| groups.first())
            .cloned()
            .unwrap_or_default()
    });
    let named: BTreeSet<SubtaskId> = roots.iter().copied().collect();
    for s in closure {
        if !world.ledger.is_done(s) && !named.contains(&s) {
            items.push(PlanItem::Do { subtask: s });
        }
    }
    if let Some(landmark) = goal.landmark() {
        items.push(PlanItem::GoTo { object: landmark });
    }
    Plan { items }
}

fn item_eligible(graph: &SubtaskGraph, world: &WorldState, plan: &Plan, item: &PlanItem) -> bool {
    match item.subtask() {
        None => plan.items.len() == 1,
        Some(s) => {
            graph.is_eligible(s, &world.ledger, &world.inventory) && !item_targets(graph, &world.map, item).is_empty()
        }
    }
}

/// Eligible plan item with the smallest canonical rank.
pub fn next_item(graph: &SubtaskGraph, world: &WorldState, plan: &Plan) -> Result<PlanItem, OracleError> {
    if plan.items.is_empty() {
        return Err(OracleError::EmptyPlan);
    }
    plan.items
        .iter()
        .filter(|i| item_eligible(graph, world, plan, i))
        .min_by_key(|i| (i.subtask().map_or(u16::MAX, |s| graph.rank(s)), **i))
        .copied()
        .ok_or(OracleError::Deadlock(plan.items.len()))
}

/// Next subtask the expert would work on, if the next item is not a pure
/// navigation.
pub fn next_subtask(
    graph: &SubtaskGraph,
    world: &WorldState,
    goal: &EndGoal,
) -> Result<Option<SubtaskId>, OracleError> {
    let p = plan(graph, world, goal);
    Ok(next_item(graph, world, &p)?.subtask())
}

/// Action that carries out `item` from the current state: walk to the
/// nearest target, then perform the subtask's action(s).
pub fn action_for_item(
    graph: &SubtaskGraph,
    world: &WorldState,
    constraints: &crate::task::ConstraintSet,
    cost: &PathCost,
    item: &PlanItem,
) -> Result<Action, OracleError> {
    let targets = item_targets(graph, &world.map, item);
    let here = world.map.agent;
    if targets.contains(&here) {
        if let Some(s) = item.subtask() {
            let actions = &graph.spec(s).actions;
            return Ok(if actions.len() == 2 && world.pending == Some(actions[0]) {
                actions[1]
            } else {
                actions[0]
            });
        }
    }
    nav::next_move(&world.map, constraints, cost, &targets, &[]).ok_or(OracleError::Unreachable)
}

fn landmark_cells(graph: &SubtaskGraph, map: &GridMap, goal: &EndGoal) -> Vec<Pos> {
    match goal.landmark() {
        Some(object) => item_targets(graph, map, &PlanItem::GoTo { object }),
        None => vec![],
    }
}

/// Detour move towards the nearest natural terrain not yet entered.
fn coverage_move(graph: &SubtaskGraph, episode: &Episode, cost: &PathCost) -> Option<Action> {
    let map = &episode.world.map;
    let constraints = &episode.task.constraints;
    let blocked = landmark_cells(graph, map, &episode.task.goal);
    let targets: Vec<Pos> = episode
        .unvisited_terrains()
        .iter()
        .flat_map(|t| map.positions_with_terrain(*t))
        .filter(|p| !blocked.contains(p))
        .collect();
    if targets.is_empty() {
        return None;
    }
    if targets.contains(&map.agent) {
        // Step off so the cell can be entered.
        return map
            .neighbours(map.agent)
            .filter(|q| !blocked.contains(q))
            .min_by_key(|q| (cost.enter(map, constraints, *q), *q))
            .map(|q| nav::direction_to(map.agent, q));
    }
    nav::next_move(map, constraints, cost, &targets, &blocked)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutMode {
    Expert,
    Demonstration,
}

/// Expert decision for one step, with the instruction it is following.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExpertStep {
    pub action: Action,
    pub item: PlanItem,
}

pub fn expert_step(
    graph: &SubtaskGraph,
    episode: &Episode,
    mode: RolloutMode,
    cost: &PathCost,
) -> Result<ExpertStep, OracleError> {
    if episode.is_done() {
        return Err(OracleError::Terminated);
    }
    let world = &episode.world;
    let goal = &episode.task.goal;
    if !goal_attainable(graph, world, goal) {
        return Err(OracleError::Unattainable);
    }
    let p = plan(graph, world, goal);
    let item = next_item(graph, world, &p)?;
    if mode == RolloutMode::Demonstration {
        if let Some(action) = coverage_move(graph, episode, cost) {
            return Ok(ExpertStep { action, item });
        }
    }
    let action = action_for_item(graph, world, &episode.task.constraints, cost, &item)?;
    Ok(ExpertStep { action, item })
}

pub fn expert_action(graph: &SubtaskGraph, episode: &Episode) -> Result<Action, OracleError> {
    Ok(expert_step(graph, episode, RolloutMode::Expert, &PathCost::default())?.action)
}

/// A contiguous run of steps spent on one instruction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionSpan {
    pub instruction: Instruction,
    pub start: u16,
    pub steps: u16,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleRollout {
    pub initial_map: GridMap,
    pub task: Task,
    pub actions: Vec<Action>,
    pub rewards: Vec<i32>,
    /// Instruction in force at each step.
    pub step_instructions: Vec<Instruction>,
    pub instructions: Vec<InstructionSpan>,
    pub termination: Option<Termination>,
    pub total_reward: i64,
    pub traversals: Traversals,
    pub completed_subtasks: Vec<SubtaskId>,
}

impl OracleRollout {
    pub fn completed(&self) -> bool {
        self.termination == Some(Termination::GoalComplete)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Group per-step instructions into spans; a completion always closes the
/// current span.
fn spans(step_instructions: &[Instruction], completions: &[bool]) -> Vec<InstructionSpan> {
    let mut out: Vec<InstructionSpan> = Vec::new();
    for (t, ins) in step_instructions.iter().enumerate() {
        let fresh = match out.last() {
            None => true,
            Some(last) => last.instruction != *ins || completions[t - 1],
        };
        if fresh {
            out.push(InstructionSpan {
                instruction: *ins,
                start: t as u16,
                steps: 1,
            });
        } else if let Some(last) = out.last_mut() {
            last.steps += 1;
        }
    }
    out
}

/// Run the expert from a fresh episode until termination.
pub fn rollout(
    graph: &SubtaskGraph,
    map: GridMap,
    task: &Task,
    mode: RolloutMode,
    config: WorldConfig,
) -> Result<OracleRollout, OracleError> {
    rollout_with(graph, map, task, mode, config, &PathCost::default())
}

pub fn rollout_with(
    graph: &SubtaskGraph,
    map: GridMap,
    task: &Task,
    mode: RolloutMode,
    config: WorldConfig,
    cost: &PathCost,
) -> Result<OracleRollout, OracleError> {
    let mut episode = Episode::new(graph, map.clone(), task.clone(), config)?;
    let mut actions = Vec::new();
    let mut rewards = Vec::new();
    let mut step_instructions = Vec::new();
    let mut completions = Vec::new();
    while !episode.is_done() {
        let step = expert_step(graph, &episode, mode, cost)?;
        let StepResult { reward, completed, .. } = episode.step(graph, step.action)?;
        actions.push(step.action);
        rewards.push(reward);
        step_instructions.push(Instruction {
            target: step.item.instruction_target(),
            constraints: task.constraints,
        });
        completions.push(completed.is_some());
    }
    Ok(OracleRollout {
        initial_map: map,
        task: task.clone(),
        instructions: spans(&step_instructions, &completions),
        actions,
        rewards,
        step_instructions,
        termination: episode.termination,
        total_reward: episode.total_reward,
        traversals: episode.traversals,
        completed_subtasks: episode.world.ledger.events().iter().map(|e| e.subtask).collect(),
    })
}
