//! The expert packaged as a protocol agent. It sees only what the wire
//! protocol carries and keeps its own replica of the world by replaying its
//! actions, resynchronising from observations if the replica drifts.

use std::collections::HashSet;
use std::sync::Arc;

use super::protocol::{ActReply, DemoStep, Payload, Policy, StepMessage};
use crate::episode::WorldConfig;
use crate::graph::SubtaskGraph;
use crate::lang::{instruction_text, parse_description, parse_instruction, Instruction};
use crate::oracle::{action_for_item, next_item, plan, rollout, PathCost, PlanItem, RolloutMode};
use crate::task::{goal_satisfied, ConstraintSet, Task, TaskUniverse, TerrainRole};
use crate::world::{parse_inventory, reconstruct_map, Action, GridMap, Observation, Terrain, WorldState};

/// Fallback when no sensible move exists; it never changes the world.
pub const IDLE: Action = Action::Place4;

fn observation_map(grid: &[Vec<[u8; 3]>]) -> Option<GridMap> {
    reconstruct_map(&Observation {
        grid: grid.to_vec(),
        inventory: String::new(),
    })
    .ok()
}

fn arm(map: &mut GridMap, constraints: &ConstraintSet) {
    let cells: Vec<_> = map.interior().collect();
    for p in cells {
        let cell = map.cell_mut(p);
        cell.reward_armed = cell.terrain.is_some_and(|t| constraints.role(t) == TerrainRole::Reward);
    }
}

/// Apply an action to a replica, disarming a reward cell on entry.
fn advance(graph: &SubtaskGraph, world: &mut WorldState, action: Action) {
    if let Some(p) = world.apply(graph, action).entered {
        world.map.cell_mut(p).reward_armed = false;
    }
}

/// Terrain roles revealed by the rewards of a demonstration.
fn role_evidence(graph: &SubtaskGraph, demo: &[DemoStep], map: &GridMap) -> [Option<TerrainRole>; 3] {
    let config = WorldConfig::default();
    let mut world = WorldState::new(map.clone());
    let mut seen = HashSet::new();
    let mut evidence = [None; 3];
    for step in demo {
        let Some(action) = Action::from_name(&step.action) else {
            break;
        };
        let outcome = world.apply(graph, action);
        let Some(p) = outcome.entered else { continue };
        let first = seen.insert(p);
        let Some(i) = world.map.cell(p).terrain.and_then(Terrain::natural_index) else {
            continue;
        };
        let extra = step.reward - config.step_penalty;
        if extra == config.terrain_penalty {
            evidence[i] = Some(TerrainRole::Penalty);
        } else if extra == config.terrain_reward {
            evidence[i] = Some(TerrainRole::Reward);
        } else if first && evidence[i].is_none() {
            evidence[i] = Some(TerrainRole::Neutral);
        }
    }
    evidence
}

fn consistent(c: &ConstraintSet, evidence: &[Option<TerrainRole>; 3]) -> bool {
    evidence.iter().zip(c.roles).all(|(e, r)| e.is_none_or(|e| e == r))
}

/// Identify the demonstrated task: keep goals that became satisfied on the
/// final step, constraint sets consistent with the rewards, then rerun the
/// expert on the demonstration map and keep the first exact action match.
pub fn infer_task(graph: &SubtaskGraph, universe: &TaskUniverse, demo: &[DemoStep]) -> Option<Task> {
    let map = observation_map(&demo.first()?.prev)?;
    let actions: Vec<Action> = demo
        .iter()
        .map(|s| Action::from_name(&s.action))
        .collect::<Option<_>>()?;
    let mut world = WorldState::new(map.clone());
    for a in &actions[..actions.len() - 1] {
        world.apply(graph, *a);
    }
    let before = world.clone();
    world.apply(graph, *actions.last()?);
    let evidence = role_evidence(graph, demo, &map);

    let goals: Vec<usize> = (0..universe.end_goals.len())
        .filter(|gi| {
            let g = &universe.end_goals[*gi];
            goal_satisfied(graph, &world, g) && !goal_satisfied(graph, &before, g)
        })
        .collect();
    let mut candidates: Vec<Task> = goals
        .iter()
        .flat_map(|gi| universe.tasks_of_goal(*gi))
        .filter(|t| consistent(&t.task.constraints, &evidence))
        .map(|t| t.task.clone())
        .collect();
    if candidates.is_empty() {
        candidates = goals
            .iter()
            .flat_map(|gi| {
                ConstraintSet::family()
                    .into_iter()
                    .filter(|c| consistent(c, &evidence))
                    .map(|c| Task::new(universe.end_goals[*gi].clone(), c))
            })
            .collect();
    }
    candidates
        .iter()
        .find(|task| {
            rollout(
                graph,
                map.clone(),
                task,
                RolloutMode::Demonstration,
                WorldConfig::default(),
            )
            .is_ok_and(|r| r.actions == actions)
        })
        .or(candidates.first())
        .cloned()
}

pub struct OracleAgent {
    graph: Arc<SubtaskGraph>,
    universe: Arc<TaskUniverse>,
    cost: PathCost,
    payload: Option<Payload>,
    task: Option<Task>,
    world: Option<WorldState>,
    last_action: Option<Action>,
    /// Number of times the replica had to be rebuilt from an observation.
    pub resyncs: usize,
}

impl OracleAgent {
    pub fn new(graph: Arc<SubtaskGraph>, universe: Arc<TaskUniverse>) -> Self {
        OracleAgent {
            graph,
            universe,
            cost: PathCost::default(),
            payload: None,
            task: None,
            world: None,
            last_action: None,
            resyncs: 0,
        }
    }

    /// Bring the replica up to the engine's reported state.
    fn sync(&mut self, msg: &StepMessage, constraints: &ConstraintSet) {
        let graph = &*self.graph;
        if let (Some(world), Some(a)) = (self.world.as_mut(), self.last_action) {
            advance(graph, world, a);
        }
        let in_sync = self.world.as_ref().is_some_and(|w| {
            crate::world::observe_map(&w.map, crate::world::render_inventory(&w.inventory, graph)).grid == msg.grid
        });
        if !in_sync {
            if self.world.is_some() {
                self.resyncs += 1;
            }
            if let Some(mut map) = observation_map(&msg.grid) {
                arm(&mut map, constraints);
                let mut w = WorldState::new(map);
                if let Some(inv) = parse_inventory(&msg.inventory, graph) {
                    w.inventory = inv;
                }
                w.step = msg.step;
                self.world = Some(w);
            }
        }
    }

    fn choose(&self, item: &PlanItem, constraints: &ConstraintSet) -> Action {
        self.world
            .as_ref()
            .and_then(|w| action_for_item(&self.graph, w, constraints, &self.cost, item).ok())
            .unwrap_or(IDLE)
    }
}

impl Policy for OracleAgent {
    fn begin(&mut self, payload: &Payload) -> Result<(), String> {
        self.world = None;
        self.last_action = None;
        self.task = match payload {
            Payload::Description { description } => {
                Some(parse_description(&self.graph, description).map_err(|e| e.to_string())?)
            }
            Payload::Demonstration { demonstration } => infer_task(&self.graph, &self.universe, demonstration),
            Payload::Instruction {} => None,
        };
        self.payload = Some(payload.clone());
        Ok(())
    }

    fn act(&mut self, msg: &StepMessage) -> Result<ActReply, String> {
        let graph = Arc::clone(&self.graph);
        let mut reply = ActReply::default();
        let action = match (&self.payload, msg.instruction.as_deref()) {
            (Some(Payload::Instruction {}), Some(text)) => {
                let ins = parse_instruction(&graph, text).map_err(|e| e.to_string())?;
                self.sync(msg, &ins.constraints);
                self.choose(&PlanItem::from_instruction(ins.target), &ins.constraints)
            }
            (Some(Payload::Instruction {}), None) => IDLE,
            _ => {
                let task = self.task.clone().ok_or("no task inferred")?;
                self.sync(msg, &task.constraints);
                let world = self.world.as_ref().ok_or("unreadable observation")?;
                let item = next_item(&graph, world, &plan(&graph, world, &task.goal)).map_err(|e| e.to_string())?;
                reply.description = Some(task.text(&graph));
                reply.instruction = Some(instruction_text(
                    &graph,
                    &Instruction {
                        target: item.instruction_target(),
                        constraints: task.constraints,
                    },
                ));
                self.choose(&item, &task.constraints)
            }
        };
        self.last_action = Some(action);
        reply.action = action.name().to_string();
        Ok(reply)
    }

    fn finish(&mut self) {
        self.world = None;
        self.last_action = None;
    }
}
