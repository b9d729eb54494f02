//! Task-aware episode: rewards, traversal counts and termination.

use serde::{Deserialize, Serialize};

use crate::graph::{SubtaskGraph, SubtaskId};
use crate::task::{goal_attainable, goal_satisfied, Task, TerrainRole};
use crate::world::{render_inventory, Action, GridMap, MapError, Observation, Pos, Terrain, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldConfig {
    pub max_steps: u16,
    pub step_penalty: i32,
    pub terrain_reward: i32,
    pub terrain_penalty: i32,
    pub unattainable_penalty: i32,
    pub goal_bonus: i32,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            max_steps: 300,
            step_penalty: -1,
            terrain_reward: 10,
            terrain_penalty: -10,
            unattainable_penalty: -100,
            goal_bonus: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GoalComplete,
    Unattainable,
    Timeout,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::GoalComplete => "goal_complete",
            Termination::Unattainable => "unattainable",
            Termination::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    StepPenalty,
    TerrainReward,
    TerrainPenalty,
    UnattainablePenalty,
    GoalBonus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RewardEvent {
    pub kind: RewardKind,
    pub magnitude: i32,
    pub cell: Option<Pos>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EpisodeError {
    #[error("invalid map: {0}")]
    Map(#[from] MapError),
    #[error("goal is unattainable on this map")]
    Infeasible,
    #[error("episode already terminated ({0:?})")]
    Terminated(Termination),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepResult {
    pub events: Vec<RewardEvent>,
    pub reward: i32,
    pub completed: Option<SubtaskId>,
    pub termination: Option<Termination>,
}

/// Per-episode entry counts onto natural terrain cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Traversals {
    /// Entries per natural terrain, in lava/field/water order.
    pub per_terrain: [u32; 3],
    pub reward: u32,
    pub penalty: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Episode {
    pub world: WorldState,
    pub task: Task,
    pub config: WorldConfig,
    pub total_reward: i64,
    pub traversals: Traversals,
    pub termination: Option<Termination>,
}

impl Episode {
    /// Start an episode; reward cells are armed according to the task's
    /// constraint roles.
    pub fn new(
        graph: &SubtaskGraph,
        mut map: GridMap,
        task: Task,
        config: WorldConfig,
    ) -> Result<Episode, EpisodeError> {
        map.validate()?;
        let interior: Vec<Pos> = map.interior().collect();
        for p in interior {
            let cell = map.cell_mut(p);
            cell.reward_armed = cell
                .terrain
                .is_some_and(|t| task.constraints.role(t) == TerrainRole::Reward);
        }
        let world = WorldState::new(map);
        if !goal_attainable(graph, &world, &task.goal) {
            return Err(EpisodeError::Infeasible);
        }
        Ok(Episode {
            world,
            task,
            config,
            total_reward: 0,
            traversals: Traversals::default(),
            termination: None,
        })
    }

    pub fn step_count(&self) -> u16 {
        self.world.step
    }

    pub fn is_done(&self) -> bool {
        self.termination.is_some()
    }

    pub fn observe(&self, graph: &SubtaskGraph) -> Observation {
        crate::world::observe_map(&self.world.map, render_inventory(&self.world.inventory, graph))
    }

    pub fn step(&mut self, graph: &SubtaskGraph, action: Action) -> Result<StepResult, EpisodeError> {
        if let Some(t) = self.termination {
            return Err(EpisodeError::Terminated(t));
        }
        let cfg = self.config;
        let outcome = self.world.apply(graph, action);
        let mut events = vec![RewardEvent {
            kind: RewardKind::StepPenalty,
            magnitude: cfg.step_penalty,
            cell: None,
        }];
        if let Some(p) = outcome.entered {
            let cell = self.world.map.cell_mut(p);
            if let Some(t) = cell.terrain.filter(|t| t.is_natural()) {
                self.traversals.per_terrain[t.natural_index().unwrap()] += 1;
                match self.task.constraints.role(t) {
                    TerrainRole::Penalty => {
                        self.traversals.penalty += 1;
                        events.push(RewardEvent {
                            kind: RewardKind::TerrainPenalty,
                            magnitude: cfg.terrain_penalty,
                            cell: Some(p),
                        });
                    }
                    TerrainRole::Reward => {
                        self.traversals.reward += 1;
                        if cell.reward_armed {
                            cell.reward_armed = false;
                            events.push(RewardEvent {
                                kind: RewardKind::TerrainReward,
                                magnitude: cfg.terrain_reward,
                                cell: Some(p),
                            });
                        }
                    }
                    TerrainRole::Neutral => {}
                }
            }
        }
        let termination = if goal_satisfied(graph, &self.world, &self.task.goal) {
            if cfg.goal_bonus != 0 {
                events.push(RewardEvent {
                    kind: RewardKind::GoalBonus,
                    magnitude: cfg.goal_bonus,
                    cell: None,
                });
            }
            Some(Termination::GoalComplete)
        } else if !goal_attainable(graph, &self.world, &self.task.goal) {
            events.push(RewardEvent {
                kind: RewardKind::UnattainablePenalty,
                magnitude: cfg.unattainable_penalty,
                cell: None,
            });
            Some(Termination::Unattainable)
        } else if self.world.step >= cfg.max_steps {
            Some(Termination::Timeout)
        } else {
            None
        };
        self.termination = termination;
        let reward: i32 = events.iter().map(|e| e.magnitude).sum();
        self.total_reward += reward as i64;
        Ok(StepResult {
            events,
            reward,
            completed: outcome.completed,
            termination,
        })
    }

    /// Natural terrains present on the map that the agent has not yet entered.
    pub fn unvisited_terrains(&self) -> Vec<Terrain> {
        self.world
            .map
            .natural_terrains_present()
            .into_iter()
            .filter(|t| self.traversals.per_terrain[t.natural_index().unwrap()] == 0)
            .collect()
    }
}

/// The subtask completed between two states, if any.
pub fn detect_completion(prev: &WorldState, next: &WorldState) -> Option<SubtaskId> {
    (next.ledger.len() > prev.ledger.len()).then(|| next.ledger.events()[prev.ledger.len()].subtask)
}
