//! Seeded map generation and feasibility rejection sampling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::episode::{Episode, EpisodeError, Termination, WorldConfig};
use crate::graph::{ObjectId, SubtaskGraph};
use crate::hash::text_hash;
use crate::oracle::{rollout, OracleRollout, RolloutMode};
use crate::task::{goal_satisfied, Task};
use crate::world::{GridMap, Pos, Terrain, DEFAULT_SIZE};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectRange {
    pub object: String,
    pub min: u8,
    pub max: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapGenConfig {
    pub rows: usize,
    pub cols: usize,
    /// Placed exactly once each.
    pub landmarks: Vec<String>,
    pub objects: Vec<ObjectRange>,
    /// Probability that a natural terrain appears at all.
    pub terrain_presence: f64,
    pub patches_min: u8,
    pub patches_max: u8,
    pub patch_size_min: u8,
    pub patch_size_max: u8,
    pub max_attempts: u32,
}

impl Default for MapGenConfig {
    fn default() -> Self {
        let r = |object: &str, min, max| ObjectRange {
            object: object.to_string(),
            min,
            max,
        };
        MapGenConfig {
            rows: DEFAULT_SIZE,
            cols: DEFAULT_SIZE,
            landmarks: ["workspace", "lumbershop", "jeweler", "furnace"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            objects: vec![
                r("tree", 2, 4),
                r("stone", 1, 3),
                r("string", 1, 3),
                r("spade", 1, 2),
                r("coal", 0, 2),
                r("iron", 1, 3),
                r("silver", 1, 3),
                r("gold", 1, 2),
                r("diamond", 1, 2),
                r("grass", 1, 3),
                r("chicken", 1, 2),
                r("pig", 1, 2),
            ],
            terrain_presence: 0.9,
            patches_min: 1,
            patches_max: 2,
            patch_size_min: 2,
            patch_size_max: 6,
            max_attempts: 200,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MapGenError {
    #[error("unknown object {0:?} in map config")]
    UnknownObject(String),
    #[error("config needs {needed} object cells but the map has {cells}")]
    Overfull { needed: usize, cells: usize },
    #[error("no feasible map after {0} attempts")]
    BudgetExhausted(u32),
}

impl MapGenConfig {
    pub fn validate(&self, graph: &SubtaskGraph) -> Result<(), MapGenError> {
        for name in self.landmarks.iter().chain(self.objects.iter().map(|r| &r.object)) {
            if graph.object_id(name).is_none() {
                return Err(MapGenError::UnknownObject(name.clone()));
            }
        }
        let needed = self.landmarks.len() + self.objects.iter().map(|r| r.max as usize).sum::<usize>();
        let cells = self.rows * self.cols;
        // One cell stays free for the agent to spawn on.
        if needed >= cells {
            return Err(MapGenError::Overfull { needed, cells });
        }
        Ok(())
    }
}

fn grow_patch(map: &mut GridMap, rng: &mut ChaCha8Rng, terrain: Terrain, size: usize) {
    let bare: Vec<Pos> = map.interior().filter(|p| map.cell(*p).terrain.is_none()).collect();
    let Some(start) = bare.choose(rng).copied() else {
        return;
    };
    let mut patch = vec![start];
    map.cell_mut(start).terrain = Some(terrain);
    while patch.len() < size {
        let frontier: Vec<Pos> = patch
            .iter()
            .flat_map(|p| map.neighbours(*p).collect::<Vec<_>>())
            .filter(|q| map.cell(*q).terrain.is_none())
            .collect();
        let Some(next) = frontier.choose(rng).copied() else {
            break;
        };
        map.cell_mut(next).terrain = Some(terrain);
        patch.push(next);
    }
}

/// Deterministic map for a seed: terrain blobs first, then landmarks and
/// resources on distinct cells, then the agent on a cell without an object.
pub fn generate(graph: &SubtaskGraph, config: &MapGenConfig, seed: u64) -> Result<GridMap, MapGenError> {
    config.validate(graph)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map = GridMap::empty(config.rows, config.cols);
    for terrain in Terrain::NATURAL {
        if !rng.gen_bool(config.terrain_presence) {
            continue;
        }
        let patches = rng.gen_range(config.patches_min..=config.patches_max);
        for _ in 0..patches {
            let size = rng.gen_range(config.patch_size_min..=config.patch_size_max) as usize;
            grow_patch(&mut map, &mut rng, terrain, size);
        }
    }
    let mut objects: Vec<ObjectId> = config.landmarks.iter().map(|n| graph.oid(n)).collect();
    for r in &config.objects {
        let n = rng.gen_range(r.min..=r.max);
        objects.extend(std::iter::repeat_n(graph.oid(&r.object), n as usize));
    }
    let mut cells: Vec<Pos> = map.interior().collect();
    cells.shuffle(&mut rng);
    for (o, p) in objects.iter().zip(&cells) {
        map.cell_mut(*p).object = Some(*o);
    }
    let free: Vec<Pos> = map.interior().filter(|p| map.cell(*p).object.is_none()).collect();
    map.agent = *free.choose(&mut rng).expect("validated config leaves a free cell");
    Ok(map)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Infeasibility {
    InvalidMap {
        detail: String,
    },
    /// A needed resource, landmark or destination terrain is missing.
    MissingResource,
    TriviallySatisfied,
    DryRunFailed {
        detail: String,
    },
    DryRunIncomplete {
        termination: Option<Termination>,
    },
    CoverageIncomplete {
        missing: Vec<Terrain>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub failure: Option<Infeasibility>,
    pub demo_steps: Option<usize>,
}

impl FeasibilityReport {
    fn fail(f: Infeasibility) -> Self {
        FeasibilityReport {
            feasible: false,
            failure: Some(f),
            demo_steps: None,
        }
    }
}

/// Static checks, then a demonstration dry run that must finish the task
/// and enter every natural terrain present.
pub fn feasible_for(graph: &SubtaskGraph, map: &GridMap, task: &Task) -> FeasibilityReport {
    let episode = match Episode::new(graph, map.clone(), task.clone(), WorldConfig::default()) {
        Ok(e) => e,
        Err(EpisodeError::Infeasible) => return FeasibilityReport::fail(Infeasibility::MissingResource),
        Err(e) => return FeasibilityReport::fail(Infeasibility::InvalidMap { detail: e.to_string() }),
    };
    if goal_satisfied(graph, &episode.world, &task.goal) {
        return FeasibilityReport::fail(Infeasibility::TriviallySatisfied);
    }
    match demo_dry_run(graph, map, task) {
        Ok(r) => {
            if !r.completed() {
                return FeasibilityReport::fail(Infeasibility::DryRunIncomplete {
                    termination: r.termination,
                });
            }
            let missing: Vec<Terrain> = map
                .natural_terrains_present()
                .into_iter()
                .filter(|t| r.traversals.per_terrain[t.natural_index().unwrap()] == 0)
                .collect();
            if !missing.is_empty() {
                return FeasibilityReport::fail(Infeasibility::CoverageIncomplete { missing });
            }
            FeasibilityReport {
                feasible: true,
                failure: None,
                demo_steps: Some(r.len()),
            }
        }
        Err(e) => FeasibilityReport::fail(Infeasibility::DryRunFailed { detail: e.to_string() }),
    }
}

fn demo_dry_run(graph: &SubtaskGraph, map: &GridMap, task: &Task) -> Result<OracleRollout, crate::oracle::OracleError> {
    rollout(
        graph,
        map.clone(),
        task,
        RolloutMode::Demonstration,
        WorldConfig::default(),
    )
}

/// Seed of the `attempt`-th candidate map for a task.
pub fn attempt_seed(task_text: &str, seed: u64, attempt: u32) -> u64 {
    text_hash(&format!("{seed}:{attempt}:{task_text}"))
}

/// A feasible map for the task, with the seed it was generated from.
pub fn generate_feasible(
    graph: &SubtaskGraph,
    config: &MapGenConfig,
    task: &Task,
    seed: u64,
) -> Result<(GridMap, u64), MapGenError> {
    let text = task.text(graph);
    for attempt in 0..config.max_attempts {
        let map_seed = attempt_seed(&text, seed, attempt);
        let map = generate(graph, config, map_seed)?;
        if feasible_for(graph, &map, task).feasible {
            return Ok((map, map_seed));
        }
    }
    Err(MapGenError::BudgetExhausted(config.max_attempts))
}
