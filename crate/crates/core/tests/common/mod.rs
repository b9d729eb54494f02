//! Helpers shared by the property suites and the acceptance run.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::OnceLock;

use describeworld::episode::{Episode, RewardKind, Termination, WorldConfig};
use describeworld::graph::{SubtaskGraph, SubtaskId};
use describeworld::hash::text_hash;
use describeworld::io::MapFile;
use describeworld::lang::{instruction_log_text, log_head, parse_description};
use describeworld::mapgen::{generate_feasible, MapGenConfig};
use describeworld::oracle::{rollout, OracleRollout, RolloutMode};
use describeworld::task::{
    enumerate_tasks, goal_attainable, goal_satisfied, EndGoal, GoalCategory, TaskRecord, TaskUniverse,
};
use describeworld::world::{Action, GridMap, Inventory, Pos, Terrain, WorldState};

pub fn graph() -> &'static SubtaskGraph {
    static G: OnceLock<SubtaskGraph> = OnceLock::new();
    G.get_or_init(SubtaskGraph::load_default)
}

pub fn universe() -> &'static TaskUniverse {
    static U: OnceLock<TaskUniverse> = OnceLock::new();
    U.get_or_init(|| enumerate_tasks(graph()))
}

/// `n` (task, seed) pairs spread evenly over the six goal categories.
pub fn stratified(n: usize) -> Vec<(&'static TaskRecord, u64)> {
    let per = n.div_ceil(GoalCategory::ALL.len());
    let mut out = Vec::new();
    for c in GoalCategory::ALL {
        let mut pool: Vec<&TaskRecord> = universe().tasks.iter().filter(|t| t.category == c).collect();
        pool.sort_by_key(|t| text_hash(&format!("oracle-test:{}", t.text)));
        for i in 0..per {
            out.push((pool[i % pool.len()], i as u64));
        }
    }
    out.truncate(n);
    out
}

pub fn action(i: u8) -> Action {
    Action::from_index(i as usize).unwrap()
}

pub fn episode_for(task_index: usize, seed: u64) -> Episode {
    let g = graph();
    let task = universe().tasks[task_index % universe().tasks.len()].task.clone();
    let (map, _) = generate_feasible(g, &MapGenConfig::default(), &task, seed).unwrap();
    Episode::new(g, map, task, WorldConfig::default()).unwrap()
}

fn inventory_le(a: &Inventory, b: &Inventory) -> bool {
    a.iter().all(|(item, n)| b.count(item) >= n)
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Drive a fresh episode with arbitrary actions and check the reward
/// ledger, one-shot reward cells, the step cap, unattainability and
/// determinism.
pub fn check_fuzzed(task_index: usize, seed: u64, actions: &[u8]) -> Result<(), String> {
    let g = graph();
    let config = WorldConfig::default();
    let mut ep = episode_for(task_index, seed);
    let mut sum = 0i64;
    let mut paid_cells = HashSet::new();
    let mut penalties = 0u32;
    let mut taken = Vec::new();
    for &a in actions {
        if ep.is_done() {
            ensure!(ep.step(g, action(a)).is_err(), "stepped past termination");
            break;
        }
        let before = ep.world.inventory.clone();
        let r = ep.step(g, action(a)).map_err(|e| e.to_string())?;
        taken.push(action(a));
        ensure!(
            r.reward == r.events.iter().map(|e| e.magnitude).sum::<i32>(),
            "step reward != event sum"
        );
        sum += r.reward as i64;
        for e in &r.events {
            match e.kind {
                RewardKind::TerrainReward => ensure!(paid_cells.insert(e.cell.unwrap()), "reward cell paid twice"),
                RewardKind::TerrainPenalty => penalties += 1,
                _ => {}
            }
        }
        ensure!(inventory_le(&before, &ep.world.inventory), "an item was consumed");
        ensure!(ep.step_count() <= config.max_steps, "step cap exceeded");
        match r.termination {
            Some(Termination::Unattainable) => {
                ensure!(
                    !goal_attainable(g, &ep.world, &ep.task.goal),
                    "unattainable but attainable"
                );
                // Nothing done afterwards can restore the goal.
                let mut world = ep.world.clone();
                for &b in actions.iter().rev().take(40) {
                    world.apply(g, action(b));
                    ensure!(
                        !goal_attainable(g, &world, &ep.task.goal),
                        "goal became attainable again"
                    );
                }
            }
            Some(Termination::Timeout) => ensure!(ep.step_count() == config.max_steps, "early timeout"),
            Some(Termination::GoalComplete) => ensure!(goal_satisfied(g, &ep.world, &ep.task.goal), "false completion"),
            None => ensure!(
                goal_attainable(g, &ep.world, &ep.task.goal),
                "unattainable state not terminated"
            ),
        }
    }
    ensure!(sum == ep.total_reward, "ledger {} != total {}", sum, ep.total_reward);
    ensure!(penalties == ep.traversals.penalty, "penalty count mismatch");
    if actions.len() >= config.max_steps as usize {
        ensure!(ep.is_done(), "episode outlived the step cap");
    }
    let mut again = episode_for(task_index, seed);
    for a in &taken {
        again.step(g, *a).map_err(|e| e.to_string())?;
    }
    ensure!(again == ep, "replay differs");
    Ok(())
}

// ---------------------------------------------------------------- brute force

pub const PALETTE: [&str; 6] = ["tree", "stone", "string", "spade", "lumbershop", "workspace"];

pub const MINI_GOALS: [&str; 8] = [
    "make stick",
    "make stone pickaxe",
    "make scythe",
    "clear all of the trees",
    "reach the workspace",
    "dig dirt covering all the water",
    "place wood flooring covering all the lava",
    "make wood slats, then reach the workspace",
];

type StateKey = (
    GridMap,
    Inventory,
    Option<Action>,
    BTreeSet<(SubtaskId, Option<Terrain>)>,
);

fn key(w: &WorldState) -> StateKey {
    let done = w
        .ledger
        .events()
        .iter()
        .map(|e| (e.subtask, e.terrain_before))
        .collect();
    (w.map.clone(), w.inventory.clone(), w.pending, done)
}

/// Exhaustive search for any continuation that satisfies the goal; `None`
/// when the state space exceeds the budget.
pub fn reachable(g: &SubtaskGraph, start: &WorldState, goal: &EndGoal, budget: usize) -> Option<bool> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([start.clone()]);
    seen.insert(key(start));
    while let Some(w) = queue.pop_front() {
        if goal_satisfied(g, &w, goal) {
            return Some(true);
        }
        for a in Action::ALL {
            let mut next = w.clone();
            next.apply(g, a);
            next.step = 0;
            if seen.insert(key(&next)) {
                if seen.len() > budget {
                    return None;
                }
                queue.push_back(next);
            }
        }
    }
    Some(false)
}

/// 4x4 interior from (terrain code, object code) pairs; low codes are empty.
pub fn mini_map(cells: &[(u8, u8)], agent: usize) -> GridMap {
    let mut map = GridMap::empty(4, 4);
    for (i, &(t, o)) in cells.iter().enumerate() {
        let cell = map.cell_mut(Pos::new(1 + i / 4, 1 + i % 4));
        cell.terrain = match t {
            3 => Some(Terrain::Lava),
            4 => Some(Terrain::Field),
            5 => Some(Terrain::Water),
            _ => None,
        };
        cell.object = (o as usize).checked_sub(10).map(|k| graph().oid(PALETTE[k]));
    }
    map.agent = Pos::new(1 + agent / 4, 1 + agent % 4);
    map
}

/// Compare the attainability check with exhaustive search on one
/// miniature; `Ok(None)` when the search budget was exceeded.
pub fn check_miniature(
    cells: &[(u8, u8)],
    agent: usize,
    goal_index: usize,
    prefix: &[u8],
) -> Result<Option<bool>, String> {
    let g = graph();
    let goal = describeworld::lang::parse_goal_sentence(g, MINI_GOALS[goal_index]).map_err(|e| e.to_string())?;
    let mut world = WorldState::new(mini_map(cells, agent));
    for &a in prefix {
        world.apply(g, action(a));
    }
    world.step = 0;
    let Some(truth) = reachable(g, &world, &goal, 25_000) else {
        return Ok(None);
    };
    let claimed = goal_attainable(g, &world, &goal);
    ensure!(
        claimed == truth,
        "{}: attainable={} but search says {}",
        MINI_GOALS[goal_index],
        claimed,
        truth
    );
    Ok(Some(truth))
}

// ---------------------------------------------------------------- fixtures

pub struct FixtureCase {
    pub file: &'static str,
    pub task: &'static str,
    pub expected: Vec<&'static str>,
}

fn repeated(head: &[&'static str], tail: &'static str, n: usize) -> Vec<&'static str> {
    let mut v = head.to_vec();
    v.extend(std::iter::repeat_n(tail, n));
    v
}

/// The six reference tasks, each on its frozen map, with the instruction
/// heads the expert must issue in order.
pub fn fixture_cases() -> Vec<FixtureCase> {
    vec![
        FixtureCase {
            file: "trajectory_1.json",
            task: "build fence on silver flooring, then reach the jeweler. avoid walking on the field. walking on the lava will reward you.",
            expected: vec![
                "cut wood",
                "get stone",
                "get string",
                "get spade",
                "make stick",
                "make wood slats",
                "make stone pickaxe",
                "get coal",
                "get silver ore",
                "light furnace",
                "smelt silver",
                "place silver flooring on empty cell",
                "build fence on silver flooring",
                "go to jeweler",
            ],
        },
        FixtureCase {
            file: "trajectory_2.json",
            task: "make net and place silver flooring covering all the water in any order. avoid walking on the field.",
            expected: repeated(
                &[
                    "cut wood",
                    "get stone",
                    "get string",
                    "get spade",
                    "make firewood",
                    "make stick",
                    "make net",
                    "make stone pickaxe",
                    "get silver ore",
                    "light furnace",
                    "smelt silver",
                ],
                "place silver flooring covering water",
                7,
            ),
        },
        FixtureCase {
            file: "trajectory_3.json",
            task: "dig dirt covering all the water, then reach the workspace.",
            expected: repeated(&["get spade"], "dig dirt covering water", 11),
        },
        FixtureCase {
            file: "trajectory_4.json",
            task: "clear all of the grasses and the irons.",
            expected: vec![
                "cut wood",
                "get stone",
                "get string",
                "make stick",
                "make stone pickaxe",
                "make scythe",
                "get iron ore",
                "get iron ore",
                "cut hay",
                "cut hay",
                "cut hay",
            ],
        },
        FixtureCase {
            file: "trajectory_5.json",
            task: "build pig barn on dirt and build diamond house on silver flooring in any order.",
            expected: vec![
                "cut wood",
                "get stone",
                "get string",
                "get spade",
                "make stick",
                "make trap",
                "make net",
                "make wood slats",
                "make stone pickaxe",
                "catch pig",
                "make scythe",
                "get coal",
                "get iron ore",
                "get silver ore",
                "cut hay",
                "dig dirt on empty cell",
                "light furnace",
                "build pig barn on dirt",
                "smelt iron",
                "smelt silver",
                "make iron pickaxe",
                "get diamond ore",
                "place silver flooring on empty cell",
                "build diamond house on silver flooring",
            ],
        },
        FixtureCase {
            file: "trajectory_6.json",
            task: "place diamond flooring on field, then reach the lumbershop.",
            expected: vec![
                "cut wood",
                "get stone",
                "get spade",
                "make stick",
                "make stone pickaxe",
                "get coal",
                "get iron ore",
                "light furnace",
                "smelt iron",
                "make iron pickaxe",
                "get diamond ore",
                "place diamond flooring on field",
                "go to lumbershop",
            ],
        },
    ]
}

pub fn fixture_rollout(file: &str, task_text: &str, mode: RolloutMode) -> Result<OracleRollout, String> {
    let g = graph();
    let path = format!("{}/tests/fixtures/{file}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let map_file: MapFile = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let task = parse_description(g, task_text).map_err(|e| e.to_string())?;
    rollout(
        g,
        map_file.map().map_err(|e| e.to_string())?,
        &task,
        mode,
        WorldConfig::default(),
    )
    .map_err(|e| e.to_string())
}

/// Both rollout modes complete and issue exactly the expected heads, with
/// instruction spans tiling the trajectory.
pub fn check_fixture(case: &FixtureCase) -> Result<(), String> {
    let g = graph();
    for mode in [RolloutMode::Demonstration, RolloutMode::Expert] {
        let r = fixture_rollout(case.file, case.task, mode)?;
        ensure!(r.completed(), "{} {mode:?}: {:?}", case.file, r.termination);
        let heads: Vec<String> = r
            .instructions
            .iter()
            .map(|s| log_head(g, &s.instruction.target))
            .collect();
        ensure!(heads == case.expected, "{} {mode:?}: got {heads:?}", case.file);
        let spans: usize = r.instructions.iter().map(|s| s.steps as usize).sum();
        ensure!(
            spans == r.len(),
            "{} {mode:?}: spans cover {spans} of {} steps",
            case.file,
            r.len()
        );
        for s in &r.instructions {
            let full = instruction_log_text(g, &s.instruction, true);
            ensure!(
                full.starts_with(&log_head(g, &s.instruction.target)),
                "log text {full:?}"
            );
        }
    }
    Ok(())
}
