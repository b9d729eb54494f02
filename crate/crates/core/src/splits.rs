//! Train/test/validation manifests for the five generalisation splits.
//!
//! Every split assigns whole end goals to one side, so the constraint
//! variants of an end goal never straddle train and test. Validation tasks
//! pair train end goals with constraint sets the universe never gave them.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::episode::WorldConfig;
use crate::graph::{SubtaskGraph, SubtaskId};
use crate::hash::{fnv1a64, text_hash, HASH_NAME};
use crate::mapgen::{generate_feasible, MapGenConfig};
use crate::oracle::{rollout, RolloutMode};
use crate::task::{ConstraintSet, EndGoal, GoalAtom, GoalCategory, Task, TaskUniverse};
use crate::world::Terrain;

pub const MANIFEST_SCHEMA: u32 = 1;

/// Share of train end goals that receive a validation task.
pub const VALIDATION_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Random,
    HiddenSubtask,
    HiddenUseCase,
    HiddenTerrainDestination,
    Length,
}

impl SplitName {
    pub const ALL: [SplitName; 5] = [
        SplitName::Random,
        SplitName::HiddenSubtask,
        SplitName::HiddenUseCase,
        SplitName::HiddenTerrainDestination,
        SplitName::Length,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SplitName::Random => "random",
            SplitName::HiddenSubtask => "hidden_subtask",
            SplitName::HiddenUseCase => "hidden_use_case",
            SplitName::HiddenTerrainDestination => "hidden_terrain_destination",
            SplitName::Length => "length",
        }
    }

    pub fn parse(name: &str) -> Option<SplitName> {
        SplitName::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// One task in a manifest; `goal_id` is the hash of the end-goal text.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SplitEntry {
    pub goal_id: u64,
    pub task: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub schema: u32,
    pub name: SplitName,
    pub engine_version: String,
    pub hash: String,
    pub config_hash: u64,
    pub universe_hash: u64,
    pub train: Vec<SplitEntry>,
    pub test: Vec<SplitEntry>,
    pub validation: Vec<SplitEntry>,
    /// Goals left out of both sides, such as cover goals in the hidden splits.
    pub excluded_goals: usize,
    /// Per end goal length statistic, only for the length split.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lengths: Vec<GoalLength>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalLength {
    pub goal_id: u64,
    pub mean_steps: f64,
    pub samples: usize,
}

impl SplitManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }

    pub fn goal_ids(entries: &[SplitEntry]) -> BTreeSet<u64> {
        entries.iter().map(|e| e.goal_id).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Train,
    Test,
    Excluded,
}

/// Hash of every task text, in universe order.
pub fn universe_hash(universe: &TaskUniverse) -> u64 {
    let mut bytes = Vec::new();
    for t in &universe.tasks {
        bytes.extend_from_slice(t.text.as_bytes());
        bytes.push(b'\n');
    }
    fnv1a64(&bytes)
}

/// Uniform value in [0, 1) from a 64-bit hash. FNV high bits barely move
/// between similar strings, so the hash is avalanched first.
fn unit(hash: u64) -> f64 {
    let mut z = hash;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

fn validation_task(
    goal: &EndGoal,
    goal_text: &str,
    used: &[ConstraintSet],
    graph: &SubtaskGraph,
) -> Option<SplitEntry> {
    let unused: Vec<ConstraintSet> = ConstraintSet::family()
        .into_iter()
        .filter(|c| !used.contains(c))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(text_hash(&format!("validation:{goal_text}")));
    let c = *unused.choose(&mut rng)?;
    Some(SplitEntry {
        goal_id: text_hash(goal_text),
        task: Task::new(goal.clone(), c).text(graph),
    })
}

fn assemble(
    graph: &SubtaskGraph,
    universe: &TaskUniverse,
    name: SplitName,
    sides: &[Side],
    lengths: Vec<GoalLength>,
) -> SplitManifest {
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut validation = Vec::new();
    let mut excluded_goals = 0;
    for (gi, side) in sides.iter().enumerate() {
        let tasks = universe.tasks_of_goal(gi);
        let entries = tasks.iter().map(|t| SplitEntry {
            goal_id: t.id,
            task: t.text.clone(),
        });
        match side {
            Side::Train => {
                train.extend(entries);
                let text = &universe.goal_texts[gi];
                if unit(text_hash(&format!("holdout:{text}"))) < VALIDATION_FRACTION {
                    let used: Vec<ConstraintSet> = tasks.iter().map(|t| t.task.constraints).collect();
                    validation.extend(validation_task(&universe.end_goals[gi], text, &used, graph));
                }
            }
            Side::Test => test.extend(entries),
            Side::Excluded => excluded_goals += 1,
        }
    }
    SplitManifest {
        schema: MANIFEST_SCHEMA,
        name,
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        hash: HASH_NAME.to_string(),
        config_hash: graph.fingerprint(),
        universe_hash: universe_hash(universe),
        train,
        test,
        validation,
        excluded_goals,
        lengths,
    }
}

// ------------------------------------------------------------------ rules

pub const HIDDEN_SUBTASKS: [&str; 3] = ["place_iron_flooring", "erect_pig_shrine", "build_diamond_house"];

/// Held-out subtasks whose only training use is the plain single goal.
pub const PLAIN_ONLY_SUBTASKS: [&str; 3] = ["build_diamond_house", "place_road", "make_goldware"];

/// Held-out subtask whose only training use is as a build destination.
pub const DESTINATION_ONLY_SUBTASK: &str = "place_iron_flooring";

pub const HIDDEN_DESTINATION: Terrain = Terrain::Water;

pub fn random_side(goal_text: &str, ratio: f64) -> Side {
    if unit(text_hash(goal_text)) < ratio {
        Side::Train
    } else {
        Side::Test
    }
}

/// True when the goal names the subtask or builds on the terrain it places.
pub fn goal_involves(graph: &SubtaskGraph, goal: &EndGoal, subtask: SubtaskId) -> bool {
    goal.mentioned_subtasks(graph).contains(&subtask)
}

pub fn hidden_subtask_side(graph: &SubtaskGraph, goal: &EndGoal) -> Side {
    let involved = HIDDEN_SUBTASKS.iter().any(|n| goal_involves(graph, goal, graph.sid(n)));
    match (involved, goal.category()) {
        (false, _) => Side::Train,
        (true, GoalCategory::CoverTerrain) => Side::Excluded,
        (true, _) => Side::Test,
    }
}

fn is_plain(goal: &EndGoal, subtask: SubtaskId) -> bool {
    matches!(goal, EndGoal::Conjunction { atoms } if atoms == &[GoalAtom::Subtask { subtask }])
}

/// True when the subtask appears only as the destination terrain it places.
fn destination_only(graph: &SubtaskGraph, goal: &EndGoal, subtask: SubtaskId) -> bool {
    goal.atoms().iter().all(|a| a.subtask() != subtask)
        && goal
            .atoms()
            .iter()
            .any(|a| matches!(*a, GoalAtom::OnTerrain { dest, .. } if graph.place_for_terrain(dest) == Some(subtask)))
}

pub fn hidden_use_case_side(graph: &SubtaskGraph, goal: &EndGoal) -> Side {
    let plain_violation = PLAIN_ONLY_SUBTASKS.iter().any(|n| {
        let s = graph.sid(n);
        goal_involves(graph, goal, s) && !is_plain(goal, s)
    });
    let dest = graph.sid(DESTINATION_ONLY_SUBTASK);
    let dest_violation = goal_involves(graph, goal, dest) && !destination_only(graph, goal, dest);
    match (plain_violation || dest_violation, goal.category()) {
        (false, _) => Side::Train,
        (true, GoalCategory::CoverTerrain) => Side::Excluded,
        (true, _) => Side::Test,
    }
}

/// True when the terrain is a build destination or a cover target.
pub fn terrain_as_destination(goal: &EndGoal, terrain: Terrain) -> bool {
    goal.atoms().iter().any(|a| match *a {
        GoalAtom::OnTerrain { dest, .. } => dest == terrain,
        GoalAtom::Cover { target, .. } => target == terrain,
        GoalAtom::Subtask { .. } => false,
    })
}

pub fn hidden_terrain_destination_side(goal: &EndGoal) -> Side {
    if terrain_as_destination(goal, HIDDEN_DESTINATION) {
        Side::Test
    } else {
        Side::Train
    }
}

// ------------------------------------------------------------------ builders

pub fn random_split(graph: &SubtaskGraph, universe: &TaskUniverse, ratio: f64) -> SplitManifest {
    let sides: Vec<Side> = universe.goal_texts.iter().map(|t| random_side(t, ratio)).collect();
    assemble(graph, universe, SplitName::Random, &sides, Vec::new())
}

pub fn hidden_subtask_split(graph: &SubtaskGraph, universe: &TaskUniverse) -> SplitManifest {
    let sides: Vec<Side> = universe
        .end_goals
        .iter()
        .map(|g| hidden_subtask_side(graph, g))
        .collect();
    assemble(graph, universe, SplitName::HiddenSubtask, &sides, Vec::new())
}

pub fn hidden_use_case_split(graph: &SubtaskGraph, universe: &TaskUniverse) -> SplitManifest {
    let sides: Vec<Side> = universe
        .end_goals
        .iter()
        .map(|g| hidden_use_case_side(graph, g))
        .collect();
    assemble(graph, universe, SplitName::HiddenUseCase, &sides, Vec::new())
}

pub fn hidden_terrain_destination_split(graph: &SubtaskGraph, universe: &TaskUniverse) -> SplitManifest {
    let sides: Vec<Side> = universe.end_goals.iter().map(hidden_terrain_destination_side).collect();
    assemble(graph, universe, SplitName::HiddenTerrainDestination, &sides, Vec::new())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LengthParams {
    pub pct: f64,
    pub seeds_per_task: u32,
    pub base_seed: u64,
}

impl Default for LengthParams {
    fn default() -> Self {
        LengthParams {
            pct: 0.10,
            seeds_per_task: 5,
            base_seed: 0,
        }
    }
}

/// Mean demonstration length of one end goal. Seed `i` pairs the `i`-th
/// constraint variant (cyclically) with its own feasible map.
pub fn goal_length(
    graph: &SubtaskGraph,
    universe: &TaskUniverse,
    mapgen: &MapGenConfig,
    goal_index: usize,
    params: &LengthParams,
) -> GoalLength {
    let tasks = universe.tasks_of_goal(goal_index);
    let mut total = 0usize;
    let mut samples = 0usize;
    for i in 0..params.seeds_per_task {
        let record = &tasks[i as usize % tasks.len()];
        let seed = params.base_seed.wrapping_add(i as u64);
        let Ok((map, _)) = generate_feasible(graph, mapgen, &record.task, seed) else {
            continue;
        };
        if let Ok(r) = rollout(
            graph,
            map,
            &record.task,
            RolloutMode::Demonstration,
            WorldConfig::default(),
        ) {
            total += r.len();
            samples += 1;
        }
    }
    GoalLength {
        goal_id: text_hash(&universe.goal_texts[goal_index]),
        // Goals without a single feasible sample sort as longest.
        mean_steps: if samples == 0 {
            f64::INFINITY
        } else {
            total as f64 / samples as f64
        },
        samples,
    }
}

pub fn goal_lengths(
    graph: &SubtaskGraph,
    universe: &TaskUniverse,
    mapgen: &MapGenConfig,
    params: &LengthParams,
) -> Vec<GoalLength> {
    (0..universe.end_goals.len())
        .into_par_iter()
        .map(|gi| goal_length(graph, universe, mapgen, gi, params))
        .collect()
}

/// Sides from precomputed lengths: the top `ceil(pct * goals)` end goals by
/// mean length go to test, ties broken by goal id.
pub fn length_sides(lengths: &[GoalLength], pct: f64) -> Vec<Side> {
    let n_test = (pct * lengths.len() as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|a, b| {
        lengths[*b]
            .mean_steps
            .total_cmp(&lengths[*a].mean_steps)
            .then(lengths[*a].goal_id.cmp(&lengths[*b].goal_id))
    });
    let mut sides = vec![Side::Train; lengths.len()];
    for gi in order.into_iter().take(n_test) {
        sides[gi] = Side::Test;
    }
    sides
}

pub fn length_split_from(
    graph: &SubtaskGraph,
    universe: &TaskUniverse,
    lengths: Vec<GoalLength>,
    pct: f64,
) -> SplitManifest {
    let sides = length_sides(&lengths, pct);
    assemble(graph, universe, SplitName::Length, &sides, lengths)
}

pub fn length_split(
    graph: &SubtaskGraph,
    universe: &TaskUniverse,
    mapgen: &MapGenConfig,
    params: &LengthParams,
) -> SplitManifest {
    let lengths = goal_lengths(graph, universe, mapgen, params);
    length_split_from(graph, universe, lengths, params.pct)
}

/// Builds any split; the random split uses a 0.7 train ratio.
pub fn build_split(
    graph: &SubtaskGraph,
    universe: &TaskUniverse,
    name: SplitName,
    mapgen: &MapGenConfig,
    length: &LengthParams,
) -> SplitManifest {
    match name {
        SplitName::Random => random_split(graph, universe, 0.7),
        SplitName::HiddenSubtask => hidden_subtask_split(graph, universe),
        SplitName::HiddenUseCase => hidden_use_case_split(graph, universe),
        SplitName::HiddenTerrainDestination => hidden_terrain_destination_split(graph, universe),
        SplitName::Length => length_split(graph, universe, mapgen, length),
    }
}

// ------------------------------------------------------------------ audit

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitAudit {
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

fn check(out: &mut Vec<SplitAudit>, check: &str, passed: bool, detail: String) {
    out.push(SplitAudit {
        check: check.to_string(),
        passed,
        detail,
    });
}

/// Structural checks every manifest must pass, plus the per-split
/// membership rule applied to every end goal of the universe.
pub fn audit(graph: &SubtaskGraph, universe: &TaskUniverse, m: &SplitManifest) -> Vec<SplitAudit> {
    let mut out = Vec::new();
    let train = SplitManifest::goal_ids(&m.train);
    let test = SplitManifest::goal_ids(&m.test);
    let overlap = train.intersection(&test).count();
    check(
        &mut out,
        "train and test disjoint by end goal",
        overlap == 0,
        format!("{overlap} shared goals"),
    );

    let train_tasks: BTreeSet<&str> = m.train.iter().map(|e| e.task.as_str()).collect();
    let bad_val = m
        .validation
        .iter()
        .filter(|e| {
            !train.contains(&e.goal_id)
                || train_tasks.contains(e.task.as_str())
                || universe.task_by_text(&e.task).is_some()
        })
        .count();
    check(
        &mut out,
        "validation uses train goals with unseen constraint sets",
        bad_val == 0 && !m.validation.is_empty(),
        format!("{bad_val} bad of {}", m.validation.len()),
    );

    let mut misplaced = 0usize;
    let mut expected_test = 0usize;
    let lengths_sides = (m.name == SplitName::Length).then(|| length_sides(&m.lengths, LengthParams::default().pct));
    for (gi, goal) in universe.end_goals.iter().enumerate() {
        let id = text_hash(&universe.goal_texts[gi]);
        let expected = match m.name {
            SplitName::Random => random_side(&universe.goal_texts[gi], 0.7),
            SplitName::HiddenSubtask => hidden_subtask_side(graph, goal),
            SplitName::HiddenUseCase => hidden_use_case_side(graph, goal),
            SplitName::HiddenTerrainDestination => hidden_terrain_destination_side(goal),
            SplitName::Length => lengths_sides.as_ref().map_or(Side::Excluded, |s| s[gi]),
        };
        let actual = match (train.contains(&id), test.contains(&id)) {
            (true, false) => Side::Train,
            (false, true) => Side::Test,
            (false, false) => Side::Excluded,
            (true, true) => {
                misplaced += 1;
                continue;
            }
        };
        if expected == Side::Test {
            expected_test += 1;
        }
        if actual != expected {
            misplaced += 1;
        }
    }
    check(
        &mut out,
        "every end goal on its rule-assigned side",
        misplaced == 0,
        format!("{misplaced} misplaced, {expected_test} expected test goals"),
    );

    let complete =
        m.train.len() + m.test.len() + m.excluded_goals * universe.constraint_sets_per_goal() == universe.tasks.len();
    check(
        &mut out,
        "every task accounted for",
        complete,
        format!("{} train, {} test", m.train.len(), m.test.len()),
    );

    match m.name {
        SplitName::Random => {
            let frac = train.len() as f64 / universe.end_goals.len() as f64;
            check(
                &mut out,
                "train fraction within 0.70 +/- 0.02",
                (frac - 0.7).abs() <= 0.02,
                format!("{frac:.4}"),
            );
        }
        SplitName::Length => {
            let stat = |ids: &BTreeSet<u64>| -> Vec<f64> {
                m.lengths
                    .iter()
                    .filter(|l| ids.contains(&l.goal_id))
                    .map(|l| l.mean_steps)
                    .collect()
            };
            let max_train = stat(&train).into_iter().fold(f64::NEG_INFINITY, f64::max);
            let min_test = stat(&test).into_iter().fold(f64::INFINITY, f64::min);
            check(
                &mut out,
                "min test length >= max train length",
                min_test >= max_train,
                format!("min test {min_test:.2}, max train {max_train:.2}"),
            );
            let want = (LengthParams::default().pct * universe.end_goals.len() as f64).ceil() as usize;
            check(
                &mut out,
                "test holds the top decile of end goals",
                test.len() == want,
                format!("{} of {want}", test.len()),
            );
        }
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval() {
        assert_eq!(unit(0), 0.0);
        assert!(unit(u64::MAX) < 1.0);
    }

    #[test]
    fn length_sides_take_longest() {
        let l = |id, m| GoalLength {
            goal_id: id,
            mean_steps: m,
            samples: 1,
        };
        let lengths = vec![l(1, 10.0), l(2, 30.0), l(3, 20.0), l(4, 30.0)];
        assert_eq!(
            length_sides(&lengths, 0.5),
            vec![Side::Train, Side::Test, Side::Train, Side::Test]
        );
        assert!(length_sides(&lengths, 0.0).iter().all(|s| *s == Side::Train));
    }

    #[test]
    fn names_round_trip() {
        for s in SplitName::ALL {
            assert_eq!(SplitName::parse(s.name()), Some(s));
        }
    }
}
