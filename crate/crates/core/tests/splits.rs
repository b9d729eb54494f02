//! Split manifests: membership rules, audits and reproducibility.

use std::sync::OnceLock;

use describeworld::graph::SubtaskGraph;
use describeworld::hash::text_hash;
use describeworld::lang::parse_goal_sentence;
use describeworld::mapgen::MapGenConfig;
use describeworld::splits::{
    audit, build_split, hidden_subtask_side, hidden_terrain_destination_side, hidden_use_case_side, length_split,
    length_split_from, random_split, GoalLength, LengthParams, Side, SplitManifest, SplitName,
};
use describeworld::task::{enumerate_tasks, GoalCategory, TaskUniverse};

fn setup() -> &'static (SubtaskGraph, TaskUniverse) {
    static S: OnceLock<(SubtaskGraph, TaskUniverse)> = OnceLock::new();
    S.get_or_init(|| {
        let g = SubtaskGraph::load_default();
        let u = enumerate_tasks(&g);
        (g, u)
    })
}

fn assert_audit_passes(m: &SplitManifest) {
    let (g, u) = setup();
    for a in audit(g, u, m) {
        assert!(a.passed, "{}: {} ({})", m.name.name(), a.check, a.detail);
    }
}

fn side(rule: fn(&SubtaskGraph, &describeworld::task::EndGoal) -> Side, goal: &str) -> Side {
    let (g, _) = setup();
    rule(g, &parse_goal_sentence(g, goal).unwrap())
}

#[test]
fn rule_based_manifests_pass_audit() {
    let (g, u) = setup();
    for name in [
        SplitName::Random,
        SplitName::HiddenSubtask,
        SplitName::HiddenUseCase,
        SplitName::HiddenTerrainDestination,
    ] {
        let m = build_split(g, u, name, &MapGenConfig::default(), &LengthParams::default());
        assert!(!m.train.is_empty() && !m.test.is_empty(), "{}", name.name());
        assert_audit_passes(&m);
    }
}

#[test]
fn random_fraction_is_near_seventy_percent() {
    let (g, u) = setup();
    let m = random_split(g, u, 0.7);
    let train = SplitManifest::goal_ids(&m.train).len() as f64;
    let test = SplitManifest::goal_ids(&m.test).len() as f64;
    let frac = train / (train + test);
    assert!((frac - 0.7).abs() < 0.02, "{frac}");
    assert_eq!(m.excluded_goals, 0);
}

#[test]
fn hidden_subtask_examples() {
    assert_eq!(side(hidden_subtask_side, "place iron flooring on field"), Side::Test);
    assert_eq!(side(hidden_subtask_side, "place silver flooring on field"), Side::Train);
    assert_eq!(side(hidden_subtask_side, "build fence on iron flooring"), Side::Test);
    assert_eq!(side(hidden_subtask_side, "build diamond house"), Side::Test);
    assert_eq!(side(hidden_subtask_side, "make net"), Side::Train);
    assert_eq!(
        side(hidden_subtask_side, "place iron flooring covering all the water"),
        Side::Excluded
    );
}

#[test]
fn hidden_use_case_examples() {
    assert_eq!(side(hidden_use_case_side, "build diamond house"), Side::Train);
    assert_eq!(
        side(hidden_use_case_side, "build diamond house on silver flooring"),
        Side::Test
    );
    assert_eq!(side(hidden_use_case_side, "build fence on iron flooring"), Side::Train);
    assert_eq!(side(hidden_use_case_side, "place iron flooring on field"), Side::Test);
    assert_eq!(side(hidden_use_case_side, "make net"), Side::Train);
}

#[test]
fn hidden_terrain_destination_examples() {
    let rule = |_: &SubtaskGraph, goal: &describeworld::task::EndGoal| hidden_terrain_destination_side(goal);
    assert_eq!(side(rule, "build fence on water"), Side::Test);
    assert_eq!(side(rule, "place wood flooring covering all the water"), Side::Test);
    assert_eq!(side(rule, "build fence on field"), Side::Train);
    assert_eq!(side(rule, "reach the workspace"), Side::Train);
}

#[test]
fn manifests_are_byte_identical_across_runs() {
    let (g, u) = setup();
    for name in [
        SplitName::Random,
        SplitName::HiddenSubtask,
        SplitName::HiddenUseCase,
        SplitName::HiddenTerrainDestination,
    ] {
        let a = build_split(g, u, name, &MapGenConfig::default(), &LengthParams::default()).to_json();
        let b = build_split(g, u, name, &MapGenConfig::default(), &LengthParams::default()).to_json();
        assert_eq!(a, b, "{}", name.name());
        let parsed: SplitManifest = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed.to_json(), a);
    }
}

#[test]
fn validation_uses_train_goals_and_unused_constraints() {
    let (g, u) = setup();
    let m = random_split(g, u, 0.7);
    let train = SplitManifest::goal_ids(&m.train);
    assert!(!m.validation.is_empty());
    for v in &m.validation {
        assert!(train.contains(&v.goal_id));
        assert!(
            u.task_by_text(&v.task).is_none(),
            "validation task {} is in the universe",
            v.task
        );
    }
}

#[test]
fn corrupted_manifest_fails_audit() {
    let (g, u) = setup();
    let mut m = random_split(g, u, 0.7);
    let moved = m.test[0].clone();
    m.train.push(moved);
    assert!(audit(g, u, &m).iter().any(|a| !a.passed));
}

#[test]
fn length_split_takes_the_longest_goals() {
    let (g, u) = setup();
    // Synthetic lengths exercise tie-breaking without rollouts.
    let lengths: Vec<GoalLength> = u
        .goal_texts
        .iter()
        .map(|t| GoalLength {
            goal_id: text_hash(t),
            mean_steps: (text_hash(t) % 50) as f64,
            samples: 1,
        })
        .collect();
    let m = length_split_from(g, u, lengths, 0.10);
    assert_eq!(SplitManifest::goal_ids(&m.test).len(), 266);
    assert_audit_passes(&m);
}

#[test]
fn length_split_from_rollouts_passes_audit() {
    let (g, u) = setup();
    let params = LengthParams {
        seeds_per_task: 1,
        ..LengthParams::default()
    };
    let m = length_split(g, u, &MapGenConfig::default(), &params);
    assert_audit_passes(&m);
    let test_goals: Vec<_> = u
        .end_goals
        .iter()
        .zip(&u.goal_texts)
        .filter(|(_, t)| SplitManifest::goal_ids(&m.test).contains(&text_hash(t)))
        .map(|(goal, _)| goal.category())
        .collect();
    assert!(test_goals.iter().all(|c| *c != GoalCategory::Navigation));
}
