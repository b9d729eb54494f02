//! The enumerated task universe.

use std::collections::HashSet;

use describeworld::graph::SubtaskGraph;
use describeworld::task::{constraint_variants, enumerate_tasks, ConstraintSet, GoalCategory, TaskUniverse};

fn universe() -> (SubtaskGraph, TaskUniverse) {
    let g = SubtaskGraph::load_default();
    let u = enumerate_tasks(&g);
    (g, u)
}

#[test]
fn totals() {
    let (_, u) = universe();
    assert_eq!(u.end_goals.len(), 2651);
    assert_eq!(u.tasks.len(), 10604);
    assert_eq!(u.constraint_sets_per_goal(), 4);
    assert!(u.shortfalls.is_empty(), "{:?}", u.shortfalls);
}

#[test]
fn category_counts_are_frozen() {
    let (_, u) = universe();
    let want = [
        (GoalCategory::Navigation, 15),
        (GoalCategory::Crafting, 1047),
        (GoalCategory::CraftThenNav, 156),
        (GoalCategory::BuildOnTerrain, 1072),
        (GoalCategory::CoverTerrain, 295),
        (GoalCategory::ClearItems, 66),
    ];
    for (c, n) in want {
        assert_eq!(u.goal_counts.get(c), n, "{}", c.name());
        assert_eq!(u.end_goals.iter().filter(|g| g.category() == c).count(), n);
    }
    assert_eq!(u.goal_counts.total(), 2651);
}

#[test]
fn texts_are_unique() {
    let (_, u) = universe();
    let tasks: HashSet<&str> = u.tasks.iter().map(|t| t.text.as_str()).collect();
    assert_eq!(tasks.len(), u.tasks.len());
    let goals: HashSet<&str> = u.goal_texts.iter().map(String::as_str).collect();
    assert_eq!(goals.len(), u.end_goals.len());
}

#[test]
fn each_goal_has_four_distinct_family_members() {
    let (g, u) = universe();
    let family = ConstraintSet::family();
    assert_eq!(family.len(), 19);
    for (i, goal) in u.end_goals.iter().enumerate() {
        let tasks = u.tasks_of_goal(i);
        let sets: HashSet<_> = tasks.iter().map(|t| t.task.constraints).collect();
        assert_eq!(sets.len(), 4);
        assert!(sets.iter().all(|c| family.contains(c)));
        assert!(tasks
            .iter()
            .all(|t| t.task.goal == *goal && t.goal_text == goal.text(&g)));
    }
}

#[test]
fn constraint_categories_at_most_two_active() {
    let (_, u) = universe();
    let cats: HashSet<&str> = u.tasks.iter().map(|t| t.constraint_category.as_str()).collect();
    for c in &cats {
        assert!(["0R0P", "1R0P", "0R1P", "2R0P", "1R1P", "0R2P"].contains(c), "{c}");
    }
}

#[test]
fn enumeration_is_deterministic() {
    let (_, a) = universe();
    let (_, b) = universe();
    let ta: Vec<&str> = a.tasks.iter().map(|t| t.text.as_str()).collect();
    let tb: Vec<&str> = b.tasks.iter().map(|t| t.text.as_str()).collect();
    assert_eq!(ta, tb);
    assert_eq!(constraint_variants("make net", 4), constraint_variants("make net", 4));
}

#[test]
fn lookup_by_text() {
    let (_, u) = universe();
    for t in u.tasks.iter().step_by(97) {
        assert_eq!(u.task_by_text(&t.text).unwrap().task, t.task);
    }
    assert!(u.task_by_text("fly to the moon.").is_none());
}
