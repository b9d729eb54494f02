//! Pass/fail cross-checks of a loaded configuration against the reference
//! environment: inventory counts, the two-action recipe table, task-universe
//! totals and split membership.

use serde::Serialize;

use crate::graph::{RecipeBase, SubtaskGraph};
use crate::splits::{self, SplitName};
use crate::task::{TaskUniverse, TARGET_END_GOALS, TARGET_TASKS};
use crate::world::Action;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConformanceItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn item(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> ConformanceItem {
    ConformanceItem {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

pub type RecipeRow = (
    &'static str,
    &'static str,
    &'static [&'static str],
    [Option<&'static str>; 5],
);

/// Reference two-action recipe table: base, first action, shared
/// prerequisite items, and the product for `use_1` to `use_5`.
pub const RECIPE_TABLE: [RecipeRow; 4] = [
    (
        "flooring",
        "place_2",
        &["spade"],
        [
            Some("wood flooring"),
            Some("iron flooring"),
            Some("silver flooring"),
            Some("gold flooring"),
            Some("diamond flooring"),
        ],
    ),
    (
        "barn",
        "use_2",
        &["hay", "wood slats"],
        [Some("barn"), None, Some("chicken barn"), Some("pig barn"), None],
    ),
    (
        "house",
        "use_3",
        &["iron", "wood slats"],
        [
            Some("house"),
            None,
            Some("silver house"),
            Some("gold house"),
            Some("diamond house"),
        ],
    ),
    (
        "shrine",
        "use_4",
        &["gold ore", "silver ore"],
        [
            Some("wood shrine"),
            Some("iron shrine"),
            Some("chicken shrine"),
            Some("pig shrine"),
            Some("diamond shrine"),
        ],
    ),
];

const USES: [Action; 5] = [Action::Use1, Action::Use2, Action::Use3, Action::Use4, Action::Use5];

pub fn inventory_checks(graph: &SubtaskGraph) -> Vec<ConformanceItem> {
    let c = graph.counts();
    let row = |name: &str, got: usize, want: usize| item(name, got == want, format!("{got} (expected {want})"));
    vec![
        row("buildable structures", c.structures, 13),
        row("placeable terrains", c.placeable_terrains, 7),
        row("natural terrains", c.natural_terrains, 3),
        row("actions", c.actions, 14),
        row("objects", c.objects, 29),
    ]
}

fn normalise(s: &str) -> String {
    s.replace('_', " ")
}

/// Every populated cell yields its product through (first action, use_k)
/// with the listed prerequisite items; every blank cell yields nothing.
pub fn recipe_checks(graph: &SubtaskGraph) -> Vec<ConformanceItem> {
    let mut out = Vec::new();
    let mut populated = 0;
    for (base, first, prereqs, row) in RECIPE_TABLE {
        let first_action = Action::from_name(first).expect("table action");
        let base_id = RecipeBase::from_name(base).expect("table base");
        for (k, cell) in row.iter().enumerate() {
            let name = format!("recipe {base} + {first} + use_{}", k + 1);
            let found = graph.two_action_subtask(first_action, USES[k]);
            match (cell, found) {
                (None, None) => out.push(item(name, true, "blank cell rejected")),
                (None, Some(id)) => out.push(item(name, false, format!("blank cell produced {}", graph.phrase(id)))),
                (Some(want), None) => out.push(item(name, false, format!("missing {want}"))),
                (Some(want), Some(id)) => {
                    populated += 1;
                    let spec = graph.spec(id);
                    let phrase_ok = graph.phrase(id).ends_with(want);
                    let recipe = spec.recipe.and_then(|(b, m)| graph.compose_recipe(b, m).ok());
                    let items_ok = recipe.as_ref().is_some_and(|r| {
                        let mut got: Vec<String> = r.prereq_items.iter().map(|s| normalise(s)).collect();
                        let mut want: Vec<String> = prereqs.iter().map(|s| s.to_string()).collect();
                        got.sort();
                        want.sort();
                        got == want && r.actions == (first_action, USES[k])
                    });
                    let base_ok = spec.recipe.is_some_and(|(b, _)| b == base_id);
                    out.push(item(
                        name,
                        phrase_ok && items_ok && base_ok,
                        format!(
                            "{} with {:?}",
                            graph.phrase(id),
                            recipe.map(|r| r.prereq_items).unwrap_or_default()
                        ),
                    ));
                }
            }
        }
    }
    out.push(item("populated recipe cells", populated == 17, format!("{populated}")));
    out
}

pub fn universe_checks(universe: &TaskUniverse) -> Vec<ConformanceItem> {
    let goals = universe.end_goals.len();
    let tasks = universe.tasks.len();
    let mut out = vec![
        item(
            "end goals",
            goals == TARGET_END_GOALS,
            format!("{goals} (target {TARGET_END_GOALS})"),
        ),
        item(
            "tasks",
            tasks == TARGET_TASKS,
            format!("{tasks} (target {TARGET_TASKS})"),
        ),
    ];
    for s in &universe.shortfalls {
        out.push(item(
            format!("pair supply {}", s.family),
            false,
            format!("wanted {}, available {}", s.wanted, s.available),
        ));
    }
    for c in crate::task::GoalCategory::ALL {
        out.push(item(
            format!("category {}", c.name()),
            true,
            universe.goal_counts.get(c).to_string(),
        ));
    }
    out
}

/// Audits of the rule-based splits; the length split is included only when
/// asked for because it needs oracle rollouts.
pub fn split_checks(
    graph: &SubtaskGraph,
    universe: &TaskUniverse,
    with_length: bool,
    mapgen: &crate::mapgen::MapGenConfig,
) -> Vec<ConformanceItem> {
    let mut out = Vec::new();
    for name in SplitName::ALL {
        if name == SplitName::Length && !with_length {
            continue;
        }
        let m = splits::build_split(graph, universe, name, mapgen, &splits::LengthParams::default());
        for a in splits::audit(graph, universe, &m) {
            out.push(item(format!("{}: {}", name.name(), a.check), a.passed, a.detail));
        }
    }
    out
}

pub fn report(
    graph: &SubtaskGraph,
    universe: &TaskUniverse,
    with_length: bool,
    mapgen: &crate::mapgen::MapGenConfig,
) -> Vec<ConformanceItem> {
    let mut out = inventory_checks(graph);
    out.extend(recipe_checks(graph));
    out.extend(universe_checks(universe));
    out.extend(split_checks(graph, universe, with_length, mapgen));
    out
}
