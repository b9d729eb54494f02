//! Loading the world definition: counts, the two-action recipe table and
//! rejection of malformed configurations.

use describeworld::graph::{load_graph, GraphConfig, GraphError, RecipeBase, SubtaskConfig, SubtaskGraph};
use describeworld::world::Action;
use proptest::prelude::*;

const USES: [Action; 5] = [Action::Use1, Action::Use2, Action::Use3, Action::Use4, Action::Use5];

/// (first action, shared items, products by use_1..use_5); `None` is a blank cell.
type RecipeRow = (Action, Vec<&'static str>, [Option<&'static str>; 5]);

fn recipe_table() -> Vec<RecipeRow> {
    vec![
        (
            Action::Place2,
            vec!["spade"],
            [
                Some("place wood flooring"),
                Some("place iron flooring"),
                Some("place silver flooring"),
                Some("place gold flooring"),
                Some("place diamond flooring"),
            ],
        ),
        (
            Action::Use2,
            vec!["hay", "wood slats"],
            [
                Some("build barn"),
                None,
                Some("build chicken barn"),
                Some("build pig barn"),
                None,
            ],
        ),
        (
            Action::Use3,
            vec!["iron", "wood slats"],
            [
                Some("build house"),
                None,
                Some("build silver house"),
                Some("build gold house"),
                Some("build diamond house"),
            ],
        ),
        (
            Action::Use4,
            vec!["gold ore", "silver ore"],
            [
                Some("erect wood shrine"),
                Some("erect iron shrine"),
                Some("erect chicken shrine"),
                Some("erect pig shrine"),
                Some("erect diamond shrine"),
            ],
        ),
    ]
}

fn graph() -> SubtaskGraph {
    SubtaskGraph::load_default()
}

#[test]
fn world_counts() {
    let c = graph().counts();
    assert_eq!(c.objects, 29);
    assert_eq!(c.pickable, 11);
    assert_eq!(c.craftable, 19);
    assert_eq!(c.structures, 13);
    assert_eq!(c.placeable_terrains, 7);
    assert_eq!(c.natural_terrains, 3);
    assert_eq!(c.actions, 14);
}

#[test]
fn recipe_table_matches() {
    let g = graph();
    let mut populated = 0;
    for (first, items, row) in recipe_table() {
        for (k, cell) in row.iter().enumerate() {
            let found = g.two_action_subtask(first, USES[k]);
            match cell {
                None => assert_eq!(found, None, "{} + use_{} must be blank", first.name(), k + 1),
                Some(phrase) => {
                    populated += 1;
                    let id = found.unwrap_or_else(|| panic!("missing {phrase}"));
                    assert_eq!(g.phrase(id), *phrase);
                    let (base, material) = g.spec(id).recipe.expect("recipe subtask");
                    let r = g.compose_recipe(base, material).unwrap();
                    assert_eq!(r.actions, (first, USES[k]));
                    let mut got: Vec<String> = r.prereq_items.iter().map(|s| s.replace('_', " ")).collect();
                    got.sort();
                    let mut want: Vec<String> = items.iter().map(|s| s.to_string()).collect();
                    want.sort();
                    assert_eq!(got, want, "{phrase}");
                }
            }
        }
    }
    assert_eq!(populated, 17);
    assert_eq!(g.recipes().count(), 17);
}

#[test]
fn unsupported_combination_is_rejected() {
    let g = graph();
    let err = g
        .compose_recipe(RecipeBase::Barn, Some(describeworld::graph::Material::Iron))
        .unwrap_err();
    assert!(matches!(err, GraphError::UnsupportedCombination { .. }), "{err}");
}

#[test]
fn canonical_order_is_a_permutation() {
    let g = graph();
    let mut order: Vec<_> = g.canonical_order().to_vec();
    assert_eq!(order.len(), g.len());
    order.sort();
    order.dedup();
    assert_eq!(order.len(), g.len());
    for (i, id) in g.canonical_order().iter().enumerate() {
        assert_eq!(g.rank(*id) as usize, i);
    }
}

#[test]
fn closure_is_closed() {
    let g = graph();
    for id in g.ids() {
        let c = g.closure(&[id]);
        assert!(c.contains(&id));
        for s in &c {
            for p in &g.spec(*s).prereqs {
                assert!(c.contains(p));
            }
        }
    }
}

fn load(mutate: impl FnOnce(&mut GraphConfig)) -> Result<SubtaskGraph, GraphError> {
    let mut config = GraphConfig::default_config();
    mutate(&mut config);
    load_graph(&config)
}

fn subtask<'a>(config: &'a mut GraphConfig, id: &str) -> &'a mut SubtaskConfig {
    config.subtasks.iter_mut().find(|s| s.id == id).unwrap()
}

#[test]
fn default_config_loads() {
    assert!(load(|_| {}).is_ok());
}

#[test]
fn dangling_prerequisite_is_rejected() {
    let err = load(|c| {
        c.subtasks.retain(|s| s.id != "make_stick");
        c.canonical_order.retain(|s| s != "make_stick");
    })
    .unwrap_err();
    assert!(
        matches!(err, GraphError::Dangling { ref missing, .. } if missing == "make_stick"),
        "{err}"
    );
}

#[test]
fn cycle_is_rejected() {
    let err = load(|c| subtask(c, "cut_wood").prereqs.push("make_stick".into())).unwrap_err();
    assert!(matches!(err, GraphError::Cycle(_)), "{err}");
}

#[test]
fn duplicate_subtask_is_rejected() {
    let err = load(|c| {
        let dup = subtask(c, "get_stone").clone();
        c.subtasks.push(dup);
    })
    .unwrap_err();
    assert!(matches!(err, GraphError::Duplicate { .. }), "{err}");
}

#[test]
fn unknown_action_is_rejected() {
    let err = load(|c| subtask(c, "get_stone").actions = vec!["jump".into()]).unwrap_err();
    assert!(matches!(err, GraphError::Unknown { kind: "action", .. }), "{err}");
}

#[test]
fn declared_total_mismatch_is_rejected() {
    let err = load(|c| c.declared_totals.objects += 1).unwrap_err();
    assert!(matches!(err, GraphError::CountMismatch { .. }), "{err}");
}

#[test]
fn malformed_toml_is_rejected() {
    assert!(matches!(
        SubtaskGraph::from_toml("version = "),
        Err(GraphError::Parse(_))
    ));
}

#[test]
fn fingerprint_tracks_content() {
    let a = graph().fingerprint();
    assert_eq!(a, graph().fingerprint());
    let b = load(|c| subtask(c, "get_stone").phrase = "get rock".into())
        .unwrap()
        .fingerprint();
    assert_ne!(a, b);
}

proptest! {
    #[test]
    fn only_table_cells_compose(first in 0usize..14, second in 0usize..14) {
        let g = graph();
        let (first, second) = (Action::from_index(first).unwrap(), Action::from_index(second).unwrap());
        let expected = recipe_table()
            .into_iter()
            .find(|(f, _, _)| *f == first)
            .and_then(|(_, _, row)| USES.iter().position(|u| *u == second).and_then(|k| row[k]));
        let found = g.two_action_subtask(first, second).map(|id| g.phrase(id).to_string());
        prop_assert_eq!(found.as_deref(), expected);
    }
}
