//! Episode dynamics under arbitrary action sequences.

use describeworld::episode::{Episode, Termination, WorldConfig};
use describeworld::lang::parse_description;
use describeworld::task::{goal_attainable, Task};
use describeworld::world::{Action, GridMap, Pos, Terrain};
use proptest::prelude::*;

mod common;

use common::graph;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn fuzzed_sequences_keep_the_ledger(
        task_index in 0usize..10_604,
        seed in 0u64..1_000,
        actions in prop::collection::vec(0u8..14, 1..320),
    ) {
        if let Err(e) = common::check_fuzzed(task_index, seed, &actions) {
            return Err(TestCaseError::fail(e));
        }
    }
}

fn task(text: &str) -> Task {
    parse_description(graph(), text).unwrap()
}

/// 3x3 interior; the agent starts at the top-left.
fn small_map(cells: &[(usize, usize, Option<Terrain>, Option<&str>)]) -> GridMap {
    let mut map = GridMap::empty(3, 3);
    for &(r, c, t, o) in cells {
        let cell = map.cell_mut(Pos::new(r, c));
        cell.terrain = t;
        cell.object = o.map(|o| graph().oid(o));
    }
    map
}

#[test]
fn reward_cells_pay_once() {
    let g = graph();
    let map = small_map(&[
        (1, 2, Some(Terrain::Lava), None),
        (3, 3, Some(Terrain::Field), Some("workspace")),
    ]);
    let mut ep = Episode::new(
        g,
        map,
        task("reach the workspace. walking on the lava will reward you."),
        WorldConfig::default(),
    )
    .unwrap();
    let rewards: Vec<i32> = [Action::Right, Action::Left, Action::Right]
        .iter()
        .map(|a| ep.step(g, *a).unwrap().reward)
        .collect();
    assert_eq!(rewards, vec![9, -1, -1]);
    assert_eq!(ep.traversals.reward, 2);
}

#[test]
fn penalty_cells_charge_every_entry() {
    let g = graph();
    let map = small_map(&[(1, 2, Some(Terrain::Water), None), (3, 3, None, Some("workspace"))]);
    let mut ep = Episode::new(
        g,
        map,
        task("reach the workspace. avoid walking on the water."),
        WorldConfig::default(),
    )
    .unwrap();
    let rewards: Vec<i32> = [Action::Right, Action::Left, Action::Right]
        .iter()
        .map(|a| ep.step(g, *a).unwrap().reward)
        .collect();
    assert_eq!(rewards, vec![-11, -1, -11]);
    assert_eq!(ep.total_reward, -23);
    assert_eq!(ep.traversals.per_terrain, [0, 0, 2]);
}

#[test]
fn step_cap_times_out() {
    let g = graph();
    let map = small_map(&[(3, 3, None, Some("workspace"))]);
    let mut ep = Episode::new(g, map, task("reach the workspace."), WorldConfig::default()).unwrap();
    let mut last = None;
    for _ in 0..300 {
        last = ep.step(g, Action::Up).unwrap().termination;
    }
    assert_eq!(last, Some(Termination::Timeout));
    assert_eq!(ep.total_reward, -300);
    assert!(ep.step(g, Action::Up).is_err());
}

#[test]
fn gathered_items_outlive_their_source() {
    let g = graph();
    let map = small_map(&[
        (1, 1, None, Some("tree")),
        (1, 3, None, Some("lumbershop")),
        (3, 3, None, Some("workspace")),
    ]);
    let mut ep = Episode::new(g, map, task("make stick."), WorldConfig::default()).unwrap();
    assert!(ep.step(g, Action::PickUp).unwrap().termination.is_none());
    assert!(goal_attainable(g, &ep.world, &ep.task.goal));
    // Wood is kept, so the tree's removal does not block the stick.
    for a in [Action::Right, Action::Right] {
        ep.step(g, a).unwrap();
    }
    let r = ep.step(g, Action::Use1).unwrap();
    assert_eq!(r.termination, Some(Termination::GoalComplete));
}

#[test]
fn infeasible_start_is_rejected() {
    let g = graph();
    let map = small_map(&[(3, 3, None, Some("workspace"))]);
    assert!(Episode::new(g, map, task("make stick."), WorldConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn attainability_matches_exhaustive_search(
        cells in prop::collection::vec((0u8..6, 0u8..16), 16),
        agent in 0usize..16,
        goal_index in 0usize..common::MINI_GOALS.len(),
        prefix in prop::collection::vec(0u8..14, 0..12),
    ) {
        match common::check_miniature(&cells, agent, goal_index, &prefix) {
            Ok(Some(_)) => {}
            Ok(None) => return Err(TestCaseError::reject("state space too large")),
            Err(e) => return Err(TestCaseError::fail(e)),
        }
    }
}
