//! Reference trajectories: on each frozen map the expert must issue exactly
//! the listed sequence of instructions and finish the task.

mod common;

use describeworld::oracle::RolloutMode;

fn check(i: usize) {
    if let Err(e) = common::check_fixture(&common::fixture_cases()[i]) {
        panic!("{e}");
    }
}

#[test]
fn fence_on_silver_flooring_then_jeweler() {
    check(0);
}

#[test]
fn net_and_silver_flooring_over_water() {
    check(1);
}

#[test]
fn dirt_over_water_then_workspace() {
    check(2);
}

#[test]
fn clear_grasses_and_irons() {
    check(3);
}

#[test]
fn pig_barn_and_diamond_house() {
    check(4);
}

#[test]
fn diamond_flooring_on_field_then_lumbershop() {
    check(5);
}

#[test]
fn demonstration_spans_reach_every_present_terrain() {
    let case = &common::fixture_cases()[0];
    let r = common::fixture_rollout(case.file, case.task, RolloutMode::Demonstration).unwrap();
    let present = r.initial_map.natural_terrains_present();
    let mut world = describeworld::world::WorldState::new(r.initial_map.clone());
    let mut seen = std::collections::BTreeSet::new();
    for a in &r.actions {
        if let Some(p) = world.apply(common::graph(), *a).entered {
            if let Some(t) = r.initial_map.cell(p).terrain {
                seen.insert(t);
            }
        }
    }
    for t in present {
        assert!(seen.contains(&t), "terrain {} never entered", t.name());
    }
}
