//! The scripted expert: completeness, demonstration coverage and
//! shortest-path optimality.

mod common;

use common::{graph, stratified};
use describeworld::episode::WorldConfig;
use describeworld::mapgen::{generate_feasible, MapGenConfig};
use describeworld::oracle::nav::{distance_field, navigate, path_cost, UNREACHABLE};
use describeworld::oracle::{rollout, PathCost, RolloutMode};
use describeworld::task::{ConstraintSet, TerrainRole};
use describeworld::world::{GridMap, Pos, Terrain, WorldState};
use proptest::prelude::*;
use rayon::prelude::*;

#[test]
fn expert_completes_500_feasible_pairs() {
    let g = graph();
    let pairs = stratified(500);
    assert_eq!(pairs.len(), 500);
    let failures: Vec<String> = pairs
        .par_iter()
        .filter_map(|(t, seed)| {
            let (map, _) = generate_feasible(g, &MapGenConfig::default(), &t.task, *seed).ok()?;
            let r = rollout(g, map, &t.task, RolloutMode::Demonstration, WorldConfig::default());
            match r {
                Ok(r) if r.completed() => None,
                Ok(r) => Some(format!("{} seed {seed}: {:?}", t.text, r.termination)),
                Err(e) => Some(format!("{} seed {seed}: {e}", t.text)),
            }
        })
        .collect();
    assert!(failures.is_empty(), "{} failures: {:#?}", failures.len(), failures);
}

#[test]
fn demonstrations_enter_every_present_terrain() {
    let g = graph();
    for (t, seed) in stratified(120) {
        let (map, _) = generate_feasible(g, &MapGenConfig::default(), &t.task, seed).unwrap();
        let present = map.natural_terrains_present();
        let r = rollout(g, map, &t.task, RolloutMode::Demonstration, WorldConfig::default()).unwrap();
        for terrain in present {
            // The terrain may have been covered before it was visited only
            // if the goal covers it.
            let covered = r.initial_map.count_terrain(terrain) > 0
                && t.task.goal.atoms().iter().any(|a| a.terrains(g).contains(&terrain));
            let entered = r.traversals.per_terrain[terrain.natural_index().unwrap()] > 0;
            assert!(entered || covered, "{}: never entered {}", t.text, terrain.name());
        }
    }
}

#[test]
fn both_modes_issue_the_same_instructions() {
    let g = graph();
    for (t, seed) in stratified(60) {
        let (map, _) = generate_feasible(g, &MapGenConfig::default(), &t.task, seed).unwrap();
        let e = rollout(g, map.clone(), &t.task, RolloutMode::Expert, WorldConfig::default()).unwrap();
        let d = rollout(g, map, &t.task, RolloutMode::Demonstration, WorldConfig::default()).unwrap();
        assert!(e.completed() && d.completed());
        let heads = |r: &describeworld::oracle::OracleRollout| -> Vec<_> {
            r.instructions.iter().map(|s| s.instruction).collect()
        };
        assert_eq!(heads(&e), heads(&d), "{}", t.text);
    }
}

#[test]
fn rollouts_are_deterministic() {
    let g = graph();
    for (t, seed) in stratified(12) {
        let (map, _) = generate_feasible(g, &MapGenConfig::default(), &t.task, seed).unwrap();
        let a = rollout(
            g,
            map.clone(),
            &t.task,
            RolloutMode::Demonstration,
            WorldConfig::default(),
        )
        .unwrap();
        let b = rollout(g, map, &t.task, RolloutMode::Demonstration, WorldConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn rollout_replays_through_the_world() {
    let g = graph();
    for (t, seed) in stratified(12) {
        let (map, _) = generate_feasible(g, &MapGenConfig::default(), &t.task, seed).unwrap();
        let r = rollout(g, map.clone(), &t.task, RolloutMode::Expert, WorldConfig::default()).unwrap();
        let mut world = WorldState::new(map);
        let mut completed = Vec::new();
        for a in &r.actions {
            if let Some(s) = world.apply(g, *a).completed {
                completed.push(s);
            }
        }
        assert_eq!(completed, r.completed_subtasks);
        assert_eq!(r.rewards.iter().map(|x| *x as i64).sum::<i64>(), r.total_reward);
    }
}

// ------------------------------------------------------------ shortest paths

fn weighted_map(terrain: &[u8], armed: bool) -> GridMap {
    let mut map = GridMap::empty(4, 4);
    for (i, t) in terrain.iter().enumerate() {
        let cell = map.cell_mut(Pos::new(1 + i / 4, 1 + i % 4));
        cell.terrain = match t {
            1 => Some(Terrain::Lava),
            2 => Some(Terrain::Field),
            3 => Some(Terrain::Water),
            _ => None,
        };
        cell.reward_armed = armed;
    }
    map
}

/// Minimum over all simple paths, by exhaustive search.
fn brute_force(map: &GridMap, c: &ConstraintSet, cost: &PathCost, from: Pos, to: Pos) -> u32 {
    struct Search<'a> {
        map: &'a GridMap,
        c: &'a ConstraintSet,
        cost: &'a PathCost,
        to: Pos,
        seen: Vec<Pos>,
        best: u32,
    }
    impl Search<'_> {
        fn go(&mut self, at: Pos, acc: u32) {
            if acc >= self.best {
                return;
            }
            if at == self.to {
                self.best = acc;
                return;
            }
            for q in self.map.neighbours(at).collect::<Vec<_>>() {
                if !self.seen.contains(&q) {
                    self.seen.push(q);
                    let step = self.cost.enter(self.map, self.c, q);
                    self.go(q, acc + step);
                    self.seen.pop();
                }
            }
        }
    }
    let mut s = Search {
        map,
        c,
        cost,
        to,
        seen: vec![from],
        best: UNREACHABLE,
    };
    s.go(from, 0);
    s.best
}

fn role(i: u8) -> TerrainRole {
    [TerrainRole::Neutral, TerrainRole::Reward, TerrainRole::Penalty][i as usize]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn dijkstra_matches_exhaustive_search(
        terrain in prop::collection::vec(0u8..4, 16),
        roles in prop::array::uniform3(0u8..3),
        from in 0usize..16,
        to in 0usize..16,
    ) {
        let map = weighted_map(&terrain, true);
        let c = ConstraintSet { roles: roles.map(role) };
        let cost = PathCost::default();
        let (from, to) = (Pos::new(1 + from / 4, 1 + from % 4), Pos::new(1 + to / 4, 1 + to % 4));
        let dist = distance_field(&map, &c, &cost, &[to], &[]);
        let truth = brute_force(&map, &c, &cost, from, to);
        prop_assert_eq!(dist[map.index(from)], truth);
        let path = navigate(&map, from, &[to], &c, &cost).unwrap();
        prop_assert_eq!(path_cost(&map, &c, &cost, &path), truth);
        prop_assert_eq!(path.last().copied().unwrap_or(from), to);
    }
}
