//! Terrain-weighted shortest paths on the grid.

use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::task::{ConstraintSet, TerrainRole};
use crate::world::{Action, GridMap, Pos};

/// Integer cost of entering a cell. All costs are at least `floor`, so
/// every edge is strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathCost {
    pub base: u32,
    pub penalty: u32,
    pub reward_credit: u32,
    pub floor: u32,
}

impl Default for PathCost {
    fn default() -> Self {
        PathCost {
            base: 10,
            penalty: 500,
            reward_credit: 5,
            floor: 1,
        }
    }
}

pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum NavError {
    #[error("no target cell is reachable")]
    Unreachable,
}

impl PathCost {
    pub fn enter(&self, map: &GridMap, constraints: &ConstraintSet, p: Pos) -> u32 {
        let cell = map.cell(p);
        let mut cost = self.base as i64;
        if let Some(t) = cell.terrain {
            match constraints.role(t) {
                TerrainRole::Penalty => cost += self.penalty as i64,
                TerrainRole::Reward if cell.reward_armed => cost -= self.reward_credit as i64,
                _ => {}
            }
        }
        cost.max(self.floor as i64) as u32
    }
}

/// Cost-to-go from every cell to the nearest target. Blocked cells are
/// never entered. Indexed by [`GridMap::index`].
pub fn distance_field(
    map: &GridMap,
    constraints: &ConstraintSet,
    cost: &PathCost,
    targets: &[Pos],
    blocked: &[Pos],
) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; map.width() * map.height()];
    let mut heap = BinaryHeap::new();
    for t in targets {
        let i = map.index(*t);
        if dist[i] != 0 {
            dist[i] = 0;
            heap.push(Reverse((0u32, *t)));
        }
    }
    while let Some(Reverse((d, p))) = heap.pop() {
        if d > dist[map.index(p)] || blocked.contains(&p) {
            continue;
        }
        let step_in = cost.enter(map, constraints, p);
        for q in map.neighbours(p) {
            if blocked.contains(&q) {
                continue;
            }
            let nd = d + step_in;
            let qi = map.index(q);
            if nd < dist[qi] {
                dist[qi] = nd;
                heap.push(Reverse((nd, q)));
            }
        }
    }
    dist
}

fn direction(from: Pos, to: Pos) -> Action {
    match (to.row as i64 - from.row as i64, to.col as i64 - from.col as i64) {
        (-1, 0) => Action::Up,
        (1, 0) => Action::Down,
        (0, -1) => Action::Left,
        _ => Action::Right,
    }
}

/// Neighbour on an optimal path, smallest position first on ties.
fn best_neighbour(
    map: &GridMap,
    constraints: &ConstraintSet,
    cost: &PathCost,
    dist: &[u32],
    from: Pos,
    blocked: &[Pos],
) -> Option<Pos> {
    let here = dist[map.index(from)];
    if here == UNREACHABLE || here == 0 {
        return None;
    }
    let mut options: Vec<Pos> = map
        .neighbours(from)
        .filter(|q| !blocked.contains(q))
        .filter(|q| {
            let dq = dist[map.index(*q)];
            dq != UNREACHABLE && dq + cost.enter(map, constraints, *q) == here
        })
        .collect();
    options.sort();
    options.first().copied()
}

/// First move towards the nearest target, or `None` when already on a
/// target or when no target is reachable.
pub fn next_move(
    map: &GridMap,
    constraints: &ConstraintSet,
    cost: &PathCost,
    targets: &[Pos],
    blocked: &[Pos],
) -> Option<Action> {
    let dist = distance_field(map, constraints, cost, targets, blocked);
    best_neighbour(map, constraints, cost, &dist, map.agent, blocked).map(|q| direction(map.agent, q))
}

/// Minimal-cost path from `from` to the nearest target, excluding `from`.
/// Reward cells are treated as armed for the whole path as given on the map.
pub fn navigate(
    map: &GridMap,
    from: Pos,
    targets: &[Pos],
    constraints: &ConstraintSet,
    cost: &PathCost,
) -> Result<Vec<Pos>, NavError> {
    let dist = distance_field(map, constraints, cost, targets, &[]);
    if dist[map.index(from)] == UNREACHABLE {
        return Err(NavError::Unreachable);
    }
    let mut path = Vec::new();
    let mut at = from;
    while let Some(q) = best_neighbour(map, constraints, cost, &dist, at, &[]) {
        path.push(q);
        at = q;
    }
    Ok(path)
}

/// Sum of entry costs along a path.
pub fn path_cost(map: &GridMap, constraints: &ConstraintSet, cost: &PathCost, path: &[Pos]) -> u32 {
    path.iter().map(|p| cost.enter(map, constraints, *p)).sum()
}

pub fn direction_to(from: Pos, to: Pos) -> Action {
    direction(from, to)
}
