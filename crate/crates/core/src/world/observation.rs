use serde::{Deserialize, Serialize};

use super::{Cell, GridMap, Pos, Terrain};
use crate::graph::ObjectId;

pub const CH_AGENT: usize = 0;
pub const CH_OBJECT: usize = 1;
pub const CH_TERRAIN: usize = 2;

/// Interior-only view of the map: `grid[r][c] = [agent, object, terrain]`
/// with object code `id + 1`, terrain code from [`Terrain::code`], and 0
/// meaning absent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub grid: Vec<Vec<[u8; 3]>>,
    pub inventory: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ObsError {
    #[error("observation must contain exactly one agent cell, found {0}")]
    AgentCount(usize),
    #[error("ragged observation grid")]
    Ragged,
    #[error("unknown terrain code {0}")]
    TerrainCode(u8),
}

pub fn observe_map(map: &GridMap, inventory: String) -> Observation {
    let grid = (1..=map.rows())
        .map(|r| {
            (1..=map.cols())
                .map(|c| {
                    let p = Pos::new(r, c);
                    let cell = map.cell(p);
                    [
                        u8::from(map.agent == p),
                        cell.object.map_or(0, |o| o.0 + 1),
                        cell.terrain.map_or(0, Terrain::code),
                    ]
                })
                .collect()
        })
        .collect();
    Observation { grid, inventory }
}

/// Inverse of [`observe_map`]. Reward arming is not part of the view and is
/// left cleared.
pub fn reconstruct_map(obs: &Observation) -> Result<GridMap, ObsError> {
    let rows = obs.grid.len();
    let cols = obs.grid.first().map_or(0, Vec::len);
    if obs.grid.iter().any(|row| row.len() != cols) {
        return Err(ObsError::Ragged);
    }
    let mut map = GridMap::empty(rows, cols);
    let mut agents = Vec::new();
    for (r, row) in obs.grid.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let p = Pos::new(r + 1, c + 1);
            if v[CH_AGENT] != 0 {
                agents.push(p);
            }
            let terrain = match v[CH_TERRAIN] {
                0 => None,
                code => Some(Terrain::from_code(code).ok_or(ObsError::TerrainCode(code))?),
            };
            *map.cell_mut(p) = Cell {
                wall: false,
                terrain,
                object: v[CH_OBJECT].checked_sub(1).map(ObjectId),
                reward_armed: false,
            };
        }
    }
    if agents.len() != 1 {
        return Err(ObsError::AgentCount(agents.len()));
    }
    map.agent = agents[0];
    Ok(map)
}
