//! Map, inventory and the primitive action dynamics.

mod grid;
mod inventory;
mod observation;
mod state;

pub use grid::{Action, Cell, GridMap, MapError, Pos, Terrain, DEFAULT_SIZE};
pub use inventory::{parse_inventory, render_inventory, Inventory};
pub use observation::{observe_map, reconstruct_map, ObsError, Observation};
pub use state::{ActionOutcome, WorldState};
