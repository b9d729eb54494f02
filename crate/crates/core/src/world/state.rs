use serde::{Deserialize, Serialize};

use super::{Action, GridMap, Inventory, Pos};
use crate::graph::{CompletionEvent, CompletionLedger, Location, SubtaskGraph, SubtaskId};

/// Task-independent part of an episode: the map, what the agent holds,
/// what it has completed, and any half-finished two-action recipe.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    pub map: GridMap,
    pub inventory: Inventory,
    pub ledger: CompletionLedger,
    /// First action of a two-action recipe, performed on the agent's cell.
    pub pending: Option<Action>,
    pub step: u16,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ActionOutcome {
    /// Set when the agent entered a new cell.
    pub entered: Option<Pos>,
    pub completed: Option<SubtaskId>,
}

impl WorldState {
    pub fn new(map: GridMap) -> Self {
        WorldState {
            map,
            inventory: Inventory::new(),
            ledger: CompletionLedger::new(),
            pending: None,
            step: 0,
        }
    }

    pub fn agent(&self) -> Pos {
        self.map.agent
    }

    /// Apply one primitive action and advance the step counter.
    pub fn apply(&mut self, graph: &SubtaskGraph, action: Action) -> ActionOutcome {
        self.step += 1;
        let mut out = ActionOutcome::default();
        let here = self.map.agent;
        let object = self.map.cell(here).object;

        if let Some(delta) = action.delta() {
            self.pending = None;
            if let Some(next) = here.offset(delta) {
                if self.map.in_bounds(next) && !self.map.cell(next).wall {
                    self.map.agent = next;
                    out.entered = Some(next);
                }
            }
        } else if action == Action::PickUp {
            self.pending = None;
            if let Some(id) = object.and_then(|o| graph.gather_for_object(o)) {
                out.completed = self.try_complete(graph, id);
            }
        } else if action.is_use() {
            if let Some(first) = self.pending.take() {
                if let Some(id) = graph.two_action_subtask(first, action) {
                    out.completed = self.try_complete(graph, id);
                }
            } else if let Some(id) = graph.single_action_subtask(action, object) {
                out.completed = self.try_complete(graph, id);
            } else if object.is_none() && graph.base_starting_with(action) {
                self.pending = Some(action);
            }
        } else {
            self.pending = None;
            if let Some(id) = graph.single_action_subtask(action, object) {
                out.completed = self.try_complete(graph, id);
            } else if graph.base_starting_with(action) {
                self.pending = Some(action);
            }
        }
        out
    }

    /// Whether `id` would complete if its action(s) were performed on the
    /// agent's current cell.
    pub fn can_complete_here(&self, graph: &SubtaskGraph, id: SubtaskId) -> bool {
        let spec = graph.spec(id);
        let cell = self.map.cell(self.map.agent);
        let located = match spec.location {
            Location::AtObject(o) => cell.object == Some(o),
            Location::EmptyCell => cell.object.is_none(),
            Location::AnyCell => true,
        };
        located && graph.is_eligible(id, &self.ledger, &self.inventory)
    }

    fn try_complete(&mut self, graph: &SubtaskGraph, id: SubtaskId) -> Option<SubtaskId> {
        if !self.can_complete_here(graph, id) {
            return None;
        }
        let here = self.map.agent;
        let spec = graph.spec(id);
        let terrain_before = self.map.cell(here).terrain;
        for item in &spec.effects.add_items {
            self.inventory.add(*item, 1);
        }
        let cell = self.map.cell_mut(here);
        if spec.effects.remove_object {
            cell.object = None;
        }
        if let Some(o) = spec.effects.transform_object {
            cell.object = Some(o);
        }
        if let Some(o) = spec.effects.place_object {
            cell.object = Some(o);
        }
        if let Some(t) = spec.effects.place_terrain {
            cell.terrain = Some(t);
            cell.reward_armed = false;
        }
        self.ledger.record(CompletionEvent {
            subtask: id,
            step: self.step,
            cell: here,
            terrain_before,
        });
        Some(id)
    }
}
