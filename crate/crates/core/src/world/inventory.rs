use serde::{Deserialize, Serialize};

use crate::graph::{ItemId, SubtaskGraph};

/// Multiset of held items, indexed by item id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Inventory {
    counts: Vec<u32>,
}

impl Inventory {
    pub fn new() -> Self {
        Inventory::default()
    }

    pub fn count(&self, item: ItemId) -> u32 {
        self.counts.get(item.0 as usize).copied().unwrap_or(0)
    }

    pub fn has(&self, item: ItemId) -> bool {
        self.count(item) > 0
    }

    pub fn add(&mut self, item: ItemId, n: u32) {
        let i = item.0 as usize;
        if self.counts.len() <= i {
            self.counts.resize(i + 1, 0);
        }
        self.counts[i] += n;
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|c| *c == 0)
    }

    /// Held items with their counts, in item-id order.
    pub fn iter(&self) -> impl Iterator<Item = (ItemId, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(i, c)| (ItemId(i as u8), *c))
    }
}

/// Comma-separated listing in the graph's fixed item order. An item held
/// `n` times is listed `n` times.
pub fn render_inventory(inv: &Inventory, graph: &SubtaskGraph) -> String {
    let mut parts = Vec::new();
    for (item, n) in inv.iter() {
        for _ in 0..n {
            parts.push(graph.item_name(item));
        }
    }
    parts.join(", ")
}

/// Inverse of [`render_inventory`]; unknown names are rejected.
pub fn parse_inventory(text: &str, graph: &SubtaskGraph) -> Option<Inventory> {
    let mut inv = Inventory::new();
    if text.trim().is_empty() {
        return Some(inv);
    }
    for part in text.split(',') {
        inv.add(graph.item_by_name(part.trim())?, 1);
    }
    Some(inv)
}
