//! End goals, terrain constraints and the enumerated task universe.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::graph::{Location, ObjectId, SubtaskGraph, SubtaskId, SubtaskKind};
use crate::hash::text_hash;
use crate::lang;
use crate::world::{GridMap, Pos, Terrain, WorldState};

/// One conjunct of a compositional goal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoalAtom {
    /// Complete the subtask at least once.
    Subtask { subtask: SubtaskId },
    /// Complete a build or place subtask on a cell of the given terrain.
    OnTerrain { subtask: SubtaskId, dest: Terrain },
    /// Leave no cell of a natural terrain uncovered.
    Cover { subtask: SubtaskId, target: Terrain },
}

impl GoalAtom {
    pub fn subtask(&self) -> SubtaskId {
        match *self {
            GoalAtom::Subtask { subtask } | GoalAtom::OnTerrain { subtask, .. } | GoalAtom::Cover { subtask, .. } => {
                subtask
            }
        }
    }

    /// Subtasks the atom names directly, including the placement that
    /// creates a placeable destination.
    pub fn involved(&self, graph: &SubtaskGraph) -> Vec<SubtaskId> {
        let mut out = vec![self.subtask()];
        if let GoalAtom::OnTerrain { dest, .. } = *self {
            if let Some(p) = graph.place_for_terrain(dest) {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Terrains the atom mentions or produces.
    pub fn terrains(&self, graph: &SubtaskGraph) -> BTreeSet<Terrain> {
        let mut out = BTreeSet::new();
        if let Some(t) = graph.spec(self.subtask()).effects.place_terrain {
            out.insert(t);
        }
        match *self {
            GoalAtom::OnTerrain { dest, .. } => {
                out.insert(dest);
            }
            GoalAtom::Cover { target, .. } => {
                out.insert(target);
            }
            GoalAtom::Subtask { .. } => {}
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalCategory {
    Navigation,
    Crafting,
    CraftThenNav,
    BuildOnTerrain,
    CoverTerrain,
    ClearItems,
}

impl GoalCategory {
    pub const ALL: [GoalCategory; 6] = [
        GoalCategory::Navigation,
        GoalCategory::Crafting,
        GoalCategory::CraftThenNav,
        GoalCategory::BuildOnTerrain,
        GoalCategory::CoverTerrain,
        GoalCategory::ClearItems,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GoalCategory::Navigation => "navigation",
            GoalCategory::Crafting => "crafting",
            GoalCategory::CraftThenNav => "craft_then_nav",
            GoalCategory::BuildOnTerrain => "build_on_terrain",
            GoalCategory::CoverTerrain => "cover_terrain",
            GoalCategory::ClearItems => "clear_items",
        }
    }

    /// Category implied by a conjunction of atoms.
    pub fn of_atoms(atoms: &[GoalAtom]) -> GoalCategory {
        if atoms.iter().any(|a| matches!(a, GoalAtom::Cover { .. })) {
            GoalCategory::CoverTerrain
        } else if atoms.iter().any(|a| matches!(a, GoalAtom::OnTerrain { .. })) {
            GoalCategory::BuildOnTerrain
        } else {
            GoalCategory::Crafting
        }
    }
}

impl fmt::Display for GoalCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "category", rename_all = "snake_case")]
pub enum EndGoal {
    Navigation {
        landmark: ObjectId,
    },
    /// One or two conjuncts; the category follows from the atom kinds.
    Conjunction {
        atoms: Vec<GoalAtom>,
    },
    CraftThenNav {
        atom: GoalAtom,
        landmark: ObjectId,
    },
    ClearItems {
        objects: Vec<ObjectId>,
    },
}

impl EndGoal {
    pub fn category(&self) -> GoalCategory {
        match self {
            EndGoal::Navigation { .. } => GoalCategory::Navigation,
            EndGoal::Conjunction { atoms } => GoalCategory::of_atoms(atoms),
            EndGoal::CraftThenNav { .. } => GoalCategory::CraftThenNav,
            EndGoal::ClearItems { .. } => GoalCategory::ClearItems,
        }
    }

    pub fn atoms(&self) -> Vec<GoalAtom> {
        match self {
            EndGoal::Conjunction { atoms } => atoms.clone(),
            EndGoal::CraftThenNav { atom, .. } => vec![*atom],
            _ => vec![],
        }
    }

    pub fn landmark(&self) -> Option<ObjectId> {
        match self {
            EndGoal::Navigation { landmark } | EndGoal::CraftThenNav { landmark, .. } => Some(*landmark),
            _ => None,
        }
    }

    /// Every subtask the goal names, including implied placements.
    pub fn mentioned_subtasks(&self, graph: &SubtaskGraph) -> BTreeSet<SubtaskId> {
        let mut out: BTreeSet<SubtaskId> = self.atoms().iter().flat_map(|a| a.involved(graph)).collect();
        if let EndGoal::ClearItems { objects } = self {
            out.extend(objects.iter().filter_map(|o| graph.gather_for_object(*o)));
        }
        out
    }

    pub fn text(&self, graph: &SubtaskGraph) -> String {
        lang::goal_sentence(graph, self)
    }
}

// ------------------------------------------------------------------ constraints

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainRole {
    #[default]
    Neutral,
    Reward,
    Penalty,
}

/// Roles for lava, field and water, in that order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub roles: [TerrainRole; 3],
}

impl ConstraintSet {
    pub const NEUTRAL: ConstraintSet = ConstraintSet {
        roles: [TerrainRole::Neutral; 3],
    };

    pub fn role(&self, t: Terrain) -> TerrainRole {
        t.natural_index().map_or(TerrainRole::Neutral, |i| self.roles[i])
    }

    pub fn with(mut self, t: Terrain, role: TerrainRole) -> Self {
        if let Some(i) = t.natural_index() {
            self.roles[i] = role;
        }
        self
    }

    pub fn is_neutral(&self) -> bool {
        *self == ConstraintSet::NEUTRAL
    }

    pub fn terrains_with(&self, role: TerrainRole) -> Vec<Terrain> {
        Terrain::NATURAL
            .iter()
            .copied()
            .filter(|t| self.role(*t) == role)
            .collect()
    }

    /// Label such as `1R1P`.
    pub fn category(&self) -> String {
        format!(
            "{}R{}P",
            self.terrains_with(TerrainRole::Reward).len(),
            self.terrains_with(TerrainRole::Penalty).len()
        )
    }

    /// All assignments with at most two non-neutral terrains.
    pub fn family() -> Vec<ConstraintSet> {
        let roles = [TerrainRole::Neutral, TerrainRole::Reward, TerrainRole::Penalty];
        let mut out = Vec::new();
        for a in roles {
            for b in roles {
                for c in roles {
                    let set = ConstraintSet { roles: [a, b, c] };
                    if set.roles.iter().filter(|r| **r != TerrainRole::Neutral).count() <= 2 {
                        out.push(set);
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Task {
    pub goal: EndGoal,
    pub constraints: ConstraintSet,
}

impl Task {
    pub fn new(goal: EndGoal, constraints: ConstraintSet) -> Self {
        Task { goal, constraints }
    }

    pub fn text(&self, graph: &SubtaskGraph) -> String {
        lang::describe_task(graph, self)
    }

    /// Stable id shared by every constraint variant of the same end goal.
    pub fn goal_id(&self, graph: &SubtaskGraph) -> u64 {
        text_hash(&self.goal.text(graph))
    }
}

// ------------------------------------------------------------------ predicates

fn landmark_present(graph: &SubtaskGraph, map: &GridMap, landmark: ObjectId) -> bool {
    map.interior()
        .any(|p| map.cell(p).object.is_some_and(|o| graph.is_landmark(o, landmark)))
}

pub fn agent_on_landmark(graph: &SubtaskGraph, map: &GridMap, landmark: ObjectId) -> bool {
    map.cell(map.agent)
        .object
        .is_some_and(|o| graph.is_landmark(o, landmark))
}

pub fn atom_satisfied(world: &WorldState, atom: &GoalAtom) -> bool {
    match *atom {
        GoalAtom::Subtask { subtask } => world.ledger.is_done(subtask),
        GoalAtom::OnTerrain { subtask, dest } => world
            .ledger
            .events()
            .iter()
            .any(|e| e.subtask == subtask && e.terrain_before == Some(dest)),
        GoalAtom::Cover { target, .. } => world.map.count_terrain(target) == 0,
    }
}

pub fn goal_satisfied(graph: &SubtaskGraph, world: &WorldState, goal: &EndGoal) -> bool {
    match goal {
        EndGoal::Navigation { landmark } => agent_on_landmark(graph, &world.map, *landmark),
        EndGoal::Conjunction { atoms } => atoms.iter().all(|a| atom_satisfied(world, a)),
        EndGoal::CraftThenNav { atom, landmark } => {
            atom_satisfied(world, atom) && agent_on_landmark(graph, &world.map, *landmark)
        }
        EndGoal::ClearItems { objects } => objects.iter().all(|o| world.map.count_object(*o) == 0),
    }
}

/// Subtasks that can still be completed from this state, by fixpoint over
/// the objects remaining on the map.
pub fn achievable_subtasks(graph: &SubtaskGraph, world: &WorldState) -> Vec<bool> {
    let n = graph.len();
    let mut ok: Vec<bool> = graph.ids().map(|id| world.ledger.is_done(id)).collect();
    let mut present = vec![false; graph.objects().len()];
    let mut has_empty = false;
    for p in world.map.interior() {
        match world.map.cell(p).object {
            Some(o) => present[o.0 as usize] = true,
            None => has_empty = true,
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            if ok[i] {
                continue;
            }
            let id = SubtaskId(i as u16);
            let spec = graph.spec(id);
            if !spec.prereqs.iter().all(|p| ok[p.0 as usize]) {
                continue;
            }
            if !spec.any_of.is_empty() && !spec.any_of.iter().any(|g| g.iter().all(|p| ok[p.0 as usize])) {
                continue;
            }
            let located = match spec.location {
                Location::AtObject(o) => {
                    present[o.0 as usize]
                        || graph
                            .ids()
                            .any(|s| ok[s.0 as usize] && graph.spec(s).effects.transform_object == Some(o))
                }
                Location::EmptyCell => {
                    has_empty
                        || present.iter().enumerate().any(|(o, here)| {
                            *here
                                && graph
                                    .gather_for_object(ObjectId(o as u8))
                                    .is_some_and(|g| ok[g.0 as usize])
                        })
                }
                Location::AnyCell => true,
            };
            if located {
                ok[i] = true;
                changed = true;
            }
        }
        if !changed {
            return ok;
        }
    }
}

/// Cells that are free now or will be once their object is gathered.
fn potentially_empty(graph: &SubtaskGraph, world: &WorldState, ok: &[bool]) -> Vec<Pos> {
    world
        .map
        .interior()
        .filter(|p| match world.map.cell(*p).object {
            None => true,
            Some(o) => graph.gather_for_object(o).is_some_and(|g| ok[g.0 as usize]),
        })
        .collect()
}

/// Candidate cells for an unfinished build-on-terrain atom.
fn build_cells(graph: &SubtaskGraph, world: &WorldState, ok: &[bool], dest: Terrain) -> Vec<Pos> {
    let free = potentially_empty(graph, world, ok);
    if dest.is_natural() {
        free.into_iter()
            .filter(|p| world.map.cell(*p).terrain == Some(dest))
            .collect()
    } else if graph.place_for_terrain(dest).is_some_and(|s| ok[s.0 as usize]) {
        free
    } else {
        free.into_iter()
            .filter(|p| world.map.cell(*p).terrain == Some(dest))
            .collect()
    }
}

fn atom_attainable(graph: &SubtaskGraph, world: &WorldState, ok: &[bool], atom: &GoalAtom) -> Option<Vec<Pos>> {
    if atom_satisfied(world, atom) {
        return Some(vec![]);
    }
    match *atom {
        GoalAtom::Subtask { subtask } => ok[subtask.0 as usize].then(Vec::new),
        GoalAtom::Cover { .. } => graph
            .ids()
            .any(|s| ok[s.0 as usize] && graph.spec(s).effects.place_terrain.is_some())
            .then(Vec::new),
        GoalAtom::OnTerrain { subtask, dest } => {
            if !ok[subtask.0 as usize] {
                return None;
            }
            if graph.spec(subtask).kind == SubtaskKind::Build {
                let cells = build_cells(graph, world, ok, dest);
                (!cells.is_empty()).then_some(cells)
            } else {
                let reachable = world.map.count_terrain(dest) > 0
                    || (!dest.is_natural() && graph.place_for_terrain(dest).is_some_and(|s| ok[s.0 as usize]));
                reachable.then(Vec::new)
            }
        }
    }
}

/// False exactly when no continuation from this state satisfies the goal.
pub fn goal_attainable(graph: &SubtaskGraph, world: &WorldState, goal: &EndGoal) -> bool {
    if goal_satisfied(graph, world, goal) {
        return true;
    }
    let ok = achievable_subtasks(graph, world);
    match goal {
        EndGoal::Navigation { landmark } => landmark_present(graph, &world.map, *landmark),
        EndGoal::CraftThenNav { atom, landmark } => {
            landmark_present(graph, &world.map, *landmark) && atom_attainable(graph, world, &ok, atom).is_some()
        }
        EndGoal::ClearItems { objects } => objects
            .iter()
            .all(|o| world.map.count_object(*o) == 0 || graph.gather_for_object(*o).is_some_and(|g| ok[g.0 as usize])),
        EndGoal::Conjunction { atoms } => {
            let mut cell_sets = Vec::new();
            for atom in atoms {
                match atom_attainable(graph, world, &ok, atom) {
                    None => return false,
                    Some(cells) if !cells.is_empty() => cell_sets.push(cells),
                    Some(_) => {}
                }
            }
            distinct_cells_exist(&cell_sets)
        }
    }
}

/// Whether one distinct cell can be picked from each set.
fn distinct_cells_exist(sets: &[Vec<Pos>]) -> bool {
    fn pick(sets: &[Vec<Pos>], used: &mut Vec<Pos>) -> bool {
        let Some((first, rest)) = sets.split_first() else {
            return true;
        };
        for p in first {
            if !used.contains(p) {
                used.push(*p);
                if pick(rest, used) {
                    return true;
                }
                used.pop();
            }
        }
        false
    }
    pick(sets, &mut Vec::new())
}

/// Subtasks the goal asks for directly; repeat counts for cover and clear
/// goals are resolved against the map at plan time.
pub fn required_subtasks(graph: &SubtaskGraph, goal: &EndGoal) -> BTreeSet<SubtaskId> {
    goal.mentioned_subtasks(graph)
}

// ------------------------------------------------------------------ enumeration

#[derive(Clone, Debug, Serialize)]
pub struct TaskRecord {
    pub id: u64,
    pub text: String,
    pub goal_text: String,
    pub category: GoalCategory,
    pub constraint_category: String,
    pub task: Task,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct CategoryCounts {
    pub navigation: usize,
    pub crafting: usize,
    pub craft_then_nav: usize,
    pub build_on_terrain: usize,
    pub cover_terrain: usize,
    pub clear_items: usize,
}

impl CategoryCounts {
    pub fn add(&mut self, c: GoalCategory) {
        *self.get_mut(c) += 1;
    }

    pub fn get(&self, c: GoalCategory) -> usize {
        match c {
            GoalCategory::Navigation => self.navigation,
            GoalCategory::Crafting => self.crafting,
            GoalCategory::CraftThenNav => self.craft_then_nav,
            GoalCategory::BuildOnTerrain => self.build_on_terrain,
            GoalCategory::CoverTerrain => self.cover_terrain,
            GoalCategory::ClearItems => self.clear_items,
        }
    }

    fn get_mut(&mut self, c: GoalCategory) -> &mut usize {
        match c {
            GoalCategory::Navigation => &mut self.navigation,
            GoalCategory::Crafting => &mut self.crafting,
            GoalCategory::CraftThenNav => &mut self.craft_then_nav,
            GoalCategory::BuildOnTerrain => &mut self.build_on_terrain,
            GoalCategory::CoverTerrain => &mut self.cover_terrain,
            GoalCategory::ClearItems => &mut self.clear_items,
        }
    }

    pub fn total(&self) -> usize {
        GoalCategory::ALL.iter().map(|c| self.get(*c)).sum()
    }
}

pub const TARGET_END_GOALS: usize = 2651;
pub const TARGET_TASKS: usize = 10604;

/// Shortfall of valid candidates for a pair family.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Shortfall {
    pub family: &'static str,
    pub wanted: usize,
    pub available: usize,
}

#[derive(Clone, Debug)]
pub struct TaskUniverse {
    pub end_goals: Vec<EndGoal>,
    pub goal_texts: Vec<String>,
    pub tasks: Vec<TaskRecord>,
    pub goal_counts: CategoryCounts,
    pub shortfalls: Vec<Shortfall>,
    by_text: HashMap<String, usize>,
}

impl TaskUniverse {
    pub fn task_by_text(&self, text: &str) -> Option<&TaskRecord> {
        self.by_text.get(text).map(|i| &self.tasks[*i])
    }

    pub fn tasks_of_goal(&self, goal_index: usize) -> &[TaskRecord] {
        let k = self.tasks.len() / self.end_goals.len().max(1);
        &self.tasks[goal_index * k..(goal_index + 1) * k]
    }

    pub fn constraint_sets_per_goal(&self) -> usize {
        self.tasks.len() / self.end_goals.len().max(1)
    }
}

/// All single atoms, grouped by kind, in graph order.
pub fn single_atoms(graph: &SubtaskGraph) -> (Vec<GoalAtom>, Vec<GoalAtom>, Vec<GoalAtom>) {
    let mut plain = Vec::new();
    let mut on_terrain = Vec::new();
    let mut cover = Vec::new();
    for id in graph.canonical_order().iter().copied() {
        plain.push(GoalAtom::Subtask { subtask: id });
        let spec = graph.spec(id);
        match spec.kind {
            SubtaskKind::Build => {
                for dest in Terrain::ALL {
                    on_terrain.push(GoalAtom::OnTerrain { subtask: id, dest });
                }
            }
            SubtaskKind::Place => {
                for dest in Terrain::NATURAL {
                    on_terrain.push(GoalAtom::OnTerrain { subtask: id, dest });
                }
                for target in Terrain::NATURAL {
                    cover.push(GoalAtom::Cover { subtask: id, target });
                }
            }
            _ => {}
        }
    }
    (plain, on_terrain, cover)
}

/// Two atoms may be conjoined when they share no subtask, neither lies in
/// the other's prerequisite closure, and they touch no common terrain.
pub fn compatible(graph: &SubtaskGraph, a: &GoalAtom, b: &GoalAtom) -> bool {
    let ia = a.involved(graph);
    let ib = b.involved(graph);
    let ca = graph.closure(&ia);
    let cb = graph.closure(&ib);
    if ia.iter().any(|s| cb.contains(s)) || ib.iter().any(|s| ca.contains(s)) {
        return false;
    }
    a.terrains(graph).is_disjoint(&b.terrains(graph))
}

/// Orient an unordered pair by the smaller text hash.
fn oriented_pair(graph: &SubtaskGraph, a: GoalAtom, b: GoalAtom) -> EndGoal {
    let ab = EndGoal::Conjunction { atoms: vec![a, b] };
    let ba = EndGoal::Conjunction { atoms: vec![b, a] };
    if text_hash(&ab.text(graph)) <= text_hash(&ba.text(graph)) {
        ab
    } else {
        ba
    }
}

fn unordered_key(goal: &EndGoal) -> EndGoal {
    match goal {
        EndGoal::Conjunction { atoms } => {
            let mut atoms = atoms.clone();
            atoms.sort();
            EndGoal::Conjunction { atoms }
        }
        EndGoal::ClearItems { objects } => {
            let mut objects = objects.clone();
            objects.sort();
            EndGoal::ClearItems { objects }
        }
        g => g.clone(),
    }
}

/// Pick `want` goals: pinned ones of this family first, then the remaining
/// candidates in ascending text-hash order.
fn take_by_hash(
    graph: &SubtaskGraph,
    family: &'static str,
    mut candidates: Vec<EndGoal>,
    pinned: &[EndGoal],
    want: usize,
    shortfalls: &mut Vec<Shortfall>,
) -> Vec<EndGoal> {
    let mut out: Vec<EndGoal> = Vec::new();
    let mut seen: HashSet<EndGoal> = HashSet::new();
    for p in pinned {
        if seen.insert(unordered_key(p)) {
            out.push(p.clone());
        }
    }
    let mut keyed: Vec<(u64, String, EndGoal)> = candidates
        .drain(..)
        .map(|g| {
            let t = g.text(graph);
            (text_hash(&t), t, g)
        })
        .collect();
    keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    let available = keyed.len();
    for (_, _, g) in keyed {
        if out.len() >= want {
            break;
        }
        if seen.insert(unordered_key(&g)) {
            out.push(g);
        }
    }
    if out.len() < want {
        shortfalls.push(Shortfall {
            family,
            wanted: want,
            available: available.max(out.len()),
        });
    }
    out
}

pub fn enumerate_end_goals(graph: &SubtaskGraph) -> (Vec<EndGoal>, Vec<Shortfall>) {
    let cfg = &graph.goals;
    let mut shortfalls = Vec::new();
    let pinned: Vec<EndGoal> = cfg
        .pinned
        .iter()
        .map(|t| {
            lang::parse_goal_sentence(graph, t).unwrap_or_else(|e| panic!("pinned goal {t:?} does not parse: {e}"))
        })
        .collect();
    let (plain, on_terrain, cover) = single_atoms(graph);
    let mut goals = Vec::new();

    for name in &cfg.nav_targets {
        goals.push(EndGoal::Navigation {
            landmark: graph.oid(name),
        });
    }

    let clear: Vec<ObjectId> = cfg.clear_targets.iter().map(|n| graph.oid(n)).collect();
    for o in &clear {
        goals.push(EndGoal::ClearItems { objects: vec![*o] });
    }
    for i in 0..clear.len() {
        for j in i + 1..clear.len() {
            let mut pair = vec![clear[i], clear[j]];
            pair.sort_by(|a, b| graph.object(*a).plural.cmp(&graph.object(*b).plural));
            goals.push(EndGoal::ClearItems { objects: pair });
        }
    }

    let pairs_of = |pool_a: &[GoalAtom], pool_b: &[GoalAtom], same: bool| {
        let mut out = Vec::new();
        for (i, a) in pool_a.iter().enumerate() {
            let start = if same { i + 1 } else { 0 };
            for b in &pool_b[start.min(pool_b.len())..] {
                if compatible(graph, a, b) {
                    out.push(oriented_pair(graph, *a, *b));
                }
            }
        }
        out
    };
    let pinned_of = |cat: GoalCategory, pairs: bool| -> Vec<EndGoal> {
        pinned
            .iter()
            .filter(|g| g.category() == cat)
            .filter(|g| !pairs || g.atoms().len() == 2)
            .cloned()
            .collect()
    };

    // Crafting: plain singles, then pairs of plain atoms.
    for a in &plain {
        goals.push(EndGoal::Conjunction { atoms: vec![*a] });
    }
    let craft_candidates = pairs_of(&plain, &plain, true);
    goals.extend(take_by_hash(
        graph,
        "craft_pairs",
        craft_candidates,
        &pinned_of(GoalCategory::Crafting, true),
        cfg.craft_pairs,
        &mut shortfalls,
    ));

    // Build on terrain.
    for a in &on_terrain {
        goals.push(EndGoal::Conjunction { atoms: vec![*a] });
    }
    let mut build_candidates = pairs_of(&on_terrain, &on_terrain, true);
    build_candidates.extend(pairs_of(&on_terrain, &plain, false));
    goals.extend(take_by_hash(
        graph,
        "build_pairs",
        build_candidates,
        &pinned_of(GoalCategory::BuildOnTerrain, true),
        cfg.build_pairs,
        &mut shortfalls,
    ));

    // Cover terrain.
    for a in &cover {
        goals.push(EndGoal::Conjunction { atoms: vec![*a] });
    }
    let mut others: Vec<GoalAtom> = plain.clone();
    others.extend(on_terrain.iter().copied());
    let mut cover_candidates = pairs_of(&cover, &cover, true);
    cover_candidates.extend(pairs_of(&cover, &others, false));
    goals.extend(take_by_hash(
        graph,
        "cover_pairs",
        cover_candidates,
        &pinned_of(GoalCategory::CoverTerrain, true),
        cfg.cover_pairs,
        &mut shortfalls,
    ));

    // Craft then navigate.
    let landmarks: Vec<ObjectId> = cfg.then_landmarks.iter().map(|n| graph.oid(n)).collect();
    let mut then_candidates = Vec::new();
    for atom in plain.iter().chain(&on_terrain).chain(&cover) {
        for l in &landmarks {
            then_candidates.push(EndGoal::CraftThenNav {
                atom: *atom,
                landmark: *l,
            });
        }
    }
    goals.extend(take_by_hash(
        graph,
        "then_goals",
        then_candidates,
        &pinned_of(GoalCategory::CraftThenNav, false),
        cfg.then_goals,
        &mut shortfalls,
    ));

    // Pinned goals outside the sampled families must already be present.
    let keys: HashSet<EndGoal> = goals.iter().map(unordered_key).collect();
    for p in &pinned {
        assert!(
            keys.contains(&unordered_key(p)),
            "pinned goal {:?} missing from universe",
            p.text(graph)
        );
    }
    (goals, shortfalls)
}

/// Constraint variants for one end goal, seeded by its text hash.
pub fn constraint_variants(goal_text: &str, k: usize) -> Vec<ConstraintSet> {
    let family = ConstraintSet::family();
    let mut rng = ChaCha8Rng::seed_from_u64(text_hash(goal_text));
    let mut picked: Vec<usize> = sample(&mut rng, family.len(), k.min(family.len())).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| family[i]).collect()
}

pub fn enumerate_tasks(graph: &SubtaskGraph) -> TaskUniverse {
    let (end_goals, shortfalls) = enumerate_end_goals(graph);
    let k = graph.goals.constraint_sets_per_goal;
    let mut tasks = Vec::with_capacity(end_goals.len() * k);
    let mut goal_texts = Vec::with_capacity(end_goals.len());
    let mut goal_counts = CategoryCounts::default();
    let mut by_text = HashMap::new();
    for goal in &end_goals {
        let goal_text = goal.text(graph);
        goal_counts.add(goal.category());
        for c in constraint_variants(&goal_text, k) {
            let task = Task::new(goal.clone(), c);
            let text = task.text(graph);
            by_text.insert(text.clone(), tasks.len());
            tasks.push(TaskRecord {
                id: text_hash(&goal_text),
                text,
                goal_text: goal_text.clone(),
                category: goal.category(),
                constraint_category: c.category(),
                task,
            });
        }
        goal_texts.push(goal_text);
    }
    TaskUniverse {
        end_goals,
        goal_texts,
        tasks,
        goal_counts,
        shortfalls,
        by_text,
    }
}
