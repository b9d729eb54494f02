//! Subtask definitions and their dependency graph.
//!
//! The graph is loaded from a TOML world definition (see
//! `config/default.toml`). Two-action recipes are declared as a table of
//! bases and ingredients and expanded into ordinary subtasks at load time.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::world::{Action, Pos, Terrain};

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectId(pub u8);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ItemId(pub u8);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubtaskId(pub u16);

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("dependency cycle through {0}")]
    Cycle(String),
    #[error("subtask {subtask} references unknown subtask {missing}")]
    Dangling { subtask: String, missing: String },
    #[error("unknown {kind} {name:?}")]
    Unknown { kind: &'static str, name: String },
    #[error("duplicate {kind} {name:?}")]
    Duplicate { kind: &'static str, name: String },
    #[error("declared {what} = {declared}, counted {counted}")]
    CountMismatch {
        what: &'static str,
        declared: usize,
        counted: usize,
    },
    #[error("subtask {0} has an invalid action sequence")]
    BadActions(String),
    #[error("canonical order: {0}")]
    CanonicalOrder(String),
    #[error("unsupported recipe combination {base} + {ingredient}")]
    UnsupportedCombination { base: String, ingredient: String },
}

// ------------------------------------------------------------------ raw config

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct GraphConfig {
    pub version: u32,
    pub declared_totals: DeclaredTotals,
    pub items: Vec<String>,
    pub objects: Vec<ObjectConfig>,
    pub subtasks: Vec<SubtaskConfig>,
    #[serde(default)]
    pub ingredients: Vec<IngredientConfig>,
    #[serde(default)]
    pub recipe_bases: Vec<RecipeBaseConfig>,
    pub canonical_order: Vec<String>,
    pub goals: GoalsConfig,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
pub struct DeclaredTotals {
    pub objects: usize,
    pub pickable: usize,
    pub craftable: usize,
    pub structures: usize,
    pub placeable_terrains: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ObjectConfig {
    pub name: String,
    pub plural: String,
    pub category: ObjectCategory,
    #[serde(default)]
    pub transforms_to: Option<String>,
    #[serde(default)]
    pub derived: bool,
    #[serde(default)]
    pub landmark_alias: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct SubtaskConfig {
    pub id: String,
    pub phrase: String,
    pub kind: SubtaskKind,
    #[serde(default)]
    pub prereqs: Vec<String>,
    #[serde(default)]
    pub any_of: Vec<Vec<String>>,
    pub location: String,
    pub actions: Vec<String>,
    #[serde(default)]
    pub add_items: Vec<String>,
    #[serde(default)]
    pub remove_object: bool,
    #[serde(default)]
    pub transform_object: Option<String>,
    #[serde(default)]
    pub place_terrain: Option<String>,
    #[serde(default)]
    pub place_object: Option<String>,
    #[serde(default)]
    pub repeatable: bool,
    #[serde(default)]
    pub provenance: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct IngredientConfig {
    pub name: String,
    pub action: String,
    #[serde(default)]
    pub prereqs: Vec<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct RecipeBaseConfig {
    pub base: String,
    pub verb: String,
    pub kind: SubtaskKind,
    pub first_action: String,
    pub prereqs: Vec<String>,
    pub products: Vec<RecipeProductConfig>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct RecipeProductConfig {
    pub ingredient: String,
    pub name: String,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct GoalsConfig {
    pub nav_targets: Vec<String>,
    pub then_landmarks: Vec<String>,
    pub clear_targets: Vec<String>,
    pub craft_pairs: usize,
    pub build_pairs: usize,
    pub cover_pairs: usize,
    pub then_goals: usize,
    pub constraint_sets_per_goal: usize,
    #[serde(default)]
    pub pinned: Vec<String>,
}

impl GraphConfig {
    pub fn from_toml(text: &str) -> Result<Self, GraphError> {
        toml::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))
    }

    pub fn default_config() -> Self {
        GraphConfig::from_toml(DEFAULT_CONFIG).expect("shipped config parses")
    }
}

// ------------------------------------------------------------------ resolved graph

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectCategory {
    Pickable,
    Fixture,
    Animal,
    Structure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtaskKind {
    Gather,
    Craft,
    Transform,
    Place,
    Build,
}

#[derive(Clone, Debug)]
pub struct ObjectDef {
    pub name: String,
    pub plural: String,
    pub category: ObjectCategory,
    pub transforms_to: Option<ObjectId>,
    pub derived: bool,
    /// The object this one counts as when it is a navigation destination.
    pub landmark: ObjectId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Location {
    AtObject(ObjectId),
    EmptyCell,
    AnyCell,
}

#[derive(Clone, Debug, Default)]
pub struct Effects {
    pub add_items: Vec<ItemId>,
    pub remove_object: bool,
    pub transform_object: Option<ObjectId>,
    pub place_terrain: Option<Terrain>,
    pub place_object: Option<ObjectId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeBase {
    Flooring,
    Barn,
    House,
    Shrine,
}

impl RecipeBase {
    pub const ALL: [RecipeBase; 4] = [
        RecipeBase::Flooring,
        RecipeBase::Barn,
        RecipeBase::House,
        RecipeBase::Shrine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RecipeBase::Flooring => "flooring",
            RecipeBase::Barn => "barn",
            RecipeBase::House => "house",
            RecipeBase::Shrine => "shrine",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        RecipeBase::ALL.iter().copied().find(|b| b.name() == s)
    }
}

/// Special ingredient of a two-action recipe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Material {
    Wood,
    Iron,
    Silver,
    Gold,
    Diamond,
    Chicken,
    Pig,
}

impl Material {
    pub const ALL: [Material; 7] = [
        Material::Wood,
        Material::Iron,
        Material::Silver,
        Material::Gold,
        Material::Diamond,
        Material::Chicken,
        Material::Pig,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Material::Wood => "wood",
            Material::Iron => "iron",
            Material::Silver => "silver",
            Material::Gold => "gold",
            Material::Diamond => "diamond",
            Material::Chicken => "chicken",
            Material::Pig => "pig",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Material::ALL.iter().copied().find(|m| m.name() == s)
    }
}

fn ingredient_name(ingredient: Option<Material>) -> &'static str {
    ingredient.map(Material::name).unwrap_or("plain")
}

#[derive(Clone, Debug)]
pub struct SubtaskSpec {
    pub id: String,
    pub phrase: String,
    pub kind: SubtaskKind,
    pub prereqs: Vec<SubtaskId>,
    /// Each inner group is one alternative; at least one group must be
    /// fully completed.
    pub any_of: Vec<Vec<SubtaskId>>,
    pub required_items: Vec<ItemId>,
    pub location: Location,
    pub actions: Vec<Action>,
    pub effects: Effects,
    pub repeatable: bool,
    pub provenance: String,
    pub recipe: Option<(RecipeBase, Option<Material>)>,
}

impl SubtaskSpec {
    pub fn is_two_action(&self) -> bool {
        self.actions.len() == 2
    }
}

/// Resolved two-action recipe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recipe {
    pub subtask: SubtaskId,
    pub prereq_items: Vec<String>,
    pub actions: (Action, Action),
    pub phrase: String,
}

#[derive(Clone, Debug)]
pub struct SubtaskGraph {
    items: Vec<String>,
    item_index: HashMap<String, ItemId>,
    objects: Vec<ObjectDef>,
    object_index: HashMap<String, ObjectId>,
    specs: Vec<SubtaskSpec>,
    spec_index: HashMap<String, SubtaskId>,
    phrase_index: HashMap<String, SubtaskId>,
    rank: Vec<u16>,
    canonical: Vec<SubtaskId>,
    recipes: BTreeMap<(RecipeBase, Option<Material>), SubtaskId>,
    gather_for_object: HashMap<ObjectId, SubtaskId>,
    place_for_terrain: HashMap<Terrain, SubtaskId>,
    build_for_object: HashMap<ObjectId, SubtaskId>,
    pub declared: DeclaredTotals,
    pub goals: GoalsConfig,
    fingerprint: u64,
}

/// Counts of the world's building blocks, compared against the declared totals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WorldCounts {
    pub objects: usize,
    pub pickable: usize,
    pub craftable: usize,
    pub structures: usize,
    pub placeable_terrains: usize,
    pub natural_terrains: usize,
    pub actions: usize,
}

fn parse_action(s: &str, owner: &str) -> Result<Action, GraphError> {
    Action::from_name(s).ok_or_else(|| GraphError::Unknown {
        kind: "action",
        name: format!("{s} (in {owner})"),
    })
}

fn snake(s: &str) -> String {
    s.replace(' ', "_")
}

/// Validate a config and build the graph.
/// Table recipe a subtask was expanded from, if any.
type RecipeTag = Option<(RecipeBase, Option<Material>)>;

pub fn load_graph(config: &GraphConfig) -> Result<SubtaskGraph, GraphError> {
    let mut item_index = HashMap::new();
    for (i, name) in config.items.iter().enumerate() {
        if item_index.insert(name.clone(), ItemId(i as u8)).is_some() {
            return Err(GraphError::Duplicate {
                kind: "item",
                name: name.clone(),
            });
        }
    }

    let mut object_index = HashMap::new();
    for (i, o) in config.objects.iter().enumerate() {
        if object_index.insert(o.name.clone(), ObjectId(i as u8)).is_some() {
            return Err(GraphError::Duplicate {
                kind: "object",
                name: o.name.clone(),
            });
        }
    }
    let lookup_object = |name: &str| -> Result<ObjectId, GraphError> {
        object_index.get(name).copied().ok_or_else(|| GraphError::Unknown {
            kind: "object",
            name: name.to_string(),
        })
    };
    let lookup_item = |name: &str| -> Result<ItemId, GraphError> {
        item_index.get(name).copied().ok_or_else(|| GraphError::Unknown {
            kind: "item",
            name: name.to_string(),
        })
    };

    let mut objects = Vec::new();
    for (i, o) in config.objects.iter().enumerate() {
        let transforms_to = o.transforms_to.as_deref().map(lookup_object).transpose()?;
        let landmark = match &o.landmark_alias {
            Some(a) => lookup_object(a)?,
            None => ObjectId(i as u8),
        };
        objects.push(ObjectDef {
            name: o.name.clone(),
            plural: o.plural.clone(),
            category: o.category,
            transforms_to,
            derived: o.derived,
            landmark,
        });
    }

    // Expand recipe tables into plain subtask configs.
    let mut raw: Vec<(SubtaskConfig, RecipeTag)> = config.subtasks.iter().cloned().map(|s| (s, None)).collect();
    let mut ingredient_map: HashMap<&str, &IngredientConfig> = HashMap::new();
    for ing in &config.ingredients {
        if ingredient_map.insert(ing.name.as_str(), ing).is_some() {
            return Err(GraphError::Duplicate {
                kind: "ingredient",
                name: ing.name.clone(),
            });
        }
    }
    for base in &config.recipe_bases {
        let base_kind = RecipeBase::from_name(&base.base).ok_or_else(|| GraphError::Unknown {
            kind: "recipe base",
            name: base.base.clone(),
        })?;
        for product in &base.products {
            let ing = ingredient_map
                .get(product.ingredient.as_str())
                .ok_or_else(|| GraphError::Unknown {
                    kind: "ingredient",
                    name: product.ingredient.clone(),
                })?;
            let material = if ing.name == "plain" {
                None
            } else {
                Some(Material::from_name(&ing.name).ok_or_else(|| GraphError::Unknown {
                    kind: "material",
                    name: ing.name.clone(),
                })?)
            };
            let phrase = format!("{} {}", base.verb, product.name);
            let mut prereqs = base.prereqs.clone();
            for p in &ing.prereqs {
                if !prereqs.contains(p) {
                    prereqs.push(p.clone());
                }
            }
            let (place_terrain, place_object, location) = match base.kind {
                SubtaskKind::Place => (Some(product.name.clone()), None, "any_cell".to_string()),
                _ => (None, Some(product.name.clone()), "empty_cell".to_string()),
            };
            raw.push((
                SubtaskConfig {
                    id: snake(&phrase),
                    phrase,
                    kind: base.kind,
                    prereqs,
                    any_of: vec![],
                    location,
                    actions: vec![base.first_action.clone(), ing.action.clone()],
                    add_items: vec![],
                    remove_object: false,
                    transform_object: None,
                    place_terrain,
                    place_object,
                    repeatable: true,
                    provenance: Some("stated".into()),
                },
                Some((base_kind, material)),
            ));
        }
    }

    let mut spec_index = HashMap::new();
    let mut phrase_index = HashMap::new();
    for (i, (s, _)) in raw.iter().enumerate() {
        if spec_index.insert(s.id.clone(), SubtaskId(i as u16)).is_some() {
            return Err(GraphError::Duplicate {
                kind: "subtask",
                name: s.id.clone(),
            });
        }
        if phrase_index.insert(s.phrase.clone(), SubtaskId(i as u16)).is_some() {
            return Err(GraphError::Duplicate {
                kind: "phrase",
                name: s.phrase.clone(),
            });
        }
    }
    let lookup_subtask = |owner: &str, name: &str| -> Result<SubtaskId, GraphError> {
        spec_index.get(name).copied().ok_or_else(|| GraphError::Dangling {
            subtask: owner.to_string(),
            missing: name.to_string(),
        })
    };

    let mut specs = Vec::new();
    for (s, recipe) in &raw {
        let prereqs = s
            .prereqs
            .iter()
            .map(|p| lookup_subtask(&s.id, p))
            .collect::<Result<Vec<_>, _>>()?;
        let any_of = s
            .any_of
            .iter()
            .map(|g| {
                g.iter()
                    .map(|p| lookup_subtask(&s.id, p))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let location = if let Some(obj) = s.location.strip_prefix("object:") {
            Location::AtObject(lookup_object(obj)?)
        } else if s.location == "empty_cell" {
            Location::EmptyCell
        } else if s.location == "any_cell" {
            Location::AnyCell
        } else {
            return Err(GraphError::Unknown {
                kind: "location",
                name: s.location.clone(),
            });
        };
        let actions = s
            .actions
            .iter()
            .map(|a| parse_action(a, &s.id))
            .collect::<Result<Vec<_>, _>>()?;
        if actions.is_empty() || actions.len() > 2 {
            return Err(GraphError::BadActions(s.id.clone()));
        }
        if actions.len() == 2 && !matches!(s.kind, SubtaskKind::Build | SubtaskKind::Place) {
            return Err(GraphError::BadActions(s.id.clone()));
        }
        let effects = Effects {
            add_items: s.add_items.iter().map(|i| lookup_item(i)).collect::<Result<_, _>>()?,
            remove_object: s.remove_object,
            transform_object: s.transform_object.as_deref().map(lookup_object).transpose()?,
            place_terrain: s
                .place_terrain
                .as_deref()
                .map(|t| {
                    Terrain::from_name(t).ok_or_else(|| GraphError::Unknown {
                        kind: "terrain",
                        name: t.to_string(),
                    })
                })
                .transpose()?,
            place_object: s.place_object.as_deref().map(lookup_object).transpose()?,
        };
        specs.push(SubtaskSpec {
            id: s.id.clone(),
            phrase: s.phrase.clone(),
            kind: s.kind,
            prereqs,
            any_of,
            required_items: vec![],
            location,
            actions,
            effects,
            repeatable: s.repeatable,
            provenance: s.provenance.clone().unwrap_or_else(|| "inferred".into()),
            recipe: *recipe,
        });
    }
    // Required items are whatever the direct prerequisites produce.
    for i in 0..specs.len() {
        let mut items = Vec::new();
        for p in specs[i].prereqs.clone() {
            for it in &specs[p.0 as usize].effects.add_items {
                if !items.contains(it) {
                    items.push(*it);
                }
            }
        }
        specs[i].required_items = items;
    }

    detect_cycle(&specs)?;

    // Canonical order must be a permutation of all subtasks.
    let mut rank = vec![u16::MAX; specs.len()];
    let mut canonical = Vec::new();
    for (r, id) in config.canonical_order.iter().enumerate() {
        let sid = spec_index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::CanonicalOrder(format!("unknown subtask {id}")))?;
        if rank[sid.0 as usize] != u16::MAX {
            return Err(GraphError::CanonicalOrder(format!("{id} listed twice")));
        }
        rank[sid.0 as usize] = r as u16;
        canonical.push(sid);
    }
    if let Some(missing) = rank.iter().position(|r| *r == u16::MAX) {
        return Err(GraphError::CanonicalOrder(format!("{} missing", specs[missing].id)));
    }

    let mut recipes = BTreeMap::new();
    let mut gather_for_object = HashMap::new();
    let mut place_for_terrain = HashMap::new();
    let mut build_for_object = HashMap::new();
    for (i, s) in specs.iter().enumerate() {
        let id = SubtaskId(i as u16);
        if let Some(r) = s.recipe {
            recipes.insert(r, id);
        }
        if s.kind == SubtaskKind::Gather {
            if let Location::AtObject(o) = s.location {
                gather_for_object.insert(o, id);
            }
        }
        if let Some(t) = s.effects.place_terrain {
            place_for_terrain.insert(t, id);
        }
        if let Some(o) = s.effects.place_object {
            build_for_object.insert(o, id);
        }
    }

    let fingerprint = crate::hash::fnv1a64(serde_json::to_string(config).expect("config serializes").as_bytes());

    let graph = SubtaskGraph {
        items: config.items.clone(),
        item_index,
        objects,
        object_index,
        specs,
        spec_index,
        phrase_index,
        rank,
        canonical,
        recipes,
        gather_for_object,
        place_for_terrain,
        build_for_object,
        declared: config.declared_totals,
        goals: config.goals.clone(),
        fingerprint,
    };

    let counted = graph.counts();
    let d = config.declared_totals;
    for (what, declared, counted) in [
        ("objects", d.objects, counted.objects),
        ("pickable", d.pickable, counted.pickable),
        ("craftable", d.craftable, counted.craftable),
        ("structures", d.structures, counted.structures),
        ("placeable_terrains", d.placeable_terrains, counted.placeable_terrains),
    ] {
        if declared != counted {
            return Err(GraphError::CountMismatch {
                what,
                declared,
                counted,
            });
        }
    }
    Ok(graph)
}

fn detect_cycle(specs: &[SubtaskSpec]) -> Result<(), GraphError> {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit(i: usize, specs: &[SubtaskSpec], mark: &mut [u8]) -> Result<(), GraphError> {
        match mark[i] {
            1 => return Err(GraphError::Cycle(specs[i].id.clone())),
            2 => return Ok(()),
            _ => {}
        }
        mark[i] = 1;
        let deps = specs[i].prereqs.iter().chain(specs[i].any_of.iter().flatten());
        for d in deps {
            visit(d.0 as usize, specs, mark)?;
        }
        mark[i] = 2;
        Ok(())
    }
    let mut mark = vec![0u8; specs.len()];
    for i in 0..specs.len() {
        visit(i, specs, &mut mark)?;
    }
    Ok(())
}

impl SubtaskGraph {
    pub fn load_default() -> Self {
        load_graph(&GraphConfig::default_config()).expect("shipped config is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, GraphError> {
        load_graph(&GraphConfig::from_toml(text)?)
    }

    /// Stable hash of the resolved configuration.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn counts(&self) -> WorldCounts {
        let objects = self.objects.iter().filter(|o| !o.derived).count();
        let pickable = self
            .objects
            .iter()
            .filter(|o| o.category == ObjectCategory::Pickable)
            .count();
        let structures: BTreeSet<ObjectId> = self
            .specs
            .iter()
            .filter(|s| s.kind == SubtaskKind::Build)
            .filter_map(|s| s.effects.place_object)
            .collect();
        let craftable: BTreeSet<ItemId> = self
            .specs
            .iter()
            .filter(|s| s.kind == SubtaskKind::Craft)
            .flat_map(|s| s.effects.add_items.iter().copied())
            .collect();
        let placeable: BTreeSet<Terrain> = self.specs.iter().filter_map(|s| s.effects.place_terrain).collect();
        WorldCounts {
            objects,
            pickable,
            craftable: craftable.len(),
            structures: structures.len(),
            placeable_terrains: placeable.len(),
            natural_terrains: Terrain::NATURAL.len(),
            actions: Action::ALL.len(),
        }
    }

    // -------------------------------------------------------------- lookups

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SubtaskId> {
        (0..self.specs.len() as u16).map(SubtaskId)
    }

    pub fn spec(&self, id: SubtaskId) -> &SubtaskSpec {
        &self.specs[id.0 as usize]
    }

    pub fn id(&self, name: &str) -> Option<SubtaskId> {
        self.spec_index.get(name).copied()
    }

    /// Panicking lookup for ids known to exist in the shipped config.
    pub fn sid(&self, name: &str) -> SubtaskId {
        self.id(name).unwrap_or_else(|| panic!("unknown subtask id {name}"))
    }

    pub fn by_phrase(&self, phrase: &str) -> Option<SubtaskId> {
        self.phrase_index.get(phrase).copied()
    }

    pub fn phrase(&self, id: SubtaskId) -> &str {
        &self.spec(id).phrase
    }

    pub fn rank(&self, id: SubtaskId) -> u16 {
        self.rank[id.0 as usize]
    }

    pub fn canonical_order(&self) -> &[SubtaskId] {
        &self.canonical
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn item_name(&self, id: ItemId) -> &str {
        &self.items[id.0 as usize]
    }

    pub fn item_by_name(&self, name: &str) -> Option<ItemId> {
        self.item_index.get(name).copied()
    }

    pub fn objects(&self) -> &[ObjectDef] {
        &self.objects
    }

    pub fn object(&self, id: ObjectId) -> &ObjectDef {
        &self.objects[id.0 as usize]
    }

    pub fn object_id(&self, name: &str) -> Option<ObjectId> {
        self.object_index.get(name).copied()
    }

    pub fn oid(&self, name: &str) -> ObjectId {
        self.object_id(name).unwrap_or_else(|| panic!("unknown object {name}"))
    }

    pub fn object_by_plural(&self, plural: &str) -> Option<ObjectId> {
        self.objects
            .iter()
            .position(|o| o.plural == plural)
            .map(|i| ObjectId(i as u8))
    }

    pub fn object_name(&self, id: ObjectId) -> &str {
        &self.object(id).name
    }

    pub fn gather_for_object(&self, o: ObjectId) -> Option<SubtaskId> {
        self.gather_for_object.get(&o).copied()
    }

    pub fn place_for_terrain(&self, t: Terrain) -> Option<SubtaskId> {
        self.place_for_terrain.get(&t).copied()
    }

    pub fn build_for_object(&self, o: ObjectId) -> Option<SubtaskId> {
        self.build_for_object.get(&o).copied()
    }

    /// Does an object at a cell satisfy a navigation target?
    pub fn is_landmark(&self, object: ObjectId, target: ObjectId) -> bool {
        self.object(object).landmark == target
    }

    // -------------------------------------------------------------- dependency queries

    /// Prerequisites are met: every direct prerequisite ledgered, one
    /// alternative of each `any_of` group ledgered, required items held.
    pub fn prereqs_met(&self, id: SubtaskId, ledger: &CompletionLedger, inventory: &crate::world::Inventory) -> bool {
        let s = self.spec(id);
        s.prereqs.iter().all(|p| ledger.is_done(*p))
            && self.any_of_met(id, ledger)
            && s.required_items.iter().all(|i| inventory.has(*i))
    }

    fn any_of_met(&self, id: SubtaskId, ledger: &CompletionLedger) -> bool {
        let groups = &self.spec(id).any_of;
        groups.is_empty() || groups.iter().any(|g| g.iter().all(|p| ledger.is_done(*p)))
    }

    /// Eligible = prerequisites met and, for once-only subtasks, not done yet.
    pub fn is_eligible(&self, id: SubtaskId, ledger: &CompletionLedger, inventory: &crate::world::Inventory) -> bool {
        (self.spec(id).repeatable || !ledger.is_done(id)) && self.prereqs_met(id, ledger, inventory)
    }

    pub fn eligible(&self, ledger: &CompletionLedger, inventory: &crate::world::Inventory) -> BTreeSet<SubtaskId> {
        self.ids()
            .filter(|id| self.is_eligible(*id, ledger, inventory))
            .collect()
    }

    /// Minimal prerequisite-closed superset of `targets`, taking the first
    /// alternative of every `any_of` group.
    pub fn closure(&self, targets: &[SubtaskId]) -> BTreeSet<SubtaskId> {
        self.closure_with(targets, |_, groups| groups.first().cloned().unwrap_or_default())
    }

    /// Closure with a caller-chosen alternative for each `any_of` group.
    pub fn closure_with<F>(&self, targets: &[SubtaskId], mut choose: F) -> BTreeSet<SubtaskId>
    where
        F: FnMut(SubtaskId, &[Vec<SubtaskId>]) -> Vec<SubtaskId>,
    {
        let mut out = BTreeSet::new();
        let mut stack: Vec<SubtaskId> = targets.to_vec();
        while let Some(id) = stack.pop() {
            if !out.insert(id) {
                continue;
            }
            let s = self.spec(id);
            stack.extend(s.prereqs.iter().copied());
            if !s.any_of.is_empty() {
                stack.extend(choose(id, &s.any_of));
            }
        }
        out
    }

    pub fn closure_by_name(&self, targets: &[&str]) -> Result<BTreeSet<SubtaskId>, GraphError> {
        let ids = targets
            .iter()
            .map(|t| {
                self.id(t).ok_or_else(|| GraphError::Unknown {
                    kind: "subtask",
                    name: t.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.closure(&ids))
    }

    // -------------------------------------------------------------- recipes

    pub fn compose_recipe(&self, base: RecipeBase, ingredient: Option<Material>) -> Result<Recipe, GraphError> {
        let id = self
            .recipes
            .get(&(base, ingredient))
            .copied()
            .ok_or_else(|| GraphError::UnsupportedCombination {
                base: base.name().to_string(),
                ingredient: ingredient_name(ingredient).to_string(),
            })?;
        let spec = self.spec(id);
        // Base prerequisites are the ones shared by every product of the base.
        let mut shared: Option<BTreeSet<SubtaskId>> = None;
        for ((b, _), sid) in &self.recipes {
            if *b == base {
                let set: BTreeSet<SubtaskId> = self.spec(*sid).prereqs.iter().copied().collect();
                shared = Some(match shared {
                    None => set,
                    Some(s) => s.intersection(&set).copied().collect(),
                });
            }
        }
        let mut prereq_items = Vec::new();
        for p in &spec.prereqs {
            if shared.as_ref().is_some_and(|s| s.contains(p)) {
                for it in &self.spec(*p).effects.add_items {
                    prereq_items.push(self.item_name(*it).to_string());
                }
            }
        }
        Ok(Recipe {
            subtask: id,
            prereq_items,
            actions: (spec.actions[0], spec.actions[1]),
            phrase: spec.phrase.clone(),
        })
    }

    pub fn recipes(&self) -> impl Iterator<Item = ((RecipeBase, Option<Material>), SubtaskId)> + '_ {
        self.recipes.iter().map(|(k, v)| (*k, *v))
    }

    /// Bases whose recipes start with `action`.
    pub fn base_starting_with(&self, action: Action) -> bool {
        self.recipes.values().any(|id| self.spec(*id).actions[0] == action)
    }

    /// Subtask completed by performing `action` with no pending first action.
    pub fn single_action_subtask(&self, action: Action, object: Option<ObjectId>) -> Option<SubtaskId> {
        self.ids().find(|id| {
            let s = self.spec(*id);
            s.actions.len() == 1
                && s.actions[0] == action
                && match s.location {
                    Location::AtObject(o) => object == Some(o),
                    Location::EmptyCell => object.is_none(),
                    Location::AnyCell => true,
                }
        })
    }

    /// Two-action subtask completed by `second` after `first`.
    pub fn two_action_subtask(&self, first: Action, second: Action) -> Option<SubtaskId> {
        self.recipes
            .values()
            .copied()
            .find(|id| self.spec(*id).actions[..] == [first, second])
    }
}

impl fmt::Display for SubtaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

// ------------------------------------------------------------------ ledger

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompletionEvent {
    pub subtask: SubtaskId,
    pub step: u16,
    pub cell: Pos,
    /// Terrain of the cell just before the subtask's effects applied.
    pub terrain_before: Option<Terrain>,
}

/// Per-episode record of completed subtasks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompletionLedger {
    counts: Vec<u16>,
    events: Vec<CompletionEvent>,
}

impl CompletionLedger {
    pub fn new() -> Self {
        CompletionLedger::default()
    }

    pub fn count(&self, id: SubtaskId) -> u16 {
        self.counts.get(id.0 as usize).copied().unwrap_or(0)
    }

    pub fn is_done(&self, id: SubtaskId) -> bool {
        self.count(id) > 0
    }

    pub fn record(&mut self, event: CompletionEvent) {
        let i = event.subtask.0 as usize;
        if self.counts.len() <= i {
            self.counts.resize(i + 1, 0);
        }
        self.counts[i] += 1;
        self.events.push(event);
    }

    pub fn events(&self) -> &[CompletionEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Step of the first completion of `id`.
    pub fn first_step(&self, id: SubtaskId) -> Option<u16> {
        self.events.iter().find(|e| e.subtask == id).map(|e| e.step)
    }

    /// Ledger holding every subtask of the graph once; used for saturation
    /// checks.
    pub fn saturated(graph: &SubtaskGraph) -> Self {
        let mut l = CompletionLedger::new();
        for id in graph.ids() {
            l.record(CompletionEvent {
                subtask: id,
                step: 0,
                cell: Pos::new(1, 1),
                terrain_before: None,
            });
        }
        l
    }
}
