//! Template text for tasks and instructions, with inverse parsers.
//!
//! Every renderer here has a parser such that `parse(render(x)) == x`.

use serde::{Deserialize, Serialize};

use crate::graph::{Location, ObjectCategory, ObjectId, SubtaskGraph, SubtaskId, SubtaskKind};
use crate::task::{ConstraintSet, EndGoal, GoalAtom, Task, TerrainRole};
use crate::world::Terrain;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty text")]
    Empty,
    #[error("sentence {index}: cannot parse {text:?}")]
    Sentence { index: usize, text: String },
    #[error("sentence {index}: conflicting role for {terrain}")]
    ConflictingRole { index: usize, terrain: String },
}

fn sentence_err(index: usize, text: &str) -> ParseError {
    ParseError::Sentence {
        index,
        text: text.to_string(),
    }
}

// ------------------------------------------------------------------ descriptions

pub fn atom_text(graph: &SubtaskGraph, atom: &GoalAtom) -> String {
    match *atom {
        GoalAtom::Subtask { subtask } => graph.phrase(subtask).to_string(),
        GoalAtom::OnTerrain { subtask, dest } => format!("{} on {}", graph.phrase(subtask), dest),
        GoalAtom::Cover { subtask, target } => {
            format!("{} covering all the {}", graph.phrase(subtask), target)
        }
    }
}

/// First sentence of a description, without the final period.
pub fn goal_sentence(graph: &SubtaskGraph, goal: &EndGoal) -> String {
    match goal {
        EndGoal::Navigation { landmark } => format!("reach the {}", graph.object_name(*landmark)),
        EndGoal::Conjunction { atoms } => match atoms.as_slice() {
            [a] => atom_text(graph, a),
            [a, b] => format!("{} and {} in any order", atom_text(graph, a), atom_text(graph, b)),
            _ => atoms
                .iter()
                .map(|a| atom_text(graph, a))
                .collect::<Vec<_>>()
                .join(" and "),
        },
        EndGoal::CraftThenNav { atom, landmark } => format!(
            "{}, then reach the {}",
            atom_text(graph, atom),
            graph.object_name(*landmark)
        ),
        EndGoal::ClearItems { objects } => {
            let plurals: Vec<&str> = objects.iter().map(|o| graph.object(*o).plural.as_str()).collect();
            format!("clear all of the {}", plurals.join(" and the "))
        }
    }
}

/// Constraint sentences: penalties first, then rewards, each in terrain order.
pub fn constraint_sentences(c: &ConstraintSet) -> Vec<String> {
    let mut out = Vec::new();
    for t in c.terrains_with(TerrainRole::Penalty) {
        out.push(format!("avoid walking on the {t}"));
    }
    for t in c.terrains_with(TerrainRole::Reward) {
        out.push(format!("walking on the {t} will reward you"));
    }
    out
}

pub fn describe_task(graph: &SubtaskGraph, task: &Task) -> String {
    let mut sentences = vec![goal_sentence(graph, &task.goal)];
    sentences.extend(constraint_sentences(&task.constraints));
    sentences.iter().map(|s| format!("{s}.")).collect::<Vec<_>>().join(" ")
}

fn parse_atom(graph: &SubtaskGraph, text: &str) -> Option<GoalAtom> {
    let atom = if let Some((phrase, t)) = text.split_once(" covering all the ") {
        let subtask = graph.by_phrase(phrase)?;
        let target = Terrain::from_name(t)?;
        if graph.spec(subtask).kind != SubtaskKind::Place || !target.is_natural() {
            return None;
        }
        GoalAtom::Cover { subtask, target }
    } else if let Some(subtask) = graph.by_phrase(text) {
        GoalAtom::Subtask { subtask }
    } else {
        let (phrase, t) = text.rsplit_once(" on ")?;
        let subtask = graph.by_phrase(phrase)?;
        let dest = Terrain::from_name(t)?;
        if !matches!(graph.spec(subtask).kind, SubtaskKind::Build | SubtaskKind::Place) {
            return None;
        }
        GoalAtom::OnTerrain { subtask, dest }
    };
    Some(atom)
}

fn parse_goal_inner(graph: &SubtaskGraph, s: &str) -> Option<EndGoal> {
    if let Some(name) = s.strip_prefix("reach the ") {
        let landmark = graph.object_id(name)?;
        return Some(EndGoal::Navigation { landmark });
    }
    if let Some(rest) = s.strip_prefix("clear all of the ") {
        let objects = rest
            .split(" and the ")
            .map(|p| graph.object_by_plural(p))
            .collect::<Option<Vec<_>>>()?;
        return Some(EndGoal::ClearItems { objects });
    }
    if let Some((atom, name)) = s.split_once(", then reach the ") {
        return Some(EndGoal::CraftThenNav {
            atom: parse_atom(graph, atom)?,
            landmark: graph.object_id(name)?,
        });
    }
    if let Some(pair) = s.strip_suffix(" in any order") {
        let (a, b) = pair.split_once(" and ")?;
        return Some(EndGoal::Conjunction {
            atoms: vec![parse_atom(graph, a)?, parse_atom(graph, b)?],
        });
    }
    Some(EndGoal::Conjunction {
        atoms: vec![parse_atom(graph, s)?],
    })
}

/// Parse a goal sentence with or without its trailing period.
pub fn parse_goal_sentence(graph: &SubtaskGraph, text: &str) -> Result<EndGoal, ParseError> {
    let s = text.trim().trim_end_matches('.').trim();
    if s.is_empty() {
        return Err(ParseError::Empty);
    }
    let goal = parse_goal_inner(graph, s).ok_or_else(|| sentence_err(0, s))?;
    if goal_sentence(graph, &goal) != s {
        return Err(sentence_err(0, s));
    }
    Ok(goal)
}

fn terrain_after<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let rest = s.strip_prefix(prefix)?;
    Some(rest.strip_prefix("the ").unwrap_or(rest))
}

fn parse_constraint_sentence(s: &str) -> Option<(Terrain, TerrainRole)> {
    if let Some(t) = terrain_after(s, "avoid walking on ") {
        return Some((Terrain::from_name(t)?, TerrainRole::Penalty));
    }
    if let Some(rest) = s.strip_suffix(" will reward you") {
        let t = terrain_after(rest, "walking on ")?;
        return Some((Terrain::from_name(t)?, TerrainRole::Reward));
    }
    None
}

fn set_role(c: &mut ConstraintSet, t: Terrain, role: TerrainRole, index: usize) -> Result<(), ParseError> {
    let Some(i) = t.natural_index() else {
        return Err(sentence_err(index, t.name()));
    };
    if c.roles[i] != TerrainRole::Neutral && c.roles[i] != role {
        return Err(ParseError::ConflictingRole {
            index,
            terrain: t.name().to_string(),
        });
    }
    c.roles[i] = role;
    Ok(())
}

fn sentences(text: &str) -> Vec<String> {
    text.split('.')
        .map(|s| s.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|s| !s.is_empty())
        .collect()
}

pub fn parse_description(graph: &SubtaskGraph, text: &str) -> Result<Task, ParseError> {
    let parts = sentences(text);
    let Some(first) = parts.first() else {
        return Err(ParseError::Empty);
    };
    let goal = parse_goal_sentence(graph, first)?;
    let mut constraints = ConstraintSet::NEUTRAL;
    for (i, s) in parts.iter().enumerate().skip(1) {
        let (t, role) = parse_constraint_sentence(s).ok_or_else(|| sentence_err(i, s))?;
        set_role(&mut constraints, t, role, i)?;
    }
    Ok(Task::new(goal, constraints))
}

// ------------------------------------------------------------------ instructions

/// What a single instruction asks the agent to do next.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstructionTarget {
    /// Perform the subtask at its usual location.
    Do { subtask: SubtaskId },
    /// Perform a build or place on a cell of the given terrain.
    OnTerrain { subtask: SubtaskId, dest: Terrain },
    /// Perform a build or place on a cell without an object.
    OnEmptyCell { subtask: SubtaskId },
    /// Perform a place on a cell of a natural terrain being covered.
    Cover { subtask: SubtaskId, target: Terrain },
    /// Walk to an object.
    GoTo { object: ObjectId },
}

impl InstructionTarget {
    pub fn subtask(&self) -> Option<SubtaskId> {
        match *self {
            InstructionTarget::Do { subtask }
            | InstructionTarget::OnTerrain { subtask, .. }
            | InstructionTarget::OnEmptyCell { subtask }
            | InstructionTarget::Cover { subtask, .. } => Some(subtask),
            InstructionTarget::GoTo { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instruction {
    pub target: InstructionTarget,
    pub constraints: ConstraintSet,
}

fn object_ref(graph: &SubtaskGraph, o: ObjectId) -> String {
    let def = graph.object(graph.object(o).landmark);
    if def.category == ObjectCategory::Fixture {
        format!("the {}", def.name)
    } else {
        def.name.clone()
    }
}

fn canonical_head(graph: &SubtaskGraph, target: &InstructionTarget) -> String {
    match *target {
        InstructionTarget::Do { subtask } => match graph.spec(subtask).location {
            Location::AtObject(o) => {
                format!("go to {} and {}", object_ref(graph, o), graph.phrase(subtask))
            }
            Location::EmptyCell | Location::AnyCell => graph.phrase(subtask).to_string(),
        },
        InstructionTarget::OnTerrain { subtask, dest } => {
            format!("go to {} and {}", dest, graph.phrase(subtask))
        }
        InstructionTarget::OnEmptyCell { subtask } => {
            format!("go to empty cell and {}", graph.phrase(subtask))
        }
        InstructionTarget::Cover { subtask, target } => {
            format!("{} covering {}", graph.phrase(subtask), target)
        }
        InstructionTarget::GoTo { object } => format!("go to {}", object_ref(graph, object)),
    }
}

/// Short form used in rollout logs.
pub fn log_head(graph: &SubtaskGraph, target: &InstructionTarget) -> String {
    match *target {
        InstructionTarget::Do { subtask } => graph.phrase(subtask).to_string(),
        InstructionTarget::OnTerrain { subtask, dest } => {
            format!("{} on {}", graph.phrase(subtask), dest)
        }
        InstructionTarget::OnEmptyCell { subtask } => {
            format!("{} on empty cell", graph.phrase(subtask))
        }
        InstructionTarget::Cover { subtask, target } => {
            format!("{} covering {}", graph.phrase(subtask), target)
        }
        InstructionTarget::GoTo { object } => {
            format!("go to {}", graph.object(graph.object(object).landmark).name)
        }
    }
}

/// Canonical instruction text, e.g. `go to tree and cut wood. avoid walking on lava`.
pub fn instruction_text(graph: &SubtaskGraph, ins: &Instruction) -> String {
    let mut out = canonical_head(graph, &ins.target);
    for t in ins.constraints.terrains_with(TerrainRole::Penalty) {
        out.push_str(&format!(". avoid walking on {t}"));
    }
    for t in ins.constraints.terrains_with(TerrainRole::Reward) {
        out.push_str(&format!(". walking on {t} will reward you"));
    }
    out
}

/// Log form, e.g. `cut wood, stepping on the lava and avoiding the field`.
pub fn instruction_log_text(graph: &SubtaskGraph, ins: &Instruction, with_constraints: bool) -> String {
    let mut out = log_head(graph, &ins.target);
    if with_constraints && !ins.constraints.is_neutral() {
        let mut clauses: Vec<String> = ins
            .constraints
            .terrains_with(TerrainRole::Reward)
            .iter()
            .map(|t| format!("stepping on the {t}"))
            .collect();
        clauses.extend(
            ins.constraints
                .terrains_with(TerrainRole::Penalty)
                .iter()
                .map(|t| format!("avoiding the {t}")),
        );
        out.push_str(", ");
        out.push_str(&clauses.join(" and "));
    }
    out
}

pub fn instruction_for(graph: &SubtaskGraph, target: InstructionTarget, constraints: ConstraintSet) -> String {
    instruction_text(graph, &Instruction { target, constraints })
}

fn parse_object_ref(graph: &SubtaskGraph, s: &str) -> Option<ObjectId> {
    let name = s.strip_prefix("the ").unwrap_or(s);
    graph.object_id(name)
}

fn head_candidates(graph: &SubtaskGraph, head: &str) -> Vec<InstructionTarget> {
    let mut out = Vec::new();
    if let Some(rest) = head.strip_prefix("go to ") {
        match rest.split_once(" and ") {
            Some((place, phrase)) => {
                if let Some(subtask) = graph.by_phrase(phrase) {
                    if place == "empty cell" {
                        out.push(InstructionTarget::OnEmptyCell { subtask });
                    } else if let Some(dest) = Terrain::from_name(place) {
                        out.push(InstructionTarget::OnTerrain { subtask, dest });
                    } else {
                        out.push(InstructionTarget::Do { subtask });
                    }
                }
            }
            None => {
                if let Some(object) = parse_object_ref(graph, rest) {
                    out.push(InstructionTarget::GoTo { object });
                }
            }
        }
    }
    if let Some((phrase, t)) = head.split_once(" covering ") {
        if let (Some(subtask), Some(target)) = (graph.by_phrase(phrase), Terrain::from_name(t)) {
            out.push(InstructionTarget::Cover { subtask, target });
        }
    }
    if let Some(subtask) = graph.by_phrase(head) {
        out.push(InstructionTarget::Do { subtask });
    }
    if let Some((phrase, place)) = head.rsplit_once(" on ") {
        if let Some(subtask) = graph.by_phrase(phrase) {
            if place == "empty cell" {
                out.push(InstructionTarget::OnEmptyCell { subtask });
            } else if let Some(dest) = Terrain::from_name(place) {
                out.push(InstructionTarget::OnTerrain { subtask, dest });
            }
        }
    }
    out
}

fn parse_clause(clause: &str) -> Option<(Terrain, TerrainRole)> {
    if let Some(t) = terrain_after(clause, "stepping on ") {
        return Some((Terrain::from_name(t)?, TerrainRole::Reward));
    }
    if let Some(t) = terrain_after(clause, "avoiding ") {
        return Some((Terrain::from_name(t)?, TerrainRole::Penalty));
    }
    parse_constraint_sentence(clause)
}

/// Parse either the canonical or the log form of an instruction.
pub fn parse_instruction(graph: &SubtaskGraph, text: &str) -> Result<Instruction, ParseError> {
    let norm = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let norm = norm.trim_end_matches('.').trim();
    if norm.is_empty() {
        return Err(ParseError::Empty);
    }
    let (head, clauses): (&str, Vec<&str>) = if let Some((h, rest)) = norm.split_once(". ") {
        (h, rest.split(". ").collect())
    } else if let Some((h, rest)) = norm.split_once(", ") {
        (h, rest.split(" and ").collect())
    } else {
        (norm, vec![])
    };
    let target = head_candidates(graph, head)
        .into_iter()
        .find(|t| canonical_head(graph, t) == head || log_head(graph, t) == head)
        .ok_or_else(|| sentence_err(0, head))?;
    let mut constraints = ConstraintSet::NEUTRAL;
    for (i, c) in clauses.iter().enumerate() {
        let (t, role) = parse_clause(c.trim()).ok_or_else(|| sentence_err(i + 1, c))?;
        set_role(&mut constraints, t, role, i + 1)?;
    }
    Ok(Instruction { target, constraints })
}

/// Every instruction target the oracle can emit.
pub fn all_instruction_targets(graph: &SubtaskGraph) -> Vec<InstructionTarget> {
    let mut out = Vec::new();
    for subtask in graph.ids() {
        out.push(InstructionTarget::Do { subtask });
        let spec = graph.spec(subtask);
        match spec.kind {
            SubtaskKind::Build => {
                out.push(InstructionTarget::OnEmptyCell { subtask });
                for dest in Terrain::ALL {
                    out.push(InstructionTarget::OnTerrain { subtask, dest });
                }
            }
            SubtaskKind::Place => {
                out.push(InstructionTarget::OnEmptyCell { subtask });
                for dest in Terrain::NATURAL {
                    out.push(InstructionTarget::OnTerrain { subtask, dest });
                    out.push(InstructionTarget::Cover { subtask, target: dest });
                }
            }
            _ => {}
        }
    }
    for (i, o) in graph.objects().iter().enumerate() {
        if !o.derived {
            out.push(InstructionTarget::GoTo {
                object: ObjectId(i as u8),
            });
        }
    }
    out
}

// ------------------------------------------------------------------ scoring

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchScope {
    Full,
    GoalSentence,
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn first_sentence(s: &str) -> &str {
    match s.find('.') {
        Some(i) => &s[..=i],
        None => s,
    }
}

pub fn exact_match(predicted: &str, gold: &str, scope: MatchScope) -> bool {
    let (p, g) = (normalize(predicted), normalize(gold));
    match scope {
        MatchScope::Full => p == g,
        MatchScope::GoalSentence => first_sentence(&p) == first_sentence(&g),
    }
}
