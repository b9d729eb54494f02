//! Rendering and parsing of task descriptions and instructions.

use describeworld::graph::SubtaskGraph;
use describeworld::lang::{
    all_instruction_targets, describe_task, exact_match, goal_sentence, instruction_log_text, instruction_text,
    parse_description, parse_goal_sentence, parse_instruction, Instruction, MatchScope,
};
use std::sync::OnceLock;

use describeworld::task::{enumerate_tasks, ConstraintSet, TaskUniverse};
use proptest::prelude::*;

fn graph() -> SubtaskGraph {
    SubtaskGraph::load_default()
}

#[test]
fn descriptions_round_trip_over_the_universe() {
    let g = graph();
    let u = enumerate_tasks(&g);
    for t in &u.tasks {
        assert_eq!(describe_task(&g, &t.task), t.text);
        assert_eq!(parse_description(&g, &t.text).unwrap(), t.task, "{}", t.text);
    }
    for goal in &u.end_goals {
        assert_eq!(parse_goal_sentence(&g, &goal_sentence(&g, goal)).unwrap(), *goal);
    }
}

#[test]
fn instructions_round_trip() {
    let g = graph();
    let targets = all_instruction_targets(&g);
    assert!(!targets.is_empty());
    for target in targets {
        for constraints in ConstraintSet::family() {
            let ins = Instruction { target, constraints };
            let canonical = instruction_text(&g, &ins);
            assert_eq!(parse_instruction(&g, &canonical).unwrap(), ins, "{canonical}");
            let log = instruction_log_text(&g, &ins, true);
            assert_eq!(parse_instruction(&g, &log).unwrap(), ins, "{log}");
        }
    }
}

#[test]
fn canonical_forms() {
    let g = graph();
    let t = parse_description(
        &g,
        "build fence on silver flooring, then reach the jeweler. avoid walking on the field. walking on the lava will reward you.",
    )
    .unwrap();
    assert_eq!(t.constraints.category(), "1R1P");
    let ins = parse_instruction(&g, "go to tree and cut wood. avoid walking on lava").unwrap();
    assert_eq!(instruction_log_text(&g, &ins, true), "cut wood, avoiding the lava");
    assert_eq!(instruction_log_text(&g, &ins, false), "cut wood");
}

#[test]
fn exact_match_scopes() {
    let gold = "make net. avoid walking on the field.";
    assert!(exact_match(gold, gold, MatchScope::Full));
    assert!(exact_match(
        "make  net.  avoid walking on the field.",
        gold,
        MatchScope::Full
    ));
    let wrong_constraints = "make net. walking on the field will reward you.";
    assert!(!exact_match(wrong_constraints, gold, MatchScope::Full));
    assert!(exact_match(wrong_constraints, gold, MatchScope::GoalSentence));
    assert!(!exact_match(
        "make trap. avoid walking on the field.",
        gold,
        MatchScope::GoalSentence
    ));
}

#[test]
fn malformed_text_is_rejected() {
    let g = graph();
    for bad in [
        "",
        "fly to the moon.",
        "make net. avoid walking on the sky.",
        "make net. avoid walking on the lava. walking on the lava will reward you.",
    ] {
        assert!(parse_description(&g, bad).is_err(), "{bad:?}");
    }
    assert!(parse_instruction(&g, "").is_err());
    assert!(parse_instruction(&g, "go to moon").is_err());
}

proptest! {
    #[test]
    fn extra_whitespace_is_ignored(task_index in 0usize..10_604, spaces in 1usize..4) {
        static U: OnceLock<(SubtaskGraph, TaskUniverse)> = OnceLock::new();
        let (g, u) = U.get_or_init(|| {
            let g = graph();
            let u = enumerate_tasks(&g);
            (g, u)
        });
        let t = &u.tasks[task_index];
        let padded = t.text.replace(' ', &" ".repeat(spaces));
        prop_assert_eq!(parse_description(g, &padded).unwrap(), t.task.clone());
    }
}
