//! Dataset export, line-delimited storage and replay.

use std::io::{BufReader, Cursor};

use describeworld::graph::SubtaskGraph;
use describeworld::io::{export_dataset, read_jsonl, replay, write_jsonl, EpisodeRecord, IoError, MapFile};
use describeworld::mapgen::{generate, MapGenConfig};
use describeworld::task::enumerate_tasks;
use describeworld::world::Action;

fn dataset(graph: &SubtaskGraph) -> Vec<EpisodeRecord> {
    let u = enumerate_tasks(graph);
    let tasks: Vec<String> = u.tasks.iter().step_by(1061).take(10).map(|t| t.text.clone()).collect();
    assert_eq!(tasks.len(), 10);
    let d = export_dataset(graph, &MapGenConfig::default(), &tasks, 2, 7);
    assert!(d.skipped.is_empty(), "{:?}", d.skipped);
    d.records
}

#[test]
fn export_write_read_replay() {
    let g = SubtaskGraph::load_default();
    let records = dataset(&g);
    assert_eq!(records.len(), 20);
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &records).unwrap();
    assert_eq!(buf.iter().filter(|b| **b == b'\n').count(), 20);
    let back: Vec<EpisodeRecord> = read_jsonl(BufReader::new(Cursor::new(buf)))
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(back, records);
    for r in &back {
        assert_eq!(r.length, r.transitions.len());
        assert_eq!(
            r.transitions.iter().map(|t| t.reward as i64).sum::<i64>(),
            r.total_reward
        );
        let ep = replay(&g, r).unwrap();
        assert!(ep.is_done());
    }
}

#[test]
fn export_is_deterministic() {
    let g = SubtaskGraph::load_default();
    let a: Vec<String> = dataset(&g).iter().map(EpisodeRecord::to_line).collect();
    let b: Vec<String> = dataset(&g).iter().map(EpisodeRecord::to_line).collect();
    assert_eq!(a, b);
}

#[test]
fn tampered_action_diverges() {
    let g = SubtaskGraph::load_default();
    let mut r = dataset(&g).swap_remove(0);
    let i = r.transitions.len() / 2;
    let original = Action::from_name(&r.transitions[i].action).unwrap();
    let flipped = if original == Action::Up {
        Action::Down
    } else {
        Action::Up
    };
    r.transitions[i].action = flipped.name().to_string();
    match replay(&g, &r) {
        Err(IoError::Divergence { step, .. }) => assert!(step >= i),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn tampered_reward_diverges() {
    let g = SubtaskGraph::load_default();
    let mut r = dataset(&g).swap_remove(1);
    r.transitions[0].reward += 1;
    assert!(matches!(
        replay(&g, &r),
        Err(IoError::Divergence {
            step: 0,
            field: "reward"
        })
    ));
}

#[test]
fn empty_record_replays_to_the_initial_state() {
    let g = SubtaskGraph::load_default();
    let mut r = dataset(&g).swap_remove(2);
    r.transitions.clear();
    r.length = 0;
    r.outcome = None;
    r.total_reward = 0;
    let ep = replay(&g, &r).unwrap();
    assert_eq!(ep.step_count(), 0);
    assert_eq!(
        describeworld::world::observe_map(&ep.world.map, String::new()).grid,
        r.initial
    );
}

#[test]
fn truncation_keeps_the_tail() {
    let g = SubtaskGraph::load_default();
    let r = dataset(&g).swap_remove(3);
    let t = r.truncated(5);
    assert_eq!(t.length, 5);
    assert_eq!(t.transitions[..], r.transitions[r.transitions.len() - 5..]);
    assert_eq!(r.truncated(10_000), r);
    assert!(r.truncated(0).transitions.is_empty());
}

#[test]
fn schema_and_config_are_checked() {
    let g = SubtaskGraph::load_default();
    let mut r = dataset(&g).swap_remove(4);
    r.provenance.config_hash ^= 1;
    assert!(matches!(replay(&g, &r), Err(IoError::ConfigMismatch { .. })));
    r.provenance.schema = 99;
    let line = r.to_line();
    let err = read_jsonl(BufReader::new(Cursor::new(line)))
        .next()
        .unwrap()
        .unwrap_err();
    assert!(matches!(err, IoError::Schema { found: 99, .. }));
    let err = read_jsonl(BufReader::new(Cursor::new("\n{not json")))
        .next()
        .unwrap()
        .unwrap_err();
    assert!(matches!(err, IoError::Json { line: 2, .. }));
}

#[test]
fn map_file_round_trip() {
    let g = SubtaskGraph::load_default();
    let map = generate(&g, &MapGenConfig::default(), 42).unwrap();
    let file = MapFile::new(&g, &map, 42);
    let back: MapFile = serde_json::from_str(&serde_json::to_string(&file).unwrap()).unwrap();
    let restored = back.map().unwrap();
    assert_eq!(restored.agent, map.agent);
    for p in map.interior() {
        assert_eq!(restored.cell(p).terrain, map.cell(p).terrain);
        assert_eq!(restored.cell(p).object, map.cell(p).object);
    }
}
