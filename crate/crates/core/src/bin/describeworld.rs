//! Command-line front end. Every subcommand accepts `--seed`, `--config`
//! and `--out`; failures exit nonzero with a JSON error object on stderr.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use describeworld::conformance;
use describeworld::episode::WorldConfig;
use describeworld::eval::oracle_agent::OracleAgent;
use describeworld::eval::protocol::{serve, SubprocessAgent};
use describeworld::eval::{build_eval_instances, report, run_eval, Agent, ScenarioKind};
use describeworld::graph::SubtaskGraph;
use describeworld::io::{export_dataset, write_jsonl, EpisodeRecord, MapFile, Provenance};
use describeworld::lang::parse_description;
use describeworld::mapgen::{generate, generate_feasible, MapGenConfig};
use describeworld::oracle::{rollout, RolloutMode};
use describeworld::splits::{build_split, LengthParams, SplitManifest, SplitName};
use describeworld::task::{enumerate_tasks, Task, TaskUniverse};

#[derive(Parser)]
#[command(
    name = "describeworld",
    version,
    about = "Compositional grid-world tasks, oracle and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Subtask-graph TOML, or `default` for the shipped one.
    #[arg(long, default_value = "default")]
    config: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Map generation.
    Map {
        #[command(subcommand)]
        command: MapCommand,
    },
    /// Task universe.
    Tasks {
        #[command(subcommand)]
        command: TasksCommand,
    },
    /// Train/test manifests.
    Splits {
        #[command(subcommand)]
        command: SplitsCommand,
    },
    /// Expert rollouts.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Demonstration datasets.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
    /// Agent evaluation.
    Eval {
        #[command(subcommand)]
        command: EvalCommand,
    },
    /// Reference cross-checks.
    Conformance {
        #[command(subcommand)]
        command: ConformanceCommand,
    },
    /// Built-in agents speaking the wire protocol on stdin/stdout.
    Agent {
        #[command(subcommand)]
        command: AgentCommand,
    },
}

#[derive(Subcommand)]
enum MapCommand {
    /// Generate a map; with `--task`, the first feasible map for that task.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        task: Option<String>,
    },
}

#[derive(Subcommand)]
enum TasksCommand {
    /// Write every task as one JSON line; the count summary goes to stderr.
    Enumerate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum SplitsCommand {
    /// Build one split manifest.
    Build {
        name: String,
        #[command(flatten)]
        common: Common,
        /// Maps per end goal for the length statistic.
        #[arg(long, default_value_t = 5)]
        seeds_per_task: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Expert,
    Demonstration,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Roll out the expert on a feasible map for a task.
    Rollout {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        task: String,
        #[arg(long, value_enum, default_value = "demonstration")]
        mode: Mode,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Part {
    Train,
    Test,
    Validation,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Export oracle demonstrations for one side of a split.
    Export {
        #[command(flatten)]
        common: Common,
        /// Split manifest file written by `splits build`.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "train")]
        part: Part,
        #[arg(long, default_value_t = 1)]
        demos: u32,
        /// Use only the first N tasks of the chosen part.
        #[arg(long)]
        limit: Option<usize>,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Evaluate an external agent in one scenario.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: String,
        /// Agent program and arguments, split on whitespace.
        #[arg(long)]
        agent_cmd: String,
        /// Manifest whose test tasks are sampled; whole universe if omitted.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Number of tasks sampled.
        #[arg(long, default_value_t = 10)]
        tasks: usize,
        /// Instances kept per task, at most 15.
        #[arg(long, default_value_t = 15)]
        instances_per_task: usize,
        #[arg(long, default_value_t = 5000)]
        timeout_ms: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Subcommand)]
enum ConformanceCommand {
    /// Print pass/fail per check.
    Report {
        #[command(flatten)]
        common: Common,
        /// Also build and audit the length split.
        #[arg(long)]
        with_length: bool,
    },
}

#[derive(Subcommand)]
enum AgentCommand {
    /// The expert as a protocol agent.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
}

fn load_graph(config: &str) -> Result<SubtaskGraph> {
    if config == "default" {
        return Ok(SubtaskGraph::load_default());
    }
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {config}"))?;
    Ok(SubtaskGraph::from_toml(&text)?)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn write_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(w.flush()?)
}

fn parse_task(graph: &SubtaskGraph, text: &str) -> Result<Task> {
    parse_description(graph, text).map_err(|e| anyhow!("cannot parse task {text:?}: {e}"))
}

fn read_manifest(path: &Path) -> Result<SplitManifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Serialize)]
struct TaskLine<'a> {
    id: u64,
    task: &'a str,
    goal: &'a str,
    category: &'static str,
    constraint_category: &'a str,
}

fn tasks_enumerate(common: &Common) -> Result<()> {
    let graph = load_graph(&common.config)?;
    let universe = enumerate_tasks(&graph);
    let mut w = sink(&common.out)?;
    for t in &universe.tasks {
        let line = TaskLine {
            id: t.id,
            task: &t.text,
            goal: &t.goal_text,
            category: t.category.name(),
            constraint_category: &t.constraint_category,
        };
        writeln!(w, "{}", serde_json::to_string(&line)?)?;
    }
    w.flush()?;
    let summary = serde_json::json!({
        "provenance": Provenance::of(&graph),
        "end_goals": universe.end_goals.len(),
        "tasks": universe.tasks.len(),
        "by_category": universe.goal_counts,
        "shortfalls": universe.shortfalls,
    });
    eprintln!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn eval_tasks(universe: &TaskUniverse, manifest: Option<&SplitManifest>, n: usize, seed: u64) -> Vec<String> {
    let pool: Vec<String> = match manifest {
        Some(m) => m.test.iter().map(|e| e.task.clone()).collect(),
        None => universe.tasks.iter().map(|t| t.text.clone()).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, pool.len(), n.min(pool.len())).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| pool[i].clone()).collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Map {
            command: MapCommand::Gen { common, task },
        } => {
            let graph = load_graph(&common.config)?;
            let mapgen = MapGenConfig::default();
            let (map, seed) = match task {
                Some(text) => generate_feasible(&graph, &mapgen, &parse_task(&graph, &text)?, common.seed)?,
                None => (generate(&graph, &mapgen, common.seed)?, common.seed),
            };
            write_json(&common.out, &MapFile::new(&graph, &map, seed))
        }
        Command::Tasks {
            command: TasksCommand::Enumerate { common },
        } => tasks_enumerate(&common),
        Command::Splits {
            command:
                SplitsCommand::Build {
                    name,
                    common,
                    seeds_per_task,
                },
        } => {
            let split = SplitName::parse(&name).ok_or_else(|| anyhow!("unknown split {name:?}"))?;
            let graph = load_graph(&common.config)?;
            let universe = enumerate_tasks(&graph);
            let params = LengthParams {
                seeds_per_task,
                base_seed: common.seed,
                ..LengthParams::default()
            };
            let manifest = build_split(&graph, &universe, split, &MapGenConfig::default(), &params);
            let failed: Vec<_> = describeworld::splits::audit(&graph, &universe, &manifest)
                .into_iter()
                .filter(|a| !a.passed)
                .collect();
            if !failed.is_empty() {
                bail!("manifest failed its audit: {failed:?}");
            }
            let mut w = sink(&common.out)?;
            writeln!(w, "{}", manifest.to_json())?;
            Ok(w.flush()?)
        }
        Command::Oracle {
            command: OracleCommand::Rollout { common, task, mode },
        } => {
            let graph = load_graph(&common.config)?;
            let task = parse_task(&graph, &task)?;
            let (map, seed) = generate_feasible(&graph, &MapGenConfig::default(), &task, common.seed)?;
            let mode = match mode {
                Mode::Expert => RolloutMode::Expert,
                Mode::Demonstration => RolloutMode::Demonstration,
            };
            let r = rollout(&graph, map, &task, mode, WorldConfig::default())?;
            write_json(&common.out, &EpisodeRecord::from_rollout(&graph, &r, seed)?)
        }
        Command::Dataset {
            command:
                DatasetCommand::Export {
                    common,
                    manifest,
                    part,
                    demos,
                    limit,
                },
        } => {
            let graph = load_graph(&common.config)?;
            let m = read_manifest(&manifest)?;
            let entries = match part {
                Part::Train => &m.train,
                Part::Test => &m.test,
                Part::Validation => &m.validation,
            };
            let tasks: Vec<String> = entries
                .iter()
                .take(limit.unwrap_or(usize::MAX))
                .map(|e| e.task.clone())
                .collect();
            let data = export_dataset(&graph, &MapGenConfig::default(), &tasks, demos, common.seed);
            write_jsonl(sink(&common.out)?, &data.records)?;
            for s in &data.skipped {
                eprintln!("{}", serde_json::to_string(s)?);
            }
            Ok(())
        }
        Command::Eval {
            command:
                EvalCommand::Run {
                    common,
                    scenario,
                    agent_cmd,
                    manifest,
                    tasks,
                    instances_per_task,
                    timeout_ms,
                    workers,
                },
        } => {
            let kind = ScenarioKind::parse(&scenario).ok_or_else(|| anyhow!("unknown scenario {scenario:?}"))?;
            let graph = load_graph(&common.config)?;
            let universe = enumerate_tasks(&graph);
            let manifest = manifest.as_deref().map(read_manifest).transpose()?;
            let mapgen = MapGenConfig::default();
            let mut instances = Vec::new();
            for text in eval_tasks(&universe, manifest.as_ref(), tasks, common.seed) {
                let task = parse_task(&graph, &text)?;
                let all = build_eval_instances(&graph, &mapgen, &task, common.seed)?;
                instances.extend(all.into_iter().take(instances_per_task));
            }
            let timeout = Duration::from_millis(timeout_ms);
            let results = run_eval(&graph, kind, &instances, workers, || {
                SubprocessAgent::spawn(&agent_cmd, timeout).map(|a| Box::new(a) as Box<dyn Agent>)
            })?;
            write_json(&common.out, &report(&graph, kind, &results))
        }
        Command::Conformance {
            command: ConformanceCommand::Report { common, with_length },
        } => {
            let graph = load_graph(&common.config)?;
            let universe = enumerate_tasks(&graph);
            let items = conformance::report(&graph, &universe, with_length, &MapGenConfig::default());
            let passed = items.iter().all(|i| i.passed);
            write_json(
                &common.out,
                &serde_json::json!({
                    "provenance": Provenance::of(&graph),
                    "passed": passed,
                    "items": items,
                }),
            )?;
            if passed {
                Ok(())
            } else {
                bail!("conformance checks failed")
            }
        }
        Command::Agent {
            command: AgentCommand::Oracle { common },
        } => {
            let graph = Arc::new(load_graph(&common.config)?);
            let universe = Arc::new(enumerate_tasks(&graph));
            let mut agent = OracleAgent::new(graph, universe);
            let stdin = std::io::stdin();
            Ok(serve(stdin.lock(), std::io::stdout(), &mut agent)?)
        }
    }
}

fn fail(kind: &str, message: String, code: i32) -> ! {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
    std::process::exit(code)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => fail("usage", e.to_string(), 2),
        Err(e) => {
            print!("{e}");
            return;
        }
    };
    if let Err(e) = run(cli) {
        // A closed downstream pipe is not a failure of this program.
        let broken_pipe = e
            .chain()
            .filter_map(|c| c.downcast_ref::<std::io::Error>())
            .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe);
        if broken_pipe {
            return;
        }
        fail("runtime", format!("{e:#}"), 1);
    }
}
