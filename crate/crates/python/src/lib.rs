//! Python bindings: an episode handle with reset/step, the task list, and
//! dataset helpers.

use std::collections::HashMap;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use describeworld::episode::{Episode, WorldConfig};
use describeworld::graph::SubtaskGraph;
use describeworld::io::{read_jsonl, EpisodeRecord};
use describeworld::lang::parse_description;
use describeworld::mapgen::{generate_feasible, MapGenConfig};
use describeworld::oracle::expert_action;
use describeworld::task::{enumerate_tasks, TaskUniverse};
use describeworld::world::Action;

/// Cells as small integers; `u8` sequences would surface as `bytes`.
type Grid = Vec<Vec<[u16; 3]>>;

/// `(grid, inventory, reward, done, info)` returned by `Env.step`.
type StepResult = (Grid, String, i32, bool, HashMap<String, String>);

fn widen(grid: Vec<Vec<[u8; 3]>>) -> Grid {
    grid.into_iter()
        .map(|row| row.into_iter().map(|c| c.map(u16::from)).collect())
        .collect()
}

fn runtime<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// One episode at a time over the shipped subtask graph.
#[pyclass]
struct Env {
    graph: Arc<SubtaskGraph>,
    universe: Option<Arc<TaskUniverse>>,
    episode: Option<Episode>,
    map_seed: u64,
}

impl Env {
    fn episode(&self) -> PyResult<&Episode> {
        self.episode
            .as_ref()
            .ok_or_else(|| PyRuntimeError::new_err("call reset first"))
    }

    fn observation(&self) -> PyResult<(Grid, String)> {
        let obs = self.episode()?.observe(&self.graph);
        Ok((widen(obs.grid), obs.inventory))
    }
}

#[pymethods]
impl Env {
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(config: Option<String>) -> PyResult<Self> {
        let graph = match config {
            None => SubtaskGraph::load_default(),
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
                SubtaskGraph::from_toml(&text).map_err(|e| PyValueError::new_err(e.to_string()))?
            }
        };
        Ok(Env {
            graph: Arc::new(graph),
            universe: None,
            episode: None,
            map_seed: 0,
        })
    }

    /// All task descriptions of the enumerated universe.
    fn task_texts(&mut self) -> Vec<String> {
        let graph = Arc::clone(&self.graph);
        let universe = self.universe.get_or_insert_with(|| Arc::new(enumerate_tasks(&graph)));
        universe.tasks.iter().map(|t| t.text.clone()).collect()
    }

    /// Start a task on its first feasible map for `seed`; returns the
    /// observation grid and inventory text.
    fn reset(&mut self, task: &str, seed: u64) -> PyResult<(Grid, String)> {
        let task = parse_description(&self.graph, task).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let (map, map_seed) = generate_feasible(&self.graph, &MapGenConfig::default(), &task, seed).map_err(runtime)?;
        self.episode = Some(Episode::new(&self.graph, map, task, WorldConfig::default()).map_err(runtime)?);
        self.map_seed = map_seed;
        self.observation()
    }

    /// Apply an action given by index or name; returns
    /// `(grid, inventory, reward, done, info)`.
    fn step(&mut self, action: &Bound<'_, PyAny>) -> PyResult<StepResult> {
        let action = if let Ok(i) = action.extract::<usize>() {
            Action::from_index(i)
        } else {
            Action::from_name(&action.extract::<String>()?)
        }
        .ok_or_else(|| PyValueError::new_err("illegal action"))?;
        let graph = Arc::clone(&self.graph);
        let episode = self
            .episode
            .as_mut()
            .ok_or_else(|| PyRuntimeError::new_err("call reset first"))?;
        let result = episode.step(&graph, action).map_err(runtime)?;
        let mut info = HashMap::new();
        if let Some(t) = result.termination {
            info.insert("outcome".to_string(), t.name().to_string());
        }
        if let Some(s) = result.completed {
            info.insert("completed".to_string(), graph.phrase(s).to_string());
        }
        info.insert(
            "events".to_string(),
            serde_json::to_string(&result.events).map_err(runtime)?,
        );
        let (grid, inventory) = self.observation()?;
        Ok((grid, inventory, result.reward, result.termination.is_some(), info))
    }

    /// The expert's action in the current state, for expert-query training.
    fn expert_action(&self) -> PyResult<usize> {
        Ok(expert_action(&self.graph, self.episode()?).map_err(runtime)?.index())
    }

    #[getter]
    fn map_seed(&self) -> u64 {
        self.map_seed
    }

    #[getter]
    fn total_reward(&self) -> PyResult<i64> {
        Ok(self.episode()?.total_reward)
    }

    #[staticmethod]
    fn action_names() -> Vec<&'static str> {
        Action::ALL.iter().map(|a| a.name()).collect()
    }
}

/// Records of a line-delimited dataset file, each as a JSON string.
#[pyfunction]
fn load_dataset(path: &str) -> PyResult<Vec<String>> {
    let file = std::fs::File::open(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
    read_jsonl(std::io::BufReader::new(file))
        .map(|r| {
            r.map(|rec| rec.to_line())
                .map_err(|e| PyValueError::new_err(e.to_string()))
        })
        .collect()
}

/// Keep the last `n` transitions of a record given as a JSON string.
#[pyfunction]
fn truncate_record(record: &str, n: usize) -> PyResult<String> {
    let rec: EpisodeRecord = serde_json::from_str(record).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(rec.truncated(n).to_line())
}

#[pymodule]
fn describeworld_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Env>()?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(truncate_record, m)?)?;
    Ok(())
}
