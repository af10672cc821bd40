//! Benchmark harness: runs a matrix of solver configurations over a corpus
//! of instances and produces one CSV record per (instance, solver) pair.
//!
//! Matrix files hold one solver per line:
//!
//! ```text
//! # solver [objective=makespan|soc] [w=FLOAT] [sub=joint|cbs]
//! joint objective=soc
//! cbs w=1.5
//! id sub=joint objective=makespan
//! flow
//! ```

use std::fmt;
use std::path::{Path as FsPath, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::cbs::{CbsConfig, CbsLimits, CbsSolver};
use crate::error::{MapfError, SolveError};
use crate::flow::FlowSolver;
use crate::independence::IdSolver;
use crate::io::{parse_map, parse_scenario};
use crate::joint::{JointSolver, DEFAULT_STATE_CAP};
use crate::model::{validate_solution, GoalMode, Instance, Objective, Solution};
use crate::solver::{SearchStats, Solver};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Solved,
    Unsolvable,
    UnsolvableWithinBound,
    Timeout,
    Capacity,
}

impl Status {
    pub fn of(result: &Result<Solution, SolveError>) -> Option<Status> {
        Some(match result {
            Ok(_) => Status::Solved,
            Err(SolveError::Unsolvable) => Status::Unsolvable,
            Err(SolveError::UnsolvableWithinBound { .. }) => Status::UnsolvableWithinBound,
            Err(SolveError::Timeout { .. }) => Status::Timeout,
            Err(SolveError::Capacity(_)) => Status::Capacity,
            Err(SolveError::InvalidInput(_)) => return None,
        })
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Solved => "solved",
            Status::Unsolvable => "unsolvable",
            Status::UnsolvableWithinBound => "unsolvable_within_bound",
            Status::Timeout => "timeout",
            Status::Capacity => "capacity",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Joint,
    Cbs,
    /// Independence detection over the joint oracle (`true`) or CBS.
    Id {
        joint_groups: bool,
    },
    Flow,
}

/// One column of the solver matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverSpec {
    pub kind: SolverKind,
    pub objective: Objective,
    pub w: f64,
}

impl SolverSpec {
    pub fn parse(line: &str) -> Result<SolverSpec, MapfError> {
        let mut words = line.split_whitespace();
        let name = words
            .next()
            .ok_or_else(|| MapfError::invalid("empty solver spec"))?;
        let mut spec = SolverSpec {
            kind: match name {
                "joint" => SolverKind::Joint,
                "cbs" => SolverKind::Cbs,
                "id" => SolverKind::Id { joint_groups: true },
                "flow" => SolverKind::Flow,
                other => return Err(MapfError::invalid(format!("unknown solver '{other}'"))),
            },
            objective: Objective::Makespan,
            w: 1.0,
        };
        for word in words {
            let (key, value) = word
                .split_once('=')
                .ok_or_else(|| MapfError::invalid(format!("expected key=value, got '{word}'")))?;
            match key {
                "objective" => spec.objective = value.parse()?,
                "w" => {
                    spec.w = value
                        .parse()
                        .map_err(|_| MapfError::invalid(format!("invalid w '{value}'")))?;
                    if !(spec.w.is_finite() && spec.w >= 1.0) {
                        return Err(MapfError::invalid(format!("w must be >= 1.0, got {value}")));
                    }
                }
                "sub" => match (&mut spec.kind, value) {
                    (SolverKind::Id { joint_groups }, "joint") => *joint_groups = true,
                    (SolverKind::Id { joint_groups }, "cbs") => *joint_groups = false,
                    _ => {
                        return Err(MapfError::invalid(format!(
                            "invalid sub '{value}' for {name}"
                        )))
                    }
                },
                other => return Err(MapfError::invalid(format!("unknown key '{other}'"))),
            }
        }
        Ok(spec)
    }

    /// Label used in the CSV `solver` column.
    pub fn label(&self) -> String {
        match self.kind {
            SolverKind::Joint => "joint".into(),
            SolverKind::Cbs => "cbs".into(),
            SolverKind::Id { joint_groups: true } => "id(joint)".into(),
            SolverKind::Id {
                joint_groups: false,
            } => "id(cbs)".into(),
            SolverKind::Flow => "flow".into(),
        }
    }

    pub fn build(&self, budgets: &Budgets) -> Box<dyn Solver> {
        let cbs = || CbsSolver {
            config: CbsConfig {
                w: self.w,
                limits: CbsLimits {
                    max_nodes: budgets.node_budget,
                    time_budget: budgets.timeout,
                    cost_bound: None,
                },
            },
        };
        let joint = || JointSolver {
            state_cap: budgets.joint_state_cap,
        };
        match self.kind {
            SolverKind::Joint => Box::new(joint()),
            SolverKind::Cbs => Box::new(cbs()),
            SolverKind::Id { joint_groups: true } => Box::new(IdSolver::new(joint())),
            SolverKind::Id {
                joint_groups: false,
            } => Box::new(IdSolver::new(CbsSolver {
                config: CbsConfig {
                    w: 1.0,
                    ..cbs().config
                },
            })),
            SolverKind::Flow => Box::new(FlowSolver),
        }
    }

    /// The instance this solver is run on: labeled solvers see anonymous
    /// instances with agent `i` assigned `goal_set[i]`; the flow solver sees
    /// labeled instances as their goal-set relaxation.
    pub fn prepare(&self, inst: &Instance) -> Result<Instance, MapfError> {
        match (self.kind, inst.goal_mode) {
            (SolverKind::Flow, GoalMode::Labeled) => inst.to_anonymous(),
            (SolverKind::Flow, GoalMode::Anonymous) => Ok(inst.clone()),
            (_, GoalMode::Anonymous) => {
                let identity: Vec<usize> = (0..inst.num_agents()).collect();
                Ok(inst.with_assignment(&identity))
            }
            (_, GoalMode::Labeled) => Ok(inst.clone()),
        }
    }
}

pub fn parse_matrix(text: &str) -> Result<Vec<SolverSpec>, MapfError> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(no, l)| SolverSpec::parse(l).map_err(|e| MapfError::parse(no, e.to_string())))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Budgets {
    /// Wall-clock budget per CBS search.
    pub timeout: Option<Duration>,
    /// High-level node budget per CBS search.
    pub node_budget: Option<u64>,
    pub joint_state_cap: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            timeout: Some(Duration::from_secs(30)),
            node_budget: None,
            joint_state_cap: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub instance: String,
    pub solver: String,
    pub objective: String,
    pub w: f64,
    pub status: Status,
    pub cost: Option<usize>,
    pub runtime_ms: u128,
    pub nodes_expanded: u64,
    pub low_level_expansions: u64,
    pub group_merges: u64,
}

/// Why a run could not be recorded as a status.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("invalid input: {0}")]
    Input(String),
    /// The solver returned a solution that fails validation.
    #[error("{solver} produced an invalid solution: {problems}")]
    Defect { solver: String, problems: String },
}

impl From<MapfError> for RunError {
    fn from(e: MapfError) -> Self {
        RunError::Input(e.to_string())
    }
}

/// Result of one validated solver run.
pub struct RunOutcome {
    pub result: Result<Solution, SolveError>,
    pub stats: SearchStats,
    pub elapsed: Duration,
}

/// Runs `spec` on `inst` and re-validates any solution. Invalid input or
/// an invalid solution is a defect and is returned as an error.
pub fn run_one(
    inst: &Instance,
    spec: &SolverSpec,
    budgets: &Budgets,
) -> Result<RunOutcome, RunError> {
    let prepared = spec.prepare(inst)?;
    let solver = spec.build(budgets);
    let mut stats = SearchStats::default();
    let started = Instant::now();
    let result = solver.solve(&prepared, spec.objective, &mut stats);
    let elapsed = started.elapsed();
    match &result {
        Ok(sol) => {
            let problems = validate_solution(&prepared, sol);
            if !problems.is_empty() {
                return Err(RunError::Defect {
                    solver: spec.label(),
                    problems: problems.join("; "),
                });
            }
        }
        Err(SolveError::InvalidInput(m)) => return Err(RunError::Input(m.clone())),
        Err(_) => {}
    }
    Ok(RunOutcome {
        result,
        stats,
        elapsed,
    })
}

/// Every (instance, solver) pair, run in parallel and reported in corpus
/// order then matrix order.
pub fn run_bench(
    corpus: &[(String, Instance)],
    matrix: &[SolverSpec],
    budgets: &Budgets,
) -> Result<Vec<BenchRecord>, RunError> {
    let jobs: Vec<(&str, &Instance, &SolverSpec)> = corpus
        .iter()
        .flat_map(|(id, inst)| matrix.iter().map(move |s| (id.as_str(), inst, s)))
        .collect();
    jobs.par_iter()
        .map(|&(id, inst, spec)| {
            let out = run_one(inst, spec, budgets)?;
            let status = Status::of(&out.result).expect("invalid input is reported by run_one");
            let cost = out.result.as_ref().ok().map(|s| match spec.kind {
                SolverKind::Flow => s.makespan(),
                _ => s.cost(spec.objective),
            });
            Ok(BenchRecord {
                instance: id.to_string(),
                solver: spec.label(),
                objective: match spec.kind {
                    SolverKind::Flow => Objective::Makespan.to_string(),
                    _ => spec.objective.to_string(),
                },
                w: spec.w,
                status,
                cost,
                runtime_ms: out.elapsed.as_millis(),
                nodes_expanded: out.stats.nodes_expanded,
                low_level_expansions: out.stats.low_level_expansions,
                group_merges: out.stats.group_merges,
            })
        })
        .collect()
}

pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if records.is_empty() {
        w.write_record([
            "instance",
            "solver",
            "objective",
            "w",
            "status",
            "cost",
            "runtime_ms",
            "nodes_expanded",
            "low_level_expansions",
            "group_merges",
        ])
        .expect("in-memory write");
    }
    for r in records {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Loads every `*.scen` in `dir` (sorted by name) with the `.map` of the
/// same stem. Instance ids are the file stems.
pub fn load_corpus(dir: &FsPath) -> Result<Vec<(String, Instance)>, MapfError> {
    let read = |p: &FsPath| {
        std::fs::read_to_string(p).map_err(|e| MapfError::invalid(format!("{}: {e}", p.display())))
    };
    let entries = std::fs::read_dir(dir)
        .map_err(|e| MapfError::invalid(format!("{}: {e}", dir.display())))?;
    let mut scens: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scen"))
        .collect();
    scens.sort();
    scens
        .into_iter()
        .map(|scen| {
            let id = scen
                .file_stem()
                .expect("file has a stem")
                .to_string_lossy()
                .into_owned();
            let map_path = scen.with_extension("map");
            let grid = parse_map(&read(&map_path)?)
                .map_err(|e| MapfError::invalid(format!("{}: {e}", map_path.display())))?;
            let inst = parse_scenario(&read(&scen)?, &grid)
                .map_err(|e| MapfError::invalid(format!("{}: {e}", scen.display())))?;
            Ok((id, inst))
        })
        .collect()
}
