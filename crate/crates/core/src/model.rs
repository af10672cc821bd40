//! Grids, instances, paths and solutions, together with the collision
//! detector and objective evaluators every solver is checked against.
//!
//! Coordinates: `x` is the column and `y` the row, origin at the top-left.
//! Robots move synchronously; in one step each robot waits or moves to a
//! 4-adjacent free cell. Two robots collide iff they end a step in the same
//! cell (vertex conflict) or exchange cells (swap conflict). Following and
//! cyclic rotations are legal.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::MapfError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    pub fn is_adjacent(self, other: Cell) -> bool {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y) == 1
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl From<(usize, usize)> for Cell {
    fn from((x, y): (usize, usize)) -> Self {
        Cell { x, y }
    }
}

/// Rectangular 4-connected grid with a set of blocked cells.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridMap {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
}

impl GridMap {
    pub fn new(
        width: usize,
        height: usize,
        blocked: impl IntoIterator<Item = Cell>,
    ) -> Result<Self, MapfError> {
        if width == 0 || height == 0 {
            return Err(MapfError::invalid(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        let mut grid = GridMap {
            width,
            height,
            blocked: vec![false; width * height],
        };
        for c in blocked {
            if !grid.in_bounds(c) {
                return Err(MapfError::invalid(format!(
                    "blocked cell {c} out of bounds"
                )));
            }
            let i = grid.index(c);
            grid.blocked[i] = true;
        }
        if grid.free_count() == 0 {
            return Err(MapfError::invalid("grid has no free cell"));
        }
        Ok(grid)
    }

    pub fn open(width: usize, height: usize) -> Result<Self, MapfError> {
        Self::new(width, height, std::iter::empty())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn size(&self) -> usize {
        self.width * self.height
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    /// Row-major cell index `y * width + x`.
    pub fn index(&self, c: Cell) -> usize {
        c.y * self.width + c.x
    }

    pub fn cell(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.blocked[self.index(c)]
    }

    /// In bounds and not blocked.
    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.blocked[self.index(c)]
    }

    pub(crate) fn is_free_index(&self, i: usize) -> bool {
        !self.blocked[i]
    }

    pub fn free_count(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    pub fn blocked_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.blocked
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| self.cell(i))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.blocked
            .iter()
            .enumerate()
            .filter(|(_, b)| !**b)
            .map(|(i, _)| self.cell(i))
    }

    /// Free orthogonal neighbours of `c` in west, east, north, south order.
    /// Does not include `c` itself and does not check `c`.
    pub fn adjacent(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        let w = (c.x > 0).then(|| Cell::new(c.x - 1, c.y));
        let e = (c.x + 1 < self.width).then(|| Cell::new(c.x + 1, c.y));
        let n = (c.y > 0).then(|| Cell::new(c.x, c.y - 1));
        let s = (c.y + 1 < self.height).then(|| Cell::new(c.x, c.y + 1));
        [w, e, n, s]
            .into_iter()
            .flatten()
            .filter(move |&d| !self.is_blocked(d))
    }

    pub(crate) fn adjacent_indices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = (i % self.width, i / self.width);
        let w = (x > 0).then(|| i - 1);
        let e = (x + 1 < self.width).then(|| i + 1);
        let n = (y > 0).then(|| i - self.width);
        let s = (y + 1 < self.height).then(|| i + self.width);
        [w, e, n, s]
            .into_iter()
            .flatten()
            .filter(move |&d| !self.blocked[d])
    }

    /// Cells reachable from `c` in one step: `c` itself (wait) followed by
    /// its free orthogonal neighbours.
    pub fn neighbors(&self, c: Cell) -> Result<Vec<Cell>, MapfError> {
        if !self.in_bounds(c) {
            return Err(MapfError::invalid(format!("cell {c} out of bounds")));
        }
        if self.is_blocked(c) {
            return Err(MapfError::invalid(format!("cell {c} is blocked")));
        }
        Ok(std::iter::once(c).chain(self.adjacent(c)).collect())
    }

    /// Connected-component label of every cell (`usize::MAX` for blocked).
    pub(crate) fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.size()];
        let mut next = 0;
        let mut stack = Vec::new();
        for root in 0..self.size() {
            if self.blocked[root] || label[root] != usize::MAX {
                continue;
            }
            label[root] = next;
            stack.push(root);
            while let Some(u) = stack.pop() {
                for v in self.adjacent_indices(u) {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AgentTask {
    pub id: usize,
    pub start: Cell,
    /// `None` for agents of an anonymous instance.
    pub goal: Option<Cell>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GoalMode {
    Labeled,
    Anonymous,
}

/// A grid plus agent starts and either per-agent goals (labeled) or a shared
/// goal set that agents may be matched to in any order (anonymous).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instance {
    pub grid: GridMap,
    pub agents: Vec<AgentTask>,
    pub goal_mode: GoalMode,
    /// Anonymous mode only; empty for labeled instances.
    pub goal_set: Vec<Cell>,
}

impl Instance {
    pub fn labeled(grid: GridMap, tasks: impl IntoIterator<Item = (Cell, Cell)>) -> Self {
        let agents = tasks
            .into_iter()
            .enumerate()
            .map(|(id, (start, goal))| AgentTask {
                id,
                start,
                goal: Some(goal),
            })
            .collect();
        Instance {
            grid,
            agents,
            goal_mode: GoalMode::Labeled,
            goal_set: Vec::new(),
        }
    }

    pub fn anonymous(grid: GridMap, starts: Vec<Cell>, goal_set: Vec<Cell>) -> Self {
        let agents = starts
            .into_iter()
            .enumerate()
            .map(|(id, start)| AgentTask {
                id,
                start,
                goal: None,
            })
            .collect();
        Instance {
            grid,
            agents,
            goal_mode: GoalMode::Anonymous,
            goal_set,
        }
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn starts(&self) -> Vec<Cell> {
        self.agents.iter().map(|a| a.start).collect()
    }

    /// Per-agent goals of a labeled instance.
    pub fn goals(&self) -> Result<Vec<Cell>, MapfError> {
        if self.goal_mode != GoalMode::Labeled {
            return Err(MapfError::invalid(
                "instance is anonymous; goals are unassigned",
            ));
        }
        self.agents
            .iter()
            .map(|a| {
                a.goal
                    .ok_or_else(|| MapfError::invalid(format!("agent {} has no goal", a.id)))
            })
            .collect()
    }

    /// Labeled sub-instance over `ids`; agent `k` of the result is `ids[k]`.
    pub fn subset(&self, ids: &[usize]) -> Instance {
        let agents = ids
            .iter()
            .enumerate()
            .map(|(k, &i)| AgentTask {
                id: k,
                ..self.agents[i].clone()
            })
            .collect();
        Instance {
            grid: self.grid.clone(),
            agents,
            goal_mode: self.goal_mode,
            goal_set: self.goal_set.clone(),
        }
    }

    /// Labeled view of an anonymous instance: agent `i` gets
    /// `goal_set[assignment[i]]`.
    pub fn with_assignment(&self, assignment: &[usize]) -> Instance {
        let tasks = self
            .agents
            .iter()
            .zip(assignment)
            .map(|(a, &g)| (a.start, self.goal_set[g]));
        Instance::labeled(self.grid.clone(), tasks)
    }

    /// Anonymous relaxation of a labeled instance: the goals become a set.
    pub fn to_anonymous(&self) -> Result<Instance, MapfError> {
        Ok(Instance::anonymous(
            self.grid.clone(),
            self.starts(),
            self.goals()?,
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    AgentId { index: usize, id: usize },
    StartOutOfBounds { agent: usize, cell: Cell },
    BlockedStart { agent: usize, cell: Cell },
    GoalOutOfBounds { agent: usize, cell: Cell },
    BlockedGoal { agent: usize, cell: Cell },
    MissingGoal { agent: usize },
    UnexpectedGoal { agent: usize },
    DuplicateStart { agents: (usize, usize), cell: Cell },
    DuplicateGoal { agents: (usize, usize), cell: Cell },
    GoalSetSize { agents: usize, goals: usize },
    GoalSetOutOfBounds { cell: Cell },
    BlockedGoalSetCell { cell: Cell },
    DuplicateGoalSetCell { cell: Cell },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            AgentId { index, id } => write!(f, "agent at position {index} has id {id}"),
            StartOutOfBounds { agent, cell } => {
                write!(f, "start out of bounds: agent {agent} at {cell}")
            }
            BlockedStart { agent, cell } => write!(f, "blocked start: agent {agent} at {cell}"),
            GoalOutOfBounds { agent, cell } => {
                write!(f, "goal out of bounds: agent {agent} at {cell}")
            }
            BlockedGoal { agent, cell } => write!(f, "blocked goal: agent {agent} at {cell}"),
            MissingGoal { agent } => write!(f, "missing goal: agent {agent}"),
            UnexpectedGoal { agent } => write!(f, "unexpected goal: anonymous agent {agent}"),
            DuplicateStart { agents, cell } => {
                write!(
                    f,
                    "duplicate start: agents {} and {} at {cell}",
                    agents.0, agents.1
                )
            }
            DuplicateGoal { agents, cell } => {
                write!(
                    f,
                    "duplicate goal: agents {} and {} at {cell}",
                    agents.0, agents.1
                )
            }
            GoalSetSize { agents, goals } => {
                write!(f, "goal set size: {goals} goals for {agents} agents")
            }
            GoalSetOutOfBounds { cell } => write!(f, "goal set cell out of bounds: {cell}"),
            BlockedGoalSetCell { cell } => write!(f, "blocked goal: goal set cell {cell}"),
            DuplicateGoalSetCell { cell } => write!(f, "duplicate goal: goal set cell {cell}"),
        }
    }
}

/// Every violated instance invariant; empty means the instance is valid.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let grid = &inst.grid;
    let mut out = Vec::new();
    let check_cell = |agent: usize, cell: Cell, is_goal: bool, out: &mut Vec<Violation>| {
        if !grid.in_bounds(cell) {
            out.push(if is_goal {
                Violation::GoalOutOfBounds { agent, cell }
            } else {
                Violation::StartOutOfBounds { agent, cell }
            });
        } else if grid.is_blocked(cell) {
            out.push(if is_goal {
                Violation::BlockedGoal { agent, cell }
            } else {
                Violation::BlockedStart { agent, cell }
            });
        }
    };
    for (index, a) in inst.agents.iter().enumerate() {
        if a.id != index {
            out.push(Violation::AgentId { index, id: a.id });
        }
        check_cell(index, a.start, false, &mut out);
        match (inst.goal_mode, a.goal) {
            (GoalMode::Labeled, Some(g)) => check_cell(index, g, true, &mut out),
            (GoalMode::Labeled, None) => out.push(Violation::MissingGoal { agent: index }),
            (GoalMode::Anonymous, Some(_)) => out.push(Violation::UnexpectedGoal { agent: index }),
            (GoalMode::Anonymous, None) => {}
        }
    }
    for (i, a) in inst.agents.iter().enumerate() {
        for (j, b) in inst.agents.iter().enumerate().skip(i + 1) {
            if a.start == b.start {
                out.push(Violation::DuplicateStart {
                    agents: (i, j),
                    cell: a.start,
                });
            }
            if let (GoalMode::Labeled, Some(ga), Some(gb)) = (inst.goal_mode, a.goal, b.goal) {
                if ga == gb {
                    out.push(Violation::DuplicateGoal {
                        agents: (i, j),
                        cell: ga,
                    });
                }
            }
        }
    }
    if inst.goal_mode == GoalMode::Anonymous {
        if inst.goal_set.len() != inst.agents.len() {
            out.push(Violation::GoalSetSize {
                agents: inst.agents.len(),
                goals: inst.goal_set.len(),
            });
        }
        let mut seen = HashSet::new();
        for &cell in &inst.goal_set {
            if !grid.in_bounds(cell) {
                out.push(Violation::GoalSetOutOfBounds { cell });
            } else if grid.is_blocked(cell) {
                out.push(Violation::BlockedGoalSetCell { cell });
            }
            if !seen.insert(cell) {
                out.push(Violation::DuplicateGoalSetCell { cell });
            }
        }
    }
    out
}

/// One robot's motion, indexed by time step.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Path(pub Vec<Cell>);

impl Path {
    pub fn new(cells: Vec<Cell>) -> Self {
        Path(cells)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Position at time `t`; robots rest on their last cell afterwards.
    pub fn at(&self, t: usize) -> Cell {
        self.0[t.min(self.0.len() - 1)]
    }

    pub fn first(&self) -> Option<Cell> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Cell> {
        self.0.last().copied()
    }

    /// Checks that every entry is free and each step is a wait or a
    /// 4-adjacent move.
    pub fn check_moves(&self, grid: &GridMap) -> Result<(), MapfError> {
        for (t, &c) in self.0.iter().enumerate() {
            if !grid.is_free(c) {
                return Err(MapfError::invalid(format!("cell {c} at t={t} is not free")));
            }
        }
        for (t, w) in self.0.windows(2).enumerate() {
            if w[0] != w[1] && !w[0].is_adjacent(w[1]) {
                return Err(MapfError::invalid(format!(
                    "illegal move {}->{} arriving at t={}",
                    w[0],
                    w[1],
                    t + 1
                )));
            }
        }
        Ok(())
    }

    fn padded(&self, len: usize) -> Path {
        let mut cells = self.0.clone();
        cells.truncate(len);
        let last = *self.0.last().expect("non-empty path");
        cells.resize(len, last);
        Path(cells)
    }
}

impl AsRef<Path> for Path {
    fn as_ref(&self) -> &Path {
        self
    }
}

impl From<Vec<Cell>> for Path {
    fn from(cells: Vec<Cell>) -> Self {
        Path(cells)
    }
}

/// Final-arrival time: smallest `t*` with `path[t] == goal` for all `t >= t*`.
pub fn agent_cost(path: &Path, goal: Cell) -> Result<usize, MapfError> {
    match path.last() {
        None => Err(MapfError::invalid("empty path")),
        Some(last) if last != goal => Err(MapfError::invalid(format!(
            "path ends at {last}, expected goal {goal}"
        ))),
        Some(_) => Ok(path.0.iter().rposition(|&c| c != goal).map_or(0, |p| p + 1)),
    }
}

fn check_arity(paths: &[Path], goals: &[Cell]) -> Result<(), MapfError> {
    if paths.len() != goals.len() {
        return Err(MapfError::invalid(format!(
            "{} paths for {} goals",
            paths.len(),
            goals.len()
        )));
    }
    Ok(())
}

pub fn makespan(paths: &[Path], goals: &[Cell]) -> Result<usize, MapfError> {
    check_arity(paths, goals)?;
    paths
        .iter()
        .zip(goals)
        .map(|(p, &g)| agent_cost(p, g))
        .try_fold(0, |acc, c| c.map(|c| acc.max(c)))
}

pub fn sum_of_costs(paths: &[Path], goals: &[Cell]) -> Result<usize, MapfError> {
    check_arity(paths, goals)?;
    paths
        .iter()
        .zip(goals)
        .map(|(p, &g)| agent_cost(p, g))
        .sum()
}

/// Objective a solver minimises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Makespan,
    SumOfCosts,
}

impl Objective {
    /// Combines per-agent final-arrival times into the objective value.
    pub fn combine(self, costs: impl IntoIterator<Item = usize>) -> usize {
        match self {
            Objective::Makespan => costs.into_iter().max().unwrap_or(0),
            Objective::SumOfCosts => costs.into_iter().sum(),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Makespan => "makespan",
            Objective::SumOfCosts => "soc",
        })
    }
}

impl std::str::FromStr for Objective {
    type Err = MapfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "makespan" => Ok(Objective::Makespan),
            "soc" | "sum_of_costs" => Ok(Objective::SumOfCosts),
            other => Err(MapfError::invalid(format!("unknown objective '{other}'"))),
        }
    }
}

/// Per-agent paths padded to a common horizon `makespan + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    paths: Vec<Path>,
    goals: Vec<Cell>,
    makespan: usize,
    sum_of_costs: usize,
    assignment: Option<Vec<usize>>,
}

impl Solution {
    /// Normalises `paths` to length `makespan + 1`: goal-rest tails are
    /// trimmed or padded. Fails if a path is empty or does not end on its
    /// goal.
    pub fn new(paths: Vec<Path>, goals: Vec<Cell>) -> Result<Self, MapfError> {
        check_arity(&paths, &goals)?;
        let costs = paths
            .iter()
            .zip(&goals)
            .map(|(p, &g)| agent_cost(p, g))
            .collect::<Result<Vec<_>, _>>()?;
        let horizon = costs.iter().copied().max().unwrap_or(0);
        let paths = paths.iter().map(|p| p.padded(horizon + 1)).collect();
        Ok(Solution {
            paths,
            goals,
            makespan: horizon,
            sum_of_costs: costs.iter().sum(),
            assignment: None,
        })
    }

    pub fn empty() -> Self {
        Solution {
            paths: Vec::new(),
            goals: Vec::new(),
            makespan: 0,
            sum_of_costs: 0,
            assignment: None,
        }
    }

    pub fn with_assignment(mut self, assignment: Vec<usize>) -> Self {
        self.assignment = Some(assignment);
        self
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    /// The goal each path ends on (the assigned goal for anonymous solutions).
    pub fn goals(&self) -> &[Cell] {
        &self.goals
    }

    pub fn makespan(&self) -> usize {
        self.makespan
    }

    pub fn sum_of_costs(&self) -> usize {
        self.sum_of_costs
    }

    pub fn cost(&self, objective: Objective) -> usize {
        match objective {
            Objective::Makespan => self.makespan,
            Objective::SumOfCosts => self.sum_of_costs,
        }
    }

    /// Index into the instance goal set per agent, for anonymous solutions.
    pub fn assignment(&self) -> Option<&[usize]> {
        self.assignment.as_deref()
    }

    pub fn num_agents(&self) -> usize {
        self.paths.len()
    }

    pub fn conflicts(&self) -> Vec<Conflict> {
        find_conflicts(&self.paths).expect("solution paths share one length")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConflictKind {
    /// Both agents occupy this cell.
    Vertex(Cell),
    /// The lower-indexed agent moved `from -> to` while the other moved
    /// `to -> from`.
    Swap { from: Cell, to: Cell },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Conflict {
    /// `(i, j)` with `i < j`.
    pub agents: (usize, usize),
    /// Step at whose end the collision happens, `>= 1`.
    pub time: usize,
    pub kind: ConflictKind,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (i, j) = self.agents;
        match self.kind {
            ConflictKind::Vertex(c) => write!(f, "vertex conflict {i}/{j} at {c}, t={}", self.time),
            ConflictKind::Swap { from, to } => {
                write!(f, "swap conflict {i}/{j} on {from}<->{to}, t={}", self.time)
            }
        }
    }
}

/// All vertex and swap conflicts, ordered by time then agent pair.
pub fn find_conflicts(paths: &[Path]) -> Result<Vec<Conflict>, MapfError> {
    let len = match paths.first() {
        None => return Ok(Vec::new()),
        Some(p) => p.len(),
    };
    if paths.iter().any(|p| p.len() != len) {
        return Err(MapfError::invalid("paths have different lengths"));
    }
    Ok(scan_conflicts(paths))
}

/// Conflicts of paths of any length, each padded by resting on its last
/// cell up to the longest one.
pub(crate) fn scan_conflicts<P: AsRef<Path>>(paths: &[P]) -> Vec<Conflict> {
    let horizon = paths.iter().map(|p| p.as_ref().len()).max().unwrap_or(0);
    let mut out = Vec::new();
    for t in 1..horizon {
        for (i, a) in paths.iter().enumerate() {
            let a = a.as_ref();
            let (a0, a1) = (a.at(t - 1), a.at(t));
            for (j, b) in paths.iter().enumerate().skip(i + 1) {
                let b = b.as_ref();
                let (b0, b1) = (b.at(t - 1), b.at(t));
                if a1 == b1 {
                    out.push(Conflict {
                        agents: (i, j),
                        time: t,
                        kind: ConflictKind::Vertex(a1),
                    });
                } else if a0 != a1 && a0 == b1 && a1 == b0 {
                    out.push(Conflict {
                        agents: (i, j),
                        time: t,
                        kind: ConflictKind::Swap { from: a0, to: a1 },
                    });
                }
            }
        }
    }
    out
}

/// Checks a solution against its instance: agent count, path shape and
/// moves, starts, goals (or goal-set assignment), collisions, and the
/// reported objective values. Returns every problem found.
pub fn validate_solution(inst: &Instance, sol: &Solution) -> Vec<String> {
    let mut problems = Vec::new();
    let n = inst.num_agents();
    if sol.paths.len() != n {
        problems.push(format!("{} paths for {} agents", sol.paths.len(), n));
        return problems;
    }
    if n == 0 {
        if sol.makespan != 0 || sol.sum_of_costs != 0 {
            problems.push("empty solution with non-zero cost".into());
        }
        return problems;
    }
    let len = sol.paths[0].len();
    if len == 0 || sol.paths.iter().any(|p| p.len() != len) {
        problems.push("paths are empty or have different lengths".into());
        return problems;
    }
    let goals: Vec<Cell> = match inst.goal_mode {
        GoalMode::Labeled => match inst.goals() {
            Ok(g) => g,
            Err(e) => {
                problems.push(e.to_string());
                return problems;
            }
        },
        GoalMode::Anonymous => {
            let Some(assign) = sol.assignment() else {
                problems.push("anonymous solution lacks a goal assignment".into());
                return problems;
            };
            let mut sorted = assign.to_vec();
            sorted.sort_unstable();
            if sorted != (0..n).collect::<Vec<_>>() || inst.goal_set.len() != n {
                problems.push("assignment is not a bijection onto the goal set".into());
                return problems;
            }
            assign.iter().map(|&g| inst.goal_set[g]).collect()
        }
    };
    for (i, (p, a)) in sol.paths.iter().zip(&inst.agents).enumerate() {
        if let Err(e) = p.check_moves(&inst.grid) {
            problems.push(format!("agent {i}: {e}"));
        }
        if p.first() != Some(a.start) {
            problems.push(format!("agent {i}: path does not start at {}", a.start));
        }
        if p.last() != Some(goals[i]) {
            problems.push(format!("agent {i}: path does not end at goal {}", goals[i]));
        }
        if sol.goals.get(i) != Some(&goals[i]) {
            problems.push(format!(
                "agent {i}: recorded goal differs from {}",
                goals[i]
            ));
        }
    }
    if !problems.is_empty() {
        return problems;
    }
    for c in sol.conflicts() {
        problems.push(c.to_string());
    }
    match (
        makespan(&sol.paths, &goals),
        sum_of_costs(&sol.paths, &goals),
    ) {
        (Ok(m), Ok(s)) => {
            if m != sol.makespan {
                problems.push(format!(
                    "reported makespan {} != recomputed {m}",
                    sol.makespan
                ));
            }
            if s != sol.sum_of_costs {
                problems.push(format!(
                    "reported sum_of_costs {} != recomputed {s}",
                    sol.sum_of_costs
                ));
            }
            if len != m + 1 {
                problems.push(format!("horizon {} != makespan + 1", len - 1));
            }
        }
        (Err(e), _) | (_, Err(e)) => problems.push(e.to_string()),
    }
    problems
}

/// Builds a solution from raw components without normalising, for callers
/// that read a solution back from disk and want to validate it as-is.
pub fn solution_from_parts(
    paths: Vec<Path>,
    goals: Vec<Cell>,
    makespan: usize,
    sum_of_costs: usize,
    assignment: Option<Vec<usize>>,
) -> Solution {
    Solution {
        paths,
        goals,
        makespan,
        sum_of_costs,
        assignment,
    }
}
