//! Single-robot planning: breadth-first distance fields, plain shortest
//! paths, and space-time A* under vertex/edge constraints.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use crate::error::MapfError;
use crate::model::{Cell, GridMap, Path};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    /// The agent must not occupy `cell` at time `time`.
    Vertex { cell: Cell, time: usize },
    /// The agent must not move `from -> to` arriving at time `time`.
    Edge { from: Cell, to: Cell, time: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub agent: usize,
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn vertex(agent: usize, cell: Cell, time: usize) -> Self {
        Constraint {
            agent,
            kind: ConstraintKind::Vertex { cell, time },
        }
    }

    pub fn edge(agent: usize, from: Cell, to: Cell, time: usize) -> Self {
        Constraint {
            agent,
            kind: ConstraintKind::Edge { from, to, time },
        }
    }

    pub fn time(&self) -> usize {
        match self.kind {
            ConstraintKind::Vertex { time, .. } | ConstraintKind::Edge { time, .. } => time,
        }
    }

    /// True if `path` (resting on its last cell afterwards) breaks this
    /// constraint.
    pub fn is_violated_by(&self, path: &Path) -> bool {
        match self.kind {
            ConstraintKind::Vertex { cell, time } => path.at(time) == cell,
            ConstraintKind::Edge { from, to, time } => {
                time >= 1 && path.at(time - 1) == from && path.at(time) == to
            }
        }
    }
}

/// Exact unconstrained distance from every cell to one goal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceField {
    goal: Cell,
    width: usize,
    dist: Vec<u32>,
}

const UNREACHABLE: u32 = u32::MAX;

impl DistanceField {
    pub fn new(grid: &GridMap, goal: Cell) -> Result<Self, MapfError> {
        if !grid.is_free(goal) {
            return Err(MapfError::invalid(format!(
                "goal {goal} is not a free cell"
            )));
        }
        Ok(Self::multi_source(grid, &[goal], goal))
    }

    fn multi_source(grid: &GridMap, sources: &[Cell], goal: Cell) -> Self {
        let mut dist = vec![UNREACHABLE; grid.size()];
        let mut queue = VecDeque::new();
        for &s in sources {
            let i = grid.index(s);
            if dist[i] == UNREACHABLE {
                dist[i] = 0;
                queue.push_back(i);
            }
        }
        while let Some(u) = queue.pop_front() {
            for v in grid.adjacent_indices(u) {
                if dist[v] == UNREACHABLE {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        DistanceField {
            goal,
            width: grid.width(),
            dist,
        }
    }

    /// Distance from each cell to the nearest member of `sources`.
    pub fn nearest(grid: &GridMap, sources: &[Cell]) -> Self {
        let goal = sources.first().copied().unwrap_or(Cell::new(0, 0));
        Self::multi_source(grid, sources, goal)
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn get(&self, c: Cell) -> Option<usize> {
        self.get_index(c.y * self.width + c.x)
    }

    pub(crate) fn get_index(&self, i: usize) -> Option<usize> {
        match self.dist.get(i) {
            Some(&d) if d != UNREACHABLE => Some(d as usize),
            _ => None,
        }
    }

    /// Greedy descent from `from` to the goal, preferring the smallest
    /// row then column among equally good neighbours.
    fn descend(&self, grid: &GridMap, from: usize, out: &mut Vec<Cell>) {
        let mut cur = from;
        let mut d = self.dist[cur];
        while d > 0 {
            cur = grid
                .adjacent_indices(cur)
                .filter(|&v| self.dist[v] == d - 1)
                .min()
                .expect("distance field is consistent");
            d -= 1;
            out.push(grid.cell(cur));
        }
    }
}

/// A minimum-length path from `start` to `goal` ignoring every other robot,
/// or `None` if the goal is unreachable.
pub fn shortest_path(grid: &GridMap, start: Cell, goal: Cell) -> Result<Option<Path>, MapfError> {
    if !grid.is_free(start) {
        return Err(MapfError::invalid(format!(
            "start {start} is not a free cell"
        )));
    }
    let field = DistanceField::new(grid, goal)?;
    Ok(path_from_field(grid, &field, start))
}

pub(crate) fn path_from_field(grid: &GridMap, field: &DistanceField, start: Cell) -> Option<Path> {
    field.get(start)?;
    let mut cells = vec![start];
    field.descend(grid, grid.index(start), &mut cells);
    Some(Path(cells))
}

/// Horizon used when the caller does not supply one: the larger of
/// `free + constraints + 1` and `last constraint time + free`. The second
/// term guarantees completeness: from wherever a feasible path is at the
/// last constrained step, a static shortest path (at most `free - 1` moves)
/// finishes it.
pub fn default_t_max(grid: &GridMap, constraints: &[Constraint]) -> usize {
    let free = grid.free_count();
    let last = constraints.iter().map(Constraint::time).max().unwrap_or(0);
    (free + constraints.len() + 1).max(last + free)
}

/// Constraints of one agent, indexed for the low-level search.
#[derive(Clone, Debug, Default)]
pub(crate) struct ConstraintTable {
    vertex: HashSet<(usize, usize)>,
    edge: HashSet<(usize, usize, usize)>,
    last_time: usize,
    count: usize,
}

impl ConstraintTable {
    pub(crate) fn new<'a>(
        grid: &GridMap,
        constraints: impl IntoIterator<Item = &'a Constraint>,
    ) -> Self {
        let mut table = ConstraintTable::default();
        for c in constraints {
            table.insert(grid, c);
        }
        table
    }

    pub(crate) fn insert(&mut self, grid: &GridMap, c: &Constraint) {
        match c.kind {
            ConstraintKind::Vertex { cell, time } => {
                self.vertex.insert((grid.index(cell), time));
            }
            ConstraintKind::Edge { from, to, time } => {
                self.edge.insert((grid.index(from), grid.index(to), time));
            }
        }
        self.last_time = self.last_time.max(c.time());
        self.count += 1;
    }

    pub(crate) fn len(&self) -> usize {
        self.count
    }

    pub(crate) fn last_time(&self) -> usize {
        self.last_time
    }

    fn blocks(&self, from: usize, to: usize, t: usize) -> bool {
        self.vertex.contains(&(to, t)) || self.edge.contains(&(from, to, t))
    }

    /// No vertex constraint on `goal` at any time after `t`.
    fn can_rest_from(&self, goal: usize, t: usize) -> bool {
        t >= self.last_time || !((t + 1)..=self.last_time).any(|s| self.vertex.contains(&(goal, s)))
    }
}

/// Space-time A* over states `(cell, t)`, `t <= t_max`. The heuristic is the
/// exact static distance to the goal; ties on `f` prefer larger `t`, then
/// smaller row, then smaller column. Once a popped state lies past the last
/// constrained time the rest of the path is the static shortest descent.
pub(crate) fn space_time_astar(
    grid: &GridMap,
    field: &DistanceField,
    start: Cell,
    table: &ConstraintTable,
    t_max: usize,
    expansions: &mut u64,
) -> Option<Path> {
    let goal = grid.index(field.goal());
    let start_i = grid.index(start);
    let h0 = field.get_index(start_i)?;
    if h0 > t_max {
        return None;
    }
    let last = table.last_time();
    let mut open = BinaryHeap::new();
    let mut parent: HashMap<(usize, usize), usize> = HashMap::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    open.push((Reverse(h0), 0usize, Reverse(start_i)));
    seen.insert((start_i, 0));

    while let Some((_, t, Reverse(cur))) = open.pop() {
        *expansions += 1;
        let done_here = cur == goal && table.can_rest_from(goal, t);
        if done_here || t >= last {
            let mut rev = vec![grid.cell(cur)];
            let (mut c, mut s) = (cur, t);
            while s > 0 {
                c = parent[&(c, s)];
                s -= 1;
                rev.push(grid.cell(c));
            }
            rev.reverse();
            if !done_here {
                field.descend(grid, cur, &mut rev);
            }
            return Some(Path(rev));
        }
        let nt = t + 1;
        for next in std::iter::once(cur).chain(grid.adjacent_indices(cur)) {
            if table.blocks(cur, next, nt) || seen.contains(&(next, nt)) {
                continue;
            }
            let Some(h) = field.get_index(next) else {
                continue;
            };
            if nt + h > t_max {
                continue;
            }
            seen.insert((next, nt));
            parent.insert((next, nt), cur);
            open.push((Reverse(nt + h), nt, Reverse(next)));
        }
    }
    None
}

/// A minimum-arrival-time path respecting every constraint, or `None` if
/// none exists with arrival at most `t_max` (default [`default_t_max`]).
/// After arriving the agent rests on its goal, so a vertex constraint on
/// the goal at or after the arrival forces a later arrival.
pub fn constrained_shortest_path(
    grid: &GridMap,
    start: Cell,
    goal: Cell,
    constraints: &[Constraint],
    t_max: Option<usize>,
) -> Result<Option<Path>, MapfError> {
    if !grid.is_free(start) {
        return Err(MapfError::invalid(format!(
            "start {start} is not a free cell"
        )));
    }
    if let Some(first) = constraints.first() {
        if constraints.iter().any(|c| c.agent != first.agent) {
            return Err(MapfError::invalid(
                "constraints refer to more than one agent",
            ));
        }
    }
    if constraints.iter().any(|c| c.time() == 0) {
        return Err(MapfError::invalid("constraints at t=0 are not allowed"));
    }
    for c in constraints {
        let cells = match c.kind {
            ConstraintKind::Vertex { cell, .. } => [cell, cell],
            ConstraintKind::Edge { from, to, .. } => [from, to],
        };
        if cells.iter().any(|&x| !grid.in_bounds(x)) {
            return Err(MapfError::invalid("constraint cell out of bounds"));
        }
        if let ConstraintKind::Edge { from, to, .. } = c.kind {
            if !from.is_adjacent(to) {
                return Err(MapfError::invalid(format!(
                    "edge constraint {from}->{to} is not a move"
                )));
            }
        }
    }
    let t_max = t_max.unwrap_or_else(|| default_t_max(grid, constraints));
    if t_max == 0 {
        return Err(MapfError::invalid("t_max must be at least 1"));
    }
    let field = DistanceField::new(grid, goal)?;
    let table = ConstraintTable::new(grid, constraints);
    let mut expansions = 0;
    Ok(space_time_astar(
        grid,
        &field,
        start,
        &table,
        t_max,
        &mut expansions,
    ))
}
