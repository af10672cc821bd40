//! Exact search over the joint configuration graph, whose vertices are
//! tuples of agent cells. Exponential in the number of agents; this is the
//! ground truth the other solvers are tested against.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::error::SolveError;
use crate::model::{Cell, GridMap, Instance, Objective, Path, Solution};
use crate::solver::{require_labeled, SearchStats, Solver};

pub const DEFAULT_STATE_CAP: usize = 20_000_000;

/// One cell per agent, all distinct.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointState(pub Vec<Cell>);

// High bit of an encoded cell marks an agent committed to resting at goal.
const DONE: u32 = 1 << 31;

/// Enumerates every collision-free simultaneous move from `cur`. Agents
/// whose entry carries the `DONE` bit only wait. Stops at the first error
/// returned by `emit`.
fn for_each_successor<E>(
    grid: &GridMap,
    cur: &[u32],
    mut emit: impl FnMut(&[u32]) -> Result<(), E>,
) -> Result<(), E> {
    fn rec<E>(
        grid: &GridMap,
        cur: &[u32],
        next: &mut Vec<u32>,
        emit: &mut dyn FnMut(&[u32]) -> Result<(), E>,
    ) -> Result<(), E> {
        let k = next.len();
        if k == cur.len() {
            return emit(next);
        }
        let here = (cur[k] & !DONE) as usize;
        let flag = cur[k] & DONE;
        let moves: Vec<usize> = if flag != 0 {
            vec![here]
        } else {
            std::iter::once(here)
                .chain(grid.adjacent_indices(here))
                .collect()
        };
        'cand: for to in moves {
            for j in 0..k {
                let other_to = (next[j] & !DONE) as usize;
                let other_from = (cur[j] & !DONE) as usize;
                if other_to == to || (to != here && other_from == to && other_to == here) {
                    continue 'cand;
                }
            }
            next.push(to as u32 | flag);
            let r = rec(grid, cur, next, emit);
            next.pop();
            r?;
        }
        Ok(())
    }
    let mut next = Vec::with_capacity(cur.len());
    rec(grid, cur, &mut next, &mut emit)
}

/// All joint states reachable from `s` in one synchronous step without a
/// vertex or swap collision.
pub fn joint_successors(grid: &GridMap, s: &JointState) -> Vec<JointState> {
    let cur: Vec<u32> = s.0.iter().map(|&c| grid.index(c) as u32).collect();
    let mut out = Vec::new();
    let _ = for_each_successor(grid, &cur, |n| {
        out.push(JointState(
            n.iter().map(|&i| grid.cell(i as usize)).collect(),
        ));
        Ok::<(), ()>(())
    });
    out
}

/// Upper bound on the number of distinct search states: injective
/// placements of `n` agents on `free` cells, times `2^n` commit flags for
/// sum of costs. Saturates at `u128::MAX`.
pub fn joint_state_bound(free: usize, n: usize, objective: Objective) -> u128 {
    let mut bound: u128 = 1;
    for k in 0..n {
        bound = bound.saturating_mul(free.saturating_sub(k) as u128);
    }
    if objective == Objective::SumOfCosts {
        for _ in 0..n {
            bound = bound.saturating_mul(2);
        }
    }
    bound
}

/// Optimal solution by exhaustive joint search: breadth-first for
/// makespan, uniform-cost for sum of costs. Refuses with
/// [`SolveError::Capacity`] when [`joint_state_bound`] exceeds `state_cap`,
/// and fails with [`SolveError::Unsolvable`] only after exhausting the
/// reachable space.
pub fn solve_joint(
    inst: &Instance,
    objective: Objective,
    state_cap: usize,
    stats: &mut SearchStats,
) -> Result<Solution, SolveError> {
    require_labeled(inst)?;
    if inst.num_agents() == 0 {
        return Ok(Solution::empty());
    }
    let bound = joint_state_bound(inst.grid.free_count(), inst.num_agents(), objective);
    if bound > state_cap as u128 {
        return Err(SolveError::Capacity(format!(
            "joint state bound {bound} exceeds cap {state_cap}"
        )));
    }
    let goals = inst.goals()?;
    let trajectory = match objective {
        Objective::Makespan => bfs_makespan(inst, &goals, state_cap, stats)?,
        Objective::SumOfCosts => ucs_sum_of_costs(inst, &goals, state_cap, stats)?,
    };
    let grid = &inst.grid;
    let paths = (0..inst.num_agents())
        .map(|a| {
            Path(
                trajectory
                    .iter()
                    .map(|s| grid.cell((s[a] & !DONE) as usize))
                    .collect(),
            )
        })
        .collect();
    Ok(Solution::new(paths, goals)?)
}

struct StateStore {
    ids: HashMap<Box<[u32]>, usize>,
    states: Vec<Box<[u32]>>,
    parent: Vec<usize>,
    cap: usize,
}

impl StateStore {
    fn new(cap: usize) -> Self {
        StateStore {
            ids: HashMap::new(),
            states: Vec::new(),
            parent: Vec::new(),
            cap,
        }
    }

    /// Returns `(id, newly_inserted)`.
    fn intern(&mut self, s: &[u32], parent: usize) -> Result<(usize, bool), SolveError> {
        if let Some(&id) = self.ids.get(s) {
            return Ok((id, false));
        }
        if self.states.len() >= self.cap {
            return Err(SolveError::Capacity(format!(
                "joint search exceeded {} states",
                self.cap
            )));
        }
        let id = self.states.len();
        let key: Box<[u32]> = s.into();
        self.ids.insert(key.clone(), id);
        self.states.push(key);
        self.parent.push(parent);
        Ok((id, true))
    }

    fn trajectory(&self, mut id: usize) -> Vec<Box<[u32]>> {
        let mut out = vec![self.states[id].clone()];
        while self.parent[id] != usize::MAX {
            id = self.parent[id];
            out.push(self.states[id].clone());
        }
        out.reverse();
        out
    }
}

fn encode(grid: &GridMap, cells: &[Cell]) -> Vec<u32> {
    cells.iter().map(|&c| grid.index(c) as u32).collect()
}

fn bfs_makespan(
    inst: &Instance,
    goals: &[Cell],
    cap: usize,
    stats: &mut SearchStats,
) -> Result<Vec<Box<[u32]>>, SolveError> {
    let grid = &inst.grid;
    let goal = encode(grid, goals);
    let mut store = StateStore::new(cap);
    let (root, _) = store.intern(&encode(grid, &inst.starts()), usize::MAX)?;
    let mut queue = VecDeque::from([root]);
    while let Some(id) = queue.pop_front() {
        if *store.states[id] == *goal {
            return Ok(store.trajectory(id));
        }
        stats.nodes_expanded += 1;
        let cur = store.states[id].clone();
        for_each_successor(grid, &cur, |n| {
            if let (nid, true) = store.intern(n, id)? {
                queue.push_back(nid);
            }
            Ok::<(), SolveError>(())
        })?;
    }
    Err(SolveError::Unsolvable)
}

/// Uniform-cost search over (cells, done flags). An agent standing on its
/// goal may be committed to resting there (its `DONE` bit), after which it
/// only waits. A step costs the number of uncommitted agents.
fn ucs_sum_of_costs(
    inst: &Instance,
    goals: &[Cell],
    cap: usize,
    stats: &mut SearchStats,
) -> Result<Vec<Box<[u32]>>, SolveError> {
    let grid = &inst.grid;
    let goal_idx = encode(grid, goals);
    let mut store = StateStore::new(cap);
    let mut best: Vec<usize> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;

    let mut relax = |store: &mut StateStore,
                     best: &mut Vec<usize>,
                     heap: &mut BinaryHeap<(Reverse<usize>, Reverse<u64>, usize)>,
                     s: &[u32],
                     parent: usize,
                     cost: usize|
     -> Result<(), SolveError> {
        let (id, fresh) = store.intern(s, parent)?;
        if fresh {
            best.push(usize::MAX);
        }
        if cost < best[id] {
            best[id] = cost;
            store.parent[id] = parent;
            heap.push((Reverse(cost), Reverse(seq), id));
            seq += 1;
        }
        Ok(())
    };

    // Every subset of agents already on their goal may start committed.
    let start = encode(grid, &inst.starts());
    for_each_commit_choice(&start, &goal_idx, &mut |s| {
        relax(&mut store, &mut best, &mut heap, s, usize::MAX, 0)
    })?;

    while let Some((Reverse(cost), _, id)) = heap.pop() {
        if cost > best[id] {
            continue;
        }
        let cur = store.states[id].clone();
        if cur.iter().all(|&c| c & DONE != 0) {
            return Ok(store.trajectory(id));
        }
        stats.nodes_expanded += 1;
        let step = cur.iter().filter(|&&c| c & DONE == 0).count();
        for_each_successor(grid, &cur, |s| {
            for_each_commit_choice(s, &goal_idx, &mut |t| {
                relax(&mut store, &mut best, &mut heap, t, id, cost + step)
            })
        })?;
    }
    Err(SolveError::Unsolvable)
}

/// Calls `f` for every way of committing a subset of the uncommitted agents
/// that currently stand on their goal.
fn for_each_commit_choice(
    s: &[u32],
    goals: &[u32],
    f: &mut dyn FnMut(&[u32]) -> Result<(), SolveError>,
) -> Result<(), SolveError> {
    let eligible: Vec<usize> = (0..s.len())
        .filter(|&a| s[a] & DONE == 0 && s[a] == goals[a])
        .collect();
    let mut buf = s.to_vec();
    for mask in 0u64..(1u64 << eligible.len()) {
        for (bit, &a) in eligible.iter().enumerate() {
            buf[a] = if mask & (1 << bit) != 0 {
                s[a] | DONE
            } else {
                s[a]
            };
        }
        f(&buf)?;
    }
    Ok(())
}

/// [`solve_joint`] as a [`Solver`].
#[derive(Clone, Debug)]
pub struct JointSolver {
    pub state_cap: usize,
}

impl Default for JointSolver {
    fn default() -> Self {
        JointSolver {
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

impl Solver for JointSolver {
    fn name(&self) -> String {
        "joint".into()
    }

    fn solve(
        &self,
        inst: &Instance,
        objective: Objective,
        stats: &mut SearchStats,
    ) -> Result<Solution, SolveError> {
        solve_joint(inst, objective, self.state_cap, stats)
    }
}
