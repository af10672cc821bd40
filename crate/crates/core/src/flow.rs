//! Anonymous MAPF through maximum flow on a time-expanded network, plus a
//! brute-force assignment oracle for checking it.
//!
//! Network layout for horizon `T`: every free cell `c` and step `t` gets an
//! `in` and an `out` node joined by a unit arc (one robot per cell per
//! step). Waiting is `out(c,t) -> in(c,t+1)`. Each undirected grid edge
//! `{u,v}` and step `t` gets a two-node gadget `a -> b` of capacity one fed
//! by `out(u,t)` and `out(v,t)` and feeding `in(u,t+1)` and `in(v,t+1)`, so
//! at most one robot crosses the edge per step and swaps are impossible.

use std::collections::VecDeque;

use itertools::Itertools;

use crate::error::SolveError;
use crate::joint::solve_joint;
use crate::model::{GoalMode, Instance, Objective, Path, Solution};
use crate::single_agent::DistanceField;
use crate::solver::{require_valid, SearchStats, Solver};

#[derive(Clone, Copy, Debug)]
struct Arc {
    to: usize,
    cap: u32,
}

/// Directed graph with integer arc capacities; arc `e ^ 1` is the reverse
/// (residual) arc of `e`.
#[derive(Clone, Debug, Default)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    original: Vec<u32>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            arcs: Vec::new(),
            original: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len() / 2
    }

    /// Adds `u -> v` and returns its arc id.
    pub fn add_arc(&mut self, u: usize, v: usize, cap: u32) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to: v, cap });
        self.arcs.push(Arc { to: u, cap: 0 });
        self.original.push(cap);
        self.original.push(0);
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
        id
    }

    /// Flow currently on arc `id`.
    pub fn flow(&self, id: usize) -> u32 {
        self.original[id] - self.arcs[id].cap
    }

    /// Outgoing arcs of `u` (excluding residual arcs) as `(arc id, head)`.
    pub fn out_arcs(&self, u: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj[u]
            .iter()
            .filter(|&&e| e % 2 == 0)
            .map(move |&e| (e, self.arcs[e].to))
    }

    /// Maximum `s`-`t` flow by shortest augmenting paths in blocking-flow
    /// phases (Dinic). Integral for integral capacities.
    pub fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        if s == t {
            return 0;
        }
        let n = self.adj.len();
        let mut total = 0u64;
        let mut level = vec![u32::MAX; n];
        let mut next = vec![0usize; n];
        loop {
            level.fill(u32::MAX);
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &e in &self.adj[u] {
                    let a = self.arcs[e];
                    if a.cap > 0 && level[a.to] == u32::MAX {
                        level[a.to] = level[u] + 1;
                        queue.push_back(a.to);
                    }
                }
            }
            if level[t] == u32::MAX {
                return total;
            }
            next.fill(0);
            loop {
                let pushed = self.augment(s, t, u32::MAX, &level, &mut next);
                if pushed == 0 {
                    break;
                }
                total += pushed as u64;
            }
        }
    }

    fn augment(
        &mut self,
        u: usize,
        t: usize,
        limit: u32,
        level: &[u32],
        next: &mut [usize],
    ) -> u32 {
        if u == t {
            return limit;
        }
        while next[u] < self.adj[u].len() {
            let e = self.adj[u][next[u]];
            let a = self.arcs[e];
            if a.cap > 0 && level[a.to] == level[u] + 1 {
                let pushed = self.augment(a.to, t, limit.min(a.cap), level, next);
                if pushed > 0 {
                    self.arcs[e].cap -= pushed;
                    self.arcs[e ^ 1].cap += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NodeRole {
    In { cell: usize, t: usize },
    Out { cell: usize, t: usize },
    Gadget,
    Source,
    Sink,
}

/// Time-expanded network of an anonymous instance for a fixed horizon.
#[derive(Clone, Debug)]
pub struct TimeExpandedNetwork {
    pub horizon: usize,
    pub net: FlowNetwork,
    pub source: usize,
    pub sink: usize,
    roles: Vec<NodeRole>,
    /// `in` node id of `(start, 0)` per agent.
    start_nodes: Vec<usize>,
}

/// Builds the network for `inst` and horizon `t_horizon`. Cell copies that
/// cannot lie on any start-to-goal motion within the horizon are omitted.
pub fn build_network(inst: &Instance, t_horizon: usize) -> TimeExpandedNetwork {
    let grid = &inst.grid;
    let size = grid.size();
    let starts = inst.starts();
    let from_starts = DistanceField::nearest(grid, &starts);
    let to_goals = DistanceField::nearest(grid, &inst.goal_set);
    let active = |cell: usize, t: usize| {
        matches!(
            (from_starts.get_index(cell), to_goals.get_index(cell)),
            (Some(a), Some(b)) if a <= t && b <= t_horizon - t
        )
    };

    let mut net = FlowNetwork::default();
    let mut roles = Vec::new();
    let mut ids = vec![usize::MAX; size * (t_horizon + 1)];
    let add = |net: &mut FlowNetwork, roles: &mut Vec<NodeRole>, role| {
        roles.push(role);
        net.add_node()
    };
    let source = add(&mut net, &mut roles, NodeRole::Source);
    let sink = add(&mut net, &mut roles, NodeRole::Sink);
    for t in 0..=t_horizon {
        for cell in 0..size {
            if grid.is_free_index(cell) && active(cell, t) {
                let i = add(&mut net, &mut roles, NodeRole::In { cell, t });
                let o = add(&mut net, &mut roles, NodeRole::Out { cell, t });
                net.add_arc(i, o, 1);
                ids[t * size + cell] = i;
            }
        }
    }
    // `out` is always `in + 1`.
    let node_in = |cell: usize, t: usize| Some(ids[t * size + cell]).filter(|&i| i != usize::MAX);
    for t in 0..t_horizon {
        for u in (0..size).filter(|&u| grid.is_free_index(u)) {
            let (iu, nu) = (node_in(u, t), node_in(u, t + 1));
            if let (Some(iu), Some(nu)) = (iu, nu) {
                net.add_arc(iu + 1, nu, 1);
            }
            for v in grid.adjacent_indices(u).filter(|&v| v > u) {
                let (iv, nv) = (node_in(v, t), node_in(v, t + 1));
                if !(iu.is_some() && nv.is_some() || iv.is_some() && nu.is_some()) {
                    continue;
                }
                let a = add(&mut net, &mut roles, NodeRole::Gadget);
                let b = add(&mut net, &mut roles, NodeRole::Gadget);
                for from in [iu, iv].into_iter().flatten() {
                    net.add_arc(from + 1, a, 1);
                }
                net.add_arc(a, b, 1);
                for to in [nu, nv].into_iter().flatten() {
                    net.add_arc(b, to, 1);
                }
            }
        }
    }
    let mut start_nodes = Vec::with_capacity(starts.len());
    for &s in &starts {
        let i = node_in(grid.index(s), 0).unwrap_or(usize::MAX);
        if i != usize::MAX {
            net.add_arc(source, i, 1);
        }
        start_nodes.push(i);
    }
    for &g in &inst.goal_set {
        if let Some(i) = node_in(grid.index(g), t_horizon) {
            net.add_arc(i + 1, sink, 1);
        }
    }
    TimeExpandedNetwork {
        horizon: t_horizon,
        net,
        source,
        sink,
        roles,
        start_nodes,
    }
}

impl TimeExpandedNetwork {
    /// Runs max flow in place and returns its value.
    pub fn max_flow(&mut self) -> u64 {
        self.net.max_flow(self.source, self.sink)
    }

    fn flow_successor(&self, u: usize) -> Option<usize> {
        self.net
            .out_arcs(u)
            .filter(|&(e, _)| self.net.flow(e) > 0)
            .map(|(_, v)| v)
            .min()
    }

    /// Follows the flow from each agent's start to the sink and returns the
    /// cell sequence per agent. Requires a full flow.
    fn decode(&self, inst: &Instance) -> Vec<Path> {
        let grid = &inst.grid;
        self.start_nodes
            .iter()
            .map(|&start| {
                let mut cells = Vec::with_capacity(self.horizon + 1);
                let mut u = start;
                loop {
                    match self.roles[u] {
                        NodeRole::In { cell, t } => {
                            debug_assert_eq!(t, cells.len());
                            cells.push(grid.cell(cell));
                        }
                        NodeRole::Sink => break,
                        _ => {}
                    }
                    u = self
                        .flow_successor(u)
                        .expect("unit flow continues to the sink");
                }
                Path(cells)
            })
            .collect()
    }
}

fn distances_lower_bound(inst: &Instance) -> Option<usize> {
    let grid = &inst.grid;
    let starts = inst.starts();
    let to_goal = DistanceField::nearest(grid, &inst.goal_set);
    let to_start = DistanceField::nearest(grid, &starts);
    let a = starts
        .iter()
        .map(|&s| to_goal.get(s))
        .collect::<Option<Vec<_>>>()?;
    let b = inst
        .goal_set
        .iter()
        .map(|&g| to_start.get(g))
        .collect::<Option<Vec<_>>>()?;
    Some(a.into_iter().chain(b).max().unwrap_or(0))
}

fn require_anonymous(inst: &Instance) -> Result<(), SolveError> {
    if inst.goal_mode != GoalMode::Anonymous {
        return Err(SolveError::InvalidInput(
            "solver requires an anonymous instance".into(),
        ));
    }
    require_valid(inst)
}

/// Minimal-makespan solution of an anonymous instance. The horizon grows
/// from a distance lower bound until the network carries one unit per
/// agent; the first feasible horizon is optimal.
pub fn solve_anonymous(inst: &Instance, stats: &mut SearchStats) -> Result<Solution, SolveError> {
    require_anonymous(inst)?;
    let n = inst.num_agents();
    if n == 0 {
        return Ok(Solution::empty().with_assignment(Vec::new()));
    }
    // Each connected component needs as many goals as robots.
    let label = inst.grid.components();
    let mut balance = std::collections::HashMap::new();
    for &s in &inst.starts() {
        *balance.entry(label[inst.grid.index(s)]).or_insert(0i64) += 1;
    }
    for &g in &inst.goal_set {
        *balance.entry(label[inst.grid.index(g)]).or_insert(0i64) -= 1;
    }
    if balance.values().any(|&b| b != 0) {
        return Err(SolveError::Unsolvable);
    }
    let lower = distances_lower_bound(inst).ok_or(SolveError::Unsolvable)?;
    let limit = lower + inst.grid.free_count() + n;
    for horizon in lower..=limit {
        let mut network = build_network(inst, horizon);
        let value = network.max_flow();
        stats.nodes_expanded += 1;
        if value as usize == n {
            let paths = network.decode(inst);
            let assignment: Vec<usize> = paths
                .iter()
                .map(|p| {
                    let end = p.last().expect("decoded path is non-empty");
                    inst.goal_set
                        .iter()
                        .position(|&g| g == end)
                        .expect("path ends on a goal")
                })
                .collect();
            let goals = assignment.iter().map(|&g| inst.goal_set[g]).collect();
            let sol = Solution::new(paths, goals)?.with_assignment(assignment);
            debug_assert_eq!(sol.makespan(), horizon);
            return Ok(sol);
        }
    }
    Err(SolveError::UnsolvableWithinBound { bound: limit })
}

/// Largest agent count [`assignment_oracle`] accepts.
pub const ORACLE_MAX_AGENTS: usize = 4;

/// Optimal anonymous makespan by trying every goal assignment with the
/// joint-space oracle.
pub fn assignment_oracle(inst: &Instance, state_cap: usize) -> Result<usize, SolveError> {
    require_anonymous(inst)?;
    let n = inst.num_agents();
    if n > ORACLE_MAX_AGENTS {
        return Err(SolveError::Capacity(format!(
            "assignment oracle limited to {ORACLE_MAX_AGENTS} agents, got {n}"
        )));
    }
    let mut best: Option<usize> = None;
    for perm in (0..n).permutations(n) {
        let labeled = inst.with_assignment(&perm);
        match solve_joint(
            &labeled,
            Objective::Makespan,
            state_cap,
            &mut SearchStats::default(),
        ) {
            Ok(sol) => best = Some(best.map_or(sol.makespan(), |b| b.min(sol.makespan()))),
            Err(SolveError::Unsolvable) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(SolveError::Unsolvable)
}

/// [`solve_anonymous`] as a [`Solver`]. Labeled instances are relaxed to
/// their goal set. Only the makespan objective is optimised.
#[derive(Clone, Debug, Default)]
pub struct FlowSolver;

impl Solver for FlowSolver {
    fn name(&self) -> String {
        "flow".into()
    }

    fn solve(
        &self,
        inst: &Instance,
        _objective: Objective,
        stats: &mut SearchStats,
    ) -> Result<Solution, SolveError> {
        if inst.goal_mode == GoalMode::Labeled {
            return solve_anonymous(&inst.to_anonymous()?, stats);
        }
        solve_anonymous(inst, stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::DEFAULT_STATE_CAP;
    use crate::model::{validate_solution, Cell, GridMap};
    use crate::single_agent::shortest_path;

    fn c(x: usize, y: usize) -> Cell {
        Cell::new(x, y)
    }

    fn cells(path: &Path) -> Vec<Cell> {
        path.cells().to_vec()
    }

    #[test]
    fn max_flow_small_networks() {
        let mut one = FlowNetwork::new(2);
        one.add_arc(0, 1, 1);
        assert_eq!(one.max_flow(0, 1), 1);

        let mut none = FlowNetwork::new(4);
        none.add_arc(0, 1, 1);
        none.add_arc(2, 3, 1);
        assert_eq!(none.max_flow(0, 3), 0);

        let mut two = FlowNetwork::new(4);
        two.add_arc(0, 1, 1);
        two.add_arc(1, 3, 1);
        two.add_arc(0, 2, 1);
        two.add_arc(2, 3, 1);
        assert_eq!(two.max_flow(0, 3), 2);
    }

    #[test]
    fn max_flow_needs_residual_arcs() {
        // Greedy 0-1-2-5 blocks both paths unless flow is cancelled on 1-2.
        let mut net = FlowNetwork::new(6);
        for (u, v) in [(0, 1), (0, 3), (1, 2), (1, 4), (3, 2), (2, 5), (4, 5)] {
            net.add_arc(u, v, 1);
        }
        assert_eq!(net.max_flow(0, 5), 2);
    }

    #[test]
    fn horizon_zero_feasible_iff_sets_equal() {
        let g = GridMap::open(3, 1).unwrap();
        let same = Instance::anonymous(g.clone(), vec![c(0, 0), c(2, 0)], vec![c(2, 0), c(0, 0)]);
        assert_eq!(build_network(&same, 0).max_flow(), 2);
        let diff = Instance::anonymous(g, vec![c(0, 0), c(2, 0)], vec![c(1, 0), c(0, 0)]);
        assert!(build_network(&diff, 0).max_flow() < 2);
    }

    #[test]
    fn single_agent_flow_at_shortest_length() {
        let g = GridMap::new(4, 4, [c(1, 0), c(1, 1), c(1, 2)]).unwrap();
        let d = shortest_path(&g, c(0, 0), c(3, 0)).unwrap().unwrap().len() - 1;
        let inst = Instance::anonymous(g, vec![c(0, 0)], vec![c(3, 0)]);
        assert_eq!(build_network(&inst, d).max_flow(), 1);
        assert_eq!(build_network(&inst, d - 1).max_flow(), 0);
        let sol = solve_anonymous(&inst, &mut SearchStats::default()).unwrap();
        assert_eq!(sol.makespan(), d);
    }

    #[test]
    fn corridor_swap_is_free_when_anonymous() {
        let g = GridMap::open(3, 1).unwrap();
        let inst = Instance::anonymous(g, vec![c(0, 0), c(2, 0)], vec![c(2, 0), c(0, 0)]);
        let sol = solve_anonymous(&inst, &mut SearchStats::default()).unwrap();
        assert_eq!(sol.makespan(), 0);
        assert_eq!(sol.assignment(), Some(&[1, 0][..]));
        assert!(validate_solution(&inst, &sol).is_empty());
        assert_eq!(assignment_oracle(&inst, DEFAULT_STATE_CAP).unwrap(), 0);
    }

    #[test]
    fn gadget_forbids_swaps() {
        // Start set equals goal set; the only flow keeps both robots in
        // place because exchanging them would be a swap.
        let g = GridMap::open(2, 1).unwrap();
        let inst = Instance::anonymous(g.clone(), vec![c(0, 0), c(1, 0)], vec![c(1, 0), c(0, 0)]);
        let mut net = build_network(&inst, 1);
        assert_eq!(net.max_flow(), 2);
        let paths = net.decode(&inst);
        assert_eq!(cells(&paths[0]), vec![c(0, 0), c(0, 0)]);
        assert_eq!(cells(&paths[1]), vec![c(1, 0), c(1, 0)]);
    }

    #[test]
    fn unbalanced_components_unsolvable() {
        let g = GridMap::new(3, 1, [c(1, 0)]).unwrap();
        let inst = Instance::anonymous(g, vec![c(0, 0)], vec![c(2, 0)]);
        assert_eq!(
            solve_anonymous(&inst, &mut SearchStats::default()),
            Err(SolveError::Unsolvable)
        );
        assert_eq!(
            assignment_oracle(&inst, DEFAULT_STATE_CAP),
            Err(SolveError::Unsolvable)
        );
    }

    #[test]
    fn nook_instance_anonymous() {
        let g = GridMap::new(3, 2, [c(0, 1), c(2, 1)]).unwrap();
        let inst = Instance::anonymous(g, vec![c(0, 0), c(2, 0)], vec![c(2, 0), c(0, 0)]);
        assert_eq!(assignment_oracle(&inst, DEFAULT_STATE_CAP).unwrap(), 0);
        assert_eq!(
            solve_anonymous(&inst, &mut SearchStats::default())
                .unwrap()
                .makespan(),
            0
        );
    }

    #[test]
    fn oracle_guards_agent_count() {
        let g = GridMap::open(5, 1).unwrap();
        let starts: Vec<_> = (0..5).map(|x| c(x, 0)).collect();
        let inst = Instance::anonymous(g, starts.clone(), starts);
        assert!(matches!(
            assignment_oracle(&inst, DEFAULT_STATE_CAP),
            Err(SolveError::Capacity(_))
        ));
    }

    #[test]
    fn rejects_labeled_input() {
        let g = GridMap::open(2, 1).unwrap();
        let inst = Instance::labeled(g, [(c(0, 0), c(1, 0))]);
        assert!(matches!(
            solve_anonymous(&inst, &mut SearchStats::default()),
            Err(SolveError::InvalidInput(_))
        ));
        assert_eq!(
            FlowSolver
                .solve(&inst, Objective::Makespan, &mut SearchStats::default())
                .unwrap()
                .makespan(),
            1
        );
    }
}
