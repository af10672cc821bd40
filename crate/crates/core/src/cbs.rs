//! Conflict-Based Search. The high level searches a binary constraint tree:
//! each node holds per-agent paths, each optimal under that agent's
//! constraints. Expanding a node picks its earliest collision and creates
//! two children, each forbidding the collision for one of the two robots.
//!
//! With `w > 1` the high level is a focal search: among open nodes whose
//! cost is at most `w` times the cheapest open cost, the node with the
//! fewest collisions is expanded first.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::error::{MapfError, SolveError};
use crate::model::{scan_conflicts, Conflict, ConflictKind, Instance, Objective, Path, Solution};
use crate::single_agent::{
    default_t_max, path_from_field, space_time_astar, Constraint, ConstraintTable, DistanceField,
};
use crate::solver::{require_labeled, SearchStats, Solver};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CbsLimits {
    /// Maximum high-level expansions.
    pub max_nodes: Option<u64>,
    pub time_budget: Option<Duration>,
    /// Cost upper bound `U`; defaults to free cells times agents.
    pub cost_bound: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CbsConfig {
    /// Suboptimality factor, `>= 1.0`.
    pub w: f64,
    pub limits: CbsLimits,
}

impl Default for CbsConfig {
    fn default() -> Self {
        CbsConfig {
            w: 1.0,
            limits: CbsLimits::default(),
        }
    }
}

/// Persistent list so siblings share their ancestors' constraints.
#[derive(Debug)]
struct ConstraintLink {
    constraint: Constraint,
    parent: Option<Rc<ConstraintLink>>,
}

/// A node of the constraint tree.
#[derive(Clone, Debug)]
pub struct ConstraintTreeNode {
    constraints: Option<Rc<ConstraintLink>>,
    depth: usize,
    paths: Vec<Rc<Path>>,
    cost: usize,
    conflicts: Vec<Conflict>,
}

impl ConstraintTreeNode {
    /// All constraints, root-most first.
    pub fn constraints(&self) -> Vec<Constraint> {
        let mut out = Vec::with_capacity(self.depth);
        let mut cur = self.constraints.as_deref();
        while let Some(link) = cur {
            out.push(link.constraint);
            cur = link.parent.as_deref();
        }
        out.reverse();
        out
    }

    pub fn constraints_for(&self, agent: usize) -> Vec<Constraint> {
        self.constraints()
            .into_iter()
            .filter(|c| c.agent == agent)
            .collect()
    }

    /// Unpadded per-agent paths, each ending at that agent's arrival.
    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.paths.iter().map(|p| p.as_ref())
    }

    pub fn cost(&self) -> usize {
        self.cost
    }

    pub fn conflict_count(&self) -> usize {
        self.conflicts.len()
    }

    pub fn conflicts(&self) -> &[Conflict] {
        &self.conflicts
    }
}

/// The earliest conflict, ties broken by lowest agent pair.
pub fn pick_conflict(conflicts: &[Conflict]) -> Result<Conflict, MapfError> {
    conflicts
        .iter()
        .min_by_key(|c| (c.time, c.agents))
        .copied()
        .ok_or_else(|| MapfError::invalid("no conflict to pick"))
}

/// The two constraints resolving `conflict`, one per involved agent.
pub fn branch_constraints(conflict: &Conflict) -> [Constraint; 2] {
    let (i, j) = conflict.agents;
    let t = conflict.time;
    match conflict.kind {
        ConflictKind::Vertex(x) => [Constraint::vertex(i, x, t), Constraint::vertex(j, x, t)],
        ConflictKind::Swap { from, to } => [
            Constraint::edge(i, from, to, t),
            Constraint::edge(j, to, from, t),
        ],
    }
}

/// Problem data shared by every node of one search.
pub struct Cbs<'a> {
    inst: &'a Instance,
    objective: Objective,
    fields: Vec<DistanceField>,
    cost_bound: usize,
}

impl<'a> Cbs<'a> {
    pub fn new(
        inst: &'a Instance,
        objective: Objective,
        cost_bound: Option<usize>,
    ) -> Result<Self, SolveError> {
        require_labeled(inst)?;
        let goals = inst.goals()?;
        let fields = goals
            .iter()
            .map(|&g| DistanceField::new(&inst.grid, g))
            .collect::<Result<Vec<_>, _>>()?;
        let cost_bound = cost_bound.unwrap_or(inst.grid.free_count() * inst.num_agents().max(1));
        Ok(Cbs {
            inst,
            objective,
            fields,
            cost_bound,
        })
    }

    pub fn cost_bound(&self) -> usize {
        self.cost_bound
    }

    fn node_cost(&self, paths: &[Rc<Path>]) -> usize {
        self.objective.combine(paths.iter().map(|p| p.len() - 1))
    }

    /// Independent shortest paths. Fails with `Unsolvable` if some agent
    /// cannot reach its goal at all.
    pub fn root(&self) -> Result<ConstraintTreeNode, SolveError> {
        let paths = self
            .inst
            .agents
            .iter()
            .zip(&self.fields)
            .map(|(a, f)| path_from_field(&self.inst.grid, f, a.start).map(Rc::new))
            .collect::<Option<Vec<_>>>()
            .ok_or(SolveError::Unsolvable)?;
        Ok(ConstraintTreeNode {
            constraints: None,
            depth: 0,
            cost: self.node_cost(&paths),
            conflicts: scan_conflicts(&paths),
            paths,
        })
    }

    /// Children forbidding `conflict` for each of its two agents. A child is
    /// `None` when the constrained agent has no path within the horizon or
    /// the child would exceed the cost bound.
    pub fn split(
        &self,
        node: &ConstraintTreeNode,
        conflict: &Conflict,
        stats: &mut SearchStats,
    ) -> [Option<ConstraintTreeNode>; 2] {
        branch_constraints(conflict).map(|c| self.child(node, c, stats))
    }

    fn child(
        &self,
        node: &ConstraintTreeNode,
        constraint: Constraint,
        stats: &mut SearchStats,
    ) -> Option<ConstraintTreeNode> {
        let agent = constraint.agent;
        let link = Rc::new(ConstraintLink {
            constraint,
            parent: node.constraints.clone(),
        });
        let mut own = Vec::new();
        let mut cur = Some(&link);
        while let Some(l) = cur {
            if l.constraint.agent == agent {
                own.push(l.constraint);
            }
            cur = l.parent.as_ref();
        }
        let grid = &self.inst.grid;
        let table = ConstraintTable::new(grid, &own);
        let others = node
            .paths
            .iter()
            .enumerate()
            .filter(|&(a, _)| a != agent)
            .map(|(_, p)| p.len() - 1);
        let cap = match self.objective {
            Objective::Makespan => self.cost_bound,
            Objective::SumOfCosts => self.cost_bound.checked_sub(others.sum())?,
        };
        let t_max = default_t_max(grid, &own).min(cap);
        debug_assert_eq!(table.len(), own.len());
        let path = space_time_astar(
            grid,
            &self.fields[agent],
            self.inst.agents[agent].start,
            &table,
            t_max,
            &mut stats.low_level_expansions,
        )?;
        let mut paths = node.paths.clone();
        paths[agent] = Rc::new(path);
        let cost = self.node_cost(&paths);
        if cost > self.cost_bound {
            return None;
        }
        Some(ConstraintTreeNode {
            constraints: Some(link),
            depth: node.depth + 1,
            cost,
            conflicts: scan_conflicts(&paths),
            paths,
        })
    }

    fn solution(&self, node: &ConstraintTreeNode) -> Result<Solution, SolveError> {
        let paths = node.paths.iter().map(|p| (**p).clone()).collect();
        Ok(Solution::new(paths, self.inst.goals()?)?)
    }

    /// Runs the (focal) best-first search over the constraint tree.
    pub fn search(
        &self,
        config: &CbsConfig,
        stats: &mut SearchStats,
    ) -> Result<Solution, SolveError> {
        let w = config.w;
        if !(w.is_finite() && w >= 1.0) {
            return Err(SolveError::InvalidInput(format!(
                "suboptimality factor must be >= 1.0, got {w}"
            )));
        }
        let started = Instant::now();
        let focal_bound = |min_cost: usize| (w * min_cost as f64 + 1e-9).floor() as usize;

        let root = self.root()?;
        if root.cost > self.cost_bound {
            return Err(SolveError::UnsolvableWithinBound {
                bound: self.cost_bound,
            });
        }
        let mut nodes: HashMap<u64, ConstraintTreeNode> = HashMap::new();
        let mut open: BTreeSet<(usize, u64)> = BTreeSet::new();
        let mut focal: BTreeSet<(usize, usize, u64)> = BTreeSet::new();
        let mut bound = focal_bound(root.cost);
        let mut seq = 0u64;
        let mut insert = |node: ConstraintTreeNode,
                          nodes: &mut HashMap<u64, ConstraintTreeNode>,
                          open: &mut BTreeSet<(usize, u64)>,
                          focal: &mut BTreeSet<(usize, usize, u64)>,
                          bound: usize| {
            open.insert((node.cost, seq));
            if node.cost <= bound {
                focal.insert((node.conflicts.len(), node.cost, seq));
            }
            nodes.insert(seq, node);
            seq += 1;
        };
        insert(root, &mut nodes, &mut open, &mut focal, bound);

        while let Some(&(min_cost, _)) = open.first() {
            let new_bound = focal_bound(min_cost);
            if new_bound > bound {
                for &(cost, id) in open.range((bound + 1, 0)..(new_bound + 1, 0)) {
                    focal.insert((nodes[&id].conflicts.len(), cost, id));
                }
                bound = new_bound;
            }
            if config
                .limits
                .max_nodes
                .is_some_and(|m| stats.nodes_expanded >= m)
                || config
                    .limits
                    .time_budget
                    .is_some_and(|b| started.elapsed() >= b)
            {
                return Err(SolveError::Timeout {
                    nodes_expanded: stats.nodes_expanded,
                    lower_bound: Some(min_cost),
                });
            }
            let (_, cost, id) = focal
                .pop_first()
                .expect("focal holds the cheapest open node");
            open.remove(&(cost, id));
            let node = nodes.remove(&id).expect("open node is stored");
            stats.nodes_expanded += 1;
            let Ok(conflict) = pick_conflict(&node.conflicts) else {
                return self.solution(&node);
            };
            stats.conflicts_split += 1;
            for child in self.split(&node, &conflict, stats) {
                match child {
                    Some(child) => insert(child, &mut nodes, &mut open, &mut focal, bound),
                    None => stats.nodes_pruned += 1,
                }
            }
        }
        Err(SolveError::UnsolvableWithinBound {
            bound: self.cost_bound,
        })
    }
}

/// Conflict-Based Search. `w = 1.0` is optimal for `objective`; larger `w`
/// returns a solution of cost at most `w` times optimal.
pub fn solve_cbs(
    inst: &Instance,
    objective: Objective,
    config: &CbsConfig,
    stats: &mut SearchStats,
) -> Result<Solution, SolveError> {
    if inst.num_agents() == 0 {
        require_labeled(inst)?;
        return Ok(Solution::empty());
    }
    Cbs::new(inst, objective, config.limits.cost_bound)?.search(config, stats)
}

/// [`solve_cbs`] as a [`Solver`].
#[derive(Clone, Debug, Default)]
pub struct CbsSolver {
    pub config: CbsConfig,
}

impl CbsSolver {
    pub fn new(w: f64) -> Self {
        CbsSolver {
            config: CbsConfig {
                w,
                limits: CbsLimits::default(),
            },
        }
    }
}

impl Solver for CbsSolver {
    fn name(&self) -> String {
        "cbs".into()
    }

    fn w(&self) -> f64 {
        self.config.w
    }

    fn solve(
        &self,
        inst: &Instance,
        objective: Objective,
        stats: &mut SearchStats,
    ) -> Result<Solution, SolveError> {
        solve_cbs(inst, objective, &self.config, stats)
    }
}
