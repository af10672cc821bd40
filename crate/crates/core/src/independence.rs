//! Independence detection: plan every agent alone, then repeatedly merge the
//! two groups involved in the earliest cross-group collision and re-solve
//! the merged group optimally, until the combined plan is collision-free.

use rayon::prelude::*;

use crate::error::SolveError;
use crate::model::{scan_conflicts, Instance, Objective, Path, Solution};
use crate::solver::{require_labeled, SearchStats, Solver};

/// Disjoint agent groups with a collision-free solution for each.
#[derive(Clone, Debug)]
pub struct GroupPartition {
    /// Sorted agent ids per group.
    pub groups: Vec<Vec<usize>>,
    /// `fragments[k]` solves `groups[k]`; path `m` belongs to `groups[k][m]`.
    pub fragments: Vec<Solution>,
}

impl GroupPartition {
    fn group_of(&self, n: usize) -> Vec<usize> {
        let mut of = vec![0; n];
        for (k, g) in self.groups.iter().enumerate() {
            for &a in g {
                of[a] = k;
            }
        }
        of
    }

    fn agent_paths(&self, n: usize) -> Vec<Path> {
        let mut paths = vec![Path::default(); n];
        for (g, sol) in self.groups.iter().zip(&self.fragments) {
            for (&a, p) in g.iter().zip(sol.paths()) {
                paths[a] = p.clone();
            }
        }
        paths
    }
}

fn solve_group(
    inst: &Instance,
    group: &[usize],
    solver: &dyn Solver,
    objective: Objective,
) -> (Result<Solution, SolveError>, SearchStats) {
    let mut stats = SearchStats::default();
    let r = solver.solve(&inst.subset(group), objective, &mut stats);
    (r, stats)
}

/// Independence detection over `group_solver`, which must be optimal for
/// `objective` on its sub-instances for the result to be optimal.
pub fn solve_id(
    inst: &Instance,
    group_solver: &dyn Solver,
    objective: Objective,
    stats: &mut SearchStats,
) -> Result<Solution, SolveError> {
    require_labeled(inst)?;
    let n = inst.num_agents();
    if n == 0 {
        return Ok(Solution::empty());
    }
    let groups: Vec<Vec<usize>> = (0..n).map(|a| vec![a]).collect();
    let solved: Vec<_> = groups
        .par_iter()
        .map(|g| solve_group(inst, g, group_solver, objective))
        .collect();
    let mut fragments = Vec::with_capacity(n);
    for (r, s) in solved {
        stats.absorb(&s);
        fragments.push(r?);
    }
    let mut part = GroupPartition { groups, fragments };

    loop {
        let paths = part.agent_paths(n);
        let group_of = part.group_of(n);
        let cross = scan_conflicts(&paths)
            .into_iter()
            .find(|c| group_of[c.agents.0] != group_of[c.agents.1]);
        let Some(conflict) = cross else {
            stats.group_sizes = part.groups.iter().map(Vec::len).collect();
            stats.group_sizes.sort_unstable_by(|a, b| b.cmp(a));
            return Ok(Solution::new(paths, inst.goals()?)?);
        };
        let (ga, gb) = {
            let (a, b) = (group_of[conflict.agents.0], group_of[conflict.agents.1]);
            (a.min(b), a.max(b))
        };
        let second = part.groups.remove(gb);
        let second_sol = part.fragments.remove(gb);
        let mut merged = std::mem::take(&mut part.groups[ga]);
        merged.extend(second);
        merged.sort_unstable();
        let (r, s) = solve_group(inst, &merged, group_solver, objective);
        stats.absorb(&s);
        stats.group_merges += 1;
        let sol = r?;
        debug_assert!(
            sol.cost(objective)
                >= objective.combine([
                    part.fragments[ga].cost(objective),
                    second_sol.cost(objective)
                ])
        );
        part.groups[ga] = merged;
        part.fragments[ga] = sol;
    }
}

/// [`solve_id`] as a [`Solver`], wrapping a group solver.
pub struct IdSolver {
    pub group_solver: Box<dyn Solver>,
}

impl IdSolver {
    pub fn new(group_solver: impl Solver + 'static) -> Self {
        IdSolver {
            group_solver: Box::new(group_solver),
        }
    }
}

impl Solver for IdSolver {
    fn name(&self) -> String {
        format!("id({})", self.group_solver.name())
    }

    fn solve(
        &self,
        inst: &Instance,
        objective: Objective,
        stats: &mut SearchStats,
    ) -> Result<Solution, SolveError> {
        solve_id(inst, self.group_solver.as_ref(), objective, stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::{solve_joint, JointSolver, DEFAULT_STATE_CAP};
    use crate::model::{validate_solution, Cell, GridMap};

    fn c(x: usize, y: usize) -> Cell {
        Cell::new(x, y)
    }

    #[test]
    fn disconnected_regions_never_merge() {
        let g = GridMap::new(3, 3, [c(0, 1), c(1, 1), c(2, 1)]).unwrap();
        let inst = Instance::labeled(g, [(c(0, 0), c(2, 0)), (c(2, 2), c(0, 2))]);
        let mut stats = SearchStats::default();
        let sol = solve_id(
            &inst,
            &JointSolver::default(),
            Objective::Makespan,
            &mut stats,
        )
        .unwrap();
        assert_eq!(stats.group_merges, 0);
        assert_eq!(stats.group_sizes, vec![1, 1]);
        assert_eq!(sol.makespan(), 2);
        assert_eq!(sol.sum_of_costs(), 4);
    }

    #[test]
    fn corridor_with_nook_merges_once() {
        let g = GridMap::new(3, 2, [c(0, 1), c(2, 1)]).unwrap();
        let inst = Instance::labeled(g, [(c(0, 0), c(2, 0)), (c(2, 0), c(0, 0))]);
        let mut stats = SearchStats::default();
        let sol = solve_id(
            &inst,
            &JointSolver::default(),
            Objective::Makespan,
            &mut stats,
        )
        .unwrap();
        assert_eq!(stats.group_merges, 1);
        assert_eq!(stats.group_sizes, vec![2]);
        assert_eq!(sol.makespan(), 4);
        assert!(validate_solution(&inst, &sol).is_empty());
    }

    #[test]
    fn all_colliding_equals_joint() {
        // Four agents crossing the centre of a plus-shaped junction.
        let g = GridMap::new(3, 3, [c(0, 0), c(2, 0), c(0, 2), c(2, 2)]).unwrap();
        let inst = Instance::labeled(
            g,
            [(c(1, 0), c(1, 2)), (c(0, 1), c(2, 1)), (c(1, 2), c(1, 0))],
        );
        for obj in [Objective::Makespan, Objective::SumOfCosts] {
            let mut stats = SearchStats::default();
            let id = solve_id(&inst, &JointSolver::default(), obj, &mut stats).unwrap();
            let joint =
                solve_joint(&inst, obj, DEFAULT_STATE_CAP, &mut SearchStats::default()).unwrap();
            assert_eq!(id.cost(obj), joint.cost(obj));
            assert!(stats.group_merges <= 2);
        }
    }

    #[test]
    fn unsolvable_group_propagates() {
        let g = GridMap::open(2, 1).unwrap();
        let inst = Instance::labeled(g, [(c(0, 0), c(1, 0)), (c(1, 0), c(0, 0))]);
        let r = solve_id(
            &inst,
            &JointSolver::default(),
            Objective::Makespan,
            &mut SearchStats::default(),
        );
        assert_eq!(r, Err(SolveError::Unsolvable));
    }

    #[test]
    fn capacity_propagates() {
        let g = GridMap::open(4, 4).unwrap();
        let inst = Instance::labeled(g, [(c(0, 0), c(3, 0)), (c(3, 0), c(0, 0))]);
        let tiny = JointSolver { state_cap: 5 };
        let r = solve_id(
            &inst,
            &tiny,
            Objective::Makespan,
            &mut SearchStats::default(),
        );
        assert!(matches!(r, Err(SolveError::Capacity(_))));
    }
}
