use crate::error::SolveError;
use crate::model::{validate_instance, GoalMode, Instance, Objective, Solution};

/// Counters reported by the solvers for benchmarking.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// High-level nodes (CBS) or joint states (oracle) expanded.
    pub nodes_expanded: u64,
    /// CBS nodes whose conflict was split into two children.
    pub conflicts_split: u64,
    /// Children dropped because the constrained agent had no path.
    pub nodes_pruned: u64,
    /// Space-time A* pops.
    pub low_level_expansions: u64,
    /// Independence-detection group merges.
    pub group_merges: u64,
    /// Final group sizes of independence detection, sorted descending.
    pub group_sizes: Vec<usize>,
}

impl SearchStats {
    pub fn absorb(&mut self, other: &SearchStats) {
        self.nodes_expanded += other.nodes_expanded;
        self.conflicts_split += other.conflicts_split;
        self.nodes_pruned += other.nodes_pruned;
        self.low_level_expansions += other.low_level_expansions;
        self.group_merges += other.group_merges;
    }
}

/// A MAPF solver usable from the bench harness and as an independence
/// detection group solver.
pub trait Solver: Sync {
    fn name(&self) -> String;

    /// Suboptimality factor reported alongside solutions.
    fn w(&self) -> f64 {
        1.0
    }

    fn solve(
        &self,
        inst: &Instance,
        objective: Objective,
        stats: &mut SearchStats,
    ) -> Result<Solution, SolveError>;
}

pub(crate) fn require_labeled(inst: &Instance) -> Result<(), SolveError> {
    if inst.goal_mode != GoalMode::Labeled {
        return Err(SolveError::InvalidInput(
            "solver requires a labeled instance".into(),
        ));
    }
    require_valid(inst)
}

pub(crate) fn require_valid(inst: &Instance) -> Result<(), SolveError> {
    let violations = validate_instance(inst);
    if let Some(v) = violations.first() {
        return Err(SolveError::InvalidInput(v.to_string()));
    }
    Ok(())
}
