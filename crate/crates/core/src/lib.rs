//! Multi-agent path finding on 4-connected grids.
//!
//! Robots move in synchronous steps, each waiting or moving to a free
//! orthogonal neighbour. Solvers:
//!
//! * [`joint::solve_joint`]: exact search over joint configurations.
//! * [`cbs::solve_cbs`]: Conflict-Based Search, optimal or bounded-suboptimal.
//! * [`independence::solve_id`]: independence detection over any group solver.
//! * [`flow::solve_anonymous`]: max-flow solver when any robot may take any goal.

pub mod bench;
pub mod cbs;
pub mod error;
pub mod flow;
pub mod generate;
pub mod independence;
pub mod io;
pub mod joint;
pub mod model;
pub mod single_agent;
pub mod solver;

pub use error::{MapfError, SolveError};
pub use model::{
    find_conflicts, validate_instance, validate_solution, Cell, Conflict, ConflictKind, GoalMode,
    GridMap, Instance, Objective, Path, Solution,
};
pub use solver::{SearchStats, Solver};
