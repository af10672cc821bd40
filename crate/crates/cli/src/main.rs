//! `mapf`: solve, validate, generate and benchmark grid MAPF instances.
//!
//! Exit codes: 0 solved or valid, 2 unsolvable, 3 timeout or capacity,
//! 64 usage, 65 data format or invalid solution file, 70 internal defect.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mapf_core::bench::{
    load_corpus, parse_matrix, records_to_csv, run_bench, run_one, Budgets, RunError, SolverKind,
    SolverSpec,
};
use mapf_core::generate::{generate_random, generate_warehouse, WarehouseParams};
use mapf_core::io::{
    parse_map, parse_scenario, read_solution, render_frames, write_map, write_scenario,
    write_solution,
};
use mapf_core::joint::DEFAULT_STATE_CAP;
use mapf_core::{validate_solution, Instance, MapfError, Objective, SolveError};

const EXIT_UNSOLVABLE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_SOFTWARE: u8 = 70;

#[derive(Parser)]
#[command(name = "mapf", version, about = "Multi-agent path finding on grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write the solution JSON.
    Solve(SolveArgs),
    /// Check a solution file against its instance.
    Validate(ValidateArgs),
    /// Write a generated `.map` and `.scen` pair.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Run a solver matrix over a directory of instances.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Cbs,
    Id,
    Joint,
    Flow,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubArg {
    Joint,
    Cbs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Makespan,
    Soc,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Makespan => Objective::Makespan,
            ObjectiveArg::Soc => Objective::SumOfCosts,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    scen: PathBuf,
    #[arg(long, value_enum)]
    solver: SolverArg,
    #[arg(long, value_enum, default_value = "makespan")]
    objective: ObjectiveArg,
    /// Suboptimality factor for CBS.
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    /// Wall-clock budget for CBS searches.
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Group solver for `--solver id`.
    #[arg(long, value_enum, default_value = "joint")]
    sub: SubArg,
    /// Joint-oracle state cap.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    scen: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    /// Print one text frame per time step.
    #[arg(long)]
    animate: bool,
}

#[derive(Args)]
struct CommonGen {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Writes `<prefix>.map` and `<prefix>.scen`.
    #[arg(long)]
    out_prefix: PathBuf,
    /// Write an anonymous scenario (goal set without labels).
    #[arg(long)]
    anonymous: bool,
}

#[derive(Subcommand)]
enum GenerateKind {
    Warehouse {
        #[arg(long, default_value_t = 4)]
        pod_block_width: usize,
        #[arg(long, default_value_t = 2)]
        pod_block_height: usize,
        #[arg(long, default_value_t = 5)]
        blocks_x: usize,
        #[arg(long, default_value_t = 9)]
        blocks_y: usize,
        #[arg(long, default_value_t = 1)]
        aisle_width: usize,
        #[arg(long, default_value_t = 1)]
        perimeter: usize,
        #[arg(long, default_value_t = 6)]
        stations: usize,
        #[arg(long, default_value_t = 20)]
        agents: usize,
        #[command(flatten)]
        common: CommonGen,
    },
    Random {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long, default_value_t = 0.0)]
        block_ratio: f64,
        #[arg(long)]
        agents: usize,
        #[command(flatten)]
        common: CommonGen,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Wall-clock budget per CBS search.
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
    /// High-level node budget per CBS search.
    #[arg(long)]
    node_budget: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn data_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_DATA, format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| data_error(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure::new(EXIT_DATA, format!("{}: {e}", path.display())))
}

fn load_instance(map: &Path, scen: &Path) -> Result<Instance, Failure> {
    let grid = parse_map(&read(map)?).map_err(|e| data_error(map, e))?;
    parse_scenario(&read(scen)?, &grid).map_err(|e| data_error(scen, e))
}

fn run_error(e: RunError) -> Failure {
    match e {
        RunError::Input(m) => Failure::new(EXIT_USAGE, m),
        defect @ RunError::Defect { .. } => Failure::new(EXIT_SOFTWARE, defect.to_string()),
    }
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let inst = load_instance(&args.map, &args.scen)?;
    let spec = SolverSpec {
        kind: match args.solver {
            SolverArg::Cbs => SolverKind::Cbs,
            SolverArg::Joint => SolverKind::Joint,
            SolverArg::Flow => SolverKind::Flow,
            SolverArg::Id => SolverKind::Id {
                joint_groups: matches!(args.sub, SubArg::Joint),
            },
        },
        objective: args.objective.into(),
        w: args.w,
    };
    if !(spec.w.is_finite() && spec.w >= 1.0) {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("--w must be >= 1.0, got {}", args.w),
        ));
    }
    let budgets = Budgets {
        timeout: args.timeout_ms.map(Duration::from_millis),
        node_budget: None,
        joint_state_cap: args.state_cap,
    };
    let outcome = run_one(&inst, &spec, &budgets).map_err(run_error)?;
    let sol = match outcome.result {
        Ok(sol) => sol,
        Err(e @ (SolveError::Unsolvable | SolveError::UnsolvableWithinBound { .. })) => {
            return Err(Failure::new(EXIT_UNSOLVABLE, e.to_string()))
        }
        Err(e @ (SolveError::Timeout { .. } | SolveError::Capacity(_))) => {
            return Err(Failure::new(EXIT_BUDGET, e.to_string()))
        }
        Err(SolveError::InvalidInput(m)) => return Err(Failure::new(EXIT_USAGE, m)),
    };
    let json = write_solution(&sol, &spec.label(), spec.w);
    match &args.out {
        Some(path) => write(path, &json)?,
        None => print!("{json}"),
    }
    eprintln!(
        "{}: makespan {} sum_of_costs {} ({} ms)",
        spec.label(),
        sol.makespan(),
        sol.sum_of_costs(),
        outcome.elapsed.as_millis()
    );
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<(), Failure> {
    let inst = load_instance(&args.map, &args.scen)?;
    let (sol, _) =
        read_solution(&read(&args.solution)?, &inst).map_err(|e| data_error(&args.solution, e))?;
    if args.animate {
        print!("{}", render_frames(&inst.grid, &sol));
    }
    let problems = validate_solution(&inst, &sol);
    if problems.is_empty() {
        println!(
            "valid: makespan {} sum_of_costs {}",
            sol.makespan(),
            sol.sum_of_costs()
        );
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_DATA,
            format!("invalid solution:\n  {}", problems.join("\n  ")),
        ))
    }
}

fn generate(kind: GenerateKind) -> Result<(), Failure> {
    let (inst, common) = match kind {
        GenerateKind::Warehouse {
            pod_block_width,
            pod_block_height,
            blocks_x,
            blocks_y,
            aisle_width,
            perimeter,
            stations,
            agents,
            common,
        } => {
            let params = WarehouseParams {
                pod_block_width,
                pod_block_height,
                blocks_x,
                blocks_y,
                aisle_width,
                perimeter,
                station_count: stations,
                agent_count: agents,
                seed: common.seed,
            };
            (generate_warehouse(&params), common)
        }
        GenerateKind::Random {
            width,
            height,
            block_ratio,
            agents,
            common,
        } => (
            generate_random(width, height, block_ratio, agents, common.seed),
            common,
        ),
    };
    let mut inst = inst.map_err(|e: MapfError| Failure::new(EXIT_USAGE, e.to_string()))?;
    if common.anonymous {
        inst = inst
            .to_anonymous()
            .map_err(|e| Failure::new(EXIT_SOFTWARE, e.to_string()))?;
    }
    let prefix = common.out_prefix.as_os_str().to_owned();
    let with_ext = |ext: &str| {
        let mut p = prefix.clone();
        p.push(ext);
        PathBuf::from(p)
    };
    write(&with_ext(".map"), &write_map(&inst.grid))?;
    write(&with_ext(".scen"), &write_scenario(&inst))?;
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let matrix = parse_matrix(&read(&args.matrix)?).map_err(|e| data_error(&args.matrix, e))?;
    let corpus = load_corpus(&args.corpus).map_err(|e| Failure::new(EXIT_DATA, e.to_string()))?;
    let budgets = Budgets {
        timeout: Some(Duration::from_millis(args.timeout_ms)),
        node_budget: args.node_budget,
        joint_state_cap: args.state_cap,
    };
    let records = run_bench(&corpus, &matrix, &budgets).map_err(run_error)?;
    write(&args.out, &records_to_csv(&records))?;
    eprintln!(
        "{} records written to {}",
        records.len(),
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Validate(a) => validate(a),
        Command::Generate { kind } => generate(kind),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mapf: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
