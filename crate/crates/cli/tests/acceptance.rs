//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path as FsPath;
use std::process::Command;
use std::time::{Duration, Instant};

use itertools::Itertools;
use mapf_core::cbs::{solve_cbs, CbsConfig, CbsLimits};
use mapf_core::flow::{assignment_oracle, solve_anonymous};
use mapf_core::generate::{generate_random, generate_warehouse, WarehouseParams};
use mapf_core::independence::solve_id;
use mapf_core::io::{parse_map, parse_scenario, read_solution, write_map, write_scenario};
use mapf_core::joint::{solve_joint, JointSolver, DEFAULT_STATE_CAP};
use mapf_core::{
    find_conflicts, validate_solution, Cell, ConflictKind, GridMap, Instance, Objective, Path,
    SearchStats, Solution, SolveError,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OBJECTIVES: [Objective; 2] = [Objective::Makespan, Objective::SumOfCosts];
const MIN_CORPUS: usize = 200;
/// High-level node budget for every CBS run on the small corpus. Solvable
/// corpus instances need far fewer; a run that hits it counts as a failure.
const CBS_NODE_BUDGET: u64 = 100_000;

fn c(x: usize, y: usize) -> Cell {
    Cell::new(x, y)
}

fn path(cells: &[(usize, usize)]) -> Path {
    Path(cells.iter().map(|&(x, y)| c(x, y)).collect())
}

/// Collects validator findings for every solution produced by any suite.
#[derive(Default)]
struct Audit {
    checked: usize,
    failures: Vec<String>,
}

impl Audit {
    fn check(&mut self, label: &str, inst: &Instance, sol: &Solution) -> bool {
        self.checked += 1;
        let mut problems = validate_solution(inst, sol);
        if !sol.conflicts().is_empty() {
            problems.push("conflicts present".into());
        }
        if problems.is_empty() {
            true
        } else {
            self.failures
                .push(format!("{label}: {}", problems.join("; ")));
            false
        }
    }
}

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: usize, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!(
            "[{}] {id}. {name}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
}

fn cbs(w: f64) -> CbsConfig {
    CbsConfig {
        w,
        limits: CbsLimits {
            max_nodes: Some(CBS_NODE_BUDGET),
            ..CbsLimits::default()
        },
    }
}

/// Seeded random instances on grids up to 4x4 with up to 3 agents, kept
/// only when the joint oracle solves them under both objectives.
fn small_corpus(count: usize) -> Vec<(u64, Instance)> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = rng.gen_range(2..=4);
        let h = rng.gen_range(2..=4);
        let n = rng.gen_range(1..=3usize).min(w * h - 1);
        let ratio = [0.0, 0.1, 0.2, 0.3][rng.gen_range(0..4)];
        if let Ok(inst) = generate_random(w, h, ratio, n, seed) {
            let solvable = OBJECTIVES.iter().all(|&o| {
                solve_joint(&inst, o, DEFAULT_STATE_CAP, &mut SearchStats::default()).is_ok()
            });
            if solvable {
                out.push((seed, inst));
            }
        }
        seed += 1;
    }
    out
}

fn criterion_1(corpus: &[(u64, Instance)], audit: &mut Audit, report: &mut Report) {
    let started = Instant::now();
    let mut mismatches = Vec::new();
    for (seed, inst) in corpus {
        for obj in OBJECTIVES {
            let joint =
                solve_joint(inst, obj, DEFAULT_STATE_CAP, &mut SearchStats::default()).unwrap();
            let cbs_sol = solve_cbs(inst, obj, &cbs(1.0), &mut SearchStats::default());
            let id_sol = solve_id(
                inst,
                &JointSolver::default(),
                obj,
                &mut SearchStats::default(),
            );
            audit.check(&format!("joint seed {seed} {obj}"), inst, &joint);
            let costs = [&cbs_sol, &id_sol].map(|r| r.as_ref().map(|s| s.cost(obj)).ok());
            for (label, r) in [("cbs", &cbs_sol), ("id", &id_sol)] {
                if let Ok(s) = r {
                    audit.check(&format!("{label} seed {seed} {obj}"), inst, s);
                }
            }
            if costs != [Some(joint.cost(obj)); 2] {
                mismatches.push(format!(
                    "seed {seed} {obj}: joint {} cbs {:?} id {:?}",
                    joint.cost(obj),
                    costs[0],
                    costs[1]
                ));
            }
        }
    }
    let elapsed = started.elapsed();
    let ok =
        mismatches.is_empty() && corpus.len() >= MIN_CORPUS && elapsed < Duration::from_secs(60);
    report.line(
        1,
        "oracle equivalence",
        ok,
        format!(
            "{} instances x 2 objectives, {} mismatches, {:.1} s{}",
            corpus.len(),
            mismatches.len(),
            elapsed.as_secs_f64(),
            mismatches
                .first()
                .map(|m| format!(" (first: {m})"))
                .unwrap_or_default()
        ),
    );
}

fn criterion_2(corpus: &[(u64, Instance)], audit: &mut Audit, report: &mut Report) {
    let mut runs = 0;
    let mut violations = Vec::new();
    for (seed, inst) in corpus {
        for obj in OBJECTIVES {
            let opt = solve_joint(inst, obj, DEFAULT_STATE_CAP, &mut SearchStats::default())
                .unwrap()
                .cost(obj);
            for w in [1.0, 1.2, 1.5, 2.0] {
                runs += 1;
                let bound = (w * opt as f64 - 1e-9).ceil() as usize;
                match solve_cbs(inst, obj, &cbs(w), &mut SearchStats::default()) {
                    Ok(s) => {
                        audit.check(&format!("cbs w={w} seed {seed} {obj}"), inst, &s);
                        let cost = s.cost(obj);
                        let within = if w == 1.0 { cost == opt } else { cost <= bound };
                        if !within {
                            violations
                                .push(format!("seed {seed} {obj} w={w}: {cost} vs optimum {opt}"));
                        }
                    }
                    Err(e) => violations.push(format!("seed {seed} {obj} w={w}: {e}")),
                }
            }
        }
    }
    report.line(
        2,
        "bounded suboptimality",
        violations.is_empty(),
        format!(
            "{runs} runs over w in {{1.0, 1.2, 1.5, 2.0}}, {} violations{}",
            violations.len(),
            violations
                .first()
                .map(|m| format!(" (first: {m})"))
                .unwrap_or_default()
        ),
    );
}

fn criterion_3(report: &mut Report) {
    let mut errors = Vec::new();
    let swap = find_conflicts(&[path(&[(0, 0), (1, 0)]), path(&[(1, 0), (0, 0)])]).unwrap();
    if !(swap.len() == 1
        && swap[0].time == 1
        && swap[0].agents == (0, 1)
        && swap[0].kind
            == ConflictKind::Swap {
                from: c(0, 0),
                to: c(1, 0),
            })
    {
        errors.push(format!("swap example: {swap:?}"));
    }
    let vertex = find_conflicts(&[path(&[(0, 0), (1, 0)]), path(&[(2, 0), (1, 0)])]).unwrap();
    if !(vertex.len() == 1
        && vertex[0].time == 1
        && vertex[0].kind == ConflictKind::Vertex(c(1, 0)))
    {
        errors.push(format!("vertex example: {vertex:?}"));
    }
    let follow = find_conflicts(&[path(&[(0, 0), (1, 0)]), path(&[(1, 0), (2, 0)])]).unwrap();
    if !follow.is_empty() {
        errors.push(format!("following example: {follow:?}"));
    }
    let rotation = find_conflicts(&[
        path(&[(0, 0), (1, 0)]),
        path(&[(1, 0), (1, 1)]),
        path(&[(1, 1), (0, 1)]),
        path(&[(0, 1), (0, 0)]),
    ])
    .unwrap();
    if !rotation.is_empty() {
        errors.push(format!("rotation example: {rotation:?}"));
    }

    // Random walks on a 3x3 grid: permuting agents relabels the conflicts
    // but never changes which agents collide, when, or where.
    let grid = GridMap::open(3, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 500;
    for trial in 0..trials {
        let n = rng.gen_range(2..=5);
        let len = rng.gen_range(1..=6);
        let paths: Vec<Path> = (0..n)
            .map(|_| {
                let mut cur = c(rng.gen_range(0..3), rng.gen_range(0..3));
                let mut cells = vec![cur];
                for _ in 1..len {
                    cur = *grid.neighbors(cur).unwrap().choose(&mut rng).unwrap();
                    cells.push(cur);
                }
                Path(cells)
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let permuted: Vec<Path> = order.iter().map(|&i| paths[i].clone()).collect();
        let ids: Vec<usize> = (0..n).collect();
        if conflict_multiset(&paths, &ids) != conflict_multiset(&permuted, &order) {
            errors.push(format!("permutation trial {trial}"));
        }
    }
    report.line(
        3,
        "collision semantics",
        errors.is_empty(),
        format!(
            "4 examples + {trials} permutation trials, {} failures{}",
            errors.len(),
            errors
                .first()
                .map(|m| format!(" (first: {m})"))
                .unwrap_or_default()
        ),
    );
}

fn conflict_multiset(
    paths: &[Path],
    ids: &[usize],
) -> Vec<(usize, usize, usize, Cell, Option<Cell>)> {
    let mut out: Vec<_> = find_conflicts(paths)
        .unwrap()
        .into_iter()
        .map(|k| {
            let (a, b) = (ids[k.agents.0], ids[k.agents.1]);
            match k.kind {
                ConflictKind::Vertex(v) => (a.min(b), a.max(b), k.time, v, None),
                ConflictKind::Swap { from, to } => {
                    (a.min(b), a.max(b), k.time, from.min(to), Some(from.max(to)))
                }
            }
        })
        .collect();
    out.sort();
    out
}

fn write_instance(dir: &FsPath, stem: &str, inst: &Instance) {
    std::fs::write(dir.join(format!("{stem}.map")), write_map(&inst.grid)).unwrap();
    std::fs::write(dir.join(format!("{stem}.scen")), write_scenario(inst)).unwrap();
}

fn mapf(args: &[&str], cwd: &FsPath) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mapf"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("mapf binary runs")
}

fn criterion_4(report: &mut Report) {
    let inst = Instance::labeled(
        GridMap::open(2, 1).unwrap(),
        [(c(0, 0), c(1, 0)), (c(1, 0), c(0, 0))],
    );
    let mut results = Vec::new();
    let mut ok = true;
    for obj in OBJECTIVES {
        let j = solve_joint(&inst, obj, DEFAULT_STATE_CAP, &mut SearchStats::default());
        let b = solve_cbs(&inst, obj, &cbs(1.0), &mut SearchStats::default());
        ok &= j == Err(SolveError::Unsolvable);
        ok &= matches!(b, Err(SolveError::UnsolvableWithinBound { .. }));
        results.push(format!("{obj}: joint {} / cbs {}", short(&j), short(&b)));
    }
    let dir = tempfile::tempdir().unwrap();
    write_instance(dir.path(), "swap", &inst);
    for solver in ["joint", "cbs", "id"] {
        let out = mapf(
            &[
                "solve",
                "--map",
                "swap.map",
                "--scen",
                "swap.scen",
                "--solver",
                solver,
                "--out",
                "s.json",
            ],
            dir.path(),
        );
        ok &= out.status.code() == Some(2);
        results.push(format!("cli {solver} exit {:?}", out.status.code()));
    }
    report.line(4, "unsolvability", ok, results.join(", "));
}

fn short(r: &Result<Solution, SolveError>) -> &'static str {
    match r {
        Ok(_) => "solved",
        Err(SolveError::Unsolvable) => "unsolvable",
        Err(SolveError::UnsolvableWithinBound { .. }) => "unsolvable_within_bound",
        Err(SolveError::Timeout { .. }) => "timeout",
        Err(SolveError::Capacity(_)) => "capacity",
        Err(SolveError::InvalidInput(_)) => "invalid_input",
    }
}

fn criterion_5(corpus: &[(u64, Instance)], audit: &mut Audit, report: &mut Report) {
    let mut errors = Vec::new();
    let mut assignments = 0;
    for (seed, labeled) in corpus {
        let anon = labeled.to_anonymous().unwrap();
        let flow = solve_anonymous(&anon, &mut SearchStats::default());
        let oracle = assignment_oracle(&anon, DEFAULT_STATE_CAP);
        let sol = match flow {
            Ok(s) => s,
            Err(e) => {
                errors.push(format!("seed {seed}: flow {e}"));
                continue;
            }
        };
        audit.check(&format!("flow seed {seed}"), &anon, &sol);
        if !find_conflicts(sol.paths()).unwrap().is_empty() {
            errors.push(format!("seed {seed}: decoded flow has conflicts"));
        }
        if oracle != Ok(sol.makespan()) {
            errors.push(format!(
                "seed {seed}: flow {} oracle {oracle:?}",
                sol.makespan()
            ));
        }
        let n = anon.num_agents();
        for perm in (0..n).permutations(n) {
            assignments += 1;
            let fixed = anon.with_assignment(&perm);
            if let Ok(lab) = solve_joint(
                &fixed,
                Objective::Makespan,
                DEFAULT_STATE_CAP,
                &mut SearchStats::default(),
            ) {
                if sol.makespan() > lab.makespan() {
                    errors.push(format!(
                        "seed {seed}: flow {} > labeled {} for {perm:?}",
                        sol.makespan(),
                        lab.makespan()
                    ));
                }
            }
        }
    }
    report.line(
        5,
        "anonymous variant",
        errors.is_empty() && corpus.len() >= 100,
        format!(
            "{} instances, {assignments} fixed assignments, {} failures{}",
            corpus.len(),
            errors.len(),
            errors
                .first()
                .map(|m| format!(" (first: {m})"))
                .unwrap_or_default()
        ),
    );
}

fn criterion_7(audit: &mut Audit, report: &mut Report) {
    let wh = generate_warehouse(&WarehouseParams::default()).unwrap();
    let started = Instant::now();
    let r = solve_cbs(
        &wh,
        Objective::Makespan,
        &cbs(1.5),
        &mut SearchStats::default(),
    );
    let cbs_time = started.elapsed();
    let cbs_ok = match &r {
        Ok(s) => audit.check("warehouse cbs", &wh, s) && cbs_time < Duration::from_secs(30),
        Err(_) => false,
    };

    let open = generate_random(30, 30, 0.1, 50, 7)
        .unwrap()
        .to_anonymous()
        .unwrap();
    let started = Instant::now();
    let f = solve_anonymous(&open, &mut SearchStats::default());
    let flow_time = started.elapsed();
    let flow_ok = match &f {
        Ok(s) => audit.check("open grid flow", &open, s) && flow_time < Duration::from_secs(10),
        Err(_) => false,
    };
    report.line(
        7,
        "performance guardrail",
        cbs_ok && flow_ok,
        format!(
            "cbs w=1.5 on {}x{} warehouse with {} agents: {} in {:.2} s; flow with {} agents on 30x30: {} in {:.2} s",
            wh.grid.width(),
            wh.grid.height(),
            wh.num_agents(),
            short(&r),
            cbs_time.as_secs_f64(),
            open.num_agents(),
            short(&f),
            flow_time.as_secs_f64()
        ),
    );
}

fn cost_columns(csv_text: &str) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let keep: Vec<usize> = ["instance", "solver", "objective", "w", "status", "cost"]
        .iter()
        .map(|h| headers.iter().position(|x| x == *h).unwrap())
        .collect();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            keep.iter().map(|&i| r[i].to_string()).collect()
        })
        .collect()
}

fn criterion_8(audit: &mut Audit, report: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut notes = Vec::new();
    let mut ok = true;

    let mut generated = Vec::new();
    for prefix in ["a", "b"] {
        let out = mapf(
            &[
                "generate",
                "warehouse",
                "--seed",
                "11",
                "--agents",
                "12",
                "--out-prefix",
                prefix,
            ],
            d,
        );
        ok &= out.status.success();
        generated.push((
            std::fs::read(d.join(format!("{prefix}.map"))).unwrap(),
            std::fs::read(d.join(format!("{prefix}.scen"))).unwrap(),
        ));
    }
    let same_instance = generated[0] == generated[1];
    ok &= same_instance;
    notes.push(format!("generator identical: {same_instance}"));

    for (solver, extra) in [
        ("cbs", vec!["--w", "1.5"]),
        ("flow", vec![]),
        ("id", vec!["--sub", "cbs", "--objective", "soc"]),
    ] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out_name = format!("{solver}{run}.json");
            let mut args = vec![
                "solve", "--map", "a.map", "--scen", "a.scen", "--solver", solver, "--out",
                &out_name,
            ];
            args.extend(extra.iter().copied());
            let out = mapf(&args, d);
            ok &= out.status.success();
            outputs.push(std::fs::read(d.join(&out_name)).unwrap_or_default());
        }
        let same = !outputs[0].is_empty() && outputs[0] == outputs[1];
        ok &= same;
        notes.push(format!("{solver} json identical: {same}"));
        let grid = parse_map(&std::fs::read_to_string(d.join("a.map")).unwrap()).unwrap();
        let inst =
            parse_scenario(&std::fs::read_to_string(d.join("a.scen")).unwrap(), &grid).unwrap();
        let inst = if solver == "flow" {
            inst.to_anonymous().unwrap()
        } else {
            inst
        };
        if let Ok((sol, _)) = read_solution(&String::from_utf8_lossy(&outputs[0]), &inst) {
            ok &= audit.check(&format!("cli {solver}"), &inst, &sol);
        } else {
            ok = false;
        }
        let validate = mapf(
            &[
                "validate",
                "--map",
                "a.map",
                "--scen",
                "a.scen",
                "--solution",
                &format!("{solver}0.json"),
            ],
            d,
        );
        if solver != "flow" {
            ok &= validate.status.success();
        }
    }

    let corpus = d.join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    for seed in 0..6 {
        let inst = generate_random(4, 4, 0.2, 3, seed).unwrap();
        write_instance(&corpus, &format!("r{seed}"), &inst);
    }
    write_instance(
        &corpus,
        "wh",
        &generate_warehouse(&WarehouseParams {
            agent_count: 8,
            ..Default::default()
        })
        .unwrap(),
    );
    std::fs::write(
        d.join("matrix.txt"),
        "joint\njoint objective=soc\ncbs\ncbs w=1.5 objective=soc\nid sub=joint\nflow\n",
    )
    .unwrap();
    let mut tables = Vec::new();
    for run in 0..2 {
        let out_name = format!("bench{run}.csv");
        let out = mapf(
            &[
                "bench",
                "--corpus",
                "corpus",
                "--matrix",
                "matrix.txt",
                "--out",
                &out_name,
            ],
            d,
        );
        ok &= out.status.success();
        tables.push(cost_columns(
            &std::fs::read_to_string(d.join(&out_name)).unwrap_or_default(),
        ));
    }
    let same_csv = !tables[0].is_empty() && tables[0] == tables[1];
    ok &= same_csv;
    notes.push(format!(
        "bench cost columns identical over {} rows: {same_csv}",
        tables[0].len()
    ));
    report.line(8, "determinism", ok, notes.join(", "));
}

fn main() {
    let mut report = Report { failed: 0 };
    let mut audit = Audit::default();
    let corpus = small_corpus(MIN_CORPUS + 40);

    criterion_1(&corpus, &mut audit, &mut report);
    criterion_2(&corpus, &mut audit, &mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    criterion_5(&corpus, &mut audit, &mut report);
    criterion_7(&mut audit, &mut report);
    criterion_8(&mut audit, &mut report);
    report.line(
        6,
        "validator soundness",
        audit.failures.is_empty() && audit.checked > 0,
        format!(
            "{} solutions checked, {} invalid{}",
            audit.checked,
            audit.failures.len(),
            audit
                .failures
                .first()
                .map(|m| format!(" (first: {m})"))
                .unwrap_or_default()
        ),
    );

    if report.failed > 0 {
        println!("{} criteria failed", report.failed);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
