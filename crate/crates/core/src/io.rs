//! Text formats for maps and scenarios, and the JSON solution schema.
//!
//! Map:
//! ```text
//! height H
//! width W
//! map
//! <H rows of W characters, '.' free, '@' blocked>
//! ```
//!
//! Labeled scenario: one `id start_x start_y goal_x goal_y` line per agent.
//! Anonymous scenario: one `id start_x start_y` line per agent, then a
//! `goals` line followed by one `x y` line per goal. Blank lines and lines
//! starting with `#` are ignored.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::MapfError;
use crate::model::{solution_from_parts, Cell, GoalMode, GridMap, Instance, Path, Solution};

fn header_value(
    line: Option<(usize, &str)>,
    key: &str,
    fallback_line: usize,
) -> Result<usize, MapfError> {
    let (no, text) =
        line.ok_or_else(|| MapfError::parse(fallback_line, format!("missing '{key}' header")))?;
    let mut parts = text.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => v
            .parse()
            .map_err(|_| MapfError::parse(no, format!("invalid {key} '{v}'"))),
        _ => Err(MapfError::parse(no, format!("expected '{key} <int>'"))),
    }
}

pub fn parse_map(text: &str) -> Result<GridMap, MapfError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let height = header_value(lines.next(), "height", 1)?;
    let width = header_value(lines.next(), "width", 2)?;
    match lines.next() {
        Some((_, "map")) => {}
        Some((no, _)) => return Err(MapfError::parse(no, "expected 'map'")),
        None => return Err(MapfError::parse(3, "missing 'map' line")),
    }
    if width == 0 || height == 0 {
        return Err(MapfError::parse(1, "grid dimensions must be positive"));
    }
    let mut blocked = Vec::new();
    for y in 0..height {
        let (no, row) = lines
            .next()
            .ok_or_else(|| MapfError::parse(4 + y, format!("missing map row {y}")))?;
        let chars: Vec<char> = row.chars().collect();
        if chars.len() != width {
            return Err(MapfError::parse(
                no,
                format!("row has {} characters, expected {width}", chars.len()),
            ));
        }
        for (x, ch) in chars.into_iter().enumerate() {
            match ch {
                '.' => {}
                '@' => blocked.push(Cell::new(x, y)),
                other => {
                    return Err(MapfError::parse(
                        no,
                        format!("unexpected character '{other}'"),
                    ))
                }
            }
        }
    }
    if let Some((no, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(MapfError::parse(no, "trailing content after map rows"));
    }
    GridMap::new(width, height, blocked).map_err(|e| MapfError::parse(4, e.to_string()))
}

pub fn write_map(grid: &GridMap) -> String {
    let mut out = format!("height {}\nwidth {}\nmap\n", grid.height(), grid.width());
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            out.push(if grid.is_blocked(Cell::new(x, y)) {
                '@'
            } else {
                '.'
            });
        }
        out.push('\n');
    }
    out
}

fn parse_numbers(no: usize, line: &str) -> Result<Vec<usize>, MapfError> {
    line.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| MapfError::parse(no, format!("invalid integer '{t}'")))
        })
        .collect()
}

fn check_cell(grid: &GridMap, no: usize, c: Cell, what: &str) -> Result<(), MapfError> {
    if !grid.in_bounds(c) {
        return Err(MapfError::parse(no, format!("{what} {c} out of bounds")));
    }
    if grid.is_blocked(c) {
        return Err(MapfError::parse(no, format!("blocked {what} {c}")));
    }
    Ok(())
}

pub fn parse_scenario(text: &str, grid: &GridMap) -> Result<Instance, MapfError> {
    let mut tasks: Vec<(Cell, Option<Cell>)> = Vec::new();
    let mut goal_set: Vec<Cell> = Vec::new();
    let mut mode: Option<GoalMode> = None;
    let mut in_goals = false;
    let mut starts_seen: HashMap<Cell, usize> = HashMap::new();
    let mut goals_seen: HashMap<Cell, usize> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "goals" {
            if in_goals || mode == Some(GoalMode::Labeled) {
                return Err(MapfError::parse(no, "unexpected 'goals' section"));
            }
            in_goals = true;
            mode = Some(GoalMode::Anonymous);
            continue;
        }
        let nums = parse_numbers(no, line)?;
        if in_goals {
            let [x, y] = nums[..] else {
                return Err(MapfError::parse(no, "goal line must be 'x y'"));
            };
            let g = Cell::new(x, y);
            check_cell(grid, no, g, "goal")?;
            if let Some(prev) = goals_seen.insert(g, no) {
                return Err(MapfError::parse(
                    no,
                    format!("duplicate goal {g} (line {prev})"),
                ));
            }
            goal_set.push(g);
            continue;
        }
        let (id, start, goal) = match nums[..] {
            [id, sx, sy, gx, gy] => (id, Cell::new(sx, sy), Some(Cell::new(gx, gy))),
            [id, sx, sy] => (id, Cell::new(sx, sy), None),
            _ => {
                return Err(MapfError::parse(
                    no,
                    "agent line must be 'id sx sy [gx gy]'",
                ))
            }
        };
        let this_mode = if goal.is_some() {
            GoalMode::Labeled
        } else {
            GoalMode::Anonymous
        };
        if *mode.get_or_insert(this_mode) != this_mode {
            return Err(MapfError::parse(
                no,
                "mixed labeled and anonymous agent lines",
            ));
        }
        if id != tasks.len() {
            return Err(MapfError::parse(
                no,
                format!("expected agent id {}, got {id}", tasks.len()),
            ));
        }
        check_cell(grid, no, start, "start")?;
        if let Some(prev) = starts_seen.insert(start, no) {
            return Err(MapfError::parse(
                no,
                format!("duplicate start {start} (line {prev})"),
            ));
        }
        if let Some(g) = goal {
            check_cell(grid, no, g, "goal")?;
            if let Some(prev) = goals_seen.insert(g, no) {
                return Err(MapfError::parse(
                    no,
                    format!("duplicate goal {g} (line {prev})"),
                ));
            }
        }
        tasks.push((start, goal));
    }
    let last = text.lines().count().max(1);
    match mode.unwrap_or(GoalMode::Labeled) {
        GoalMode::Labeled => Ok(Instance::labeled(
            grid.clone(),
            tasks
                .into_iter()
                .map(|(s, g)| (s, g.expect("labeled line has a goal"))),
        )),
        GoalMode::Anonymous => {
            if goal_set.len() != tasks.len() {
                return Err(MapfError::parse(
                    last,
                    format!("{} goals for {} agents", goal_set.len(), tasks.len()),
                ));
            }
            Ok(Instance::anonymous(
                grid.clone(),
                tasks.into_iter().map(|(s, _)| s).collect(),
                goal_set,
            ))
        }
    }
}

pub fn write_scenario(inst: &Instance) -> String {
    let mut out = String::new();
    for a in &inst.agents {
        match a.goal {
            Some(g) => out.push_str(&format!(
                "{} {} {} {} {}\n",
                a.id, a.start.x, a.start.y, g.x, g.y
            )),
            None => out.push_str(&format!("{} {} {}\n", a.id, a.start.x, a.start.y)),
        }
    }
    if inst.goal_mode == GoalMode::Anonymous {
        out.push_str("goals\n");
        for g in &inst.goal_set {
            out.push_str(&format!("{} {}\n", g.x, g.y));
        }
    }
    out
}

/// On-disk solution schema; field order is fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub makespan: usize,
    pub sum_of_costs: usize,
    pub paths: Vec<Vec<[usize; 2]>>,
    pub solver: String,
    pub w: f64,
    pub assignment: Option<Vec<usize>>,
}

pub fn write_solution(sol: &Solution, solver: &str, w: f64) -> String {
    let file = SolutionFile {
        makespan: sol.makespan(),
        sum_of_costs: sol.sum_of_costs(),
        paths: sol
            .paths()
            .iter()
            .map(|p| p.cells().iter().map(|c| [c.x, c.y]).collect())
            .collect(),
        solver: solver.to_string(),
        w,
        assignment: sol.assignment().map(<[usize]>::to_vec),
    };
    let mut s = serde_json::to_string(&file).expect("solution serialises");
    s.push('\n');
    s
}

/// Reads a solution file as written, without normalising it, so that
/// [`crate::model::validate_solution`] can check the stored values.
pub fn read_solution(text: &str, inst: &Instance) -> Result<(Solution, SolutionFile), MapfError> {
    let file: SolutionFile =
        serde_json::from_str(text).map_err(|e| MapfError::parse(e.line(), e.to_string()))?;
    let paths: Vec<Path> = file
        .paths
        .iter()
        .map(|p| Path(p.iter().map(|&[x, y]| Cell::new(x, y)).collect()))
        .collect();
    let goals: Vec<Cell> = match (inst.goal_mode, &file.assignment) {
        (GoalMode::Labeled, _) => inst.goals()?,
        (GoalMode::Anonymous, Some(a)) => {
            a.iter()
                .map(|&g| {
                    inst.goal_set.get(g).copied().ok_or_else(|| {
                        MapfError::invalid(format!("assignment index {g} out of range"))
                    })
                })
                .collect::<Result<_, _>>()?
        }
        (GoalMode::Anonymous, None) => Vec::new(),
    };
    let sol = solution_from_parts(
        paths,
        goals,
        file.makespan,
        file.sum_of_costs,
        file.assignment.clone(),
    );
    Ok((sol, file))
}

/// Plain-text frames, one per time step; agents are drawn as `0-9a-zA-Z`
/// by index (`*` beyond 62).
pub fn render_frames(grid: &GridMap, sol: &Solution) -> String {
    const GLYPHS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
    let horizon = sol.paths().first().map_or(1, Path::len);
    let mut out = String::new();
    for t in 0..horizon {
        out.push_str(&format!("t={t}\n"));
        let mut rows: Vec<Vec<u8>> = (0..grid.height())
            .map(|y| {
                (0..grid.width())
                    .map(|x| {
                        if grid.is_blocked(Cell::new(x, y)) {
                            b'@'
                        } else {
                            b'.'
                        }
                    })
                    .collect()
            })
            .collect();
        for (a, p) in sol.paths().iter().enumerate() {
            let c = p.at(t);
            rows[c.y][c.x] = GLYPHS.get(a).copied().unwrap_or(b'*');
        }
        for r in rows {
            out.push_str(std::str::from_utf8(&r).expect("ascii"));
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_solution;

    fn c(x: usize, y: usize) -> Cell {
        Cell::new(x, y)
    }

    #[test]
    fn one_cell_map() {
        let g = parse_map("height 1\nwidth 1\nmap\n.\n").unwrap();
        assert_eq!(g, GridMap::open(1, 1).unwrap());
        assert_eq!(write_map(&g), "height 1\nwidth 1\nmap\n.\n");
    }

    #[test]
    fn short_row_names_line() {
        let err = parse_map("height 2\nwidth 3\nmap\n...\n..\n").unwrap_err();
        assert!(matches!(err, MapfError::Parse { line: 5, .. }), "{err}");
    }

    #[test]
    fn malformed_headers() {
        assert!(matches!(
            parse_map("width 2\n"),
            Err(MapfError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_map("height 1\nwidth x\nmap\n."),
            Err(MapfError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_map("height 1\nwidth 1\ngrid\n."),
            Err(MapfError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_map("height 2\nwidth 1\nmap\n."),
            Err(MapfError::Parse { line: 5, .. })
        ));
        assert!(matches!(
            parse_map("height 1\nwidth 1\nmap\n#"),
            Err(MapfError::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn scenario_errors() {
        let g = parse_map("height 1\nwidth 3\nmap\n.@.\n").unwrap();
        let err = parse_scenario("0 1 0 2 0\n", &g).unwrap_err();
        assert!(err.to_string().contains("blocked start"), "{err}");
        let err = parse_scenario("0 0 0 2 0\n1 0 0 2 0\n", &g).unwrap_err();
        assert!(matches!(err, MapfError::Parse { line: 2, .. }));
        assert!(err.to_string().contains("duplicate start"));
        let err = parse_scenario("0 5 0 2 0\n", &g).unwrap_err();
        assert!(err.to_string().contains("out of bounds"));
        let err = parse_scenario("1 0 0 2 0\n", &g).unwrap_err();
        assert!(err.to_string().contains("expected agent id 0"));
        assert!(parse_scenario("0 0 0\n", &g).is_err());
    }

    #[test]
    fn scenario_round_trip() {
        let g = GridMap::new(3, 2, [c(1, 1)]).unwrap();
        let lab = Instance::labeled(g.clone(), [(c(0, 0), c(2, 1)), (c(2, 0), c(0, 1))]);
        assert_eq!(parse_scenario(&write_scenario(&lab), &g).unwrap(), lab);
        let anon = Instance::anonymous(g.clone(), vec![c(0, 0), c(2, 0)], vec![c(0, 1), c(2, 1)]);
        let text = write_scenario(&anon);
        assert!(text.contains("goals\n"));
        assert_eq!(parse_scenario(&text, &g).unwrap(), anon);
        assert_eq!(parse_scenario("", &g).unwrap().num_agents(), 0);
    }

    #[test]
    fn solution_json_schema() {
        let g = GridMap::open(2, 1).unwrap();
        let inst = Instance::labeled(g, [(c(0, 0), c(1, 0))]);
        let sol = Solution::new(vec![Path(vec![c(0, 0), c(1, 0)])], vec![c(1, 0)]).unwrap();
        let text = write_solution(&sol, "cbs", 1.5);
        assert_eq!(
            text,
            "{\"makespan\":1,\"sum_of_costs\":1,\"paths\":[[[0,0],[1,0]]],\"solver\":\"cbs\",\"w\":1.5,\"assignment\":null}\n"
        );
        let (back, _) = read_solution(&text, &inst).unwrap();
        assert_eq!(back, sol);
        assert!(validate_solution(&inst, &back).is_empty());
    }

    #[test]
    fn frames_show_agents() {
        let g = GridMap::new(2, 2, [c(1, 1)]).unwrap();
        let sol = Solution::new(vec![Path(vec![c(0, 0), c(1, 0)])], vec![c(1, 0)]).unwrap();
        assert_eq!(render_frames(&g, &sol), "t=0\n0.\n.@\n\nt=1\n.0\n.@\n\n");
    }
}
