//! Seeded instance generators: a warehouse layout (storage blocks separated
//! by aisles, a free ring around them, stations on the ring) and uniformly
//! random grids.
//!
//! All randomness comes from a ChaCha generator seeded by the caller, and
//! index sampling goes through `u64` so results do not depend on the
//! platform's pointer width.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::MapfError;
use crate::model::{Cell, GridMap, Instance};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WarehouseParams {
    pub pod_block_width: usize,
    pub pod_block_height: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
    /// Free cells between neighbouring blocks and between blocks and ring.
    pub aisle_width: usize,
    /// Thickness of the free ring along the outer wall.
    pub perimeter: usize,
    pub station_count: usize,
    pub agent_count: usize,
    pub seed: u64,
}

impl Default for WarehouseParams {
    /// A 28x30 layout of 45 blocks of 4x2 pods with single-cell aisles.
    fn default() -> Self {
        WarehouseParams {
            pod_block_width: 4,
            pod_block_height: 2,
            blocks_x: 5,
            blocks_y: 9,
            aisle_width: 1,
            perimeter: 1,
            station_count: 6,
            agent_count: 20,
            seed: 0,
        }
    }
}

impl WarehouseParams {
    pub fn width(&self) -> usize {
        2 * self.perimeter
            + self.blocks_x * self.pod_block_width
            + (self.blocks_x + 1) * self.aisle_width
    }

    pub fn height(&self) -> usize {
        2 * self.perimeter
            + self.blocks_y * self.pod_block_height
            + (self.blocks_y + 1) * self.aisle_width
    }

    fn check(&self) -> Result<(), MapfError> {
        let positive = [
            ("pod_block_width", self.pod_block_width),
            ("pod_block_height", self.pod_block_height),
            ("blocks_x", self.blocks_x),
            ("blocks_y", self.blocks_y),
            ("aisle_width", self.aisle_width),
            ("perimeter", self.perimeter),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(MapfError::invalid(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i as u64) as usize;
        items.swap(i, j);
    }
}

/// Outer ring cells in clockwise order from the top-left corner.
fn ring_cells(width: usize, height: usize, perimeter: usize) -> Vec<Cell> {
    let mut out = Vec::new();
    for layer in 0..perimeter {
        let (x0, y0) = (layer, layer);
        let (x1, y1) = (width - 1 - layer, height - 1 - layer);
        if x0 > x1 || y0 > y1 {
            break;
        }
        out.extend((x0..=x1).map(|x| Cell::new(x, y0)));
        out.extend((y0 + 1..=y1).map(|y| Cell::new(x1, y)));
        if y1 > y0 {
            out.extend((x0..x1).rev().map(|x| Cell::new(x, y1)));
        }
        if x1 > x0 {
            out.extend((y0 + 1..y1).rev().map(|y| Cell::new(x0, y)));
        }
    }
    out
}

/// Station cells: `station_count` cells evenly spaced along the outermost
/// ring.
pub fn station_cells(p: &WarehouseParams) -> Vec<Cell> {
    let ring = ring_cells(p.width(), p.height(), 1);
    (0..p.station_count)
        .map(|k| ring[k * ring.len() / p.station_count.max(1)])
        .collect()
}

/// Warehouse instance: storage blocks are blocked, everything else is free
/// and connected through the aisles and the ring. Starts are drawn from
/// aisle cells; goals alternate between station-side cells and arbitrary
/// free cells.
pub fn generate_warehouse(p: &WarehouseParams) -> Result<Instance, MapfError> {
    p.check()?;
    let (width, height) = (p.width(), p.height());
    let mut blocked = Vec::new();
    for bx in 0..p.blocks_x {
        for by in 0..p.blocks_y {
            let x0 = p.perimeter + p.aisle_width + bx * (p.pod_block_width + p.aisle_width);
            let y0 = p.perimeter + p.aisle_width + by * (p.pod_block_height + p.aisle_width);
            for x in x0..x0 + p.pod_block_width {
                for y in y0..y0 + p.pod_block_height {
                    blocked.push(Cell::new(x, y));
                }
            }
        }
    }
    let grid = GridMap::new(width, height, blocked)?;
    let ring = ring_cells(width, height, p.perimeter);
    if p.station_count > ring_cells(width, height, 1).len() {
        return Err(MapfError::invalid(format!(
            "station_count {} exceeds the {} perimeter cells",
            p.station_count,
            ring_cells(width, height, 1).len()
        )));
    }
    let n = p.agent_count;
    let mut aisles: Vec<Cell> = grid.free_cells().filter(|c| !ring.contains(c)).collect();
    if aisles.len() < n {
        return Err(MapfError::invalid(format!(
            "agent_count {n} exceeds the {} aisle cells",
            aisles.len()
        )));
    }
    let mut rng = rng(p.seed);
    shuffle(&mut rng, &mut aisles);
    let starts = aisles[..n].to_vec();

    let stations = station_cells(p);
    let mut station_side: Vec<Cell> = Vec::new();
    for &s in &stations {
        for c in std::iter::once(s).chain(grid.adjacent(s)) {
            if !station_side.contains(&c) {
                station_side.push(c);
            }
        }
    }
    let mut free: Vec<Cell> = grid.free_cells().collect();
    shuffle(&mut rng, &mut station_side);
    shuffle(&mut rng, &mut free);
    let mut goals: Vec<Cell> = Vec::with_capacity(n);
    let (mut si, mut fi) = (0, 0);
    for k in 0..n {
        let mut pick = None;
        if k % 2 == 0 {
            while si < station_side.len() && pick.is_none() {
                let c = station_side[si];
                si += 1;
                if !goals.contains(&c) {
                    pick = Some(c);
                }
            }
        }
        while pick.is_none() && fi < free.len() {
            let c = free[fi];
            fi += 1;
            if !goals.contains(&c) {
                pick = Some(c);
            }
        }
        goals.push(pick.ok_or_else(|| MapfError::invalid("not enough free cells for goals"))?);
    }
    Ok(Instance::labeled(grid, starts.into_iter().zip(goals)))
}

/// Resampling attempts before [`generate_random`] gives up.
pub const RANDOM_ATTEMPTS: usize = 1000;

/// Random labeled instance: `round(block_ratio * width * height)` blocked
/// cells, `n` distinct starts and `n` distinct goals, each goal reachable
/// from its start.
pub fn generate_random(
    width: usize,
    height: usize,
    block_ratio: f64,
    n: usize,
    seed: u64,
) -> Result<Instance, MapfError> {
    if width == 0 || height == 0 {
        return Err(MapfError::invalid("grid dimensions must be positive"));
    }
    if !(0.0..1.0).contains(&block_ratio) {
        return Err(MapfError::invalid(format!(
            "block_ratio must lie in [0, 1), got {block_ratio}"
        )));
    }
    let size = width * height;
    let blocked_count = (block_ratio * size as f64).round() as usize;
    if size - blocked_count.min(size) < n.max(1) {
        return Err(MapfError::Generation(format!(
            "{} free cells cannot hold {n} agents",
            size - blocked_count.min(size)
        )));
    }
    let mut rng = rng(seed);
    let mut cells: Vec<Cell> = (0..size).map(|i| Cell::new(i % width, i / width)).collect();
    for _ in 0..RANDOM_ATTEMPTS {
        shuffle(&mut rng, &mut cells);
        let grid = GridMap::new(width, height, cells[..blocked_count].iter().copied())?;
        let mut free: Vec<Cell> = grid.free_cells().collect();
        shuffle(&mut rng, &mut free);
        let starts = free[..n].to_vec();
        shuffle(&mut rng, &mut free);
        let goals = free[..n].to_vec();
        let label = grid.components();
        if starts
            .iter()
            .zip(&goals)
            .all(|(&s, &g)| label[grid.index(s)] == label[grid.index(g)])
        {
            return Ok(Instance::labeled(grid, starts.into_iter().zip(goals)));
        }
    }
    Err(MapfError::Generation(format!(
        "no connected layout after {RANDOM_ATTEMPTS} attempts"
    )))
}
