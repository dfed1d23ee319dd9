//! Placement of logical weight tiles onto physical BRAM tiles, Vivado-style
//! constraint emission, and the operating-voltage tradeoff metric.
//!
//! Strategies:
//! - `Default`: seeded uniform draw over every physical tile.
//! - `IcbpN(n)`: the last `n` weight sets (the inner, output-side layers)
//!   go to tiles of the low-vulnerability cluster, drawn at random within
//!   the class; the remaining layers fall back to the uniform draw over
//!   the leftover tiles.
//! - `WorstCase`: inner layers into the high-vulnerability cluster first,
//!   overflowing into mid then low.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::ClusterReport;
use crate::nn::model::LayerSpec;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementStrategy {
    Default,
    IcbpN(u32),
    WorstCase,
}

impl std::fmt::Display for PlacementStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlacementStrategy::Default => write!(f, "default"),
            PlacementStrategy::IcbpN(n) => write!(f, "icbp-{n}"),
            PlacementStrategy::WorstCase => write!(f, "worst-case"),
        }
    }
}

impl std::str::FromStr for PlacementStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<PlacementStrategy> {
        match s {
            "default" => Ok(PlacementStrategy::Default),
            "worst-case" => Ok(PlacementStrategy::WorstCase),
            _ => {
                let n = s
                    .strip_prefix("icbp-")
                    .and_then(|n| n.parse::<u32>().ok())
                    .filter(|n| *n >= 1);
                n.map(PlacementStrategy::IcbpN).ok_or_else(|| Error::InvalidConfig {
                    reason: format!(
                        "unknown placement strategy {s:?} \
                         (expected default, icbp-N with N>=1, or worst-case)"
                    ),
                })
            }
        }
    }
}

impl Serialize for PlacementStrategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PlacementStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Injective map from logical weight tiles to physical tile indices, with
/// the class pools it was drawn against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementAssignment {
    pub strategy: PlacementStrategy,
    pub mapping: Vec<u32>,
    /// Physical tile ids per vulnerability class, ascending: low, mid, high.
    pub class_pools: [Vec<u32>; 3],
}

impl PlacementAssignment {
    /// Logical tile i at physical tile i; empty pools.
    pub fn identity(total_blocks: u32) -> PlacementAssignment {
        PlacementAssignment {
            strategy: PlacementStrategy::Default,
            mapping: (0..total_blocks).collect(),
            class_pools: [Vec::new(), Vec::new(), Vec::new()],
        }
    }

    pub fn validate(&self, num_physical: u32) -> Result<()> {
        let mut seen = HashSet::new();
        for (l, p) in self.mapping.iter().enumerate() {
            if *p >= num_physical {
                return Err(Error::Geometry {
                    reason: format!("logical tile {l} placed at {p}, chip has {num_physical}"),
                });
            }
            if !seen.insert(*p) {
                return Err(Error::Geometry {
                    reason: format!("physical tile {p} assigned twice"),
                });
            }
        }
        Ok(())
    }

    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string(self).expect("assignment serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn from_json_file(path: &Path) -> Result<PlacementAssignment> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }
}

fn shuffled<R: Rng>(mut ids: Vec<u32>, rng: &mut R) -> Vec<u32> {
    for i in (1..ids.len()).rev() {
        ids.swap(i, rng.random_range(0..=i));
    }
    ids
}

fn class_pools(clusters: &ClusterReport) -> [Vec<u32>; 3] {
    let mut pools: [Vec<u32>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (id, label) in clusters.labels.iter().enumerate() {
        pools[(*label as usize).min(2)].push(id as u32);
    }
    pools
}

/// Builds an assignment for the given strategy; deterministic in
/// `(clusters, layers, strategy, seed_value)`.
pub fn assign(
    clusters: &ClusterReport,
    layers: &[LayerSpec],
    strategy: PlacementStrategy,
    seed_value: u64,
) -> Result<PlacementAssignment> {
    let num_physical = clusters.labels.len() as u32;
    let layer_blocks: Vec<u32> = layers.iter().map(|l| l.bram_count()).collect();
    let total: u32 = layer_blocks.iter().sum();
    if total == 0 {
        return Err(Error::InvalidConfig { reason: "no weight tiles to place".into() });
    }
    if total > num_physical {
        return Err(Error::CapacityExceeded {
            what: "physical BRAM tiles".into(),
            needed: total as usize,
            available: num_physical as usize,
        });
    }
    let pools = class_pools(clusters);
    let all: Vec<u32> = (0..num_physical).collect();
    let base = shuffled(all, &mut seed::stream(seed::derive(seed_value, seed::TAG_PLACE, 0)));

    let mapping = match strategy {
        PlacementStrategy::Default => base[..total as usize].to_vec(),
        PlacementStrategy::IcbpN(n) => {
            let protected_layers = (n as usize).min(layer_blocks.len());
            let split = layer_blocks.len() - protected_layers;
            let needed: u32 = layer_blocks[split..].iter().sum();
            if (pools[0].len() as u32) < needed {
                return Err(Error::CapacityExceeded {
                    what: "low-vulnerable BRAM pool".into(),
                    needed: needed as usize,
                    available: pools[0].len(),
                });
            }
            let low = shuffled(
                pools[0].clone(),
                &mut seed::stream(seed::derive(seed_value, seed::TAG_PLACE, 1)),
            );
            let picks = &low[..needed as usize];
            let picked: HashSet<u32> = picks.iter().copied().collect();
            // Unprotected layers keep the uniform draw, skipping tiles the
            // protected set claimed.
            let unprotected: u32 = layer_blocks[..split].iter().sum();
            let mut mapping: Vec<u32> = base
                .iter()
                .filter(|p| !picked.contains(p))
                .take(unprotected as usize)
                .copied()
                .collect();
            mapping.extend_from_slice(picks);
            mapping
        }
        PlacementStrategy::WorstCase => {
            let mut rng = seed::stream(seed::derive(seed_value, seed::TAG_PLACE, 2));
            let mut order = shuffled(pools[2].clone(), &mut rng);
            order.extend(shuffled(pools[1].clone(), &mut rng));
            order.extend(shuffled(pools[0].clone(), &mut rng));

            // Inner layers claim the most vulnerable tiles first.
            let mut mapping = vec![0u32; total as usize];
            let mut next = 0usize;
            let mut block_start: Vec<u32> = Vec::with_capacity(layer_blocks.len());
            let mut acc = 0;
            for b in &layer_blocks {
                block_start.push(acc);
                acc += b;
            }
            for j in (0..layer_blocks.len()).rev() {
                for s in 0..layer_blocks[j] {
                    mapping[(block_start[j] + s) as usize] = order[next];
                    next += 1;
                }
            }
            mapping
        }
    };

    let assignment = PlacementAssignment { strategy, mapping, class_pools: pools };
    assignment.validate(num_physical)?;
    Ok(assignment)
}

/// Physical tile index to a grid site name, column-major: `cols` columns,
/// `ceil(num/cols)` tiles per column.
pub fn site_name(idx: u32, num_brams: u32, grid_cols: u32) -> String {
    let rows_per_col = num_brams.div_ceil(grid_cols);
    format!("RAMB18_X{}Y{}", idx / rows_per_col, idx % rows_per_col)
}

/// Emits Vivado-style pblock constraints: one pblock per vulnerability
/// class holding that class's physical sites and the logical tiles
/// assigned into them. Output is canonical (ascending ids) and ends with
/// a newline; empty pools keep the three-command shape and gain a warning
/// comment.
pub fn emit_constraints(
    assignment: &PlacementAssignment,
    num_brams: u32,
    grid_cols: u32,
) -> String {
    let mut out = String::new();
    for (ci, class) in ["low", "mid", "high"].iter().enumerate() {
        let name = format!("{class}-vulnerable_pblock");
        let pool = &assignment.class_pools[ci];
        out.push_str(&format!("create_pblock {name}\n"));
        if pool.is_empty() {
            out.push_str(&format!("# warning: {name} has no physical tiles\n"));
        }
        let sites: Vec<String> =
            pool.iter().map(|p| site_name(*p, num_brams, grid_cols)).collect();
        out.push_str(&format!("resize_pblock {name} -add {{{}}}\n", sites.join(" ")));
        let members: HashSet<u32> = pool.iter().copied().collect();
        let cells: Vec<String> = assignment
            .mapping
            .iter()
            .enumerate()
            .filter(|(_, p)| members.contains(p))
            .map(|(l, _)| format!("{{l-BRAM[{l}]}}"))
            .collect();
        if cells.is_empty() {
            out.push_str(&format!("add_cells_to_pblock {name} [list]\n"));
        } else {
            out.push_str(&format!(
                "add_cells_to_pblock {name} [list {}]\n",
                cells.join(" ")
            ));
        }
    }
    out
}

/// Bounding-box area of the assigned sites in grid coordinates; a spatial
/// dispersion proxy reported alongside each assignment (no timing model
/// exists here).
pub fn dispersion(assignment: &PlacementAssignment, num_brams: u32, grid_cols: u32) -> u64 {
    let rows_per_col = num_brams.div_ceil(grid_cols);
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (u32::MAX, 0u32, u32::MAX, 0u32);
    for p in &assignment.mapping {
        let (x, y) = (p / rows_per_col, p % rows_per_col);
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    if assignment.mapping.is_empty() {
        return 0;
    }
    (max_x - min_x + 1) as u64 * (max_y - min_y + 1) as u64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffRow {
    pub voltage_mv: u32,
    pub norm_power: f64,
    pub norm_error: f64,
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tradeoff {
    pub voltage_mv: u32,
    /// Rows in descending voltage order.
    pub rows: Vec<TradeoffRow>,
}

/// Finds the voltage minimizing normalized power × normalized error, both
/// series normalized at the highest grid voltage; ties break toward the
/// higher voltage.
pub fn optimal_voltage(levels: &[u32], power_w: &[f64], error_pct: &[f64]) -> Result<Tradeoff> {
    if levels.is_empty() || levels.len() != power_w.len() || levels.len() != error_pct.len() {
        return Err(Error::GridMismatch {
            reason: format!(
                "{} levels, {} power values, {} error values",
                levels.len(),
                power_w.len(),
                error_pct.len()
            ),
        });
    }
    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by_key(|i| std::cmp::Reverse(levels[*i]));
    for w in order.windows(2) {
        if levels[w[0]] == levels[w[1]] {
            return Err(Error::GridMismatch {
                reason: format!("duplicate voltage level {} mV", levels[w[0]]),
            });
        }
    }
    for i in 0..levels.len() {
        if !(power_w[i].is_finite() && power_w[i] > 0.0)
            || !(error_pct[i].is_finite() && error_pct[i] > 0.0)
        {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "series values at {} mV must be positive and finite",
                    levels[i]
                ),
            });
        }
    }
    let ref_i = order[0];
    let mut rows = Vec::with_capacity(order.len());
    let mut best: Option<(f64, u32)> = None;
    for i in order {
        let row = TradeoffRow {
            voltage_mv: levels[i],
            norm_power: power_w[i] / power_w[ref_i],
            norm_error: error_pct[i] / error_pct[ref_i],
            product: (power_w[i] / power_w[ref_i]) * (error_pct[i] / error_pct[ref_i]),
        };
        if best.map_or(true, |(p, _)| row.product < p) {
            best = Some((row.product, row.voltage_mv));
        }
        rows.push(row);
    }
    Ok(Tradeoff { voltage_mv: best.unwrap().1, rows })
}
