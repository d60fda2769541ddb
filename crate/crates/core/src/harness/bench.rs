use std::fmt::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adamix::adamix_dons;
use crate::dons::DonsState;
use crate::error::Result;

use super::generate::{generate, Model};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchRow {
    pub assets: usize,
    pub horizon: usize,
    pub mean_seconds: f64,
    pub p50_seconds: f64,
    pub p95_seconds: f64,
    pub max_active: usize,
    pub mean_active: f64,
    /// Heap and inline bytes of the expert states at the busiest round.
    pub peak_expert_bytes: usize,
}

/// Bytes held by one expert: the struct plus its vectors and the dense `V_t`.
fn expert_bytes(assets: usize) -> usize {
    let m = assets - 1;
    let floats = m * m + 2 * m + 3 * assets;
    std::mem::size_of::<DonsState>() + 8 * floats
}

/// Times full runs of the algorithm on i.i.d. Dirichlet markets for every `(d, T)` pair.
pub fn bench(assets: &[usize], horizons: &[usize], seed: u64) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &d in assets {
        for &horizon in horizons {
            let returns = generate(Model::IidDirichlet, d, horizon, seed)?;
            let mut meta = adamix_dons(d, horizon)?;
            let mut times = Vec::with_capacity(horizon);
            let mut active = Vec::with_capacity(horizon);
            for (i, r) in returns.iter().enumerate() {
                let start = Instant::now();
                let round = meta.meta_round(r).map_err(|e| e.at_round(i + 1))?;
                times.push(start.elapsed().as_secs_f64());
                active.push(round.active);
            }
            let mean_seconds = times.iter().sum::<f64>() / horizon as f64;
            times.sort_by(f64::total_cmp);
            let quantile = |q: f64| times[((q * (horizon - 1) as f64).round() as usize).min(horizon - 1)];
            let max_active = active.iter().copied().max().unwrap_or(0);
            rows.push(BenchRow {
                assets: d,
                horizon,
                mean_seconds,
                p50_seconds: quantile(0.5),
                p95_seconds: quantile(0.95),
                max_active,
                mean_active: active.iter().sum::<usize>() as f64 / horizon as f64,
                peak_expert_bytes: max_active * expert_bytes(d),
            });
        }
    }
    Ok(rows)
}

pub fn format_bench_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:>4} {:>7} {:>12} {:>12} {:>12} {:>10} {:>11} {:>12}",
        "d", "T", "mean_us", "p50_us", "p95_us", "max_active", "mean_active", "peak_bytes"
    )
    .unwrap();
    for r in rows {
        writeln!(
            out,
            "{:>4} {:>7} {:>12.2} {:>12.2} {:>12.2} {:>10} {:>11.2} {:>12}",
            r.assets,
            r.horizon,
            r.mean_seconds * 1e6,
            r.p50_seconds * 1e6,
            r.p95_seconds * 1e6,
            r.max_active,
            r.mean_active,
            r.peak_expert_bytes
        )
        .unwrap();
    }
    out
}
