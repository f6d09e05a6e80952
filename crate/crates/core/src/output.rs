//! CSV/JSON writers. Numbers use Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::netmodel::{Allocation, NetworkInstance};
use crate::scenarios::SeriesRow;

pub const SERIES_HEADER: &str = "axis,mode,sum_rate_bps,iters,max_residual,wall_ms";

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn series_csv(rows: &[SeriesRow], record_timing: bool) -> String {
    let mut s = String::from(SERIES_HEADER);
    s.push('\n');
    for r in rows {
        let wall = if record_timing { r.wall_ms } else { 0.0 };
        let _ = writeln!(s, "{},{},{},{},{},{}", r.axis, r.mode, num(r.sum_rate_bps), r.iters, num(r.max_residual), num(wall));
    }
    s
}

pub fn series_json(rows: &[SeriesRow], record_timing: bool) -> Result<String> {
    let rows: Vec<SeriesRow> = rows
        .iter()
        .map(|r| SeriesRow { wall_ms: if record_timing { r.wall_ms } else { 0.0 }, ..r.clone() })
        .collect();
    serde_json::to_string_pretty(&rows).map_err(|e| crate::Error::Parse(e.to_string()))
}

pub const ALLOCATION_HEADER: &str = "cluster,link,kind,b_s2r,p_s2r,uav_x,uav_y,bandwidth,power";

/// One row per downlink, repeating the cluster-level fields.
pub fn allocation_csv(instance: &NetworkInstance, alloc: &Allocation) -> String {
    let mut s = String::from(ALLOCATION_HEADER);
    s.push('\n');
    for (n, (c, a)) in instance.clusters.iter().zip(&alloc.clusters).enumerate() {
        for (k, (u, l)) in c.users.iter().zip(&a.links).enumerate() {
            let _ = writeln!(
                s,
                "{n},{k},{},{},{},{},{},{},{}",
                u.kind.as_str(),
                num(a.b_s2r),
                num(a.p_s2r),
                num(a.uav_xy[0]),
                num(a.uav_xy[1]),
                num(l.bandwidth),
                num(l.power)
            );
        }
    }
    s
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}
