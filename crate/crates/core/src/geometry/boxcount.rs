use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pressure::least_squares;
use crate::systems::PointCloud;

/// Deltas dropped from the large end of the series before fitting.
pub const DROP_LARGE: usize = 1;
/// Deltas dropped from the small end.
pub const DROP_SMALL: usize = 2;
/// Default grids stop once `N > n_points / SATURATION`.
pub const SATURATION: usize = 16;
const MAX_DYADIC_LEVEL: i32 = 40;

/// Number of occupied cells of the grid of mesh `delta` anchored at `origin`.
pub fn box_count(cloud: &PointCloud, delta: f64, origin: &[f64]) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if origin.len() != cloud.dim() {
        return Err(Error::DimensionMismatch { expected: cloud.dim(), got: origin.len() });
    }
    if cloud.is_empty() {
        return Ok(0);
    }
    let d = cloud.dim();
    let cell = |p: &[f64], k: usize| ((p[k] - origin[k]) / delta).floor() as i64;
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for p in cloud.points() {
        for k in 0..d {
            let c = cell(p, k);
            lo[k] = lo[k].min(c);
            hi[k] = hi[k].max(c);
        }
    }
    let bits: f64 = lo.iter().zip(&hi).map(|(a, b)| ((b - a) as f64 + 1.0).log2()).sum();
    if bits < 127.0 {
        let dims: Vec<u128> = lo.iter().zip(&hi).map(|(a, b)| (b - a) as u128 + 1).collect();
        let mut keys: Vec<u128> = cloud
            .coords()
            .par_chunks_exact(d)
            .map(|p| (0..d).rev().fold(0u128, |acc, k| acc * dims[k] + (cell(p, k) - lo[k]) as u128))
            .collect();
        keys.par_sort_unstable();
        keys.dedup();
        Ok(keys.len())
    } else {
        let mut cells: Vec<Vec<i64>> = cloud.coords().par_chunks_exact(d).map(|p| (0..d).map(|k| cell(p, k)).collect()).collect();
        cells.par_sort_unstable();
        cells.dedup();
        Ok(cells.len())
    }
}

/// Box counts over a decreasing grid of deltas and the fitted slope of
/// `log N` against `log(1/delta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCountSeries {
    /// `(delta, N)` with deltas strictly decreasing.
    pub entries: Vec<(f64, usize)>,
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual of the fit.
    pub residual: f64,
    /// Half-open index range of `entries` used in the fit.
    pub fit_window: (usize, usize),
}

impl BoxCountSeries {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "delta,N")?;
        for (delta, n) in &self.entries {
            writeln!(w, "{delta:.16e},{n}")?;
        }
        Ok(())
    }
}

/// Box-counting dimension estimate. Without an explicit grid, deltas are
/// `L 2^-j` for the largest side `L` of `domain` (`[origin, origin + L]`),
/// stopping before the counts saturate or the sampling error reaches a tenth
/// of the mesh.
pub fn box_dimension(cloud: &PointCloud, delta_grid: Option<&[f64]>, origin: &[f64], side: f64) -> Result<BoxCountSeries> {
    if cloud.is_empty() {
        return Err(Error::InvalidArgument("empty point cloud".into()));
    }
    let err = cloud.error_bound();
    let mut entries = Vec::new();
    match delta_grid {
        Some(grid) => {
            let mut g = grid.to_vec();
            g.sort_by(|a, b| b.total_cmp(a));
            g.dedup();
            if let Some(&small) = g.last() {
                if !(small > 0.0) {
                    return Err(Error::InvalidArgument("deltas must be positive".into()));
                }
                if small < 10.0 * err {
                    return Err(Error::InsufficientResolution(format!(
                        "smallest delta {small} is below ten times the sampling error {err}"
                    )));
                }
            }
            for delta in g {
                entries.push((delta, box_count(cloud, delta, origin)?));
            }
        }
        None => {
            if !(side > 0.0) {
                return Err(Error::InvalidArgument(format!("side must be positive, got {side}")));
            }
            let cap = (cloud.len() / SATURATION).max(1);
            for j in 1..=MAX_DYADIC_LEVEL {
                let delta = side * 2f64.powi(-j);
                if delta < 10.0 * err {
                    break;
                }
                let n = box_count(cloud, delta, origin)?;
                if n > cap {
                    break;
                }
                entries.push((delta, n));
            }
        }
    }
    let fit_window = (DROP_LARGE, entries.len().saturating_sub(DROP_SMALL));
    if fit_window.1 < fit_window.0 + 3 {
        return Err(Error::InsufficientResolution(format!(
            "{} usable deltas; the fit needs at least {}",
            entries.len(),
            DROP_LARGE + DROP_SMALL + 3
        )));
    }
    let xy: Vec<(f64, f64)> = entries[fit_window.0..fit_window.1].iter().map(|&(delta, n)| (-delta.ln(), (n as f64).ln())).collect();
    let (slope, intercept) = least_squares(&xy);
    let residual = (xy.iter().map(|(x, y)| (y - slope * x - intercept).powi(2)).sum::<f64>() / xy.len() as f64).sqrt();
    Ok(BoxCountSeries { entries, slope, intercept, residual, fit_window })
}
