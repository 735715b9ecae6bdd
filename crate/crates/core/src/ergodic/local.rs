use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pressure::least_squares;
use crate::systems::PointCloud;

/// Default quantile of local slopes reported as the packing estimate.
pub const DEFAULT_QUANTILE: f64 = 0.5;
/// Smallest neighbour count used in a slope fit.
pub const DEFAULT_MIN_COUNT: usize = 64;
pub const DEFAULT_PROBES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalDimOptions {
    /// Radii, any order; built from the cloud when absent.
    pub r_grid: Option<Vec<f64>>,
    pub quantile: f64,
    pub min_count: usize,
    /// Number of cloud points at which slopes are measured.
    pub probes: usize,
}

impl Default for LocalDimOptions {
    fn default() -> Self {
        LocalDimOptions { r_grid: None, quantile: DEFAULT_QUANTILE, min_count: DEFAULT_MIN_COUNT, probes: DEFAULT_PROBES }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalDim {
    pub point_index: usize,
    pub slope: f64,
    pub fit_r_min: f64,
    pub fit_r_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalDims {
    pub points: Vec<LocalDim>,
    /// Quantile of the slopes.
    pub estimate: f64,
    pub quantile: f64,
    pub r_grid: Vec<f64>,
    /// Probe points skipped for lack of neighbours.
    pub skipped: usize,
}

impl LocalDims {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "point_index,slope,fit_r_min,fit_r_max")?;
        for p in &self.points {
            writeln!(w, "{},{:.16e},{:.16e},{:.16e}", p.point_index, p.slope, p.fit_r_min, p.fit_r_max)?;
        }
        Ok(())
    }
}

/// Geometric radii `r_max 2^{-j/2}`, `j = 0..=16`, with `r_max` a 32nd of
/// the bounding-box diagonal.
pub fn default_r_grid(cloud: &PointCloud) -> Vec<f64> {
    let (lo, hi) = cloud.bounds();
    let diag = lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
    let r_max = if diag > 0.0 { diag / 32.0 } else { 1.0 };
    (0..=16).map(|j| r_max * 2f64.powf(-0.5 * j as f64)).collect()
}

/// Empirical `q`-quantile (linear interpolation between order statistics).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos - pos.floor());
    if i + 1 < v.len() {
        v[i] * (1.0 - frac) + v[i + 1] * frac
    } else {
        v[i]
    }
}

/// Uniform grid over the cloud's bounding box with points sorted by cell.
struct CellIndex {
    d: usize,
    lo: Vec<f64>,
    mesh: f64,
    dims: Vec<u64>,
    keys: Vec<u64>,
    order: Vec<u32>,
}

impl CellIndex {
    fn new(cloud: &PointCloud, mesh: f64) -> Self {
        let d = cloud.dim();
        let (lo, hi) = cloud.bounds();
        let dims: Vec<u64> = lo.iter().zip(&hi).map(|(a, b)| ((b - a) / mesh).floor() as u64 + 1).collect();
        let mut pairs: Vec<(u64, u32)> = cloud.points().enumerate().map(|(i, p)| (Self::key_of(&lo, mesh, &dims, p), i as u32)).collect();
        pairs.par_sort_unstable();
        let (keys, order) = pairs.into_iter().unzip();
        CellIndex { d, lo, mesh, dims, keys, order }
    }

    fn cell(lo: &[f64], mesh: f64, dims: &[u64], p: &[f64], k: usize) -> u64 {
        (((p[k] - lo[k]) / mesh).floor().max(0.0) as u64).min(dims[k] - 1)
    }

    fn key_of(lo: &[f64], mesh: f64, dims: &[u64], p: &[f64]) -> u64 {
        let mut key = 0u64;
        for k in (0..p.len()).rev() {
            key = key * dims[k] + Self::cell(lo, mesh, dims, p, k);
        }
        key
    }

    /// Calls `f` with the index of every point in the cells around `p`.
    fn for_neighbours<F: FnMut(u32)>(&self, p: &[f64], mut f: F) {
        let centre: Vec<i64> = (0..self.d).map(|k| Self::cell(&self.lo, self.mesh, &self.dims, p, k) as i64).collect();
        let total = 3usize.pow(self.d as u32);
        'outer: for code in 0..total {
            let mut c = code;
            let mut key = 0u64;
            let mut idx = vec![0i64; self.d];
            for k in 0..self.d {
                idx[k] = centre[k] + (c % 3) as i64 - 1;
                c /= 3;
                if idx[k] < 0 || idx[k] >= self.dims[k] as i64 {
                    continue 'outer;
                }
            }
            for k in (0..self.d).rev() {
                key = key * self.dims[k] + idx[k] as u64;
            }
            let start = self.keys.partition_point(|&x| x < key);
            let end = self.keys.partition_point(|&x| x <= key);
            for &i in &self.order[start..end] {
                f(i);
            }
        }
    }
}

/// Upper local dimensions of the empirical measure at evenly spaced cloud
/// points: for each point, the slope of `log #B(x, r)` against `log r` over
/// the radii where the ball holds at least `min_count` other points.
pub fn local_dims(cloud: &PointCloud, opts: &LocalDimOptions) -> Result<LocalDims> {
    if cloud.is_empty() {
        return Err(Error::InvalidArgument("empty point cloud".into()));
    }
    if !(opts.quantile >= 0.0 && opts.quantile <= 1.0) {
        return Err(Error::InvalidArgument(format!("quantile {} outside [0, 1]", opts.quantile)));
    }
    let mut r_grid = opts.r_grid.clone().unwrap_or_else(|| default_r_grid(cloud));
    r_grid.sort_by(f64::total_cmp);
    r_grid.dedup();
    if r_grid.len() < 3 || r_grid[0] <= 0.0 {
        return Err(Error::InvalidArgument("r_grid needs at least three positive radii".into()));
    }
    if r_grid[0] < 10.0 * cloud.error_bound() {
        return Err(Error::InsufficientResolution(format!(
            "smallest radius {} is below ten times the sampling error {}",
            r_grid[0],
            cloud.error_bound()
        )));
    }
    let r_max = *r_grid.last().unwrap();
    let index = CellIndex::new(cloud, r_max);
    let n = cloud.len();
    let stride = (n / opts.probes.max(1)).max(1);
    let probe_ids: Vec<usize> = (0..n).step_by(stride).take(opts.probes.max(1)).collect();
    let r2: Vec<f64> = r_grid.iter().map(|r| r * r).collect();
    let results: Vec<Option<LocalDim>> = probe_ids
        .par_iter()
        .map(|&i| {
            let p = cloud.point(i);
            let mut bins = vec![0usize; r2.len()];
            index.for_neighbours(p, |j| {
                if j as usize == i {
                    return;
                }
                let q = cloud.point(j as usize);
                let dist2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                let k = r2.partition_point(|&x| x < dist2);
                if k < bins.len() {
                    bins[k] += 1;
                }
            });
            let mut count = 0;
            let mut fit = Vec::new();
            for (k, b) in bins.iter().enumerate() {
                count += b;
                if count >= opts.min_count {
                    fit.push((r_grid[k].ln(), (count as f64).ln()));
                }
            }
            if fit.len() < 3 {
                return None;
            }
            let (slope, _) = least_squares(&fit);
            Some(LocalDim { point_index: i, slope, fit_r_min: fit[0].0.exp(), fit_r_max: fit[fit.len() - 1].0.exp() })
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let points: Vec<LocalDim> = results.into_iter().flatten().collect();
    if points.is_empty() {
        return Err(Error::InsufficientResolution("no probe point has enough neighbours on the radius grid".into()));
    }
    let slopes: Vec<f64> = points.iter().map(|p| p.slope).collect();
    Ok(LocalDims { estimate: quantile(&slopes, opts.quantile), quantile: opts.quantile, points, r_grid, skipped })
}
