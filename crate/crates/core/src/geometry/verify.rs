use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{base_cover, extend_cover, BallCover};
use crate::shift::Word;
use crate::svf::MAX_DIM;
use crate::systems::{CodedSystem, PointCloud};

/// Relative slack on ball radii for rounding in the construction.
pub const RADIUS_RTOL: f64 = 1e-9;
/// Radius factor of the negative control in [`cover_survey`].
pub const CONTROL_SCALE: f64 = 0.5;

/// Centers bucketed on a grid with mesh equal to the search radius.
struct BallIndex {
    d: usize,
    lo: Vec<f64>,
    mesh: f64,
    dims: Vec<usize>,
    /// Cell start offsets into `order` (dense grids only).
    starts: Option<Vec<u32>>,
    keys: Vec<usize>,
    /// Centers sorted by cell, row-major.
    sorted: Vec<f64>,
}

const MAX_DENSE_CELLS: f64 = 4_194_304.0;

impl BallIndex {
    fn new(cover: &BallCover, mesh: f64) -> Option<Self> {
        let d = cover.dim;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for c in cover.centers() {
            for k in 0..d {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        let extents: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| ((b - a) / mesh).floor() + 1.0).collect();
        if extents.iter().product::<f64>() > usize::MAX as f64 / 4.0 {
            return None;
        }
        let dims: Vec<usize> = extents.iter().map(|&e| e as usize).collect();
        let cells: f64 = extents.iter().product();
        let mut index = BallIndex { d, lo, mesh, dims, starts: None, keys: Vec::new(), sorted: Vec::new() };
        let mut pairs: Vec<(usize, u32)> = cover.centers().enumerate().map(|(i, c)| (index.key(&index.cell_of(c)[..d]), i as u32)).collect();
        pairs.sort_unstable();
        index.sorted = pairs.iter().flat_map(|&(_, i)| cover.center(i as usize).iter().copied()).collect();
        index.keys = pairs.into_iter().map(|p| p.0).collect();
        if cells <= MAX_DENSE_CELLS.max(4.0 * cover.len() as f64) {
            let n = cells as usize;
            let mut starts = vec![0u32; n + 1];
            for &k in &index.keys {
                starts[k + 1] += 1;
            }
            for i in 0..n {
                starts[i + 1] += starts[i];
            }
            index.starts = Some(starts);
        }
        Some(index)
    }

    fn cell_of(&self, p: &[f64]) -> [i64; MAX_DIM] {
        let mut cell = [0i64; MAX_DIM];
        for k in 0..self.d {
            cell[k] = ((p[k] - self.lo[k]) / self.mesh).floor() as i64;
        }
        cell
    }

    fn key(&self, cell: &[i64]) -> usize {
        let mut key = 0usize;
        for k in (0..self.d).rev() {
            key = key * self.dims[k] + cell[k] as usize;
        }
        key
    }

    fn bucket(&self, key: usize) -> &[f64] {
        let (a, b) = match &self.starts {
            Some(s) => (s[key] as usize, s[key + 1] as usize),
            None => (self.keys.partition_point(|&x| x < key), self.keys.partition_point(|&x| x <= key)),
        };
        &self.sorted[a * self.d..b * self.d]
    }

    fn hits_cell(&self, cell: &[i64], p: &[f64], r2: f64) -> bool {
        if (0..self.d).any(|k| cell[k] < 0 || cell[k] >= self.dims[k] as i64) {
            return false;
        }
        self.bucket(self.key(cell))
            .chunks_exact(self.d)
            .any(|q| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2)
    }

    fn any_within(&self, p: &[f64], r2: f64) -> bool {
        let centre = self.cell_of(p);
        if self.hits_cell(&centre[..self.d], p, r2) {
            return true;
        }
        let mut cell = centre;
        for code in 0..3usize.pow(self.d as u32) {
            let mut c = code;
            for k in 0..self.d {
                cell[k] = centre[k] + (c % 3) as i64 - 1;
                c /= 3;
            }
            if cell != centre && self.hits_cell(&cell[..self.d], p, r2) {
                return true;
            }
        }
        false
    }
}

/// Fraction of cloud points inside the union of the balls, with radii
/// enlarged by the cloud's sampling error.
pub fn verify_cover(cover: &BallCover, cloud: &PointCloud) -> f64 {
    if cloud.is_empty() {
        return 1.0;
    }
    if cover.is_empty() || cloud.dim() != cover.dim {
        return 0.0;
    }
    let r = cover.radius * (1.0 + RADIUS_RTOL) + cloud.error_bound();
    let r2 = r * r;
    let hits = match BallIndex::new(cover, r) {
        Some(index) => cloud.points().filter(|p| index.any_within(p, r2)).count(),
        None => cloud
            .points()
            .filter(|p| cover.centers().any(|q| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2))
            .count(),
    };
    hits as f64 / cloud.len() as f64
}

/// Points of `[a v]` from points of `[v]` (`v` empty: the whole cloud).
fn extend_points<S: CodedSystem + ?Sized>(sys: &S, v: &Word, pts: &PointCloud, a: usize) -> PointCloud {
    let d = sys.dim();
    let next = match v.first() {
        Some(n) => n,
        None if sys.uses_lookahead() => {
            let idx: Vec<usize> = (0..pts.len()).filter(|&i| pts.first_letter(i) == a).collect();
            let coords = idx.iter().flat_map(|&i| pts.point(i).iter().copied()).collect();
            return PointCloud::from_parts(d, coords, vec![a as u32; idx.len()], pts.error_bound());
        }
        None => a,
    };
    let f = sys.branch(a, next);
    let mut coords = vec![0.0; pts.len() * d];
    for (p, out) in pts.points().zip(coords.chunks_exact_mut(d)) {
        f.eval(p, out);
    }
    let err = pts.error_bound() * sys.contraction();
    PointCloud::from_parts(d, coords, vec![a as u32; pts.len()], err)
}

/// Images of `base` in the cylinder of `word`: `f_word` applied to every base
/// point (for a repeller, to the base points in the last partition element).
pub fn cylinder_cloud<S: CodedSystem + ?Sized>(sys: &S, word: &Word, base: &PointCloud) -> Result<PointCloud> {
    sys.code_space().check_admissible(word)?;
    if base.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: base.dim() });
    }
    let mut pts = base.clone();
    let mut v = Word::empty();
    for &a in word.letters().iter().rev() {
        pts = extend_points(sys, &v, &pts, a);
        v = Word::new(std::iter::once(a).chain(v.letters().iter().copied()).collect());
    }
    Ok(pts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCheck {
    pub word: Word,
    pub balls: usize,
    pub count_bound: f64,
    pub radius: f64,
    pub points: usize,
    pub fraction: f64,
    /// Fraction covered after shrinking radii by [`CONTROL_SCALE`].
    pub control_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSurvey {
    pub max_len: usize,
    pub k: usize,
    pub words: Vec<CoverCheck>,
    pub min_fraction: f64,
    pub max_control_fraction: f64,
}

/// Builds and checks covers of every admissible word of length `<= max_len`
/// by a depth-first walk over suffixes, so that each cover and each cylinder
/// cloud is obtained from its parent in one step. Each cover is also checked
/// with shrunken radii as a negative control.
pub fn cover_survey<S: CodedSystem + ?Sized>(sys: &S, base: &PointCloud, max_len: usize, k: usize) -> Result<CoverSurvey> {
    if base.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: base.dim() });
    }
    let mut words = Vec::new();
    let root = base_cover(sys, k)?;
    walk(sys, &root, base, max_len, &mut words)?;
    let min_fraction = words.iter().map(|c| c.fraction).fold(1.0, f64::min);
    let max_control_fraction = words.iter().map(|c| c.control_fraction).fold(0.0, f64::max);
    Ok(CoverSurvey { max_len, k, words, min_fraction, max_control_fraction })
}

fn walk<S: CodedSystem + ?Sized>(
    sys: &S,
    cover: &BallCover,
    pts: &PointCloud,
    depth: usize,
    out: &mut Vec<CoverCheck>,
) -> Result<()> {
    out.push(CoverCheck {
        word: cover.word.clone(),
        balls: cover.len(),
        count_bound: cover.certified_count_bound(),
        radius: cover.radius,
        points: pts.len(),
        fraction: verify_cover(cover, pts),
        control_fraction: verify_cover(&cover.scaled(CONTROL_SCALE), pts),
    });
    if depth == 0 {
        return Ok(());
    }
    let x = sys.code_space();
    for a in 0..x.alphabet_size() {
        if let Some(n) = cover.word.first() {
            if !x.allows(a, n) {
                continue;
            }
        }
        let child = extend_cover(sys, cover, a)?;
        let child_pts = extend_points(sys, &cover.word, pts, a);
        walk(sys, &child, &child_pts, depth - 1, out)?;
    }
    Ok(())
}
