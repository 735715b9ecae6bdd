use std::collections::HashSet;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shift::Word;
use crate::svf::svd;
use crate::systems::CodedSystem;
use crate::Matrix;

/// Equal-radius balls covering the image of a cylinder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCover {
    pub word: Word,
    pub dim: usize,
    /// Ball centers, row-major.
    pub centers: Vec<f64>,
    /// Common radius of every ball, `r_0 prod H`.
    pub radius: f64,
    /// `log(C_1 prod G)`.
    pub log_count_bound: f64,
    /// `log C_1`, the size of the base cover.
    pub log_c1: f64,
    /// Order of the singular value function used by each step.
    pub k: usize,
    /// Image of the domain center under the cylinder map; Jacobians of the
    /// next step are taken here.
    pub anchor: Vec<f64>,
}

impl BallCover {
    pub fn len(&self) -> usize {
        self.centers.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    pub fn centers(&self) -> std::slice::ChunksExact<'_, f64> {
        self.centers.chunks_exact(self.dim)
    }

    pub fn certified_count_bound(&self) -> f64 {
        self.log_count_bound.exp()
    }

    /// Same centers, radius multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> BallCover {
        BallCover { radius: self.radius * factor, ..self.clone() }
    }

    /// CSV with columns `x0,..,x{d-1},radius`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let head: Vec<String> = (0..self.dim).map(|k| format!("x{k}")).collect();
        writeln!(w, "{},radius", head.join(","))?;
        for c in self.centers() {
            for x in c {
                write!(w, "{x:.16e},")?;
            }
            writeln!(w, "{:.16e}", self.radius)?;
        }
        Ok(())
    }
}

/// Tiling of `J B(0, sqrt(d) r)` for a fixed Jacobian.
struct Tiling {
    offsets: Vec<f64>,
    /// `alpha_{k+1}`.
    h: f64,
    log_g: f64,
}

fn tiling(j: &Matrix, r: f64, k: usize) -> Result<Tiling> {
    let d = j.dim();
    if k >= d {
        return Err(Error::InvalidArgument(format!("k = {k} must be below the dimension {d}")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let f = svd(j)?;
    let la = f.spectrum.log_alpha();
    let h = la[k].exp();
    let log_g = d as f64 * (2.0 * d as f64).ln() + la[..k].iter().sum::<f64>() - k as f64 * la[k];
    let side = 2.0 / (d as f64).sqrt() * h * r;
    let counts: Vec<usize> = la.iter().map(|&l| ((d as f64 * (l - la[k]).exp() - 1e-9).ceil() as usize).max(1)).collect();
    let total: usize = counts.iter().product();
    let mut offsets = Vec::with_capacity(total * d);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        for row in 0..d {
            let mut x = 0.0;
            for (i, &m) in counts.iter().enumerate() {
                x += (idx[i] as f64 - 0.5 * (m as f64 - 1.0)) * side * f.u.get(row, i);
            }
            offsets.push(x);
        }
        for (i, &m) in counts.iter().enumerate() {
            idx[i] += 1;
            if idx[i] < m {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(Tiling { offsets, h, log_g })
}

/// Balls of radius `alpha_{k+1}(J) r` covering `center + J B(0, sqrt(d) r)`:
/// the ellipsoid is boxed in its singular frame and the box is tiled by cubes
/// of side `2 alpha_{k+1} r / sqrt(d)`. At most
/// `(2d)^d phi^k(J) / alpha_{k+1}(J)^k` balls.
pub fn ellipsoid_cover(j: &Matrix, center: &[f64], r: f64, k: usize) -> Result<BallCover> {
    let d = j.dim();
    if center.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: center.len() });
    }
    let t = tiling(j, r, k)?;
    let centers = t.offsets.chunks_exact(d).flat_map(|o| o.iter().zip(center).map(|(a, b)| a + b)).collect();
    Ok(BallCover {
        word: Word::empty(),
        dim: d,
        centers,
        radius: t.h * r,
        log_count_bound: t.log_g,
        log_c1: 0.0,
        k,
        anchor: center.to_vec(),
    })
}

/// The cover of the whole attractor the recursion starts from: one ball
/// enclosing the domain.
pub fn base_cover<S: CodedSystem + ?Sized>(sys: &S, k: usize) -> Result<BallCover> {
    if k >= sys.dim() {
        return Err(Error::InvalidArgument(format!("k = {k} must be below the dimension {}", sys.dim())));
    }
    let c = sys.domain().center();
    Ok(BallCover {
        word: Word::empty(),
        dim: sys.dim(),
        centers: c.clone(),
        radius: 0.5 * sys.domain().diameter(),
        log_count_bound: 0.0,
        log_c1: 0.0,
        k,
        anchor: c,
    })
}

fn dedup(centers: Vec<f64>, d: usize, quantum: f64) -> Vec<f64> {
    let mut seen = HashSet::with_capacity(centers.len() / d);
    let mut out = Vec::with_capacity(centers.len());
    for c in centers.chunks_exact(d) {
        let key: Vec<i64> = c.iter().map(|x| (x / quantum).round() as i64).collect();
        if seen.insert(key) {
            out.extend_from_slice(c);
        }
    }
    out
}

/// Cover of the cylinder `[a v]` from the cover of `[v]`: every ball is
/// pushed through the branch of `a` and re-covered with the tiling of the
/// Jacobian at the anchor.
pub fn extend_cover<S: CodedSystem + ?Sized>(sys: &S, cover: &BallCover, a: usize) -> Result<BallCover> {
    let mut letters = Vec::with_capacity(cover.word.len() + 1);
    letters.push(a);
    letters.extend_from_slice(cover.word.letters());
    let word = Word::new(letters);
    sys.code_space().check_admissible(&word)?;
    let next = match cover.word.first() {
        Some(n) => n,
        // Repeller cylinders of length one are partition elements.
        None if sys.uses_lookahead() => return Ok(BallCover { word, ..cover.clone() }),
        None => a,
    };
    let d = cover.dim;
    let f = sys.branch(a, next);
    let t = tiling(&f.jacobian(&cover.anchor), cover.radius, cover.k)?;
    let mut centers = Vec::with_capacity(cover.centers.len() * (t.offsets.len() / d));
    let mut image = vec![0.0; d];
    for c in cover.centers() {
        f.eval(c, &mut image);
        for o in t.offsets.chunks_exact(d) {
            centers.extend(o.iter().zip(&image).map(|(x, y)| x + y));
        }
    }
    let radius = t.h * cover.radius;
    Ok(BallCover {
        word,
        dim: d,
        centers: dedup(centers, d, radius * 1e-6),
        radius,
        log_count_bound: cover.log_count_bound + t.log_g,
        log_c1: cover.log_c1,
        k: cover.k,
        anchor: f.apply(&cover.anchor),
    })
}

/// Recursive cover of the cylinder image of `word`, built from the tail.
pub fn cover_word<S: CodedSystem + ?Sized>(sys: &S, word: &Word, k: usize) -> Result<BallCover> {
    sys.code_space().check_admissible(word)?;
    let mut cover = base_cover(sys, k)?;
    for &a in word.letters().iter().rev() {
        cover = extend_cover(sys, &cover, a)?;
    }
    Ok(cover)
}
