use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ergodic::ShiftMeasure;
use crate::error::{Error, Result};
use crate::systems::coded::CodedSystem;

/// Points per independently seeded chunk; fixed so output does not depend on thread count.
const CHUNK: usize = 4096;

/// Points in `R^d`, stored row by row, with the first code letter of each point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    d: usize,
    coords: Vec<f64>,
    first: Vec<u32>,
    error_bound: f64,
}

impl PointCloud {
    /// Cloud without code letters (every point gets letter 0).
    pub fn from_points(d: usize, coords: Vec<f64>) -> Result<Self> {
        if d == 0 || !coords.len().is_multiple_of(d) {
            return Err(Error::InvalidArgument(format!("{} coordinates do not split into points of dimension {d}", coords.len())));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        let n = coords.len() / d;
        Ok(PointCloud { d, coords, first: vec![0; n], error_bound: 0.0 })
    }

    pub(crate) fn from_parts(d: usize, coords: Vec<f64>, first: Vec<u32>, error_bound: f64) -> Self {
        debug_assert_eq!(coords.len(), d * first.len());
        PointCloud { d, coords, first, error_bound }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn first_letter(&self, i: usize) -> usize {
        self.first[i] as usize
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.d)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Bound on the distance from each point to the set being sampled.
    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    /// First `n` points.
    pub fn truncated(&self, n: usize) -> PointCloud {
        let n = n.min(self.len());
        PointCloud { d: self.d, coords: self.coords[..n * self.d].to_vec(), first: self.first[..n].to_vec(), error_bound: self.error_bound }
    }

    /// Lower and upper corners of the bounding box.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.d];
        let mut hi = vec![f64::NEG_INFINITY; self.d];
        for p in self.points() {
            for k in 0..self.d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// One point per row, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = (0..self.d).map(|k| format!("x{k}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for p in self.points() {
            let row: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Samples the push-forward of `m` under the coding map by random iteration.
///
/// Points are grown on the left of their code, so the letters are drawn from
/// the time reversal of `m`. Every chunk of points restarts from the domain
/// center with its own stream, runs `burn_in` steps, then emits one point per
/// step.
pub fn chaos_game<S: CodedSystem + ?Sized>(sys: &S, m: &ShiftMeasure, n_points: usize, burn_in: usize, seed: u64) -> Result<PointCloud> {
    if n_points == 0 || burn_in == 0 {
        return Err(Error::InvalidArgument("chaos game needs n_points >= 1 and burn_in >= 1".into()));
    }
    m.check_support(sys.code_space())?;
    let d = sys.dim();
    let sampler = m.reversed_sampler();
    let center = sys.domain().center();
    let mut coords = vec![0.0; n_points * d];
    let mut first = vec![0u32; n_points];
    coords
        .par_chunks_mut(CHUNK * d)
        .zip(first.par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(c, (xs, fs))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut z = center.clone();
            let mut buf = vec![0.0; d];
            let mut prev = sampler.first(&mut rng);
            let step = |z: &mut Vec<f64>, buf: &mut Vec<f64>, prev: &mut usize, rng: &mut ChaCha8Rng| {
                let a = sampler.next(*prev, rng);
                sys.branch(a, *prev).eval(z, buf);
                std::mem::swap(z, buf);
                *prev = a;
            };
            for _ in 0..burn_in {
                step(&mut z, &mut buf, &mut prev, &mut rng);
            }
            for (x, f) in xs.chunks_exact_mut(d).zip(fs.iter_mut()) {
                step(&mut z, &mut buf, &mut prev, &mut rng);
                x.copy_from_slice(&z);
                *f = prev as u32;
            }
        });
    let error_bound = sys.contraction().powi(burn_in as i32) * sys.domain().diameter();
    Ok(PointCloud::from_parts(d, coords, first, error_bound))
}
