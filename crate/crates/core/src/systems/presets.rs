//! Ready-made systems used by the examples, configs and tests.

use crate::shift::{Subshift, TransferMatrix};
use crate::systems::coded::{IfsSystem, RepellerSystem};
use crate::systems::map::{Domain, Perturbation, SmoothMap};
use crate::Matrix;

fn affine_ifs(linear: &[Matrix], shifts: &[&[f64]], domain: Domain) -> IfsSystem {
    let maps = linear
        .iter()
        .zip(shifts)
        .map(|(a, b)| SmoothMap::affine(*a, b, &domain).expect("preset map"))
        .collect();
    IfsSystem::new(maps, domain).expect("preset system")
}

/// `{x/2, x/2 + 1/2}` on `[0, 1]`; the attractor is the whole interval.
pub fn binary_interval() -> IfsSystem {
    let h = Matrix::diag(&[0.5]).unwrap();
    affine_ifs(&[h, h], &[&[0.0], &[0.5]], Domain::unit_cube(1))
}

/// `{x/3, x/3 + 2/3}`, the middle-thirds Cantor set.
pub fn middle_thirds() -> IfsSystem {
    let t = Matrix::diag(&[1.0 / 3.0]).unwrap();
    affine_ifs(&[t, t], &[&[0.0], &[2.0 / 3.0]], Domain::unit_cube(1))
}

/// [`binary_interval`] coded by the golden-mean shift (no two consecutive 1s).
pub fn golden_mean_interval() -> IfsSystem {
    binary_interval().with_code_space(Subshift::golden_mean()).unwrap()
}

/// Three similarities of ratio 1/2 with vertices (0,0), (1,0), (0,1).
pub fn sierpinski() -> IfsSystem {
    let h = Matrix::diag(&[0.5, 0.5]).unwrap();
    affine_ifs(&[h, h, h], &[&[0.0, 0.0], &[0.5, 0.0], &[0.0, 0.5]], Domain::unit_cube(2))
}

const SHARED_DIAG_SHIFTS: [[f64; 2]; 3] = [[0.0, 0.0], [0.5, 0.0], [0.25, 2.0 / 3.0]];

/// Three affine maps sharing the linear part `diag(1/2, 1/3)`.
pub fn shared_diag() -> IfsSystem {
    let t = Matrix::diag(&[0.5, 1.0 / 3.0]).unwrap();
    let s = SHARED_DIAG_SHIFTS;
    affine_ifs(&[t, t, t], &[&s[0], &s[1], &s[2]], Domain::unit_cube(2))
}

/// [`shared_diag`] plus `epsilon * sin(pi z_{k+1})` on each coordinate,
/// on the enlarged box `[-0.1, 1.1]^2`.
pub fn perturbed_shared_diag(epsilon: f64) -> IfsSystem {
    let domain = Domain::new(vec![-0.1, -0.1], vec![1.1, 1.1]).unwrap();
    let t = Matrix::diag(&[0.5, 1.0 / 3.0]).unwrap();
    let p = Some(Perturbation::Sine { epsilon });
    let maps = SHARED_DIAG_SHIFTS.iter().map(|b| SmoothMap::new(t, b, p, &domain).expect("preset map")).collect();
    IfsSystem::new(maps, domain).expect("preset system")
}

/// Two maps sharing `diag(1/2, 1/3)` with translations (0,0) and (1/2, 2/3).
pub fn diag_pair() -> IfsSystem {
    let t = Matrix::diag(&[0.5, 1.0 / 3.0]).unwrap();
    affine_ifs(&[t, t], &[&[0.0, 0.0], &[0.5, 2.0 / 3.0]], Domain::unit_cube(2))
}

/// Inverse branches of `(x, y) -> (2x mod 1, 3y mod 1)` on the six rectangles
/// `[a/2, (a+1)/2] x [b/3, (b+1)/3]`, symbol `3a + b`, all transitions allowed.
pub fn toral_repeller() -> RepellerSystem {
    let domain = Domain::unit_cube(2);
    let t = Matrix::diag(&[0.5, 1.0 / 3.0]).unwrap();
    let mut branches = Vec::new();
    for i in 0..6 {
        let (a, b) = ((i / 3) as f64, (i % 3) as f64);
        for j in 0..6 {
            let f = SmoothMap::affine(t, &[a / 2.0, b / 3.0], &domain).unwrap();
            branches.push(((i, j), f));
        }
    }
    RepellerSystem::new(TransferMatrix::all_ones(6), branches, domain).expect("preset repeller")
}
