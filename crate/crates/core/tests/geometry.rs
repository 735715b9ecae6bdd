use dimest::ergodic::ShiftMeasure;
use dimest::geometry::*;
use dimest::shift::Word;
use dimest::systems::{chaos_game, presets, CodedSystem, PointCloud};
use dimest::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIERPINSKI_SHIFTS: [[f64; 2]; 3] = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]];

/// Whether `p` lies within `tol` of the Sierpinski gasket spanned by
/// (0,0), (1,0), (0,1), resolved to `depth` levels.
fn in_gasket(p: [f64; 2], depth: u32, tol: f64) -> bool {
    if p[0] < -tol || p[1] < -tol || p[0] + p[1] > 1.0 + 2.0 * tol {
        return false;
    }
    depth == 0
        || SIERPINSKI_SHIFTS
            .iter()
            .any(|b| in_gasket([2.0 * (p[0] - b[0]), 2.0 * (p[1] - b[1])], depth - 1, 2.0 * tol))
}

/// Whether `p` lies in the gasket piece addressed by `word`.
fn in_cylinder(p: &[f64], word: &[usize], tol: f64) -> bool {
    let mut q = [p[0], p[1]];
    let mut t = tol;
    for &a in word {
        let b = SIERPINSKI_SHIFTS[a];
        q = [2.0 * (q[0] - b[0]), 2.0 * (q[1] - b[1])];
        t *= 2.0;
    }
    in_gasket(q, 12, t)
}

fn uniform_disc_points(rng: &mut ChaCha8Rng, center: &[f64], radius: f64, j: &Matrix, n: usize) -> Vec<Vec<f64>> {
    let d = center.len();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() > 1.0 {
            continue;
        }
        let mut y = vec![0.0; d];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = center[i] + radius * (0..d).map(|k| j.get(i, k) * x[k]).sum::<f64>();
        }
        out.push(y);
    }
    out
}

fn covered(cover: &BallCover, p: &[f64]) -> bool {
    let r2 = (cover.radius * (1.0 + 1e-12)).powi(2);
    cover.centers().any(|c| c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2)
}

#[test]
fn ellipsoid_cover_examples() {
    let c = [0.3, -0.2];
    let cov = ellipsoid_cover(&Matrix::identity(2), &c, 0.1, 0).unwrap();
    assert!(cov.len() <= 16 && (cov.radius - 0.1).abs() < 1e-15);
    assert!((cov.certified_count_bound() - 16.0).abs() < 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for p in uniform_disc_points(&mut rng, &c, 0.1 * 2f64.sqrt(), &Matrix::identity(2), 5000) {
        assert!(covered(&cov, &p));
    }

    let j = Matrix::diag(&[0.5, 1.0 / 3.0]).unwrap();
    let cov = ellipsoid_cover(&j, &c, 0.1, 1).unwrap();
    assert!(cov.len() <= 24 && (cov.radius - 0.1 / 3.0).abs() < 1e-15);
    assert!((cov.certified_count_bound() - 24.0).abs() < 1e-9);

    let a = 0.37;
    let cov = ellipsoid_cover(&Matrix::diag(&[a, a]).unwrap(), &c, 0.1, 0).unwrap();
    assert!(cov.len() <= 16 && (cov.radius - a * 0.1).abs() < 1e-15);
}

#[test]
fn ellipsoid_cover_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..200 {
        let d = 1 + trial % 3;
        let entries: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let j = Matrix::new(d, &entries).unwrap();
        let k = rng.gen_range(0..d);
        let center: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let Ok(cov) = ellipsoid_cover(&j, &center, 0.5, k) else { continue };
        assert!(cov.len() as f64 <= cov.certified_count_bound() * (1.0 + 1e-12));
        for p in uniform_disc_points(&mut rng, &center, 0.5 * (d as f64).sqrt(), &j, 300) {
            assert!(covered(&cov, &p), "trial {trial}");
        }
    }
}

#[test]
fn singular_jacobian_is_rejected() {
    let j = Matrix::new(2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
    assert!(ellipsoid_cover(&j, &[0.0, 0.0], 1.0, 0).is_err());
}

#[test]
fn cover_word_product_formulas() {
    let s = presets::sierpinski();
    let r0 = 0.5 * 2f64.sqrt();
    for n in 0..=6 {
        let w = Word::repeat(1, n);
        let c = cover_word(&s, &w, 0).unwrap();
        assert!((c.radius - r0 * 0.5f64.powi(n as i32)).abs() < 1e-12 * c.radius);
        assert!((c.log_count_bound - n as f64 * 16f64.ln()).abs() < 1e-9);
        assert!(c.len() as f64 <= c.certified_count_bound());
    }
    let t = presets::shared_diag();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let n = rng.gen_range(0..=12);
        let w = Word::new((0..n).map(|_| rng.gen_range(0..3)).collect());
        let c = cover_word(&t, &w, 0).unwrap();
        assert!((c.radius - r0 * 0.5f64.powi(n)).abs() < 1e-12 * c.radius);
        assert!((c.log_count_bound - n as f64 * 16f64.ln()).abs() < 1e-9);
        assert!(c.len() as f64 <= c.certified_count_bound());
    }
    for n in 0..=5 {
        let w = Word::repeat(2, n);
        let c = cover_word(&t, &w, 1).unwrap();
        assert!((c.radius - r0 * 3f64.powi(-(n as i32))).abs() < 1e-12 * c.radius);
        assert!((c.log_count_bound - n as f64 * 24f64.ln()).abs() < 1e-9);
        assert!(c.len() as f64 <= c.certified_count_bound());
    }
    let root = cover_word(&t, &Word::empty(), 1).unwrap();
    assert_eq!(root.len(), 1);
    assert!(cover_word(&presets::golden_mean_interval(), &Word::new(vec![1, 1]), 0).is_err());
}

#[test]
fn cover_word_all_short_words() {
    for sys in [presets::sierpinski(), presets::shared_diag()] {
        let base = chaos_game(&sys, &ShiftMeasure::uniform(3), 2000, 60, 1).unwrap();
        let survey = cover_survey(&sys, &base, 5, 0).unwrap();
        assert_eq!(survey.words.len(), (0..=5).map(|n| 3usize.pow(n)).sum::<usize>());
        for w in &survey.words {
            let want = 0.5 * 2f64.sqrt() * 0.5f64.powi(w.word.len() as i32);
            assert!((w.radius - want).abs() < 1e-12 * want);
            assert!(w.balls as f64 <= w.count_bound);
            assert_eq!(w.fraction, 1.0);
        }
    }
}

#[test]
fn verify_cover_sierpinski() {
    let s = presets::sierpinski();
    let base = chaos_game(&s, &ShiftMeasure::uniform(3), 10_000, 60, 5).unwrap();
    let full = cover_word(&s, &Word::empty(), 0).unwrap();
    assert_eq!(verify_cover(&full, &base), 1.0);
    let w = Word::new(vec![0, 2, 1, 1, 2]);
    let pts = cylinder_cloud(&s, &w, &base).unwrap();
    assert_eq!(pts.len(), 10_000);
    assert!(pts.points().all(|p| in_cylinder(p, w.letters(), 1e-9)));
    let cov = cover_word(&s, &w, 0).unwrap();
    assert_eq!(verify_cover(&cov, &pts), 1.0);
    assert!(verify_cover(&cov.scaled(0.5), &pts) < 1.0);
}

#[test]
fn chaos_points_lie_on_the_gasket() {
    let s = presets::sierpinski();
    let c = chaos_game(&s, &ShiftMeasure::uniform(3), 5000, 60, 2).unwrap();
    assert!(c.points().all(|p| in_gasket([p[0], p[1]], 20, 1e-12)));
    // A point well inside the removed central triangle is not on the gasket.
    assert!(!in_gasket([0.4, 0.4], 20, 1e-12));
}

#[test]
fn box_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let coords: Vec<f64> = (0..2_000_000).map(|_| rng.gen::<f64>()).collect();
    let sq = PointCloud::from_points(2, coords).unwrap();
    for n in 0..=8 {
        assert_eq!(box_count(&sq, 2f64.powi(-n), &[0.0, 0.0]).unwrap(), 4usize.pow(n as u32));
    }
    let one = PointCloud::from_points(2, vec![0.3, 0.7]).unwrap();
    for n in 0..30 {
        assert_eq!(box_count(&one, 2f64.powi(-n), &[0.0, 0.0]).unwrap(), 1);
    }
    let s = presets::sierpinski();
    let c = chaos_game(&s, &ShiftMeasure::uniform(3), 1_000_000, 60, 4).unwrap();
    let mut prev = 0;
    for n in 0..=10 {
        let count = box_count(&c, 2f64.powi(-n), &[0.0, 0.0]).unwrap();
        let ratio = count as f64 / 3f64.powi(n);
        assert!((0.5..=2.0).contains(&ratio), "n = {n}: {count}");
        assert!(count >= prev);
        prev = count;
    }
}

#[test]
fn box_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let coords: Vec<f64> = (0..2_000_000).map(|_| rng.gen::<f64>()).collect();
    let sq = PointCloud::from_points(2, coords).unwrap();
    let b = box_dimension(&sq, None, &[0.0, 0.0], 1.0).unwrap();
    assert!((b.slope - 2.0).abs() < 0.05, "{}", b.slope);
    assert!(b.entries.windows(2).all(|w| w[0].0 > w[1].0 && w[0].1 <= w[1].1));

    let s = presets::sierpinski();
    let c = chaos_game(&s, &ShiftMeasure::uniform(3), 1_000_000, 60, 4).unwrap();
    let b = box_dimension(&c, None, &[0.0, 0.0], 1.0).unwrap();
    assert!((b.slope - 3f64.ln() / 2f64.ln()).abs() < 0.05, "{}", b.slope);
    // Covers are upper bounds on the counts.
    let cov = cover_word(&s, &Word::repeat(0, 8), 0).unwrap();
    assert!(cov.log_count_bound / 2f64.ln() / 8.0 >= b.slope);

    let one = PointCloud::from_points(2, vec![0.3, 0.7]).unwrap();
    assert_eq!(box_dimension(&one, None, &[0.0, 0.0], 1.0).unwrap().slope, 0.0);
}

#[test]
fn box_dimension_resolution_guard() {
    let s = presets::sierpinski();
    let c = chaos_game(&s, &ShiftMeasure::uniform(3), 1000, 4, 4).unwrap();
    assert!(box_dimension(&c, Some(&[0.1, 0.05, 0.01]), &[0.0, 0.0], 1.0).is_err());
    assert!(box_dimension(&c, None, &[0.0, 0.0], 1.0).is_err());
}

#[test]
fn dyadic_counts_are_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let n = rng.gen_range(1..500);
        let coords: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let c = PointCloud::from_points(2, coords).unwrap();
        let origin = [-3.0, -3.0];
        let counts: Vec<usize> = (0..12).map(|j| box_count(&c, 2f64.powi(-j), &origin).unwrap()).collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn repeller_cylinders() {
    let r = presets::toral_repeller();
    let base = chaos_game(&r, &ShiftMeasure::uniform(6), 6000, 60, 1).unwrap();
    let survey = cover_survey(&r, &base, 3, 0).unwrap();
    assert!(survey.words.iter().all(|w| w.fraction == 1.0));
    let w = Word::new(vec![4, 1]);
    let pts = cylinder_cloud(&r, &w, &base).unwrap();
    assert!(!pts.is_empty() && pts.len() < base.len());
    assert_eq!(r.dim(), 2);
}
