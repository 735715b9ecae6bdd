use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shift::{Subshift, TransferMatrix, Word};
use crate::systems::map::{Domain, SmoothMap};
use crate::Matrix;

/// Target accuracy of coding points: words are extended until
/// `gamma^n * diam(U)` drops below this.
pub const CODING_TOL: f64 = 1e-12;

/// A system whose points are coded by sequences in a subshift.
///
/// The map applied at position `k` of a sequence is `branch(x_k, x_{k+1})`.
/// IFS maps ignore the following letter; repeller inverse branches do not.
pub trait CodedSystem: Sync + Send {
    fn dim(&self) -> usize;
    fn code_space(&self) -> &Subshift;
    fn domain(&self) -> &Domain;
    /// Certified upper bound on every Jacobian norm, below one.
    fn contraction(&self) -> f64;
    fn is_affine(&self) -> bool;
    /// True when `branch` depends on its second argument.
    fn uses_lookahead(&self) -> bool;
    /// Map applied to a letter `i` followed by `next`. The pair must be allowed.
    fn branch(&self, i: usize, next: usize) -> &SmoothMap;

    /// Number of maps to compose so that the coding error drops below [`CODING_TOL`].
    fn coding_depth(&self) -> usize {
        let diam = self.domain().diameter().max(1e-300);
        let g = self.contraction();
        if g <= 0.0 {
            return 1;
        }
        (((CODING_TOL / diam).ln() / g.ln()).ceil().max(1.0)) as usize
    }
}

/// Contracting IFS `{f_1, ..., f_ell}` on a box `U`, coded by a subshift.
#[derive(Clone, Debug)]
pub struct IfsSystem {
    maps: Vec<SmoothMap>,
    code_space: Subshift,
    domain: Domain,
    gamma: f64,
}

impl IfsSystem {
    /// Checks that every map sends (a probe grid of) `domain` into itself.
    pub fn new(maps: Vec<SmoothMap>, domain: Domain) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidSystem("an IFS needs at least two maps".into()));
        }
        let d = domain.dim();
        for (i, f) in maps.iter().enumerate() {
            if f.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: f.dim() });
            }
            f.check_self_map(&domain, &format!("map {i}"))?;
        }
        let gamma = maps.iter().map(SmoothMap::contraction).fold(0.0, f64::max);
        let code_space = Subshift::full(maps.len())?;
        Ok(IfsSystem { maps, code_space, domain, gamma })
    }

    /// Restricts the coding to a subshift on the same alphabet.
    pub fn with_code_space(mut self, x: Subshift) -> Result<Self> {
        if x.alphabet_size() != self.maps.len() {
            return Err(Error::InvalidSubshift(format!(
                "subshift has {} symbols but the IFS has {} maps",
                x.alphabet_size(),
                self.maps.len()
            )));
        }
        self.code_space = x;
        Ok(self)
    }

    pub fn maps(&self) -> &[SmoothMap] {
        &self.maps
    }
}

impl CodedSystem for IfsSystem {
    fn dim(&self) -> usize {
        self.domain.dim()
    }
    fn code_space(&self) -> &Subshift {
        &self.code_space
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn contraction(&self) -> f64 {
        self.gamma
    }
    fn is_affine(&self) -> bool {
        self.maps.iter().all(SmoothMap::is_affine)
    }
    fn uses_lookahead(&self) -> bool {
        false
    }
    fn branch(&self, i: usize, _next: usize) -> &SmoothMap {
        &self.maps[i]
    }
}

/// Repeller of an expanding map given by its local inverse branches
/// `f_{i,j}`, one per allowed transition of a Markov partition.
#[derive(Clone, Debug)]
pub struct RepellerSystem {
    ell: usize,
    branches: Vec<Option<SmoothMap>>,
    code_space: Subshift,
    domain: Domain,
    gamma: f64,
}

impl RepellerSystem {
    /// `branches` lists `((i, j), f_{i,j})`; a branch must exist exactly for the
    /// allowed pairs of `transfer`.
    pub fn new(transfer: TransferMatrix, branches: Vec<((usize, usize), SmoothMap)>, domain: Domain) -> Result<Self> {
        let ell = transfer.size();
        let d = domain.dim();
        let mut table: Vec<Option<SmoothMap>> = vec![None; ell * ell];
        for ((i, j), f) in branches {
            if i >= ell || j >= ell {
                return Err(Error::InvalidSystem(format!("branch ({i},{j}) outside the alphabet of size {ell}")));
            }
            if !transfer.allows(i, j) {
                return Err(Error::InvalidSystem(format!("branch ({i},{j}) given for a forbidden transition")));
            }
            if f.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: f.dim() });
            }
            f.check_self_map(&domain, &format!("branch ({i},{j})"))?;
            if table[i * ell + j].replace(f).is_some() {
                return Err(Error::InvalidSystem(format!("branch ({i},{j}) given twice")));
            }
        }
        for i in 0..ell {
            for j in 0..ell {
                if transfer.allows(i, j) && table[i * ell + j].is_none() {
                    return Err(Error::InvalidSystem(format!("missing branch for allowed transition ({i},{j})")));
                }
            }
        }
        let gamma = table.iter().flatten().map(SmoothMap::contraction).fold(0.0, f64::max);
        Ok(RepellerSystem { ell, branches: table, code_space: Subshift::sft(transfer), domain, gamma })
    }

    pub fn alphabet_size(&self) -> usize {
        self.ell
    }
}

impl CodedSystem for RepellerSystem {
    fn dim(&self) -> usize {
        self.domain.dim()
    }
    fn code_space(&self) -> &Subshift {
        &self.code_space
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn contraction(&self) -> f64 {
        self.gamma
    }
    fn is_affine(&self) -> bool {
        self.branches.iter().flatten().all(SmoothMap::is_affine)
    }
    fn uses_lookahead(&self) -> bool {
        true
    }
    fn branch(&self, i: usize, next: usize) -> &SmoothMap {
        self.branches[i * self.ell + next].as_ref().expect("branch of an allowed transition")
    }
}

/// Either kind of system, for callers that pick one at run time.
#[derive(Clone, Debug)]
pub enum DynSystem {
    Ifs(IfsSystem),
    Repeller(RepellerSystem),
}

impl DynSystem {
    pub fn is_repeller(&self) -> bool {
        matches!(self, DynSystem::Repeller(_))
    }

    fn inner(&self) -> &dyn CodedSystem {
        match self {
            DynSystem::Ifs(s) => s,
            DynSystem::Repeller(s) => s,
        }
    }
}

impl From<IfsSystem> for DynSystem {
    fn from(s: IfsSystem) -> Self {
        DynSystem::Ifs(s)
    }
}

impl From<RepellerSystem> for DynSystem {
    fn from(s: RepellerSystem) -> Self {
        DynSystem::Repeller(s)
    }
}

impl CodedSystem for DynSystem {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn code_space(&self) -> &Subshift {
        self.inner().code_space()
    }
    fn domain(&self) -> &Domain {
        self.inner().domain()
    }
    fn contraction(&self) -> f64 {
        self.inner().contraction()
    }
    fn is_affine(&self) -> bool {
        self.inner().is_affine()
    }
    fn uses_lookahead(&self) -> bool {
        self.inner().uses_lookahead()
    }
    fn branch(&self, i: usize, next: usize) -> &SmoothMap {
        self.inner().branch(i, next)
    }
}

/// Approximation of the coding point `Pi(y)` of an infinite sequence `y`,
/// together with its first letter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub first: usize,
    pub point: Vec<f64>,
}

/// Point with a bound on its distance to the exact coding point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodePoint {
    pub point: Vec<f64>,
    pub error_bound: f64,
}

/// `f_{i_1} o ... o f_{i_n}(z0)` for an IFS; for a repeller
/// `f_{i_1,i_2} o ... o f_{i_{n-1},i_n}(z0)` with `z0` read as a point of the
/// last partition element.
pub fn code_point<S: CodedSystem + ?Sized>(sys: &S, word: &Word, z0: &[f64]) -> Result<CodePoint> {
    if z0.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: z0.len() });
    }
    if !sys.domain().contains(z0) {
        return Err(Error::PointOutsideDomain(z0.to_vec()));
    }
    sys.code_space().check_admissible(word)?;
    let letters = word.letters();
    let mut z = z0.to_vec();
    let mut buf = vec![0.0; sys.dim()];
    let mut maps = 0;
    for k in (0..letters.len()).rev() {
        let next = match letters.get(k + 1) {
            Some(&j) => j,
            None if sys.uses_lookahead() => continue,
            None => letters[k],
        };
        sys.branch(letters[k], next).eval(&z, &mut buf);
        std::mem::swap(&mut z, &mut buf);
        maps += 1;
    }
    let error_bound = sys.contraction().powi(maps) * sys.domain().diameter();
    Ok(CodePoint { point: z, error_bound })
}

fn check_tail<S: CodedSystem + ?Sized>(sys: &S, word: &Word, tail: &Tail) -> Result<()> {
    sys.code_space().check_admissible(word)?;
    if tail.point.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: tail.point.len() });
    }
    if let Some(last) = word.last() {
        if !sys.code_space().allows(last, tail.first) {
            let mut w = word.letters().to_vec();
            w.push(tail.first);
            return Err(Error::InadmissibleWord(w));
        }
    }
    Ok(())
}

/// `f_{x|n}(Pi(sigma^n x))` where `x` is `word` followed by `tail`.
pub fn code_point_with_tail<S: CodedSystem + ?Sized>(sys: &S, word: &Word, tail: &Tail) -> Result<Vec<f64>> {
    check_tail(sys, word, tail)?;
    let mut z = tail.point.clone();
    let mut buf = vec![0.0; sys.dim()];
    let mut next = tail.first;
    for &a in word.letters().iter().rev() {
        sys.branch(a, next).eval(&z, &mut buf);
        std::mem::swap(&mut z, &mut buf);
        next = a;
    }
    Ok(z)
}

/// One-step Jacobians `D f` along the orbit of coding points, ordered so that
/// their product is the differential of `f_{x|n}` at `Pi(sigma^n x)`.
pub fn jacobians_along<S: CodedSystem + ?Sized>(sys: &S, word: &Word, tail: &Tail) -> Result<Vec<Matrix>> {
    check_tail(sys, word, tail)?;
    let n = word.len();
    let mut out = vec![Matrix::identity(sys.dim()); n];
    let mut z = tail.point.clone();
    let mut buf = vec![0.0; sys.dim()];
    let mut next = tail.first;
    for (k, &a) in word.letters().iter().enumerate().rev() {
        let f = sys.branch(a, next);
        out[k] = f.jacobian(&z);
        f.eval(&z, &mut buf);
        std::mem::swap(&mut z, &mut buf);
        next = a;
    }
    Ok(out)
}

/// Coding point of the periodic sequence `word word word ...`, if it is admissible.
pub fn periodic_tail<S: CodedSystem + ?Sized>(sys: &S, word: &Word) -> Option<Tail> {
    let (first, last) = (word.first()?, word.last()?);
    if !sys.code_space().is_admissible(word) || !sys.code_space().allows(last, first) {
        return None;
    }
    let reps = sys.coding_depth().div_ceil(word.len()).max(1);
    let mut z = sys.domain().center();
    let mut buf = vec![0.0; sys.dim()];
    for _ in 0..reps {
        let mut next = first;
        for &a in word.letters().iter().rev() {
            sys.branch(a, next).eval(&z, &mut buf);
            std::mem::swap(&mut z, &mut buf);
            next = a;
        }
    }
    Some(Tail { first, point: z })
}

/// Coding point of an admissible sequence drawn uniformly letter by letter,
/// whose first letter may follow `after`.
pub fn random_tail<S: CodedSystem + ?Sized, R: rand::Rng + ?Sized>(sys: &S, after: Option<usize>, rng: &mut R) -> Tail {
    let x = sys.code_space();
    let pick = |choices: Vec<usize>, rng: &mut R| choices[rng.gen_range(0..choices.len())];
    let first = match after {
        Some(a) => pick(x.successors(a).collect(), rng),
        None => rng.gen_range(0..x.alphabet_size()),
    };
    let depth = sys.coding_depth();
    let mut letters = Vec::with_capacity(depth + 1);
    letters.push(first);
    while letters.len() <= depth {
        let prev = *letters.last().unwrap();
        letters.push(pick(x.successors(prev).collect(), rng));
    }
    let mut z = sys.domain().center();
    let mut buf = vec![0.0; sys.dim()];
    for k in (0..depth).rev() {
        sys.branch(letters[k], letters[k + 1]).eval(&z, &mut buf);
        std::mem::swap(&mut z, &mut buf);
    }
    Tail { first, point: z }
}

/// Tails used to approximate suprema over cylinders, pooled by the letter they follow.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    pools: Vec<Vec<Tail>>,
    periodic: bool,
}

/// Default number of random tails per pool.
pub const DEFAULT_K_PROBE: usize = 4;

impl ProbeSet {
    /// For affine systems the Jacobians do not depend on the tail point, so a
    /// pool holds one tail per distinct following letter that matters.
    pub fn new<S: CodedSystem + ?Sized>(sys: &S, k_probe: usize, seed: u64) -> Self {
        use rand::SeedableRng;
        let x = sys.code_space();
        let ell = x.alphabet_size();
        let center = sys.domain().center();
        if sys.is_affine() {
            let pools = (0..ell)
                .map(|a| {
                    let firsts: Vec<usize> = if sys.uses_lookahead() { x.successors(a).collect() } else { x.successors(a).take(1).collect() };
                    firsts.into_iter().map(|first| Tail { first, point: center.clone() }).collect()
                })
                .collect();
            return ProbeSet { pools, periodic: false };
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = k_probe.max(1);
        let pools = (0..ell).map(|a| (0..k).map(|_| random_tail(sys, Some(a), &mut rng)).collect()).collect();
        ProbeSet { pools, periodic: true }
    }

    /// Tails that may follow a word ending in `last`.
    pub fn pool(&self, last: usize) -> &[Tail] {
        &self.pools[last]
    }

    /// Whether word-specific periodic points are added to the pools.
    pub fn uses_periodic(&self) -> bool {
        self.periodic
    }

    /// Largest number of probes evaluated for one word.
    pub fn max_probes(&self) -> usize {
        self.pools.iter().map(Vec::len).max().unwrap_or(0) + usize::from(self.periodic)
    }
}
