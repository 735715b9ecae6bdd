use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pressure::lse::LogSumExp;
use crate::shift::{Subshift, Word};
use crate::svf::log_phi_sorted;
use crate::systems::{periodic_tail, CodedSystem, ProbeSet, Tail};
use crate::{Accumulator, Matrix};

/// Largest number of merged prefix states kept before switching to
/// depth-first expansion.
pub const FRONTIER_CAP: usize = 1 << 17;
const REDUCE_BLOCK: usize = 1 << 14;
const WORD_CHUNK: usize = 4096;

/// Log singular spectra of `D f_{x|n}` for every admissible word of length `n`.
///
/// Words whose spectra coincide for every extension are merged into one
/// group with a log multiplicity. Each group holds one spectrum per probe
/// tail; the supremum over a cylinder is approximated by the largest probe
/// value. Unused probe slots are NaN.
#[derive(Clone, Debug)]
pub struct SpectrumTable {
    n: usize,
    d: usize,
    probes: usize,
    log_mult: Vec<f64>,
    spectra: Vec<f64>,
    log_words: f64,
}

impl SpectrumTable {
    pub fn build<S: CodedSystem + ?Sized>(sys: &S, n: usize, probes: &ProbeSet) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("word length must be at least 1".into()));
        }
        let table = if sys.is_affine() { build_affine(sys, n) } else { build_probed(sys, n, probes) };
        Ok(table)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn groups(&self) -> usize {
        self.log_mult.len()
    }

    pub fn probes_per_group(&self) -> usize {
        self.probes
    }

    /// Number of spectra stored.
    pub fn leaf_evals(&self) -> u64 {
        (self.groups() * self.probes) as u64
    }

    /// Log of the number of words represented.
    pub fn log_word_count(&self) -> f64 {
        self.log_words
    }

    /// Log multiplicity and probe spectra of group `g`.
    pub fn group(&self, g: usize) -> (f64, impl Iterator<Item = &[f64]> + '_) {
        let block = &self.spectra[g * self.probes * self.d..(g + 1) * self.probes * self.d];
        (self.log_mult[g], block.chunks_exact(self.d).filter(|s| !s[0].is_nan()))
    }

    /// `log sum_groups exp(log_mult + max_probe f(spectrum))`, reduced in
    /// fixed blocks so the result does not depend on the thread count.
    pub fn reduce<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let per = self.probes * self.d;
        let partials: Vec<LogSumExp> = self
            .log_mult
            .par_chunks(REDUCE_BLOCK)
            .enumerate()
            .map(|(b, mults)| {
                let mut acc = LogSumExp::new();
                let base = b * REDUCE_BLOCK;
                for (i, &lm) in mults.iter().enumerate() {
                    let block = &self.spectra[(base + i) * per..(base + i + 1) * per];
                    let best = block
                        .chunks_exact(self.d)
                        .filter(|s| !s[0].is_nan())
                        .map(&f)
                        .fold(f64::NEG_INFINITY, f64::max);
                    acc.add(lm + best);
                }
                acc
            })
            .collect();
        let mut total = LogSumExp::new();
        for p in partials {
            total.merge(p);
        }
        total.value()
    }

    /// `log Lambda_n(s)`: log of the sum over words of the (probed) supremum of `phi^s`.
    pub fn log_partition_sum(&self, s: f64) -> f64 {
        self.reduce(|l| log_phi_sorted(l, s))
    }
}

#[derive(Clone)]
struct State {
    acc: Accumulator,
    last: usize,
    log_mult: f64,
}

fn linear<S: CodedSystem + ?Sized>(sys: &S, i: usize, next: usize) -> &Matrix {
    sys.branch(i, next).linear()
}

fn initial_states<S: CodedSystem + ?Sized>(sys: &S) -> Vec<State> {
    let d = sys.dim();
    (0..sys.code_space().alphabet_size())
        .map(|a| {
            let mut acc = Accumulator::new(d);
            if !sys.uses_lookahead() {
                acc.push(linear(sys, a, a));
            }
            State { acc, last: a, log_mult: 0.0 }
        })
        .collect()
}

fn extend<S: CodedSystem + ?Sized>(sys: &S, st: &State, b: usize) -> State {
    let mut acc = st.acc;
    if sys.uses_lookahead() {
        acc.push(linear(sys, st.last, b));
    } else {
        acc.push(linear(sys, b, b));
    }
    State { acc, last: b, log_mult: st.log_mult }
}

fn advance<S: CodedSystem + ?Sized>(sys: &S, states: &[State]) -> Vec<State> {
    let x = sys.code_space();
    let mut index: HashMap<Vec<i64>, usize> = HashMap::with_capacity(states.len() * 2);
    let mut out: Vec<State> = Vec::with_capacity(states.len() * 2);
    let mut key = Vec::new();
    for st in states {
        for b in x.successors(st.last) {
            let next = extend(sys, st, b);
            key.clear();
            next.acc.canonical_key(&mut key);
            key.push(b as i64);
            match index.get(&key) {
                Some(&i) => out[i].log_mult = crate::pressure::lse::log_add(out[i].log_mult, next.log_mult),
                None => {
                    index.insert(key.clone(), out.len());
                    out.push(next);
                }
            }
        }
    }
    out
}

/// Spectra of the completed products of a prefix state, one per probe slot.
fn leaf_spectra<S: CodedSystem + ?Sized>(sys: &S, st: &State, slots: usize, out: &mut Vec<f64>) {
    let d = sys.dim();
    let start = out.len();
    if sys.uses_lookahead() {
        for next in sys.code_space().successors(st.last) {
            let mut acc = st.acc;
            acc.push(linear(sys, st.last, next));
            out.extend_from_slice(acc.spectrum().log_alpha());
        }
    } else {
        out.extend_from_slice(st.acc.spectrum().log_alpha());
    }
    out.resize(start + slots * d, f64::NAN);
}

fn affine_slots<S: CodedSystem + ?Sized>(sys: &S) -> usize {
    if sys.uses_lookahead() {
        let x = sys.code_space();
        (0..x.alphabet_size()).map(|a| x.successors(a).count()).max().unwrap_or(1)
    } else {
        1
    }
}

/// Merged prefix-state counts at levels `1, 2, ...` up to `max_n`, stopping
/// early once a level exceeds [`FRONTIER_CAP`].
pub fn affine_state_counts<S: CodedSystem + ?Sized>(sys: &S, max_n: usize) -> Vec<usize> {
    let mut states = initial_states(sys);
    let mut counts = vec![states.len()];
    while counts.len() < max_n && states.len() <= FRONTIER_CAP {
        states = advance(sys, &states);
        counts.push(states.len());
    }
    counts
}

/// Estimated number of stored spectra for a table at level `n`.
pub fn estimate_leaf_evals<S: CodedSystem + ?Sized>(sys: &S, n: usize, probes: &ProbeSet) -> f64 {
    let x = sys.code_space();
    if !sys.is_affine() {
        return x.word_count(n) * probes.max_probes() as f64;
    }
    let counts = affine_state_counts(sys, n);
    let slots = affine_slots(sys) as f64;
    let level = counts.len();
    let last = counts[level - 1] as f64;
    if level >= n {
        last * slots
    } else {
        last * x.word_count(n) / x.word_count(level) * slots
    }
}

fn build_affine<S: CodedSystem + ?Sized>(sys: &S, n: usize) -> SpectrumTable {
    let d = sys.dim();
    let slots = affine_slots(sys);
    let mut states = initial_states(sys);
    let mut level = 1;
    while level < n && states.len() <= FRONTIER_CAP {
        states = advance(sys, &states);
        level += 1;
    }
    let (log_mult, spectra) = if level == n {
        let mut spectra = Vec::with_capacity(states.len() * slots * d);
        for st in &states {
            leaf_spectra(sys, st, slots, &mut spectra);
        }
        (states.iter().map(|s| s.log_mult).collect::<Vec<_>>(), spectra)
    } else {
        let parts: Vec<(Vec<f64>, Vec<f64>)> = states
            .par_iter()
            .map(|st| {
                let mut mults = Vec::new();
                let mut spectra = Vec::new();
                expand_affine(sys, st, n - level, slots, &mut mults, &mut spectra);
                (mults, spectra)
            })
            .collect();
        let mut mults = Vec::new();
        let mut spectra = Vec::new();
        for (m, s) in parts {
            mults.extend(m);
            spectra.extend(s);
        }
        (mults, spectra)
    };
    let mut words = LogSumExp::new();
    log_mult.iter().for_each(|&m| words.add(m));
    SpectrumTable { n, d, probes: slots, log_mult, spectra, log_words: words.value() }
}

fn expand_affine<S: CodedSystem + ?Sized>(sys: &S, st: &State, remaining: usize, slots: usize, mults: &mut Vec<f64>, spectra: &mut Vec<f64>) {
    if remaining == 0 {
        mults.push(st.log_mult);
        leaf_spectra(sys, st, slots, spectra);
        return;
    }
    for b in sys.code_space().successors(st.last) {
        expand_affine(sys, &extend(sys, st, b), remaining - 1, slots, mults, spectra);
    }
}

/// Counting tables for lexicographic ranks of admissible words of length `n`.
struct Ranker {
    /// `head[a]`: admissible words of length `n` starting below `a`.
    head: Vec<usize>,
    /// `rel[(m * ell + a) * ell + b]`: words of length `m` after `a` starting below `b`.
    rel: Vec<usize>,
    ell: usize,
    total: usize,
}

impl Ranker {
    fn new(x: &Subshift, n: usize) -> Self {
        let ell = x.alphabet_size();
        let mut count = vec![vec![0usize; ell]; n + 1];
        count[1].iter_mut().for_each(|c| *c = 1);
        for m in 2..=n {
            for c in 0..ell {
                count[m][c] = x.successors(c).map(|b| count[m - 1][b]).sum();
            }
        }
        let mut rel = vec![0usize; (n + 1) * ell * ell];
        for m in 1..=n {
            for a in 0..ell {
                let mut acc = 0;
                for b in 0..ell {
                    rel[(m * ell + a) * ell + b] = acc;
                    if x.allows(a, b) {
                        acc += count[m][b];
                    }
                }
            }
        }
        let mut head = vec![0; ell];
        let mut acc = 0;
        for a in 0..ell {
            head[a] = acc;
            acc += count[n][a];
        }
        Ranker { head, rel, ell, total: acc }
    }

    #[inline]
    fn step(&self, before: usize, after: usize, remaining: usize) -> usize {
        self.rel[(remaining * self.ell + before) * self.ell + after]
    }
}

/// Depth-first walk over words ending in a fixed letter, grown on the left.
/// `pos` is the position of `head`; the walk calls `leaf` at position 0.
fn suffix_walk<S, F>(sys: &S, pos: usize, head: usize, z: &[f64], acc: &Accumulator, leaf: &mut F)
where
    S: CodedSystem + ?Sized,
    F: FnMut(usize, &Accumulator),
{
    if pos == 0 {
        leaf(head, acc);
        return;
    }
    let x = sys.code_space();
    let mut buf = vec![0.0; z.len()];
    for c in 0..x.alphabet_size() {
        if !x.allows(c, head) {
            continue;
        }
        let f = sys.branch(c, head);
        let mut next = *acc;
        next.prepend(&f.jacobian(z));
        f.eval(z, &mut buf);
        suffix_walk(sys, pos - 1, c, &buf, &next, leaf);
    }
}

fn rank_walk(x: &Subshift, r: &Ranker, n: usize, pos: usize, head: usize, partial: usize, out: &mut Vec<usize>) {
    if pos == 0 {
        out.push(partial + r.head[head]);
        return;
    }
    for c in 0..x.alphabet_size() {
        if x.allows(c, head) {
            rank_walk(x, r, n, pos - 1, c, partial + r.step(c, head, n - pos), out);
        }
    }
}

/// Spectrum of `D f_{x|n}` at the coding point of `tail`.
pub(crate) fn word_spectrum<S: CodedSystem + ?Sized>(sys: &S, letters: &[usize], tail: &Tail) -> crate::Spectrum {
    let mut acc = Accumulator::new(sys.dim());
    let mut z = tail.point.clone();
    let mut buf = vec![0.0; sys.dim()];
    let mut next = tail.first;
    for &a in letters.iter().rev() {
        let f = sys.branch(a, next);
        acc.prepend(&f.jacobian(&z));
        f.eval(&z, &mut buf);
        std::mem::swap(&mut z, &mut buf);
        next = a;
    }
    acc.spectrum()
}

fn build_probed<S: CodedSystem + ?Sized>(sys: &S, n: usize, probes: &ProbeSet) -> SpectrumTable {
    let x = sys.code_space();
    let ell = x.alphabet_size();
    let d = sys.dim();
    let ranker = Ranker::new(x, n);
    let total = ranker.total;
    let slots = probes.max_probes();
    let mut spectra = vec![f64::NAN; total * slots * d];

    let ranks: Vec<Vec<usize>> = (0..ell)
        .map(|a| {
            let mut out = Vec::new();
            rank_walk(x, &ranker, n, n - 1, a, 0, &mut out);
            out
        })
        .collect();
    let roots: Vec<(usize, usize)> = (0..ell).flat_map(|a| (0..probes.pool(a).len()).map(move |p| (a, p))).collect();
    let walked: Vec<Vec<f64>> = roots
        .par_iter()
        .map(|&(a, p)| {
            let tail = &probes.pool(a)[p];
            let f = sys.branch(a, tail.first);
            let mut acc = Accumulator::new(d);
            acc.prepend(&f.jacobian(&tail.point));
            let z = f.apply(&tail.point);
            let mut out = Vec::with_capacity(ranks[a].len() * d);
            suffix_walk(sys, n - 1, a, &z, &acc, &mut |_, acc: &Accumulator| out.extend_from_slice(acc.spectrum().log_alpha()));
            out
        })
        .collect();
    for (&(a, p), vals) in roots.iter().zip(&walked) {
        for (&rank, spec) in ranks[a].iter().zip(vals.chunks_exact(d)) {
            let at = (rank * slots + p) * d;
            spectra[at..at + d].copy_from_slice(spec);
        }
    }
    drop(walked);

    if probes.uses_periodic() {
        let slot = slots - 1;
        let mut words = x.words(n);
        let mut rank = 0;
        loop {
            let chunk: Vec<Word> = words.by_ref().take(WORD_CHUNK).collect();
            if chunk.is_empty() {
                break;
            }
            let specs: Vec<Option<crate::Spectrum>> =
                chunk.par_iter().map(|w| periodic_tail(sys, w).map(|t| word_spectrum(sys, w.letters(), &t))).collect();
            for s in specs {
                if let Some(s) = s {
                    let at = (rank * slots + slot) * d;
                    spectra[at..at + d].copy_from_slice(s.log_alpha());
                }
                rank += 1;
            }
        }
    }
    SpectrumTable { n, d, probes: slots, log_mult: vec![0.0; total], spectra, log_words: (total as f64).ln() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::presets;

    fn probes<S: CodedSystem>(s: &S) -> ProbeSet {
        ProbeSet::new(s, 4, 9)
    }

    #[test]
    fn similarities_merge_to_one_state_per_letter() {
        let s = presets::sierpinski();
        let t = SpectrumTable::build(&s, 30, &probes(&s)).unwrap();
        assert_eq!(t.groups(), 3);
        assert!((t.log_word_count() - 30.0 * 3f64.ln()).abs() < 1e-9);
        for sv in [0.0, 0.7, 1.5, 2.0] {
            let want = 30.0 * (3f64.ln() - sv * 2f64.ln());
            assert!((t.log_partition_sum(sv) - want).abs() < 1e-9);
        }
    }

    #[test]
    fn golden_mean_counts_are_fibonacci() {
        let s = presets::golden_mean_interval();
        let mut fib = vec![1.0f64, 1.0];
        for k in 2..40 {
            fib.push(fib[k - 1] + fib[k - 2]);
        }
        for n in [1, 2, 5, 12, 24] {
            let t = SpectrumTable::build(&s, n, &probes(&s)).unwrap();
            assert!((t.log_partition_sum(0.0) - fib[n + 1].ln()).abs() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn depth_first_expansion_matches_merged() {
        // Distinct linear parts prevent merging.
        let dom = crate::systems::Domain::unit_cube(2);
        let a = Matrix::new(2, &[0.4, 0.1, 0.0, 0.3]).unwrap();
        let b = Matrix::new(2, &[0.3, 0.0, 0.2, 0.45]).unwrap();
        let maps = vec![
            crate::systems::SmoothMap::affine(a, &[0.0, 0.0], &dom).unwrap(),
            crate::systems::SmoothMap::affine(b, &[0.5, 0.3], &dom).unwrap(),
        ];
        let s = crate::systems::IfsSystem::new(maps, dom).unwrap();
        let n = 10;
        let t = SpectrumTable::build(&s, n, &probes(&s)).unwrap();
        let mut direct = LogSumExp::new();
        for w in s.code_space().words(n) {
            let mats: Vec<Matrix> = w.letters().iter().map(|&i| *s.maps()[i].linear()).collect();
            direct.add(crate::svf::product_spectrum(&mats, 16).unwrap().log_phi(1.3));
        }
        assert!((t.log_partition_sum(1.3) - direct.value()).abs() < 1e-9);
    }

    #[test]
    fn probed_table_ranks_match_lexicographic_order() {
        let s = presets::perturbed_shared_diag(1e-2).with_code_space(Subshift::from_transfer_rows(&[vec![1, 1, 0], vec![1, 1, 1], vec![1, 0, 1]]).unwrap()).unwrap();
        let p = probes(&s);
        let n = 5;
        let t = SpectrumTable::build(&s, n, &p).unwrap();
        assert_eq!(t.groups() as f64, s.code_space().word_count(n));
        assert_eq!(t.probes_per_group(), 5);
        for (g, w) in s.code_space().words(n).enumerate() {
            let last = w.last().unwrap();
            let (_, specs) = t.group(g);
            let specs: Vec<&[f64]> = specs.collect();
            for (k, tail) in p.pool(last).iter().enumerate() {
                let direct = word_spectrum(&s, w.letters(), tail);
                for (u, v) in specs[k].iter().zip(direct.log_alpha()) {
                    assert!((u - v).abs() < 1e-12);
                }
            }
            let periodic = periodic_tail(&s, &w).is_some();
            assert_eq!(specs.len(), p.pool(last).len() + usize::from(periodic));
        }
    }

    #[test]
    fn repeller_probes_every_successor() {
        let r = presets::toral_repeller();
        let t = SpectrumTable::build(&r, 4, &probes(&r)).unwrap();
        assert_eq!(t.probes_per_group(), 6);
        let want = 4.0 * 6f64.ln() + 4.0 * (0.5f64.ln() + 0.3 * (1.0f64 / 3.0).ln());
        assert!((t.log_partition_sum(1.3) - want).abs() < 1e-10);
    }
}
