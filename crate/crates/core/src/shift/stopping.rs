use crate::error::{Error, Result};
use crate::shift::subshift::Subshift;
use crate::shift::word::Word;

/// Prefix-free family `A_r` of words where the Birkhoff sup of `h` first drops below `log r`.
#[derive(Clone, Debug)]
pub struct StoppingFamily {
    pub words: Vec<Word>,
    pub r: f64,
}

impl StoppingFamily {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn min_len(&self) -> usize {
        self.words.iter().map(Word::len).min().unwrap_or(0)
    }

    pub fn max_len(&self) -> usize {
        self.words.iter().map(Word::len).max().unwrap_or(0)
    }

    /// Family members that are prefixes of `w`.
    pub fn prefixes_of<'a>(&'a self, w: &'a Word) -> impl Iterator<Item = &'a Word> + 'a {
        self.words.iter().filter(move |p| w.starts_with(p))
    }

    /// The unique member that is a prefix of `w`, found by binary search on
    /// the lexicographically sorted family.
    pub fn find_prefix(&self, w: &Word) -> Option<&Word> {
        let idx = match self.words.binary_search(w) {
            Ok(i) => return Some(&self.words[i]),
            Err(i) => i,
        };
        // the prefix sorts before `w`
        idx.checked_sub(1).map(|i| &self.words[i]).filter(|p| w.starts_with(p))
    }
}

/// Builds `A_r = { I : sup_[I] S_|I| h < log r <= sup_[I^-] S_(|I|-1) h }` by
/// depth-first expansion from the empty word.
///
/// `sup_snh(I)` must return `log sup exp(S_|I| h)` over the cylinder `[I]`.
pub fn stopping_family<F>(x: &Subshift, mut sup_snh: F, r: f64) -> Result<StoppingFamily>
where
    F: FnMut(&Word) -> f64,
{
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold r = {r} must lie in (0, 1)")));
    }
    let log_r = r.ln();
    let r0_log = (0..x.alphabet_size())
        .map(|a| sup_snh(&Word::new(vec![a])))
        .fold(f64::NEG_INFINITY, f64::max);
    if log_r >= r0_log {
        return Err(Error::InvalidArgument(format!(
            "threshold r = {r} must be below r0 = {}",
            r0_log.exp()
        )));
    }
    let mut words = Vec::new();
    let mut stack: Vec<(Word, f64)> = vec![(Word::empty(), 0.0)];
    while let Some((w, parent)) = stack.pop() {
        let next: Vec<usize> = match w.last() {
            None => (0..x.alphabet_size()).collect(),
            Some(l) => x.successors(l).collect(),
        };
        // push in reverse so the smallest letter is expanded first
        for &a in next.iter().rev() {
            let mut child = w.clone();
            child.push(a);
            let v = sup_snh(&child);
            if !(v < parent) {
                return Err(Error::NonContractiveH(child.into_letters()));
            }
            if v < log_r {
                words.push(child);
            } else {
                stack.push((child, v));
            }
        }
        if words.len() > 50_000_000 {
            return Err(Error::BudgetExceeded { estimated: words.len() as f64, budget: 50_000_000 });
        }
    }
    words.sort();
    Ok(StoppingFamily { words, r })
}
