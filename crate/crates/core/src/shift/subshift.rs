use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shift::word::Word;

/// 0/1 transfer matrix of a subshift of finite type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferMatrix {
    n: usize,
    allowed: Vec<bool>,
}

impl TransferMatrix {
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidSubshift("empty transfer matrix".into()));
        }
        let mut allowed = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidSubshift(format!("row {i} has {} entries, expected {n}", r.len())));
            }
            for (j, &x) in r.iter().enumerate() {
                match x {
                    0 => allowed.push(false),
                    1 => allowed.push(true),
                    _ => return Err(Error::InvalidSubshift(format!("entry ({i},{j}) = {x} is not 0/1"))),
                }
            }
        }
        let m = TransferMatrix { n, allowed };
        for i in 0..n {
            if !(0..n).any(|j| m.allows(i, j)) {
                return Err(Error::InvalidSubshift(format!("row {i} is all zero")));
            }
            if !(0..n).any(|j| m.allows(j, i)) {
                return Err(Error::InvalidSubshift(format!("column {i} is all zero")));
            }
        }
        Ok(m)
    }

    pub fn all_ones(n: usize) -> Self {
        TransferMatrix { n, allowed: vec![true; n * n] }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.allows(i, j) as u8).collect()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShiftKind {
    Full,
    Sft { transfer: TransferMatrix },
}

/// One-sided full shift or subshift of finite type over `{0, .., ell-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subshift {
    ell: usize,
    kind: ShiftKind,
}

impl Subshift {
    pub fn full(ell: usize) -> Result<Self> {
        if ell < 1 {
            return Err(Error::InvalidSubshift("alphabet must be non-empty".into()));
        }
        Ok(Subshift { ell, kind: ShiftKind::Full })
    }

    pub fn sft(transfer: TransferMatrix) -> Self {
        Subshift { ell: transfer.size(), kind: ShiftKind::Sft { transfer } }
    }

    pub fn from_transfer_rows(rows: &[Vec<u8>]) -> Result<Self> {
        Ok(Self::sft(TransferMatrix::from_rows(rows)?))
    }

    /// Golden-mean shift: the word `11` (in 1-based letters) is forbidden.
    pub fn golden_mean() -> Self {
        Self::from_transfer_rows(&[vec![1, 1], vec![1, 0]]).expect("valid matrix")
    }

    #[inline]
    pub fn alphabet_size(&self) -> usize {
        self.ell
    }

    pub fn kind(&self) -> &ShiftKind {
        &self.kind
    }

    pub fn is_full(&self) -> bool {
        match &self.kind {
            ShiftKind::Full => true,
            ShiftKind::Sft { transfer } => transfer.allowed.iter().all(|&x| x),
        }
    }

    #[inline]
    pub fn allows(&self, i: usize, j: usize) -> bool {
        match &self.kind {
            ShiftKind::Full => true,
            ShiftKind::Sft { transfer } => transfer.allows(i, j),
        }
    }

    /// Transfer matrix, all ones for the full shift.
    pub fn transfer(&self) -> TransferMatrix {
        match &self.kind {
            ShiftKind::Full => TransferMatrix::all_ones(self.ell),
            ShiftKind::Sft { transfer } => transfer.clone(),
        }
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.ell).filter(move |&j| self.allows(i, j))
    }

    pub fn is_admissible(&self, w: &Word) -> bool {
        let l = w.letters();
        l.iter().all(|&x| x < self.ell) && l.windows(2).all(|p| self.allows(p[0], p[1]))
    }

    pub fn check_admissible(&self, w: &Word) -> Result<()> {
        if self.is_admissible(w) {
            Ok(())
        } else {
            Err(Error::InadmissibleWord(w.letters().to_vec()))
        }
    }

    /// Whether every word allowed here is allowed in `other` (same alphabet).
    pub fn is_subshift_of(&self, other: &Subshift) -> bool {
        self.ell == other.ell
            && (0..self.ell).all(|i| (0..self.ell).all(|j| !self.allows(i, j) || other.allows(i, j)))
    }

    /// Number of admissible words of length `n`, as a float (entry sum of `A^(n-1)`).
    pub fn word_count(&self, n: usize) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let mut v = vec![1.0f64; self.ell];
        for _ in 1..n {
            let mut nv = vec![0.0; self.ell];
            for (i, vi) in v.iter().enumerate() {
                for j in self.successors(i) {
                    nv[j] += vi;
                }
            }
            v = nv;
        }
        v.iter().sum()
    }

    /// Admissible words of length `n` in lexicographic order.
    pub fn words(&self, n: usize) -> Words<'_> {
        Words::new(self, Word::empty(), n)
    }

    /// Admissible words of length `n` beginning with `prefix`, lexicographic.
    ///
    /// Splitting by leading symbol gives disjoint ranges whose concatenation in
    /// symbol order equals [`Subshift::words`].
    pub fn words_with_prefix(&self, prefix: &Word, n: usize) -> Words<'_> {
        Words::new(self, prefix.clone(), n)
    }

    /// The block shift `X^(n)`: a full shift whose symbols are the admissible
    /// `n`-words of `self`, concatenated without cross-block constraint.
    pub fn block_shift(&self, n: usize) -> Result<BlockShift> {
        if n == 0 {
            return Err(Error::InvalidArgument("block length must be at least 1".into()));
        }
        let count = self.word_count(n);
        if count > 1e7 {
            return Err(Error::BudgetExceeded { estimated: count, budget: 10_000_000 });
        }
        let symbols: Vec<Word> = self.words(n).collect();
        Ok(BlockShift { shift: Subshift::full(symbols.len())?, block_len: n, symbols })
    }
}

/// `X^(n)` together with the table mapping its symbols back to `n`-words.
#[derive(Clone, Debug)]
pub struct BlockShift {
    pub shift: Subshift,
    pub block_len: usize,
    pub symbols: Vec<Word>,
}

impl BlockShift {
    /// Concatenation of the blocks named by `w`.
    pub fn expand(&self, w: &Word) -> Word {
        let mut out = Vec::with_capacity(w.len() * self.block_len);
        for &b in w.letters() {
            out.extend_from_slice(self.symbols[b].letters());
        }
        Word::new(out)
    }
}

/// Streaming odometer over admissible words of fixed length.
pub struct Words<'a> {
    shift: &'a Subshift,
    prefix_len: usize,
    current: Vec<usize>,
    n: usize,
    state: IterState,
}

#[derive(PartialEq)]
enum IterState {
    Fresh,
    Running,
    Done,
}

impl<'a> Words<'a> {
    fn new(shift: &'a Subshift, prefix: Word, n: usize) -> Self {
        let ok = prefix.len() <= n && shift.is_admissible(&prefix) && n > 0;
        Words {
            shift,
            prefix_len: prefix.len(),
            current: prefix.into_letters(),
            n,
            state: if ok { IterState::Fresh } else { IterState::Done },
        }
    }

    /// Extends `current` to full length with the smallest admissible letters.
    fn fill(&mut self) -> bool {
        while self.current.len() < self.n {
            let next = match self.current.last() {
                None => (self.shift.ell > 0).then_some(0),
                Some(&l) => self.shift.successors(l).next(),
            };
            match next {
                Some(x) => self.current.push(x),
                None => return false,
            }
        }
        true
    }

    /// Moves to the next admissible word in lexicographic order.
    fn advance(&mut self) -> bool {
        loop {
            if self.current.len() <= self.prefix_len {
                return false;
            }
            let last = self.current.pop().expect("non-empty");
            let prev = self.current.last().copied();
            let candidate = (last + 1..self.shift.ell).find(|&c| prev.is_none_or(|p| self.shift.allows(p, c)));
            if let Some(c) = candidate {
                self.current.push(c);
                if self.fill() {
                    return true;
                }
            }
        }
    }
}

impl Iterator for Words<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let ok = match self.state {
            IterState::Done => false,
            IterState::Fresh => {
                self.state = IterState::Running;
                self.fill() || self.advance()
            }
            IterState::Running => self.advance(),
        };
        if ok {
            Some(Word::new(self.current.clone()))
        } else {
            self.state = IterState::Done;
            None
        }
    }
}
