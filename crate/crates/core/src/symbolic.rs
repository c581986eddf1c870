//! Finite words over the alphabet {0, 1, 2}.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest word [`enumerate_words`] accepts.
pub const MAX_ENUM_LEN: usize = 20;

/// Longest word that fits a [`PackedWord`].
pub const MAX_PACKED_LEN: usize = 31;

/// A non-empty finite word; symbol `i` is applied at step `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Result<Word> {
        if symbols.is_empty() {
            return Err(Error::Word("empty word".into()));
        }
        if let Some(s) = symbols.iter().find(|&&s| s > 2) {
            return Err(Error::Word(format!("symbol {s} outside {{0, 1, 2}}")));
        }
        Ok(Word(symbols))
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false: words have length at least 1.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// `self` repeated `k >= 1` times.
    pub fn repeat(&self, k: usize) -> Word {
        Word(self.0.repeat(k.max(1)))
    }

    /// Packs into two bits per symbol when the length allows it.
    pub fn pack(&self) -> Option<PackedWord> {
        if self.len() > MAX_PACKED_LEN {
            return None;
        }
        let bits = self.0.iter().enumerate().fold(0u64, |acc, (i, &s)| acc | (s as u64) << (2 * i));
        Some(PackedWord { bits, len: self.len() as u8 })
    }

    /// Number of symbols 1; odd means `f_[w]` reverses orientation.
    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&s| s == 1).count()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Word> {
        let syms = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                '2' => Ok(2),
                _ => Err(Error::Word(format!("bad character `{c}` in `{s}`"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Word::new(syms)
    }
}

/// A word of length at most 31 packed two bits per symbol, usable as a hash key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PackedWord {
    bits: u64,
    len: u8,
}

const LOW_BITS: u64 = 0x5555_5555_5555_5555;

impl PackedWord {
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, i: usize) -> u8 {
        ((self.bits >> (2 * i)) & 3) as u8
    }

    pub fn unpack(&self) -> Word {
        Word((0..self.len()).map(|i| self.get(i)).collect())
    }

    /// True iff no symbol equals 1 (bit pattern `01`).
    pub fn is_exceptional(&self) -> bool {
        self.bits & LOW_BITS & !(self.bits >> 1) == 0
    }
}

/// A subset of {0, 1, 2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolSet(u8);

impl SymbolSet {
    pub const ALL: SymbolSet = SymbolSet(0b111);
    pub const ZERO_TWO: SymbolSet = SymbolSet(0b101);

    pub fn from_symbols(symbols: &[u8]) -> Result<SymbolSet> {
        let mut m = 0u8;
        for &s in symbols {
            if s > 2 {
                return Err(Error::Word(format!("symbol {s} outside {{0, 1, 2}}")));
            }
            m |= 1 << s;
        }
        Ok(SymbolSet(m))
    }

    pub fn contains(&self, s: u8) -> bool {
        s <= 2 && self.0 & (1 << s) != 0
    }

    /// Members in increasing order.
    pub fn symbols(&self) -> Vec<u8> {
        (0..3).filter(|&s| self.contains(s)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }
}

/// Number of words of length `n` over `mask`.
pub fn word_count(n: usize, mask: SymbolSet) -> u64 {
    (mask.len() as u64).pow(n as u32)
}

/// The word of lexicographic rank `rank` among words of length `n` over `mask`.
pub fn word_at(n: usize, mask: SymbolSet, mut rank: u64) -> Word {
    let syms = mask.symbols();
    let k = syms.len() as u64;
    let mut v = vec![0u8; n];
    for slot in v.iter_mut().rev() {
        *slot = syms[(rank % k) as usize];
        rank /= k;
    }
    Word(v)
}

/// Lexicographic odometer over all words of one length.
#[derive(Debug, Clone)]
pub struct WordIter {
    syms: Vec<u8>,
    digits: Vec<usize>,
    remaining: u64,
}

impl Iterator for WordIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.remaining == 0 {
            return None;
        }
        let w = Word(self.digits.iter().map(|&d| self.syms[d]).collect());
        self.remaining -= 1;
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.syms.len() {
                break;
            }
            *d = 0;
        }
        Some(w)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.remaining as usize;
        (r, Some(r))
    }
}

impl ExactSizeIterator for WordIter {}

fn check_enum(n: usize, mask: SymbolSet) -> Result<()> {
    if !(1..=MAX_ENUM_LEN).contains(&n) {
        return Err(Error::Argument(format!("word length {n} outside 1..={MAX_ENUM_LEN}")));
    }
    if mask.is_empty() {
        return Err(Error::Argument("empty alphabet".into()));
    }
    Ok(())
}

/// All words of length `n` over `mask`, in lexicographic order.
pub fn enumerate_words(n: usize, mask: SymbolSet) -> Result<WordIter> {
    check_enum(n, mask)?;
    Ok(WordIter { syms: mask.symbols(), digits: vec![0; n], remaining: word_count(n, mask) })
}

/// Parallel version of [`enumerate_words`], split by rank ranges.
pub fn par_words(n: usize, mask: SymbolSet) -> Result<impl ParallelIterator<Item = Word>> {
    check_enum(n, mask)?;
    Ok((0..word_count(n, mask)).into_par_iter().map(move |r| word_at(n, mask, r)))
}

/// True iff the word contains no symbol 1.
pub fn is_exceptional(word: &Word) -> bool {
    !word.0.contains(&1)
}

/// Exact counts `(n0, n1, n2)`.
pub fn count_symbols(word: &Word) -> (usize, usize, usize) {
    word.0.iter().fold((0, 0, 0), |(a, b, c), &s| match s {
        0 => (a + 1, b, c),
        1 => (a, b + 1, c),
        _ => (a, b, c + 1),
    })
}
