//! Finite-period measure families: periodic-atom approximants of the measure
//! of maximal entropy, the two horseshoe measures over {0,2}, Bernoulli lifts
//! and their exponent bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::SystemParams;
use crate::ifs::Ifs;
use crate::symbolic::{enumerate_words, par_words, SymbolSet, Word};

/// Largest period of [`maxent_approximant`].
pub const MAX_MAXENT_PERIOD: usize = 12;

/// Largest period of [`horseshoe_pair`].
pub const MAX_HORSESHOE_PERIOD: usize = 14;

/// A probability vector on {0, 1, 2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliSpec {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

impl BernoulliSpec {
    pub fn new(p0: f64, p1: f64, p2: f64) -> Result<BernoulliSpec> {
        let ok = [p0, p1, p2].iter().all(|p| p.is_finite() && *p >= 0.0) && (p0 + p1 + p2 - 1.0).abs() <= 1e-12;
        if !ok {
            return Err(Error::Argument(format!("({p0}, {p1}, {p2}) is not a probability vector")));
        }
        Ok(BernoulliSpec { p0, p1, p2 })
    }

    pub fn uniform() -> BernoulliSpec {
        BernoulliSpec { p0: 1.0 / 3.0, p1: 1.0 / 3.0, p2: 1.0 / 3.0 }
    }

    pub fn entropy(&self) -> f64 {
        [self.p0, self.p1, self.p2].iter().filter(|&&p| p > 0.0).map(|p| -p * p.ln()).sum()
    }

    /// Draws one symbol.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> u8 {
        let u: f64 = rng.gen();
        if u < self.p0 {
            0
        } else if u < self.p0 + self.p1 {
            1
        } else {
            2
        }
    }

    pub fn sample_word<R: Rng>(&self, rng: &mut R, len: usize) -> Result<Word> {
        Word::new((0..len).map(|_| self.sample(rng)).collect())
    }
}

/// One atom `(word, fiber point)` with its weight and central exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub word: Word,
    pub fiber_point: f64,
    pub weight: f64,
    pub exponent: f64,
}

/// A finitely supported measure on periodic points.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Weighted average of the atom exponents.
    pub fn exponent(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.exponent).sum()
    }

    /// Distinct words of the support, sorted.
    pub fn words(&self) -> Vec<Word> {
        let mut v: Vec<Word> = self.atoms.iter().map(|a| a.word.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// CSV with columns `word, fiber_point, weight, exponent`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("word,fiber_point,weight,exponent\n");
        for a in &self.atoms {
            s.push_str(&format!("{},{:.15e},{:.15e},{:.15e}\n", a.word, a.fiber_point, a.weight, a.exponent));
        }
        s
    }
}

/// Periodic approximant of the measure of maximal entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxentApproximant {
    pub period: usize,
    /// `|S_m| = 3^m - 2^m`.
    pub words: usize,
    pub measure: AtomicMeasure,
    pub exponent_avg: f64,
    /// `log |S_m| / m`.
    pub base_entropy: f64,
}

fn check_period(m: usize, max: usize) -> Result<()> {
    if !(1..=max).contains(&m) {
        return Err(Error::Argument(format!("period {m} outside 1..={max}")));
    }
    Ok(())
}

/// Equal weights at both fiber-interval endpoints of every period-`m` word containing symbol 1.
pub fn maxent_approximant(params: &SystemParams, m: usize) -> Result<MaxentApproximant> {
    check_period(m, MAX_MAXENT_PERIOD)?;
    let ifs = Ifs::new(params)?;
    let ends: Vec<(Word, f64, f64, f64, f64)> = par_words(m, SymbolSet::ALL)?
        .filter(|w| w.ones() > 0)
        .map(|w| {
            let (i, el, er) = ifs.fiber_endpoints(&w)?;
            Ok((w, i.left, el, i.right, er))
        })
        .collect::<Result<_>>()?;
    let count = ends.len();
    let weight = 0.5 / count as f64;
    let mut atoms = Vec::with_capacity(2 * count);
    for (w, l, el, r, er) in ends {
        atoms.push(Atom { word: w.clone(), fiber_point: l, weight, exponent: el });
        atoms.push(Atom { word: w, fiber_point: r, weight, exponent: er });
    }
    let measure = AtomicMeasure { atoms };
    Ok(MaxentApproximant {
        period: m,
        words: count,
        exponent_avg: measure.exponent(),
        base_entropy: (count as f64).ln() / m as f64,
        measure,
    })
}

/// The two measures over `{0,2}^m`: `mu1` at the top of each fiber interval, `mu2` at fiber 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorseshoePair {
    pub period: usize,
    pub mu1: AtomicMeasure,
    pub mu2: AtomicMeasure,
    pub exponent1: f64,
    pub exponent2: f64,
    /// `log(beta0 beta2) / 2`.
    pub limit2: f64,
    /// `log 2`, the entropy of both base measures.
    pub base_entropy: f64,
}

pub fn horseshoe_pair(params: &SystemParams, m: usize) -> Result<HorseshoePair> {
    check_period(m, MAX_HORSESHOE_PERIOD)?;
    let ifs = Ifs::new(params)?;
    let words: Vec<Word> = enumerate_words(m, SymbolSet::ZERO_TWO)?.collect();
    let weight = 1.0 / words.len() as f64;
    let pairs: Vec<(Atom, Atom)> = words
        .par_iter()
        .map(|w| {
            let (i, _, er) = ifs.fiber_endpoints(w)?;
            let at0 = ifs.compose_eval(w, 0.0)?.log_abs_deriv / m as f64;
            Ok((
                Atom { word: w.clone(), fiber_point: i.right, weight, exponent: er },
                Atom { word: w.clone(), fiber_point: 0.0, weight, exponent: at0 },
            ))
        })
        .collect::<Result<_>>()?;
    let (a1, a2): (Vec<Atom>, Vec<Atom>) = pairs.into_iter().unzip();
    let (mu1, mu2) = (AtomicMeasure { atoms: a1 }, AtomicMeasure { atoms: a2 });
    Ok(HorseshoePair {
        period: m,
        exponent1: mu1.exponent(),
        exponent2: mu2.exponent(),
        limit2: 0.5 * (params.beta0 * params.beta2).ln(),
        base_entropy: 2f64.ln(),
        mu1,
        mu2,
    })
}

/// Upper bound `p1 log gamma + (p0 + p2) log beta02^+` on the central exponent of a Bernoulli lift.
pub fn bernoulli_lift_bound(spec: &BernoulliSpec, params: &SystemParams) -> f64 {
    spec.p1 * params.gamma.ln() + (spec.p0 + spec.p2) * params.beta02_plus().ln()
}

/// Outcome of [`fiber_triviality_sample`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivialitySample {
    pub seed: u64,
    pub samples: usize,
    pub word_len: usize,
    pub tol: f64,
    pub fraction_trivial: f64,
    pub widths: Vec<f64>,
}

/// Fraction of random periodic words (symbols drawn from `spec`) whose fiber
/// interval is narrower than `tol`.
pub fn fiber_triviality_sample(
    spec: &BernoulliSpec,
    params: &SystemParams,
    samples: usize,
    word_len: usize,
    tol: f64,
    seed: u64,
) -> Result<TrivialitySample> {
    if samples < 100 {
        return Err(Error::Argument(format!("{samples} samples; at least 100 required")));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance {tol} must be positive")));
    }
    let ifs = Ifs::new(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<Word> = (0..samples).map(|_| spec.sample_word(&mut rng, word_len)).collect::<Result<_>>()?;
    let widths: Vec<f64> = words.par_iter().map(|w| ifs.fiber_interval(w, 1e-3 * tol).map(|i| i.width())).collect::<Result<_>>()?;
    let trivial = widths.iter().filter(|&&w| w < tol).count();
    Ok(TrivialitySample { seed, samples, word_len, tol, fraction_trivial: trivial as f64 / samples as f64, widths })
}

/// Outcome of [`uniqueness_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// `gamma (beta02^+)^2`.
    pub contraction: f64,
    pub applicable: bool,
    /// `(m, exponent_avg)` per period, empty when not applicable.
    pub exponents: Vec<(usize, f64)>,
}

impl UniquenessReport {
    /// Applicable, and every approximant exponent is negative.
    pub fn holds(&self) -> bool {
        self.applicable && !self.exponents.is_empty() && self.exponents.iter().all(|&(_, e)| e < 0.0)
    }

    /// Largest approximant exponent, the distance to 0 from below.
    pub fn sup_exponent(&self) -> f64 {
        self.exponents.iter().map(|&(_, e)| e).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("contraction = {:.15e}\napplicable = {}\n", self.contraction, self.applicable);
        if !self.applicable {
            s.push_str("note = corollary not applicable\n");
        }
        for (m, e) in &self.exponents {
            s.push_str(&format!("exponent_avg[{m}] = {e:.15e}\n"));
        }
        s
    }
}

/// Checks `gamma (beta02^+)^2 < 1` and, when it holds, the sign of the approximant exponents.
pub fn uniqueness_check(params: &SystemParams, periods: &[usize]) -> Result<UniquenessReport> {
    let contraction = params.gamma * params.beta02_plus().powi(2);
    let applicable = contraction < 1.0;
    let mut exponents = Vec::new();
    if applicable {
        for &m in periods {
            exponents.push((m, maxent_approximant(params, m)?.exponent_avg));
        }
    }
    Ok(UniquenessReport { contraction, applicable, exponents })
}
