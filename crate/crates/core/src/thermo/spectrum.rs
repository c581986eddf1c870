//! Exhaustive periodic-orbit scans: Birkhoff averages at every fixed point of
//! every word up to a maximal period, and the spectral-gap certificate.

use serde::{Deserialize, Serialize};

use super::cylinder::{birkhoff, par_walk, uniform_grid, EXCEPTIONAL_TOL};
use super::{log_derivative, Potential};
use crate::error::{Error, Result};
use crate::fiber::SystemParams;
use crate::ifs::{FixedPointScan, Ifs, FIXED_POINT_CELLS};

/// Largest period accepted by [`spectrum_scan`].
pub const MAX_PERIOD: usize = 14;

/// One periodic point found by a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub period: usize,
    pub word: String,
    pub fixed_point: f64,
    /// Birkhoff average of the potential per symbol.
    pub exponent: f64,
    /// Fixed point 0 of a word without symbol 1.
    pub exceptional: bool,
    pub period_two: bool,
}

/// Extremes of the averages over the words of one exact length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodStats {
    pub period: usize,
    pub words: usize,
    pub points: usize,
    /// Maximum over non-exceptional periodic points (`-inf` if none).
    pub max_nonexceptional: f64,
    pub argmax: Option<(String, f64)>,
    /// Extremes over exceptional points (`+inf` / `-inf` if none).
    pub min_exceptional: f64,
    pub max_exceptional: f64,
    pub near_tangencies: usize,
    /// Unresolved brackets as (word, lo, hi).
    pub failures: Vec<(String, f64, f64)>,
}

impl PeriodStats {
    fn empty(period: usize) -> PeriodStats {
        PeriodStats {
            period,
            words: 0,
            points: 0,
            max_nonexceptional: f64::NEG_INFINITY,
            argmax: None,
            min_exceptional: f64::INFINITY,
            max_exceptional: f64::NEG_INFINITY,
            near_tangencies: 0,
            failures: Vec::new(),
        }
    }

    fn merge(&mut self, o: PeriodStats) {
        self.words += o.words;
        self.points += o.points;
        if o.max_nonexceptional > self.max_nonexceptional {
            self.max_nonexceptional = o.max_nonexceptional;
            self.argmax = o.argmax;
        }
        self.min_exceptional = self.min_exceptional.min(o.min_exceptional);
        self.max_exceptional = self.max_exceptional.max(o.max_exceptional);
        self.near_tangencies += o.near_tangencies;
        self.failures.extend(o.failures);
    }
}

/// Result of [`periodic_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicScan {
    pub max_period: usize,
    /// Entry `k` covers period `k + 1`.
    pub per_period: Vec<PeriodStats>,
    /// Every periodic point, when requested.
    pub rows: Vec<ScanRow>,
}

impl PeriodicScan {
    /// Running maxima over non-exceptional points for periods `1..=m`.
    pub fn cumulative_max(&self) -> Vec<f64> {
        let mut acc = f64::NEG_INFINITY;
        self.per_period
            .iter()
            .map(|p| {
                acc = acc.max(p.max_nonexceptional);
                acc
            })
            .collect()
    }

    pub fn max_nonexceptional(&self) -> f64 {
        self.cumulative_max().last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn argmax(&self) -> Option<(String, f64)> {
        let best = self.max_nonexceptional();
        self.per_period.iter().find(|p| p.max_nonexceptional == best).and_then(|p| p.argmax.clone())
    }

    pub fn min_exceptional(&self) -> f64 {
        self.per_period.iter().map(|p| p.min_exceptional).fold(f64::INFINITY, f64::min)
    }

    pub fn max_exceptional(&self) -> f64 {
        self.per_period.iter().map(|p| p.max_exceptional).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn failures(&self) -> usize {
        self.per_period.iter().map(|p| p.failures.len()).sum()
    }

    pub fn near_tangencies(&self) -> usize {
        self.per_period.iter().map(|p| p.near_tangencies).sum()
    }

    /// CSV with columns `period, word, fixed_point, exponent, exceptional`.
    pub fn rows_csv(&self) -> String {
        let mut s = String::from("period,word,fixed_point,exponent,exceptional\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{:.15e},{:.15e},{}\n", r.period, r.word, r.fixed_point, r.exponent, r.exceptional));
        }
        s
    }
}

struct Acc {
    stats: Vec<PeriodStats>,
    rows: Vec<ScanRow>,
}

/// Birkhoff averages of `potential` at all periodic points of words of length
/// `1..=max_period`, including period-two points of orientation-reversing words.
/// A point is exceptional when it is the fixed point 0 of a word without symbol 1.
pub fn periodic_scan(ifs: &Ifs, potential: &Potential, max_period: usize, keep_rows: bool) -> Result<PeriodicScan> {
    if !(1..=MAX_PERIOD).contains(&max_period) {
        return Err(Error::Argument(format!("max period {max_period} outside 1..={MAX_PERIOD}")));
    }
    let grid = uniform_grid(FIXED_POINT_CELLS + 1);
    let init = || Acc { stats: (1..=max_period).map(PeriodStats::empty).collect(), rows: Vec::new() };
    // sums along the grid are not needed here; the potential is evaluated at the roots only
    let none = |_: &[u8], _: f64| 0.0;
    let parts = par_walk(ifs, &none, &[0, 1, 2], &grid, max_period, init, |acc, w, xs, _| {
        let m = w.len();
        let st = &mut acc.stats[m - 1];
        st.words += 1;
        let resid: Vec<f64> = xs.iter().zip(&grid).map(|(y, x)| y - x).collect();
        let mut scan = FixedPointScan::default();
        let mut roots = Vec::new();
        ifs.roots_from_grid(w, 1, &grid, &resid, &mut scan, &mut roots);
        let exceptional_word = !w.contains(&1);
        let mut points: Vec<(f64, f64, bool)> = roots.iter().map(|&p| (p, birkhoff(ifs, potential, w, 1, p) / m as f64, false)).collect();
        if w.iter().filter(|&&s| s == 1).count() % 2 == 1 {
            let fixed = roots.first().copied().unwrap_or(0.5);
            for (x, y) in ifs.period_two_points(w, fixed, &grid, xs, &mut scan) {
                let a = birkhoff(ifs, potential, w, 2, x) / (2 * m) as f64;
                points.push((x, a, true));
                points.push((y, a, true));
            }
        }
        st.near_tangencies += scan.near_tangencies.len();
        let label: String = w.iter().map(|s| char::from(b'0' + s)).collect();
        st.failures.extend(scan.failures.iter().map(|&(a, b)| (label.clone(), a, b)));
        for (p, a, two) in points {
            st.points += 1;
            let exceptional = exceptional_word && p <= EXCEPTIONAL_TOL;
            if exceptional {
                st.min_exceptional = st.min_exceptional.min(a);
                st.max_exceptional = st.max_exceptional.max(a);
            } else if a > st.max_nonexceptional {
                st.max_nonexceptional = a;
                st.argmax = Some((label.clone(), p));
            }
            if keep_rows {
                acc.rows.push(ScanRow { period: m, word: label.clone(), fixed_point: p, exponent: a, exceptional, period_two: two });
            }
        }
    });
    let mut out = init();
    for part in parts {
        for (o, p) in out.stats.iter_mut().zip(part.stats) {
            o.merge(p);
        }
        out.rows.extend(part.rows);
    }
    out.rows.sort_by(|a, b| a.period.cmp(&b.period).then_with(|| a.word.cmp(&b.word)).then(a.fixed_point.total_cmp(&b.fixed_point)));
    Ok(PeriodicScan { max_period, per_period: out.stats, rows: out.rows })
}

/// Depth-`m` spectral-gap certificate for the central exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub depth: usize,
    /// Estimate of `log beta~` (a lower bound for the true supremum).
    pub max_nonexceptional_exponent: f64,
    pub argmax_word: String,
    pub argmax_point: f64,
    /// `log beta02^-`.
    pub min_exceptional_exponent: f64,
    /// `min_exceptional_exponent - max_nonexceptional_exponent`.
    pub gap_width: f64,
    /// Running maxima for periods `1..=depth`.
    pub cumulative: Vec<f64>,
    /// Extremes of the exponents observed at exceptional points.
    pub exceptional_range: (f64, f64),
    pub near_tangencies: usize,
    pub failures: usize,
}

impl GapCertificate {
    /// Positive gap and no unresolved fixed-point brackets.
    pub fn valid(&self) -> bool {
        self.gap_width > 0.0 && self.failures == 0
    }

    /// Running maxima are nondecreasing over `from..=depth` with a positive gap at each period.
    pub fn stable_from(&self, from: usize) -> bool {
        if from == 0 || from > self.depth {
            return false;
        }
        let tail = &self.cumulative[from - 1..];
        tail.windows(2).all(|w| w[1] >= w[0]) && tail.iter().all(|&v| v < self.min_exceptional_exponent)
    }

    /// Key-value text block.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("depth = {}\n", self.depth));
        s.push_str(&format!("max_nonexceptional_exponent = {:.15e}\n", self.max_nonexceptional_exponent));
        s.push_str(&format!("argmax_word = {}\n", self.argmax_word));
        s.push_str(&format!("argmax_point = {:.15e}\n", self.argmax_point));
        s.push_str(&format!("min_exceptional_exponent = {:.15e}\n", self.min_exceptional_exponent));
        s.push_str(&format!("gap_width = {:.15e}\n", self.gap_width));
        s.push_str(&format!("exceptional_range = [{:.15e}, {:.15e}]\n", self.exceptional_range.0, self.exceptional_range.1));
        for (k, v) in self.cumulative.iter().enumerate() {
            s.push_str(&format!("cumulative_max[{}] = {:.15e}\n", k + 1, v));
        }
        s.push_str(&format!("near_tangencies = {}\n", self.near_tangencies));
        s.push_str(&format!("failures = {}\n", self.failures));
        s.push_str(&format!("valid = {}\n", self.valid()));
        s
    }
}

/// Exhaustive scan of central exponents at periodic points up to `max_period`.
pub fn spectrum_scan(params: &SystemParams, max_period: usize) -> Result<GapCertificate> {
    Ok(spectrum_scan_rows(params, max_period, false)?.0)
}

/// As [`spectrum_scan`], also returning the raw scan (with rows when `keep_rows`).
pub fn spectrum_scan_rows(params: &SystemParams, max_period: usize, keep_rows: bool) -> Result<(GapCertificate, PeriodicScan)> {
    let ifs = Ifs::new(params)?;
    let pot = log_derivative(&ifs);
    let scan = periodic_scan(&ifs, &pot, max_period, keep_rows)?;
    let best = scan.max_nonexceptional();
    let (word, point) = scan.argmax().unwrap_or_default();
    let lo = params.beta02_minus().ln();
    let cert = GapCertificate {
        depth: max_period,
        max_nonexceptional_exponent: best,
        argmax_word: word,
        argmax_point: point,
        min_exceptional_exponent: lo,
        gap_width: lo - best,
        cumulative: scan.cumulative_max(),
        exceptional_range: (scan.min_exceptional(), scan.max_exceptional()),
        near_tangencies: scan.near_tangencies(),
        failures: scan.failures(),
    };
    Ok((cert, scan))
}

/// `(inf over the lateral horseshoe, sup over non-exceptional periodic points)`
/// of the Birkhoff averages of `potential` up to period `n`.
pub fn criterion_values(ifs: &Ifs, potential: &Potential, n: usize) -> Result<(f64, f64)> {
    let scan = periodic_scan(ifs, potential, n, false)?;
    Ok((scan.min_exceptional(), scan.max_nonexceptional()))
}

/// True iff the lateral infimum exceeds the non-exceptional supremum.
pub fn transition_criterion(ifs: &Ifs, potential: &Potential, n: usize) -> Result<bool> {
    let (inf, sup) = criterion_values(ifs, potential, n)?;
    Ok(inf > sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::central_potential;

    fn params() -> SystemParams {
        SystemParams::default_validated()
    }

    #[test]
    fn exceptional_exponents_in_lateral_range() {
        let p = params();
        let (cert, scan) = spectrum_scan_rows(&p, 6, true).unwrap();
        let (lo, hi) = (p.beta02_minus().ln(), p.beta02_plus().ln());
        for r in scan.rows.iter().filter(|r| r.exceptional) {
            assert!(r.exponent >= lo - 1e-12 && r.exponent <= hi + 1e-12, "{r:?}");
        }
        assert_eq!(scan.rows.iter().filter(|r| r.exceptional).count(), (1..=6).map(|m| 1 << m).sum::<usize>());
        assert!((cert.exceptional_range.0 - lo).abs() < 1e-12);
        assert!((cert.exceptional_range.1 - hi).abs() < 1e-12);
    }

    #[test]
    fn single_symbol_words() {
        let p = params();
        let (_, scan) = spectrum_scan_rows(&p, 1, true).unwrap();
        let one: Vec<&ScanRow> = scan.rows.iter().filter(|r| r.word == "1").collect();
        assert_eq!(one.len(), 1);
        assert!((one[0].exponent - p.gamma.ln()).abs() < 1e-12);
        assert!(one[0].exponent < 0.0);
    }

    #[test]
    fn gap_at_small_depth() {
        let cert = spectrum_scan(&params(), 6).unwrap();
        assert!(cert.valid(), "{}", cert.to_text());
        assert!(cert.stable_from(2));
        assert_eq!(cert.cumulative.len(), 6);
    }

    #[test]
    fn scan_matches_fixed_points() {
        let p = params();
        let ifs = Ifs::new(&p).unwrap();
        let (_, scan) = spectrum_scan_rows(&p, 4, true).unwrap();
        for w in crate::symbolic::enumerate_words(4, crate::symbolic::SymbolSet::ALL).unwrap() {
            let direct = ifs.fixed_points(&w).records;
            let label = w.to_string();
            let rows: Vec<&ScanRow> = scan.rows.iter().filter(|r| r.word == label).collect();
            assert_eq!(rows.len(), direct.len(), "{label}");
            for (r, d) in rows.iter().zip(&direct) {
                assert!((r.fixed_point - d.fixed_point).abs() < 1e-11);
                assert!((r.exponent - d.exponent).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn deterministic_rows() {
        let a = spectrum_scan_rows(&params(), 5, true).unwrap().1;
        let b = spectrum_scan_rows(&params(), 5, true).unwrap().1;
        assert_eq!(a.rows_csv(), b.rows_csv());
    }

    #[test]
    fn criterion_examples() {
        let ifs = Ifs::new(&params()).unwrap();
        let lg = log_derivative(&ifs);
        assert!(transition_criterion(&ifs, &lg, 6).unwrap());
        let zero = |_: &[u8], _: f64| 0.0;
        assert!(!transition_criterion(&ifs, &zero, 6).unwrap());
        let neg = central_potential(&ifs);
        assert!(!transition_criterion(&ifs, &neg, 6).unwrap());
    }

    #[test]
    fn rejects_bad_period() {
        assert!(spectrum_scan(&params(), 0).is_err());
        assert!(spectrum_scan(&params(), 15).is_err());
    }
}
