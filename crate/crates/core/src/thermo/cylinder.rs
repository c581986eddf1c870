//! Depth-first cylinder enumeration with per-level fiber grids, and the
//! pressure envelopes built from it.

use std::sync::Arc;

use rayon::prelude::*;

use super::{central_potential, lateral_pressure, log_sum_exp, secants, Potential};
use crate::error::{Error, Result};
use crate::fiber::SystemParams;
use crate::ifs::{FixedPointScan, Ifs};

/// Fiber points per word used by the pressure envelopes.
pub const PRESSURE_GRID: usize = 33;

/// Largest cylinder depth accepted by the pressure routines.
pub const MAX_DEPTH: usize = 16;

/// Fixed points within this distance of 0 on a word without symbol 1 are exceptional.
pub(crate) const EXCEPTIONAL_TOL: f64 = 1e-12;

/// `count` equally spaced points on [0, 1].
pub fn uniform_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| i as f64 / (count - 1) as f64).collect()
}

struct Frame {
    xs: Vec<f64>,
    ss: Vec<f64>,
}

/// Visits every extension of `word` up to `max_depth`; `frames[0]` holds the
/// images and Birkhoff sums of the grid after `word`.
fn walk_below<V>(ifs: &Ifs, pot: &Potential, alphabet: &[u8], word: &mut Vec<u8>, frames: &mut [Frame], max_depth: usize, visit: &mut V)
where
    V: FnMut(&[u8], &[f64], &[f64]),
{
    if word.len() >= max_depth {
        return;
    }
    let (cur, rest) = frames.split_first_mut().expect("frame per level");
    for &s in alphabet {
        word.push(s);
        {
            let next = &mut rest[0];
            for i in 0..cur.xs.len() {
                let x = cur.xs[i];
                next.ss[i] = cur.ss[i] + pot(word, x);
                next.xs[i] = ifs.step_value(s, x);
            }
            visit(word, &next.xs, &next.ss);
        }
        walk_below(ifs, pot, alphabet, word, rest, max_depth, visit);
        word.pop();
    }
}

fn frames_for(len: usize, levels: usize) -> Vec<Frame> {
    (0..levels).map(|_| Frame { xs: vec![0.0; len], ss: vec![0.0; len] }).collect()
}

/// Walks all words of length `1..=max_depth` over `alphabet` in parallel over
/// prefixes. Part 0 holds the words shorter than the split length; later parts
/// follow lexicographic prefix order, so merging in order is deterministic.
pub(crate) fn par_walk<T, I, V>(ifs: &Ifs, pot: &Potential, alphabet: &[u8], grid: &[f64], max_depth: usize, init: I, visit: V) -> Vec<T>
where
    T: Send,
    I: Fn() -> T + Sync,
    V: Fn(&mut T, &[u8], &[f64], &[f64]) + Sync,
{
    let split = max_depth.min(if max_depth >= 6 { 4 } else { 2 }).max(1);
    let k = alphabet.len();
    let tasks = k.pow(split as u32);
    let mut parts = Vec::with_capacity(tasks + 1);
    let mut head = init();
    if split > 1 {
        let mut frames = frames_for(grid.len(), split);
        frames[0].xs.copy_from_slice(grid);
        let mut word = Vec::with_capacity(split);
        walk_below(ifs, pot, alphabet, &mut word, &mut frames, split - 1, &mut |w, xs, ss| visit(&mut head, w, xs, ss));
    }
    parts.push(head);
    let rest: Vec<T> = (0..tasks)
        .into_par_iter()
        .map(|r| {
            let mut acc = init();
            let mut word: Vec<u8> = Vec::with_capacity(max_depth);
            let mut rem = r;
            let mut digits = vec![0usize; split];
            for d in digits.iter_mut().rev() {
                *d = rem % k;
                rem /= k;
            }
            let mut frames = frames_for(grid.len(), max_depth - split + 1);
            let mut xs = grid.to_vec();
            let mut ss = vec![0.0; grid.len()];
            for &d in &digits {
                let s = alphabet[d];
                word.push(s);
                for i in 0..xs.len() {
                    ss[i] += pot(&word, xs[i]);
                    xs[i] = ifs.step_value(s, xs[i]);
                }
            }
            visit(&mut acc, &word, &xs, &ss);
            frames[0].xs = xs;
            frames[0].ss = ss;
            walk_below(ifs, pot, alphabet, &mut word, &mut frames, max_depth, &mut |w, xs, ss| visit(&mut acc, w, xs, ss));
            acc
        })
        .collect();
    parts.extend(rest);
    parts
}

/// Birkhoff sum of `pot` along `f_[word]^reps` starting at `x`.
pub(crate) fn birkhoff(ifs: &Ifs, pot: &Potential, word: &[u8], reps: usize, mut x: f64) -> f64 {
    let mut s = 0.0;
    for _ in 0..reps {
        for k in 0..word.len() {
            s += pot(&word[..=k], x);
            x = ifs.step_value(word[k], x);
        }
    }
    s
}

/// Per-word extrema of Birkhoff sums at one depth, stored column-wise.
/// `all` ranges over grid points and fixed points, `fix` over fixed points, and
/// `rest` over fixed points other than the exceptional point 0 of {0,2}-words.
/// Missing values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderStats {
    pub depth: usize,
    pub all_min: Vec<f64>,
    pub all_max: Vec<f64>,
    pub fix_min: Vec<f64>,
    pub fix_max: Vec<f64>,
    pub rest_min: Vec<f64>,
    pub rest_max: Vec<f64>,
    /// Brackets where fixed-point refinement failed, as (word index, lo, hi).
    pub failures: Vec<(usize, f64, f64)>,
}

#[derive(Clone, Copy)]
enum Envelope {
    All,
    Fix,
    Rest,
}

impl CylinderStats {
    fn with_capacity(depth: usize, cap: usize) -> CylinderStats {
        CylinderStats {
            depth,
            all_min: Vec::with_capacity(cap),
            all_max: Vec::with_capacity(cap),
            fix_min: Vec::with_capacity(cap),
            fix_max: Vec::with_capacity(cap),
            rest_min: Vec::with_capacity(cap),
            rest_max: Vec::with_capacity(cap),
            failures: Vec::new(),
        }
    }

    pub fn words(&self) -> usize {
        self.all_min.len()
    }

    fn append(&mut self, mut other: CylinderStats) {
        let offset = self.words();
        self.all_min.append(&mut other.all_min);
        self.all_max.append(&mut other.all_max);
        self.fix_min.append(&mut other.fix_min);
        self.fix_max.append(&mut other.fix_max);
        self.rest_min.append(&mut other.rest_min);
        self.rest_max.append(&mut other.rest_max);
        self.failures.extend(other.failures.into_iter().map(|(i, a, b)| (i + offset, a, b)));
    }

    fn columns(&self, e: Envelope) -> (&[f64], &[f64]) {
        match e {
            Envelope::All => (&self.all_min, &self.all_max),
            Envelope::Fix => (&self.fix_min, &self.fix_max),
            Envelope::Rest => (&self.rest_min, &self.rest_max),
        }
    }

    /// `(1/n) log sum_w max_x exp(t S_w(x))` over the chosen point set.
    fn eval(&self, e: Envelope, t: f64) -> f64 {
        let (lo, hi) = self.columns(e);
        let it = lo.iter().zip(hi).map(move |(&a, &b)| if a.is_nan() { f64::NAN } else { (t * a).max(t * b) });
        log_sum_exp(it) / self.depth as f64
    }

    /// Derivative in `t` of [`CylinderStats::eval`] (right derivative at ties).
    fn eval_derivative(&self, e: Envelope, t: f64) -> f64 {
        let (lo, hi) = self.columns(e);
        let pick = |a: f64, b: f64| {
            let (va, vb) = (t * a, t * b);
            if va > vb || (va == vb && a >= b) {
                (va, a)
            } else {
                (vb, b)
            }
        };
        let m = lo.iter().zip(hi).filter(|(a, _)| !a.is_nan()).map(|(&a, &b)| pick(a, b).0).fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for (&a, &b) in lo.iter().zip(hi) {
            if a.is_nan() {
                continue;
            }
            let (v, s) = pick(a, b);
            let w = (v - m).exp();
            num += w * s;
            den += w;
        }
        num / den / self.depth as f64
    }

    /// Upper envelope: maxima over grid and fixed points.
    pub fn upper(&self, t: f64) -> f64 {
        self.eval(Envelope::All, t)
    }

    /// Lower envelope: periodic-orbit sum over fixed points.
    pub fn lower(&self, t: f64) -> f64 {
        self.eval(Envelope::Fix, t)
    }

    /// Periodic-orbit sum without the exceptional fixed points.
    pub fn rest(&self, t: f64) -> f64 {
        self.eval(Envelope::Rest, t)
    }

    pub fn rest_derivative(&self, t: f64) -> f64 {
        self.eval_derivative(Envelope::Rest, t)
    }
}

/// Collects [`CylinderStats`] at each requested depth in one walk.
pub(crate) fn cylinder_stats(ifs: &Ifs, pot: &Potential, depths: &[usize], grid_points: usize) -> Result<Vec<CylinderStats>> {
    let max_depth = depths.iter().copied().max().unwrap_or(0);
    if depths.is_empty() || depths.iter().any(|&d| !(1..=MAX_DEPTH).contains(&d)) {
        return Err(Error::Argument(format!("depths {depths:?} outside 1..={MAX_DEPTH}")));
    }
    if grid_points < 2 {
        return Err(Error::Argument("fiber grid needs at least 2 points".into()));
    }
    let grid = uniform_grid(grid_points);
    let init = || depths.iter().map(|&d| CylinderStats::with_capacity(d, 0)).collect::<Vec<_>>();
    let parts = par_walk(ifs, pot, &[0, 1, 2], &grid, max_depth, init, |acc, w, xs, ss| {
        let Some(slot) = depths.iter().position(|&d| d == w.len()) else { return };
        let st = &mut acc[slot];
        let resid: Vec<f64> = xs.iter().zip(&grid).map(|(y, x)| y - x).collect();
        let mut scan = FixedPointScan::default();
        let mut roots = Vec::new();
        ifs.roots_from_grid(w, 1, &grid, &resid, &mut scan, &mut roots);
        let idx = st.words();
        st.failures.extend(scan.failures.iter().map(|&(a, b)| (idx, a, b)));
        let exceptional = !w.contains(&1);
        let (mut fmin, mut fmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in &roots {
            let s = birkhoff(ifs, pot, w, 1, p);
            fmin = fmin.min(s);
            fmax = fmax.max(s);
            if !(exceptional && p <= EXCEPTIONAL_TOL) {
                rmin = rmin.min(s);
                rmax = rmax.max(s);
            }
        }
        let gmin = ss.iter().copied().fold(f64::INFINITY, f64::min);
        let gmax = ss.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let nan_if_empty = |v: f64| if v.is_finite() { v } else { f64::NAN };
        st.all_min.push(gmin.min(fmin));
        st.all_max.push(gmax.max(fmax));
        st.fix_min.push(nan_if_empty(fmin));
        st.fix_max.push(nan_if_empty(fmax));
        st.rest_min.push(nan_if_empty(rmin));
        st.rest_max.push(nan_if_empty(rmax));
    });
    let mut out = init();
    for part in parts {
        for (o, p) in out.iter_mut().zip(part) {
            o.append(p);
        }
    }
    Ok(out)
}

/// `(lower, upper)` envelopes of `P_n(t)` for the central potential.
pub fn pressure_bracket(params: &SystemParams, t: f64, n: usize) -> Result<(f64, f64)> {
    let ifs = Ifs::new(params)?;
    let pot = central_potential(&ifs);
    general_potential_pressure(&ifs, &pot, t, n)
}

/// `(lower, upper)` envelopes of the pressure of `t * phi` at depth `n`.
pub fn general_potential_pressure(ifs: &Ifs, potential: &Potential, t: f64, n: usize) -> Result<(f64, f64)> {
    let st = cylinder_stats(ifs, potential, &[n], PRESSURE_GRID)?.remove(0);
    Ok((st.lower(t), st.upper(t)))
}

/// Pressure envelopes of the central potential on a `t`-grid.
#[derive(Debug, Clone)]
pub struct PressureCurve {
    pub params: SystemParams,
    pub depth: usize,
    pub t: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub lateral: Vec<f64>,
    /// Periodic-orbit sum without exceptional points, at `depth`.
    pub rest: Vec<f64>,
    stats: Arc<CylinderStats>,
    prev: Option<Arc<CylinderStats>>,
}

/// Builds the envelopes at depth `n` on a strictly increasing `t`-grid.
pub fn pressure_curve(params: &SystemParams, t: Vec<f64>, n: usize) -> Result<PressureCurve> {
    if t.len() < 2 || t.windows(2).any(|w| !(w[1] > w[0])) || t.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("t-grid must be finite and strictly increasing with at least 2 points".into()));
    }
    let ifs = Ifs::new(params)?;
    let pot = central_potential(&ifs);
    let depths: Vec<usize> = if n >= 2 { vec![n, n - 1] } else { vec![n] };
    let mut stats = cylinder_stats(&ifs, &pot, &depths, PRESSURE_GRID)?;
    let prev = if stats.len() > 1 { Some(Arc::new(stats.remove(1))) } else { None };
    let stats = Arc::new(stats.remove(0));
    let rows: Vec<[f64; 3]> = t.par_iter().map(|&s| [stats.lower(s), stats.upper(s), stats.rest(s)]).collect();
    Ok(PressureCurve {
        params: *params,
        depth: n,
        lateral: t.iter().map(|&s| lateral_pressure(params, s)).collect(),
        lower: rows.iter().map(|r| r[0]).collect(),
        upper: rows.iter().map(|r| r[1]).collect(),
        rest: rows.iter().map(|r| r[2]).collect(),
        t,
        stats,
        prev,
    })
}

impl PressureCurve {
    pub fn stats(&self) -> &CylinderStats {
        &self.stats
    }

    pub fn previous_stats(&self) -> Option<&CylinderStats> {
        self.prev.as_deref()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn width(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).collect()
    }

    /// Left and right secant slopes of the midpoint at each grid point (NaN at the ends).
    pub fn midpoint_secants(&self) -> (Vec<f64>, Vec<f64>) {
        let s = secants(&self.t, &self.midpoint());
        let n = self.t.len();
        let left = (0..n).map(|i| if i == 0 { f64::NAN } else { s[i - 1] }).collect();
        let right = (0..n).map(|i| if i + 1 == n { f64::NAN } else { s[i] }).collect();
        (left, right)
    }

    pub fn upper_at(&self, t: f64) -> f64 {
        self.stats.upper(t)
    }

    pub fn lower_at(&self, t: f64) -> f64 {
        self.stats.lower(t)
    }

    pub fn rest_at(&self, t: f64) -> f64 {
        self.stats.rest(t)
    }

    pub fn rest_derivative_at(&self, t: f64) -> f64 {
        self.stats.rest_derivative(t)
    }

    /// Derivative of the non-exceptional envelope at depth `n - 1`, when available.
    pub fn previous_rest_derivative_at(&self, t: f64) -> Option<f64> {
        self.prev.as_ref().map(|p| p.rest_derivative(t))
    }

    /// CSV with columns `t, lower, upper, lateral, secant_left, secant_right`.
    pub fn to_csv(&self) -> String {
        let (l, r) = self.midpoint_secants();
        let mut s = String::from("t,lower,upper,lateral,secant_left,secant_right\n");
        for i in 0..self.t.len() {
            s.push_str(&format!(
                "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}\n",
                self.t[i], self.lower[i], self.upper[i], self.lateral[i], l[i], r[i]
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::is_convex;

    fn params() -> SystemParams {
        SystemParams::default_validated()
    }

    #[test]
    fn entropy_at_zero() {
        for n in 1..=6 {
            let (lo, hi) = pressure_bracket(&params(), 0.0, n).unwrap();
            assert!((lo - 3f64.ln()).abs() < 1e-12, "{n} {lo}");
            assert!((hi - 3f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn walk_visits_every_word_once() {
        let ifs = Ifs::new(&params()).unwrap();
        let zero = |_: &[u8], _: f64| 0.0;
        for depth in [1, 3, 7] {
            let parts = par_walk(&ifs, &zero, &[0, 1, 2], &[0.5], depth, Vec::new, |acc: &mut Vec<Vec<u8>>, w, _, _| acc.push(w.to_vec()));
            let all: Vec<Vec<u8>> = parts.into_iter().flatten().collect();
            let expected: usize = (1..=depth).map(|d| 3usize.pow(d as u32)).sum();
            assert_eq!(all.len(), expected);
            let set: std::collections::HashSet<_> = all.iter().cloned().collect();
            assert_eq!(set.len(), expected);
        }
    }

    #[test]
    fn walk_images_match_composition() {
        let ifs = Ifs::new(&params()).unwrap();
        let pot = central_potential(&ifs);
        let grid = uniform_grid(5);
        let parts = par_walk(&ifs, &pot, &[0, 1, 2], &grid, 6, Vec::new, |acc: &mut Vec<(Vec<u8>, Vec<f64>, Vec<f64>)>, w, xs, ss| {
            acc.push((w.to_vec(), xs.to_vec(), ss.to_vec()))
        });
        for (w, xs, ss) in parts.into_iter().flatten() {
            for (i, &x) in grid.iter().enumerate() {
                let (v, l) = ifs.compose_log(&w, x);
                assert!((xs[i] - v).abs() < 1e-14);
                assert!((ss[i] + l).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lower_below_upper_and_convex() {
        let t: Vec<f64> = (0..=80).map(|k| -20.0 + 0.5 * k as f64).collect();
        let c = pressure_curve(&params(), t, 6).unwrap();
        for i in 0..c.t.len() {
            assert!(c.lower[i] <= c.upper[i]);
            assert!(c.lateral[i] <= c.upper[i] + 1e-12);
            assert!(c.rest[i] <= c.lower[i] + 1e-12);
        }
        assert!(is_convex(&c.t, &c.upper, 1e-9));
        assert!(is_convex(&c.t, &c.lower, 1e-9));
        assert!(c.stats().failures.is_empty());
    }

    #[test]
    fn rest_derivative_matches_difference() {
        let c = pressure_curve(&params(), vec![-1.0, 1.0], 5).unwrap();
        for t in [-8.0, -2.0, 0.5, 3.0] {
            let h = 1e-6;
            let fd = (c.rest_at(t + h) - c.rest_at(t - h)) / (2.0 * h);
            assert!((fd - c.rest_derivative_at(t)).abs() < 1e-6, "{t}");
        }
    }

    #[test]
    fn zero_two_horseshoe_at_fiber_zero() {
        // restricted alphabet with the fiber pinned at 0: each cylinder contributes a single term
        let p = params();
        let ifs = Ifs::new(&p).unwrap();
        let pot = central_potential(&ifs);
        for n in 1..=2 {
            for t in [-3.0, 0.7, 2.0] {
                let parts = par_walk(&ifs, &pot, &[0, 2], &[0.0], n, Vec::new, |acc: &mut Vec<f64>, w, _, ss| {
                    if w.len() == n {
                        acc.push(t * ss[0])
                    }
                });
                let v: Vec<f64> = parts.into_iter().flatten().collect();
                let got = log_sum_exp(v.iter().copied()) / n as f64;
                let by_hand = if n == 1 {
                    (p.beta0.powf(-t) + p.beta2.powf(-t)).ln()
                } else {
                    let (a, b) = (p.beta0.powf(-t), p.beta2.powf(-t));
                    (a * a + 2.0 * a * b + b * b).ln() / 2.0
                };
                assert!((got - by_hand).abs() < 1e-12);
                assert!((got - lateral_pressure(&p, t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_and_cylinder_potentials() {
        let ifs = Ifs::new(&params()).unwrap();
        let c = 0.37;
        let konst = move |_: &[u8], _: f64| c;
        for n in 1..=4 {
            for t in [-2.0, 0.0, 1.5] {
                let (lo, hi) = general_potential_pressure(&ifs, &konst, t, n).unwrap();
                assert!((lo - (3f64.ln() + t * c)).abs() < 1e-12);
                assert!((hi - (3f64.ln() + t * c)).abs() < 1e-12);
            }
        }
        let a = [0.3, -1.1, 0.8];
        let cyl = move |w: &[u8], _: f64| a[w[w.len() - 1] as usize];
        for n in 1..=4 {
            let t = 1.3;
            let (lo, hi) = general_potential_pressure(&ifs, &cyl, t, n).unwrap();
            let exact = a.iter().map(|v| (t * v).exp()).sum::<f64>().ln();
            assert!((lo - exact).abs() < 1e-10 && (hi - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn central_potential_reproduces_bracket() {
        let p = params();
        let ifs = Ifs::new(&p).unwrap();
        let pot = central_potential(&ifs);
        for t in [-4.0, 0.3] {
            assert_eq!(pressure_bracket(&p, t, 5).unwrap(), general_potential_pressure(&ifs, &pot, t, 5).unwrap());
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(pressure_bracket(&params(), 0.0, 0).is_err());
        assert!(pressure_bracket(&params(), 0.0, 17).is_err());
        assert!(pressure_curve(&params(), vec![0.0, 0.0], 3).is_err());
        assert!(pressure_curve(&params(), vec![1.0], 3).is_err());
    }
}
