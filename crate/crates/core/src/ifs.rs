//! Compositions of the fiber maps along words: values and derivatives,
//! fixed points with their Lyapunov exponents, periodic fiber intervals,
//! return-time analysis of orbits near 0, and expanding itineraries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{FiberMap, SystemParams, DOMAIN_SLACK};
use crate::symbolic::Word;

/// Number of cells of the grid used to bracket fixed points.
pub const FIXED_POINT_CELLS: usize = 1 << 10;

/// Bracket width at which fixed-point refinement stops.
pub const ROOT_TOL: f64 = 1e-12;

/// Grid values of `g(x) - x` below this size at a local minimum without a sign change are reported as near-tangencies.
pub const TANGENCY_TOL: f64 = 1e-9;

/// Default iteration cap of [`Ifs::fiber_interval`].
pub const FIBER_ITER_CAP: usize = 1_000_000;

/// The iterated function system `{f0, f1, f2}` of one parameter bundle.
#[derive(Debug, Clone)]
pub struct Ifs {
    params: SystemParams,
    maps: [FiberMap; 3],
    log_gamma: f64,
}

/// Value of `f_[w](x)` with its derivative in log-absolute form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Composed {
    pub value: f64,
    pub log_abs_deriv: f64,
    /// `(-1)^(number of symbols 1)`.
    pub sign: i8,
}

/// A fixed point of `f_[w]` (or a point of period two when `period_two` is set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentRecord {
    pub word: Word,
    pub fixed_point: f64,
    /// Per-symbol exponent `log |(f_[w])'(p)| / |w|` (with `g^2` and `2 |w|` for period two).
    pub exponent: f64,
    pub attracting: bool,
    pub period_two: bool,
}

/// Outcome of a fixed-point scan; unresolved brackets are kept, never dropped.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FixedPointScan {
    pub records: Vec<ExponentRecord>,
    /// Brackets around a grid local minimum of `|g(x) - x|` below [`TANGENCY_TOL`] without a sign change.
    pub near_tangencies: Vec<(f64, f64)>,
    /// Brackets where refinement did not converge.
    pub failures: Vec<(f64, f64)>,
}

/// Limit of the nested images `g^n([0, 1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberInterval {
    pub word: Word,
    pub left: f64,
    pub right: f64,
    pub iterations: usize,
}

impl FiberInterval {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }
}

/// One visit of an orbit to `H`, preceded by its approach through `H'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnBlock {
    /// First index of the run in `H'` that ends at `r - 1`.
    pub i: usize,
    /// Entry index into `H`.
    pub r: usize,
    /// Last index of the run in `H`.
    pub e: usize,
    /// `r - i - 1`.
    pub n: usize,
    /// Orbit point at entry.
    pub p_entry: f64,
    /// Orbit point at `i`.
    pub p_approach: f64,
    /// `log |(f_[xi_i .. xi_e])'(p_i)|`.
    pub log_deriv: f64,
}

impl ReturnBlock {
    /// Block-averaged exponent over the `e - i + 1` links.
    pub fn exponent(&self) -> f64 {
        self.log_deriv / (self.e - self.i + 1) as f64
    }
}

/// Return-time structure of one finite orbit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReturnAnalysis {
    /// Orbit `p_0 .. p_T`.
    pub orbit: Vec<f64>,
    /// Complete blocks (entry preceded by an approach from `H'`, exit inside the orbit).
    pub blocks: Vec<ReturnBlock>,
    /// Entry times of every run in `H` that starts after index 0.
    pub entries: Vec<usize>,
    /// Exit times of those runs (missing for a run still inside `H` at the end).
    pub exits: Vec<usize>,
    /// Runs skipped because they started at index 0, lacked a complete approach, or were cut by the end of the orbit.
    pub skipped: usize,
    /// Broken structural facts, described per block.
    pub violations: Vec<String>,
}

impl ReturnAnalysis {
    /// Blocks breaking `p_r >= lambda0^(N + 1) delta`.
    pub fn alpha_violations(&self, lambda0: f64, delta: f64) -> Vec<&ReturnBlock> {
        self.blocks.iter().filter(|b| b.p_entry < lambda0.powi(b.n as i32 + 1) * delta).collect()
    }

    /// Blocks whose averaged exponent is not below `log beta'`.
    pub fn square_violations(&self, beta_prime: f64) -> Vec<&ReturnBlock> {
        let lb = beta_prime.ln();
        self.blocks.iter().filter(|b| !(b.exponent() < lb)).collect()
    }
}

/// One return `0^n 1 0^m` of an expanding itinerary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnStep {
    pub n: usize,
    pub m: usize,
}

/// Result of [`Ifs::expanding_itinerary`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Itinerary {
    pub word: Word,
    pub returns: Vec<ReturnStep>,
    /// Sub-interval of `J` mapped by the itinerary across `J` (all of `J` unless clipped).
    pub domain: (f64, f64),
    /// Image of `domain`.
    pub image: (f64, f64),
    /// Minimum of `|(f_[word])'|` over `domain`.
    pub kappa_est: f64,
    /// The repelling fixed point in `domain`.
    pub fixed_point: f64,
    /// `|f_[word](q) - q|` at the fixed point.
    pub residual: f64,
    /// `log |(f_[word])'(q)|`.
    pub log_deriv_at_fixed_point: f64,
    /// Minimum over `J` of `|(f1 o f0^n(J))'|` for the first return.
    pub first_return_min_deriv: f64,
    /// Image `f1 o f0^n(J)(J)` of the first return.
    pub first_return_image: (f64, f64),
}

/// Lower bound `gamma lambda0^3 (1 - lambda0) / (1 - 1/beta0)` for one return.
pub fn kappa_bound(p: &SystemParams) -> f64 {
    p.gamma * p.lambda0.powi(3) * (1.0 - p.lambda0) / (1.0 - 1.0 / p.beta0)
}

fn check_unit(x: f64) -> Result<f64> {
    if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x) {
        Err(Error::Domain(x))
    } else {
        Ok(x.clamp(0.0, 1.0))
    }
}

impl Ifs {
    pub fn new(params: &SystemParams) -> Result<Ifs> {
        let maps = params.maps()?;
        Ok(Ifs { params: *params, maps, log_gamma: params.gamma.ln() })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn map(&self, s: u8) -> &FiberMap {
        &self.maps[s as usize]
    }

    /// One link: `(f_s(x), f_s'(x))`, clamped to [0, 1].
    #[inline]
    pub fn step(&self, s: u8, x: f64) -> (f64, f64) {
        let (v, d) = self.maps[s as usize].value_deriv(x);
        (v.clamp(0.0, 1.0), d)
    }

    /// One link with `log |f_s'(x)|`.
    #[inline]
    pub fn step_log(&self, s: u8, x: f64) -> (f64, f64) {
        if s == 1 {
            (self.params.gamma * (1.0 - x), self.log_gamma)
        } else {
            let (v, d) = self.maps[s as usize].value_deriv(x);
            (v.clamp(0.0, 1.0), d.ln())
        }
    }

    /// Value only, clamped.
    #[inline]
    pub fn step_value(&self, s: u8, x: f64) -> f64 {
        self.maps[s as usize].value(x).clamp(0.0, 1.0)
    }

    /// `f_[syms](x)` and `log |(f_[syms])'(x)|` without domain checks.
    #[inline]
    pub fn compose_log(&self, syms: &[u8], mut x: f64) -> (f64, f64) {
        let mut l = 0.0;
        for &s in syms {
            let (v, ld) = self.step_log(s, x);
            x = v;
            l += ld;
        }
        (x, l)
    }

    /// `f_[syms](x)` and the signed derivative product; for short words only
    /// (every link derivative lies within a bounded range, so no overflow for length <= 64).
    #[inline]
    pub fn compose_linear(&self, syms: &[u8], mut x: f64) -> (f64, f64) {
        let mut d = 1.0;
        for &s in syms {
            let (v, dv) = self.step(s, x);
            x = v;
            d *= dv;
        }
        (x, d)
    }

    /// `f_[syms](x)` only.
    #[inline]
    pub fn compose_value(&self, syms: &[u8], mut x: f64) -> f64 {
        for &s in syms {
            x = self.step_value(s, x);
        }
        x
    }

    /// `f_[word](x)` with the log-absolute derivative and the orientation sign.
    pub fn compose_eval(&self, word: &Word, x: f64) -> Result<Composed> {
        let mut x = check_unit(x)?;
        let mut l = 0.0;
        for &s in word.symbols() {
            let (v, d) = self.maps[s as usize].value_deriv(x);
            x = check_unit(v)?;
            l += if s == 1 { self.log_gamma } else { d.ln() };
        }
        let sign = if word.ones().is_multiple_of(2) { 1 } else { -1 };
        Ok(Composed { value: x, log_abs_deriv: l, sign })
    }

    /// Iterated preimage `f_[syms]^{-1}(y)`, or an error when `y` leaves an image.
    pub fn compose_inverse(&self, syms: &[u8], mut y: f64) -> Result<f64> {
        for &s in syms.iter().rev() {
            y = self.maps[s as usize].invert(y)?;
        }
        Ok(y)
    }

    /// Refines a root of `g(x) - x` in `[a, b]` where the residual changes sign.
    /// `g` is `f_[syms]` applied `reps` times.
    fn refine_root(&self, syms: &[u8], reps: usize, mut a: f64, mut b: f64) -> Option<f64> {
        let eval = |x: f64| {
            let mut v = x;
            let mut d = 1.0;
            for _ in 0..reps {
                let (nv, nd) = self.compose_linear(syms, v);
                v = nv;
                d *= nd;
            }
            (v - x, d - 1.0)
        };
        let (ha, _) = eval(a);
        let (hb, _) = eval(b);
        if ha == 0.0 {
            return Some(a);
        }
        if hb == 0.0 {
            return Some(b);
        }
        if ha.signum() == hb.signum() {
            return None;
        }
        let neg_at_a = ha < 0.0;
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            if b - a <= ROOT_TOL {
                return Some(0.5 * (a + b));
            }
            let (h, dh) = eval(x);
            if h == 0.0 {
                return Some(x);
            }
            if (h < 0.0) == neg_at_a {
                a = x;
            } else {
                b = x;
            }
            let nx = x - h / dh;
            let next = if nx.is_finite() && nx > a && nx < b { nx } else { 0.5 * (a + b) };
            if (next - x).abs() <= 0.25 * ROOT_TOL {
                return Some(next);
            }
            x = next;
        }
        None
    }

    /// Roots of `g(x) - x` from residuals on a grid, refined on `f_[syms]^reps`.
    pub(crate) fn roots_from_grid(
        &self,
        syms: &[u8],
        reps: usize,
        grid: &[f64],
        resid: &[f64],
        scan: &mut FixedPointScan,
        roots: &mut Vec<f64>,
    ) {
        for i in 0..grid.len() {
            let h = resid[i];
            if h == 0.0 {
                roots.push(grid[i]);
                continue;
            }
            if i + 1 < grid.len() {
                let h1 = resid[i + 1];
                if h1 != 0.0 && h.signum() != h1.signum() {
                    match self.refine_root(syms, reps, grid[i], grid[i + 1]) {
                        Some(x) => roots.push(x),
                        None => scan.failures.push((grid[i], grid[i + 1])),
                    }
                }
            }
            if i >= 1 && i + 1 < grid.len() {
                let (hl, hr) = (resid[i - 1], resid[i + 1]);
                let same = hl.signum() == h.signum() && hr.signum() == h.signum() && hl != 0.0 && hr != 0.0;
                if same && h.abs() < hl.abs() && h.abs() < hr.abs() && h.abs() < TANGENCY_TOL {
                    scan.near_tangencies.push((grid[i - 1], grid[i + 1]));
                }
            }
        }
    }

    /// Fixed points of `g = f_[word]` with their exponents; for orientation
    /// reversing `g` also the points of period two (fixed points of `g^2`).
    pub fn fixed_points(&self, word: &Word) -> FixedPointScan {
        let syms = word.symbols();
        let m = syms.len() as f64;
        let grid: Vec<f64> = (0..=FIXED_POINT_CELLS).map(|i| i as f64 / FIXED_POINT_CELLS as f64).collect();
        let images: Vec<f64> = grid.iter().map(|&x| self.compose_value(syms, x)).collect();
        let resid: Vec<f64> = images.iter().zip(&grid).map(|(y, x)| y - x).collect();
        let mut scan = FixedPointScan::default();
        let mut roots = Vec::new();
        self.roots_from_grid(syms, 1, &grid, &resid, &mut scan, &mut roots);
        for &p in &roots {
            let (_, l) = self.compose_log(syms, p);
            scan.records.push(ExponentRecord {
                word: word.clone(),
                fixed_point: p,
                exponent: l / m,
                attracting: l < 0.0,
                period_two: false,
            });
        }
        if word.ones() % 2 == 1 {
            let fixed = roots.first().copied().unwrap_or(0.5);
            for (x, y) in self.period_two_points(syms, fixed, &grid, &images, &mut scan) {
                let (_, l1) = self.compose_log(syms, x);
                let (_, l2) = self.compose_log(syms, y);
                let e = (l1 + l2) / (2.0 * m);
                for q in [x, y] {
                    scan.records.push(ExponentRecord {
                        word: word.clone(),
                        fixed_point: q,
                        exponent: e,
                        attracting: e < 0.0,
                        period_two: true,
                    });
                }
            }
        }
        for r in &scan.records {
            if r.attracting && !r.period_two {
                debug_assert!(self.forward_check(syms, r.fixed_point));
            }
        }
        scan.records.sort_by(|a, b| a.fixed_point.total_cmp(&b.fixed_point));
        scan
    }

    /// Period-two orbits `{x, g(x)}` of a decreasing `g` with fixed point `fixed`,
    /// found as roots of `g^2(x) - x` on the grid left of `fixed`.
    pub(crate) fn period_two_points(
        &self,
        syms: &[u8],
        fixed: f64,
        grid: &[f64],
        images: &[f64],
        scan: &mut FixedPointScan,
    ) -> Vec<(f64, f64)> {
        let left: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] < fixed).collect();
        if left.is_empty() {
            return Vec::new();
        }
        let g: Vec<f64> = left.iter().map(|&i| grid[i]).collect();
        let r: Vec<f64> = left.iter().map(|&i| self.compose_value(syms, images[i]) - grid[i]).collect();
        let mut roots = Vec::new();
        self.roots_from_grid(syms, 2, &g, &r, scan, &mut roots);
        roots.into_iter().filter(|&x| fixed - x > 1e-9).map(|x| (x, self.compose_value(syms, x))).collect()
    }

    /// Forward iterates from both sides of an attracting fixed point approach it.
    fn forward_check(&self, syms: &[u8], p: f64) -> bool {
        let eps = 1e-6;
        [p - eps, p + eps].iter().filter(|&&x| (0.0..=1.0).contains(&x)).all(|&x0| {
            let mut x = x0;
            for _ in 0..4 {
                x = self.compose_value(syms, x);
            }
            (x - p).abs() <= (x0 - p).abs() + 1e-12
        })
    }

    /// Limit of `h^n([0, 1])` with `h = g` (or `g^2` when `g` reverses orientation).
    pub fn fiber_interval(&self, word: &Word, tol: f64) -> Result<FiberInterval> {
        self.fiber_interval_capped(word, tol, FIBER_ITER_CAP)
    }

    pub fn fiber_interval_capped(&self, word: &Word, tol: f64, cap: usize) -> Result<FiberInterval> {
        if !(tol > 0.0) {
            return Err(Error::Argument(format!("tolerance {tol} must be positive")));
        }
        let syms = word.symbols();
        let reps = if word.ones() % 2 == 1 { 2 } else { 1 };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for it in 1..=cap {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..reps {
                a = self.compose_value(syms, a);
                b = self.compose_value(syms, b);
            }
            let (a, b) = (a.min(b), a.max(b));
            let moved = (a - lo).abs().max((b - hi).abs());
            lo = a;
            hi = b;
            if moved < tol || hi - lo < tol {
                return Ok(FiberInterval { word: word.clone(), left: lo, right: hi, iterations: it });
            }
        }
        Err(Error::IterationCap { cap, lo, hi })
    }

    /// Endpoints of the fiber interval with the per-symbol exponents there.
    /// The endpoints are the limits of `h^n(0)` and `h^n(1)` (`h = g` or `g^2`),
    /// iterated to `1e-10` and polished by Newton steps on `h(x) - x`; a capped
    /// iteration falls back to the extreme roots of [`Ifs::fixed_points`].
    pub fn fiber_endpoints(&self, word: &Word) -> Result<(FiberInterval, f64, f64)> {
        let syms = word.symbols();
        let reps = if word.ones() % 2 == 1 { 2 } else { 1 };
        let h = |x: f64| {
            let (mut v, mut d) = (x, 1.0);
            for _ in 0..reps {
                let (nv, nd) = self.compose_linear(syms, v);
                v = nv;
                d *= nd;
            }
            (v, d)
        };
        let limit = |start: f64| -> Option<(f64, usize)> {
            let mut x = start;
            for it in 1..=100_000 {
                let y = h(x).0;
                if (y - x).abs() < 1e-10 {
                    let mut x = y;
                    for _ in 0..5 {
                        let (v, d) = h(x);
                        let step = (v - x) / (1.0 - d);
                        let cand = x + step;
                        if !step.is_finite() || !(0.0..=1.0).contains(&cand) || (h(cand).0 - cand).abs() >= (v - x).abs() {
                            break;
                        }
                        x = cand;
                    }
                    return Some((x, it));
                }
                x = y;
            }
            None
        };
        let (left, right, iterations) = match (limit(0.0), limit(1.0)) {
            (Some((a, ia)), Some((b, ib))) => (a.min(b), a.max(b), ia.max(ib)),
            _ => {
                let scan = self.fixed_points(word);
                let pts: Vec<f64> = scan.records.iter().map(|r| r.fixed_point).collect();
                match (pts.first(), pts.last()) {
                    (Some(&a), Some(&b)) => (a, b, 100_000),
                    _ => return Err(Error::NoConvergence { lo: 0.0, hi: 1.0 }),
                }
            }
        };
        let exponent = |x: f64| {
            let mut l = 0.0;
            let mut v = x;
            for _ in 0..reps {
                let (nv, nl) = self.compose_log(syms, v);
                v = nv;
                l += nl;
            }
            l / (reps * syms.len()) as f64
        };
        let interval = FiberInterval { word: word.clone(), left, right, iterations };
        Ok((interval, exponent(left), exponent(right)))
    }

    /// Orbit of `x0` under the symbols of `word`, classified against
    /// `h = [0, delta]` and `hp = [delta', 1]`.
    pub fn analyze_returns(&self, word: &Word, x0: f64, h: (f64, f64), hp: (f64, f64)) -> Result<ReturnAnalysis> {
        let x0 = check_unit(x0)?;
        let syms = word.symbols();
        let mut orbit = Vec::with_capacity(syms.len() + 1);
        let mut logs = Vec::with_capacity(syms.len());
        orbit.push(x0);
        let mut x = x0;
        for &s in syms {
            let (v, l) = self.step_log(s, x);
            logs.push(l);
            x = v;
            orbit.push(x);
        }
        let in_h = |y: f64| y >= h.0 && y <= h.1;
        let in_hp = |y: f64| y >= hp.0 && y <= hp.1;
        let n = orbit.len();
        let mut a = ReturnAnalysis { orbit: Vec::new(), ..Default::default() };
        let mut j = 0;
        let mut last_exit: Option<usize> = None;
        while j < n {
            if !in_h(orbit[j]) {
                j += 1;
                continue;
            }
            let r = j;
            while j + 1 < n && in_h(orbit[j + 1]) {
                j += 1;
            }
            let complete = j + 1 < n;
            let e = j;
            j += 1;
            if r == 0 {
                a.skipped += 1;
                last_exit = Some(e);
                continue;
            }
            a.entries.push(r);
            if complete {
                a.exits.push(e);
            }
            let mut i = r;
            let floor = last_exit.map_or(0, |x| x + 1);
            while i > floor && in_hp(orbit[i - 1]) {
                i -= 1;
            }
            last_exit = Some(e);
            if syms[r - 1] != 1 {
                a.violations.push(format!("entry at {r} not by symbol 1"));
            }
            if i == r {
                a.violations.push(format!("entry at {r} not preceded by a visit to H'"));
                a.skipped += 1;
                continue;
            }
            if i == 0 || !complete {
                a.skipped += 1;
                continue;
            }
            if let Some(k) = (i - 1..=r.saturating_sub(2)).find(|&k| k + 1 < r && syms[k] != 0) {
                a.violations.push(format!("symbol {} at {k} inside the approach to entry {r}", syms[k]));
            }
            let f0_dp = self.step_value(0, hp.0);
            if !(orbit[i] >= hp.0 && orbit[i] < f0_dp) {
                a.violations.push(format!("approach point {} at {i} outside [delta', f0(delta'))", orbit[i]));
            }
            let log_deriv: f64 = logs[i..=e].iter().sum();
            a.blocks.push(ReturnBlock { i, r, e, n: r - i - 1, p_entry: orbit[r], p_approach: orbit[i], log_deriv });
        }
        a.orbit = orbit;
        Ok(a)
    }

    /// `n >= 1` with `f0^n(x) >= target`, counting by direct iteration.
    fn f0_steps_to(&self, x: f64, target: f64, cap: usize) -> Result<usize> {
        let mut y = x;
        for n in 1..=cap {
            y = self.step_value(0, y);
            if y >= target {
                return Ok(n);
            }
        }
        Err(Error::IterationCap { cap, lo: x, hi: y })
    }

    /// Whether the one-return derivative bound holds for every `x` in
    /// `[f0^{-2}(b), b]` and every admissible ladder length.
    pub fn ladder_holds(&self, b: f64, samples: usize) -> Result<bool> {
        let kappa = kappa_bound(&self.params);
        if !(kappa > 1.0) || !(b > 0.0 && b < 0.5) {
            return Ok(false);
        }
        let f0 = &self.maps[0];
        let lo = f0.invert(f0.invert(b)?)?;
        let n_max = self.f0_steps_to(lo, 1.0 - b, 1_000_000)?;
        for k in 0..=samples {
            let x = lo + (b - lo) * k as f64 / samples as f64;
            let n_min = self.f0_steps_to(x, 1.0 - b, 1_000_000)?;
            let mut y = x;
            let mut l = 0.0;
            for n in 1..=n_max {
                let (v, ld) = self.step_log(0, y);
                y = v;
                l += ld;
                if n >= n_min && self.log_gamma + l < kappa.ln() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Largest `b = delta k / steps` (`k <= steps`) satisfying [`Ifs::ladder_holds`].
    pub fn choose_b(&self, steps: usize) -> Result<f64> {
        for k in (1..=steps).rev() {
            let b = self.params.delta * k as f64 / steps as f64;
            if self.ladder_holds(b, 64)? {
                return Ok(b);
            }
        }
        Err(Error::Degenerate("no admissible b below delta".into()))
    }

    /// Builds `xi(J) = 0^n 1 0^m ...` by concatenating returns until the image
    /// of (a sub-interval of) `J` covers `J`, and locates the repelling fixed point.
    pub fn expanding_itinerary(&self, j: (f64, f64), b: f64) -> Result<Itinerary> {
        const MAX_RETURNS: usize = 64;
        let f0 = &self.maps[0];
        let lo_b = f0.invert(f0.invert(b)?)?;
        let lo1_b = f0.invert(b)?;
        if !(j.0 < j.1 && j.0 >= lo_b && j.1 <= b) {
            return Err(Error::Argument(format!("J = [{}, {}] not inside [f0^-2(b), b] = [{lo_b}, {b}]", j.0, j.1)));
        }
        let mut syms: Vec<u8> = Vec::new();
        let mut returns = Vec::new();
        let mut domain = j;
        let mut img = j;
        let mut first: Option<(f64, (f64, f64))> = None;
        for _ in 0..MAX_RETURNS {
            let n = self.f0_steps_to(img.0, 1.0 - b, 1_000_000)?;
            let start = syms.len();
            syms.extend(std::iter::repeat_n(0, n));
            syms.push(1);
            let ret = &syms[start..];
            let a = self.compose_value(ret, img.0);
            let c = self.compose_value(ret, img.1);
            let after = (a.min(c), a.max(c));
            if first.is_none() {
                let min_d = (0..=64)
                    .map(|k| j.0 + (j.1 - j.0) * k as f64 / 64.0)
                    .map(|x| self.compose_log(ret, x).1.exp())
                    .fold(f64::INFINITY, f64::min);
                first = Some((min_d, after));
            }
            let m = {
                let mut y = after.1;
                let mut m = 0;
                loop {
                    y = self.step_value(0, y);
                    m += 1;
                    if y >= lo1_b {
                        break m;
                    }
                    if m > 1_000_000 {
                        return Err(Error::IterationCap { cap: m, lo: after.0, hi: after.1 });
                    }
                }
            };
            syms.extend(std::iter::repeat_n(0, m));
            returns.push(ReturnStep { n, m });
            let mut now = (self.compose_value(&syms[start..], img.0), self.compose_value(&syms[start..], img.1));
            if now.0 > now.1 {
                now = (now.1, now.0);
            }
            let covers = |i: (f64, f64)| i.0 <= j.0 && i.1 >= j.1;
            let mut done = covers(now);
            if !done {
                let pushed = (self.step_value(0, now.0), self.step_value(0, now.1));
                if covers(pushed) {
                    syms.push(0);
                    if let Some(last) = returns.last_mut() {
                        last.m += 1;
                    }
                    now = pushed;
                    done = true;
                }
            }
            if done {
                img = now;
                break;
            }
            let clipped = (now.0.max(lo_b), now.1.min(b));
            if clipped != now {
                let p0 = self.compose_inverse(&syms, clipped.0)?;
                let p1 = self.compose_inverse(&syms, clipped.1)?;
                domain = (p0.min(p1).max(domain.0), p0.max(p1).min(domain.1));
            }
            img = clipped;
            if returns.len() == MAX_RETURNS {
                return Err(Error::IterationCap { cap: MAX_RETURNS, lo: img.0, hi: img.1 });
            }
        }
        if !(img.0 <= j.0 && img.1 >= j.1) {
            return Err(Error::IterationCap { cap: MAX_RETURNS, lo: img.0, hi: img.1 });
        }
        let word = Word::new(syms)?;
        let s = word.symbols();
        let kappa_est = (0..=256)
            .map(|k| domain.0 + (domain.1 - domain.0) * k as f64 / 256.0)
            .map(|x| self.compose_log(s, x).1)
            .fold(f64::INFINITY, f64::min)
            .exp();
        let h = |x: f64| self.compose_value(s, x) - x;
        let (mut a, mut c) = domain;
        let (ha, hc) = (h(a), h(c));
        if ha.signum() == hc.signum() && ha != 0.0 && hc != 0.0 {
            return Err(Error::NoConvergence { lo: a, hi: c });
        }
        let neg_at_a = ha < 0.0;
        while c - a > 1e-15 {
            let mid = 0.5 * (a + c);
            if mid <= a || mid >= c {
                break;
            }
            let hm = h(mid);
            if hm == 0.0 {
                a = mid;
                c = mid;
                break;
            }
            if (hm < 0.0) == neg_at_a {
                a = mid;
            } else {
                c = mid;
            }
        }
        let q = 0.5 * (a + c);
        let (gq, lq) = self.compose_log(s, q);
        let image = {
            let (u, v) = (self.compose_value(s, domain.0), self.compose_value(s, domain.1));
            (u.min(v), u.max(v))
        };
        let (first_return_min_deriv, first_return_image) = first.unwrap_or((f64::NAN, (f64::NAN, f64::NAN)));
        Ok(Itinerary {
            word,
            returns,
            domain,
            image,
            kappa_est,
            fixed_point: q,
            residual: (gq - q).abs(),
            log_deriv_at_fixed_point: lq,
            first_return_min_deriv,
            first_return_image,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ifs() -> Ifs {
        Ifs::new(&SystemParams::default_validated()).unwrap()
    }

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn compose_at_fixed_points() {
        let f = ifs();
        let p = *f.params();
        let c = f.compose_eval(&w("0"), 0.0).unwrap();
        assert_eq!(c.value, 0.0);
        assert!((c.log_abs_deriv - p.beta0.ln()).abs() < 1e-14);
        assert_eq!(c.sign, 1);
        let c = f.compose_eval(&w("11"), p.p1()).unwrap();
        assert!((c.value - p.p1()).abs() < 1e-15);
        assert!((c.log_abs_deriv - 2.0 * p.gamma.ln()).abs() < 1e-15);
        assert_eq!(c.sign, 1);
        let c = f.compose_eval(&w("0202"), 0.0).unwrap();
        assert_eq!(c.value, 0.0);
        assert!((c.log_abs_deriv - 2.0 * (p.beta0.ln() + p.beta2.ln())).abs() < 1e-14);
        assert_eq!(f.compose_eval(&w("1"), 0.2).unwrap().sign, -1);
        assert!(f.compose_eval(&w("0"), 1.2).is_err());
    }

    #[test]
    fn fixed_points_of_single_symbols() {
        let f = ifs();
        let p = *f.params();
        let r = f.fixed_points(&w("1")).records;
        assert_eq!(r.len(), 1);
        assert!((r[0].fixed_point - p.p1()).abs() < 1e-12);
        assert!((r[0].exponent - p.gamma.ln()).abs() < 1e-12);
        assert!(r[0].attracting);

        let r = f.fixed_points(&w("0")).records;
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].fixed_point, 0.0);
        assert!((r[0].exponent - p.beta0.ln()).abs() < 1e-14);
        assert!(!r[0].attracting);
        assert_eq!(r[1].fixed_point, 1.0);
        assert!((r[1].exponent - p.lambda0.ln()).abs() < 1e-14);
        assert!(r[1].attracting);

        let r = f.fixed_points(&w("2")).records;
        assert_eq!(r.len(), 2);
        assert!((r[0].exponent - p.beta2.ln()).abs() < 1e-14);
        assert!((r[1].fixed_point - p.p2).abs() < 1e-12);
        let d2 = f.map(2).deriv(p.p2).unwrap();
        assert!((r[1].exponent - d2.ln()).abs() < 1e-10);
        assert!(r[1].attracting && r[1].exponent < 0.0);
    }

    #[test]
    fn fixed_points_are_fixed() {
        let f = ifs();
        for s in ["01", "0010", "2120", "00000001", "1102", "011"] {
            let scan = f.fixed_points(&w(s));
            assert!(scan.failures.is_empty());
            assert!(!scan.records.is_empty(), "{s}");
            for r in &scan.records {
                let reps = if r.period_two { 2 } else { 1 };
                let mut x = r.fixed_point;
                for _ in 0..reps {
                    x = f.compose_value(w(s).symbols(), x);
                }
                assert!((x - r.fixed_point).abs() < 1e-11, "{s} {r:?}");
            }
        }
    }

    #[test]
    fn fiber_intervals_of_single_symbols() {
        let f = ifs();
        let p = *f.params();
        let i = f.fiber_interval(&w("0"), 1e-12).unwrap();
        assert_eq!((i.left, i.right), (0.0, 1.0));
        let i = f.fiber_interval(&w("1"), 1e-13).unwrap();
        assert!(i.width() < 1e-12 && (i.left - p.p1()).abs() < 1e-12);
        let i = f.fiber_interval(&w("2"), 1e-14).unwrap();
        assert_eq!(i.left, 0.0);
        assert!((i.right - p.p2).abs() < 1e-12);
    }

    #[test]
    fn fiber_interval_cap() {
        let f = ifs();
        assert!(matches!(f.fiber_interval_capped(&w("2"), 1e-14, 3), Err(Error::IterationCap { .. })));
    }

    #[test]
    fn no_entry_into_h() {
        let f = ifs();
        let p = *f.params();
        let a = f.analyze_returns(&w("2222"), 0.5, (0.0, p.delta), (p.delta_prime(), 1.0)).unwrap();
        assert!(a.entries.is_empty() && a.blocks.is_empty());
    }

    #[test]
    fn single_return_matches_direct_classification() {
        let f = ifs();
        let p = *f.params();
        let dp = p.delta_prime();
        // start just inside [delta', f0(delta')) after a leading 0 so the approach is complete
        let x0 = f.map(0).invert(0.5 * (dp + f.map(0).eval(dp).unwrap())).unwrap();
        let mut syms = vec![0u8];
        let mut x = f.compose_value(&[0], x0);
        let mut n = 0;
        while f.step_value(0, x) < 1.0 - 0.5 * p.delta / p.gamma {
            x = f.step_value(0, x);
            syms.push(0);
            n += 1;
        }
        syms.push(0);
        syms.push(1);
        syms.extend([0, 0, 0, 2, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        let word = Word::new(syms.clone()).unwrap();
        let a = f.analyze_returns(&word, x0, (0.0, p.delta), (dp, 1.0)).unwrap();
        assert!(a.violations.is_empty(), "{:?}", a.violations);
        assert_eq!(a.blocks.len(), 1);
        let b = &a.blocks[0];
        let r = syms.iter().position(|&s| s == 1).unwrap() + 1;
        assert_eq!(b.r, r);
        assert_eq!(b.i, 1);
        assert_eq!(b.n, r - 2);
        assert_eq!(b.n, n + 1);
        for k in 0..a.orbit.len() {
            let inside = a.orbit[k] <= p.delta;
            assert_eq!(inside, k >= b.r && k <= b.e);
        }
        assert!(a.alpha_violations(p.lambda0, p.delta).is_empty());
    }

    #[test]
    fn ladder_and_itinerary() {
        let f = ifs();
        let p = *f.params();
        let b = f.choose_b(100).unwrap();
        assert!(b <= p.delta);
        let f0 = f.map(0);
        let lo = f0.invert(f0.invert(b).unwrap()).unwrap();
        let j = (lo + 0.3 * (b - lo), lo + 0.35 * (b - lo));
        let it = f.expanding_itinerary(j, b).unwrap();
        assert!(it.kappa_est > 1.0);
        assert!(it.residual < 1e-10);
        assert!(it.log_deriv_at_fixed_point > 0.0);
        assert!(it.fixed_point >= it.domain.0 && it.fixed_point <= it.domain.1);
        assert!(it.first_return_min_deriv >= kappa_bound(&p));
        assert!(it.first_return_image.0 > 0.0 && it.first_return_image.1 <= b);
        assert_eq!(it.word.symbols()[it.returns[0].n], 1);
    }

    #[test]
    fn itinerary_rejects_bad_interval() {
        let f = ifs();
        assert!(f.expanding_itinerary((0.3, 0.4), 0.02).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn word(max: usize) -> impl Strategy<Value = Word> {
            proptest::collection::vec(0u8..3, 1..=max).prop_map(|v| Word::new(v).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn chain_rule(a in word(40), b in word(40), x in 0.0f64..=1.0) {
                let f = ifs();
                let ca = f.compose_eval(&a, x).unwrap();
                let cb = f.compose_eval(&b, ca.value).unwrap();
                let cab = f.compose_eval(&a.concat(&b), x).unwrap();
                prop_assert!((cab.value - cb.value).abs() <= 1e-12);
                let tol = 1e-12 * (a.len() + b.len()) as f64;
                prop_assert!((cab.log_abs_deriv - ca.log_abs_deriv - cb.log_abs_deriv).abs() <= tol);
                prop_assert_eq!(cab.sign, ca.sign * cb.sign);
            }

            #[test]
            fn lateral_exponent_at_zero(v in proptest::collection::vec(prop_oneof![Just(0u8), Just(2u8)], 1..30)) {
                let f = ifs();
                let p = *f.params();
                let w = Word::new(v).unwrap();
                let (n0, _, n2) = crate::symbolic::count_symbols(&w);
                let c = f.compose_eval(&w, 0.0).unwrap();
                prop_assert_eq!(c.value, 0.0);
                let exact = (n0 as f64 * p.beta0.ln() + n2 as f64 * p.beta2.ln()) / w.len() as f64;
                prop_assert!((c.log_abs_deriv / w.len() as f64 - exact).abs() <= 1e-13);
            }

            #[test]
            fn fiber_endpoints_invariant(w in word(6)) {
                let f = ifs();
                let i = f.fiber_interval(&w, 1e-13).unwrap();
                let reps = if w.ones() % 2 == 1 { 2 } else { 1 };
                for e in [i.left, i.right] {
                    let mut x = e;
                    for _ in 0..reps {
                        x = f.compose_value(w.symbols(), x);
                    }
                    prop_assert!((x - e).abs() <= 1e-9, "{} {:?}", w, i);
                }
            }
        }
    }
}
