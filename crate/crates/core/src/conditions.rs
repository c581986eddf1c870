//! Numerical validation of the hypotheses on the fiber maps, the derived
//! constants `delta'`, `beta'`, `beta_H`, `lambda'`, `L`, and a search for
//! feasible parameter bundles.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{FiberMap, SystemParams};

/// Default number of grid cells used for extrema and monotonicity checks.
pub const DEFAULT_GRID: usize = 10_000;

/// Default margin required on strict inequalities.
pub const DEFAULT_MARGIN: f64 = 1e-6;

/// Rounding allowance for non-strict inequalities that are tight by construction.
pub const WEAK_TOL: f64 = 1e-12;

/// Allowed residual of identities such as `f0(1) = 1`.
pub const IDENTITY_TOL: f64 = 1e-12;

/// How a clause's slack is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClauseKind {
    /// `slack >= margin`.
    Strict,
    /// `slack >= -WEAK_TOL`.
    Weak,
    /// `slack` is minus the residual; passes when the residual is at most `IDENTITY_TOL`.
    Identity,
}

/// One checked inequality or identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub group: String,
    pub name: String,
    pub kind: ClauseKind,
    pub slack: f64,
    pub pass: bool,
}

/// Grid-evaluated constants attached to `H = [0, delta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Left endpoint of `H' = f1^{-1}(H) = [delta', 1]`.
    pub delta_prime: f64,
    /// Max of `f0'`, `f2'` off `H`.
    pub beta_prime: f64,
    /// Min of `f0'`, `f2'` on `H`.
    pub beta_h: f64,
    /// Max of `f0'` on `H'`.
    pub lambda_prime: f64,
    /// Smallest integer exceeding `4 |log lambda0| log beta+ / (log beta_H log beta')`.
    pub l: u32,
    /// The real bound that `l` exceeds.
    pub l_bound: f64,
}

/// Per-clause outcome of [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub grid_resolution: usize,
    pub margin: f64,
    pub clauses: Vec<Clause>,
    pub derived: Option<DerivedConstants>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| !c.pass)
    }

    /// Smallest slack over strict clauses, or `-inf` when a weak clause or identity fails.
    pub fn worst_strict_slack(&self) -> f64 {
        let hard_fail = self.clauses.iter().any(|c| c.kind != ClauseKind::Strict && !c.pass);
        if hard_fail {
            return f64::NEG_INFINITY;
        }
        self.clauses.iter().filter(|c| c.kind == ClauseKind::Strict).map(|c| c.slack).fold(f64::INFINITY, f64::min)
    }

    /// Plain-text table: group, clause, kind, pass flag, slack.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# grid_resolution = {}\n# margin = {:e}\n", self.grid_resolution, self.margin));
        out.push_str("group,clause,kind,pass,slack\n");
        for c in &self.clauses {
            let kind = match c.kind {
                ClauseKind::Strict => "strict",
                ClauseKind::Weak => "weak",
                ClauseKind::Identity => "identity",
            };
            out.push_str(&format!("{},{},{},{},{:.6e}\n", c.group, c.name, kind, c.pass, c.slack));
        }
        if let Some(d) = &self.derived {
            out.push_str(&format!(
                "# delta_prime = {:.12}\n# beta_prime = {:.12}\n# beta_h = {:.12}\n# lambda_prime = {:.12}\n# L = {} (bound {:.6})\n",
                d.delta_prime, d.beta_prime, d.beta_h, d.lambda_prime, d.l, d.l_bound
            ));
        }
        out
    }
}

struct Builder {
    margin: f64,
    clauses: Vec<Clause>,
}

impl Builder {
    fn push(&mut self, group: &str, name: &str, kind: ClauseKind, slack: f64) {
        let pass = match kind {
            ClauseKind::Strict => slack >= self.margin,
            ClauseKind::Weak => slack >= -WEAK_TOL,
            ClauseKind::Identity => slack >= -IDENTITY_TOL,
        };
        self.clauses.push(Clause { group: group.into(), name: name.into(), kind, slack, pass });
    }

    fn identity(&mut self, group: &str, name: &str, lhs: f64, rhs: f64) {
        self.push(group, name, ClauseKind::Identity, -(lhs - rhs).abs());
    }
}

fn grid(a: f64, b: f64, cells: usize) -> impl Iterator<Item = f64> {
    (0..=cells).map(move |i| if i == cells { b } else { a + (b - a) * i as f64 / cells as f64 })
}

/// Minimum over the grid of the difference quotient `-(f'(x_{i+1}) - f'(x_i)) / h`.
fn min_decrease_rate(map: &FiberMap, cells: usize) -> f64 {
    let h = 1.0 / cells as f64;
    let mut prev = map.value_deriv(0.0).1;
    let mut worst = f64::INFINITY;
    for x in grid(0.0, 1.0, cells).skip(1) {
        let d = map.value_deriv(x).1;
        worst = worst.min((prev - d) / h);
        prev = d;
    }
    worst
}

/// Extremum of `f'` on `[a, b]`: exact endpoint when `f'` is certified
/// decreasing, otherwise a grid scan padded by a Lipschitz bound.
fn deriv_extremum(map: &FiberMap, a: f64, b: f64, cells: usize, decreasing: bool, want_max: bool) -> f64 {
    if decreasing {
        return map.value_deriv(if want_max { a } else { b }).1;
    }
    let n = ((cells as f64) * (b - a)).ceil().max(16.0) as usize;
    let h = (b - a) / n as f64;
    let mut ext = if want_max { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut lip: f64 = 0.0;
    for x in grid(a, b, n) {
        let d = map.value_deriv(x).1;
        ext = if want_max { ext.max(d) } else { ext.min(d) };
        lip = lip.max(map.second_deriv(x).unwrap_or(0.0).abs());
    }
    let pad = 0.5 * h * lip;
    if want_max {
        ext + pad
    } else {
        ext - pad
    }
}

fn derived_from_maps(p: &SystemParams, maps: &[FiberMap; 3], cells: usize, dec0: bool, dec2: bool) -> DerivedConstants {
    let [f0, _, f2] = maps;
    let delta = p.delta;
    let delta_prime = p.delta_prime();
    let beta_prime = deriv_extremum(f0, delta, 1.0, cells, dec0, true).max(deriv_extremum(f2, delta, 1.0, cells, dec2, true));
    let beta_h = deriv_extremum(f0, 0.0, delta, cells, dec0, false).min(deriv_extremum(f2, 0.0, delta, cells, dec2, false));
    let lambda_prime = deriv_extremum(f0, delta_prime, 1.0, cells, dec0, true);
    let l_bound = 4.0 * p.lambda0.ln().abs() * p.beta02_plus().ln() / (beta_h.ln() * beta_prime.ln());
    let l = if l_bound.is_finite() && l_bound >= 0.0 && l_bound < u32::MAX as f64 { (l_bound.floor() as u32 + 1).max(1) } else { u32::MAX };
    DerivedConstants { delta_prime, beta_prime, beta_h, lambda_prime, l, l_bound }
}

/// Grid-evaluated constants of the (F012) hypothesis.
pub fn derive_constants(params: &SystemParams, grid_resolution: usize) -> Result<DerivedConstants> {
    if grid_resolution < 1000 {
        return Err(Error::Argument(format!("grid resolution {grid_resolution} below 1000")));
    }
    let maps = params.maps()?;
    let dec0 = min_decrease_rate(&maps[0], grid_resolution) > 0.0;
    let dec2 = min_decrease_rate(&maps[2], grid_resolution) > 0.0;
    let d = derived_from_maps(params, &maps, grid_resolution, dec0, dec2);
    if !(d.beta_h > 1.0) {
        return Err(Error::Degenerate(format!("beta_H = {} is not above 1", d.beta_h)));
    }
    Ok(d)
}

/// Evaluates every hypothesis at the given grid resolution with [`DEFAULT_MARGIN`].
pub fn validate(params: &SystemParams, grid_resolution: usize) -> Result<ValidationReport> {
    validate_with_margin(params, grid_resolution, DEFAULT_MARGIN)
}

/// As [`validate`] with a custom margin on strict inequalities.
pub fn validate_with_margin(params: &SystemParams, grid_resolution: usize, margin: f64) -> Result<ValidationReport> {
    if grid_resolution < 1000 {
        return Err(Error::Argument(format!("grid resolution {grid_resolution} below 1000")));
    }
    let mut b = Builder { margin, clauses: Vec::new() };
    let p = params;
    let maps = match p.maps() {
        Ok(m) => m,
        Err(_) => {
            b.push("maps", "constructible", ClauseKind::Strict, f64::NEG_INFINITY);
            return Ok(ValidationReport { grid_resolution, margin, clauses: b.clauses, derived: None });
        }
    };
    let [f0, _, f2] = &maps;
    let cells = grid_resolution;

    b.identity("F0", "f0(0)=0", f0.value(0.0), 0.0);
    b.identity("F0", "f0(1)=1", f0.value(1.0), 1.0);
    b.identity("F0", "f0'(0)=beta0", f0.value_deriv(0.0).1, p.beta0);
    b.identity("F0", "f0'(1)=lambda0", f0.value_deriv(1.0).1, p.lambda0);
    b.push("F0", "beta0>1", ClauseKind::Strict, p.beta0 - 1.0);
    b.push("F0", "lambda0<1", ClauseKind::Strict, 1.0 - p.lambda0);
    let dec0_rate = min_decrease_rate(f0, cells);
    b.push("F0", "f0' decreasing", ClauseKind::Strict, dec0_rate);
    let min_d0 = grid(0.0, 1.0, cells).map(|x| f0.value_deriv(x).1).fold(f64::INFINITY, f64::min);
    b.push("F0", "f0'>=lambda0", ClauseKind::Weak, min_d0 - p.lambda0);

    b.push("F1", "gamma<1", ClauseKind::Strict, 1.0 - p.gamma);
    b.push("F1", "gamma>=lambda0", ClauseKind::Weak, p.gamma - p.lambda0);

    b.identity("F2", "f2(0)=0", f2.value(0.0), 0.0);
    b.identity("F2", "f2'(0)=beta2", f2.value_deriv(0.0).1, p.beta2);
    b.identity("F2", "f2(p2)=p2", f2.value(p.p2), p.p2);
    b.push("F2", "beta2>1", ClauseKind::Strict, p.beta2 - 1.0);
    b.push("F2", "f2'(p2)<1", ClauseKind::Strict, 1.0 - f2.value_deriv(p.p2).1);
    let dec2_rate = min_decrease_rate(f2, cells);
    b.push("F2", "f2' decreasing", ClauseKind::Strict, dec2_rate);
    b.push("F2", "f2(1)<1", ClauseKind::Strict, 1.0 - f2.value(1.0));

    let f01 = p.gamma * p.lambda0.powi(3) * (1.0 - p.lambda0) / (1.0 - 1.0 / p.beta0);
    b.push("F01", "kappa>1", ClauseKind::Strict, f01 - 1.0);

    let dec0 = dec0_rate > 0.0;
    let dec2 = dec2_rate > 0.0;
    let max_d = deriv_extremum(f0, 0.0, 1.0, cells, dec0, true).max(deriv_extremum(f2, 0.0, 1.0, cells, dec2, true));
    b.push("F012", "f0',f2'<=beta+", ClauseKind::Weak, p.beta02_plus() - max_d);
    let d = derived_from_maps(p, &maps, cells, dec0, dec2);
    let (delta, dp, gamma) = (p.delta, d.delta_prime, p.gamma);
    b.push("F012", "f1(H)&H=0", ClauseKind::Strict, gamma * (1.0 - delta) - delta);
    b.push("F012", "f1(H')&H'=0", ClauseKind::Strict, dp - delta);
    b.push("F012", "f1([0,1])&H'=0", ClauseKind::Strict, dp - gamma);
    b.push("F012", "f2([0,1])&H'=0", ClauseKind::Strict, dp - f2.value(1.0));
    let bm = p.beta02_minus();
    b.push("F012", "beta'<beta-", ClauseKind::Strict, bm - d.beta_prime);
    b.push("F012", "beta_H<beta-", ClauseKind::Strict, bm - d.beta_h);
    b.push("F012", "beta_H>1", ClauseKind::Strict, d.beta_h - 1.0);
    b.push("F012", "lambda'<1", ClauseKind::Strict, 1.0 - d.lambda_prime);
    let (lbp, lbh, lb) = (p.beta02_plus().ln(), d.beta_h.ln(), d.beta_prime.ln());
    let lhs = p.lambda0.ln().abs() * lbp / lbh - d.lambda_prime.ln().abs() + 2.0 / 3.0 * lbp;
    b.push("F012", "e.derivatives", ClauseKind::Strict, 0.75 * lb - lhs);
    b.push("F012", "L>bound", ClauseKind::Strict, d.l as f64 - d.l_bound);
    let l = d.l as f64;
    b.push("F012", "e.derivatives2", ClauseKind::Strict, lb - (l * lbp + gamma.ln()) / (l + 1.0));

    Ok(ValidationReport { grid_resolution, margin, clauses: b.clauses, derived: Some(d) })
}

/// A searched coordinate: either a field directly, or a field expressed as
/// an offset from another field (`key = base + value`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchAxis {
    pub key: String,
    pub base: Option<String>,
    pub lo: f64,
    pub hi: f64,
}

impl SearchAxis {
    pub fn field(key: &str, lo: f64, hi: f64) -> SearchAxis {
        SearchAxis { key: key.into(), base: None, lo, hi }
    }

    pub fn offset(key: &str, base: &str, lo: f64, hi: f64) -> SearchAxis {
        SearchAxis { key: key.into(), base: Some(base.into()), lo, hi }
    }
}

/// Box of searched coordinates around a template; fields not on an axis keep the template value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub template: SystemParams,
    pub axes: Vec<SearchAxis>,
    /// Lattice spacing that sampled and refined coordinates are snapped to.
    pub quantum: f64,
    /// Also require `gamma * beta+^2 < 1` (with the strict margin).
    pub contracting_maxent: bool,
}

impl SearchBox {
    /// The box used to produce the shipped default instance.
    pub fn default_box() -> SearchBox {
        SearchBox {
            template: SystemParams::default_validated(),
            axes: vec![
                SearchAxis::field("beta0", 1.01, 1.10),
                SearchAxis::field("lambda0", 0.85, 0.95),
                SearchAxis::field("gamma", 0.85, 0.95),
                SearchAxis::offset("beta2", "beta0", 0.0002, 0.002),
                SearchAxis::field("delta", 0.005, 0.04),
                SearchAxis::offset("f0_plateau", "beta0", -0.001, 0.0),
                SearchAxis::field("f0_layer", 0.008, 0.03),
                SearchAxis::field("f0_width", 0.02, 0.1),
                SearchAxis::offset("f2_plateau", "beta0", -0.001, 0.0),
                SearchAxis::field("f2_layer", 0.008, 0.03),
                SearchAxis::field("f2_width", 0.02, 0.1),
                SearchAxis::field("f2_end_slope", 0.85, 0.98),
            ],
            quantum: 1e-6,
            contracting_maxent: true,
        }
    }

    fn is_empty(&self) -> bool {
        self.axes.iter().any(|a| !(a.lo <= a.hi) || !a.lo.is_finite() || !a.hi.is_finite())
    }

    fn snap(&self, v: f64) -> f64 {
        if self.quantum > 0.0 {
            // dividing by the integer 1/quantum lands on the nearest decimal literal
            let inv = (1.0 / self.quantum).round();
            (v * inv).round() / inv
        } else {
            v
        }
    }

    /// Builds the parameter bundle for a coordinate vector (axes applied in order).
    pub fn realize(&self, coords: &[f64]) -> SystemParams {
        let mut p = self.template;
        for (axis, &c) in self.axes.iter().zip(coords) {
            let base = axis.base.as_deref().and_then(|k| p.get(k)).unwrap_or(0.0);
            // keys are validated by construction of the box
            let _ = p.set(&axis.key, self.snap(base + c));
        }
        p
    }
}

/// Slack of the optional requirement `gamma * beta+^2 < 1`.
pub fn maxent_contraction_slack(p: &SystemParams) -> f64 {
    1.0 - p.gamma * p.beta02_plus().powi(2)
}

fn score(sb: &SearchBox, coords: &[f64], cells: usize) -> f64 {
    let p = sb.realize(coords);
    let base = match validate(&p, cells) {
        Ok(r) => r.worst_strict_slack(),
        Err(_) => f64::NEG_INFINITY,
    };
    if sb.contracting_maxent {
        base.min(maxent_contraction_slack(&p))
    } else {
        base
    }
}

fn accepted(sb: &SearchBox, p: &SystemParams) -> bool {
    let ok = matches!(validate(p, DEFAULT_GRID), Ok(r) if r.all_pass());
    ok && (!sb.contracting_maxent || maxent_contraction_slack(p) >= DEFAULT_MARGIN)
}

/// Latin-hypercube samples in the box followed by coordinate descent on the
/// worst strict slack; returns the distinct all-pass results (at most `budget`).
pub fn search_feasible(sb: &SearchBox, budget: usize, seed: u64) -> Vec<SystemParams> {
    if budget == 0 || sb.is_empty() || sb.axes.iter().any(|a| sb.template.get(&a.key).is_none()) {
        return Vec::new();
    }
    let dim = sb.axes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strata: Vec<Vec<usize>> = (0..dim)
        .map(|_| {
            let mut v: Vec<usize> = (0..budget).collect();
            v.shuffle(&mut rng);
            v
        })
        .collect();
    let starts: Vec<Vec<f64>> = (0..budget)
        .map(|i| {
            sb.axes
                .iter()
                .enumerate()
                .map(|(d, a)| {
                    let u = (strata[d][i] as f64 + rng.gen::<f64>()) / budget as f64;
                    a.lo + (a.hi - a.lo) * u
                })
                .collect()
        })
        .collect();
    strata.clear();
    let results: Vec<Option<SystemParams>> = starts.into_par_iter().map(|s| refine(sb, s)).collect();
    let mut out: Vec<SystemParams> = Vec::new();
    for p in results.into_iter().flatten() {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn refine(sb: &SearchBox, mut x: Vec<f64>) -> Option<SystemParams> {
    const CELLS: usize = 2_000;
    let mut best = score(sb, &x, CELLS);
    let mut steps: Vec<f64> = sb.axes.iter().map(|a| 0.25 * (a.hi - a.lo)).collect();
    for _ in 0..400 {
        let mut improved = false;
        for d in 0..x.len() {
            for dir in [1.0, -1.0] {
                let a = &sb.axes[d];
                let cand = (x[d] + dir * steps[d]).clamp(a.lo, a.hi);
                if cand == x[d] {
                    continue;
                }
                let mut y = x.clone();
                y[d] = cand;
                let s = score(sb, &y, CELLS);
                if s > best {
                    best = s;
                    x = y;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            let mut any = false;
            for (d, s) in steps.iter_mut().enumerate() {
                let a = &sb.axes[d];
                if *s > 1e-4 * (a.hi - a.lo) && *s > sb.quantum {
                    *s *= 0.5;
                    any = true;
                }
            }
            if !any {
                break;
            }
        }
    }
    let p = sb.realize(&x);
    accepted(sb, &p).then_some(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_report() -> ValidationReport {
        validate(&SystemParams::default_validated(), DEFAULT_GRID).unwrap()
    }

    #[test]
    fn f01_example_values() {
        let mut p = SystemParams::default_validated();
        p.lambda0 = 0.9;
        p.gamma = 0.9;
        p.beta0 = 1.05;
        p.beta2 = 1.0502;
        p.shape.f0_plateau = 1.049;
        p.shape.f2_plateau = 1.049;
        let lhs = 0.9 * 0.9f64.powi(3) * 0.1 / (1.0 - 1.0 / 1.05);
        assert!((lhs - 1.37781).abs() < 1e-5);
        let r = validate(&p, DEFAULT_GRID).unwrap();
        assert!(r.clause("kappa>1").unwrap().pass);
        p.beta0 = 2.0;
        p.beta2 = 2.0002;
        let r = validate(&p, DEFAULT_GRID).unwrap();
        let c = r.clause("kappa>1").unwrap();
        assert!(!c.pass);
        assert!((c.slack + 1.0 - 0.9 * 0.729 * 0.1 / 0.5).abs() < 1e-12);
    }

    #[test]
    fn disjointness_by_endpoints() {
        let p = SystemParams::default_validated();
        let r = default_report();
        let c = r.clause("f1(H)&H=0").unwrap();
        assert_eq!(c.slack, p.gamma * (1.0 - p.delta) - p.delta);
        assert!(p.delta < p.gamma / (1.0 + p.gamma));
        assert!(c.pass);
    }

    #[test]
    fn delta_prime_is_affine_preimage() {
        let mut p = SystemParams::default_validated();
        p.delta = 0.02;
        p.gamma = 0.9;
        assert!((p.delta_prime() - (1.0 - 0.02 / 0.9)).abs() < 1e-15);
        let [_, f1, _] = p.maps().unwrap();
        assert!((f1.eval(p.delta_prime()).unwrap() - p.delta).abs() < 1e-15);
    }

    #[test]
    fn default_instance_is_all_pass() {
        let r = default_report();
        if let Some(c) = r.failures().next() {
            panic!("clause {} failed with slack {:e}", c.name, c.slack);
        }
        assert!(r.worst_strict_slack() >= DEFAULT_MARGIN);
    }

    #[test]
    fn l_matches_integer_scan() {
        let d = derive_constants(&SystemParams::default_validated(), DEFAULT_GRID).unwrap();
        let l = (1u32..10_000).find(|&l| l as f64 > d.l_bound).unwrap();
        assert_eq!(l, d.l);
    }

    #[test]
    fn beta_h_is_endpoint_minimum() {
        let p = SystemParams::default_validated();
        let [f0, _, f2] = p.maps().unwrap();
        let d = derive_constants(&p, DEFAULT_GRID).unwrap();
        let scan = (0..=20_000).map(|i| p.delta * i as f64 / 20_000.0).map(|x| f2.deriv(x).unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(d.beta_h, f0.deriv(p.delta).unwrap().min(scan));
    }

    #[test]
    fn slacks_are_reproducible() {
        let p = SystemParams::default_validated();
        let r = default_report();
        let d = r.derived.unwrap();
        let again = derive_constants(&p, DEFAULT_GRID).unwrap();
        assert_eq!(d, again);
        let e = r.clause("e.derivatives").unwrap().slack;
        let lbp = p.beta02_plus().ln();
        let direct = 0.75 * d.beta_prime.ln() - (p.lambda0.ln().abs() * lbp / d.beta_h.ln() - d.lambda_prime.ln().abs() + 2.0 / 3.0 * lbp);
        assert_eq!(e, direct);
        assert_eq!(r, default_report());
    }

    #[test]
    fn strict_slacks_positive_for_gap_constants() {
        let r = default_report();
        assert!(r.clause("beta'<beta-").unwrap().slack > 0.0);
        assert!(r.clause("lambda'<1").unwrap().slack > 0.0);
    }

    #[test]
    fn bad_grid_rejected() {
        assert!(validate(&SystemParams::default_validated(), 10).is_err());
    }

    #[test]
    fn unbuildable_params_reported() {
        let mut p = SystemParams::default_validated();
        p.shape.f0_plateau = 0.1;
        let r = validate(&p, DEFAULT_GRID).unwrap();
        assert!(!r.all_pass());
        assert!(r.derived.is_none());
    }

    #[test]
    fn empty_box_gives_nothing() {
        let mut sb = SearchBox::default_box();
        sb.axes[0] = SearchAxis::field("beta0", 1.1, 1.0);
        assert!(search_feasible(&sb, 4, 1).is_empty());
    }

    #[test]
    fn infeasible_gamma_box_gives_nothing() {
        let mut sb = SearchBox::default_box();
        sb.axes[2] = SearchAxis::field("gamma", 0.5, 0.6);
        assert!(search_feasible(&sb, 2, 1).is_empty());
    }

    #[test]
    fn zero_budget() {
        assert!(search_feasible(&SearchBox::default_box(), 0, 1).is_empty());
    }
}
