//! Fiber maps `f0`, `f1`, `f2` on [0, 1] and the parameter bundle of one instance.
//!
//! `f0` and `f2` belong to one smooth family whose derivative decreases
//! monotonically from a prescribed value at 0 to a prescribed value at 1:
//!
//! ```text
//! f'(x) = lo + tilt (1 - x) + (plateau - lo - tilt) s(x) + (hi - plateau) b(x)
//! ```
//!
//! where `s` is a normalized logistic step of width `width` centred at `c`
//! (`s(0) = 1`, `s(1) = 0`) and `b` a normalized boundary layer of length
//! scale `layer` (`b(0) = 1`, `b(1) = 0`). The centre `c` is solved so that
//! the map meets its fixed-point constraint: `f0(1) = 1`, `f2(p2) = p2`.
//! `f1(x) = gamma (1 - x)` is affine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the argument for [`FiberMap::invert`].
pub const INVERT_TOL: f64 = 1e-14;

/// Slack allowed when an argument sits just outside [0, 1] after rounding.
pub const DOMAIN_SLACK: f64 = 1e-12;

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Shape knobs of one member of the smooth family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileShape {
    /// Derivative level reached after the boundary layer near 0.
    pub plateau: f64,
    /// Length scale of the boundary layer (0 disables it; then `plateau` must equal `hi`).
    pub layer: f64,
    /// Width of the logistic step.
    pub width: f64,
    /// Slope of the linear part of the derivative; keeps `f'` strictly decreasing.
    pub tilt: f64,
}

/// One member of the smooth family, with its centre solved and cached constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    hi: f64,
    lo: f64,
    shape: ProfileShape,
    centre: f64,
    scale: f64,
    step_amp: f64,
    layer_amp: f64,
    // sigma(c / w) * (1 - exp(-1 / w)): normalizer of the step
    step_norm: f64,
    // sigma(c / w) - sigma((c - 1) / w) and its two terms, for the integral
    step_diff: f64,
    sig_b: f64,
    sig_neg_b: f64,
    sp_a: f64,
    sp_neg_a: f64,
    layer_tail: f64,
}

impl Profile {
    fn raw(hi: f64, lo: f64, shape: ProfileShape, centre: f64) -> Profile {
        let w = shape.width;
        let a = centre / w;
        let b = (centre - 1.0) / w;
        let sig_a = sigmoid(a);
        let step_norm = sig_a * -(-1.0 / w).exp_m1();
        let step_diff = sig_a * sigmoid(-b) * -(-1.0 / w).exp_m1();
        let layer_tail = if shape.layer > 0.0 { (-1.0 / shape.layer).exp() } else { 0.0 };
        Profile {
            hi,
            lo,
            shape,
            centre,
            scale: 1.0,
            step_amp: shape.plateau - lo - shape.tilt,
            layer_amp: hi - shape.plateau,
            step_norm,
            step_diff,
            sig_b: sigmoid(b),
            sig_neg_b: sigmoid(-b),
            sp_a: softplus(a),
            sp_neg_a: softplus(-a),
            layer_tail,
        }
    }

    /// Builds the member with `f'(0) = hi`, `f'(1) = lo` and `f(target_x) = target_y`.
    pub fn solve(hi: f64, lo: f64, shape: ProfileShape, target_x: f64, target_y: f64) -> Result<Profile> {
        let ProfileShape { plateau, layer, width, tilt } = shape;
        let finite = [hi, lo, plateau, layer, width, tilt].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Params("non-finite shape parameter".into()));
        }
        if !(lo > 0.0 && tilt >= 0.0 && plateau - lo - tilt > 0.0 && hi >= plateau) {
            return Err(Error::Params(format!(
                "need 0 < lo, 0 <= tilt, lo + tilt < plateau <= hi (lo={lo}, tilt={tilt}, plateau={plateau}, hi={hi})"
            )));
        }
        if !(width >= 0.005) {
            return Err(Error::Params(format!("step width {width} below 0.005")));
        }
        if hi > plateau && !(layer > 0.0) {
            return Err(Error::Params("hi > plateau requires a positive layer".into()));
        }
        let resid = |c: f64| Profile::raw(hi, lo, shape, c).unscaled_value(target_x) - target_y;
        let (mut a, mut b) = (-0.5, 1.5);
        let (ra, rb) = (resid(a), resid(b));
        if !(ra < 0.0 && rb > 0.0) {
            return Err(Error::Params(format!("no step centre in [{a}, {b}] gives f({target_x}) = {target_y}")));
        }
        while b - a > 1e-15 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if resid(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let mut p = Profile::raw(hi, lo, shape, 0.5 * (a + b));
        p.scale = target_y / p.unscaled_value(target_x);
        Ok(p)
    }

    /// Step centre found by [`Profile::solve`].
    pub fn centre(&self) -> f64 {
        self.centre
    }

    #[inline]
    fn step_and_integral(&self, x: f64) -> (f64, f64) {
        let w = self.shape.width;
        let u = (self.centre - x) / w;
        let s = sigmoid(u) * -((x - 1.0) / w).exp_m1() / self.step_norm;
        let num = if self.centre <= 0.5 {
            w * (self.sp_a - softplus(u)) - self.sig_b * x
        } else {
            x * self.sig_neg_b - w * (softplus(-u) - self.sp_neg_a)
        };
        (s, num / self.step_diff)
    }

    #[inline]
    fn layer_and_integral(&self, x: f64) -> (f64, f64) {
        if self.layer_amp == 0.0 {
            return (0.0, 0.0);
        }
        let r = self.shape.layer;
        let e = (-x / r).exp();
        let norm = 1.0 - self.layer_tail;
        ((e - self.layer_tail) / norm, (r * (1.0 - e) - x * self.layer_tail) / norm)
    }

    fn unscaled_value(&self, x: f64) -> f64 {
        let (_, is) = self.step_and_integral(x);
        let (_, ib) = self.layer_and_integral(x);
        self.lo * x + self.shape.tilt * (x - 0.5 * x * x) + self.step_amp * is + self.layer_amp * ib
    }

    /// Value and derivative at `x`.
    #[inline]
    pub fn value_deriv(&self, x: f64) -> (f64, f64) {
        let (s, is) = self.step_and_integral(x);
        let (bl, ib) = self.layer_and_integral(x);
        let t = self.shape.tilt;
        let v = self.lo * x + t * (x - 0.5 * x * x) + self.step_amp * is + self.layer_amp * ib;
        let d = self.lo + t * (1.0 - x) + self.step_amp * s + self.layer_amp * bl;
        (self.scale * v, self.scale * d)
    }

    /// Second derivative at `x`.
    pub fn second_deriv(&self, x: f64) -> f64 {
        let w = self.shape.width;
        let u = (self.centre - x) / w;
        let sg = sigmoid(u);
        let sp = -(sg * (1.0 - sg)) / (w * self.step_diff);
        let bp = if self.layer_amp == 0.0 {
            0.0
        } else {
            let r = self.shape.layer;
            -(-x / r).exp() / (r * (1.0 - self.layer_tail))
        };
        self.scale * (-self.shape.tilt + self.step_amp * sp + self.layer_amp * bp)
    }
}

/// Which of the three fiber maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MapKind {
    F0,
    F1,
    F2,
}

/// A monotone C¹ self-map of [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub enum FiberMap {
    F0(Profile),
    F1 { gamma: f64 },
    F2(Profile),
}

fn check_domain(x: f64) -> Result<f64> {
    if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x) {
        Err(Error::Domain(x))
    } else {
        Ok(x.clamp(0.0, 1.0))
    }
}

impl FiberMap {
    pub fn kind(&self) -> MapKind {
        match self {
            FiberMap::F0(_) => MapKind::F0,
            FiberMap::F1 { .. } => MapKind::F1,
            FiberMap::F2(_) => MapKind::F2,
        }
    }

    /// Value and derivative without domain checks.
    #[inline]
    pub fn value_deriv(&self, x: f64) -> (f64, f64) {
        match self {
            FiberMap::F0(p) | FiberMap::F2(p) => p.value_deriv(x),
            FiberMap::F1 { gamma } => (gamma * (1.0 - x), -gamma),
        }
    }

    /// Value without domain checks.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self {
            FiberMap::F0(p) | FiberMap::F2(p) => p.value_deriv(x).0,
            FiberMap::F1 { gamma } => gamma * (1.0 - x),
        }
    }

    /// `f(x)` for `x` in [0, 1].
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_domain(x).map(|x| self.value(x))
    }

    /// `f'(x)` for `x` in [0, 1].
    pub fn deriv(&self, x: f64) -> Result<f64> {
        check_domain(x).map(|x| self.value_deriv(x).1)
    }

    /// `f''(x)` for `x` in [0, 1].
    pub fn second_deriv(&self, x: f64) -> Result<f64> {
        let x = check_domain(x)?;
        Ok(match self {
            FiberMap::F0(p) | FiberMap::F2(p) => p.second_deriv(x),
            FiberMap::F1 { .. } => 0.0,
        })
    }

    /// Whether the map preserves orientation.
    pub fn increasing(&self) -> bool {
        !matches!(self, FiberMap::F1 { .. })
    }

    /// Image of [0, 1] as `(min, max)`.
    pub fn image(&self) -> (f64, f64) {
        let (a, b) = (self.value(0.0), self.value(1.0));
        (a.min(b), a.max(b))
    }

    /// Preimage of `y` by safeguarded Newton iteration on the monotone map.
    pub fn invert(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.image();
        if y.is_nan() || y < lo - DOMAIN_SLACK || y > hi + DOMAIN_SLACK {
            return Err(Error::Range { value: y, lo, hi });
        }
        let y = y.clamp(lo, hi);
        if let FiberMap::F1 { gamma } = self {
            return Ok((1.0 - y / gamma).clamp(0.0, 1.0));
        }
        if y == lo {
            return Ok(0.0);
        }
        if y == hi {
            return Ok(1.0);
        }
        let (mut a, mut b) = (0.0_f64, 1.0_f64);
        let mut x = (y - lo) / (hi - lo);
        for _ in 0..200 {
            let (v, d) = self.value_deriv(x);
            let r = v - y;
            if r == 0.0 {
                return Ok(x);
            }
            if r < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let nx = x - r / d;
            let next = if nx > a && nx < b { nx } else { 0.5 * (a + b) };
            if (next - x).abs() <= INVERT_TOL || b - a <= INVERT_TOL {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::NoConvergence { lo: a, hi: b })
    }
}

/// Shape parameters of the `f0` and `f2` families, flat so they map to config keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub f0_plateau: f64,
    pub f0_layer: f64,
    pub f0_width: f64,
    pub f0_tilt: f64,
    pub f2_plateau: f64,
    pub f2_layer: f64,
    pub f2_width: f64,
    pub f2_tilt: f64,
    /// `f2'(1)`.
    pub f2_end_slope: f64,
}

/// Full parameter bundle of one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub beta0: f64,
    pub lambda0: f64,
    pub gamma: f64,
    pub beta2: f64,
    pub p2: f64,
    pub delta: f64,
    pub shape: Shape,
}

/// Names of all scalar fields, in config-file order.
pub const PARAM_KEYS: [&str; 15] = [
    "beta0",
    "lambda0",
    "gamma",
    "beta2",
    "p2",
    "delta",
    "f0_plateau",
    "f0_layer",
    "f0_width",
    "f0_tilt",
    "f2_plateau",
    "f2_layer",
    "f2_width",
    "f2_tilt",
    "f2_end_slope",
];

impl SystemParams {
    /// The shipped instance; it passes every clause of [`crate::conditions::validate`].
    pub fn default_validated() -> SystemParams {
        SystemParams {
            beta0: 1.065072,
            lambda0: 0.875,
            gamma: 0.877366,
            beta2: 1.065272,
            p2: 0.5,
            delta: 0.04,
            shape: Shape {
                f0_plateau: 1.064072,
                f0_layer: 0.01128,
                f0_width: 0.059564,
                f0_tilt: 0.001,
                f2_plateau: 1.064123,
                f2_layer: 0.008,
                f2_width: 0.04,
                f2_tilt: 0.001,
                f2_end_slope: 0.85,
            },
        }
    }

    pub fn beta02_minus(&self) -> f64 {
        self.beta0.min(self.beta2)
    }

    pub fn beta02_plus(&self) -> f64 {
        self.beta0.max(self.beta2)
    }

    /// Fixed point of `f1`.
    pub fn p1(&self) -> f64 {
        self.gamma / (1.0 + self.gamma)
    }

    /// Left endpoint of `H' = f1^{-1}([0, delta])`.
    pub fn delta_prime(&self) -> f64 {
        1.0 - self.delta / self.gamma
    }

    /// Reads a field by config key.
    pub fn get(&self, key: &str) -> Option<f64> {
        let s = &self.shape;
        Some(match key {
            "beta0" => self.beta0,
            "lambda0" => self.lambda0,
            "gamma" => self.gamma,
            "beta2" => self.beta2,
            "p2" => self.p2,
            "delta" => self.delta,
            "f0_plateau" => s.f0_plateau,
            "f0_layer" => s.f0_layer,
            "f0_width" => s.f0_width,
            "f0_tilt" => s.f0_tilt,
            "f2_plateau" => s.f2_plateau,
            "f2_layer" => s.f2_layer,
            "f2_width" => s.f2_width,
            "f2_tilt" => s.f2_tilt,
            "f2_end_slope" => s.f2_end_slope,
            _ => return None,
        })
    }

    /// Writes a field by config key.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let s = &mut self.shape;
        let slot = match key {
            "beta0" => &mut self.beta0,
            "lambda0" => &mut self.lambda0,
            "gamma" => &mut self.gamma,
            "beta2" => &mut self.beta2,
            "p2" => &mut self.p2,
            "delta" => &mut self.delta,
            "f0_plateau" => &mut s.f0_plateau,
            "f0_layer" => &mut s.f0_layer,
            "f0_width" => &mut s.f0_width,
            "f0_tilt" => &mut s.f0_tilt,
            "f2_plateau" => &mut s.f2_plateau,
            "f2_layer" => &mut s.f2_layer,
            "f2_width" => &mut s.f2_width,
            "f2_tilt" => &mut s.f2_tilt,
            "f2_end_slope" => &mut s.f2_end_slope,
            _ => return Err(Error::Params(format!("unknown key `{key}`"))),
        };
        *slot = value;
        Ok(())
    }

    /// Checks the scalar ranges required before any map can be built.
    pub fn check_ranges(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Params(m.to_string()));
        if PARAM_KEYS.iter().any(|k| !self.get(k).is_some_and(f64::is_finite)) {
            return bad("non-finite parameter");
        }
        if !(self.beta0 > 1.0) {
            return bad("beta0 must exceed 1");
        }
        if !(self.beta2 > 1.0) {
            return bad("beta2 must exceed 1");
        }
        if !(self.lambda0 > 0.0 && self.lambda0 < 1.0) {
            return bad("lambda0 must lie in (0, 1)");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.p2 > 0.0 && self.p2 < 1.0) {
            return bad("p2 must lie in (0, 1)");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        Ok(())
    }

    fn f0_shape(&self) -> ProfileShape {
        let s = &self.shape;
        ProfileShape { plateau: s.f0_plateau, layer: s.f0_layer, width: s.f0_width, tilt: s.f0_tilt }
    }

    fn f2_shape(&self) -> ProfileShape {
        let s = &self.shape;
        ProfileShape { plateau: s.f2_plateau, layer: s.f2_layer, width: s.f2_width, tilt: s.f2_tilt }
    }

    /// Builds `[f0, f1, f2]`.
    pub fn maps(&self) -> Result<[FiberMap; 3]> {
        self.check_ranges()?;
        let f0 = Profile::solve(self.beta0, self.lambda0, self.f0_shape(), 1.0, 1.0)?;
        let f2 = Profile::solve(self.beta2, self.shape.f2_end_slope, self.f2_shape(), self.p2, self.p2)?;
        Ok([FiberMap::F0(f0), FiberMap::F1 { gamma: self.gamma }, FiberMap::F2(f2)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maps() -> [FiberMap; 3] {
        SystemParams::default_validated().maps().unwrap()
    }

    #[test]
    fn f1_endpoints() {
        let f1 = FiberMap::F1 { gamma: 0.9 };
        assert_eq!(f1.eval(1.0).unwrap(), 0.0);
        assert_eq!(f1.invert(0.0).unwrap(), 1.0);
        assert_eq!(f1.deriv(0.3).unwrap(), -0.9);
    }

    #[test]
    fn f0_fixes_endpoints() {
        let [f0, _, _] = maps();
        assert_eq!(f0.eval(0.0).unwrap(), 0.0);
        assert_eq!(f0.eval(1.0).unwrap(), 1.0);
        assert_eq!(f0.invert(0.0).unwrap(), 0.0);
    }

    #[test]
    fn boundary_derivatives() {
        let p = SystemParams::default_validated();
        let [f0, _, f2] = maps();
        assert!((f0.deriv(0.0).unwrap() - p.beta0).abs() < 1e-14);
        assert!((f0.deriv(1.0).unwrap() - p.lambda0).abs() < 1e-14);
        assert!((f2.deriv(0.0).unwrap() - p.beta2).abs() < 1e-14);
        assert!((f2.deriv(1.0).unwrap() - p.shape.f2_end_slope).abs() < 1e-14);
    }

    #[test]
    fn f2_fixes_p2() {
        let p = SystemParams::default_validated();
        let [_, _, f2] = maps();
        assert!((f2.eval(p.p2).unwrap() - p.p2).abs() < 1e-15);
        assert!(f2.deriv(p.p2).unwrap() < 1.0);
        assert!(f2.eval(1.0).unwrap() < 1.0);
    }

    #[test]
    fn domain_errors() {
        let [f0, _, _] = maps();
        assert_eq!(f0.eval(1.5), Err(Error::Domain(1.5)));
        assert!(f0.deriv(-0.1).is_err());
        assert!(matches!(f0.invert(2.0), Err(Error::Range { .. })));
    }

    #[test]
    fn finite_difference_matches_derivative() {
        let h = 1e-4;
        for map in maps() {
            let n = 1000;
            let xs: Vec<f64> = (0..n).map(|i| h + (1.0 - 2.0 * h) * i as f64 / (n - 1) as f64).collect();
            let max_f2 = xs.iter().map(|&x| map.second_deriv(x).unwrap().abs()).fold(0.0, f64::max);
            for &x in &xs {
                let fd = (map.eval(x + h).unwrap() - map.eval(x - h).unwrap()) / (2.0 * h);
                let d = map.deriv(x).unwrap();
                assert!((fd - d).abs() <= 10.0 * h * h * max_f2.max(1e-3), "x={x} fd={fd} d={d}");
            }
        }
    }

    #[test]
    fn derivative_strictly_decreasing_and_bounded() {
        let p = SystemParams::default_validated();
        let [f0, _, f2] = maps();
        let n = 10_000;
        let mut prev0 = f64::INFINITY;
        let mut prev2 = f64::INFINITY;
        for i in 0..=n {
            let x = i as f64 / n as f64;
            let d0 = f0.deriv(x).unwrap();
            let d2 = f2.deriv(x).unwrap();
            assert!(d0 < prev0 && d2 < prev2);
            assert!(d0 >= p.lambda0 - 1e-9);
            assert!(d0 <= p.beta02_plus() + 1e-9 && d2 <= p.beta02_plus() + 1e-9);
            prev0 = d0;
            prev2 = d2;
        }
    }

    #[test]
    fn rejects_inconsistent_shape() {
        let mut p = SystemParams::default_validated();
        p.shape.f0_plateau = 0.5;
        assert!(p.maps().is_err());
        let mut p = SystemParams::default_validated();
        p.beta0 = 0.9;
        assert!(p.maps().is_err());
    }

    #[test]
    fn get_set_round_trip() {
        let mut p = SystemParams::default_validated();
        for (i, k) in PARAM_KEYS.iter().enumerate() {
            p.set(k, i as f64).unwrap();
            assert_eq!(p.get(k), Some(i as f64));
        }
        assert!(p.set("nope", 1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn invert_round_trip(x in 0.0f64..=1.0, k in 0usize..3) {
                let m = &maps()[k];
                let y = m.eval(x).unwrap();
                let back = m.invert(y).unwrap();
                prop_assert!((m.eval(back).unwrap() - y).abs() <= 1e-12);
            }

            #[test]
            fn monotone(x in 0.0f64..1.0, dx in 1e-9f64..0.5) {
                let y = (x + dx).min(1.0);
                let [f0, f1, f2] = maps();
                prop_assert!(f0.eval(x).unwrap() < f0.eval(y).unwrap());
                prop_assert!(f2.eval(x).unwrap() < f2.eval(y).unwrap());
                prop_assert!(f1.eval(x).unwrap() > f1.eval(y).unwrap());
            }
        }
    }
}
