//! Localization of the phase transition and slope readings of a pressure curve.

use serde::{Deserialize, Serialize};

use super::cylinder::PressureCurve;
use super::{lateral_derivative, lateral_pressure};
use crate::error::{Error, Result};
use crate::fiber::SystemParams;

/// Spacing at which the crossing search stops.
pub const TRANSITION_RESOLUTION: f64 = 1e-3;

/// One-sided derivatives and entropies at the transition point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    /// Largest `t` at which the non-exceptional envelope stays within `tol` of the lateral pressure.
    pub t_c_estimate: f64,
    /// Width of the final crossing bracket.
    pub resolution: f64,
    pub pressure_at_tc: f64,
    /// Left derivative, from the exact lateral pressure.
    pub d_minus: f64,
    /// Right derivative of the non-exceptional envelope.
    pub d_plus: f64,
    pub beta_c_minus: f64,
    pub beta_c_plus: f64,
    /// Tangent-line intercepts `P(t_c) - t_c D`.
    pub entropy_minus: f64,
    pub entropy_plus: f64,
    /// Change of `d_plus` between depths `n - 1` and `n` plus its change across the final bracket.
    pub uncertainty: f64,
    /// A crossing was found and `d_plus - d_minus` exceeds the uncertainty.
    pub conclusive: bool,
    pub note: String,
}

impl TransitionReport {
    fn inconclusive(note: String) -> TransitionReport {
        TransitionReport {
            t_c_estimate: f64::NAN,
            resolution: f64::NAN,
            pressure_at_tc: f64::NAN,
            d_minus: f64::NAN,
            d_plus: f64::NAN,
            beta_c_minus: f64::NAN,
            beta_c_plus: f64::NAN,
            entropy_minus: f64::NAN,
            entropy_plus: f64::NAN,
            uncertainty: f64::NAN,
            conclusive: false,
            note,
        }
    }

    /// `d_plus - d_minus`.
    pub fn jump(&self) -> f64 {
        self.d_plus - self.d_minus
    }

    /// Key-value text block.
    pub fn to_text(&self) -> String {
        let fields = [
            ("t_c_estimate", self.t_c_estimate),
            ("resolution", self.resolution),
            ("pressure_at_tc", self.pressure_at_tc),
            ("d_minus", self.d_minus),
            ("d_plus", self.d_plus),
            ("beta_c_minus", self.beta_c_minus),
            ("beta_c_plus", self.beta_c_plus),
            ("entropy_minus", self.entropy_minus),
            ("entropy_plus", self.entropy_plus),
            ("uncertainty", self.uncertainty),
        ];
        let mut s = String::new();
        for (k, v) in fields {
            s.push_str(&format!("{k} = {v:.15e}\n"));
        }
        s.push_str(&format!("conclusive = {}\n", self.conclusive));
        s.push_str(&format!("note = {}\n", self.note));
        s
    }
}

/// Locates `t_c` where the non-exceptional periodic envelope detaches from the
/// lateral pressure, refining the grid cell by trisection to [`TRANSITION_RESOLUTION`].
pub fn locate_transition(curve: &PressureCurve, params: &SystemParams, tol: f64) -> Result<TransitionReport> {
    let t = &curve.t;
    if t[0] > -20.0 || t[t.len() - 1] < 2.0 {
        return Err(Error::Argument(format!("t-grid [{}, {}] does not span [-20, 2]", t[0], t[t.len() - 1])));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance {tol} must be positive")));
    }
    let disc = |s: f64| curve.rest_at(s) - lateral_pressure(params, s);
    let d: Vec<f64> = t.iter().zip(&curve.rest).zip(&curve.lateral).map(|((_, r), l)| r - l).collect();
    let Some(i) = d.iter().rposition(|&v| v <= tol) else {
        return Ok(TransitionReport::inconclusive("the envelopes never meet on the grid".into()));
    };
    if i + 1 == t.len() {
        return Ok(TransitionReport::inconclusive("no detachment on the grid".into()));
    }
    let (mut a, mut b) = (t[i], t[i + 1]);
    while b - a > TRANSITION_RESOLUTION {
        let h = (b - a) / 3.0;
        let (m1, m2) = (a + h, a + 2.0 * h);
        if disc(m2) <= tol {
            a = m2;
        } else if disc(m1) <= tol {
            a = m1;
            b = m2;
        } else {
            b = m1;
        }
    }
    let tc = a;
    let p = lateral_pressure(params, tc);
    let d_minus = lateral_derivative(params, tc);
    let d_plus = curve.rest_derivative_at(tc);
    let depth_change = curve.previous_rest_derivative_at(tc).map_or(0.0, |q| (d_plus - q).abs());
    let bracket_change = (curve.rest_derivative_at(b) - d_plus).abs();
    let uncertainty = depth_change + bracket_change;
    let conclusive = d_plus - d_minus > uncertainty;
    let note = if conclusive {
        "first-order transition".to_string()
    } else {
        format!("jump {} not above uncertainty {}", d_plus - d_minus, uncertainty)
    };
    Ok(TransitionReport {
        t_c_estimate: tc,
        resolution: b - a,
        pressure_at_tc: p,
        d_minus,
        d_plus,
        beta_c_minus: (-d_minus).exp(),
        beta_c_plus: (-d_plus).exp(),
        entropy_minus: p - tc * d_minus,
        entropy_plus: p - tc * d_plus,
        uncertainty,
        conclusive,
        note,
    })
}

/// A secant slope of the bracket midpoint with the bracket width over its support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Secant {
    pub t0: f64,
    pub t1: f64,
    pub slope: f64,
    pub width: f64,
}

/// Secants at both ends of the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSlopes {
    pub minus_inf: Secant,
    pub plus_inf: Secant,
}

fn secant_at(curve: &PressureCurve, i: usize) -> Secant {
    let mid = curve.midpoint();
    let w = curve.width();
    Secant { t0: curve.t[i], t1: curve.t[i + 1], slope: (mid[i + 1] - mid[i]) / (curve.t[i + 1] - curve.t[i]), width: w[i].max(w[i + 1]) }
}

/// Midpoint secants at the two ends of a curve spanning `|t| >= 20`.
pub fn asymptotic_slopes(curve: &PressureCurve) -> Result<AsymptoticSlopes> {
    let n = curve.t.len();
    if curve.t[0] > -20.0 || curve.t[n - 1] < 20.0 {
        return Err(Error::Argument(format!("t-grid [{}, {}] does not span [-20, 20]", curve.t[0], curve.t[n - 1])));
    }
    Ok(AsymptoticSlopes { minus_inf: secant_at(curve, 0), plus_inf: secant_at(curve, n - 2) })
}

/// Midpoint secant from the grid point `t` to the next one.
pub fn right_secant(curve: &PressureCurve, t: f64) -> Result<Secant> {
    let i = curve.t.iter().position(|&s| s == t).ok_or_else(|| Error::Argument(format!("{t} is not a grid point")))?;
    if i + 1 == curve.t.len() {
        return Err(Error::Argument(format!("{t} is the last grid point")));
    }
    Ok(secant_at(curve, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::pressure_curve;

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|k| lo + step * k as f64).collect()
    }

    #[test]
    fn transition_at_small_depth() {
        let p = SystemParams::default_validated();
        let c = pressure_curve(&p, grid(-20.0, 20.0, 0.25), 7).unwrap();
        let r = locate_transition(&c, &p, 1e-3).unwrap();
        assert!(r.t_c_estimate < 0.0, "{}", r.to_text());
        assert!(r.d_minus >= -p.beta02_plus().ln() && r.d_minus <= -p.beta02_minus().ln());
        assert!(r.d_plus > r.d_minus);
        assert!(r.entropy_minus > 0.0 && r.entropy_plus > r.entropy_minus);
        assert!(r.resolution <= TRANSITION_RESOLUTION);
    }

    #[test]
    fn slopes_need_wide_grid() {
        let p = SystemParams::default_validated();
        let c = pressure_curve(&p, grid(-5.0, 5.0, 1.0), 3).unwrap();
        assert!(asymptotic_slopes(&c).is_err());
        assert!(locate_transition(&c, &p, 1e-3).is_err());
        assert!(right_secant(&c, 0.0).is_ok());
        assert!(right_secant(&c, 0.5).is_err());
        assert!(right_secant(&c, 5.0).is_err());
    }
}
