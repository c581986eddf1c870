//! Thermodynamic formalism of the central potential `phi_t = -t log |f'|`:
//! cylinder-sum pressure brackets, the lateral-horseshoe pressure, periodic
//! spectrum scans with the spectral-gap certificate, and localization of the
//! first-order phase transition.

mod cylinder;
mod spectrum;
mod transition;

pub use cylinder::{
    general_potential_pressure, pressure_bracket, pressure_curve, uniform_grid, CylinderStats, PressureCurve, PRESSURE_GRID,
};
pub use spectrum::{
    criterion_values, periodic_scan, spectrum_scan, spectrum_scan_rows, transition_criterion, GapCertificate, PeriodStats, PeriodicScan,
    ScanRow,
};
pub use transition::{asymptotic_slopes, locate_transition, right_secant, AsymptoticSlopes, Secant, TransitionReport};

use crate::fiber::SystemParams;
use crate::ifs::Ifs;

/// A potential evaluated along a fiber orbit: receives the word prefix ending
/// with the current symbol and the fiber point the symbol is applied to.
pub type Potential<'a> = dyn Fn(&[u8], f64) -> f64 + Sync + 'a;

/// `-log |f_s'(x)|` for the current symbol `s`.
pub fn central_potential(ifs: &Ifs) -> impl Fn(&[u8], f64) -> f64 + Sync + '_ {
    move |w: &[u8], x: f64| -ifs.step_log(w[w.len() - 1], x).1
}

/// `log |f_s'(x)|` for the current symbol `s`.
pub fn log_derivative(ifs: &Ifs) -> impl Fn(&[u8], f64) -> f64 + Sync + '_ {
    move |w: &[u8], x: f64| ifs.step_log(w[w.len() - 1], x).1
}

/// Pressure `log(beta0^-t + beta2^-t)` of the two-symbol horseshoe at fiber 0.
pub fn lateral_pressure(params: &SystemParams, t: f64) -> f64 {
    let (a, b) = (-t * params.beta0.ln(), -t * params.beta2.ln());
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Exact derivative of [`lateral_pressure`].
pub fn lateral_derivative(params: &SystemParams, t: f64) -> f64 {
    let (l0, l2) = (params.beta0.ln(), params.beta2.ln());
    let (a, b) = (-t * l0, -t * l2);
    let m = a.max(b);
    let (wa, wb) = ((a - m).exp(), (b - m).exp());
    -(wa * l0 + wb * l2) / (wa + wb)
}

/// `log sum exp(v)` over the finite entries; `-inf` when there are none.
pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = values.filter(|v| v.is_finite()).map(|v| (v - m).exp()).sum();
    m + s.ln()
}

/// Slopes between consecutive points.
pub(crate) fn secants(t: &[f64], v: &[f64]) -> Vec<f64> {
    t.windows(2).zip(v.windows(2)).map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0])).collect()
}

/// True iff consecutive secant slopes never drop by more than `tol`.
pub fn is_convex(t: &[f64], v: &[f64], tol: f64) -> bool {
    secants(t, v).windows(2).all(|s| s[1] >= s[0] - tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lateral_anchors() {
        let p = SystemParams::default_validated();
        assert!((lateral_pressure(&p, 0.0) - 2f64.ln()).abs() < 1e-15);
        let mut q = p;
        q.beta2 = q.beta0;
        for k in 0..1000 {
            let t = -50.0 + 0.1 * k as f64;
            let exact = 2f64.ln() - t * q.beta0.ln();
            assert!((lateral_pressure(&q, t) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn lateral_derivative_matches_difference() {
        let p = SystemParams::default_validated();
        for t in [-30.0, -1.0, 0.0, 2.5, 40.0] {
            let h = 1e-5;
            let fd = (lateral_pressure(&p, t + h) - lateral_pressure(&p, t - h)) / (2.0 * h);
            assert!((fd - lateral_derivative(&p, t)).abs() < 1e-9);
        }
    }

    #[test]
    fn lateral_asymptotes() {
        let p = SystemParams::default_validated();
        let (lo, hi) = (p.beta02_minus().ln(), p.beta02_plus().ln());
        // the two rates differ by 2e-4, so the asymptotes are reached for |t| well beyond 1e4
        let s_minus = lateral_pressure(&p, -1e6 + 1.0) - lateral_pressure(&p, -1e6);
        let s_plus = lateral_pressure(&p, 1e6) - lateral_pressure(&p, 1e6 - 1.0);
        assert!((s_minus + hi).abs() < 1e-9);
        assert!((s_plus + lo).abs() < 1e-9);
        for t in [-100.0, 100.0] {
            let d = lateral_derivative(&p, t);
            assert!(d >= -hi && d <= -lo);
        }
    }

    #[test]
    fn log_sum_exp_ignores_missing() {
        let v = [f64::NEG_INFINITY, 0.0, f64::NAN, 0.0];
        assert!((log_sum_exp(v.iter().copied()) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp([f64::NAN].iter().copied()), f64::NEG_INFINITY);
    }
}
