//! Browser bindings: three small computations drawn on a canvas by `www/index.html`.
//!
//! Every export returns a flat `Float64Array` of fixed-width records.

use thirring_core::exact_massless::{epsilon_sequence, eval_exact_log, eval_limit, LogScale, SequenceKind};
use thirring_core::experiments::{residual, TestFunction};
use thirring_core::field_model::DataSpec;
use thirring_core::norms::{lp_norm, Component, DataComponent, Difference, LebesgueSpec};
use wasm_bindgen::prelude::*;

/// Records `[x, Re u_ε, Im u_ε, Re u_lim, Im u_lim]` on the line `t` for the n-th member of
/// the TwoLog(α) sequence, with `points` samples of |x| < t.
#[wasm_bindgen]
pub fn limit_line(alpha: f64, n: usize, t: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(t > 0.0 && t < 0.5) || points < 2 || n == 0 {
        return Err("need 0 < t < 1/2, points >= 2, n >= 1".into());
    }
    let seq = epsilon_sequence(SequenceKind::TwoLog, alpha, n).map_err(|e| e.to_string())?;
    let (eps, log) = seq.iter().last().ok_or("empty sequence")?;
    let spec = DataSpec::standard(eps).with_cutoff(false);
    let mut out = Vec::with_capacity(5 * points);
    for i in 0..points {
        // stay off the characteristics |x| = t where the limit is singular
        let x = -0.98 * t + 1.96 * t * i as f64 / (points - 1) as f64;
        let a = eval_exact_log(&spec, log, x, t).map_err(|e| e.to_string())?;
        let b = eval_limit(alpha, x, t).map_err(|e| e.to_string())?;
        out.extend_from_slice(&[x, a.u.re, a.u.im, b.u.re, b.u.im]);
    }
    Ok(out)
}

/// Records `[ε, ‖f_ε − f‖_{L^p(−1,1)}]` for ε = 2^{−k}, k = 1..=count. Divergent rows are NaN.
#[wasm_bindgen]
pub fn lp_convergence(p: f64, count: usize) -> Result<Vec<f64>, String> {
    if p.is_nan() || p < 1.0 || count == 0 || count > 40 {
        return Err("need p >= 1 and 1 <= count <= 40".into());
    }
    let target = DataComponent::new(DataSpec::standard(0.0), Component::U);
    let interval = LebesgueSpec::new(p, -1.0, 1.0);
    let mut out = Vec::with_capacity(2 * count);
    for k in 1..=count as i32 {
        let eps = 0.5f64.powi(k);
        let diff = Difference(DataComponent::new(DataSpec::standard(eps), Component::U), target);
        let d = lp_norm(&diff, &interval, 64).map_err(|e| e.to_string())?;
        out.extend_from_slice(&[eps, d.finite().unwrap_or(f64::NAN)]);
    }
    Ok(out)
}

/// Records `[n, δ, |R(δ)|]` for the principal-value boundary residual of the standard bump,
/// along TwoLog(α) (`generic = false`) or along δ = 2^{−n}.
#[wasm_bindgen]
pub fn pv_residual_curve(alpha: f64, generic: bool, count: usize) -> Result<Vec<f64>, String> {
    if count == 0 || count > 200 {
        return Err("need 1 <= count <= 200".into());
    }
    let logs: Vec<LogScale> = if generic {
        (1..=count).map(|n| LogScale::from_parts(-(n as f64) * std::f64::consts::LN_2, 0)).collect()
    } else {
        epsilon_sequence(SequenceKind::TwoLog, alpha, count).map_err(|e| e.to_string())?.logs
    };
    let mut out = Vec::with_capacity(3 * count);
    for (n, log) in logs.into_iter().enumerate() {
        out.extend_from_slice(&[(n + 1) as f64, log.value(), residual(alpha, log, TestFunction::Bump).norm()]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limit_line_converges_with_n() {
        let gap = |n| {
            let r = limit_line(0.0, n, 0.25, 21).unwrap();
            r.chunks(5).map(|c| (c[1] - c[3]).hypot(c[2] - c[4])).fold(0.0, f64::max)
        };
        assert!(gap(6) < gap(2));
        assert!(limit_line(0.0, 3, 0.7, 10).is_err());
    }

    #[test]
    fn lp_curve_decreases_and_flags_divergence() {
        let r = lp_convergence(1.0, 6).unwrap();
        let d: Vec<f64> = r.chunks(2).map(|c| c[1]).collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]));
        assert!(lp_convergence(2.0, 3).unwrap().chunks(2).all(|c| c[1].is_nan()));
    }

    #[test]
    fn pv_curve_vanishes_only_on_the_sequence() {
        let special = pv_residual_curve(1.0, false, 8).unwrap();
        assert!(special.chunks(3).all(|c| c[2] < 1e-14));
        let generic = pv_residual_curve(1.0, true, 40).unwrap();
        assert!(generic.chunks(3).skip(20).any(|c| c[2] > 0.5));
    }
}
