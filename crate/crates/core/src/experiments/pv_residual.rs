//! Boundary term R(δ) left by the symmetric excision (−δ, δ) in the principal-value pairing.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentId, ExperimentReport, Table, Verdict};
use crate::error::{LabError, Result};
use crate::exact_massless::{epsilon_sequence, LogScale, SequenceKind};
use crate::norms::Bump;
use crate::ComplexAmplitude;

/// Test functions θ on (−1, 1), normalised so θ(0) = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    /// exp(1 + 1/(y²−1)).
    Bump,
    /// (1 + y/2)·bump, not even.
    TiltedBump,
    /// exp(−y²); not compactly supported, rejected by validation.
    Gaussian,
}

impl TestFunction {
    pub fn value(self, y: f64) -> f64 {
        let b = Bump::standard();
        match self {
            TestFunction::Bump => b.value(y),
            TestFunction::TiltedBump => (1.0 + 0.5 * y) * b.value(y),
            TestFunction::Gaussian => (-y * y).exp(),
        }
    }

    /// Largest |θ| at the two ends of (−1, 1).
    pub fn boundary_value(self) -> f64 {
        self.value(-1.0).abs().max(self.value(1.0).abs())
    }

    /// Lipschitz constant estimated as the largest difference quotient on a fine grid.
    pub fn lipschitz(self) -> f64 {
        let n = 200_000;
        let h = 2.0 / n as f64;
        let mut prev = self.value(-1.0);
        let mut best: f64 = 0.0;
        for i in 1..=n {
            let cur = self.value(-1.0 + i as f64 * h);
            best = best.max((cur - prev).abs() / h);
            prev = cur;
        }
        best
    }
}

/// R(δ) = e^{iα}e^{i log δ}θ(δ) − e^{−i log δ}θ(−δ).
pub fn residual(alpha: f64, log_delta: LogScale, theta: TestFunction) -> ComplexAmplitude {
    let d = log_delta.value();
    // e^{−i log δ}[e^{i(α + 2 log δ)}θ(δ) − θ(−δ)], so that the bracket phase is exactly 0 on TwoLog(α)
    let turn = ComplexAmplitude::from_polar(1.0, alpha + log_delta.scaled_angle(2.0));
    log_delta.cis(-1.0) * (turn * theta.value(d) - theta.value(-d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PvResidualConfig {
    pub alpha: Vec<f64>,
    pub theta: TestFunction,
    /// Members of the TwoLog sequence.
    pub count: usize,
    /// Generic sequence δ = 2^{−n}, n = 1..=generic_count.
    pub generic_count: u32,
    /// The lim sup is taken over n > generic_tail_from.
    pub generic_tail_from: u32,
    pub boundary_tolerance: f64,
}

impl Default for PvResidualConfig {
    fn default() -> Self {
        PvResidualConfig {
            alpha: vec![0.0, 1.0, std::f64::consts::PI],
            theta: TestFunction::Bump,
            count: 12,
            generic_count: 40,
            generic_tail_from: 20,
            boundary_tolerance: 1e-12,
        }
    }
}

impl PvResidualConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_empty() || self.alpha.iter().any(|a| !a.is_finite()) {
            return Err(LabError::Config("pv_residual.alpha must be a nonempty list of finite values".into()));
        }
        if self.count == 0 || self.generic_tail_from + 1 >= self.generic_count || self.generic_count > 1000 {
            return Err(LabError::Config(
                "pv_residual needs count >= 1 and generic_tail_from + 1 < generic_count <= 1000".into(),
            ));
        }
        let edge = self.theta.boundary_value();
        if edge > self.boundary_tolerance {
            return Err(LabError::Config(format!(
                "test function does not vanish at +-1: |theta| = {edge:e} > {:e}",
                self.boundary_tolerance
            )));
        }
        if self.theta.value(0.0) == 0.0 {
            return Err(LabError::Config("test function must have theta(0) != 0".into()));
        }
        Ok(())
    }
}

pub fn run_pv_residual(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let cfg = &config.pv_residual;
    let mut report = ExperimentReport::new(ExperimentId::PvResidual, config)?;
    let theta = cfg.theta;
    let lip = theta.lipschitz();
    let theta0 = theta.value(0.0).abs();
    report.parameters.insert("lipschitz".into(), lip);
    report.parameters.insert("theta_at_zero".into(), theta0);

    let mut along = Table::new("along_sequence", &["alpha", "n", "delta", "abs_residual", "bound", "ratio"]);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut fitted_k: f64 = 0.0;
    for &alpha in &cfg.alpha {
        let seq = epsilon_sequence(SequenceKind::TwoLog, alpha, cfg.count)?;
        for (n, (delta, log)) in seq.iter().enumerate() {
            let r = residual(alpha, log, theta).norm();
            let bound = 2.0 * lip * delta;
            worst_excess = worst_excess.max(r - bound);
            fitted_k = fitted_k.max(r / delta);
            along.push_values(&[alpha, (n + 1) as f64, delta, r, bound, r / bound]);
        }
    }
    report.tables.push(along);
    report.parameters.insert("fitted_k".into(), fitted_k);
    report.verdicts.push(Verdict::at_most("|R(delta_n)| - 2 Lip(theta) delta_n along TwoLog", worst_excess, 0.0));

    let mut generic = Table::new("generic", &["alpha", "n", "delta", "abs_residual", "winding_gap"]);
    let mut worst_limsup = f64::INFINITY;
    for &alpha in &cfg.alpha {
        let mut limsup: f64 = 0.0;
        for n in 1..=cfg.generic_count {
            let log = LogScale::from_parts(-(n as f64) * LN_2, 0);
            let r = residual(alpha, log, theta).norm();
            // |e^{i(α + 2 log δ)} − 1|: how far the phases are from cancelling
            let gap = (ComplexAmplitude::from_polar(1.0, alpha) * log.cis(2.0) - 1.0).norm();
            if n > cfg.generic_tail_from {
                limsup = limsup.max(r);
            }
            generic.push_values(&[alpha, n as f64, log.value(), r, gap]);
        }
        worst_limsup = worst_limsup.min(limsup);
        report.parameters.insert(format!("generic_limsup_alpha_{alpha}"), limsup);
    }
    report.tables.push(generic);
    report.verdicts.push(Verdict::at_least(
        "generic 2^-n: lim sup |R| over the tail >= 0.5 |theta(0)|",
        worst_limsup,
        0.5 * theta0,
    ));
    Ok(report)
}
