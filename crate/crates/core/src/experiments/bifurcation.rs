//! The α-indexed continuum of limits reached along TwoLog(α) sequences.

use serde::{Deserialize, Serialize};

use super::{strictly_decreasing, ExperimentConfig, ExperimentId, ExperimentReport, Table, Verdict};
use crate::error::{LabError, Result};
use crate::exact_massless::{epsilon_sequence, eval_exact_log, eval_limit, SequenceKind};
use crate::field_model::DataSpec;
use crate::norms::{lp_norm, sampler_fn, LebesgueSpec};
use crate::ComplexAmplitude;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BifurcationConfig {
    pub alpha: Vec<f64>,
    pub t: f64,
    /// Sample interval |x| ≤ half_interval on the line t = const.
    pub half_interval: f64,
    pub p: f64,
    pub count: usize,
    /// Sample points for the sup-distance.
    pub points: usize,
    pub sup_threshold: f64,
    pub cross_tolerance: f64,
}

impl Default for BifurcationConfig {
    fn default() -> Self {
        BifurcationConfig {
            alpha: vec![0.0, std::f64::consts::PI],
            t: 0.25,
            half_interval: 0.2,
            p: 1.0,
            count: 8,
            points: 401,
            sup_threshold: 1e-3,
            cross_tolerance: 1e-6,
        }
    }
}

impl BifurcationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.len() < 2 {
            return Err(LabError::Config("bifurcation needs at least two alpha values".into()));
        }
        if !(self.t > 0.0 && self.t < 0.5) {
            return Err(LabError::Config("bifurcation.t must lie in (0, 1/2)".into()));
        }
        if !(self.half_interval > 0.0) || self.half_interval >= self.t {
            return Err(LabError::Config(format!(
                "bifurcation interval |x| <= {} escapes the cone |x| < t = {}",
                self.half_interval, self.t
            )));
        }
        if self.count == 0 || self.points < 2 || !(self.p >= 1.0) {
            return Err(LabError::Config("bifurcation needs count >= 1, points >= 2, p >= 1".into()));
        }
        Ok(())
    }
}

pub fn run_bifurcation(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let cfg = &config.bifurcation;
    let mut report = ExperimentReport::new(ExperimentId::Bifurcation, config)?;
    let (t, a) = (cfg.t, cfg.half_interval);
    let xs: Vec<f64> = (0..cfg.points).map(|i| -a + 2.0 * a * i as f64 / (cfg.points - 1) as f64).collect();
    let interval = LebesgueSpec::new(cfg.p, -a, a);

    let mut table = Table::new("along_sequence", &["alpha", "n", "epsilon", "sup_distance", "lp_distance_u"]);
    for &alpha in &cfg.alpha {
        let seq = epsilon_sequence(SequenceKind::TwoLog, alpha, cfg.count)?;
        let mut sups = Vec::new();
        for (n, (eps, log)) in seq.iter().enumerate() {
            let spec = DataSpec::standard(eps).with_cutoff(false);
            let mut sup: f64 = 0.0;
            for &x in &xs {
                let d = eval_exact_log(&spec, log, x, t)?.distance(&eval_limit(alpha, x, t)?);
                sup = sup.max(d);
            }
            let diff = sampler_fn(
                |x| {
                    let e = eval_exact_log(&spec, log, x, t).map(|s| s.u);
                    let l = eval_limit(alpha, x, t).map(|s| s.u);
                    match (e, l) {
                        (Ok(e), Ok(l)) => e - l,
                        _ => ComplexAmplitude::new(f64::NAN, 0.0),
                    }
                },
                vec![],
            );
            let lp = lp_norm(&diff, &interval, 64)?.finite();
            sups.push(sup);
            table.push(vec![Some(alpha), Some((n + 1) as f64), Some(eps), Some(sup), lp]);
        }
        report.verdicts.push(Verdict::new(
            format!("alpha = {alpha}: sup-distance decreases monotonically"),
            strictly_decreasing(&sups),
            format!("{} rows", sups.len()),
        ));
        let at_eight = if sups.len() >= 8 { sups[7] } else { *sups.last().unwrap() };
        report.verdicts.push(Verdict::at_most(
            format!("alpha = {alpha}: sup-distance at n = {} below threshold", sups.len().min(8)),
            at_eight,
            cfg.sup_threshold,
        ));
    }
    report.tables.push(table);

    // cross-distances between limits against |e^{iα}−e^{iα′}|·‖u_limit(0)‖
    let u_norm = |alpha: f64| {
        let s = sampler_fn(move |x| eval_limit(alpha, x, t).map(|s| s.u).unwrap_or(ComplexAmplitude::new(f64::NAN, 0.0)), vec![]);
        lp_norm(&s, &interval, 64)
    };
    let base = u_norm(0.0)?.finite().ok_or_else(|| LabError::domain("limit not integrable on interval"))?;
    report.parameters.insert("u_limit_norm".into(), base);
    let mut cross = Table::new("cross_distance", &["alpha", "alpha_prime", "distance", "predicted", "abs_error"]);
    let mut worst: f64 = 0.0;
    for (i, &a1) in cfg.alpha.iter().enumerate() {
        for &a2 in &cfg.alpha[i..] {
            let s = sampler_fn(
                move |x| match (eval_limit(a1, x, t), eval_limit(a2, x, t)) {
                    (Ok(p), Ok(q)) => p.u - q.u,
                    _ => ComplexAmplitude::new(f64::NAN, 0.0),
                },
                vec![],
            );
            let d = lp_norm(&s, &interval, 64)?.finite().unwrap_or(f64::NAN);
            let predicted = (ComplexAmplitude::from_polar(1.0, a1) - ComplexAmplitude::from_polar(1.0, a2)).norm() * base;
            let err = (d - predicted).abs();
            worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
            cross.push_values(&[a1, a2, d, predicted, err]);
        }
    }
    report.tables.push(cross);
    report.verdicts.push(Verdict::at_most("cross-distances match |e^{ia}-e^{ia'}|*||u_limit||", worst, cfg.cross_tolerance));
    Ok(report)
}
