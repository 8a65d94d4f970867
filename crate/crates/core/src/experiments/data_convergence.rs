//! Regularised data against the singular profile in L^p and H^s.

use serde::{Deserialize, Serialize};

use super::{fit_slope, strictly_decreasing, ExperimentConfig, ExperimentId, ExperimentReport, Table, Verdict};
use crate::error::{LabError, Result};
use crate::field_model::DataSpec;
use crate::norms::{
    convergence_table, hs_norm, lp_norm, Component, DataComponent, Difference, LebesgueSpec, NormSpec, RowStatus,
    SobolevSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConvergenceConfig {
    /// Base data; ε is replaced by 2^{−k}, k = 1..=eps_count.
    pub data: DataSpec,
    pub eps_count: usize,
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    /// Uniform cells per smooth stretch in the L^p quadrature.
    pub resolution: usize,
    pub grid_points: usize,
    pub freq_cutoff: f64,
    /// Rows used for the fitted convergence rate.
    pub fit_rows: usize,
}

impl Default for DataConvergenceConfig {
    fn default() -> Self {
        DataConvergenceConfig {
            data: DataSpec::standard(0.0),
            eps_count: 12,
            p: vec![1.0, 1.5, 2.0],
            s: vec![-0.25],
            resolution: 64,
            grid_points: 1 << 14,
            freq_cutoff: 2000.0,
            fit_rows: 4,
        }
    }
}

impl DataConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps_count < 2 {
            return Err(LabError::Config("data_convergence.eps_count must be >= 2".into()));
        }
        if self.p.iter().any(|&p| !(1.0..=2.0).contains(&p)) {
            return Err(LabError::Config("data_convergence.p values must lie in [1, 2]".into()));
        }
        if self.s.iter().any(|&s| !(s > -0.5 && s < 0.0)) {
            return Err(LabError::Config("data_convergence.s values must lie in (-1/2, 0)".into()));
        }
        if !(2..=self.eps_count).contains(&self.fit_rows) {
            return Err(LabError::Config("data_convergence.fit_rows must be in [2, eps_count]".into()));
        }
        if !self.data.cutoff {
            return Err(LabError::Config("data_convergence needs cutoff data (compact support)".into()));
        }
        Ok(())
    }

    fn epsilons(&self) -> Vec<f64> {
        (1..=self.eps_count as i32).map(|k| 0.5f64.powi(k)).collect()
    }
}

fn tag(x: f64) -> String {
    format!("{x}").replace('-', "m").replace('.', "_")
}

pub fn run_data_convergence(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let cfg = &config.data_convergence;
    let mut report = ExperimentReport::new(ExperimentId::DataConvergence, config)?;
    let eps = cfg.epsilons();
    let base = cfg.data.with_epsilon(0.0);
    let target = DataComponent::new(base, Component::U);
    let family = |e: f64| DataComponent::new(base.with_epsilon(e), Component::U);

    for &p in &cfg.p {
        let spec = NormSpec::Lebesgue(LebesgueSpec::new(p, -1.0, 1.0));
        let table = convergence_table("f_eps", family, &target, &spec, &eps, cfg.resolution)?;
        let mut t = Table::new(&format!("lp_p{}", tag(p)), &["k", "epsilon", "distance", "divergent"]);
        for (k, row) in table.rows.iter().enumerate() {
            let (d, div) = match &row.status {
                RowStatus::Ok { distance } => (Some(*distance), 0.0),
                RowStatus::Divergent { partial } => (Some(*partial), 1.0),
                RowStatus::Error { message } => return Err(LabError::Config(message.clone())),
            };
            t.push(vec![Some((k + 1) as f64), Some(row.epsilon), d, Some(div)]);
        }
        let divergent = t.column("divergent").unwrap().iter().filter(|v| **v == Some(1.0)).count();
        if p < 2.0 {
            let d: Vec<f64> = table.rows.iter().filter_map(|r| r.distance()).collect();
            let monotone = divergent == 0 && strictly_decreasing(&d);
            let n = cfg.fit_rows;
            let lx: Vec<f64> = eps[eps.len() - n..].iter().map(|e| e.ln()).collect();
            let ly: Vec<f64> = d[d.len().saturating_sub(n)..].iter().map(|v| v.ln()).collect();
            let rate = if ly.len() == n { fit_slope(&lx, &ly) } else { f64::NAN };
            report.parameters.insert(format!("lp_p{}_rate", tag(p)), rate);
            report.parameters.insert(format!("lp_p{}_final", tag(p)), *d.last().unwrap_or(&f64::NAN));
            report.verdicts.push(Verdict::new(
                format!("L^{p} distance decreases monotonically"),
                monotone,
                format!("{} finite rows", d.len()),
            ));
            report.verdicts.push(Verdict::at_least(format!("L^{p} distance has a positive log-log rate"), rate, 1e-3));
        } else {
            report.verdicts.push(Verdict::new(
                format!("L^{p} distance diverges for every epsilon"),
                divergent == eps.len(),
                format!("{divergent} of {} rows divergent", eps.len()),
            ));
        }
        report.tables.push(t);
    }

    if cfg.p.contains(&2.0) {
        // ‖f_ε‖²_{L²(−1,1)} grows like 2 log(1 + 1/ε) for κ± of unit modulus
        let kp = base.kappa_plus.norm_sqr();
        let km = base.kappa_minus.norm_sqr();
        let mut t = Table::new("l2_growth", &["epsilon", "norm_sq", "closed_form", "rel_error"]);
        let mut worst: f64 = 0.0;
        for &e in &eps {
            let v = lp_norm(&family(e), &LebesgueSpec::new(2.0, -1.0, 1.0), cfg.resolution)?
                .finite()
                .ok_or_else(|| LabError::domain("regularised data must be square integrable"))?;
            let closed = (kp + km) * (1.0 + 1.0 / e).ln();
            let rel = (v * v - closed).abs() / closed;
            worst = worst.max(rel);
            t.push_values(&[e, v * v, closed, rel]);
        }
        let sq: Vec<f64> = t.column("norm_sq").unwrap().into_iter().flatten().collect();
        report.verdicts.push(Verdict::at_most("squared L^2 norm matches closed form", worst, 1e-6));
        report.verdicts.push(Verdict::new(
            "squared L^2 norm grows without bound",
            sq.windows(2).all(|w| w[1] > w[0]),
            format!("last value {:e}", sq.last().copied().unwrap_or(f64::NAN)),
        ));
        report.tables.push(t);
    }

    for &s in &cfg.s {
        let spec = SobolevSpec::new(s, cfg.grid_points, cfg.freq_cutoff, 1.0);
        let mut t = Table::new(
            &format!("hs_s{}", tag(s)),
            &["k", "epsilon", "distance", "refined_distance", "tail_estimate"],
        );
        let mut values = Vec::new();
        for (k, &e) in eps.iter().enumerate() {
            let member = family(e);
            let h = hs_norm(&Difference(&member, &target), &spec)?;
            values.push(h.value);
            t.push(vec![Some((k + 1) as f64), Some(e), Some(h.value), Some(h.refined_value), h.tail_estimate]);
        }
        report.verdicts.push(Verdict::new(
            format!("H^{s} distance decreases monotonically"),
            strictly_decreasing(&values),
            format!("final {:e}", values.last().copied().unwrap_or(f64::NAN)),
        ));
        report.tables.push(t);
    }
    report.parameters.insert("sobolev_window".into(), SobolevSpec::new(0.0, cfg.grid_points, 1.0, 1.0).window());
    report.notes.push(
        "H^s values are truncated at |xi| <= freq_cutoff; tail_estimate bounds the omitted squared mass".into(),
    );
    Ok(report)
}
