//! Accuracy and invariant checks for the lattice integrator.

use serde::{Deserialize, Serialize};

use super::{positive_list, ExperimentConfig, ExperimentId, ExperimentReport, Table, Verdict};
use crate::error::{LabError, Result};
use crate::exact_massless::eval_exact;
use crate::field_model::DataSpec;
use crate::solver::{solve, CharacteristicMesh, MeshParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverValidationConfig {
    pub mesh_delta: f64,
    pub t_max: f64,
    /// ε values for the massless oracle comparison and its halving ratio.
    pub order_epsilons: Vec<f64>,
    /// ε values for charge drift and cone residuals.
    pub epsilons: Vec<f64>,
    pub masses: Vec<f64>,
    pub gronwall_masses: Vec<f64>,
    pub gronwall_epsilons: Vec<f64>,
    /// Cone apexes x ∈ {−k·apex_step..k·apex_step}, t ∈ {apex_step..t_max}.
    pub apex_step: f64,
    pub max_error: f64,
    pub ratio_range: [f64; 2],
    pub drift_tolerance: f64,
    pub cone_tolerance: f64,
}

impl Default for SolverValidationConfig {
    fn default() -> Self {
        SolverValidationConfig {
            mesh_delta: 1e-3,
            t_max: 0.5,
            order_epsilons: vec![0.1, 0.5],
            epsilons: vec![0.1, 0.01],
            masses: vec![0.0, 1.0],
            gronwall_masses: vec![0.0, 0.5, 1.0],
            gronwall_epsilons: vec![0.5, 0.1, 0.01],
            apex_step: 0.1,
            max_error: 1e-3,
            ratio_range: [3.5, 4.5],
            drift_tolerance: 1e-6,
            cone_tolerance: 1e-5,
        }
    }
}

impl SolverValidationConfig {
    pub fn validate(&self) -> Result<()> {
        positive_list("solver_validation.order_epsilons", &self.order_epsilons)?;
        positive_list("solver_validation.epsilons", &self.epsilons)?;
        positive_list("solver_validation.gronwall_epsilons", &self.gronwall_epsilons)?;
        positive_list("solver_validation.mesh_delta", &[self.mesh_delta, self.t_max, self.apex_step])?;
        if self.masses.iter().chain(&self.gronwall_masses).any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(LabError::Config("solver_validation masses must be >= 0".into()));
        }
        if self.t_max > 0.5 {
            return Err(LabError::Config("solver_validation.t_max must be <= 1/2".into()));
        }
        let finest = self.order_epsilons.iter().chain(&self.epsilons).chain(&self.gronwall_epsilons);
        if let Some(e) = finest.copied().find(|&e| self.mesh_delta > e / 10.0) {
            return Err(LabError::Config(format!(
                "mesh_delta = {} does not resolve epsilon = {e} (needs mesh_delta <= epsilon/10)",
                self.mesh_delta
            )));
        }
        Ok(())
    }
}

fn steps(value: f64, delta: f64) -> usize {
    (value / delta).round() as usize
}

/// Max node error against the closed form on |x| ≤ t_max, t ≤ t_max, using uncut data on a
/// window wide enough that no boundary effect reaches that square.
fn oracle_error(eps: f64, delta: f64, t_max: f64) -> Result<(f64, f64)> {
    let k = steps(t_max, delta) as f64;
    let spec = DataSpec::standard(eps).with_cutoff(false);
    let mesh = solve(&spec, &MeshParams::new(-2.0 * k * delta, 2.0 * k * delta, delta, k * delta))?;
    let (mut err, mut modulus): (f64, f64) = (0.0, 0.0);
    let kk = k as i64;
    for n in 1..=kk {
        let t = n as f64 * delta;
        for i in -kk..=kk {
            let x = i as f64 * delta;
            let s = mesh.value_at(x, t)?;
            err = err.max(s.distance(&eval_exact(&spec, x, t)?));
            modulus = modulus.max((s.u.norm() - spec.f(x - t)?.norm()).abs());
            modulus = modulus.max((s.v.norm() - spec.g(x + t)?.norm()).abs());
        }
    }
    Ok((err, modulus))
}

fn apexes(step: f64, t_max: f64, delta: f64) -> Vec<(f64, f64)> {
    let per = steps(step, delta) as i64;
    let nt = steps(t_max, step) as i64;
    let mut out = Vec::new();
    for it in 1..=nt {
        for ix in -(nt - 1)..=(nt - 1) {
            if ix.abs() <= it {
                out.push(((ix * per) as f64 * delta, (it * per) as f64 * delta));
            }
        }
    }
    out
}

fn gronwall_bound(mass: f64, t: f64) -> f64 {
    8.0 * t.sqrt() * (2.0 * mass * t).exp()
}

fn cutoff_mesh(eps: f64, mass: f64, delta: f64, t_max: f64) -> Result<CharacteristicMesh> {
    let spec = DataSpec::standard(eps).with_mass(mass);
    solve(&spec, &MeshParams::covering_cutoff(delta, steps(t_max, delta) as f64 * delta))
}

pub fn run_solver_validation(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let cfg = &config.solver_validation;
    let mut report = ExperimentReport::new(ExperimentId::SolverValidation, config)?;
    let d = cfg.mesh_delta;
    report.parameters.insert("mesh_delta".into(), d);

    let mut order = Table::new("order", &["epsilon", "delta", "max_error", "half_delta_error", "ratio", "modulus_error"]);
    let (mut worst_err, mut ratio_ok, mut worst_mod) = (0.0f64, true, 0.0f64);
    let mut ratios = Vec::new();
    for &eps in &cfg.order_epsilons {
        let (e1, m1) = oracle_error(eps, d, cfg.t_max)?;
        let (e2, _) = oracle_error(eps, d / 2.0, cfg.t_max)?;
        let ratio = e1 / e2;
        worst_err = worst_err.max(e1);
        worst_mod = worst_mod.max(m1);
        ratio_ok &= ratio >= cfg.ratio_range[0] && ratio <= cfg.ratio_range[1];
        ratios.push(ratio);
        order.push_values(&[eps, d, e1, e2, ratio, m1]);
    }
    report.tables.push(order);
    report.verdicts.push(Verdict::at_most("massless max node error vs closed form", worst_err, cfg.max_error));
    report.verdicts.push(Verdict::new(
        "error ratio per halving of the step within range",
        ratio_ok,
        format!("ratios {ratios:?} vs [{}, {}]", cfg.ratio_range[0], cfg.ratio_range[1]),
    ));
    report.verdicts.push(Verdict::at_most("massless |u|, |v| transported from the data", worst_mod, 1e-12));

    let mut drift = Table::new("charge_drift", &["mass", "epsilon", "initial_charge", "final_charge", "relative_drift"]);
    let mut cone = Table::new("cone_residual", &["mass", "epsilon", "x", "t", "flux_left", "flux_right", "base", "residual"]);
    let (mut worst_drift, mut worst_cone, mut worst_interior) = (0.0f64, 0.0f64, 0.0f64);
    let pts = apexes(cfg.apex_step, cfg.t_max, d);
    for &mass in &cfg.masses {
        for &eps in &cfg.epsilons {
            let mesh = cutoff_mesh(eps, mass, d, cfg.t_max)?;
            let last = mesh.level_count() - 1;
            let q0 = mesh.global_charge(0)?;
            let q1 = mesh.global_charge(last)?;
            let rel = (q1 - q0).abs() / q0;
            worst_drift = worst_drift.max(rel);
            drift.push_values(&[mass, eps, q0, q1, rel]);
            for &(x, t) in &pts {
                let c = mesh.cone_charge(x, t)?;
                worst_cone = worst_cone.max(c.residual);
                if x.abs() < t - 0.5 * d {
                    worst_interior = worst_interior.max(c.residual);
                }
                cone.push_values(&[mass, eps, x, t, c.flux_left, c.flux_right, c.base, c.residual]);
            }
        }
    }
    report.tables.push(drift);
    report.tables.push(cone);
    report.parameters.insert("cone_residual_max".into(), worst_cone);
    report.parameters.insert("cone_residual_max_off_diagonal".into(), worst_interior);
    report.verdicts.push(Verdict::at_most("relative global charge drift", worst_drift, cfg.drift_tolerance));
    report.verdicts.push(Verdict::at_most("light-cone charge residual", worst_cone, cfg.cone_tolerance));

    let mut gron = Table::new("gronwall", &["mass", "epsilon", "max_ratio", "violations", "a_at_quarter", "bound_at_quarter"]);
    let mut violations = 0usize;
    for &mass in &cfg.gronwall_masses {
        for &eps in &cfg.gronwall_epsilons {
            let mesh = cutoff_mesh(eps, mass, d, cfg.t_max)?;
            let profile = mesh.a_functional_profile();
            let (mut worst, mut count) = (0.0f64, 0usize);
            for &(t, a) in profile.iter().skip(1) {
                let b = gronwall_bound(mass, t);
                worst = worst.max(a / b);
                count += usize::from(a > b);
            }
            violations += count;
            let q = steps(0.25, d).min(profile.len() - 1);
            let (tq, aq) = profile[q];
            gron.push_values(&[mass, eps, worst, count as f64, aq, gronwall_bound(mass, tq)]);
        }
    }
    report.tables.push(gron);
    report.verdicts.push(Verdict::at_most("A(t) above 8 t^(1/2) e^(2mt) (count)", violations as f64, 0.0));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apex_grid_stays_in_the_closed_cone() {
        let pts = apexes(0.1, 0.5, 1e-3);
        assert!(pts.iter().all(|&(x, t)| x.abs() <= t + 1e-12 && t <= 0.5 + 1e-12));
        assert!(pts.contains(&(0.0, 0.4)));
        assert_eq!(pts.len(), 3 + 5 + 7 + 9 + 9);
    }

    #[test]
    fn unresolved_epsilon_is_a_config_error() {
        let cfg = SolverValidationConfig { epsilons: vec![0.001], ..Default::default() };
        assert!(matches!(cfg.validate(), Err(LabError::Config(_))));
    }
}
