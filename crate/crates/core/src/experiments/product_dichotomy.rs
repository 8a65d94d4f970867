//! e^{4i log ε}u_εv_ε along the two FourLog sequences: exact sign flip without mass, and
//! separation of the main term from the remainders with mass.

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentId, ExperimentReport, Table, Verdict};
use crate::error::{LabError, Result};
use crate::exact_massless::{epsilon_sequence, eval_exact_log, main_term, EpsilonSequence, SequenceKind};
use crate::field_model::DataSpec;
use crate::solver::{solve_with_log, MeshParams};
use crate::ComplexAmplitude;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProductDichotomyConfig {
    pub mass: f64,
    /// Members of each FourLog sequence before truncation.
    pub count: usize,
    /// δ/Δ for the solver mesh.
    pub mesh_ratio: usize,
    /// Lattice stride between sample points of the ball.
    pub sample_stride: usize,
    /// Ball size for the massless check when mass = 0.
    pub massless_delta: f64,
}

impl Default for ProductDichotomyConfig {
    fn default() -> Self {
        ProductDichotomyConfig { mass: 1.0, count: 14, mesh_ratio: 400, sample_stride: 20, massless_delta: 0.1 }
    }
}

impl ProductDichotomyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass >= 0.0) || !self.mass.is_finite() {
            return Err(LabError::Config("product_dichotomy.mass must be >= 0".into()));
        }
        if self.count == 0 || self.mesh_ratio < 40 || self.sample_stride == 0 {
            return Err(LabError::Config(
                "product_dichotomy needs count >= 1, mesh_ratio >= 40, sample_stride >= 1".into(),
            ));
        }
        if !(self.massless_delta > 0.0 && self.massless_delta < 0.5) {
            return Err(LabError::Config("product_dichotomy.massless_delta must lie in (0, 1/2)".into()));
        }
        Ok(())
    }
}

/// (c, C) with c = 16e^{2m} and C = 4mc + m²c².
pub fn product_constant(mass: f64) -> (f64, f64) {
    let c = 16.0 * (2.0 * mass).exp();
    (c, 4.0 * mass * c + mass * mass * c * c)
}

/// Lattice points (i, n) with (iΔ, nΔ) in the closed ball of radius δ/4 about (0, δ).
fn ball_points(ratio: usize, stride: usize) -> Vec<(i64, i64)> {
    let r = ratio as i64;
    let rad = r / 4;
    let mut pts = Vec::new();
    for n in (r - rad..=r + rad).step_by(stride) {
        for i in (-rad..=rad).step_by(stride) {
            if i * i + (n - r) * (n - r) <= rad * rad {
                pts.push((i, n));
            }
        }
    }
    pts
}

struct Member {
    sign: f64,
    n: usize,
    eps: f64,
    log: crate::exact_massless::LogScale,
}

fn members(seqs: &[(f64, &EpsilonSequence)], offsets: &[usize]) -> Vec<Member> {
    let mut out = Vec::new();
    for (&(sign, seq), &off) in seqs.iter().zip(offsets) {
        for (i, (eps, log)) in seq.iter().enumerate() {
            out.push(Member { sign, n: i + 1 + off, eps, log });
        }
    }
    out
}

pub fn run_product_dichotomy(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let cfg = &config.product_dichotomy;
    let mut report = ExperimentReport::new(ExperimentId::ProductDichotomy, config)?;
    let plus = epsilon_sequence(SequenceKind::FourLogPlus, 0.0, cfg.count)?;
    let minus = epsilon_sequence(SequenceKind::FourLogMinus, 0.0, cfg.count)?;

    // massless: closed forms, any ball in the cone
    let delta0 = cfg.massless_delta;
    let h0 = delta0 / cfg.mesh_ratio as f64;
    let pts0 = ball_points(cfg.mesh_ratio, cfg.sample_stride);
    let mut t0 = Table::new("massless", &["sign", "n", "epsilon", "max_rotated_error", "max_signed_error"]);
    let mut worst: f64 = 0.0;
    for m in members(&[(1.0, &plus), (-1.0, &minus)], &[0, 0]) {
        let spec = DataSpec::standard(m.eps).with_cutoff(false);
        let (mut rot, mut signed): (f64, f64) = (0.0, 0.0);
        for &(i, n) in &pts0 {
            let (x, t) = (i as f64 * h0, n as f64 * h0);
            let s = eval_exact_log(&spec, m.log, x, t)?;
            let main = main_term(m.eps, x, t)?;
            let scale = main.norm();
            rot = rot.max((m.log.cis(4.0) * s.u * s.v - main).norm() / scale);
            signed = signed.max((s.u * s.v - m.sign * main).norm() / scale);
        }
        worst = worst.max(rot).max(signed);
        t0.push_values(&[m.sign, m.n as f64, m.eps, rot, signed]);
    }
    report.tables.push(t0);
    report.verdicts.push(Verdict::at_most(
        "massless: rotated product equals main term, products equal +/- main term",
        worst,
        1e-12,
    ));
    report.parameters.insert("massless_delta".into(), delta0);

    if cfg.mass == 0.0 {
        return Ok(report);
    }

    let m = cfg.mass;
    let (c, cc) = product_constant(m);
    let delta = 1.0 / (16.0 * cc);
    let h = delta / cfg.mesh_ratio as f64;
    let r = cfg.mesh_ratio as f64;
    report.parameters.insert("c".into(), c);
    report.parameters.insert("C".into(), cc);
    report.parameters.insert("delta".into(), delta);
    report.parameters.insert("mesh_delta".into(), h);

    let floor = 10.0 * h;
    let (plus_t, dropped_p) = plus.truncated_below(floor);
    let (minus_t, dropped_m) = minus.truncated_below(floor);
    report.parameters.insert("dropped_plus".into(), dropped_p as f64);
    report.parameters.insert("dropped_minus".into(), dropped_m as f64);
    report.notes.push(format!(
        "members with epsilon < 10*mesh_delta = {floor:e} skipped: {dropped_p} (plus), {dropped_m} (minus)"
    ));
    if plus_t.is_empty() || minus_t.is_empty() {
        return Err(LabError::Config("mesh too coarse: every sequence member lies below 10*mesh_delta".into()));
    }

    // windowed mesh covering the backward cones of the ball: |x| ≤ 1.5δ at t = 0, T = 1.25δ
    let half = (3.0 * r).ceil() * h;
    let t_max = (1.25 * r).ceil() * h;
    let params = MeshParams::new(-half, half, h, t_max);
    let pts = ball_points(cfg.mesh_ratio, cfg.sample_stride);

    let mut t1 = Table::new(
        "massive",
        &["sign", "n", "epsilon", "min_main", "max_main", "max_remainder_sum", "min_separation", "max_key_residual_rel"],
    );
    let mut last_products: [Vec<ComplexAmplitude>; 2] = [Vec::new(), Vec::new()];
    for mem in members(&[(1.0, &plus_t), (-1.0, &minus_t)], &[0, 0]) {
        let spec = DataSpec::standard(mem.eps).with_cutoff(false).with_mass(m);
        let mesh = solve_with_log(&spec, mem.log, &params)?;
        let (mut min_main, mut max_main, mut max_r, mut min_sep, mut key) =
            (f64::INFINITY, 0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
        let mut products = Vec::with_capacity(pts.len());
        for &(i, n) in &pts {
            let (x, t) = (i as f64 * h, n as f64 * h);
            let b = mesh.remainders(x, t)?;
            let mm = b.main_term.norm();
            min_main = min_main.min(mm);
            max_main = max_main.max(mm);
            max_r = max_r.max(b.remainder_sum_abs());
            min_sep = min_sep.min(mm - b.remainder_sum_abs());
            key = key.max(b.key_residual / mm);
            let s = mesh.value_at(x, t)?;
            products.push(s.u * s.v);
        }
        last_products[if mem.sign > 0.0 { 0 } else { 1 }] = products;
        t1.push_values(&[mem.sign, mem.n as f64, mem.eps, min_main, max_main, max_r, min_sep, key]);
    }

    let col = |name: &str| -> Vec<f64> { t1.column(name).unwrap().into_iter().flatten().collect() };
    let eps_col = col("epsilon");
    let sep = col("min_separation");
    let min_main = col("min_main");
    let max_main = col("max_main");
    let limit_rows: Vec<usize> = (0..eps_col.len()).filter(|&i| eps_col[i] <= delta / 4.0).collect();

    let overall = sep.iter().copied().fold(f64::INFINITY, f64::min);
    report.verdicts.push(Verdict::at_least("separation |main| - sum|R_j| > 0 on the ball, every row", overall, f64::MIN_POSITIVE));
    if limit_rows.is_empty() {
        report.verdicts.push(Verdict::new("rows with epsilon <= delta/4 present", false, "none resolved by the mesh"));
    } else {
        let sep_lim = limit_rows.iter().map(|&i| sep[i]).fold(f64::INFINITY, f64::min);
        report.verdicts.push(Verdict::at_least("separation >= 2C for epsilon <= delta/4", sep_lim, 2.0 * cc));
        let lo = limit_rows.iter().map(|&i| min_main[i]).fold(f64::INFINITY, f64::min);
        let hi = limit_rows.iter().map(|&i| max_main[i]).fold(0.0, f64::max);
        report.verdicts.push(Verdict::at_least("main-term modulus >= 1/(2 delta) for epsilon <= delta/4", lo, 0.5 / delta));
        report.verdicts.push(Verdict::at_most("main-term modulus <= 2/delta for epsilon <= delta/4", hi, 2.0 / delta));
    }
    report.verdicts.push(Verdict::at_most(
        "remainders within the bound C",
        col("max_remainder_sum").into_iter().fold(0.0, f64::max),
        cc,
    ));

    // last resolved member of each sequence: products must point in opposite directions
    let mut signs = Table::new("sign_check", &["x", "t", "re_plus", "im_plus", "re_minus", "im_minus", "alignment"]);
    let mut worst_alignment = f64::NEG_INFINITY;
    for (k, &(i, n)) in pts.iter().enumerate() {
        let (p, q) = (last_products[0][k], last_products[1][k]);
        let alignment = (p * q.conj()).re / (p.norm() * q.norm());
        worst_alignment = worst_alignment.max(alignment);
        signs.push_values(&[i as f64 * h, n as f64 * h, p.re, p.im, q.re, q.im, alignment]);
    }
    report.verdicts.push(Verdict::at_most(
        "sequence products differ in sign at every sampled point (max cosine < 0)",
        worst_alignment,
        -f64::MIN_POSITIVE,
    ));
    report.tables.push(t1);
    report.tables.push(signs);
    report.parameters.insert("sample_points".into(), pts.len() as f64);
    Ok(report)
}
