//! Closed-form massless solutions.
//!
//! For m = 0 the system integrates along characteristics:
//!
//! ```text
//! u(x,t) = f(x−t)·exp(i ∫_{x−t}^{x+t} |g|²),   v(x,t) = g(x+t)·exp(i ∫_{x−t}^{x+t} |f|²).
//! ```
//!
//! For the power-law family the integrals are logarithms. In the cone t > |x| they carry a
//! term proportional to −log ε, so phases are kept unwrapped as `coefficient·log ε + rest`
//! and only exponentiated at the end. ε itself is carried as a [`LogScale`], which lets the
//! special sequences reduce multiples of π exactly.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field_model::{classify, DataSpec, Region, SpinorSample, WaveCoords};
use crate::ComplexAmplitude;

/// A positive number stored through its logarithm `reduced + π·half_turns`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScale {
    pub reduced: f64,
    pub half_turns: i64,
}

impl LogScale {
    /// Logarithm of a positive value, with no π part split off.
    pub fn from_value(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(LabError::domain(format!("log scale needs a positive finite value, got {value}")));
        }
        Ok(LogScale { reduced: value.ln(), half_turns: 0 })
    }

    pub fn from_parts(reduced: f64, half_turns: i64) -> Self {
        LogScale { reduced, half_turns }
    }

    pub fn ln(&self) -> f64 {
        self.reduced + PI * self.half_turns as f64
    }

    pub fn value(&self) -> f64 {
        self.ln().exp()
    }

    /// `c·ln(self)` reduced modulo 2π. Exact in the π part whenever `c·half_turns` is an
    /// integer.
    pub fn scaled_angle(&self, c: f64) -> f64 {
        let turns = (c * self.half_turns as f64).rem_euclid(2.0);
        c * self.reduced + PI * turns
    }

    /// exp(i·c·ln(self)).
    pub fn cis(&self, c: f64) -> ComplexAmplitude {
        ComplexAmplitude::from_polar(1.0, self.scaled_angle(c))
    }
}

/// Unwrapped phase in radians (not reduced modulo 2π).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PhaseValue {
    pub value: f64,
}

/// `log_eps_coeff·log ε + rest`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Phase {
    log_eps_coeff: f64,
    rest: f64,
}

impl Phase {
    fn plain(rest: f64) -> Self {
        Phase { log_eps_coeff: 0.0, rest }
    }

    fn scaled(self, k: f64) -> Self {
        Phase { log_eps_coeff: k * self.log_eps_coeff, rest: k * self.rest }
    }

    fn add(self, other: Phase) -> Self {
        Phase { log_eps_coeff: self.log_eps_coeff + other.log_eps_coeff, rest: self.rest + other.rest }
    }

    fn unwrapped(self, log_eps: Option<LogScale>) -> f64 {
        match log_eps {
            Some(l) if self.log_eps_coeff != 0.0 => self.log_eps_coeff * l.ln() + self.rest,
            _ => self.rest,
        }
    }

    fn cis(self, log_eps: Option<LogScale>) -> ComplexAmplitude {
        let angle = match log_eps {
            Some(l) if self.log_eps_coeff != 0.0 => l.scaled_angle(self.log_eps_coeff) + self.rest,
            _ => self.rest,
        };
        ComplexAmplitude::from_polar(1.0, angle)
    }
}

/// Regularisation parameter in both linear and logarithmic form.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Eps {
    value: f64,
    log: Option<LogScale>,
}

impl Eps {
    fn from_value(value: f64) -> Result<Self> {
        if value == 0.0 {
            Ok(Eps { value, log: None })
        } else {
            Ok(Eps { value, log: Some(LogScale::from_value(value)?) })
        }
    }

    fn from_log(log: LogScale) -> Self {
        Eps { value: log.value(), log: Some(log) }
    }
}

/// ∫ dy/(ε+|y|) over [x−t, x+t], split at y = 0 into the negative and positive parts.
fn log_integrals(x: f64, t: f64, eps: Eps) -> Result<(Phase, Phase)> {
    let e = eps.value;
    let region = classify(x, t)?;
    let singular = || LabError::Singular { x, t };
    let ln = |a: f64| -> Result<f64> {
        if a > 0.0 {
            Ok(a.ln())
        } else {
            Err(singular())
        }
    };
    match region {
        Region::Right => Ok((Phase::default(), Phase::plain(ln(e + x + t)? - ln(e + x - t)?))),
        Region::Left => Ok((Phase::plain(ln(e + t - x)? - ln(e - x - t)?), Phase::default())),
        Region::Cone => {
            if eps.log.is_none() {
                return Err(singular());
            }
            let neg = Phase { log_eps_coeff: -1.0, rest: ln(e + t - x)? };
            let pos = Phase { log_eps_coeff: -1.0, rest: ln(e + x + t)? };
            Ok((neg, pos))
        }
    }
}

/// φ_ε(x,t) = ∫_{x−t}^{x+t} dy/(ε+|y|) in closed form, region by region.
pub fn phi_epsilon(x: f64, t: f64, eps: f64) -> Result<PhaseValue> {
    if !(eps >= 0.0) {
        return Err(LabError::domain(format!("epsilon must be >= 0, got {eps}")));
    }
    let eps = Eps::from_value(eps)?;
    let (neg, pos) = log_integrals(x, t, eps)?;
    Ok(PhaseValue { value: neg.add(pos).unwrapped(eps.log) })
}

/// The three branch formulas of φ_ε evaluated regardless of region (for continuity checks).
pub fn phi_epsilon_branches(x: f64, t: f64, eps: f64) -> [f64; 3] {
    let right = (eps + x + t).ln() - (eps + x - t).ln();
    let cone = -2.0 * eps.ln() + (eps + t - x).ln() + (eps + x + t).ln();
    let left = (eps + t - x).ln() - (eps - x - t).ln();
    [right, cone, left]
}

struct Fields {
    amp_u: ComplexAmplitude,
    amp_v: ComplexAmplitude,
    phase_u: Phase,
    phase_v: Phase,
}

fn exact_fields(spec: &DataSpec, eps: Eps, x: f64, t: f64) -> Result<Fields> {
    spec.validate()?;
    if spec.mass != 0.0 {
        return Err(LabError::domain("closed forms exist only for mass = 0"));
    }
    if !(t > 0.0) {
        return Err(LabError::domain(format!("closed forms need t > 0, got {t}")));
    }
    if spec.cutoff && x.abs() + t >= 1.0 {
        return Err(LabError::domain(format!(
            "cutoff data: closed form valid only for |x|+t < 1, got x = {x}, t = {t}"
        )));
    }
    let e = eps.value;
    let (neg, pos) = log_integrals(x, t, eps)?;
    let sl_p = spec.lambda_plus.norm_sqr();
    let sl_m = spec.lambda_minus.norm_sqr();
    let sk_p = spec.kappa_plus.norm_sqr();
    let sk_m = spec.kappa_minus.norm_sqr();
    let amp = |c: ComplexAmplitude, d: f64| -> Result<ComplexAmplitude> {
        if d > 0.0 {
            Ok(c / d.sqrt())
        } else {
            Err(LabError::Singular { x, t })
        }
    };
    let region = classify(x, t)?;
    let fields = match region {
        Region::Right => Fields {
            amp_u: amp(spec.kappa_plus, e + x - t)?,
            amp_v: amp(spec.lambda_plus, e + x + t)?,
            phase_u: pos.scaled(sl_p),
            phase_v: pos.scaled(sk_p),
        },
        Region::Cone => Fields {
            amp_u: amp(spec.kappa_minus, e + t - x)?,
            amp_v: amp(spec.lambda_plus, e + x + t)?,
            phase_u: neg.scaled(sl_m).add(pos.scaled(sl_p)),
            phase_v: neg.scaled(sk_m).add(pos.scaled(sk_p)),
        },
        Region::Left => Fields {
            amp_u: amp(spec.kappa_minus, e + t - x)?,
            amp_v: amp(spec.lambda_minus, e - x - t)?,
            phase_u: neg.scaled(sl_m),
            phase_v: neg.scaled(sk_m),
        },
    };
    Ok(fields)
}

fn assemble(f: Fields, log: Option<LogScale>) -> SpinorSample {
    SpinorSample { u: f.amp_u * f.phase_u.cis(log), v: f.amp_v * f.phase_v.cis(log) }
}

/// Massless solution for the power-law data of `spec` (mass must be 0).
pub fn eval_exact(spec: &DataSpec, x: f64, t: f64) -> Result<SpinorSample> {
    let eps = Eps::from_value(spec.epsilon)?;
    Ok(assemble(exact_fields(spec, eps, x, t)?, eps.log))
}

/// As [`eval_exact`], with ε given through its logarithm (overrides `spec.epsilon`).
pub fn eval_exact_log(spec: &DataSpec, log_eps: LogScale, x: f64, t: f64) -> Result<SpinorSample> {
    let eps = Eps::from_log(log_eps);
    Ok(assemble(exact_fields(spec, eps, x, t)?, eps.log))
}

/// Unwrapped phases of (u, v) at (x, t).
pub fn exact_phases(spec: &DataSpec, log_eps: LogScale, x: f64, t: f64) -> Result<(PhaseValue, PhaseValue)> {
    let eps = Eps::from_log(log_eps);
    let f = exact_fields(spec, eps, x, t)?;
    Ok((
        PhaseValue { value: f.phase_u.unwrapped(eps.log) },
        PhaseValue { value: f.phase_v.unwrapped(eps.log) },
    ))
}

/// Main term of the product formula in the cone:
/// e^{2i log(ε+x+t)}(ε+x+t)^{−1/2} · e^{2i log(ε+t−x)}(ε+t−x)^{−1/2}.
pub fn main_term(eps: f64, x: f64, t: f64) -> Result<ComplexAmplitude> {
    let a = eps + x + t;
    let b = eps + t - x;
    if !(a > 0.0 && b > 0.0) {
        return Err(LabError::Singular { x, t });
    }
    Ok(ComplexAmplitude::from_polar(1.0 / (a * b).sqrt(), 2.0 * (a.ln() + b.ln())))
}

/// e^{2i[log(ε+x+t) + log(ε+t−x)]}, the phase multiplying the remainder sum.
pub fn remainder_phase(eps: f64, x: f64, t: f64) -> Result<ComplexAmplitude> {
    let a = eps + x + t;
    let b = eps + t - x;
    if !(a > 0.0 && b > 0.0) {
        return Err(LabError::Singular { x, t });
    }
    Ok(ComplexAmplitude::from_polar(1.0, 2.0 * (a.ln() + b.ln())))
}

/// e^{4i log ε}·u_ε·v_ε for κ± = λ± = 1, m = 0 at a cone point.
pub fn rotated_product(log_eps: LogScale, x: f64, t: f64) -> Result<ComplexAmplitude> {
    let spec = DataSpec::standard(log_eps.value()).with_cutoff(false);
    let s = eval_exact_log(&spec, log_eps, x, t)?;
    Ok(log_eps.cis(4.0) * s.u * s.v)
}

/// The α-indexed limit solution (ε → 0 along e^{−2i log ε_n} → e^{iα}).
pub fn eval_limit(alpha: f64, x: f64, t: f64) -> Result<SpinorSample> {
    if !(t > 0.0) {
        return Err(LabError::domain(format!("limit family defined for t > 0, got {t}")));
    }
    if x.abs() == t {
        return Err(LabError::Singular { x, t });
    }
    let (u, v) = match classify(x, t)? {
        Region::Right => {
            let ph = ComplexAmplitude::from_polar(1.0, (x + t).ln() - (x - t).ln());
            (ph / (x - t).sqrt(), ph / (x + t).sqrt())
        }
        Region::Cone => {
            let ph = ComplexAmplitude::from_polar(1.0, alpha + (t - x).ln() + (x + t).ln());
            (ph / (t - x).sqrt(), ph / (x + t).sqrt())
        }
        Region::Left => {
            let ph = ComplexAmplitude::from_polar(1.0, (t - x).ln() - (-x - t).ln());
            (ph / (t - x).sqrt(), ph / (-x - t).sqrt())
        }
    };
    Ok(SpinorSample { u, v })
}

/// The limit family in wave coordinates y = x + t, s = t − x.
pub fn eval_limit_wave(alpha: f64, w: WaveCoords) -> Result<SpinorSample> {
    let WaveCoords { y, s } = w;
    if y == 0.0 || s == 0.0 || !y.is_finite() || !s.is_finite() {
        return Err(LabError::domain(format!("wave coordinates on an axis: y = {y}, s = {s}")));
    }
    if y < 0.0 && s < 0.0 {
        return Err(LabError::domain("quadrant y < 0, s < 0 lies in t < 0"));
    }
    let cis = |a: f64| ComplexAmplitude::from_polar(1.0, a);
    let (u, v) = if y > 0.0 && s < 0.0 {
        let ph = cis(y.ln() - (-s).ln());
        (ph / (-s).sqrt(), ph / y.sqrt())
    } else if y > 0.0 {
        let ph = cis(alpha + y.ln() + s.ln());
        (ph / s.sqrt(), ph / y.sqrt())
    } else {
        let ph = cis(-(-y).ln() + s.ln());
        (ph / s.sqrt(), ph / (-y).sqrt())
    };
    Ok(SpinorSample { u, v })
}

/// Which phase condition an ε-sequence satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceKind {
    /// e^{−2i log ε_n} = e^{iα}
    TwoLog,
    /// e^{4i log ε_n} = 1
    FourLogPlus,
    /// e^{4i log ε_n} = −1
    FourLogMinus,
}

/// Strictly decreasing positive sequence with an exact phase condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSequence {
    pub kind: SequenceKind,
    pub alpha: f64,
    pub values: Vec<f64>,
    pub logs: Vec<LogScale>,
}

impl EpsilonSequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, LogScale)> + '_ {
        self.values.iter().copied().zip(self.logs.iter().copied())
    }

    /// Drop members below `floor` (used when a mesh cannot resolve them).
    pub fn truncated_below(&self, floor: f64) -> (EpsilonSequence, usize) {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.values[i] >= floor).collect();
        let dropped = self.len() - keep.len();
        (
            EpsilonSequence {
                kind: self.kind,
                alpha: self.alpha,
                values: keep.iter().map(|&i| self.values[i]).collect(),
                logs: keep.iter().map(|&i| self.logs[i]).collect(),
            },
            dropped,
        )
    }
}

/// Closed-form ε-sequences.
///
/// * `TwoLog`: ε_n = exp(−(α + 2πn)/2), with n shifted so that every member is below 1.
/// * `FourLogPlus`: ε_n = exp(−πn/2).
/// * `FourLogMinus`: ε_n = exp(−π(2n+1)/4).
pub fn epsilon_sequence(kind: SequenceKind, alpha: f64, count: usize) -> Result<EpsilonSequence> {
    if count == 0 {
        return Err(LabError::domain("sequence length must be >= 1"));
    }
    if !alpha.is_finite() {
        return Err(LabError::domain("alpha must be finite"));
    }
    let logs: Vec<LogScale> = match kind {
        SequenceKind::TwoLog => {
            // ln ε = −α/2 − πm; need α/2 + πm > 0 for the first member
            let mut first = 1i64;
            while alpha / 2.0 + PI * first as f64 <= 0.0 {
                first += 1;
            }
            (0..count as i64).map(|i| LogScale::from_parts(-alpha / 2.0, -(first + i))).collect()
        }
        SequenceKind::FourLogPlus => (1..=count as i64)
            .map(|n| LogScale::from_parts(-(n % 2) as f64 * PI / 2.0, -(n / 2)))
            .collect(),
        SequenceKind::FourLogMinus => (1..=count as i64)
            .map(|n| LogScale::from_parts(-PI / 4.0 - (n % 2) as f64 * PI / 2.0, -(n / 2)))
            .collect(),
    };
    let values = logs.iter().map(LogScale::value).collect();
    Ok(EpsilonSequence { kind, alpha, values, logs })
}

/// One row of a grid evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub x: f64,
    pub t: f64,
    pub re_u: f64,
    pub im_u: f64,
    pub re_v: f64,
    pub im_v: f64,
}

impl GridRow {
    pub fn new(x: f64, t: f64, s: SpinorSample) -> Self {
        GridRow { x, t, re_u: s.u.re, im_u: s.u.im, re_v: s.v.re, im_v: s.v.im }
    }

    pub fn sample(&self) -> SpinorSample {
        SpinorSample::new(
            ComplexAmplitude::new(self.re_u, self.im_u),
            ComplexAmplitude::new(self.re_v, self.im_v),
        )
    }
}

/// Evaluate `field` at every point; the output order follows `points`.
pub fn evaluate_grid<F>(points: &[(f64, f64)], field: F) -> Result<Vec<GridRow>>
where
    F: Fn(f64, f64) -> Result<SpinorSample> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        points.par_iter().map(|&(x, t)| Ok(GridRow::new(x, t, field(x, t)?))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        points.iter().map(|&(x, t)| Ok(GridRow::new(x, t, field(x, t)?))).collect()
    }
}

/// Columnar text output: header `x,t,re_u,im_u,re_v,im_v`, one row per point.
pub fn write_grid_csv<W: Write>(out: W, rows: &[GridRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_csv<R: std::io::Read>(input: R) -> Result<Vec<GridRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(LabError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_adaptive;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn phi_quadrature(x: f64, t: f64, eps: f64) -> f64 {
        let h = |y: f64| 1.0 / (eps + y.abs());
        let (a, b) = (x - t, x + t);
        let mut total = 0.0;
        for (lo, hi) in [(a, b.min(0.0)), (a.max(0.0), b)] {
            if hi > lo {
                total += integrate_adaptive(h, lo, hi, 0.0, 1e-13, 4000).unwrap().value;
            }
        }
        total
    }

    #[test]
    fn phi_examples() {
        // cone point with ε = 1: −2 log 1 + log 1.5 + log 1.5
        let p = phi_epsilon(0.0, 0.5, 1.0).unwrap().value;
        assert_relative_eq!(p, 2.0 * 1.5f64.ln(), epsilon = 1e-15);
        // right region: log((ε+x+t)/(ε+x−t))
        let p = phi_epsilon(2.0, 1.0, 0.5).unwrap().value;
        assert_relative_eq!(p, (3.5f64 / 1.5).ln(), epsilon = 1e-15);
        assert!(matches!(phi_epsilon(0.0, 0.5, 0.0), Err(LabError::Singular { .. })));
        // outside the cone ε = 0 is harmless
        assert!(phi_epsilon(2.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn branches_agree_on_region_boundaries() {
        for &eps in &[1e-3, 0.1, 1.0] {
            for &t in &[0.1, 0.5, 0.9] {
                let [r, c, _] = phi_epsilon_branches(t, t, eps);
                assert!((r - c).abs() < 1e-12 * (1.0 + r.abs()));
                let [_, c, l] = phi_epsilon_branches(-t, t, eps);
                assert!((l - c).abs() < 1e-12 * (1.0 + c.abs()));
            }
        }
    }

    #[test]
    fn exact_solution_transports_modulus() {
        let spec = DataSpec::with_constants(
            ComplexAmplitude::new(0.5, 0.2),
            ComplexAmplitude::new(-1.0, 0.3),
            ComplexAmplitude::new(0.0, 1.2),
            ComplexAmplitude::new(0.7, -0.4),
            0.05,
        );
        for &(x, t) in &[(0.3, 0.1), (0.1, 0.4), (-0.2, 0.3), (-0.6, 0.2)] {
            let s = eval_exact(&spec, x, t).unwrap();
            assert_relative_eq!(s.u.norm(), spec.f(x - t).unwrap().norm(), max_relative = 1e-14);
            assert_relative_eq!(s.v.norm(), spec.g(x + t).unwrap().norm(), max_relative = 1e-14);
        }
    }

    #[test]
    fn exact_solution_satisfies_the_equations() {
        let spec = DataSpec::with_constants(
            ComplexAmplitude::new(1.0, 0.0),
            ComplexAmplitude::new(0.6, 0.8),
            ComplexAmplitude::new(0.9, 0.0),
            ComplexAmplitude::new(0.0, 1.1),
            0.2,
        );
        let h = 1e-5;
        let i = ComplexAmplitude::new(0.0, 1.0);
        for &(x, t) in &[(0.5, 0.2), (0.05, 0.3), (-0.1, 0.35), (-0.7, 0.25)] {
            let at = |dx: f64, dt: f64| eval_exact(&spec, x + dx, t + dt).unwrap();
            let s = at(0.0, 0.0);
            let du = (at(h, h).u - at(-h, -h).u) / (2.0 * h);
            let dv = (at(-h, h).v - at(h, -h).v) / (2.0 * h);
            let ru = du - 2.0 * i * s.v.norm_sqr() * s.u;
            let rv = dv - 2.0 * i * s.u.norm_sqr() * s.v;
            assert!(ru.norm() < 1e-6 * (1.0 + du.norm()), "u residual {ru} at ({x},{t})");
            assert!(rv.norm() < 1e-6 * (1.0 + dv.norm()), "v residual {rv} at ({x},{t})");
        }
    }

    #[test]
    fn cutoff_and_mass_guards() {
        let spec = DataSpec::standard(0.1);
        assert!(matches!(eval_exact(&spec, 0.6, 0.5), Err(LabError::Domain(_))));
        assert!(eval_exact(&spec.with_cutoff(false), 0.6, 0.5).is_ok());
        assert!(matches!(eval_exact(&spec.with_mass(1.0), 0.0, 0.5), Err(LabError::Domain(_))));
        assert!(matches!(eval_exact(&spec, 0.0, 0.0), Err(LabError::Domain(_))));
    }

    #[test]
    fn sequences_satisfy_their_phase_conditions() {
        let alpha = 1.3;
        let two = epsilon_sequence(SequenceKind::TwoLog, alpha, 20).unwrap();
        let target = ComplexAmplitude::from_polar(1.0, alpha);
        for (_, l) in two.iter() {
            assert!((l.cis(-2.0) - target).norm() < 1e-15);
        }
        for (_, l) in epsilon_sequence(SequenceKind::FourLogPlus, 0.0, 20).unwrap().iter() {
            assert!((l.cis(4.0) - 1.0).norm() < 1e-15);
        }
        for (_, l) in epsilon_sequence(SequenceKind::FourLogMinus, 0.0, 20).unwrap().iter() {
            assert!((l.cis(4.0) + 1.0).norm() < 1e-15);
        }
        let neg = epsilon_sequence(SequenceKind::TwoLog, -9.0, 5).unwrap();
        assert!(neg.values.iter().all(|&e| e < 1.0));
        assert!(epsilon_sequence(SequenceKind::TwoLog, 0.0, 0).is_err());
    }

    #[test]
    fn truncation_records_dropped_members() {
        let seq = epsilon_sequence(SequenceKind::FourLogPlus, 0.0, 10).unwrap();
        let (kept, dropped) = seq.truncated_below(1e-3);
        assert_eq!(kept.len() + dropped, 10);
        assert!(kept.values.iter().all(|&e| e >= 1e-3));
        assert_eq!(kept.values.len(), kept.logs.len());
    }

    #[test]
    fn product_dichotomy_is_exact_for_the_massless_case() {
        let plus = epsilon_sequence(SequenceKind::FourLogPlus, 0.0, 12).unwrap();
        let minus = epsilon_sequence(SequenceKind::FourLogMinus, 0.0, 12).unwrap();
        for &(x, t) in &[(0.0, 0.3), (0.1, 0.2), (-0.05, 0.4)] {
            for ((e, l), sign) in plus.iter().map(|p| (p, 1.0)).chain(minus.iter().map(|p| (p, -1.0))) {
                let s = eval_exact_log(&DataSpec::standard(e).with_cutoff(false), l, x, t).unwrap();
                let main = main_term(e, x, t).unwrap();
                let product = s.u * s.v;
                assert!((product - sign * main).norm() < 1e-12 * main.norm());
                assert!((rotated_product(l, x, t).unwrap() - main).norm() < 1e-12 * main.norm());
            }
        }
    }

    #[test]
    fn two_log_sequence_converges_to_the_limit() {
        let alpha = 0.7;
        let seq = epsilon_sequence(SequenceKind::TwoLog, alpha, 8).unwrap();
        let mut last = f64::INFINITY;
        for (e, l) in seq.iter() {
            let spec = DataSpec::standard(e).with_cutoff(false);
            let mut d: f64 = 0.0;
            for &x in &[-0.2, 0.0, 0.15] {
                let a = eval_exact_log(&spec, l, x, 0.25).unwrap();
                d = d.max(a.distance(&eval_limit(alpha, x, 0.25).unwrap()));
            }
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn limit_agrees_in_both_coordinate_systems() {
        for &(x, t) in &[(0.3, 0.1), (0.1, 0.4), (-0.6, 0.2)] {
            let a = eval_limit(0.4, x, t).unwrap();
            let b = eval_limit_wave(0.4, crate::field_model::to_wave(x, t)).unwrap();
            assert!(a.distance(&b) < 1e-12);
        }
        assert!(matches!(eval_limit(0.0, 0.3, 0.3), Err(LabError::Singular { .. })));
        assert!(eval_limit_wave(0.0, WaveCoords::new(-1.0, -1.0)).is_err());
        assert!(eval_limit_wave(0.0, WaveCoords::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn cone_phase_grows_like_log_epsilon() {
        // u-phase coefficient of log ε is −(|λ₊|²+|λ₋|²)
        let spec = DataSpec::standard(1.0).with_cutoff(false);
        let a = exact_phases(&spec, LogScale::from_value(1e-10).unwrap(), 0.0, 0.5).unwrap().0.value;
        let b = exact_phases(&spec, LogScale::from_value(1e-14).unwrap(), 0.0, 0.5).unwrap().0.value;
        let slope = (b - a) / (1e-14f64.ln() - 1e-10f64.ln());
        assert_relative_eq!(slope, -2.0, epsilon = 1e-9);
    }

    #[test]
    fn grid_csv_round_trip() {
        let spec = DataSpec::standard(0.1);
        let pts = [(0.0, 0.2), (0.1, 0.3), (-0.4, 0.1)];
        let rows = evaluate_grid(&pts, |x, t| eval_exact(&spec, x, t)).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("x,t,re_u,im_u,re_v,im_v"));
        assert_eq!(read_grid_csv(buf.as_slice()).unwrap(), rows);
    }

    proptest! {
        #[test]
        fn phi_matches_quadrature(x in -1.5f64..1.5, t in 0.01f64..1.0, le in -9.0f64..0.0) {
            let eps = le.exp();
            prop_assume!((x.abs() - t).abs() > 1e-9);
            let p = phi_epsilon(x, t, eps).unwrap().value;
            let q = phi_quadrature(x, t, eps);
            prop_assert!((p - q).abs() <= 1e-10 * q.abs().max(1e-300), "{p} vs {q}");
        }

        #[test]
        fn log_scale_round_trips(v in 1e-12f64..10.0) {
            let l = LogScale::from_value(v).unwrap();
            prop_assert!((l.value() - v).abs() <= 1e-14 * v);
        }
    }
}
