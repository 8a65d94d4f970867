//! Lebesgue and Sobolev norms of samplers x ↦ ComplexAmplitude.
//!
//! Samplers may carry integrable singularities and jumps; they announce those locations
//! through [`Sampler::breakpoints`] so the quadrature can split and grade the mesh there.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field_model::DataSpec;
use crate::quadrature::{graded_adaptive, graded_panels, GaussLegendre, GradedOutcome, SingularEnd};
use crate::ComplexAmplitude;

/// A function of one real variable with known non-smooth points.
pub trait Sampler: Sync {
    fn sample(&self, x: f64) -> ComplexAmplitude;

    /// Points where the sampler is singular or non-smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<S: Sampler + ?Sized> Sampler for &S {
    fn sample(&self, x: f64) -> ComplexAmplitude {
        (**self).sample(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

impl<S: Sampler + ?Sized> Sampler for Box<S> {
    fn sample(&self, x: f64) -> ComplexAmplitude {
        (**self).sample(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

/// Closure-backed sampler.
pub struct FnSampler<F> {
    f: F,
    breakpoints: Vec<f64>,
}

pub fn sampler_fn<F>(f: F, breakpoints: Vec<f64>) -> FnSampler<F>
where
    F: Fn(f64) -> ComplexAmplitude + Sync,
{
    FnSampler { f, breakpoints }
}

impl<F: Fn(f64) -> ComplexAmplitude + Sync> Sampler for FnSampler<F> {
    fn sample(&self, x: f64) -> ComplexAmplitude {
        (self.f)(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    U,
    V,
}

/// One component of the data family: f (for `U`) or g (for `V`).
#[derive(Debug, Clone, Copy)]
pub struct DataComponent {
    pub spec: DataSpec,
    pub component: Component,
}

impl DataComponent {
    pub fn new(spec: DataSpec, component: Component) -> Self {
        DataComponent { spec, component }
    }
}

impl Sampler for DataComponent {
    fn sample(&self, x: f64) -> ComplexAmplitude {
        let r = match self.component {
            Component::U => self.spec.f(x),
            Component::V => self.spec.g(x),
        };
        r.unwrap_or(ComplexAmplitude::new(f64::INFINITY, 0.0))
    }
    fn breakpoints(&self) -> Vec<f64> {
        if self.spec.cutoff {
            vec![-1.0, 0.0, 1.0]
        } else {
            vec![0.0]
        }
    }
}

/// a − b.
pub struct Difference<A, B>(pub A, pub B);

impl<A: Sampler, B: Sampler> Sampler for Difference<A, B> {
    fn sample(&self, x: f64) -> ComplexAmplitude {
        self.0.sample(x) - self.1.sample(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.0.breakpoints();
        b.extend(self.1.breakpoints());
        b
    }
}

/// The zero function.
pub struct Zero;

impl Sampler for Zero {
    fn sample(&self, _x: f64) -> ComplexAmplitude {
        ComplexAmplitude::new(0.0, 0.0)
    }
}

/// Smooth bump `exp(y²/(y²−1))`, y = (x − center)/radius, supported in |y| < 1, value 1 at y = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
}

impl Bump {
    pub fn standard() -> Self {
        Bump { center: 0.0, radius: 1.0 }
    }

    pub fn value(&self, x: f64) -> f64 {
        let y = (x - self.center) / self.radius;
        let y2 = y * y;
        if y2 >= 1.0 {
            0.0
        } else {
            (y2 / (y2 - 1.0)).exp()
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let y = (x - self.center) / self.radius;
        let y2 = y * y;
        if y2 >= 1.0 {
            0.0
        } else {
            let d = y2 - 1.0;
            self.value(x) * (-2.0 * y / (d * d)) / self.radius
        }
    }
}

impl Sampler for Bump {
    fn sample(&self, x: f64) -> ComplexAmplitude {
        ComplexAmplitude::new(self.value(x), 0.0)
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.center - self.radius, self.center + self.radius]
    }
}

/// Lebesgue exponent, possibly infinite. Serialised as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Finite(f64),
    Infinite(InfTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfTag {
    #[serde(rename = "inf")]
    Inf,
}

impl Exponent {
    pub const INFINITY: Exponent = Exponent::Infinite(InfTag::Inf);

    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(p) => *p,
            Exponent::Infinite(_) => f64::INFINITY,
        }
    }
}

impl From<f64> for Exponent {
    fn from(p: f64) -> Self {
        if p.is_infinite() {
            Exponent::INFINITY
        } else {
            Exponent::Finite(p)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LebesgueSpec {
    pub p: Exponent,
    pub a: f64,
    pub b: f64,
}

impl LebesgueSpec {
    pub fn new(p: f64, a: f64, b: f64) -> Self {
        LebesgueSpec { p: p.into(), a, b }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p.value();
        if !(p >= 1.0) {
            return Err(LabError::domain(format!("Lebesgue exponent must be >= 1, got {p}")));
        }
        if !(self.a < self.b) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(LabError::domain(format!("interval [{}, {}] is empty or unbounded", self.a, self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevSpec {
    pub s: f64,
    /// Number of DFT points, a power of two ≥ 1024.
    pub grid_points: usize,
    pub freq_cutoff: f64,
    /// The sampler must vanish outside [−half_width, half_width].
    pub half_width: f64,
    /// Window length divided by the support length.
    #[serde(default = "default_padding")]
    pub padding: f64,
    /// Allowed relative change of the norm under doubling `grid_points`.
    #[serde(default = "default_stability")]
    pub stability_tol: f64,
}

fn default_padding() -> f64 {
    2.0
}

fn default_stability() -> f64 {
    1e-2
}

impl SobolevSpec {
    pub fn new(s: f64, grid_points: usize, freq_cutoff: f64, half_width: f64) -> Self {
        SobolevSpec {
            s,
            grid_points,
            freq_cutoff,
            half_width,
            padding: default_padding(),
            stability_tol: default_stability(),
        }
    }

    pub fn window(&self) -> f64 {
        2.0 * self.half_width * self.padding
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 1024 || !self.grid_points.is_power_of_two() {
            return Err(LabError::domain(format!(
                "grid_points must be a power of two >= 1024, got {}",
                self.grid_points
            )));
        }
        if !(self.freq_cutoff > 0.0) {
            return Err(LabError::domain("freq_cutoff must be > 0"));
        }
        if !(self.half_width > 0.0) || !(self.padding >= 1.0) {
            return Err(LabError::domain("support half width must be > 0 and padding >= 1"));
        }
        let nyquist = PI * self.grid_points as f64 / self.window();
        if self.freq_cutoff > nyquist {
            return Err(LabError::domain(format!(
                "freq_cutoff {} exceeds the grid Nyquist frequency {nyquist}",
                self.freq_cutoff
            )));
        }
        if !self.s.is_finite() {
            return Err(LabError::domain("Sobolev order must be finite"));
        }
        Ok(())
    }
}

/// Norm specification for tables and reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NormSpec {
    Lebesgue(LebesgueSpec),
    Sobolev(SobolevSpec),
}

/// A norm value or a signal that the quadrature found the integral divergent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum NormValue {
    Finite { value: f64 },
    Divergent { partial: f64 },
}

impl NormValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            NormValue::Finite { value } => Some(*value),
            NormValue::Divergent { .. } => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, NormValue::Divergent { .. })
    }
}

const LP_ORDER: usize = 16;
const LP_REL_TOL: f64 = 1e-14;
const SUP_DEPTH: usize = 60;

fn pieces(a: f64, b: f64, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&c| c > a && c < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// ‖h‖_{L^p(a,b)}.
///
/// Each stretch between breakpoints is split into `resolution` uniform cells; the two end
/// cells are graded geometrically (ratio 1/2) toward the breakpoint with depth chosen by
/// tolerance, the interior cells use Gauss–Legendre. p = ∞ takes the maximum over the same
/// sample points and reports divergence if it keeps growing toward a breakpoint.
pub fn lp_norm<S: Sampler + ?Sized>(sampler: &S, spec: &LebesgueSpec, resolution: usize) -> Result<NormValue> {
    spec.validate()?;
    if resolution < 64 {
        return Err(LabError::domain(format!("resolution must be >= 64, got {resolution}")));
    }
    let rule = GaussLegendre::new(LP_ORDER);
    let bps = sampler.breakpoints();
    let p = spec.p.value();
    if p.is_infinite() {
        return sup_norm(sampler, spec.a, spec.b, &bps, resolution, &rule);
    }
    let power = |x: f64| sampler.sample(x).norm().powf(p);
    let mut total = 0.0;
    let mut divergent = false;
    for (lo, hi) in pieces(spec.a, spec.b, &bps) {
        let h = (hi - lo) / resolution as f64;
        for i in 0..resolution {
            let c0 = lo + i as f64 * h;
            let c1 = if i + 1 == resolution { hi } else { lo + (i + 1) as f64 * h };
            let contrib = if i == 0 || i + 1 == resolution {
                let mid = 0.5 * (c0 + c1);
                let mut cell = 0.0;
                let halves: [(f64, f64, SingularEnd, bool); 2] = [
                    (c0, mid, SingularEnd::Left, i == 0),
                    (mid, c1, SingularEnd::Right, i + 1 == resolution),
                ];
                for (a, b, end, graded) in halves {
                    if graded {
                        match graded_adaptive(power, a, b, end, LP_REL_TOL, &rule) {
                            GradedOutcome::Converged { value, .. } => cell += value,
                            GradedOutcome::Divergent { partial, .. } => {
                                divergent = true;
                                cell += partial;
                            }
                        }
                    } else {
                        cell += rule.integrate(power, a, b);
                    }
                }
                cell
            } else {
                rule.integrate(power, c0, c1)
            };
            total += contrib;
        }
    }
    if divergent || !total.is_finite() {
        Ok(NormValue::Divergent { partial: total.powf(1.0 / p) })
    } else {
        Ok(NormValue::Finite { value: total.powf(1.0 / p) })
    }
}

fn sup_norm<S: Sampler + ?Sized>(
    sampler: &S,
    a: f64,
    b: f64,
    bps: &[f64],
    resolution: usize,
    rule: &GaussLegendre,
) -> Result<NormValue> {
    let mut sup: f64 = 0.0;
    let mut growing = false;
    for (lo, hi) in pieces(a, b, bps) {
        let h = (hi - lo) / resolution as f64;
        for i in 0..resolution {
            let c0 = lo + i as f64 * h;
            let c1 = lo + (i + 1) as f64 * h;
            for (x, _) in rule.mapped(c0, c1) {
                sup = sup.max(sampler.sample(x).norm());
            }
        }
        for (end, a0, b0) in [(SingularEnd::Left, lo, lo + h), (SingularEnd::Right, hi - h, hi)] {
            let panels = graded_panels(a0, b0, end, SUP_DEPTH);
            let level_max: Vec<f64> = panels
                .iter()
                .map(|&(p0, p1)| rule.mapped(p0, p1).map(|(x, _)| sampler.sample(x).norm()).fold(0.0, f64::max))
                .collect();
            let shallow = level_max[SUP_DEPTH / 2];
            let deep = level_max[SUP_DEPTH - 1];
            if deep > 2.0 * shallow && deep > 2.0 * sup {
                growing = true;
            }
            sup = level_max.iter().copied().fold(sup, f64::max);
        }
    }
    if growing || !sup.is_finite() {
        Ok(NormValue::Divergent { partial: sup })
    } else {
        Ok(NormValue::Finite { value: sup })
    }
}

/// Discrete Fourier data of a compactly supported sampler: (ξ_k, |ĥ(ξ_k)|) for
/// ξ_k = 2πk/W, k = −N/2 … N/2−1, ordered by k.
///
/// The sampler is replaced by its cell averages on the uniform grid (cells touching a
/// breakpoint are integrated on graded panels), so the transform of the piecewise-constant
/// interpolant is exact: ĥ(ξ) = dx·sinc(ξ dx/2)·DFT(avg).
pub fn fourier_magnitudes<S: Sampler + ?Sized>(
    sampler: &S,
    half_width: f64,
    padding: f64,
    grid_points: usize,
) -> Vec<(f64, f64)> {
    let window = 2.0 * half_width * padding;
    let n = grid_points;
    let dx = window / n as f64;
    let start = -0.5 * window;
    let mut bps = sampler.breakpoints();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let rule = GaussLegendre::new(8);

    let average = |j: usize| -> ComplexAmplitude {
        let lo = start + j as f64 * dx;
        let hi = lo + dx;
        let touching: Vec<f64> = bps.iter().copied().filter(|&c| c >= lo && c <= hi).collect();
        let sum = if touching.is_empty() {
            complex_gl(sampler, lo, hi, &rule)
        } else {
            pieces(lo, hi, &touching)
                .into_iter()
                .map(|(a, b)| {
                    let mid = 0.5 * (a + b);
                    let left = if touching.contains(&a) {
                        complex_graded(sampler, a, mid, SingularEnd::Left, &rule)
                    } else {
                        complex_gl(sampler, a, mid, &rule)
                    };
                    let right = if touching.contains(&b) {
                        complex_graded(sampler, mid, b, SingularEnd::Right, &rule)
                    } else {
                        complex_gl(sampler, mid, b, &rule)
                    };
                    left + right
                })
                .fold(ComplexAmplitude::new(0.0, 0.0), |acc, z| acc + z)
        };
        sum / dx
    };

    #[cfg(feature = "parallel")]
    let mut buf: Vec<ComplexAmplitude> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(average).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut buf: Vec<ComplexAmplitude> = (0..n).map(average).collect();

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);

    let half = (n / 2) as i64;
    (-half..half)
        .map(|k| {
            let idx = k.rem_euclid(n as i64) as usize;
            let xi = 2.0 * PI * k as f64 / window;
            let arg = 0.5 * xi * dx;
            let sinc = if arg == 0.0 { 1.0 } else { arg.sin() / arg };
            (xi, dx * sinc.abs() * buf[idx].norm())
        })
        .collect()
}

fn complex_gl<S: Sampler + ?Sized>(s: &S, a: f64, b: f64, rule: &GaussLegendre) -> ComplexAmplitude {
    rule.mapped(a, b).fold(ComplexAmplitude::new(0.0, 0.0), |acc, (x, w)| acc + s.sample(x) * w)
}

const CELL_GRADING_DEPTH: usize = 80;

fn complex_graded<S: Sampler + ?Sized>(
    s: &S,
    a: f64,
    b: f64,
    end: SingularEnd,
    rule: &GaussLegendre,
) -> ComplexAmplitude {
    graded_panels(a, b, end, CELL_GRADING_DEPTH)
        .into_iter()
        .fold(ComplexAmplitude::new(0.0, 0.0), |acc, (lo, hi)| acc + complex_gl(s, lo, hi, rule))
}

fn check_support<S: Sampler + ?Sized>(sampler: &S, half_width: f64) -> Result<()> {
    // probe just outside the declared support
    let probes = [1.0001, 1.01, 1.1, 1.5];
    for k in probes {
        for x in [-k * half_width, k * half_width] {
            if sampler.sample(x).norm() > 0.0 {
                return Err(LabError::domain(format!(
                    "sampler is not supported in [-{half_width}, {half_width}] (nonzero at x = {x})"
                )));
            }
        }
    }
    Ok(())
}

/// Sobolev norm with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsNorm {
    /// sqrt of (1/2π)∫_{|ξ|≤cutoff} (1+ξ²)^s |ĥ|² dξ.
    pub value: f64,
    /// Bound on the omitted squared mass beyond the cutoff, assuming |ĥ| ≤ C⟨ξ⟩^{−1/2};
    /// `None` when s ≥ 0, where that bound is not summable.
    pub tail_estimate: Option<f64>,
    /// The constant C (sup of ⟨ξ⟩^{1/2}|ĥ| inside the cutoff).
    pub decay_constant: f64,
    /// Value at twice the grid points.
    pub refined_value: f64,
}

fn truncated_hs(mags: &[(f64, f64)], s: f64, cutoff: f64, window: f64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut decay: f64 = 0.0;
    for &(xi, m) in mags {
        if xi.abs() <= cutoff {
            sum += (1.0 + xi * xi).powf(s) * m * m;
            decay = decay.max((1.0 + xi * xi).powf(0.25) * m);
        }
    }
    ((sum / window).sqrt(), decay)
}

/// ‖h‖_{H^s} for a sampler supported in [−L, L].
pub fn hs_norm<S: Sampler + ?Sized>(sampler: &S, spec: &SobolevSpec) -> Result<HsNorm> {
    spec.validate()?;
    check_support(sampler, spec.half_width)?;
    let window = spec.window();
    let coarse = fourier_magnitudes(sampler, spec.half_width, spec.padding, spec.grid_points);
    let fine = fourier_magnitudes(sampler, spec.half_width, spec.padding, 2 * spec.grid_points);
    let (value, decay) = truncated_hs(&coarse, spec.s, spec.freq_cutoff, window);
    let (refined, _) = truncated_hs(&fine, spec.s, spec.freq_cutoff, window);
    let scale = value.abs().max(refined.abs());
    if scale > 0.0 {
        let change = (value - refined).abs() / scale;
        if change > spec.stability_tol {
            return Err(LabError::Resolution { change, tolerance: spec.stability_tol });
        }
    }
    let tail_estimate = if spec.s < 0.0 {
        // (1/2π)·2·C²∫_K^∞ ξ^{2s−1} dξ
        let k = spec.freq_cutoff;
        Some(decay * decay * k.powf(2.0 * spec.s) / (-2.0 * spec.s) / PI)
    } else {
        None
    };
    Ok(HsNorm { value, tail_estimate, decay_constant: decay, refined_value: refined })
}

/// sup over |ξ| ≤ `freq_window` of ⟨ξ⟩^{1/2}|ĥ(ξ)|.
pub fn fourier_decay_sup<S: Sampler + ?Sized>(
    sampler: &S,
    half_width: f64,
    grid_points: usize,
    freq_window: f64,
) -> Result<f64> {
    let spec = SobolevSpec::new(0.0, grid_points, freq_window, half_width);
    spec.validate()?;
    check_support(sampler, half_width)?;
    let mags = fourier_magnitudes(sampler, half_width, spec.padding, grid_points);
    Ok(truncated_hs(&mags, 0.0, freq_window, spec.window()).1)
}

/// Evaluate a norm of any kind; Sobolev results are reported through their truncated value.
pub fn norm_of<S: Sampler + ?Sized>(sampler: &S, spec: &NormSpec, resolution: usize) -> Result<NormValue> {
    match spec {
        NormSpec::Lebesgue(l) => lp_norm(sampler, l, resolution),
        NormSpec::Sobolev(h) => Ok(NormValue::Finite { value: hs_norm(sampler, h)?.value }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RowStatus {
    Ok { distance: f64 },
    Divergent { partial: f64 },
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    #[serde(flatten)]
    pub status: RowStatus,
}

impl ConvergenceRow {
    pub fn distance(&self) -> Option<f64> {
        match self.status {
            RowStatus::Ok { distance } => Some(distance),
            _ => None,
        }
    }
}

/// Distances ‖family(ε) − target‖ down a decreasing list of ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub family: String,
    pub norm: NormSpec,
    pub resolution: usize,
    pub rows: Vec<ConvergenceRow>,
    /// Every row finite and strictly decreasing.
    pub monotone_decreasing: bool,
}

pub const DEFAULT_RESOLUTION: usize = 64;

/// Build a convergence table. Rows are independent and may be computed in parallel; each
/// row uses a fixed summation order, so the table does not depend on scheduling.
pub fn convergence_table<F, S, T>(
    family_id: &str,
    family: F,
    target: &T,
    spec: &NormSpec,
    epsilons: &[f64],
    resolution: usize,
) -> Result<ConvergenceTable>
where
    F: Fn(f64) -> S + Sync,
    S: Sampler,
    T: Sampler + ?Sized,
{
    if epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(LabError::domain("all epsilon values must be > 0"));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(LabError::domain("epsilon list must be strictly decreasing"));
    }
    let row = |&eps: &f64| -> ConvergenceRow {
        let member = family(eps);
        let diff = Difference(&member, target);
        let status = match norm_of(&diff, spec, resolution) {
            Ok(NormValue::Finite { value }) => RowStatus::Ok { distance: value },
            Ok(NormValue::Divergent { partial }) => RowStatus::Divergent { partial },
            Err(e) => RowStatus::Error { message: e.to_string() },
        };
        ConvergenceRow { epsilon: eps, status }
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<ConvergenceRow> = {
        use rayon::prelude::*;
        epsilons.par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<ConvergenceRow> = epsilons.iter().map(row).collect();

    let distances: Option<Vec<f64>> = rows.iter().map(ConvergenceRow::distance).collect();
    let monotone_decreasing = match distances {
        Some(d) => !d.is_empty() && d.windows(2).all(|w| w[1] < w[0]),
        None => false,
    };
    Ok(ConvergenceTable { family: family_id.to_string(), norm: *spec, resolution, rows, monotone_decreasing })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    epsilon: f64,
    distance: Option<f64>,
    status: &'a str,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    family: &'a str,
    norm: &'a NormSpec,
    resolution: usize,
    monotone_decreasing: bool,
}

impl ConvergenceTable {
    /// CSV with header `epsilon,distance,status`; divergent and failed rows leave `distance`
    /// empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            let (distance, status) = match &r.status {
                RowStatus::Ok { distance } => (Some(*distance), "ok".to_string()),
                RowStatus::Divergent { .. } => (None, "divergent".to_string()),
                RowStatus::Error { message } => (None, format!("error: {message}")),
            };
            w.serialize(CsvRow { epsilon: r.epsilon, distance, status: &status })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn sidecar_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Sidecar {
            family: &self.family,
            norm: &self.norm,
            resolution: self.resolution,
            monotone_decreasing: self.monotone_decreasing,
        })?)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        std::fs::write(dir.join(format!("{stem}.json")), self.sidecar_json()?)?;
        Ok(())
    }
}
