//! Characteristic-lattice integrator for
//!
//! ```text
//! (∂t + ∂x)u = −imv + 2i|v|²u,    (∂t − ∂x)v = −imu + 2i|u|²v,
//! ```
//!
//! and the diagnostics built on top of it: phase line integrals φ±, global and light-cone
//! charge balance, the functional A(t) and the remainder terms of the product formula.
//!
//! The lattice has Δx = Δt = Δ, so u moves exactly from node (j−1, n) to (j, n+1) and v from
//! (j+1, n) to (j, n+1). Each step integrates the integrating-factor form
//!
//! ```text
//! e^{−iφ₊}u(P₁) = e^{−iφ₊}u(P₀) − im ∫ e^{−iφ₊}v,     φ₊' = 2|v|²,
//! ```
//!
//! with the trapezoidal rule for both the phase increment and the mass term:
//!
//! ```text
//! u₁ = e^{iΔ(|v₀|²+|v₁|²)}(u₀ − i(mΔ/2)v₀) − i(mΔ/2)v₁
//! ```
//!
//! and the mirror formula for v. The endpoint values are found by fixed-point iteration.
//! With m = 0 this keeps |u| exactly constant along characteristics, and for any m the
//! discrete charge Δ·Σ(|u|²+|v|²) is conserved up to rounding.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exact_massless::{GridRow, LogScale};
use crate::field_model::{DataSpec, SpinorSample};
use crate::ComplexAmplitude;

const I: ComplexAmplitude = ComplexAmplitude { re: 0.0, im: 1.0 };
const ZERO: ComplexAmplitude = ComplexAmplitude { re: 0.0, im: 0.0 };

/// Lattice geometry and iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    pub x_min: f64,
    pub x_max: f64,
    pub delta: f64,
    pub t_max: f64,
    #[serde(default = "default_tol")]
    pub fixed_point_tol: f64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_iterations() -> usize {
    50
}

impl MeshParams {
    pub fn new(x_min: f64, x_max: f64, delta: f64, t_max: f64) -> Self {
        MeshParams {
            x_min,
            x_max,
            delta,
            t_max,
            fixed_point_tol: default_tol(),
            max_iterations: default_iterations(),
        }
    }

    /// Symmetric domain [−(1+T), 1+T] for cutoff data up to time T.
    pub fn covering_cutoff(delta: f64, t_max: f64) -> Self {
        let half = ((1.0 + t_max) / delta).ceil() * delta;
        MeshParams::new(-half, half, delta, t_max)
    }
}

fn as_index(value: f64, delta: f64, what: &str) -> Result<i64> {
    let q = value / delta;
    let r = q.round();
    if (q - r).abs() > 1e-6 {
        return Err(LabError::domain(format!("{what} = {value} is not a multiple of the step {delta}")));
    }
    Ok(r as i64)
}

/// Solved lattice. Immutable once returned by [`solve`].
#[derive(Debug, Clone)]
pub struct CharacteristicMesh {
    delta: f64,
    first_index: i64,
    nodes: usize,
    levels: usize,
    /// Data vanish outside the domain for all computed times, so edge inflow is exact.
    exterior_zero: bool,
    spec: DataSpec,
    log_eps: LogScale,
    field: Vec<SpinorSample>,
    max_iterations_used: usize,
}

/// Fixed-point solve of one lattice node given its two upstream neighbours.
#[allow(clippy::too_many_arguments)]
fn node_update(
    left: SpinorSample,
    right: SpinorSample,
    half_mass_step: f64,
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> std::result::Result<(SpinorSample, usize), f64> {
    let a = half_mass_step;
    let carried_u = left.u - I * a * left.v;
    let carried_v = right.v - I * a * right.u;
    let vl2 = left.v.norm_sqr();
    let ur2 = right.u.norm_sqr();
    let mut u = left.u;
    let mut v = right.v;
    let mut diff = f64::INFINITY;
    for it in 1..=max_iter {
        let u_new = ComplexAmplitude::from_polar(1.0, delta * (vl2 + v.norm_sqr())) * carried_u - I * a * v;
        let v_new = ComplexAmplitude::from_polar(1.0, delta * (ur2 + u_new.norm_sqr())) * carried_v - I * a * u_new;
        diff = (u_new - u).norm().max((v_new - v).norm());
        u = u_new;
        v = v_new;
        let scale = 1.0f64.max(u.norm()).max(v.norm());
        if diff <= tol * scale {
            return Ok((SpinorSample { u, v }, it));
        }
    }
    Err(diff)
}

/// Integrate the system from the data of `spec` (ε > 0) on the lattice of `params`.
pub fn solve(spec: &DataSpec, params: &MeshParams) -> Result<CharacteristicMesh> {
    let log = LogScale::from_value(spec.epsilon)
        .map_err(|_| LabError::domain(format!("solver needs epsilon > 0, got {}", spec.epsilon)))?;
    solve_with_log(spec, log, params)
}

/// As [`solve`], with ε given through its logarithm (overrides `spec.epsilon`).
pub fn solve_with_log(spec: &DataSpec, log_eps: LogScale, params: &MeshParams) -> Result<CharacteristicMesh> {
    let mut spec = *spec;
    spec.epsilon = log_eps.value();
    spec.validate()?;
    if !(spec.epsilon > 0.0) {
        return Err(LabError::domain("solver needs epsilon > 0"));
    }
    let delta = params.delta;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(LabError::domain(format!("step must be > 0, got {delta}")));
    }
    if delta > spec.epsilon / 10.0 * (1.0 + 1e-9) {
        return Err(LabError::domain(format!(
            "step {delta} does not resolve the data scale: need delta <= epsilon/10 = {}",
            spec.epsilon / 10.0
        )));
    }
    let contraction = delta * (2.0 * spec.modulus_sq_bound() + spec.mass);
    if contraction >= 1.0 {
        return Err(LabError::domain(format!(
            "step too large for the fixed-point contraction: delta*(2|v|^2+m) = {contraction}"
        )));
    }
    let first = as_index(params.x_min, delta, "x_min")?;
    let last = as_index(params.x_max, delta, "x_max")?;
    if last <= first {
        return Err(LabError::domain("empty spatial extent"));
    }
    let steps = as_index(params.t_max, delta, "t_max")?;
    if steps < 0 {
        return Err(LabError::domain("t_max must be >= 0"));
    }
    let nodes = (last - first + 1) as usize;
    let levels = steps as usize + 1;
    let t_max = steps as f64 * delta;
    let x_min = first as f64 * delta;
    let x_max = last as f64 * delta;
    let slack = 1e-9 * delta;
    let exterior_zero = spec.cutoff && x_min <= -1.0 - t_max + slack && x_max >= 1.0 + t_max - slack;

    let mut field = Vec::with_capacity(nodes * levels);
    for j in 0..nodes {
        let x = (first + j as i64) as f64 * delta;
        field.push(SpinorSample { u: spec.f(x)?, v: spec.g(x)? });
    }
    let a = 0.5 * spec.mass * delta;
    let mut max_used = 0;
    for n in 0..levels - 1 {
        let base = n * nodes;
        let prev = &field[base..base + nodes];
        let update = |j: usize| {
            let left = if j > 0 { prev[j - 1] } else { SpinorSample::zero() };
            let right = if j + 1 < nodes { prev[j + 1] } else { SpinorSample::zero() };
            node_update(left, right, a, delta, params.fixed_point_tol, params.max_iterations)
                .map_err(|residual| LabError::StepSize { node: j, level: n + 1, residual })
        };
        #[cfg(feature = "parallel")]
        let next: Vec<(SpinorSample, usize)> = {
            use rayon::prelude::*;
            (0..nodes).into_par_iter().map(update).collect::<Result<_>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let next: Vec<(SpinorSample, usize)> = (0..nodes).map(update).collect::<Result<_>>()?;
        for (s, it) in next {
            max_used = max_used.max(it);
            field.push(s);
        }
    }
    Ok(CharacteristicMesh {
        delta,
        first_index: first,
        nodes,
        levels,
        exterior_zero,
        spec,
        log_eps,
        field,
        max_iterations_used: max_used,
    })
}

/// Light-cone charge balance at one apex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeDiagnostics {
    pub x: f64,
    pub t: f64,
    /// ∫₀ᵗ 2|v(x−t+σ,σ)|² dσ
    pub flux_left: f64,
    /// ∫₀ᵗ 2|u(x+t−σ,σ)|² dσ
    pub flux_right: f64,
    /// ∫_{x−t}^{x+t} (|f|² + |g|²) dy, closed form.
    pub base: f64,
    pub residual: f64,
}

/// Remainder terms of the product formula at a cone point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderBundle {
    pub r1: ComplexAmplitude,
    pub r2: ComplexAmplitude,
    pub r3: ComplexAmplitude,
    /// Phase-stripped data product e^{i·rest}·f(x−t)g(x+t).
    pub main_term: ComplexAmplitude,
    /// e^{−ic·log ε}·u·v, where c·log ε is the singular part of the closed-form phase sum.
    pub rotated_product: ComplexAmplitude,
    pub key_residual: f64,
}

impl RemainderBundle {
    pub fn remainder_sum_abs(&self) -> f64 {
        self.r1.norm() + self.r2.norm() + self.r3.norm()
    }
}

/// ∫_a^b |h|² for the data component with the given constants, in closed form.
fn component_charge(plus: f64, minus: f64, eps: f64, cutoff: bool, a: f64, b: f64) -> (f64, f64) {
    // returns (coefficient of ln ε, remaining part)
    let (mut a, mut b) = (a, b);
    if cutoff {
        a = a.max(-1.0);
        b = b.min(1.0);
    }
    if a >= b {
        return (0.0, 0.0);
    }
    let mut coeff = 0.0;
    let mut rest = 0.0;
    if b > 0.0 {
        let lo = a.max(0.0);
        if lo == 0.0 {
            coeff -= plus;
            rest += plus * (eps + b).ln();
        } else {
            rest += plus * ((eps + b).ln() - (eps + lo).ln());
        }
    }
    if a < 0.0 {
        let hi = b.min(0.0);
        if hi == 0.0 {
            coeff -= minus;
            rest += minus * (eps - a).ln();
        } else {
            rest += minus * ((eps - a).ln() - (eps - hi).ln());
        }
    }
    (coeff, rest)
}

/// ∫_a^b (|f|² + |g|²) dy split as (coefficient of ln ε, rest).
pub fn data_charge_parts(spec: &DataSpec, a: f64, b: f64) -> (f64, f64) {
    let (c1, r1) = component_charge(
        spec.kappa_plus.norm_sqr(),
        spec.kappa_minus.norm_sqr(),
        spec.epsilon,
        spec.cutoff,
        a,
        b,
    );
    let (c2, r2) = component_charge(
        spec.lambda_plus.norm_sqr(),
        spec.lambda_minus.norm_sqr(),
        spec.epsilon,
        spec.cutoff,
        a,
        b,
    );
    (c1 + c2, r1 + r2)
}

/// ∫_a^b (|f|² + |g|²) dy in closed form (ε > 0).
pub fn data_charge(spec: &DataSpec, a: f64, b: f64) -> f64 {
    let (c, r) = data_charge_parts(spec, a, b);
    if c == 0.0 {
        r
    } else {
        c * spec.epsilon.ln() + r
    }
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

impl CharacteristicMesh {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn level_count(&self) -> usize {
        self.levels
    }

    pub fn spec(&self) -> &DataSpec {
        &self.spec
    }

    pub fn log_eps(&self) -> LogScale {
        self.log_eps
    }

    pub fn x_min(&self) -> f64 {
        self.first_index as f64 * self.delta
    }

    pub fn x_max(&self) -> f64 {
        (self.first_index + self.nodes as i64 - 1) as f64 * self.delta
    }

    pub fn x(&self, j: usize) -> f64 {
        (self.first_index + j as i64) as f64 * self.delta
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.delta
    }

    pub fn max_iterations_used(&self) -> usize {
        self.max_iterations_used
    }

    /// Nodes at level `n` whose values are fully determined by the data.
    pub fn valid_range(&self, n: usize) -> Option<(usize, usize)> {
        if n >= self.levels {
            return None;
        }
        if self.exterior_zero {
            return Some((0, self.nodes - 1));
        }
        if 2 * n >= self.nodes {
            return None;
        }
        Some((n, self.nodes - 1 - n))
    }

    pub fn is_valid(&self, j: i64, n: i64) -> bool {
        if j < 0 || n < 0 {
            return false;
        }
        match self.valid_range(n as usize) {
            Some((lo, hi)) => (j as usize) >= lo && (j as usize) <= hi,
            None => false,
        }
    }

    /// Node value, without validity checks.
    pub fn node(&self, j: usize, n: usize) -> SpinorSample {
        self.field[n * self.nodes + j]
    }

    pub fn level(&self, n: usize) -> &[SpinorSample] {
        &self.field[n * self.nodes..(n + 1) * self.nodes]
    }

    /// Node indices of (x, t), which must lie on the lattice.
    pub fn locate(&self, x: f64, t: f64) -> Result<(i64, i64)> {
        let jx = as_index(x, self.delta, "x")? - self.first_index;
        let n = as_index(t, self.delta, "t")?;
        Ok((jx, n))
    }

    /// Value at a lattice point inside the domain of dependence of the data.
    pub fn value_at(&self, x: f64, t: f64) -> Result<SpinorSample> {
        let (j, n) = self.locate(x, t)?;
        if !self.is_valid(j, n) {
            return Err(LabError::domain(format!(
                "({x}, {t}) lies outside the region determined by the computed data"
            )));
        }
        Ok(self.node(j as usize, n as usize))
    }

    /// Trapezoidal ∫(|u|²+|v|²)dx over level `n`.
    pub fn global_charge(&self, n: usize) -> Result<f64> {
        let (lo, hi) = self
            .valid_range(n)
            .ok_or_else(|| LabError::domain(format!("level {n} outside mesh")))?;
        let row = self.level(n);
        if row[lo].density() != 0.0 || row[hi].density() != 0.0 {
            return Err(LabError::domain(format!(
                "support at level {n} touches the edge of the determined region"
            )));
        }
        let dens: Vec<f64> = row[lo..=hi].iter().map(SpinorSample::density).collect();
        Ok(trapezoid(&dens, self.delta))
    }

    /// Nodes (j, k) on the two sides of the backward cone of apex (J, N), from k = 0 up.
    fn cone_sides(&self, x: f64, t: f64) -> Result<(Vec<usize>, Vec<usize>, usize)> {
        let (jx, n) = self.locate(x, t)?;
        if n < 0 || n as usize >= self.levels {
            return Err(LabError::domain(format!("t = {t} outside mesh")));
        }
        let mut right = Vec::with_capacity(n as usize + 1);
        let mut left = Vec::with_capacity(n as usize + 1);
        for k in 0..=n {
            let jr = jx + n - k;
            let jl = jx - n + k;
            if !self.is_valid(jr, k) || !self.is_valid(jl, k) {
                return Err(LabError::domain(format!("backward cone of ({x}, {t}) leaves the mesh")));
            }
            right.push(jr as usize);
            left.push(jl as usize);
        }
        Ok((left, right, n as usize))
    }

    /// (φ₊, φ₋) = (∫₀ᵗ 2|v(x−t+σ,σ)|²dσ, ∫₀ᵗ 2|u(x+t−σ,σ)|²dσ), trapezoidal on lattice nodes.
    pub fn phi_line_integrals(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        let (left, right, _) = self.cone_sides(x, t)?;
        let plus: Vec<f64> = left.iter().enumerate().map(|(k, &j)| 2.0 * self.node(j, k).v.norm_sqr()).collect();
        let minus: Vec<f64> = right.iter().enumerate().map(|(k, &j)| 2.0 * self.node(j, k).u.norm_sqr()).collect();
        Ok((trapezoid(&plus, self.delta), trapezoid(&minus, self.delta)))
    }

    /// Light-cone charge balance.
    ///
    /// The side fluxes split each integrand as 2|u|² = 2|f(foot)|² + 2(|u|² − |f(foot)|²),
    /// where the foot is the data point transported along u's characteristic. The first
    /// part integrates to the data charge in closed form; the second, which has no
    /// kink at the foot, is integrated by the trapezoidal rule on lattice nodes.
    pub fn cone_charge(&self, x: f64, t: f64) -> Result<ConeDiagnostics> {
        let (left, right, n) = self.cone_sides(x, t)?;
        let d = self.delta;
        let mut du = Vec::with_capacity(n + 1);
        let mut dv = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let jr = right[k];
            let jl = left[k];
            // feet of the characteristics through the side nodes, as level-0 node indices
            let foot_u = self.first_index + jr as i64 - k as i64;
            let foot_v = self.first_index + jl as i64 + k as i64;
            let fu = self.spec.f(foot_u as f64 * d)?.norm_sqr();
            let gv = self.spec.g(foot_v as f64 * d)?.norm_sqr();
            du.push(2.0 * (self.node(jr, k).u.norm_sqr() - fu));
            dv.push(2.0 * (self.node(jl, k).v.norm_sqr() - gv));
        }
        let (a, b) = (x - t, x + t);
        let spec = self.spec;
        let f_only = DataSpec { lambda_plus: ZERO, lambda_minus: ZERO, ..spec };
        let g_only = DataSpec { kappa_plus: ZERO, kappa_minus: ZERO, ..spec };
        let flux_right = data_charge(&f_only, a, b) + trapezoid(&du, d);
        let flux_left = data_charge(&g_only, a, b) + trapezoid(&dv, d);
        let base = data_charge(&spec, a, b);
        Ok(ConeDiagnostics { x, t, flux_left, flux_right, base, residual: (flux_left + flux_right - base).abs() })
    }

    /// Cumulative A-integrals for every level: for each n, the largest trapezoidal
    /// ∫₀^{t_n}|u(y−σ,σ)|dσ plus the largest ∫₀^{t_n}|v(y+σ,σ)|dσ over lines lying entirely
    /// in the determined region.
    pub fn a_functional_profile(&self) -> Vec<(f64, f64)> {
        let n_nodes = self.nodes;
        let d = self.delta;
        // line integrals ending at node j of the current level
        let mut su = vec![0.0; n_nodes];
        let mut sv = vec![0.0; n_nodes];
        let mut ok_u = vec![true; n_nodes];
        let mut ok_v = vec![true; n_nodes];
        for j in 0..n_nodes {
            ok_u[j] = self.is_valid(j as i64, 0);
            ok_v[j] = ok_u[j];
        }
        let mut out = vec![(0.0, 0.0)];
        for n in 1..self.levels {
            let prev = self.level(n - 1);
            let cur = self.level(n);
            let mut nu = vec![0.0; n_nodes];
            let mut nv = vec![0.0; n_nodes];
            let mut nok_u = vec![false; n_nodes];
            let mut nok_v = vec![false; n_nodes];
            for j in 0..n_nodes {
                let here = self.is_valid(j as i64, n as i64);
                // u-lines run (y−σ, σ): predecessor is j+1
                if j + 1 < n_nodes && ok_u[j + 1] && here {
                    nu[j] = su[j + 1] + 0.5 * d * (prev[j + 1].u.norm() + cur[j].u.norm());
                    nok_u[j] = true;
                }
                // v-lines run (y+σ, σ): predecessor is j−1
                if j > 0 && ok_v[j - 1] && here {
                    nv[j] = sv[j - 1] + 0.5 * d * (prev[j - 1].v.norm() + cur[j].v.norm());
                    nok_v[j] = true;
                }
            }
            su = nu;
            sv = nv;
            ok_u = nok_u;
            ok_v = nok_v;
            let mu = (0..n_nodes).filter(|&j| ok_u[j]).map(|j| su[j]).fold(f64::NEG_INFINITY, f64::max);
            let mv = (0..n_nodes).filter(|&j| ok_v[j]).map(|j| sv[j]).fold(f64::NEG_INFINITY, f64::max);
            if !mu.is_finite() || !mv.is_finite() {
                break;
            }
            out.push((self.t(n), mu + mv));
        }
        out
    }

    /// A(t) at a lattice time.
    pub fn a_functional(&self, t: f64) -> Result<f64> {
        let n = as_index(t, self.delta, "t")?;
        let profile = self.a_functional_profile();
        if n < 0 || n as usize >= profile.len() {
            return Err(LabError::domain(format!("no complete characteristic lines reach t = {t}")));
        }
        Ok(profile[n as usize].1)
    }

    /// Remainder terms R₁, R₂, R₃ and the residual of the product identity at a cone point.
    pub fn remainders(&self, x: f64, t: f64) -> Result<RemainderBundle> {
        if !(t > x.abs()) {
            return Err(LabError::domain(format!("remainders need t > |x|, got x = {x}, t = {t}")));
        }
        let (left, right, n) = self.cone_sides(x, t)?;
        let d = self.delta;
        let m = self.spec.mass;

        // right side carries u with φ₋ accumulated along it; left side carries v with φ₊
        let mut phi = 0.0;
        let mut integrand_u = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let u = self.node(right[k], k).u;
            if k > 0 {
                let up = self.node(right[k - 1], k - 1).u;
                phi += d * (up.norm_sqr() + u.norm_sqr());
            }
            integrand_u.push(ComplexAmplitude::from_polar(1.0, -phi) * u);
        }
        let mut phi = 0.0;
        let mut integrand_v = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let v = self.node(left[k], k).v;
            if k > 0 {
                let vp = self.node(left[k - 1], k - 1).v;
                phi += d * (vp.norm_sqr() + v.norm_sqr());
            }
            integrand_v.push(ComplexAmplitude::from_polar(1.0, -phi) * v);
        }
        let trap = |vals: &[ComplexAmplitude]| -> ComplexAmplitude {
            let re: Vec<f64> = vals.iter().map(|z| z.re).collect();
            let im: Vec<f64> = vals.iter().map(|z| z.im).collect();
            ComplexAmplitude::new(trapezoid(&re, d), trapezoid(&im, d))
        };
        let int_u = trap(&integrand_u);
        let int_v = trap(&integrand_v);
        let f = self.spec.f(x - t)?;
        let g = self.spec.g(x + t)?;
        let r1 = f * (-I * m * int_u);
        let r2 = g * (-I * m * int_v);
        let r3 = -(m * m) * int_u * int_v;

        let (coeff, rest) = data_charge_parts(&self.spec, x - t, x + t);
        let apex = self.value_at(x, t)?;
        let rotated_product = self.log_eps.cis(-coeff) * apex.u * apex.v;
        let phase = ComplexAmplitude::from_polar(1.0, rest);
        let main_term = phase * f * g;
        let key_residual = (rotated_product - main_term - phase * (r1 + r2 + r3)).norm();
        Ok(RemainderBundle { r1, r2, r3, main_term, rotated_product, key_residual })
    }

    /// Determined nodes of level `n` as grid rows.
    pub fn level_rows(&self, n: usize) -> Vec<GridRow> {
        match self.valid_range(n) {
            Some((lo, hi)) => (lo..=hi).map(|j| GridRow::new(self.x(j), self.t(n), self.node(j, n))).collect(),
            None => Vec::new(),
        }
    }
}

/// Magic bytes of the binary mesh dump.
pub const MESH_MAGIC: [u8; 8] = *b"THRMESH1";

impl CharacteristicMesh {
    /// Little-endian dump: magic, Δ, x_min, x_max, node count, level count, exterior flag,
    /// the data constants (ε, mass, cutoff, κ±, λ±), then level-major payload of
    /// re(u), im(u), re(v), im(v).
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&MESH_MAGIC)?;
        for v in [self.delta, self.x_min(), self.x_max()] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(self.nodes as u64).to_le_bytes())?;
        w.write_all(&(self.levels as u64).to_le_bytes())?;
        w.write_all(&(self.exterior_zero as u64).to_le_bytes())?;
        let s = &self.spec;
        let header = [
            self.log_eps.reduced,
            s.mass,
            if s.cutoff { 1.0 } else { 0.0 },
            s.kappa_plus.re,
            s.kappa_plus.im,
            s.kappa_minus.re,
            s.kappa_minus.im,
            s.lambda_plus.re,
            s.lambda_plus.im,
            s.lambda_minus.re,
            s.lambda_minus.im,
        ];
        for v in header {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.log_eps.half_turns.to_le_bytes())?;
        for s in &self.field {
            for v in [s.u.re, s.u.im, s.v.re, s.v.im] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != MESH_MAGIC {
            return Err(LabError::Config("not a mesh dump (bad magic)".into()));
        }
        let mut buf = [0u8; 8];
        let mut f64_next = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut buf)?;
            Ok(f64::from_le_bytes(buf))
        };
        let delta = f64_next(&mut r)?;
        let x_min = f64_next(&mut r)?;
        let _x_max = f64_next(&mut r)?;
        let u64_next = |r: &mut R| -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let nodes = u64_next(&mut r)? as usize;
        let levels = u64_next(&mut r)? as usize;
        let exterior_zero = u64_next(&mut r)? != 0;
        let mut h = [0.0; 11];
        for v in h.iter_mut() {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *v = f64::from_le_bytes(b);
        }
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        let half_turns = i64::from_le_bytes(b);
        let log_eps = LogScale::from_parts(h[0], half_turns);
        let spec = DataSpec {
            kappa_plus: ComplexAmplitude::new(h[3], h[4]),
            kappa_minus: ComplexAmplitude::new(h[5], h[6]),
            lambda_plus: ComplexAmplitude::new(h[7], h[8]),
            lambda_minus: ComplexAmplitude::new(h[9], h[10]),
            epsilon: log_eps.value(),
            cutoff: h[2] != 0.0,
            mass: h[1],
        };
        let count = nodes
            .checked_mul(levels)
            .ok_or_else(|| LabError::Config("mesh dimensions overflow".into()))?;
        let mut field = Vec::with_capacity(count);
        let mut chunk = [0u8; 32];
        for _ in 0..count {
            r.read_exact(&mut chunk)?;
            let g = |i: usize| f64::from_le_bytes(chunk[8 * i..8 * i + 8].try_into().expect("8 bytes"));
            field.push(SpinorSample {
                u: ComplexAmplitude::new(g(0), g(1)),
                v: ComplexAmplitude::new(g(2), g(3)),
            });
        }
        Ok(CharacteristicMesh {
            delta,
            first_index: (x_min / delta).round() as i64,
            nodes,
            levels,
            exterior_zero,
            spec,
            log_eps,
            field,
            max_iterations_used: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_massless::eval_exact;
    use proptest::prelude::*;

    fn cutoff_mesh(spec: &DataSpec, delta: f64, t_max: f64) -> CharacteristicMesh {
        solve(spec, &MeshParams::covering_cutoff(delta, t_max)).unwrap()
    }

    fn max_error(eps: f64, delta: f64) -> f64 {
        let spec = DataSpec::standard(eps);
        let mesh = cutoff_mesh(&spec, delta, 0.24);
        let mut e: f64 = 0.0;
        for n in 1..mesh.level_count() {
            for j in 0..mesh.node_count() {
                let (x, t) = (mesh.x(j), mesh.t(n));
                if x.abs() <= 0.25 {
                    e = e.max(mesh.node(j, n).distance(&eval_exact(&spec, x, t).unwrap()));
                }
            }
        }
        e
    }

    #[test]
    fn massless_scheme_is_second_order() {
        let ratio = max_error(0.5, 4e-3) / max_error(0.5, 2e-3);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn massless_scheme_transports_modulus_exactly() {
        let spec = DataSpec::standard(0.1);
        let mesh = cutoff_mesh(&spec, 0.01, 0.3);
        for n in 0..mesh.level_count() {
            for j in 0..mesh.node_count() {
                let foot = ((mesh.x(j) - mesh.t(n)) / 0.01).round() * 0.01;
                let expected = spec.f(foot).unwrap().norm();
                let got = mesh.node(j, n).u.norm();
                assert!((got - expected).abs() < 1e-13 * (1.0 + expected), "({j},{n}) foot {foot}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn charge_is_conserved_to_rounding() {
        let spec = DataSpec::standard(0.05).with_mass(1.0);
        let mesh = cutoff_mesh(&spec, 5e-3, 0.5);
        let q0 = mesh.global_charge(0).unwrap();
        for n in [10, 50, mesh.level_count() - 1] {
            assert!((mesh.global_charge(n).unwrap() - q0).abs() < 1e-12 * q0);
        }
    }

    #[test]
    fn cone_balance_is_exact_without_mass() {
        let mesh = cutoff_mesh(&DataSpec::standard(0.1), 2e-3, 0.4);
        for &(x, t) in &[(0.0, 0.4), (0.1, 0.2), (-0.2, 0.3), (0.3, 0.1)] {
            let c = mesh.cone_charge(x, t).unwrap();
            assert!(c.residual < 1e-12 * c.base, "{c:?}");
        }
    }

    #[test]
    fn cone_residual_is_second_order_with_mass() {
        let res = |delta: f64| {
            let mesh = cutoff_mesh(&DataSpec::standard(0.1).with_mass(1.0), delta, 0.4);
            mesh.cone_charge(0.1, 0.3).unwrap().residual
        };
        let ratio = res(4e-3) / res(2e-3);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn phase_integrals_match_closed_form_without_mass() {
        let spec = DataSpec::standard(0.2);
        let mesh = cutoff_mesh(&spec, 2e-3, 0.4);
        let (plus, minus) = mesh.phi_line_integrals(0.1, 0.3).unwrap();
        // massless: φ₊ = ∫|g|², φ₋ = ∫|f|² over [x−t, x+t]
        let exact = crate::exact_massless::phi_epsilon(0.1, 0.3, 0.2).unwrap().value;
        assert!((plus - exact).abs() < 1e-4 && (minus - exact).abs() < 1e-4, "{plus} {minus} {exact}");
    }

    #[test]
    fn a_functional_respects_the_a_priori_bound() {
        for m in [0.0, 1.0] {
            let mesh = cutoff_mesh(&DataSpec::standard(0.1).with_mass(m), 5e-3, 0.5);
            let profile = mesh.a_functional_profile();
            assert_eq!(profile.len(), mesh.level_count());
            for (t, a) in profile {
                assert!(a <= 8.0 * t.sqrt() * (2.0 * m * t).exp() + 1e-12, "m {m}, t {t}: {a}");
            }
        }
    }

    #[test]
    fn product_identity_holds_on_the_lattice() {
        let mesh = cutoff_mesh(&DataSpec::standard(0.1).with_mass(1.0), 2e-3, 0.4);
        for &(x, t) in &[(0.0, 0.2), (0.05, 0.35), (-0.1, 0.3)] {
            let r = mesh.remainders(x, t).unwrap();
            assert!(r.key_residual < 1e-2 * r.main_term.norm(), "{r:?}");
            assert!(r.remainder_sum_abs() > 0.0);
        }
        let free = cutoff_mesh(&DataSpec::standard(0.1), 2e-3, 0.4);
        let r = free.remainders(0.0, 0.2).unwrap();
        assert_eq!(r.remainder_sum_abs(), 0.0);
        assert!(mesh.remainders(0.3, 0.2).is_err());
    }

    #[test]
    fn windowed_meshes_track_their_domain_of_dependence() {
        let spec = DataSpec::standard(0.1).with_cutoff(false);
        let mesh = solve(&spec, &MeshParams::new(-0.2, 0.2, 0.01, 0.1)).unwrap();
        assert_eq!(mesh.valid_range(0), Some((0, 40)));
        assert_eq!(mesh.valid_range(10), Some((10, 30)));
        assert!(mesh.value_at(0.0, 0.1).is_ok());
        assert!(mesh.value_at(0.15, 0.1).is_err());
        assert!(mesh.cone_charge(0.05, 0.1).is_ok());
        assert!(mesh.cone_charge(0.15, 0.1).is_err());
        assert!(mesh.global_charge(0).is_err());
        let full = cutoff_mesh(&DataSpec::standard(0.1), 0.01, 0.2);
        assert_eq!(full.valid_range(20), Some((0, full.node_count() - 1)));
    }

    #[test]
    fn rejects_unresolved_or_malformed_meshes() {
        let spec = DataSpec::standard(0.01);
        assert!(solve(&spec, &MeshParams::covering_cutoff(0.01, 0.1)).is_err());
        assert!(solve(&DataSpec::standard(0.0), &MeshParams::covering_cutoff(1e-3, 0.1)).is_err());
        assert!(solve(&spec, &MeshParams::new(-1.0, 1.0, 3e-4, 0.1)).is_err());
        assert!(solve(&spec, &MeshParams::new(1.0, -1.0, 1e-3, 0.1)).is_err());
        let heavy = DataSpec::standard(0.1).with_mass(2000.0);
        assert!(solve(&heavy, &MeshParams::covering_cutoff(1e-2, 0.1)).is_err());
    }

    #[test]
    fn iteration_cap_is_reported() {
        let spec = DataSpec::standard(0.1).with_mass(1.0);
        let mut params = MeshParams::covering_cutoff(0.01, 0.05);
        params.max_iterations = 1;
        assert!(matches!(solve(&spec, &params), Err(LabError::StepSize { .. })));
    }

    #[test]
    fn binary_dump_round_trips() {
        let spec = DataSpec::standard(0.1).with_mass(0.5);
        let mesh = cutoff_mesh(&spec, 0.01, 0.1);
        let mut buf = Vec::new();
        mesh.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"THRMESH1");
        let back = CharacteristicMesh::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.node_count(), mesh.node_count());
        assert_eq!(back.level_count(), mesh.level_count());
        assert_eq!(back.level(10), mesh.level(10));
        assert_eq!(back.spec(), mesh.spec());
        assert_eq!(back.x_min(), mesh.x_min());
        buf[0] = b'X';
        assert!(CharacteristicMesh::read_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn level_rows_use_the_grid_format() {
        let mesh = cutoff_mesh(&DataSpec::standard(0.1), 0.01, 0.1);
        let rows = mesh.level_rows(5);
        assert_eq!(rows.len(), mesh.node_count());
        assert_eq!(rows[0].t, mesh.t(5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn conservation_for_arbitrary_constants(
            k in proptest::array::uniform4(-1.5f64..1.5),
            l in proptest::array::uniform4(-1.5f64..1.5),
            m in 0.0f64..2.0,
        ) {
            let c = |a: f64, b: f64| ComplexAmplitude::new(a, b);
            let spec = DataSpec::with_constants(c(k[0], k[1]), c(k[2], k[3]), c(l[0], l[1]), c(l[2], l[3]), 0.2)
                .with_cutoff(true)
                .with_mass(m);
            let mesh = solve(&spec, &MeshParams::covering_cutoff(0.02, 0.3)).unwrap();
            let q0 = mesh.global_charge(0).unwrap();
            let q1 = mesh.global_charge(mesh.level_count() - 1).unwrap();
            prop_assert!((q1 - q0).abs() <= 1e-12 * q0.max(1e-300));
        }
    }
}
