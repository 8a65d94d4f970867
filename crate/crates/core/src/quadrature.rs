//! Quadrature building blocks: Gauss–Legendre panels, adaptive Gauss–Kronrod, and
//! geometrically graded meshes for integrable endpoint singularities.

use crate::error::{LabError, Result};

/// Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on P_n from the Chebyshev initial guess.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be >= 1");
        let n = order;
        if n == 1 {
            return GaussLegendre { nodes: vec![0.0], weights: vec![2.0] };
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                // p1 = P_n(z), p0 = P_{n-1}(z)
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&z, &w)| (mid + half * z, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature with bisection of the worst interval.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(Estimate { value: total, error: err });
        }
        if parts.len() >= max_intervals {
            return Err(LabError::Resolution { change: err / total.abs().max(f64::MIN_POSITIVE), tolerance: rel_tol });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(LabError::Resolution { change: err, tolerance: rel_tol });
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Which end of an interval carries the singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularEnd {
    Left,
    Right,
}

/// Dyadic panels of `[a, b]` shrinking toward the singular end: the k-th panel has width
/// (b − a)/2^{k+1}, k = 0..depth, and the innermost panel has width (b − a)/2^{depth}.
pub fn graded_panels(a: f64, b: f64, end: SingularEnd, depth: usize) -> Vec<(f64, f64)> {
    let w = b - a;
    let mut panels = Vec::with_capacity(depth + 1);
    for k in 0..depth {
        let far = w / 2f64.powi(k as i32);
        let near = w / 2f64.powi(k as i32 + 1);
        panels.push(match end {
            SingularEnd::Left => (a + near, a + far),
            SingularEnd::Right => (b - far, b - near),
        });
    }
    let inner = w / 2f64.powi(depth as i32);
    panels.push(match end {
        SingularEnd::Left => (a, a + inner),
        SingularEnd::Right => (b - inner, b),
    });
    panels
}

/// Fixed graded rule: Gauss–Legendre on each panel of [`graded_panels`], innermost included.
pub fn graded_integral<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    end: SingularEnd,
    depth: usize,
    rule: &GaussLegendre,
) -> f64 {
    let mut f = f;
    graded_panels(a, b, end, depth)
        .into_iter()
        .map(|(lo, hi)| rule.integrate(&mut f, lo, hi))
        .sum()
}

/// Outcome of integrating toward a possibly non-integrable endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradedOutcome {
    Converged { value: f64, levels: usize },
    /// Dyadic contributions stopped decaying before the resolution floor.
    Divergent { partial: f64, levels: usize },
}

/// Maximum number of dyadic levels explored toward a singular point.
pub const MAX_GRADING_LEVELS: usize = 1000;

/// Integrate a nonnegative integrand on [a, b] with refinement toward `end`.
///
/// Dyadic panel contributions `c_k` are accumulated until they fall below `rel_tol` of the
/// running sum while decaying geometrically; the remaining tail is then added as the
/// geometric series with the last observed ratio. If the panels reach the floating-point
/// resolution of the singular point and the contributions are still not decaying, the
/// integral is reported as divergent.
pub fn graded_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    end: SingularEnd,
    rel_tol: f64,
    rule: &GaussLegendre,
) -> GradedOutcome {
    let w = b - a;
    let anchor = match end {
        SingularEnd::Left => a,
        SingularEnd::Right => b,
    };
    let mut sum = 0.0;
    let mut prev: Option<f64> = None;
    let mut ratio = 1.0;
    let mut quiet_levels = 0;
    for k in 0..MAX_GRADING_LEVELS {
        let far = w * 0.5f64.powi(k as i32);
        let near = far * 0.5;
        let (lo, hi) = match end {
            SingularEnd::Left => (a + near, a + far),
            SingularEnd::Right => (b - far, b - near),
        };
        // the panel is about to collapse onto the singular point in floating point
        let collapsed = lo >= hi || near == 0.0 || near <= 64.0 * f64::EPSILON * anchor.abs();
        if collapsed {
            return finish(sum, prev, ratio, k);
        }
        let c = rule.integrate(&mut f, lo, hi);
        sum += c;
        if let Some(p) = prev {
            if p > 0.0 {
                ratio = c / p;
            } else if c == 0.0 {
                ratio = 0.0;
            }
        }
        prev = Some(c);
        if c <= rel_tol * sum.abs() && ratio < 0.9 {
            quiet_levels += 1;
            if quiet_levels >= 3 {
                let tail = if ratio > 0.0 { c * ratio / (1.0 - ratio) } else { 0.0 };
                return GradedOutcome::Converged { value: sum + tail, levels: k + 1 };
            }
        } else if c == 0.0 && sum == 0.0 {
            quiet_levels += 1;
            if quiet_levels >= 3 {
                return GradedOutcome::Converged { value: 0.0, levels: k + 1 };
            }
        } else {
            quiet_levels = 0;
        }
    }
    finish(sum, prev, ratio, MAX_GRADING_LEVELS)
}

fn finish(sum: f64, last: Option<f64>, ratio: f64, levels: usize) -> GradedOutcome {
    let last = last.unwrap_or(0.0);
    if last == 0.0 || ratio < 0.999 {
        let tail = if ratio > 0.0 && ratio < 1.0 { last * ratio / (1.0 - ratio) } else { 0.0 };
        GradedOutcome::Converged { value: sum + tail, levels }
    } else {
        GradedOutcome::Divergent { partial: sum, levels }
    }
}
