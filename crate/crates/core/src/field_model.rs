//! Shared spacetime and data vocabulary.
//!
//! The data family is the two-sided power law
//!
//! ```text
//! f(x) = κ_±/(ε+|x|)^{1/2},   g(x) = λ_±/(ε+|x|)^{1/2}   for ±x > 0,
//! ```
//!
//! optionally multiplied by the indicator of (−1, 1). With κ± = λ± = 1 and the cutoff on
//! this is the standard singular datum (ε = 0) and its regularisations (ε > 0).

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::ComplexAmplitude;

/// Data family parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "FlatDataSpec", into = "FlatDataSpec")]
pub struct DataSpec {
    pub kappa_plus: ComplexAmplitude,
    pub kappa_minus: ComplexAmplitude,
    pub lambda_plus: ComplexAmplitude,
    pub lambda_minus: ComplexAmplitude,
    pub epsilon: f64,
    /// Restrict the data to the open interval (−1, 1).
    pub cutoff: bool,
    pub mass: f64,
}

impl DataSpec {
    /// κ± = λ± = 1 with the given regularisation, cutoff on, massless.
    pub fn standard(epsilon: f64) -> Self {
        let one = ComplexAmplitude::new(1.0, 0.0);
        DataSpec {
            kappa_plus: one,
            kappa_minus: one,
            lambda_plus: one,
            lambda_minus: one,
            epsilon,
            cutoff: true,
            mass: 0.0,
        }
    }

    pub fn with_constants(
        kappa_plus: ComplexAmplitude,
        kappa_minus: ComplexAmplitude,
        lambda_plus: ComplexAmplitude,
        lambda_minus: ComplexAmplitude,
        epsilon: f64,
    ) -> Self {
        DataSpec {
            kappa_plus,
            kappa_minus,
            lambda_plus,
            lambda_minus,
            epsilon,
            cutoff: false,
            mass: 0.0,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_cutoff(mut self, cutoff: bool) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = mass;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(LabError::domain(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.mass >= 0.0) || !self.mass.is_finite() {
            return Err(LabError::domain(format!("mass must be >= 0, got {}", self.mass)));
        }
        let consts = [self.kappa_plus, self.kappa_minus, self.lambda_plus, self.lambda_minus];
        if consts.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(LabError::domain("data constants must be finite"));
        }
        Ok(())
    }

    /// Upper bound for |f|² and |g|² over the real line (requires ε > 0).
    pub fn modulus_sq_bound(&self) -> f64 {
        let c = [self.kappa_plus, self.kappa_minus, self.lambda_plus, self.lambda_minus]
            .iter()
            .map(|c| c.norm_sqr())
            .fold(0.0, f64::max);
        c / self.epsilon
    }

    /// Sum |λ₊|² + |λ₋|²: the coefficient of −log ε in the cone phase of u.
    pub fn u_phase_coefficient(&self) -> f64 {
        self.lambda_plus.norm_sqr() + self.lambda_minus.norm_sqr()
    }

    /// Sum |κ₊|² + |κ₋|²: the coefficient of −log ε in the cone phase of v.
    pub fn v_phase_coefficient(&self) -> f64 {
        self.kappa_plus.norm_sqr() + self.kappa_minus.norm_sqr()
    }

    /// Whether the support indicator admits `x`.
    pub fn in_support(&self, x: f64) -> bool {
        !self.cutoff || x.abs() < 1.0
    }

    /// f(x); the point x = 0 uses the `+` constant.
    pub fn f(&self, x: f64) -> Result<ComplexAmplitude> {
        self.component(x, self.kappa_plus, self.kappa_minus)
    }

    /// g(x); the point x = 0 uses the `+` constant.
    pub fn g(&self, x: f64) -> Result<ComplexAmplitude> {
        self.component(x, self.lambda_plus, self.lambda_minus)
    }

    fn component(&self, x: f64, plus: ComplexAmplitude, minus: ComplexAmplitude) -> Result<ComplexAmplitude> {
        if !self.in_support(x) {
            return Ok(ComplexAmplitude::new(0.0, 0.0));
        }
        let denom = self.epsilon + x.abs();
        if denom == 0.0 {
            return Err(LabError::Singular { x, t: 0.0 });
        }
        let c = if x >= 0.0 { plus } else { minus };
        Ok(c / denom.sqrt())
    }
}

/// Flat key-value form used in configuration files.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatDataSpec {
    #[serde(default = "one")]
    kappa_plus_re: f64,
    #[serde(default)]
    kappa_plus_im: f64,
    #[serde(default = "one")]
    kappa_minus_re: f64,
    #[serde(default)]
    kappa_minus_im: f64,
    #[serde(default = "one")]
    lambda_plus_re: f64,
    #[serde(default)]
    lambda_plus_im: f64,
    #[serde(default = "one")]
    lambda_minus_re: f64,
    #[serde(default)]
    lambda_minus_im: f64,
    #[serde(default)]
    epsilon: f64,
    #[serde(default = "yes")]
    cutoff: bool,
    #[serde(default)]
    mass: f64,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl From<FlatDataSpec> for DataSpec {
    fn from(f: FlatDataSpec) -> Self {
        DataSpec {
            kappa_plus: ComplexAmplitude::new(f.kappa_plus_re, f.kappa_plus_im),
            kappa_minus: ComplexAmplitude::new(f.kappa_minus_re, f.kappa_minus_im),
            lambda_plus: ComplexAmplitude::new(f.lambda_plus_re, f.lambda_plus_im),
            lambda_minus: ComplexAmplitude::new(f.lambda_minus_re, f.lambda_minus_im),
            epsilon: f.epsilon,
            cutoff: f.cutoff,
            mass: f.mass,
        }
    }
}

impl From<DataSpec> for FlatDataSpec {
    fn from(d: DataSpec) -> Self {
        FlatDataSpec {
            kappa_plus_re: d.kappa_plus.re,
            kappa_plus_im: d.kappa_plus.im,
            kappa_minus_re: d.kappa_minus.re,
            kappa_minus_im: d.kappa_minus.im,
            lambda_plus_re: d.lambda_plus.re,
            lambda_plus_im: d.lambda_plus.im,
            lambda_minus_re: d.lambda_minus.re,
            lambda_minus_im: d.lambda_minus.im,
            epsilon: d.epsilon,
            cutoff: d.cutoff,
            mass: d.mass,
        }
    }
}

/// The pair (u, v) at one spacetime point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpinorSample {
    pub u: ComplexAmplitude,
    pub v: ComplexAmplitude,
}

impl SpinorSample {
    pub fn new(u: ComplexAmplitude, v: ComplexAmplitude) -> Self {
        SpinorSample { u, v }
    }

    pub fn zero() -> Self {
        SpinorSample::default()
    }

    pub fn scale(self, k: f64) -> Self {
        SpinorSample { u: self.u * k, v: self.v * k }
    }

    pub fn is_finite(&self) -> bool {
        self.u.re.is_finite() && self.u.im.is_finite() && self.v.re.is_finite() && self.v.im.is_finite()
    }

    /// Largest componentwise distance.
    pub fn distance(&self, other: &SpinorSample) -> f64 {
        (self.u - other.u).norm().max((self.v - other.v).norm())
    }

    /// |u|² + |v|².
    pub fn density(&self) -> f64 {
        self.u.norm_sqr() + self.v.norm_sqr()
    }
}

/// (f(x), g(x)) for the data family.
pub fn data_sample(spec: &DataSpec, x: f64) -> Result<SpinorSample> {
    spec.validate()?;
    Ok(SpinorSample { u: spec.f(x)?, v: spec.g(x)? })
}

/// λ^{1/2}·s(λx) for an arbitrary sampler `s`.
pub fn rescale<F>(sampler: F, lambda: f64, x: f64) -> Result<SpinorSample>
where
    F: Fn(f64) -> Result<SpinorSample>,
{
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(LabError::domain(format!("scaling factor must be > 0, got {lambda}")));
    }
    Ok(sampler(lambda * x)?.scale(lambda.sqrt()))
}

/// Rescaled data λ^{1/2}(f, g)(λx).
pub fn rescale_data(spec: &DataSpec, lambda: f64, x: f64) -> Result<SpinorSample> {
    rescale(|y| data_sample(spec, y), lambda, x)
}

/// Spacetime region for t > 0, relative to the light cone of the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// x ≥ t
    Right,
    /// t ≥ |x|
    Cone,
    /// x ≤ −t
    Left,
}

impl Region {
    /// Closed-region membership; points with |x| = t belong to two regions.
    pub fn contains(self, x: f64, t: f64) -> bool {
        match self {
            Region::Right => x >= t,
            Region::Cone => t >= x.abs(),
            Region::Left => x <= -t,
        }
    }
}

/// Region tag for (x, t), t > 0. Points on |x| = t are tagged [`Region::Cone`].
pub fn classify(x: f64, t: f64) -> Result<Region> {
    if !(t > 0.0) || !x.is_finite() || !t.is_finite() {
        return Err(LabError::domain(format!("classification needs t > 0, got x = {x}, t = {t}")));
    }
    Ok(if t >= x.abs() {
        Region::Cone
    } else if x > t {
        Region::Right
    } else {
        Region::Left
    })
}

/// Light-cone coordinates y = x + t, s = t − x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveCoords {
    pub y: f64,
    pub s: f64,
}

impl WaveCoords {
    pub fn new(y: f64, s: f64) -> Self {
        WaveCoords { y, s }
    }

    /// Back to (x, t).
    pub fn to_spacetime(self) -> (f64, f64) {
        ((self.y - self.s) / 2.0, (self.y + self.s) / 2.0)
    }
}

pub fn to_wave(x: f64, t: f64) -> WaveCoords {
    WaveCoords { y: x + t, s: t - x }
}

pub fn from_wave(w: WaveCoords) -> (f64, f64) {
    w.to_spacetime()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uncut(eps: f64) -> DataSpec {
        DataSpec::standard(eps).with_cutoff(false)
    }

    #[test]
    fn data_at_origin_with_unit_regularisation() {
        let s = data_sample(&uncut(1.0), 0.0).unwrap();
        assert_eq!(s.u, ComplexAmplitude::new(1.0, 0.0));
        assert_eq!(s.v, ComplexAmplitude::new(1.0, 0.0));
    }

    #[test]
    fn cutoff_zeroes_outside_interval() {
        let s = data_sample(&DataSpec::standard(0.0), 2.0).unwrap();
        assert_eq!(s, SpinorSample::zero());
        // the interval is open
        let s = data_sample(&DataSpec::standard(0.0), 1.0).unwrap();
        assert_eq!(s, SpinorSample::zero());
    }

    #[test]
    fn regularised_value_on_negative_axis() {
        let s = data_sample(&uncut(0.25), -0.75).unwrap();
        assert!((s.u.re - 1.0).abs() < 1e-15 && s.u.im == 0.0);
        assert!((s.v.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_origin_without_regularisation() {
        assert!(matches!(data_sample(&uncut(0.0), 0.0), Err(LabError::Singular { .. })));
    }

    #[test]
    fn negative_parameters_rejected() {
        assert!(data_sample(&uncut(-1.0), 0.5).is_err());
        assert!(data_sample(&uncut(0.1).with_mass(-1.0), 0.5).is_err());
    }

    #[test]
    fn sign_dependent_constants() {
        let spec = DataSpec::with_constants(
            ComplexAmplitude::new(2.0, 0.0),
            ComplexAmplitude::new(0.0, 3.0),
            ComplexAmplitude::new(1.0, 1.0),
            ComplexAmplitude::new(-1.0, 0.0),
            0.0,
        );
        let right = data_sample(&spec, 4.0).unwrap();
        assert_eq!(right.u, ComplexAmplitude::new(1.0, 0.0));
        assert_eq!(right.v, ComplexAmplitude::new(0.5, 0.5));
        let left = data_sample(&spec, -4.0).unwrap();
        assert_eq!(left.u, ComplexAmplitude::new(0.0, 1.5));
        assert_eq!(left.v, ComplexAmplitude::new(-0.5, 0.0));
    }

    #[test]
    fn rescale_examples() {
        let scale_free = uncut(0.0);
        let a = rescale_data(&scale_free, 4.0, 1.0).unwrap();
        let b = data_sample(&scale_free, 1.0).unwrap();
        assert_eq!(a, b);

        let s = rescale_data(&uncut(1.0), 4.0, 0.0).unwrap();
        assert_eq!(s.u.re, 2.0);

        assert!(rescale_data(&scale_free, 0.0, 1.0).is_err());
        assert!(rescale_data(&scale_free, -2.0, 1.0).is_err());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(0.0, 1.0).unwrap(), Region::Cone);
        assert_eq!(classify(2.0, 1.0).unwrap(), Region::Right);
        assert_eq!(classify(-2.0, 1.0).unwrap(), Region::Left);
        // boundary belongs to both, tag is Cone
        assert_eq!(classify(-1.0, 1.0).unwrap(), Region::Cone);
        assert!(Region::Left.contains(-1.0, 1.0));
        assert!(classify(0.0, 0.0).is_err());

        let w = to_wave(2.0, 1.0);
        assert_eq!((w.y, w.s), (3.0, -1.0));
    }

    #[test]
    fn flat_config_round_trip() {
        let spec = uncut(0.125).with_mass(0.5);
        let text = toml::to_string(&spec).unwrap();
        assert!(text.contains("kappa_plus_re"));
        assert!(text.contains("cutoff = false"));
        let back: DataSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let partial: DataSpec = toml::from_str("epsilon = 0.5\nmass = 1.0").unwrap();
        assert_eq!(partial, DataSpec::standard(0.5).with_mass(1.0));
        assert!(toml::from_str::<DataSpec>("epsilonn = 0.5").is_err());
    }

    proptest! {
        #[test]
        fn scale_invariance_of_singular_data(lambda in 1e-3f64..1e3, x in -50.0f64..50.0) {
            prop_assume!(x.abs() > 1e-9);
            let spec = uncut(0.0);
            let scaled = rescale_data(&spec, lambda, x).unwrap();
            let plain = data_sample(&spec, x).unwrap();
            prop_assert!((scaled.u - plain.u).norm() <= 4.0 * f64::EPSILON * plain.u.norm());
            prop_assert!((scaled.v - plain.v).norm() <= 4.0 * f64::EPSILON * plain.v.norm());
        }

        #[test]
        fn unit_scaling_is_identity(x in -5.0f64..5.0, eps in 0.0f64..2.0) {
            prop_assume!(eps > 0.0 || x != 0.0);
            let spec = DataSpec::standard(eps);
            prop_assert_eq!(rescale_data(&spec, 1.0, x).unwrap(), data_sample(&spec, x).unwrap());
        }

        #[test]
        fn wave_coordinates_invert(x in -10.0f64..10.0, t in -10.0f64..10.0) {
            let (x2, t2) = from_wave(to_wave(x, t));
            prop_assert!((x2 - x).abs() <= 1e-14 * (1.0 + x.abs() + t.abs()));
            prop_assert!((t2 - t).abs() <= 1e-14 * (1.0 + x.abs() + t.abs()));
        }

        #[test]
        fn classification_is_exhaustive(x in -10.0f64..10.0, t in 1e-6f64..10.0) {
            let r = classify(x, t).unwrap();
            prop_assert!(r.contains(x, t));
        }
    }
}
