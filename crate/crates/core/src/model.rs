//! Physical parameters, frequency zones and analytic initial data.
//!
//! Fourier convention used throughout the crate:
//! `û(ξ) = ∫ e^{-i x·ξ} u(x) dx`, inverse with the factor `(2π)^{-3}`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{lit, pow_nonneg, to_f64, Real};

/// Polarisation branch of a Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Shear waves, squared speed `a²`.
    Transverse,
    /// Pressure waves, squared speed `b²`.
    Longitudinal,
}

/// Lamé speeds, damping order and zone cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub a2: T,
    pub b2: T,
    pub theta: T,
    pub epsilon: T,
}

impl<T: Real> ModelParams<T> {
    /// Validates `b2 > a2 > 0`, `theta ∈ [0, 1]` and picks the default cutoff.
    pub fn new(a2: T, b2: T, theta: T) -> Result<Self> {
        if !(a2.is_finite() && b2.is_finite() && theta.is_finite()) {
            return invalid("a2, b2 and theta must be finite");
        }
        if a2 <= T::zero() {
            return invalid("a2 must be positive");
        }
        if b2 <= a2 {
            return invalid("b2 must exceed a2");
        }
        if theta < T::zero() || theta > T::one() {
            return invalid("theta must lie in [0, 1]");
        }
        Ok(Self {
            a2,
            b2,
            theta,
            epsilon: Self::default_epsilon(a2, b2, theta),
        })
    }

    /// Default cutoff.
    ///
    /// With `κ = |2 - 4θ|` this is `min{(8b²)^{-1/κ}, (2a²)^{1/κ}, 1/2}`, and
    /// `0.1` at `θ = 1/2`. The first term keeps the discriminant on the
    /// parabolic side of the zone split at least half of `|ξ|^{4θ}`; the second
    /// keeps `4a²|ξ|²` at least twice `|ξ|^{4θ}` on the oscillatory side.
    pub fn default_epsilon(a2: T, b2: T, theta: T) -> T {
        let half = lit::<T>(0.5);
        if theta == half {
            return lit(0.1);
        }
        let kappa = (lit::<T>(2.0) - lit::<T>(4.0) * theta).abs();
        let parabolic = (lit::<T>(8.0) * b2).powf(-kappa.recip());
        let oscillatory = (lit::<T>(2.0) * a2).powf(kappa.recip());
        parabolic.min(oscillatory).min(half)
    }

    /// Overrides the cutoff; must lie in `(0, 1)`.
    pub fn with_epsilon(mut self, epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero() && epsilon < T::one()) {
            return invalid("epsilon must lie in (0, 1)");
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn a(&self) -> T {
        self.a2.sqrt()
    }

    pub fn b(&self) -> T {
        self.b2.sqrt()
    }

    pub fn speed2(&self, branch: Branch) -> T {
        match branch {
            Branch::Transverse => self.a2,
            Branch::Longitudinal => self.b2,
        }
    }

    pub fn is_half(&self) -> bool {
        self.theta == lit(0.5)
    }

    /// Damping symbol `|ξ|^{2θ}` (equal to 1 at `ξ = 0` when `θ = 0`).
    pub fn damping(&self, xi_norm: T) -> T {
        pow_nonneg(xi_norm, lit::<T>(2.0) * self.theta)
    }

    /// `max{1-θ, θ}`.
    pub fn theta_max(&self) -> T {
        (T::one() - self.theta).max(self.theta)
    }

    pub fn zones(&self) -> ZonePartition<T> {
        ZonePartition { epsilon: self.epsilon }
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            a2: lit(to_f64(self.a2)),
            b2: lit(to_f64(self.b2)),
            theta: lit(to_f64(self.theta)),
            epsilon: lit(to_f64(self.epsilon)),
        }
    }
}

/// Shorthand for [`ModelParams::new`].
pub fn make_params<T: Real>(a2: T, b2: T, theta: T) -> Result<ModelParams<T>> {
    ModelParams::new(a2, b2, theta)
}

/// Frequency zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Zone {
    Int,
    Mid,
    Ext,
}

/// Smooth radial partition of unity `χ_int + χ_mid + χ_ext = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonePartition<T> {
    pub epsilon: T,
}

/// `exp(1 - 1/(1 - t²))` on `|t| < 1`, zero outside.
pub fn bump<T: Real>(t: T) -> T {
    let s = T::one() - t * t;
    if s <= T::zero() {
        T::zero()
    } else {
        (T::one() - s.recip()).exp()
    }
}

/// C^∞ step: 0 for `x ≤ 0`, 1 for `x ≥ 1`, `bump(1-x) / (bump(1-x) + bump(x))` between.
pub fn smooth_step<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else if x >= T::one() {
        T::one()
    } else {
        let up = bump(T::one() - x);
        let down = bump(x);
        up / (up + down)
    }
}

impl<T: Real> ZonePartition<T> {
    /// 1 on `[0, ε/2]`, 0 on `[ε, ∞)`.
    pub fn chi_int(&self, r: T) -> T {
        let h = self.epsilon * lit(0.5);
        T::one() - smooth_step((r - h) / h)
    }

    /// 0 on `[0, 1/ε]`, 1 on `[2/ε, ∞)`.
    pub fn chi_ext(&self, r: T) -> T {
        let inv = self.epsilon.recip();
        smooth_step((r - inv) / inv)
    }

    pub fn chi_mid(&self, r: T) -> T {
        T::one() - self.chi_int(r) - self.chi_ext(r)
    }

    pub fn zone_of(&self, r: T) -> Zone {
        if r < self.epsilon {
            Zone::Int
        } else if r > self.epsilon.recip() {
            Zone::Ext
        } else {
            Zone::Mid
        }
    }
}

/// Shape of an analytic initial-data profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// `A exp(-|x|²/(2w²))`.
    Gaussian,
    /// Gaussian times `cos(k₀ d·x)`.
    ModulatedGaussian,
    /// Fourier-side shell `exp(-w²(|ξ|-k₀)²/2)`.
    Ring,
}

/// Vector-valued initial datum `u(x) = φ(x) d` with closed-form transform.
///
/// `riesz_order = σ` multiplies the transform by `|ξ|^{-σ}`, i.e. applies
/// `|D|^{-σ}`. With `σ = 1` a Gaussian gives data whose gradient has a flat
/// transform near the origin, the recipe for `Ḣ¹_m`-type concentrated data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct DataProfile<T> {
    pub kind: ProfileKind,
    pub amplitude: T,
    pub width: T,
    pub center_frequency: T,
    pub direction: [T; 3],
    #[serde(default = "zero_default")]
    pub riesz_order: T,
}

fn zero_default<T: Real>() -> T {
    T::zero()
}

impl<T: Real> DataProfile<T> {
    pub fn gaussian(amplitude: T, width: T, direction: [T; 3]) -> Self {
        Self {
            kind: ProfileKind::Gaussian,
            amplitude,
            width,
            center_frequency: T::zero(),
            direction: normalize(direction),
            riesz_order: T::zero(),
        }
    }

    /// Gaussian scaled to unit L² norm.
    pub fn unit_gaussian(width: T, direction: [T; 3]) -> Self {
        let l2 = (T::PI().powf(lit(1.5)) * width.powi(3)).sqrt();
        Self::gaussian(l2.recip(), width, direction)
    }

    pub fn modulated(amplitude: T, width: T, k0: T, direction: [T; 3]) -> Self {
        Self {
            kind: ProfileKind::ModulatedGaussian,
            center_frequency: k0,
            ..Self::gaussian(amplitude, width, direction)
        }
    }

    pub fn ring(amplitude: T, width: T, k0: T, direction: [T; 3]) -> Self {
        Self {
            kind: ProfileKind::Ring,
            center_frequency: k0,
            ..Self::gaussian(amplitude, width, direction)
        }
    }

    /// The zero datum.
    pub fn zero() -> Self {
        Self::gaussian(T::zero(), T::one(), [T::one(), T::zero(), T::zero()])
    }

    pub fn with_riesz(mut self, sigma: T) -> Self {
        self.riesz_order = sigma;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude.is_zero()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > T::zero()) {
            return invalid("profile width must be positive");
        }
        if self.center_frequency < T::zero() {
            return invalid("profile center frequency must be non-negative");
        }
        let n2: T = self.direction.iter().map(|&d| d * d).fold(T::zero(), |a, b| a + b);
        if (n2 - T::one()).abs() > lit(1e-10) {
            return invalid("profile direction must be a unit vector");
        }
        if self.riesz_order < T::zero() || self.riesz_order >= lit(1.5) {
            return invalid("riesz order must lie in [0, 3/2)");
        }
        Ok(())
    }

    /// Scalar transform `φ̂(ξ)`; real for every kind.
    pub fn fourier_scalar(&self, xi: [T; 3]) -> T {
        if self.is_zero() {
            return T::zero();
        }
        let w2 = self.width * self.width;
        let half = lit::<T>(0.5);
        let norm = self.amplitude * (lit::<T>(2.0) * T::PI()).powf(lit(1.5)) * self.width.powi(3);
        let r2 = dot(xi, xi);
        let r = r2.sqrt();
        let shape = match self.kind {
            ProfileKind::Gaussian => (-half * w2 * r2).exp(),
            ProfileKind::ModulatedGaussian => {
                let k = self.center_frequency;
                let p = dot(xi, self.direction);
                let minus = r2 - lit::<T>(2.0) * k * p + k * k;
                let plus = r2 + lit::<T>(2.0) * k * p + k * k;
                half * ((-half * w2 * minus).exp() + (-half * w2 * plus).exp())
            }
            ProfileKind::Ring => {
                let d = r - self.center_frequency;
                (-half * w2 * d * d).exp()
            }
        };
        let weight = if self.riesz_order.is_zero() {
            T::one()
        } else if r.is_zero() {
            T::infinity()
        } else {
            r.powf(-self.riesz_order)
        };
        norm * shape * weight
    }

    /// Vector transform `û(ξ) = φ̂(ξ) d`.
    pub fn fourier(&self, xi: [T; 3]) -> [Complex<T>; 3] {
        let s = self.fourier_scalar(xi);
        self.direction.map(|d| Complex::new(s * d, T::zero()))
    }

    /// Closed-form `‖|D|^s u‖_{L²}` for the Gaussian kind, `None` otherwise.
    pub fn analytic_hs_norm(&self, s: T) -> Option<T> {
        if self.kind != ProfileKind::Gaussian {
            return None;
        }
        let e = s - self.riesz_order;
        if e <= lit(-1.5) {
            return None;
        }
        let g = statrs::function::gamma::gamma(to_f64(e) + 1.5);
        let val = lit::<T>(2.0)
            * T::PI()
            * self.amplitude
            * self.amplitude
            * lit(g)
            * self.width.powf(lit::<T>(3.0) - lit::<T>(2.0) * e);
        Some(val.sqrt())
    }

    pub fn analytic_l2_norm(&self) -> Option<T> {
        self.analytic_hs_norm(T::zero())
    }

    /// Closed-form `‖u‖_{L^m}` for the plain Gaussian, `None` otherwise.
    pub fn analytic_lm_norm(&self, m: T) -> Option<T> {
        if self.kind != ProfileKind::Gaussian || !self.riesz_order.is_zero() {
            return None;
        }
        let w2 = self.width * self.width;
        let base = lit::<T>(2.0) * T::PI() * w2 / m;
        Some(self.amplitude.abs() * base.powf(lit::<T>(1.5) / m))
    }

    /// Fraction of `∫|ξ|^{2s}|û|²` lying beyond radius `r_max`.
    ///
    /// Exact for Gaussians (regularised upper incomplete gamma); for the
    /// shifted kinds the same expression is evaluated at `r_max - k₀`, which
    /// is an estimate rather than a bound.
    pub fn tail_fraction(&self, r_max: T, s: T) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let w = to_f64(self.width);
        let shift = match self.kind {
            ProfileKind::Gaussian => 0.0,
            _ => to_f64(self.center_frequency),
        };
        let reach = (to_f64(r_max) - shift).max(0.0);
        let a = to_f64(s - self.riesz_order) + 1.5;
        if a <= 0.0 {
            return 1.0;
        }
        statrs::function::gamma::gamma_ur(a, w * w * reach * reach)
    }
}

pub(crate) fn dot<T: Real>(x: [T; 3], y: [T; 3]) -> T {
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

pub(crate) fn normalize<T: Real>(v: [T; 3]) -> [T; 3] {
    let n = dot(v, v).sqrt();
    if n.is_zero() {
        v
    } else {
        v.map(|x| x / n)
    }
}
