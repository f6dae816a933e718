//! Decay-rate predictions for the linear problem and empirical slope fits.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{DataProfile, ModelParams};
use crate::propagator::{NormIntegrator, NormKind, QuadratureGrid};
use crate::scalar::{lit, to_f64, Real};
use crate::symbol::linear_fit;

/// Which family of estimates a prediction comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateFamily {
    /// Data in `|D|^{-1}H^s × H^s`: energy decays like `(1+t)^{-s/(2θ*)}`.
    HigherEnergyD22,
    /// Homogeneous data `Ḣ^{s+1} × Ḣ^s`: energy bounded.
    Homogeneous,
    /// Additional `Ḣ¹_m × L^m` regularity (sharp rates).
    AdditionalDecayD2m,
    /// Energy-method estimates with `H^{s+1} × H^s` data.
    D21,
    /// Energy-method estimates with `L^m` regularity; almost sharp for `θ < 1/2`.
    Dm1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// `‖u(t)‖_{L²}`.
    SolutionL2,
    /// `‖|D|^{s+1}u(t)‖ + ‖|D|^s u_t(t)‖`.
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateKind {
    pub family: EstimateFamily,
    pub s: f64,
    pub m: f64,
    pub quantity: Quantity,
}

impl EstimateKind {
    pub fn new(family: EstimateFamily, s: f64, m: f64, quantity: Quantity) -> Self {
        Self { family, s, m, quantity }
    }

    /// Norms whose sum gives the quantity.
    pub fn norm_kinds(&self) -> Vec<NormKind> {
        match self.quantity {
            Quantity::SolutionL2 => vec![NormKind::L2],
            Quantity::Energy => vec![NormKind::Hs(self.s + 1.0), NormKind::DtHs(self.s)],
        }
    }
}

/// Power of `(1+t)` in an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayPrediction {
    pub exponent: f64,
    pub sharp: bool,
    pub epsilon_slack: f64,
}

pub const DEFAULT_SLACK: f64 = 0.02;

pub fn predicted_exponent<T: Real>(kind: &EstimateKind, params: &ModelParams<T>) -> Result<DecayPrediction> {
    predicted_exponent_with_slack(kind, params, DEFAULT_SLACK)
}

/// Exponent of the stated bound. For the strict-inequality `ρ` rates the
/// supremum minus `slack` is returned with `sharp = false`.
pub fn predicted_exponent_with_slack<T: Real>(
    kind: &EstimateKind,
    params: &ModelParams<T>,
    slack: f64,
) -> Result<DecayPrediction> {
    let (s, m) = (kind.s, kind.m);
    if !(s >= 0.0 && s.is_finite()) {
        return invalid("s must be nonnegative");
    }
    if !(1.0..=2.0).contains(&m) {
        return invalid("m must lie in [1, 2]");
    }
    if !(slack > 0.0) {
        return invalid("slack must be positive");
    }
    let th = to_f64(params.theta);
    let tmax = th.max(1.0 - th);
    let sharp = |exponent: f64| DecayPrediction {
        exponent,
        sharp: true,
        epsilon_slack: 0.0,
    };
    let loose = |exponent: f64| DecayPrediction {
        exponent,
        sharp: false,
        epsilon_slack: slack,
    };
    let energy = kind.quantity == Quantity::Energy;
    let m_lt_2 = || {
        if m < 2.0 {
            Ok(())
        } else {
            invalid("this family needs m < 2")
        }
    };
    match kind.family {
        EstimateFamily::HigherEnergyD22 => {
            if !energy {
                return invalid("higher-energy-d22 has no solution-L2 estimate");
            }
            Ok(sharp(-s / (2.0 * tmax)))
        }
        EstimateFamily::Homogeneous => {
            if !energy {
                return invalid("homogeneous has no solution-L2 estimate");
            }
            Ok(sharp(0.0))
        }
        EstimateFamily::AdditionalDecayD2m => {
            m_lt_2()?;
            if energy {
                Ok(sharp(-(3.0 * (2.0 - m) + 2.0 * m * s) / (4.0 * m * tmax)))
            } else if m < 1.2 {
                Ok(sharp(-(6.0 - 5.0 * m) / (4.0 * m * tmax)))
            } else {
                invalid("solution-L2 needs m < 6/5")
            }
        }
        EstimateFamily::D21 => {
            if energy {
                Ok(loose(-s / (2.0 * tmax)))
            } else {
                Ok(loose(1.0))
            }
        }
        EstimateFamily::Dm1 => {
            m_lt_2()?;
            let half = th >= 0.5;
            if energy {
                let num = 6.0 - 3.0 * m + 2.0 * s * m;
                if half {
                    Ok(sharp(-num / (4.0 * m * th)))
                } else {
                    Ok(loose(-(rho_bound(num, m, th) - slack)))
                }
            } else if m < 1.2 {
                let num = 6.0 - 5.0 * m;
                if half {
                    Ok(sharp(-num / (4.0 * m * th)))
                } else {
                    Ok(loose(-(rho_bound(num, m, th) - slack)))
                }
            } else {
                let num = 6.0 - 3.0 * m;
                if half {
                    Ok(loose(1.0 - num / (4.0 * m * th)))
                } else {
                    Ok(loose(1.0 - (rho_bound(num, m, th) - slack)))
                }
            }
        }
    }
}

/// `min{(n + 2m(1-2θ)) / (4m(1-θ)), n / (4mθ)}`, the supremum of admissible `ρ`.
pub fn rho_bound(num: f64, m: f64, theta: f64) -> f64 {
    let a = (num + 2.0 * m * (1.0 - 2.0 * theta)) / (4.0 * m * (1.0 - theta));
    if theta > 0.0 {
        a.min(num / (4.0 * m * theta))
    } else {
        a
    }
}

/// Log-log fit of a norm against `1 + t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub t_min: f64,
    pub t_max: f64,
    pub slope: f64,
    pub r2: f64,
    pub samples: usize,
    /// `r² < 0.99`: the window is likely transient-dominated.
    pub warning: bool,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn log_times(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    crate::symbol::geometric(t_min, t_max, n)
}

/// Fits `ln value` against `ln(1+t)`.
pub fn fit_series(times: &[f64], values: &[f64]) -> Result<SlopeFit> {
    if times.len() < 20 {
        return invalid("slope fits need at least 20 samples");
    }
    let (t_min, t_max) = (times[0], times[times.len() - 1]);
    if t_max < 10.0 * t_min * (1.0 - 1e-12) {
        return invalid("fit window must satisfy t_max >= 10 t_min");
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Numerical("norm vanishes or is non-finite on the window".into()));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .map(|(t, v)| ((1.0 + t).ln(), v.ln()))
        .collect();
    let (slope, _, r2) = linear_fit(&pts);
    Ok(SlopeFit {
        t_min,
        t_max,
        slope,
        r2,
        samples: times.len(),
        warning: r2 < 0.99,
        times: times.to_vec(),
        values: values.to_vec(),
    })
}

/// Evolves the data exactly and fits the decay of the requested quantity.
pub fn measure_decay<T: Real>(
    kind: &EstimateKind,
    params: &ModelParams<T>,
    u0: &DataProfile<T>,
    u1: &DataProfile<T>,
    window: (f64, f64),
    samples: usize,
    grid: &QuadratureGrid<T>,
) -> Result<SlopeFit> {
    if u0.is_zero() && u1.is_zero() {
        return invalid("zero data: the norm vanishes identically");
    }
    let kinds = kind.norm_kinds();
    let max_order = kind.s + 1.0;
    let integ = NormIntegrator::new(params, u0, u1, grid, max_order)?;
    let times = log_times(window.0, window.1, samples);
    let values: Vec<f64> = times
        .iter()
        .map(|&t| kinds.iter().map(|&k| to_f64(integ.norm(lit(t), k))).sum())
        .collect();
    fit_series(&times, &values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    TooSlow,
    /// Faster than a non-sharp bound: informational.
    FasterThanPredicted,
    /// Faster than a sharp rate: the harness, not the estimate, is suspect.
    HarnessBug,
}

/// Compares a fit with a prediction. Requires `r² ≥ 0.99`.
pub fn compare(prediction: &DecayPrediction, fit: &SlopeFit, tol: f64) -> Result<Verdict> {
    if fit.r2 < 0.99 {
        return invalid("fit has r^2 < 0.99; widen or shift the window");
    }
    let d = fit.slope - prediction.exponent;
    Ok(if d > tol {
        Verdict::TooSlow
    } else if d < -tol {
        if prediction.sharp {
            Verdict::HarnessBug
        } else {
            Verdict::FasterThanPredicted
        }
    } else {
        Verdict::Consistent
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_params;

    fn kind(f: EstimateFamily, s: f64, m: f64, q: Quantity) -> EstimateKind {
        EstimateKind::new(f, s, m, q)
    }

    #[test]
    fn prediction_examples() {
        let p0 = make_params(1.0, 4.0, 0.0).unwrap();
        let ph = make_params(1.0, 4.0, 0.5).unwrap();
        let p1 = make_params(1.0, 4.0, 1.0).unwrap();
        let e = predicted_exponent(
            &kind(EstimateFamily::AdditionalDecayD2m, 0.0, 1.0, Quantity::Energy),
            &p0,
        )
        .unwrap();
        assert_eq!(e.exponent, -0.75);
        assert!(e.sharp);
        let e = predicted_exponent(
            &kind(EstimateFamily::AdditionalDecayD2m, 0.0, 1.0, Quantity::SolutionL2),
            &ph,
        )
        .unwrap();
        assert_eq!(e.exponent, -0.5);
        let e = predicted_exponent(&kind(EstimateFamily::HigherEnergyD22, 1.0, 2.0, Quantity::Energy), &p1).unwrap();
        assert_eq!(e.exponent, -0.5);
        let e = predicted_exponent(&kind(EstimateFamily::D21, 0.0, 2.0, Quantity::SolutionL2), &p1).unwrap();
        assert_eq!(e.exponent, 1.0);
        let err = predicted_exponent(
            &kind(EstimateFamily::AdditionalDecayD2m, 0.0, 1.5, Quantity::SolutionL2),
            &p1,
        );
        assert!(matches!(err, Err(Error::Validation(m)) if m.contains("m < 6/5")));
    }

    #[test]
    fn rho_family_is_slacked() {
        let p = make_params(1.0, 4.0, 0.25).unwrap();
        let e = predicted_exponent(&kind(EstimateFamily::Dm1, 0.0, 1.5, Quantity::Energy), &p).unwrap();
        assert!(!e.sharp && e.epsilon_slack == DEFAULT_SLACK);
        let bound = rho_bound(6.0 - 4.5, 1.5, 0.25);
        assert!((e.exponent + bound - DEFAULT_SLACK).abs() < 1e-15);
    }

    #[test]
    fn verdict_examples() {
        let pred = DecayPrediction {
            exponent: -0.75,
            sharp: true,
            epsilon_slack: 0.0,
        };
        let fit = |slope| SlopeFit {
            t_min: 1e2,
            t_max: 1e4,
            slope,
            r2: 0.999,
            samples: 20,
            warning: false,
            times: vec![],
            values: vec![],
        };
        assert_eq!(compare(&pred, &fit(-0.76), 0.05).unwrap(), Verdict::Consistent);
        assert_eq!(compare(&pred, &fit(-1.3), 0.05).unwrap(), Verdict::HarnessBug);
        assert_eq!(compare(&pred, &fit(-0.60), 0.05).unwrap(), Verdict::TooSlow);
    }
}
