use elastodamp::decay_lab::{EstimateFamily, EstimateKind, Quantity};
use elastodamp::exponents::{ExponentTriple, Regime};
use elastodamp::model::{make_params, DataProfile, ModelParams};
use elastodamp::semilinear::RunConfig;
use elastodamp::{Params, Profile, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub profile: ProfileSection,
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub a2: f64,
    pub b2: f64,
    pub theta: f64,
    /// Zone cutoff; `null` picks the built-in default.
    pub epsilon: Option<f64>,
}

/// Data for the whole-space commands (`decay-fit`, `diffusion-gap`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    pub u0: Profile,
    pub u1: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub symbol_check: SymbolCheck,
    pub gevrey: Gevrey,
    pub lyapunov: Lyapunov,
    pub decay_fit: DecayFit,
    pub diffusion_gap: DiffusionGap,
    pub exponents: Exponents,
    pub semilinear: Semilinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolCheck {
    /// Samples span `[ε/span, ε/2]` (small zone) and `[2/ε, span/ε]`.
    pub span: f64,
    pub samples: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gevrey {
    pub xi_range: (f64, f64),
    pub samples: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lyapunov {
    pub modes: usize,
    pub horizon: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayFit {
    pub family: EstimateFamily,
    pub quantity: Quantity,
    pub s: f64,
    pub m: f64,
    pub window: (f64, f64),
    pub samples: usize,
    pub tolerance: f64,
    pub grid: Grid,
}

/// Radial panels `[0, r_min]` then geometric panels up to `radius`, on a
/// `n_polar × n_azimuth` sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub r_min: f64,
    pub radius: f64,
    pub panels_per_decade: usize,
    pub per_panel: usize,
    pub n_polar: usize,
    pub n_azimuth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionGap {
    pub s: f64,
    pub m: f64,
    pub window: (f64, f64),
    pub samples: usize,
    pub r_min: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exponents {
    pub p: [f64; 3],
    pub m: f64,
    pub s: f64,
    /// `null` infers the regime from `(m, s, θ)`.
    pub regime: Option<Regime>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Semilinear {
    pub p: [f64; 3],
    pub m: f64,
    /// `null` takes the loss of decay from the classification.
    pub g: Option<[f64; 3]>,
    pub delta: f64,
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub t_final: f64,
    pub u0: Profile,
    pub u1: Profile,
    pub nonlinear: bool,
    pub checkpoint: bool,
    pub picard_iterations: usize,
    pub picard_max_ratio: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            a2: 1.0,
            b2: 4.0,
            theta: 0.25,
            epsilon: None,
        }
    }
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            u0: DataProfile::unit_gaussian(1.0, [1.0, 0.0, 0.0]).with_riesz(1.0),
            u1: DataProfile::zero(),
        }
    }
}

impl Default for SymbolCheck {
    fn default() -> Self {
        Self {
            span: 200.0,
            samples: 12,
            tolerance: 0.3,
        }
    }
}

impl Default for Gevrey {
    fn default() -> Self {
        Self {
            xi_range: (1e2, 1e4),
            samples: 20,
            tolerance: 0.1,
        }
    }
}

impl Default for Lyapunov {
    fn default() -> Self {
        Self {
            modes: 100,
            horizon: 20.0,
            tolerance: 1e-6,
        }
    }
}

impl Default for DecayFit {
    fn default() -> Self {
        Self {
            family: EstimateFamily::AdditionalDecayD2m,
            quantity: Quantity::Energy,
            s: 0.0,
            m: 1.0,
            window: (1e2, 1e4),
            samples: 20,
            tolerance: 0.05,
            grid: Grid::default(),
        }
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            r_min: 1e-8,
            radius: 12.0,
            panels_per_decade: 10,
            per_panel: 16,
            n_polar: 24,
            n_azimuth: 48,
        }
    }
}

impl Default for DiffusionGap {
    fn default() -> Self {
        Self {
            s: 0.0,
            m: 1.0,
            window: (1e2, 1e4),
            samples: 20,
            r_min: 1e-9,
            slack: 0.1,
        }
    }
}

impl Default for Exponents {
    fn default() -> Self {
        Self {
            p: [2.5, 2.5, 2.5],
            m: 1.0,
            s: 0.0,
            regime: None,
        }
    }
}

impl Default for Semilinear {
    fn default() -> Self {
        Self {
            p: [2.5, 2.5, 2.5],
            m: 1.0,
            g: None,
            delta: 1e-3,
            n: 64,
            length: 16.0 * std::f64::consts::PI,
            dt: 0.01,
            t_final: 100.0,
            u0: DataProfile::gaussian(1.0, 2.0, [1.0, 1.0, 1.0]),
            u1: DataProfile::zero(),
            nonlinear: true,
            checkpoint: false,
            picard_iterations: 5,
            picard_max_ratio: 0.5,
        }
    }
}

impl Config {
    pub fn params(&self) -> Result<Params> {
        let p = make_params(self.model.a2, self.model.b2, self.model.theta)?;
        match self.model.epsilon {
            Some(e) => p.with_epsilon(e),
            None => Ok(p),
        }
    }

    pub fn decay_kind(&self) -> EstimateKind {
        let d = &self.experiment.decay_fit;
        EstimateKind::new(d.family, d.s, d.m, d.quantity)
    }

    pub fn run_config(&self) -> Result<RunConfig<f64>> {
        let e = &self.experiment.semilinear;
        let params: ModelParams<f64> = self.params()?;
        let mut c = RunConfig::new(ExponentTriple::new(e.p[0], e.p[1], e.p[2])?, params, e.m)?;
        if let Some(g) = e.g {
            c.g = g;
        }
        c.delta = e.delta;
        c.n = e.n;
        c.length = e.length;
        c.dt = e.dt;
        c.t_final = e.t_final;
        c.u0 = e.u0;
        c.u1 = e.u1;
        c.nonlinear = e.nonlinear;
        c.validate()?;
        Ok(c)
    }

    /// SHA-256 of the canonical JSON form together with the seed.
    pub fn hash(&self, seed: u64) -> String {
        let body = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(format!("{body}\nseed={seed}").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
