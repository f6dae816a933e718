//! Exponent calculus for the weakly coupled semilinear system
//! `u_tt - a²Δu - (b²-a²)∇div u + (-Δ)^θ u_t = F(u)` with
//! `F(U) = (|U₃|^{p₁}, |U₁|^{p₂}, |U₂|^{p₃})`.
//!
//! Indices are cyclic: for `k ∈ {0, 1, 2}`, `p_{k+1}` means `p[(k+1) % 3]`.
//! Everything here is plain `f64` arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default loss of decay assigned to exponents sitting exactly on a threshold.
pub const DEFAULT_EPS1: f64 = 1e-3;
/// Relative tolerance for "exactly at the threshold".
pub const THRESHOLD_TOL: f64 = 1e-12;

/// Powers `(p₁, p₂, p₃)` of the nonlinearity, each `> 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentTriple(pub [f64; 3]);

impl ExponentTriple {
    pub fn new(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        let t = Self([p1, p2, p3]);
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|p| !(p.is_finite() && *p > 1.0)) {
            return invalid(format!("every exponent must be finite and > 1, got {:?}", self.0));
        }
        Ok(())
    }

    /// `p_{k+j}` with cyclic wraparound.
    pub fn at(&self, k: usize, j: usize) -> f64 {
        self.0[(k + j) % 3]
    }

    /// `(p₂, p₃, p₁)`.
    pub fn rotated(&self) -> Self {
        Self([self.0[1], self.0[2], self.0[0]])
    }

    fn product(&self) -> f64 {
        self.0.iter().product()
    }
}

/// `p_c(m, θ) = 1 + m(2θ+1)/(3-m)` on `m ∈ [1, 6/5)`, `θ ∈ [1/2, 1]`.
pub fn critical_exponent(m: f64, theta: f64) -> Result<f64> {
    if !(1.0..1.2).contains(&m) || !(0.5..=1.0).contains(&theta) {
        return invalid(format!(
            "p_c needs m in [1, 6/5) and theta in [1/2, 1], got m = {m}, theta = {theta}"
        ));
    }
    Ok(1.0 + m * (2.0 * theta + 1.0) / (3.0 - m))
}

/// Which threshold and loss-of-decay family applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "regime")]
pub enum Regime {
    /// `p_c(m, θ)`: `m ∈ [1, 6/5)`, `θ ∈ [1/2, 1]`, any `s ≥ 0`.
    Critical,
    /// `p_bal(3/2, s, θ)`: `m = 3/2`, `s ∈ [0, 1/2)`, `θ ∈ [0, 1/2)`.
    BalancedL32,
    /// `p_bal(m, 0, θ)`: `m ∈ [6/5, 3/2)`, `s = 0`, `θ ∈ [1/2, 1]`.
    BalancedM,
}

impl Regime {
    /// The regime whose hypotheses `(m, s, θ)` satisfy, if any.
    pub fn infer(m: f64, s: f64, theta: f64) -> Option<Self> {
        if (1.0..1.2).contains(&m) && (0.5..=1.0).contains(&theta) && s >= 0.0 {
            Some(Self::Critical)
        } else if m == 1.5 && (0.0..0.5).contains(&s) && (0.0..0.5).contains(&theta) {
            Some(Self::BalancedL32)
        } else if (1.2..1.5).contains(&m) && s == 0.0 && (0.5..=1.0).contains(&theta) {
            Some(Self::BalancedM)
        } else {
            None
        }
    }

    fn check(&self, m: f64, s: f64, theta: f64) -> Result<()> {
        let ok = match self {
            Self::Critical => (1.0..1.2).contains(&m) && (0.5..=1.0).contains(&theta) && s >= 0.0,
            Self::BalancedL32 => m == 1.5 && (0.0..0.5).contains(&s) && (0.0..0.5).contains(&theta),
            Self::BalancedM => (1.2..1.5).contains(&m) && s == 0.0 && (0.5..=1.0).contains(&theta),
        };
        if ok {
            Ok(())
        } else {
            invalid(format!(
                "(m, s, theta) = ({m}, {s}, {theta}) is outside the {self:?} regime"
            ))
        }
    }
}

/// Balanced exponent `p_bal(m, s, θ)`; only the two printed branches exist.
pub fn balanced_exponent(m: f64, s: f64, theta: f64) -> Result<f64> {
    if m == 1.5 && (0.0..0.5).contains(&s) && (0.0..0.5).contains(&theta) {
        Ok(2.0 + (2.0 + 4.0 * s * (1.0 - theta)) / (5.0 - 6.0 * theta + 2.0 * s))
    } else if (1.2..1.5).contains(&m) && s == 0.0 && (0.5..=1.0).contains(&theta) {
        Ok(2.0 + 6.0 * (m - 2.0 + 2.0 * theta) / (2.0 * m * theta - 3.0 * m + 6.0))
    } else {
        invalid(format!("no balanced exponent for (m, s, theta) = ({m}, {s}, {theta})"))
    }
}

/// Threshold exponent of `regime`.
pub fn threshold(regime: Regime, m: f64, s: f64, theta: f64) -> Result<f64> {
    regime.check(m, s, theta)?;
    match regime {
        Regime::Critical => critical_exponent(m, theta),
        _ => balanced_exponent(m, s, theta),
    }
}

/// `α_k(m, θ) = m (2θ + (1+2θ)p_{k+1} + p_k p_{k+1}) / (2(p_k p_{k+1} - 1))`.
pub fn alpha(k: usize, p: &ExponentTriple, m: f64, theta: f64) -> f64 {
    let (pk, pk1) = (p.at(k, 0), p.at(k, 1));
    m * (2.0 * theta + (1.0 + 2.0 * theta) * pk1 + pk * pk1) / (2.0 * (pk * pk1 - 1.0))
}

/// `α̃_k(m, θ)`, the three-exponent analogue of [`alpha`].
pub fn alpha_tilde(k: usize, p: &ExponentTriple, m: f64, theta: f64) -> f64 {
    let (pk1, pk2, pi) = (p.at(k, 1), p.at(k, 2), p.product());
    m * (2.0 * theta + (1.0 + 2.0 * theta) * (pk1 + 1.0) * pk2 + pi) / (2.0 * (pi - 1.0))
}

/// `α_{k,bal}` for the two balanced regimes.
pub fn alpha_bal(regime: Regime, k: usize, p: &ExponentTriple, m: f64, s: f64, theta: f64) -> Result<f64> {
    let (pk, pk1) = (p.at(k, 0), p.at(k, 1));
    let (c0, c1, c2) = bal_coefficients(regime, m, s, theta)?;
    Ok((c0 + c1 * pk1 - c2 * pk * pk1) / (2.0 * (pk * pk1 - 1.0)))
}

/// `α̃_{k,bal}` for the two balanced regimes.
pub fn alpha_tilde_bal(regime: Regime, k: usize, p: &ExponentTriple, m: f64, s: f64, theta: f64) -> Result<f64> {
    let (pk1, pk2, pi) = (p.at(k, 1), p.at(k, 2), p.product());
    let (c0, c1, c2) = bal_coefficients(regime, m, s, theta)?;
    Ok((c0 + c1 * (pk1 + 1.0) * pk2 - c2 * pi) / (2.0 * (pi - 1.0)))
}

fn bal_coefficients(regime: Regime, m: f64, s: f64, th: f64) -> Result<(f64, f64, f64)> {
    regime.check(m, s, th)?;
    match regime {
        Regime::BalancedL32 => Ok((
            9.0 - 12.0 * th + 4.0 * s * (2.0 - th),
            (7.0 - 6.0 * th) + 2.0 * s * (3.0 - 2.0 * th),
            (2.0 - 6.0 * th) + 2.0 * s,
        )),
        Regime::BalancedM => Ok((
            4.0 * m * th + 12.0 * th - 3.0,
            2.0 * m * th + 12.0 * th + 3.0 * m - 6.0,
            2.0 * m * th - 3.0 * m + 3.0,
        )),
        Regime::Critical => invalid("balanced alpha is not defined in the critical regime"),
    }
}

/// The regime's `α_k` (plain or balanced).
pub fn regime_alpha(regime: Regime, k: usize, p: &ExponentTriple, m: f64, s: f64, theta: f64) -> Result<f64> {
    match regime {
        Regime::Critical => Ok(alpha(k, p, m, theta)),
        _ => alpha_bal(regime, k, p, m, s, theta),
    }
}

/// The regime's `α̃_k` (plain or balanced).
pub fn regime_alpha_tilde(regime: Regime, k: usize, p: &ExponentTriple, m: f64, s: f64, theta: f64) -> Result<f64> {
    match regime {
        Regime::Critical => Ok(alpha_tilde(k, p, m, theta)),
        _ => alpha_tilde_bal(regime, k, p, m, s, theta),
    }
}

/// `p_{k+1}(p_k + 1 - P) - P`; positive iff the `α`-condition holds.
pub fn alpha_rewrite(k: usize, p: &ExponentTriple, threshold: f64) -> f64 {
    p.at(k, 1) * (p.at(k, 0) + 1.0 - threshold) - threshold
}

/// `p_{k+2}(p_{k+1}(p_k + 1 - P) + 1 - P) - P`; positive iff the `α̃`-condition holds.
pub fn alpha_tilde_rewrite(k: usize, p: &ExponentTriple, threshold: f64) -> f64 {
    p.at(k, 2) * (p.at(k, 1) * (p.at(k, 0) + 1.0 - threshold) + 1.0 - threshold) - threshold
}

/// Loss of decay for the single sub-threshold exponent `p_{k₁}`.
pub fn g_first(regime: Regime, p: f64, m: f64, s: f64, th: f64) -> f64 {
    match regime {
        Regime::Critical => (3.0 + 2.0 * m * th) / (2.0 * m * th) - (3.0 - m) / (2.0 * m * th) * p,
        Regime::BalancedL32 => {
            let d = (1.0 - th) * (s + 1.0);
            1.0 + (2.0 - 2.0 * th + s) / d + (6.0 * th - 5.0 - 2.0 * s) / (4.0 * d) * p
        }
        Regime::BalancedM => {
            let x = (6.0 - 3.0 * m) / (4.0 * m * th);
            (m + 3.0) / m - (0.5 + x) * p
        }
    }
}

/// Loss of decay for `p_{k₂}` when both `p_{k₁}` and `p_{k₂}` are sub-threshold.
pub fn g_second(regime: Regime, p1: f64, p2: f64, m: f64, s: f64, th: f64) -> f64 {
    match regime {
        Regime::Critical => {
            (3.0 + 2.0 * m * th) / (2.0 * m * th) + (1.0 + 2.0 * th) / (2.0 * th) * p2
                - (3.0 - m) / (2.0 * m * th) * p1 * p2
        }
        Regime::BalancedL32 => {
            let d = (1.0 - th) * (s + 1.0);
            1.0 + (2.0 - 2.0 * th + s) / d
                + (1.0 + (3.0 + 2.0 * s - 2.0 * th) / (4.0 * d)) * p2
                + (6.0 * th - 5.0 - 2.0 * s) / (4.0 * d) * p1 * p2
        }
        Regime::BalancedM => {
            let x = (6.0 - 3.0 * m) / (4.0 * m * th);
            (m + 3.0) / m - (x - 0.5 - 3.0 / m) * p2 - (0.5 + x) * p1 * p2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    /// All exponents above the threshold, no loss of decay.
    I,
    /// One exponent below, loss on that component.
    II,
    /// Two exponents below, loss on two components.
    III,
    Inadmissible,
}

/// Range of exponents allowed by the Gagliardo-Nirenberg steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub lower: f64,
    pub lower_inclusive: bool,
    /// `None` for an unbounded window.
    pub upper: Option<f64>,
}

impl Window {
    pub fn contains(&self, p: f64) -> bool {
        let lo = if self.lower_inclusive {
            p >= self.lower
        } else {
            p > self.lower
        };
        lo && self.upper.is_none_or(|u| p <= u)
    }
}

/// Per-exponent admissibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GnWindows {
    pub window: Window,
    pub admissible: [bool; 3],
}

/// `[2/m, 3]` for `s = 0`, `(1+⌈s⌉, 1+2/(1-2s)]` for `s ∈ (0, 1/2)`,
/// `(1+⌈s⌉, ∞)` for `s ∈ [1/2, 3/2]` and `(1+s, ∞)` for `s > 3/2`.
pub fn gn_window(m: f64, s: f64) -> Result<Window> {
    if !(s >= 0.0 && s.is_finite()) || !(m >= 1.0 && m < 2.0) {
        return invalid(format!("need s >= 0 and m in [1, 2), got s = {s}, m = {m}"));
    }
    Ok(if s == 0.0 {
        Window {
            lower: 2.0 / m,
            lower_inclusive: true,
            upper: Some(3.0),
        }
    } else if s < 0.5 {
        Window {
            lower: 1.0 + s.ceil(),
            lower_inclusive: false,
            upper: Some(1.0 + 2.0 / (1.0 - 2.0 * s)),
        }
    } else if s <= 1.5 {
        Window {
            lower: 1.0 + s.ceil(),
            lower_inclusive: false,
            upper: None,
        }
    } else {
        Window {
            lower: 1.0 + s,
            lower_inclusive: false,
            upper: None,
        }
    })
}

pub fn gn_admissible(p: &ExponentTriple, m: f64, s: f64) -> Result<GnWindows> {
    let window = gn_window(m, s)?;
    Ok(GnWindows {
        window,
        admissible: p.0.map(|x| window.contains(x)),
    })
}

/// A named identity or range check included in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportInputs {
    pub p: [f64; 3],
    pub m: f64,
    pub s: f64,
    pub theta: f64,
    pub regime: Regime,
    pub eps1: f64,
}

/// Classification of a triple; serialized as the JSON exponent report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub inputs: ReportInputs,
    /// `p_c(m, θ)` when `(m, θ)` lies in its domain.
    pub p_c: Option<f64>,
    pub p_bal: Option<f64>,
    /// Threshold actually used by the regime.
    pub threshold: f64,
    pub alpha: Option<[f64; 3]>,
    pub alpha_tilde: Option<[f64; 3]>,
    pub alpha_bal: Option<[f64; 3]>,
    pub alpha_tilde_bal: Option<[f64; 3]>,
    pub case: Case,
    /// `(k₁, k₂, k₃)`, 1-based, for cases ii and iii.
    pub rotation: Option<[usize; 3]>,
    pub g: [f64; 3],
    pub windows: GnWindows,
    /// "proven global existence", "conjectured-critical" or
    /// "outside proven global-existence region".
    pub verdict: String,
    pub checks: Vec<Check>,
}

/// Options for [`classify_and_g`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Loss assigned to exponents exactly at the threshold.
    pub eps1: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { eps1: DEFAULT_EPS1 }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Above,
    At,
    Below,
}

fn side(p: f64, thr: f64) -> Side {
    if (p - thr).abs() <= THRESHOLD_TOL * thr {
        Side::At
    } else if p > thr {
        Side::Above
    } else {
        Side::Below
    }
}

fn sign_check(name: String, value: f64, rewrite: f64) -> Option<Check> {
    // Skip samples whose sign is decided by round-off.
    if value.abs() < 1e-12 || rewrite.abs() < 1e-12 {
        return None;
    }
    let passed = (value < 0.0) == (rewrite > 0.0);
    Some(Check {
        name,
        passed,
        detail: format!("alpha - 3/2 = {value:.6e}, rewrite = {rewrite:.6e}"),
    })
}

/// Determines case i/ii/iii for every cyclic relabeling and the matching
/// loss-of-decay vector `g`.
pub fn classify_and_g(
    p: &ExponentTriple,
    m: f64,
    s: f64,
    theta: f64,
    regime: Regime,
    opts: ClassifyOptions,
) -> Result<ExponentReport> {
    p.validate()?;
    if !(opts.eps1 > 0.0) {
        return Err(Error::Validation("eps1 must be positive".into()));
    }
    let thr = threshold(regime, m, s, theta)?;
    let p_c = critical_exponent(m, theta).ok();
    let p_bal = balanced_exponent(m, s, theta).ok();
    let tri = |f: &dyn Fn(usize) -> Result<f64>| -> Option<[f64; 3]> { Some([f(0).ok()?, f(1).ok()?, f(2).ok()?]) };
    let crit = regime == Regime::Critical;
    let alpha_v = if crit {
        Some([0, 1, 2].map(|k| alpha(k, p, m, theta)))
    } else {
        None
    };
    let alpha_t = if crit {
        Some([0, 1, 2].map(|k| alpha_tilde(k, p, m, theta)))
    } else {
        None
    };
    let alpha_b = tri(&|k| alpha_bal(regime, k, p, m, s, theta));
    let alpha_tb = tri(&|k| alpha_tilde_bal(regime, k, p, m, s, theta));

    let mut checks = Vec::new();
    for k in 0..3 {
        let a = regime_alpha(regime, k, p, m, s, theta)? - 1.5;
        let at = regime_alpha_tilde(regime, k, p, m, s, theta)? - 1.5;
        checks.extend(sign_check(
            format!("alpha-rewrite-k{}", k + 1),
            a,
            alpha_rewrite(k, p, thr),
        ));
        checks.extend(sign_check(
            format!("alpha-tilde-rewrite-k{}", k + 1),
            at,
            alpha_tilde_rewrite(k, p, thr),
        ));
    }
    let windows = gn_admissible(p, m, s)?;
    for k in 0..3 {
        checks.push(Check {
            name: format!("gn-window-p{}", k + 1),
            passed: windows.admissible[k],
            detail: format!("p = {} in {:?}", p.0[k], windows.window),
        });
    }

    let sides = p.0.map(|x| side(x, thr));
    let low: Vec<usize> = (0..3).filter(|&k| sides[k] != Side::Above).collect();
    let g_or_eps = |k: usize, g: f64| if sides[k] == Side::At { opts.eps1 } else { g };
    let mut g = [0.0; 3];
    let mut rotation = None;
    let mut boundary = false;
    let case = match low.len() {
        0 => Case::I,
        1 => {
            let k1 = low[0];
            rotation = Some([k1 + 1, (k1 + 1) % 3 + 1, (k1 + 2) % 3 + 1]);
            let a = regime_alpha(regime, k1, p, m, s, theta)?;
            boundary = (a - 1.5).abs() <= 1e-12;
            if a < 1.5 && !boundary {
                g[k1] = g_or_eps(k1, g_first(regime, p.0[k1], m, s, theta));
                Case::II
            } else {
                Case::Inadmissible
            }
        }
        2 => {
            // The two sub-threshold exponents are cyclically consecutive.
            let k1 = if (low[0] + 1) % 3 == low[1] { low[0] } else { low[1] };
            let k2 = (k1 + 1) % 3;
            rotation = Some([k1 + 1, k2 + 1, (k1 + 2) % 3 + 1]);
            let at = regime_alpha_tilde(regime, k1, p, m, s, theta)?;
            boundary = (at - 1.5).abs() <= 1e-12;
            if at < 1.5 && !boundary {
                g[k1] = g_or_eps(k1, g_first(regime, p.0[k1], m, s, theta));
                let second = if sides[k1] == Side::At {
                    g_first(regime, p.0[k2], m, s, theta)
                } else {
                    g_second(regime, p.0[k1], p.0[k2], m, s, theta)
                };
                g[k2] = g_or_eps(k2, second);
                Case::III
            } else {
                Case::Inadmissible
            }
        }
        _ => Case::Inadmissible,
    };
    let critical_point = crit && m == 1.0 && theta == 0.5;
    let verdict = if case != Case::Inadmissible {
        "proven global existence"
    } else if boundary && critical_point {
        "conjectured-critical"
    } else {
        "outside proven global-existence region"
    };
    Ok(ExponentReport {
        inputs: ReportInputs {
            p: p.0,
            m,
            s,
            theta,
            regime,
            eps1: opts.eps1,
        },
        p_c,
        p_bal,
        threshold: thr,
        alpha: alpha_v,
        alpha_tilde: alpha_t,
        alpha_bal: alpha_b,
        alpha_tilde_bal: alpha_tb,
        case,
        rotation,
        g,
        windows,
        verdict: verdict.into(),
        checks,
    })
}

impl ExponentReport {
    /// Every identity check passed.
    pub fn identities_hold(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.name.contains("rewrite"))
            .all(|c| c.passed)
    }
}

/// Gagliardo-Nirenberg parameters `q₁, q₂, r₁..r₆` for one exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GnParameters {
    pub p: f64,
    pub s: f64,
    pub q1: f64,
    pub q2: f64,
    /// `r₁..r₆`; `r₄ = ∞` at `p = 5/3`.
    pub r: [f64; 6],
    pub checks: Vec<Check>,
}

impl GnParameters {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

const RANGE_TOL: f64 = 1e-12;

fn range_check(name: &str, value: f64, lo: f64, hi: f64) -> Check {
    Check {
        name: name.into(),
        passed: value >= lo - RANGE_TOL && value <= hi + RANGE_TOL,
        detail: format!("{value:.12} in [{lo:.12}, {hi:.12}]"),
    }
}

fn identity_check(name: &str, lhs: f64, rhs: f64) -> Check {
    Check {
        name: name.into(),
        passed: (lhs - rhs).abs() <= RANGE_TOL * (1.0 + rhs.abs()),
        detail: format!("{lhs:.12} = {rhs:.12}"),
    }
}

/// The explicit choice `q₁ = 3(p-1)`, `q₂ = 6`, `r₁ = 6`, `r₂ = 3`,
/// `r₃ = r₅ = 3(p-1)`, `r₄ = 6(p-1)/(3(p-1)-2)`, `r₆ = 6` with every
/// interpolation-exponent range evaluated (no early exit).
pub fn gn_parameter_checks(p: f64, s: f64) -> Result<GnParameters> {
    if !(p > 1.0 && p.is_finite()) || !(s >= 0.0 && s.is_finite()) {
        return invalid(format!("need p > 1 and s >= 0, got p = {p}, s = {s}"));
    }
    let pm = p - 1.0;
    let (q1, q2) = (3.0 * pm, 6.0);
    let denom = 3.0 * pm - 2.0;
    let r4 = if denom == 0.0 { f64::INFINITY } else { 6.0 * pm / denom };
    let r = [6.0, 3.0, 3.0 * pm, r4, 3.0 * pm, 6.0];
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    let k = 3.0 / (s + 1.0);
    let lo_s = s / (s + 1.0);
    let beta0 = |x: f64| k * (0.5 - inv(x));
    let beta_s = |x: f64| k * (0.5 - inv(x) + s / 3.0);
    let checks = vec![
        range_check("beta(q1) in [0, 1]", beta0(q1), 0.0, 1.0),
        range_check("beta(q2) in [s/(s+1), 1]", beta_s(q2), lo_s, 1.0),
        identity_check("(p-1)/q1 + 1/q2 = 1/2", pm * inv(q1) + inv(q2), 0.5),
        range_check("beta(r1) in [s/(s+1), 1]", beta_s(r[0]), lo_s, 1.0),
        range_check("beta(r2 (p-1)) in [0, 1]", beta0(r[1] * pm), 0.0, 1.0),
        identity_check("1/r1 + 1/r2 = 1/2", inv(r[0]) + inv(r[1]), 0.5),
        range_check("beta(r3) in [0, 1]", beta0(r[2]), 0.0, 1.0),
        range_check("beta(r5) in [0, 1]", beta0(r[4]), 0.0, 1.0),
        range_check("beta(r6) in [s/(s+1), 1]", beta_s(r[5]), lo_s, 1.0),
        identity_check("1/r3 + 1/r4 = 1/2", inv(r[2]) + inv(r[3]), 0.5),
        identity_check("1/r4 = (p-2)/r5 + 1/r6", inv(r[3]), (p - 2.0) * inv(r[4]) + inv(r[5])),
        range_check("r4 >= 1", if r4 > 0.0 { r4 } else { -1.0 }, 1.0, f64::INFINITY),
    ];
    Ok(GnParameters {
        p,
        s,
        q1,
        q2,
        r,
        checks,
    })
}

/// [`gn_parameter_checks`], failing with the violated ranges named.
pub fn pick_gn_parameters(p: f64, s: f64) -> Result<GnParameters> {
    let g = gn_parameter_checks(p, s)?;
    if g.all_hold() {
        Ok(g)
    } else {
        let names: Vec<String> = g
            .failures()
            .iter()
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect();
        Err(Error::Validation(format!(
            "parameter choice for p = {p}, s = {s} violates: {}",
            names.join("; ")
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_shapes() {
        let w = gn_window(1.0, 0.25).unwrap();
        assert!(!w.contains(2.0) && w.contains(2.0 + 1e-12) && w.contains(5.0) && !w.contains(5.0 + 1e-9));
        assert!(gn_window(1.0, 2.0).unwrap().upper.is_none());
        assert_eq!(gn_window(1.0, 2.0).unwrap().lower, 3.0);
        assert_eq!(gn_window(1.0, 1.0).unwrap().lower, 2.0);
    }

    #[test]
    fn regime_inference() {
        assert_eq!(Regime::infer(1.0, 0.0, 0.5), Some(Regime::Critical));
        assert_eq!(Regime::infer(1.5, 0.2, 0.3), Some(Regime::BalancedL32));
        assert_eq!(Regime::infer(1.3, 0.0, 0.7), Some(Regime::BalancedM));
        assert_eq!(Regime::infer(1.3, 0.0, 0.2), None);
    }
}
