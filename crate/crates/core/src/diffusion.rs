//! Parabolic and oscillatory reference systems at small frequencies and the
//! decay gap between the damped wave and its reference approximation.
//!
//! The reference solution is `W̃(t, ξ) = diag(e^{-μ̃_l t}) H(|ξ|) W₀(ξ)` and the
//! compared quantity is `‖χ_int(D)(W - L W̃)‖_{Ḣ^s}`, evaluated entirely in
//! frequency space.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::decay_lab::{fit_series, log_times, SlopeFit};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat6, CVec6};
use crate::model::{DataProfile, ModelParams};
use crate::propagator::{micro_energy, mode_from_profiles, BranchPropagator, QuadratureGrid};
use crate::scalar::{cplx, creal, czero, imag_unit, lit, pairwise_sum, pow_nonneg, to_f64, Real};
use crate::symbol::z6;

/// Largest condition number accepted for `L(|ξ|)`.
pub const MAX_CONDITION: f64 = 1e6;

/// Which reference system applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceRegime {
    /// θ = 0: heat flow for the first block, friction for the second.
    Friction,
    /// θ ∈ (0, 1/2): two heat flows of orders `2-2θ` and `2θ`.
    DoubleDiffusion,
    /// θ ∈ (1/2, 1]: damped half-waves.
    Oscillatory,
}

/// `W̃_t + M̃₁ |D|^{2σ₁} W̃ + M̃₂ |D|^{2σ₂} W̃ = 0` with its data and
/// reconstruction multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSystem<T> {
    pub params: ModelParams<T>,
    pub regime: ReferenceRegime,
    pub sigma1: T,
    pub sigma2: T,
    /// Diagonal of `M̃₁`.
    pub m1: CVec6<T>,
    /// Diagonal of `M̃₂`.
    pub m2: CVec6<T>,
}

/// Rejects θ = 1/2: the reference system gives no improvement in decay there.
pub fn build_reference<T: Real>(params: &ModelParams<T>) -> Result<ReferenceSystem<T>> {
    let th = params.theta;
    if params.is_half() {
        return invalid(
            "no diffusion reference at theta = 1/2: there is no improvement in the decay estimates \
             over the damped wave itself",
        );
    }
    let (o, z) = (creal(T::one()), czero());
    let (a2, b2) = (creal(params.a2), creal(params.b2));
    let half = lit::<T>(0.5);
    let heat = [a2, a2, b2, z, z, z];
    let damp = [z, z, z, o, o, o];
    let sys = if th.is_zero() {
        (ReferenceRegime::Friction, T::one(), T::zero(), heat, damp)
    } else if th < half {
        (ReferenceRegime::DoubleDiffusion, T::one() - th, th, heat, damp)
    } else {
        // Signs follow the listed exponents μ̃₁,₂ = -i|ξ|a + |ξ|^{2θ}/2, ...
        let i = imag_unit::<T>();
        let (a, b) = (params.a(), params.b());
        let m2 = [-i * a, -i * a, -i * b, i * a, i * a, i * b];
        (ReferenceRegime::Oscillatory, th, half, [creal(half); 6], m2)
    };
    Ok(ReferenceSystem {
        params: *params,
        regime: sys.0,
        sigma1: sys.1,
        sigma2: sys.2,
        m1: sys.3,
        m2: sys.4,
    })
}

/// The permutation-like change of basis `T₁`.
pub fn t1_matrix<T: Real>() -> CMat6<T> {
    const P: [[i8; 6]; 6] = [
        [0, 1, 0, 0, 0, 1],
        [1, 0, 0, 1, 0, 0],
        [0, 0, 1, 0, 1, 0],
        [0, -1, 0, 0, 0, 1],
        [-1, 0, 0, 1, 0, 0],
        [0, 0, -1, 0, 1, 0],
    ];
    let s = T::FRAC_1_SQRT_2();
    let mut m = linalg::zeros();
    for i in 0..6 {
        for j in 0..6 {
            m[i][j] = creal(s * lit(P[i][j] as f64));
        }
    }
    m
}

// (row, col, sign, speed index: 0 -> a, 1 -> b)
const N1_PATTERN: [(usize, usize, i8, u8); 6] = [
    (0, 3, -1, 0),
    (1, 5, -1, 0),
    (2, 4, -1, 1),
    (3, 0, 1, 0),
    (4, 2, 1, 1),
    (5, 1, 1, 0),
];
const N3_PATTERN: [(usize, usize, i8, u8); 6] = [
    (0, 3, -1, 0),
    (1, 4, -1, 0),
    (2, 5, -1, 1),
    (3, 0, 1, 0),
    (4, 1, 1, 0),
    (5, 2, 1, 1),
];

fn from_pattern<T: Real>(pattern: &[(usize, usize, i8, u8); 6], c: Complex<T>, val: [T; 2]) -> CMat6<T> {
    let mut m = linalg::zeros();
    for &(i, j, sgn, k) in pattern {
        m[i][j] = c * (val[k as usize] * lit(sgn as f64));
    }
    m
}

/// `𝒩₁(|ξ|, θ)`, of size `|ξ|^{1-2θ}`.
pub fn n1_matrix<T: Real>(params: &ModelParams<T>, r: T) -> CMat6<T> {
    let two = lit::<T>(2.0);
    let c = cplx(T::zero(), pow_nonneg(r, T::one() - two * params.theta));
    from_pattern(&N1_PATTERN, c, [params.a(), params.b()])
}

/// `𝒩₂(|ξ|, θ)` built from `z₆`; same pattern as `𝒩₁` with opposite signs.
pub fn n2_matrix<T: Real>(params: &ModelParams<T>, r: T) -> CMat6<T> {
    let th = params.theta;
    let c = cplx(T::zero(), -pow_nonneg(r, lit::<T>(2.0) * th).recip());
    let za = z6(th, params.a(), r);
    let zb = z6(th, params.b(), r);
    from_pattern(&N1_PATTERN, -c, [za, zb])
}

/// `𝒩₃(|ξ|, θ)` for θ > 1/2, of size `|ξ|^{2θ-1}`.
pub fn n3_matrix<T: Real>(params: &ModelParams<T>, r: T) -> CMat6<T> {
    let two = lit::<T>(2.0);
    let c = cplx(T::zero(), pow_nonneg(r, two * params.theta - T::one()) / lit(4.0));
    from_pattern(&N3_PATTERN, c, [params.a().recip(), params.b().recip()])
}

impl<T: Real> ReferenceSystem<T> {
    /// `μ̃_l(|ξ|) = (M̃₁)_l |ξ|^{2σ₁} + (M̃₂)_l |ξ|^{2σ₂}`.
    pub fn mu_tilde(&self, r: T) -> CVec6<T> {
        let two = lit::<T>(2.0);
        let p1 = pow_nonneg(r, two * self.sigma1);
        let p2 = pow_nonneg(r, two * self.sigma2);
        let mut mu = [czero(); 6];
        for l in 0..6 {
            mu[l] = self.m1[l] * p1 + self.m2[l] * p2;
        }
        mu
    }

    /// Reconstruction multiplier `L(|ξ|)`.
    pub fn l_matrix(&self, r: T) -> CMat6<T> {
        let id = linalg::identity();
        match self.regime {
            ReferenceRegime::Oscillatory => linalg::add(&id, &n3_matrix(&self.params, r)),
            _ => {
                let a = linalg::add(&id, &n1_matrix(&self.params, r));
                let b = linalg::add(&id, &n2_matrix(&self.params, r));
                linalg::mul(&t1_matrix(), &linalg::mul(&a, &b))
            }
        }
    }

    /// `(L, H = L⁻¹)`; fails when `cond(L) > 10⁶`, which the small-frequency
    /// bounds exclude on the interior zone.
    pub fn multipliers(&self, r: T) -> Result<(CMat6<T>, CMat6<T>)> {
        let l = self.l_matrix(r);
        let h = linalg::inverse(&l).ok_or_else(|| Error::Numerical(format!("L(|xi|) is singular at |xi| = {r}")))?;
        let cond = linalg::norm1(&l) * linalg::norm1(&h);
        if !(to_f64(cond) <= MAX_CONDITION) {
            return Err(Error::Numerical(format!(
                "L(|xi|) condition number {:.3e} exceeds {MAX_CONDITION:.0e} at |xi| = {r}",
                to_f64(cond)
            )));
        }
        Ok((l, h))
    }

    pub fn h_matrix(&self, r: T) -> Result<CMat6<T>> {
        Ok(self.multipliers(r)?.1)
    }

    /// `W̃(t) = diag(e^{-μ̃ t}) H W₀`, set to zero beyond `|ξ| = 2/ε`.
    pub fn evolve(&self, r: T, t: T, w0: &CVec6<T>) -> Result<CVec6<T>> {
        if r > lit::<T>(2.0) / self.params.epsilon {
            return Ok([czero(); 6]);
        }
        let h = self.h_matrix(r)?;
        let mut w = linalg::mul_vec(&h, w0);
        let mu = self.mu_tilde(r);
        for l in 0..6 {
            w[l] = w[l] * (-mu[l] * t).exp();
        }
        Ok(w)
    }
}

/// Exact micro-energy propagator at `|ξ| = r > 0` in the decoupled frame.
/// Block diagonal in the pairs `(k, k+3)`.
pub fn micro_propagator<T: Real>(params: &ModelParams<T>, r: T, t: T) -> CMat6<T> {
    let speeds = [params.a2, params.a2, params.b2];
    let i = imag_unit::<T>();
    let half = lit::<T>(0.5);
    let mut e = linalg::zeros();
    for k in 0..3 {
        let s = creal(speeds[k].sqrt() * r);
        let p = BranchPropagator::for_branch(params, speeds[k], r, t);
        // W± = -i v_t ± s v;  v = (W+ - W-)/(2s), v_t = i (W+ + W-)/2.
        let fv = s * p.v_from_v0 - i * p.vt_from_v0;
        let fvt = s * p.v_from_v1 - i * p.vt_from_v1;
        let gv = -s * p.v_from_v0 - i * p.vt_from_v0;
        let gvt = -s * p.v_from_v1 - i * p.vt_from_v1;
        let inv2s = (s * lit::<T>(2.0)).inv();
        e[k][k] = fv * inv2s + fvt * i * half;
        e[k][k + 3] = -fv * inv2s + fvt * i * half;
        e[k + 3][k] = gv * inv2s + gvt * i * half;
        e[k + 3][k + 3] = -gv * inv2s + gvt * i * half;
    }
    e
}

/// Predicted extra decay of the difference over the solution.
pub fn predicted_gap(theta: f64) -> f64 {
    if theta == 0.0 {
        0.5
    } else if theta < 0.5 {
        (1.0 - 2.0 * theta) / (2.0 * (1.0 - theta))
    } else if theta > 0.5 {
        (2.0 * theta - 1.0) / (2.0 * theta)
    } else {
        0.0
    }
}

/// Small-frequency decay exponent of `‖χ_int(D) W‖_{Ḣ^s}` for `L^m` data.
pub fn predicted_solution_exponent(theta: f64, m: f64, s: f64) -> f64 {
    let k = if theta < 0.5 { 1.0 - theta } else { theta };
    (3.0 * (2.0 - m) + 2.0 * m * s) / (4.0 * m * k)
}

/// Decay of the solution, the reference and their difference on the interior zone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapMeasurement {
    pub theta: f64,
    pub s: f64,
    pub m: f64,
    pub window: (f64, f64),
    pub solution: SlopeFit,
    pub reference: SlopeFit,
    pub difference: SlopeFit,
    pub predicted_gap: f64,
    /// `-(solution exponent + gap)` from the `m`-data estimate.
    pub predicted_difference_slope: f64,
    /// `solution slope - difference slope`.
    pub measured_gap: f64,
}

impl GapMeasurement {
    /// Difference steeper than the solution by at least `predicted_gap - slack`.
    pub fn holds(&self, slack: f64) -> bool {
        self.measured_gap >= self.predicted_gap - slack
    }

    /// `t, solution, reference, difference` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,solution,reference,difference\n");
        for (k, t) in self.solution.times.iter().enumerate() {
            out.push_str(&format!(
                "{t:.6e},{:.10e},{:.10e},{:.10e}\n",
                self.solution.values[k], self.reference.values[k], self.difference.values[k]
            ));
        }
        out
    }
}

/// Radial grid on the interior zone: composite panels from `r_min` to `ε`.
pub fn interior_grid<T: Real>(params: &ModelParams<T>, r_min: T) -> QuadratureGrid<T> {
    QuadratureGrid::composite(r_min, params.epsilon, 9, 16, 8, 16)
}

struct Shell<T> {
    r: T,
    weight: T,
    /// `Σ_dirs w W₀ W₀*`.
    gram: CMat6<T>,
    l: CMat6<T>,
    h: CMat6<T>,
}

fn shells<T: Real>(
    reference: &ReferenceSystem<T>,
    u0: &DataProfile<T>,
    u1: &DataProfile<T>,
    s: f64,
    grid: &QuadratureGrid<T>,
) -> Result<Vec<Shell<T>>> {
    let params = &reference.params;
    let zones = params.zones();
    let norm = T::one() / (T::TAU() * T::TAU() * T::TAU());
    let s2 = lit::<T>(2.0 * s);
    grid.radial_nodes
        .par_iter()
        .zip(grid.radial_weights.par_iter())
        .filter(|(&r, _)| r > T::zero() && zones.chi_int(r) > T::zero())
        .map(|(&r, &wr)| {
            let (l, h) = reference.multipliers(r)?;
            let mut gram = linalg::zeros();
            for (dir, &wd) in grid.sphere_dirs.iter().zip(&grid.sphere_weights) {
                let state = mode_from_profiles(u0, u1, dir.map(|d| d * r));
                let w = micro_energy(params, &state)?.w;
                for i in 0..6 {
                    for j in 0..6 {
                        gram[i][j] = gram[i][j] + w[i] * w[j].conj() * wd;
                    }
                }
            }
            let chi = zones.chi_int(r);
            Ok(Shell {
                r,
                weight: wr * r * r * norm * chi * chi * pow_nonneg(r, s2),
                gram,
                l,
                h,
            })
        })
        .collect()
}

/// `tr(X G X*)`.
fn quad_form<T: Real>(x: &CMat6<T>, g: &CMat6<T>) -> T {
    let xg = linalg::mul(x, g);
    let mut acc = T::zero();
    for i in 0..6 {
        for j in 0..6 {
            acc = acc + (xg[i][j] * x[i][j].conj()).re;
        }
    }
    acc
}

fn diag_exp<T: Real>(mu: &CVec6<T>, t: T) -> CMat6<T> {
    let mut d = linalg::zeros();
    for l in 0..6 {
        d[l][l] = (-mu[l] * t).exp();
    }
    d
}

/// Evolves `W` exactly and `W̃` by the reference system, integrates the
/// `χ_int`-localized `Ḣ^s` norms of `W`, `L W̃` and `W - L W̃` over the
/// interior-zone grid, and fits their slopes on `window`.
#[allow(clippy::too_many_arguments)]
pub fn gap_decay<T: Real>(
    reference: &ReferenceSystem<T>,
    u0: &DataProfile<T>,
    u1: &DataProfile<T>,
    s: f64,
    m: f64,
    window: (f64, f64),
    samples: usize,
    grid: &QuadratureGrid<T>,
) -> Result<GapMeasurement> {
    if u0.is_zero() && u1.is_zero() {
        return invalid("zero data: the norms vanish identically");
    }
    u0.validate()?;
    u1.validate()?;
    let params = &reference.params;
    let sh = shells(reference, u0, u1, s, grid)?;
    let times = log_times(window.0, window.1, samples);
    let rows: Vec<[f64; 3]> = times
        .iter()
        .map(|&t| {
            let tt = lit::<T>(t);
            let parts: Vec<[T; 3]> = sh
                .par_iter()
                .map(|c| {
                    let e = micro_propagator(params, c.r, tt);
                    let d = diag_exp(&reference.mu_tilde(c.r), tt);
                    let rec = linalg::mul(&c.l, &linalg::mul(&d, &c.h));
                    let diff = linalg::add(&e, &linalg::scale(&rec, creal(-T::one())));
                    [
                        quad_form(&e, &c.gram) * c.weight,
                        quad_form(&rec, &c.gram) * c.weight,
                        quad_form(&diff, &c.gram) * c.weight,
                    ]
                })
                .collect();
            let mut out = [0.0; 3];
            for (k, o) in out.iter_mut().enumerate() {
                let col: Vec<T> = parts.iter().map(|p| p[k]).collect();
                *o = to_f64(pairwise_sum(&col).max(T::zero()).sqrt());
            }
            out
        })
        .collect();
    let col = |k: usize| -> Vec<f64> { rows.iter().map(|r| r[k]).collect() };
    let solution = fit_series(&times, &col(0))?;
    let reference_fit = fit_series(&times, &col(1))?;
    let difference = fit_series(&times, &col(2))?;
    let theta = to_f64(params.theta);
    let gap = predicted_gap(theta);
    Ok(GapMeasurement {
        theta,
        s,
        m,
        window,
        measured_gap: solution.slope - difference.slope,
        solution,
        reference: reference_fit,
        difference,
        predicted_gap: gap,
        predicted_difference_slope: -(predicted_solution_exponent(theta, m, s) + gap),
    })
}

/// Decay fits of the two halves of the reference solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoubleDiffusion {
    /// `W̃₁..₃`, governed by `e^{-c|ξ|^{2-2θ}t}`.
    pub heat_block: SlopeFit,
    /// `W̃₄..₆`, governed by `e^{-|ξ|^{2θ}t}`.
    pub damped_block: SlopeFit,
    /// `-(3/4)·2/(2-2θ)` and `-(3/4)·2/(2θ)` for data with `W₀(0) ≠ 0`.
    pub expected: (f64, f64),
}

/// Fits the L² decay of each block of `χ_int W̃` separately.
pub fn double_diffusion_split<T: Real>(
    reference: &ReferenceSystem<T>,
    u0: &DataProfile<T>,
    u1: &DataProfile<T>,
    window: (f64, f64),
    samples: usize,
    grid: &QuadratureGrid<T>,
) -> Result<DoubleDiffusion> {
    if reference.regime != ReferenceRegime::DoubleDiffusion {
        return invalid("double diffusion requires theta in (0, 1/2)");
    }
    if u0.is_zero() && u1.is_zero() {
        return invalid("zero data: the norms vanish identically");
    }
    let sh = shells(reference, u0, u1, 0.0, grid)?;
    let times = log_times(window.0, window.1, samples);
    let mut blocks = [Vec::new(), Vec::new()];
    for &t in &times {
        let tt = lit::<T>(t);
        let parts: Vec<[T; 2]> = sh
            .par_iter()
            .map(|c| {
                let x = linalg::mul(&diag_exp(&reference.mu_tilde(c.r), tt), &c.h);
                let xg = linalg::mul(&x, &c.gram);
                let mut acc = [T::zero(); 2];
                for i in 0..6 {
                    for j in 0..6 {
                        acc[i / 3] = acc[i / 3] + (xg[i][j] * x[i][j].conj()).re;
                    }
                }
                acc.map(|v| v * c.weight)
            })
            .collect();
        for (k, b) in blocks.iter_mut().enumerate() {
            let col: Vec<T> = parts.iter().map(|p| p[k]).collect();
            b.push(to_f64(pairwise_sum(&col).max(T::zero()).sqrt()));
        }
    }
    let th = to_f64(reference.params.theta);
    Ok(DoubleDiffusion {
        heat_block: fit_series(&times, &blocks[0])?,
        damped_block: fit_series(&times, &blocks[1])?,
        expected: (-0.75 * 2.0 / (2.0 - 2.0 * th), -0.75 * 2.0 / (2.0 * th)),
    })
}
