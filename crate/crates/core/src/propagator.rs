//! Exact per-mode evolution, micro-energies and spectral norm quadrature.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::CVec6;
use crate::model::{dot, DataProfile, ModelParams, Zone};
use crate::scalar::{creal, czero, imag_unit, lit, pairwise_sum, to_f64, Real};
use crate::symbol::{decoupled_frame, linear_fit, roots_from_coefficients};

pub type CVec3<T> = [Complex<T>; 3];

/// Fourier data of one mode: `û`, `û_t` at frequency `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState<T> {
    pub u_hat: CVec3<T>,
    pub ut_hat: CVec3<T>,
    pub xi: [T; 3],
}

fn cdot<T: Real>(eta: [T; 3], v: &CVec3<T>) -> Complex<T> {
    v[0] * eta[0] + v[1] * eta[1] + v[2] * eta[2]
}

fn hnorm2<T: Real>(v: &CVec3<T>) -> T {
    v.iter().fold(T::zero(), |s, z| s + z.norm_sqr())
}

fn split_vec<T: Real>(eta: Option<[T; 3]>, v: &CVec3<T>) -> (CVec3<T>, CVec3<T>) {
    match eta {
        None => ([czero(); 3], *v),
        Some(eta) => {
            let p = cdot(eta, v);
            let long = [p * eta[0], p * eta[1], p * eta[2]];
            let tr = [v[0] - long[0], v[1] - long[1], v[2] - long[2]];
            (long, tr)
        }
    }
}

impl<T: Real> ModeState<T> {
    pub fn new(u_hat: CVec3<T>, ut_hat: CVec3<T>, xi: [T; 3]) -> Self {
        Self { u_hat, ut_hat, xi }
    }

    pub fn xi_norm(&self) -> T {
        let big = self.xi.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        if big.is_zero() || !big.is_finite() {
            return big;
        }
        let s = self.xi.map(|x| x / big);
        big * dot(s, s).sqrt()
    }

    /// `ξ/|ξ|`, or `None` at the origin.
    pub fn eta(&self) -> Option<[T; 3]> {
        let r = self.xi_norm();
        if r.is_zero() {
            None
        } else {
            Some(self.xi.map(|x| x / r))
        }
    }

    /// `((η·û)η, û - (η·û)η)`; at `ξ = 0` everything counts as transverse.
    pub fn split(&self) -> (CVec3<T>, CVec3<T>) {
        split_vec(self.eta(), &self.u_hat)
    }

    /// `E_pha = |û_t|² + a²|ξ|²|û|² + (b² - a²)|ξ·û|²`.
    pub fn e_pha(&self, params: &ModelParams<T>) -> T {
        let r2 = dot(self.xi, self.xi);
        let xu = cdot(self.xi, &self.u_hat);
        hnorm2(&self.ut_hat) + params.a2 * r2 * hnorm2(&self.u_hat) + (params.b2 - params.a2) * xu.norm_sqr()
    }

    /// `E_mid = ½ Σ_k (|v_t⁽ᵏ⁾|² + ϖ_k|ξ|²|v⁽ᵏ⁾|²)` in the decoupled frame.
    pub fn e_mid(&self, params: &ModelParams<T>) -> T {
        let r2 = dot(self.xi, self.xi);
        let (v, vt) = self.decoupled();
        let w = [params.a2, params.a2, params.b2];
        let s = (0..3).fold(T::zero(), |s, k| s + vt[k].norm_sqr() + w[k] * r2 * v[k].norm_sqr());
        s * lit(0.5)
    }

    /// `Σ_k Re(v̄⁽ᵏ⁾ v_t⁽ᵏ⁾)`, frame independent.
    pub fn cross_term(&self) -> T {
        (0..3).fold(T::zero(), |s, k| s + (self.u_hat[k].conj() * self.ut_hat[k]).re)
    }

    /// Coordinates `(v, v_t)` in the frame `(e₁, e₂, η)`.
    pub fn decoupled(&self) -> (CVec3<T>, CVec3<T>) {
        let frame = match self.eta() {
            Some(eta) => decoupled_frame(eta),
            None => [
                [T::one(), T::zero(), T::zero()],
                [T::zero(), T::one(), T::zero()],
                [T::zero(), T::zero(), T::one()],
            ],
        };
        let v = frame.map(|f| cdot(f, &self.u_hat));
        let vt = frame.map(|f| cdot(f, &self.ut_hat));
        (v, vt)
    }
}

/// Linear map `(v₀, v₁) ↦ (v(t), v_t(t))` for one scalar branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPropagator<T> {
    pub v_from_v0: Complex<T>,
    pub v_from_v1: Complex<T>,
    pub vt_from_v0: Complex<T>,
    pub vt_from_v1: Complex<T>,
}

impl<T: Real> BranchPropagator<T> {
    /// Solves `v'' + q v' + c v = 0`.
    ///
    /// Two-root formula in general, confluent formula `e^{-μt}((1+μt)v₀ + t v₁)`
    /// when the roots coincide. With `c = 0` this reduces to the zero-mode
    /// solutions `v₀ + t v₁` (`q = 0`) and `v₀ + (1 - e^{-t}) v₁` (`q = 1`).
    pub fn new(q: T, c: T, t: T) -> Self {
        let (mp, mm, degenerate) = roots_from_coefficients(q, c);
        let tc = creal(t);
        let one = creal(T::one());
        if degenerate {
            let mu = (mp + mm) * lit::<T>(0.5);
            let e = (-mu * tc).exp();
            Self {
                v_from_v0: e * (one + mu * tc),
                v_from_v1: e * tc,
                vt_from_v0: -e * mu * mu * tc,
                vt_from_v1: e * (one - mu * tc),
            }
        } else {
            let d = mp - mm;
            let em = (-mm * tc).exp();
            let ep = (-mp * tc).exp();
            Self {
                v_from_v0: (mp * em - mm * ep) / d,
                v_from_v1: (em - ep) / d,
                vt_from_v0: (mm * mp * (ep - em)) / d,
                vt_from_v1: (mp * ep - mm * em) / d,
            }
        }
    }

    pub fn for_branch(params: &ModelParams<T>, speed2: T, xi_norm: T, t: T) -> Self {
        Self::new(params.damping(xi_norm), speed2 * xi_norm * xi_norm, t)
    }

    fn apply(&self, v0: &CVec3<T>, v1: &CVec3<T>) -> (CVec3<T>, CVec3<T>) {
        let mut v = [czero(); 3];
        let mut vt = [czero(); 3];
        for i in 0..3 {
            v[i] = self.v_from_v0 * v0[i] + self.v_from_v1 * v1[i];
            vt[i] = self.vt_from_v0 * v0[i] + self.vt_from_v1 * v1[i];
        }
        (v, vt)
    }
}

/// Exact evolution of one Fourier mode to time `t`.
pub fn evolve_mode<T: Real>(params: &ModelParams<T>, state0: &ModeState<T>, t: T) -> ModeState<T> {
    let q = params.damping(state0.xi_norm());
    evolve_mode_with_damping(params, state0, t, q)
}

/// As [`evolve_mode`] with the damping symbol `|ξ|^{2θ}` replaced by `q`.
pub fn evolve_mode_with_damping<T: Real>(params: &ModelParams<T>, state0: &ModeState<T>, t: T, q: T) -> ModeState<T> {
    if t.is_zero() {
        return *state0;
    }
    let r2 = dot(state0.xi, state0.xi);
    let eta = state0.eta();
    let (l0, t0) = split_vec(eta, &state0.u_hat);
    let (l1, t1) = split_vec(eta, &state0.ut_hat);
    let pb = BranchPropagator::new(q, params.b2 * r2, t);
    let pa = BranchPropagator::new(q, params.a2 * r2, t);
    let (lv, lvt) = pb.apply(&l0, &l1);
    let (tv, tvt) = pa.apply(&t0, &t1);
    let mut out = *state0;
    for i in 0..3 {
        out.u_hat[i] = lv[i] + tv[i];
        out.ut_hat[i] = lvt[i] + tvt[i];
    }
    out
}

/// Micro-energy `W = (D_t v + A^{1/2} v, D_t v - A^{1/2} v)`, `D_t = -i∂_t`,
/// in the frame of [`decoupled_frame`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroEnergy<T> {
    pub w: CVec6<T>,
    pub xi: [T; 3],
}

fn sqrt_diag<T: Real>(params: &ModelParams<T>, r: T) -> [T; 3] {
    [params.a() * r, params.a() * r, params.b() * r]
}

pub fn micro_energy<T: Real>(params: &ModelParams<T>, state: &ModeState<T>) -> Result<MicroEnergy<T>> {
    let r = state.xi_norm();
    if r.is_zero() {
        return invalid("micro_energy is undefined at xi = 0");
    }
    let (v, vt) = state.decoupled();
    let s = sqrt_diag(params, r);
    let mi = -imag_unit::<T>();
    let mut w = [czero(); 6];
    for k in 0..3 {
        let dv = mi * vt[k];
        w[k] = dv + v[k] * s[k];
        w[k + 3] = dv - v[k] * s[k];
    }
    Ok(MicroEnergy { w, xi: state.xi })
}

impl<T: Real> MicroEnergy<T> {
    /// Inverse of [`micro_energy`].
    pub fn reconstruct(&self, params: &ModelParams<T>) -> Result<ModeState<T>> {
        let r = dot(self.xi, self.xi).sqrt();
        if r.is_zero() {
            return invalid("micro_energy is undefined at xi = 0");
        }
        let frame = decoupled_frame(self.xi.map(|x| x / r));
        let s = sqrt_diag(params, r);
        let i = imag_unit::<T>();
        let mut u = [czero(); 3];
        let mut ut = [czero(); 3];
        for k in 0..3 {
            let v = (self.w[k] - self.w[k + 3]) / creal(lit::<T>(2.0) * s[k]);
            let vt = i * (self.w[k] + self.w[k + 3]) * lit::<T>(0.5);
            for j in 0..3 {
                u[j] = u[j] + v * frame[k][j];
                ut[j] = ut[j] + vt * frame[k][j];
            }
        }
        Ok(ModeState::new(u, ut, self.xi))
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let nf = lit::<T>(n as f64);
    for i in 0..n.div_ceil(2) {
        let mut z = (T::PI() * (lit::<T>(i as f64) + lit(0.75)) / (nf + lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (mut p0, mut p1) = (T::one(), T::zero());
            for j in 0..n {
                let jf = lit::<T>(j as f64);
                let p2 = p1;
                p1 = p0;
                p0 = ((lit::<T>(2.0) * jf + T::one()) * z * p1 - jf * p2) / (jf + T::one());
            }
            dp = nf * (z * p0 - p1) / (z * z - T::one());
            let dz = p0 / dp;
            z = z - dz;
            if dz.abs() <= T::epsilon() * lit(4.0) {
                break;
            }
        }
        let wt = lit::<T>(2.0) / ((T::one() - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wt;
        w[n - 1 - i] = wt;
    }
    (x, w)
}

/// Radial and spherical quadrature for integrals over ℝ³ in polar form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid<T> {
    pub radial_nodes: Vec<T>,
    pub radial_weights: Vec<T>,
    pub sphere_dirs: Vec<[T; 3]>,
    pub sphere_weights: Vec<T>,
    pub radius: T,
    pub rule: RadialRule,
    pub sphere_shape: (usize, usize),
}

/// How the radial nodes were laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RadialRule {
    Gauss {
        n: usize,
    },
    Composite {
        r_min: f64,
        panels_per_decade: usize,
        per_panel: usize,
    },
}

fn sphere<T: Real>(n_polar: usize, n_azimuth: usize) -> (Vec<[T; 3]>, Vec<T>) {
    let (cx, cw) = gauss_legendre::<T>(n_polar);
    let dphi = T::TAU() / lit(n_azimuth as f64);
    let mut dirs = Vec::with_capacity(n_polar * n_azimuth);
    let mut wts = Vec::with_capacity(n_polar * n_azimuth);
    for (c, w) in cx.iter().zip(&cw) {
        let s = (T::one() - *c * *c).sqrt();
        for j in 0..n_azimuth {
            let phi = dphi * (lit::<T>(j as f64) + lit(0.5));
            dirs.push([s * phi.cos(), s * phi.sin(), *c]);
            wts.push(*w * dphi);
        }
    }
    (dirs, wts)
}

impl<T: Real> QuadratureGrid<T> {
    /// `n_r` Gauss-Legendre nodes on `[0, R]` and a `n_polar × n_azimuth` sphere grid.
    pub fn gauss(n_r: usize, radius: T, n_polar: usize, n_azimuth: usize) -> Self {
        let (x, w) = gauss_legendre::<T>(n_r);
        let h = radius * lit(0.5);
        let (sphere_dirs, sphere_weights) = sphere(n_polar, n_azimuth);
        Self {
            radial_nodes: x.iter().map(|&x| h * (x + T::one())).collect(),
            radial_weights: w.iter().map(|&w| h * w).collect(),
            sphere_dirs,
            sphere_weights,
            radius,
            rule: RadialRule::Gauss { n: n_r },
            sphere_shape: (n_polar, n_azimuth),
        }
    }

    /// Default grid: 512 radial nodes, 24 × 48 sphere.
    pub fn default_for(radius: T) -> Self {
        Self::gauss(512, radius, 24, 48)
    }

    /// Panels `[0, r_min]` then geometric panels up to `R`, each with `per_panel`
    /// Gauss nodes. Resolves features at `|ξ| ~ r_min` that a single rule misses.
    pub fn composite(
        r_min: T,
        radius: T,
        panels_per_decade: usize,
        per_panel: usize,
        n_polar: usize,
        n_azimuth: usize,
    ) -> Self {
        let (x, w) = gauss_legendre::<T>(per_panel);
        let decades = to_f64((radius / r_min).log10()).max(0.0);
        let panels = ((decades * panels_per_decade as f64).ceil() as usize).max(1);
        let mut edges = vec![T::zero(), r_min];
        for k in 1..=panels {
            let f = lit::<T>(k as f64 / panels as f64);
            edges.push(r_min * (radius / r_min).powf(f));
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for e in edges.windows(2) {
            let h = (e[1] - e[0]) * lit(0.5);
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(e[0] + h * (*xi + T::one()));
                weights.push(h * *wi);
            }
        }
        let (sphere_dirs, sphere_weights) = sphere(n_polar, n_azimuth);
        Self {
            radial_nodes: nodes,
            radial_weights: weights,
            sphere_dirs,
            sphere_weights,
            radius,
            rule: RadialRule::Composite {
                r_min: to_f64(r_min),
                panels_per_decade,
                per_panel,
            },
            sphere_shape: (n_polar, n_azimuth),
        }
    }

    /// Same layout with twice the radial nodes (for convergence checks).
    pub fn refined(&self) -> Self {
        let (np, na) = self.sphere_shape;
        match self.rule {
            RadialRule::Gauss { n } => Self::gauss(2 * n, self.radius, np, na),
            RadialRule::Composite {
                r_min,
                panels_per_decade,
                per_panel,
            } => Self::composite(lit(r_min), self.radius, panels_per_decade, 2 * per_panel, np, na),
        }
    }
}

/// Which norm of the solution to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "s")]
pub enum NormKind {
    L2,
    Hs(f64),
    DtL2,
    DtHs(f64),
}

impl NormKind {
    fn order(self) -> f64 {
        match self {
            Self::L2 | Self::DtL2 => 0.0,
            Self::Hs(s) | Self::DtHs(s) => s,
        }
    }

    fn is_dt(self) -> bool {
        matches!(self, Self::DtL2 | Self::DtHs(_))
    }
}

/// Angular moments of the data on one radial shell, per branch:
/// `⟨|x₀|²⟩, ⟨|x₁|²⟩, ⟨x₀ x̄₁⟩` (`x₀` from `u₀`, `x₁` from `u₁`).
#[derive(Debug, Clone, Copy)]
struct ShellMoments<T> {
    r: T,
    weight: T,
    long: (T, T, Complex<T>),
    trans: (T, T, Complex<T>),
}

/// Spectral quadrature of norms of the exact solution for given data.
#[derive(Debug, Clone)]
pub struct NormIntegrator<T> {
    params: ModelParams<T>,
    shells: Vec<ShellMoments<T>>,
}

fn add_moments<T: Real>(m: &mut (T, T, Complex<T>), w: T, x0: &CVec3<T>, x1: &CVec3<T>) {
    m.0 = m.0 + w * hnorm2(x0);
    m.1 = m.1 + w * hnorm2(x1);
    let c = (0..3).fold(czero(), |s, i| s + x0[i] * x1[i].conj());
    m.2 = m.2 + c * w;
}

impl<T: Real> NormIntegrator<T> {
    /// Precomputes shell moments of `(û₀, û₁)`; fails if the profiles carry
    /// more than `1e-10` of their mass beyond the grid radius.
    pub fn new(
        params: &ModelParams<T>,
        u0: &DataProfile<T>,
        u1: &DataProfile<T>,
        grid: &QuadratureGrid<T>,
        max_order: f64,
    ) -> Result<Self> {
        u0.validate()?;
        u1.validate()?;
        let s = lit::<T>(max_order + 1.0);
        for p in [u0, u1] {
            let tail = p.tail_fraction(grid.radius, s);
            if tail > 1e-10 {
                return Err(Error::Validation(format!(
                    "spectral tail beyond R = {} is {tail:.3e} > 1e-10; increase the quadrature radius",
                    grid.radius
                )));
            }
        }
        let norm = T::one() / (T::TAU() * T::TAU() * T::TAU());
        let shells: Vec<ShellMoments<T>> = grid
            .radial_nodes
            .par_iter()
            .zip(grid.radial_weights.par_iter())
            .map(|(&r, &wr)| {
                let mut long = (T::zero(), T::zero(), czero());
                let mut trans = long;
                for (dir, &wd) in grid.sphere_dirs.iter().zip(&grid.sphere_weights) {
                    let xi = dir.map(|d| d * r);
                    let a0 = u0.fourier(xi);
                    let a1 = u1.fourier(xi);
                    let (l0, t0) = split_vec(Some(*dir), &a0);
                    let (l1, t1) = split_vec(Some(*dir), &a1);
                    add_moments(&mut long, wd, &l0, &l1);
                    add_moments(&mut trans, wd, &t0, &t1);
                }
                ShellMoments {
                    r,
                    weight: wr * r * r * norm,
                    long,
                    trans,
                }
            })
            .collect();
        Ok(Self {
            params: *params,
            shells,
        })
    }

    /// Norm of the solution at time `t`.
    pub fn norm(&self, t: T, kind: NormKind) -> T {
        let s2 = lit::<T>(2.0 * kind.order());
        let dt = kind.is_dt();
        let terms: Vec<T> = self
            .shells
            .par_iter()
            .map(|sh| {
                let mut acc = T::zero();
                for (y2, m) in [(self.params.b2, &sh.long), (self.params.a2, &sh.trans)] {
                    let p = BranchPropagator::for_branch(&self.params, y2, sh.r, t);
                    let (c0, c1) = if dt {
                        (p.vt_from_v0, p.vt_from_v1)
                    } else {
                        (p.v_from_v0, p.v_from_v1)
                    };
                    acc = acc + c0.norm_sqr() * m.0 + c1.norm_sqr() * m.1 + lit::<T>(2.0) * (c0 * c1.conj() * m.2).re;
                }
                let pw = crate::scalar::pow_nonneg(sh.r, s2);
                acc * pw * sh.weight
            })
            .collect();
        pairwise_sum(&terms).max(T::zero()).sqrt()
    }

    pub fn snapshot(&self, t: T, kinds: &[NormKind]) -> EnergySnapshot {
        EnergySnapshot {
            t: to_f64(t),
            norms: kinds.iter().map(|&k| (k, to_f64(self.norm(t, k)))).collect(),
        }
    }
}

/// Reported norms at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergySnapshot {
    pub t: f64,
    pub norms: Vec<(NormKind, f64)>,
}

/// One-shot [`NormIntegrator::norm`].
pub fn norm_quadrature<T: Real>(
    params: &ModelParams<T>,
    data: (&DataProfile<T>, &DataProfile<T>),
    t: T,
    kind: NormKind,
    grid: &QuadratureGrid<T>,
) -> Result<T> {
    let integ = NormIntegrator::new(params, data.0, data.1, grid, kind.order())?;
    Ok(integ.norm(t, kind))
}

/// Constants and findings of the middle-zone Lyapunov check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `F_mid(0)`.
    pub f0: f64,
    /// `max_t (∂_t F_mid + F_mid / c₃)`; nonpositive when the estimate holds.
    pub max_violation: f64,
    /// `max_t (c₂ E_mid - F_mid)`.
    pub lower_sandwich: f64,
    /// `max_t (F_mid - c₃ E_mid)`.
    pub upper_sandwich: f64,
    /// `max_t E_mid(t) / (3 e^{-t/c₃} E_mid(0))`.
    pub gronwall_ratio: f64,
}

impl LyapunovReport {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.max_violation <= rel_tol * self.f0
            && self.lower_sandwich <= rel_tol * self.f0
            && self.upper_sandwich <= rel_tol * self.f0
    }
}

/// `(c₀, c₁, c₂, c₃)` of the middle-zone Lyapunov function.
pub fn lyapunov_constants<T: Real>(params: &ModelParams<T>) -> (T, T, T, T) {
    let eps = params.epsilon;
    let two = lit::<T>(2.0);
    let th = params.theta;
    let kappa = (lit::<T>(4.0) * th - two).abs();
    let c0 = T::one() + eps.powf(-kappa) / (two * params.a2);
    let c2 = T::one() / (params.a2 * eps * eps);
    let c1 = (two * eps.powf(two * th) / (two * c0 + T::one())).min(T::one() / (two * c2));
    let c3 = c2 + T::one() / c1;
    (c0, c1, c2, c3)
}

fn fastest_rate<T: Real>(params: &ModelParams<T>, r: T) -> T {
    let q = params.damping(r);
    let (mp, _, _) = roots_from_coefficients(q, params.b2 * r * r);
    mp.re.max(q * lit(0.5)).max(lit(1e-12))
}

pub fn verify_lyapunov_mid<T: Real>(
    params: &ModelParams<T>,
    state0: &ModeState<T>,
    horizon: T,
) -> Result<LyapunovReport> {
    let r = state0.xi_norm();
    let eps = params.epsilon;
    if r < eps || r > eps.recip() {
        return invalid("verify_lyapunov_mid needs |xi| in [epsilon, 1/epsilon]");
    }
    if !(horizon > T::zero()) {
        return invalid("horizon must be positive");
    }
    let (c0, c1, c2, c3) = lyapunov_constants(params);
    if !(c1 > T::zero() && c3.is_finite()) {
        return Err(Error::Numerical(format!(
            "Lyapunov constants out of range at epsilon = {}",
            to_f64(eps)
        )));
    }
    let f = |s: &ModeState<T>| s.e_mid(params) / c1 + s.cross_term();
    let h = lit::<T>(1e-4) / fastest_rate(params, r);
    let n = 1000;
    let e0 = state0.e_mid(params);
    let f0 = f(state0);
    let mut rep = LyapunovReport {
        c0: to_f64(c0),
        c1: to_f64(c1),
        c2: to_f64(c2),
        c3: to_f64(c3),
        f0: to_f64(f0),
        max_violation: f64::NEG_INFINITY,
        lower_sandwich: f64::NEG_INFINITY,
        upper_sandwich: f64::NEG_INFINITY,
        gronwall_ratio: 0.0,
    };
    if e0.is_zero() {
        rep.max_violation = 0.0;
        rep.lower_sandwich = 0.0;
        rep.upper_sandwich = 0.0;
        return Ok(rep);
    }
    for k in 0..n {
        let t = horizon * lit(k as f64 / (n - 1) as f64);
        let tc = t.max(h);
        let s = evolve_mode(params, state0, t);
        let fp = f(&evolve_mode(params, state0, tc + h));
        let fm = f(&evolve_mode(params, state0, tc - h));
        let fc = f(&evolve_mode(params, state0, tc));
        let df = (fp - fm) / (lit::<T>(2.0) * h);
        rep.max_violation = rep.max_violation.max(to_f64(df + fc / c3));
        let e = s.e_mid(params);
        let ft = f(&s);
        rep.lower_sandwich = rep.lower_sandwich.max(to_f64(c2 * e - ft));
        rep.upper_sandwich = rep.upper_sandwich.max(to_f64(ft - c3 * e));
        let bound = lit::<T>(3.0) * (-t / c3).exp() * e0;
        rep.gronwall_ratio = rep.gronwall_ratio.max(to_f64(e / bound));
    }
    Ok(rep)
}

/// Per-mode decay of `E_pha` against the explicit rates of the energy lemma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EphaReport {
    pub zone: Zone,
    /// `2 max{1-θ, θ}`.
    pub gamma: f64,
    /// `(2/3)|ξ|^γ` on the int zone, `2/3` elsewhere.
    pub proof_rate: f64,
    /// Least-squares decay rate of `ln E_pha` over the second half of the horizon.
    pub fitted_rate: f64,
    /// Exact asymptotic rate `2 min Re μ`.
    pub exact_rate: f64,
    /// `max_t E_pha(t) / (3 e^{-proof_rate t} E_pha(0))`.
    pub bound_ratio: f64,
}

impl EphaReport {
    pub fn meets_proof_rate(&self) -> bool {
        self.bound_ratio <= 1.0 + 1e-9
    }
}

pub fn verify_epha_decay<T: Real>(params: &ModelParams<T>, state0: &ModeState<T>, horizon: T) -> Result<EphaReport> {
    if !(horizon > T::zero()) {
        return invalid("horizon must be positive");
    }
    let r = state0.xi_norm();
    let zone = params.zones().zone_of(r);
    let gamma = lit::<T>(2.0) * params.theta_max();
    let two_thirds = lit::<T>(2.0 / 3.0);
    let proof_rate = match zone {
        Zone::Int => two_thirds * r.powf(gamma),
        _ => two_thirds,
    };
    let q = params.damping(r);
    let exact_rate = [params.a2, params.b2]
        .iter()
        .map(|&y2| {
            let (p, m, _) = roots_from_coefficients(q, y2 * r * r);
            p.re.min(m.re)
        })
        .fold(T::infinity(), |a, b| a.min(b))
        * lit(2.0);
    let e0 = state0.e_pha(params);
    let n = 400;
    let mut pts = Vec::new();
    let mut ratio = 0.0f64;
    for k in 0..n {
        let t = horizon * lit(k as f64 / (n - 1) as f64);
        let e = evolve_mode(params, state0, t).e_pha(params);
        if e0 > T::zero() {
            let b = lit::<T>(3.0) * (-proof_rate * t).exp() * e0;
            ratio = ratio.max(to_f64(e / b));
        }
        if 2 * k >= n && e > T::zero() {
            pts.push((to_f64(t), to_f64(e.ln())));
        }
    }
    let fitted = if pts.len() >= 2 { -linear_fit(&pts).0 } else { f64::NAN };
    Ok(EphaReport {
        zone,
        gamma: to_f64(gamma),
        proof_rate: to_f64(proof_rate),
        fitted_rate: fitted,
        exact_rate: to_f64(exact_rate),
        bound_ratio: ratio,
    })
}

/// Integrates `∂_t W = G W` with classical RK4 (reference for closed forms).
pub fn rk4_linear<T: Real>(g: &crate::linalg::CMat6<T>, w0: &CVec6<T>, t: T, steps: usize) -> CVec6<T> {
    let h = creal(t / lit(steps as f64));
    let half = creal(lit::<T>(0.5));
    let f = |w: &CVec6<T>| crate::linalg::mul_vec(g, w);
    let axpy = |w: &CVec6<T>, k: &CVec6<T>, s: Complex<T>| -> CVec6<T> {
        let mut o = *w;
        for i in 0..6 {
            o[i] = o[i] + k[i] * s;
        }
        o
    };
    let mut w = *w0;
    for _ in 0..steps {
        let k1 = f(&w);
        let k2 = f(&axpy(&w, &k1, h * half));
        let k3 = f(&axpy(&w, &k2, h * half));
        let k4 = f(&axpy(&w, &k3, h));
        for i in 0..6 {
            w[i] = w[i] + h * (k1[i] + (k2[i] + k3[i]) * lit::<T>(2.0) + k4[i]) / creal(lit::<T>(6.0));
        }
    }
    w
}

/// Convenience for tests and the CLI: state built from data profiles at `ξ`.
pub fn mode_from_profiles<T: Real>(u0: &DataProfile<T>, u1: &DataProfile<T>, xi: [T; 3]) -> ModeState<T> {
    ModeState::new(u0.fourier(xi), u1.fourier(xi), xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_params;

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre::<f64>(8);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let i14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i14 - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_weights_sum() {
        let g = QuadratureGrid::<f64>::default_for(12.0);
        let s: f64 = g.sphere_weights.iter().sum();
        assert!((s - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn zero_mode_rules() {
        let p = make_params(1.0, 4.0, 0.5).unwrap();
        let one = Complex::new(1.0, 0.0);
        let s0 = ModeState::new([czero(); 3], [one, czero(), czero()], [0.0; 3]);
        let s = evolve_mode(&p, &s0, 2.5);
        assert!((s.u_hat[0] - Complex::new(2.5, 0.0)).norm() < 1e-15);
        let p = make_params(1.0, 4.0, 0.0).unwrap();
        let s = evolve_mode(&p, &s0, 2.0);
        assert!((s.u_hat[0].re - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        assert_eq!(evolve_mode(&p, &s0, 0.0), s0);
    }

    #[test]
    fn micro_energy_example() {
        let p = make_params(1.0, 4.0, 0.3).unwrap();
        let one = Complex::new(1.0, 0.0);
        let s = ModeState::new([czero(); 3], [one, czero(), czero()], [0.0, 0.0, 0.7]);
        let w = micro_energy(&p, &s).unwrap();
        let mi = Complex::new(0.0, -1.0);
        assert_eq!(w.w, [mi, czero(), czero(), mi, czero(), czero()]);
        assert!(micro_energy(&p, &ModeState::new([one; 3], [one; 3], [0.0; 3])).is_err());
    }
}
