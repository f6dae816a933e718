//! Pseudospectral solver for `U_tt - a²ΔU - (b²-a²)∇div U + (-Δ)^θ U_t = F(U)`
//! on the periodic box `[0, L)³`, `F(U) = (|U³|^{p₁}, |U¹|^{p₂}, |U²|^{p₃})`.
//!
//! Fields are stored as half spectra: `f(x) = Σ_k c_k e^{ik·x}` with
//! `k ∈ (2π/L)ℤ³`, rows `(kx, ky)` in FFT order and `kz ∈ 0..=N/2`. The
//! conjugate half is implied, so inverse transforms are real by construction.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::decay_lab::DEFAULT_SLACK;
use crate::error::{invalid, Error, Result};
use crate::exponents::{classify_and_g, ClassifyOptions, ExponentTriple, Regime};
use crate::model::{DataProfile, ModelParams};
use crate::propagator::BranchPropagator;
use crate::scalar::{czero, lit, pairwise_sum, pow_nonneg, to_f64, FftReal};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_DELTA: f64 = 1e-3;
pub const DEFAULT_N: usize = 64;
/// Default box length `64π`.
pub const DEFAULT_LENGTH: f64 = 64.0 * std::f64::consts::PI;
/// A weighted norm may grow at most by this factor over its `t = 1` value.
pub const BOUNDED_FACTOR: f64 = 3.0;
pub const CHECKPOINT_VERSION: u32 = 1;
/// Picard differences `d_n`, `n ≥ 3`, below this fraction of `d₂` are
/// round-off; likewise `d₂` against `d₁`.
pub const PICARD_FLOOR: f64 = 1e-12;

/// Norm families of the fixed-point space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonitorNorm {
    /// `‖U⁽ᵏ⁾‖_{L²}`.
    L2,
    /// `‖∇U⁽ᵏ⁾‖_{L²} + ‖U_t⁽ᵏ⁾‖_{L²}`.
    Energy,
}

/// Time weights `(1+t)^w` of the fixed-point norm, per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorWeights {
    pub l2: [f64; 3],
    pub energy: [f64; 3],
}

impl MonitorWeights {
    pub fn entries(&self) -> Vec<(usize, MonitorNorm, f64)> {
        let mut out = Vec::with_capacity(6);
        for k in 0..3 {
            out.push((k, MonitorNorm::L2, self.l2[k]));
            out.push((k, MonitorNorm::Energy, self.energy[k]));
        }
        out
    }
}

/// Weight exponents of the norm matching `(m, s, θ)`; `g` lowers component `k`.
///
/// Supported (`s = 0` throughout):
/// * `θ ∈ [1/2, 1]`, `m ∈ [1, 6/5)`: `(6-5m)/(4mθ) - g_k`, `(6-3m)/(4mθ) - g_k`;
/// * `θ ∈ [1/2, 1]`, `m ∈ [6/5, 3/2)`: `-1 + (6-3m)/(4mθ) - g_k`, `(6-3m)/(4mθ) - g_k`;
/// * `θ ∈ [0, 1/2)`, `m = 3/2`: `-1 + ρ₁ - g_k`, `ρ₁ - g_k`, `ρ₁ = (3-4θ)/(4(1-θ)) - slack`;
/// * `θ ∈ [0, 1/2)`, `m = 1`: `ρ₀ - g_k`, `ρ₁ - g_k` with
///   `ρ₀ = (3-4θ)/(4(1-θ)) - slack`, `ρ₁ = (5-4θ)/(4(1-θ)) - slack`.
///
/// The `ρ` are strict upper bounds, hence the slack of the decay lab.
pub fn monitor_weights(m: f64, s: f64, theta: f64, g: [f64; 3]) -> Result<MonitorWeights> {
    if s != 0.0 {
        return invalid(format!("no weighted monitor for s = {s}; only s = 0 is supported"));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return invalid("loss exponents must be finite");
    }
    let (w_l2, w_en) = if (0.5..=1.0).contains(&theta) && (1.0..1.2).contains(&m) {
        ((6.0 - 5.0 * m) / (4.0 * m * theta), (6.0 - 3.0 * m) / (4.0 * m * theta))
    } else if (0.5..=1.0).contains(&theta) && (1.2..1.5).contains(&m) {
        let r = (6.0 - 3.0 * m) / (4.0 * m * theta);
        (r - 1.0, r)
    } else if (0.0..0.5).contains(&theta) && m == 1.5 {
        let r1 = (3.0 - 4.0 * theta) / (4.0 * (1.0 - theta)) - DEFAULT_SLACK;
        (r1 - 1.0, r1)
    } else if (0.0..0.5).contains(&theta) && m == 1.0 {
        let r0 = (3.0 - 4.0 * theta) / (4.0 * (1.0 - theta)) - DEFAULT_SLACK;
        let r1 = (5.0 - 4.0 * theta) / (4.0 * (1.0 - theta)) - DEFAULT_SLACK;
        (r0, r1)
    } else {
        return invalid(format!("no weighted monitor for (m, theta) = ({m}, {theta})"));
    };
    Ok(MonitorWeights {
        l2: g.map(|gk| w_l2 - gk),
        energy: g.map(|gk| w_en - gk),
    })
}

/// Loss vector for `triple` from the exponent classification, zero when no
/// loss-of-decay regime applies to `(m, θ)`.
pub fn classified_loss(triple: &ExponentTriple, m: f64, theta: f64) -> Result<[f64; 3]> {
    match Regime::infer(m, 0.0, theta) {
        Some(regime) => Ok(classify_and_g(triple, m, 0.0, theta, regime, ClassifyOptions::default())?.g),
        None => Ok([0.0; 3]),
    }
}

/// Solver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: FftReal + Deserialize<'de>"))]
pub struct RunConfig<T> {
    pub triple: ExponentTriple,
    pub params: ModelParams<T>,
    /// Integrability index selecting the monitor weights.
    pub m: f64,
    /// Loss of decay per component, usually from [`classified_loss`].
    pub g: [f64; 3],
    /// Amplitude applied to the grid-L²-normalised data.
    pub delta: f64,
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub t_final: f64,
    pub u0: DataProfile<T>,
    pub u1: DataProfile<T>,
    /// `false` replaces `F` by zero.
    pub nonlinear: bool,
}

impl<T: FftReal> RunConfig<T> {
    /// Defaults: `δ = 10⁻³`, `N = 64`, `L = 64π`, `dt = 0.01`, `T = 100`,
    /// `u₀` a width-2 Gaussian along `(1,1,1)`, `u₁ = 0`, `g` classified.
    pub fn new(triple: ExponentTriple, params: ModelParams<T>, m: f64) -> Result<Self> {
        let g = classified_loss(&triple, m, to_f64(params.theta))?;
        let one = T::one();
        Ok(Self {
            triple,
            params,
            m,
            g,
            delta: DEFAULT_DELTA,
            n: DEFAULT_N,
            length: DEFAULT_LENGTH,
            dt: DEFAULT_DT,
            t_final: 100.0,
            u0: DataProfile::gaussian(one, lit(2.0), [one, one, one]),
            u1: DataProfile::zero(),
            nonlinear: true,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.triple.validate()?;
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return invalid("delta must be positive");
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return invalid("t_final must be positive");
        }
        if self.n < 16 || !self.n.is_power_of_two() {
            return invalid("n must be a power of two with n >= 16");
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return invalid("length must be positive");
        }
        if !(self.dt > 0.0 && self.dt <= self.t_final) {
            return invalid("dt must lie in (0, t_final]");
        }
        self.u0.validate()?;
        self.u1.validate()?;
        monitor_weights(self.m, 0.0, to_f64(self.params.theta), self.g).map(|_| ())
    }

    pub fn weights(&self) -> Result<MonitorWeights> {
        monitor_weights(self.m, 0.0, to_f64(self.params.theta), self.g)
    }

    /// `L / (2√b²)`: waves from the data reach the half-box by then.
    pub fn trust_horizon(&self) -> f64 {
        self.length / (2.0 * to_f64(self.params.b2).sqrt())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round().max(1.0) as usize
    }
}

/// Half spectra of `U` and `U_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    pub n: usize,
    pub length: f64,
    pub u: [Vec<Complex<T>>; 3],
    pub ut: [Vec<Complex<T>>; 3],
}

impl<T: FftReal> SpectralField<T> {
    pub fn zeros(n: usize, length: f64) -> Self {
        let len = n * n * (n / 2 + 1);
        let z = || vec![czero(); len];
        Self {
            n,
            length,
            u: [z(), z(), z()],
            ut: [z(), z(), z()],
        }
    }

    pub fn half(&self) -> usize {
        self.n / 2 + 1
    }

    /// Largest conjugate-symmetry defect on the self-conjugate planes
    /// `kz = 0` and `kz = N/2`, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let (n, h) = (self.n, self.half());
        let mut defect = 0.0f64;
        let mut scale = 0.0f64;
        for field in self.u.iter().chain(self.ut.iter()) {
            for z in field {
                scale = scale.max(to_f64(z.norm()));
            }
            for kz in [0, n / 2] {
                for i in 0..n {
                    for j in 0..n {
                        let a = field[(i * n + j) * h + kz];
                        let b = field[(((n - i) % n) * n + (n - j) % n) * h + kz];
                        defect = defect.max(to_f64((a - b.conj()).norm()));
                    }
                }
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }

    fn map2(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T> + Sync) -> Self {
        let g = |a: &Vec<Complex<T>>, b: &Vec<Complex<T>>| -> Vec<Complex<T>> {
            a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
        };
        Self {
            n: self.n,
            length: self.length,
            u: [0, 1, 2].map(|k| g(&self.u[k], &other.u[k])),
            ut: [0, 1, 2].map(|k| g(&self.ut[k], &other.ut[k])),
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.map2(other, |a, b| a - b)
    }
}

/// Raw norms of one snapshot: `[component][L², energy]`, plus the parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub l2: [f64; 3],
    pub grad: [f64; 3],
    pub dt: [f64; 3],
}

impl Norms {
    pub fn monitor(&self) -> [[f64; 2]; 3] {
        [0, 1, 2].map(|k| [self.l2[k], self.grad[k] + self.dt[k]])
    }

    fn is_finite(&self) -> bool {
        self.l2.iter().chain(&self.grad).chain(&self.dt).all(|x| x.is_finite())
    }

    /// `Σ_k (1+t)^{w_L²} ‖U⁽ᵏ⁾‖ + (1+t)^{w_E}(‖∇U⁽ᵏ⁾‖ + ‖U_t⁽ᵏ⁾‖)`.
    pub fn weighted_sum(&self, t: f64, w: &MonitorWeights) -> f64 {
        let m = self.monitor();
        (0..3).fold(0.0, |s, k| {
            s + (1.0 + t).powf(w.l2[k]) * m[k][0] + (1.0 + t).powf(w.energy[k]) * m[k][1]
        })
    }
}

struct Fft3<T: FftReal> {
    n: usize,
    r2c: Arc<dyn RealToComplex<T>>,
    c2r: Arc<dyn ComplexToReal<T>>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: FftReal> Fft3<T> {
    fn new(n: usize) -> Self {
        let mut rp = RealFftPlanner::<T>::new();
        let mut cp = FftPlanner::<T>::new();
        Self {
            n,
            r2c: rp.plan_fft_forward(n),
            c2r: rp.plan_fft_inverse(n),
            fwd: cp.plan_fft_forward(n),
            inv: cp.plan_fft_inverse(n),
        }
    }

    fn half(&self) -> usize {
        self.n / 2 + 1
    }

    /// Complex transforms along `ky` and `kx` of a half spectrum.
    fn xy(&self, spec: &mut [Complex<T>], inverse: bool) {
        let (n, h) = (self.n, self.half());
        let fft = if inverse { &self.inv } else { &self.fwd };
        spec.par_chunks_mut(n * h).for_each(|slab| {
            let mut buf = vec![czero(); n * h];
            for j in 0..n {
                for kz in 0..h {
                    buf[kz * n + j] = slab[j * h + kz];
                }
            }
            fft.process(&mut buf);
            for j in 0..n {
                for kz in 0..h {
                    slab[j * h + kz] = buf[kz * n + j];
                }
            }
        });
        let mut lines = vec![czero(); n * n * h];
        {
            let src: &[Complex<T>] = spec;
            lines.par_chunks_mut(n).enumerate().for_each(|(l, line)| {
                let (j, kz) = (l / h, l % h);
                for (i, z) in line.iter_mut().enumerate() {
                    *z = src[(i * n + j) * h + kz];
                }
            });
        }
        lines.par_chunks_mut(n * h).for_each(|block| fft.process(block));
        spec.par_chunks_mut(h).enumerate().for_each(|(row, out)| {
            let (i, j) = (row / n, row % n);
            for (kz, z) in out.iter_mut().enumerate() {
                *z = lines[(j * h + kz) * n + i];
            }
        });
    }

    /// Real grid values to coefficients `c_k`.
    fn forward(&self, real: &[T]) -> Vec<Complex<T>> {
        let (n, h) = (self.n, self.half());
        let mut spec = vec![czero(); n * n * h];
        let scale = T::one() / lit::<T>((n * n * n) as f64);
        spec.par_chunks_mut(h).zip(real.par_chunks(n)).for_each_init(
            || (vec![T::zero(); n], self.r2c.make_scratch_vec()),
            |(input, scratch), (out, row)| {
                input.copy_from_slice(row);
                self.r2c
                    .process_with_scratch(input, out, scratch)
                    .expect("buffer sizes match the plan");
                for z in out.iter_mut() {
                    *z = *z * scale;
                }
            },
        );
        self.xy(&mut spec, false);
        spec
    }

    /// Coefficients to real grid values.
    fn inverse(&self, spec: &[Complex<T>]) -> Vec<T> {
        let (n, h) = (self.n, self.half());
        let mut work = spec.to_vec();
        self.xy(&mut work, true);
        let mut real = vec![T::zero(); n * n * n];
        real.par_chunks_mut(n).zip(work.par_chunks_mut(h)).for_each_init(
            || self.c2r.make_scratch_vec(),
            |scratch, (out, row)| {
                row[0].im = T::zero();
                row[h - 1].im = T::zero();
                self.c2r
                    .process_with_scratch(row, out, scratch)
                    .expect("buffer sizes match the plan");
            },
        );
        real
    }
}

/// Per-mode geometry of the half spectrum.
struct ModeTable<T> {
    xi: Vec<[T; 3]>,
    r: Vec<T>,
    /// Multiplicity in Parseval sums: 1 on the self-conjugate planes, else 2.
    weight: Vec<T>,
    keep: Vec<bool>,
}

fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl<T: FftReal> ModeTable<T> {
    fn new(n: usize, length: f64) -> Self {
        let h = n / 2 + 1;
        let k0 = 2.0 * std::f64::consts::PI / length;
        // 2/3 rule: |k_j| < N/3 on every axis.
        let cut = ((n - 1) / 3) as i64;
        let len = n * n * h;
        let mut xi = Vec::with_capacity(len);
        let mut r = Vec::with_capacity(len);
        let mut weight = Vec::with_capacity(len);
        let mut keep = Vec::with_capacity(len);
        for i in 0..n {
            for j in 0..n {
                for kz in 0..h {
                    let k = [wavenumber(i, n), wavenumber(j, n), kz as i64];
                    let v = k.map(|x| lit::<T>(x as f64 * k0));
                    xi.push(v);
                    r.push((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
                    let self_conj = kz == 0 || kz == n / 2;
                    weight.push(if self_conj { T::one() } else { lit(2.0) });
                    keep.push(k.iter().all(|x| x.abs() <= cut));
                }
            }
        }
        Self { xi, r, weight, keep }
    }
}

/// Real parts of the branch maps `(v₀, v₁) ↦ (v, v_t)` over one step.
#[derive(Clone, Copy)]
struct Branch2<T> {
    vv0: T,
    vv1: T,
    tv0: T,
    tv1: T,
}

impl<T: FftReal> Branch2<T> {
    fn new(p: BranchPropagator<T>) -> Self {
        Self {
            vv0: p.v_from_v0.re,
            vv1: p.v_from_v1.re,
            tv0: p.vt_from_v0.re,
            tv1: p.vt_from_v1.re,
        }
    }
}

/// Exact linear flow over `dt` for every mode.
struct StepKernel<T> {
    dt: T,
    long: Vec<Branch2<T>>,
    trans: Vec<Branch2<T>>,
}

impl<T: FftReal> StepKernel<T> {
    fn new(params: &ModelParams<T>, modes: &ModeTable<T>, dt: T) -> Self {
        let make = |speed2: T| -> Vec<Branch2<T>> {
            modes
                .r
                .par_iter()
                .map(|&r| Branch2::new(BranchPropagator::for_branch(params, speed2, r, dt)))
                .collect()
        };
        Self {
            dt,
            long: make(params.b2),
            trans: make(params.a2),
        }
    }
}

/// Precomputed transforms, mode table and step kernel for one configuration.
pub struct Solver<T: FftReal> {
    pub config: RunConfig<T>,
    fft: Fft3<T>,
    modes: ModeTable<T>,
    kernel: StepKernel<T>,
}

impl<T: FftReal> Solver<T> {
    pub fn new(config: RunConfig<T>) -> Result<Self> {
        config.validate()?;
        let fft = Fft3::new(config.n);
        let modes = ModeTable::new(config.n, config.length);
        let kernel = StepKernel::new(&config.params, &modes, lit(config.dt));
        Ok(Self {
            config,
            fft,
            modes,
            kernel,
        })
    }

    pub fn dt(&self) -> f64 {
        to_f64(self.kernel.dt)
    }

    /// Box projection of `δ(u₀, u₁)`, normalised so the `u₀` part (or the `u₁`
    /// part if `u₀ = 0`) has unit grid L² norm before scaling by `δ`, then
    /// dealiased.
    pub fn initial_state(&self) -> Result<SpectralField<T>> {
        let c = &self.config;
        let vol = lit::<T>(c.length.powi(3));
        let mut state = SpectralField::zeros(c.n, c.length);
        for (profile, target) in [(&c.u0, &mut state.u), (&c.u1, &mut state.ut)] {
            if profile.is_zero() {
                continue;
            }
            let at0 = profile.fourier_scalar([T::zero(); 3]);
            if !at0.is_finite() {
                return invalid("profile must have a finite mean on the box");
            }
            for (idx, xi) in self.modes.xi.iter().enumerate() {
                if !self.modes.keep[idx] {
                    continue;
                }
                let v = profile.fourier(*xi);
                for k in 0..3 {
                    target[k][idx] = v[k] / vol;
                }
            }
        }
        let base = if c.u0.is_zero() { &state.ut } else { &state.u };
        let l2 = self.l2_sum(base).sqrt();
        if l2 > T::zero() {
            let s = lit::<T>(c.delta) / l2;
            for f in state.u.iter_mut().chain(state.ut.iter_mut()) {
                for z in f.iter_mut() {
                    *z = *z * s;
                }
            }
        }
        Ok(state)
    }

    fn l2_sum(&self, fields: &[Vec<Complex<T>>; 3]) -> T {
        let vol = lit::<T>(self.config.length.powi(3));
        let total: T = fields
            .iter()
            .map(|f| self.parseval(f, |_| T::one()))
            .fold(T::zero(), |a, b| a + b);
        total * vol
    }

    /// `Σ' weight(r) |c|²` with a fixed reduction order.
    fn parseval(&self, f: &[Complex<T>], weight: impl Fn(T) -> T + Sync) -> T {
        let h = self.config.n / 2 + 1;
        let partial: Vec<T> = f
            .par_chunks(h)
            .enumerate()
            .map(|(row, c)| {
                let base = row * h;
                c.iter().enumerate().fold(T::zero(), |s, (kz, z)| {
                    let idx = base + kz;
                    s + self.modes.weight[idx] * weight(self.modes.r[idx]) * z.norm_sqr()
                })
            })
            .collect();
        pairwise_sum(&partial)
    }

    pub fn norms(&self, state: &SpectralField<T>) -> Norms {
        let vol = self.config.length.powi(3);
        let f = |x: T| (vol * to_f64(x)).sqrt();
        Norms {
            l2: [0, 1, 2].map(|k| f(self.parseval(&state.u[k], |_| T::one()))),
            grad: [0, 1, 2].map(|k| f(self.parseval(&state.u[k], |r| r * r))),
            dt: [0, 1, 2].map(|k| f(self.parseval(&state.ut[k], |_| T::one()))),
        }
    }

    /// `S(dt)(u, u_t)`; `u = None` stands for zero.
    fn propagate(
        &self,
        u: Option<&[Vec<Complex<T>>; 3]>,
        ut: &[Vec<Complex<T>>; 3],
    ) -> ([Vec<Complex<T>>; 3], [Vec<Complex<T>>; 3]) {
        let len = ut[0].len();
        let z = || vec![czero(); len];
        let [mut u0, mut u1, mut u2] = [z(), z(), z()];
        let [mut t0, mut t1, mut t2] = [z(), z(), z()];
        (
            u0.par_iter_mut(),
            u1.par_iter_mut(),
            u2.par_iter_mut(),
            t0.par_iter_mut(),
            t1.par_iter_mut(),
            t2.par_iter_mut(),
        )
            .into_par_iter()
            .enumerate()
            .for_each(|(idx, (a0, a1, a2, b0, b1, b2))| {
                let v0 = match u {
                    Some(u) => [u[0][idx], u[1][idx], u[2][idx]],
                    None => [czero(); 3],
                };
                let v1 = [ut[0][idx], ut[1][idx], ut[2][idx]];
                let (a, b) = self.apply_mode(idx, v0, v1);
                (*a0, *a1, *a2) = (a[0], a[1], a[2]);
                (*b0, *b1, *b2) = (b[0], b[1], b[2]);
            });
        ([u0, u1, u2], [t0, t1, t2])
    }

    fn apply_mode(&self, idx: usize, v0: [Complex<T>; 3], v1: [Complex<T>; 3]) -> ([Complex<T>; 3], [Complex<T>; 3]) {
        let r = self.modes.r[idx];
        let (pl, pt) = (self.kernel.long[idx], self.kernel.trans[idx]);
        let apply = |p: &Branch2<T>, a: [Complex<T>; 3], b: [Complex<T>; 3]| {
            (
                [0, 1, 2].map(|k| a[k] * p.vv0 + b[k] * p.vv1),
                [0, 1, 2].map(|k| a[k] * p.tv0 + b[k] * p.tv1),
            )
        };
        if r.is_zero() {
            return apply(&pt, v0, v1);
        }
        let eta = self.modes.xi[idx].map(|x| x / r);
        let split = |v: [Complex<T>; 3]| {
            let p = v[0] * eta[0] + v[1] * eta[1] + v[2] * eta[2];
            let l = eta.map(|e| p * e);
            (l, [v[0] - l[0], v[1] - l[1], v[2] - l[2]])
        };
        let (l0, t0) = split(v0);
        let (l1, t1) = split(v1);
        let (lu, lt) = apply(&pl, l0, l1);
        let (tu, tt) = apply(&pt, t0, t1);
        ([0, 1, 2].map(|k| lu[k] + tu[k]), [0, 1, 2].map(|k| lt[k] + tt[k]))
    }

    /// Dealiased `F(U)` from the `U` half spectra.
    pub fn nonlinearity(&self, u: &[Vec<Complex<T>>; 3]) -> [Vec<Complex<T>>; 3] {
        let len = u[0].len();
        if !self.config.nonlinear {
            return [vec![czero(); len], vec![czero(); len], vec![czero(); len]];
        }
        let p = self.config.triple.0.map(|x| lit::<T>(x));
        let real: Vec<Vec<T>> = u.iter().map(|f| self.fft.inverse(f)).collect();
        [0, 1, 2].map(|k| {
            // F¹ = |U³|^{p₁}, F² = |U¹|^{p₂}, F³ = |U²|^{p₃}.
            let src = &real[(k + 2) % 3];
            let vals: Vec<T> = src.par_iter().map(|x| pow_nonneg(x.abs(), p[k])).collect();
            let mut spec = self.fft.forward(&vals);
            self.dealias(&mut spec);
            spec
        })
    }

    fn dealias(&self, spec: &mut [Complex<T>]) {
        for (z, keep) in spec.iter_mut().zip(&self.modes.keep) {
            if !keep {
                *z = czero();
            }
        }
    }

    /// Largest coefficient modulus outside the dealiasing mask.
    pub fn masked_energy(&self, state: &SpectralField<T>) -> f64 {
        let mut worst = 0.0f64;
        for f in state.u.iter().chain(state.ut.iter()) {
            for (z, keep) in f.iter().zip(&self.modes.keep) {
                if !keep {
                    worst = worst.max(to_f64(z.norm_sqr()));
                }
            }
        }
        worst
    }

    /// One interaction-picture trapezoidal step with an explicit predictor:
    ///
    /// `A = S(dt)X`, `B = S(dt)(0, F(U))`, `X* = A + dt B`,
    /// `X' = A + dt/2 (B + (0, F(U*)))`.
    pub fn step(&self, state: &SpectralField<T>) -> SpectralField<T> {
        let (au, at) = self.propagate(Some(&state.u), &state.ut);
        if !self.config.nonlinear {
            return SpectralField {
                n: state.n,
                length: state.length,
                u: au,
                ut: at,
            };
        }
        let f0 = self.nonlinearity(&state.u);
        let (bu, bt) = self.propagate(None, &f0);
        let dt = self.kernel.dt;
        let half = dt * lit(0.5);
        let pred: [Vec<Complex<T>>; 3] =
            [0, 1, 2].map(|k| au[k].iter().zip(&bu[k]).map(|(a, b)| *a + *b * dt).collect());
        let f1 = self.nonlinearity(&pred);
        let u = [0, 1, 2].map(|k| au[k].iter().zip(&bu[k]).map(|(a, b)| *a + *b * half).collect());
        let ut = [0, 1, 2].map(|k| {
            at[k]
                .iter()
                .zip(&bt[k])
                .zip(&f1[k])
                .map(|((a, b), f)| *a + (*b + *f) * half)
                .collect()
        });
        SpectralField {
            n: state.n,
            length: state.length,
            u,
            ut,
        }
    }

    /// One step of the discrete Duhamel map with prescribed sources:
    /// `X' = S(dt)X + dt/2 (S(dt)(0, F₀) + (0, F₁))`.
    fn duhamel_step(
        &self,
        state: &SpectralField<T>,
        f0: &[Vec<Complex<T>>; 3],
        f1: &[Vec<Complex<T>>; 3],
    ) -> SpectralField<T> {
        let (au, at) = self.propagate(Some(&state.u), &state.ut);
        let (bu, bt) = self.propagate(None, f0);
        let half = self.kernel.dt * lit(0.5);
        let u = [0, 1, 2].map(|k| au[k].iter().zip(&bu[k]).map(|(a, b)| *a + *b * half).collect());
        let ut = [0, 1, 2].map(|k| {
            at[k]
                .iter()
                .zip(&bt[k])
                .zip(&f1[k])
                .map(|((a, b), f)| *a + (*b + *f) * half)
                .collect()
        });
        SpectralField {
            n: state.n,
            length: state.length,
            u,
            ut,
        }
    }
}

/// Convenience single step; builds the transforms on every call.
pub fn step<T: FftReal>(config: &RunConfig<T>, state: &SpectralField<T>, dt: f64) -> Result<SpectralField<T>> {
    let mut cfg = config.clone();
    cfg.dt = dt;
    cfg.t_final = cfg.t_final.max(dt);
    let solver = Solver::new(cfg)?;
    let next = solver.step(state);
    if !solver.norms(&next).is_finite() {
        return Err(Error::NonFinite { t: dt });
    }
    Ok(next)
}

/// Raw and weighted monitor norms sampled at every step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedNormTrace {
    pub weights: MonitorWeights,
    pub times: Vec<f64>,
    /// `[component][L², energy]`.
    pub raw: Vec<[[f64; 2]; 3]>,
    pub weighted: Vec<[[f64; 2]; 3]>,
}

impl WeightedNormTrace {
    fn new(weights: MonitorWeights) -> Self {
        Self {
            weights,
            times: Vec::new(),
            raw: Vec::new(),
            weighted: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, norms: &Norms) {
        let raw = norms.monitor();
        let w = &self.weights;
        let weighted = [0, 1, 2].map(|k| {
            [
                (1.0 + t).powf(w.l2[k]) * raw[k][0],
                (1.0 + t).powf(w.energy[k]) * raw[k][1],
            ]
        });
        self.times.push(t);
        self.raw.push(raw);
        self.weighted.push(weighted);
    }

    /// `sup_{t ≥ 1} W(t) / W(1)` per component and norm; `W(1)` is
    /// interpolated linearly between samples.
    pub fn growth_ratios(&self) -> [[f64; 2]; 3] {
        let mut out = [[0.0; 2]; 3];
        let i1 = self.times.iter().position(|&t| t >= 1.0 - 1e-12);
        let Some(i1) = i1 else {
            return [[f64::NAN; 2]; 3];
        };
        for k in 0..3 {
            for j in 0..2 {
                let at1 = if i1 == 0 || (self.times[i1] - 1.0).abs() < 1e-12 {
                    self.weighted[i1][k][j]
                } else {
                    let (t0, t1) = (self.times[i1 - 1], self.times[i1]);
                    let s = (1.0 - t0) / (t1 - t0);
                    self.weighted[i1 - 1][k][j] * (1.0 - s) + self.weighted[i1][k][j] * s
                };
                let sup = self.weighted[i1..].iter().fold(0.0f64, |m, w| m.max(w[k][j]));
                out[k][j] = if at1 > 0.0 {
                    sup / at1
                } else if sup == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                };
            }
        }
        out
    }

    /// Columns `t`, raw `L²`/energy per component, then weighted ones.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "t,l2_1,energy_1,l2_2,energy_2,l2_3,energy_3,wl2_1,wenergy_1,wl2_2,wenergy_2,wl2_3,wenergy_3\n",
        );
        for (i, t) in self.times.iter().enumerate() {
            s.push_str(&format!("{t:.6}"));
            for v in self.raw[i].iter().chain(self.weighted[i].iter()) {
                s.push_str(&format!(",{:.12e},{:.12e}", v[0], v[1]));
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunVerdict {
    Bounded,
    Growing,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub trace: WeightedNormTrace,
    pub growth: [[f64; 2]; 3],
    pub verdict: RunVerdict,
    pub trust_horizon: f64,
    pub steps: usize,
    pub dt: f64,
    pub t_final: f64,
}

/// Integrates to `t_final` and applies the bounded/growing rule.
pub fn run<T: FftReal>(config: &RunConfig<T>) -> Result<(RunReport, SpectralField<T>)> {
    let solver = Solver::new(config.clone())?;
    let state = solver.initial_state()?;
    run_from(&solver, state, 0.0)
}

/// As [`run`], continuing from `state` at time `t0`.
pub fn run_from<T: FftReal>(
    solver: &Solver<T>,
    mut state: SpectralField<T>,
    t0: f64,
) -> Result<(RunReport, SpectralField<T>)> {
    let cfg = &solver.config;
    if state.n != cfg.n || state.length != cfg.length {
        return invalid("state grid does not match the configuration");
    }
    let mut trace = WeightedNormTrace::new(cfg.weights()?);
    let dt = solver.dt();
    let steps = ((cfg.t_final - t0) / dt).round().max(0.0) as usize;
    trace.push(t0, &solver.norms(&state));
    for i in 1..=steps {
        state = solver.step(&state);
        let t = t0 + i as f64 * dt;
        let norms = solver.norms(&state);
        if !norms.is_finite() {
            return Err(Error::NonFinite { t });
        }
        trace.push(t, &norms);
    }
    let growth = trace.growth_ratios();
    let bounded = growth.iter().flatten().all(|g| *g <= BOUNDED_FACTOR);
    let report = RunReport {
        growth,
        verdict: if bounded {
            RunVerdict::Bounded
        } else {
            RunVerdict::Growing
        },
        trust_horizon: cfg.trust_horizon(),
        steps,
        dt,
        t_final: t0 + steps as f64 * dt,
        trace,
    };
    Ok((report, state))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PicardVerdict {
    Contraction,
    /// `d_n` grew for three consecutive `n`.
    Divergent,
    /// Neither: too few resolvable differences or a ratio `≥ 1`.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    /// `d_n = ‖U⁽ⁿ⁾ - U⁽ⁿ⁻¹⁾‖_{X(T)}`, `n = 1, 2, …`, `U⁽⁰⁾ = 0`.
    pub differences: Vec<f64>,
    /// `d_{n+1}/d_n` for `n ≥ 2`.
    pub ratios: Vec<f64>,
    /// Largest of `ratios`.
    pub ratio: f64,
    /// Iterations dropped because `d_n` fell below the round-off floor.
    pub converged_early: bool,
    pub verdict: PicardVerdict,
}

/// Picard iterates `U⁽ⁿ⁺¹⁾ = N U⁽ⁿ⁾` of the discrete Duhamel map on
/// `[0, t_final]`, starting from `U⁽⁰⁾ = 0`.
///
/// `N` is the trapezoidal Duhamel step of [`Solver::step`] with the sources
/// taken from the previous iterate. All iterates advance in lockstep, so only
/// one time level per iterate is stored. The norm is the sampled `X(T)` norm
/// with the monitor weights.
pub fn picard_probe<T: FftReal>(config: &RunConfig<T>, iterations: usize) -> Result<PicardReport> {
    let solver = Solver::new(config.clone())?;
    let init = solver.initial_state()?;
    picard_probe_from(&solver, &init, iterations)
}

/// As [`picard_probe`] with explicit data.
///
/// Iterates are kept as `U⁽ⁿ⁾ = U⁽¹⁾ + V⁽ⁿ⁾` with `U⁽¹⁾` the linear solution,
/// so successive differences never subtract two copies of the linear part.
pub fn picard_probe_from<T: FftReal>(
    solver: &Solver<T>,
    init: &SpectralField<T>,
    iterations: usize,
) -> Result<PicardReport> {
    let config = &solver.config;
    if iterations < 2 {
        return invalid("picard probe needs at least two iterations");
    }
    if init.n != config.n || init.length != config.length {
        return invalid("initial state grid does not match the configuration");
    }
    let weights = config.weights()?;
    let (n, length) = (config.n, config.length);
    let sum_u = |lin: &SpectralField<T>, v: &SpectralField<T>| -> [Vec<Complex<T>>; 3] {
        [0, 1, 2].map(|k| lin.u[k].iter().zip(&v.u[k]).map(|(a, b)| *a + *b).collect())
    };
    let mut lin = init.clone();
    // corr[i] = V⁽ⁱ⁺²⁾, zero at t = 0.
    let mut corr: Vec<SpectralField<T>> = vec![SpectralField::zeros(n, length); iterations - 1];
    // forces[i] = F(U⁽ⁱ⁺¹⁾) at the current level.
    let mut forces: Vec<[Vec<Complex<T>>; 3]> = Vec::with_capacity(iterations - 1);
    forces.push(solver.nonlinearity(&lin.u));
    for v in corr.iter().take(iterations - 2) {
        forces.push(solver.nonlinearity(&sum_u(&lin, v)));
    }
    let mut d = vec![0.0f64; iterations];
    let update = |d: &mut [f64], lin: &SpectralField<T>, corr: &[SpectralField<T>], t: f64| -> Result<()> {
        let mut norms = vec![solver.norms(lin), solver.norms(&corr[0])];
        for w in corr.windows(2) {
            norms.push(solver.norms(&w[1].difference(&w[0])));
        }
        for (i, nm) in norms.iter().enumerate() {
            if !nm.is_finite() {
                return Err(Error::NonFinite { t });
            }
            d[i] = d[i].max(nm.weighted_sum(t, &weights));
        }
        Ok(())
    };
    update(&mut d, &lin, &corr, 0.0)?;
    let dt = solver.dt();
    let no_force = SpectralField::<T>::zeros(n, length).u;
    for step_i in 1..=config.steps() {
        let t = step_i as f64 * dt;
        lin = solver.duhamel_step(&lin, &no_force, &no_force);
        let mut new_forces = Vec::with_capacity(iterations - 1);
        new_forces.push(solver.nonlinearity(&lin.u));
        let mut new_corr = Vec::with_capacity(iterations - 1);
        for (i, v) in corr.iter().enumerate() {
            // V⁽ⁱ⁺²⁾ is driven by F(U⁽ⁱ⁺¹⁾).
            let next = solver.duhamel_step(v, &forces[i], &new_forces[i]);
            if i + 1 < iterations - 1 {
                new_forces.push(solver.nonlinearity(&sum_u(&lin, &next)));
            }
            new_corr.push(next);
        }
        corr = new_corr;
        forces = new_forces;
        update(&mut d, &lin, &corr, t)?;
    }
    Ok(summarize_picard(d))
}

fn summarize_picard(d: Vec<f64>) -> PicardReport {
    // Round-off in U⁽ⁿ⁾ perturbs every d_n, n ≥ 3, by about ε d₂.
    let mut resolved = d.len().min(2);
    if d.len() >= 2 && d[1] <= PICARD_FLOOR * d[0] {
        resolved = 1;
    }
    while resolved >= 2 && resolved < d.len() && d[resolved] > PICARD_FLOOR * d[1] {
        resolved += 1;
    }
    let kept = &d[..resolved];
    let converged_early = resolved < d.len();
    let ratios: Vec<f64> = kept.windows(2).skip(1).map(|w| w[1] / w[0]).collect();
    let ratio = ratios.iter().copied().fold(f64::NAN, f64::max);
    let growing: Vec<bool> = kept.windows(2).map(|w| w[1] > w[0]).collect();
    let divergent = growing.windows(3).any(|w| w.iter().all(|&g| g));
    let verdict = if divergent {
        PicardVerdict::Divergent
    } else if (!ratios.is_empty() && ratio < 1.0) || (ratios.is_empty() && converged_early) {
        PicardVerdict::Contraction
    } else {
        PicardVerdict::Inconclusive
    };
    PicardReport {
        differences: d,
        ratios,
        ratio,
        converged_early,
        verdict,
    }
}

/// Sidecar header of a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    /// Physical grid `[N, N, N]`.
    pub dims: [usize; 3],
    /// Stored half spectrum `[N, N, N/2 + 1]`.
    pub spectrum_dims: [usize; 3],
    pub length: f64,
    pub t: f64,
    pub params: ModelParams<f64>,
    /// Field order in the binary file.
    pub fields: Vec<String>,
    pub scalar: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Numerical(format!("checkpoint i/o: {e}"))
}

/// Writes `path` (coefficients) and `path.json` (header).
pub fn save_checkpoint<T: FftReal>(
    path: &Path,
    state: &SpectralField<T>,
    t: f64,
    params: &ModelParams<T>,
) -> Result<CheckpointHeader> {
    let n = state.n;
    let header = CheckpointHeader {
        version: CHECKPOINT_VERSION,
        dims: [n; 3],
        spectrum_dims: [n, n, n / 2 + 1],
        length: state.length,
        t,
        params: params.cast(),
        fields: ["u1", "u2", "u3", "ut1", "ut2", "ut3"].map(String::from).to_vec(),
        scalar: "f64-le".into(),
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for f in state.u.iter().chain(state.ut.iter()) {
        for z in f {
            w.write_all(&to_f64(z.re).to_le_bytes()).map_err(io_err)?;
            w.write_all(&to_f64(z.im).to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    let json = serde_json::to_string_pretty(&header).map_err(io_err)?;
    std::fs::write(sidecar_path(path), json).map_err(io_err)?;
    Ok(header)
}

pub fn load_checkpoint<T: FftReal>(path: &Path) -> Result<(SpectralField<T>, CheckpointHeader)> {
    let text = std::fs::read_to_string(sidecar_path(path)).map_err(io_err)?;
    let header: CheckpointHeader = serde_json::from_str(&text).map_err(io_err)?;
    if header.version != CHECKPOINT_VERSION {
        return invalid(format!("unsupported checkpoint version {}", header.version));
    }
    let n = header.dims[0];
    if header.dims != [n; 3] || header.spectrum_dims != [n, n, n / 2 + 1] || header.fields.len() != 6 {
        return invalid("inconsistent checkpoint dimensions");
    }
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(io_err)?)
        .read_to_end(&mut bytes)
        .map_err(io_err)?;
    let len = n * n * (n / 2 + 1);
    if bytes.len() != 6 * len * 16 {
        return invalid(format!(
            "checkpoint holds {} bytes, expected {}",
            bytes.len(),
            6 * len * 16
        ));
    }
    let mut state = SpectralField::zeros(n, header.length);
    let val = |off: usize| lit::<T>(f64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes")));
    for (fi, f) in state.u.iter_mut().chain(state.ut.iter_mut()).enumerate() {
        for (i, z) in f.iter_mut().enumerate() {
            let off = (fi * len + i) * 16;
            *z = Complex::new(val(off), val(off + 8));
        }
    }
    Ok((state, header))
}
