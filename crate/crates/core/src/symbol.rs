//! Fourier symbols, exact dispersion roots and their asymptotic expansions.
//!
//! Per Fourier mode the system splits into three scalar branches
//! `v'' + |ξ|^{2θ} v' + y²|ξ|² v = 0` with `y² ∈ {a², a², b²}`. Roots are
//! reported in decay form: `v ∝ e^{-μt}` with `μ² - |ξ|^{2θ} μ + y²|ξ|² = 0`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat, CMat6, CVec6};
use crate::model::{dot, Branch, ModelParams, Zone};
use crate::scalar::{cplx, creal, czero, imag_unit, lit, to_f64, Real};

/// Symbol matrices of the micro-energy system `D_t W + C W = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrices<T> {
    pub eta: [T; 3],
    /// `A(η) = a² I + (b² - a²) ηηᵀ`.
    pub a_eta: [[T; 3]; 3],
    /// `ηηᵀ`, eigenvalue `b²` of `A(η)`.
    pub p_par: [[T; 3]; 3],
    /// `I - ηηᵀ`, eigenvalue `a²` of `A(η)`.
    pub p_perp: [[T; 3]; 3],
    pub b0: [[T; 6]; 6],
    /// Diagonal of `B₁ = diag(a, a, b, -a, -a, -b)`.
    pub b1: [T; 6],
    theta: T,
}

fn check_unit<T: Real>(eta: [T; 3]) -> Result<()> {
    if (dot(eta, eta) - T::one()).abs() > lit(2e-12) {
        return invalid("eta must be a unit vector (|eta| = 1 within 1e-12)");
    }
    Ok(())
}

/// Builds `A(η)`, its spectral projections, `B₀` and `B₁`.
pub fn build_symbol<T: Real>(params: &ModelParams<T>, eta: [T; 3]) -> Result<SymbolMatrices<T>> {
    check_unit(eta)?;
    let mut p_par = [[T::zero(); 3]; 3];
    let mut p_perp = [[T::zero(); 3]; 3];
    let mut a_eta = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let pp = eta[i] * eta[j];
            let id = if i == j { T::one() } else { T::zero() };
            p_par[i][j] = pp;
            p_perp[i][j] = id - pp;
            a_eta[i][j] = params.a2 * id + (params.b2 - params.a2) * pp;
        }
    }
    let mut b0 = [[T::zero(); 6]; 6];
    for i in 0..6 {
        b0[i][i] = T::one();
        b0[i][(i + 3) % 6] = T::one();
    }
    let (a, b) = (params.a(), params.b());
    Ok(SymbolMatrices {
        eta,
        a_eta,
        p_par,
        p_perp,
        b0,
        b1: [a, a, b, -a, -a, -b],
        theta: params.theta,
    })
}

impl<T: Real> SymbolMatrices<T> {
    /// `C = -(i/2)|ξ|^{2θ} B₀ - |ξ| B₁`, so that `D_t W + C W = 0`.
    pub fn coefficient(&self, xi_norm: T) -> CMat6<T> {
        let q = crate::scalar::pow_nonneg(xi_norm, lit::<T>(2.0) * self.theta);
        let mut c = linalg::zeros();
        for i in 0..6 {
            for j in 0..6 {
                c[i][j] = cplx(T::zero(), -q * lit(0.5) * self.b0[i][j]);
            }
            c[i][i] = c[i][i] - creal(xi_norm * self.b1[i]);
        }
        c
    }

    /// `G = -iC`, so that `∂_t W = G W`.
    pub fn generator(&self, xi_norm: T) -> CMat6<T> {
        linalg::scale(&self.coefficient(xi_norm), -imag_unit::<T>())
    }
}

/// Orthonormal frame `(e₁, e₂, η)` with `e₁, e₂ ⟂ η`; rows of the result.
///
/// The decoupled coordinates of a vector `û` are `v_k = frame[k] · û`; the
/// first two carry speed `a²`, the third speed `b²`.
pub fn decoupled_frame<T: Real>(eta: [T; 3]) -> [[T; 3]; 3] {
    let axis = {
        let ab = eta.map(|x| x.abs());
        let k = if ab[0] <= ab[1] && ab[0] <= ab[2] {
            0
        } else if ab[1] <= ab[2] {
            1
        } else {
            2
        };
        let mut e = [T::zero(); 3];
        e[k] = T::one();
        e
    };
    let proj = dot(axis, eta);
    let e1 = crate::model::normalize([
        axis[0] - proj * eta[0],
        axis[1] - proj * eta[1],
        axis[2] - proj * eta[2],
    ]);
    let e2 = [
        eta[1] * e1[2] - eta[2] * e1[1],
        eta[2] * e1[0] - eta[0] * e1[2],
        eta[0] * e1[1] - eta[1] * e1[0],
    ];
    [e1, e2, eta]
}

/// Both decay-form roots of one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRoots<T> {
    pub speed2: T,
    /// Larger real root, or the root with positive imaginary part.
    pub mu_plus: Complex<T>,
    pub mu_minus: Complex<T>,
    pub degenerate: bool,
}

/// Roots of `μ² - qμ + c = 0` for `q, c ≥ 0`, without cancellation.
pub fn roots_from_coefficients<T: Real>(q: T, c: T) -> (Complex<T>, Complex<T>, bool) {
    let four = lit::<T>(4.0);
    let disc = q * q - four * c;
    let degenerate = disc.abs() <= lit::<T>(1e-12) * (q * q).max(four * c);
    if disc >= T::zero() {
        let big = (q + disc.sqrt()) * lit(0.5);
        let small = if big.is_zero() { T::zero() } else { c / big };
        (creal(big), creal(small), degenerate)
    } else {
        let re = q * lit(0.5);
        let im = (-disc).sqrt() * lit(0.5);
        (cplx(re, im), cplx(re, -im), degenerate)
    }
}

/// Exact roots for one branch of squared speed `speed2` at `|ξ| = xi_norm`.
pub fn exact_mode_roots<T: Real>(params: &ModelParams<T>, speed2: T, xi_norm: T) -> ModeRoots<T> {
    let q = params.damping(xi_norm);
    let c = speed2 * xi_norm * xi_norm;
    let (mu_plus, mu_minus, degenerate) = roots_from_coefficients(q, c);
    ModeRoots {
        speed2,
        mu_plus,
        mu_minus,
        degenerate,
    }
}

/// All six exact roots ordered `(a, a, b | a, a, b)`: minus roots, then plus roots.
pub fn exact_six<T: Real>(params: &ModelParams<T>, xi_norm: T) -> [Complex<T>; 6] {
    let ra = exact_mode_roots(params, params.a2, xi_norm);
    let rb = exact_mode_roots(params, params.b2, xi_norm);
    [
        ra.mu_minus,
        ra.mu_minus,
        rb.mu_minus,
        ra.mu_plus,
        ra.mu_plus,
        rb.mu_plus,
    ]
}

/// Which expansion applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsymptoticRegime {
    SmallThetaLtHalf,
    SmallThetaGtHalf,
    LargeThetaLtHalf,
    LargeThetaGtHalf,
}

impl AsymptoticRegime {
    /// Real, well separated roots (heat-like).
    pub fn is_parabolic(self) -> bool {
        matches!(self, Self::SmallThetaLtHalf | Self::LargeThetaGtHalf)
    }

    pub fn zone(self) -> Zone {
        match self {
            Self::SmallThetaLtHalf | Self::SmallThetaGtHalf => Zone::Int,
            _ => Zone::Ext,
        }
    }
}

/// Closed-form correction terms `z₁ … z₆`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionTerms<T> {
    pub z1a: Complex<T>,
    pub z1b: Complex<T>,
    pub z2: Complex<T>,
    pub z3: Complex<T>,
    pub z4: Complex<T>,
    pub z5: Complex<T>,
    pub z6a: T,
    pub z6b: T,
}

pub fn z1<T: Real>(theta: T, y: T, xi_norm: T) -> Complex<T> {
    let num = y.powi(4) * xi_norm.powf(lit::<T>(4.0) - lit::<T>(6.0) * theta);
    let den = T::one() - y * y * xi_norm.powf(lit::<T>(2.0) - lit::<T>(4.0) * theta);
    cplx(T::zero(), num / den)
}

pub fn z6<T: Real>(theta: T, y: T, xi_norm: T) -> T {
    let num = y.powi(3) * xi_norm.powf(lit::<T>(3.0) - lit::<T>(4.0) * theta);
    let den = T::one() - y * y * xi_norm.powf(lit::<T>(2.0) - lit::<T>(4.0) * theta);
    num / den
}

pub fn correction_terms<T: Real>(params: &ModelParams<T>, xi_norm: T) -> CorrectionTerms<T> {
    let th = params.theta;
    let (a, b) = (params.a(), params.b());
    let i = imag_unit::<T>();
    let two = lit::<T>(2.0);
    let q = xi_norm.powf(two * th);
    let lead = xi_norm.powf(two - two * th);
    let z1a = z1(th, a, xi_norm);
    let z1b = z1(th, b, xi_norm);
    let z6a = z6(th, a, xi_norm);
    let z6b = z6(th, b, xi_norm);
    let sa = z6a * z6a;
    let sb = z6b * z6b;
    let den_a = creal(q * q - sa);
    let den_b = creal(q * q - sb);
    let ab = params.a2 + params.b2;
    let z2 = (i * (ab * sa * lead) + z1a * (two * sa) + i * (q * sa)) / den_a;
    let z3 = (i * (two * params.a2 * lead * sa) + i * (q * sa) + z1a * (two * sa)) / den_a;
    let z4 = (i * (q * sb) + creal(sb * z6b) + z1b * sb - i * (ab * lead * sb)) / den_b;
    let z5 = (z1b * (two * sb) + i * (q * sb) + i * (ab * lead * sb)) / den_b;
    CorrectionTerms {
        z1a,
        z1b,
        z2,
        z3,
        z4,
        z5,
        z6a,
        z6b,
    }
}

/// Six asymptotic roots in decay form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticEigs<T> {
    /// Ordered `(a, a, b | a, a, b)`; entries `l` and `l + 3` share a branch
    /// and a correction term.
    pub mu: [Complex<T>; 6],
    /// Exponent `e` of the stated remainder `O(|ξ|^e)`.
    pub remainder_order: T,
    pub regime: AsymptoticRegime,
}

/// Regime for a zone, rejecting `θ = 1/2` and the middle zone.
pub fn regime_for<T: Real>(params: &ModelParams<T>, zone: Zone) -> Result<AsymptoticRegime> {
    if params.is_half() {
        return invalid("theta = 1/2 has no asymptotic expansion; use jordan_spectrum");
    }
    let lt = params.theta < lit(0.5);
    match (zone, lt) {
        (Zone::Int, true) => Ok(AsymptoticRegime::SmallThetaLtHalf),
        (Zone::Int, false) => Ok(AsymptoticRegime::SmallThetaGtHalf),
        (Zone::Ext, true) => Ok(AsymptoticRegime::LargeThetaLtHalf),
        (Zone::Ext, false) => Ok(AsymptoticRegime::LargeThetaGtHalf),
        (Zone::Mid, _) => invalid("asymptotic expansions exist only on the int and ext zones"),
    }
}

/// Evaluates the closed-form expansions at `|ξ| = xi_norm`.
///
/// Parabolic regime: `y²|ξ|^{2-2θ} - i z₁(y) - i z_j` and
/// `|ξ|^{2θ} - y²|ξ|^{2-2θ} + i z₁(y) + i z_j`, where each large root carries
/// the same speed and correction as its small partner (so the two sum to
/// `|ξ|^{2θ}` up to `z₄ ≠ z₅`). Oscillatory regime:
/// `±i y|ξ| + |ξ|^{2θ}/2 ∓ i |ξ|^{4θ-1}/(8y)`, conjugate-symmetric.
pub fn asymptotic_eigs<T: Real>(params: &ModelParams<T>, xi_norm: T, zone: Zone) -> Result<AsymptoticEigs<T>> {
    let regime = regime_for(params, zone)?;
    match zone {
        Zone::Int if !(xi_norm > T::zero() && xi_norm < params.epsilon) => {
            return invalid("zone=int requires 0 < |xi| < epsilon")
        }
        Zone::Ext if !(xi_norm > params.epsilon.recip() && xi_norm.is_finite()) => {
            return invalid("zone=ext requires |xi| > 1/epsilon")
        }
        _ => {}
    }
    let th = params.theta;
    let two = lit::<T>(2.0);
    let q = xi_norm.powf(two * th);
    let i = imag_unit::<T>();
    if regime.is_parabolic() {
        let z = correction_terms(params, xi_norm);
        let lead = xi_norm.powf(two - two * th);
        let al = creal(params.a2 * lead);
        let bl = creal(params.b2 * lead);
        let qc = creal(q);
        let mu = [
            al - i * z.z1a - i * z.z2,
            al - i * z.z1a - i * z.z3,
            bl - i * z.z1b - i * z.z4,
            qc - al + i * z.z1a + i * z.z2,
            qc - al + i * z.z1a + i * z.z3,
            qc - bl + i * z.z1b + i * z.z5,
        ];
        Ok(AsymptoticEigs {
            mu,
            remainder_order: lit::<T>(7.0) - lit::<T>(12.0) * th,
            regime,
        })
    } else {
        let (a, b) = (params.a(), params.b());
        let corr = xi_norm.powf(lit::<T>(4.0) * th - T::one()) / lit::<T>(8.0);
        let root = |sign: T, y: T| cplx(q * lit(0.5), sign * (y * xi_norm - corr / y));
        let m = -T::one();
        let p = T::one();
        Ok(AsymptoticEigs {
            mu: [root(m, a), root(m, a), root(m, b), root(p, a), root(p, a), root(p, b)],
            remainder_order: lit::<T>(6.0) * th - two,
            regime,
        })
    }
}

/// Assignment `perm[l]` of asymptotic root `l` to an exact root.
///
/// Minimises the total pairing distance over all permutations. Fails when two
/// distinct exact roots lie within `1e-14` (relative) of each other.
pub fn pair_roots<T: Real>(asym: &[Complex<T>; 6], exact: &[Complex<T>; 6]) -> Result<[usize; 6]> {
    let scale = exact.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    for i in 0..6 {
        for j in i + 1..6 {
            let d = (exact[i] - exact[j]).norm();
            if d > T::zero() && d <= lit::<T>(1e-14) * scale {
                return Err(Error::Numerical(format!(
                    "ambiguous pairing: exact roots {i} and {j} nearly coincide"
                )));
            }
        }
    }
    let mut dist = [[0.0f64; 6]; 6];
    for (l, row) in dist.iter_mut().enumerate() {
        for (k, d) in row.iter_mut().enumerate() {
            *d = to_f64((asym[l] - exact[k]).norm());
        }
    }
    let mut best = ([0usize, 1, 2, 3, 4, 5], f64::INFINITY);
    permutations6(|p| {
        let total: f64 = (0..6).map(|l| dist[l][p[l]]).sum();
        if total < best.1 {
            best = (*p, total);
        }
    });
    Ok(best.0)
}

fn permutations6(mut f: impl FnMut(&[usize; 6])) {
    // Heap's algorithm.
    let mut a = [0usize, 1, 2, 3, 4, 5];
    let mut c = [0usize; 6];
    f(&a);
    let mut i = 0;
    while i < 6 {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0 && y.is_finite())
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    linear_fit(&pts).0
}

/// `(slope, intercept, r²)` of an ordinary least-squares line.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Fitted error orders of the expansions against the exact roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorOrderFit {
    pub regime: AsymptoticRegime,
    /// Log-log slope of `|μ_asym - μ_exact|` for each of the six roots.
    pub per_root: [f64; 6],
    /// Least favourable slope among the selected roots.
    pub order: f64,
    /// Stated remainder exponent.
    pub claimed: f64,
}

impl ErrorOrderFit {
    /// Whether the errors vanish at least as fast as claimed, within `tol`.
    ///
    /// On the int zone the error must scale like `|ξ|^e` with `e ≥ claimed`;
    /// on the ext zone (`|ξ| → ∞`) the slope must be `≤ claimed`.
    pub fn meets_claim(&self, tol: f64) -> bool {
        match self.regime.zone() {
            Zone::Int => self.order >= self.claimed - tol,
            _ => self.order <= self.claimed + tol,
        }
    }
}

pub fn branch_indices(branch: Option<Branch>) -> &'static [usize] {
    match branch {
        None => &[0, 1, 2, 3, 4, 5],
        Some(Branch::Transverse) => &[0, 1, 3, 4],
        Some(Branch::Longitudinal) => &[2, 5],
    }
}

/// Fits the error order of [`asymptotic_eigs`] over `samples`.
///
/// Run with a wide scalar (e.g. [`crate::Wide`]) when the errors fall below
/// the f64 round-off floor of the roots themselves.
pub fn asymptotic_error_order<T: Real>(
    params: &ModelParams<T>,
    zone: Zone,
    branch: Option<Branch>,
    samples: &[T],
) -> Result<ErrorOrderFit> {
    if samples.len() < 3 {
        return invalid("need at least three samples");
    }
    let lo = samples.iter().fold(T::infinity(), |m, &x| m.min(x));
    let hi = samples.iter().fold(T::zero(), |m, &x| m.max(x));
    if hi < lit::<T>(99.9) * lo {
        return invalid("samples must span at least two decades");
    }
    let mut logs = vec![Vec::with_capacity(samples.len()); 6];
    let mut xs = Vec::with_capacity(samples.len());
    let mut regime = None;
    let mut claimed = 0.0;
    for &r in samples {
        let asym = asymptotic_eigs(params, r, zone)?;
        let exact = exact_six(params, r);
        let perm = pair_roots(&asym.mu, &exact)?;
        xs.push(to_f64(r.ln()));
        for l in 0..6 {
            let e = (asym.mu[l] - exact[perm[l]]).norm();
            logs[l].push(if e > T::zero() { to_f64(e.ln()) } else { f64::NAN });
        }
        regime = Some(asym.regime);
        claimed = to_f64(asym.remainder_order);
    }
    let regime = regime.expect("non-empty samples");
    let mut per_root = [0.0; 6];
    for l in 0..6 {
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(&logs[l])
            .filter(|(_, y)| y.is_finite())
            .map(|(&x, &y)| (x, y))
            .collect();
        per_root[l] = if pts.len() >= 2 {
            linear_fit(&pts).0
        } else {
            // Exact agreement on every sample: arbitrarily high order.
            if zone == Zone::Int {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        };
    }
    let idx = branch_indices(branch);
    let order = match zone {
        Zone::Int => idx.iter().map(|&l| per_root[l]).fold(f64::INFINITY, f64::min),
        _ => idx.iter().map(|&l| per_root[l]).fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(ErrorOrderFit {
        regime,
        per_root,
        order,
        claimed,
    })
}

/// Geometric sequence of `n` points from `lo` to `hi`.
pub fn geometric<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let (l0, l1) = (lo.ln(), hi.ln());
    let d = T::from_usize(n.max(2) - 1).expect("count");
    (0..n)
        .map(|k| (l0 + (l1 - l0) * T::from_usize(k).expect("index") / d).exp())
        .collect()
}

/// Regime at `θ = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JordanCase {
    /// `a² ≠ 1/4`, `b² ≠ 1/4`.
    Generic,
    /// `b² = 1/4`.
    LongitudinalQuarter,
    /// `a² = 1/4`.
    TransverseQuarter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JordanBlock<T> {
    pub lambda: Complex<T>,
    pub size: usize,
}

/// Eigenvalues of `(i/2)B₀ + B₁` and Jordan structures at `θ = 1/2`.
///
/// `blocks` follows the published normal form; `realized` is the structure of
/// the matrix itself, which is block diagonal with one 2×2 block per branch.
/// The two disagree: the repeated factor `(λ² - iλ - a²)²` comes from two
/// identical transverse blocks and is semisimple.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanSpectrum<T> {
    pub case: JordanCase,
    pub lambdas: Vec<Complex<T>>,
    pub block_structure: Vec<usize>,
    pub blocks: Vec<JordanBlock<T>>,
    pub polynomial_degree: usize,
    pub realized: Vec<JordanBlock<T>>,
    pub realized_degree: usize,
    pub a2: T,
    pub b2: T,
}

fn is_quarter<T: Real>(y2: T) -> bool {
    (y2 - lit(0.25)).abs() <= lit(1e-10)
}

/// Roots of `λ² - iλ - y² = 0`, larger imaginary part (or positive real part) first.
pub fn half_branch_lambdas<T: Real>(y2: T) -> (Complex<T>, Complex<T>) {
    let half = lit::<T>(0.5);
    let four = lit::<T>(4.0);
    if is_quarter(y2) {
        let l = cplx(T::zero(), half);
        (l, l)
    } else if y2 < lit(0.25) {
        let s = (T::one() - four * y2).sqrt() * half;
        (cplx(T::zero(), half + s), cplx(T::zero(), half - s))
    } else {
        let s = (four * y2 - T::one()).sqrt() * half;
        (cplx(s, half), cplx(-s, half))
    }
}

pub fn jordan_spectrum<T: Real>(params: &ModelParams<T>) -> Result<JordanSpectrum<T>> {
    if !params.is_half() {
        return invalid("jordan_spectrum requires theta = 1/2");
    }
    let (l1, l2) = half_branch_lambdas(params.a2);
    let (l3, l4) = half_branch_lambdas(params.b2);
    let blk = |lambda, size| JordanBlock { lambda, size };
    let (case, lambdas, blocks) = if is_quarter(params.a2) {
        (
            JordanCase::TransverseQuarter,
            vec![l1, l3, l4],
            vec![blk(l1, 4), blk(l3, 1), blk(l4, 1)],
        )
    } else if is_quarter(params.b2) {
        (
            JordanCase::LongitudinalQuarter,
            vec![l1, l2, l3],
            vec![blk(l1, 2), blk(l2, 2), blk(l3, 2)],
        )
    } else {
        (
            JordanCase::Generic,
            vec![l1, l2, l3, l4],
            vec![blk(l1, 2), blk(l2, 2), blk(l3, 1), blk(l4, 1)],
        )
    };
    let mut realized = Vec::new();
    for y2 in [params.a2, params.a2, params.b2] {
        let (p, m) = half_branch_lambdas(y2);
        if is_quarter(y2) {
            realized.push(blk(p, 2));
        } else {
            realized.push(blk(p, 1));
            realized.push(blk(m, 1));
        }
    }
    let degree = |b: &[JordanBlock<T>]| b.iter().map(|x| x.size - 1).max().unwrap_or(0);
    Ok(JordanSpectrum {
        case,
        lambdas,
        block_structure: blocks.iter().map(|b| b.size).collect(),
        polynomial_degree: degree(&blocks),
        realized_degree: degree(&realized),
        blocks,
        realized,
        a2: params.a2,
        b2: params.b2,
    })
}

/// `exp(i|ξ|t J) W₀` for a direct sum of Jordan blocks (superdiagonal ones).
pub fn jordan_blocks_solution<T: Real>(blocks: &[JordanBlock<T>], xi_norm: T, w0: &CVec6<T>, t: T) -> CVec6<T> {
    let mut out = [czero(); 6];
    let s = cplx(T::zero(), xi_norm * t);
    let mut off = 0;
    for b in blocks {
        let phase = (s * b.lambda).exp();
        for r in 0..b.size {
            let mut acc = czero();
            let mut term = creal(T::one());
            for k in 0..b.size - r {
                if k > 0 {
                    term = term * s / creal(T::from_usize(k).expect("k"));
                }
                acc = acc + term * w0[off + r + k];
            }
            out[off + r] = phase * acc;
        }
        off += b.size;
    }
    out
}

/// Evaluates the published closed-form representation in its own coordinates.
pub fn jordan_mode_solution<T: Real>(spec: &JordanSpectrum<T>, xi_norm: T, w0: &CVec6<T>, t: T) -> CVec6<T> {
    jordan_blocks_solution(&spec.blocks, xi_norm, w0, t)
}

/// Columns `T` with `T⁻¹ ((i/2)B₀ + B₁) T` equal to the realized Jordan form.
///
/// Columns `2k, 2k+1` live on micro-energy components `k, k+3`.
pub fn realized_jordan_basis<T: Real>(params: &ModelParams<T>) -> CMat6<T> {
    let mut basis: CMat6<T> = linalg::zeros();
    let half_i = cplx(T::zero(), lit(0.5));
    for (k, y2) in [params.a2, params.a2, params.b2].into_iter().enumerate() {
        let y = y2.sqrt();
        let (c0, c1) = (2 * k, 2 * k + 1);
        if is_quarter(y2) {
            // Chain e = N g with g = (1, 0), N = P - (i/2) I.
            basis[k][c0] = creal(y);
            basis[k + 3][c0] = half_i;
            basis[k][c1] = creal(T::one());
        } else {
            let (p, m) = half_branch_lambdas(y2);
            for (col, l) in [(c0, p), (c1, m)] {
                basis[k][col] = half_i;
                basis[k + 3][col] = l - half_i - creal(y);
            }
        }
    }
    basis
}

/// Exact solution of `D_t W = |ξ|((i/2)B₀ + B₁)W` at `θ = 1/2`.
pub fn half_exact_solution<T: Real>(params: &ModelParams<T>, xi_norm: T, w0: &CVec6<T>, t: T) -> Result<CVec6<T>> {
    let spec = jordan_spectrum(params)?;
    let basis = realized_jordan_basis(params);
    let inv = linalg::inverse(&basis).ok_or_else(|| Error::Numerical("singular Jordan basis".into()))?;
    let c = linalg::mul_vec(&inv, w0);
    let evolved = jordan_blocks_solution(&spec.realized, xi_norm, &c, t);
    Ok(linalg::mul_vec(&basis, &evolved))
}

/// `(i/2)B₀ + B₁`.
pub fn half_system_matrix<T: Real>(params: &ModelParams<T>) -> CMat6<T> {
    let (a, b) = (params.a(), params.b());
    let d = [a, a, b, -a, -a, -b];
    let mut m = linalg::zeros();
    for i in 0..6 {
        m[i][i] = cplx(d[i], lit(0.5));
        m[i][(i + 3) % 6] = cplx(T::zero(), lit(0.5));
    }
    m
}

/// Relative residual of `det((i/2)B₀ + B₁ - λI) = (λ² - iλ - a²)²(λ² - iλ - b²)`.
pub fn characteristic_residual<T: Real>(params: &ModelParams<T>, lambda: Complex<T>) -> T {
    let mut m = half_system_matrix(params);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = row[i] - lambda;
    }
    let lhs = linalg::det(&m);
    let i = imag_unit::<T>();
    let fa = lambda * lambda - i * lambda - creal(params.a2);
    let fb = lambda * lambda - i * lambda - creal(params.b2);
    let rhs = fa * fa * fb;
    let scale = rhs.norm().max(lhs.norm()).max(T::one());
    (lhs - rhs).norm() / scale
}

/// Spectral-gap scaling at large frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GevreyFit {
    /// Fitted `κ'` in `min_l Re μ_l ~ c|ξ|^{κ'}`.
    pub exponent: f64,
    pub gevrey_order: f64,
    /// `1 / (2 min{1-θ, θ})`.
    pub expected_order: f64,
}

pub fn gevrey_probe<T: Real>(params: &ModelParams<T>, samples: &[T]) -> Result<GevreyFit> {
    let th = to_f64(params.theta);
    if !(th > 0.0 && th < 1.0) {
        return invalid("gevrey_probe requires theta in (0, 1)");
    }
    if samples.iter().any(|&r| r <= params.epsilon.recip()) {
        return invalid("gevrey samples must lie in the ext zone");
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &r in samples {
        let gap = exact_six(params, r)
            .iter()
            .map(|z| to_f64(z.re))
            .fold(f64::INFINITY, f64::min);
        xs.push(to_f64(r));
        ys.push(gap);
    }
    let exponent = loglog_slope(&xs, &ys);
    Ok(GevreyFit {
        exponent,
        gevrey_order: 1.0 / exponent,
        expected_order: 1.0 / (2.0 * th.min(1.0 - th)),
    })
}

/// `max |M⁻¹(η) A(η) M(η) - diag(a², a², b²)|` for the published chart `M(η)`.
pub fn validate_m_eta<T: Real>(params: &ModelParams<T>, eta: [T; 3]) -> Result<T> {
    check_unit(eta)?;
    let tol = lit::<T>(1e-6);
    if eta[0].abs() < tol || eta[2].abs() < tol {
        return invalid("M(eta) is singular when |eta_1| or |eta_3| < 1e-6");
    }
    let (e1, e2, e3) = (eta[0], eta[1], eta[2]);
    let m_real = [
        [-e2 / e1, -e3 / e1, e1 / e3],
        [T::one(), T::zero(), e2 / e3],
        [T::zero(), T::one(), T::one()],
    ];
    let sym = build_symbol(params, eta)?;
    let to_c = |a: [[T; 3]; 3]| -> CMat<T, 3> { a.map(|r| r.map(creal)) };
    let m = to_c(m_real);
    let minv = linalg::inverse(&m).ok_or_else(|| Error::Numerical("M(eta) singular".into()))?;
    let prod = linalg::mul(&minv, &linalg::mul(&to_c(sym.a_eta), &m));
    let diag = [params.a2, params.a2, params.b2];
    let mut res = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { creal(diag[i]) } else { czero() };
            res = res.max((prod[i][j] - target).norm());
        }
    }
    Ok(res)
}
