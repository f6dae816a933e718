//! Fixed-size dense complex matrices (6×6 micro-energy systems and friends).

use num_complex::Complex;

use crate::scalar::{czero, Real};

pub type CMat<T, const N: usize> = [[Complex<T>; N]; N];
pub type CVec<T, const N: usize> = [Complex<T>; N];
pub type CMat6<T> = CMat<T, 6>;
pub type CVec6<T> = CVec<T, 6>;

pub fn zeros<T: Real, const N: usize>() -> CMat<T, N> {
    [[czero(); N]; N]
}

pub fn identity<T: Real, const N: usize>() -> CMat<T, N> {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex::new(T::one(), T::zero());
    }
    m
}

pub fn add<T: Real, const N: usize>(a: &CMat<T, N>, b: &CMat<T, N>) -> CMat<T, N> {
    let mut c = *a;
    for i in 0..N {
        for j in 0..N {
            c[i][j] = c[i][j] + b[i][j];
        }
    }
    c
}

pub fn scale<T: Real, const N: usize>(a: &CMat<T, N>, s: Complex<T>) -> CMat<T, N> {
    let mut c = *a;
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x = *x * s;
        }
    }
    c
}

pub fn mul<T: Real, const N: usize>(a: &CMat<T, N>, b: &CMat<T, N>) -> CMat<T, N> {
    let mut c = zeros();
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            if aik == czero() {
                continue;
            }
            for j in 0..N {
                c[i][j] = c[i][j] + aik * b[k][j];
            }
        }
    }
    c
}

pub fn mul_vec<T: Real, const N: usize>(a: &CMat<T, N>, x: &CVec<T, N>) -> CVec<T, N> {
    let mut y = [czero(); N];
    for i in 0..N {
        let mut s = czero();
        for j in 0..N {
            s = s + a[i][j] * x[j];
        }
        y[i] = s;
    }
    y
}

/// Maximum absolute column sum.
pub fn norm1<T: Real, const N: usize>(a: &CMat<T, N>) -> T {
    (0..N)
        .map(|j| (0..N).fold(T::zero(), |s, i| s + a[i][j].norm()))
        .fold(T::zero(), |m, x| m.max(x))
}

pub fn max_abs<T: Real, const N: usize>(a: &CMat<T, N>) -> T {
    a.iter().flat_map(|r| r.iter()).fold(T::zero(), |m, x| m.max(x.norm()))
}

/// Gauss-Jordan inverse with partial pivoting; `None` if singular.
pub fn inverse<T: Real, const N: usize>(a: &CMat<T, N>) -> Option<CMat<T, N>> {
    let mut m = *a;
    let mut inv = identity::<T, N>();
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| {
            m[i][col]
                .norm()
                .partial_cmp(&m[j][col].norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[piv][col].norm().is_zero() || !m[piv][col].norm().is_finite() {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col].inv();
        for j in 0..N {
            m[col][j] = m[col][j] * p;
            inv[col][j] = inv[col][j] * p;
        }
        for i in 0..N {
            if i == col {
                continue;
            }
            let f = m[i][col];
            if f == czero() {
                continue;
            }
            for j in 0..N {
                m[i][j] = m[i][j] - f * m[col][j];
                inv[i][j] = inv[i][j] - f * inv[col][j];
            }
        }
    }
    Some(inv)
}

/// 1-norm condition number, infinite when singular.
pub fn condition<T: Real, const N: usize>(a: &CMat<T, N>) -> T {
    match inverse(a) {
        Some(inv) => norm1(a) * norm1(&inv),
        None => T::infinity(),
    }
}

/// Determinant by LU with partial pivoting.
pub fn det<T: Real, const N: usize>(a: &CMat<T, N>) -> Complex<T> {
    let mut m = *a;
    let mut d = Complex::new(T::one(), T::zero());
    for col in 0..N {
        let piv = (col..N)
            .max_by(|&i, &j| {
                m[i][col]
                    .norm()
                    .partial_cmp(&m[j][col].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if m[piv][col] == czero() {
            return czero();
        }
        if piv != col {
            m.swap(col, piv);
            d = -d;
        }
        d = d * m[col][col];
        for i in col + 1..N {
            let f = m[i][col] / m[col][col];
            for j in col..N {
                m[i][j] = m[i][j] - f * m[col][j];
            }
        }
    }
    d
}

pub fn vec_norm<T: Real, const N: usize>(x: &CVec<T, N>) -> T {
    x.iter().fold(T::zero(), |s, v| s + v.norm_sqr()).sqrt()
}
