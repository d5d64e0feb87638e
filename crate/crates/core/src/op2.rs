// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense 2×2 complex operators acting on a single mode pair.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::scalar::Real;

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Op2<T> {
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Real> Op2<T> {
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Self {
        Self {
            m: [[a, b], [c, d]],
        }
    }

    pub fn real(a: T, b: T, c: T, d: T) -> Self {
        Self::new(
            Complex::from(a),
            Complex::from(b),
            Complex::from(c),
            Complex::from(d),
        )
    }

    pub fn identity() -> Self {
        Self::real(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn sigma_x() -> Self {
        Self::real(T::zero(), T::one(), T::one(), T::zero())
    }

    pub fn sigma_y() -> Self {
        let i = Complex::i();
        Self::new(Complex::from(T::zero()), -i, i, Complex::from(T::zero()))
    }

    pub fn sigma_z() -> Self {
        Self::real(T::one(), T::zero(), T::zero(), -T::one())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let m = &self.m;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new(
            m[0][0].conj(),
            m[1][0].conj(),
            m[0][1].conj(),
            m[1][1].conj(),
        )
    }

    #[inline]
    pub fn apply(&self, v: [Complex<T>; 2]) -> [Complex<T>; 2] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// ⟨u|A|v⟩.
    #[inline]
    pub fn sandwich(&self, u: [Complex<T>; 2], v: [Complex<T>; 2]) -> Complex<T> {
        let av = self.apply(v);
        u[0].conj() * av[0] + u[1].conj() * av[1]
    }

    /// Largest absolute entry; used for closeness checks.
    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> Mul for Op2<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<T: Real> Add for Op2<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        Self::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

impl<T: Real> Sub for Op2<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(Complex::from(-T::one()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (Op2::<f64>::sigma_x(), Op2::sigma_y(), Op2::sigma_z());
        let i = Complex::i();
        assert!((x * y - z.scale(i)).max_abs() < 1e-15);
        assert!((x * x - Op2::identity()).max_abs() < 1e-15);
        assert!((y.adjoint() - y).max_abs() < 1e-15);
    }
}
