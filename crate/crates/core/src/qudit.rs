//! Arithmetic over `Z_d`, generalized Pauli operators, the Clifford generators
//! and Haar-random unitaries.
//!
//! Conventions used throughout the crate:
//!
//! * `X|m> = |m + 1 mod d>` and `Z|m> = ω^m |m>` with `ω = exp(2πi/d)`.
//! * A Pauli string `Z_q X_p` carries no extra phase; on every site the `Z`
//!   factor sits to the left of the `X` factor.
//! * Multi-site basis states are indexed with site 0 as the most significant
//!   base-`d` digit, so `kron(A, B)` acts with `A` on site 0.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::StateVector;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Qudit dimensions accepted at the API surface.
pub const SUPPORTED_DIMS: [u32; 4] = [2, 3, 5, 7];

/// Largest operator side length `pauli_string_matrix` will materialize.
pub const MAX_DENSE_DIM: usize = 1 << 12;

/// A prime qudit dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Dim(u32);

impl Dim {
    pub fn new(d: u32) -> Result<Self> {
        if SUPPORTED_DIMS.contains(&d) {
            Ok(Dim(d))
        } else {
            Err(Error::invalid(format!(
                "qudit dimension must be one of {SUPPORTED_DIMS:?}, got {d}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    /// `D = 2d` for even `d`, `D = d` for odd `d`: the modulus of the
    /// quadratic defect condition and the replica count of the `Y_d` family.
    #[inline]
    pub fn replica_count(self) -> usize {
        if self.0 % 2 == 0 {
            2 * self.0 as usize
        } else {
            self.0 as usize
        }
    }

    /// `ω^k` with `ω = exp(2πi/d)`.
    pub fn omega_pow(self, k: i64) -> C64 {
        let d = self.0 as i64;
        let r = k.rem_euclid(d) as f64;
        C64::from_polar(1.0, 2.0 * PI * r / d as f64)
    }

    /// Multiplicative inverse in `Z_d`; `None` for zero.
    pub fn inverse(self, a: u32) -> Option<u32> {
        let a = a % self.0;
        (1..self.0).find(|&b| (a * b) % self.0 == 1)
    }
}

impl TryFrom<u32> for Dim {
    type Error = Error;
    fn try_from(d: u32) -> Result<Self> {
        Dim::new(d)
    }
}

impl From<Dim> for u32 {
    fn from(d: Dim) -> u32 {
        d.0
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element of the finite field `Z_d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldScalar {
    value: u32,
    modulus: Dim,
}

impl FieldScalar {
    pub fn new(value: i64, modulus: Dim) -> Self {
        FieldScalar {
            value: value.rem_euclid(modulus.get() as i64) as u32,
            modulus,
        }
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> Dim {
        self.modulus
    }

    pub fn inverse(self) -> Option<Self> {
        self.modulus
            .inverse(self.value)
            .map(|v| FieldScalar::new(v as i64, self.modulus))
    }

    fn check(self, other: Self) {
        assert_eq!(self.modulus, other.modulus, "mixed field moduli");
    }
}

impl Add for FieldScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.check(rhs);
        FieldScalar::new(self.value as i64 + rhs.value as i64, self.modulus)
    }
}

impl Sub for FieldScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.check(rhs);
        FieldScalar::new(self.value as i64 - rhs.value as i64, self.modulus)
    }
}

impl Mul for FieldScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.check(rhs);
        FieldScalar::new(self.value as i64 * rhs.value as i64, self.modulus)
    }
}

impl Neg for FieldScalar {
    type Output = Self;
    fn neg(self) -> Self {
        FieldScalar::new(-(self.value as i64), self.modulus)
    }
}

/// The Pauli string `Z_q X_p = ⊗_i Z^{q_i} X^{p_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString {
    d: Dim,
    q: Vec<u32>,
    p: Vec<u32>,
}

impl PauliString {
    pub fn new(d: Dim, q: Vec<u32>, p: Vec<u32>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::invalid(format!(
                "Z and X exponent vectors differ in length ({} vs {})",
                q.len(),
                p.len()
            )));
        }
        if q.iter().chain(&p).any(|&e| e >= d.get()) {
            return Err(Error::invalid(format!(
                "Pauli exponents must lie in [0, {d})"
            )));
        }
        Ok(PauliString { d, q, p })
    }

    pub fn identity(d: Dim, n: usize) -> Self {
        PauliString {
            d,
            q: vec![0; n],
            p: vec![0; n],
        }
    }

    /// Decodes `index` in `[0, d^{2n})`; the low `n` digits are `p`, the
    /// high `n` digits are `q`, site 0 most significant in each half.
    pub fn from_index(d: Dim, n: usize, index: usize) -> Self {
        let du = d.as_usize();
        let size = du.pow(n as u32);
        let (qi, pi) = (index / size, index % size);
        PauliString {
            d,
            q: digits(qi, du, n).into_iter().map(|x| x as u32).collect(),
            p: digits(pi, du, n).into_iter().map(|x| x as u32).collect(),
        }
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn z_exponents(&self) -> &[u32] {
        &self.q
    }

    pub fn x_exponents(&self) -> &[u32] {
        &self.p
    }

    pub fn is_identity(&self) -> bool {
        self.q.iter().chain(&self.p).all(|&e| e == 0)
    }

    /// Exponent-vector sum; `(Z_q X_p)(Z_q' X_p') = ω^{-q'·p} Z_{q+q'} X_{p+p'}`.
    pub fn compose_exponents(&self, other: &PauliString) -> (PauliString, u32) {
        let d = self.d.get();
        let add = |a: &[u32], b: &[u32]| -> Vec<u32> {
            a.iter().zip(b).map(|(x, y)| (x + y) % d).collect()
        };
        let dot: u32 = other.q.iter().zip(&self.p).map(|(a, b)| a * b).sum::<u32>() % d;
        (
            PauliString {
                d: self.d,
                q: add(&self.q, &other.q),
                p: add(&self.p, &other.p),
            },
            (d - dot) % d,
        )
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, p) in self.q.iter().zip(&self.p) {
            write!(f, "[{q}{p}]")?;
        }
        Ok(())
    }
}

/// A square unitary matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("unitary matrix must be square"));
        }
        let dev = unitarity_deviation(&m);
        if dev > 1e-10 {
            return Err(Error::invalid(format!(
                "matrix is not unitary (max |U†U - I| = {dev:.3e})"
            )));
        }
        Ok(UnitaryMatrix(m))
    }

    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        UnitaryMatrix(m)
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryMatrix(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        UnitaryMatrix(self.0.adjoint())
    }

    pub fn compose(&self, rhs: &UnitaryMatrix) -> Self {
        UnitaryMatrix(&self.0 * &rhs.0)
    }

    pub fn kron(&self, rhs: &UnitaryMatrix) -> Self {
        UnitaryMatrix(self.0.kronecker(&rhs.0))
    }

    pub fn deviation(&self) -> f64 {
        unitarity_deviation(&self.0)
    }
}

/// `max |U†U - I|`.
pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    let prod = m.adjoint() * m;
    let n = prod.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Base-`d` digits of `index`, most significant first.
pub fn digits(mut index: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

/// Inverse of [`digits`].
pub fn from_digits(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

/// Single-site `Z^q X^p`.
pub fn pauli_matrix(d: Dim, q: u32, p: u32) -> Result<UnitaryMatrix> {
    if q >= d.get() || p >= d.get() {
        return Err(Error::invalid(format!(
            "Pauli exponents must lie in [0, {d})"
        )));
    }
    let du = d.as_usize();
    // (Z^q X^p)|n> = ω^{q(n+p)} |n+p>
    let mut m = CMatrix::zeros(du, du);
    for n in 0..du {
        let row = (n + p as usize) % du;
        m[(row, n)] = d.omega_pow((q as usize * row) as i64);
    }
    Ok(UnitaryMatrix(m))
}

/// Dense matrix of a Pauli string.
pub fn pauli_string_matrix(s: &PauliString) -> Result<UnitaryMatrix> {
    let du = s.d.as_usize();
    let size = checked_pow(du, s.len())
        .filter(|&n| n <= MAX_DENSE_DIM)
        .ok_or_else(|| {
            Error::resource(format!(
                "Pauli string on {} sites of dimension {} exceeds {MAX_DENSE_DIM}",
                s.len(),
                du
            ))
        })?;
    let mut m = CMatrix::zeros(size, size);
    for col in 0..size {
        let mut row_digits = digits(col, du, s.len());
        let mut phase = 0i64;
        for (i, digit) in row_digits.iter_mut().enumerate() {
            *digit = (*digit + s.p[i] as usize) % du;
            phase += s.q[i] as i64 * *digit as i64;
        }
        m[(from_digits(&row_digits, du), col)] = s.d.omega_pow(phase);
    }
    Ok(UnitaryMatrix(m))
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let exp = u32::try_from(exp).ok()?;
    base.checked_pow(exp)
}

/// `<Ψ|Z_q X_p|Ψ>` evaluated directly on the amplitudes.
pub fn pauli_expectation(state: &StateVector, s: &PauliString) -> Result<C64> {
    if state.dim() != s.d || state.sites() != s.len() {
        return Err(Error::invalid(format!(
            "Pauli string ({} sites, d={}) does not match state ({} sites, d={})",
            s.len(),
            s.d,
            state.sites(),
            state.dim()
        )));
    }
    let du = s.d.as_usize();
    let n = s.len();
    let amps = state.amplitudes();
    let mut acc = C64::new(0.0, 0.0);
    let mut digs = vec![0usize; n];
    for &amp in amps {
        if amp == C64::new(0.0, 0.0) {
            advance(&mut digs, du);
            continue;
        }
        let mut row = 0usize;
        let mut phase = 0i64;
        for i in 0..n {
            let r = (digs[i] + s.p[i] as usize) % du;
            row = row * du + r;
            phase += s.q[i] as i64 * r as i64;
        }
        acc += amps[row].conj() * s.d.omega_pow(phase) * amp;
        advance(&mut digs, du);
    }
    Ok(acc)
}

/// Increments a most-significant-first base-`d` counter.
pub(crate) fn advance(digs: &mut [usize], d: usize) {
    for x in digs.iter_mut().rev() {
        *x += 1;
        if *x < d {
            return;
        }
        *x = 0;
    }
}

/// Expansion coefficients `c_P = tr(P† M) / d^n` of `M` in the Pauli basis;
/// entries below `1e-12` are omitted.
pub fn pauli_coefficients(m: &CMatrix, d: Dim, n: usize) -> Result<Vec<(PauliString, C64)>> {
    let du = d.as_usize();
    let size = checked_pow(du, n).ok_or_else(|| Error::resource("operator too large"))?;
    if m.nrows() != size || m.ncols() != size {
        return Err(Error::invalid("matrix size does not match d^n"));
    }
    let mut out = Vec::new();
    for idx in 0..size * size {
        let s = PauliString::from_index(d, n, idx);
        let pm = pauli_string_matrix(&s)?;
        let c = (pm.matrix().adjoint() * m).trace() / size as f64;
        if c.norm() > 1e-12 {
            out.push((s, c));
        }
    }
    Ok(out)
}

/// Hadamard, phase and CADD gates generating the Clifford group.
#[derive(Clone, Debug)]
pub struct CliffordGenerators {
    pub h: UnitaryMatrix,
    pub p: UnitaryMatrix,
    pub cadd: UnitaryMatrix,
}

pub fn clifford_generators(d: Dim) -> CliffordGenerators {
    let du = d.as_usize();
    let norm = 1.0 / (du as f64).sqrt();
    let h = CMatrix::from_fn(du, du, |m, n| d.omega_pow((m * n) as i64) * norm);
    let p = if d.get() == 2 {
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
        ]))
    } else {
        let half = d.inverse(2).expect("2 is invertible for odd d") as i64;
        CMatrix::from_fn(du, du, |m, n| {
            if m == n {
                let m = m as i64;
                d.omega_pow(m * (m - 1) * half)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    };
    let mut cadd = CMatrix::zeros(du * du, du * du);
    for m in 0..du {
        for n in 0..du {
            cadd[(m * du + (m + n) % du, m * du + n)] = C64::new(1.0, 0.0);
        }
    }
    CliffordGenerators {
        h: UnitaryMatrix(h),
        p: UnitaryMatrix(p),
        cadd: UnitaryMatrix(cadd),
    }
}

/// A 64-bit seed; streams derived from it are reproducible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

pub type RngStream = ChaCha8Rng;

impl RngSeed {
    pub fn stream(self) -> RngStream {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent child seed for work unit `index` (splitmix64 mixing).
    pub fn child(self, index: u64) -> RngSeed {
        let mut z = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal moved into `Q`.
pub fn random_haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryMatrix {
    assert!(dim >= 1, "unitary dimension must be positive");
    let mut entries = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        entries.push(C64::new(re, im) * FRAC_1_SQRT_2);
    }
    let z = CMatrix::from_vec(dim, dim, entries);
    let (mut q, r) = z.qr().unpack();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).iter().all(|z| z.norm() <= tol)
    }

    fn d(n: u32) -> Dim {
        Dim::new(n).unwrap()
    }

    #[test]
    fn rejects_non_prime_dimensions() {
        assert!(Dim::new(4).is_err());
        assert!(Dim::new(1).is_err());
        assert!(Dim::new(11).is_err());
        assert_eq!(d(2).replica_count(), 4);
        assert_eq!(d(3).replica_count(), 3);
        assert_eq!(d(7).replica_count(), 7);
    }

    #[test]
    fn field_arithmetic_wraps() {
        let a = FieldScalar::new(4, d(5));
        let b = FieldScalar::new(3, d(5));
        assert_eq!((a + b).value(), 2);
        assert_eq!((a * b).value(), 2);
        assert_eq!((b - a).value(), 4);
        assert_eq!((-a).value(), 1);
        assert_eq!(a.inverse().unwrap().value(), 4);
        assert_eq!(FieldScalar::new(2, d(3)).inverse().unwrap().value(), 2);
        assert!(FieldScalar::new(0, d(3)).inverse().is_none());
    }

    #[test]
    fn single_site_paulis() {
        let id = pauli_matrix(d(2), 0, 0).unwrap();
        assert!(close(id.matrix(), &CMatrix::identity(2, 2), 0.0));

        let z = pauli_matrix(d(2), 1, 0).unwrap();
        let expect = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(-1.0, 0.0),
            ],
        );
        assert!(close(z.matrix(), &expect, 1e-15));

        let x3 = pauli_matrix(d(3), 0, 1).unwrap();
        for m in 0..3 {
            assert_eq!(x3.matrix()[((m + 1) % 3, m)], C64::new(1.0, 0.0));
        }
        let cube = x3.matrix() * x3.matrix() * x3.matrix();
        assert!(close(&cube, &CMatrix::identity(3, 3), 1e-15));
        assert!(pauli_matrix(d(3), 3, 0).is_err());
    }

    #[test]
    fn pauli_power_d_is_scalar() {
        for dd in [2, 3, 5] {
            let dim = d(dd);
            for q in 0..dd {
                for p in 0..dd {
                    let m = pauli_matrix(dim, q, p).unwrap();
                    assert!(m.deviation() < 1e-12);
                    let mut acc = CMatrix::identity(dd as usize, dd as usize);
                    for _ in 0..dd {
                        acc = &acc * m.matrix();
                    }
                    let phase = acc[(0, 0)];
                    let found = (0..2 * dd as i64).any(|c| {
                        let w = C64::from_polar(1.0, PI * c as f64 / dd as f64);
                        (phase - w).norm() < 1e-12
                    });
                    assert!(found, "phase {phase} not a root of unity");
                    assert!(close(
                        &acc,
                        &(CMatrix::identity(dd as usize, dd as usize) * phase),
                        1e-12
                    ));
                }
            }
        }
    }

    #[test]
    fn string_matrix_is_kronecker_product() {
        let id = pauli_string_matrix(&PauliString::identity(d(2), 3)).unwrap();
        assert!(close(id.matrix(), &CMatrix::identity(8, 8), 0.0));

        let s = PauliString::new(d(2), vec![1, 0], vec![0, 1]).unwrap();
        let m = pauli_string_matrix(&s).unwrap();
        let zx = pauli_matrix(d(2), 1, 0)
            .unwrap()
            .kron(&pauli_matrix(d(2), 0, 1).unwrap());
        assert!(close(m.matrix(), zx.matrix(), 1e-15));
    }

    #[test]
    fn string_multiplication_rule() {
        for dd in [2u32, 3] {
            let dim = d(dd);
            let total = (dd as usize).pow(4);
            for i in 0..total {
                for j in 0..total {
                    let a = PauliString::from_index(dim, 2, i);
                    let b = PauliString::from_index(dim, 2, j);
                    let lhs = pauli_string_matrix(&a).unwrap().into_matrix()
                        * pauli_string_matrix(&b).unwrap().into_matrix();
                    let (c, phase) = a.compose_exponents(&b);
                    let rhs = pauli_string_matrix(&c).unwrap().into_matrix()
                        * dim.omega_pow(phase as i64);
                    assert!(close(&lhs, &rhs, 1e-12), "{a} * {b}");
                }
            }
        }
    }

    #[test]
    fn string_matrix_guard() {
        let s = PauliString::identity(d(2), 13);
        assert!(matches!(pauli_string_matrix(&s), Err(Error::Resource(_))));
    }

    #[test]
    fn expectation_on_simple_states() {
        let zero = StateVector::zero(d(2), 3).unwrap();
        let allz = PauliString::new(d(2), vec![1, 1, 1], vec![0, 0, 0]).unwrap();
        assert!((pauli_expectation(&zero, &allz).unwrap() - 1.0).norm() < 1e-15);
        let shifted = PauliString::new(d(2), vec![1, 0, 1], vec![0, 1, 0]).unwrap();
        assert!(pauli_expectation(&zero, &shifted).unwrap().norm() < 1e-15);

        let t = StateVector::t_state();
        let x = PauliString::new(d(2), vec![0], vec![1]).unwrap();
        let zx = PauliString::new(d(2), vec![1], vec![1]).unwrap();
        let z = PauliString::new(d(2), vec![1], vec![0]).unwrap();
        let h = FRAC_1_SQRT_2;
        assert!((pauli_expectation(&t, &x).unwrap().re - h).abs() < 1e-14);
        // Z X = iY, so <Y> = -i <ZX>
        let y = pauli_expectation(&t, &zx).unwrap() * C64::new(0.0, -1.0);
        assert!((y.re.abs() - h).abs() < 1e-14 && y.im.abs() < 1e-14);
        assert!(pauli_expectation(&t, &z).unwrap().norm() < 1e-14);

        let mismatch = PauliString::identity(d(3), 3);
        assert!(pauli_expectation(&zero, &mismatch).is_err());
    }

    #[test]
    fn generator_matrices() {
        let g2 = clifford_generators(d(2));
        let h = FRAC_1_SQRT_2;
        let expect_h = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(h, 0.0),
                C64::new(h, 0.0),
                C64::new(h, 0.0),
                C64::new(-h, 0.0),
            ],
        );
        assert!(close(g2.h.matrix(), &expect_h, 1e-15));
        assert_eq!(g2.p.matrix()[(1, 1)], C64::new(0.0, 1.0));
        assert_eq!(g2.p.matrix()[(0, 0)], C64::new(1.0, 0.0));

        let g3 = clifford_generators(d(3));
        let w = d(3).omega_pow(1);
        let diag: Vec<C64> = (0..3).map(|i| g3.p.matrix()[(i, i)]).collect();
        assert!((diag[0] - 1.0).norm() < 1e-15);
        assert!((diag[1] - 1.0).norm() < 1e-15);
        assert!((diag[2] - w).norm() < 1e-15);

        for dd in [2, 3, 5, 7] {
            let g = clifford_generators(d(dd));
            assert!(g.h.deviation() < 1e-12);
            assert!(g.p.deviation() < 1e-12);
            assert!(g.cadd.deviation() < 1e-12);
        }
    }

    /// Conjugating each single-site generator Pauli by a Clifford generator
    /// yields one Pauli string times a phase.
    #[test]
    fn generators_normalize_the_pauli_group() {
        for dd in [2u32, 3] {
            let dim = d(dd);
            let g = clifford_generators(dim);
            let id = UnitaryMatrix::identity(dd as usize);
            let two_site = [
                g.h.kron(&id),
                id.kron(&g.h),
                g.p.kron(&id),
                id.kron(&g.p),
                g.cadd.clone(),
            ];
            for u in &two_site {
                for idx in 0..(dd as usize).pow(4) {
                    let s = PauliString::from_index(dim, 2, idx);
                    let pm = pauli_string_matrix(&s).unwrap().into_matrix();
                    let conj = u.matrix() * pm * u.matrix().adjoint();
                    let coeffs = pauli_coefficients(&conj, dim, 2).unwrap();
                    assert_eq!(coeffs.len(), 1, "{s} maps to {} terms", coeffs.len());
                    assert!((coeffs[0].1.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn haar_sampling_is_unitary_and_seeded() {
        let mut rng = RngSeed(7).stream();
        for dim in [1, 2, 4, 9] {
            let u = random_haar_unitary(dim, &mut rng);
            assert!(u.deviation() < 1e-12);
        }
        let u1 = random_haar_unitary(1, &mut RngSeed(3).stream());
        assert!((u1.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-14);

        let a = random_haar_unitary(4, &mut RngSeed(11).stream());
        let b = random_haar_unitary(4, &mut RngSeed(11).stream());
        assert_eq!(a, b);
        let c = random_haar_unitary(4, &mut RngSeed(12).stream());
        assert_ne!(a, c);
    }

    #[test]
    fn haar_first_moments() {
        let samples = 100_000;
        let dim = 4;
        let mut rng = RngSeed(2024).stream();
        let (mut sum, mut sum_sq) = (C64::new(0.0, 0.0), 0.0);
        let mut abs2 = Vec::with_capacity(samples);
        for _ in 0..samples {
            let u = random_haar_unitary(dim, &mut rng);
            let z = u.matrix()[(0, 0)];
            sum += z;
            sum_sq += z.norm_sqr();
            abs2.push(z.norm_sqr());
        }
        let m = samples as f64;
        let mean = sum / m;
        // E|U00|^2 = 1/dim, so each of Re, Im has variance 1/(2 dim)
        let sigma_mean = (1.0 / (2.0 * dim as f64) / m).sqrt();
        assert!(mean.re.abs() < 4.0 * sigma_mean && mean.im.abs() < 4.0 * sigma_mean);

        let mean_abs2 = sum_sq / m;
        let var = abs2.iter().map(|x| (x - mean_abs2).powi(2)).sum::<f64>() / (m - 1.0);
        assert!((mean_abs2 - 1.0 / dim as f64).abs() < 4.0 * (var / m).sqrt());
    }

    #[test]
    fn child_seeds_differ() {
        let s = RngSeed(5);
        assert_ne!(s.child(0), s.child(1));
        assert_eq!(s.child(3), RngSeed(5).child(3));
    }
}
