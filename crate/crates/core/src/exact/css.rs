//! CSS entropies of dense states.
//!
//! Two independent evaluations of `Υ_A = tr(r(A)^{⊗N} ρ^{⊗k})`:
//!
//! * [`upsilon_replica`] works for any defect subspace: it builds `|Ψ>^{⊗k}`
//!   and applies `r(A) = |A| Q_A` on the `k` replica copies of every site.
//! * [`upsilon_pauli_spectrum`] handles `A = span{1_D}` through
//!   `Υ_d = d^{-N} Σ_P <P>^D`, obtaining all Pauli expectations with one
//!   radix-`d` Fourier transform per shift vector.

use crate::defects::{css_projector, DefectSubspace};
use crate::error::{Error, Result};
use crate::qudit::{checked_pow, digits, from_digits, Dim, C64};

use super::StateVector;

/// Guard on `d^{N k}` for the replica route.
pub const MAX_REPLICA_AMPLITUDES: usize = 1 << 22;

/// Imaginary residue tolerated on `Υ`.
pub const IMAG_TOLERANCE: f64 = 1e-10;

/// `Υ_A` by explicit replica contraction.
pub fn upsilon_replica(state: &StateVector, a: &DefectSubspace) -> Result<C64> {
    if state.dim() != a.dim() {
        return Err(Error::invalid("state and defect subspace use different d"));
    }
    let du = state.dim().as_usize();
    let n = state.sites();
    let k = a.replicas();
    let total = checked_pow(du, n * k)
        .filter(|&s| s <= MAX_REPLICA_AMPLITUDES)
        .ok_or_else(|| {
            Error::resource(format!(
                "{k} replicas of {n} qudits exceed {MAX_REPLICA_AMPLITUDES} amplitudes"
            ))
        })?;

    // Sparse columns of r(A): r[x, y] for each y.
    let r = css_projector(a)?.replica_operator();
    let local = du.pow(k as u32);
    let columns: Vec<Vec<(usize, C64)>> = (0..local)
        .map(|y| {
            (0..local)
                .filter_map(|x| {
                    let v = r[(x, y)];
                    (v.norm() > 1e-14).then_some((x, v))
                })
                .collect()
        })
        .collect();

    // |Ψ>^{⊗k}, laid out site-major: digit (i, j) = site i of replica j sits at
    // position i*k + j, so the k replica digits of a site are contiguous.
    let amps = state.amplitudes();
    let mut psi_k = vec![C64::new(0.0, 0.0); total];
    let mut site_digits = vec![0usize; n * k];
    for (idx, slot) in psi_k.iter_mut().enumerate() {
        let all = digits(idx, du, n * k);
        let mut value = C64::new(1.0, 0.0);
        for j in 0..k {
            for i in 0..n {
                site_digits[i] = all[i * k + j];
            }
            value *= amps[from_digits(&site_digits[..n], du)];
            if value == C64::new(0.0, 0.0) {
                break;
            }
        }
        *slot = value;
    }

    let mut phi = psi_k.clone();
    let mut scratch = vec![C64::new(0.0, 0.0); local];
    for site in 0..n {
        let stride = local.pow((n - 1 - site) as u32);
        for outer in 0..total / (local * stride) {
            for inner in 0..stride {
                let base = outer * local * stride + inner;
                scratch.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                for (y, col) in columns.iter().enumerate() {
                    let v = phi[base + y * stride];
                    if v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for &(x, rv) in col {
                        scratch[x] += rv * v;
                    }
                }
                for (x, s) in scratch.iter().enumerate() {
                    phi[base + x * stride] = *s;
                }
            }
        }
    }
    Ok(psi_k.iter().zip(&phi).map(|(a, b)| a.conj() * b).sum())
}

/// `Υ_d` for `A = span{1_D}` from the full Pauli spectrum.
pub fn upsilon_pauli_spectrum(state: &StateVector) -> Result<C64> {
    if state.dim().get() == 2 {
        return Ok(C64::new(
            qubit_upsilon(state.amplitudes(), state.sites()),
            0.0,
        ));
    }
    Ok(generic_upsilon(state))
}

/// Radix-`d` transform `H(a) = Σ_m ω^{a·m} h(m)` in place.
fn radix_transform(buf: &mut [C64], d: Dim, n: usize, roots: &[C64], tmp: &mut [C64]) {
    let du = d.as_usize();
    for site in 0..n {
        let stride = du.pow((n - 1 - site) as u32);
        for outer in 0..buf.len() / (du * stride) {
            for inner in 0..stride {
                let base = outer * du * stride + inner;
                for (m, t) in tmp.iter_mut().enumerate() {
                    *t = buf[base + m * stride];
                }
                for a in 0..du {
                    let mut acc = C64::new(0.0, 0.0);
                    for (m, t) in tmp.iter().enumerate() {
                        acc += roots[(a * m) % du] * t;
                    }
                    buf[base + a * stride] = acc;
                }
            }
        }
    }
}

fn generic_upsilon(state: &StateVector) -> C64 {
    let d = state.dim();
    let du = d.as_usize();
    let n = state.sites();
    let big_d = d.replica_count() as i32;
    let amps = state.amplitudes();
    let size = amps.len();
    let roots: Vec<C64> = (0..du).map(|k| d.omega_pow(k as i64)).collect();
    let mut buf = vec![C64::new(0.0, 0.0); size];
    let mut tmp = vec![C64::new(0.0, 0.0); du];
    let mut total = C64::new(0.0, 0.0);
    for b in 0..size {
        let bd = digits(b, du, n);
        let mut md = vec![0usize; n];
        // h_b(m) = conj(ψ_m) ψ_{m-b}, so that H_b(a) = <Z_a X_b>
        for (m, slot) in buf.iter_mut().enumerate() {
            for i in 0..n {
                md[i] = (digits_at(m, du, n, i) + du - bd[i]) % du;
            }
            *slot = amps[m].conj() * amps[from_digits(&md, du)];
        }
        radix_transform(&mut buf, d, n, &roots, &mut tmp);
        total += buf.iter().map(|z| z.powi(big_d)).sum::<C64>();
    }
    total / size as f64
}

#[inline]
fn digits_at(index: usize, d: usize, n: usize, i: usize) -> usize {
    (index / d.pow((n - 1 - i) as u32)) % d
}

/// In-place Walsh–Hadamard transform (unnormalized).
fn fwht(buf: &mut [f64]) {
    let len = buf.len();
    let mut h = 1;
    while h < len {
        for start in (0..len).step_by(2 * h) {
            let (lo, hi) = buf[start..start + 2 * h].split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
}

/// `Υ_2 = 2^{-N} Σ_{a,b} |<Z_a X_b>|^4` for qubits.
///
/// For a shift `b ≠ 0` the sequence `h(m) = conj(ψ_m) ψ_{m⊕b}` satisfies
/// `h(m⊕b) = conj(h(m))`, so its transform is `2·WHT(Re h)` on one parity
/// class of `a·b` and `2i·WHT(Im h)` on the other; both are transforms of
/// length `2^{N-1}` over the half with the pivot bit of `b` cleared.
pub(crate) fn qubit_upsilon(amps: &[C64], n: usize) -> f64 {
    let size = amps.len();
    debug_assert_eq!(size, 1 << n);
    let mut total;
    {
        let mut diag: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
        fwht(&mut diag);
        total = diag.iter().map(|x| x.powi(4)).sum::<f64>();
    }
    if n == 0 {
        return total;
    }
    let half = size / 2;
    let mut re = vec![0.0; half];
    let mut im = vec![0.0; half];
    for b in 1..size {
        let pivot = usize::BITS - 1 - b.leading_zeros();
        let low_mask = (1usize << pivot) - 1;
        for (mp, (r, i)) in re.iter_mut().zip(im.iter_mut()).enumerate() {
            // insert a zero at the pivot bit
            let m = ((mp & !low_mask) << 1) | (mp & low_mask);
            let h = amps[m].conj() * amps[m ^ b];
            *r = h.re;
            *i = h.im;
        }
        fwht(&mut re);
        fwht(&mut im);
        let s: f64 = re.iter().zip(&im).map(|(r, i)| r.powi(4) + i.powi(4)).sum();
        total += 16.0 * s;
    }
    total / size as f64
}

/// `Υ_A` by the cheapest applicable route.
pub fn upsilon_exact(state: &StateVector, a: &DefectSubspace) -> Result<f64> {
    if state.dim() != a.dim() {
        return Err(Error::invalid("state and defect subspace use different d"));
    }
    let ups = if a.is_all_ones() {
        upsilon_pauli_spectrum(state)?
    } else {
        upsilon_replica(state, a)?
    };
    check_upsilon(ups)
}

pub(crate) fn check_upsilon(ups: C64) -> Result<f64> {
    if ups.im.abs() > IMAG_TOLERANCE || !ups.re.is_finite() {
        return Err(Error::numerical(
            "exact",
            format!("Υ has imaginary residue {:.3e}", ups.im),
        ));
    }
    if ups.re <= 0.0 {
        return Err(Error::numerical(
            "exact",
            format!("Υ = {} is not positive", ups.re),
        ));
    }
    Ok(ups.re)
}

/// `Y_A = -log Υ_A`.
pub fn css_entropy_exact(state: &StateVector, a: &DefectSubspace) -> Result<f64> {
    Ok(-upsilon_exact(state, a)?.ln())
}
