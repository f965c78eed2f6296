//! Haar saturation values, Stirling cycle numbers and decay fits.

use serde::Serialize;

use crate::defects::{all_ones_overlap, css_overlap_table, DefectSubspace};
use crate::error::{Error, Result};
use crate::qudit::Dim;
use crate::replica::Permutation;

/// Largest `n` accepted by [`stirling_cycle`].
pub const MAX_STIRLING_N: usize = 8;

/// Unsigned Stirling number of the first kind: permutations of `n` elements
/// with exactly `k` cycles.
pub fn stirling_cycle(n: usize, k: usize) -> Result<u64> {
    if k < 1 || k > n || n > MAX_STIRLING_N {
        return Err(Error::invalid(format!(
            "stirling_cycle needs 1 <= k <= n <= {MAX_STIRLING_N}, got n={n}, k={k}"
        )));
    }
    let mut row = vec![1u64]; // c(0, 0)
    for m in 1..=n {
        let mut next = vec![0u64; m + 1];
        for j in 1..=m {
            let carry = if j < m { (m as u64 - 1) * row[j] } else { 0 };
            next[j] = row[j - 1] + carry;
        }
        row = next;
    }
    Ok(row[k])
}

/// Haar average of `Υ_A` on `n` qudits, in log form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HaarValue {
    pub d: Dim,
    pub n: usize,
    pub replicas: usize,
    pub upsilon_log: f64,
    pub y: f64,
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `log E[Υ] = log Σ_π c_π^N - Σ_{j<k} log(d^N + j)`.
fn haar_log_from_overlaps(d: Dim, n: usize, overlaps: &[u64]) -> f64 {
    let nf = n as f64;
    let terms: Vec<f64> = overlaps.iter().map(|&c| nf * (c as f64).ln()).collect();
    let ln_dn = nf * (d.get() as f64).ln();
    let denom: f64 = (0..overlaps_degree(overlaps.len()))
        .map(|j| ln_dn + (j as f64 * (-ln_dn).exp()).ln_1p())
        .sum();
    log_sum_exp(&terms) - denom
}

/// Recovers `k` from `k!`.
fn overlaps_degree(order: usize) -> usize {
    let mut k = 0;
    let mut f = 1;
    while f < order {
        k += 1;
        f *= k;
    }
    k.max(1)
}

/// `E_Haar[Υ_A]` for `n` qudits from the explicit overlap table of `A`.
pub fn haar_css_entropy(a: &DefectSubspace, n: usize) -> Result<HaarValue> {
    if n == 0 {
        return Err(Error::invalid("the Haar value needs at least one site"));
    }
    let table = css_overlap_table(a)?;
    let overlaps: Vec<u64> = table.entries().iter().map(|(_, c)| *c).collect();
    let log = haar_log_from_overlaps(a.dim(), n, &overlaps);
    Ok(HaarValue {
        d: a.dim(),
        n,
        replicas: a.replicas(),
        upsilon_log: log,
        y: -log,
    })
}

/// `log E_Haar[Υ_d]` for `A = span{1_D}` without building the projector.
pub fn haar_upsilon_log(d: Dim, n: usize) -> f64 {
    let overlaps: Vec<u64> = Permutation::all(d.replica_count())
        .iter()
        .map(|p| all_ones_overlap(d, p))
        .collect();
    haar_log_from_overlaps(d, n, &overlaps)
}

/// `Y_d^Haar(N) = -log E_Haar[Υ_d]`.
pub fn haar_y(d: Dim, n: usize) -> f64 {
    -haar_upsilon_log(d, n)
}

/// Closed forms `4/(2^N+3)` (d = 2) and `3/(3^N+2)` (d = 3), as `-log`.
pub fn haar_closed_form(d: Dim, n: usize) -> Option<f64> {
    let (num, base, shift) = match d.get() {
        2 => (4.0f64, 2.0f64, 3.0f64),
        3 => (3.0, 3.0, 2.0),
        _ => return None,
    };
    let ln_dn = n as f64 * base.ln();
    Some(ln_dn + (shift * (-ln_dn).exp()).ln_1p() - num.ln())
}

/// Log-linear fit `ΔY ≈ a e^{-α t}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub alpha: f64,
    pub stderr: f64,
    pub a: f64,
    pub t_window: (f64, f64),
    /// RMS of the log residuals.
    pub residual: f64,
    pub points: usize,
}

/// Fits every point with `t >= t_min`.
pub fn fit_decay(series: &[(f64, f64)], t_min: f64) -> Result<DecayFit> {
    fit_decay_window(series, t_min, f64::INFINITY)
}

/// Fits the points with `t_min <= t <= t_max`; non-positive `ΔY` are dropped.
pub fn fit_decay_window(series: &[(f64, f64)], t_min: f64, t_max: f64) -> Result<DecayFit> {
    let mut pts = Vec::new();
    for &(t, dy) in series.iter().filter(|(t, _)| *t >= t_min && *t <= t_max) {
        if dy > 0.0 && dy.is_finite() {
            pts.push((t, dy.ln()));
        } else {
            log::warn!("dropping point t={t} with deltaY={dy} from the decay fit");
        }
    }
    if pts.len() < 4 {
        return Err(Error::invalid(format!(
            "decay fit needs at least 4 positive points, found {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let tbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tbar).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tbar) * (p.1 - ybar)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "decay fit needs at least two distinct times",
        ));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * tbar;
    let ssr: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let t_lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let t_hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit {
        alpha: -slope,
        stderr: (ssr / (m - 2.0) / sxx).sqrt(),
        a: intercept.exp(),
        t_window: (t_lo, t_hi),
        residual: (ssr / m).sqrt(),
        points: pts.len(),
    })
}

/// Depth at which `a N e^{-α t}` falls to `epsilon`.
pub fn saturation_time(alpha: f64, n: f64, epsilon: f64, a: f64) -> Result<f64> {
    if !(alpha > 0.0 && epsilon > 0.0 && n > 0.0 && a > 0.0) {
        return Err(Error::invalid(
            "saturation_time needs positive alpha, N, epsilon and a",
        ));
    }
    Ok((n * a / epsilon).ln() / alpha)
}

/// Reference crossover for T-doped Clifford circuits:
/// `ΔY_2(t) = Y_2^Haar + log(Υ_2^Haar + (3/4)^t)`.
pub fn doped_reference_curve(t: f64, n: usize) -> f64 {
    let d = Dim::new(2).unwrap();
    let log_u = haar_upsilon_log(d, n);
    let log_t = t * 0.75f64.ln();
    // log(e^{log_u} + e^{log_t}) - log_u
    let (hi, lo) = if log_u > log_t {
        (log_u, log_t)
    } else {
        (log_t, log_u)
    };
    hi + (lo - hi).exp().ln_1p() - log_u
}
