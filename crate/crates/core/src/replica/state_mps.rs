use rand::Rng;
use rand_distr::StandardNormal;

use crate::defects::{css_projector, DefectSubspace};
use crate::error::{Error, Result};
use crate::exact::StateVector;
use crate::qudit::{CMatrix, Dim, C64};

/// Largest replicated bond dimension `χ^k` accepted by [`css_entropy_mps`].
pub const MAX_REPLICA_BOND: usize = 4096;

/// Complex matrix-product state of `n` qudits; site `i` holds `d` matrices
/// of shape `χ_i × χ_{i+1}`.
#[derive(Clone, Debug)]
pub struct StateMps {
    d: Dim,
    sites: Vec<Vec<CMatrix>>,
}

impl StateMps {
    pub fn new(d: Dim, sites: Vec<Vec<CMatrix>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::invalid("an MPS needs at least one site"));
        }
        let mut bond = 1;
        for (i, s) in sites.iter().enumerate() {
            if s.len() != d.as_usize() {
                return Err(Error::invalid(format!(
                    "site {i} has {} matrices, expected {d}",
                    s.len()
                )));
            }
            let (l, r) = s[0].shape();
            if l != bond || s.iter().any(|m| m.shape() != (l, r)) {
                return Err(Error::invalid(format!(
                    "bond dimensions do not match at site {i}"
                )));
            }
            bond = r;
        }
        if bond != 1 {
            return Err(Error::invalid(
                "the last site must close with bond dimension 1",
            ));
        }
        Ok(StateMps { d, sites })
    }

    /// Product state with the same single-site vector everywhere.
    pub fn product(d: Dim, n: usize, local: &[C64]) -> Result<Self> {
        if local.len() != d.as_usize() {
            return Err(Error::invalid("local vector has the wrong dimension"));
        }
        let site: Vec<CMatrix> = local
            .iter()
            .map(|&z| CMatrix::from_element(1, 1, z))
            .collect();
        Self::new(d, vec![site; n])
    }

    /// Random MPS with Gaussian entries and bond dimension `chi` in the bulk.
    pub fn random<R: Rng + ?Sized>(d: Dim, n: usize, chi: usize, rng: &mut R) -> Result<Self> {
        if n == 0 || chi == 0 {
            return Err(Error::invalid("random MPS needs n >= 1 and chi >= 1"));
        }
        let sites = (0..n)
            .map(|i| {
                let l = if i == 0 { 1 } else { chi };
                let r = if i + 1 == n { 1 } else { chi };
                (0..d.as_usize())
                    .map(|_| {
                        CMatrix::from_fn(l, r, |_, _| {
                            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                        })
                    })
                    .collect()
            })
            .collect();
        Self::new(d, sites)
    }

    /// Exact MPS of a dense state (successive SVDs, no truncation beyond
    /// numerically zero singular values).
    pub fn from_statevector(state: &StateVector) -> Result<Self> {
        let du = state.dim().as_usize();
        let n = state.sites();
        let mut rest = CMatrix::from_row_slice(1, state.amplitudes().len(), state.amplitudes());
        let mut sites = Vec::with_capacity(n);
        for _ in 0..n - 1 {
            let l = rest.nrows();
            let cols = rest.ncols() / du;
            // rows (l, s), columns the remaining sites
            let m = CMatrix::from_fn(l * du, cols, |row, c| {
                rest[(row / du, (row % du) * cols + c)]
            });
            let svd = m.svd(true, true);
            let smax = svd.singular_values.max();
            let keep = svd
                .singular_values
                .iter()
                .filter(|&&s| s > 1e-14 * smax)
                .count()
                .max(1);
            let u = svd.u.unwrap();
            let vt = svd.v_t.unwrap();
            sites.push(
                (0..du)
                    .map(|s| CMatrix::from_fn(l, keep, |a, k| u[(a * du + s, k)]))
                    .collect(),
            );
            rest = CMatrix::from_fn(keep, cols, |k, c| vt[(k, c)] * svd.singular_values[k]);
        }
        let l = rest.nrows();
        sites.push(
            (0..du)
                .map(|s| CMatrix::from_fn(l, 1, |a, _| rest[(a, s)]))
                .collect(),
        );
        Self::new(state.dim(), sites)
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    pub fn sites(&self) -> usize {
        self.sites.len()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s[0].ncols()).max().unwrap_or(1)
    }

    /// Dense amplitudes, normalized.
    pub fn to_statevector(&self) -> Result<StateVector> {
        let mut rows: Vec<CMatrix> = vec![CMatrix::identity(1, 1)];
        for site in &self.sites {
            rows = rows
                .iter()
                .flat_map(|r| site.iter().map(move |m| r * m))
                .collect();
        }
        let amps = rows.iter().map(|m| m[(0, 0)]).collect();
        StateVector::normalized(self.d, self.sites.len(), amps)
    }

    /// `log ⟨ψ|ψ⟩`.
    fn log_norm_sqr(&self) -> f64 {
        let mut env = CMatrix::identity(1, 1);
        let mut log = 0.0;
        for site in &self.sites {
            let mut next = CMatrix::zeros(site[0].ncols(), site[0].ncols());
            for m in site {
                next += m.adjoint() * &env * m;
            }
            let scale = next.iter().map(|z| z.norm()).fold(0.0, f64::max);
            env = next / C64::new(scale, 0.0);
            log += scale.ln();
        }
        log + env[(0, 0)].re.ln()
    }
}

fn kron_all(mats: &[&CMatrix]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for m in mats {
        out = out.kronecker(m);
    }
    out
}

/// `Y_A` of an MPS through the replica state `Γ^{⊗N} |ψ⟩^{⊗k}` with
/// `r(A) = Γ†Γ`, evaluated as `-log ⟨Φ|Φ⟩ + k log ⟨ψ|ψ⟩`.
pub fn css_entropy_mps(state: &StateMps, a: &DefectSubspace) -> Result<f64> {
    if state.dim() != a.dim() {
        return Err(Error::invalid("state and defect subspace use different d"));
    }
    let k = a.replicas();
    let du = state.dim().as_usize();
    let chi = state.max_bond();
    let replica_bond = chi
        .checked_pow(k as u32)
        .filter(|&b| b <= MAX_REPLICA_BOND)
        .ok_or_else(|| {
            Error::resource(format!(
                "bond {chi} with {k} replicas exceeds {MAX_REPLICA_BOND}"
            ))
        })?;
    log::debug!("replica MPS bond dimension {replica_bond}");

    // r(A) = V Λ V†, Γ = sqrt(Λ) V† on the nonzero eigenvalues
    let r = css_projector(a)?.replica_operator();
    let eig = r.clone().symmetric_eigen();
    if let Some(neg) = eig.eigenvalues.iter().find(|&&l| l < -1e-10) {
        return Err(Error::numerical(
            "replica-tn",
            format!("r(A) has eigenvalue {neg}"),
        ));
    }
    let rows: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > 1e-10)
        .collect();
    let gamma = CMatrix::from_fn(rows.len(), r.nrows(), |row, col| {
        let i = rows[row];
        eig.eigenvectors[(col, i)].conj() * eig.eigenvalues[i].sqrt()
    });

    let local = du.pow(k as u32);
    let mut env = CMatrix::identity(1, 1);
    let mut log = 0.0;
    let mut digs = vec![0usize; k];
    for site in &state.sites {
        // replica products of the site matrices, one per local multi-index
        let prods: Vec<CMatrix> = (0..local)
            .map(|x| {
                let mut rem = x;
                for j in (0..k).rev() {
                    digs[j] = rem % du;
                    rem /= du;
                }
                let mats: Vec<&CMatrix> = digs.iter().map(|&s| &site[s]).collect();
                kron_all(&mats)
            })
            .collect();
        let (l, rr) = prods[0].shape();
        let mut next = CMatrix::zeros(rr, rr);
        for g in gamma.row_iter() {
            let mut b = CMatrix::zeros(l, rr);
            for (x, p) in prods.iter().enumerate() {
                if g[x] != C64::new(0.0, 0.0) {
                    b += p * g[x];
                }
            }
            next += b.adjoint() * &env * &b;
        }
        let scale = next.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(scale > 0.0) {
            return Err(Error::numerical("replica-tn", "replica norm vanished"));
        }
        env = next / C64::new(scale, 0.0);
        log += scale.ln();
    }
    let value = env[(0, 0)];
    if value.im.abs() > 1e-10 * value.norm() || value.re <= 0.0 {
        return Err(Error::numerical(
            "replica-tn",
            format!("replica norm {value} is not positive"),
        ));
    }
    let log_phi = log + value.re.ln();
    Ok(-log_phi + k as f64 * state.log_norm_sqr())
}
