use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::qudit::Dim;

use super::perm::SymmetricGroupTable;

/// `G_{στ} = n^{#(σ⁻¹τ)}` over `S_D`, exact.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    n: u64,
    degree: usize,
    entries: DMatrix<u64>,
}

impl GramMatrix {
    pub fn local_dim(&self) -> u64 {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn entries(&self) -> &DMatrix<u64> {
        &self.entries
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        self.entries.map(|x| x as f64)
    }
}

pub fn gram_matrix(n: u64, group: &SymmetricGroupTable) -> Result<GramMatrix> {
    if n < 2 {
        return Err(Error::invalid(
            "Gram matrices need local dimension at least 2",
        ));
    }
    let q = group.order();
    let entries = DMatrix::from_fn(q, q, |s, t| {
        n.pow(group.cycle_count(group.compose(group.inverse(s), t)) as u32)
    });
    Ok(GramMatrix {
        n,
        degree: group.degree(),
        entries,
    })
}

/// `Wg(d²) = G(d²)⁻¹`.
#[derive(Clone, Debug)]
pub struct WeingartenMatrix {
    entries: DMatrix<f64>,
    residual: f64,
}

impl WeingartenMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `max |Wg·G − I|` measured at construction.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

/// Tolerance on `Wg·G = I`.
pub const WEINGARTEN_TOLERANCE: f64 = 1e-10;

pub fn weingarten_matrix(d: Dim, group: &SymmetricGroupTable) -> Result<WeingartenMatrix> {
    let n = d.get() as u64 * d.get() as u64;
    if (n as usize) < group.degree() {
        return Err(Error::invalid(format!(
            "Gram matrix at n={n} is singular for {} replicas",
            group.degree()
        )));
    }
    let g = gram_matrix(n, group)?.to_f64();
    let inv = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("replica-tn", "Gram matrix is not positive definite"))?
        .inverse();
    // one step of iterative refinement: X ← X(2I − G X)
    let q = g.nrows();
    let two = DMatrix::<f64>::identity(q, q) * 2.0;
    let inv = &inv * (two - &g * &inv);
    let residual = (&inv * &g - DMatrix::<f64>::identity(q, q)).abs().max();
    if residual > WEINGARTEN_TOLERANCE {
        return Err(Error::numerical(
            "replica-tn",
            format!("Weingarten residual {residual:.3e} exceeds {WEINGARTEN_TOLERANCE:e}"),
        ));
    }
    let sym = (&inv + inv.transpose()) * 0.5;
    Ok(WeingartenMatrix {
        entries: sym,
        residual,
    })
}
