use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::defects::{css_overlap_table, DefectSubspace};
use crate::error::{Error, Result};
use crate::qudit::Dim;

use super::mps::{DiagonalGate, SpinMps, TruncationStats};
use super::perm::SymmetricGroupTable;
use super::weingarten::{gram_matrix, weingarten_matrix, WeingartenMatrix};

/// Default relative singular-value cutoff.
pub const DEFAULT_CUTOFF: f64 = 1e-14;

/// Bottom row of the network: `Σ_π w |π⟩|π⟩` on every odd-layer pair.
#[derive(Clone, Debug)]
pub struct BottomBoundary {
    pub weight: f64,
    /// `pair[π₁, π₂] = w δ_{π₁π₂}`.
    pub pair: DMatrix<f64>,
}

/// `w = (d²−1)! / (d²+D−1)! = 1 / (d² (d²+1) … (d²+D−1))`.
pub fn bottom_weight(d: Dim) -> f64 {
    let n = (d.get() * d.get()) as f64;
    1.0 / (0..d.replica_count())
        .map(|j| n + j as f64)
        .product::<f64>()
}

pub fn build_bottom_boundary(d: Dim) -> Result<BottomBoundary> {
    let q = SymmetricGroupTable::new(d.replica_count())?.order();
    let w = bottom_weight(d);
    Ok(BottomBoundary {
        weight: w,
        pair: DMatrix::identity(q, q) * w,
    })
}

/// Haar-averaged two-site gate in permutation coordinates:
/// `K[σ; π₁, π₂] = Σ_τ Wg_{στ}(d²) G_{τπ₁}(d) G_{τπ₂}(d)`.
pub fn build_gate_tensor(d: Dim) -> Result<DiagonalGate> {
    let group = SymmetricGroupTable::new(d.replica_count())?;
    let wg = weingarten_matrix(d, &group)?;
    let g = gram_matrix(d.get() as u64, &group)?;
    Ok(DiagonalGate {
        mix: wg.entries().clone(),
        leg: g.to_f64(),
    })
}

/// Top row of the network: the covector closing a gate of the last layer,
/// and the covector `c` closing an uncovered site.
#[derive(Clone, Debug)]
pub struct TopTensor {
    pub pair: DMatrix<f64>,
    pub single: DVector<f64>,
}

pub fn build_top_tensor(a: &DefectSubspace) -> Result<TopTensor> {
    let d = a.dim();
    if !a.is_all_ones() {
        return Err(Error::invalid(
            "the tensor network handles A = span{1_D} only",
        ));
    }
    let group = SymmetricGroupTable::new(d.replica_count())?;
    let wg = weingarten_matrix(d, &group)?;
    let g = gram_matrix(d.get() as u64, &group)?.to_f64();
    let table = css_overlap_table(a)?;
    let single = DVector::from_iterator(
        group.order(),
        group
            .elements()
            .iter()
            .map(|p| table.get(p).unwrap() as f64),
    );
    Ok(top_from_overlaps(&single, &wg, &g))
}

fn top_from_overlaps(c: &DVector<f64>, wg: &WeingartenMatrix, g: &DMatrix<f64>) -> TopTensor {
    // q[π₁,π₂] = Σ_σ c_σ² K[σ; π₁, π₂] = Σ_τ z_τ G_{τπ₁} G_{τπ₂}
    let z = wg.entries() * c.component_mul(c);
    let pair = g.transpose() * DMatrix::from_diagonal(&z) * g;
    TopTensor {
        pair,
        single: c.clone(),
    }
}

/// All tensors of the network for one qudit dimension.
#[derive(Clone, Debug)]
pub struct ReplicaNetwork {
    pub d: Dim,
    pub bottom: BottomBoundary,
    pub gate: DiagonalGate,
    pub top: TopTensor,
}

impl ReplicaNetwork {
    pub fn new(d: Dim) -> Result<Self> {
        Ok(ReplicaNetwork {
            d,
            bottom: build_bottom_boundary(d)?,
            gate: build_gate_tensor(d)?,
            top: build_top_tensor(&DefectSubspace::all_ones(d))?,
        })
    }

    pub fn local_dim(&self) -> usize {
        self.gate.local_dim()
    }
}

/// Contraction parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TnParams {
    pub chi: usize,
    pub cutoff: f64,
    /// Correct every truncation so the `D!` overlaps with the global
    /// permutation operators, which the Haar layers conserve, stay exact.
    pub conserve: bool,
}

impl TnParams {
    pub fn new(chi: usize) -> Self {
        TnParams {
            chi,
            cutoff: DEFAULT_CUTOFF,
            conserve: true,
        }
    }
}

/// One depth of the annealed series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnealedPoint {
    pub t: usize,
    pub log_upsilon: f64,
    pub y: f64,
    pub max_bond: usize,
    pub discarded_weight: f64,
}

fn layer_starts(n: usize, r: usize) -> Vec<usize> {
    crate::exact::layer_pairs(n, r).collect()
}

/// `log E[Υ_d]` for every depth `t = 1..=t_max` in one upward sweep: after
/// layers `1..t−1` are applied, the state is closed with the top pattern
/// of layer `t`.
pub fn contract_annealed_series(
    net: &ReplicaNetwork,
    n: usize,
    t_max: usize,
    params: TnParams,
) -> Result<Vec<AnnealedPoint>> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid(format!(
            "the tensor network needs an even N >= 2, got {n}"
        )));
    }
    if t_max == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    let mut mps = SpinMps::product_of_pairs(n, &net.bottom.pair, params.chi, params.cutoff)?;
    if params.conserve {
        mps.set_conserved(net.gate.leg.clone())?;
    }
    let mut out = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        if t >= 3 {
            let r = t - 1;
            mps.apply_layer(&net.gate, &layer_starts(n, r), r % 2 == 1)
                .map_err(|e| tag_layer(e, r))?;
        }
        let (log, sign) = if t == 1 {
            mps.close(&net.top.pair, &net.top.single, &[])?
        } else {
            mps.close(&net.top.pair, &net.top.single, &layer_starts(n, t))?
        };
        if !(sign > 0.0) || !log.is_finite() {
            return Err(Error::numerical(
                "replica-tn",
                format!("contraction at depth {t} gave a non-positive or non-finite Υ"),
            ));
        }
        let TruncationStats {
            max_bond,
            discarded_weight,
        } = mps.stats();
        log::debug!("N={n} t={t} log Υ={log} max bond {max_bond}");
        out.push(AnnealedPoint {
            t,
            log_upsilon: log,
            y: -log,
            max_bond,
            discarded_weight,
        });
    }
    Ok(out)
}

fn tag_layer(e: Error, r: usize) -> Error {
    match e {
        Error::Numerical { module, detail } => Error::Numerical {
            module,
            detail: format!("layer {r}: {detail}"),
        },
        other => other,
    }
}

/// `(log E[Υ_d], diagnostics)` at depth `t`.
pub fn contract_annealed_upsilon(
    n: usize,
    t: usize,
    d: Dim,
    chi: usize,
    cutoff: f64,
) -> Result<(f64, AnnealedPoint)> {
    let net = ReplicaNetwork::new(d)?;
    let series = contract_annealed_series(
        &net,
        n,
        t,
        TnParams {
            chi,
            cutoff,
            conserve: true,
        },
    )?;
    let last = *series.last().unwrap();
    Ok((last.log_upsilon, last))
}

/// `Ỹ_d = −log E[Υ_d]` at depth `t`.
pub fn annealed_css_entropy(n: usize, t: usize, d: Dim, chi: usize) -> Result<f64> {
    Ok(-contract_annealed_upsilon(n, t, d, chi, DEFAULT_CUTOFF)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::haar_upsilon_log;

    fn d(n: u32) -> Dim {
        Dim::new(n).unwrap()
    }

    #[test]
    fn bottom_weights() {
        assert!((bottom_weight(d(2)) - 1.0 / 840.0).abs() < 1e-18);
        assert!((bottom_weight(d(3)) - 1.0 / 990.0).abs() < 1e-18);
    }

    #[test]
    fn gate_fixes_bottom_and_is_idempotent() {
        for dd in [2, 3] {
            let net = ReplicaNetwork::new(d(dd)).unwrap();
            let q = net.local_dim();
            let out = net.gate.apply_dense(&net.bottom.pair);
            for s in 0..q {
                assert!((out[s] - net.bottom.weight).abs() < 1e-14);
            }
            let k = net.gate.entries();
            // a random pair vector, averaged once and twice
            let v = DMatrix::from_fn(q, q, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
            let once = net.gate.apply_dense(&v);
            let twice = net.gate.apply_dense(&DMatrix::from_diagonal(&once));
            let scale = once.amax();
            assert!((once - twice).amax() < 1e-10 * scale);
            assert!(k.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn top_closure_values() {
        let top = build_top_tensor(&DefectSubspace::all_ones(d(2))).unwrap();
        assert_eq!(top.single[0], 8.0);
        let mut c: Vec<u64> = top.single.iter().map(|&x| x as u64).collect();
        c.sort();
        c.dedup();
        assert_eq!(c, vec![2, 4, 8]);
        let top3 = build_top_tensor(&DefectSubspace::all_ones(d(3))).unwrap();
        assert_eq!(top3.single[0], 9.0);
    }

    #[test]
    fn depth_one_is_pairwise_haar() {
        for (dd, per_pair) in [(2, 4.0f64 / 7.0), (3, 3.0 / 11.0)] {
            let net = ReplicaNetwork::new(d(dd)).unwrap();
            for n in [2, 4, 16] {
                let s = contract_annealed_series(&net, n, 2, TnParams::new(64)).unwrap();
                let expect = (n / 2) as f64 * per_pair.ln();
                assert!((s[0].log_upsilon - expect).abs() < 1e-12, "d={dd} n={n}");
            }
        }
    }

    #[test]
    fn two_sites_saturate_immediately() {
        for dd in [2, 3] {
            let net = ReplicaNetwork::new(d(dd)).unwrap();
            let s = contract_annealed_series(&net, 2, 5, TnParams::new(64)).unwrap();
            for p in &s {
                assert!((p.log_upsilon - haar_upsilon_log(d(dd), 2)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deep_circuits_reach_haar() {
        let net = ReplicaNetwork::new(d(3)).unwrap();
        let n = 6;
        let s = contract_annealed_series(&net, n, 4 * n, TnParams::new(216)).unwrap();
        let last = s.last().unwrap();
        assert!((last.log_upsilon - haar_upsilon_log(d(3), n)).abs() < 1e-6);
        for w in s.windows(2) {
            assert!(w[1].y >= w[0].y - 1e-8);
        }
    }

    #[test]
    fn rejects_odd_chains() {
        assert!(contract_annealed_upsilon(5, 2, d(3), 8, DEFAULT_CUTOFF).is_err());
        assert!(contract_annealed_upsilon(4, 0, d(3), 8, DEFAULT_CUTOFF).is_err());
    }
}
