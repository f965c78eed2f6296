use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Two-site operator whose output is diagonal in the spin pair:
/// `K[σ; π₁, π₂] = Σ_τ W_{στ} M_{τπ₁} M_{τπ₂}`.
///
/// It is stored in factored form; applying it to an MPS bond costs one
/// matrix product per spin value instead of a dense `q³` contraction.
#[derive(Clone, Debug)]
pub struct DiagonalGate {
    /// Mixing on the output side (`W`).
    pub mix: DMatrix<f64>,
    /// Map applied to each input leg (`M`).
    pub leg: DMatrix<f64>,
}

impl DiagonalGate {
    pub fn local_dim(&self) -> usize {
        self.mix.nrows()
    }

    /// Dense entries `K[σ][π₁ q + π₂]`.
    pub fn entries(&self) -> DMatrix<f64> {
        let q = self.local_dim();
        DMatrix::from_fn(q, q * q, |s, col| {
            let (p1, p2) = (col / q, col % q);
            (0..q)
                .map(|t| self.mix[(s, t)] * self.leg[(t, p1)] * self.leg[(t, p2)])
                .sum()
        })
    }

    /// Applies the gate to a dense pair vector `v[π₁ q + π₂]`; the result is
    /// the diagonal `u[σ]` of the output pair.
    pub fn apply_dense(&self, v: &DMatrix<f64>) -> DVector<f64> {
        // Σ_{π₁π₂} M_{τπ₁} v[π₁,π₂] M_{τπ₂} = (M v Mᵀ)_{ττ}
        let inner = &self.leg * v * self.leg.transpose();
        &self.mix * inner.diagonal()
    }
}

/// Truncation statistics of a contraction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TruncationStats {
    pub max_bond: usize,
    /// Sum over all truncations of the discarded relative weight `Σ s²`.
    pub discarded_weight: f64,
}

/// Real matrix-product state over spins of local dimension `q`.
///
/// Site `i` holds `q` matrices of shape `χ_{i} × χ_{i+1}`. The state is kept
/// in mixed-canonical form with unit norm; the factor removed by every
/// renormalization is accumulated in `log_scale`.
#[derive(Clone, Debug)]
pub struct SpinMps {
    q: usize,
    sites: Vec<Vec<DMatrix<f64>>>,
    center: usize,
    chi: usize,
    cutoff: f64,
    log_scale: f64,
    stats: TruncationStats,
    conserved: Option<DMatrix<f64>>,
}

fn normalized(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v
    }
}

/// `ℓ_σᵀ (Σ_{ρ₁ρ₂} e_{σρ₁} e_{σρ₂} Θ_{ρ₁ρ₂}) r_σ` for every `σ`, where
/// `theta(ρ₁, ρ₂)` returns the nonzero blocks of the pair tensor.
fn pair_values<'a>(
    e: &DMatrix<f64>,
    left: &[DVector<f64>],
    right: &[DVector<f64>],
    theta: impl Fn(usize, usize) -> Option<&'a DMatrix<f64>>,
) -> Vec<f64> {
    let q = e.ncols();
    (0..e.nrows())
        .map(|s| {
            let mut acc = 0.0;
            for r1 in 0..q {
                for r2 in 0..q {
                    if let Some(m) = theta(r1, r2) {
                        let w = e[(s, r1)] * e[(s, r2)];
                        if w != 0.0 {
                            acc += w * left[s].dot(&(m * &right[s]));
                        }
                    }
                }
            }
            acc
        })
        .collect()
}

/// Minimal-norm change of the non-isometric site that restores the
/// conserved overlaps `targets` after a truncation.
fn restore_conserved(
    e: &DMatrix<f64>,
    left: &[DVector<f64>],
    right: &[DVector<f64>],
    targets: &[f64],
    a: &mut [DMatrix<f64>],
    b: &mut [DMatrix<f64>],
    adjust_right: bool,
) {
    let k = e.nrows();
    // Contract the fixed site into the bond: x_σ for the left site, y_σ for
    // the right one.
    let fixed: Vec<DVector<f64>> = (0..k)
        .map(|s| {
            if adjust_right {
                combine(e.row(s).iter().copied(), a).tr_mul(&left[s])
            } else {
                combine(e.row(s).iter().copied(), b) * &right[s]
            }
        })
        .collect();
    let (outer, moving): (&[DVector<f64>], &mut [DMatrix<f64>]) =
        if adjust_right { (right, b) } else { (left, a) };
    let current: Vec<f64> = (0..k)
        .map(|s| {
            let m = combine(e.row(s).iter().copied(), moving);
            if adjust_right {
                fixed[s].dot(&(m * &outer[s]))
            } else {
                outer[s].dot(&(m * &fixed[s]))
            }
        })
        .collect();
    let residual = DVector::from_iterator(k, targets.iter().zip(&current).map(|(t, c)| t - c));
    if residual.amax() == 0.0 {
        return;
    }
    let ee = e * e.transpose();
    let h = DMatrix::from_fn(k, k, |s, t| {
        ee[(s, t)] * fixed[s].dot(&fixed[t]) * outer[s].dot(&outer[t])
    });
    let svd = h.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    let Ok(beta) = svd.solve(&residual, eps) else {
        return;
    };
    for (rho, m) in moving.iter_mut().enumerate() {
        for s in 0..k {
            let w = beta[s] * e[(s, rho)];
            if w == 0.0 {
                continue;
            }
            if adjust_right {
                m.ger(w, &fixed[s], &outer[s], 1.0);
            } else {
                m.ger(w, &outer[s], &fixed[s], 1.0);
            }
        }
    }
}

fn stack_rows(site: &[DMatrix<f64>]) -> DMatrix<f64> {
    let (l, r) = site[0].shape();
    let mut out = DMatrix::zeros(site.len() * l, r);
    for (p, m) in site.iter().enumerate() {
        out.view_mut((p * l, 0), (l, r)).copy_from(m);
    }
    out
}

fn stack_cols(site: &[DMatrix<f64>]) -> DMatrix<f64> {
    let (l, r) = site[0].shape();
    let mut out = DMatrix::zeros(l, site.len() * r);
    for (p, m) in site.iter().enumerate() {
        out.view_mut((0, p * r), (l, r)).copy_from(m);
    }
    out
}

fn combine(weights: impl Iterator<Item = f64>, mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(mats[0].nrows(), mats[0].ncols());
    for (w, m) in weights.zip(mats) {
        if w != 0.0 {
            out.zip_apply(m, |o, x| *o += w * x);
        }
    }
    out
}

impl SpinMps {
    /// Product of identical two-site states `pair[π₁, π₂]` on the pairs
    /// `(0,1), (2,3), …`; `n` must be even.
    pub fn product_of_pairs(
        n: usize,
        pair: &DMatrix<f64>,
        chi: usize,
        cutoff: f64,
    ) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::invalid(format!(
                "the spin chain needs an even N >= 2, got {n}"
            )));
        }
        if chi == 0 {
            return Err(Error::invalid("bond dimension must be at least 1"));
        }
        let q = pair.nrows();
        let svd = pair.clone().svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..q)
            .filter(|&k| svd.singular_values[k] > cutoff * smax && svd.singular_values[k] > 0.0)
            .collect();
        let norm = keep
            .iter()
            .map(|&k| svd.singular_values[k].powi(2))
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            return Err(Error::numerical("replica-tn", "pair state is zero"));
        }
        let b = keep.len();
        let left: Vec<DMatrix<f64>> = (0..q)
            .map(|p| DMatrix::from_fn(1, b, |_, j| u[(p, keep[j])]))
            .collect();
        let right: Vec<DMatrix<f64>> = (0..q)
            .map(|p| {
                DMatrix::from_fn(b, 1, |j, _| {
                    svd.singular_values[keep[j]] * vt[(keep[j], p)] / norm
                })
            })
            .collect();
        let mut sites = Vec::with_capacity(n);
        for _ in 0..n / 2 {
            sites.push(left.clone());
            sites.push(right.clone());
        }
        // Every right factor has unit Frobenius norm, so all sites are
        // left-orthonormal and the whole state has unit norm.
        Ok(SpinMps {
            q,
            sites,
            center: n - 1,
            chi,
            cutoff,
            log_scale: (n / 2) as f64 * norm.ln(),
            stats: TruncationStats {
                max_bond: b,
                discarded_weight: 0.0,
            },
            conserved: None,
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn local_dim(&self) -> usize {
        self.q
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn stats(&self) -> TruncationStats {
        self.stats
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Bond dimensions `χ_1 … χ_{N-1}`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[1..].iter().map(|s| s[0].nrows()).collect()
    }

    fn move_right(&mut self) {
        let i = self.center;
        let (l, _) = self.sites[i][0].shape();
        let qr = stack_rows(&self.sites[i]).qr();
        let (qm, r) = (qr.q(), qr.r());
        let k = qm.ncols();
        self.sites[i] = (0..self.q)
            .map(|p| qm.view((p * l, 0), (l, k)).into_owned())
            .collect();
        for m in &mut self.sites[i + 1] {
            *m = &r * &*m;
        }
        self.center = i + 1;
    }

    fn move_left(&mut self) {
        let i = self.center;
        let (_, rr) = self.sites[i][0].shape();
        let qr = stack_cols(&self.sites[i]).transpose().qr();
        let (qm, r) = (qr.q(), qr.r());
        let k = qm.ncols();
        let qt = qm.transpose();
        self.sites[i] = (0..self.q)
            .map(|p| qt.view((0, p * rr), (k, rr)).into_owned())
            .collect();
        let rt = r.transpose();
        for m in &mut self.sites[i - 1] {
            *m = &*m * &rt;
        }
        self.center = i - 1;
    }

    fn move_center_to(&mut self, target: usize) {
        while self.center < target {
            self.move_right();
        }
        while self.center > target {
            self.move_left();
        }
    }

    /// Applies `gate` on sites `(i, i+1)`; the center must sit on one of
    /// them. With `absorb_right` the new center is `i+1`, otherwise `i`.
    /// `envs` carries the left and right environments of the conserved
    /// covectors, if any.
    fn apply_pair(
        &mut self,
        gate: &DiagonalGate,
        i: usize,
        absorb_right: bool,
        envs: Option<(&[DVector<f64>], &[DVector<f64>])>,
    ) -> Result<()> {
        debug_assert!(self.center == i || self.center == i + 1);
        let q = self.q;
        let a = &self.sites[i];
        let b = &self.sites[i + 1];
        let n_tau: Vec<DMatrix<f64>> = (0..q)
            .map(|t| {
                let ap = combine(gate.leg.row(t).iter().copied(), a);
                let bp = combine(gate.leg.row(t).iter().copied(), b);
                ap * bp
            })
            .collect();
        let blocks: Vec<DMatrix<f64>> = (0..q)
            .map(|s| combine(gate.mix.row(s).iter().copied(), &n_tau))
            .collect();
        drop(n_tau);
        if blocks.iter().any(|m| !m.iter().all(|x| x.is_finite())) {
            return Err(Error::numerical(
                "replica-tn",
                format!("non-finite tensor at site {i}"),
            ));
        }
        let targets = match (envs, &self.conserved) {
            (Some((left, right)), Some(e)) => Some(pair_values(e, left, right, |rho1, rho2| {
                (rho1 == rho2).then(|| &blocks[rho1])
            })),
            _ => None,
        };
        let blocks: Vec<_> = blocks.into_iter().map(|m| m.svd(true, true)).collect();

        let mut values: Vec<(f64, usize, usize)> = blocks
            .iter()
            .enumerate()
            .flat_map(|(s, svd)| {
                svd.singular_values
                    .iter()
                    .enumerate()
                    .map(move |(j, &v)| (v, s, j))
            })
            .collect();
        values.sort_by(|x, y| y.0.total_cmp(&x.0));
        let total: f64 = values.iter().map(|v| v.0 * v.0).sum();
        let smax = values.first().map_or(0.0, |v| v.0);
        if !(smax > 0.0) {
            return Err(Error::numerical(
                "replica-tn",
                format!("pair ({i}, {}) vanished", i + 1),
            ));
        }
        let kept = values
            .iter()
            .take(self.chi)
            .take_while(|v| v.0 > self.cutoff * smax)
            .count();
        let kept_weight: f64 = values[..kept].iter().map(|v| v.0 * v.0).sum();
        self.stats.discarded_weight += (total - kept_weight).max(0.0) / total;
        self.stats.max_bond = self.stats.max_bond.max(kept);

        let (l, _) = self.sites[i][0].shape();
        let (_, r) = self.sites[i + 1][0].shape();
        let mut new_a = vec![DMatrix::zeros(l, kept); q];
        let mut new_b = vec![DMatrix::zeros(kept, r); q];
        for (col, &(v, s, j)) in values[..kept].iter().enumerate() {
            let svd = &blocks[s];
            let u = svd.u.as_ref().unwrap();
            let vt = svd.v_t.as_ref().unwrap();
            let (wa, wb) = if absorb_right { (1.0, v) } else { (v, 1.0) };
            new_a[s].column_mut(col).copy_from(&(u.column(j) * wa));
            new_b[s].row_mut(col).copy_from(&(vt.row(j) * wb));
        }
        drop(blocks);

        if let (Some(targets), Some((left, right)), Some(e)) = (targets, envs, &self.conserved) {
            restore_conserved(
                e,
                left,
                right,
                &targets,
                &mut new_a,
                &mut new_b,
                absorb_right,
            );
        }
        let center = if absorb_right { &mut new_b } else { &mut new_a };
        let norm = center.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::numerical(
                "replica-tn",
                format!("pair ({i}, {}) vanished", i + 1),
            ));
        }
        center.iter_mut().for_each(|m| *m /= norm);
        self.sites[i] = new_a;
        self.sites[i + 1] = new_b;
        self.center = if absorb_right { i + 1 } else { i };
        self.log_scale += norm.ln();
        Ok(())
    }

    /// Declares conserved product covectors: row `σ` of `e` is the per-site
    /// covector of the `σ`-th conserved quantity. Truncations are then
    /// corrected within the kept subspace so that these overlaps are exact.
    pub fn set_conserved(&mut self, e: DMatrix<f64>) -> Result<()> {
        if e.ncols() != self.q {
            return Err(Error::invalid(
                "conserved covectors have the wrong local dimension",
            ));
        }
        self.conserved = Some(e);
        Ok(())
    }

    fn env_from_left(&self, env: &[DVector<f64>], site: usize) -> Vec<DVector<f64>> {
        let e = self.conserved.as_ref().unwrap();
        let a = &self.sites[site];
        env.iter()
            .enumerate()
            .map(|(s, l)| normalized(combine(e.row(s).iter().copied(), a).tr_mul(l)))
            .collect()
    }

    fn env_from_right(&self, env: &[DVector<f64>], site: usize) -> Vec<DVector<f64>> {
        let e = self.conserved.as_ref().unwrap();
        let a = &self.sites[site];
        env.iter()
            .enumerate()
            .map(|(s, r)| normalized(combine(e.row(s).iter().copied(), a) * r))
            .collect()
    }

    fn unit_env(&self) -> Vec<DVector<f64>> {
        let k = self.conserved.as_ref().map_or(0, |e| e.nrows());
        vec![DVector::from_element(1, 1.0); k]
    }

    /// Applies `gate` to every pair starting at a site in `starts` (sorted
    /// ascending, non-overlapping), sweeping left to right or right to left.
    pub fn apply_layer(
        &mut self,
        gate: &DiagonalGate,
        starts: &[usize],
        left_to_right: bool,
    ) -> Result<()> {
        if gate.local_dim() != self.q {
            return Err(Error::invalid(
                "gate and MPS have different local dimensions",
            ));
        }
        let n = self.len();
        let conserve = self.conserved.is_some();
        if left_to_right {
            self.move_center_to(0);
            // right[j]: environment of sites j..n
            let mut right = vec![Vec::new(); n + 1];
            if conserve {
                right[n] = self.unit_env();
                for j in (1..n).rev() {
                    right[j] = self.env_from_right(&right[j + 1], j);
                }
            }
            let mut left = self.unit_env();
            let mut done = 0;
            for &i in starts {
                self.move_center_to(i);
                if conserve {
                    while done < i {
                        left = self.env_from_left(&left, done);
                        done += 1;
                    }
                }
                let envs = conserve.then(|| (left.as_slice(), right[i + 2].as_slice()));
                self.apply_pair(gate, i, true, envs)?;
            }
            self.move_center_to(n - 1);
        } else {
            self.move_center_to(n - 1);
            // left[j]: environment of sites 0..j
            let mut left = vec![Vec::new(); n];
            if conserve {
                left[0] = self.unit_env();
                for j in 1..n {
                    left[j] = self.env_from_left(&left[j - 1], j - 1);
                }
            }
            let mut right = self.unit_env();
            let mut done = n;
            for &i in starts.iter().rev() {
                self.move_center_to(i + 1);
                if conserve {
                    while done > i + 2 {
                        done -= 1;
                        right = self.env_from_right(&right, done);
                    }
                }
                let envs = conserve.then(|| (left[i].as_slice(), right.as_slice()));
                self.apply_pair(gate, i, false, envs)?;
            }
            self.move_center_to(0);
        }
        Ok(())
    }

    /// `log |⟨closure|ψ⟩|` and its sign, where the closure puts `pair` on
    /// the pairs starting at `starts` and `single` on all other sites. The
    /// MPS scale is included.
    pub fn close(
        &self,
        pair: &DMatrix<f64>,
        single: &DVector<f64>,
        starts: &[usize],
    ) -> Result<(f64, f64)> {
        let q = self.q;
        let mut env = DVector::from_element(1, 1.0);
        let mut log = self.log_scale;
        let mut i = 0;
        let mut next = starts.iter().peekable();
        while i < self.len() {
            if next.peek() == Some(&&i) {
                next.next();
                let a = &self.sites[i];
                let b = &self.sites[i + 1];
                let m = a[0].ncols();
                let mut y = DMatrix::zeros(q, m);
                for (p, ap) in a.iter().enumerate() {
                    y.row_mut(p).copy_from(&(env.transpose() * ap));
                }
                let f = pair.transpose() * y;
                let r = b[0].ncols();
                let mut out = DVector::zeros(r);
                for (p, bp) in b.iter().enumerate() {
                    out += (f.row(p) * bp).transpose();
                }
                env = out;
                i += 2;
            } else {
                let a = &self.sites[i];
                let mut out = DVector::zeros(a[0].ncols());
                for (p, ap) in a.iter().enumerate() {
                    out += single[p] * (env.transpose() * ap).transpose();
                }
                env = out;
                i += 1;
            }
            let scale = env.amax();
            if !scale.is_finite() {
                return Err(Error::numerical(
                    "replica-tn",
                    format!("non-finite closure at site {i}"),
                ));
            }
            if scale == 0.0 {
                return Ok((f64::NEG_INFINITY, 0.0));
            }
            env /= scale;
            log += scale.ln();
        }
        let v = env[0];
        Ok((log + v.abs().ln(), v.signum()))
    }

    /// Dense coefficient vector, for small chains in tests.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut cur: Vec<DMatrix<f64>> = vec![DMatrix::from_element(1, 1, self.log_scale.exp())];
        for site in &self.sites {
            let mut next = Vec::with_capacity(cur.len() * self.q);
            for c in &cur {
                for m in site {
                    next.push(c * m);
                }
            }
            cur = next;
        }
        cur.iter().map(|m| m[(0, 0)]).collect()
    }
}
