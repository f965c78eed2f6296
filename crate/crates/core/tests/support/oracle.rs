//! Exact rational contraction of the Haar-averaged replica state, written
//! directly from the Weingarten expansion in the operator basis
//! `⊗_i P_{π_i}` without any tensor-network machinery.

use std::collections::BTreeMap;

use magicflow::defects::{css_projector, DefectSubspace};
use magicflow::Dim;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub type Q = BigRational;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn cycles(p: &[usize]) -> u32 {
    let mut seen = vec![false; p.len()];
    let mut count = 0;
    for s in 0..p.len() {
        if !seen[s] {
            count += 1;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = p[i];
            }
        }
    }
    count
}

fn inverse(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&i| a[i]).collect()
}

fn int(x: u64) -> Q {
    Q::from_integer(BigInt::from(x))
}

/// `tr(P_σ† P_τ) = n^{#(σ⁻¹τ)}` as exact integers.
fn gram(perms: &[Vec<usize>], n: u64) -> Vec<Vec<Q>> {
    perms
        .iter()
        .map(|s| {
            perms
                .iter()
                .map(|t| int(n.pow(cycles(&compose(&inverse(s), t)))))
                .collect()
        })
        .collect()
}

fn invert(m: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let q = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..q).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for c in 0..q {
        let p = (c..q)
            .find(|&r| !a[r][c].is_zero())
            .expect("singular Gram matrix");
        a.swap(c, p);
        let inv = Q::one() / a[c][c].clone();
        for x in a[c].iter_mut() {
            *x *= inv.clone();
        }
        for r in 0..q {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for j in 0..2 * q {
                    let v = a[c][j].clone() * f.clone();
                    a[r][j] -= v;
                }
            }
        }
    }
    a.into_iter().map(|r| r[q..].to_vec()).collect()
}

/// `tr(r(A) P_π)` read off the dense replica operator.
fn closure_values(d: Dim, perms: &[Vec<usize>]) -> Vec<Q> {
    let a = DefectSubspace::all_ones(d);
    let r = css_projector(&a).unwrap().replica_operator();
    let du = d.as_usize();
    let k = perms[0].len();
    let size = du.pow(k as u32);
    perms
        .iter()
        .map(|p| {
            let mut acc = 0.0;
            for x in 0..size {
                let xd: Vec<usize> = (0..k)
                    .map(|i| (x / du.pow((k - 1 - i) as u32)) % du)
                    .collect();
                let mut yd = vec![0; k];
                for i in 0..k {
                    yd[p[i]] = xd[i];
                }
                let y = yd.iter().fold(0, |acc, &v| acc * du + v);
                acc += r[(x, y)].re;
            }
            let rounded = acc.round();
            assert!((acc - rounded).abs() < 1e-9);
            int(rounded as u64)
        })
        .collect()
}

pub struct Oracle {
    q: usize,
    wg: Vec<Vec<Q>>,
    /// `kernel[π₁ q + π₂][σ] = Σ_τ Wg_{στ} G_{τπ₁} G_{τπ₂}`
    kernel: Vec<Vec<Q>>,
    c: Vec<Q>,
}

impl Oracle {
    pub fn new(d: Dim) -> Self {
        let perms = permutations(d.replica_count());
        let dd = d.get() as u64;
        let q = perms.len();
        let wg = invert(&gram(&perms, dd * dd));
        let g = gram(&perms, dd);
        let kernel = (0..q * q)
            .map(|pp| {
                let (p1, p2) = (pp / q, pp % q);
                (0..q)
                    .map(|s| {
                        (0..q).fold(Q::zero(), |acc, t| {
                            acc + wg[s][t].clone() * g[t][p1].clone() * g[t][p2].clone()
                        })
                    })
                    .collect()
            })
            .collect();
        Oracle {
            q,
            wg,
            kernel,
            c: closure_values(d, &perms),
        }
    }

    /// Haar average over the pair `(i, i+1)`: `Σ_{στ} Wg_{στ} tr(P_τ† X) P_σ⊗P_σ`.
    fn average(&self, state: &BTreeMap<Vec<usize>, Q>, i: usize) -> BTreeMap<Vec<usize>, Q> {
        let mut out: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        for (conf, a) in state {
            let row = &self.kernel[conf[i] * self.q + conf[i + 1]];
            for s in 0..self.q {
                let v = a.clone() * row[s].clone();
                if v.is_zero() {
                    continue;
                }
                let mut key = conf.clone();
                key[i] = s;
                key[i + 1] = s;
                *out.entry(key).or_insert_with(Q::zero) += v;
            }
        }
        out
    }

    /// Exact `E[Υ]` after `t` brick-wall layers on `n` sites.
    pub fn upsilon(&self, n: usize, t: usize) -> Q {
        // first layer acts on |0><0|^{⊗D} per site, whose overlap with every P_τ is 1
        let mut state = BTreeMap::new();
        let mut conf = vec![0; n];
        let row_sums: Vec<Q> = self
            .wg
            .iter()
            .map(|r| r.iter().fold(Q::zero(), |acc, x| acc + x.clone()))
            .collect();
        for pairs in 0..self.q.pow((n / 2) as u32) {
            let mut rem = pairs;
            let mut weight = Q::one();
            for j in 0..n / 2 {
                let s = rem % self.q;
                rem /= self.q;
                conf[2 * j] = s;
                conf[2 * j + 1] = s;
                weight *= row_sums[s].clone();
            }
            state.insert(conf.clone(), weight);
        }
        for r in 2..=t {
            let start = if r % 2 == 1 { 0 } else { 1 };
            for i in (start..n.saturating_sub(1)).step_by(2) {
                state = self.average(&state, i);
            }
        }
        state
            .iter()
            .map(|(conf, a)| {
                conf.iter()
                    .fold(a.clone(), |acc, &s| acc * self.c[s].clone())
            })
            .fold(Q::zero(), |acc, x| acc + x)
    }
}

pub fn log_of(x: &Q) -> f64 {
    x.numer().to_f64().unwrap().ln() - x.denom().to_f64().unwrap().ln()
}
