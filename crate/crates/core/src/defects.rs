//! Defect subspaces `A ⊆ Z_d^k`, the CSS code projectors they induce and
//! their overlaps with replica permutations.
//!
//! A defect subspace is a proper, nonzero subspace whose elements all satisfy
//! `x·x ≡ 0 (mod D)` and `x·1 ≡ 0 (mod d)`, with the dot products taken over
//! the integer representatives in `[0, d)`.

use std::collections::{BTreeSet, HashSet};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qudit::{checked_pow, digits, from_digits, CMatrix, Dim, C64};
use crate::replica::Permutation;

/// Enumeration guard on `d^k` for [`find_defect_subspaces`].
pub const MAX_ENUMERATION: usize = 100_000_000;
/// Largest replica count accepted by the search.
pub const MAX_REPLICAS: usize = 6;
/// Largest `d^k` for which the dense projector is materialized.
pub const MAX_PROJECTOR_DIM: usize = 4096;

/// The span of a set of vectors in `Z_d^k`, together with all its elements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DefectSubspace {
    d: Dim,
    k: usize,
    /// Reduced row-echelon basis.
    generators: Vec<Vec<u32>>,
    /// All `d^r` span elements, sorted lexicographically.
    elements: Vec<Vec<u32>>,
}

impl DefectSubspace {
    /// Span of `generators` without checking the defect conditions; see
    /// [`validate_defect_subspace`].
    pub fn span(d: Dim, k: usize, generators: &[Vec<u32>]) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("replica count must be positive"));
        }
        for g in generators {
            if g.len() != k {
                return Err(Error::invalid(format!(
                    "generator {g:?} has length {}, expected {k}",
                    g.len()
                )));
            }
            if g.iter().any(|&x| x >= d.get()) {
                return Err(Error::invalid(format!(
                    "generator {g:?} has entries outside [0, {d})"
                )));
            }
        }
        let basis = row_echelon(d, generators);
        if basis.len() != generators.len() {
            return Err(Error::invalid("generators are linearly dependent"));
        }
        let elements = span_elements(d, k, &basis);
        Ok(DefectSubspace {
            d,
            k,
            generators: basis,
            elements,
        })
    }

    /// Span of `generators`, rejected unless it is a defect subspace.
    pub fn new(d: Dim, k: usize, generators: &[Vec<u32>]) -> Result<Self> {
        let a = Self::span(d, k, generators)?;
        if !validate_defect_subspace(&a) {
            return Err(Error::invalid(format!(
                "span of {generators:?} is not a defect subspace of Z_{d}^{k}"
            )));
        }
        Ok(a)
    }

    /// `span{1_D}` in `Z_d^D`, the subspace behind `Y_d`.
    pub fn all_ones(d: Dim) -> Self {
        let k = d.replica_count();
        Self::new(d, k, &[vec![1; k]]).expect("span{1_D} is a defect subspace")
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    pub fn replicas(&self) -> usize {
        self.k
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// `|A| = d^r`.
    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[Vec<u32>] {
        &self.generators
    }

    pub fn elements(&self) -> &[Vec<u32>] {
        &self.elements
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        self.elements
            .binary_search_by(|e| e.as_slice().cmp(v))
            .is_ok()
    }

    /// True for `span{1_D}` with `k = D`.
    pub fn is_all_ones(&self) -> bool {
        self.k == self.d.replica_count() && self.rank() == 1 && self.contains(&vec![1; self.k])
    }
}

fn quadratic_ok(d: Dim, v: &[u32]) -> bool {
    let big_d = d.replica_count() as u64;
    let dot: u64 = v.iter().map(|&x| (x as u64) * (x as u64)).sum();
    let sum: u64 = v.iter().map(|&x| x as u64).sum();
    dot % big_d == 0 && sum % d.get() as u64 == 0
}

/// True iff every span element passes both modular conditions and
/// `0 < r_A < k`.
pub fn validate_defect_subspace(a: &DefectSubspace) -> bool {
    let r = a.rank();
    r > 0 && r < a.k && a.elements.iter().all(|v| quadratic_ok(a.d, v))
}

fn span_elements(d: Dim, k: usize, basis: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let dd = d.get();
    let mut elems = vec![vec![0u32; k]];
    for g in basis {
        let mut next = Vec::with_capacity(elems.len() * dd as usize);
        for e in &elems {
            for c in 0..dd {
                next.push(e.iter().zip(g).map(|(x, y)| (x + c * y) % dd).collect());
            }
        }
        elems = next;
    }
    elems.sort();
    elems.dedup();
    elems
}

/// Reduced row-echelon form over `Z_d`; zero rows dropped.
fn row_echelon(d: Dim, rows: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let dd = d.get();
    let mut m: Vec<Vec<u32>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut pivot_row = 0;
    for col in 0..ncols {
        let Some(sel) = (pivot_row..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(pivot_row, sel);
        let inv = d
            .inverse(m[pivot_row][col])
            .expect("nonzero element of a field");
        for x in m[pivot_row].iter_mut() {
            *x = (*x * inv) % dd;
        }
        for r in 0..m.len() {
            if r != pivot_row && m[r][col] != 0 {
                let f = m[r][col];
                for c in 0..ncols {
                    m[r][c] = (m[r][c] + dd * dd - f * m[pivot_row][c]) % dd;
                }
            }
        }
        pivot_row += 1;
    }
    m.truncate(pivot_row);
    m
}

/// All defect subspaces of `Z_d^k`, canonically sorted.
///
/// Every base-`d` digit vector is screened against the defect conditions;
/// the survivors seed a depth-first search that grows subspaces one vector
/// at a time and keeps an extension only if the whole new span still
/// satisfies the conditions. Spans are deduplicated by their element sets.
pub fn find_defect_subspaces(d: Dim, k: usize) -> Result<Vec<DefectSubspace>> {
    if k == 0 || k > MAX_REPLICAS {
        return Err(Error::resource(format!(
            "defect search supports 1 <= k <= {MAX_REPLICAS}, got {k}"
        )));
    }
    let du = d.as_usize();
    let total = checked_pow(du, k)
        .filter(|&n| n <= MAX_ENUMERATION)
        .ok_or_else(|| Error::resource(format!("d^k = {du}^{k} exceeds {MAX_ENUMERATION}")))?;

    // One representative per line: first nonzero entry equal to 1.
    let candidates: Vec<Vec<u32>> = (1..total)
        .map(|n| {
            digits(n, du, k)
                .into_iter()
                .map(|x| x as u32)
                .collect::<Vec<_>>()
        })
        .filter(|v| v.iter().find(|&&x| x != 0) == Some(&1))
        .filter(|v| quadratic_ok(d, v))
        .collect();

    let mut seen: HashSet<Vec<Vec<u32>>> = HashSet::new();
    let mut found: Vec<DefectSubspace> = Vec::new();
    let mut stack: Vec<Vec<Vec<u32>>> = Vec::new();
    for c in &candidates {
        let basis = vec![c.clone()];
        let elems = span_elements(d, k, &basis);
        if seen.insert(elems) {
            stack.push(basis);
        }
    }
    while let Some(basis) = stack.pop() {
        let a = DefectSubspace::span(d, k, &basis)?;
        if !validate_defect_subspace(&a) {
            continue;
        }
        for c in &candidates {
            if a.contains(c) {
                continue;
            }
            // x·y ≡ 0 (mod d) against every generator is necessary; cheap prefilter.
            let orthogonal = a
                .generators
                .iter()
                .all(|g| g.iter().zip(c).map(|(x, y)| x * y).sum::<u32>() % d.get() == 0);
            if !orthogonal {
                continue;
            }
            let mut ext = a.generators.clone();
            ext.push(c.clone());
            if ext.len() >= k {
                continue;
            }
            let elems = span_elements(d, k, &ext);
            if !elems.iter().all(|v| quadratic_ok(d, v)) {
                continue;
            }
            if seen.insert(elems) {
                stack.push(ext);
            }
        }
        found.push(a);
    }
    found.sort_by(|a, b| a.elements.cmp(&b.elements));
    Ok(found)
}

/// The code-space projector `Q_A = |A|^{-2} Σ_{q,p∈A} Z_q X_p` on `k` qudits.
#[derive(Clone, Debug)]
pub struct CssProjector {
    subspace: DefectSubspace,
    matrix: CMatrix,
}

pub fn css_projector(a: &DefectSubspace) -> Result<CssProjector> {
    let du = a.d.as_usize();
    let size = checked_pow(du, a.k)
        .filter(|&n| n <= MAX_PROJECTOR_DIM)
        .ok_or_else(|| {
            Error::resource(format!(
                "projector on {}^{} exceeds the dense limit {MAX_PROJECTOR_DIM}",
                du, a.k
            ))
        })?;
    let norm = 1.0 / (a.size() as f64).powi(2);
    let mut m = CMatrix::zeros(size, size);
    // Z_q X_p |y> = ω^{q·(y+p)} |y+p>
    for q in &a.elements {
        for p in &a.elements {
            for col in 0..size {
                let mut row_digits = digits(col, du, a.k);
                let mut phase = 0i64;
                for i in 0..a.k {
                    row_digits[i] = (row_digits[i] + p[i] as usize) % du;
                    phase += q[i] as i64 * row_digits[i] as i64;
                }
                m[(from_digits(&row_digits, du), col)] += a.d.omega_pow(phase) * norm;
            }
        }
    }
    Ok(CssProjector {
        subspace: a.clone(),
        matrix: m,
    })
}

impl CssProjector {
    pub fn subspace(&self) -> &DefectSubspace {
        &self.subspace
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `r(A) = |A| Q_A`, the per-site replica operator.
    pub fn replica_operator(&self) -> CMatrix {
        &self.matrix * C64::new(self.subspace.size() as f64, 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Real part of `Q_A`, which is exact since `Q_A[x,y] ∈ {0, 1/|A|}`.
    pub fn real_matrix(&self) -> DMatrix<f64> {
        self.matrix.map(|z| z.re)
    }
}

/// `tr(r(A) R_π)` for every `π ∈ S_k`, as exact integers.
#[derive(Clone, Debug)]
pub struct OverlapTable {
    subspace: DefectSubspace,
    entries: Vec<(Permutation, u64)>,
}

pub fn css_overlap_table(a: &DefectSubspace) -> Result<OverlapTable> {
    let proj = css_projector(a)?;
    let du = a.d.as_usize();
    let size = proj.matrix.nrows();
    let scale = a.size() as f64;
    let mut entries = Vec::new();
    for pi in Permutation::all(a.k) {
        // R_π |x_1..x_k> = |x_{π^{-1}(1)} .. x_{π^{-1}(k)}>
        let mut acc = C64::new(0.0, 0.0);
        for x in 0..size {
            let xd = digits(x, du, a.k);
            let mut yd = vec![0usize; a.k];
            for (i, &v) in xd.iter().enumerate() {
                yd[pi.apply(i)] = v;
            }
            acc += proj.matrix[(x, from_digits(&yd, du))];
        }
        let value = acc * scale;
        let rounded = value.re.round();
        if (value.re - rounded).abs() > 1e-6 || value.im.abs() > 1e-6 || rounded < 1.0 {
            return Err(Error::numerical(
                "defects",
                format!("overlap for {pi} is not a positive integer: {value}"),
            ));
        }
        entries.push((pi, rounded as u64));
    }
    Ok(OverlapTable {
        subspace: a.clone(),
        entries,
    })
}

impl OverlapTable {
    pub fn subspace(&self) -> &DefectSubspace {
        &self.subspace
    }

    pub fn entries(&self) -> &[(Permutation, u64)] {
        &self.entries
    }

    pub fn get(&self, pi: &Permutation) -> Option<u64> {
        self.entries.iter().find(|(p, _)| p == pi).map(|&(_, v)| v)
    }

    /// Distinct values by cycle type, in first-seen order.
    pub fn by_cycle_type(&self) -> Vec<(Vec<usize>, u64)> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (p, v) in &self.entries {
            let ct = p.cycle_type();
            if seen.insert(ct.clone()) {
                out.push((ct, *v));
            }
        }
        out
    }
}

/// Closed-form `tr(r(A) R_π)` for `A = span{1_D}`.
pub fn all_ones_overlap(d: Dim, pi: &Permutation) -> u64 {
    let big_d = d.replica_count();
    assert_eq!(pi.degree(), big_d);
    let dd = d.get() as u64;
    let ct = pi.cycle_type();
    if pi.is_identity() {
        dd.pow(big_d as u32 - 1)
    } else if ct == [big_d] {
        dd * dd
    } else if d.get() == 2 && ct == [2, 2] {
        dd.pow(3)
    } else {
        dd.pow(ct.len() as u32 - 1)
    }
}
