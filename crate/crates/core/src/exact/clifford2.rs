use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use rand::Rng;

use crate::qudit::{clifford_generators, CMatrix, Dim, UnitaryMatrix, C64};

/// Order of the two-qubit Clifford group modulo global phase.
pub const CLIFFORD2_ORDER: usize = 11520;

static CLIFFORD2: OnceLock<Vec<UnitaryMatrix>> = OnceLock::new();

/// Rotates the global phase so the first nonzero entry (row-major) is real
/// positive.
fn canonical(mut m: CMatrix) -> CMatrix {
    let first = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .find(|z| z.norm() > 1e-9)
        .expect("a unitary has a nonzero entry");
    let phase = first.conj() / first.norm();
    m.iter_mut().for_each(|z| *z *= phase);
    m
}

fn key(m: &CMatrix) -> Vec<i64> {
    let mut k = Vec::with_capacity(2 * m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            k.push((z.re * 1e6).round() as i64);
            k.push((z.im * 1e6).round() as i64);
        }
    }
    k
}

fn enumerate() -> Vec<UnitaryMatrix> {
    let g = clifford_generators(Dim::new(2).unwrap());
    let id = UnitaryMatrix::identity(2);
    // CADD at d = 2 is CNOT with control on site 0.
    let gens: Vec<CMatrix> = [
        g.h.kron(&id),
        id.kron(&g.h),
        g.p.kron(&id),
        id.kron(&g.p),
        g.cadd.clone(),
    ]
    .into_iter()
    .map(UnitaryMatrix::into_matrix)
    .collect();

    let start = canonical(CMatrix::identity(4, 4));
    let mut seen = HashMap::new();
    seen.insert(key(&start), 0usize);
    let mut found = vec![start.clone()];
    let mut queue = VecDeque::from([start]);
    while let Some(m) = queue.pop_front() {
        for g in &gens {
            let next = canonical(g * &m);
            let k = key(&next);
            if !seen.contains_key(&k) {
                seen.insert(k, found.len());
                found.push(next.clone());
                queue.push_back(next);
            }
        }
    }
    found
        .into_iter()
        .map(UnitaryMatrix::new_unchecked)
        .collect()
}

/// The cached two-qubit Clifford group, one phase-canonical matrix per class.
pub fn clifford2_group() -> &'static [UnitaryMatrix] {
    CLIFFORD2.get_or_init(enumerate)
}

/// Uniformly random two-qubit Clifford (modulo global phase).
pub fn sample_uniform_clifford2<R: Rng + ?Sized>(rng: &mut R) -> UnitaryMatrix {
    let group = clifford2_group();
    group[rng.random_range(0..group.len())].clone()
}

/// Index-based draw, exposed for frequency tests.
pub fn sample_clifford2_index<R: Rng + ?Sized>(rng: &mut R) -> usize {
    rng.random_range(0..clifford2_group().len())
}

/// `T = diag(1, e^{-iπ/4})`.
pub fn t_gate_phases() -> [C64; 2] {
    [
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4),
    ]
}
