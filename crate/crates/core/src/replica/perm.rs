//! Permutations of the replicas and the multiplication table of `S_D`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Largest replica count for which a full group table is built (`5! = 120`).
pub const MAX_TABLE_DEGREE: usize = 5;

/// A permutation in one-line notation over `{0, .., n-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<u8>,
}

impl Permutation {
    pub fn new(images: Vec<u8>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            let i = i as usize;
            if i >= n || seen[i] {
                return Err(Error::invalid(format!("{images:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (0..n as u8).collect(),
        }
    }

    /// The cycle `0 -> 1 -> .. -> n-1 -> 0`.
    pub fn full_cycle(n: usize) -> Self {
        Permutation {
            images: (0..n).map(|i| ((i + 1) % n) as u8).collect(),
        }
    }

    /// All `n!` permutations in lexicographic order of their images.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut current: Vec<u8> = (0..n as u8).collect();
        loop {
            out.push(Permutation {
                images: current.clone(),
            });
            // next lexicographic permutation
            let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
                break;
            };
            let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
            current.swap(i - 1, j);
            current[i..].reverse();
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.images[i] as usize
    }

    pub fn images(&self) -> &[u8] {
        &self.images
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.degree(), other.degree());
        Permutation {
            images: other
                .images
                .iter()
                .map(|&i| self.images[i as usize])
                .collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u8; self.degree()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j as usize] = i as u8;
        }
        Permutation { images: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.images
            .iter()
            .enumerate()
            .all(|(i, &j)| i == j as usize)
    }

    /// Cycle lengths in non-increasing order (fixed points included).
    pub fn cycle_type(&self) -> Vec<usize> {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut lengths = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.apply(i);
                len += 1;
            }
            lengths.push(len);
        }
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        lengths
    }

    pub fn cycle_count(&self) -> usize {
        self.cycle_type().len()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut wrote = false;
        for start in 0..n {
            if seen[start] || self.apply(start) == start {
                seen[start] = true;
                continue;
            }
            write!(f, "(")?;
            let mut i = start;
            let mut first = true;
            while !seen[i] {
                seen[i] = true;
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{}", i + 1)?;
                first = false;
                i = self.apply(i);
            }
            write!(f, ")")?;
            wrote = true;
        }
        if !wrote {
            write!(f, "()")?;
        }
        Ok(())
    }
}

/// `S_D` with its multiplication table.
#[derive(Clone, Debug)]
pub struct SymmetricGroupTable {
    degree: usize,
    elements: Vec<Permutation>,
    index: HashMap<Permutation, usize>,
    /// `compose[a * n + b]` is the index of `elements[a] ∘ elements[b]`.
    compose: Vec<usize>,
    inverse: Vec<usize>,
    cycles: Vec<usize>,
}

pub fn enumerate_permutations(degree: usize) -> Result<SymmetricGroupTable> {
    SymmetricGroupTable::new(degree)
}

impl SymmetricGroupTable {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 || degree > MAX_TABLE_DEGREE {
            return Err(Error::resource(format!(
                "symmetric group tables are limited to 1 <= D <= {MAX_TABLE_DEGREE}, got {degree}"
            )));
        }
        let elements = Permutation::all(degree);
        let index: HashMap<_, _> = elements
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, p)| (p, i))
            .collect();
        let n = elements.len();
        let mut compose = Vec::with_capacity(n * n);
        for a in &elements {
            for b in &elements {
                compose.push(index[&a.compose(b)]);
            }
        }
        let inverse = elements.iter().map(|p| index[&p.inverse()]).collect();
        let cycles = elements.iter().map(Permutation::cycle_count).collect();
        Ok(SymmetricGroupTable {
            degree,
            elements,
            index,
            compose,
            inverse,
            cycles,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `D!`, the number of spin states per site.
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Permutation {
        &self.elements[i]
    }

    pub fn index_of(&self, p: &Permutation) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.compose[a * self.order() + b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn cycle_count(&self, a: usize) -> usize {
        self.cycles[a]
    }

    pub fn identity_index(&self) -> usize {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_orders() {
        assert_eq!(enumerate_permutations(3).unwrap().order(), 6);
        assert_eq!(enumerate_permutations(4).unwrap().order(), 24);
        assert_eq!(enumerate_permutations(5).unwrap().order(), 120);
        assert!(matches!(enumerate_permutations(6), Err(Error::Resource(_))));
        assert_eq!(Permutation::all(6).len(), 720);
    }

    #[test]
    fn s4_cycle_histogram() {
        let g = enumerate_permutations(4).unwrap();
        let mut hist = [0usize; 5];
        for i in 0..g.order() {
            hist[g.cycle_count(i)] += 1;
        }
        assert_eq!(hist, [0, 6, 11, 6, 1]);
    }

    #[test]
    fn table_is_a_latin_square() {
        let g = enumerate_permutations(4).unwrap();
        let n = g.order();
        for a in 0..n {
            let mut row: Vec<_> = (0..n).map(|b| g.compose(a, b)).collect();
            let mut col: Vec<_> = (0..n).map(|b| g.compose(b, a)).collect();
            row.sort_unstable();
            col.sort_unstable();
            assert_eq!(row, (0..n).collect::<Vec<_>>());
            assert_eq!(col, (0..n).collect::<Vec<_>>());
            assert_eq!(g.compose(a, g.inverse(a)), g.identity_index());
        }
        assert!(g.element(0).is_identity());
    }

    #[test]
    fn lexicographic_and_display() {
        let all = Permutation::all(3);
        let images: Vec<_> = all.iter().map(|p| p.images().to_vec()).collect();
        let mut sorted = images.clone();
        sorted.sort();
        assert_eq!(images, sorted);
        assert_eq!(Permutation::full_cycle(4).to_string(), "(1 2 3 4)");
        assert_eq!(Permutation::identity(3).to_string(), "()");
        assert_eq!(Permutation::full_cycle(4).cycle_type(), vec![4]);
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
    }

    #[test]
    fn composition_order() {
        let a = Permutation::new(vec![1, 0, 2]).unwrap();
        let b = Permutation::new(vec![0, 2, 1]).unwrap();
        let ab = a.compose(&b);
        for i in 0..3 {
            assert_eq!(ab.apply(i), a.apply(b.apply(i)));
        }
    }
}
