use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::qudit::{checked_pow, Dim, UnitaryMatrix, C64};

/// Largest number of amplitudes a dense state may hold.
pub const MAX_AMPLITUDES: usize = 1 << 28;

/// Dense pure state of `n` qudits; site 0 is the most significant digit.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    d: Dim,
    n: usize,
    amps: Vec<C64>,
}

fn size_for(d: Dim, n: usize) -> Result<usize> {
    checked_pow(d.as_usize(), n)
        .filter(|&s| s <= MAX_AMPLITUDES)
        .ok_or_else(|| {
            Error::resource(format!(
                "{n} qudits of dimension {d} exceed {MAX_AMPLITUDES} amplitudes"
            ))
        })
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(d: Dim, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("a state needs at least one site"));
        }
        let size = size_for(d, n)?;
        let mut amps = vec![C64::new(0.0, 0.0); size];
        amps[0] = C64::new(1.0, 0.0);
        Ok(StateVector { d, n, amps })
    }

    /// Wraps amplitudes; they must have unit norm to `1e-10`.
    pub fn from_amplitudes(d: Dim, n: usize, amps: Vec<C64>) -> Result<Self> {
        let size = size_for(d, n)?;
        if amps.len() != size {
            return Err(Error::invalid(format!(
                "expected {size} amplitudes, got {}",
                amps.len()
            )));
        }
        let s = StateVector { d, n, amps };
        if (s.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("state norm is {}", s.norm())));
        }
        Ok(s)
    }

    /// Scales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(d: Dim, n: usize, mut amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid(
                "cannot normalize a zero or non-finite vector",
            ));
        }
        for a in &mut amps {
            *a /= norm;
        }
        Self::from_amplitudes(d, n, amps)
    }

    /// `T|+> = (|0> + e^{-iπ/4}|1>)/√2`.
    pub fn t_state() -> Self {
        StateVector {
            d: Dim::new(2).unwrap(),
            n: 1,
            amps: vec![
                C64::new(FRAC_1_SQRT_2, 0.0),
                C64::from_polar(FRAC_1_SQRT_2, -PI / 4.0),
            ],
        }
    }

    /// Tensor product, `self` on the leading sites.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        if self.d != other.d {
            return Err(Error::invalid(
                "cannot tensor states of different qudit dimension",
            ));
        }
        let n = self.n + other.n;
        size_for(self.d, n)?;
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { d: self.d, n, amps })
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Applies a `d×d` gate to site `i` (0-based).
    pub fn apply_single_site_gate(&mut self, u: &UnitaryMatrix, i: usize) -> Result<()> {
        let du = self.d.as_usize();
        if u.dim() != du {
            return Err(Error::invalid(format!("expected a {du}x{du} gate")));
        }
        if i >= self.n {
            return Err(Error::invalid(format!(
                "site {i} out of range for {} sites",
                self.n
            )));
        }
        let stride = du.pow((self.n - 1 - i) as u32);
        let m = u.matrix();
        let mut buf = vec![C64::new(0.0, 0.0); du];
        for outer in 0..self.amps.len() / (du * stride) {
            for inner in 0..stride {
                let base = outer * du * stride + inner;
                for (a, slot) in buf.iter_mut().enumerate() {
                    *slot = self.amps[base + a * stride];
                }
                for a in 0..du {
                    let mut acc = C64::new(0.0, 0.0);
                    for (b, v) in buf.iter().enumerate() {
                        acc += m[(a, b)] * v;
                    }
                    self.amps[base + a * stride] = acc;
                }
            }
        }
        Ok(())
    }

    /// Applies a `d²×d²` gate to sites `(i, i+1)` (0-based left site).
    pub fn apply_two_site_gate(&mut self, u: &UnitaryMatrix, i: usize) -> Result<()> {
        let du = self.d.as_usize();
        let dd = du * du;
        if u.dim() != dd {
            return Err(Error::invalid(format!("expected a {dd}x{dd} gate")));
        }
        if i + 1 >= self.n {
            return Err(Error::invalid(format!(
                "pair ({i}, {}) out of range for {} sites",
                i + 1,
                self.n
            )));
        }
        let stride = du.pow((self.n - 2 - i) as u32);
        let m = u.matrix();
        let mut buf = vec![C64::new(0.0, 0.0); dd];
        for outer in 0..self.amps.len() / (dd * stride) {
            for inner in 0..stride {
                let base = outer * dd * stride + inner;
                for (a, slot) in buf.iter_mut().enumerate() {
                    *slot = self.amps[base + a * stride];
                }
                for a in 0..dd {
                    let mut acc = C64::new(0.0, 0.0);
                    for (b, v) in buf.iter().enumerate() {
                        acc += m[(a, b)] * v;
                    }
                    self.amps[base + a * stride] = acc;
                }
            }
        }
        Ok(())
    }

    /// Multiplies site `i` by a diagonal phase pattern, `|m> -> phases[m] |m>`.
    pub fn apply_diagonal(&mut self, phases: &[C64], i: usize) -> Result<()> {
        let du = self.d.as_usize();
        if phases.len() != du || i >= self.n {
            return Err(Error::invalid("diagonal gate does not match the state"));
        }
        let stride = du.pow((self.n - 1 - i) as u32);
        for (idx, a) in self.amps.iter_mut().enumerate() {
            *a *= phases[(idx / stride) % du];
        }
        Ok(())
    }
}

/// Convenience wrapper matching the free-function form.
pub fn init_zero_state(d: Dim, n: usize) -> Result<StateVector> {
    StateVector::zero(d, n)
}

pub fn apply_two_site_gate(state: &mut StateVector, u: &UnitaryMatrix, i: usize) -> Result<()> {
    state.apply_two_site_gate(u, i)
}
