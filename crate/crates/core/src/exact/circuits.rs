use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defects::DefectSubspace;
use crate::error::{Error, Result};
use crate::qudit::{random_haar_unitary, Dim, RngSeed};

use super::clifford2::{sample_uniform_clifford2, t_gate_phases};
use super::css::{qubit_upsilon, upsilon_exact};
use super::stats::EnsembleStats;
use super::StateVector;

/// Brick-wall Haar circuit ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub d: Dim,
    pub n: usize,
    pub depth: usize,
    pub seed: RngSeed,
    pub ensemble: usize,
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(
                "a brick-wall circuit needs at least two sites",
            ));
        }
        if self.ensemble == 0 {
            return Err(Error::invalid("ensemble size must be at least 1"));
        }
        Ok(())
    }

    /// Seed of realization `i`.
    pub fn realization_seed(&self, i: usize) -> RngSeed {
        self.seed.child(i as u64)
    }
}

/// Left sites of the gates in layer `r` (1-based): odd layers start at site
/// 0, even layers at site 1. An unpaired last site is left alone.
pub fn layer_pairs(n: usize, r: usize) -> impl Iterator<Item = usize> {
    let start = if r % 2 == 1 { 0 } else { 1 };
    (start..n.saturating_sub(1)).step_by(2)
}

fn haar_layer<R: Rng + ?Sized>(state: &mut StateVector, r: usize, rng: &mut R) -> Result<()> {
    let g = state.dim().as_usize().pow(2);
    for i in layer_pairs(state.sites(), r) {
        state.apply_two_site_gate(&random_haar_unitary(g, rng), i)?;
    }
    Ok(())
}

/// Applies `spec.depth` Haar layers to `|0…0>`.
pub fn run_brickwall<R: Rng + ?Sized>(spec: &CircuitSpec, rng: &mut R) -> Result<StateVector> {
    spec.validate()?;
    let mut state = StateVector::zero(spec.d, spec.n)?;
    for r in 1..=spec.depth {
        haar_layer(&mut state, r, rng)?;
    }
    Ok(state)
}

/// `Υ_A` after every layer `t = 0..=depth` of one realization.
pub fn brickwall_trajectory<R: Rng + ?Sized>(
    spec: &CircuitSpec,
    a: &DefectSubspace,
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut state = StateVector::zero(spec.d, spec.n)?;
    let mut out = Vec::with_capacity(spec.depth + 1);
    out.push(upsilon_exact(&state, a)?);
    for r in 1..=spec.depth {
        haar_layer(&mut state, r, rng)?;
        out.push(upsilon_exact(&state, a)?);
    }
    Ok(out)
}

/// `Υ_A` after the final layer only, for deep-circuit sampling.
pub fn brickwall_final_upsilon<R: Rng + ?Sized>(
    spec: &CircuitSpec,
    a: &DefectSubspace,
    rng: &mut R,
) -> Result<f64> {
    upsilon_exact(&run_brickwall(spec, rng)?, a)
}

/// Quenched and annealed averages over `spec.ensemble` realizations, at
/// every depth. Realization `i` uses the stream of `spec.seed.child(i)`, so
/// results do not depend on the thread count.
pub fn ensemble_averages(spec: &CircuitSpec, a: &DefectSubspace) -> Result<EnsembleStats> {
    spec.validate()?;
    if a.dim() != spec.d {
        return Err(Error::invalid(
            "defect subspace and circuit use different d",
        ));
    }
    let samples = (0..spec.ensemble)
        .into_par_iter()
        .map(|i| brickwall_trajectory(spec, a, &mut spec.realization_seed(i).stream()))
        .collect::<Result<Vec<_>>>()?;
    EnsembleStats::from_trajectories(&samples)
}

/// Final-depth `Υ_A` for each realization, in realization order.
pub fn ensemble_final_upsilons(spec: &CircuitSpec, a: &DefectSubspace) -> Result<Vec<f64>> {
    spec.validate()?;
    (0..spec.ensemble)
        .into_par_iter()
        .map(|i| brickwall_final_upsilon(spec, a, &mut spec.realization_seed(i).stream()))
        .collect()
}

/// Qubit Clifford circuit doped with T gates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DopedCliffordSpec {
    pub n: usize,
    pub depth: usize,
    /// T gates after each Clifford layer, each on a uniformly random site.
    pub t_per_layer: usize,
    pub seed: RngSeed,
    pub ensemble: usize,
}

/// Largest qubit count for doped runs.
pub const MAX_DOPED_QUBITS: usize = 14;

impl DopedCliffordSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(
                "a brick-wall circuit needs at least two sites",
            ));
        }
        if self.n > MAX_DOPED_QUBITS {
            return Err(Error::resource(format!(
                "doped runs support at most {MAX_DOPED_QUBITS} qubits"
            )));
        }
        if self.ensemble == 0 {
            return Err(Error::invalid("ensemble size must be at least 1"));
        }
        Ok(())
    }
}

/// `Υ_2` after every layer of one doped realization.
pub fn doped_trajectory<R: Rng + ?Sized>(
    spec: &DopedCliffordSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut state = StateVector::zero(Dim::new(2)?, spec.n)?;
    let t = t_gate_phases();
    let mut out = Vec::with_capacity(spec.depth + 1);
    out.push(1.0);
    for r in 1..=spec.depth {
        for i in layer_pairs(spec.n, r) {
            state.apply_two_site_gate(&sample_uniform_clifford2(rng), i)?;
        }
        for _ in 0..spec.t_per_layer {
            let site = rng.random_range(0..spec.n);
            state.apply_diagonal(&t, site)?;
        }
        // Cliffords leave Υ unchanged, so without T gates it stays 1.
        let ups = if spec.t_per_layer == 0 {
            1.0
        } else {
            qubit_upsilon(state.amplitudes(), spec.n)
        };
        if !(ups > 0.0) {
            return Err(Error::numerical("exact", format!("Υ = {ups} at layer {r}")));
        }
        out.push(ups);
    }
    Ok(out)
}

/// Ensemble statistics of `Y_2` for doped Clifford circuits.
pub fn run_doped_clifford(spec: &DopedCliffordSpec) -> Result<EnsembleStats> {
    spec.validate()?;
    let samples = (0..spec.ensemble)
        .into_par_iter()
        .map(|i| doped_trajectory(spec, &mut spec.seed.child(i as u64).stream()))
        .collect::<Result<Vec<_>>>()?;
    EnsembleStats::from_trajectories(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: u32, n: usize, depth: usize, m: usize) -> CircuitSpec {
        CircuitSpec {
            d: Dim::new(d).unwrap(),
            n,
            depth,
            seed: RngSeed(2024),
            ensemble: m,
        }
    }

    #[test]
    fn layer_patterns() {
        assert_eq!(layer_pairs(6, 1).collect::<Vec<_>>(), vec![0, 2, 4]);
        assert_eq!(layer_pairs(6, 2).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(layer_pairs(5, 1).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(layer_pairs(5, 2).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn depth_zero_is_magic_free() {
        let s = spec(2, 4, 0, 3);
        let a = DefectSubspace::all_ones(s.d);
        let st = ensemble_averages(&s, &a).unwrap();
        assert_eq!(st.points.len(), 1);
        assert!(st.points[0].annealed.abs() < 1e-14);
    }

    #[test]
    fn seeded_runs_repeat() {
        let s = spec(3, 3, 4, 4);
        let a = DefectSubspace::all_ones(s.d);
        let x = ensemble_averages(&s, &a).unwrap();
        let y = ensemble_averages(&s, &a).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn one_layer_pairs_are_haar() {
        // E[Υ_2] for a Haar two-qubit state is 4/7, independently per pair.
        let s = spec(2, 4, 1, 4000);
        let a = DefectSubspace::all_ones(s.d);
        let st = ensemble_averages(&s, &a).unwrap();
        let p = st.at(1).unwrap();
        let target = (4.0f64 / 7.0).powi(2);
        assert!(
            (p.mean_upsilon - target).abs() < 4.0 * p.upsilon_err,
            "{p:?}"
        );
    }

    #[test]
    fn undoped_circuit_stays_stabilizer() {
        let spec = DopedCliffordSpec {
            n: 4,
            depth: 6,
            t_per_layer: 0,
            seed: RngSeed(3),
            ensemble: 3,
        };
        let mut rng = spec.seed.stream();
        let mut state = StateVector::zero(Dim::new(2).unwrap(), 4).unwrap();
        for r in 1..=6 {
            for i in layer_pairs(4, r) {
                state
                    .apply_two_site_gate(&sample_uniform_clifford2(&mut rng), i)
                    .unwrap();
            }
            let u = qubit_upsilon(state.amplitudes(), 4);
            assert!((u - 1.0).abs() < 1e-9);
        }
        let st = run_doped_clifford(&spec).unwrap();
        assert!(st.points.iter().all(|p| p.quenched_mean.abs() < 1e-9));
    }

    #[test]
    fn single_t_gate_gives_one_t_state() {
        let spec = DopedCliffordSpec {
            n: 4,
            depth: 1,
            t_per_layer: 1,
            seed: RngSeed(8),
            ensemble: 5,
        };
        let st = run_doped_clifford(&spec).unwrap();
        // one T on a stabilizer state: Y ≤ log(4/3)
        let y = st.at(1).unwrap().quenched_mean;
        assert!((0.0..=(4.0f64 / 3.0).ln() + 1e-12).contains(&y));
    }
}
