use std::fs;

use magicflow::analytics::{
    doped_reference_curve, fit_decay_window, haar_closed_form, haar_upsilon_log, haar_y,
};
use magicflow::defects::{find_defect_subspaces, DefectSubspace};
use magicflow::exact::{ensemble_averages, run_doped_clifford, CircuitSpec, DopedCliffordSpec};
use magicflow::replica::{contract_annealed_series, ReplicaNetwork, TnParams, DEFAULT_CUTOFF};
use magicflow::{Dim, RngSeed};
use rayon::prelude::*;

use crate::config::{CliError, DepthRange, ExperimentConfig, Mode};
use crate::output::{Table, Value};

type Result<T> = std::result::Result<T, CliError>;

/// Result of one run: the table to emit and whether a validation gate failed.
pub struct RunOutput {
    pub table: Table,
    pub gate_failed: bool,
}

fn dim(cfg: &ExperimentConfig) -> Result<Dim> {
    Ok(Dim::new(cfg.d.expect("checked by resolve"))?)
}

fn sizes(cfg: &ExperimentConfig) -> &[usize] {
    cfg.n.as_deref().expect("checked by resolve")
}

fn depths(cfg: &ExperimentConfig) -> DepthRange {
    cfg.t.expect("checked by resolve")
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let table = match cfg.mode {
        Mode::Defects => defects(cfg)?,
        Mode::Exact => exact(cfg)?,
        Mode::Doped => doped(cfg)?,
        Mode::Tn => tn(cfg)?,
        Mode::Haar => haar(cfg)?,
        Mode::Fit => fit(cfg)?,
        Mode::Validate => return validate(cfg),
    };
    Ok(RunOutput {
        table,
        gate_failed: false,
    })
}

fn defects(cfg: &ExperimentConfig) -> Result<Table> {
    let d = dim(cfg)?;
    let k = cfg.k.expect("checked by resolve");
    let mut table = Table::new(&["d", "k", "index", "rank", "size", "generators", "all_ones"]);
    for (i, a) in find_defect_subspaces(d, k)?.iter().enumerate() {
        let gens: Vec<String> = a
            .generators()
            .iter()
            .map(|g| g.iter().map(|x| x.to_string()).collect::<String>())
            .collect();
        table.push(vec![
            d.get().into(),
            k.into(),
            i.into(),
            a.rank().into(),
            a.size().into(),
            gens.join(" ").into(),
            a.is_all_ones().into(),
        ]);
    }
    Ok(table)
}

fn exact(cfg: &ExperimentConfig) -> Result<Table> {
    let d = dim(cfg)?;
    let range = depths(cfg);
    let m = cfg.m.expect("checked by resolve");
    let a = DefectSubspace::all_ones(d);
    let mut table = Table::new(&[
        "d",
        "N",
        "t",
        "M",
        "Y_quenched",
        "Y_quenched_err",
        "Y_annealed",
        "Y_annealed_err",
        "mean_upsilon",
        "upsilon_err",
        "relative_variance",
        "Y_haar",
        "delta_Y",
    ]);
    for &n in sizes(cfg) {
        let spec = CircuitSpec {
            d,
            n,
            depth: range.end,
            seed: RngSeed(cfg.seed),
            ensemble: m,
        };
        let stats = ensemble_averages(&spec, &a)?;
        let yh = haar_y(d, n);
        for p in stats.points.iter().filter(|p| range.contains(p.t)) {
            table.push(vec![
                d.get().into(),
                n.into(),
                p.t.into(),
                m.into(),
                p.quenched_mean.into(),
                p.quenched_err.into(),
                p.annealed.into(),
                p.annealed_err.into(),
                p.mean_upsilon.into(),
                p.upsilon_err.into(),
                p.relative_variance.into(),
                yh.into(),
                (yh - p.annealed).into(),
            ]);
        }
    }
    Ok(table)
}

fn doped(cfg: &ExperimentConfig) -> Result<Table> {
    let range = depths(cfg);
    let m = cfg.m.expect("checked by resolve");
    let doping = cfg.doping.unwrap_or(1);
    let mut table = Table::new(&[
        "N",
        "t",
        "T_gates",
        "M",
        "Y_quenched",
        "Y_quenched_err",
        "Y_annealed",
        "Y_annealed_err",
        "Y_haar",
        "delta_Y",
        "reference_delta_Y",
    ]);
    for &n in sizes(cfg) {
        let spec = DopedCliffordSpec {
            n,
            depth: range.end,
            t_per_layer: doping,
            seed: RngSeed(cfg.seed),
            ensemble: m,
        };
        let stats = run_doped_clifford(&spec)?;
        let yh = haar_y(Dim::new(2)?, n);
        for p in stats.points.iter().filter(|p| range.contains(p.t)) {
            let gates = p.t * doping;
            table.push(vec![
                n.into(),
                p.t.into(),
                gates.into(),
                m.into(),
                p.quenched_mean.into(),
                p.quenched_err.into(),
                p.annealed.into(),
                p.annealed_err.into(),
                yh.into(),
                (yh - p.annealed).into(),
                doped_reference_curve(gates as f64, n).into(),
            ]);
        }
    }
    Ok(table)
}

fn tn_params(cfg: &ExperimentConfig, chi: usize) -> TnParams {
    TnParams {
        chi,
        cutoff: cfg.cutoff.unwrap_or(DEFAULT_CUTOFF),
        conserve: cfg.conserve.unwrap_or(true),
    }
}

fn tn(cfg: &ExperimentConfig) -> Result<Table> {
    let d = dim(cfg)?;
    let range = depths(cfg);
    if range.start == 0 {
        return Err(CliError::Usage(
            "tensor-network depths start at t = 1".into(),
        ));
    }
    let net = ReplicaNetwork::new(d)?;
    let grid: Vec<(usize, usize)> = sizes(cfg)
        .iter()
        .flat_map(|&n| {
            cfg.chi
                .as_deref()
                .unwrap_or(&[])
                .iter()
                .map(move |&c| (n, c))
        })
        .collect();
    let results = grid
        .par_iter()
        .map(|&(n, chi)| contract_annealed_series(&net, n, range.end, tn_params(cfg, chi)))
        .collect::<magicflow::Result<Vec<_>>>()?;
    let mut table = Table::new(&[
        "d",
        "N",
        "t",
        "chi",
        "log_upsilon",
        "Y",
        "Y_haar",
        "delta_Y",
        "max_bond",
        "discarded_weight",
    ]);
    for (&(n, chi), series) in grid.iter().zip(&results) {
        let yh = haar_y(d, n);
        for p in series.iter().filter(|p| range.contains(p.t)) {
            table.push(vec![
                d.get().into(),
                n.into(),
                p.t.into(),
                chi.into(),
                p.log_upsilon.into(),
                p.y.into(),
                yh.into(),
                (yh - p.y).into(),
                p.max_bond.into(),
                p.discarded_weight.into(),
            ]);
        }
    }
    Ok(table)
}

fn haar(cfg: &ExperimentConfig) -> Result<Table> {
    let d = dim(cfg)?;
    let mut table = Table::new(&["d", "N", "log_upsilon", "Y", "Y_closed_form"]);
    for &n in sizes(cfg) {
        if n == 0 {
            return Err(CliError::Usage("N must be at least 1".into()));
        }
        let log = haar_upsilon_log(d, n);
        table.push(vec![
            d.get().into(),
            n.into(),
            log.into(),
            (-log).into(),
            haar_closed_form(d, n).unwrap_or(f64::NAN).into(),
        ]);
    }
    Ok(table)
}

/// Data section of a CSV written by this tool (header line skipped).
fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut first = lines
        .next()
        .ok_or_else(|| CliError::Usage("fit input is empty".into()))?;
    if first.starts_with('{') {
        first = lines
            .next()
            .ok_or_else(|| CliError::Usage("fit input has no column line".into()))?;
    }
    let columns: Vec<String> = first.split(',').map(|s| s.trim().to_string()).collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|s| s.trim().to_string())
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    if let Some(bad) = rows.iter().position(|r| r.len() != columns.len()) {
        return Err(CliError::Unparseable(format!(
            "fit input row {} has the wrong width",
            bad + 1
        )));
    }
    Ok((columns, rows))
}

fn fit(cfg: &ExperimentConfig) -> Result<Table> {
    let path = cfg.input.as_ref().expect("checked by resolve");
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let (columns, rows) = read_csv(&text)?;
    let col = |name: &str| columns.iter().position(|c| c == name);
    let (t_col, y_col) = match (col("t"), col("delta_Y")) {
        (Some(t), Some(y)) => (t, y),
        _ => {
            return Err(CliError::Usage(
                "fit input needs 't' and 'delta_Y' columns".into(),
            ))
        }
    };
    let n_col = col("N");
    let keys: Vec<usize> = ["d", "N", "chi"].iter().filter_map(|k| col(k)).collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Unparseable(format!("'{s}' in fit input is not a number")))
    };

    let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in &rows {
        let label = keys
            .iter()
            .map(|&k| format!("{}={}", columns[k], r[k]))
            .collect::<Vec<_>>()
            .join(" ");
        let scale = match n_col {
            Some(c) => num(&r[c])?,
            None => 1.0,
        };
        let point = (num(&r[t_col])?, num(&r[y_col])? / scale);
        match groups.iter_mut().find(|g| g.0 == label) {
            Some(g) => g.1.push(point),
            None => groups.push((label, vec![point])),
        }
    }
    let (t_min, t_max) = match cfg.t {
        Some(r) => (r.start as f64, r.end as f64),
        None => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let mut table = Table::new(&[
        "group", "alpha", "stderr", "a", "t_window", "residual", "points",
    ]);
    for (label, pts) in &groups {
        let f = fit_decay_window(pts, t_min, t_max)?;
        table.push(vec![
            label.clone().into(),
            f.alpha.into(),
            f.stderr.into(),
            f.a.into(),
            Value::Reals(vec![f.t_window.0, f.t_window.1]),
            f.residual.into(),
            f.points.into(),
        ]);
    }
    Ok(table)
}

fn validate(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let d = dim(cfg)?;
    let range = depths(cfg);
    if range.start == 0 {
        return Err(CliError::Usage("validation depths start at t = 1".into()));
    }
    let m = cfg.m.expect("checked by resolve");
    let net = ReplicaNetwork::new(d)?;
    let q = net.local_dim();
    let chi = cfg
        .chi
        .as_ref()
        .and_then(|c| c.first().copied())
        .unwrap_or(q * q);
    let a = DefectSubspace::all_ones(d);
    let mut table = Table::new(&[
        "d",
        "N",
        "t",
        "chi",
        "M",
        "Y_tn",
        "Y_exact",
        "Y_exact_err",
        "z",
        "max_bond",
        "discarded_weight",
        "pass",
    ]);
    let mut failed = false;
    for &n in sizes(cfg) {
        let series = contract_annealed_series(&net, n, range.end, tn_params(cfg, chi))?;
        let spec = CircuitSpec {
            d,
            n,
            depth: range.end,
            seed: RngSeed(cfg.seed),
            ensemble: m,
        };
        let stats = ensemble_averages(&spec, &a)?;
        for p in series.iter().filter(|p| range.contains(p.t)) {
            let e = stats.at(p.t).expect("trajectory covers every depth");
            let z = (p.y - e.annealed) / e.annealed_err;
            let pass = if e.annealed_err > 0.0 {
                z.abs() < 3.0
            } else {
                (p.y - e.annealed).abs() < 1e-10
            };
            failed |= !pass;
            table.push(vec![
                d.get().into(),
                n.into(),
                p.t.into(),
                chi.into(),
                m.into(),
                p.y.into(),
                e.annealed.into(),
                e.annealed_err.into(),
                z.into(),
                p.max_bond.into(),
                p.discarded_weight.into(),
                pass.into(),
            ]);
        }
    }
    Ok(RunOutput {
        table,
        gate_failed: failed,
    })
}
