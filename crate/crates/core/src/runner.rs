//! Run orchestration and file outputs.
//!
//! A run directory holds
//!
//! * `snapshot_NNNNN.csv`: fields at the recorded times (`x,u0,..,u7`);
//! * `charges.csv`: mass, energy and Hamiltonians after every step;
//! * `gardner_charges.csv`: `Q_0..` at the snapshot times;
//! * `imaginary_charges.csv`: imaginary parts of the series densities
//!   (diagnostic);
//! * `meta.json`: schema id, library version, the full config, wall time.
//!
//! Everything except the wall time in `meta.json` is a deterministic
//! function of the config.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::flows::{evolve, FlowKind, Trajectory};
use crate::symmetry::{symmetry_report, SymmetryResult};
use crate::transforms::{conserved_charges, gardner_series, imaginary_charge_candidates};

pub const META_SCHEMA: &str = "octokdv.run-meta/1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub directory: PathBuf,
    pub steps: usize,
    pub dt: f64,
    pub snapshots: usize,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub wall_time_s: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_outputs(cfg: &RunConfig, traj: &Trajectory, out: &Path) -> Result<()> {
    for (i, s) in traj.snapshots.iter().enumerate() {
        let mut w = create(&out.join(format!("snapshot_{i:05}.csv")))?;
        s.field.write_csv(&mut w)?;
        w.flush()?;
    }
    let mut w = create(&out.join("charges.csv"))?;
    traj.write_charges_csv(&mut w)?;
    w.flush()?;

    let k = cfg.outputs.charge_count;
    let mut g = create(&out.join("gardner_charges.csv"))?;
    let header: Vec<String> = (0..k).map(|n| format!("Q_{n}")).collect();
    writeln!(g, "t,{}", header.join(","))?;
    let mut im = create(&out.join("imaginary_charges.csv"))?;
    writeln!(im, "t,order,im_1,im_2,im_3,im_4,im_5,im_6,im_7")?;
    for s in &traj.snapshots {
        let q = conserved_charges(&s.field, k)?;
        let row: Vec<String> = q.iter().map(|v| v.to_string()).collect();
        writeln!(g, "{},{}", s.t, row.join(","))?;
        for c in imaginary_charge_candidates(&s.field, k)? {
            let row: Vec<String> = c.components.iter().map(|v| v.to_string()).collect();
            writeln!(im, "{},{},{}", s.t, c.order, row.join(","))?;
        }
    }
    g.flush()?;
    im.flush()?;
    Ok(())
}

/// Execute one run into `out` (created if missing).
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    let start = Instant::now();
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let spec = cfg.flow_spec()?;
    let u0 = cfg.initial_condition.build(&spec.grid)?;
    let traj = evolve(&spec, &u0)?;
    write_outputs(cfg, &traj, out)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let meta = json!({
        "schema": META_SCHEMA,
        "library_version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "steps": traj.steps,
        "dt_used": traj.dt,
        "snapshots": traj.snapshots.len(),
        "wall_time_s": wall_time_s,
    });
    fs::write(out.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(RunSummary {
        directory: out.to_path_buf(),
        steps: traj.steps,
        dt: traj.dt,
        snapshots: traj.snapshots.len(),
        mass_drift: traj.drift(|c| c.mass[0]),
        energy_drift: traj.drift(|c| c.energy),
        wall_time_s,
    })
}

/// Machine-readable error record.
pub fn error_json(err: &Error) -> serde_json::Value {
    json!({ "error": err.kind(), "message": err.to_string() })
}

/// Directory name of one sweep member.
pub fn sweep_dir_name(index: usize, epsilon: f64) -> String {
    format!("eps_{index:02}_{epsilon}")
}

/// Run the Gardner flow once per `sweep.epsilons`, each into its own
/// subdirectory of `out`, in parallel.
pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<Result<RunSummary>>> {
    let eps = match &cfg.sweep {
        Some(s) => s.epsilons.clone(),
        None => return Err(Error::Config("sweep: missing `sweep.epsilons`".into())),
    };
    if cfg.flow.kind != FlowKind::Gardner {
        return Err(Error::Config("sweep: flow.kind must be gardner".into()));
    }
    fs::create_dir_all(out)?;
    let jobs: Vec<(RunConfig, PathBuf)> = eps
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let mut c = cfg.clone();
            c.flow.epsilon = e;
            c.sweep = None;
            (c, out.join(sweep_dir_name(i, e)))
        })
        .collect();
    Ok(std::thread::scope(|scope| {
        let handles: Vec<_> = jobs.iter().map(|(c, dir)| scope.spawn(move || run(c, dir))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    }))
}

/// Write `r_0..r_N` of the Gardner series of the initial field.
pub fn write_series(cfg: &RunConfig, out: &Path) -> Result<usize> {
    fs::create_dir_all(out)?;
    let grid = cfg.grid()?;
    let u0 = cfg.initial_condition.build(&grid)?;
    let series = gardner_series(&u0, cfg.outputs.series_terms)?;
    for (n, t) in series.terms().iter().enumerate() {
        let mut w = create(&out.join(format!("series_r{n:02}.csv")))?;
        t.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(series.terms().len())
}

/// Equivariance residuals for every symmetry listed in the config.
pub fn symmetry_runs(cfg: &RunConfig) -> Result<Vec<SymmetryResult>> {
    if cfg.symmetries.is_empty() {
        return Err(Error::Config("symmetries: no symmetry specs listed".into()));
    }
    let spec = cfg.flow_spec()?;
    let u0 = cfg.initial_condition.build(&spec.grid)?;
    Ok(symmetry_report(&cfg.symmetries, &spec, &u0))
}
