//! On-disk formats: trajectory/histogram/point/surface CSV and the run
//! summary JSON.
//!
//! Floats are written in Rust's shortest round-trip representation, so a
//! write → read cycle reproduces every value bitwise and identical runs
//! produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EigenvalueEstimate, Histogram};
use crate::fv::{EngineKind, EventCounts, TrajectoryRecord, WeightedTrajectory};
use crate::oracle::{Eigenpair, GeneratorMatrix};
use crate::swap::ImpliedPotentialSurface;

/// Format version stamped into every summary JSON.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

fn parse_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), reason: reason.into() }
}

/// Write a trajectory as CSV: one row per pair per record, columns
/// `event_index,t,holding_dt,pair_id,x_1..x_d,y_1..y_d,rho`.
pub fn write_trajectory_csv(traj: &WeightedTrajectory, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let d = traj.dim;
    let mut header: Vec<String> =
        vec!["event_index".into(), "t".into(), "holding_dt".into(), "pair_id".into()];
    for a in 1..=d {
        header.push(format!("x_{a}"));
    }
    for a in 1..=d {
        header.push(format!("y_{a}"));
    }
    header.push("rho".into());
    w.write_record(&header).map_err(|e| parse_error(path, e.to_string()))?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for rec in &traj.records {
        for i in 0..traj.n_pairs {
            row.clear();
            row.push(rec.event_index.to_string());
            row.push(rec.t.to_string());
            row.push(rec.holding_dt.to_string());
            row.push(i.to_string());
            for a in 0..d {
                row.push(rec.xs[i * d + a].to_string());
            }
            for a in 0..d {
                row.push(rec.ys[i * d + a].to_string());
            }
            row.push(rec.rho[i].to_string());
            w.write_record(&row).map_err(|e| parse_error(path, e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a trajectory CSV back. Engine parameters are not stored in the
/// file, so the result is tagged [`EngineKind::Imported`] with zeroed seed
/// and event counts; records round-trip bitwise.
pub fn read_trajectory_csv(path: &Path) -> Result<WeightedTrajectory> {
    let mut r = csv::Reader::from_path(path).map_err(|e| parse_error(path, e.to_string()))?;
    let header = r.headers().map_err(|e| parse_error(path, e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 7 || cols[..4] != ["event_index", "t", "holding_dt", "pair_id"] {
        return Err(parse_error(path, "unexpected trajectory header"));
    }
    let d = cols[4..].iter().take_while(|c| c.starts_with("x_")).count();
    if d == 0 || cols.len() != 5 + 2 * d || cols[cols.len() - 1] != "rho" {
        return Err(parse_error(path, "unexpected trajectory header layout"));
    }

    let field = |rec: &csv::StringRecord, k: usize, line: u64| -> Result<f64> {
        rec.get(k)
            .ok_or_else(|| parse_error(path, format!("row {line}: missing column {k}")))?
            .parse::<f64>()
            .map_err(|e| parse_error(path, format!("row {line}: {e}")))
    };

    let mut records: Vec<TrajectoryRecord> = Vec::new();
    let mut n_pairs = 0usize;
    let mut current: Option<TrajectoryRecord> = None;
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| parse_error(path, e.to_string()))?;
        let line = line as u64 + 2;
        let event_index = rec
            .get(0)
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| parse_error(path, format!("row {line}: bad event index")))?;
        let t = field(&rec, 1, line)?;
        let holding_dt = field(&rec, 2, line)?;
        let pair_id = rec
            .get(3)
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| parse_error(path, format!("row {line}: bad pair id")))?;
        if pair_id == 0 {
            if let Some(done) = current.take() {
                if n_pairs == 0 {
                    n_pairs = done.rho.len();
                } else if done.rho.len() != n_pairs {
                    return Err(parse_error(path, format!("row {line}: ragged record")));
                }
                records.push(done);
            }
            current = Some(TrajectoryRecord {
                event_index,
                t,
                holding_dt,
                xs: Vec::with_capacity(d),
                ys: Vec::with_capacity(d),
                rho: Vec::new(),
            });
        }
        let cur = current
            .as_mut()
            .ok_or_else(|| parse_error(path, format!("row {line}: pair ids must start at 0")))?;
        if pair_id != cur.rho.len() || event_index != cur.event_index {
            return Err(parse_error(path, format!("row {line}: out-of-order pair rows")));
        }
        for a in 0..d {
            cur.xs.push(field(&rec, 4 + a, line)?);
        }
        for a in 0..d {
            cur.ys.push(field(&rec, 4 + d + a, line)?);
        }
        cur.rho.push(field(&rec, 4 + 2 * d, line)?);
    }
    if let Some(done) = current.take() {
        if n_pairs == 0 {
            n_pairs = done.rho.len();
        } else if done.rho.len() != n_pairs {
            return Err(parse_error(path, "final record is ragged"));
        }
        records.push(done);
    }
    if records.is_empty() {
        return Err(parse_error(path, "no trajectory rows"));
    }
    let t_end = records.last().expect("nonempty").t;
    Ok(WeightedTrajectory {
        engine: EngineKind::Imported,
        n_pairs,
        dim: d,
        t_end,
        records,
        events: EventCounts::default(),
        seed: 0,
    })
}

/// Write a histogram as CSV: `bin,center_1..center_d,density`.
pub fn write_histogram_csv(hist: &Histogram, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<String> = vec!["bin".into()];
    for a in 1..=hist.dim() {
        header.push(format!("center_{a}"));
    }
    header.push("density".into());
    w.write_record(&header).map_err(|e| parse_error(path, e.to_string()))?;
    for (idx, &rho) in hist.density().iter().enumerate() {
        let mut row = vec![idx.to_string()];
        for c in hist.bin_center(idx) {
            row.push(c.to_string());
        }
        row.push(rho.to_string());
        w.write_record(&row).map_err(|e| parse_error(path, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Write a flat `m × dim` point buffer as CSV: `point,x_1..x_d`.
pub fn write_points_csv(points: &[f64], dim: usize, path: &Path) -> Result<()> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::InvalidInput(format!(
            "point buffer length {} is not a multiple of the dimension {dim}",
            points.len()
        )));
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<String> = vec!["point".into()];
    for a in 1..=dim {
        header.push(format!("x_{a}"));
    }
    w.write_record(&header).map_err(|e| parse_error(path, e.to_string()))?;
    for (i, p) in points.chunks(dim).enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(p.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(|e| parse_error(path, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a point CSV produced by [`write_points_csv`] (or any CSV whose
/// trailing columns after an index column are coordinates). Returns the
/// flat buffer and the dimension.
pub fn read_points_csv(path: &Path) -> Result<(Vec<f64>, usize)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| parse_error(path, e.to_string()))?;
    let header = r.headers().map_err(|e| parse_error(path, e.to_string()))?.clone();
    let dim = header.iter().filter(|c| c.starts_with("x_")).count();
    if dim == 0 {
        return Err(parse_error(path, "no coordinate columns (x_1, x_2, …)"));
    }
    let first = header.iter().position(|c| c == "x_1").expect("counted above");
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| parse_error(path, e.to_string()))?;
        for a in 0..dim {
            let v = rec
                .get(first + a)
                .ok_or_else(|| parse_error(path, format!("row {}: short row", line + 2)))?
                .parse::<f64>()
                .map_err(|e| parse_error(path, format!("row {}: {e}", line + 2)))?;
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(parse_error(path, "no point rows"));
    }
    Ok((out, dim))
}

/// Write an implied-potential surface as CSV: `x,y,w`.
pub fn write_surface_csv(surface: &ImpliedPotentialSurface, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["x", "y", "w"]).map_err(|e| parse_error(path, e.to_string()))?;
    for (i, &x) in surface.xs.iter().enumerate() {
        for (j, &y) in surface.ys.iter().enumerate() {
            w.write_record([x.to_string(), y.to_string(), surface.value(i, j).to_string()])
                .map_err(|e| parse_error(path, e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write a grid eigenpair's vector as CSV: `node,coord_1..coord_d,value`.
/// The eigenvalue itself travels in the run summary.
pub fn write_eigenpair_csv(gen: &GeneratorMatrix, pair: &Eigenpair, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<String> = vec!["node".into()];
    for a in 1..=gen.dim() {
        header.push(format!("coord_{a}"));
    }
    header.push("value".into());
    w.write_record(&header).map_err(|e| parse_error(path, e.to_string()))?;
    for (idx, &v) in pair.vector.iter().enumerate() {
        let mut row = vec![idx.to_string()];
        for c in gen.node_coord(idx) {
            row.push(c.to_string());
        }
        row.push(v.to_string());
        w.write_record(&row).map_err(|e| parse_error(path, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Run metadata and headline results, serialized as pretty JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub engine: String,
    pub seed: u64,
    pub replica: u64,
    pub n_pairs: usize,
    pub dim: usize,
    pub t_end: f64,
    pub records: usize,
    pub events: EventCounts,
    pub wall_time_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_forward: Option<EigenvalueEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_backward: Option<EigenvalueEstimate>,
    /// Echo of the configuration the run was launched with.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl RunSummary {
    /// Summary skeleton for a finished trajectory; estimates, config echo,
    /// and timing can be filled in afterwards.
    pub fn for_trajectory(traj: &WeightedTrajectory, replica: u64) -> Self {
        Self {
            schema_version: SUMMARY_SCHEMA_VERSION,
            engine: traj.engine.as_str().to_string(),
            seed: traj.seed,
            replica,
            n_pairs: traj.n_pairs,
            dim: traj.dim,
            t_end: traj.t_end,
            records: traj.records.len(),
            events: traj.events,
            wall_time_seconds: 0.0,
            lambda_forward: None,
            lambda_backward: None,
            config: None,
        }
    }
}

pub fn write_summary_json(summary: &RunSummary, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, summary)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn read_summary_json(path: &Path) -> Result<RunSummary> {
    let f = File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}
