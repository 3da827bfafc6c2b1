//! Plot-ready CSV files and JSON sidecars.
//!
//! CSV floats use Rust's shortest round-trip formatting with a `.` decimal
//! separator. Optional values are written as empty fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::Result;
use crate::experiments::{LockinRecord, SelectionEstimate, SweepOutcome, SweepRecord, TrackingRecord, WidthRecord};

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Path of the JSON sidecar that accompanies `csv_path`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(mut w: W, t: &Trajectory) -> Result<()> {
    writeln!(w, "n,theta")?;
    for (n, theta) in t.steps.iter().zip(&t.thetas) {
        writeln!(w, "{n},{theta}")?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut w: W, records: &[SweepRecord]) -> Result<()> {
    writeln!(w, "rho,theta0,regime,theta_minus,theta_plus,limit_or_pplus,ci_low,ci_high")?;
    for rec in records {
        let (value, lo, hi) = match rec.outcome {
            SweepOutcome::Limit { limit, .. } => (limit.name().to_string(), String::new(), String::new()),
            SweepOutcome::Selection(e) => (e.p_plus_hat.to_string(), e.ci_low.to_string(), e.ci_high.to_string()),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            rec.rho,
            rec.theta0,
            rec.regime.name(),
            opt(rec.theta_minus),
            opt(rec.theta_plus),
            value,
            lo,
            hi
        )?;
    }
    Ok(())
}

pub fn write_selection_csv<W: Write>(mut w: W, theta0: f64, rows: &[(usize, SelectionEstimate)]) -> Result<()> {
    writeln!(w, "b,theta0,p_plus_hat,ci_low,ci_high,collusive,competitive,undetermined,replications")?;
    for (b, e) in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            b, theta0, e.p_plus_hat, e.ci_low, e.ci_high, e.collusive, e.competitive, e.undetermined_count, e.replications
        )?;
    }
    Ok(())
}

pub fn write_lockin_csv<W: Write>(mut w: W, rows: &[LockinRecord]) -> Result<()> {
    writeln!(
        w,
        "b,theta_above,misselection_above,ci_low_above,ci_high_above,theta_below,p_plus_below,ci_low_below,ci_high_below"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.b,
            r.theta_above,
            r.misselection_above,
            r.ci_low_above,
            r.ci_high_above,
            r.theta_below,
            r.p_plus_below,
            r.ci_low_below,
            r.ci_high_below
        )?;
    }
    Ok(())
}

pub fn write_width_csv<W: Write>(mut w: W, rows: &[WidthRecord]) -> Result<()> {
    writeln!(w, "b,width,lower,upper,below_resolution")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.b, r.width, r.lower, r.upper, r.below_resolution)?;
    }
    Ok(())
}

/// Per-start selection estimates behind each width record.
pub fn write_width_curve_csv<W: Write>(mut w: W, rows: &[WidthRecord]) -> Result<()> {
    writeln!(w, "b,theta0,p_plus_hat,ci_low,ci_high,undetermined")?;
    for r in rows {
        for (th, e) in &r.curve {
            writeln!(w, "{},{},{},{},{},{}", r.b, th, e.p_plus_hat, e.ci_low, e.ci_high, e.undetermined_count)?;
        }
    }
    Ok(())
}

pub fn write_tracking_csv<W: Write>(mut w: W, rows: &[TrackingRecord]) -> Result<()> {
    writeln!(w, "b,steps,median,q25,q75,iqr,tail_fraction")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{},{}", r.b, r.steps, r.median, r.q25, r.q75, r.iqr, r.tail_fraction)?;
    }
    Ok(())
}
