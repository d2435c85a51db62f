//! Serialization of ledgers, segmentations, snapshots and summaries.
//!
//! All writes are whole-file atomic (write-temp-then-rename) and floats in
//! CSV carry 17 significant digits so files round-trip exactly.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use mvlab_core::{DensityField, EnergyLedger, EnergySample, RegimeSegmentation};

/// `{:.16e}` prints 17 significant digits, enough to reproduce any f64.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn atomic_write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let tmp: PathBuf = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_ledger_csv(path: &Path, ledger: &EnergyLedger) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "F", "F_ent", "F_int", "dissipation", "peak", "m2"])?;
    for s in ledger.samples() {
        w.write_record([
            fmt(s.t),
            fmt(s.total),
            fmt(s.entropic),
            fmt(s.interaction),
            fmt(s.dissipation),
            fmt(s.peak),
            fmt(s.second_moment),
        ])?;
    }
    atomic_write(path, &w.into_inner()?)
}

pub fn read_ledger_csv(path: &Path) -> anyhow::Result<EnergyLedger> {
    let mut r = csv::Reader::from_path(path)?;
    let mut samples = Vec::new();
    for record in r.records() {
        let record = record?;
        let field = |i: usize| -> anyhow::Result<f64> {
            record
                .get(i)
                .context("short record")?
                .parse::<f64>()
                .context("bad float")
        };
        samples.push(EnergySample {
            t: field(0)?,
            total: field(1)?,
            entropic: field(2)?,
            interaction: field(3)?,
            dissipation: field(4)?,
            peak: field(5)?,
            second_moment: field(6)?,
        });
    }
    Ok(EnergyLedger::from_samples(samples)?)
}

pub fn write_segmentation_json(
    path: &Path,
    segmentation: &RegimeSegmentation,
) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(segmentation)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn read_segmentation_json(path: &Path) -> anyhow::Result<RegimeSegmentation> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_snapshots_csv(path: &Path, snapshots: &[(f64, DensityField)]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "x", "rho"])?;
    for (t, field) in snapshots {
        for (x, rho) in field.grid().centers().iter().zip(field.values()) {
            w.write_record([fmt(*t), fmt(*x), fmt(*rho)])?;
        }
    }
    atomic_write(path, &w.into_inner()?)
}

pub fn write_summary_json<T: Serialize>(path: &Path, summary: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn write_particle_series_csv(
    path: &Path,
    samples: &[mvlab_core::ParticleSample],
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "peak", "m2"])?;
    for s in samples {
        w.write_record([fmt(s.t), fmt(s.peak), fmt(s.second_moment)])?;
    }
    atomic_write(path, &w.into_inner()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mvlab_core::{RegimeLabel, Segment};

    #[test]
    fn ledger_round_trips_exactly() {
        let samples = vec![
            EnergySample {
                t: 0.0,
                total: -0.123_456_789_012_345_68,
                entropic: -0.2,
                interaction: 0.076_543_210_987_654_32,
                dissipation: 1.5e-7,
                peak: 0.797884560802865,
                second_moment: 0.25,
            },
            EnergySample {
                t: 1.0 / 3.0,
                total: -0.5,
                entropic: -0.25,
                interaction: -0.25,
                dissipation: 0.0,
                peak: f64::MIN_POSITIVE,
                second_moment: 2.0833333333333335,
            },
        ];
        let ledger = EnergyLedger::from_samples(samples.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.csv");
        write_ledger_csv(&path, &ledger).unwrap();
        let back = read_ledger_csv(&path).unwrap();
        assert_eq!(back.samples(), &samples[..]);
    }

    #[test]
    fn segmentation_round_trips() {
        let seg = RegimeSegmentation {
            segments: vec![
                Segment {
                    t_start: 0.0,
                    t_end: 0.42,
                    label: RegimeLabel::Cooperative,
                },
                Segment {
                    t_start: 0.42,
                    t_end: 3.2,
                    label: RegimeLabel::Aggregation,
                },
            ],
            rate_deadband: 3.3e-7,
            min_duration: 0.1,
            anomalous_samples: 0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("segmentation.json");
        write_segmentation_json(&path, &seg).unwrap();
        let back = read_segmentation_json(&path).unwrap();
        assert_eq!(back.segments, seg.segments);
        assert_eq!(back.rate_deadband, seg.rate_deadband);
    }

    #[test]
    fn csv_uses_lf_line_endings() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.csv");
        write_ledger_csv(&path, &EnergyLedger::new()).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(!bytes.windows(2).any(|w| w == b"\r\n"));
        assert_eq!(bytes.last(), Some(&b'\n'));
    }
}
