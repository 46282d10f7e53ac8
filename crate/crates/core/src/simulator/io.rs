//! Ensemble and phase-screen files.
//!
//! Ensemble CSV: `mode,order,mean,stderr`. Grouped CSV:
//! `order,mean,stderr`. JSON: the full [`EnsembleResult`] including the
//! configuration. Screens: raw little-endian `f64`, row-major, plus a
//! one-line sidecar `<file>.txt` of `key=value` pairs.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{EnsembleResult, Grid, PhaseScreen};
use crate::error::{Error, Result};
use crate::modes::{Basis, ModeId};

pub fn write_ensemble_csv<W: Write>(out: W, r: &EnsembleResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mode", "order", "mean", "stderr"])?;
    for ((mode, m), s) in r.basis.modes().iter().zip(&r.mean).zip(&r.stderr) {
        w.write_record([mode.to_string(), mode.order().to_string(), m.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ensemble_groups_csv<W: Write>(out: W, r: &EnsembleResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["order", "mean", "stderr"])?;
    for g in &r.groups {
        w.write_record([g.order.to_string(), g.mean.to_string(), g.stderr.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-mode table read back from an ensemble CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleTable {
    pub basis: Basis,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

pub fn read_ensemble_csv<R: Read>(input: R) -> Result<EnsembleTable> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["mode", "order", "mean", "stderr"] {
        return Err(Error::Format("ensemble CSV header must be mode,order,mean,stderr".into()));
    }
    let (mut modes, mut mean, mut stderr) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("bad number in column {} of row {}", k + 1, i + 1)))
        };
        modes.push(rec.get(0).unwrap_or("").parse::<ModeId>()?);
        mean.push(num(2)?);
        stderr.push(num(3)?);
    }
    Ok(EnsembleTable { basis: Basis::from_modes(modes)?, mean, stderr })
}

pub fn write_ensemble_json<W: Write>(out: W, r: &EnsembleResult) -> Result<()> {
    serde_json::to_writer_pretty(out, r)?;
    Ok(())
}

pub fn read_ensemble_json<R: Read>(input: R) -> Result<EnsembleResult> {
    Ok(serde_json::from_reader(input)?)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".txt");
    PathBuf::from(name)
}

/// Writes `path` (raw samples) and `path.txt` (grid description).
pub fn write_screen(path: &Path, screen: &PhaseScreen) -> Result<()> {
    let bytes: Vec<u8> = screen.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes)?;
    fs::write(
        sidecar(path),
        format!(
            "points={} pitch={} layout=row-major dtype=f64le units=rad\n",
            screen.grid.points, screen.grid.pitch
        ),
    )?;
    Ok(())
}

pub fn read_screen(path: &Path) -> Result<PhaseScreen> {
    let text = fs::read_to_string(sidecar(path))?;
    let field = |key: &str| -> Result<&str> {
        text.split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| Error::Format(format!("screen sidecar lacks '{key}'")))
    };
    let points: usize = field("points")?.parse().map_err(|_| Error::Format("bad points".into()))?;
    let pitch: f64 = field("pitch")?.parse().map_err(|_| Error::Format("bad pitch".into()))?;
    let grid = Grid::new(points, pitch)?;
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::LengthMismatch { expected: 8 * grid.len(), actual: bytes.len() });
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(PhaseScreen { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{BeamGeometry, Family};
    use crate::simulator::{EnsembleConfig, GroupStat, ScreenSpec};
    use crate::turbulence::TurbulenceModel;

    fn result() -> EnsembleResult {
        let grid = Grid::new(16, 0.01).unwrap();
        let basis = Basis::enumerate(Family::Lg, 1);
        let config = EnsembleConfig {
            screen: ScreenSpec::new(TurbulenceModel::kolmogorov(1e-15).unwrap(), 10.0, 850e-9, grid, 3),
            geometry: BeamGeometry::at_waist(850e-9, 0.01).unwrap(),
            input: ModeId::lg(0, 0),
            basis: basis.clone(),
            screens_per_realization: 1,
            step: 0.0,
            realizations: 4,
        };
        EnsembleResult {
            basis,
            mean: vec![0.9, 0.04, 0.05],
            stderr: vec![0.01, 0.002, 0.003],
            groups: vec![
                GroupStat { order: 0, mean: 0.9, stderr: 0.01 },
                GroupStat { order: 1, mean: 0.09, stderr: 0.004 },
            ],
            realizations: 4,
            step_rytov: 0.01,
            warnings: vec!["note".into()],
            config,
        }
    }

    #[test]
    fn ensemble_csv_round_trip() {
        let r = result();
        let mut buf = Vec::new();
        write_ensemble_csv(&mut buf, &r).unwrap();
        let t = read_ensemble_csv(&buf[..]).unwrap();
        assert_eq!(t.basis, r.basis);
        assert_eq!(t.mean, r.mean);
        assert_eq!(t.stderr, r.stderr);
        let mut g = Vec::new();
        write_ensemble_groups_csv(&mut g, &r).unwrap();
        assert_eq!(String::from_utf8(g).unwrap().lines().nth(2), Some("1,0.09,0.004"));
    }

    #[test]
    fn ensemble_json_round_trip() {
        let r = result();
        let mut buf = Vec::new();
        write_ensemble_json(&mut buf, &r).unwrap();
        assert_eq!(read_ensemble_json(&buf[..]).unwrap(), r);
    }

    #[test]
    fn screen_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("screen.bin");
        let grid = Grid::new(4, 0.5).unwrap();
        let screen = PhaseScreen { grid, values: (0..16).map(|i| i as f64 * -0.3).collect() };
        write_screen(&path, &screen).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 128);
        assert_eq!(read_screen(&path).unwrap(), screen);
        let side = fs::read_to_string(dir.path().join("screen.bin.txt")).unwrap();
        assert_eq!(side.lines().count(), 1);
    }
}
