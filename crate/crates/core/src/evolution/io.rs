//! CSV and JSON serialisation of coupling matrices and power vectors.
//!
//! Dense matrix CSV: header `mode,<label>,<label>...`, one row per mode with
//! the row label first. Power vector CSV: `mode,order,power`. Grouped CSV:
//! `order,power`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{CouplingMatrix, PowerVector, QuadratureSettings};
use crate::error::{Error, Result};
use crate::modes::{Basis, BeamGeometry, ModeId};
use crate::turbulence::TurbulenceModel;

pub const MATRIX_FORMAT: &str = "turbmodes/coupling-matrix";
pub const FORMAT_VERSION: u32 = 1;

fn basis_from_labels(labels: &[String]) -> Result<Basis> {
    let modes = labels.iter().map(|l| l.parse::<ModeId>()).collect::<Result<Vec<_>>>()?;
    Basis::from_modes(modes)
}

pub fn write_matrix_csv<W: Write>(out: W, basis: &Basis, matrix: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["mode".to_string()];
    header.extend(basis.labels());
    w.write_record(&header)?;
    for (i, label) in basis.labels().into_iter().enumerate() {
        let mut row = vec![label];
        row.extend(matrix.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(input: R) -> Result<(Basis, DMatrix<f64>)> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.get(0) != Some("mode") {
        return Err(Error::Format("matrix CSV must start with a 'mode' column".into()));
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let basis = basis_from_labels(&labels)?;
    let n = basis.len();
    let mut m = DMatrix::zeros(n, n);
    let mut rows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if i >= n || rec.len() != n + 1 || rec.get(0) != Some(labels[i].as_str()) {
            return Err(Error::Format(format!("matrix CSV row {} does not match the header", i + 1)));
        }
        for j in 0..n {
            m[(i, j)] = rec[j + 1]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad number '{}' in row {}", &rec[j + 1], i + 1)))?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::LengthMismatch { expected: n, actual: rows });
    }
    Ok((basis, m))
}

pub fn write_power_csv<W: Write>(out: W, v: &PowerVector) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mode", "order", "power"])?;
    for (mode, p) in v.basis().modes().iter().zip(v.values()) {
        w.write_record([mode.to_string(), mode.order().to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_power_csv<R: Read>(input: R) -> Result<PowerVector> {
    let mut r = csv::Reader::from_reader(input);
    let mut modes = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mode: ModeId = rec.get(0).unwrap_or("").parse()?;
        let p = rec
            .get(2)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Format(format!("missing power for {mode}")))?;
        modes.push(mode);
        values.push(p);
    }
    PowerVector::new(Basis::from_modes(modes)?, values)
}

pub fn write_grouped_csv<W: Write>(out: W, groups: &[(u32, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["order", "power"])?;
    for (n, p) in groups {
        w.write_record([n.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Self-describing JSON form of a [`CouplingMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub format: String,
    pub version: u32,
    pub modes: Vec<String>,
    pub turbulence: TurbulenceModel,
    pub geometry: BeamGeometry,
    pub quadrature: QuadratureSettings,
    pub lambda_per_m: Vec<Vec<f64>>,
    pub integrals: Vec<Vec<f64>>,
    pub integral_errors: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Format(format!("expected a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl MatrixDocument {
    pub fn from_matrix(m: &CouplingMatrix) -> Self {
        MatrixDocument {
            format: MATRIX_FORMAT.into(),
            version: FORMAT_VERSION,
            modes: m.basis().labels(),
            turbulence: m.turbulence().clone(),
            geometry: *m.geometry(),
            quadrature: *m.settings(),
            lambda_per_m: rows(m.lambda()),
            integrals: rows(m.integrals()),
            integral_errors: rows(m.integral_errors()),
        }
    }

    /// Rebuilds the matrix; rates are recomputed from the stored integrals and
    /// must agree with the stored rates.
    pub fn into_matrix(self) -> Result<CouplingMatrix> {
        if self.format != MATRIX_FORMAT || self.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported document {} v{}", self.format, self.version)));
        }
        let basis = basis_from_labels(&self.modes)?;
        let n = basis.len();
        let integrals = from_rows(&self.integrals, n)?;
        let errors = from_rows(&self.integral_errors, n)?;
        let stored = from_rows(&self.lambda_per_m, n)?;
        let m = CouplingMatrix::from_integrals(basis, integrals, errors, self.turbulence, self.geometry, self.quadrature)?;
        for (a, b) in stored.iter().zip(m.lambda().iter()) {
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
                return Err(Error::Format("stored rates disagree with stored integrals".into()));
            }
        }
        Ok(m)
    }
}

pub fn write_matrix_json<W: Write>(out: W, m: &CouplingMatrix) -> Result<()> {
    serde_json::to_writer_pretty(out, &MatrixDocument::from_matrix(m))?;
    Ok(())
}

pub fn read_matrix_json<R: Read>(input: R) -> Result<CouplingMatrix> {
    let doc: MatrixDocument = serde_json::from_reader(input)?;
    doc.into_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::lambda_matrix;
    use crate::modes::Family;

    fn sample() -> CouplingMatrix {
        let basis = Basis::enumerate(Family::Hg, 1);
        let turb = TurbulenceModel::von_karman(1e-15, 1e-3, 1.0).unwrap();
        let geom = BeamGeometry::new(850e-9, 0.04, 0.0).unwrap();
        lambda_matrix(&basis, &turb, &geom, &QuadratureSettings::default()).unwrap()
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = sample();
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, m.basis(), m.lambda()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("mode,\"HG(0,0)\",\"HG(0,1)\",\"HG(1,0)\""));
        let (basis, back) = read_matrix_csv(&buf[..]).unwrap();
        assert_eq!(&basis, m.basis());
        assert_eq!(&back, m.lambda());
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = sample();
        let mut buf = Vec::new();
        write_matrix_json(&mut buf, &m).unwrap();
        let back = read_matrix_json(&buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn power_csv_round_trip() {
        let basis = Basis::enumerate(Family::Lg, 2);
        let v = PowerVector::new(basis, vec![0.5, 0.1, 0.1, 0.05, 0.05, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_power_csv(&mut buf, &v).unwrap();
        assert_eq!(read_power_csv(&buf[..]).unwrap(), v);
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_matrix_csv("x,a\n".as_bytes()).is_err());
        assert!(read_matrix_csv("mode,\"HG(0,0)\"\n\"HG(0,0)\",abc\n".as_bytes()).is_err());
        assert!(read_power_csv("mode,order,power\n\"HG(0,0)\",0\n".as_bytes()).is_err());
    }
}
