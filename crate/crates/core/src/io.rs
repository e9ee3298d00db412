//! File formats: binary tensor records, CSV run reports, and JSON grids.
//!
//! A tensor record is the magic `TEIM`, a little-endian `u32` version (1),
//! a `u8` order (2 or 3), `order` little-endian `u64` dimensions, and then
//! the entries as little-endian `f64`, first index fastest. A file may hold
//! several records back to back; basis files are one (POD) or two (`U1`,
//! `U2`) order-2 records.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TeimError};
use crate::interp::{InterpGrid, TeimTrace};
use crate::linalg::{Matrix, SelectionOperator};
use crate::tensor::{FactorBasis, PodBasis, Tensor3};

pub const MAGIC: &[u8; 4] = b"TEIM";
pub const VERSION: u32 = 1;

/// One record of a tensor file.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Matrix(Matrix),
    Tensor(Tensor3),
}

fn write_header(w: &mut impl Write, dims: &[usize]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[dims.len() as u8])?;
    for &d in dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    Ok(())
}

fn write_payload(w: &mut impl Write, data: &[f64]) -> Result<()> {
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_matrix(w: &mut impl Write, m: &Matrix) -> Result<()> {
    write_header(w, &[m.nrows(), m.ncols()])?;
    write_payload(w, m.as_slice())
}

pub fn write_tensor(w: &mut impl Write, t: &Tensor3) -> Result<()> {
    let (n1, n2, n3) = t.dims();
    write_header(w, &[n1, n2, n3])?;
    write_payload(w, t.as_slice())
}

/// Reads the next record, or `None` at a clean end of input.
pub fn read_record(r: &mut impl Read) -> Result<Option<Record>> {
    let mut magic = [0u8; 4];
    match r.read_exact(&mut magic[..1]) {
        Ok(()) => {}
        Err(e) if e.kind() == ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    read_exact(r, &mut magic[1..])?;
    if &magic != MAGIC {
        return Err(TeimError::Format(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    read_exact(r, &mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(TeimError::Format(format!("unsupported version {version}")));
    }
    let mut order = [0u8; 1];
    read_exact(r, &mut order)?;
    let order = order[0] as usize;
    if order != 2 && order != 3 {
        return Err(TeimError::Format(format!("unsupported order {order}")));
    }
    let mut dims = Vec::with_capacity(order);
    let mut b8 = [0u8; 8];
    for _ in 0..order {
        read_exact(r, &mut b8)?;
        let d = usize::try_from(u64::from_le_bytes(b8))
            .map_err(|_| TeimError::Format("dimension overflows usize".into()))?;
        dims.push(d);
    }
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| TeimError::Format(format!("dimensions {dims:?} overflow")))?;
    let mut data = Vec::with_capacity(len.min(1 << 24));
    for _ in 0..len {
        read_exact(r, &mut b8)?;
        data.push(f64::from_le_bytes(b8));
    }
    Ok(Some(if order == 2 {
        Record::Matrix(Matrix::from_vec(dims[0], dims[1], data))
    } else {
        Record::Tensor(Tensor3::new((dims[0], dims[1], dims[2]), data)?)
    }))
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == ErrorKind::UnexpectedEof {
            TeimError::Format("truncated record".into())
        } else {
            e.into()
        }
    })
}

/// All records of a file.
pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    while let Some(rec) = read_record(&mut r)? {
        out.push(rec);
    }
    Ok(out)
}

pub fn save_tensor(path: &Path, t: &Tensor3) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, t)?;
    w.flush()?;
    Ok(())
}

/// Reads a file holding exactly one order-3 record.
pub fn load_tensor(path: &Path) -> Result<Tensor3> {
    match read_records(path)?.as_slice() {
        [Record::Tensor(t)] => Ok(t.clone()),
        other => Err(TeimError::Format(format!(
            "expected a single order-3 record, found {} record(s)",
            other.len()
        ))),
    }
}

/// A basis file's content.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisFile {
    Tensor(FactorBasis),
    Pod(PodBasis),
}

pub fn save_factor_basis(path: &Path, basis: &FactorBasis) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, &basis.u1)?;
    write_matrix(&mut w, &basis.u2)?;
    w.flush()?;
    Ok(())
}

pub fn save_pod_basis(path: &Path, pod: &PodBasis) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, &pod.v)?;
    w.flush()?;
    Ok(())
}

pub fn load_basis(path: &Path) -> Result<BasisFile> {
    let recs = read_records(path)?;
    match recs.as_slice() {
        [Record::Matrix(v)] => Ok(BasisFile::Pod(PodBasis::from_columns(v.clone())?)),
        [Record::Matrix(u1), Record::Matrix(u2)] => {
            Ok(BasisFile::Tensor(FactorBasis::from_factors(u1.clone(), u2.clone())?))
        }
        _ => Err(TeimError::Format(format!(
            "a basis file holds one or two order-2 records, found {} record(s)",
            recs.len()
        ))),
    }
}

/// Method column of a run report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Teim,
    Deim,
    ProjTensor,
    ProjPod,
}

/// One CSV row. Columns that do not apply to a method are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub method: Method,
    pub m1: Option<usize>,
    pub m2: Option<usize>,
    pub m: Option<usize>,
    pub k1: Option<usize>,
    pub k2: Option<usize>,
    pub k: Option<usize>,
    pub xi: f64,
    pub wall_ns_per_eval: Option<f64>,
}

pub const REPORT_HEADER: &str = "experiment,method,m1,m2,m,k1,k2,k,xi,wall_ns_per_eval";

/// Writes the header and rows. The header is written even with no rows.
pub fn write_report(w: impl Write, rows: &[ReportRow]) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    csv.write_record(REPORT_HEADER.split(','))?;
    for row in rows {
        if !(row.xi >= 0.0) {
            return Err(TeimError::InvalidArgument(format!("xi must be >= 0, got {}", row.xi)));
        }
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_report(r: impl Read) -> Result<Vec<ReportRow>> {
    let mut csv = csv::Reader::from_reader(r);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != REPORT_HEADER {
        return Err(TeimError::Format(format!("unexpected report header {header:?}")));
    }
    csv.deserialize().map(|r| r.map_err(TeimError::from)).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct GridJson {
    rows: Vec<usize>,
    cols: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pairs: Option<Vec<[usize; 2]>>,
}

/// `{"rows": [...], "cols": [...]}`, plus `"pairs"` when a trace is given.
pub fn grid_to_json(grid: &InterpGrid, trace: Option<&TeimTrace>) -> Result<String> {
    let doc = GridJson {
        rows: grid.rows().indices().to_vec(),
        cols: grid.cols().indices().to_vec(),
        pairs: trace.map(|t| t.flat_pairs().pairs().map(|(i, j)| [i, j]).collect()),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Parses a grid over an `n1 x n2` domain.
pub fn grid_from_json(text: &str, n1: usize, n2: usize) -> Result<InterpGrid> {
    let doc: GridJson = serde_json::from_str(text)?;
    InterpGrid::new(
        SelectionOperator::new(n1, doc.rows)?,
        SelectionOperator::new(n2, doc.cols)?,
    )
}

/// Reads a JSON experiment definition.
pub fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// `{"indices": [...]}` for a vectorized DEIM selection.
pub fn indices_to_json(sel: &SelectionOperator) -> Result<String> {
    Ok(serde_json::to_string_pretty(
        &serde_json::json!({ "indices": sel.indices() }),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{grid_of, teim};
    use crate::testing::{random_matrix, random_orthonormal, rng};

    #[test]
    fn tensor_round_trip_is_bitwise() {
        let mut r = rng(1);
        let data: Vec<f64> = random_matrix(&mut r, 60, 1)
            .iter()
            .copied()
            .chain([f64::MIN_POSITIVE, -0.0])
            .collect();
        let t = Tensor3::new((2, 31, 1), data).unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 1 + 3 * 8 + 62 * 8);
        assert_eq!(&buf[..4], b"TEIM");
        assert_eq!(&buf[4..8], &[1, 0, 0, 0]);
        assert_eq!(buf[8], 3);
        let back = read_record(&mut buf.as_slice()).unwrap().unwrap();
        let Record::Tensor(back) = back else {
            panic!("expected tensor")
        };
        let bits = |t: &Tensor3| t.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&t));
    }

    #[test]
    fn payload_layout_is_first_index_fastest() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        let payload: Vec<f64> = buf[4 + 4 + 1 + 16..]
            .chunks(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(payload, vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn malformed_records_are_rejected() {
        assert!(read_record(&mut &b""[..]).unwrap().is_none());
        assert!(matches!(read_record(&mut &b"TEIX"[..]), Err(TeimError::Format(_))));
        let mut buf = Vec::new();
        write_matrix(&mut buf, &Matrix::zeros(2, 2)).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_record(&mut buf.as_slice()), Err(TeimError::Format(_))));
        let mut buf = Vec::new();
        write_header(&mut buf, &[2]).unwrap();
        assert!(matches!(read_record(&mut buf.as_slice()), Err(TeimError::Format(_))));
    }

    #[test]
    fn basis_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = rng(2);
        let basis =
            FactorBasis::from_factors(random_orthonormal(&mut r, 6, 2), random_orthonormal(&mut r, 5, 3)).unwrap();
        let p = dir.path().join("b.teim");
        save_factor_basis(&p, &basis).unwrap();
        assert_eq!(load_basis(&p).unwrap(), BasisFile::Tensor(basis.clone()));
        let pod = PodBasis::from_columns(random_orthonormal(&mut r, 9, 4)).unwrap();
        save_pod_basis(&p, &pod).unwrap();
        assert_eq!(load_basis(&p).unwrap(), BasisFile::Pod(pod));
        let t = Tensor3::new((1, 2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        save_tensor(&p, &t).unwrap();
        assert_eq!(load_tensor(&p).unwrap(), t);
        assert!(load_basis(&p).is_err());
    }

    #[test]
    fn report_round_trip() {
        let rows = vec![
            ReportRow {
                experiment: "ex1".into(),
                method: Method::Teim,
                m1: Some(5),
                m2: Some(5),
                m: None,
                k1: None,
                k2: None,
                k: None,
                xi: 1.5e-6,
                wall_ns_per_eval: Some(812.5),
            },
            ReportRow {
                experiment: "ex1".into(),
                method: Method::ProjPod,
                m1: None,
                m2: None,
                m: Some(25),
                k1: None,
                k2: None,
                k: None,
                xi: 8.0e-5,
                wall_ns_per_eval: None,
            },
        ];
        let mut buf = Vec::new();
        write_report(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("experiment,method,m1,m2,m,k1,k2,k,xi,wall_ns_per_eval\n"));
        assert!(text.contains("ex1,proj_pod,,,25,,,,"));
        assert_eq!(read_report(buf.as_slice()).unwrap(), rows);

        let mut bad = rows[0].clone();
        bad.xi = -1.0;
        assert!(write_report(Vec::new(), &[bad]).is_err());
    }

    #[test]
    fn grid_json() {
        let mut r = rng(3);
        let u1 = random_orthonormal(&mut r, 8, 2);
        let u2 = random_orthonormal(&mut r, 7, 2);
        let trace = teim(&u1, &u2).unwrap();
        let grid = grid_of(&trace).unwrap();
        let text = grid_to_json(&grid, Some(&trace)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["pairs"].as_array().unwrap().len(), 4);
        assert_eq!(grid_from_json(&text, 8, 7).unwrap(), grid);
        let plain = grid_to_json(&grid, None).unwrap();
        assert!(!plain.contains("pairs"));
    }
}
