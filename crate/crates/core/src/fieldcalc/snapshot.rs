//! Field snapshots: one JSON header line `{dim, grid, shape, role}` followed
//! by little-endian f64 values in row-major order (component index first).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::field::{sym_len, ScalarField, SymTensorField, VectorField};
use super::grid::{Grid, GridDescriptor};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub grid: GridDescriptor,
    pub shape: Vec<usize>,
    pub role: String,
}

/// Decoded snapshot: header plus flat data.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub data: Vec<f64>,
}

fn snap_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Snapshot { path: path.to_path_buf(), message: message.into() }
}

fn write_raw(path: &Path, header: &SnapshotHeader, chunks: &[&[f64]]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for c in chunks {
        for v in c.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn base_shape(grid: &Grid) -> Vec<usize> {
    match grid {
        Grid::Torus(t) => vec![t.m(); t.dim()],
        Grid::Ball(b) => vec![b.radial().len(), b.n_ang()],
    }
}

pub fn write_scalar(path: &Path, f: &ScalarField, role: &str) -> Result<()> {
    let h = SnapshotHeader { dim: f.dim(), grid: f.grid().descriptor(), shape: base_shape(f.grid()), role: role.into() };
    write_raw(path, &h, &[f.data()])
}

pub fn write_vector(path: &Path, w: &VectorField, role: &str) -> Result<()> {
    let mut shape = vec![w.dim()];
    shape.extend(base_shape(w.grid()));
    let h = SnapshotHeader { dim: w.dim(), grid: w.grid().descriptor(), shape, role: role.into() };
    let chunks: Vec<&[f64]> = w.comps().iter().map(|c| c.as_slice()).collect();
    write_raw(path, &h, &chunks)
}

pub fn write_sym(path: &Path, t: &SymTensorField, role: &str) -> Result<()> {
    let mut shape = vec![sym_len(t.dim())];
    shape.extend(base_shape(t.grid()));
    let h = SnapshotHeader { dim: t.dim(), grid: t.grid().descriptor(), shape, role: role.into() };
    let chunks: Vec<&[f64]> = t.comps().iter().map(|c| c.as_slice()).collect();
    write_raw(path, &h, &chunks)
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let file = File::open(path).map_err(|e| snap_err(path, format!("cannot open: {e}")))?;
    let mut r = BufReader::new(file);
    let mut line = String::new();
    r.read_line(&mut line).map_err(|e| snap_err(path, e.to_string()))?;
    let header: SnapshotHeader = serde_json::from_str(line.trim_end()).map_err(|e| snap_err(path, format!("bad header: {e}")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let expected: usize = header.shape.iter().product();
    if bytes.len() != expected * 8 {
        return Err(snap_err(path, format!("expected {} values, found {} bytes", expected, bytes.len())));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Snapshot { header, data })
}

impl Snapshot {
    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::from_descriptor(&self.header.grid)?))
    }

    /// Decode as a scalar field on `grid` (or on the header grid).
    pub fn into_scalar(self, grid: Option<Arc<Grid>>) -> Result<ScalarField> {
        let g = match grid {
            Some(g) => g,
            None => self.grid()?,
        };
        ScalarField::new(g, self.data)
    }

    pub fn into_vector(self, grid: Option<Arc<Grid>>) -> Result<VectorField> {
        let g = match grid {
            Some(g) => g,
            None => self.grid()?,
        };
        let n = g.dim();
        let len = g.len();
        if self.data.len() != n * len {
            return Err(Error::ShapeMismatch("vector snapshot size".into()));
        }
        VectorField::new(g, self.data.chunks(len).map(|c| c.to_vec()).collect())
    }

    pub fn into_sym(self, grid: Option<Arc<Grid>>, trace_free: bool) -> Result<SymTensorField> {
        let g = match grid {
            Some(g) => g,
            None => self.grid()?,
        };
        let len = g.len();
        if self.data.len() != sym_len(g.dim()) * len {
            return Err(Error::ShapeMismatch("tensor snapshot size".into()));
        }
        SymTensorField::new(g, self.data.chunks(len).map(|c| c.to_vec()).collect(), trace_free)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcalc::grid::TorusGrid;

    #[test]
    fn roundtrip_scalar_and_vector() {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(Grid::Torus(TorusGrid::unit(3, 8).unwrap()));
        let f = ScalarField::from_fn(g.clone(), |x| x[0] - 2.0 * x[2]);
        let p = dir.path().join("u.field");
        write_scalar(&p, &f, "u").unwrap();
        let s = read_snapshot(&p).unwrap();
        assert_eq!(s.header.role, "u");
        assert_eq!(s.header.shape, vec![8, 8, 8]);
        assert_eq!(s.into_scalar(None).unwrap().data(), f.data());
        let w = VectorField::from_fn(g, |x| vec![x[0], x[1], -x[2]]);
        let p = dir.path().join("w.field");
        write_vector(&p, &w, "W").unwrap();
        let back = read_snapshot(&p).unwrap().into_vector(None).unwrap();
        assert_eq!(back.comps(), w.comps());
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_snapshot(Path::new("/nonexistent/x.field")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.field"));
    }
}
