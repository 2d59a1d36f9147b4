//! Coefficient bundles on disk: one field snapshot per coefficient plus
//! `manifest.json` listing every role.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::coefficients::{GeneralCoefficients, PhysicalCoefficients, Potential};
use crate::error::{Error, Result};
use crate::fieldcalc::snapshot::{read_snapshot, write_scalar, write_sym, write_vector};
use crate::fieldcalc::{Grid, GridDescriptor, ScalarField, SymTensorField, VectorField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub role: String,
    pub file: String,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub bundle: String,
    pub dim: usize,
    pub grid: GridDescriptor,
    pub roles: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Potential>,
}

pub const MANIFEST: &str = "manifest.json";

enum Item<'a> {
    S(&'a ScalarField),
    V(&'a VectorField),
    T(&'a SymTensorField),
}

fn write_items(dir: &Path, items: &[(&str, Item)], mut manifest: Manifest) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    for (role, item) in items {
        let file = format!("{role}.field");
        let path = dir.join(&file);
        let kind = match item {
            Item::S(f) => {
                write_scalar(&path, f, role)?;
                "scalar"
            }
            Item::V(f) => {
                write_vector(&path, f, role)?;
                "vector"
            }
            Item::T(f) => {
                write_sym(&path, f, role)?;
                if f.is_trace_free() {
                    "sym_trace_free"
                } else {
                    "sym"
                }
            }
        };
        manifest.roles.push(ManifestEntry { role: role.to_string(), file, kind: kind.into() });
    }
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::Snapshot { path: path.clone(), message: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| Error::Snapshot { path, message: e.to_string() })
}

struct Loaded {
    dir: std::path::PathBuf,
    manifest: Manifest,
    grid: Arc<Grid>,
}

impl Loaded {
    fn open(dir: &Path, bundle: &str) -> Result<Self> {
        let manifest = read_manifest(dir)?;
        if manifest.bundle != bundle {
            return Err(Error::Snapshot {
                path: dir.join(MANIFEST),
                message: format!("expected a {bundle} bundle, found {}", manifest.bundle),
            });
        }
        let grid = Arc::new(Grid::from_descriptor(&manifest.grid)?);
        Ok(Loaded { dir: dir.to_path_buf(), manifest, grid })
    }

    fn path(&self, role: &str) -> Result<std::path::PathBuf> {
        let e =
            self.manifest.roles.iter().find(|e| e.role == role).ok_or_else(|| Error::Snapshot {
                path: self.dir.join(MANIFEST),
                message: format!("role `{role}` missing from manifest"),
            })?;
        Ok(self.dir.join(&e.file))
    }

    fn scalar(&self, role: &str) -> Result<ScalarField> {
        read_snapshot(&self.path(role)?)?.into_scalar(Some(self.grid.clone()))
    }
    fn vector(&self, role: &str) -> Result<VectorField> {
        read_snapshot(&self.path(role)?)?.into_vector(Some(self.grid.clone()))
    }
    fn has(&self, role: &str) -> bool {
        self.manifest.roles.iter().any(|e| e.role == role)
    }
    fn sym(&self, role: &str, trace_free: bool) -> Result<SymTensorField> {
        read_snapshot(&self.path(role)?)?.into_sym(Some(self.grid.clone()), trace_free)
    }
}

fn empty_manifest(bundle: &str, grid: &Grid) -> Manifest {
    Manifest { bundle: bundle.into(), dim: grid.dim(), grid: grid.descriptor(), roles: Vec::new(), tau_star: None, potential: None }
}

pub fn write_general(dir: &Path, gc: &GeneralCoefficients) -> Result<Manifest> {
    gc.check()?;
    let items = [
        ("h", Item::S(&gc.h)),
        ("f", Item::S(&gc.f)),
        ("rho1", Item::S(&gc.rho1)),
        ("rho2", Item::S(&gc.rho2)),
        ("Psi", Item::T(&gc.psi)),
        ("b", Item::S(&gc.b)),
        ("c", Item::S(&gc.c)),
        ("d", Item::S(&gc.d)),
        ("Y", Item::V(&gc.y)),
    ];
    write_items(dir, &items, empty_manifest("general", gc.grid()))
}

pub fn read_general(dir: &Path) -> Result<GeneralCoefficients> {
    let l = Loaded::open(dir, "general")?;
    Ok(GeneralCoefficients {
        h: l.scalar("h")?,
        f: l.scalar("f")?,
        rho1: l.scalar("rho1")?,
        rho2: l.scalar("rho2")?,
        psi: l.sym("Psi", false)?,
        b: l.scalar("b")?,
        c: l.scalar("c")?,
        d: l.scalar("d")?,
        y: l.vector("Y")?,
    })
}

pub fn write_physical(dir: &Path, p: &PhysicalCoefficients) -> Result<Manifest> {
    let items = [
        ("lapse", Item::S(&p.lapse)),
        ("drift", Item::V(&p.drift)),
        ("psi", Item::S(&p.psi)),
        ("pi", Item::S(&p.pi)),
        ("U", Item::T(&p.tt)),
        ("energy", Item::S(&p.energy)),
        ("current", Item::V(&p.current)),
    ];
    let mut m = empty_manifest("physical", p.grid());
    m.tau_star = Some(p.tau_star);
    m.potential = Some(p.potential.clone());
    write_items(dir, &items, m)
}

pub fn read_physical(dir: &Path) -> Result<PhysicalCoefficients> {
    let l = Loaded::open(dir, "physical")?;
    let p = PhysicalCoefficients::new(
        l.scalar("lapse")?,
        l.vector("drift")?,
        l.scalar("psi")?,
        l.scalar("pi")?,
        l.manifest.tau_star.unwrap_or(0.0),
        l.sym("U", true)?,
        l.manifest.potential.clone().unwrap_or_default(),
    )?;
    // source roles are optional in hand-written bundles
    let energy = if l.has("energy") { l.scalar("energy")? } else { p.energy.clone() };
    let current = if l.has("current") { l.vector("current")? } else { p.current.clone() };
    p.with_sources(energy, current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::coefficients::{physical_to_general, UniformCoefficients};
    use crate::fieldcalc::{arc, TorusGrid};

    #[test]
    fn general_bundle_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = arc(Grid::Torus(TorusGrid::unit(3, 8).unwrap()));
        let mut gc = GeneralCoefficients::uniform(g.clone(), UniformCoefficients { f: 1.0, h: 2.0, ..Default::default() });
        gc.y = VectorField::from_fn(g, |x| vec![x[0], x[1], -x[2]]);
        let m = write_general(dir.path(), &gc).unwrap();
        assert_eq!(m.roles.len(), 9);
        let back = read_general(dir.path()).unwrap();
        assert_eq!(back.y.comps(), gc.y.comps());
        assert_eq!(back.h.data(), gc.h.data());
        assert!(read_physical(dir.path()).is_err());
    }

    #[test]
    fn physical_bundle_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = arc(Grid::Torus(TorusGrid::unit(3, 8).unwrap()));
        let mut p = PhysicalCoefficients::vacuum(g, 0.3);
        p.potential = Potential { coeffs: vec![0.1, 0.0, 0.5] };
        write_physical(dir.path(), &p).unwrap();
        let back = read_physical(dir.path()).unwrap();
        assert_eq!(back.tau_star, 0.3);
        assert_eq!(back.potential, p.potential);
        let a = physical_to_general(&back).unwrap();
        assert_eq!(a.f.data(), physical_to_general(&p).unwrap().f.data());
    }

    #[test]
    fn missing_manifest_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let e = read_general(&dir.path().join("nowhere")).unwrap_err().to_string();
        assert!(e.contains("nowhere"), "{e}");
    }
}
