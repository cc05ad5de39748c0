//! System manifests: a TOML file listing every affine term of `C`, `K`, `B`
//! and `N_j` as a coefficient expression plus a Matrix Market file.
//!
//! ```toml
//! format = "pbmor-system/1"
//! structure = "time-delay"
//! n = 1000
//! m = 1
//! p = 1
//! d = 1
//!
//! [[k]]
//! coeff = "s"
//! matrix = "k0.mtx"
//!
//! [[bilinear]]
//! input = 1
//! coeff = "1"
//! matrix = "n1_0.mtx"
//! ```
//!
//! Matrix paths are relative to the manifest. Identical matrices are written
//! once and shared between terms.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mmio, CMat, ConstMatrix};
use crate::matfun::{AffineMatrixFn, Structure, StructuredSystem};
use crate::scalarfun::ScalarFn;

pub const FORMAT: &str = "pbmor-system/1";
pub const MANIFEST_FILE: &str = "system.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub coeff: String,
    pub matrix: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearEntry {
    /// 1-based input index.
    pub input: usize,
    pub coeff: String,
    pub matrix: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisEntry {
    pub v: String,
    pub w: String,
}

/// On-disk layout of a manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub structure: Structure,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub d: usize,
    #[serde(default)]
    pub c: Vec<TermEntry>,
    #[serde(default)]
    pub k: Vec<TermEntry>,
    #[serde(default)]
    pub b: Vec<TermEntry>,
    #[serde(default)]
    pub bilinear: Vec<BilinearEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisEntry>,
}

/// Writes `system.toml` and its matrices into `dir`, which must exist.
/// With `basis`, the projection bases are stored as `v.mtx` and `w.mtx`.
/// Returns the manifest path.
pub fn write_system(dir: &Path, sys: &StructuredSystem, basis: Option<(&CMat, &CMat)>) -> Result<PathBuf> {
    // keyed by file contents so equal matrices share one file
    let mut names: HashMap<String, String> = HashMap::new();
    let mut files: Vec<(String, String)> = Vec::new();
    let mut entries = |member: &str, f: &AffineMatrixFn| -> Vec<(String, String)> {
        f.terms()
            .iter()
            .enumerate()
            .map(|(j, (h, m))| {
                let text = mmio::to_string(m);
                let name = names
                    .entry(text.clone())
                    .or_insert_with(|| {
                        let name = format!("{member}{j}.mtx");
                        files.push((name.clone(), text));
                        name
                    })
                    .clone();
                (h.to_string(), name)
            })
            .collect()
    };
    let plain = |v: Vec<(String, String)>| v.into_iter().map(|(coeff, matrix)| TermEntry { coeff, matrix }).collect();
    let c = plain(entries("c", &sys.c));
    let k = plain(entries("k", &sys.k));
    let b = plain(entries("b", &sys.b));
    let mut bilinear = Vec::new();
    for (j, nj) in sys.bilinear.iter().enumerate() {
        if nj.is_zero() {
            continue;
        }
        for (coeff, matrix) in entries(&format!("n{}_", j + 1), nj) {
            bilinear.push(BilinearEntry { input: j + 1, coeff, matrix });
        }
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        structure: sys.structure,
        n: sys.n,
        m: sys.m,
        p: sys.p,
        d: sys.d,
        c,
        k,
        b,
        bilinear,
        basis: basis.map(|_| BasisEntry { v: "v.mtx".into(), w: "w.mtx".into() }),
    };
    for (name, text) in &files {
        std::fs::write(dir.join(name), text)?;
    }
    if let Some((v, w)) = basis {
        mmio::write(&dir.join("v.mtx"), &ConstMatrix::Dense(v.clone()))?;
        mmio::write(&dir.join("w.mtx"), &ConstMatrix::Dense(w.clone()))?;
    }
    let path = dir.join(MANIFEST_FILE);
    let text = toml::to_string(&manifest).map_err(|e| Error::Manifest(e.to_string()))?;
    std::fs::write(&path, text)?;
    Ok(path)
}

fn pairs(v: &[TermEntry]) -> Vec<(&str, &str)> {
    v.iter().map(|t| (t.coeff.as_str(), t.matrix.as_str())).collect()
}

/// A system read back from disk, with its bases when present.
pub struct LoadedSystem {
    pub sys: StructuredSystem,
    pub basis: Option<(CMat, CMat)>,
}

/// Reads a manifest written by [`write_system`] or by hand. `path` may be
/// the manifest file or the directory holding `system.toml`.
pub fn read_system(path: &Path) -> Result<LoadedSystem> {
    let path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Manifest(format!("cannot read {}: {e}", path.display())))?;
    let man: Manifest = toml::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    if man.format != FORMAT {
        return Err(Error::Manifest(format!("unsupported format '{}', expected '{FORMAT}'", man.format)));
    }
    let mut cache: HashMap<String, Arc<ConstMatrix>> = HashMap::new();
    let mut load = |file: &str| -> Result<Arc<ConstMatrix>> {
        if let Some(m) = cache.get(file) {
            return Ok(m.clone());
        }
        let m = Arc::new(mmio::read(&dir.join(file))?);
        cache.insert(file.to_string(), m.clone());
        Ok(m)
    };
    let mut member = |what: &str, list: &[(&str, &str)], rows: usize, cols: usize| -> Result<AffineMatrixFn> {
        if list.is_empty() {
            return Ok(AffineMatrixFn::zeros(rows, cols, man.d));
        }
        let mut terms = Vec::with_capacity(list.len());
        for (coeff, file) in list {
            let h = ScalarFn::parse(coeff, man.d).map_err(|e| Error::Manifest(format!("{what} coefficient '{coeff}': {e}")))?;
            terms.push((h, load(file)?));
        }
        AffineMatrixFn::from_shared(rows, cols, man.d, terms).map_err(|e| Error::Manifest(format!("{what}: {e}")))
    };
    let c = member("C", &pairs(&man.c), man.p, man.n)?;
    let k = member("K", &pairs(&man.k), man.n, man.n)?;
    let b = member("B", &pairs(&man.b), man.n, man.m)?;
    if let Some(bad) = man.bilinear.iter().find(|e| e.input == 0 || e.input > man.m) {
        return Err(Error::Manifest(format!("bilinear input index {} outside 1..={}", bad.input, man.m)));
    }
    let mut bilinear = Vec::with_capacity(man.m);
    for j in 1..=man.m {
        let list: Vec<_> =
            man.bilinear.iter().filter(|e| e.input == j).map(|e| (e.coeff.as_str(), e.matrix.as_str())).collect();
        bilinear.push(member(&format!("N_{j}"), &list, man.n, man.n)?);
    }
    let sys = StructuredSystem::new(c, k, b, bilinear, man.structure)?;
    if (sys.n, sys.m, sys.p, sys.d) != (man.n, man.m, man.p, man.d) {
        return Err(Error::Manifest("declared dimensions do not match the matrices".into()));
    }
    let basis = match &man.basis {
        None => None,
        Some(e) => Some((mmio::read(&dir.join(&e.v))?.to_dense(), mmio::read(&dir.join(&e.w))?.to_dense())),
    };
    Ok(LoadedSystem { sys, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{gen_heated_rod_delay, gen_msd_chain};
    use crate::tf::{eval_gk, TransferEvalRequest};
    use num_complex::Complex64;

    fn same_response(a: &StructuredSystem, b: &StructuredSystem, mu: Vec<f64>) {
        let s = Complex64::new(0.3, 1.7);
        for k in 1..=2 {
            let req = TransferEvalRequest::new(vec![s; k], mu.clone());
            let ga = eval_gk(a, &req).unwrap();
            let gb = eval_gk(b, &req).unwrap();
            assert!((ga - gb).norm() == 0.0);
        }
    }

    #[test]
    fn rod_round_trip_shares_files() {
        let dir = tempfile::tempdir().unwrap();
        let sys = gen_heated_rod_delay(12).unwrap();
        let path = write_system(dir.path(), &sys, None).unwrap();
        let back = read_system(&path).unwrap();
        assert_eq!(back.sys.k.terms().len(), sys.k.terms().len());
        same_response(&sys, &back.sys, vec![3.0]);
        let files = std::fs::read_dir(dir.path()).unwrap().count();
        // A_d is shared by two K terms
        assert!(files < 1 + sys.k.terms().len() + 3);
    }

    #[test]
    fn msd_round_trip_with_basis() {
        let dir = tempfile::tempdir().unwrap();
        let sys = gen_msd_chain(8).unwrap();
        let v = CMat::identity(8, 3);
        write_system(dir.path(), &sys, Some((&v, &v))).unwrap();
        let back = read_system(dir.path()).unwrap();
        same_response(&sys, &back.sys, vec![0.5, 0.25]);
        assert_eq!(back.basis.unwrap().0, v);
        assert_eq!(back.sys.structure, Structure::SecondOrder);
    }

    #[test]
    fn writing_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let sys = gen_msd_chain(10).unwrap();
        write_system(a.path(), &sys, None).unwrap();
        write_system(b.path(), &sys, None).unwrap();
        for entry in std::fs::read_dir(a.path()).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap());
        }
    }

    #[test]
    fn bad_manifests_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let sys = gen_msd_chain(6).unwrap();
        let path = write_system(dir.path(), &sys, None).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("pbmor-system/1", "other/2")).unwrap();
        assert!(matches!(read_system(&path), Err(Error::Manifest(_))));
        std::fs::write(&path, text.replace("coeff = \"s^2\"", "coeff = \"s^^2\"")).unwrap();
        assert!(matches!(read_system(&path), Err(Error::Manifest(_))));
        std::fs::write(&path, text.replace("input = 2", "input = 3")).unwrap();
        assert!(matches!(read_system(&path), Err(Error::Manifest(_))));
    }
}
