//! JSON file formats: grid functions, cell masks and sequence manifests.
//!
//! Output is canonical: struct field order fixes key order and floats are
//! printed in shortest round-trip form, so identical inputs give identical
//! bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::SequenceParams;
use crate::error::{invalid, Error, Result};
use crate::grid::{CellSet, FaceId, GridFunction, GridGeometry};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionFile {
    version: u32,
    dim: usize,
    origin: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
    values: Vec<f64>,
    #[serde(default)]
    cracks: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskFile {
    version: u32,
    dim: usize,
    origin: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
    mask: Vec<u8>,
}

fn header(
    version: u32,
    dim: usize,
    origin: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
) -> Result<GridGeometry> {
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    if origin.len() != dim || shape.len() != dim {
        return Err(Error::InvalidGeometry(format!(
            "dim is {dim} but origin has {} and shape {} entries",
            origin.len(),
            shape.len()
        )));
    }
    GridGeometry::new(origin, spacing, shape)
}

/// Parse a grid function file.
pub fn function_from_json(text: &str) -> Result<GridFunction> {
    let file: FunctionFile = serde_json::from_str(text)?;
    let geom = header(
        file.version,
        file.dim,
        file.origin,
        file.spacing,
        file.shape,
    )?;
    let dim = geom.dim();
    let cracks = file
        .cracks
        .iter()
        .map(|entry| {
            if entry.len() != dim + 1 {
                return Err(Error::CrackNotInterior(format!("{entry:?}")));
            }
            let mut cell = [0usize; 2];
            cell[..dim].copy_from_slice(&entry[1..]);
            Ok(FaceId::new(entry[0], cell))
        })
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(geom, file.values, cracks)
}

/// Canonical JSON of a grid function; cracks are listed in face order.
pub fn function_to_json(u: &GridFunction) -> String {
    let geom = u.geom();
    let dim = geom.dim();
    let mut cracks = u.cracks();
    cracks.sort();
    let file = FunctionFile {
        version: FORMAT_VERSION,
        dim,
        origin: geom.origin().to_vec(),
        spacing: geom.spacing(),
        shape: geom.shape().to_vec(),
        values: u.values().to_vec(),
        cracks: cracks
            .iter()
            .map(|f| {
                std::iter::once(f.axis)
                    .chain(f.cell[..dim].iter().copied())
                    .collect()
            })
            .collect(),
    };
    to_json(&file)
}

pub fn mask_from_json(text: &str) -> Result<CellSet> {
    let file: MaskFile = serde_json::from_str(text)?;
    let geom = header(
        file.version,
        file.dim,
        file.origin,
        file.spacing,
        file.shape,
    )?;
    let mask = file
        .mask
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(invalid(
                "mask",
                format!("entries must be 0 or 1, got {other}"),
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    CellSet::new(geom, mask)
}

pub fn mask_to_json(set: &CellSet) -> String {
    let geom = set.geom();
    let file = MaskFile {
        version: FORMAT_VERSION,
        dim: geom.dim(),
        origin: geom.origin().to_vec(),
        spacing: geom.spacing(),
        shape: geom.shape().to_vec(),
        mask: set.mask().iter().map(|&b| u8::from(b)).collect(),
    };
    to_json(&file)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn read_function(path: &Path) -> Result<GridFunction> {
    function_from_json(&fs::read_to_string(path)?)
}

pub fn read_mask(path: &Path) -> Result<CellSet> {
    mask_from_json(&fs::read_to_string(path)?)
}

fn default_p() -> f64 {
    2.0
}
fn default_eps() -> Vec<f64> {
    vec![0.1]
}
fn default_one() -> f64 {
    1.0
}
fn default_gap() -> f64 {
    2.0
}
fn default_true() -> bool {
    true
}
fn default_max_bubbles() -> usize {
    64
}

/// Sequence manifest. Paths are relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub functions: Vec<PathBuf>,
    #[serde(default)]
    pub datum: Option<PathBuf>,
    #[serde(default)]
    pub domain: Option<PathBuf>,
    #[serde(default)]
    pub limit: Option<PathBuf>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_one")]
    pub window: f64,
    #[serde(default = "default_one")]
    pub ref_radius: f64,
    #[serde(default = "default_gap")]
    pub gap_delta: f64,
    #[serde(default)]
    pub base_radius: f64,
    #[serde(default = "default_one")]
    pub radius_width: f64,
    #[serde(default = "default_true")]
    pub symmetric: bool,
    #[serde(default = "default_max_bubbles")]
    pub max_bubbles: usize,
}

impl Manifest {
    pub fn params(&self) -> SequenceParams {
        SequenceParams {
            p: self.p,
            eps: self.eps.clone(),
            window: self.window,
            ref_radius: self.ref_radius,
            gap_delta: self.gap_delta,
            base_radius: self.base_radius,
            radius_width: self.radius_width,
            symmetric: self.symmetric,
            max_bubbles: self.max_bubbles,
        }
    }
}

/// Manifest with every referenced file loaded.
#[derive(Clone, Debug)]
pub struct LoadedManifest {
    pub sequence: Vec<GridFunction>,
    pub datum: Option<GridFunction>,
    pub domain: Option<CellSet>,
    pub limit: Option<GridFunction>,
    pub params: SequenceParams,
}

pub fn manifest_from_json(text: &str) -> Result<Manifest> {
    let m: Manifest = serde_json::from_str(text)?;
    if m.functions.len() < 2 {
        return Err(invalid(
            "functions",
            "a manifest lists at least two functions",
        ));
    }
    if !(m.p.is_finite() && m.p > 1.0) {
        return Err(invalid("p", format!("must exceed 1, got {}", m.p)));
    }
    if m.eps.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
        return Err(invalid("eps", "ladder entries must be positive"));
    }
    Ok(m)
}

pub fn load_manifest(path: &Path) -> Result<LoadedManifest> {
    let m = manifest_from_json(&fs::read_to_string(path)?)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let sequence = m
        .functions
        .iter()
        .map(|p| read_function(&dir.join(p)))
        .collect::<Result<Vec<_>>>()?;
    let datum = m
        .datum
        .as_ref()
        .map(|p| read_function(&dir.join(p)))
        .transpose()?;
    let domain = m
        .domain
        .as_ref()
        .map(|p| read_mask(&dir.join(p)))
        .transpose()?;
    let limit = m
        .limit
        .as_ref()
        .map(|p| read_function(&dir.join(p)))
        .transpose()?;
    Ok(LoadedManifest {
        sequence,
        datum,
        domain,
        limit,
        params: m.params(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{runaway, staircase};

    #[test]
    fn function_round_trip_is_bit_identical() {
        for u in [staircase(4, 2).unwrap(), runaway(0.1, 6).unwrap()] {
            let text = function_to_json(&u);
            let back = function_from_json(&text).unwrap();
            assert_eq!(back, u);
            assert_eq!(function_to_json(&back), text);
        }
    }

    #[test]
    fn one_dimensional_cracks() {
        let text = r#"{"version":1,"dim":1,"origin":[0],"spacing":0.5,"shape":[3],
            "values":[0,1,1],"cracks":[[0,0]]}"#;
        let u = function_from_json(text).unwrap();
        assert_eq!(u.jump_measure(), 1.0);
        assert!(function_to_json(&u).contains("[\n      0,\n      0\n    ]"));
    }

    #[test]
    fn rejects_bad_files() {
        let base = |extra: &str| {
            format!(
                r#"{{"version":1,"dim":1,"origin":[0],"spacing":1,"shape":[2],"values":[0,1]{extra}}}"#
            )
        };
        assert!(function_from_json(&base("")).is_ok());
        assert!(matches!(
            function_from_json(&base(r#","cracks":[[0,0],[0,0]]"#)),
            Err(Error::DuplicateCrack(_))
        ));
        assert!(matches!(
            function_from_json(&base(r#","cracks":[[0,1]]"#)),
            Err(Error::CrackNotInterior(_))
        ));
        assert!(matches!(
            function_from_json(&base(r#","extra":1"#)),
            Err(Error::Json(_))
        ));
        let v2 = base("").replace("\"version\":1", "\"version\":2");
        assert!(matches!(
            function_from_json(&v2),
            Err(Error::UnsupportedVersion(2))
        ));
        let short = base("").replace("[0,1]", "[0]");
        assert!(matches!(
            function_from_json(&short),
            Err(Error::ValueCount { .. })
        ));
        assert!(function_from_json("{").is_err());
    }

    #[test]
    fn mask_round_trip() {
        let g = GridGeometry::new(vec![0.0, 0.0], 0.5, vec![2, 2]).unwrap();
        let s = CellSet::new(g, vec![true, false, false, true]).unwrap();
        assert_eq!(mask_from_json(&mask_to_json(&s)).unwrap(), s);
        let bad = mask_to_json(&s).replacen('1', "2", 1);
        assert!(mask_from_json(&bad).is_err());
    }

    #[test]
    fn manifest_defaults_and_paths() {
        let dir = tempdir();
        for (i, n) in [10.0, 100.0].iter().enumerate() {
            fs::write(
                dir.join(format!("u{i}.json")),
                function_to_json(&runaway(*n, 4).unwrap()),
            )
            .unwrap();
        }
        fs::write(dir.join("m.json"), r#"{"functions":["u0.json","u1.json"]}"#).unwrap();
        let m = load_manifest(&dir.join("m.json")).unwrap();
        assert_eq!(m.sequence.len(), 2);
        assert_eq!(m.params, SequenceParams::default());
        assert!(manifest_from_json(r#"{"functions":["a"]}"#).is_err());
        assert!(manifest_from_json(r#"{"functions":["a","b"],"p":1}"#).is_err());
        fs::remove_dir_all(dir).unwrap();
    }

    fn tempdir() -> PathBuf {
        let d = std::env::temp_dir().join(format!("gsbv-io-{}", std::process::id()));
        fs::create_dir_all(&d).unwrap();
        d
    }
}
