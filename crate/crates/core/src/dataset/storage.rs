//! On-disk layout of an instance directory:
//!
//! ```text
//! <dir>/manifest.json   configuration, recipes, mixing records, checksums
//! <dir>/clean.f64       noise-free matrix, f64 little-endian, column-major
//! <dir>/mixed.f64       observed matrix, same layout
//! <dir>/instance.csv    optional: time,v0,v1,... of the mixed matrix
//! ```
//!
//! The manifest is written last, so a directory without one is incomplete.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};
use sha2::{Digest, Sha256};

use super::{DatasetInstance, InstanceConfig, SeriesMatrix};
use crate::assignment::VariateRecipe;
use crate::error::{Error, Result};
use crate::synthesis::MixingRecord;

pub const FORMAT_VERSION: &str = "1.0";
pub const FORMAT_MAJOR: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CLEAN_FILE: &str = "clean.f64";
pub const MIXED_FILE: &str = "mixed.f64";
pub const CSV_FILE: &str = "instance.csv";
const LAYOUT: &str = "f64-le/column-major";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checksums {
    pub clean_sha256: String,
    pub mixed_sha256: String,
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: String,
    pub generator: String,
    pub layout: String,
    #[serde_as(as = "DisplayFromStr")]
    pub samples: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub variates: usize,
    pub checksums: Checksums,
    pub config: InstanceConfig,
    pub recipes: Vec<VariateRecipe>,
    pub mixing: Vec<Option<MixingRecord>>,
}

impl Manifest {
    pub fn new(
        config: InstanceConfig,
        recipes: Vec<VariateRecipe>,
        mixing: Vec<Option<MixingRecord>>,
        clean: &SeriesMatrix,
        mixed: &SeriesMatrix,
    ) -> Self {
        Manifest {
            format_version: FORMAT_VERSION.into(),
            generator: concat!("synthts ", env!("CARGO_PKG_VERSION")).into(),
            layout: LAYOUT.into(),
            samples: clean.rows(),
            variates: clean.cols(),
            checksums: Checksums { clean_sha256: clean.sha256(), mixed_sha256: mixed.sha256() },
            config,
            recipes,
            mixing,
        }
    }

    pub fn check_version(&self) -> Result<()> {
        let major = self.format_version.split('.').next().and_then(|m| m.parse::<u32>().ok());
        if major != Some(FORMAT_MAJOR) {
            return Err(Error::Version { found: self.format_version.clone(), supported: FORMAT_MAJOR });
        }
        Ok(())
    }

    pub fn exists(dir: &Path) -> bool {
        dir.join(MANIFEST_FILE).is_file()
    }

    pub fn read(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::malformed(MANIFEST_FILE, e.to_string()))?;
        manifest.check_version()?;
        Ok(manifest)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Writes the instance into `dir`, creating it if needed.
pub fn write_instance(instance: &DatasetInstance, dir: &Path, with_csv: bool) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join(CLEAN_FILE), &instance.clean.to_le_bytes())?;
    write_atomic(&dir.join(MIXED_FILE), &instance.mixed.to_le_bytes())?;
    if with_csv {
        write_csv(&instance.mixed, &dir.join(CSV_FILE))?;
    }
    let json = serde_json::to_vec_pretty(&instance.manifest)?;
    write_atomic(&dir.join(MANIFEST_FILE), &json)
}

fn write_csv(m: &SeriesMatrix, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["time".to_string()];
    header.extend((0..m.cols()).map(|v| format!("v{v}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(m.cols() + 1);
    for t in 0..m.rows() {
        row.clear();
        row.push(t.to_string());
        row.extend((0..m.cols()).map(|v| m.get(t, v).to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_matrix(dir: &Path, file: &str, rows: usize, cols: usize, expected_sha: &str) -> Result<SeriesMatrix> {
    let path = dir.join(file);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if bytes.len() != rows * cols * 8 {
        return Err(Error::shape(file, rows * cols * 8, bytes.len()));
    }
    let actual = hex::encode(Sha256::digest(&bytes));
    if actual != expected_sha {
        return Err(Error::Checksum { file: file.into(), expected: expected_sha.into(), actual });
    }
    let data =
        bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    SeriesMatrix::from_column_major(rows, cols, data)
}

/// Loads and fully revalidates an instance directory.
pub fn read_instance(dir: &Path) -> Result<DatasetInstance> {
    let manifest = Manifest::read(dir)?;
    let (rows, cols) = (manifest.samples, manifest.variates);
    if rows != manifest.config.samples || cols != manifest.config.variates {
        return Err(Error::malformed(MANIFEST_FILE, "matrix dimensions disagree with the configuration"));
    }
    manifest.config.validate()?;
    for r in &manifest.recipes {
        r.validate().map_err(|e| e.in_variate(r.variate_id))?;
    }
    let clean = read_matrix(dir, CLEAN_FILE, rows, cols, &manifest.checksums.clean_sha256)?;
    let mixed = read_matrix(dir, MIXED_FILE, rows, cols, &manifest.checksums.mixed_sha256)?;
    let instance = DatasetInstance { manifest, clean, mixed };
    instance.validate()?;
    Ok(instance)
}
