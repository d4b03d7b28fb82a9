use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AsymEntry, AsymFactors, AsymObservationSet};
use crate::error::{Error, Result};
use crate::fileio::{io_err, read_entries_csv, read_json, read_matrix_csv, write_entries_csv, write_json, write_matrix_csv};

const MANIFEST: &str = "manifest.json";
const ENTRIES: &str = "entries.csv";
const FACTOR_FILES: [&str; 3] = ["U.csv", "V.csv", "W.csv"];

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    d1: usize,
    d2: usize,
    d3: usize,
    p: f64,
    sigma: f64,
    seed: u64,
    num_entries: usize,
}

pub fn write_asym_observations(obs: &AsymObservationSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let [d1, d2, d3] = obs.dims;
    let manifest = Manifest {
        d1,
        d2,
        d3,
        p: obs.p,
        sigma: obs.sigma,
        seed: obs.seed,
        num_entries: obs.entries.len(),
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    write_entries_csv(
        &dir.join(ENTRIES),
        obs.entries.iter().map(|e| (e.i, e.j, e.k, e.value)),
    )
}

pub fn read_asym_observations(dir: &Path) -> Result<AsymObservationSet> {
    let mpath = dir.join(MANIFEST);
    let m: Manifest = read_json(&mpath)?;
    let epath = dir.join(ENTRIES);
    let dims = [m.d1, m.d2, m.d3];
    let rows = read_entries_csv(&epath, |i, j, k| {
        if i >= dims[0] || j >= dims[1] || k >= dims[2] {
            return Err(format!("triple ({i}, {j}, {k}) out of range for {dims:?}"));
        }
        Ok(())
    })?;
    if rows.len() != m.num_entries {
        return Err(Error::dims(format!(
            "{} lists {} entries but {} has {}",
            mpath.display(),
            m.num_entries,
            epath.display(),
            rows.len()
        )));
    }
    let entries = rows
        .into_iter()
        .map(|(i, j, k, value)| AsymEntry { i, j, k, value })
        .collect();
    AsymObservationSet::new(dims, m.p, m.sigma, m.seed, entries)
}

/// Writes `U.csv`, `V.csv`, `W.csv` into `dir`.
pub fn write_asym_factors(f: &AsymFactors, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, m) in FACTOR_FILES.iter().zip(f.mats()) {
        write_matrix_csv(&dir.join(name), m)?;
    }
    Ok(())
}

pub fn read_asym_factors(dir: &Path) -> Result<AsymFactors> {
    let [u, v, w] = FACTOR_FILES.map(|name| read_matrix_csv(&dir.join(name)));
    AsymFactors::new(u?, v?, w?)
}
