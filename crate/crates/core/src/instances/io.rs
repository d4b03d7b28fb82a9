use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Entry, ObservationSet};
use crate::error::{Error, Result};
use crate::factor::FactorMatrix;
use crate::fileio::{io_err, read_entries_csv, read_json, read_matrix_csv, write_entries_csv, write_json, write_matrix_csv};

pub const MANIFEST: &str = "manifest.json";
pub const ENTRIES: &str = "entries.csv";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    d: usize,
    r_hint: Option<usize>,
    p: f64,
    sigma: f64,
    seed: u64,
    num_canonical: usize,
}

/// Writes `manifest.json` and `entries.csv` into `dir`, creating it if needed.
pub fn write_observations(obs: &ObservationSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest = Manifest {
        d: obs.d,
        r_hint: obs.r_hint,
        p: obs.p,
        sigma: obs.sigma,
        seed: obs.seed,
        num_canonical: obs.entries.len(),
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    write_entries_csv(
        &dir.join(ENTRIES),
        obs.entries.iter().map(|e| (e.i, e.j, e.k, e.value)),
    )
}

pub fn read_observations(dir: &Path) -> Result<ObservationSet> {
    let mpath = dir.join(MANIFEST);
    let manifest: Manifest = read_json(&mpath)?;
    let epath = dir.join(ENTRIES);
    let d = manifest.d;
    let rows = read_entries_csv(&epath, |i, j, k| {
        if !(i <= j && j <= k) {
            return Err(format!("non-canonical triple ({i}, {j}, {k}); need i ≤ j ≤ k"));
        }
        if k >= d {
            return Err(format!("index {k} out of range for d = {d}"));
        }
        Ok(())
    })?;
    if rows.len() != manifest.num_canonical {
        return Err(Error::dims(format!(
            "{} lists {} canonical entries but {} has {}",
            mpath.display(),
            manifest.num_canonical,
            epath.display(),
            rows.len()
        )));
    }
    let entries = rows
        .into_iter()
        .map(|(i, j, k, value)| Entry { i, j, k, value })
        .collect();
    let obs = ObservationSet::new(d, manifest.p, manifest.sigma, manifest.seed, entries)?;
    Ok(match manifest.r_hint {
        Some(r) => obs.with_r_hint(r),
        None => obs,
    })
}

pub fn write_factors(f: &FactorMatrix, path: &Path) -> Result<()> {
    write_matrix_csv(path, f.matrix())
}

pub fn read_factors(path: &Path) -> Result<FactorMatrix> {
    FactorMatrix::new(read_matrix_csv(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_factors, sample_observations};

    #[test]
    fn observations_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let u = gen_factors(8, 2, 5).unwrap();
        let obs = sample_observations(&u, 0.4, 0.3, 6).unwrap();
        write_observations(&obs, dir.path()).unwrap();
        assert_eq!(read_observations(dir.path()).unwrap(), obs);
    }

    #[test]
    fn factors_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("U.csv");
        let u = gen_factors(5, 3, 9).unwrap();
        write_factors(&u, &path).unwrap();
        assert_eq!(read_factors(&path).unwrap(), u);
    }

    #[test]
    fn non_canonical_entry_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let u = gen_factors(4, 1, 1).unwrap();
        let obs = sample_observations(&u, 1.0, 0.0, 1).unwrap();
        write_observations(&obs, dir.path()).unwrap();
        let path = dir.path().join(ENTRIES);
        let mut text = fs::read_to_string(&path).unwrap();
        text = text.replacen("\n0,0,1,", "\n0,1,0,", 1);
        fs::write(&path, text).unwrap();
        match read_observations(dir.path()) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("non-canonical"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn manifest_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let u = gen_factors(4, 1, 1).unwrap();
        let obs = sample_observations(&u, 1.0, 0.0, 1).unwrap();
        write_observations(&obs, dir.path()).unwrap();
        let path = dir.path().join(ENTRIES);
        let text = fs::read_to_string(&path).unwrap();
        let trimmed: Vec<&str> = text.lines().take(5).collect();
        fs::write(&path, trimmed.join("\n")).unwrap();
        assert!(matches!(read_observations(dir.path()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn ragged_factor_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("U.csv");
        fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        match read_factors(&path) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected parse error on line 2, got {other:?}"),
        }
    }
}
