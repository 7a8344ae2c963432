//! Ground-truth k-distance table and its on-disk cache.
//!
//! `table[p][k-1]` is the distance from point `p` to its k-th nearest
//! neighbor (self excluded). Rows are non-decreasing in k and non-negative;
//! the constructor and the cache loader both enforce this, so downstream code
//! (monotonicity restoration in particular) can rely on it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::Real;

const MAGIC: [u8; 4] = *b"KDT1";

#[derive(Debug, Clone, PartialEq)]
pub struct KDistTable {
    values: Array2<Real>,
}

impl KDistTable {
    pub fn new(values: Array2<Real>) -> Result<Self> {
        for (p, row) in values.rows().into_iter().enumerate() {
            let mut prev = 0.0;
            for (i, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::CorruptArtifact(format!(
                        "k-distance table: invalid value {v} at point {p}, k {}",
                        i + 1
                    )));
                }
                if v < prev {
                    return Err(Error::CorruptArtifact(format!(
                        "k-distance table: row {p} decreases at k {}",
                        i + 1
                    )));
                }
                prev = v;
            }
        }
        Ok(KDistTable { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn k_max(&self) -> usize {
        self.values.ncols()
    }

    /// k is 1-based.
    pub fn get(&self, p: usize, k: usize) -> Result<Real> {
        if k == 0 || k > self.k_max() {
            return Err(Error::KOutOfRange {
                k,
                k_max: self.k_max(),
            });
        }
        Ok(self.values[(p, k - 1)])
    }

    pub fn row(&self, p: usize) -> &[Real] {
        self.values.row(p).to_slice().expect("table is row-major")
    }

    pub fn values(&self) -> &Array2<Real> {
        &self.values
    }

    /// Binary cache: magic `KDT1`, `n` and `k_max` as little-endian u64,
    /// then `n * k_max` little-endian f64 row-major.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&MAGIC)?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&(self.k_max() as u64).to_le_bytes())?;
        for row in self.values.rows() {
            for &v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::CorruptArtifact("k-distance cache: truncated header".into()))?;
        if magic != MAGIC {
            return Err(Error::CorruptArtifact("k-distance cache: bad magic".into()));
        }
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)
            .map_err(|_| Error::CorruptArtifact("k-distance cache: truncated header".into()))?;
        let n = u64::from_le_bytes(buf8) as usize;
        r.read_exact(&mut buf8)
            .map_err(|_| Error::CorruptArtifact("k-distance cache: truncated header".into()))?;
        let k_max = u64::from_le_bytes(buf8) as usize;
        let mut values = Array2::zeros((n, k_max));
        for p in 0..n {
            for i in 0..k_max {
                r.read_exact(&mut buf8).map_err(|_| {
                    Error::CorruptArtifact(format!("k-distance cache: truncated at row {p}"))
                })?;
                values[(p, i)] = Real::from_le_bytes(buf8);
            }
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::CorruptArtifact(
                "k-distance cache: trailing bytes".into(),
            ));
        }
        KDistTable::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_decreasing_rows() {
        let err = KDistTable::new(array![[1.0, 0.5]]).unwrap_err();
        assert!(matches!(err, Error::CorruptArtifact(_)));
    }

    #[test]
    fn rejects_negative_and_non_finite() {
        assert!(KDistTable::new(array![[-1.0, 0.0]]).is_err());
        assert!(KDistTable::new(array![[0.0, Real::NAN]]).is_err());
    }

    #[test]
    fn get_is_one_based() {
        let t = KDistTable::new(array![[1.0, 3.0]]).unwrap();
        assert_eq!(t.get(0, 1).unwrap(), 1.0);
        assert_eq!(t.get(0, 2).unwrap(), 3.0);
        assert!(matches!(t.get(0, 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(t.get(0, 3), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn cache_roundtrip_is_bit_exact() {
        let t = KDistTable::new(array![
            [0.1, 0.30000000000000004, 7.5],
            [1e-300, 2.5, 1e300]
        ])
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.kdt");
        t.save(&path).unwrap();
        let back = KDistTable::load(&path).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn cache_header_layout_is_fixed() {
        let t = KDistTable::new(array![[2.0]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.kdt");
        t.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"KDT1");
        assert_eq!(bytes[4..12], 1u64.to_le_bytes());
        assert_eq!(bytes[12..20], 1u64.to_le_bytes());
        assert_eq!(bytes[20..28], 2.0f64.to_le_bytes());
        assert_eq!(bytes.len(), 28);
    }

    #[test]
    fn truncated_cache_is_rejected() {
        let t = KDistTable::new(array![[1.0, 2.0], [1.5, 2.5]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.kdt");
        t.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            KDistTable::load(&path),
            Err(Error::CorruptArtifact(_))
        ));
    }
}
