//! Dataset loading and distance metrics.
//!
//! Three text formats are supported: road-network node files (`id x y` per
//! line), embedding files (`n d` header, then `token v1 .. vd` per line) and
//! plain CSV (optional non-numeric header row). Coordinates are stored
//! row-major in `f64`; rows with NaN or infinite coordinates are rejected at
//! load time so everything downstream can assume finite inputs.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Manhattan,
}

impl Metric {
    pub fn dist<S: Scalar>(self, a: &[S], b: &[S]) -> S {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => {
                let mut acc = S::zero();
                for (&x, &y) in a.iter().zip(b) {
                    let d = x - y;
                    acc += d * d;
                }
                acc.sqrt()
            }
            Metric::Manhattan => {
                let mut acc = S::zero();
                for (&x, &y) in a.iter().zip(b) {
                    acc += (x - y).abs();
                }
                acc
            }
        }
    }

    fn tag(self) -> u8 {
        match self {
            Metric::Euclidean => 0,
            Metric::Manhattan => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    RoadNetworkNodes,
    EmbeddingText,
    Csv,
}

/// In-memory point set. Coordinates are flat row-major; `ids` keeps the
/// external identifiers (node ids, tokens) when the source format has them.
#[derive(Debug, Clone)]
pub struct Dataset {
    coords: Vec<Real>,
    n: usize,
    dim: usize,
    pub metric: Metric,
    pub ids: Option<Vec<String>>,
}

impl Dataset {
    pub fn from_rows(rows: Vec<Vec<Real>>, metric: Metric) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::EmptyDataset(n));
        }
        let dim = rows[0].len();
        let mut coords = Vec::with_capacity(n * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "non-finite coordinate".into(),
                });
            }
            coords.extend_from_slice(row);
        }
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(Dataset {
            coords,
            n,
            dim,
            metric,
            ids: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[Real] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[Real]> + Clone + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn dist(&self, i: usize, j: usize) -> Real {
        self.metric.dist(self.point(i), self.point(j))
    }

    pub fn dist_to(&self, q: &[Real], i: usize) -> Real {
        self.metric.dist(q, self.point(i))
    }

    /// Content hash: metric, shape and raw coordinate bytes. Artifacts store
    /// it and refuse to answer queries against a different dataset.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update([self.metric.tag()]);
        h.update((self.n as u64).to_le_bytes());
        h.update((self.dim as u64).to_le_bytes());
        for v in &self.coords {
            h.update(v.to_le_bytes());
        }
        h.finalize().into()
    }

    /// Seeded subsample without replacement, preserving metric and ids.
    pub fn subsample(&self, m: usize, seed: u64) -> Result<Self> {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        if m > self.n {
            return Err(Error::InvalidSpec(format!(
                "subsample of {m} from {} points",
                self.n
            )));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..self.n).collect();
        idx.shuffle(&mut rng);
        idx.truncate(m);
        idx.sort_unstable();
        let rows = idx.iter().map(|&i| self.point(i).to_vec()).collect();
        let mut ds = Dataset::from_rows(rows, self.metric)?;
        ds.ids = self
            .ids
            .as_ref()
            .map(|ids| idx.iter().map(|&i| ids[i].clone()).collect());
        Ok(ds)
    }
}

pub fn load_dataset(path: &Path, format: DatasetFormat, metric: Metric) -> Result<Dataset> {
    let reader = BufReader::new(File::open(path)?);
    parse_dataset(reader, format, metric)
}

fn parse_dataset<R: BufRead>(reader: R, format: DatasetFormat, metric: Metric) -> Result<Dataset> {
    match format {
        DatasetFormat::RoadNetworkNodes => parse_road_nodes(reader, metric),
        DatasetFormat::EmbeddingText => parse_embedding(reader, metric),
        DatasetFormat::Csv => parse_csv(reader, metric),
    }
}

fn parse_float(tok: &str, line: usize) -> Result<Real> {
    let v: Real = tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected a number, got `{tok}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: "non-finite coordinate".into(),
        });
    }
    Ok(v)
}

fn parse_road_nodes<R: BufRead>(reader: R, metric: Metric) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    let mut dim = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let mut toks = line.split_whitespace();
        let Some(id) = toks.next() else { continue };
        let coords: Vec<Real> = toks
            .map(|t| parse_float(t, lineno))
            .collect::<Result<_>>()?;
        if coords.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                msg: "node line needs `id` plus at least one coordinate".into(),
            });
        }
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {d} coordinates, got {}", coords.len()),
                })
            }
            _ => {}
        }
        ids.push(id.to_string());
        rows.push(coords);
    }
    let mut ds = Dataset::from_rows(rows, metric)?;
    ds.ids = Some(ids);
    Ok(ds)
}

fn parse_embedding<R: BufRead>(reader: R, metric: Metric) -> Result<Dataset> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or(Error::EmptyDataset(0))?
        .map_err(Error::Io)?;
    let mut toks = header.split_whitespace();
    let (n, d): (usize, usize) = match (toks.next(), toks.next()) {
        (Some(n), Some(d)) => (
            n.parse().map_err(|_| Error::Parse {
                line: 1,
                msg: "bad count in header".into(),
            })?,
            d.parse().map_err(|_| Error::Parse {
                line: 1,
                msg: "bad dimension in header".into(),
            })?,
        ),
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "expected `n d` header".into(),
            })
        }
    };
    let mut rows = Vec::with_capacity(n);
    let mut ids = Vec::with_capacity(n);
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let lineno = lineno + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let token = toks.next().ok_or_else(|| Error::Parse {
            line: lineno,
            msg: "missing token".into(),
        })?;
        let coords: Vec<Real> = toks
            .map(|t| parse_float(t, lineno))
            .collect::<Result<_>>()?;
        if coords.len() != d {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {d} values, got {}", coords.len()),
            });
        }
        ids.push(token.to_string());
        rows.push(coords);
    }
    if rows.len() != n {
        return Err(Error::Parse {
            line: rows.len() + 1,
            msg: format!("header declared {n} rows, found {}", rows.len()),
        });
    }
    let mut ds = Dataset::from_rows(rows, metric)?;
    ds.ids = Some(ids);
    Ok(ds)
}

fn parse_csv<R: BufRead>(reader: R, metric: Metric) -> Result<Dataset> {
    let mut rows: Vec<Vec<Real>> = Vec::new();
    let mut dim = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<Real>> = toks.iter().map(|t| parse_float(t, lineno)).collect();
        let coords = match parsed {
            Ok(c) => c,
            // A non-numeric first row is a header; anywhere else it is an error.
            Err(_) if lineno == 1 && rows.is_empty() => continue,
            Err(e) => return Err(e),
        };
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {d} columns, got {}", coords.len()),
                })
            }
            _ => {}
        }
        rows.push(coords);
    }
    Dataset::from_rows(rows, metric)
}

/// Writes a dataset in one of the loadable text formats.
pub fn write_dataset(ds: &Dataset, path: &Path, format: DatasetFormat) -> Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(File::create(path)?);
    match format {
        DatasetFormat::RoadNetworkNodes => {
            for (i, p) in ds.points().enumerate() {
                let id = ds
                    .ids
                    .as_ref()
                    .map(|ids| ids[i].clone())
                    .unwrap_or_else(|| i.to_string());
                write!(f, "{id}")?;
                for v in p {
                    write!(f, " {v}")?;
                }
                writeln!(f)?;
            }
        }
        DatasetFormat::EmbeddingText => {
            writeln!(f, "{} {}", ds.n(), ds.dim())?;
            for (i, p) in ds.points().enumerate() {
                let id = ds
                    .ids
                    .as_ref()
                    .map(|ids| ids[i].clone())
                    .unwrap_or_else(|| format!("p{i}"));
                write!(f, "{id}")?;
                for v in p {
                    write!(f, " {v}")?;
                }
                writeln!(f)?;
            }
        }
        DatasetFormat::Csv => {
            for p in ds.points() {
                let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                writeln!(f, "{}", row.join(","))?;
            }
        }
    }
    Ok(())
}
