//! Input and target normalization.
//!
//! Model inputs are z-scored per dimension (population standard deviation);
//! regression targets are the per-k min-max normalized k-distances. Both
//! transforms are increasing affine maps per coordinate, so they preserve
//! order: bounds computed in normalized space stay bounds after inversion.
//! Degenerate columns (zero spread) fall back to a unit scale instead of
//! dividing by zero.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::table::KDistTable;
use crate::Real;

/// Spread below this is treated as zero and replaced by a unit scale.
const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreParams<S: Scalar = Real> {
    pub mean: Vec<S>,
    pub std: Vec<S>,
}

impl<S: Scalar> ZScoreParams<S> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn param_count(&self) -> usize {
        2 * self.mean.len()
    }
}

/// Population statistics (1/n) per dimension over row-major points.
pub fn zscore_fit<S: Scalar>(
    rows: impl Iterator<Item = impl AsRef<[S]>> + Clone,
) -> ZScoreParams<S> {
    let mut n = 0usize;
    let mut mean: Vec<S> = Vec::new();
    for row in rows.clone() {
        let row = row.as_ref();
        if mean.is_empty() {
            mean = vec![S::zero(); row.len()];
        }
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
        n += 1;
    }
    let inv_n = S::one() / S::from_real(n as f64);
    for m in &mut mean {
        *m *= inv_n;
    }
    let mut var = vec![S::zero(); mean.len()];
    for row in rows {
        for ((s, &v), &m) in var.iter_mut().zip(row.as_ref()).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    let eps = S::from_real(DEGENERATE_EPS);
    let std = var
        .iter()
        .map(|&s| {
            let sd = (s * inv_n).sqrt();
            if sd < eps {
                S::one()
            } else {
                sd
            }
        })
        .collect();
    ZScoreParams { mean, std }
}

pub fn zscore_apply<S: Scalar>(params: &ZScoreParams<S>, x: &[S], out: &mut [S]) -> Result<()> {
    if x.len() != params.dim() || out.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: x.len(),
        });
    }
    for i in 0..x.len() {
        out[i] = (x[i] - params.mean[i]) / params.std[i];
    }
    Ok(())
}

pub fn zscore_invert<S: Scalar>(params: &ZScoreParams<S>, z: &[S], out: &mut [S]) -> Result<()> {
    if z.len() != params.dim() || out.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: z.len(),
        });
    }
    for i in 0..z.len() {
        out[i] = z[i] * params.std[i] + params.mean[i];
    }
    Ok(())
}

/// Z-scores every dataset point into an `n x d` matrix.
pub fn zscore_apply_all(
    params: &ZScoreParams,
    ds: &crate::dataset::Dataset,
) -> Result<Array2<Real>> {
    let (n, d) = (ds.n(), ds.dim());
    let mut out = Array2::zeros((n, d));
    for (i, p) in ds.points().enumerate() {
        zscore_apply(params, p, out.row_mut(i).as_slice_mut().unwrap())?;
    }
    Ok(out)
}

/// Per-k min-max parameters over a k-distance table. `scale(k)` is
/// `max - min`, or 1 when the column is (near-)constant, in which case apply
/// sends every value to ~0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KDistNormParams<S: Scalar = Real> {
    pub min: Vec<S>,
    pub max: Vec<S>,
}

impl<S: Scalar> KDistNormParams<S> {
    pub fn k_max(&self) -> usize {
        self.min.len()
    }

    pub fn param_count(&self) -> usize {
        2 * self.min.len()
    }

    fn check_k(&self, k: usize) -> Result<usize> {
        if k == 0 || k > self.k_max() {
            Err(Error::KOutOfRange {
                k,
                k_max: self.k_max(),
            })
        } else {
            Ok(k - 1)
        }
    }

    pub fn scale(&self, k: usize) -> Result<S> {
        let i = self.check_k(k)?;
        Ok(self.scale_at(i))
    }

    fn scale_at(&self, i: usize) -> S {
        let s = self.max[i] - self.min[i];
        if s < S::from_real(DEGENERATE_EPS) {
            S::one()
        } else {
            s
        }
    }

    pub fn apply(&self, v: S, k: usize) -> Result<S> {
        let i = self.check_k(k)?;
        Ok((v - self.min[i]) / self.scale_at(i))
    }

    pub fn invert(&self, t: S, k: usize) -> Result<S> {
        let i = self.check_k(k)?;
        Ok(t * self.scale_at(i) + self.min[i])
    }
}

pub fn kdist_norm_fit(table: &KDistTable) -> KDistNormParams {
    let k_max = table.k_max();
    let mut min = vec![Real::INFINITY; k_max];
    let mut max = vec![Real::NEG_INFINITY; k_max];
    for p in 0..table.n() {
        let row = table.row(p);
        for i in 0..k_max {
            min[i] = min[i].min(row[i]);
            max[i] = max[i].max(row[i]);
        }
    }
    KDistNormParams { min, max }
}

/// Normalizes the whole table into the `n x k_max` training-target matrix.
pub fn kdist_norm_apply_table(
    params: &KDistNormParams,
    table: &KDistTable,
) -> Result<Array2<Real>> {
    if params.k_max() != table.k_max() {
        return Err(Error::ShapeMismatch(format!(
            "normalizer has k_max {}, table has {}",
            params.k_max(),
            table.k_max()
        )));
    }
    let mut out = Array2::zeros((table.n(), table.k_max()));
    for p in 0..table.n() {
        let row = table.row(p);
        for i in 0..table.k_max() {
            out[(p, i)] = params.apply(row[i], i + 1)?;
        }
    }
    Ok(out)
}
