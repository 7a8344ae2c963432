//! Per-point log-log-linear k-distance filter, the comparison baseline.
//!
//! For each database point the k-distance curve is approximated by a
//! straight line in `(ln k, ln kdist)` space: an ordinary least-squares fit
//! shifted up by the largest positive residual for the upper bound and down
//! by the largest negative residual for the lower bound. That is four
//! stored scalars per point — two intercepts sharing one fitted slope,
//! stored as two `(slope, intercept)` pairs for uniform accounting.
//!
//! The shifted lines are conservative in exact arithmetic; the fit then
//! nudges the intercepts outward by last-place increments until the
//! *evaluated* `exp(slope·ln k + intercept)` brackets every raw training
//! value, so conservativeness also holds bit-for-bit at query time.
//!
//! Rows that contain an exact zero distance (duplicate points) cannot be
//! lower-bounded by any exponential, which is positive everywhere; such a
//! row gets a lower intercept low enough that `exp` underflows to exactly
//! zero at every `k ≤ k_max` — maximally conservative and still four
//! parameters.

use serde::{Deserialize, Serialize};

use crate::bounds::{restore_monotone_lb, restore_monotone_ub};
use crate::error::{Error, Result};
use crate::table::KDistTable;
use crate::Real;

/// Distances below this are floored before taking logarithms.
pub const LN_FLOOR: Real = 1e-12;

/// Largest argument for which `exp` is guaranteed to underflow to 0.
const EXP_UNDERFLOW: Real = -746.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopLine {
    pub slope_lo: Real,
    pub icept_lo: Real,
    pub slope_hi: Real,
    pub icept_hi: Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopModel {
    pub(crate) lines: Vec<CopLine>,
    k_max: usize,
    /// Apply monotonicity restoration at evaluation time. Off by default:
    /// the baseline as described uses the raw lines.
    pub restore_monotone: bool,
}

/// Ordinary least squares of `ys` on `xs`; degenerate spread falls back to
/// the horizontal line through the mean.
pub(crate) fn ols(xs: &[Real], ys: &[Real]) -> (Real, Real) {
    let m = xs.len() as Real;
    let xm = xs.iter().sum::<Real>() / m;
    let ym = ys.iter().sum::<Real>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, ym - slope * xm)
}

/// Pure least-squares-plus-extreme-shift lines, before floating-point
/// calibration. On an exact power-law row, slopes/intercepts/shifts are
/// exact because OLS divides identical sums.
pub(crate) fn fit_lines(table: &KDistTable) -> Vec<CopLine> {
    let k_max = table.k_max();
    let xs: Vec<Real> = (1..=k_max).map(|k| (k as Real).ln()).collect();
    let mut ys = vec![0.0; k_max];
    (0..table.n())
        .map(|p| {
            let row = table.row(p);
            for (y, &v) in ys.iter_mut().zip(row) {
                *y = v.max(LN_FLOOR).ln();
            }
            let (slope, icept) = ols(&xs, &ys);
            let mut up = 0.0_f64;
            let mut down = 0.0_f64;
            for (&x, &y) in xs.iter().zip(&ys) {
                let r = y - (slope * x + icept);
                up = up.max(r);
                down = down.min(r);
            }
            CopLine {
                slope_lo: slope,
                icept_lo: icept + down,
                slope_hi: slope,
                icept_hi: icept + up,
            }
        })
        .collect()
}

fn eval_line(slope: Real, icept: Real, k: usize) -> Real {
    (slope * (k as Real).ln() + icept).exp()
}

/// Fits the baseline filter on a k-distance table. The returned model is
/// conservative on every training cell under its own evaluation.
pub fn fit_cop(table: &KDistTable) -> Result<CopModel> {
    let k_max = table.k_max();
    let mut lines = fit_lines(table);
    for (p, line) in lines.iter_mut().enumerate() {
        let row = table.row(p);
        if row.iter().any(|&v| v <= 0.0) {
            // No positive exponential sits below zero; underflow the whole
            // lower line to exact zeros instead.
            let reach = line.slope_lo.abs() * (k_max as Real).ln().max(1.0);
            line.icept_lo = EXP_UNDERFLOW - reach - 1.0;
        }
        // A violation can come from `exp` rounding alone, in which case the
        // measurable log-space deficit is zero; the doubling step ensures
        // progress anyway and stays negligible (it starts at one epsilon of
        // relative change in the exponentiated value).
        let mut converged = false;
        let mut lo_step = f64::EPSILON;
        let mut hi_step = f64::EPSILON;
        'cal: for _ in 0..64 {
            let mut lo_viol = false;
            let mut hi_viol = false;
            let mut lo_deficit = 0.0_f64;
            let mut hi_deficit = 0.0_f64;
            for (i, &truth) in row.iter().enumerate() {
                let k = i + 1;
                let lb = eval_line(line.slope_lo, line.icept_lo, k);
                let ub = eval_line(line.slope_hi, line.icept_hi, k);
                let target = truth.max(LN_FLOOR).ln();
                if lb > truth {
                    lo_viol = true;
                    lo_deficit =
                        lo_deficit.max(line.slope_lo * (k as Real).ln() + line.icept_lo - target);
                }
                if ub < truth {
                    hi_viol = true;
                    hi_deficit =
                        hi_deficit.max(target - (line.slope_hi * (k as Real).ln() + line.icept_hi));
                }
            }
            if !lo_viol && !hi_viol {
                converged = true;
                break 'cal;
            }
            if lo_viol {
                line.icept_lo -= lo_deficit.max(0.0) + lo_step;
                lo_step *= 2.0;
            }
            if hi_viol {
                line.icept_hi += hi_deficit.max(0.0) + hi_step;
                hi_step *= 2.0;
            }
        }
        if !converged {
            return Err(Error::Numeric("baseline line calibration did not converge"));
        }
    }
    Ok(CopModel {
        lines,
        k_max,
        restore_monotone: false,
    })
}

impl CopModel {
    pub fn n(&self) -> usize {
        self.lines.len()
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Exactly four stored scalars per database point.
    pub fn param_count(&self) -> usize {
        4 * self.lines.len()
    }

    pub fn lines(&self) -> &[CopLine] {
        &self.lines
    }

    pub(crate) fn from_parts(lines: Vec<CopLine>, k_max: usize, restore_monotone: bool) -> Self {
        CopModel {
            lines,
            k_max,
            restore_monotone,
        }
    }

    /// Evaluates the full bound row for point `p`, applying monotonicity
    /// restoration when the flag is set.
    pub fn bounds_row(&self, p: usize) -> (Vec<Real>, Vec<Real>) {
        let line = &self.lines[p];
        let mut lb = Vec::with_capacity(self.k_max);
        let mut ub = Vec::with_capacity(self.k_max);
        for k in 1..=self.k_max {
            lb.push(eval_line(line.slope_lo, line.icept_lo, k).max(0.0));
            ub.push(eval_line(line.slope_hi, line.icept_hi, k).max(0.0));
        }
        if self.restore_monotone {
            restore_monotone_lb(&mut lb);
            restore_monotone_ub(&mut ub);
        }
        (lb, ub)
    }
}

/// `(lb, ub)` for point `p` at `k` (1-based).
pub fn cop_bounds(model: &CopModel, p: usize, k: usize) -> Result<(Real, Real)> {
    if k == 0 || k > model.k_max {
        return Err(Error::KOutOfRange {
            k,
            k_max: model.k_max,
        });
    }
    let (lb, ub) = model.bounds_row(p);
    Ok((lb[k - 1], ub[k - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table_of(rows: Vec<Vec<Real>>) -> KDistTable {
        let k_max = rows[0].len();
        let flat: Vec<Real> = rows.iter().flatten().copied().collect();
        KDistTable::new(Array2::from_shape_vec((rows.len(), k_max), flat).unwrap()).unwrap()
    }

    #[test]
    fn exact_power_law_yields_identity_line_with_zero_shifts() {
        let table = table_of(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let lines = fit_lines(&table);
        assert_eq!(lines[0].slope_lo, 1.0);
        assert_eq!(lines[0].slope_hi, 1.0);
        assert_eq!(lines[0].icept_lo, 0.0);
        assert_eq!(lines[0].icept_hi, 0.0);
    }

    #[test]
    fn power_law_bounds_are_tight_at_k_3() {
        let table = table_of(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let model = fit_cop(&table).unwrap();
        let (lb, ub) = cop_bounds(&model, 0, 3).unwrap();
        assert!(lb <= 3.0 && 3.0 <= ub);
        assert!((lb - 3.0).abs() < 1e-12 && (ub - 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_row_gives_horizontal_line_through_ln_c() {
        let c = 2.5_f64;
        let table = table_of(vec![vec![c; 4]]);
        let lines = fit_lines(&table);
        assert_eq!(lines[0].slope_lo, 0.0);
        assert_eq!(lines[0].icept_lo, c.ln());
        assert_eq!(lines[0].icept_hi, c.ln());
        let model = fit_cop(&table).unwrap();
        for k in 1..=4 {
            let (lb, ub) = cop_bounds(&model, 0, k).unwrap();
            assert!(lb <= c && c <= ub);
            assert!((ub - lb).abs() < 1e-12);
        }
    }

    #[test]
    fn row_1234_is_bracketed_everywhere() {
        let table = table_of(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let model = fit_cop(&table).unwrap();
        for k in 1..=4 {
            let (lb, ub) = cop_bounds(&model, 0, k).unwrap();
            let truth = table.get(0, k).unwrap();
            assert!(lb <= truth && truth <= ub, "k={k}: {lb} {truth} {ub}");
        }
    }

    #[test]
    fn conservative_on_random_monotone_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let n = 30;
            let k_max = 10;
            let rows: Vec<Vec<Real>> = (0..n)
                .map(|_| {
                    let mut v = 0.0;
                    (0..k_max)
                        .map(|_| {
                            v += rng.gen::<Real>() * 0.3;
                            v
                        })
                        .collect()
                })
                .collect();
            let table = table_of(rows);
            let model = fit_cop(&table).unwrap();
            for p in 0..n {
                for k in 1..=k_max {
                    let (lb, ub) = cop_bounds(&model, p, k).unwrap();
                    let truth = table.get(p, k).unwrap();
                    assert!(lb <= truth && truth <= ub, "p={p} k={k}: {lb} {truth} {ub}");
                }
            }
        }
    }

    #[test]
    fn zero_distance_rows_get_zero_lower_bounds() {
        // First two k-distances are exactly zero, as with duplicate points.
        let table = table_of(vec![vec![0.0, 0.0, 1.5, 2.0], vec![0.5, 1.0, 1.5, 2.0]]);
        let model = fit_cop(&table).unwrap();
        for k in 1..=4 {
            let (lb, ub) = cop_bounds(&model, 0, k).unwrap();
            let truth = table.get(0, k).unwrap();
            assert_eq!(lb, 0.0);
            assert!(ub >= truth);
        }
        // The clean row is unaffected.
        let (lb, _) = cop_bounds(&model, 1, 4).unwrap();
        assert!(lb > 0.0);
    }

    #[test]
    fn param_count_is_four_per_point() {
        let table = table_of(vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![1.0, 1.0]]);
        let model = fit_cop(&table).unwrap();
        assert_eq!(model.param_count(), 12);
    }

    #[test]
    fn out_of_range_k_is_rejected() {
        let table = table_of(vec![vec![1.0, 2.0]]);
        let model = fit_cop(&table).unwrap();
        assert!(matches!(
            cop_bounds(&model, 0, 3),
            Err(Error::KOutOfRange { k: 3, k_max: 2 })
        ));
        assert!(matches!(
            cop_bounds(&model, 0, 0),
            Err(Error::KOutOfRange { .. })
        ));
    }

    #[test]
    fn monotone_restoration_tightens_without_breaking_conservativeness() {
        let table = table_of(vec![vec![1.0, 1.1, 5.0, 5.05], vec![0.2, 2.0, 2.1, 9.0]]);
        let plain = fit_cop(&table).unwrap();
        let mut restored = plain.clone();
        restored.restore_monotone = true;
        for p in 0..2 {
            let (lp, up) = plain.bounds_row(p);
            let (lr, ur) = restored.bounds_row(p);
            for k in 1..=4 {
                let truth = table.get(p, k).unwrap();
                assert!(lr[k - 1] <= truth && truth <= ur[k - 1]);
                assert!(lr[k - 1] >= lp[k - 1] && ur[k - 1] <= up[k - 1]);
                if k > 1 {
                    assert!(lr[k - 1] >= lr[k - 2] && ur[k - 1] >= ur[k - 2]);
                }
            }
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let table = table_of(vec![vec![0.3, 0.9, 1.2, 4.0], vec![1.0, 1.5, 1.6, 1.7]]);
        let a = fit_cop(&table).unwrap();
        let b = fit_cop(&table).unwrap();
        assert_eq!(a, b);
    }
}
