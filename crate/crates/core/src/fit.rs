//! Degree-5 least-squares fit of pressure against normalized capacitance.
//!
//! Raw counts are first mapped affinely onto `[-1, 1]` so the powers in the
//! regressor stay O(1); the problem `min ‖p - A π‖²` is then solved with a
//! Householder QR factorization of the tall regressor matrix `A`.

use crate::error::{Error, Result};
use crate::types::{RawCount, NUM_COEFFS};

/// Relative size below which a diagonal entry of `R` counts as zero.
const RANK_TOL: f64 = 1e-12;

/// A sample for the fit: normalized capacitance and the pressure (Pa) at it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitPoint {
    pub c_norm: f64,
    pub pressure: f64,
}

impl FitPoint {
    pub fn new(c_norm: f64, pressure: f64) -> Self {
        FitPoint { c_norm, pressure }
    }
}

/// Polynomial coefficients, constant term first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyCoeffs(pub [f64; NUM_COEFFS]);

impl PolyCoeffs {
    pub fn values(&self) -> &[f64; NUM_COEFFS] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

/// Maps `raw` from `[c_min, c_max]` onto `[-1, 1]`, clamping outside values.
pub fn normalize(raw: f64, c_min: f64, c_max: f64) -> Result<f64> {
    // Written as a negated comparison so NaN bounds are rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(c_min < c_max) {
        return Err(Error::DegenerateRange { c_min, c_max });
    }
    let c = 2.0 * (raw - c_min) / (c_max - c_min) - 1.0;
    Ok(c.clamp(-1.0, 1.0))
}

/// [`normalize`] for ADC counts.
pub fn normalize_capacitance(raw: RawCount, c_min: RawCount, c_max: RawCount) -> Result<f64> {
    normalize(raw.as_f64(), c_min.as_f64(), c_max.as_f64())
}

/// The row `[1, c, c², c³, c⁴, c⁵]`.
pub fn build_regressor(c_norm: f64) -> [f64; NUM_COEFFS] {
    let mut row = [1.0; NUM_COEFFS];
    for j in 1..NUM_COEFFS {
        row[j] = row[j - 1] * c_norm;
    }
    row
}

/// Evaluates the model as the dot product of the regressor row and the coefficients.
pub fn evaluate_polynomial(coeffs: &PolyCoeffs, c_norm: f64) -> f64 {
    build_regressor(c_norm)
        .iter()
        .zip(coeffs.0.iter())
        .map(|(a, p)| a * p)
        .sum()
}

/// Result of [`fit_polynomial`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyFit {
    pub coeffs: PolyCoeffs,
    /// Root-mean-square residual in Pa.
    pub residual_rms: f64,
}

/// Least-squares fit of a degree-5 polynomial through `points`.
///
/// Needs at least six distinct abscissae; a rank-deficient problem is an
/// error rather than a minimum-norm solution.
#[allow(clippy::needless_range_loop)]
pub fn fit_polynomial(points: &[FitPoint]) -> Result<PolyFit> {
    if let Some(bad) = points
        .iter()
        .find(|p| !(p.c_norm.is_finite() && p.pressure.is_finite()))
    {
        return Err(Error::InvalidData(format!(
            "non-finite fit point (c_norm {}, pressure {})",
            bad.c_norm, bad.pressure
        )));
    }

    let distinct = count_distinct(points.iter().map(|p| p.c_norm));
    if distinct < NUM_COEFFS {
        return Err(Error::RankDeficient {
            distinct,
            required: NUM_COEFFS,
        });
    }

    let m = points.len();
    // Column-major copy of A and the right-hand side.
    let mut a: Vec<[f64; NUM_COEFFS]> = points.iter().map(|p| build_regressor(p.c_norm)).collect();
    let mut b: Vec<f64> = points.iter().map(|p| p.pressure).collect();

    let mut diag = [0.0_f64; NUM_COEFFS];
    for j in 0..NUM_COEFFS {
        let norm = (j..m).map(|i| a[i][j] * a[i][j]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::RankDeficient {
                distinct,
                required: NUM_COEFFS,
            });
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        // v = x - alpha e1, stored in place over column j.
        a[j][j] -= alpha;
        let v_norm_sq: f64 = (j..m).map(|i| a[i][j] * a[i][j]).sum();
        if v_norm_sq > 0.0 {
            for k in j + 1..NUM_COEFFS {
                let dot: f64 = (j..m).map(|i| a[i][j] * a[i][k]).sum();
                let s = 2.0 * dot / v_norm_sq;
                for i in j..m {
                    a[i][k] -= s * a[i][j];
                }
            }
            let dot: f64 = (j..m).map(|i| a[i][j] * b[i]).sum();
            let s = 2.0 * dot / v_norm_sq;
            for i in j..m {
                b[i] -= s * a[i][j];
            }
        }
        diag[j] = alpha;
    }

    let scale = diag.iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
    if diag.iter().any(|d| d.abs() <= RANK_TOL * scale) {
        return Err(Error::RankDeficient {
            distinct,
            required: NUM_COEFFS,
        });
    }

    // Back substitution on R π = Qᵀ b; R's strict upper triangle lives in `a`.
    let mut coeffs = [0.0_f64; NUM_COEFFS];
    for j in (0..NUM_COEFFS).rev() {
        let tail: f64 = (j + 1..NUM_COEFFS).map(|k| a[j][k] * coeffs[k]).sum();
        coeffs[j] = (b[j] - tail) / diag[j];
    }
    let coeffs = PolyCoeffs(coeffs);

    let sum_sq: f64 = points
        .iter()
        .map(|p| {
            let r = p.pressure - evaluate_polynomial(&coeffs, p.c_norm);
            r * r
        })
        .sum();
    let residual_rms = (sum_sq / m as f64).sqrt();

    Ok(PolyFit {
        coeffs,
        residual_rms,
    })
}

fn count_distinct(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}
