//! Total normal force from a frame and a calibrated skin model.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::fit::{evaluate_polynomial, normalize_capacitance};
use crate::types::{BaselineFrame, CapacitanceFrame, ForceEstimate, RawCount, SkinModel, TaxelId};

/// Taxels that are fitted and moved at least `activation_threshold` counts
/// away from the baseline, in either direction.
pub fn activated_taxels(
    frame: &CapacitanceFrame,
    baseline: &BaselineFrame,
    model: &SkinModel,
) -> Result<BTreeSet<TaxelId>> {
    let geometry = model.geometry();
    geometry.check_frame_len(frame.len())?;
    geometry.check_frame_len(baseline.len())?;
    Ok(model
        .taxels()
        .iter()
        .filter(|t| !t.is_excluded())
        .filter(|t| {
            frame.get(t.taxel).abs_diff(baseline.get(t.taxel)) >= model.activation_threshold
        })
        .map(|t| t.taxel)
        .collect())
}

/// Pressure in Pa read by one taxel, and whether the reading had to be
/// clamped into the calibrated range.
///
/// Readings outside `[c_min, c_max]` are evaluated at the nearest bound
/// rather than extrapolated, and negative predictions are reported as zero.
pub fn taxel_pressure(model: &SkinModel, taxel: TaxelId, raw: RawCount) -> Result<(f64, bool)> {
    let t = model.taxel(taxel)?;
    let coeffs = t.coeffs().ok_or(Error::ExcludedTaxel(taxel.index()))?;
    let clamped = raw < t.c_min || raw > t.c_max;
    let c = normalize_capacitance(raw.clamp(t.c_min, t.c_max), t.c_min, t.c_max)?;
    Ok((evaluate_polynomial(coeffs, c).max(0.0), clamped))
}

/// Per-taxel mean of rest frames, rounded to the nearest count.
pub fn baseline_from_frames(frames: &[CapacitanceFrame]) -> Result<BaselineFrame> {
    let first = frames.first().ok_or(Error::EmptyData)?;
    let n = first.len();
    let mut sums = vec![0.0_f64; n];
    for frame in frames {
        if frame.len() != n {
            return Err(Error::FrameShape {
                expected: n,
                got: frame.len(),
            });
        }
        for (sum, c) in sums.iter_mut().zip(frame.counts()) {
            *sum += c.as_f64();
        }
    }
    let k = frames.len() as f64;
    Ok(CapacitanceFrame::new(
        sums.into_iter()
            .map(|s| RawCount::quantize(s / k))
            .collect(),
    ))
}

pub fn estimate_force(
    frame: &CapacitanceFrame,
    baseline: &BaselineFrame,
    model: &SkinModel,
) -> Result<ForceEstimate> {
    let active = activated_taxels(frame, baseline, model)?;
    let mut per_taxel_pressure = BTreeMap::new();
    let mut clamped = BTreeSet::new();
    for taxel in active {
        let (pressure, was_clamped) = taxel_pressure(model, taxel, frame.get(taxel))?;
        if was_clamped {
            clamped.insert(taxel);
        }
        per_taxel_pressure.insert(taxel, pressure);
    }
    // Folded from +0.0: an empty float `sum()` yields -0.0.
    let pressure_sum = per_taxel_pressure.values().fold(0.0, |acc, p| acc + p);
    Ok(ForceEstimate {
        total_force: model.geometry().taxel_area() * pressure_sum,
        n_activated: per_taxel_pressure.len(),
        per_taxel_pressure,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::PolyCoeffs;
    use crate::types::{ExclusionReason, SkinGeometry, TaxelModel, TaxelState};

    /// Three taxels with linear models `P = 1000 (c + 1)` over [10, 110];
    /// taxel 2 is excluded.
    fn model() -> SkinModel {
        let g = SkinGeometry::new(1, 3, 1.0e-4).unwrap();
        let fitted = |i| TaxelModel {
            taxel: TaxelId(i),
            c_min: RawCount(10),
            c_max: RawCount(110),
            state: TaxelState::Fitted {
                coeffs: PolyCoeffs([1000.0, 1000.0, 0.0, 0.0, 0.0, 0.0]),
                residual_rms: 5.0,
            },
        };
        let taxels = vec![
            fitted(0),
            fitted(1),
            TaxelModel {
                taxel: TaxelId(2),
                c_min: RawCount(10),
                c_max: RawCount(12),
                state: TaxelState::Excluded(ExclusionReason::LowAmplitude),
            },
        ];
        SkinModel::new(g, taxels, 3, 10).unwrap()
    }

    #[test]
    fn baseline_is_rounded_mean() {
        let frames = [
            CapacitanceFrame::from_u8(&[10, 20, 0]),
            CapacitanceFrame::from_u8(&[11, 20, 1]),
            CapacitanceFrame::from_u8(&[11, 23, 1]),
        ];
        assert_eq!(
            baseline_from_frames(&frames).unwrap(),
            CapacitanceFrame::from_u8(&[11, 21, 1])
        );
        assert!(matches!(baseline_from_frames(&[]), Err(Error::EmptyData)));
        let ragged = [
            CapacitanceFrame::from_u8(&[1, 2]),
            CapacitanceFrame::from_u8(&[1]),
        ];
        assert!(baseline_from_frames(&ragged).is_err());
    }

    #[test]
    fn nothing_activated_at_baseline() {
        let m = model();
        let base = CapacitanceFrame::from_u8(&[10, 10, 10]);
        assert!(activated_taxels(&base, &base, &m).unwrap().is_empty());
        let est = estimate_force(&base, &base, &m).unwrap();
        assert_eq!(est.total_force, 0.0);
        assert_eq!(est.n_activated, 0);
    }

    #[test]
    fn activation_boundary_is_inclusive() {
        let m = model();
        let base = CapacitanceFrame::from_u8(&[10, 10, 10]);
        let frame = CapacitanceFrame::from_u8(&[13, 12, 10]);
        let active = activated_taxels(&frame, &base, &m).unwrap();
        assert_eq!(active.into_iter().collect::<Vec<_>>(), vec![TaxelId(0)]);
    }

    #[test]
    fn excluded_taxels_never_activate() {
        let m = model();
        let base = CapacitanceFrame::from_u8(&[10, 10, 10]);
        let frame = CapacitanceFrame::from_u8(&[10, 10, 200]);
        assert!(activated_taxels(&frame, &base, &m).unwrap().is_empty());
        assert!(matches!(
            taxel_pressure(&m, TaxelId(2), RawCount(50)),
            Err(Error::ExcludedTaxel(2))
        ));
    }

    #[test]
    fn frame_shape_is_checked() {
        let m = model();
        let base = CapacitanceFrame::from_u8(&[10, 10, 10]);
        let short = CapacitanceFrame::from_u8(&[10, 10]);
        assert!(matches!(
            estimate_force(&short, &base, &m),
            Err(Error::FrameShape {
                expected: 3,
                got: 2
            })
        ));
        assert!(activated_taxels(&base, &short, &m).is_err());
    }

    #[test]
    fn single_taxel_force_is_pressure_times_area() {
        let m = model();
        let base = CapacitanceFrame::from_u8(&[10, 10, 10]);
        let frame = CapacitanceFrame::from_u8(&[60, 10, 10]);
        let est = estimate_force(&frame, &base, &m).unwrap();
        // raw 60 normalizes to 0, so P = 1000 Pa.
        assert_eq!(est.per_taxel_pressure[&TaxelId(0)], 1000.0);
        assert_eq!(est.total_force, 1000.0 * 1.0e-4);
        assert_eq!(est.n_activated, 1);
        assert!(!est.any_clamped());
    }

    #[test]
    fn out_of_range_reading_is_clamped() {
        let m = model();
        let (at_max, c1) = taxel_pressure(&m, TaxelId(0), RawCount(110)).unwrap();
        let (beyond, c2) = taxel_pressure(&m, TaxelId(0), RawCount(130)).unwrap();
        assert_eq!(at_max, beyond);
        assert!(!c1 && c2);
        let (below, c3) = taxel_pressure(&m, TaxelId(0), RawCount(2)).unwrap();
        assert_eq!(below, 0.0);
        assert!(c3);
    }

    #[test]
    fn negative_predictions_clamp_to_zero() {
        let g = SkinGeometry::new(1, 1, 1.0).unwrap();
        let m = SkinModel::new(
            g,
            vec![TaxelModel {
                taxel: TaxelId(0),
                c_min: RawCount(0),
                c_max: RawCount(100),
                state: TaxelState::Fitted {
                    coeffs: PolyCoeffs([-50.0, 10.0, 0.0, 0.0, 0.0, 0.0]),
                    residual_rms: 1.0,
                },
            }],
            1,
            10,
        )
        .unwrap();
        assert_eq!(
            taxel_pressure(&m, TaxelId(0), RawCount(0)).unwrap(),
            (0.0, false)
        );
    }
}
