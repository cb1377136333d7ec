//! Calibration of a whole skin from a uniform-pressure sweep.
//!
//! For every taxel: take its readings across the sweep, drop it if the
//! reading barely moves, otherwise average readings taken at the same
//! pressure, normalize and fit the pressure polynomial.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{self, FitPoint};
use crate::types::{
    CalibrationDataset, ExclusionReason, RawCount, SkinModel, TaxelId, TaxelModel, TaxelState,
    NUM_COEFFS,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationConfig {
    /// Taxels whose `c_max - c_min` is below this many counts are excluded.
    pub amplitude_threshold: u8,
    /// Minimum change from baseline, in counts, for a taxel to count as touched.
    pub activation_threshold: u8,
    /// Width in Pa of the bins used to merge readings at the same pressure.
    pub pressure_bin_width: f64,
    /// Minimum number of averaged points required to fit a taxel.
    pub min_points: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            amplitude_threshold: 10,
            activation_threshold: 2,
            pressure_bin_width: 100.0,
            min_points: NUM_COEFFS,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pressure_bin_width.is_finite() && self.pressure_bin_width > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "pressure bin width must be positive, got {} Pa",
                self.pressure_bin_width
            )));
        }
        if self.min_points < NUM_COEFFS {
            return Err(Error::InvalidConfig(format!(
                "min_points must be at least {NUM_COEFFS}, got {}",
                self.min_points
            )));
        }
        Ok(())
    }
}

/// Readings of one taxel across the sweep, merged per pressure bin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AveragedPoint {
    /// Mean pressure of the bin's samples, Pa.
    pub pressure: f64,
    pub mean_raw: f64,
}

/// The `(pressure, raw)` pairs of one taxel, in sample order.
pub fn taxel_series(dataset: &CalibrationDataset, taxel: TaxelId) -> Result<Vec<(f64, RawCount)>> {
    dataset.geometry().check_taxel(taxel)?;
    Ok(dataset
        .samples()
        .iter()
        .map(|s| (s.pressure, s.frame.get(taxel)))
        .collect())
}

/// Merges samples whose pressures share a bin `floor(P / bin_width)`.
///
/// Output is sorted by pressure; each entry carries the bin's mean pressure
/// and mean raw count.
pub fn average_duplicates(series: &[(f64, RawCount)], bin_width: f64) -> Vec<AveragedPoint> {
    bin_means(series.iter().map(|&(p, r)| (p, r.as_f64())), bin_width)
}

/// Bin-wise means of `(pressure, value)` pairs, sorted by pressure.
pub(crate) fn bin_means(
    pairs: impl Iterator<Item = (f64, f64)>,
    bin_width: f64,
) -> Vec<AveragedPoint> {
    let mut bins: BTreeMap<i64, (f64, f64, usize)> = BTreeMap::new();
    for (pressure, value) in pairs {
        let key = (pressure / bin_width).floor() as i64;
        let entry = bins.entry(key).or_insert((0.0, 0.0, 0));
        entry.0 += pressure;
        entry.1 += value;
        entry.2 += 1;
    }
    bins.into_values()
        .map(|(p, c, n)| AveragedPoint {
            pressure: p / n as f64,
            mean_raw: c / n as f64,
        })
        .collect()
}

/// Smallest and largest raw count in the series.
pub fn amplitude(series: &[(f64, RawCount)]) -> Result<(RawCount, RawCount)> {
    let mut raws = series.iter().map(|&(_, r)| r);
    let first = raws.next().ok_or(Error::EmptyData)?;
    Ok(raws.fold((first, first), |(lo, hi), r| (lo.min(r), hi.max(r))))
}

/// Normalized fit points for one taxel given its calibrated range.
pub fn fit_points(
    averaged: &[AveragedPoint],
    c_min: RawCount,
    c_max: RawCount,
) -> Result<Vec<FitPoint>> {
    averaged
        .iter()
        .map(|p| {
            Ok(FitPoint::new(
                fit::normalize(p.mean_raw, c_min.as_f64(), c_max.as_f64())?,
                p.pressure,
            ))
        })
        .collect()
}

fn calibrate_taxel(
    dataset: &CalibrationDataset,
    taxel: TaxelId,
    config: &CalibrationConfig,
) -> Result<TaxelModel> {
    let series = taxel_series(dataset, taxel)?;
    let (c_min, c_max) = amplitude(&series)?;
    let excluded = |reason| TaxelModel {
        taxel,
        c_min,
        c_max,
        state: TaxelState::Excluded(reason),
    };

    if c_max.get() - c_min.get() < config.amplitude_threshold || c_min == c_max {
        return Ok(excluded(ExclusionReason::LowAmplitude));
    }

    let averaged = average_duplicates(&series, config.pressure_bin_width);
    if averaged.len() < config.min_points {
        return Ok(excluded(ExclusionReason::RankDeficient));
    }
    let points = fit_points(&averaged, c_min, c_max)?;
    match fit::fit_polynomial(&points) {
        Ok(f) => Ok(TaxelModel {
            taxel,
            c_min,
            c_max,
            state: TaxelState::Fitted {
                coeffs: f.coeffs,
                residual_rms: f.residual_rms,
            },
        }),
        Err(Error::RankDeficient { .. }) => Ok(excluded(ExclusionReason::RankDeficient)),
        Err(e) => Err(e),
    }
}

/// Fits every taxel of the dataset. Taxels are independent and fitted in parallel.
pub fn calibrate(dataset: &CalibrationDataset, config: &CalibrationConfig) -> Result<SkinModel> {
    config.validate()?;
    if dataset.len() < config.min_points {
        return Err(Error::InsufficientData {
            required: config.min_points,
            available: dataset.len(),
        });
    }
    let geometry = *dataset.geometry();
    let taxels = (0..geometry.n_taxels())
        .into_par_iter()
        .map(|i| calibrate_taxel(dataset, TaxelId(i), config))
        .collect::<Result<Vec<_>>>()?;

    if taxels.iter().all(TaxelModel::is_excluded) {
        return Err(Error::EmptyModel);
    }
    SkinModel::new(
        geometry,
        taxels,
        config.activation_threshold,
        config.amplitude_threshold,
    )
}
