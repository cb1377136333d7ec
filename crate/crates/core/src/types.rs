//! Domain vocabulary shared by the calibration, estimation and simulation code.
//!
//! Pressures are held in pascals everywhere inside the crate. File formats
//! use kilopascals and convert at the boundary (see [`crate::io`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::fit::PolyCoeffs;

/// Number of parameters of the per-taxel pressure model.
pub const NUM_COEFFS: usize = 6;

/// Ordinal of a taxel in a skin, dense in `0..n_taxels`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaxelId(pub usize);

impl TaxelId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for TaxelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One 8-bit ADC reading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RawCount(pub u8);

impl RawCount {
    pub const MAX: RawCount = RawCount(u8::MAX);

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }

    /// Rounds and clamps a real-valued count into the ADC range.
    pub fn quantize(value: f64) -> RawCount {
        if value.is_nan() {
            return RawCount(0);
        }
        RawCount(value.round().clamp(0.0, 255.0) as u8)
    }

    /// Absolute difference in counts.
    pub fn abs_diff(self, other: RawCount) -> u8 {
        self.0.abs_diff(other.0)
    }
}

impl TryFrom<i64> for RawCount {
    type Error = i64;

    fn try_from(value: i64) -> Result<Self, i64> {
        u8::try_from(value).map(RawCount).map_err(|_| value)
    }
}

impl fmt::Display for RawCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Layout of a skin patch: equal-area taxels grouped into triangles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkinGeometry {
    n_triangles: usize,
    taxels_per_triangle: usize,
    taxel_area: f64,
}

impl SkinGeometry {
    pub fn new(n_triangles: usize, taxels_per_triangle: usize, taxel_area: f64) -> Result<Self> {
        if n_triangles == 0 || taxels_per_triangle == 0 {
            return Err(Error::InvalidGeometry(format!(
                "need at least one triangle and one taxel per triangle, got {n_triangles} x {taxels_per_triangle}"
            )));
        }
        if !(taxel_area.is_finite() && taxel_area > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "taxel area must be positive, got {taxel_area} m^2"
            )));
        }
        Ok(SkinGeometry {
            n_triangles,
            taxels_per_triangle,
            taxel_area,
        })
    }

    /// Geometry for a flat list of `n_taxels`. Uses `taxels_per_triangle`
    /// when it divides the count, otherwise treats the skin as one triangle.
    pub fn from_taxel_count(
        n_taxels: usize,
        taxels_per_triangle: usize,
        taxel_area: f64,
    ) -> Result<Self> {
        if taxels_per_triangle > 0 && n_taxels.is_multiple_of(taxels_per_triangle) && n_taxels > 0 {
            Self::new(
                n_taxels / taxels_per_triangle,
                taxels_per_triangle,
                taxel_area,
            )
        } else {
            Self::new(1, n_taxels, taxel_area)
        }
    }

    pub fn n_taxels(&self) -> usize {
        self.n_triangles * self.taxels_per_triangle
    }

    pub fn n_triangles(&self) -> usize {
        self.n_triangles
    }

    pub fn taxels_per_triangle(&self) -> usize {
        self.taxels_per_triangle
    }

    /// Area of a single taxel in m².
    pub fn taxel_area(&self) -> f64 {
        self.taxel_area
    }

    /// Same layout with a different taxel area.
    pub fn with_taxel_area(&self, taxel_area: f64) -> Result<Self> {
        Self::new(self.n_triangles, self.taxels_per_triangle, taxel_area)
    }

    pub fn taxel_ids(&self) -> impl Iterator<Item = TaxelId> {
        (0..self.n_taxels()).map(TaxelId)
    }

    pub fn check_taxel(&self, taxel: TaxelId) -> Result<()> {
        if taxel.0 < self.n_taxels() {
            Ok(())
        } else {
            Err(Error::TaxelIndex {
                taxel: taxel.0,
                n_taxels: self.n_taxels(),
            })
        }
    }

    pub fn check_frame_len(&self, len: usize) -> Result<()> {
        if len == self.n_taxels() {
            Ok(())
        } else {
            Err(Error::FrameShape {
                expected: self.n_taxels(),
                got: len,
            })
        }
    }
}

/// One snapshot of raw counts, one entry per taxel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CapacitanceFrame(Vec<RawCount>);

impl CapacitanceFrame {
    pub fn new(counts: Vec<RawCount>) -> Self {
        CapacitanceFrame(counts)
    }

    pub fn from_u8(counts: &[u8]) -> Self {
        CapacitanceFrame(counts.iter().copied().map(RawCount).collect())
    }

    pub fn counts(&self) -> &[RawCount] {
        &self.0
    }

    pub fn counts_mut(&mut self) -> &mut [RawCount] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, taxel: TaxelId) -> RawCount {
        self.0[taxel.0]
    }

    pub fn into_inner(self) -> Vec<RawCount> {
        self.0
    }
}

/// Rest-state frame captured with nothing touching the skin.
pub type BaselineFrame = CapacitanceFrame;

/// One acquisition: the differential pressure in the bag and the frame read at it.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationSample {
    pub pressure: f64,
    pub frame: CapacitanceFrame,
}

/// A loading-branch pressure sweep over the whole skin.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationDataset {
    geometry: SkinGeometry,
    samples: Vec<CalibrationSample>,
}

impl CalibrationDataset {
    /// Rejects frames of the wrong length, negative pressures, and any
    /// decrease in pressure between consecutive samples.
    pub fn new(geometry: SkinGeometry, samples: Vec<CalibrationSample>) -> Result<Self> {
        let mut previous = 0.0_f64;
        for (index, sample) in samples.iter().enumerate() {
            geometry.check_frame_len(sample.frame.len())?;
            if !(sample.pressure.is_finite() && sample.pressure >= 0.0) {
                return Err(Error::InvalidPressure {
                    index,
                    pressure: sample.pressure,
                });
            }
            if index > 0 && sample.pressure < previous {
                return Err(Error::NonMonotonePressure {
                    index,
                    previous,
                    pressure: sample.pressure,
                });
            }
            previous = sample.pressure;
        }
        Ok(CalibrationDataset { geometry, samples })
    }

    pub fn geometry(&self) -> &SkinGeometry {
        &self.geometry
    }

    pub fn samples(&self) -> &[CalibrationSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Why a taxel was left out of the calibrated model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExclusionReason {
    /// `c_max - c_min` fell below the amplitude threshold.
    LowAmplitude,
    /// Too few distinct readings to determine the polynomial.
    RankDeficient,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::LowAmplitude => "low-amplitude",
            ExclusionReason::RankDeficient => "rank-deficient",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "low-amplitude" => Some(ExclusionReason::LowAmplitude),
            "rank-deficient" => Some(ExclusionReason::RankDeficient),
            _ => None,
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TaxelState {
    /// Polynomial in normalized capacitance, pressure in Pa.
    Fitted {
        coeffs: PolyCoeffs,
        residual_rms: f64,
    },
    Excluded(ExclusionReason),
}

/// Calibrated pressure model of one taxel.
#[derive(Clone, Debug, PartialEq)]
pub struct TaxelModel {
    pub taxel: TaxelId,
    pub c_min: RawCount,
    pub c_max: RawCount,
    pub state: TaxelState,
}

impl TaxelModel {
    pub fn is_excluded(&self) -> bool {
        matches!(self.state, TaxelState::Excluded(_))
    }

    pub fn coeffs(&self) -> Option<&PolyCoeffs> {
        match &self.state {
            TaxelState::Fitted { coeffs, .. } => Some(coeffs),
            TaxelState::Excluded(_) => None,
        }
    }

    pub fn residual_rms(&self) -> Option<f64> {
        match self.state {
            TaxelState::Fitted { residual_rms, .. } => Some(residual_rms),
            TaxelState::Excluded(_) => None,
        }
    }

    pub fn exclusion(&self) -> Option<ExclusionReason> {
        match self.state {
            TaxelState::Excluded(reason) => Some(reason),
            TaxelState::Fitted { .. } => None,
        }
    }
}

/// The calibrated skin: one [`TaxelModel`] per taxel plus the thresholds used.
#[derive(Clone, Debug, PartialEq)]
pub struct SkinModel {
    geometry: SkinGeometry,
    taxels: Vec<TaxelModel>,
    pub activation_threshold: u8,
    pub amplitude_threshold: u8,
}

impl SkinModel {
    pub fn new(
        geometry: SkinGeometry,
        taxels: Vec<TaxelModel>,
        activation_threshold: u8,
        amplitude_threshold: u8,
    ) -> Result<Self> {
        geometry.check_frame_len(taxels.len())?;
        for (i, t) in taxels.iter().enumerate() {
            if t.taxel.0 != i {
                return Err(Error::InvalidData(format!(
                    "taxel model at position {i} carries id {}",
                    t.taxel
                )));
            }
            if t.c_min > t.c_max {
                return Err(Error::InvalidData(format!(
                    "taxel {i}: c_min {} > c_max {}",
                    t.c_min, t.c_max
                )));
            }
            if let Some(rms) = t.residual_rms() {
                if !(rms.is_finite() && rms >= 0.0) {
                    return Err(Error::InvalidData(format!(
                        "taxel {i}: residual rms {rms} is not a non-negative number"
                    )));
                }
            }
        }
        Ok(SkinModel {
            geometry,
            taxels,
            activation_threshold,
            amplitude_threshold,
        })
    }

    pub fn geometry(&self) -> &SkinGeometry {
        &self.geometry
    }

    pub fn taxels(&self) -> &[TaxelModel] {
        &self.taxels
    }

    pub fn taxel(&self, taxel: TaxelId) -> Result<&TaxelModel> {
        self.geometry.check_taxel(taxel)?;
        Ok(&self.taxels[taxel.0])
    }

    /// Same calibration on a skin whose taxels have a different area.
    pub fn with_taxel_area(&self, taxel_area: f64) -> Result<Self> {
        Ok(SkinModel {
            geometry: self.geometry.with_taxel_area(taxel_area)?,
            ..self.clone()
        })
    }

    pub fn n_fitted(&self) -> usize {
        self.taxels.iter().filter(|t| !t.is_excluded()).count()
    }

    pub fn n_excluded(&self) -> usize {
        self.taxels.len() - self.n_fitted()
    }
}

/// Total normal force over the activated taxels.
#[derive(Clone, Debug, PartialEq)]
pub struct ForceEstimate {
    /// Magnitude along the common skin normal, in N.
    pub total_force: f64,
    pub n_activated: usize,
    /// Pressure in Pa for each activated taxel.
    pub per_taxel_pressure: BTreeMap<TaxelId, f64>,
    /// Activated taxels whose reading lay outside the calibrated range.
    pub clamped: BTreeSet<TaxelId>,
}

impl ForceEstimate {
    pub fn any_clamped(&self) -> bool {
        !self.clamped.is_empty()
    }
}
