//! Synthetic capacitive skin with known ground truth.
//!
//! Each taxel is a parallel-plate capacitor over a compressible dielectric.
//! For small loads the dielectric behaves as a linear spring, `l = P A / k`;
//! as it compresses it hardens and the gap approaches the thickness of the
//! fully compressed layer:
//!
//! ```text
//! g(P) = g_min + (l0 - g_min) * P0 / (P + P0),   P0 = k (l0 - g_min) / A
//! C(P) = ε A / g(P)
//! counts(P) = offset + gain * (C(P) - C(0))
//! ```
//!
//! The count response is monotone and concave in pressure and saturates
//! toward `ε A / g_min`. Readings are the true counts plus Gaussian noise,
//! rounded and clamped to the 8-bit ADC range.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    CalibrationDataset, CalibrationSample, CapacitanceFrame, RawCount, SkinGeometry, TaxelId,
};

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.81;

/// Vacuum permittivity, F/m.
const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Full-scale ADC reading.
const FULL_SCALE: f64 = 255.0;

/// Hidden physical parameters of one simulated taxel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthTaxel {
    /// Small-load stiffness of the dielectric under the taxel, N/m.
    pub stiffness: f64,
    /// Absolute permittivity of the dielectric, F/m.
    pub permittivity: f64,
    /// Electrode gap at rest, m.
    pub rest_gap: f64,
    /// Thickness of the fully compressed dielectric, m.
    pub min_gap: f64,
    /// Counts per pF of capacitance change.
    pub gain: f64,
    /// Counts at zero load.
    pub offset: f64,
    /// Standard deviation of the additive reading noise, counts.
    pub noise_sigma: f64,
    pub dead: bool,
}

impl GroundTruthTaxel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.stiffness > 0.0
            && self.permittivity > 0.0
            && self.min_gap > 0.0
            && self.rest_gap > self.min_gap
            && self.gain >= 0.0
            && (0.0..=FULL_SCALE).contains(&self.offset)
            && self.noise_sigma >= 0.0
            && (!self.dead || self.gain == 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "inconsistent ground-truth taxel {self:?}"
            )))
        }
    }

    /// Pressure scale at which the dielectric is half way to full compression, Pa.
    fn hardening_pressure(&self, area: f64) -> f64 {
        self.stiffness * (self.rest_gap - self.min_gap) / area
    }

    /// Electrode gap under `pressure`, m.
    pub fn gap(&self, pressure: f64, area: f64) -> f64 {
        let p0 = self.hardening_pressure(area);
        self.min_gap + (self.rest_gap - self.min_gap) * p0 / (pressure + p0)
    }

    /// Capacitance under `pressure`, pF.
    pub fn capacitance(&self, pressure: f64, area: f64) -> f64 {
        self.permittivity * area / self.gap(pressure, area) * 1e12
    }
}

/// Noise-free counts for `taxel` under `pressure` (Pa), before quantization.
/// Values beyond full scale saturate at 255.
pub fn true_capacitance_counts(taxel: &GroundTruthTaxel, pressure: f64, area: f64) -> f64 {
    if taxel.dead || taxel.gain == 0.0 {
        return taxel.offset;
    }
    let delta = taxel.capacitance(pressure, area) - taxel.capacitance(0.0, area);
    (taxel.offset + taxel.gain * delta).min(FULL_SCALE)
}

/// Inverse of [`true_capacitance_counts`] for a live taxel: the pressure that
/// produces `counts`. `None` when the value is unreachable (below the offset,
/// at or past saturation of the dielectric, or the taxel is dead).
pub fn pressure_for_counts(taxel: &GroundTruthTaxel, counts: f64, area: f64) -> Option<f64> {
    if taxel.dead || taxel.gain == 0.0 || counts < taxel.offset || counts >= FULL_SCALE {
        return None;
    }
    let capacitance = taxel.capacitance(0.0, area) + (counts - taxel.offset) / taxel.gain;
    let gap = taxel.permittivity * area * 1e12 / capacitance;
    if gap <= taxel.min_gap {
        return None;
    }
    let p0 = taxel.hardening_pressure(area);
    let pressure = p0 * (taxel.rest_gap - taxel.min_gap) / (gap - taxel.min_gap) - p0;
    Some(pressure.max(0.0))
}

/// Population parameters for a simulated skin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_triangles: usize,
    pub taxels_per_triangle: usize,
    /// m².
    pub taxel_area: f64,
    /// Rest counts are drawn uniformly from `[offset_min, offset_max]`.
    pub offset_min: f64,
    pub offset_max: f64,
    /// Gains are chosen so the count rise at `reference_pressure_kpa` is
    /// uniform in `[amplitude_min, amplitude_max]`.
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub reference_pressure_kpa: f64,
    /// Nominal small-load stiffness, N/m.
    pub stiffness: f64,
    /// Relative half-width of the uniform stiffness spread.
    pub stiffness_spread: f64,
    pub relative_permittivity: f64,
    /// m.
    pub rest_gap: f64,
    /// m.
    pub min_gap: f64,
    /// Counts.
    pub noise_sigma: f64,
    /// Fraction of taxels that do not respond to pressure.
    pub dead_fraction: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_triangles: 23,
            taxels_per_triangle: 10,
            taxel_area: 2.0e-5,
            offset_min: 10.0,
            offset_max: 31.0,
            amplitude_min: 40.0,
            amplitude_max: 125.0,
            reference_pressure_kpa: 70.0,
            stiffness: 200.0,
            stiffness_spread: 0.15,
            relative_permittivity: 3.0,
            rest_gap: 2.0e-3,
            min_gap: 0.5e-3,
            noise_sigma: 0.5,
            dead_fraction: 0.05,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        SkinGeometry::new(self.n_triangles, self.taxels_per_triangle, self.taxel_area)?;
        let checks = [
            (
                0.0 <= self.offset_min
                    && self.offset_min <= self.offset_max
                    && self.offset_max <= FULL_SCALE,
                "offsets must satisfy 0 <= offset_min <= offset_max <= 255",
            ),
            (
                0.0 < self.amplitude_min && self.amplitude_min <= self.amplitude_max,
                "amplitudes must satisfy 0 < amplitude_min <= amplitude_max",
            ),
            (
                self.reference_pressure_kpa > 0.0,
                "reference_pressure_kpa must be positive",
            ),
            (self.stiffness > 0.0, "stiffness must be positive"),
            (
                (0.0..1.0).contains(&self.stiffness_spread),
                "stiffness_spread must lie in [0, 1)",
            ),
            (
                self.relative_permittivity > 0.0,
                "relative_permittivity must be positive",
            ),
            (
                0.0 < self.min_gap && self.min_gap < self.rest_gap,
                "gaps must satisfy 0 < min_gap < rest_gap",
            ),
            (self.noise_sigma >= 0.0, "noise_sigma must be non-negative"),
            (
                (0.0..=1.0).contains(&self.dead_fraction),
                "dead_fraction must lie in [0, 1]",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::InvalidConfig((*msg).to_string())),
            None => Ok(()),
        }
    }

    pub fn geometry(&self) -> Result<SkinGeometry> {
        SkinGeometry::new(self.n_triangles, self.taxels_per_triangle, self.taxel_area)
    }

    /// Draws the taxel population. Deterministic in `seed`.
    pub fn draw_taxels(&self) -> Result<Vec<GroundTruthTaxel>> {
        self.validate()?;
        let n = self.n_triangles * self.taxels_per_triangle;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let n_dead = (self.dead_fraction * n as f64).floor() as usize;
        let dead: BTreeSet<usize> = order[..n_dead].iter().copied().collect();

        let permittivity = self.relative_permittivity * EPSILON_0;
        let reference = self.reference_pressure_kpa * 1000.0;
        (0..n)
            .map(|i| {
                let offset = uniform(&mut rng, self.offset_min, self.offset_max);
                let amplitude = uniform(&mut rng, self.amplitude_min, self.amplitude_max);
                let stiffness = self.stiffness
                    * uniform(
                        &mut rng,
                        1.0 - self.stiffness_spread,
                        1.0 + self.stiffness_spread,
                    );
                let mut taxel = GroundTruthTaxel {
                    stiffness,
                    permittivity,
                    rest_gap: self.rest_gap,
                    min_gap: self.min_gap,
                    gain: 0.0,
                    offset,
                    noise_sigma: self.noise_sigma,
                    dead: dead.contains(&i),
                };
                if !taxel.dead {
                    let span = taxel.capacitance(reference, self.taxel_area)
                        - taxel.capacitance(0.0, self.taxel_area);
                    taxel.gain = amplitude / span;
                }
                Ok(taxel)
            })
            .collect()
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Non-decreasing list of pressure levels, each held for `dwell` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureSchedule {
    levels: Vec<f64>,
    dwell: usize,
}

impl PressureSchedule {
    pub fn new(levels: Vec<f64>, dwell: usize) -> Result<Self> {
        for (i, &p) in levels.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidPressure {
                    index: i,
                    pressure: p,
                });
            }
            if i > 0 && p < levels[i - 1] {
                return Err(Error::NonMonotonePressure {
                    index: i,
                    previous: levels[i - 1],
                    pressure: p,
                });
            }
        }
        Ok(PressureSchedule { levels, dwell })
    }

    /// Levels `start, start + step, ...` up to and including `end` (Pa).
    pub fn linear(start: f64, end: f64, step: f64, dwell: usize) -> Result<Self> {
        if !(step > 0.0 && end >= start) {
            return Err(Error::InvalidConfig(format!(
                "bad pressure range {start}:{end}:{step}"
            )));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        Self::new((0..=n).map(|i| start + step * i as f64).collect(), dwell)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn dwell(&self) -> usize {
        self.dwell
    }
}

/// A simulated skin: ground truth for every taxel plus a seeded noise source.
#[derive(Clone, Debug)]
pub struct SimSkin {
    geometry: SkinGeometry,
    taxels: Vec<GroundTruthTaxel>,
    seed: u64,
    rng: ChaCha8Rng,
}

impl SimSkin {
    pub fn new(geometry: SkinGeometry, taxels: Vec<GroundTruthTaxel>, seed: u64) -> Result<Self> {
        geometry.check_frame_len(taxels.len())?;
        for t in &taxels {
            t.validate()?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(SimSkin {
            geometry,
            taxels,
            seed,
            rng,
        })
    }

    pub fn from_config(config: &SimConfig) -> Result<Self> {
        Self::new(config.geometry()?, config.draw_taxels()?, config.seed)
    }

    /// Restarts the noise source from `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.rng.set_stream(1);
    }

    pub fn geometry(&self) -> &SkinGeometry {
        &self.geometry
    }

    pub fn taxels(&self) -> &[GroundTruthTaxel] {
        &self.taxels
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Indices of the taxels that do not respond to pressure.
    pub fn dead_taxels(&self) -> BTreeSet<TaxelId> {
        self.taxels
            .iter()
            .enumerate()
            .filter(|(_, t)| t.dead)
            .map(|(i, _)| TaxelId(i))
            .collect()
    }

    fn read(&mut self, taxel: usize, pressure: f64) -> RawCount {
        let t = &self.taxels[taxel];
        let mut value = true_capacitance_counts(t, pressure, self.geometry.taxel_area());
        if t.noise_sigma > 0.0 {
            let noise = Normal::new(0.0, t.noise_sigma).expect("sigma validated non-negative");
            value += noise.sample(&mut self.rng);
        }
        RawCount::quantize(value)
    }

    /// One frame with a separate pressure (Pa) per taxel.
    pub fn sample_pressures(&mut self, pressures: &[f64]) -> Result<CapacitanceFrame> {
        self.geometry.check_frame_len(pressures.len())?;
        if let Some((index, &pressure)) = pressures
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p >= 0.0))
        {
            return Err(Error::InvalidPressure { index, pressure });
        }
        Ok(CapacitanceFrame::new(
            pressures
                .iter()
                .enumerate()
                .map(|(i, &p)| self.read(i, p))
                .collect(),
        ))
    }

    /// One frame with the same pressure on every taxel.
    pub fn sample_frame(&mut self, pressure: f64) -> Result<CalibrationSample> {
        let frame = self.sample_pressures(&vec![pressure; self.geometry.n_taxels()])?;
        Ok(CalibrationSample { pressure, frame })
    }

    pub fn generate_sweep(&mut self, schedule: &PressureSchedule) -> Result<CalibrationDataset> {
        let mut samples = Vec::with_capacity(schedule.levels().len() * schedule.dwell());
        for &level in schedule.levels() {
            for _ in 0..schedule.dwell() {
                samples.push(self.sample_frame(level)?);
            }
        }
        CalibrationDataset::new(self.geometry, samples)
    }

    /// Rest frame averaged over `n_frames` readings.
    pub fn capture_baseline(&mut self, n_frames: usize) -> Result<CapacitanceFrame> {
        let frames = (0..n_frames.max(1))
            .map(|_| self.sample_frame(0.0).map(|s| s.frame))
            .collect::<Result<Vec<_>>>()?;
        crate::force::baseline_from_frames(&frames)
    }

    /// A mass resting on `patch`, its weight spread uniformly over the patch
    /// taxels. Returns the frame and the true force in N.
    pub fn generate_validation_frame(
        &mut self,
        mass: f64,
        patch: &BTreeSet<TaxelId>,
    ) -> Result<(CapacitanceFrame, f64)> {
        if patch.is_empty() {
            return Err(Error::InvalidPatch("patch has no taxels".into()));
        }
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidPatch(format!("mass {mass} kg is not valid")));
        }
        for &t in patch {
            self.geometry.check_taxel(t)?;
        }
        let force = mass * GRAVITY;
        let pressure = force / (patch.len() as f64 * self.geometry.taxel_area());
        let mut pressures = vec![0.0; self.geometry.n_taxels()];
        for t in patch {
            pressures[t.index()] = pressure;
        }
        Ok((self.sample_pressures(&pressures)?, force))
    }
}
