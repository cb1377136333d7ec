//! Known-mass validation trials against a simulated skin.

use std::collections::BTreeSet;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::force::estimate_force;
use crate::sim::SimSkin;
use crate::types::{SkinModel, TaxelId};

#[derive(Clone, Debug, PartialEq)]
pub struct TrialSpec {
    /// Masses in kg, cycled through in order.
    pub masses: Vec<f64>,
    pub trials: usize,
    /// Number of contiguous taxels under each mass.
    pub patch_size: usize,
    /// Rest frames averaged into the baseline.
    pub baseline_frames: usize,
    /// Seed for patch placement.
    pub seed: u64,
}

impl Default for TrialSpec {
    fn default() -> Self {
        TrialSpec {
            masses: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            trials: 20,
            patch_size: 30,
            baseline_frames: 16,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub mass: f64,
    pub patch_start: usize,
    pub true_force: f64,
    pub estimated_force: f64,
    pub n_activated: usize,
    pub n_clamped: usize,
}

impl Trial {
    pub fn relative_error(&self) -> f64 {
        (self.estimated_force - self.true_force).abs() / self.true_force
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub trials: Vec<Trial>,
}

impl ValidationReport {
    /// Mean absolute relative error over all trials.
    pub fn mean_relative_error(&self) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        self.trials.iter().map(Trial::relative_error).sum::<f64>() / self.trials.len() as f64
    }

    pub fn max_relative_error(&self) -> f64 {
        self.trials
            .iter()
            .map(Trial::relative_error)
            .fold(0.0, f64::max)
    }
}

/// Places each mass on a random contiguous patch, reads a frame from the
/// simulator and compares the estimated force with the applied weight.
pub fn run_validation(
    skin: &mut SimSkin,
    model: &SkinModel,
    spec: &TrialSpec,
) -> Result<ValidationReport> {
    let n = skin.geometry().n_taxels();
    if model.geometry().n_taxels() != n {
        return Err(Error::FrameShape {
            expected: model.geometry().n_taxels(),
            got: n,
        });
    }
    if spec.masses.is_empty() || spec.masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
        return Err(Error::InvalidConfig(
            "validation needs at least one positive mass".into(),
        ));
    }
    if spec.patch_size == 0 || spec.patch_size > n {
        return Err(Error::InvalidPatch(format!(
            "patch of {} taxels does not fit a skin of {n}",
            spec.patch_size
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let baseline = skin.capture_baseline(spec.baseline_frames)?;
    let mut trials = Vec::with_capacity(spec.trials);
    for i in 0..spec.trials {
        let mass = spec.masses[i % spec.masses.len()];
        let patch_start = rng.random_range(0..=n - spec.patch_size);
        let patch: BTreeSet<TaxelId> = (patch_start..patch_start + spec.patch_size)
            .map(TaxelId)
            .collect();
        let (frame, true_force) = skin.generate_validation_frame(mass, &patch)?;
        let estimate = estimate_force(&frame, &baseline, model)?;
        trials.push(Trial {
            mass,
            patch_start,
            true_force,
            estimated_force: estimate.total_force,
            n_activated: estimate.n_activated,
            n_clamped: estimate.clamped.len(),
        });
    }
    Ok(ValidationReport { trials })
}
