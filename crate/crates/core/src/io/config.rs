//! TOML configuration for the command-line tool.
//!
//! ```toml
//! [skin]            # simulator population, see `SimConfig`
//! seed = 7
//! noise_sigma = 0.5
//!
//! [schedule]
//! start_kpa = 0.0
//! end_kpa = 70.0
//! step_kpa = 1.0
//! dwell = 3
//!
//! [calibration]
//! amplitude_threshold = 10
//! activation_threshold = 2
//! pressure_bin_width_kpa = 0.1
//! ```
//!
//! Every key is optional and falls back to its default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_to_string, Layout};
use crate::error::{Error, Result};
use crate::pipeline::CalibrationConfig;
use crate::sim::{PressureSchedule, SimConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub skin: SimConfig,
    pub schedule: ScheduleSection,
    pub calibration: CalibrationSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub start_kpa: f64,
    pub end_kpa: f64,
    pub step_kpa: f64,
    pub dwell: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection {
            start_kpa: 0.0,
            end_kpa: 70.0,
            step_kpa: 1.0,
            dwell: 3,
        }
    }
}

impl ScheduleSection {
    pub fn to_schedule(&self) -> Result<PressureSchedule> {
        PressureSchedule::linear(
            self.start_kpa * 1000.0,
            self.end_kpa * 1000.0,
            self.step_kpa * 1000.0,
            self.dwell,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub amplitude_threshold: u8,
    pub activation_threshold: u8,
    pub pressure_bin_width_kpa: f64,
    pub min_points: usize,
    pub taxel_area_m2: f64,
    pub taxels_per_triangle: usize,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        let c = CalibrationConfig::default();
        let l = Layout::default();
        CalibrationSection {
            amplitude_threshold: c.amplitude_threshold,
            activation_threshold: c.activation_threshold,
            pressure_bin_width_kpa: c.pressure_bin_width / 1000.0,
            min_points: c.min_points,
            taxel_area_m2: l.taxel_area,
            taxels_per_triangle: l.taxels_per_triangle,
        }
    }
}

impl CalibrationSection {
    pub fn to_config(&self) -> Result<CalibrationConfig> {
        let c = CalibrationConfig {
            amplitude_threshold: self.amplitude_threshold,
            activation_threshold: self.activation_threshold,
            pressure_bin_width: self.pressure_bin_width_kpa * 1000.0,
            min_points: self.min_points,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn layout(&self) -> Layout {
        Layout {
            taxel_area: self.taxel_area_m2,
            taxels_per_triangle: self.taxels_per_triangle,
        }
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: e
                .span()
                .map_or(0, |s| text[..s.start].matches('\n').count() + 1),
            message: e.message().to_string(),
        })
    }
}
