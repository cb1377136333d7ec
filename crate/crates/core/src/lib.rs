//! Pressure calibration and normal-force estimation for capacitive tactile skins.
//!
//! The skin is placed under a uniform differential pressure that is raised
//! slowly while every taxel is read. Each taxel gets its own degree-5
//! polynomial from raw counts to pressure; taxels that barely respond are
//! excluded. At runtime the pressures of touched taxels are summed over their
//! area to give the total normal force.
//!
//! Modules:
//! - [`types`]: identifiers, frames, datasets and calibrated models
//! - [`fit`]: normalization and the least-squares polynomial fit
//! - [`pipeline`]: whole-skin calibration
//! - [`force`]: activation detection and force estimation
//! - [`sim`]: a synthetic skin with known ground truth
//! - [`validation`]: known-mass trials against the simulator
//! - [`io`]: file formats, reports and persistence
//! - [`cli`]: the `taxel-calib` command-line tool

pub mod cli;
pub mod error;
pub mod fit;
pub mod force;
pub mod io;
pub mod pipeline;
pub mod sim;
pub mod types;
pub mod validation;

pub use error::{Error, Result};
pub use fit::{FitPoint, PolyCoeffs};
pub use pipeline::CalibrationConfig;
pub use types::{
    BaselineFrame, CalibrationDataset, CalibrationSample, CapacitanceFrame, ExclusionReason,
    ForceEstimate, RawCount, SkinGeometry, SkinModel, TaxelId, TaxelModel, TaxelState,
};
