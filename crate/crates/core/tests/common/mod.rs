#![allow(dead_code)]

use taxel_calib::fit::{build_regressor, FitPoint};
use taxel_calib::pipeline::{calibrate, CalibrationConfig};
use taxel_calib::sim::{PressureSchedule, SimConfig, SimSkin};
use taxel_calib::{CalibrationDataset, CapacitanceFrame, SkinModel};

/// Least squares through the normal equations `AᵀA π = Aᵀp`, solved by
/// Gaussian elimination with partial pivoting. Kept independent of the
/// library's QR solver.
#[allow(clippy::needless_range_loop)]
pub fn normal_equations(points: &[FitPoint]) -> [f64; 6] {
    let mut m = [[0.0_f64; 7]; 6];
    for p in points {
        let row = build_regressor(p.c_norm);
        for i in 0..6 {
            for j in 0..6 {
                m[i][j] += row[i] * row[j];
            }
            m[i][6] += row[i] * p.pressure;
        }
    }
    for col in 0..6 {
        let pivot = (col..6)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        for r in col + 1..6 {
            let f = m[r][col] / m[col][col];
            for c in col..7 {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = [0.0; 6];
    for r in (0..6).rev() {
        let tail: f64 = (r + 1..6).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][6] - tail) / m[r][r];
    }
    x
}

/// Sweep 0..=70 kPa in 1 kPa steps, three samples per level.
pub fn default_schedule() -> PressureSchedule {
    PressureSchedule::linear(0.0, 70_000.0, 1_000.0, 3).unwrap()
}

pub fn sweep(config: &SimConfig) -> (SimSkin, CalibrationDataset) {
    let mut skin = SimSkin::from_config(config).unwrap();
    let dataset = skin.generate_sweep(&default_schedule()).unwrap();
    (skin, dataset)
}

pub fn calibrated(config: &SimConfig) -> (SimSkin, CalibrationDataset, SkinModel) {
    let (skin, dataset) = sweep(config);
    let model = calibrate(&dataset, &CalibrationConfig::default()).unwrap();
    (skin, dataset, model)
}

pub fn noiseless() -> SimConfig {
    SimConfig {
        noise_sigma: 0.0,
        dead_fraction: 0.0,
        ..Default::default()
    }
}

/// Population standard deviation of a frame's counts.
pub fn frame_std(frame: &CapacitanceFrame) -> f64 {
    let v: Vec<f64> = frame.counts().iter().map(|c| c.as_f64()).collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Across-taxel mean count per sample, averaged over each pressure level.
pub fn averaged_curve(dataset: &CalibrationDataset) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for s in dataset.samples() {
        let mean = s.frame.counts().iter().map(|c| c.as_f64()).sum::<f64>() / s.frame.len() as f64;
        match out.last_mut() {
            Some(last) if last.0 == s.pressure => {
                last.1 += mean;
                last.2 += 1;
            }
            _ => out.push((s.pressure, mean, 1)),
        }
    }
    out.into_iter().map(|(p, m, n)| (p, m / n as f64)).collect()
}
