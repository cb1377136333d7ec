//! Calibration report: summary text, per-taxel fitted curves, the
//! taxel-averaged response, and optional SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{pa_to_kpa_text, write_atomic};
use crate::error::{Error, Result};
use crate::fit::{evaluate_polynomial, normalize};
use crate::pipeline::{average_duplicates, bin_means, taxel_series, CalibrationConfig};
use crate::types::{CalibrationDataset, ExclusionReason, SkinModel, TaxelModel};

pub fn render_summary(
    model: &SkinModel,
    dataset: &CalibrationDataset,
    config: &CalibrationConfig,
) -> String {
    let g = model.geometry();
    let mut residuals: Vec<f64> = model
        .taxels()
        .iter()
        .filter_map(TaxelModel::residual_rms)
        .collect();
    residuals.sort_by(f64::total_cmp);
    let count_reason = |r: ExclusionReason| {
        model
            .taxels()
            .iter()
            .filter(|t| t.exclusion() == Some(r))
            .count()
    };

    let mut out = String::new();
    let _ = writeln!(out, "taxels:               {}", g.n_taxels());
    let _ = writeln!(out, "fitted:               {}", model.n_fitted());
    let _ = writeln!(out, "excluded:             {}", model.n_excluded());
    let _ = writeln!(
        out,
        "  low-amplitude:      {}",
        count_reason(ExclusionReason::LowAmplitude)
    );
    let _ = writeln!(
        out,
        "  rank-deficient:     {}",
        count_reason(ExclusionReason::RankDeficient)
    );
    let _ = writeln!(out, "samples:              {}", dataset.len());
    if let (Some(first), Some(last)) = (dataset.samples().first(), dataset.samples().last()) {
        let _ = writeln!(
            out,
            "pressure range:       {} .. {} kPa",
            pa_to_kpa_text(first.pressure),
            pa_to_kpa_text(last.pressure)
        );
    }
    let _ = writeln!(
        out,
        "amplitude threshold:  {} counts",
        model.amplitude_threshold
    );
    let _ = writeln!(
        out,
        "activation threshold: {} counts",
        model.activation_threshold
    );
    let _ = writeln!(
        out,
        "pressure bin width:   {} kPa",
        pa_to_kpa_text(config.pressure_bin_width)
    );
    let _ = writeln!(out, "taxel area:           {} m^2", g.taxel_area());
    if !residuals.is_empty() {
        let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
        let median = residuals[residuals.len() / 2];
        let _ = writeln!(
            out,
            "residual rms (kPa):   min {:.4}  median {:.4}  mean {:.4}  max {:.4}",
            residuals[0] / 1000.0,
            median / 1000.0,
            mean / 1000.0,
            residuals[residuals.len() - 1] / 1000.0,
        );
    }
    let excluded: Vec<String> = model
        .taxels()
        .iter()
        .filter_map(|t| t.exclusion().map(|r| format!("{} ({r})", t.taxel)))
        .collect();
    if !excluded.is_empty() {
        let _ = writeln!(out, "excluded taxels:      {}", excluded.join(", "));
    }
    out
}

/// `taxel_id,pressure_kpa,mean_raw,fitted_pressure_kpa` for every averaged
/// point of every fitted taxel. The fitted value is the raw polynomial at
/// the normalized reading, without runtime clamping to zero.
pub fn render_curves_csv(
    model: &SkinModel,
    dataset: &CalibrationDataset,
    config: &CalibrationConfig,
) -> Result<String> {
    let mut out = String::from("taxel_id,pressure_kpa,mean_raw,fitted_pressure_kpa\n");
    for t in model.taxels() {
        let Some(coeffs) = t.coeffs() else { continue };
        let series = taxel_series(dataset, t.taxel)?;
        for p in average_duplicates(&series, config.pressure_bin_width) {
            let c = normalize(p.mean_raw, t.c_min.as_f64(), t.c_max.as_f64())?;
            let _ = writeln!(
                out,
                "{},{},{},{}",
                t.taxel,
                pa_to_kpa_text(p.pressure),
                p.mean_raw,
                pa_to_kpa_text(evaluate_polynomial(coeffs, c))
            );
        }
    }
    Ok(out)
}

/// Taxel-averaged raw counts per pressure bin, over all taxels and over
/// fitted taxels only.
pub fn render_average_csv(
    model: &SkinModel,
    dataset: &CalibrationDataset,
    config: &CalibrationConfig,
) -> String {
    let fitted: Vec<usize> = model
        .taxels()
        .iter()
        .filter(|t| !t.is_excluded())
        .map(|t| t.taxel.index())
        .collect();
    let mean_over = |frame: &[crate::types::RawCount], idx: &mut dyn Iterator<Item = usize>| {
        let (sum, n) = idx.fold((0.0, 0usize), |(s, n), i| (s + frame[i].as_f64(), n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    };
    let n = dataset.geometry().n_taxels();
    let all = bin_means(
        dataset
            .samples()
            .iter()
            .map(|s| (s.pressure, mean_over(s.frame.counts(), &mut (0..n)))),
        config.pressure_bin_width,
    );
    let accepted = bin_means(
        dataset.samples().iter().map(|s| {
            (
                s.pressure,
                mean_over(s.frame.counts(), &mut fitted.iter().copied()),
            )
        }),
        config.pressure_bin_width,
    );
    let mut out = String::from("pressure_kpa,mean_raw_all,mean_raw_fitted\n");
    for (a, f) in all.iter().zip(&accepted) {
        let _ = writeln!(
            out,
            "{},{},{}",
            pa_to_kpa_text(a.pressure),
            a.mean_raw,
            f.mean_raw
        );
    }
    out
}

/// Scatter of averaged points with the fitted curve, pressure on x and raw on y.
pub fn render_taxel_svg(
    t: &TaxelModel,
    dataset: &CalibrationDataset,
    config: &CalibrationConfig,
) -> Result<String> {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const M: f64 = 40.0;
    let coeffs = t.coeffs().ok_or(Error::ExcludedTaxel(t.taxel.index()))?;
    let series = taxel_series(dataset, t.taxel)?;
    let points = average_duplicates(&series, config.pressure_bin_width);

    let (lo, hi) = (t.c_min.as_f64(), t.c_max.as_f64());
    let curve: Vec<(f64, f64)> = (0..=100)
        .map(|i| {
            let raw = lo + (hi - lo) * f64::from(i) / 100.0;
            let c = normalize(raw, lo, hi)?;
            Ok((evaluate_polynomial(coeffs, c), raw))
        })
        .collect::<Result<_>>()?;
    let p_max = points
        .iter()
        .map(|p| p.pressure)
        .chain(curve.iter().map(|c| c.0))
        .fold(1.0_f64, f64::max);
    let x = |p: f64| M + (W - 2.0 * M) * p / p_max;
    let y = |r: f64| H - M - (H - 2.0 * M) * (r - lo) / (hi - lo).max(1.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    let _ = writeln!(
        svg,
        r#"<text x="{M}" y="20" font-size="12">taxel {} (residual {:.3} kPa)</text>"#,
        t.taxel,
        t.residual_rms().unwrap_or(0.0) / 1000.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="10">pressure 0 .. {:.1} kPa</text>"#,
        W / 2.0 - 50.0,
        H - 10.0,
        p_max / 1000.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="4" y="{}" font-size="10">{lo}</text><text x="4" y="{}" font-size="10">{hi}</text>"#,
        y(lo),
        y(hi) + 10.0
    );
    for p in &points {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="gray"/>"#,
            x(p.pressure),
            y(p.mean_raw)
        );
    }
    let path: Vec<String> = curve
        .iter()
        .map(|&(p, r)| format!("{:.2},{:.2}", x(p.clamp(0.0, p_max)), y(r)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="green" stroke-width="1.5"/>"#,
        path.join(" ")
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes `summary.txt`, `curves.csv`, `average.csv` and, with `plots`,
/// one `plots/taxel_NNN.svg` per fitted taxel into `out_dir`.
pub fn write_report(
    model: &SkinModel,
    dataset: &CalibrationDataset,
    config: &CalibrationConfig,
    out_dir: &Path,
    plots: bool,
) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_atomic(
        &out_dir.join("summary.txt"),
        render_summary(model, dataset, config).as_bytes(),
    )?;
    write_atomic(
        &out_dir.join("curves.csv"),
        render_curves_csv(model, dataset, config)?.as_bytes(),
    )?;
    write_atomic(
        &out_dir.join("average.csv"),
        render_average_csv(model, dataset, config).as_bytes(),
    )?;
    if plots {
        let dir = out_dir.join("plots");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for t in model.taxels().iter().filter(|t| !t.is_excluded()) {
            let svg = render_taxel_svg(t, dataset, config)?;
            write_atomic(
                &dir.join(format!("taxel_{:03}.svg", t.taxel.index())),
                svg.as_bytes(),
            )?;
        }
    }
    Ok(())
}
