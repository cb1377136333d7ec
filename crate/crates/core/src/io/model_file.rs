//! Versioned text format for calibrated skin models.
//!
//! ```text
//! # taxel-calib skin model
//! format_version = 1
//! created_unix = 1760000000
//! n_taxels = 230
//! n_triangles = 23
//! taxels_per_triangle = 10
//! taxel_area_m2 = 0.00002
//! activation_threshold = 2
//! amplitude_threshold = 10
//!
//! taxel_id,status,exclusion_reason,c_min,c_max,a_kpa,b_kpa,c_kpa,d_kpa,e_kpa,f_kpa,residual_rms_kpa
//! 0,fitted,,14,97,12.5,...
//! 7,excluded,low-amplitude,20,22,,,,,,,
//! ```
//!
//! Coefficients map normalized capacitance to kPa and are written with
//! shortest round-trip precision, so loading reproduces the exact bits.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use super::{kpa_text_to_pa, pa_to_kpa_text, read_to_string, write_atomic};
use crate::error::{Error, Result};
use crate::fit::PolyCoeffs;
use crate::types::{
    ExclusionReason, RawCount, SkinGeometry, SkinModel, TaxelId, TaxelModel, TaxelState, NUM_COEFFS,
};

pub const FORMAT_VERSION: u32 = 1;

const RECORD_HEADER: &str =
    "taxel_id,status,exclusion_reason,c_min,c_max,a_kpa,b_kpa,c_kpa,d_kpa,e_kpa,f_kpa,residual_rms_kpa";

pub fn render_model(model: &SkinModel, created_unix: u64) -> String {
    let g = model.geometry();
    let mut out = String::new();
    out.push_str("# taxel-calib skin model\n");
    out.push_str(&format!("format_version = {FORMAT_VERSION}\n"));
    out.push_str(&format!("created_unix = {created_unix}\n"));
    out.push_str(&format!("n_taxels = {}\n", g.n_taxels()));
    out.push_str(&format!("n_triangles = {}\n", g.n_triangles()));
    out.push_str(&format!(
        "taxels_per_triangle = {}\n",
        g.taxels_per_triangle()
    ));
    out.push_str(&format!("taxel_area_m2 = {}\n", g.taxel_area()));
    out.push_str(&format!(
        "activation_threshold = {}\n",
        model.activation_threshold
    ));
    out.push_str(&format!(
        "amplitude_threshold = {}\n",
        model.amplitude_threshold
    ));
    out.push('\n');
    out.push_str(RECORD_HEADER);
    out.push('\n');
    for t in model.taxels() {
        let (status, reason) = match t.exclusion() {
            Some(r) => ("excluded", r.as_str()),
            None => ("fitted", ""),
        };
        out.push_str(&format!(
            "{},{status},{reason},{},{}",
            t.taxel, t.c_min, t.c_max
        ));
        match &t.state {
            TaxelState::Fitted {
                coeffs,
                residual_rms,
            } => {
                for c in coeffs.values() {
                    out.push(',');
                    out.push_str(&pa_to_kpa_text(*c));
                }
                out.push(',');
                out.push_str(&pa_to_kpa_text(*residual_rms));
            }
            TaxelState::Excluded(_) => out.push_str(&",".repeat(NUM_COEFFS + 1)),
        }
        out.push('\n');
    }
    out
}

pub fn write_model_file(model: &SkinModel, path: &Path) -> Result<()> {
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_atomic(path, render_model(model, created).as_bytes())
}

pub fn load_model_file(path: &Path) -> Result<SkinModel> {
    parse_model(path, &read_to_string(path)?)
}

/// Parses model text; `path` is only used in error messages.
pub fn parse_model(path: &Path, text: &str) -> Result<SkinModel> {
    let err = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut found_records = false;
    for (n, line) in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == RECORD_HEADER {
            found_records = true;
            break;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(n, format!("expected `key = value`, found `{line}`")))?;
        header.insert(key.trim(), (n, value.trim()));
    }

    let field = |key: &str| -> Result<(usize, &str)> {
        header
            .get(key)
            .copied()
            .ok_or_else(|| err(0, format!("header is missing `{key}`")))
    };
    fn parse_num<T: std::str::FromStr>(
        err: &dyn Fn(usize, String) -> Error,
        key: &str,
        (n, v): (usize, &str),
    ) -> Result<T> {
        v.parse()
            .map_err(|_| err(n, format!("`{key}` has invalid value `{v}`")))
    }

    let version: u32 = parse_num(&err, "format_version", field("format_version")?)?;
    if version != FORMAT_VERSION {
        return Err(Error::IncompatibleModel {
            path: path.to_path_buf(),
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let n_taxels: usize = parse_num(&err, "n_taxels", field("n_taxels")?)?;
    let n_triangles: usize = parse_num(&err, "n_triangles", field("n_triangles")?)?;
    let per_triangle: usize =
        parse_num(&err, "taxels_per_triangle", field("taxels_per_triangle")?)?;
    let area: f64 = parse_num(&err, "taxel_area_m2", field("taxel_area_m2")?)?;
    let activation: u8 = parse_num(&err, "activation_threshold", field("activation_threshold")?)?;
    let amplitude: u8 = parse_num(&err, "amplitude_threshold", field("amplitude_threshold")?)?;
    let geometry = SkinGeometry::new(n_triangles, per_triangle, area)?;
    if geometry.n_taxels() != n_taxels {
        return Err(err(
            field("n_taxels")?.0,
            format!("n_taxels {n_taxels} disagrees with {n_triangles} x {per_triangle} triangles"),
        ));
    }
    if !found_records {
        return Err(err(text.lines().count(), "record header not found".into()));
    }

    let mut taxels = Vec::with_capacity(n_taxels);
    let mut last_line = 0;
    for (n, line) in lines {
        last_line = n;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 6 + NUM_COEFFS {
            return Err(err(
                n,
                format!(
                    "record has {} fields, expected {}",
                    cols.len(),
                    6 + NUM_COEFFS
                ),
            ));
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| err(n, format!("bad taxel id `{}`", cols[0])))?;
        if id != taxels.len() {
            return Err(err(
                n,
                format!("taxel id {id} out of order, expected {}", taxels.len()),
            ));
        }
        let count = |s: &str| -> Result<RawCount> {
            s.parse::<u8>()
                .map(RawCount)
                .map_err(|_| err(n, format!("bad count `{s}`")))
        };
        let (c_min, c_max) = (count(cols[3])?, count(cols[4])?);
        let state = match cols[1] {
            "fitted" => {
                let kpa =
                    |s: &str| kpa_text_to_pa(s).ok_or_else(|| err(n, format!("bad number `{s}`")));
                let mut coeffs = [0.0; NUM_COEFFS];
                for (j, c) in coeffs.iter_mut().enumerate() {
                    *c = kpa(cols[5 + j])?;
                }
                TaxelState::Fitted {
                    coeffs: PolyCoeffs(coeffs),
                    residual_rms: kpa(cols[5 + NUM_COEFFS])?,
                }
            }
            "excluded" => TaxelState::Excluded(
                ExclusionReason::parse(cols[2])
                    .ok_or_else(|| err(n, format!("unknown exclusion reason `{}`", cols[2])))?,
            ),
            other => return Err(err(n, format!("unknown status `{other}`"))),
        };
        taxels.push(TaxelModel {
            taxel: TaxelId(id),
            c_min,
            c_max,
            state,
        });
    }
    if taxels.len() != n_taxels {
        return Err(err(
            last_line,
            format!(
                "found {} taxel records, header declares {n_taxels}",
                taxels.len()
            ),
        ));
    }
    SkinModel::new(geometry, taxels, activation, amplitude)
}
