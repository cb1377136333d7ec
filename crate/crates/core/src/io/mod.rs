//! File formats and persistence.
//!
//! Pressures appear in files as kPa. The conversion from the in-memory Pa
//! value is done on the decimal text (moving the decimal point three places),
//! so every pressure written parses back to the identical `f64`.

mod config;
mod model_file;
mod report;
mod sweep;
mod truth;

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use config::{CalibrationSection, ConfigFile, ScheduleSection};
pub use model_file::{
    load_model_file, parse_model, render_model, write_model_file, FORMAT_VERSION,
};
pub use report::{
    render_average_csv, render_curves_csv, render_summary, render_taxel_svg, write_report,
};
pub use sweep::{
    parse_frames_csv, parse_sweep_csv, parse_sweep_csv_with, render_frames_csv, render_sweep_csv,
    write_frames_csv, write_sweep_csv, Layout,
};
pub use truth::{load_truth_file, write_truth_file, TruthFile};

/// Writes `contents` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| {
            Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::InvalidInput, "not a file path"),
            )
        })?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Renders a pressure given in Pa as a kPa decimal string.
pub fn pa_to_kpa_text(pa: f64) -> String {
    if !pa.is_finite() {
        return format!("{}", pa / 1000.0);
    }
    if pa == 0.0 {
        return if pa.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    // Shortest round-trip digits as d.ddd e X.
    let sci = format!("{pa:e}");
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("LowerExp always has an exponent");
    let exp: i32 = exp.parse().expect("LowerExp exponent is an integer");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    // Position of the decimal point after the first digit, shifted for kPa.
    let point = exp - 3 + 1;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (int, frac) = digits.split_at(point as usize);
        format!("{int}.{frac}")
    };
    format!("{sign}{body}")
}

/// Parses a kPa decimal string into Pa, exactly as if the Pa decimal had been written.
pub fn kpa_text_to_pa(text: &str) -> Option<f64> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    let shifted = match text.find(['e', 'E']) {
        Some(i) => {
            let exp: i32 = text[i + 1..].parse().ok()?;
            format!("{}e{}", &text[..i], exp.checked_add(3)?)
        }
        None => format!("{text}e3"),
    };
    shifted.parse::<f64>().ok().filter(|v| v.is_finite())
}
