//! Sweep and frame CSV files.
//!
//! Sweep: header `pressure_kpa,c_0,...,c_{N-1}`, one row per sample.
//! Frames: header `c_0,...,c_{N-1}`, one row per frame.

use std::path::Path;

use csv::{ReaderBuilder, StringRecord};

use super::{kpa_text_to_pa, pa_to_kpa_text, read_to_string, write_atomic};
use crate::error::{Error, Result};
use crate::types::{
    CalibrationDataset, CalibrationSample, CapacitanceFrame, RawCount, SkinGeometry,
};

/// Geometry details a sweep file does not carry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Layout {
    /// m².
    pub taxel_area: f64,
    pub taxels_per_triangle: usize,
}

impl Default for Layout {
    fn default() -> Self {
        Layout {
            taxel_area: 2.0e-5,
            taxels_per_triangle: 10,
        }
    }
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read_records(path: &Path, text: &str) -> Result<(StringRecord, Vec<(usize, StringRecord)>)> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, i + 1, e.to_string()))?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(format_err(path, 1, "missing header row"));
    }
    let (_, header) = records.remove(0);
    Ok((header, records))
}

fn check_count_columns(path: &Path, header: &StringRecord, skip: usize) -> Result<usize> {
    let n = header.len() - skip;
    for (j, name) in header.iter().skip(skip).enumerate() {
        if name != format!("c_{j}") {
            return Err(format_err(
                path,
                1,
                format!(
                    "header column {} is `{name}`, expected `c_{j}`",
                    j + skip + 1
                ),
            ));
        }
    }
    if n == 0 {
        return Err(format_err(path, 1, "header names no taxel columns"));
    }
    Ok(n)
}

fn parse_counts(
    path: &Path,
    line: usize,
    header: &StringRecord,
    record: &StringRecord,
    skip: usize,
) -> Result<CapacitanceFrame> {
    if record.len() != header.len() {
        return Err(format_err(
            path,
            line,
            format!(
                "row has {} fields, header has {}",
                record.len(),
                header.len()
            ),
        ));
    }
    let counts = record
        .iter()
        .enumerate()
        .skip(skip)
        .map(|(j, field)| {
            let value_err = |message: String| Error::Value {
                path: path.to_path_buf(),
                row: line,
                column: header[j].to_string(),
                message,
            };
            let v: i64 = field
                .parse()
                .map_err(|_| value_err(format!("`{field}` is not an integer count")))?;
            RawCount::try_from(v).map_err(|v| value_err(format!("count {v} outside [0, 255]")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CapacitanceFrame::new(counts))
}

/// Reads a sweep with the default [`Layout`].
pub fn parse_sweep_csv(path: &Path) -> Result<CalibrationDataset> {
    parse_sweep_csv_with(path, &Layout::default())
}

pub fn parse_sweep_csv_with(path: &Path, layout: &Layout) -> Result<CalibrationDataset> {
    let text = read_to_string(path)?;
    let (header, records) = read_records(path, &text)?;
    if header.get(0) != Some("pressure_kpa") {
        return Err(format_err(
            path,
            1,
            "missing header: first column must be `pressure_kpa`",
        ));
    }
    let n = check_count_columns(path, &header, 1)?;
    let geometry =
        SkinGeometry::from_taxel_count(n, layout.taxels_per_triangle, layout.taxel_area)?;

    let mut samples = Vec::with_capacity(records.len());
    let mut previous_kpa: Option<f64> = None;
    for (line, record) in &records {
        let field = record.get(0).unwrap_or("");
        let pressure = kpa_text_to_pa(field)
            .filter(|p| *p >= 0.0)
            .ok_or_else(|| Error::Value {
                path: path.to_path_buf(),
                row: *line,
                column: "pressure_kpa".into(),
                message: format!("`{field}` is not a non-negative pressure"),
            })?;
        let kpa = pressure / 1000.0;
        if let Some(prev) = previous_kpa {
            if kpa < prev {
                return Err(Error::Protocol {
                    path: path.to_path_buf(),
                    row: *line,
                    previous_kpa: prev,
                    pressure_kpa: kpa,
                });
            }
        }
        previous_kpa = Some(kpa);
        let frame = parse_counts(path, *line, &header, record, 1)?;
        samples.push(CalibrationSample { pressure, frame });
    }
    CalibrationDataset::new(geometry, samples)
}

fn count_header(n: usize) -> String {
    (0..n)
        .map(|j| format!("c_{j}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn push_counts(out: &mut String, frame: &CapacitanceFrame) {
    for (j, c) in frame.counts().iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        out.push_str(&c.to_string());
    }
    out.push('\n');
}

pub fn render_sweep_csv(dataset: &CalibrationDataset) -> String {
    let n = dataset.geometry().n_taxels();
    let mut out = format!("pressure_kpa,{}\n", count_header(n));
    for s in dataset.samples() {
        out.push_str(&pa_to_kpa_text(s.pressure));
        out.push(',');
        push_counts(&mut out, &s.frame);
    }
    out
}

pub fn write_sweep_csv(dataset: &CalibrationDataset, path: &Path) -> Result<()> {
    write_atomic(path, render_sweep_csv(dataset).as_bytes())
}

pub fn parse_frames_csv(path: &Path) -> Result<Vec<CapacitanceFrame>> {
    let text = read_to_string(path)?;
    let (header, records) = read_records(path, &text)?;
    check_count_columns(path, &header, 0)?;
    records
        .iter()
        .map(|(line, rec)| parse_counts(path, *line, &header, rec, 0))
        .collect()
}

/// Renders frames; all must have length `n_taxels`.
pub fn render_frames_csv(n_taxels: usize, frames: &[CapacitanceFrame]) -> Result<String> {
    let mut out = format!("{}\n", count_header(n_taxels));
    for f in frames {
        if f.len() != n_taxels {
            return Err(Error::FrameShape {
                expected: n_taxels,
                got: f.len(),
            });
        }
        push_counts(&mut out, f);
    }
    Ok(out)
}

pub fn write_frames_csv(n_taxels: usize, frames: &[CapacitanceFrame], path: &Path) -> Result<()> {
    write_atomic(path, render_frames_csv(n_taxels, frames)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn parses_small_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "s.csv",
            "pressure_kpa,c_0,c_1\n0,10,20\n1.5,12,25\n3,15,31\n",
        );
        let d = parse_sweep_csv(&p).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.geometry().n_taxels(), 2);
        assert_eq!(d.samples()[1].pressure, 1500.0);
        assert_eq!(d.samples()[2].frame, CapacitanceFrame::from_u8(&[15, 31]));
    }

    #[test]
    fn count_out_of_range_names_cell() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "pressure_kpa,c_0,c_1\n0,10,20\n1,256,20\n");
        match parse_sweep_csv(&p) {
            Err(Error::Value { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "c_0");
            }
            other => panic!("expected value error, got {other:?}"),
        }
        let p = write(&dir, "t.csv", "pressure_kpa,c_0\n0,-1\n");
        assert!(matches!(parse_sweep_csv(&p), Err(Error::Value { .. })));
        let p = write(&dir, "u.csv", "pressure_kpa,c_0\n0,1.5\n");
        assert!(matches!(parse_sweep_csv(&p), Err(Error::Value { .. })));
    }

    #[test]
    fn missing_header_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "0,10,20\n1,12,25\n");
        assert!(matches!(
            parse_sweep_csv(&p),
            Err(Error::Format { line: 1, .. })
        ));
        let p = write(&dir, "e.csv", "");
        assert!(matches!(parse_sweep_csv(&p), Err(Error::Format { .. })));
        let p = write(&dir, "b.csv", "pressure_kpa,c_0,c_7\n0,1,2\n");
        assert!(matches!(parse_sweep_csv(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn decreasing_pressure_is_protocol_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "pressure_kpa,c_0\n0,10\n2,12\n1,11\n");
        assert!(matches!(
            parse_sweep_csv(&p),
            Err(Error::Protocol { row: 4, .. })
        ));
    }

    #[test]
    fn ragged_row_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "pressure_kpa,c_0,c_1\n0,10\n");
        assert!(parse_sweep_csv(&p).is_err());
    }

    #[test]
    fn frames_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let frames = vec![
            CapacitanceFrame::from_u8(&[0, 255, 7]),
            CapacitanceFrame::from_u8(&[1, 2, 3]),
        ];
        let p = dir.path().join("f.csv");
        write_frames_csv(3, &frames, &p).unwrap();
        assert_eq!(
            fs::read_to_string(&p).unwrap(),
            "c_0,c_1,c_2\n0,255,7\n1,2,3\n"
        );
        assert_eq!(parse_frames_csv(&p).unwrap(), frames);
        assert!(render_frames_csv(2, &frames).is_err());
    }
}
