//! Trace, sweep, calibration and JSON artifacts.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::telemetry::{read_rows, write_rows, TelemetryRecord};
use crate::error::Result;
use crate::estimation::EstimateTrace;
use crate::reference::SweepPoint;

pub const TRACE_HEADER: [&str; 9] = [
    "time_s",
    "tbar_est",
    "gamma_est",
    "h_est",
    "tcore_est",
    "tsurf_est",
    "tcore_truth",
    "tsurf_truth",
    "innovation",
];

pub const CALIBRATION_HEADER: [&str; 2] = ["temp_c", "adm_real"];

/// `f_hz` followed by re/im of every entry of the three transfer matrices.
pub fn sweep_header() -> Vec<String> {
    let mut h = vec!["f_hz".to_string()];
    for model in ["analytical", "pa", "qa"] {
        for entry in ["h11", "h12", "h21", "h22"] {
            for part in ["re", "im"] {
                h.push(format!("{model}_{entry}_{part}"));
            }
        }
    }
    h
}

/// Writes a trace next to the truth channels of the telemetry it came from.
pub fn write_trace<W: Write>(
    writer: W,
    trace: &EstimateTrace,
    telemetry: &[TelemetryRecord],
) -> Result<()> {
    if trace.is_empty() {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(TRACE_HEADER).map_err(std::io::Error::from)?;
        w.flush()?;
        return Ok(());
    }
    write_rows(writer, trace.rows(telemetry))
}

pub fn save_trace(
    path: impl AsRef<Path>,
    trace: &EstimateTrace,
    telemetry: &[TelemetryRecord],
) -> Result<()> {
    write_trace(File::create(path)?, trace, telemetry)
}

pub fn write_sweep<W: Write>(writer: W, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(sweep_header())
        .map_err(std::io::Error::from)?;
    for p in points {
        let mut row = vec![p.f_hz];
        for m in [&p.analytical, &p.pa, &p.qa] {
            for z in m.entries() {
                row.push(z.re);
                row.push(z.im);
            }
        }
        w.serialize(row).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_sweep(path: impl AsRef<Path>, points: &[SweepPoint]) -> Result<()> {
    write_sweep(File::create(path)?, points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct CalibrationRow {
    temp_c: f64,
    adm_real: f64,
}

/// `(temperature degC, admittance Ohm^-1)` pairs from a calibration CSV.
pub fn read_calibration<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let rows: Vec<CalibrationRow> = read_rows(reader, &CALIBRATION_HEADER)?;
    Ok(rows.into_iter().map(|r| (r.temp_c, r.adm_real)).collect())
}

pub fn write_calibration<W: Write>(writer: W, samples: &[(f64, f64)]) -> Result<()> {
    write_rows(
        writer,
        samples
            .iter()
            .map(|&(temp_c, adm_real)| CalibrationRow { temp_c, adm_real }),
    )
}

pub fn load_calibration(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    read_calibration(File::open(path)?)
}

pub fn save_calibration(path: impl AsRef<Path>, samples: &[(f64, f64)]) -> Result<()> {
    write_calibration(File::create(path)?, samples)
}

/// Pretty JSON with a trailing newline.
pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(
        File::open(path)?,
    ))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::Exec;
    use crate::reference::frequency_sweep;
    use crate::thermal::ThermalParams;

    #[test]
    fn sweep_csv_shape() {
        let pts = frequency_sweep(
            &ThermalParams::reference_26650(),
            &[1e-5, 1e-3],
            Exec::Sequential,
        );
        let mut buf = Vec::new();
        write_sweep(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("f_hz,analytical_h11_re,analytical_h11_im,analytical_h12_re"));
        assert!(lines[0].ends_with("qa_h22_re,qa_h22_im"));
        assert_eq!(lines[1].split(',').count(), 25);
    }

    #[test]
    fn calibration_round_trip() {
        let s = vec![(5.0, 0.0101), (25.0, 0.015), (45.0, 0.0198)];
        let mut buf = Vec::new();
        write_calibration(&mut buf, &s).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("temp_c,adm_real\n"));
        assert_eq!(read_calibration(&buf[..]).unwrap(), s);
    }
}
