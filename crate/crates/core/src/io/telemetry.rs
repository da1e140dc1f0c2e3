//! Telemetry records and their CSV form.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::heat_generation;

/// Exact CSV header of a telemetry file.
pub const TELEMETRY_HEADER: [&str; 8] = [
    "time_s",
    "current_a",
    "voltage_v",
    "t_inf_c",
    "adm_real_s",
    "t_surf_meas_c",
    "t_core_truth_c",
    "t_surf_truth_c",
];

/// One telemetry sample. `current` and `t_inf` hold until the next record.
///
/// Optional channels are `None` when absent and serialize as empty fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    #[serde(rename = "time_s")]
    pub time: f64,
    #[serde(rename = "current_a")]
    pub current: f64,
    #[serde(rename = "voltage_v")]
    pub voltage: f64,
    #[serde(rename = "t_inf_c")]
    pub t_inf: f64,
    #[serde(rename = "adm_real_s")]
    pub adm_real: Option<f64>,
    #[serde(rename = "t_surf_meas_c")]
    pub t_surf_meas: Option<f64>,
    #[serde(rename = "t_core_truth_c")]
    pub t_core_truth: Option<f64>,
    #[serde(rename = "t_surf_truth_c")]
    pub t_surf_truth: Option<f64>,
}

impl TelemetryRecord {
    /// Record with only the mandatory channels.
    pub fn new(time: f64, current: f64, voltage: f64, t_inf: f64) -> Self {
        Self {
            time,
            current,
            voltage,
            t_inf,
            adm_real: None,
            t_surf_meas: None,
            t_core_truth: None,
            t_surf_truth: None,
        }
    }

    /// Irreversible heat for an open-circuit voltage `u_ocv`.
    pub fn heat(&self, u_ocv: f64) -> f64 {
        heat_generation(self.current, self.voltage, u_ocv)
    }
}

/// Rejects negative or non-increasing timestamps and non-finite mandatory fields.
pub fn validate_telemetry(records: &[TelemetryRecord]) -> Result<()> {
    for (i, r) in records.iter().enumerate() {
        if ![r.time, r.current, r.voltage, r.t_inf]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::Input(format!(
                "record {i}: non-finite mandatory field"
            )));
        }
        if r.time < 0.0 {
            return Err(Error::Input(format!(
                "record {i}: negative time {}",
                r.time
            )));
        }
        if i > 0 && !(r.time > records[i - 1].time) {
            return Err(Error::Input(format!(
                "record {i}: time {} does not increase from {}",
                r.time,
                records[i - 1].time
            )));
        }
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::Deserialize { err, .. } => Error::Parse {
            line,
            message: err.to_string(),
        },
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Checks a header row against `expected` exactly.
pub(crate) fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(())
}

/// Reads typed rows from CSV with an exact header.
pub(crate) fn read_rows<T, R>(reader: R, expected: &[&str]) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
{
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(rdr.headers().map_err(csv_error)?, expected)?;
    rdr.deserialize()
        .map(|row| row.map_err(csv_error))
        .collect()
}

/// Writes typed rows as CSV, including the header.
pub(crate) fn write_rows<T, W>(writer: W, rows: impl IntoIterator<Item = T>) -> Result<()>
where
    T: Serialize,
    W: Write,
{
    let mut wtr = csv::Writer::from_writer(writer);
    for row in rows {
        wtr.serialize(row).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_telemetry<R: Read>(reader: R) -> Result<Vec<TelemetryRecord>> {
    let records = read_rows(reader, &TELEMETRY_HEADER)?;
    validate_telemetry(&records)?;
    Ok(records)
}

pub fn write_telemetry<W: Write>(writer: W, records: &[TelemetryRecord]) -> Result<()> {
    if records.is_empty() {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(TELEMETRY_HEADER).map_err(csv_error)?;
        wtr.flush()?;
        return Ok(());
    }
    write_rows(writer, records)
}

pub fn load_telemetry(path: impl AsRef<Path>) -> Result<Vec<TelemetryRecord>> {
    read_telemetry(File::open(path)?)
}

pub fn save_telemetry(path: impl AsRef<Path>, records: &[TelemetryRecord]) -> Result<()> {
    write_telemetry(File::create(path)?, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<TelemetryRecord> {
        let mut a = TelemetryRecord::new(0.0, -12.5, 3.175, 8.0);
        a.t_core_truth = Some(8.0);
        a.t_surf_truth = Some(8.0);
        let mut b = TelemetryRecord::new(1.0, 0.0, 3.3, 8.0);
        b.adm_real = Some(0.0151234);
        b.t_surf_meas = Some(8.0123);
        vec![a, b]
    }

    #[test]
    fn round_trip_and_empty_optionals() {
        let recs = sample();
        let mut buf = Vec::new();
        write_telemetry(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TELEMETRY_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "0.0,-12.5,3.175,8.0,,,8.0,8.0");
        assert_eq!(lines.next().unwrap(), "1.0,0.0,3.3,8.0,0.0151234,8.0123,,");
        assert_eq!(read_telemetry(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn parse_error_carries_line() {
        let text = format!(
            "{}\n0,1,3.3,8,,,,\n1,abc,3.3,8,,,,\n",
            TELEMETRY_HEADER.join(",")
        );
        match read_telemetry(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad_header = "time,current_a\n0,1\n";
        assert!(matches!(
            read_telemetry(bad_header.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn rejects_shuffled_rows() {
        let mut recs = sample();
        recs.swap(0, 1);
        let mut buf = Vec::new();
        write_telemetry(&mut buf, &recs).unwrap();
        assert!(matches!(read_telemetry(&buf[..]), Err(Error::Input(_))));
    }

    #[test]
    fn heat_uses_record_channels() {
        let r = TelemetryRecord::new(0.0, 10.0, 3.4, 8.0);
        assert!((r.heat(3.3) - 1.0).abs() < 1e-12);
    }
}
