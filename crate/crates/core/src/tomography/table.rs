//! Counts table: comma-separated, one row per setting, with the header
//! `label,qwp_angle_deg,polarizer_angle_deg,raw_count`.

use std::io::{Read, Write};

use super::{MeasurementSetting, SettingLabel};
use crate::error::{Error, Result};

pub const COUNTS_HEADER: [&str; 4] = ["label", "qwp_angle_deg", "polarizer_angle_deg", "raw_count"];

pub fn read_counts_table<R: Read>(reader: R) -> Result<(Vec<MeasurementSetting>, Vec<u64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| table_error(1, e.to_string()))?;
    if headers.iter().ne(COUNTS_HEADER.iter().copied()) {
        return Err(table_error(
            1,
            format!("expected header `{}`", COUNTS_HEADER.join(",")),
        ));
    }

    let mut settings = Vec::new();
    let mut counts = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            table_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let angle = |i: usize, name: &str| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| table_error(line, format!("{name} `{}` is not a number", &record[i])))
        };
        let label: SettingLabel = record[0].parse().unwrap_or_else(|e| match e {});
        let qwp = angle(1, "qwp_angle_deg")?;
        let pol = angle(2, "polarizer_angle_deg")?;
        let count = record[3]
            .parse::<u64>()
            .map_err(|_| table_error(line, format!("raw_count `{}` is not a non-negative integer", &record[3])))?;
        settings.push(MeasurementSetting::from_degrees(label, qwp, pol));
        counts.push(count);
    }
    if settings.is_empty() {
        return Err(table_error(1, "no measurement rows".into()));
    }
    Ok((settings, counts))
}

pub fn write_counts_table<W: Write>(writer: W, settings: &[MeasurementSetting], counts: &[u64]) -> Result<()> {
    let io = |e: csv::Error| table_error(0, e.to_string());
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(COUNTS_HEADER).map_err(io)?;
    for (s, n) in settings.iter().zip(counts) {
        wtr.write_record([
            s.label.to_string(),
            s.qwp_angle.to_degrees().to_string(),
            s.polarizer_angle.to_degrees().to_string(),
            n.to_string(),
        ])
        .map_err(io)?;
    }
    wtr.flush().map_err(|e| table_error(0, e.to_string()))
}

fn table_error(line: u64, message: String) -> Error {
    Error::Table { line, message }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomography::default_settings;

    #[test]
    fn round_trip() {
        let settings = default_settings();
        let counts = vec![5, 6, 7, 8];
        let mut buf = Vec::new();
        write_counts_table(&mut buf, &settings, &counts).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("label,qwp_angle_deg,polarizer_angle_deg,raw_count\n"));
        let (s, c) = read_counts_table(buf.as_slice()).unwrap();
        assert_eq!(c, counts);
        for (a, b) in s.iter().zip(&settings) {
            assert_eq!(a.label, b.label);
            assert!((a.qwp_angle - b.qwp_angle).abs() < 1e-15);
            assert!((a.polarizer_angle - b.polarizer_angle).abs() < 1e-15);
        }
    }

    #[test]
    fn header_is_required() {
        let err = read_counts_table("H,0,0,10\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Table { line: 1, .. }));
        let err = read_counts_table("raw_count,label,qwp_angle_deg,polarizer_angle_deg\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Table { line: 1, .. }));
    }

    #[test]
    fn bad_rows_report_their_line() {
        let text = "label,qwp_angle_deg,polarizer_angle_deg,raw_count\nH,0,0,10\nV,0,ninety,3\n";
        match read_counts_table(text.as_bytes()).unwrap_err() {
            Error::Table { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("polarizer_angle_deg"));
            }
            other => panic!("{other:?}"),
        }
        let text = "label,qwp_angle_deg,polarizer_angle_deg,raw_count\nH,0,0,-4\n";
        assert!(read_counts_table(text.as_bytes()).is_err());
    }
}
