//! Measurement CSV export and its inverse.

use neuroseg_core::measure::{MeasurementKind, MeasurementRecord};
use neuroseg_core::PlaneId;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 10] = [
    "id", "kind", "value1", "value2", "units", "plane", "slice", "label", "points", "timestamp",
];

/// `%#.6g`: six significant digits, trailing zeros kept, exponent form
/// outside `[1e-4, 1e6)`.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // rounding may carry into the next decade, so take the exponent after rounding
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let prec = (5 - exp) as usize;
        // keep the trailing point like C's %#g
        if prec == 0 { format!("{x:.0}.") } else { format!("{x:.prec$}") }
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn points_field(points: &[Vec<f64>]) -> String {
    points
        .iter()
        .map(|p| p.iter().map(|&c| sig6(c)).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn export_csv(records: &[MeasurementRecord]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("writing to memory");
    for r in records {
        let row = [
            r.id.to_string(),
            r.kind.name().to_string(),
            sig6(r.value1),
            r.value2.map(sig6).unwrap_or_default(),
            r.units.clone(),
            r.plane.map(|p| p.name().to_string()).unwrap_or_default(),
            r.slice.map(|s| s.to_string()).unwrap_or_default(),
            r.label.map(|l| l.to_string()).unwrap_or_default(),
            points_field(&r.points),
            r.timestamp.to_string(),
        ];
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}

fn field<T: std::str::FromStr>(row: usize, name: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::format(format!("measurement CSV row {row}: bad {name} {s:?}")))
}

fn optional<T: std::str::FromStr>(row: usize, name: &str, s: &str) -> Result<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(row, name, s).map(Some)
    }
}

/// Parses [`export_csv`] output back into records (numbers at the exported precision).
pub fn parse_csv(text: &str) -> Result<Vec<MeasurementRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = rd.headers().map_err(|e| Error::format(e.to_string()))?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(Error::format(format!("unexpected measurement CSV header {headers:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::format(e.to_string()))?;
        let kind = MeasurementKind::from_name(&rec[1])
            .ok_or_else(|| Error::format(format!("measurement CSV row {row}: unknown kind {:?}", &rec[1])))?;
        let plane: Option<PlaneId> = if rec[5].is_empty() {
            None
        } else {
            Some(rec[5].parse().map_err(|_| Error::format(format!("measurement CSV row {row}: bad plane"))) ?)
        };
        let points = if rec[8].is_empty() {
            Vec::new()
        } else {
            rec[8]
                .split(';')
                .map(|p| p.split(' ').map(|c| field::<f64>(row, "point", c)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?
        };
        out.push(MeasurementRecord {
            id: field(row, "id", &rec[0])?,
            kind,
            value1: field(row, "value1", &rec[2])?,
            value2: optional(row, "value2", &rec[3])?,
            units: rec[4].to_string(),
            plane,
            slice: optional(row, "slice", &rec[6])?,
            label: optional(row, "label", &rec[7])?,
            points,
            timestamp: field(row, "timestamp", &rec[9])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(5.0), "5.00000");
        assert_eq!(sig6(0.0), "0.00000");
        assert_eq!(sig6(25.0), "25.0000");
        assert_eq!(sig6(-45.0), "-45.0000");
        assert_eq!(sig6(123456.0), "123456.");
        assert_eq!(sig6(999999.5), "1.00000e+06");
        assert_eq!(sig6(1234567.0), "1.23457e+06");
        assert_eq!(sig6(0.0001), "0.000100000");
        assert_eq!(sig6(0.00001234), "1.23400e-05");
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
    }

    #[test]
    fn header_only_when_empty() {
        assert_eq!(export_csv(&[]), "id,kind,value1,value2,units,plane,slice,label,points,timestamp\r\n");
    }

    #[test]
    fn round_trip() {
        let records = vec![
            MeasurementRecord::new(1, MeasurementKind::Distance, 5.0, None, 1_700_000_000)
                .with_points(vec![vec![0.0, 0.0, 0.0], vec![3.0, 4.0, 0.0]]),
            MeasurementRecord::new(2, MeasurementKind::AreaPerimeter, 25.0, Some(20.0), 1_700_000_001)
                .on_slice(PlaneId::Coronal, 7)
                .with_label(3),
            MeasurementRecord::new(3, MeasurementKind::Angle, 45.0, None, 0).on_slice(PlaneId::Axial, 0),
        ];
        let text = export_csv(&records);
        assert_eq!(text.lines().count(), 4);
        assert_eq!(parse_csv(&text).unwrap(), records);
    }
}
