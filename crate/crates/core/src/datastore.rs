//! CSV persistence for station datasets and JSON persistence for models.
//!
//! File layout:
//!
//! ```text
//! # station=<name> lat=<v> lon=<v> schema=1
//! [# key=value ...]            (optional provenance lines)
//! timestamp,sun_angle,temperature,dew_point,pressure,precipitation,ghi,dhi,bni,light_state
//! 2019-03-01T06:12:09Z,0.418000,...,0
//! ```
//!
//! Reals are written with six decimals, so values are quantized on write and
//! read back exactly at that precision.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::domain::{validate_observation, SensorObservation, StationDataset};
use crate::error::{Error, Result};
use crate::models::FittedModel;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: &str =
    "timestamp,sun_angle,temperature,dew_point,pressure,precipitation,ghi,dhi,bni,light_state";

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

/// Extra `# key=value` comment lines written after the station line.
pub type Provenance = Vec<(String, String)>;

/// Station name with whitespace encoded, so the comment line stays
/// space-delimited.
fn encode_name(name: &str) -> String {
    name.replace('%', "%25").replace(' ', "%20")
}

fn decode_name(raw: &str) -> String {
    raw.replace("%20", " ").replace("%25", "%")
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .ok()
        .map(|n| n.and_utc())
}

/// Renders the full CSV document.
pub fn dataset_to_csv(ds: &StationDataset, provenance: &[(String, String)]) -> String {
    let mut out = String::with_capacity(64 + ds.len() * 96);
    out.push_str(&format!(
        "# station={} lat={:.6} lon={:.6} schema={}\n",
        encode_name(&ds.station_name),
        ds.latitude,
        ds.longitude,
        SCHEMA_VERSION
    ));
    if !provenance.is_empty() {
        let fields: Vec<String> = provenance.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!("# {}\n", fields.join(" ")));
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for o in &ds.observations {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
            format_timestamp(o.timestamp),
            o.sun_angle,
            o.temperature,
            o.dew_point,
            o.pressure,
            o.precipitation,
            o.ghi,
            o.dhi,
            o.bni,
            o.light_state
        ));
    }
    out
}

pub fn write_dataset_csv(ds: &StationDataset, path: &Path) -> Result<()> {
    write_dataset_csv_with(ds, path, &[])
}

pub fn write_dataset_csv_with(
    ds: &StationDataset,
    path: &Path,
    provenance: &[(String, String)],
) -> Result<()> {
    ds.validate()?;
    write_bytes(path, dataset_to_csv(ds, provenance).as_bytes())
}

/// Writes `bytes`, creating missing parent directories.
pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn read_dataset_csv(path: &Path) -> Result<StationDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset_csv(&text, path).map(|(ds, _)| ds)
}

/// Parses a dataset document; `path` is only used in error messages.
/// Returns the dataset and any provenance fields found in comment lines.
pub fn parse_dataset_csv(text: &str, path: &Path) -> Result<(StationDataset, Provenance)> {
    let row_err = |line: usize, message: String| Error::Row {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut station: Option<(String, f64, f64)> = None;
    let mut provenance = Provenance::new();
    let mut body_start = 0usize;
    let mut comment_lines = 0usize;
    for line in text.lines() {
        let Some(comment) = line.strip_prefix('#') else {
            break;
        };
        comment_lines += 1;
        body_start += line.len() + 1;
        let mut fields = Vec::new();
        for token in comment.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| row_err(comment_lines, format!("malformed metadata token `{token}`")))?;
            fields.push((k.to_string(), v.to_string()));
        }
        if fields.first().map(|(k, _)| k.as_str()) == Some("station") {
            station = Some(parse_station_line(&fields).map_err(|m| row_err(comment_lines, m))?);
        } else {
            provenance.extend(fields);
        }
    }
    let (name, latitude, longitude) = station.ok_or_else(|| Error::Schema {
        path: path.to_path_buf(),
        expected: format!("# station=<name> lat=<v> lon=<v> schema={SCHEMA_VERSION}"),
        found: text.lines().next().unwrap_or("").to_string(),
    })?;

    let body = text.get(body_start.min(text.len())..).unwrap_or("");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(body.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| row_err(comment_lines + 1, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CSV_HEADER {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            expected: CSV_HEADER.to_string(),
            found: header,
        });
    }

    let mut observations = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize) + comment_lines;
            row_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize) + comment_lines;
        let obs = parse_row(&record).map_err(|m| row_err(line, m))?;
        if let Err(violations) = validate_observation(&obs) {
            let names: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(row_err(line, format!("violates {}", names.join("; "))));
        }
        if let Some(prev) = observations.last() {
            let prev: &SensorObservation = prev;
            if obs.timestamp <= prev.timestamp {
                return Err(row_err(
                    line,
                    format!("timestamp {} does not follow {}", obs.timestamp, prev.timestamp),
                ));
            }
            if obs.light_state == prev.light_state {
                return Err(row_err(line, "light_state does not alternate".to_string()));
            }
        }
        observations.push(obs);
    }

    let ds = StationDataset::new(name, latitude, longitude, observations)?;
    Ok((ds, provenance))
}

fn parse_station_line(fields: &[(String, String)]) -> std::result::Result<(String, f64, f64), String> {
    let get = |key: &str| {
        fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| format!("station line lacks `{key}`"))
    };
    let schema: u32 = get("schema")?
        .parse()
        .map_err(|_| "schema is not an integer".to_string())?;
    if schema != SCHEMA_VERSION {
        return Err(format!("unsupported schema {schema}, expected {SCHEMA_VERSION}"));
    }
    let lat = parse_real(get("lat")?).ok_or("lat is not a number")?;
    let lon = parse_real(get("lon")?).ok_or("lon is not a number")?;
    Ok((decode_name(get("station")?), lat, lon))
}

/// Plain decimal notation only: optional sign, digits, optional fraction.
fn parse_real(s: &str) -> Option<f64> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    let mut parts = digits.splitn(2, '.');
    let int = parts.next()?;
    let frac = parts.next().unwrap_or("0");
    let ok = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    if !(ok(int) && ok(frac)) {
        return None;
    }
    s.parse().ok()
}

fn parse_row(record: &csv::StringRecord) -> std::result::Result<SensorObservation, String> {
    if record.len() != 10 {
        return Err(format!("expected 10 fields, found {}", record.len()));
    }
    let real = |i: usize, name: &str| {
        parse_real(&record[i]).ok_or_else(|| format!("{name}: `{}` is not a decimal number", &record[i]))
    };
    let timestamp = parse_timestamp(&record[0])
        .ok_or_else(|| format!("timestamp `{}` is not YYYY-MM-DDThh:mm:ssZ", &record[0]))?;
    let light_state: u8 = record[9]
        .parse()
        .map_err(|_| format!("light_state `{}` is not an integer", &record[9]))?;
    Ok(SensorObservation {
        timestamp,
        sun_angle: real(1, "sun_angle")?,
        temperature: real(2, "temperature")?,
        dew_point: real(3, "dew_point")?,
        pressure: real(4, "pressure")?,
        precipitation: real(5, "precipitation")?,
        ghi: real(6, "ghi")?,
        dhi: real(7, "dhi")?,
        bni: real(8, "bni")?,
        light_state,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_bytes(path, to_json_string(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_model_json(model: &FittedModel, path: &Path) -> Result<()> {
    write_json(model, path)
}

pub fn read_model_json(path: &Path) -> Result<FittedModel> {
    let model: FittedModel = read_json(path)?;
    model.check_schema()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn row(hour: u32, state: u8) -> SensorObservation {
        SensorObservation {
            timestamp: Utc.with_ymd_and_hms(2020, 1, 2, hour, 5, 9).unwrap(),
            sun_angle: -1.25,
            temperature: 7.5,
            dew_point: 5.0,
            pressure: 1009.123456,
            precipitation: 0.0,
            ghi: 0.0,
            dhi: 0.0,
            bni: 0.0,
            light_state: state,
        }
    }

    fn dataset(rows: Vec<SensorObservation>) -> StationDataset {
        StationDataset::new("Wolf Rock", 49.945, -5.808, rows).unwrap()
    }

    #[test]
    fn one_row_gives_three_lines() {
        let text = dataset_to_csv(&dataset(vec![row(7, 0)]), &[]);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "# station=Wolf%20Rock lat=49.945000 lon=-5.808000 schema=1");
        assert_eq!(lines[1], CSV_HEADER);
        assert_eq!(
            lines[2],
            "2020-01-02T07:05:09Z,-1.250000,7.500000,5.000000,1009.123456,0.000000,0.000000,0.000000,0.000000,0"
        );
    }

    #[test]
    fn empty_dataset_round_trips() {
        let ds = dataset(vec![]);
        let text = dataset_to_csv(&ds, &[]);
        assert_eq!(text.lines().count(), 2);
        let (back, _) = parse_dataset_csv(&text, Path::new("mem")).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn provenance_lines_are_returned() {
        let ds = dataset(vec![row(7, 0), row(17, 1)]);
        let prov = vec![("drift_minutes".to_string(), "5".to_string())];
        let text = dataset_to_csv(&ds, &prov);
        let (back, found) = parse_dataset_csv(&text, Path::new("mem")).unwrap();
        assert_eq!(back, ds);
        assert_eq!(found, prov);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let text = dataset_to_csv(&dataset(vec![row(7, 0)]), &[]).replace(",bni,", ",");
        match parse_dataset_csv(&text, Path::new("mem")) {
            Err(Error::Schema { expected, found, .. }) => {
                assert_eq!(expected, CSV_HEADER);
                assert!(!found.contains("bni"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_row_names_its_line() {
        let rows: Vec<_> = (0..16).map(|h| row(h + 1, (h % 2) as u8)).collect();
        let mut text = dataset_to_csv(&dataset(rows), &[]);
        // Lines 1-2 are comment and header, rows occupy 3..=18; line 17 is row 15.
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let l = &mut lines[16];
        l.replace_range(l.len() - 1.., "3");
        text = lines.join("\n");
        match parse_dataset_csv(&text, Path::new("f.csv")) {
            Err(Error::Row { line, message, .. }) => {
                assert_eq!(line, 17);
                assert!(message.contains("light_state"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn out_of_order_rows_are_rejected() {
        let text = dataset_to_csv(&dataset(vec![row(7, 0), row(17, 1)]), &[]);
        let mut lines: Vec<&str> = text.lines().collect();
        lines.swap(2, 3);
        assert!(matches!(
            parse_dataset_csv(&lines.join("\n"), Path::new("m")),
            Err(Error::Row { line: 4, .. })
        ));
    }

    #[test]
    fn locale_style_numbers_are_rejected() {
        assert_eq!(parse_real("1009.5"), Some(1009.5));
        assert_eq!(parse_real("-0.25"), Some(-0.25));
        assert_eq!(parse_real("1,009.5"), None);
        assert_eq!(parse_real("1009,5"), None);
        assert_eq!(parse_real("1e3"), None);
        assert_eq!(parse_real("NaN"), None);
    }
}
