//! Ingestion, validation and alignment of multi-station hourly wind series.
//!
//! The on-disk format is a wide CSV with header `timestamp,<id1>,<id2>,...`,
//! ISO-8601 UTC hour-aligned timestamps and one column per station. Empty
//! cells are missing values; runs of missing values up to a caller-supplied
//! gap limit are linearly interpolated and flagged in the fill mask, longer
//! runs reject the file. A canonical dataset round-trips through the same CSV
//! plus a sidecar JSON carrying station metadata and the fill mask as run
//! lengths.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Identity and position of one measuring station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationMeta {
    /// Short unique identifier (CSV column header).
    pub id: String,
    /// Free-text name; defaults to the id when ingesting plain CSV.
    pub name: String,
    /// Decimal degrees, north positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    /// Decimal degrees, east positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitude: Option<f64>,
}

impl StationMeta {
    /// Metadata with just an id.
    pub fn named(id: impl Into<String>) -> Self {
        let id = id.into();
        StationMeta {
            name: id.clone(),
            id,
            latitude: None,
            longitude: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidDataset("station id must be nonempty".into()));
        }
        if let Some(lat) = self.latitude {
            if !(-90.0..=90.0).contains(&lat) {
                return Err(Error::InvalidDataset(format!(
                    "station '{}': latitude {lat} out of [-90, 90]",
                    self.id
                )));
            }
        }
        if let Some(lon) = self.longitude {
            if !(-180.0..=180.0).contains(&lon) {
                return Err(Error::InvalidDataset(format!(
                    "station '{}': longitude {lon} out of [-180, 180]",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// Immutable aligned multi-station hourly wind speed dataset.
///
/// All series share the same length; the timestamp of hour `t` is
/// `start + t` hours. Values are finite, nonnegative m/s with no missing
/// cells; interpolated cells are flagged in the fill mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    stations: Vec<StationMeta>,
    start: DateTime<Utc>,
    values: Vec<Vec<f64>>,
    filled_mask: Vec<Vec<bool>>,
}

impl Dataset {
    /// Builds a dataset from parts, checking every invariant.
    pub fn new(
        stations: Vec<StationMeta>,
        start: DateTime<Utc>,
        values: Vec<Vec<f64>>,
        filled_mask: Vec<Vec<bool>>,
    ) -> Result<Self> {
        if stations.is_empty() || values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if stations.len() != values.len() || stations.len() != filled_mask.len() {
            return Err(Error::InvalidDataset(
                "stations, values and mask must have the same station count".into(),
            ));
        }
        let len = values[0].len();
        if len == 0 {
            return Err(Error::EmptyDataset);
        }
        for (p, meta) in stations.iter().enumerate() {
            meta.validate()?;
            if stations[..p].iter().any(|m| m.id == meta.id) {
                return Err(Error::DuplicateStation(meta.id.clone()));
            }
            if values[p].len() != len || filled_mask[p].len() != len {
                return Err(Error::InvalidDataset(format!(
                    "station '{}': series length differs",
                    meta.id
                )));
            }
            for (t, &v) in values[p].iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        station: meta.id.clone(),
                        hour: t,
                    });
                }
                if v < 0.0 {
                    return Err(Error::NegativeSpeed {
                        station: meta.id.clone(),
                        hour: t,
                        value: v,
                    });
                }
            }
        }
        Ok(Dataset {
            stations,
            start,
            values,
            filled_mask,
        })
    }

    /// Number of stations P.
    pub fn station_count(&self) -> usize {
        self.stations.len()
    }

    /// Series length T in hours.
    pub fn len(&self) -> usize {
        self.values[0].len()
    }

    /// True when the dataset holds no hours (never constructible; kept for API symmetry).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stations(&self) -> &[StationMeta] {
        &self.stations
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    /// Timestamp of hour index `t`.
    pub fn timestamp(&self, t: usize) -> DateTime<Utc> {
        self.start + Duration::hours(t as i64)
    }

    /// Full series of station `p`.
    pub fn series(&self, p: usize) -> &[f64] {
        &self.values[p]
    }

    /// Wind speed of station `p` at hour `t`.
    pub fn value(&self, p: usize, t: usize) -> f64 {
        self.values[p][t]
    }

    /// Whether the cell was filled by interpolation.
    pub fn filled(&self, p: usize, t: usize) -> bool {
        self.filled_mask[p][t]
    }

    /// Count of interpolated cells across all stations.
    pub fn filled_cells(&self) -> usize {
        self.filled_mask
            .iter()
            .map(|m| m.iter().filter(|&&f| f).count())
            .sum()
    }

    /// Resolves a station id to its column index.
    pub fn station_index(&self, id: &str) -> Result<usize> {
        self.stations
            .iter()
            .position(|m| m.id == id)
            .ok_or_else(|| Error::UnknownStation(id.to_string()))
    }

    /// Sub-dataset over hours `[from, to)`; station list unchanged.
    pub fn slice(&self, from: usize, to: usize) -> Result<Dataset> {
        if from >= to || to > self.len() {
            return Err(Error::SliceRange {
                from,
                to,
                len: self.len(),
            });
        }
        Ok(Dataset {
            stations: self.stations.clone(),
            start: self.timestamp(from),
            values: self.values.iter().map(|s| s[from..to].to_vec()).collect(),
            filled_mask: self
                .filled_mask
                .iter()
                .map(|m| m[from..to].to_vec())
                .collect(),
        })
    }

    /// Appends a dataset that continues this one hour-for-hour.
    pub fn concat(&self, tail: &Dataset) -> Result<Dataset> {
        if self.stations != tail.stations {
            return Err(Error::InvalidDataset(
                "cannot concatenate datasets with different stations".into(),
            ));
        }
        if tail.start != self.timestamp(self.len()) {
            return Err(Error::Timestamps(format!(
                "tail starts at {}, expected {}",
                tail.start.to_rfc3339(),
                self.timestamp(self.len()).to_rfc3339()
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&tail.values)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        let filled_mask = self
            .filled_mask
            .iter()
            .zip(&tail.filled_mask)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Ok(Dataset {
            stations: self.stations.clone(),
            start: self.start,
            values,
            filled_mask,
        })
    }

    /// Single-station view as a new dataset (used for per-station AR fits).
    pub fn single_station(&self, p: usize) -> Result<Dataset> {
        if p >= self.station_count() {
            return Err(Error::TargetOutOfRange {
                target: p,
                stations: self.station_count(),
            });
        }
        Ok(Dataset {
            stations: vec![self.stations[p].clone()],
            start: self.start,
            values: vec![self.values[p].clone()],
            filled_mask: vec![self.filled_mask[p].clone()],
        })
    }
}

fn parse_timestamp(raw: &str, line: usize) -> Result<DateTime<Utc>> {
    let parsed = DateTime::parse_from_rfc3339(raw.trim()).map_err(|e| Error::Csv {
        line,
        msg: format!("bad timestamp '{raw}': {e}"),
    })?;
    if parsed.offset().local_minus_utc() != 0 {
        return Err(Error::Timestamps(format!(
            "timestamp '{raw}' is not UTC (line {line})"
        )));
    }
    let utc = parsed.with_timezone(&Utc);
    if utc.minute() != 0 || utc.second() != 0 || utc.nanosecond() != 0 {
        return Err(Error::Timestamps(format!(
            "timestamp '{raw}' is not hour-aligned (line {line})"
        )));
    }
    Ok(utc)
}

/// Ingests a wide CSV of hourly station series.
///
/// Missing runs of length at most `gap_limit` hours are linearly interpolated
/// and flagged; longer runs, leading or trailing gaps, negative speeds and
/// non-hourly timestamps reject the file. Column order defines station order.
pub fn ingest_csv(path: impl AsRef<Path>, gap_limit: usize) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    ingest_csv_reader(file, gap_limit)
}

/// [`ingest_csv`] over any reader.
pub fn ingest_csv_reader<R: Read>(reader: R, gap_limit: usize) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    if headers.len() < 2 || headers.get(0).map(str::trim) != Some("timestamp") {
        return Err(Error::Csv {
            line: 1,
            msg: "header must be 'timestamp,<id1>,<id2>,...'".into(),
        });
    }
    let stations: Vec<StationMeta> = headers.iter().skip(1).map(StationMeta::named).collect();
    let station_count = stations.len();

    let mut start: Option<DateTime<Utc>> = None;
    let mut prev: Option<DateTime<Utc>> = None;
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); station_count];

    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| Error::Csv {
            line,
            msg: e.to_string(),
        })?;
        if record.len() != station_count + 1 {
            return Err(Error::Csv {
                line,
                msg: format!(
                    "expected {} fields, found {}",
                    station_count + 1,
                    record.len()
                ),
            });
        }
        let ts = parse_timestamp(&record[0], line)?;
        if let Some(prev_ts) = prev {
            if ts != prev_ts + Duration::hours(1) {
                return Err(Error::Timestamps(format!(
                    "expected {} after {}, found {} (line {line})",
                    (prev_ts + Duration::hours(1)).to_rfc3339(),
                    prev_ts.to_rfc3339(),
                    ts.to_rfc3339()
                )));
            }
        } else {
            start = Some(ts);
        }
        prev = Some(ts);

        for (p, cell) in record.iter().skip(1).enumerate() {
            if cell.is_empty() {
                columns[p].push(None);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Csv {
                line,
                msg: format!("station '{}': bad value '{cell}'", stations[p].id),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    station: stations[p].id.clone(),
                    hour: idx,
                });
            }
            if v < 0.0 {
                return Err(Error::NegativeSpeed {
                    station: stations[p].id.clone(),
                    hour: idx,
                    value: v,
                });
            }
            columns[p].push(Some(v));
        }
    }

    let start = start.ok_or(Error::EmptyDataset)?;
    let mut values = Vec::with_capacity(station_count);
    let mut filled_mask = Vec::with_capacity(station_count);
    for (p, column) in columns.iter().enumerate() {
        let (series, mask) = fill_gaps(column, &stations[p].id, gap_limit)?;
        values.push(series);
        filled_mask.push(mask);
    }

    Dataset::new(stations, start, values, filled_mask)
}

/// Linear interpolation of interior missing runs up to `gap_limit` hours.
fn fill_gaps(column: &[Option<f64>], id: &str, gap_limit: usize) -> Result<(Vec<f64>, Vec<bool>)> {
    let len = column.len();
    let mut series = vec![0.0; len];
    let mut mask = vec![false; len];
    let mut t = 0;
    while t < len {
        match column[t] {
            Some(v) => {
                series[t] = v;
                t += 1;
            }
            None => {
                let run_start = t;
                while t < len && column[t].is_none() {
                    t += 1;
                }
                let run = t - run_start;
                if run_start == 0 || t == len {
                    return Err(Error::EdgeGap {
                        station: id.to_string(),
                    });
                }
                if run > gap_limit {
                    return Err(Error::GapExceedsLimit {
                        station: id.to_string(),
                        start: run_start,
                        run,
                        limit: gap_limit,
                    });
                }
                let left = series[run_start - 1];
                let right = column[t].expect("run is interior");
                for (k, cell) in (run_start..t).enumerate() {
                    let frac = (k + 1) as f64 / (run + 1) as f64;
                    series[cell] = left + frac * (right - left);
                    mask[cell] = true;
                }
            }
        }
    }
    Ok((series, mask))
}

/// Sidecar metadata persisted next to a canonical dataset CSV.
#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    schema_version: u32,
    stations: Vec<StationMeta>,
    /// Per station, fill-mask runs as `[start, length]` pairs.
    filled_runs: Vec<Vec<[usize; 2]>>,
}

fn mask_to_runs(mask: &[bool]) -> Vec<[usize; 2]> {
    let mut runs = Vec::new();
    let mut t = 0;
    while t < mask.len() {
        if mask[t] {
            let start = t;
            while t < mask.len() && mask[t] {
                t += 1;
            }
            runs.push([start, t - start]);
        } else {
            t += 1;
        }
    }
    runs
}

fn runs_to_mask(runs: &[[usize; 2]], len: usize) -> Result<Vec<bool>> {
    let mut mask = vec![false; len];
    for &[start, run] in runs {
        if start + run > len {
            return Err(Error::InvalidDataset(format!(
                "fill run [{start}, {run}] exceeds series length {len}"
            )));
        }
        for cell in &mut mask[start..start + run] {
            *cell = true;
        }
    }
    Ok(mask)
}

/// Sidecar path for a dataset CSV (`data.csv` -> `data.meta.json`).
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Writes the canonical CSV plus its metadata sidecar.
pub fn write_canonical(ds: &Dataset, csv_path: impl AsRef<Path>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let mut file = std::fs::File::create(csv_path)?;
    write_csv(ds, &mut file)?;
    let sidecar = Sidecar {
        schema_version: 1,
        stations: ds.stations.clone(),
        filled_runs: ds.filled_mask.iter().map(|m| mask_to_runs(m)).collect(),
    };
    let mut out = serde_json::to_string_pretty(&sidecar)?;
    out.push('\n');
    std::fs::write(sidecar_path(csv_path), out)?;
    Ok(())
}

/// Writes the wide CSV body to any writer.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["timestamp".to_string()];
    header.extend(ds.stations.iter().map(|m| m.id.clone()));
    wtr.write_record(&header).map_err(csv_io)?;
    for t in 0..ds.len() {
        let mut row = Vec::with_capacity(ds.station_count() + 1);
        row.push(ds.timestamp(t).format("%Y-%m-%dT%H:00:00Z").to_string());
        for p in 0..ds.station_count() {
            row.push(format!("{}", ds.value(p, t)));
        }
        wtr.write_record(&row).map_err(csv_io)?;
    }
    wtr.flush()?;
    Ok(())
}

fn csv_io(err: csv::Error) -> Error {
    Error::Csv {
        line: 0,
        msg: err.to_string(),
    }
}

/// Reads a canonical dataset, restoring station metadata and the fill mask
/// from the sidecar when present. The CSV itself must be gap-free.
pub fn read_canonical(csv_path: impl AsRef<Path>) -> Result<Dataset> {
    let csv_path = csv_path.as_ref();
    let ds = ingest_csv(csv_path, 0)?;
    let sidecar_file = sidecar_path(csv_path);
    if !sidecar_file.exists() {
        return Ok(ds);
    }
    let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_file)?)?;
    if sidecar.stations.len() != ds.station_count()
        || sidecar
            .stations
            .iter()
            .zip(ds.stations())
            .any(|(a, b)| a.id != b.id)
    {
        return Err(Error::InvalidDataset(
            "sidecar station list does not match CSV header".into(),
        ));
    }
    if sidecar.filled_runs.len() != ds.station_count() {
        return Err(Error::InvalidDataset(
            "sidecar fill runs do not match station count".into(),
        ));
    }
    let filled_mask = sidecar
        .filled_runs
        .iter()
        .map(|runs| runs_to_mask(runs, ds.len()))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(sidecar.stations, ds.start, ds.values, filled_mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn hour_stamp(i: usize) -> String {
        let start = chrono::Utc
            .with_ymd_and_hms(2014, 1, 6, 0, 0, 0)
            .unwrap();
        (start + Duration::hours(i as i64))
            .format("%Y-%m-%dT%H:00:00Z")
            .to_string()
    }

    fn csv_of(rows: &[&str]) -> String {
        let mut s = String::from("timestamp,a,b,c\n");
        for (i, row) in rows.iter().enumerate() {
            s.push_str(&format!("{},{row}\n", hour_stamp(i)));
        }
        s
    }

    fn two_station_csv(col_a: &[&str]) -> String {
        let mut s = String::from("timestamp,a,b\n");
        for (i, cell) in col_a.iter().enumerate() {
            s.push_str(&format!("{},{cell},1.0\n", hour_stamp(i)));
        }
        s
    }

    #[test]
    fn interpolates_single_gap_at_midpoint() {
        let ds = ingest_csv_reader(two_station_csv(&["1.0", "", "3.0"]).as_bytes(), 1).unwrap();
        assert_eq!(ds.series(0), &[1.0, 2.0, 3.0]);
        assert!(ds.filled(0, 1));
        assert!(!ds.filled(0, 0) && !ds.filled(0, 2));
    }

    #[test]
    fn rejects_gap_exceeding_limit() {
        let err =
            ingest_csv_reader(two_station_csv(&["5.0", "", "", "8.0"]).as_bytes(), 1).unwrap_err();
        assert!(matches!(err, Error::GapExceedsLimit { run: 2, limit: 1, .. }));
    }

    #[test]
    fn passes_through_complete_data() {
        let rows: Vec<String> = (0..48).map(|i| format!("{}.0,2.5,3.5", i % 9)).collect();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let ds = ingest_csv_reader(csv_of(&refs).as_bytes(), 3).unwrap();
        assert_eq!(ds.station_count(), 3);
        assert_eq!(ds.len(), 48);
        assert_eq!(ds.filled_cells(), 0);
    }

    #[test]
    fn rejects_edge_gaps() {
        let err = ingest_csv_reader(two_station_csv(&["", "2.0", "3.0"]).as_bytes(), 5).unwrap_err();
        assert!(matches!(err, Error::EdgeGap { .. }));
        let err = ingest_csv_reader(two_station_csv(&["1.0", "2.0", ""]).as_bytes(), 5).unwrap_err();
        assert!(matches!(err, Error::EdgeGap { .. }));
    }

    #[test]
    fn rejects_negative_speed() {
        let err = ingest_csv_reader(two_station_csv(&["1.0", "-0.5"]).as_bytes(), 0).unwrap_err();
        assert!(matches!(err, Error::NegativeSpeed { hour: 1, .. }));
    }

    #[test]
    fn rejects_non_hourly_timestamps() {
        let s = "timestamp,a\n2014-01-06T23:00:00Z,1.0\n2014-01-07T01:00:00Z,2.0\n";
        assert!(matches!(
            ingest_csv_reader(s.as_bytes(), 0).unwrap_err(),
            Error::Timestamps(_)
        ));
        let s = "timestamp,a\n2014-01-06T00:30:00Z,1.0\n";
        assert!(matches!(
            ingest_csv_reader(s.as_bytes(), 0).unwrap_err(),
            Error::Timestamps(_)
        ));
    }

    #[test]
    fn rejects_malformed_rows() {
        let s = "timestamp,a,b\n2014-01-06T00:00:00Z,1.0\n";
        assert!(matches!(
            ingest_csv_reader(s.as_bytes(), 0).unwrap_err(),
            Error::Csv { line: 2, .. }
        ));
        let s = "timestamp,a\n2014-01-06T00:00:00Z,abc\n";
        assert!(matches!(
            ingest_csv_reader(s.as_bytes(), 0).unwrap_err(),
            Error::Csv { .. }
        ));
    }

    #[test]
    fn interpolated_values_stay_between_brackets() {
        let ds =
            ingest_csv_reader(two_station_csv(&["2.0", "", "", "", "8.0"]).as_bytes(), 3).unwrap();
        assert_eq!(ds.series(0), &[2.0, 3.5, 5.0, 6.5, 8.0]);
        for t in 1..4 {
            assert!(ds.filled(0, t));
            assert!(ds.value(0, t) > 2.0 && ds.value(0, t) < 8.0);
        }
    }

    #[test]
    fn slice_behaves_like_index_arithmetic() {
        let rows: Vec<String> = (0..10).map(|i| format!("{i}.0,1.0,2.0")).collect();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let ds = ingest_csv_reader(csv_of(&refs).as_bytes(), 0).unwrap();

        let full = ds.slice(0, ds.len()).unwrap();
        assert_eq!(full, ds);

        assert!(matches!(
            ds.slice(5, 5).unwrap_err(),
            Error::SliceRange { .. }
        ));

        let train = ds.slice(0, 7).unwrap();
        let val = ds.slice(7, 10).unwrap();
        assert_eq!(train.len(), 7);
        assert_eq!(val.len(), 3);
        assert_eq!(val.start(), ds.timestamp(7));

        // composition: slice(slice(ds,a,b),c,d) == slice(ds,a+c,a+d)
        let inner = ds.slice(2, 9).unwrap().slice(1, 4).unwrap();
        assert_eq!(inner, ds.slice(3, 6).unwrap());
    }

    #[test]
    fn concat_restores_sliced_dataset() {
        let rows: Vec<String> = (0..10).map(|i| format!("{i}.0,1.0,2.0")).collect();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let ds = ingest_csv_reader(csv_of(&refs).as_bytes(), 0).unwrap();
        let glued = ds
            .slice(0, 4)
            .unwrap()
            .concat(&ds.slice(4, 10).unwrap())
            .unwrap();
        assert_eq!(glued, ds);
    }

    #[test]
    fn canonical_round_trip_preserves_values_and_mask() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let ds = ingest_csv_reader(two_station_csv(&["1.0", "", "3.25"]).as_bytes(), 1).unwrap();
        write_canonical(&ds, &path).unwrap();
        let back = read_canonical(&path).unwrap();
        assert_eq!(back, ds);
        assert!(back.filled(0, 1));
    }

    #[test]
    fn ingest_refuses_gaps_when_limit_is_zero() {
        let err = ingest_csv_reader(two_station_csv(&["1.0", "", "3.0"]).as_bytes(), 0).unwrap_err();
        assert!(matches!(err, Error::GapExceedsLimit { .. }));
    }

    #[test]
    fn station_lookup_and_duplicates() {
        let rows = ["1.0,2.0,3.0"];
        let ds = ingest_csv_reader(csv_of(&rows).as_bytes(), 0).unwrap();
        assert_eq!(ds.station_index("b").unwrap(), 1);
        assert!(matches!(
            ds.station_index("zz").unwrap_err(),
            Error::UnknownStation(_)
        ));

        let dup = "timestamp,a,a\n2014-01-06T00:00:00Z,1.0,2.0\n";
        assert!(matches!(
            ingest_csv_reader(dup.as_bytes(), 0).unwrap_err(),
            Error::DuplicateStation(_)
        ));
    }
}
