//! CSV ingestion and emission.
//!
//! Data files (visits, regions, physicians, stress, networks) are written
//! with shortest round-trip floats so that loading what was written gives
//! back the same values. Reports go through [`format_float`], which keeps
//! nine significant digits.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::domain::{AgeBands, AgeGroup, FlowNetwork, MonthIndex, Race, RegionId, RegionInfo, StressProfile, VisitRecord, Zip3};
use crate::error::{Error, Result};

pub const VISITS_HEADER: [&str; 7] = ["patient_id", "month", "zip3", "state", "age_group", "race", "icd10_codes"];
pub const REGIONS_HEADER: [&str; 4] = ["zip3", "state", "lat", "lon"];
pub const PHYSICIANS_HEADER: [&str; 3] = ["zip3", "month", "physician_count"];
pub const STRESS_HEADER: [&str; 4] = ["zip3", "month", "incoming", "capacity"];
pub const NETWORK_HEADER: [&str; 3] = ["src_zip3", "dst_zip3", "weight"];
pub const TOTALS_MARKER: &str = "#totals";
pub const TOTALS_HEADER: [&str; 2] = ["zip3", "incoming_total"];

/// Nine significant digits, printed in shortest form. Non-finite values
/// print as `NA`.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "NA".to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("scientific notation parses");
    // -0 prints as "-0"
    if rounded == 0.0 {
        return "0".to_string();
    }
    rounded.to_string()
}

pub fn format_optional(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), format_float)
}

/// Lossless form used in data files.
pub fn format_exact(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        x.to_string()
    }
}

/// A data row that was skipped during ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// 1-based line in the file; the header is line 1.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisitLoad {
    pub records: Vec<VisitRecord>,
    pub rejected: Vec<Rejection>,
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

/// Positions of the `required` columns in `headers`, in `required` order.
fn column_positions(path: &Path, headers: &StringRecord, required: &[&str]) -> Result<Vec<usize>> {
    let mut missing = Vec::new();
    let mut positions = Vec::with_capacity(required.len());
    for name in required {
        match headers.iter().position(|h| h == *name) {
            Some(p) => positions.push(p),
            None => missing.push(*name),
        }
    }
    if missing.is_empty() {
        Ok(positions)
    } else {
        Err(Error::Validation(format!(
            "{}: missing column(s) {}",
            path.display(),
            missing.join(", ")
        )))
    }
}

fn field<'r>(record: &'r StringRecord, positions: &[usize], k: usize) -> &'r str {
    record.get(positions[k]).unwrap_or("")
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn row_error(path: &Path, record: &StringRecord, err: impl std::fmt::Display) -> Error {
    Error::Validation(format!("{}:{}: {err}", path.display(), line_of(record)))
}

fn parse_f64(field_name: &'static str, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::parse(field_name, format!("{raw:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(field_name, format!("{raw:?} is not finite")));
    }
    Ok(v)
}

fn parse_age(raw: &str, bands: &AgeBands) -> Result<AgeGroup> {
    match raw.trim().parse::<u32>() {
        Ok(age) => Ok(bands.classify(age)),
        Err(_) => raw.parse(),
    }
}

fn parse_visit(record: &StringRecord, pos: &[usize], bands: &AgeBands) -> Result<VisitRecord> {
    let month: MonthIndex = field(record, pos, 1).parse()?;
    let region = RegionId::new(field(record, pos, 2), field(record, pos, 3))?;
    let age = parse_age(field(record, pos, 4), bands)?;
    let race: Race = field(record, pos, 5).parse()?;
    let codes: Vec<&str> = field(record, pos, 6)
        .split(';')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .collect();
    VisitRecord::new(field(record, pos, 0), month, region, age, race, &codes)
}

/// Reads `visits.csv`. Malformed rows are skipped and reported; a missing
/// column fails the whole load. Numeric ages are banded with `bands`.
pub fn load_visits(path: impl AsRef<Path>, bands: &AgeBands) -> Result<VisitLoad> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let pos = column_positions(path, &headers, &VISITS_HEADER)?;
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for row in reader.records() {
        let record = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                rejected.push(Rejection {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        match parse_visit(&record, &pos, bands) {
            Ok(v) => records.push(v),
            Err(e) => rejected.push(Rejection {
                line: line_of(&record),
                reason: e.to_string(),
            }),
        }
    }
    Ok(VisitLoad { records, rejected })
}

fn create_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(WriterBuilder::new().flexible(true).from_writer(BufWriter::new(file)))
}

fn finish(path: &Path, writer: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = writer
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

/// Writes a table with a header row; rows are written in the given order.
pub fn write_table<I, R>(path: impl AsRef<Path>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::csv(path, e))?;
    }
    finish(path, w)
}

/// A whole CSV file as header plus string rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_table(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let header = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| Error::csv(path, e))
        })
        .collect::<Result<_>>()?;
    Ok(Table { header, rows })
}

/// Sorted by patient, month, then region.
pub fn write_visits(path: impl AsRef<Path>, records: &[VisitRecord]) -> Result<()> {
    let mut sorted: Vec<&VisitRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.patient_id, a.month, &a.region.zip3).cmp(&(&b.patient_id, b.month, &b.region.zip3))
    });
    let rows = sorted.into_iter().map(|v| {
        [
            v.patient_id.clone(),
            v.month.to_string(),
            v.region.zip3.to_string(),
            v.region.state.to_string(),
            v.age_group.to_string(),
            v.race.to_string(),
            v.service_codes.join(";"),
        ]
    });
    write_table(path, &VISITS_HEADER, rows)
}

pub fn load_regions(path: impl AsRef<Path>) -> Result<BTreeMap<Zip3, RegionInfo>> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let pos = column_positions(path, &headers, &REGIONS_HEADER)?;
    let mut out = BTreeMap::new();
    for row in reader.records() {
        let record = row.map_err(|e| Error::csv(path, e))?;
        let parsed = (|| {
            let region = RegionId::new(field(&record, &pos, 0), field(&record, &pos, 1))?;
            let lat = parse_f64("lat", field(&record, &pos, 2))?;
            let lon = parse_f64("lon", field(&record, &pos, 3))?;
            RegionInfo::new(region, lat, lon)
        })()
        .map_err(|e| row_error(path, &record, e))?;
        let zip = parsed.region.zip3.clone();
        if out.insert(zip.clone(), parsed).is_some() {
            return Err(row_error(path, &record, format!("duplicate region {zip}")));
        }
    }
    Ok(out)
}

pub fn write_regions<'a>(path: impl AsRef<Path>, regions: impl IntoIterator<Item = &'a RegionInfo>) -> Result<()> {
    let mut sorted: Vec<&RegionInfo> = regions.into_iter().collect();
    sorted.sort_by(|a, b| a.region.zip3.cmp(&b.region.zip3));
    let rows = sorted.into_iter().map(|r| {
        [
            r.region.zip3.to_string(),
            r.region.state.to_string(),
            format_exact(r.lat),
            format_exact(r.lon),
        ]
    });
    write_table(path, &REGIONS_HEADER, rows)
}

pub type PhysicianCounts = BTreeMap<Zip3, BTreeMap<MonthIndex, u64>>;

pub fn load_physicians(path: impl AsRef<Path>) -> Result<PhysicianCounts> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let pos = column_positions(path, &headers, &PHYSICIANS_HEADER)?;
    let mut out: PhysicianCounts = BTreeMap::new();
    for row in reader.records() {
        let record = row.map_err(|e| Error::csv(path, e))?;
        let (zip, month, count) = (|| {
            let zip = Zip3::new(field(&record, &pos, 0))?;
            let month: MonthIndex = field(&record, &pos, 1).parse()?;
            let raw = field(&record, &pos, 2);
            let count: u64 = raw
                .parse()
                .map_err(|_| Error::parse("physician_count", format!("{raw:?} is not a non-negative integer")))?;
            Ok::<_, Error>((zip, month, count))
        })()
        .map_err(|e| row_error(path, &record, e))?;
        if out.entry(zip.clone()).or_default().insert(month, count).is_some() {
            return Err(row_error(path, &record, format!("duplicate entry for {zip} {month}")));
        }
    }
    Ok(out)
}

/// Merges physician counts into region metadata; counts for unknown regions
/// are an error.
pub fn attach_physicians(regions: &mut BTreeMap<Zip3, RegionInfo>, counts: PhysicianCounts) -> Result<()> {
    for (zip, series) in counts {
        let info = regions
            .get_mut(&zip)
            .ok_or_else(|| Error::Validation(format!("physician counts for unknown region {zip}")))?;
        info.physicians.extend(series);
    }
    Ok(())
}

pub fn write_physicians<'a>(path: impl AsRef<Path>, regions: impl IntoIterator<Item = &'a RegionInfo>) -> Result<()> {
    let mut sorted: Vec<&RegionInfo> = regions.into_iter().collect();
    sorted.sort_by(|a, b| a.region.zip3.cmp(&b.region.zip3));
    let rows = sorted.into_iter().flat_map(|r| {
        r.physicians
            .iter()
            .map(move |(m, c)| [r.region.zip3.to_string(), m.to_string(), c.to_string()])
    });
    write_table(path, &PHYSICIANS_HEADER, rows)
}

/// Reads `stress.csv`. Every region must have a row for every month.
pub fn load_stress(path: impl AsRef<Path>) -> Result<StressProfile> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let pos = column_positions(path, &headers, &STRESS_HEADER)?;
    let mut cells: BTreeMap<(MonthIndex, Zip3), (f64, f64)> = BTreeMap::new();
    for row in reader.records() {
        let record = row.map_err(|e| Error::csv(path, e))?;
        let (zip, month, incoming, capacity) = (|| {
            let zip = Zip3::new(field(&record, &pos, 0))?;
            let month: MonthIndex = field(&record, &pos, 1).parse()?;
            let incoming = parse_f64("incoming", field(&record, &pos, 2))?;
            let capacity = parse_f64("capacity", field(&record, &pos, 3))?;
            Ok::<_, Error>((zip, month, incoming, capacity))
        })()
        .map_err(|e| row_error(path, &record, e))?;
        if cells.insert((month, zip.clone()), (incoming, capacity)).is_some() {
            return Err(row_error(path, &record, format!("duplicate entry for {zip} {month}")));
        }
    }
    let months: Vec<MonthIndex> = cells.keys().map(|(m, _)| *m).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let regions: Vec<Zip3> = cells.keys().map(|(_, z)| z.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    if cells.len() != months.len() * regions.len() {
        return Err(Error::Validation(format!(
            "{}: stress rows must cover every region in every month ({} rows for {} regions x {} months)",
            path.display(),
            cells.len(),
            regions.len(),
            months.len()
        )));
    }
    let (load, capacity): (Vec<f64>, Vec<f64>) = cells.into_values().unzip();
    StressProfile::new(regions, months, load, capacity).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

pub fn write_stress(path: impl AsRef<Path>, profile: &StressProfile) -> Result<()> {
    let mut order: Vec<usize> = (0..profile.regions().len()).collect();
    order.sort_by(|&a, &b| profile.regions()[a].cmp(&profile.regions()[b]));
    let rows = profile.months().iter().enumerate().flat_map(|(t, month)| {
        order.iter().map(move |&i| {
            [
                profile.regions()[i].to_string(),
                month.to_string(),
                format_exact(profile.load(t, i)),
                format_exact(profile.capacity(t, i)),
            ]
        })
    });
    write_table(path, &STRESS_HEADER, rows)
}

/// Writes the non-zero entries (diagonal included) followed by the
/// `#totals` block, which also fixes the node order.
pub fn write_network(path: impl AsRef<Path>, net: &FlowNetwork) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    let n = net.node_count();
    w.write_record(NETWORK_HEADER).map_err(|e| Error::csv(path, e))?;
    for i in 0..n {
        for j in 0..n {
            let x = net.weight(i, j);
            if x > 0.0 {
                w.write_record([net.nodes()[i].as_str(), net.nodes()[j].as_str(), &format_exact(x)])
                    .map_err(|e| Error::csv(path, e))?;
            }
        }
    }
    w.write_record([TOTALS_MARKER]).map_err(|e| Error::csv(path, e))?;
    w.write_record(TOTALS_HEADER).map_err(|e| Error::csv(path, e))?;
    for (zip, total) in net.nodes().iter().zip(net.incoming_totals()) {
        w.write_record([zip.as_str(), &format_exact(*total)])
            .map_err(|e| Error::csv(path, e))?;
    }
    finish(path, w)
}

/// Reads a network written by [`write_network`]. The period label is the
/// file stem.
pub fn load_network(path: impl AsRef<Path>) -> Result<FlowNetwork> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let invalid = |line: usize, msg: String| Error::Validation(format!("{}:{line}: {msg}", path.display()));
    let lines: Vec<&str> = text.lines().collect();
    let marker = lines
        .iter()
        .position(|l| l.trim() == TOTALS_MARKER)
        .ok_or_else(|| invalid(lines.len(), format!("missing {TOTALS_MARKER} section")))?;

    let split = |line: &str| -> Vec<String> { line.split(',').map(|s| s.trim().to_string()).collect() };
    if lines.first().map(|l| split(l)) != Some(NETWORK_HEADER.iter().map(|s| s.to_string()).collect()) {
        return Err(invalid(1, format!("expected header {}", NETWORK_HEADER.join(","))));
    }
    if lines.get(marker + 1).map(|l| split(l)) != Some(TOTALS_HEADER.iter().map(|s| s.to_string()).collect()) {
        return Err(invalid(marker + 2, format!("expected header {}", TOTALS_HEADER.join(","))));
    }

    let mut nodes = Vec::new();
    let mut incoming = Vec::new();
    for (k, line) in lines.iter().enumerate().skip(marker + 2) {
        if line.trim().is_empty() {
            continue;
        }
        let parts = split(line);
        if parts.len() != 2 {
            return Err(invalid(k + 1, format!("expected 2 fields, got {}", parts.len())));
        }
        let zip = Zip3::new(&parts[0]).map_err(|e| invalid(k + 1, e.to_string()))?;
        let total = parse_f64("incoming_total", &parts[1]).map_err(|e| invalid(k + 1, e.to_string()))?;
        nodes.push(zip);
        incoming.push(total);
    }
    let n = nodes.len();
    if n == 0 {
        return Err(invalid(marker + 1, "network has no nodes".into()));
    }
    let index: BTreeMap<&Zip3, usize> = nodes.iter().enumerate().map(|(i, z)| (z, i)).collect();
    if index.len() != n {
        return Err(invalid(marker + 1, "duplicate node in totals".into()));
    }

    let mut weights = vec![0.0; n * n];
    let mut seen = vec![false; n * n];
    for (k, line) in lines.iter().enumerate().take(marker).skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parts = split(line);
        if parts.len() != 3 {
            return Err(invalid(k + 1, format!("expected 3 fields, got {}", parts.len())));
        }
        let lookup = |raw: &str| -> Result<usize> {
            let zip = Zip3::new(raw)?;
            index
                .get(&zip)
                .copied()
                .ok_or_else(|| Error::Validation(format!("{zip} is not listed in the totals block")))
        };
        let i = lookup(&parts[0]).map_err(|e| invalid(k + 1, e.to_string()))?;
        let j = lookup(&parts[1]).map_err(|e| invalid(k + 1, e.to_string()))?;
        let w = parse_f64("weight", &parts[2]).map_err(|e| invalid(k + 1, e.to_string()))?;
        if w < 0.0 {
            return Err(invalid(k + 1, format!("negative weight {w}")));
        }
        if std::mem::replace(&mut seen[i * n + j], true) {
            return Err(invalid(k + 1, format!("duplicate entry {} -> {}", parts[0], parts[1])));
        }
        weights[i * n + j] = w;
    }
    let period = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    FlowNetwork::new(period, nodes, weights, incoming)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_float(0.1 + 0.2), "0.3");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333");
        assert_eq!(format_float(123456789012.0), "123456789000");
        assert_eq!(format_float(-0.0), "0");
        assert_eq!(format_float(f64::NAN), "NA");
        assert_eq!(format_float(2.0), "2");
        assert_eq!(format_optional(None), "NA");
    }

    #[test]
    fn exact_format_round_trips() {
        for x in [0.1 + 0.2, 1.0 / 3.0, 1e-300, 12345.678901234567] {
            assert_eq!(format_exact(x).parse::<f64>().unwrap(), x);
        }
    }
}
