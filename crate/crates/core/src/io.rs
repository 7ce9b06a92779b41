//! Output bundle: CSV and JSON files written by a run, and readers that
//! bring a [`SimReport`] back from disk.
//!
//! Every file starts with the scenario digest, as a `# config_digest=` line
//! for CSV and TOML, or as the `config_digest` field for JSON.
//!
//! Column orders:
//!
//! | file | columns |
//! |------|---------|
//! | `records.csv` | `packet,slot,detector,time_ns,user` |
//! | `histogram.csv` | `user,slot,detector,count` |
//! | `stray_profile.csv` | `time_ns,alice_circulator,connector_reflections,rayleigh,bob_entrance,total,dominant` |
//! | `schedule.csv` | `user,kind,start_ns,end_ns` |
//!
//! `time_ns` in `records.csv` is the exact picosecond count written with
//! three decimals. `user` is the leaf id, or `-` outside every window.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::postproc::KeyReport;
use crate::scenario::Scenario;
use crate::simcore::{
    expected_raw_rate, mark_coincidences, DetectionRecord, Detector, Histogram, RateModel, RunMeta, SimReport,
};

pub const RECORDS_FILE: &str = "records.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const STRAY_FILE: &str = "stray_profile.csv";
pub const SCHEDULE_FILE: &str = "schedule.csv";
pub const KEY_REPORT_FILE: &str = "key_report.json";
pub const META_FILE: &str = "meta.json";
pub const CONFIG_FILE: &str = "scenario.toml";

const BUNDLE_FILES: [&str; 7] =
    [RECORDS_FILE, HISTOGRAM_FILE, STRAY_FILE, SCHEDULE_FILE, KEY_REPORT_FILE, META_FILE, CONFIG_FILE];

const DIGEST_PREFIX: &str = "# config_digest=";
const UNATTRIBUTED_PREFIX: &str = "# unattributed=";

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Reads the leading `# config_digest=` line.
pub fn read_digest(reader: &mut impl BufRead) -> Result<String> {
    let mut line = String::new();
    reader.read_line(&mut line)?;
    line.trim_end()
        .strip_prefix(DIGEST_PREFIX)
        .map(str::to_owned)
        .ok_or_else(|| Error::Parse("missing `# config_digest=` header".into()))
}

fn format_ps_as_ns(ps: u64) -> String {
    format!("{}.{:03}", ps / 1000, ps % 1000)
}

fn parse_ns_as_ps(text: &str) -> Result<u64> {
    let bad = || Error::Parse(format!("bad time `{text}`: expected nanoseconds with three decimals"));
    let (whole, frac) = text.split_once('.').ok_or_else(bad)?;
    if frac.len() != 3 {
        return Err(bad());
    }
    let whole: u64 = whole.parse().map_err(|_| bad())?;
    let frac: u64 = frac.parse().map_err(|_| bad())?;
    Ok(whole * 1000 + frac)
}

pub fn write_records(w: impl Write, digest: &str, records: &[DetectionRecord]) -> Result<()> {
    let mut w = w;
    writeln!(w, "{DIGEST_PREFIX}{digest}")?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["packet", "slot", "detector", "time_ns", "user"]).map_err(csv_err)?;
    for r in records {
        let user = r.user.map_or_else(|| "-".to_string(), |u| u.to_string());
        csv.write_record([
            r.packet.to_string(),
            r.slot.to_string(),
            r.detector.to_string(),
            format_ps_as_ns(r.time_ps),
            user,
        ])
        .map_err(csv_err)?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct RecordRow {
    packet: u64,
    slot: u32,
    detector: String,
    time_ns: String,
    user: String,
}

/// Returns the digest and the records, with coincidences recomputed.
pub fn read_records(r: impl Read) -> Result<(String, Vec<DetectionRecord>)> {
    let mut r = BufReader::new(r);
    let digest = read_digest(&mut r)?;
    let mut csv = csv::Reader::from_reader(r);
    let mut records = Vec::new();
    for row in csv.deserialize::<RecordRow>() {
        let row = row.map_err(csv_err)?;
        let user = match row.user.as_str() {
            "-" => None,
            u => Some(u.parse().map_err(|_| Error::Parse(format!("bad user `{u}`")))?),
        };
        records.push(DetectionRecord {
            packet: row.packet,
            slot: row.slot,
            detector: row.detector.parse()?,
            time_ps: parse_ns_as_ps(&row.time_ns)?,
            user,
            coincidence: false,
        });
    }
    mark_coincidences(&mut records);
    Ok((digest, records))
}

pub fn write_histogram(w: impl Write, digest: &str, h: &Histogram) -> Result<()> {
    let mut w = w;
    writeln!(w, "{DIGEST_PREFIX}{digest}")?;
    writeln!(w, "{UNATTRIBUTED_PREFIX}{}", h.unattributed)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["user", "slot", "detector", "count"]).map_err(csv_err)?;
    for (u, leaf) in h.users.iter().enumerate() {
        for slot in 0..h.slots {
            for d in [Detector::A, Detector::B] {
                csv.write_record([leaf.to_string(), slot.to_string(), d.to_string(), h.count(u, slot, d).to_string()])
                    .map_err(csv_err)?;
            }
        }
    }
    csv.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct HistogramRow {
    user: usize,
    slot: usize,
    detector: String,
    count: u64,
}

pub fn read_histogram(r: impl Read) -> Result<(String, Histogram)> {
    let mut r = BufReader::new(r);
    let digest = read_digest(&mut r)?;
    let mut line = String::new();
    r.read_line(&mut line)?;
    let unattributed = line
        .trim_end()
        .strip_prefix(UNATTRIBUTED_PREFIX)
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| Error::Parse("missing `# unattributed=` header".into()))?;
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize::<HistogramRow>() {
        rows.push(row.map_err(csv_err)?);
    }
    let mut users: Vec<usize> = Vec::new();
    for row in &rows {
        if users.last() != Some(&row.user) {
            if users.contains(&row.user) {
                return Err(Error::Parse(format!("histogram rows of user {} are not contiguous", row.user)));
            }
            users.push(row.user);
        }
    }
    let slots = rows.iter().map(|r| r.slot + 1).max().unwrap_or(0);
    if rows.len() != users.len() * slots * 2 {
        return Err(Error::Shape { expected: users.len() * slots * 2, actual: rows.len() });
    }
    let mut h = Histogram::zeros(users.clone(), slots);
    h.unattributed = unattributed;
    for row in rows {
        let u = users.iter().position(|&l| l == row.user).expect("collected above");
        h.add(u, row.slot, row.detector.parse()?, row.count);
    }
    Ok((digest, h))
}

pub fn write_stray_profile(w: impl Write, scenario: &Scenario) -> Result<()> {
    let mut w = w;
    writeln!(w, "{DIGEST_PREFIX}{}", scenario.digest)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "time_ns",
        "alice_circulator",
        "connector_reflections",
        "rayleigh",
        "bob_entrance",
        "total",
        "dominant",
    ])
    .map_err(csv_err)?;
    let p = &scenario.stray;
    for bin in 0..p.len() {
        csv.write_record([
            (bin as f64 * p.bin_width * 1e9).to_string(),
            format!("{:e}", p.alice_circulator[bin]),
            format!("{:e}", p.connector_reflections[bin]),
            format!("{:e}", p.rayleigh[bin]),
            format!("{:e}", p.bob_entrance[bin]),
            format!("{:e}", p.total(bin)),
            p.dominant(bin).name().to_string(),
        ])
        .map_err(csv_err)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_schedule(w: impl Write, scenario: &Scenario) -> Result<()> {
    let s = &scenario.schedule;
    let mut w = w;
    writeln!(w, "{DIGEST_PREFIX}{}", scenario.digest)?;
    writeln!(w, "# period_ns={} min_period_ns={} guard_ns={}", s.period * 1e9, s.min_period * 1e9, s.guard * 1e9)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["user", "kind", "start_ns", "end_ns"]).map_err(csv_err)?;
    for u in &s.users {
        let rows = std::iter::once(("emission", &u.emission))
            .chain(u.stray.iter().map(|w| ("stray", w)))
            .chain(std::iter::once(("signal", &u.signal)));
        for (kind, win) in rows {
            csv.write_record([u.id.to_string(), kind.into(), (win.start * 1e9).to_string(), (win.end * 1e9).to_string()])
                .map_err(csv_err)?;
        }
    }
    csv.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaFile {
    pub config_digest: String,
    pub raw_count_rate: f64,
    pub run: RunMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyReportFile<'a> {
    pub config_digest: &'a str,
    /// Closed-form click rates for comparison with the simulated ones.
    pub expected: RateModel,
    pub users: &'a [KeyReport],
}

/// Writes the full bundle into `dir`, creating it if needed. Refuses to
/// replace existing bundle files unless `overwrite` is set.
pub fn write_bundle(
    dir: &Path,
    scenario: &Scenario,
    report: &SimReport,
    keys: &[KeyReport],
    overwrite: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    if !overwrite {
        if let Some(f) = BUNDLE_FILES.iter().map(|f| dir.join(f)).find(|p| p.exists()) {
            return Err(Error::Io(format!("{} already exists (use --overwrite to replace)", f.display())));
        }
    }
    let digest = scenario.digest.as_str();
    let path = |f: &str| dir.join(f);

    let mut w = create(&path(CONFIG_FILE))?;
    writeln!(w, "{DIGEST_PREFIX}{digest}")?;
    w.write_all(scenario.config.to_toml().as_bytes())?;
    w.flush()?;

    write_records(create(&path(RECORDS_FILE))?, digest, &report.records)?;
    write_histogram(create(&path(HISTOGRAM_FILE))?, digest, &report.histogram)?;
    write_stray_profile(create(&path(STRAY_FILE))?, scenario)?;
    write_schedule(create(&path(SCHEDULE_FILE))?, scenario)?;

    let meta = MetaFile {
        config_digest: digest.to_owned(),
        raw_count_rate: report.raw_count_rate,
        run: report.meta.clone(),
    };
    let mut w = create(&path(META_FILE))?;
    serde_json::to_writer_pretty(&mut w, &meta).map_err(json_err)?;
    writeln!(w)?;
    w.flush()?;

    let key_file = KeyReportFile { config_digest: digest, expected: expected_raw_rate(scenario), users: keys };
    let mut w = create(&path(KEY_REPORT_FILE))?;
    serde_json::to_writer_pretty(&mut w, &key_file).map_err(json_err)?;
    writeln!(w)?;
    w.flush()?;

    Ok(BUNDLE_FILES.iter().map(|f| path(f)).collect())
}

/// Reads the simulation part of a bundle back. All files must carry the
/// same digest.
pub fn read_report(dir: &Path) -> Result<SimReport> {
    let meta: MetaFile = serde_json::from_reader(open(&dir.join(META_FILE))?).map_err(json_err)?;
    let (d_rec, records) = read_records(open(&dir.join(RECORDS_FILE))?)?;
    let (d_hist, histogram) = read_histogram(open(&dir.join(HISTOGRAM_FILE))?)?;
    for (file, d) in [(RECORDS_FILE, &d_rec), (HISTOGRAM_FILE, &d_hist)] {
        if *d != meta.config_digest {
            return Err(Error::Parse(format!("{file} belongs to config {d}, not {}", meta.config_digest)));
        }
    }
    if meta.run.config_digest != meta.config_digest {
        return Err(Error::Parse("meta.json digests disagree".into()));
    }
    Ok(SimReport { records, histogram, raw_count_rate: meta.raw_count_rate, meta: meta.run })
}
