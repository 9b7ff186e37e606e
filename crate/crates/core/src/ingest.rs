//! GeoLife ingestion: trajectory and label parsing, label attachment, trip
//! and segment splitting, and the JSON-lines trips format.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default trip-gap threshold: 20 minutes.
pub const TRIP_GAP_S: f64 = 1200.0;

const PLT_HEADER_LINES: usize = 6;

/// One timestamped fix. `t` is seconds since the Unix epoch (UTC).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsPoint {
    pub lat: f64,
    pub lon: f64,
    pub t: f64,
}

impl GpsPoint {
    pub fn new(lat: f64, lon: f64, t: f64) -> Self {
        GpsPoint { lat, lon, t }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
            && self.t.is_finite()
            && self.t >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum ModeLabel {
    Walk = 0,
    Bike = 1,
    Bus = 2,
    Driving = 3,
    Train = 4,
}

impl ModeLabel {
    pub const ALL: [ModeLabel; 5] = [
        ModeLabel::Walk,
        ModeLabel::Bike,
        ModeLabel::Bus,
        ModeLabel::Driving,
        ModeLabel::Train,
    ];
    pub const COUNT: usize = 5;

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<ModeLabel> {
        ModeLabel::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeLabel::Walk => "walk",
            ModeLabel::Bike => "bike",
            ModeLabel::Bus => "bus",
            ModeLabel::Driving => "driving",
            ModeLabel::Train => "train",
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Raw GeoLife mode string to one of the five ground modes.
pub fn map_mode(raw: &str) -> Option<ModeLabel> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "walk" => Some(ModeLabel::Walk),
        "bike" => Some(ModeLabel::Bike),
        "bus" => Some(ModeLabel::Bus),
        "car" | "taxi" => Some(ModeLabel::Driving),
        "train" | "subway" | "railway" => Some(ModeLabel::Train),
        _ => None,
    }
}

/// A labelled time span. `mode` is `None` for raw modes outside the five
/// ground modes; points inside such spans are excluded rather than left
/// to a later interval.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelInterval {
    pub start: f64,
    pub end: f64,
    pub mode: Option<ModeLabel>,
}

impl LabelInterval {
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub point: GpsPoint,
    pub mode: ModeLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub user: String,
    pub points: Vec<LabeledPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub points: Vec<GpsPoint>,
    pub mode: ModeLabel,
    pub trip_ref: String,
}

/// Parsed items plus the number of lines that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub items: Vec<T>,
    pub skipped: usize,
}

fn parse_datetime(date: &str, time: &str) -> Option<f64> {
    let joined = format!("{} {}", date.trim(), time.trim());
    NaiveDateTime::parse_from_str(&joined, "%Y-%m-%d %H:%M:%S")
        .ok()
        .map(|dt| dt.and_utc().timestamp() as f64)
}

fn parse_plt_line(line: &str) -> Option<GpsPoint> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() < 7 {
        return None;
    }
    let lat: f64 = fields[0].trim().parse().ok()?;
    let lon: f64 = fields[1].trim().parse().ok()?;
    let t = parse_datetime(fields[5], fields[6])?;
    let p = GpsPoint::new(lat, lon, t);
    p.is_valid().then_some(p)
}

/// Parse a GeoLife `.plt` trajectory file.
///
/// The first six lines are header. Data lines are
/// `lat,lon,0,altitude_ft,days_since_1899-12-30,YYYY-MM-DD,HH:MM:SS`;
/// lines that fail to parse are skipped and counted.
pub fn parse_plt(text: &str) -> Parsed<GpsPoint> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < PLT_HEADER_LINES {
        warn!(
            "trajectory file has only {} lines, expected a 6-line header",
            lines.len()
        );
        return Parsed {
            items: Vec::new(),
            skipped: 0,
        };
    }
    let mut items = Vec::with_capacity(lines.len() - PLT_HEADER_LINES);
    let mut skipped = 0;
    for line in &lines[PLT_HEADER_LINES..] {
        if line.trim().is_empty() {
            continue;
        }
        match parse_plt_line(line) {
            Some(p) => items.push(p),
            None => {
                skipped += 1;
                debug!("skipping malformed trajectory line {line:?}");
            }
        }
    }
    if skipped > 0 {
        warn!("skipped {skipped} malformed trajectory lines");
    }
    Parsed { items, skipped }
}

const PLT_HEADER: &str =
    "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,8421376\n0\n";

/// Days between 1899-12-30 and the Unix epoch.
const PLT_DAY_OFFSET: f64 = 25569.0;

/// Render points in the `.plt` layout read by [`parse_plt`]. Timestamps are
/// written at whole-second resolution and altitude as 0.
pub fn format_plt(points: &[GpsPoint]) -> String {
    let mut out = String::from(PLT_HEADER);
    for p in points {
        let secs = p.t.round() as i64;
        let dt = chrono::DateTime::from_timestamp(secs, 0)
            .map(|d| d.naive_utc())
            .unwrap_or_default();
        out.push_str(&format!(
            "{:.9},{:.9},0,0,{:.10},{},{}\n",
            p.lat,
            p.lon,
            secs as f64 / 86400.0 + PLT_DAY_OFFSET,
            dt.format("%Y-%m-%d"),
            dt.format("%H:%M:%S")
        ));
    }
    out
}

fn parse_label_time(s: &str) -> Option<f64> {
    NaiveDateTime::parse_from_str(s.trim(), "%Y/%m/%d %H:%M:%S")
        .ok()
        .map(|dt| dt.and_utc().timestamp() as f64)
}

/// Parse a GeoLife `labels.txt` (one header line, then tab-separated
/// `start\tend\tmode`).
pub fn parse_labels(text: &str) -> Parsed<LabelInterval> {
    let mut items = Vec::new();
    let mut skipped = 0;
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = (fields.len() >= 3)
            .then(|| Some((parse_label_time(fields[0])?, parse_label_time(fields[1])?, fields[2])))
            .flatten();
        match parsed {
            Some((start, end, raw)) if end >= start => items.push(LabelInterval {
                start,
                end,
                mode: map_mode(raw),
            }),
            Some(_) => {
                skipped += 1;
                warn!("dropping label interval with end before start: {line:?}");
            }
            None => {
                skipped += 1;
                debug!("skipping malformed label line {line:?}");
            }
        }
    }
    Parsed { items, skipped }
}

/// Give each point the mode of the first interval (in file order) that
/// contains its timestamp. Unlabelled points and points in excluded-mode
/// intervals are dropped.
pub fn attach_labels(points: &[GpsPoint], intervals: &[LabelInterval]) -> Vec<LabeledPoint> {
    points
        .iter()
        .filter_map(|p| {
            let interval = intervals.iter().find(|iv| iv.contains(p.t))?;
            interval.mode.map(|mode| LabeledPoint { point: *p, mode })
        })
        .collect()
}

/// Start a new trip whenever the gap to the previous point is strictly
/// greater than `gap_s`.
pub fn split_trips(user: &str, labeled: &[LabeledPoint], gap_s: f64) -> Vec<Trip> {
    let mut trips = Vec::new();
    let mut current: Vec<LabeledPoint> = Vec::new();
    for lp in labeled {
        if let Some(prev) = current.last() {
            if lp.point.t - prev.point.t > gap_s {
                trips.push(Trip {
                    user: user.to_string(),
                    points: std::mem::take(&mut current),
                });
            }
        }
        current.push(*lp);
    }
    if !current.is_empty() {
        trips.push(Trip {
            user: user.to_string(),
            points: current,
        });
    }
    trips
}

/// Maximal label-homogeneous runs of a trip.
pub fn split_segments(trip: &Trip, trip_index: usize) -> Vec<Segment> {
    let trip_ref = format!("{}#{}", trip.user, trip_index);
    let mut segments: Vec<Segment> = Vec::new();
    for lp in &trip.points {
        match segments.last_mut() {
            Some(seg) if seg.mode == lp.mode => seg.points.push(lp.point),
            _ => segments.push(Segment {
                points: vec![lp.point],
                mode: lp.mode,
                trip_ref: trip_ref.clone(),
            }),
        }
    }
    segments
}

/// Concatenate neighbouring segments that carry the same label. This is
/// needed once a segment between them has been removed.
pub fn merge_adjacent(segments: Vec<Segment>) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
    for seg in segments {
        match out.last_mut() {
            Some(prev) if prev.mode == seg.mode => prev.points.extend(seg.points),
            _ => out.push(seg),
        }
    }
    out
}

fn read_to_string(path: &Path) -> Result<String> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    Ok(String::from_utf8_lossy(&buf).into_owned())
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    Ok(entries)
}

/// Counts gathered while loading a GeoLife tree.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestStats {
    pub users: usize,
    pub users_without_labels: usize,
    pub files: usize,
    pub points: usize,
    pub labeled_points: usize,
    pub skipped_lines: usize,
    pub trips: usize,
}

fn load_user(user_dir: &Path, gap_s: f64) -> Result<(Vec<Trip>, IngestStats)> {
    let user = user_dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut stats = IngestStats {
        users: 1,
        ..Default::default()
    };
    let labels_path = user_dir.join("labels.txt");
    if !labels_path.is_file() {
        stats.users_without_labels = 1;
        return Ok((Vec::new(), stats));
    }
    let labels = parse_labels(&read_to_string(&labels_path)?);
    stats.skipped_lines += labels.skipped;

    let traj_dir = user_dir.join("Trajectory");
    let mut points = Vec::new();
    if traj_dir.is_dir() {
        for path in sorted_entries(&traj_dir)? {
            if path.extension().and_then(|e| e.to_str()) != Some("plt") {
                continue;
            }
            let parsed = parse_plt(&read_to_string(&path)?);
            stats.files += 1;
            stats.skipped_lines += parsed.skipped;
            points.extend(parsed.items);
        }
    }
    stats.points = points.len();
    let labeled = attach_labels(&points, &labels.items);
    stats.labeled_points = labeled.len();
    let trips = split_trips(&user, &labeled, gap_s);
    stats.trips = trips.len();
    Ok((trips, stats))
}

/// Load every user under a GeoLife `Data/` directory (the directory itself
/// or its parent may be given). Users are processed in sorted order, so
/// the result does not depend on the worker count.
pub fn load_geolife_dir(root: &Path, gap_s: f64) -> Result<(Vec<Trip>, IngestStats)> {
    let data_dir = if root.join("Data").is_dir() {
        root.join("Data")
    } else {
        root.to_path_buf()
    };
    let users: Vec<PathBuf> = sorted_entries(&data_dir)?.into_iter().filter(|p| p.is_dir()).collect();
    let per_user: Vec<(Vec<Trip>, IngestStats)> = users
        .par_iter()
        .map(|dir| load_user(dir, gap_s))
        .collect::<Result<_>>()?;

    let mut trips = Vec::new();
    let mut total = IngestStats::default();
    for (t, s) in per_user {
        trips.extend(t);
        total.users += s.users;
        total.users_without_labels += s.users_without_labels;
        total.files += s.files;
        total.points += s.points;
        total.labeled_points += s.labeled_points;
        total.skipped_lines += s.skipped_lines;
        total.trips += s.trips;
    }
    Ok((trips, total))
}

#[derive(Serialize, Deserialize)]
struct TripRecord {
    user: String,
    points: Vec<(f64, f64, f64, u8)>,
}

impl From<&Trip> for TripRecord {
    fn from(trip: &Trip) -> Self {
        TripRecord {
            user: trip.user.clone(),
            points: trip
                .points
                .iter()
                .map(|lp| (lp.point.lat, lp.point.lon, lp.point.t, lp.mode.code()))
                .collect(),
        }
    }
}

impl TryFrom<TripRecord> for Trip {
    type Error = Error;

    fn try_from(rec: TripRecord) -> Result<Self> {
        let points = rec
            .points
            .into_iter()
            .map(|(lat, lon, t, code)| {
                let mode = ModeLabel::from_code(code)
                    .ok_or_else(|| Error::Format(format!("mode code {code} out of range")))?;
                Ok(LabeledPoint {
                    point: GpsPoint::new(lat, lon, t),
                    mode,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Trip { user: rec.user, points })
    }
}

/// One JSON object per line: `{"user":..,"points":[[lat,lon,t,mode],..]}`.
pub fn write_trips<W: Write>(out: W, trips: &[Trip]) -> Result<()> {
    let mut out = BufWriter::new(out);
    for trip in trips {
        serde_json::to_writer(&mut out, &TripRecord::from(trip))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trips<R: Read>(input: R) -> Result<Vec<Trip>> {
    let reader = BufReader::new(input);
    let mut trips = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TripRecord =
            serde_json::from_str(&line).map_err(|e| Error::Format(format!("trips line {}: {e}", n + 1)))?;
        trips.push(Trip::try_from(rec)?);
    }
    Ok(trips)
}

pub fn write_trips_file(path: &Path, trips: &[Trip]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trips(file, trips)
}

pub fn read_trips_file(path: &Path) -> Result<Vec<Trip>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trips(file)
}
