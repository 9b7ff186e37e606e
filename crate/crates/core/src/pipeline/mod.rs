//! From labelled trips to fixed-length four-channel samples.
//!
//! Per trip: split into label-homogeneous segments, clean each one (time
//! disorder, per-mode speed and acceleration caps, minimum length), merge
//! neighbours that end up with the same label, compute the motion channels
//! over the whole segment, smooth them, and cut them into chunks of `M`
//! points.

mod dataset;
pub mod savgol;

pub use dataset::{
    features_sidecar, read_dataset_file, read_tmsg, split_train_test, write_dataset_file, write_tmsg, ChannelStack,
    Dataset, CHANNELS, TMSG_MAGIC, TMSG_VERSION,
};
pub use savgol::{savgol_smooth, SavitzkyGolay};

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{self, HandcraftedConfig};
use crate::ingest::{self, GpsPoint, ModeLabel, Segment, Trip};
use crate::kinematics::{self, GeodesicConfig, KinematicConfig, KinematicSeries};

/// Speed (m/s) and acceleration (m/s²) limits for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub max_speed: f64,
    pub max_accel: f64,
}

impl Caps {
    /// Used for unlabelled tracks, where the mode is unknown.
    pub const GLOBAL: Caps = Caps {
        max_speed: 50.0,
        max_accel: 10.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub per_mode: [Caps; ModeLabel::COUNT],
}

impl Default for Thresholds {
    fn default() -> Self {
        let caps = |max_speed, max_accel| Caps { max_speed, max_accel };
        Thresholds {
            per_mode: [
                caps(7.0, 3.0),
                caps(12.0, 3.0),
                caps(34.0, 2.0),
                caps(50.0, 10.0),
                caps(34.0, 3.0),
            ],
        }
    }
}

impl Thresholds {
    pub fn caps(&self, mode: ModeLabel) -> Caps {
        self.per_mode[mode.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub segment_len: usize,
    pub min_points: usize,
    pub sg_window: usize,
    pub sg_order: usize,
    pub thresholds: Thresholds,
    pub kinematics: KinematicConfig,
    /// Compute hand-crafted features for every emitted chunk.
    pub handcrafted: Option<HandcraftedConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            segment_len: 200,
            min_points: 10,
            sg_window: 9,
            sg_order: 3,
            thresholds: Thresholds::default(),
            kinematics: KinematicConfig::default(),
            handcrafted: Some(HandcraftedConfig::default()),
        }
    }
}

/// Keep only points whose timestamp is strictly later than the last kept one.
pub fn drop_time_disorder(points: &[GpsPoint]) -> Vec<GpsPoint> {
    let mut out: Vec<GpsPoint> = Vec::with_capacity(points.len());
    for p in points {
        match out.last() {
            Some(last) if p.t <= last.t => {}
            _ => out.push(*p),
        }
    }
    out
}

fn leg_speeds(points: &[GpsPoint], geodesic: &GeodesicConfig) -> Result<Vec<f64>> {
    points
        .windows(2)
        .map(|w| kinematics::speed_with(&w[0], &w[1], geodesic))
        .collect()
}

/// Drop the flagged points. A flag on the last index that has a value also
/// drops the trailing points after it, which have no value of their own
/// and are equally suspect.
fn drop_flagged(points: &[GpsPoint], flagged: &[bool]) -> Vec<GpsPoint> {
    let last_defined = flagged.len() - 1;
    let cut_tail = flagged[last_defined];
    points
        .iter()
        .enumerate()
        .filter(|&(i, _)| !(i < flagged.len() && flagged[i]) && !(cut_tail && i > last_defined))
        .map(|(_, p)| *p)
        .collect()
}

/// Iterate speed and acceleration filtering until nothing changes.
///
/// Speed `S_i` and acceleration `A_i` belong to point `i`, as in the
/// channel definitions. A pass removes every point whose speed exceeds
/// `caps.max_speed`; the next removes every point with
/// `|A_i| > caps.max_accel` on the recomputed speeds. Every productive pass
/// removes at least one point, so the loop terminates.
pub fn filter_outliers(points: &[GpsPoint], caps: Caps, geodesic: &GeodesicConfig) -> Result<Vec<GpsPoint>> {
    let mut pts = drop_time_disorder(points);
    loop {
        let mut changed = false;
        if pts.len() >= 2 {
            let speeds = leg_speeds(&pts, geodesic)?;
            let flagged: Vec<bool> = speeds.iter().map(|&s| s > caps.max_speed).collect();
            if flagged.iter().any(|&f| f) {
                pts = drop_flagged(&pts, &flagged);
                changed = true;
            }
        }
        if pts.len() >= 3 {
            let speeds = leg_speeds(&pts, geodesic)?;
            let flagged: Vec<bool> = (0..pts.len() - 2)
                .map(|i| {
                    let dt = pts[i + 1].t - pts[i].t;
                    ((speeds[i + 1] - speeds[i]) / dt).abs() > caps.max_accel
                })
                .collect();
            if flagged.iter().any(|&f| f) {
                pts = drop_flagged(&pts, &flagged);
                changed = true;
            }
        }
        if !changed {
            return Ok(pts);
        }
    }
}

pub fn filter_kinematic_outliers(segment: &Segment, thresholds: &Thresholds) -> Result<Segment> {
    filter_kinematic_outliers_with(segment, thresholds, &GeodesicConfig::default())
}

pub fn filter_kinematic_outliers_with(
    segment: &Segment,
    thresholds: &Thresholds,
    geodesic: &GeodesicConfig,
) -> Result<Segment> {
    Ok(Segment {
        points: filter_outliers(&segment.points, thresholds.caps(segment.mode), geodesic)?,
        mode: segment.mode,
        trip_ref: segment.trip_ref.clone(),
    })
}

pub fn drop_short(segments: Vec<Segment>, min_points: usize) -> Vec<Segment> {
    segments.into_iter().filter(|s| s.points.len() >= min_points).collect()
}

/// Chunk boundaries for a series of `n` points: full chunks of `m`, plus a
/// final partial chunk if it holds at least `min_points` points.
pub fn chunk_ranges(n: usize, m: usize, min_points: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + m).min(n);
        if end - start == m || end - start >= min_points {
            out.push(start..end);
        }
        start = end;
    }
    out
}

pub fn chunk_series(
    series: &KinematicSeries,
    label: ModeLabel,
    m: usize,
    min_points: usize,
) -> Result<Vec<ChannelStack>> {
    chunk_ranges(series.len(), m, min_points)
        .into_iter()
        .map(|r| {
            let ch = series.channels();
            ChannelStack::from_channels(
                [&ch[0][r.clone()], &ch[1][r.clone()], &ch[2][r.clone()], &ch[3][r]],
                m,
                label,
            )
        })
        .collect()
}

/// Smooth all four channels, then clamp them back into their physical
/// range: the speed and acceleration caps (the filter enforced them before
/// smoothing) and non-negative speed and bearing rate.
pub fn smooth_series(series: &mut KinematicSeries, sg: &mut SavitzkyGolay, caps: Caps, wrap_bearing: bool) {
    for ch in series.channels_mut() {
        *ch = sg.smooth(ch);
    }
    let br_max = if wrap_bearing { 180.0 } else { 360.0 };
    for v in &mut series.speed {
        *v = v.clamp(0.0, caps.max_speed);
    }
    for v in &mut series.accel {
        *v = v.clamp(-caps.max_accel, caps.max_accel);
    }
    for v in &mut series.bearing_rate {
        *v = v.clamp(0.0, br_max);
    }
}

/// Channels and samples for one cleaned segment. Returns the samples and,
/// when configured, their hand-crafted features.
pub fn segment_samples(
    points: &[GpsPoint],
    label: ModeLabel,
    caps: Caps,
    cfg: &PipelineConfig,
) -> Result<(Vec<ChannelStack>, Vec<features::HandcraftedFeatures>)> {
    let mut series = kinematics::compute_series_with(points, &cfg.kinematics)?;
    let mut sg = SavitzkyGolay::new(cfg.sg_window, cfg.sg_order)?;
    smooth_series(&mut series, &mut sg, caps, cfg.kinematics.wrap_bearing);
    let stacks = chunk_series(&series, label, cfg.segment_len, cfg.min_points)?;
    let feats = match &cfg.handcrafted {
        Some(hc) => chunk_ranges(points.len(), cfg.segment_len, cfg.min_points)
            .into_iter()
            .map(|r| features::extract_handcrafted_with(&points[r], hc, &cfg.kinematics.geodesic))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    Ok((stacks, feats))
}

fn clean_segments(segments: Vec<Segment>, cfg: &PipelineConfig) -> Result<Vec<Segment>> {
    let cleaned = segments
        .iter()
        .map(|s| filter_kinematic_outliers_with(s, &cfg.thresholds, &cfg.kinematics.geodesic))
        .collect::<Result<Vec<_>>>()?;
    Ok(drop_short(cleaned, cfg.min_points))
}

/// Clean the segments of one trip. Segments removed by the cleaning can
/// leave same-label neighbours; those are merged and re-cleaned until the
/// segment list is stable.
pub fn clean_trip(trip: &Trip, trip_index: usize, cfg: &PipelineConfig) -> Result<Vec<Segment>> {
    let mut segments = clean_segments(ingest::split_segments(trip, trip_index), cfg)?;
    loop {
        let before = segments.len();
        let merged = ingest::merge_adjacent(segments);
        if merged.len() == before {
            return Ok(merged);
        }
        segments = clean_segments(merged, cfg)?;
    }
}

/// One chunk of an unlabelled track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackChunk {
    pub start_t: f64,
    pub end_t: f64,
    pub points: usize,
    /// Labelled [`ModeLabel::Walk`] as a placeholder.
    pub sample: ChannelStack,
}

/// Inference path for a track without labels: clean with `caps`, then
/// smooth and chunk exactly like a labelled segment. A track left with
/// fewer than `min_points` points yields no chunks.
pub fn track_chunks(points: &[GpsPoint], caps: Caps, cfg: &PipelineConfig) -> Result<Vec<TrackChunk>> {
    let kept = filter_outliers(points, caps, &cfg.kinematics.geodesic)?;
    if kept.len() < cfg.min_points {
        return Ok(Vec::new());
    }
    let cfg = PipelineConfig {
        handcrafted: None,
        ..cfg.clone()
    };
    let (stacks, _) = segment_samples(&kept, ModeLabel::Walk, caps, &cfg)?;
    let ranges = chunk_ranges(kept.len(), cfg.segment_len, cfg.min_points);
    Ok(ranges
        .into_iter()
        .zip(stacks)
        .map(|(r, sample)| TrackChunk {
            start_t: kept[r.start].t,
            end_t: kept[r.end - 1].t,
            points: r.len(),
            sample,
        })
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BuildStats {
    pub trips: usize,
    pub segments: usize,
    pub input_points: usize,
    pub kept_points: usize,
    pub samples: usize,
    pub class_counts: [usize; ModeLabel::COUNT],
}

pub fn build_dataset(trips: &[Trip], cfg: &PipelineConfig) -> Result<Dataset> {
    build_dataset_with_stats(trips, cfg).map(|(d, _)| d)
}

/// Per-trip work runs in parallel; results are merged in trip order, then
/// chunk order, so the output does not depend on the worker count.
pub fn build_dataset_with_stats(trips: &[Trip], cfg: &PipelineConfig) -> Result<(Dataset, BuildStats)> {
    type TripOut = (Vec<ChannelStack>, Vec<features::HandcraftedFeatures>, usize, usize);
    let per_trip: Vec<TripOut> = trips
        .par_iter()
        .enumerate()
        .map(|(i, trip)| {
            let segments = clean_trip(trip, i, cfg)?;
            let mut stacks = Vec::new();
            let mut feats = Vec::new();
            let mut kept = 0;
            for seg in &segments {
                kept += seg.points.len();
                let (s, f) = segment_samples(&seg.points, seg.mode, cfg.thresholds.caps(seg.mode), cfg)?;
                stacks.extend(s);
                feats.extend(f);
            }
            Ok((stacks, feats, segments.len(), kept))
        })
        .collect::<Result<_>>()?;

    let mut ds = Dataset::new(cfg.segment_len, format!("{} trips", trips.len()));
    let mut all_feats = Vec::new();
    let mut stats = BuildStats {
        trips: trips.len(),
        input_points: trips.iter().map(|t| t.points.len()).sum(),
        ..Default::default()
    };
    for (stacks, feats, n_segments, kept) in per_trip {
        stats.segments += n_segments;
        stats.kept_points += kept;
        ds.samples.extend(stacks);
        all_feats.extend(feats);
    }
    if ds.is_empty() {
        return Err(Error::NoUsableSegments);
    }
    if cfg.handcrafted.is_some() {
        ds.features = Some(all_feats);
    }
    stats.samples = ds.len();
    stats.class_counts = ds.class_counts();
    Ok((ds, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::LabeledPoint;

    const M_PER_DEG_LON: f64 = 111_319.490_793_273_57;

    fn pts_from_speeds(speeds: &[f64], dt: f64) -> Vec<GpsPoint> {
        let mut pts = vec![GpsPoint::new(0.0, 0.0, 0.0)];
        let (mut x, mut t) = (0.0, 0.0);
        for s in speeds {
            x += s * dt;
            t += dt;
            pts.push(GpsPoint::new(0.0, x / M_PER_DEG_LON, t));
        }
        pts
    }

    fn times(pts: &[GpsPoint]) -> Vec<f64> {
        pts.iter().map(|p| p.t).collect()
    }

    fn seg(points: Vec<GpsPoint>, mode: ModeLabel) -> Segment {
        Segment {
            points,
            mode,
            trip_ref: "t#0".into(),
        }
    }

    #[test]
    fn time_disorder() {
        let mk = |ts: &[f64]| ts.iter().map(|&t| GpsPoint::new(0.0, 0.0, t)).collect::<Vec<_>>();
        assert_eq!(times(&drop_time_disorder(&mk(&[1.0, 2.0, 3.0]))), vec![1.0, 2.0, 3.0]);
        assert_eq!(
            times(&drop_time_disorder(&mk(&[1.0, 5.0, 3.0, 6.0]))),
            vec![1.0, 5.0, 6.0]
        );
        assert_eq!(times(&drop_time_disorder(&mk(&[1.0, 1.0, 2.0]))), vec![1.0, 2.0]);
    }

    #[test]
    fn walk_speed_spike_removes_offending_point() {
        let mut speeds = vec![1.5; 12];
        speeds[5] = 8.0;
        let s = seg(pts_from_speeds(&speeds, 2.0), ModeLabel::Walk);
        let out = filter_kinematic_outliers(&s, &Thresholds::default()).unwrap();
        assert_eq!(out.points.len(), s.points.len() - 1);
        assert!(!out.points.iter().any(|p| p.t == 10.0));
    }

    #[test]
    fn clean_driving_is_unchanged() {
        let speeds: Vec<f64> = (0..20).map(|i| 20.0 + (i % 5) as f64).collect();
        let s = seg(pts_from_speeds(&speeds, 1.0), ModeLabel::Driving);
        let out = filter_kinematic_outliers(&s, &Thresholds::default()).unwrap();
        assert_eq!(out.points, s.points);
    }

    #[test]
    fn trailing_spike_does_not_cascade() {
        let mut speeds = vec![1.0; 10];
        speeds[9] = 20.0;
        let s = seg(pts_from_speeds(&speeds, 2.0), ModeLabel::Walk);
        let out = filter_kinematic_outliers(&s, &Thresholds::default()).unwrap();
        assert_eq!(out.points.len(), 9);
    }

    #[test]
    fn short_segments() {
        let mk = |n: usize| seg(pts_from_speeds(&vec![1.0; n - 1], 1.0), ModeLabel::Walk);
        let kept = drop_short(vec![mk(9), mk(10), mk(200)], 10);
        let lens: Vec<usize> = kept.iter().map(|s| s.points.len()).collect();
        assert_eq!(lens, vec![10, 200]);
    }

    #[test]
    fn chunk_arithmetic() {
        let lens = |n| {
            chunk_ranges(n, 200, 10)
                .into_iter()
                .map(|r| r.len())
                .collect::<Vec<_>>()
        };
        assert_eq!(lens(450), vec![200, 200, 50]);
        assert_eq!(lens(205), vec![200]);
        assert_eq!(lens(200), vec![200]);
        assert_eq!(lens(9), Vec::<usize>::new());
    }

    #[test]
    fn chunked_stacks_are_padded() {
        let series = KinematicSeries {
            speed: vec![1.0; 450],
            accel: vec![2.0; 450],
            jerk: vec![3.0; 450],
            bearing_rate: vec![4.0; 450],
        };
        let stacks = chunk_series(&series, ModeLabel::Bike, 200, 10).unwrap();
        let valid: Vec<usize> = stacks.iter().map(|s| s.valid_len).collect();
        assert_eq!(valid, vec![200, 200, 50]);
        assert!(stacks.iter().all(|s| s.is_well_formed() && s.label == ModeLabel::Bike));
        assert_eq!(stacks[2].channel(3)[49], 4.0);
        assert_eq!(stacks[2].channel(3)[50], 0.0);
    }

    fn trip(speeds_and_modes: &[(f64, ModeLabel)], dt: f64) -> Trip {
        let speeds: Vec<f64> = speeds_and_modes.iter().map(|x| x.0).collect();
        let pts = pts_from_speeds(&speeds, dt);
        let mut modes: Vec<ModeLabel> = speeds_and_modes.iter().map(|x| x.1).collect();
        modes.push(*modes.last().unwrap());
        Trip {
            user: "u".into(),
            points: pts
                .into_iter()
                .zip(modes)
                .map(|(point, mode)| LabeledPoint { point, mode })
                .collect(),
        }
    }

    #[test]
    fn single_clean_walk_trip_gives_one_sample() {
        let t = trip(&vec![(1.2, ModeLabel::Walk); 199], 2.0);
        let ds = build_dataset(&[t], &PipelineConfig::default()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.samples[0].label, ModeLabel::Walk);
        assert_eq!(ds.samples[0].valid_len, 200);
        assert_eq!(ds.features.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn short_middle_segment_merges_neighbours() {
        let mut legs = vec![(1.2, ModeLabel::Walk); 60];
        legs.extend(vec![(8.0, ModeLabel::Bus); 4]);
        legs.extend(vec![(1.2, ModeLabel::Walk); 60]);
        let t = trip(&legs, 2.0);
        let segs = clean_trip(&t, 0, &PipelineConfig::default()).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].mode, ModeLabel::Walk);
    }

    #[test]
    fn empty_result_is_error() {
        let t = trip(&[(1.0, ModeLabel::Walk); 5], 1.0);
        assert!(matches!(
            build_dataset(&[t], &PipelineConfig::default()),
            Err(Error::NoUsableSegments)
        ));
    }

    #[test]
    fn unlabelled_track_chunks() {
        let pts = pts_from_speeds(&[10.0; 449], 1.0);
        let chunks = track_chunks(&pts, Caps::GLOBAL, &PipelineConfig::default()).unwrap();
        let sizes: Vec<usize> = chunks.iter().map(|c| c.points).collect();
        assert_eq!(sizes, vec![200, 200, 50]);
        assert_eq!(chunks[0].start_t, 0.0);
        assert_eq!(chunks[2].end_t, 449.0);
        assert!(track_chunks(&pts[..5], Caps::GLOBAL, &PipelineConfig::default())
            .unwrap()
            .is_empty());
    }
}
