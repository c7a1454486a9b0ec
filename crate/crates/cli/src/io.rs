//! On-disk formats: detections.csv, tracks.csv and res_track.txt.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use mitotrack::{Detection, LineageTree, SpatialGaussian, Track, TrackPoint};
use serde::{Deserialize, Serialize};

pub const DETECTION_HEADER: [&str; 14] = [
    "frame", "det_id", "cx", "cy", "cxx", "cxy", "cyy", "mx", "my", "mxx", "mxy", "myy", "clutter",
    "area",
];

pub const TRACK_HEADER: [&str; 5] = ["frame", "track_id", "det_id", "cx", "cy"];

#[derive(Debug, Serialize, Deserialize)]
struct DetectionRow {
    frame: usize,
    det_id: u32,
    cx: f64,
    cy: f64,
    cxx: f64,
    cxy: f64,
    cyy: f64,
    mx: f64,
    my: f64,
    mxx: f64,
    mxy: f64,
    myy: f64,
    clutter: f64,
    area: f64,
}

impl DetectionRow {
    fn from_detection(d: &Detection) -> Self {
        let (c, m) = (&d.centroid, &d.motion_warped);
        Self {
            frame: d.frame,
            det_id: d.det_id,
            cx: c.mean[0],
            cy: c.mean[1],
            cxx: c.cov[0][0],
            cxy: c.cov[0][1],
            cyy: c.cov[1][1],
            mx: m.mean[0],
            my: m.mean[1],
            mxx: m.cov[0][0],
            mxy: m.cov[0][1],
            myy: m.cov[1][1],
            clutter: d.clutter_prob,
            area: d.area,
        }
    }

    fn into_detection(self) -> mitotrack::Result<Detection> {
        let c = SpatialGaussian::new([self.cx, self.cy], [[self.cxx, self.cxy], [self.cxy, self.cyy]])?;
        let m = SpatialGaussian::new([self.mx, self.my], [[self.mxx, self.mxy], [self.mxy, self.myy]])?;
        Detection::new(self.frame, self.det_id, c, m, self.clutter, self.area)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TrackRow {
    frame: usize,
    track_id: u32,
    det_id: i64,
    cx: f64,
    cy: f64,
}

fn check_header(found: &csv::StringRecord, expected: &[&str], path: &Path) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        bail!(
            "{}: line 1: header must be `{}`, got `{}`",
            path.display(),
            expected.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        );
    }
    Ok(())
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

/// Reads detections grouped by frame; `out[k]` holds frame `k`, sorted by
/// id. Frames missing from the file become empty.
pub fn read_detections(path: &Path) -> Result<Vec<Vec<Detection>>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = rdr.headers()?.clone();
    check_header(&header, &DETECTION_HEADER, path)?;
    let mut by_frame: BTreeMap<usize, Vec<Detection>> = BTreeMap::new();
    let mut seen: HashMap<(usize, u32), u64> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("{}: malformed row", path.display()))?;
        let line = line_of(&rec);
        let row: DetectionRow = rec
            .deserialize(Some(&header))
            .with_context(|| format!("{}: line {line}", path.display()))?;
        if let Some(first) = seen.insert((row.frame, row.det_id), line) {
            bail!(
                "{}: line {line}: detection {} of frame {} already defined on line {first}",
                path.display(),
                row.det_id,
                row.frame
            );
        }
        let d = row
            .into_detection()
            .with_context(|| format!("{}: line {line}", path.display()))?;
        by_frame.entry(d.frame).or_default().push(d);
    }
    let n = by_frame.keys().next_back().map_or(0, |k| k + 1);
    let mut frames = vec![Vec::new(); n];
    for (k, mut dets) in by_frame {
        dets.sort_by_key(|d| d.det_id);
        frames[k] = dets;
    }
    Ok(frames)
}

pub fn write_detections(path: &Path, frames: &[Vec<Detection>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for d in frames.iter().flatten() {
        w.serialize(DetectionRow::from_detection(d))?;
    }
    if frames.iter().all(|f| f.is_empty()) {
        w.write_record(DETECTION_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per track point, ordered by frame then track id.
pub fn write_tracks(path: &Path, tree: &LineageTree) -> Result<()> {
    let mut rows: Vec<TrackRow> = tree
        .tracks
        .iter()
        .flat_map(|t| {
            t.points.iter().map(move |p| TrackRow {
                frame: p.frame,
                track_id: t.id,
                det_id: p.det_id.map_or(-1, i64::from),
                cx: p.pos[0],
                cy: p.pos[1],
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.frame, r.track_id));
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    if rows.is_empty() {
        w.write_record(TRACK_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `label begin end parent`, one line per track, ascending label.
pub fn write_res_track(path: &Path, tree: &LineageTree) -> Result<()> {
    let mut tracks: Vec<&Track> = tree.tracks.iter().collect();
    tracks.sort_by_key(|t| t.id);
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for t in tracks {
        writeln!(w, "{} {} {} {}", t.id, t.begin(), t.end(), t.parent)?;
    }
    w.flush()?;
    Ok(())
}

fn read_res_track(path: &Path) -> Result<Vec<(u32, usize, usize, u32)>> {
    let f = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parsed = (fields.len() == 4)
            .then(|| -> Option<_> {
                Some((
                    fields[0].parse().ok()?,
                    fields[1].parse().ok()?,
                    fields[2].parse().ok()?,
                    fields[3].parse().ok()?,
                ))
            })
            .flatten();
        match parsed {
            Some(t) => out.push(t),
            None => bail!("{}: line {}: expected `label begin end parent`", path.display(), i + 1),
        }
    }
    Ok(out)
}

/// Reads `tracks.csv` and `res_track.txt` from `dir` into a validated tree.
pub fn read_lineage(dir: &Path) -> Result<LineageTree> {
    let tracks_path = dir.join("tracks.csv");
    let mut rdr = csv::Reader::from_path(&tracks_path)
        .with_context(|| format!("opening {}", tracks_path.display()))?;
    let header = rdr.headers()?.clone();
    check_header(&header, &TRACK_HEADER, &tracks_path)?;
    let mut points: HashMap<u32, Vec<TrackPoint>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("{}: malformed row", tracks_path.display()))?;
        let line = line_of(&rec);
        let row: TrackRow = rec
            .deserialize(Some(&header))
            .with_context(|| format!("{}: line {line}", tracks_path.display()))?;
        let det_id = match row.det_id {
            -1 => None,
            id => Some(u32::try_from(id).with_context(|| {
                format!("{}: line {line}: det_id {id}", tracks_path.display())
            })?),
        };
        points.entry(row.track_id).or_default().push(TrackPoint {
            frame: row.frame,
            det_id,
            pos: [row.cx, row.cy],
        });
    }
    let mut tracks = Vec::new();
    for (id, begin, end, parent) in read_res_track(&dir.join("res_track.txt"))? {
        let mut pts = points.remove(&id).unwrap_or_default();
        pts.sort_by_key(|p| p.frame);
        if pts.first().map(|p| p.frame) != Some(begin) || pts.last().map(|p| p.frame) != Some(end) {
            bail!("track {id}: points do not span frames {begin}..={end}");
        }
        tracks.push(Track { id, parent, points: pts });
    }
    if let Some(id) = points.keys().min() {
        bail!("track {id} has points but no res_track.txt entry");
    }
    let tree = LineageTree { tracks };
    tree.validate()?;
    Ok(tree)
}
