//! Subcommands of the `mitotrack` binary. Each writes `run.json` to its
//! output directory before doing any work.

pub mod bench;
pub mod io;

use std::fs::{self, File};
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mitotrack::config::TrackerConfig;
use mitotrack::density::nft::read_tensor;
use mitotrack::density::{detections_from_stack, OffsetUnits, PredictionStack};
use mitotrack::metrics::{evaluate, Report};
use mitotrack::mht::{extract_lineage, resolve_config, run};
use mitotrack::sim::{simulate, SimConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// Reproducibility record of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub inputs: Vec<InputFile>,
    pub config_path: Option<String>,
    pub out_dir: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    fn new(
        subcommand: &str,
        inputs: &[&Path],
        config_path: Option<&Path>,
        out_dir: &Path,
        seed: Option<u64>,
        config: serde_json::Value,
    ) -> Result<Self> {
        Ok(Self {
            subcommand: subcommand.into(),
            version: VERSION.into(),
            inputs: inputs
                .iter()
                .map(|p| {
                    Ok(InputFile {
                        path: p.display().to_string(),
                        sha256: sha256_file(p)?,
                    })
                })
                .collect::<Result<_>>()?,
            config_path: config_path.map(|p| p.display().to_string()),
            out_dir: out_dir.display().to_string(),
            seed,
            config,
        })
    }

    fn write(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        write_json(&out_dir.join("run.json"), self)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Tracks `detections` and writes tracks.csv, res_track.txt and run.json.
pub fn cmd_track(
    detections: &Path,
    config: Option<&Path>,
    out_dir: &Path,
    seed: Option<u64>,
) -> Result<mitotrack::LineageTree> {
    let mut cfg: TrackerConfig = match config {
        Some(p) => read_json(p)?,
        None => TrackerConfig::default(),
    };
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    cfg.validate()?;
    let frames = io::read_detections(detections)?;
    let resolved = resolve_config(&cfg, &frames);
    let mut inputs = vec![detections];
    inputs.extend(config);
    RunManifest::new(
        "track",
        &inputs,
        config,
        out_dir,
        Some(resolved.rng_seed),
        serde_json::to_value(&resolved)?,
    )?
    .write(out_dir)?;

    log::info!("tracking {} frames", frames.len());
    let store = run(&frames, &resolved)?;
    let tree = extract_lineage(&store, &frames, &resolved)?;
    io::write_tracks(&out_dir.join("tracks.csv"), &tree)?;
    io::write_res_track(&out_dir.join("res_track.txt"), &tree)?;
    log::info!("{} tracks, {} divisions", tree.tracks.len(), tree.divisions().len());
    Ok(tree)
}

/// Simulates a colony; writes detections.csv plus the ground truth under
/// `gt/` in the tracks.csv / res_track.txt formats.
pub fn cmd_simulate(config: Option<&Path>, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    let mut cfg: SimConfig = match config {
        Some(p) => read_json(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let inputs: Vec<&Path> = config.into_iter().collect();
    RunManifest::new("simulate", &inputs, config, out_dir, Some(cfg.seed), serde_json::to_value(&cfg)?)?
        .write(out_dir)?;
    let sim = simulate(&cfg)?;
    io::write_detections(&out_dir.join("detections.csv"), &sim.detections)?;
    let gt = out_dir.join("gt");
    fs::create_dir_all(&gt)?;
    io::write_tracks(&gt.join("tracks.csv"), &sim.gt)?;
    io::write_res_track(&gt.join("res_track.txt"), &sim.gt)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateSettings {
    match_radius: f64,
}

/// Scores the lineage in `pred` against `gt` (directories holding
/// tracks.csv and res_track.txt) and writes metrics.json.
pub fn cmd_evaluate(pred: &Path, gt: &Path, out_dir: &Path, match_radius: f64) -> Result<Report> {
    if !(match_radius > 0.0 && match_radius.is_finite()) {
        bail!("match radius must be positive, got {match_radius}");
    }
    let files = [
        pred.join("tracks.csv"),
        pred.join("res_track.txt"),
        gt.join("tracks.csv"),
        gt.join("res_track.txt"),
    ];
    let inputs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    let settings = EvaluateSettings { match_radius };
    RunManifest::new("evaluate", &inputs, None, out_dir, None, serde_json::to_value(&settings)?)?
        .write(out_dir)?;
    let report = evaluate(&io::read_lineage(pred)?, &io::read_lineage(gt)?, match_radius);
    write_json(&out_dir.join("metrics.json"), &report)?;
    Ok(report)
}

/// Per-frame tensor files of a densify manifest. Paths are relative to the
/// manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameFiles {
    pub frame: usize,
    /// `H × W`, or `n_aug × H × W` (averaged on load).
    pub seg: PathBuf,
    /// `n_aug × H × W × 2`.
    pub centroid_offsets: PathBuf,
    /// `n_aug × H × W × 2`.
    pub motion_offsets: PathBuf,
    /// `H × W` int32 instance labels.
    pub labels: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensifyManifest {
    pub offset_units: OffsetUnits,
    #[serde(default = "default_clamp_eps")]
    pub clamp_eps: f64,
    pub frames: Vec<FrameFiles>,
}

fn default_clamp_eps() -> f64 {
    TrackerConfig::default().clamp_eps
}

fn load_tensor(path: &Path) -> Result<mitotrack::density::nft::Tensor> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_tensor(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn load_stack(base: &Path, ff: &FrameFiles, units: OffsetUnits) -> Result<PredictionStack<f64>> {
    let (seg_dims, seg) = load_tensor(&base.join(&ff.seg))?.into_f32()?;
    let (lab_dims, labels) = load_tensor(&base.join(&ff.labels))?.into_i32()?;
    let (c_dims, c_off) = load_tensor(&base.join(&ff.centroid_offsets))?.into_f32()?;
    let (m_dims, m_off) = load_tensor(&base.join(&ff.motion_offsets))?.into_f32()?;
    let [h, w] = lab_dims[..] else {
        bail!("frame {}: labels must be H×W, got {:?}", ff.frame, lab_dims);
    };
    let n_aug = match c_dims[..] {
        [n, hh, ww, 2] if hh == h && ww == w => n,
        _ => bail!("frame {}: centroid offsets must be n_aug×{h}×{w}×2, got {:?}", ff.frame, c_dims),
    };
    if m_dims != c_dims {
        bail!("frame {}: motion offsets {:?} differ from centroid offsets {:?}", ff.frame, m_dims, c_dims);
    }
    let seg: Vec<f64> = match seg_dims[..] {
        [hh, ww] if hh == h && ww == w => seg.iter().map(|&v| v as f64).collect(),
        [n, hh, ww] if hh == h && ww == w && n > 0 => {
            let px = h * w;
            (0..px)
                .map(|p| (0..n).map(|a| seg[a * px + p] as f64).sum::<f64>() / n as f64)
                .collect()
        }
        _ => bail!("frame {}: segmentation must be {h}×{w} or n×{h}×{w}, got {:?}", ff.frame, seg_dims),
    };
    let widen = |v: Vec<f32>| v.into_iter().map(f64::from).collect::<Vec<_>>();
    let mut stack = PredictionStack::new(ff.frame, h, w, n_aug, seg, widen(c_off), widen(m_off), labels)?;
    stack.convert_offsets(units);
    Ok(stack)
}

/// Turns per-frame network outputs into detections.csv.
pub fn cmd_densify(manifest: &Path, out_dir: &Path) -> Result<usize> {
    let m: DensifyManifest = read_json(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut paths = vec![manifest.to_path_buf()];
    for ff in &m.frames {
        for p in [&ff.seg, &ff.centroid_offsets, &ff.motion_offsets, &ff.labels] {
            paths.push(base.join(p));
        }
    }
    let inputs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
    RunManifest::new("densify", &inputs, None, out_dir, None, serde_json::to_value(&m)?)?.write(out_dir)?;

    let n_frames = m.frames.iter().map(|f| f.frame + 1).max().unwrap_or(0);
    let mut frames = vec![Vec::new(); n_frames];
    for ff in &m.frames {
        if !frames[ff.frame].is_empty() {
            bail!("frame {} listed twice", ff.frame);
        }
        let stack = load_stack(base, ff, m.offset_units)?;
        frames[ff.frame] = detections_from_stack(&stack, m.clamp_eps)?;
    }
    io::write_detections(&out_dir.join("detections.csv"), &frames)?;
    Ok(frames.iter().map(Vec::len).sum())
}

#[derive(Debug, Clone, Serialize)]
struct BenchSettings<'a> {
    sizes: &'a [usize],
    trials: usize,
}

/// Writes runtime_hungarian.csv with one row of mean solve times per size.
pub fn cmd_bench_assign(sizes: &[usize], trials: usize, seed: u64, out_dir: &Path) -> Result<Vec<bench::BenchRow>> {
    if sizes.is_empty() || trials == 0 {
        bail!("need at least one size and one trial");
    }
    let settings = BenchSettings { sizes, trials };
    RunManifest::new("bench-assign", &[], None, out_dir, Some(seed), serde_json::to_value(&settings)?)?
        .write(out_dir)?;
    let rows = bench::run(sizes, trials, seed)?;
    let mut w = csv::Writer::from_path(out_dir.join("runtime_hungarian.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}
