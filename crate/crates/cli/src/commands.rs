//! One-shot geometry of a saved network, and re-rendering of CSV fields.

use std::collections::BTreeMap;
use std::path::Path;

use pullback::field::{GridSpec, LOG_VOLUME, RICCI};
use pullback::geometry::VolumeMode;
use pullback::idx::load_mnist_dir;
use pullback::MlpNetwork;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::config::hex;
use crate::error::{CliError, CliResult, Context};
use crate::output::{import_csv, ArtifactWriter, Manifest, ManifestHead};
use crate::pipeline::{grid_field, plane_field, slice_field, FieldOptions};
use crate::render::{render_field, save_png, Legend, RenderOptions, RenderStyle};

pub fn load_checkpoint(path: &Path) -> CliResult<MlpNetwork> {
    MlpNetwork::load(path).map_err(|e| match e {
        pullback::Error::Io(source) => CliError::io(path, source),
        other => CliError::Parse {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}

/// A point given as comma-separated coordinates, or `mnist-test:I` /
/// `mnist-train:I` for an image from `mnist_dir`.
pub fn parse_point(spec: &str, mnist_dir: &Path) -> CliResult<Vec<f64>> {
    let spec = spec.trim();
    for (prefix, train) in [("mnist-test:", false), ("mnist-train:", true)] {
        if let Some(idx) = spec.strip_prefix(prefix) {
            let i: usize = idx
                .parse()
                .map_err(|_| CliError::config(format!("point {spec:?}: bad index")))?;
            let (tr, te) = load_mnist_dir(mnist_dir).context(|| format!("loading {}", mnist_dir.display()))?;
            let set = if train { tr } else { te };
            if i >= set.len() {
                return Err(CliError::config(format!(
                    "point {spec:?}: index beyond {} examples",
                    set.len()
                )));
            }
            return Ok(set.point(i).to_vec());
        }
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("point {spec:?}: {s:?} is not a number")))
        })
        .collect()
}

/// Where and how to evaluate a saved network.
#[derive(Debug, Clone)]
pub enum PointSet {
    Grid {
        lo: f64,
        hi: f64,
        n: usize,
    },
    Slice {
        from: Vec<f64>,
        to: Vec<f64>,
        points: usize,
    },
    Plane {
        anchors: [Vec<f64>; 3],
        resolution: usize,
    },
}

#[derive(Debug, Clone)]
pub struct GeometryRequest {
    pub checkpoint: std::path::PathBuf,
    pub points: PointSet,
    pub mode: VolumeMode,
    pub ricci: bool,
    pub render: Option<RenderOptions>,
    pub ricci_clip: Option<f64>,
}

fn request_table(req: &GeometryRequest, checkpoint_sha: &str) -> Table {
    let mut t = Table::new();
    t.insert("checkpoint_sha256".into(), Value::String(checkpoint_sha.into()));
    t.insert("volume_mode".into(), Value::String(format!("{:?}", req.mode)));
    t.insert("ricci".into(), Value::Boolean(req.ricci));
    let floats = |v: &[f64]| Value::Array(v.iter().map(|&x| Value::Float(x)).collect());
    let mut p = Table::new();
    match &req.points {
        PointSet::Grid { lo, hi, n } => {
            p.insert("kind".into(), Value::String("grid".into()));
            p.insert("lo".into(), Value::Float(*lo));
            p.insert("hi".into(), Value::Float(*hi));
            p.insert("n".into(), Value::Integer(*n as i64));
        }
        PointSet::Slice { from, to, points } => {
            p.insert("kind".into(), Value::String("slice".into()));
            p.insert("from".into(), floats(from));
            p.insert("to".into(), floats(to));
            p.insert("points".into(), Value::Integer(*points as i64));
        }
        PointSet::Plane { anchors, resolution } => {
            p.insert("kind".into(), Value::String("plane".into()));
            p.insert(
                "anchors".into(),
                Value::Array(anchors.iter().map(|a| floats(a)).collect()),
            );
            p.insert("resolution".into(), Value::Integer(*resolution as i64));
        }
    }
    t.insert("points".into(), Value::Table(p));
    t
}

/// Evaluates a checkpoint over a point set and writes CSV, PNGs and a
/// manifest into `dir`.
pub fn run_geometry(req: &GeometryRequest, dir: &Path) -> CliResult<Manifest> {
    let bytes = std::fs::read(&req.checkpoint).map_err(|e| CliError::io(&req.checkpoint, e))?;
    let net = load_checkpoint(&req.checkpoint)?;
    let checkpoint_sha = hex(&Sha256::digest(&bytes));
    let opts = FieldOptions {
        mode: req.mode,
        ricci: req.ricci,
    };
    let (field, style) = match &req.points {
        PointSet::Grid { lo, hi, n } => {
            let grid = GridSpec::new(*lo, *hi, *n).context(|| "grid".into())?;
            (
                grid_field(&net, &grid, opts).context(|| "grid geometry".into())?.0,
                RenderStyle::Grid,
            )
        }
        PointSet::Slice { from, to, points } => (
            slice_field(&net, from, to, *points, opts).context(|| "slice geometry".into())?,
            RenderStyle::Line,
        ),
        PointSet::Plane { anchors, resolution } => (
            plane_field(&net, [&anchors[0], &anchors[1], &anchors[2]], *resolution, opts)
                .context(|| "plane geometry".into())?,
            RenderStyle::Ternary,
        ),
    };
    let mut w = ArtifactWriter::create(dir)?;
    let table = request_table(req, &checkpoint_sha);
    let text = toml::to_string(&table).expect("request serializes");
    w.write("request.toml", text.as_bytes())?;
    w.write_field("field.csv", &field)?;
    if let Some(ro) = &req.render {
        for (channel, name, clip) in [(LOG_VOLUME, "volume.png", None), (RICCI, "ricci.png", req.ricci_clip)] {
            if !field.channels.contains_key(channel) {
                continue;
            }
            let opts = RenderOptions { clip, ..ro.clone() };
            let (img, _) = render_field(&field, channel, style, &opts)?;
            let png = save_png(&img, &w.path(name))?;
            w.record(name, &png);
        }
    }
    let head = ManifestHead {
        task: "geometry".into(),
        config_file: "request.toml".into(),
        config_sha256: hex(&Sha256::digest(text.as_bytes())),
        seeds: BTreeMap::new(),
    };
    let summary = serde_json::json!({ "points": field.len(), "provenance": field.provenance.describe() });
    w.finish(head, summary)
}

/// Renders one channel of a CSV field to `output`.
pub fn render_csv(
    csv: &Path,
    channel: &str,
    style: RenderStyle,
    opts: &RenderOptions,
    output: &Path,
) -> CliResult<Legend> {
    let field = import_csv(csv)?;
    let (img, legend) = render_field(&field, channel, style, opts)?;
    save_png(&img, output)?;
    Ok(legend)
}
