//! CSV fields, artifact bookkeeping and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pullback::field::{GeometryField, GridSpec, Provenance};
use pullback::DenseMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::error::{CliError, CliResult};

/// Environment variable naming the directory all runs are written under.
pub const OUTPUT_ROOT_ENV: &str = "PULLBACK_OUTPUT_ROOT";

/// Coordinates wider than this are left out of CSV files; slices and planes
/// still carry their `t` columns.
pub const MAX_COORDINATE_COLUMNS: usize = 16;

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from)
}

/// 17 significant digits, so parsing returns the identical `f64`.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn coordinate_columns(field: &GeometryField) -> usize {
    let d = field.points.cols();
    if d <= MAX_COORDINATE_COLUMNS {
        d
    } else {
        0
    }
}

/// CSV text: coordinates `x0…`, then `t` (slices) or `t1,t2,t3` (planes),
/// then channels in name order. Rows follow generator order.
pub fn field_csv(field: &GeometryField) -> String {
    let ncoord = coordinate_columns(field);
    let mut header: Vec<String> = (0..ncoord).map(|c| format!("x{c}")).collect();
    match &field.provenance {
        Provenance::Slice { .. } => header.push("t".into()),
        Provenance::Plane { .. } => header.extend(["t1", "t2", "t3"].map(String::from)),
        _ => {}
    }
    header.extend(field.channels.keys().cloned());
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..field.len() {
        let mut row: Vec<String> = field.points.row(i)[..ncoord].iter().map(|&v| format_f64(v)).collect();
        match &field.provenance {
            Provenance::Slice { t, .. } => row.push(format_f64(t[i])),
            Provenance::Plane { barycentric, .. } => row.extend(barycentric.row(i).iter().map(|&v| format_f64(v))),
            _ => {}
        }
        row.extend(field.channels.values().map(|c| format_f64(c[i])));
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn export_csv(field: &GeometryField, path: &Path) -> CliResult<Vec<u8>> {
    let bytes = field_csv(field).into_bytes();
    std::fs::write(path, &bytes).map_err(|e| CliError::io(path, e))?;
    Ok(bytes)
}

fn parse_value(s: &str, path: &Path, line: u64) -> CliResult<f64> {
    s.trim().parse().map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        message: format!("line {line}: {s:?} is not a number"),
    })
}

/// Reads a file written by [`export_csv`] and rebuilds its provenance.
///
/// A 2-column coordinate block whose rows form an exact `n × n` grid is read
/// back as a grid; a `t` column makes a slice and `t1,t2,t3` a plane.
pub fn import_csv(path: &Path) -> CliResult<GeometryField> {
    let parse_err = |message: String| CliError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| parse_err(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        for (c, s) in rec.iter().enumerate() {
            columns[c].push(parse_value(s, path, row as u64 + 2)?);
        }
    }
    let m = columns.first().map_or(0, Vec::len);
    if m == 0 {
        return Err(parse_err("no data rows".into()));
    }
    let mut coords = Vec::new();
    let mut t = None;
    let mut bary: [Option<Vec<f64>>; 3] = [None, None, None];
    let mut channels = BTreeMap::new();
    for (name, col) in header.iter().zip(columns) {
        match name.as_str() {
            "t" => t = Some(col),
            "t1" => bary[0] = Some(col),
            "t2" => bary[1] = Some(col),
            "t3" => bary[2] = Some(col),
            n if n
                .strip_prefix('x')
                .is_some_and(|k| k.parse::<usize>().is_ok_and(|k| k == coords.len())) =>
            {
                coords.push(col)
            }
            _ => {
                channels.insert(name.clone(), col);
            }
        }
    }
    let d = coords.len();
    let points = DenseMatrix::from_fn(m, d, |i, c| coords[c][i]);
    let provenance = if let [Some(a), Some(b), Some(c)] = &bary {
        let resolution = ((((8 * m + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
        if resolution * (resolution + 1) / 2 != m {
            return Err(parse_err(format!("{m} rows do not form a triangular lattice")));
        }
        let barycentric = DenseMatrix::from_fn(m, 3, |i, k| [a, b, c][k][i]);
        Provenance::Plane {
            resolution,
            barycentric,
        }
    } else if let Some(t) = t {
        let (x1, x2) = if d > 0 {
            (points.row(0).to_vec(), points.row(m - 1).to_vec())
        } else {
            (Vec::new(), Vec::new())
        };
        Provenance::Slice { x1, x2, t }
    } else {
        detect_grid(&points).map_or(Provenance::Points, Provenance::Grid)
    };
    Ok(GeometryField {
        points,
        channels,
        provenance,
    })
}

fn detect_grid(points: &DenseMatrix) -> Option<GridSpec> {
    if points.cols() != 2 {
        return None;
    }
    let m = points.rows();
    let n = (m as f64).sqrt().round() as usize;
    if n < 2 || n * n != m {
        return None;
    }
    let g = GridSpec::new(points.row(0)[0], points.row(m - 1)[0], n).ok()?;
    (g.points() == *points).then_some(g)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub task: String,
    pub config_file: String,
    pub config_sha256: String,
    pub seeds: BTreeMap<String, u64>,
    pub files: Vec<FileEntry>,
    pub summary: serde_json::Value,
}

/// Writes files under one run directory and records their hashes.
pub struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    pub fn record(&mut self, rel: &str, bytes: &[u8]) {
        self.files.push(FileEntry {
            path: rel.to_string(),
            sha256: hex(&Sha256::digest(bytes)),
        });
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.record(rel, bytes);
        Ok(())
    }

    pub fn write_field(&mut self, rel: &str, field: &GeometryField) -> CliResult<()> {
        self.write(rel, field_csv(field).as_bytes())
    }

    pub fn finish(self, manifest: ManifestHead, summary: serde_json::Value) -> CliResult<Manifest> {
        let m = Manifest {
            tool: "pullback".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            task: manifest.task,
            config_file: manifest.config_file,
            config_sha256: manifest.config_sha256,
            seeds: manifest.seeds,
            files: self.files,
            summary,
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(m)
    }
}

/// Manifest fields known before the run starts.
#[derive(Debug, Clone)]
pub struct ManifestHead {
    pub task: String,
    pub config_file: String,
    pub config_sha256: String,
    pub seeds: BTreeMap<String, u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use pullback::field::{linear_slice, ternary_plane};

    #[test]
    fn floats_roundtrip_exactly() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0, -0.0] {
            let back: f64 = format_f64(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits());
        }
        assert!(format_f64(f64::NAN).parse::<f64>().unwrap().is_nan());
        assert_eq!(format_f64(f64::NEG_INFINITY).parse::<f64>().unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn grid_csv_layout_and_roundtrip() {
        let g = GridSpec::new(-1.5, 1.5, 40).unwrap();
        let mut f = GeometryField::new(g.points(), Provenance::Grid(g));
        f.set_channel("b", (0..1600).map(|i| (i as f64).sin() / 7.0).collect())
            .unwrap();
        f.set_channel("a", vec![f64::NAN; 1600]).unwrap();
        let text = field_csv(&f);
        assert_eq!(text.lines().count(), 1601);
        assert_eq!(text.lines().next().unwrap(), "x0,x1,a,b");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        export_csv(&f, &p).unwrap();
        let back = import_csv(&p).unwrap();
        assert_eq!(back.provenance, f.provenance);
        assert_eq!(back.points, f.points);
        assert_eq!(back.channels["b"], f.channels["b"]);
        assert!(back.channels["a"].iter().all(|v| v.is_nan()));
        assert_eq!(field_csv(&back), text);
    }

    #[test]
    fn slice_and_plane_columns() {
        let (pts, t) = linear_slice(&[0.0, 1.0], &[2.0, -1.0], 5).unwrap();
        let mut f = GeometryField::new(
            pts,
            Provenance::Slice {
                x1: vec![0.0, 1.0],
                x2: vec![2.0, -1.0],
                t,
            },
        );
        f.set_channel("v", vec![1.0; 5]).unwrap();
        assert!(field_csv(&f).starts_with("x0,x1,t,v\n"));

        let (pts, bary) = ternary_plane(&[0.0; 20], &[1.0; 20], &[2.0; 20], 4).unwrap();
        let mut f = GeometryField::new(
            pts,
            Provenance::Plane {
                resolution: 4,
                barycentric: bary,
            },
        );
        f.set_channel("v", vec![1.0; 10]).unwrap();
        let text = field_csv(&f);
        assert!(text.starts_with("t1,t2,t3,v\n"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        std::fs::write(&p, &text).unwrap();
        let back = import_csv(&p).unwrap();
        assert!(matches!(back.provenance, Provenance::Plane { resolution: 4, .. }));
    }

    #[test]
    fn malformed_csv_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "x0,v\n1.0,abc\n").unwrap();
        let e = import_csv(&p).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("line 2"), "{e}");
    }
}
