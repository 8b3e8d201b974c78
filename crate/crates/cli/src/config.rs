//! Experiment configuration.
//!
//! A config is resolved in three layers: the task's built-in defaults, an
//! optional user TOML file, then `section.key=value` overrides. Every training
//! hyperparameter has a named key whose default is the published value.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use pullback::geometry::VolumeMode;
use pullback::network::InitScheme;
use pullback::train::{Optimizer, TrainConfig};
use pullback::ActivationKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Xor,
    Sinusoid,
    Mnist,
    NngpConvergence,
    BayesChi,
    AmariWu,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::Xor,
        Task::Sinusoid,
        Task::Mnist,
        Task::NngpConvergence,
        Task::BayesChi,
        Task::AmariWu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Xor => "xor",
            Task::Sinusoid => "sinusoid",
            Task::Mnist => "mnist",
            Task::NngpConvergence => "nngp_convergence",
            Task::BayesChi => "bayes_chi",
            Task::AmariWu => "amari_wu",
        }
    }

    /// Input dimension the task's data lives in, when it has data.
    pub fn input_dim(self) -> Option<usize> {
        match self {
            Task::Xor | Task::Sinusoid => Some(2),
            Task::Mnist => Some(784),
            _ => None,
        }
    }

    pub fn trains(self) -> bool {
        matches!(self, Task::Xor | Task::Sinusoid | Task::Mnist)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let norm = s.trim().replace('-', "_");
        Task::ALL
            .into_iter()
            .find(|t| t.name() == norm)
            .ok_or_else(|| CliError::config(format!("task: unknown task {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Grid,
    Slice,
    Plane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeModeKey {
    FullRank,
    Pseudo,
}

impl From<VolumeModeKey> for VolumeMode {
    fn from(k: VolumeModeKey) -> Self {
        match k {
            VolumeModeKey::FullRank => VolumeMode::FullRank,
            VolumeModeKey::Pseudo => VolumeMode::Pseudo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterSource {
    Explicit,
    SinusoidBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub widths: Vec<usize>,
    pub activation: String,
    /// Absent means `1/fan_in`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_variance: Option<f64>,
    pub bias_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    /// 0 trains full batch.
    pub batch_size: usize,
    pub snapshots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub kind: GeometryKind,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub volume_mode: VolumeModeKey,
    pub ricci: bool,
    pub slice_points: usize,
    pub pairs: usize,
    pub pair_seed: u64,
    pub plane_resolution: usize,
    /// Classes whose first test example anchors the ternary plane.
    pub plane_classes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSection {
    pub enabled: bool,
    pub colormap: String,
    /// Symmetric display clip for Ricci heatmaps; 0 disables it.
    pub ricci_clip: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Empty means `$MNIST_DIR`, then the bundled subset.
    pub mnist_dir: String,
    pub sinusoid_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NngpSection {
    pub widths: Vec<usize>,
    pub seeds: usize,
    pub radii: usize,
    pub r_max: f64,
    pub activations: Vec<String>,
    pub sigma2: f64,
    pub zeta2: f64,
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiSection {
    pub q: u32,
    pub n: usize,
    pub y_a: f64,
    pub x_a: Vec<f64>,
    pub rho_points: usize,
    pub lo: f64,
    pub hi: f64,
    pub grid_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmariWuSection {
    pub sigma2: f64,
    /// Required for the amari_wu task; there is no published default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau2: Option<f64>,
    pub center_source: CenterSource,
    pub centers: Vec<Vec<f64>>,
    /// Half-width of the band around the sinusoid from which centers are taken.
    pub margin: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub seed: u64,
    pub output_dir: String,
    pub model: ModelSection,
    pub train: TrainSection,
    pub geometry: GeometrySection,
    pub render: RenderSection,
    pub data: DataSection,
    pub nngp: NngpSection,
    pub chi: ChiSection,
    pub amari_wu: AmariWuSection,
}

const BASE_DEFAULTS: &str = r#"
seed = 0
output_dir = ""

[model]
widths = [2, 20, 2]
activation = "sigmoid"
bias_variance = 0.0

[train]
optimizer = "sgd"
lr = 0.05
momentum = 0.9
weight_decay = 0.0
beta1 = 0.9
beta2 = 0.999
eps = 1e-8
epochs = 10000
batch_size = 0
snapshots = [0, 1000, 10000]

[geometry]
kind = "grid"
lo = -1.5
hi = 1.5
n = 40
volume_mode = "full_rank"
ricci = true
slice_points = 50
pairs = 20
pair_seed = 1
plane_resolution = 20
plane_classes = [7, 6, 1]

[render]
enabled = true
colormap = "viridis"
ricci_clip = 100.0
width = 400
height = 400

[data]
mnist_dir = ""
sinusoid_seed = 0

[nngp]
widths = [64, 256, 1024]
seeds = 25
radii = 20
r_max = 3.0
activations = ["erf", "quadratic"]
sigma2 = 1.0
zeta2 = 1.0
direction = [0.6, 0.8]

[chi]
q = 2
n = 100
y_a = 0.0
x_a = [1.0, 1.0]
rho_points = 201
lo = -1.5
hi = 1.5
grid_n = 40

[amari_wu]
sigma2 = 1.0
center_source = "sinusoid_boundary"
centers = []
margin = 0.05
lo = -1.5
hi = 1.5
n = 40
"#;

fn task_overlay(task: Task) -> &'static str {
    match task {
        Task::Xor => {
            r#"
[model]
widths = [2, 2, 2]
[train]
lr = 0.02
weight_decay = 1e-4
epochs = 2000
batch_size = 0
snapshots = [0, 250, 500, 1000, 2000]
"#
        }
        Task::Sinusoid => {
            r#"
[train]
batch_size = 100
"#
        }
        Task::Mnist => {
            r#"
[model]
widths = [784, 512, 10]
[train]
optimizer = "adam"
lr = 0.001
weight_decay = 1e-4
epochs = 20
batch_size = 1000
snapshots = [0, 20]
[geometry]
kind = "slice"
volume_mode = "pseudo"
ricci = false
"#
        }
        Task::NngpConvergence | Task::BayesChi | Task::AmariWu => "",
    }
}

/// The defaults table for `task`, before any user input.
pub fn default_table(task: Task) -> Table {
    let mut base: Table = BASE_DEFAULTS.parse().expect("built-in defaults parse");
    let overlay: Table = task_overlay(task).parse().expect("built-in overlay parses");
    merge(&mut base, overlay);
    base.insert("task".into(), Value::String(task.name().into()));
    base.insert("output_dir".into(), Value::String(task.name().into()));
    base
}

/// Recursively overlays `top` onto `base`; tables merge, everything else replaces.
pub fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses the right-hand side of `key=value`. TOML literals keep their type;
/// anything else is taken as a bare string.
fn parse_override_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Applies one `dotted.path=value` override.
pub fn apply_override(table: &mut Table, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override {assignment:?} is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::config(format!("override {assignment:?} has an empty key")));
    }
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur.entry(k.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(CliError::config(format!("{path}: {k} is not a section"))),
        };
    }
    cur.insert(keys[keys.len() - 1].to_string(), parse_override_value(raw.trim()));
    Ok(())
}

fn parse_table(text: &str, origin: &Path) -> CliResult<Table> {
    text.parse::<Table>().map_err(|e| CliError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })
}

fn task_in(table: &Table) -> CliResult<Option<Task>> {
    match table.get("task") {
        None => Ok(None),
        Some(Value::String(s)) => s.parse().map(Some),
        Some(other) => Err(CliError::config(format!("task: expected a string, found {other}"))),
    }
}

impl ExperimentConfig {
    /// Resolves defaults → file → overrides. The task comes from the
    /// overrides, then the file, then `fallback_task`.
    pub fn resolve(file: Option<&Path>, overrides: &[String], fallback_task: Option<Task>) -> CliResult<Self> {
        let user = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                parse_table(&text, p)?
            }
            None => Table::new(),
        };
        let mut set = Table::new();
        for o in overrides {
            apply_override(&mut set, o)?;
        }
        let task = match (task_in(&set)?, task_in(&user)?, fallback_task) {
            (Some(t), _, _) | (None, Some(t), _) | (None, None, Some(t)) => t,
            (None, None, None) => return Err(CliError::config("task: no task given")),
        };
        let mut table = default_table(task);
        merge(&mut table, user);
        merge(&mut table, set);
        Self::from_table(table)
    }

    pub fn defaults(task: Task) -> Self {
        Self::from_table(default_table(task)).expect("built-in defaults are valid")
    }

    pub fn from_table(table: Table) -> CliResult<Self> {
        let cfg: Self = serde_path_to_error::deserialize(Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical TOML text; its hash identifies the run.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        hex(&Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn activation(&self) -> CliResult<ActivationKind> {
        self.model
            .activation
            .parse()
            .map_err(|e| CliError::config(format!("model.activation: {e}")))
    }

    pub fn init_scheme(&self) -> InitScheme {
        InitScheme {
            weight_variance: self.model.weight_variance,
            bias_variance: self.model.bias_variance,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        let optimizer = match t.optimizer {
            OptimizerKind::Sgd => Optimizer::Sgd {
                lr: t.lr,
                momentum: t.momentum,
                weight_decay: t.weight_decay,
            },
            OptimizerKind::Adam => Optimizer::Adam {
                lr: t.lr,
                weight_decay: t.weight_decay,
                beta1: t.beta1,
                beta2: t.beta2,
                eps: t.eps,
            },
        };
        TrainConfig {
            optimizer,
            epochs: t.epochs,
            batch_size: (t.batch_size > 0).then_some(t.batch_size),
            seed: self.seed,
            snapshot_epochs: t.snapshots.clone(),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |path: &str, msg: String| Err(CliError::config(format!("{path}: {msg}")));
        if self.output_dir.trim().is_empty() {
            return bad("output_dir", "must not be empty".into());
        }
        if Path::new(&self.output_dir).is_absolute() || self.output_dir.split(['/', '\\']).any(|c| c == "..") {
            return bad("output_dir", "must be a relative path inside the output root".into());
        }
        self.activation()?;
        if let Some(d) = self.task.input_dim() {
            let w = &self.model.widths;
            if w.len() < 3 {
                return bad(
                    "model.widths",
                    format!("need input, hidden and output widths, got {w:?}"),
                );
            }
            if w[0] != d {
                return bad(
                    "model.widths",
                    format!("input width {} does not match task dimension {d}", w[0]),
                );
            }
            if w.contains(&0) {
                return bad("model.widths", "widths must be positive".into());
            }
            let classes = if self.task == Task::Mnist { 10 } else { 2 };
            if *w.last().expect("non-empty") != classes {
                return bad("model.widths", format!("output width must be {classes}"));
            }
            self.train_config()
                .validate()
                .map_err(|e| CliError::config(format!("train: {e}")))?;
            if let Some(v) = self.model.weight_variance {
                if !(v > 0.0 && v.is_finite()) {
                    return bad("model.weight_variance", format!("must be positive, got {v}"));
                }
            }
            if !(self.model.bias_variance >= 0.0 && self.model.bias_variance.is_finite()) {
                return bad("model.bias_variance", "must be non-negative".into());
            }
        }
        let g = &self.geometry;
        if !(g.hi > g.lo) {
            return bad("geometry.hi", format!("must exceed geometry.lo ({} ≤ {})", g.hi, g.lo));
        }
        if g.n < 2 {
            return bad("geometry.n", "need at least 2 points per side".into());
        }
        if g.slice_points < 2 {
            return bad("geometry.slice_points", "need at least 2".into());
        }
        if g.plane_resolution < 2 {
            return bad("geometry.plane_resolution", "need at least 2".into());
        }
        if g.plane_classes.len() != 3 || g.plane_classes.iter().any(|&c| c > 9) {
            return bad("geometry.plane_classes", "need three digit classes".into());
        }
        if matches!(self.task, Task::Xor | Task::Sinusoid) && g.kind != GeometryKind::Grid {
            return bad("geometry.kind", format!("task {} evaluates on a grid", self.task));
        }
        if self.task == Task::Mnist && g.kind == GeometryKind::Grid {
            return bad("geometry.kind", "mnist evaluates on slices or a plane".into());
        }
        let r = &self.render;
        if !crate::render::colormap_names().contains(&r.colormap.as_str()) {
            return bad(
                "render.colormap",
                format!(
                    "unknown colormap {:?}; choose one of {:?}",
                    r.colormap,
                    crate::render::colormap_names()
                ),
            );
        }
        if !(r.ricci_clip >= 0.0) {
            return bad("render.ricci_clip", "must be ≥ 0".into());
        }
        if r.width < 16 || r.height < 16 || r.width > 8192 || r.height > 8192 {
            return bad("render.width", "image sides must lie in 16..=8192".into());
        }
        match self.task {
            Task::NngpConvergence => self.validate_nngp(),
            Task::BayesChi => self.validate_chi(),
            Task::AmariWu => self.validate_amari_wu(),
            _ => Ok(()),
        }
    }

    fn validate_nngp(&self) -> CliResult<()> {
        let n = &self.nngp;
        let bad = |path: &str, msg: &str| Err(CliError::config(format!("nngp.{path}: {msg}")));
        if n.widths.is_empty() || n.widths.contains(&0) {
            return bad("widths", "need positive widths");
        }
        if n.seeds == 0 {
            return bad("seeds", "need at least one seed");
        }
        if n.radii < 2 {
            return bad("radii", "need at least two radii");
        }
        if !(n.r_max > 0.0) {
            return bad("r_max", "must be positive");
        }
        if !(n.sigma2 > 0.0) || !(n.zeta2 >= 0.0) {
            return bad("sigma2", "need σ² > 0 and ζ² ≥ 0");
        }
        let norm = n.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n.direction.is_empty() || !(norm > 0.0) {
            return bad("direction", "need a nonzero direction");
        }
        for a in &n.activations {
            let kind: ActivationKind = a
                .parse()
                .map_err(|e| CliError::config(format!("nngp.activations: {e}")))?;
            let ok = kind == ActivationKind::Erf || kind.monomial_degree().is_some();
            if !ok {
                return bad("activations", "closed forms exist for erf and monomials only");
            }
        }
        Ok(())
    }

    fn validate_chi(&self) -> CliResult<()> {
        let c = &self.chi;
        let bad = |path: &str, msg: &str| Err(CliError::config(format!("chi.{path}: {msg}")));
        if c.q == 0 || c.q > pullback::activation::MAX_MONOMIAL_DEGREE {
            return bad("q", "degree out of range");
        }
        if c.n == 0 {
            return bad("n", "width must be positive");
        }
        if c.x_a.is_empty() || c.x_a.iter().map(|v| v * v).sum::<f64>() == 0.0 {
            return bad("x_a", "training point must be nonzero");
        }
        if c.rho_points < 2 {
            return bad("rho_points", "need at least two points");
        }
        if c.x_a.len() != 2 && c.grid_n > 0 {
            return bad(
                "grid_n",
                "the ratio field is drawn for 2-D training points only; set grid_n = 0",
            );
        }
        if c.grid_n == 1 || !(c.hi > c.lo) {
            return bad("grid_n", "need grid_n = 0 or ≥ 2 with hi > lo");
        }
        Ok(())
    }

    fn validate_amari_wu(&self) -> CliResult<()> {
        let a = &self.amari_wu;
        let bad = |path: &str, msg: String| Err(CliError::config(format!("amari_wu.{path}: {msg}")));
        if !(a.sigma2 > 0.0) {
            return bad("sigma2", "must be positive".into());
        }
        match a.tau2 {
            None => return bad("tau2", "required; there is no default bandwidth".into()),
            Some(t) if !(t > 0.0) => return bad("tau2", format!("must be positive, got {t}")),
            _ => {}
        }
        if a.center_source == CenterSource::Explicit {
            if a.centers.is_empty() {
                return bad("centers", "explicit source needs at least one center".into());
            }
            if let Some(c) = a.centers.iter().find(|c| c.len() != 2) {
                return bad("centers", format!("centers must be 2-D, found {c:?}"));
            }
        }
        if !(a.margin > 0.0) {
            return bad("margin", "must be positive".into());
        }
        if a.n < 2 || !(a.hi > a.lo) {
            return bad("n", "need n ≥ 2 and hi > lo".into());
        }
        Ok(())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_task_has_valid_defaults_except_amari_wu() {
        for task in Task::ALL {
            let r = ExperimentConfig::from_table(default_table(task));
            if task == Task::AmariWu {
                assert!(r.unwrap_err().to_string().contains("amari_wu.tau2"));
            } else {
                assert_eq!(r.unwrap().task, task);
            }
        }
    }

    #[test]
    fn published_values_are_defaults() {
        let s = ExperimentConfig::defaults(Task::Sinusoid);
        assert_eq!(s.model.widths, vec![2, 20, 2]);
        assert_eq!(
            (s.train.lr, s.train.momentum, s.train.weight_decay, s.train.epochs),
            (0.05, 0.9, 0.0, 10000)
        );
        assert_eq!((s.geometry.lo, s.geometry.hi, s.geometry.n), (-1.5, 1.5, 40));
        let x = ExperimentConfig::defaults(Task::Xor);
        assert_eq!((x.train.lr, x.train.weight_decay, x.train.epochs), (0.02, 1e-4, 2000));
        let m = ExperimentConfig::defaults(Task::Mnist);
        assert_eq!(
            (m.train.optimizer, m.train.lr, m.train.batch_size),
            (OptimizerKind::Adam, 0.001, 1000)
        );
    }

    #[test]
    fn overrides_are_typed() {
        let cfg = ExperimentConfig::resolve(
            None,
            &[
                "train.lr=0.1".into(),
                "model.widths=[2, 5, 2]".into(),
                "model.activation=tanh".into(),
            ],
            Some(Task::Sinusoid),
        )
        .unwrap();
        assert_eq!(cfg.train.lr, 0.1);
        assert_eq!(cfg.model.widths, vec![2, 5, 2]);
        assert_eq!(cfg.model.activation, "tanh");
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::resolve(None, &["train.lr=\"fast\"".into()], Some(Task::Xor)).unwrap_err();
        assert!(e.to_string().contains("train.lr"), "{e}");
        let e = ExperimentConfig::resolve(None, &["model.widths=[3, 2, 2]".into()], Some(Task::Xor)).unwrap_err();
        assert!(e.to_string().contains("model.widths"), "{e}");
        let e = ExperimentConfig::resolve(None, &["geometry.bogus=1".into()], Some(Task::Xor)).unwrap_err();
        assert!(e.to_string().contains("geometry"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn override_task_switches_defaults() {
        let cfg = ExperimentConfig::resolve(None, &["task=mnist".into()], Some(Task::Xor)).unwrap();
        assert_eq!(cfg.model.widths[0], 784);
    }

    #[test]
    fn file_layer_sits_between_defaults_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(
            &p,
            "task = \"xor\"\n[train]\nepochs = 10\nsnapshots = [0, 10]\nlr = 0.5\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::resolve(Some(&p), &["train.lr=0.25".into()], None).unwrap();
        assert_eq!(
            (cfg.train.epochs, cfg.train.lr, cfg.train.weight_decay),
            (10, 0.25, 1e-4)
        );
        std::fs::write(&p, "task = [").unwrap();
        let e = ExperimentConfig::resolve(Some(&p), &[], None).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::defaults(Task::Xor);
        assert_eq!(a.sha256(), ExperimentConfig::defaults(Task::Xor).sha256());
        let b = ExperimentConfig::resolve(None, &["seed=1".into()], Some(Task::Xor)).unwrap();
        assert_ne!(a.sha256(), b.sha256());
        let back = ExperimentConfig::from_table(a.to_toml().parse().unwrap()).unwrap();
        assert_eq!(back, a);
    }
}
