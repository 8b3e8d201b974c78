//! Experiment pipelines: train → snapshot → geometry, and the
//! infinite-width, Bayesian-correction and kernel studies.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use pullback::closedforms::{bayes_volume_ratio, chi_factor, nngp_geometry, GaussPrior};
use pullback::data::{make_sinusoid, make_xor, sinusoid_boundary, Dataset};
use pullback::field::{magnification_correlation, GeometryField, GridSpec, Provenance, LOG_VOLUME, RICCI};
use pullback::geometry::shallow_log_volume_and_ricci;
use pullback::idx::load_mnist_dir;
use pullback::kernels::amari_wu_metric;
use pullback::network::argmax;
use pullback::train::{evaluate, train_with};
use pullback::{ActivationKind, Error, MlpNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CenterSource, ExperimentConfig, GeometryKind, Task};
use crate::error::{CliError, CliResult, Context};
use crate::output::{format_f64, ArtifactWriter, Manifest, ManifestHead};
use crate::pipeline::{grid_field, plane_field, slice_field, top_decile_distance, FieldOptions};
use crate::render::{render_field, save_png, RenderOptions, RenderStyle};

/// Runs `cfg` and writes its artifacts under `root/cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, root: &Path) -> CliResult<Manifest> {
    cfg.validate()?;
    let dir = root.join(&cfg.output_dir);
    let mut w = ArtifactWriter::create(&dir)?;
    w.write("config.toml", cfg.to_toml().as_bytes())?;
    let mut seeds = BTreeMap::from([("seed".to_string(), cfg.seed)]);
    info!("{}: writing to {}", cfg.task, dir.display());
    let summary = match cfg.task {
        Task::Xor | Task::Sinusoid => run_grid_training(cfg, &mut w)?,
        Task::Mnist => {
            seeds.insert("pair_seed".into(), cfg.geometry.pair_seed);
            run_mnist(cfg, &mut w)?
        }
        Task::NngpConvergence => run_nngp(cfg, &mut w)?,
        Task::BayesChi => run_chi(cfg, &mut w)?,
        Task::AmariWu => run_amari_wu(cfg, &mut w)?,
    };
    if matches!(cfg.task, Task::Sinusoid | Task::AmariWu) {
        seeds.insert("sinusoid_seed".into(), cfg.data.sinusoid_seed);
    }
    let head = ManifestHead {
        task: cfg.task.name().into(),
        config_file: "config.toml".into(),
        config_sha256: cfg.sha256(),
        seeds,
    };
    w.finish(head, summary)
}

fn render_options(cfg: &ExperimentConfig, clip: bool) -> RenderOptions {
    RenderOptions {
        colormap: cfg.render.colormap.clone(),
        clip: (clip && cfg.render.ricci_clip > 0.0).then_some(cfg.render.ricci_clip),
        width: cfg.render.width,
        height: cfg.render.height,
    }
}

/// Renders one channel and records the PNG; no-op when rendering is off.
fn render_into(
    w: &mut ArtifactWriter,
    cfg: &ExperimentConfig,
    field: &GeometryField,
    channel: &str,
    style: RenderStyle,
    rel: &str,
) -> CliResult<()> {
    if !cfg.render.enabled || !field.channels.contains_key(channel) {
        return Ok(());
    }
    let (img, _) = render_field(field, channel, style, &render_options(cfg, channel == RICCI))?;
    let bytes = save_png(&img, &w.path(rel))?;
    w.record(rel, &bytes);
    Ok(())
}

fn field_options(cfg: &ExperimentConfig) -> FieldOptions {
    FieldOptions {
        mode: cfg.geometry.volume_mode.into(),
        ricci: cfg.geometry.ricci,
    }
}

fn initial_network(cfg: &ExperimentConfig) -> CliResult<MlpNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    MlpNetwork::random(&cfg.model.widths, cfg.activation()?, cfg.init_scheme(), &mut rng)
        .context(|| "model: building network".into())
}

fn history_csv(history: &[pullback::train::EpochStats]) -> String {
    let mut out = String::from("epoch,loss,accuracy\n");
    for h in history {
        let _ = writeln!(out, "{},{},{}", h.epoch, format_f64(h.loss), format_f64(h.accuracy));
    }
    out
}

/// Undefined correlations (constant prediction, too few finite points)
/// become `None`; anything else is an error.
pub fn optional_correlation(field: &GeometryField) -> CliResult<Option<f64>> {
    match magnification_correlation(field) {
        Ok(r) if r.is_finite() => Ok(Some(r)),
        Ok(_) | Err(Error::InsufficientData { .. }) => Ok(None),
        Err(e) => Err(CliError::Core {
            context: "magnification correlation".into(),
            source: e,
        }),
    }
}

fn run_grid_training(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> CliResult<Value> {
    let data = match cfg.task {
        Task::Xor => make_xor(),
        _ => make_sinusoid(cfg.data.sinusoid_seed),
    };
    let net = initial_network(cfg)?;
    let tc = cfg.train_config();
    let outcome = train_with(&net, &data, &tc, |epoch, _| {
        if epoch % 1000 == 0 {
            info!("{}: epoch {epoch}", cfg.task);
        }
        Ok(())
    })
    .context(|| format!("{}: training", cfg.task))?;
    w.write("history.csv", history_csv(&outcome.history).as_bytes())?;
    let g = &cfg.geometry;
    let grid = GridSpec::new(g.lo, g.hi, g.n).context(|| "geometry: grid".into())?;
    let mut snaps = Vec::new();
    for (epoch, snap) in &outcome.snapshots {
        let tag = format!("e{epoch:05}");
        w.write(&format!("model_{tag}.pbnn"), &snap.to_bytes())?;
        let (field, bd) = grid_field(snap, &grid, field_options(cfg)).context(|| format!("epoch {epoch}: geometry"))?;
        w.write_field(&format!("field_{tag}.csv"), &field)?;
        render_into(
            w,
            cfg,
            &field,
            LOG_VOLUME,
            RenderStyle::Grid,
            &format!("volume_{tag}.png"),
        )?;
        render_into(w, cfg, &field, RICCI, RenderStyle::Grid, &format!("ricci_{tag}.png"))?;
        let (loss, acc) = evaluate(snap, &data).context(|| format!("epoch {epoch}: evaluation"))?;
        let rho = optional_correlation(&field)?;
        let decile = top_decile_distance(&field);
        info!("{}: epoch {epoch} accuracy {acc:.4} correlation {rho:?}", cfg.task);
        snaps.push(json!({
            "epoch": epoch,
            "train_loss": loss,
            "train_accuracy": acc,
            "magnification_correlation": rho,
            "top_decile_boundary_distance": decile.map(|d| d.0),
            "mean_boundary_distance": decile.map(|d| d.1),
            "constant_prediction": bd.is_some_and(|b| b.constant_prediction),
        }));
    }
    Ok(json!({ "snapshots": snaps }))
}

/// `data.mnist_dir`, then `$MNIST_DIR`, then the bundled subset.
pub fn mnist_dir(cfg: &ExperimentConfig) -> PathBuf {
    if !cfg.data.mnist_dir.is_empty() {
        return PathBuf::from(&cfg.data.mnist_dir);
    }
    if let Some(dir) = std::env::var_os("MNIST_DIR") {
        return PathBuf::from(dir);
    }
    let local = PathBuf::from("data/mnist-subset");
    if local.is_dir() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-subset")
}

/// Distinct-class test pairs drawn with `seed`.
pub fn cross_class_pairs(test: &Dataset, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let a = rng.gen_range(0..test.len());
            let b = rng.gen_range(0..test.len());
            if test.labels[a] != test.labels[b] {
                break (a, b);
            }
        })
        .collect()
}

/// First test example of each requested class.
fn plane_anchors(test: &Dataset, classes: &[usize]) -> CliResult<Vec<usize>> {
    classes
        .iter()
        .map(|&c| {
            test.labels
                .iter()
                .position(|&l| l == c)
                .ok_or_else(|| CliError::config(format!("geometry.plane_classes: no test example of class {c}")))
        })
        .collect()
}

fn run_mnist(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> CliResult<Value> {
    let dir = mnist_dir(cfg);
    let (train_set, test_set) = load_mnist_dir(&dir).context(|| format!("mnist: loading {}", dir.display()))?;
    info!(
        "mnist: {} train / {} test from {}",
        train_set.len(),
        test_set.len(),
        dir.display()
    );
    let net = initial_network(cfg)?;
    let tc = cfg.train_config();
    let outcome = train_with(&net, &train_set, &tc, |epoch, n| {
        if log::log_enabled!(log::Level::Info) {
            let (_, acc) = evaluate(n, &test_set)?;
            info!("mnist: epoch {epoch} test accuracy {acc:.4}");
        }
        Ok(())
    })
    .context(|| "mnist: training".into())?;
    w.write("history.csv", history_csv(&outcome.history).as_bytes())?;
    let g = &cfg.geometry;
    let opts = field_options(cfg);
    let pairs = cross_class_pairs(&test_set, g.pairs, g.pair_seed);
    let anchors = plane_anchors(&test_set, &g.plane_classes)?;
    let mut snaps = Vec::new();
    for (epoch, snap) in &outcome.snapshots {
        let tag = format!("e{epoch:05}");
        w.write(&format!("model_{tag}.pbnn"), &snap.to_bytes())?;
        let (test_loss, test_acc) = evaluate(snap, &test_set).context(|| format!("epoch {epoch}: test evaluation"))?;
        let (_, train_acc) = evaluate(snap, &train_set).context(|| format!("epoch {epoch}: train evaluation"))?;
        let mut entry = json!({
            "epoch": epoch,
            "test_loss": test_loss,
            "test_accuracy": test_acc,
            "train_accuracy": train_acc,
        });
        match g.kind {
            GeometryKind::Slice => {
                let mut peaks = Vec::new();
                for (p, &(a, b)) in pairs.iter().enumerate() {
                    let field = slice_field(snap, test_set.point(a), test_set.point(b), g.slice_points, opts)
                        .context(|| format!("epoch {epoch}: slice {p}"))?;
                    let name = format!("slice_{tag}_p{p:02}");
                    w.write_field(&format!("{name}.csv"), &field)?;
                    render_into(w, cfg, &field, LOG_VOLUME, RenderStyle::Line, &format!("{name}.png"))?;
                    let Provenance::Slice { t, .. } = &field.provenance else {
                        unreachable!()
                    };
                    peaks.push(t[argmax(&field.channels[LOG_VOLUME])]);
                }
                let middle = peaks.iter().filter(|t| (0.2..=0.8).contains(*t)).count();
                entry["slice_peak_t"] = json!(peaks);
                entry["slices_peaking_in_middle"] = json!(middle);
                entry["fraction_peaking_in_middle"] = json!(middle as f64 / peaks.len().max(1) as f64);
            }
            GeometryKind::Plane => {
                let pts = [
                    test_set.point(anchors[0]),
                    test_set.point(anchors[1]),
                    test_set.point(anchors[2]),
                ];
                let field =
                    plane_field(snap, pts, g.plane_resolution, opts).context(|| format!("epoch {epoch}: plane"))?;
                w.write_field(&format!("plane_{tag}.csv"), &field)?;
                render_into(
                    w,
                    cfg,
                    &field,
                    LOG_VOLUME,
                    RenderStyle::Ternary,
                    &format!("plane_{tag}.png"),
                )?;
            }
            GeometryKind::Grid => unreachable!("rejected by validation"),
        }
        info!("mnist: epoch {epoch} test accuracy {test_acc:.4}");
        snaps.push(entry);
    }
    let pair_list: Vec<Value> = pairs
        .iter()
        .map(|&(a, b)| json!({ "a": a, "b": b, "label_a": test_set.labels[a], "label_b": test_set.labels[b] }))
        .collect();
    Ok(json!({
        "train_examples": train_set.len(),
        "test_examples": test_set.len(),
        "pairs": pair_list,
        "plane_anchor_indices": anchors,
        "snapshots": snaps,
    }))
}

/// Radii `r_max·k/(count−1)`.
pub fn radii(count: usize, r_max: f64) -> Vec<f64> {
    (0..count).map(|k| r_max * k as f64 / (count - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub activation: String,
    pub width: usize,
    pub r: f64,
    pub mean_sqrt_det_g: f64,
    pub sd_sqrt_det_g: f64,
    pub mean_ricci: f64,
    pub sd_ricci: f64,
    pub closed_sqrt_det_g: f64,
    pub closed_ricci: f64,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Finite-width `√det g` and R against the infinite-width closed forms,
/// averaged over seeds `seed, seed+1, …` at radii along one direction.
pub fn nngp_convergence(cfg: &ExperimentConfig) -> CliResult<Vec<ConvergenceRow>> {
    let c = &cfg.nngp;
    let d = c.direction.len();
    let norm = c.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dir: Vec<f64> = c.direction.iter().map(|v| v / norm).collect();
    let prior = GaussPrior::new(c.sigma2, c.zeta2).context(|| "nngp: prior".into())?;
    let rs = radii(c.radii, c.r_max);
    let mut rows = Vec::new();
    for name in &c.activations {
        let kind: ActivationKind = name
            .parse()
            .map_err(|e| CliError::config(format!("nngp.activations: {e}")))?;
        for &width in &c.widths {
            let per_seed: Vec<Vec<(f64, f64)>> = (0..c.seeds as u64)
                .into_par_iter()
                .map(|s| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed + s);
                    let net = MlpNetwork::random_feature_map(d, width, kind, c.sigma2, c.zeta2, &mut rng)?;
                    rs.iter()
                        .map(|&r| {
                            let x: Vec<f64> = dir.iter().map(|u| r * u).collect();
                            shallow_log_volume_and_ricci(&net, &x).map(|(lv, ric)| (lv.exp(), ric))
                        })
                        .collect()
                })
                .collect::<pullback::Result<_>>()
                .context(|| format!("nngp: {kind} width {width}"))?;
            for (k, &r) in rs.iter().enumerate() {
                let vols: Vec<f64> = per_seed.iter().map(|s| s[k].0).collect();
                let rics: Vec<f64> = per_seed.iter().map(|s| s[k].1).collect();
                let closed = nngp_geometry(kind, &prior, d, r).context(|| format!("nngp: closed form at r = {r}"))?;
                let (mv, sv) = mean_sd(&vols);
                let (mr, sr) = mean_sd(&rics);
                rows.push(ConvergenceRow {
                    activation: kind.name(),
                    width,
                    r,
                    mean_sqrt_det_g: mv,
                    sd_sqrt_det_g: sv,
                    mean_ricci: mr,
                    sd_ricci: sr,
                    closed_sqrt_det_g: closed.sqrt_det_g,
                    closed_ricci: closed.ricci,
                });
            }
            info!("nngp: {kind} width {width} done");
        }
    }
    Ok(rows)
}

/// Radii where `|closed R|` is below this are left out of the relative Ricci
/// error; the closed form has isolated zeros there.
pub const RICCI_ZERO_CUTOFF: f64 = 1e-12;

/// Mean relative errors of the volume and of R over radii.
pub fn relative_errors(rows: &[ConvergenceRow]) -> (f64, f64) {
    let vol = rows
        .iter()
        .map(|r| ((r.mean_sqrt_det_g - r.closed_sqrt_det_g) / r.closed_sqrt_det_g).abs())
        .sum::<f64>()
        / rows.len() as f64;
    let ric: Vec<f64> = rows
        .iter()
        .filter(|r| r.closed_ricci.abs() > RICCI_ZERO_CUTOFF)
        .map(|r| ((r.mean_ricci - r.closed_ricci) / r.closed_ricci).abs())
        .collect();
    (vol, ric.iter().sum::<f64>() / ric.len().max(1) as f64)
}

fn run_nngp(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> CliResult<Value> {
    let rows = nngp_convergence(cfg)?;
    let mut csv = String::from(
        "activation,width,r,mean_sqrt_det_g,sd_sqrt_det_g,mean_ricci,sd_ricci,closed_sqrt_det_g,closed_ricci\n",
    );
    for r in &rows {
        let nums = [
            r.r,
            r.mean_sqrt_det_g,
            r.sd_sqrt_det_g,
            r.mean_ricci,
            r.sd_ricci,
            r.closed_sqrt_det_g,
            r.closed_ricci,
        ];
        let nums: Vec<String> = nums.iter().map(|&v| format_f64(v)).collect();
        let _ = writeln!(csv, "{},{},{}", r.activation, r.width, nums.join(","));
    }
    w.write("convergence.csv", csv.as_bytes())?;
    let mut groups: BTreeMap<(String, usize), Vec<ConvergenceRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.activation.clone(), r.width)).or_default().push(r);
    }
    let errors: Vec<Value> = groups
        .iter()
        .map(|((act, width), rs)| {
            let (v, r) = relative_errors(rs);
            json!({ "activation": act, "width": width, "volume_relative_error": v, "ricci_relative_error": r })
        })
        .collect();
    Ok(json!({ "seeds": cfg.nngp.seeds, "errors": errors }))
}

/// `ρ = −1 … 1` with exact endpoints.
pub fn rho_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| match i {
            0 => -1.0,
            _ if i + 1 == count => 1.0,
            _ => -1.0 + 2.0 * i as f64 / (count - 1) as f64,
        })
        .collect()
}

fn run_chi(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> CliResult<Value> {
    let c = &cfg.chi;
    let d = c.x_a.len();
    let xa_norm = c.x_a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ratio = |rho: f64| bayes_volume_ratio(c.q, d, rho, c.y_a, xa_norm, c.n);
    let mut csv = String::from("rho,chi,ratio\n");
    let mut max_ratio = f64::NEG_INFINITY;
    for rho in rho_grid(c.rho_points) {
        let chi = chi_factor(c.q, d, rho).context(|| format!("chi at ρ = {rho}"))?;
        let r = ratio(rho).context(|| format!("ratio at ρ = {rho}"))?;
        max_ratio = max_ratio.max(r);
        let _ = writeln!(csv, "{},{},{}", format_f64(rho), format_f64(chi), format_f64(r));
    }
    w.write("chi.csv", csv.as_bytes())?;
    if c.grid_n > 0 {
        let grid = GridSpec::new(c.lo, c.hi, c.grid_n).context(|| "chi: grid".into())?;
        let points = grid.points();
        let mut values = Vec::with_capacity(points.rows());
        for i in 0..points.rows() {
            let x = points.row(i);
            let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            values.push(if xn == 0.0 {
                f64::NAN
            } else {
                let rho = (x.iter().zip(&c.x_a).map(|(a, b)| a * b).sum::<f64>() / (xn * xa_norm)).clamp(-1.0, 1.0);
                ratio(rho).context(|| "chi: ratio field".into())?
            });
        }
        let mut field = GeometryField::new(points, Provenance::Grid(grid));
        field
            .set_channel("bayes_volume_ratio", values)
            .context(|| "chi: field".into())?;
        w.write_field("ratio_field.csv", &field)?;
        render_into(
            w,
            cfg,
            &field,
            "bayes_volume_ratio",
            RenderStyle::Grid,
            "ratio_field.png",
        )?;
    }
    Ok(json!({
        "chi_at_0": chi_factor(c.q, d, 0.0).context(|| "chi".into())?,
        "chi_at_1": chi_factor(c.q, d, 1.0).context(|| "chi".into())?,
        "ratio_at_rho_1": ratio(1.0).context(|| "ratio".into())?,
        "max_ratio": max_ratio,
    }))
}

/// Support-vector stand-ins: sinusoid training points within `margin` of
/// the true boundary, or the configured list.
pub fn amari_wu_centers(cfg: &ExperimentConfig) -> CliResult<Vec<Vec<f64>>> {
    let a = &cfg.amari_wu;
    match a.center_source {
        CenterSource::Explicit => Ok(a.centers.clone()),
        CenterSource::SinusoidBoundary => {
            let data = make_sinusoid(cfg.data.sinusoid_seed);
            let centers: Vec<Vec<f64>> = (0..data.len())
                .map(|i| data.point(i))
                .filter(|p| (p[1] - sinusoid_boundary(p[0])).abs() < a.margin)
                .map(<[f64]>::to_vec)
                .collect();
            if centers.is_empty() {
                return Err(CliError::config(
                    "amari_wu.margin: no sinusoid points within the margin",
                ));
            }
            Ok(centers)
        }
    }
}

fn run_amari_wu(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> CliResult<Value> {
    let a = &cfg.amari_wu;
    let tau2 = a.tau2.expect("checked by validation");
    let centers = amari_wu_centers(cfg)?;
    let grid = GridSpec::new(a.lo, a.hi, a.n).context(|| "amari_wu: grid".into())?;
    let points = grid.points();
    let per_point: Vec<(f64, f64, f64)> = (0..points.rows())
        .into_par_iter()
        .map(|i| {
            let m = amari_wu_metric(a.sigma2, &centers, tau2, points.row(i))?;
            Ok((0.5 * m.det.ln(), m.magnification(a.sigma2).ln(), m.h))
        })
        .collect::<pullback::Result<_>>()
        .context(|| "amari_wu: metric".into())?;
    let mut field = GeometryField::new(points, Provenance::Grid(grid));
    let set = |f: &mut GeometryField, name: &str, k: usize| {
        let v = per_point.iter().map(|p| [p.0, p.1, p.2][k]).collect();
        f.set_channel(name, v).context(|| "amari_wu: field".into())
    };
    set(&mut field, LOG_VOLUME, 0)?;
    set(&mut field, "log_magnification", 1)?;
    set(&mut field, "conformal_factor", 2)?;
    w.write_field("field.csv", &field)?;
    render_into(
        w,
        cfg,
        &field,
        "log_magnification",
        RenderStyle::Grid,
        "magnification.png",
    )?;
    let mut centers_csv = String::from("x0,x1\n");
    for c in &centers {
        let _ = writeln!(centers_csv, "{},{}", format_f64(c[0]), format_f64(c[1]));
    }
    w.write("centers.csv", centers_csv.as_bytes())?;
    let lm = &field.channels["log_magnification"];
    Ok(json!({
        "centers": centers.len(),
        "max_log_magnification": lm.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "min_log_magnification": lm.iter().copied().fold(f64::INFINITY, f64::min),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_grid_endpoints_are_exact() {
        let g = rho_grid(201);
        assert_eq!((g[0], g[100], g[200]), (-1.0, 0.0, 1.0));
    }

    #[test]
    fn pairs_are_cross_class_and_seeded() {
        let data = pullback::data::make_sinusoid(0);
        let p = cross_class_pairs(&data, 20, 5);
        assert_eq!(p, cross_class_pairs(&data, 20, 5));
        assert!(p.iter().all(|&(a, b)| data.labels[a] != data.labels[b]));
    }

    #[test]
    fn relative_errors_skip_ricci_zeros() {
        let row = |mv: f64, cv: f64, mr: f64, cr: f64| ConvergenceRow {
            activation: "erf".into(),
            width: 1,
            r: 0.0,
            mean_sqrt_det_g: mv,
            sd_sqrt_det_g: 0.0,
            mean_ricci: mr,
            sd_ricci: 0.0,
            closed_sqrt_det_g: cv,
            closed_ricci: cr,
        };
        let (v, r) = relative_errors(&[row(1.1, 1.0, 5.0, 0.0), row(0.8, 1.0, -1.5, -1.0)]);
        assert!((v - 0.15).abs() < 1e-12);
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sinusoid_centers_hug_the_boundary() {
        let cfg = ExperimentConfig::resolve(None, &["amari_wu.tau2=0.1".into()], Some(Task::AmariWu)).unwrap();
        let c = amari_wu_centers(&cfg).unwrap();
        assert!(!c.is_empty());
        assert!(c.iter().all(|p| (p[1] - sinusoid_boundary(p[0])).abs() < 0.05));
    }
}
