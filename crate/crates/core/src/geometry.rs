//! Finite-width geometry of network feature maps: pullback metric, its
//! derivatives, volume elements and curvature.

use crate::error::{Error, Result};
use crate::linalg::{determinant, inverse, log_volume, singular_values, sym_eigenvalues, DenseMatrix};
use crate::network::MlpNetwork;

/// Metric `g_{μν}` at a point, optionally with `dg[α] = ∂_α g`.
#[derive(Debug, Clone)]
pub struct MetricTensor {
    pub g: DenseMatrix,
    pub dg: Option<Vec<DenseMatrix>>,
}

impl MetricTensor {
    pub fn new(g: DenseMatrix, dg: Option<Vec<DenseMatrix>>) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::dim("metric columns", g.rows(), g.cols()));
        }
        if let Some(dg) = &dg {
            if dg.len() != g.rows() {
                return Err(Error::dim("metric derivative stack", g.rows(), dg.len()));
            }
            for m in dg {
                if m.rows() != g.rows() || m.cols() != g.rows() {
                    return Err(Error::dim("metric derivative slice", g.rows(), m.rows()));
                }
            }
        }
        Ok(Self { g, dg })
    }

    pub fn d(&self) -> usize {
        self.g.rows()
    }

    pub fn determinant(&self) -> f64 {
        determinant(&self.g).expect("metric is square")
    }

    /// Largest deviation of `∂_α g_{μν}` from full index-permutation symmetry.
    pub fn permutation_asymmetry(&self) -> Option<f64> {
        let dg = self.dg.as_ref()?;
        let d = self.d();
        let mut worst = 0.0f64;
        for a in 0..d {
            for m in 0..d {
                for n in 0..d {
                    let v = dg[a][(m, n)];
                    worst = worst
                        .max((v - dg[m][(a, n)]).abs())
                        .max((v - dg[n][(m, a)]).abs())
                        .max((v - dg[a][(n, m)]).abs());
                }
            }
        }
        Some(worst)
    }
}

/// Full (4,0) Riemann tensor and Ricci scalar.
#[derive(Debug, Clone)]
pub struct CurvatureResult {
    d: usize,
    riemann: Vec<f64>,
    pub ricci_scalar: f64,
}

impl CurvatureResult {
    pub fn d(&self) -> usize {
        self.d
    }

    /// `R_{μναβ}`.
    pub fn riemann(&self, mu: usize, nu: usize, alpha: usize, beta: usize) -> f64 {
        let d = self.d;
        self.riemann[((mu * d + nu) * d + alpha) * d + beta]
    }

    pub fn max_abs(&self) -> f64 {
        self.riemann.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest violation among antisymmetry in each pair, pair exchange
    /// symmetry and the first Bianchi identity.
    pub fn symmetry_residual(&self) -> f64 {
        let d = self.d;
        let mut worst = 0.0f64;
        for m in 0..d {
            for n in 0..d {
                for a in 0..d {
                    for b in 0..d {
                        let r = self.riemann(m, n, a, b);
                        worst = worst
                            .max((r + self.riemann(m, n, b, a)).abs())
                            .max((r + self.riemann(n, m, a, b)).abs())
                            .max((r - self.riemann(a, b, m, n)).abs())
                            .max((r + self.riemann(m, a, b, n) + self.riemann(m, b, n, a)).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Pullback metric `g = JᵀJ`. Derivatives are analytic for a shallow feature
/// map and central differences of the analytic metric otherwise.
pub fn pullback_metric(net: &MlpNetwork, x: &[f64], with_derivatives: bool) -> Result<MetricTensor> {
    let g = metric_only(net, x)?;
    let dg = if !with_derivatives {
        None
    } else if net.is_shallow() {
        Some(shallow_metric_derivatives(net, x)?)
    } else {
        Some(metric_fd_derivatives(net, x, fd_step(x))?)
    };
    MetricTensor::new(g, dg)
}

fn metric_only(net: &MlpNetwork, x: &[f64]) -> Result<DenseMatrix> {
    Ok(net.jacobian(x)?.gram())
}

/// Step for finite differences of the metric in deep networks.
pub fn fd_step(x: &[f64]) -> f64 {
    1e-5f64.max(1e-5 * norm(x))
}

fn shallow_metric_derivatives(net: &MlpNetwork, x: &[f64]) -> Result<Vec<DenseMatrix>> {
    let layer = net.first_layer();
    let d = x.len();
    let n = layer.outputs();
    let z = layer.preactivation(x);
    let act = net.activation();
    let mut dg = vec![DenseMatrix::zeros(d, d); d];
    for (j, zj) in z.iter().enumerate() {
        let p = act.derivs(*zj);
        let c = 2.0 * p[1] * p[2] / n as f64;
        if c == 0.0 {
            continue;
        }
        let w = layer.weights.row(j);
        for (a, slice) in dg.iter_mut().enumerate() {
            let ca = c * w[a];
            for m in 0..d {
                let cam = ca * w[m];
                for nn in 0..d {
                    slice[(m, nn)] += cam * w[nn];
                }
            }
        }
    }
    Ok(dg)
}

/// Central-difference `∂_α g_{μν}`, symmetrized over `(μ, ν)`.
pub fn metric_fd_derivatives(net: &MlpNetwork, x: &[f64], step: f64) -> Result<Vec<DenseMatrix>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::contract(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let scale = norm(x).max(1.0);
    if scale + step == scale {
        return Err(Error::StepUnderflow { step, scale });
    }
    let d = x.len();
    let mut out = Vec::with_capacity(d);
    for a in 0..d {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[a] += step;
        xm[a] -= step;
        let mut diff = metric_only(net, &xp)?.sub(&metric_only(net, &xm)?)?.scale(0.5 / step);
        diff.symmetrize();
        out.push(diff);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeMode {
    FullRank,
    /// Product over the numerically nonzero singular values only.
    Pseudo,
}

/// `log √det g = Σ log σᵢ(J)`.
pub fn volume_element(net: &MlpNetwork, x: &[f64], mode: VolumeMode) -> Result<f64> {
    let jac = net.jacobian(x)?;
    log_volume_from_singular(&singular_values(&jac)?, jac.rows(), jac.cols(), mode, x)
}

/// Repeated volume evaluation for one network. When the feature layer is the
/// first layer and is no wider than the input, `JJᵀ = D(WWᵀ)D/n` with
/// `D = diag φ′(z)`, so `WWᵀ` is formed once instead of a Jacobian product
/// per point.
pub struct VolumeEvaluator<'a> {
    net: &'a MlpNetwork,
    weight_outer: Option<DenseMatrix>,
}

impl<'a> VolumeEvaluator<'a> {
    pub fn new(net: &'a MlpNetwork) -> Self {
        let layer = net.first_layer();
        let weight_outer =
            (net.feature_layer() == 1 && layer.outputs() <= layer.inputs()).then(|| layer.weights.outer_gram());
        Self { net, weight_outer }
    }

    pub fn log_volume(&self, x: &[f64], mode: VolumeMode) -> Result<f64> {
        let Some(outer) = &self.weight_outer else {
            return volume_element(self.net, x, mode);
        };
        let layer = self.net.first_layer();
        if x.len() != layer.inputs() {
            return Err(Error::dim("network input", layer.inputs(), x.len()));
        }
        let n = layer.outputs();
        let act = self.net.activation();
        let s: Vec<f64> = layer
            .preactivation(x)
            .into_iter()
            .map(|z| act.first(z) / (n as f64).sqrt())
            .collect();
        let gram = DenseMatrix::from_fn(n, n, |j, k| s[j] * outer[(j, k)] * s[k]);
        let mut sv: Vec<f64> = sym_eigenvalues(&gram)?.into_iter().map(|l| l.max(0.0).sqrt()).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        log_volume_from_singular(&sv, n, layer.inputs(), mode, x)
    }
}

/// Shared tail of [`volume_element`] for callers that already hold σ(J).
pub fn log_volume_from_singular(sv: &[f64], n: usize, d: usize, mode: VolumeMode, x: &[f64]) -> Result<f64> {
    let smax = sv.first().copied().unwrap_or(0.0);
    let tol = rank_tolerance(n, d, smax);
    match mode {
        VolumeMode::FullRank => {
            if n < d {
                return Err(Error::Singular {
                    point: x.to_vec(),
                    detail: format!("feature width {n} below input dimension {d}"),
                });
            }
            let smin = sv[d - 1];
            if !(smin > tol) {
                return Err(Error::Singular {
                    point: x.to_vec(),
                    detail: format!("smallest singular value {smin:e} ≤ rank tolerance {tol:e}"),
                });
            }
            Ok(log_volume(&sv[..d]))
        }
        VolumeMode::Pseudo => {
            let kept: Vec<f64> = sv.iter().copied().filter(|s| *s > tol).collect();
            if kept.is_empty() {
                return Err(Error::Singular {
                    point: x.to_vec(),
                    detail: "Jacobian vanishes".into(),
                });
            }
            Ok(log_volume(&kept))
        }
    }
}

/// `max(n, d)·ε·σ_max`.
pub fn rank_tolerance(n: usize, d: usize, smax: f64) -> f64 {
    n.max(d) as f64 * f64::EPSILON * smax
}

/// Visits every strictly increasing `k`-tuple drawn from `0..n`.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    if k == 0 {
        f(&[]);
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn require_shallow(net: &MlpNetwork) -> Result<()> {
    if !net.is_shallow() {
        return Err(Error::contract("operation needs a single-hidden-layer feature map"));
    }
    Ok(())
}

/// `det g` as a sum over d-tuples of hidden units of squared weight minors.
pub fn shallow_volume_minor(net: &MlpNetwork, x: &[f64]) -> Result<f64> {
    require_shallow(net)?;
    let d = net.input_dim();
    if x.len() != d {
        return Err(Error::dim("network input", d, x.len()));
    }
    let n = net.feature_width();
    if d > 4 {
        return Err(Error::contract(format!("minor expansion limited to d ≤ 4, got {d}")));
    }
    if n < d {
        return Err(Error::contract(format!(
            "minor expansion needs n ≥ d, got n={n}, d={d}"
        )));
    }
    let layer = net.first_layer();
    let slopes: Vec<f64> = layer
        .preactivation(x)
        .into_iter()
        .map(|z| net.activation().first(z).powi(2))
        .collect();
    let mut total = 0.0;
    let mut sub = DenseMatrix::zeros(d, d);
    let mut minor_err = None;
    for_each_combination(n, d, |tuple| {
        for (r, &j) in tuple.iter().enumerate() {
            sub.row_mut(r).copy_from_slice(layer.weights.row(j));
        }
        match determinant(&sub) {
            Ok(m) => total += m * m * tuple.iter().map(|&j| slopes[j]).product::<f64>(),
            Err(e) => minor_err = Some(e),
        }
    });
    if let Some(e) = minor_err {
        return Err(e);
    }
    Ok(total / (n as f64).powi(d as i32))
}

/// Ricci scalar of a shallow feature map on a 2D input from the triple sum
/// over hidden units,
/// `R = −1/(n³ det²g) Σ M²_{jk} M_{ij} M_{ik} φ′ᵢ² φ′ⱼφ″ⱼ φ′ₖφ″ₖ`. Cost is O(n³).
pub fn shallow_ricci_2d(net: &MlpNetwork, x: &[f64]) -> Result<f64> {
    require_shallow(net)?;
    if net.input_dim() != 2 || x.len() != 2 {
        return Err(Error::dim("two-dimensional input", 2, x.len()));
    }
    let det = shallow_volume_minor(net, x)?;
    if !(det > 1e-300) {
        return Err(Error::Singular {
            point: x.to_vec(),
            detail: format!("det g = {det:e}"),
        });
    }
    let layer = net.first_layer();
    let n = layer.outputs();
    let act = net.activation();
    let mut p1sq = vec![0.0; n];
    let mut a = vec![0.0; n];
    for (j, z) in layer.preactivation(x).into_iter().enumerate() {
        let p = act.derivs(z);
        p1sq[j] = p[1] * p[1];
        a[j] = p[1] * p[2];
    }
    let w = &layer.weights;
    let minor = |i: usize, j: usize| w[(i, 0)] * w[(j, 1)] - w[(i, 1)] * w[(j, 0)];
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = minor(i, j);
        }
    }
    let mut sum = 0.0;
    for i in 0..n {
        if p1sq[i] == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for j in 0..n {
            let mij = m[(i, j)] * a[j];
            if mij == 0.0 {
                continue;
            }
            for k in 0..n {
                let mjk = m[(j, k)];
                inner += mjk * mjk * mij * m[(i, k)] * a[k];
            }
        }
        sum += p1sq[i] * inner;
    }
    Ok(-sum / ((n as f64).powi(3) * det * det))
}

/// Riemann tensor from the metric and a permutation-symmetric `∂g`:
/// `R_{μναβ} = −¼ g^{ρλ}(∂_ρ g_{μα} ∂_λ g_{νβ} − ∂_ρ g_{μβ} ∂_λ g_{να})`.
///
/// With `∂g` and `∂∂g` both fully symmetric the Christoffel symbols are
/// `Γ^α_{βγ} = ½ g^{αμ} ∂_β g_{γμ}`, the second-derivative terms cancel and
/// the quadratic terms leave the coefficient ½ − ¼.
pub fn riemann_ricci(metric: &MetricTensor) -> Result<CurvatureResult> {
    let dg = metric
        .dg
        .as_ref()
        .ok_or_else(|| Error::contract("curvature needs metric derivatives"))?;
    let scale = dg.iter().map(DenseMatrix::max_abs).fold(1.0, f64::max);
    let asym = metric.permutation_asymmetry().unwrap_or(0.0);
    if asym > 1e-8 * scale {
        return Err(Error::contract(format!(
            "metric derivative is not permutation symmetric (residual {asym:e})"
        )));
    }
    let d = metric.d();
    let ginv = inverse(&metric.g).map_err(|_| Error::Singular {
        point: Vec::new(),
        detail: "metric is not invertible".into(),
    })?;
    // u[λ] = g^{λρ} ∂_ρ g
    let u: Vec<DenseMatrix> = (0..d)
        .map(|l| DenseMatrix::from_fn(d, d, |m, a| (0..d).map(|r| ginv[(l, r)] * dg[r][(m, a)]).sum()))
        .collect();
    let mut riemann = vec![0.0; d * d * d * d];
    for m in 0..d {
        for n in 0..d {
            for a in 0..d {
                for b in 0..d {
                    let s: f64 = (0..d)
                        .map(|l| u[l][(m, a)] * dg[l][(n, b)] - u[l][(m, b)] * dg[l][(n, a)])
                        .sum();
                    riemann[((m * d + n) * d + a) * d + b] = -0.25 * s;
                }
            }
        }
    }
    let mut ricci = 0.0;
    for m in 0..d {
        for n in 0..d {
            for a in 0..d {
                for b in 0..d {
                    ricci += ginv[(m, a)] * ginv[(n, b)] * riemann[((m * d + n) * d + a) * d + b];
                }
            }
        }
    }
    Ok(CurvatureResult {
        d,
        riemann,
        ricci_scalar: ricci,
    })
}

/// Ricci scalar of a shallow feature map in any input dimension through the
/// O(n d² + d⁵) contraction.
pub fn shallow_ricci(net: &MlpNetwork, x: &[f64]) -> Result<f64> {
    require_shallow(net)?;
    let metric = pullback_metric(net, x, true)?;
    riemann_ricci(&metric).map(|c| c.ricci_scalar).map_err(|e| match e {
        Error::Singular { detail, .. } => Error::Singular {
            point: x.to_vec(),
            detail,
        },
        other => other,
    })
}

/// `log √det g` and Ricci scalar of a shallow feature map at one point.
pub fn shallow_log_volume_and_ricci(net: &MlpNetwork, x: &[f64]) -> Result<(f64, f64)> {
    require_shallow(net)?;
    let metric = pullback_metric(net, x, true)?;
    let det = metric.determinant();
    if !(det > 0.0) {
        return Err(Error::Singular {
            point: x.to_vec(),
            detail: format!("det g = {det:e}"),
        });
    }
    Ok((0.5 * det.ln(), riemann_ricci(&metric)?.ricci_scalar))
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
