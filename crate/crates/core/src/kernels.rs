//! Metrics induced by kernels, `g_{μν} = ∂_{x_μ}∂_{y_ν} k(x, y)|_{y=x}`.
//!
//! Closed forms exist for the RBF, linear and polynomial kernels, the NNGP
//! families, Amari–Wu over an RBF base and Mahalanobis transforms of any base
//! with a closed form. Every kernel also has a finite-difference path.

use std::f64::consts::PI;

use crate::activation::ActivationKind;
use crate::closedforms::{monomial_nngp_kernel, nngp_metric, GaussPrior};
use crate::error::{Error, Result};
use crate::geometry::MetricTensor;
use crate::linalg::{determinant, psd_sqrt, DenseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `exp(−‖x−y‖²/(2σ²))`.
    Rbf {
        sigma2: f64,
    },
    /// `x·y`.
    Linear,
    /// `(1 + x·y)^q`.
    Polynomial {
        q: u32,
    },
    MonomialNngp {
        q: u32,
        prior: GaussPrior,
    },
    ErfNngp {
        prior: GaussPrior,
    },
    /// `h(x)h(y)k(x,y)` with `h(x) = Σ_v exp(−‖x−v‖²/(2τ²))`.
    AmariWu {
        base: Box<KernelSpec>,
        centers: Vec<Vec<f64>>,
        tau2: f64,
    },
    /// `k(M^{1/2}x, M^{1/2}y)`; `root` is the PSD square root of `m`.
    Mahalanobis {
        base: Box<KernelSpec>,
        m: DenseMatrix,
        root: DenseMatrix,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricMode {
    Analytic,
    FiniteDifference,
}

impl KernelSpec {
    pub fn rbf(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::contract(format!("RBF σ² must be positive, got {sigma2}")));
        }
        Ok(KernelSpec::Rbf { sigma2 })
    }

    /// τ² has no default; callers choose the bandwidth.
    pub fn amari_wu(base: KernelSpec, centers: Vec<Vec<f64>>, tau2: f64) -> Result<Self> {
        if !(tau2 > 0.0) || !tau2.is_finite() {
            return Err(Error::contract(format!("τ² must be positive, got {tau2}")));
        }
        if centers.is_empty() {
            return Err(Error::contract("Amari–Wu transform needs at least one center"));
        }
        let d = centers[0].len();
        if let Some(c) = centers.iter().find(|c| c.len() != d) {
            return Err(Error::dim("Amari–Wu center", d, c.len()));
        }
        Ok(KernelSpec::AmariWu {
            base: Box::new(base),
            centers,
            tau2,
        })
    }

    pub fn mahalanobis(base: KernelSpec, m: DenseMatrix) -> Result<Self> {
        let root = psd_sqrt(&m)?;
        Ok(KernelSpec::Mahalanobis {
            base: Box::new(base),
            m,
            root,
        })
    }

    /// Translation-invariant kernels induce a constant metric.
    pub fn is_translation_invariant(&self) -> bool {
        match self {
            KernelSpec::Rbf { .. } => true,
            KernelSpec::Mahalanobis { base, .. } => base.is_translation_invariant(),
            _ => false,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Rbf { sigma2 } => KernelSpec::rbf(*sigma2).map(|_| ()),
            KernelSpec::Polynomial { q } if *q == 0 => Err(Error::contract("polynomial degree must be positive")),
            KernelSpec::MonomialNngp { q, prior } => {
                ActivationKind::Monomial(*q).validate()?;
                prior.validate()
            }
            KernelSpec::ErfNngp { prior } => prior.validate(),
            KernelSpec::AmariWu { base, tau2, .. } => {
                if !(*tau2 > 0.0) {
                    return Err(Error::contract(format!("τ² must be positive, got {tau2}")));
                }
                base.validate()
            }
            KernelSpec::Mahalanobis { base, .. } => base.validate(),
            _ => Ok(()),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Amari–Wu conformal factor.
pub fn conformal_factor(centers: &[Vec<f64>], tau2: f64, x: &[f64]) -> f64 {
    centers.iter().map(|v| (-sq_dist(x, v) / (2.0 * tau2)).exp()).sum()
}

/// `∇h = τ⁻² Σ_v exp(−‖x−v‖²/(2τ²))(v − x)`.
pub fn conformal_gradient(centers: &[Vec<f64>], tau2: f64, x: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    for v in centers {
        let e = (-sq_dist(x, v) / (2.0 * tau2)).exp() / tau2;
        for (g, (vi, xi)) in grad.iter_mut().zip(v.iter().zip(x)) {
            *g += e * (vi - xi);
        }
    }
    grad
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dim("kernel arguments", x.len(), y.len()));
    }
    spec.validate()?;
    eval(spec, x, y)
}

fn eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(match spec {
        KernelSpec::Rbf { sigma2 } => (-sq_dist(x, y) / (2.0 * sigma2)).exp(),
        KernelSpec::Linear => dot(x, y),
        KernelSpec::Polynomial { q } => (1.0 + dot(x, y)).powi(*q as i32),
        KernelSpec::MonomialNngp { q, prior } => monomial_nngp_kernel(*q, prior, x, y)?,
        KernelSpec::ErfNngp { prior } => {
            let sxx = prior.variance(dot(x, x));
            let syy = prior.variance(dot(y, y));
            let sxy = prior.sigma2 * dot(x, y) + prior.zeta2;
            let arg = (sxy / ((1.0 + sxx) * (1.0 + syy)).sqrt()).clamp(-1.0, 1.0);
            2.0 / PI * arg.asin()
        }
        KernelSpec::AmariWu { base, centers, tau2 } => {
            if centers[0].len() != x.len() {
                return Err(Error::dim("Amari–Wu center", x.len(), centers[0].len()));
            }
            conformal_factor(centers, *tau2, x) * conformal_factor(centers, *tau2, y) * eval(base, x, y)?
        }
        KernelSpec::Mahalanobis { base, root, .. } => eval(base, &root.matvec(x)?, &root.matvec(y)?)?,
    })
}

/// Default finite-difference step for kernel metrics.
pub fn kernel_fd_step(x: &[f64]) -> f64 {
    1e-5 * dot(x, x).sqrt().max(1.0)
}

pub fn kernel_metric(spec: &KernelSpec, x: &[f64], mode: MetricMode) -> Result<MetricTensor> {
    spec.validate()?;
    match mode {
        MetricMode::Analytic => analytic_metric(spec, x),
        MetricMode::FiniteDifference => kernel_metric_fd(spec, x, kernel_fd_step(x)),
    }
}

/// Mixed central difference of `k(x + h e_μ, x + h e_ν)`.
pub fn kernel_metric_fd(spec: &KernelSpec, x: &[f64], step: f64) -> Result<MetricTensor> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::contract(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if !scale.is_finite() || scale + step == scale {
        return Err(Error::StepUnderflow { step, scale });
    }
    let d = x.len();
    let shifted = |i: usize, h: f64| {
        let mut p = x.to_vec();
        p[i] += h;
        p
    };
    let mut g = DenseMatrix::zeros(d, d);
    for m in 0..d {
        for n in m..d {
            let v = eval(spec, &shifted(m, step), &shifted(n, step))?
                - eval(spec, &shifted(m, step), &shifted(n, -step))?
                - eval(spec, &shifted(m, -step), &shifted(n, step))?
                + eval(spec, &shifted(m, -step), &shifted(n, -step))?;
            g[(m, n)] = v / (4.0 * step * step);
            g[(n, m)] = g[(m, n)];
        }
    }
    MetricTensor::new(g, None)
}

fn analytic_metric(spec: &KernelSpec, x: &[f64]) -> Result<MetricTensor> {
    let d = x.len();
    match spec {
        KernelSpec::Rbf { sigma2 } => MetricTensor::new(DenseMatrix::identity(d).scale(1.0 / sigma2), None),
        KernelSpec::Linear => MetricTensor::new(DenseMatrix::identity(d), None),
        KernelSpec::Polynomial { q } => {
            let c = 1.0 + dot(x, x);
            let qf = f64::from(*q);
            let a = qf * c.powi(*q as i32 - 1);
            let b = if *q >= 2 {
                qf * (qf - 1.0) * c.powi(*q as i32 - 2)
            } else {
                0.0
            };
            let g = DenseMatrix::from_fn(d, d, |m, n| a * f64::from(u8::from(m == n)) + b * x[m] * x[n]);
            MetricTensor::new(g, None)
        }
        KernelSpec::MonomialNngp { q, prior } => nngp_metric(ActivationKind::Monomial(*q), prior, x),
        KernelSpec::ErfNngp { prior } => nngp_metric(ActivationKind::Erf, prior, x),
        KernelSpec::AmariWu { base, centers, tau2 } => match base.as_ref() {
            KernelSpec::Rbf { sigma2 } => Ok(amari_wu_metric(*sigma2, centers, *tau2, x)?.metric),
            _ => Err(Error::Unsupported(
                "closed-form Amari–Wu metric needs an RBF base; use finite differences".into(),
            )),
        },
        KernelSpec::Mahalanobis { base, m, .. } => mahalanobis_metric(base, m, x),
    }
}

#[derive(Debug, Clone)]
pub struct AmariWuMetric {
    pub metric: MetricTensor,
    /// `det g̃` from the matrix determinant lemma.
    pub det: f64,
    pub h: f64,
    /// Set when `h` underflows; the metric there is numerically zero.
    pub flat: bool,
}

impl AmariWuMetric {
    /// `√(det g̃ / det g)` against the base RBF metric `δ/σ²`.
    pub fn magnification(&self, sigma2: f64) -> f64 {
        (self.det * sigma2.powi(self.metric.d() as i32)).sqrt()
    }
}

/// `g̃ = (h²/σ²)δ + ∇h∇hᵀ`, `det g̃ = (h²/σ²)ᵈ(1 + σ²‖∇h‖²/h²)`.
pub fn amari_wu_metric(sigma2: f64, centers: &[Vec<f64>], tau2: f64, x: &[f64]) -> Result<AmariWuMetric> {
    KernelSpec::rbf(sigma2)?;
    if !(tau2 > 0.0) {
        return Err(Error::contract(format!("τ² must be positive, got {tau2}")));
    }
    if let Some(c) = centers.iter().find(|c| c.len() != x.len()) {
        return Err(Error::dim("Amari–Wu center", x.len(), c.len()));
    }
    let d = x.len();
    let h = conformal_factor(centers, tau2, x);
    let grad = conformal_gradient(centers, tau2, x);
    let conformal = h * h / sigma2;
    let g = DenseMatrix::from_fn(d, d, |m, n| conformal * f64::from(u8::from(m == n)) + grad[m] * grad[n]);
    let flat = !(h > 1e-300);
    let det = if flat {
        0.0
    } else {
        conformal.powi(d as i32) * (1.0 + sigma2 * dot(&grad, &grad) / (h * h))
    };
    Ok(AmariWuMetric {
        metric: MetricTensor::new(g, None)?,
        det,
        h,
        flat,
    })
}

/// `g_M(x) = M^{1/2} g(M^{1/2}x) M^{1/2}` for a base kernel with a closed-form
/// metric.
pub fn mahalanobis_metric(base: &KernelSpec, m: &DenseMatrix, x: &[f64]) -> Result<MetricTensor> {
    if m.rows() != x.len() || !m.is_square() {
        return Err(Error::dim("Mahalanobis matrix", x.len(), m.rows()));
    }
    let root = psd_sqrt(m)?;
    let inner = analytic_metric(base, &root.matvec(x)?)?;
    let mut g = root.matmul(&inner.g)?.matmul(&root)?;
    g.symmetrize();
    MetricTensor::new(g, None)
}

/// `det g_M = det M · det g`.
pub fn mahalanobis_determinant(base: &KernelSpec, m: &DenseMatrix, x: &[f64]) -> Result<f64> {
    let root = psd_sqrt(m)?;
    let inner = analytic_metric(base, &root.matvec(x)?)?;
    Ok(determinant(m)? * determinant(&inner.g)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prior() -> GaussPrior {
        GaussPrior::new(1.2, 0.6).unwrap()
    }

    fn random_psd(rng: &mut ChaCha8Rng, d: usize) -> DenseMatrix {
        let a = DenseMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        a.gram().add(&DenseMatrix::identity(d).scale(0.1)).unwrap()
    }

    #[test]
    fn rbf_examples() {
        let k = KernelSpec::rbf(1.0).unwrap();
        assert_eq!(kernel_eval(&k, &[0.3, 0.2], &[0.3, 0.2]).unwrap(), 1.0);
        let g = kernel_metric(&KernelSpec::rbf(4.0).unwrap(), &[1.0, -2.0], MetricMode::Analytic).unwrap();
        assert!(g.g.sub(&DenseMatrix::identity(2).scale(0.25)).unwrap().max_abs() == 0.0);
        let fd = kernel_metric(
            &KernelSpec::rbf(4.0).unwrap(),
            &[1.0, -2.0],
            MetricMode::FiniteDifference,
        )
        .unwrap();
        assert!(fd.g.sub(&g.g).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn linear_and_polynomial() {
        let x = [0.4, -0.3, 1.1];
        let lin = kernel_metric(&KernelSpec::Linear, &x, MetricMode::FiniteDifference).unwrap();
        assert!(lin.g.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-6);
        for q in 1..=4 {
            let k = KernelSpec::Polynomial { q };
            let a = kernel_metric(&k, &x, MetricMode::Analytic).unwrap();
            let f = kernel_metric(&k, &x, MetricMode::FiniteDifference).unwrap();
            assert!(a.g.sub(&f.g).unwrap().max_abs() < 1e-5 * a.g.max_abs(), "q={q}");
        }
    }

    #[test]
    fn nngp_kernels_match_closed_forms() {
        let p = prior();
        let x = [0.5, -0.2];
        let y = [-0.7, 0.9];
        let k = KernelSpec::MonomialNngp { q: 2, prior: p };
        let direct = monomial_nngp_kernel(2, &p, &x, &y).unwrap();
        assert!((kernel_eval(&k, &x, &y).unwrap() - direct).abs() <= 1e-12 * direct.abs());
        for spec in [
            k,
            KernelSpec::MonomialNngp { q: 3, prior: p },
            KernelSpec::ErfNngp { prior: p },
        ] {
            let a = kernel_metric(&spec, &x, MetricMode::Analytic).unwrap();
            let f = kernel_metric(&spec, &x, MetricMode::FiniteDifference).unwrap();
            assert!(a.g.sub(&f.g).unwrap().max_abs() < 1e-5, "{spec:?}");
        }
    }

    #[test]
    fn erf_kernel_diagonal() {
        // E[erf(z/√2)²] for z ~ N(0, s) is (2/π) asin(s/(1+s)).
        let p = prior();
        let x = [0.8, 0.1];
        let s = p.variance(dot(&x, &x));
        let k = kernel_eval(&KernelSpec::ErfNngp { prior: p }, &x, &x).unwrap();
        assert!((k - 2.0 / PI * (s / (1.0 + s)).asin()).abs() < 1e-15);
    }

    #[test]
    fn amari_wu_examples() {
        let v = vec![0.3, -0.4];
        let k = KernelSpec::amari_wu(KernelSpec::rbf(1.0).unwrap(), vec![v.clone()], 1.0).unwrap();
        assert!((kernel_eval(&k, &v, &v).unwrap() - 1.0).abs() < 1e-15);
        let at = amari_wu_metric(2.0, std::slice::from_ref(&v), 1.0, &v).unwrap();
        assert!(at.metric.g.sub(&DenseMatrix::identity(2).scale(0.5)).unwrap().max_abs() < 1e-15);
        assert!((at.magnification(2.0) - 1.0).abs() < 1e-15);

        let (sigma2, tau2) = (1.5, 0.7);
        let x = [v[0] + 0.6, v[1] - 0.8];
        let r2 = 1.0;
        let m = amari_wu_metric(sigma2, std::slice::from_ref(&v), tau2, &x).unwrap();
        let h = (-r2 / (2.0 * tau2)).exp();
        let expect = (h * h / sigma2).powi(2) * (1.0 + sigma2 * r2 / (tau2 * tau2));
        assert!((m.det - expect).abs() <= 1e-12 * expect);
        assert!((m.metric.determinant() - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn amari_wu_analytic_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let centers: Vec<Vec<f64>> = (0..3)
                .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let sigma2 = rng.gen_range(0.3..2.0);
            let tau2 = rng.gen_range(0.2..1.5);
            let spec = KernelSpec::amari_wu(KernelSpec::rbf(sigma2).unwrap(), centers, tau2).unwrap();
            let x = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let a = kernel_metric(&spec, &x, MetricMode::Analytic).unwrap();
            let f = kernel_metric(&spec, &x, MetricMode::FiniteDifference).unwrap();
            assert!(a.g.sub(&f.g).unwrap().max_abs() < 1e-5);
        }
    }

    #[test]
    fn amari_wu_far_field_is_flat() {
        let m = amari_wu_metric(1.0, &[vec![0.0, 0.0]], 0.01, &[50.0, 50.0]).unwrap();
        assert!(m.flat);
        assert_eq!(m.det, 0.0);
        assert!(
            amari_wu_metric(1.0, &[vec![0.0, 0.0]], 1.0, &[6.0, 0.0])
                .unwrap()
                .magnification(1.0)
                < 1e-6
        );
    }

    #[test]
    fn amari_wu_magnifies_near_isolated_center() {
        // Near one center mag² ≈ 1 + r²(σ²/τ⁴ − d/τ²): magnified iff τ² < σ²/d.
        let v = vec![0.0, 0.0];
        for tau2 in [0.1, 0.3, 0.45] {
            for r in [0.0, 0.05, 0.1] {
                let m = amari_wu_metric(1.0, std::slice::from_ref(&v), tau2, &[r, 0.0]).unwrap();
                assert!(m.magnification(1.0) >= 1.0 - 1e-15, "τ²={tau2} r={r}");
            }
        }
        let wide = amari_wu_metric(1.0, std::slice::from_ref(&v), 1.0, &[0.1, 0.0]).unwrap();
        assert!(wide.magnification(1.0) < 1.0);
    }

    #[test]
    fn non_rbf_amari_wu_needs_fd() {
        let spec = KernelSpec::amari_wu(KernelSpec::Linear, vec![vec![0.0]], 1.0).unwrap();
        assert!(matches!(
            kernel_metric(&spec, &[0.2], MetricMode::Analytic),
            Err(Error::Unsupported(_))
        ));
        assert!(kernel_metric(&spec, &[0.2], MetricMode::FiniteDifference).is_ok());
    }

    #[test]
    fn mahalanobis_identity_and_rbf() {
        let base = KernelSpec::rbf(2.0).unwrap();
        let x = [0.4, 0.9];
        let same = mahalanobis_metric(&base, &DenseMatrix::identity(2), &x).unwrap();
        assert!(same.g.sub(&DenseMatrix::identity(2).scale(0.5)).unwrap().max_abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_psd(&mut rng, 2);
        let g = mahalanobis_metric(&base, &m, &x).unwrap();
        assert!(g.g.sub(&m.scale(0.5)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn mahalanobis_determinant_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = prior();
        for d in 2..=4 {
            let m = random_psd(&mut rng, d);
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for base in [
                KernelSpec::rbf(0.8).unwrap(),
                KernelSpec::ErfNngp { prior: p },
                KernelSpec::Polynomial { q: 3 },
            ] {
                let g = mahalanobis_metric(&base, &m, &x).unwrap();
                let direct = determinant(&g.g).unwrap();
                let lemma = mahalanobis_determinant(&base, &m, &x).unwrap();
                assert!((direct - lemma).abs() <= 1e-10 * lemma.abs(), "{direct} vs {lemma}");
                let spec = KernelSpec::mahalanobis(base, m.clone()).unwrap();
                let f = kernel_metric(&spec, &x, MetricMode::FiniteDifference).unwrap();
                assert!(f.g.sub(&g.g).unwrap().max_abs() < 1e-5 * g.g.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn translation_invariant_metrics_are_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = random_psd(&mut rng, 3);
        let specs = [
            KernelSpec::rbf(0.7).unwrap(),
            KernelSpec::mahalanobis(KernelSpec::rbf(1.3).unwrap(), m).unwrap(),
        ];
        for spec in &specs {
            assert!(spec.is_translation_invariant());
            let reference = kernel_metric(spec, &[0.0; 3], MetricMode::Analytic).unwrap().g;
            for _ in 0..50 {
                let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let g = kernel_metric(spec, &x, MetricMode::Analytic).unwrap().g;
                assert!(g.sub(&reference).unwrap().max_abs() < 1e-8);
            }
        }
    }

    #[test]
    fn fd_rejects_bad_steps() {
        assert!(kernel_metric_fd(&KernelSpec::Linear, &[1.0], 0.0).is_err());
        assert!(matches!(
            kernel_metric_fd(&KernelSpec::Linear, &[1e20], 1e-5),
            Err(Error::StepUnderflow { .. })
        ));
    }
}
