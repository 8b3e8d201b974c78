//! Fully connected networks viewed as feature maps.
//!
//! Hidden layers apply the activation elementwise; an optional last layer is a
//! linear readout producing logits. The feature map Φ is the output of hidden
//! layer `feature_layer` (1-based), scaled by `1/√n` for that layer's width n.
//! The scaling only enters Φ; the forward pass used for classification is the
//! plain unscaled composition.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out × in`.
    pub weights: DenseMatrix,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn new(weights: DenseMatrix, biases: Vec<f64>) -> Result<Self> {
        if biases.len() != weights.rows() {
            return Err(Error::dim("layer biases", weights.rows(), biases.len()));
        }
        Ok(Self { weights, biases })
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    /// `W x + b`.
    pub fn preactivation(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs())
            .map(|r| self.weights.row(r).iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.biases[r])
            .collect()
    }
}

/// Gaussian initialization. `weight_variance = None` means `1/fan_in`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitScheme {
    pub weight_variance: Option<f64>,
    pub bias_variance: f64,
}

impl Default for InitScheme {
    fn default() -> Self {
        Self {
            weight_variance: None,
            bias_variance: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layers: Vec<Layer>,
    activation: ActivationKind,
    feature_layer: usize,
    has_readout: bool,
}

impl MlpNetwork {
    pub fn new(
        layers: Vec<Layer>,
        activation: ActivationKind,
        feature_layer: usize,
        has_readout: bool,
    ) -> Result<Self> {
        activation.validate()?;
        if layers.is_empty() {
            return Err(Error::contract("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[1].inputs() != pair[0].outputs() {
                return Err(Error::dim("layer input width", pair[0].outputs(), pair[1].inputs()));
            }
        }
        let hidden = layers.len() - usize::from(has_readout);
        if feature_layer == 0 || feature_layer > hidden {
            return Err(Error::contract(format!(
                "feature layer {feature_layer} outside 1..={hidden}"
            )));
        }
        Ok(Self {
            layers,
            activation,
            feature_layer,
            has_readout,
        })
    }

    /// Single hidden layer feature map with weights `n × d`, no readout.
    pub fn shallow(weights: DenseMatrix, biases: Vec<f64>, activation: ActivationKind) -> Result<Self> {
        Self::new(vec![Layer::new(weights, biases)?], activation, 1, false)
    }

    /// Random classifier with widths `[d, h₁, …, h_L, out]`; the first hidden
    /// layer is the feature layer.
    pub fn random<R: Rng + ?Sized>(
        widths: &[usize],
        activation: ActivationKind,
        init: InitScheme,
        rng: &mut R,
    ) -> Result<Self> {
        if widths.len() < 3 {
            return Err(Error::contract(
                "classifier needs input, at least one hidden and an output width",
            ));
        }
        let layers = widths
            .windows(2)
            .map(|w| random_layer(w[0], w[1], init, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers, activation, 1, true)
    }

    /// Random single-layer feature map of width `n` on `d` inputs with
    /// `w ∼ N(0, σ²)`, `b ∼ N(0, ζ²)`.
    pub fn random_feature_map<R: Rng + ?Sized>(
        d: usize,
        n: usize,
        activation: ActivationKind,
        sigma2: f64,
        zeta2: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let init = InitScheme {
            weight_variance: Some(sigma2),
            bias_variance: zeta2,
        };
        let layer = random_layer(d, n, init, rng)?;
        Self::new(vec![layer], activation, 1, false)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn feature_layer(&self) -> usize {
        self.feature_layer
    }

    pub fn has_readout(&self) -> bool {
        self.has_readout
    }

    pub fn with_feature_layer(mut self, feature_layer: usize) -> Result<Self> {
        let hidden = self.num_hidden();
        if feature_layer == 0 || feature_layer > hidden {
            return Err(Error::contract(format!(
                "feature layer {feature_layer} outside 1..={hidden}"
            )));
        }
        self.feature_layer = feature_layer;
        Ok(self)
    }

    pub fn num_hidden(&self) -> usize {
        self.layers.len() - usize::from(self.has_readout)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    /// Width n of the feature layer.
    pub fn feature_width(&self) -> usize {
        self.layers[self.feature_layer - 1].outputs()
    }

    /// True when Φ is a single hidden layer applied directly to the input.
    pub fn is_shallow(&self) -> bool {
        self.feature_layer == 1
    }

    pub fn first_layer(&self) -> &Layer {
        &self.layers[0]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::dim("network input", self.input_dim(), x.len()));
        }
        Ok(())
    }

    /// Φ(x).
    pub fn feature_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        for layer in &self.layers[..self.feature_layer] {
            h = layer
                .preactivation(&h)
                .into_iter()
                .map(|z| self.activation.value(z))
                .collect();
        }
        let scale = 1.0 / (h.len() as f64).sqrt();
        Ok(h.into_iter().map(|v| v * scale).collect())
    }

    /// `∂Φᵢ/∂x_μ`, an `n × d` matrix, by the chain rule.
    pub fn jacobian(&self, x: &[f64]) -> Result<DenseMatrix> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        let mut jac: Option<DenseMatrix> = None;
        for layer in &self.layers[..self.feature_layer] {
            let z = layer.preactivation(&h);
            let mut next = match &jac {
                Some(j) => layer.weights.matmul(j)?,
                None => layer.weights.clone(),
            };
            for (r, zr) in z.iter().enumerate() {
                let slope = self.activation.first(*zr);
                next.row_mut(r).iter_mut().for_each(|v| *v *= slope);
            }
            jac = Some(next);
            h = z.into_iter().map(|v| self.activation.value(v)).collect();
        }
        let jac = jac.expect("feature layer is at least 1");
        let scale = 1.0 / (jac.rows() as f64).sqrt();
        Ok(jac.scale(scale))
    }

    /// Readout logits for a single input.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        if !self.has_readout {
            return Err(Error::contract("network has no readout layer"));
        }
        let hidden = self.num_hidden();
        let mut h = x.to_vec();
        for layer in &self.layers[..hidden] {
            h = layer
                .preactivation(&h)
                .into_iter()
                .map(|z| self.activation.value(z))
                .collect();
        }
        Ok(self.layers[hidden].preactivation(&h))
    }

    /// Readout logits for every row of `inputs`, as a `p × classes` matrix.
    pub fn logits_batch(&self, inputs: &DenseMatrix) -> Result<DenseMatrix> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::dim("network input", self.input_dim(), inputs.cols()));
        }
        if !self.has_readout {
            return Err(Error::contract("network has no readout layer"));
        }
        let mut h = inputs.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.matmul_t(&layer.weights)?;
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.biases) {
                    *v += b;
                }
            }
            if i + 1 < self.layers.len() {
                z.data_mut().iter_mut().for_each(|v| *v = self.activation.value(*v));
            }
            h = z;
        }
        Ok(h)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.data().len() + l.biases.len())
            .sum()
    }

    /// Serializes to the versioned binary checkpoint format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let (tag, param) = activation_tag(self.activation);
        out.push(tag);
        out.extend_from_slice(&param.to_le_bytes());
        out.extend_from_slice(&(self.feature_layer as u32).to_le_bytes());
        out.push(u8::from(self.has_readout));
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for layer in &self.layers {
            out.extend_from_slice(&(layer.outputs() as u32).to_le_bytes());
            out.extend_from_slice(&(layer.inputs() as u32).to_le_bytes());
            for v in layer.weights.data().iter().chain(&layer.biases) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(r.error("bad checkpoint magic"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(r.error(&format!("unsupported checkpoint version {version}")));
        }
        let tag = r.take(1)?[0];
        let param = r.u32()?;
        let activation = activation_from_tag(tag, param).ok_or_else(|| r.error("bad activation tag"))?;
        let feature_layer = r.u32()? as usize;
        let has_readout = r.take(1)?[0] != 0;
        let count = r.u32()? as usize;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let weights = (0..rows * cols).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let biases = (0..rows).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            layers.push(Layer::new(DenseMatrix::new(rows, cols, weights)?, biases)?);
        }
        if r.pos != bytes.len() {
            return Err(r.error("trailing bytes after checkpoint"));
        }
        Self::new(layers, activation, feature_layer, has_readout)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn random_layer<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, init: InitScheme, rng: &mut R) -> Result<Layer> {
    let wvar = init.weight_variance.unwrap_or(1.0 / fan_in as f64);
    let wdist = Normal::new(0.0, wvar.sqrt()).map_err(|e| Error::contract(e.to_string()))?;
    let weights = DenseMatrix::from_fn(fan_out, fan_in, |_, _| wdist.sample(rng));
    let biases = if init.bias_variance > 0.0 {
        let bdist = Normal::new(0.0, init.bias_variance.sqrt()).map_err(|e| Error::contract(e.to_string()))?;
        (0..fan_out).map(|_| bdist.sample(rng)).collect()
    } else {
        vec![0.0; fan_out]
    };
    Layer::new(weights, biases)
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"PBNN";
const CHECKPOINT_VERSION: u32 = 1;

fn activation_tag(kind: ActivationKind) -> (u8, u32) {
    match kind {
        ActivationKind::Erf => (0, 0),
        ActivationKind::Sigmoid => (1, 0),
        ActivationKind::Tanh => (2, 0),
        ActivationKind::Monomial(q) => (3, q),
        ActivationKind::Linear => (4, 0),
        ActivationKind::NormalizedQuadratic => (5, 0),
    }
}

fn activation_from_tag(tag: u8, param: u32) -> Option<ActivationKind> {
    Some(match tag {
        0 => ActivationKind::Erf,
        1 => ActivationKind::Sigmoid,
        2 => ActivationKind::Tanh,
        3 => ActivationKind::Monomial(param),
        4 => ActivationKind::Linear,
        5 => ActivationKind::NormalizedQuadratic,
        _ => return None,
    })
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl ByteReader<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            offset: self.pos as u64,
            message: message.to_string(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.error("truncated checkpoint"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fd_jacobian(net: &MlpNetwork, x: &[f64], h: f64) -> DenseMatrix {
        let n = net.feature_width();
        let d = x.len();
        let mut jac = DenseMatrix::zeros(n, d);
        for mu in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[mu] += h;
            xm[mu] -= h;
            let fp = net.feature_map(&xp).unwrap();
            let fm = net.feature_map(&xm).unwrap();
            for i in 0..n {
                jac[(i, mu)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    #[test]
    fn identity_linear_feature_map() {
        let net = MlpNetwork::shallow(DenseMatrix::identity(2), vec![0.0; 2], ActivationKind::Linear).unwrap();
        let phi = net.feature_map(&[1.0, 2.0]).unwrap();
        let s = 2f64.sqrt();
        assert!((phi[0] - 1.0 / s).abs() < 1e-15);
        assert!((phi[1] - 2.0 / s).abs() < 1e-15);
    }

    #[test]
    fn erf_feature_map_vanishes_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = MlpNetwork::random_feature_map(3, 5, ActivationKind::Erf, 1.0, 0.0, &mut rng).unwrap();
        assert!(net.feature_map(&[0.0; 3]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn deep_feature_map_is_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_layer(2, 4, InitScheme::default(), &mut rng).unwrap();
        let b = random_layer(4, 3, InitScheme::default(), &mut rng).unwrap();
        let act = ActivationKind::Tanh;
        let deep = MlpNetwork::new(vec![a.clone(), b.clone()], act, 2, false).unwrap();
        let x = [0.3, -0.7];
        let h1: Vec<f64> = a.preactivation(&x).into_iter().map(|z| act.value(z)).collect();
        let h2: Vec<f64> = b.preactivation(&h1).into_iter().map(|z| act.value(z)).collect();
        let manual: Vec<f64> = h2.iter().map(|v| v / 3f64.sqrt()).collect();
        for (a, b) in deep.feature_map(&x).unwrap().iter().zip(&manual) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_jacobian_is_scaled_weights() {
        let w = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.5]]).unwrap();
        let net = MlpNetwork::shallow(w.clone(), vec![0.1, 0.2, 0.3], ActivationKind::Linear).unwrap();
        let jac = net.jacobian(&[0.4, 0.9]).unwrap();
        assert!(jac.sub(&w.scale(1.0 / 3f64.sqrt())).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn erf_jacobian_at_origin() {
        let net = MlpNetwork::shallow(DenseMatrix::identity(2), vec![0.0; 2], ActivationKind::Erf).unwrap();
        let jac = net.jacobian(&[0.0, 0.0]).unwrap();
        let expect = (2.0 / std::f64::consts::PI).sqrt() / 2f64.sqrt();
        assert!((jac[(0, 0)] - expect).abs() < 1e-15);
        assert!((jac[(1, 1)] - expect).abs() < 1e-15);
        assert_eq!(jac[(0, 1)], 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for act in [ActivationKind::Erf, ActivationKind::Sigmoid, ActivationKind::Tanh] {
            let net = MlpNetwork::random(&[3, 6, 5, 2], act, InitScheme::default(), &mut rng)
                .unwrap()
                .with_feature_layer(2)
                .unwrap();
            let x = [0.2, -0.4, 0.9];
            let diff = net
                .jacobian(&x)
                .unwrap()
                .sub(&fd_jacobian(&net, &x, 1e-6))
                .unwrap()
                .max_abs();
            assert!(diff < 1e-6, "{act}: {diff}");
        }
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = MlpNetwork::random(&[2, 7, 3], ActivationKind::Monomial(3), InitScheme::default(), &mut rng).unwrap();
        let bytes = net.to_bytes();
        let back = MlpNetwork::from_bytes(&bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn truncated_checkpoint_reports_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = MlpNetwork::random(&[2, 3, 2], ActivationKind::Erf, InitScheme::default(), &mut rng).unwrap();
        let bytes = net.to_bytes();
        match MlpNetwork::from_bytes(&bytes[..bytes.len() - 3]) {
            Err(Error::Parse { offset, .. }) => assert!(offset > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_incompatible_layers() {
        let a = Layer::new(DenseMatrix::zeros(3, 2), vec![0.0; 3]).unwrap();
        let b = Layer::new(DenseMatrix::zeros(2, 4), vec![0.0; 2]).unwrap();
        assert!(MlpNetwork::new(vec![a.clone(), b], ActivationKind::Erf, 1, false).is_err());
        assert!(MlpNetwork::new(vec![a], ActivationKind::Erf, 0, false).is_err());
    }

    #[test]
    fn batch_logits_match_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = MlpNetwork::random(&[2, 5, 4, 3], ActivationKind::Sigmoid, InitScheme::default(), &mut rng).unwrap();
        let inputs = DenseMatrix::from_rows(&[vec![0.1, 0.2], vec![-1.0, 0.5]]).unwrap();
        let batch = net.logits_batch(&inputs).unwrap();
        for r in 0..2 {
            let single = net.logits(inputs.row(r)).unwrap();
            for (a, b) in single.iter().zip(batch.row(r)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }
}
