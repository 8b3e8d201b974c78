//! Softmax cross-entropy training with SGD (momentum, weight decay) or Adam.
//!
//! Training is single-threaded and bitwise deterministic for a given seed.
//! Weight decay enters as `λθ` added to the gradient, as in PyTorch's `SGD`
//! and `Adam`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::network::{argmax, MlpNetwork};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd {
        lr: f64,
        momentum: f64,
        weight_decay: f64,
    },
    Adam {
        lr: f64,
        weight_decay: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl Optimizer {
    pub fn adam(lr: f64, weight_decay: f64) -> Self {
        Optimizer::Adam {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            Optimizer::Sgd { lr, .. } | Optimizer::Adam { lr, .. } => lr,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub epochs: usize,
    /// `None` trains full batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// Epochs after which the network is copied; 0 means the initial network.
    pub snapshot_epochs: Vec<usize>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let lr = self.optimizer.lr();
        // A zero rate is allowed: it leaves the parameters untouched.
        if !(lr >= 0.0) || !lr.is_finite() {
            return Err(Error::contract(format!("learning rate must be non-negative, got {lr}")));
        }
        if self.epochs == 0 {
            return Err(Error::contract("epochs must be at least 1"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::contract("batch size must be positive"));
        }
        if self.snapshot_epochs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::contract("snapshot epochs must be strictly increasing"));
        }
        if let Some(&last) = self.snapshot_epochs.last() {
            if last > self.epochs {
                return Err(Error::contract(format!(
                    "snapshot epoch {last} exceeds {} epochs",
                    self.epochs
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean loss over the epoch's mini-batches, weighted by batch size.
    pub loss: f64,
    /// Fraction of examples classified correctly before each batch update.
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: MlpNetwork,
    pub snapshots: Vec<(usize, MlpNetwork)>,
    pub history: Vec<EpochStats>,
}

/// Per-layer gradients in the layout of the network's layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<DenseMatrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Mean softmax cross-entropy of `net` on `(inputs, labels)`, its gradient,
/// and the number of correct argmax predictions.
pub fn loss_and_gradient(net: &MlpNetwork, inputs: &DenseMatrix, labels: &[usize]) -> Result<(f64, Gradients, usize)> {
    if !net.has_readout() {
        return Err(Error::contract("training needs a network with a readout layer"));
    }
    if inputs.rows() != labels.len() {
        return Err(Error::dim("batch labels", inputs.rows(), labels.len()));
    }
    let act = net.activation();
    let layers = net.layers();
    let last = layers.len() - 1;
    let batch = inputs.rows();

    // Forward pass keeping pre-activations and activations.
    let mut pre = Vec::with_capacity(layers.len());
    let mut acts = vec![inputs.clone()];
    for (i, layer) in layers.iter().enumerate() {
        let mut z = acts[i].matmul_t(&layer.weights)?;
        for r in 0..batch {
            for (v, b) in z.row_mut(r).iter_mut().zip(&layer.biases) {
                *v += b;
            }
        }
        if i < last {
            let mut a = z.clone();
            a.data_mut().iter_mut().for_each(|v| *v = act.value(*v));
            acts.push(a);
        }
        pre.push(z);
    }

    let classes = layers[last].outputs();
    if let Some(bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::contract(format!("label {bad} outside 0..{classes}")));
    }
    let mut delta = pre[last].clone();
    let mut loss = 0.0;
    let mut correct = 0;
    for (r, &label) in labels.iter().enumerate() {
        let row = delta.row_mut(r);
        if argmax(row) == label {
            correct += 1;
        }
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            total += *v;
        }
        loss += total.ln() - (row[label].ln());
        for v in row.iter_mut() {
            *v /= total;
        }
        row[label] -= 1.0;
        row.iter_mut().for_each(|v| *v /= batch as f64);
    }
    loss /= batch as f64;

    let mut gw = vec![DenseMatrix::zeros(0, 0); layers.len()];
    let mut gb = vec![Vec::new(); layers.len()];
    for i in (0..layers.len()).rev() {
        gw[i] = delta.t_matmul(&acts[i])?;
        gb[i] = (0..delta.cols())
            .map(|c| (0..batch).map(|r| delta[(r, c)]).sum())
            .collect();
        if i > 0 {
            let mut back = delta.matmul(&layers[i].weights)?;
            for (v, z) in back.data_mut().iter_mut().zip(pre[i - 1].data()) {
                *v *= act.first(*z);
            }
            delta = back;
        }
    }
    Ok((
        loss,
        Gradients {
            weights: gw,
            biases: gb,
        },
        correct,
    ))
}

/// Mean loss and accuracy on a whole dataset without updating anything.
pub fn evaluate(net: &MlpNetwork, data: &Dataset) -> Result<(f64, f64)> {
    let logits = net.logits_batch(&data.inputs)?;
    let mut loss = 0.0;
    let mut correct = 0;
    for (r, &label) in data.labels.iter().enumerate() {
        let row = logits.row(r);
        if argmax(row) == label {
            correct += 1;
        }
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - row[label];
    }
    let p = data.len() as f64;
    Ok((loss / p, correct as f64 / p))
}

struct OptimizerState {
    step: i32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    fn new(net: &MlpNetwork) -> Self {
        let sizes: Vec<usize> = net
            .layers()
            .iter()
            .flat_map(|l| [l.weights.data().len(), l.biases.len()])
            .collect();
        Self {
            step: 0,
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn apply(&mut self, opt: &Optimizer, net: &mut MlpNetwork, grads: &Gradients) {
        self.step += 1;
        let mut slot = 0;
        for (i, layer) in net.layers_mut().iter_mut().enumerate() {
            let w = layer.weights.data_mut();
            self.update(opt, slot, w, grads.weights[i].data());
            self.update(opt, slot + 1, &mut layer.biases, &grads.biases[i]);
            slot += 2;
        }
    }

    fn update(&mut self, opt: &Optimizer, slot: usize, params: &mut [f64], grad: &[f64]) {
        match *opt {
            Optimizer::Sgd {
                lr,
                momentum,
                weight_decay,
            } => {
                let buf = &mut self.first[slot];
                for ((p, g), b) in params.iter_mut().zip(grad).zip(buf.iter_mut()) {
                    let g = g + weight_decay * *p;
                    *b = if self.step == 1 { g } else { momentum * *b + g };
                    *p -= lr * *b;
                }
            }
            Optimizer::Adam {
                lr,
                weight_decay,
                beta1,
                beta2,
                eps,
            } => {
                let c1 = 1.0 - beta1.powi(self.step);
                let c2 = 1.0 - beta2.powi(self.step);
                let (m, v) = (&mut self.first[slot], &mut self.second[slot]);
                for (((p, g), mi), vi) in params.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                    let g = g + weight_decay * *p;
                    *mi = beta1 * *mi + (1.0 - beta1) * g;
                    *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                    *p -= lr * (*mi / c1) / ((*vi / c2).sqrt() + eps);
                }
            }
        }
    }
}

pub fn train(net: &MlpNetwork, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(net, data, cfg, |_, _| Ok(()))
}

/// As [`train`], calling `on_epoch(epoch, net)` after every epoch.
pub fn train_with(
    net: &MlpNetwork,
    data: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &MlpNetwork) -> Result<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if net.output_dim() != data.num_classes {
        return Err(Error::dim("network output width", data.num_classes, net.output_dim()));
    }
    if net.input_dim() != data.dim() {
        return Err(Error::dim("network input width", data.dim(), net.input_dim()));
    }
    let mut net = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = OptimizerState::new(&net);
    let mut snapshots = Vec::new();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut wanted = cfg.snapshot_epochs.iter().peekable();
    if wanted.peek() == Some(&&0) {
        snapshots.push((0, net.clone()));
        wanted.next();
    }
    let p = data.len();
    let batch = cfg.batch_size.unwrap_or(p).min(p);
    let mut order: Vec<usize> = (0..p).collect();
    for epoch in 1..=cfg.epochs {
        if batch < p {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(batch) {
            let (inputs, labels) = if chunk.len() == p && batch == p {
                (data.inputs.clone(), data.labels.clone())
            } else {
                let sub = data.subset(chunk)?;
                (sub.inputs, sub.labels)
            };
            let (loss, grads, ok) = loss_and_gradient(&net, &inputs, &labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            loss_sum += loss * chunk.len() as f64;
            correct += ok;
            state.apply(&cfg.optimizer, &mut net, &grads);
        }
        history.push(EpochStats {
            epoch,
            loss: loss_sum / p as f64,
            accuracy: correct as f64 / p as f64,
        });
        if wanted.peek() == Some(&&epoch) {
            snapshots.push((epoch, net.clone()));
            wanted.next();
        }
        on_epoch(epoch, &net)?;
    }
    Ok(TrainOutcome {
        net,
        snapshots,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::data::{make_sinusoid, make_xor};
    use crate::network::InitScheme;
    use rand::Rng;

    fn sgd(lr: f64) -> Optimizer {
        Optimizer::Sgd {
            lr,
            momentum: 0.9,
            weight_decay: 1e-4,
        }
    }

    fn perturbed_loss(net: &MlpNetwork, data: &Dataset, layer: usize, idx: usize, bias: bool, h: f64) -> f64 {
        let mut n = net.clone();
        let l = &mut n.layers_mut()[layer];
        if bias {
            l.biases[idx] += h;
        } else {
            l.weights.data_mut()[idx] += h;
        }
        loss_and_gradient(&n, &data.inputs, &data.labels).unwrap().0
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = make_sinusoid(2).subset(&(0..25).collect::<Vec<_>>()).unwrap();
        let kinds = [
            ActivationKind::Erf,
            ActivationKind::Sigmoid,
            ActivationKind::Tanh,
            ActivationKind::Monomial(3),
            ActivationKind::Linear,
            ActivationKind::NormalizedQuadratic,
        ];
        for kind in kinds {
            for widths in [vec![2, 5, 2], vec![2, 4, 3, 2], vec![2, 3, 4, 3, 2]] {
                let init = InitScheme {
                    weight_variance: Some(0.5),
                    bias_variance: 0.1,
                };
                let net = MlpNetwork::random(&widths, kind, init, &mut rng).unwrap();
                let (_, grads, _) = loss_and_gradient(&net, &data.inputs, &data.labels).unwrap();
                for _ in 0..20 {
                    let layer = rng.gen_range(0..net.layers().len());
                    let bias = rng.gen_bool(0.3);
                    let count = if bias {
                        net.layers()[layer].biases.len()
                    } else {
                        net.layers()[layer].weights.data().len()
                    };
                    let idx = rng.gen_range(0..count);
                    let h = 1e-5;
                    let fd = (perturbed_loss(&net, &data, layer, idx, bias, h)
                        - perturbed_loss(&net, &data, layer, idx, bias, -h))
                        / (2.0 * h);
                    let analytic = if bias {
                        grads.biases[layer][idx]
                    } else {
                        grads.weights[layer].data()[idx]
                    };
                    assert!((fd - analytic).abs() < 1e-6, "{kind} {widths:?}: {fd} vs {analytic}");
                }
            }
        }
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = MlpNetwork::random(&[2, 6, 2], ActivationKind::Sigmoid, InitScheme::default(), &mut rng).unwrap();
        for opt in [
            Optimizer::Sgd {
                lr: 0.0,
                momentum: 0.9,
                weight_decay: 2e-4,
            },
            Optimizer::adam(0.0, 1e-4),
        ] {
            let cfg = TrainConfig {
                optimizer: opt,
                epochs: 5,
                batch_size: Some(2),
                seed: 1,
                snapshot_epochs: vec![],
            };
            assert_eq!(train(&net, &make_xor(), &cfg).unwrap().net, net);
        }
    }

    #[test]
    fn xor_is_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = MlpNetwork::random(&[2, 2, 2], ActivationKind::Sigmoid, InitScheme::default(), &mut rng).unwrap();
        let cfg = TrainConfig {
            optimizer: sgd(0.02),
            epochs: 2000,
            batch_size: None,
            seed: 0,
            snapshot_epochs: vec![0, 1000, 2000],
        };
        let out = train(&net, &make_xor(), &cfg).unwrap();
        assert_eq!(
            out.snapshots.iter().map(|s| s.0).collect::<Vec<_>>(),
            vec![0, 1000, 2000]
        );
        assert_eq!(out.snapshots[0].1, net);
        assert_eq!(out.history.len(), 2000);
        assert!(out.history[1999].loss < out.history[0].loss);
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = MlpNetwork::random(&[2, 8, 2], ActivationKind::Tanh, InitScheme::default(), &mut rng).unwrap();
        let cfg = TrainConfig {
            optimizer: Optimizer::adam(0.01, 1e-4),
            epochs: 20,
            batch_size: Some(37),
            seed: 9,
            snapshot_epochs: vec![10],
        };
        let data = make_sinusoid(4);
        let a = train(&net, &data, &cfg).unwrap();
        let b = train(&net, &data, &cfg).unwrap();
        assert_eq!(a.net.to_bytes(), b.net.to_bytes());
        assert_eq!(a.snapshots[0].1.to_bytes(), b.snapshots[0].1.to_bytes());
    }

    #[test]
    fn evaluate_agrees_with_batch_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = MlpNetwork::random(&[2, 5, 2], ActivationKind::Erf, InitScheme::default(), &mut rng).unwrap();
        let data = make_sinusoid(1);
        let (loss, _, correct) = loss_and_gradient(&net, &data.inputs, &data.labels).unwrap();
        let (l2, acc) = evaluate(&net, &data).unwrap();
        assert!((loss - l2).abs() < 1e-12);
        assert_eq!(acc, correct as f64 / 400.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = MlpNetwork::random(&[2, 3, 2], ActivationKind::Erf, InitScheme::default(), &mut rng).unwrap();
        let mut cfg = TrainConfig {
            optimizer: sgd(0.1),
            epochs: 3,
            batch_size: None,
            seed: 0,
            snapshot_epochs: vec![4],
        };
        assert!(train(&net, &make_xor(), &cfg).is_err());
        cfg.snapshot_epochs = vec![2, 1];
        assert!(train(&net, &make_xor(), &cfg).is_err());
        cfg.snapshot_epochs = vec![];
        cfg.optimizer = sgd(f64::NAN);
        assert!(train(&net, &make_xor(), &cfg).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let w = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let hidden = crate::network::Layer::new(w.clone(), vec![0.0; 2]).unwrap();
        let readout = crate::network::Layer::new(w.scale(1e300), vec![0.0; 2]).unwrap();
        let net = MlpNetwork::new(vec![hidden, readout], ActivationKind::Linear, 1, true).unwrap();
        let cfg = TrainConfig {
            optimizer: sgd(1.0),
            epochs: 3,
            batch_size: None,
            seed: 0,
            snapshot_epochs: vec![],
        };
        assert!(matches!(
            train(&net, &make_xor(), &cfg),
            Err(Error::NonFiniteLoss { epoch: 1 })
        ));
    }
}
