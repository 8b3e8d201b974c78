//! Toy classification datasets and splitting.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: DenseMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn new(inputs: DenseMatrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::contract("dataset must not be empty"));
        }
        if labels.len() != inputs.rows() {
            return Err(Error::dim("label count", inputs.rows(), labels.len()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::contract(format!("label {bad} outside 0..{num_classes}")));
        }
        Ok(Self {
            inputs,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.inputs.row(i)
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let d = self.dim();
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            data.extend_from_slice(self.inputs.row(i));
        }
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(DenseMatrix::new(indices.len(), d, data)?, labels, self.num_classes)
    }

    /// Seeded shuffle, then the first `train_fraction` of rows for training.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::contract(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = ((self.len() as f64) * train_fraction).round() as usize;
        if cut == 0 || cut == self.len() {
            return Err(Error::contract("split leaves an empty side"));
        }
        Ok((self.subset(&order[..cut])?, self.subset(&order[cut..])?))
    }
}

/// The four XOR corners with labels {0, 1, 1, 0}.
pub fn make_xor() -> Dataset {
    let inputs = DenseMatrix::from_rows(&[vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]])
        .expect("rows are consistent");
    Dataset::new(inputs, vec![0, 1, 1, 0], 2).expect("labels are valid")
}

pub const SINUSOID_POINTS: usize = 400;

/// Boundary `y = (3/5) sin(7x − 1)`.
pub fn sinusoid_boundary(x: f64) -> f64 {
    0.6 * (7.0 * x - 1.0).sin()
}

pub fn sinusoid_label(x: f64, y: f64) -> usize {
    usize::from(y > sinusoid_boundary(x))
}

/// 400 uniform points in `[−1, 1]²`, labelled by the side of the sinusoid.
pub fn make_sinusoid(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(2 * SINUSOID_POINTS);
    let mut labels = Vec::with_capacity(SINUSOID_POINTS);
    for _ in 0..SINUSOID_POINTS {
        let x = rng.gen_range(-1.0..=1.0);
        let y = rng.gen_range(-1.0..=1.0);
        data.push(x);
        data.push(y);
        labels.push(sinusoid_label(x, y));
    }
    let inputs = DenseMatrix::new(SINUSOID_POINTS, 2, data).expect("shape is consistent");
    Dataset::new(inputs, labels, 2).expect("labels are binary")
}
