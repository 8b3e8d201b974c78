//! Point sets (grids, slices, ternary planes), per-point channels, distance
//! to a classifier's decision boundary, and the magnification statistic.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::network::{argmax, MlpNetwork};

pub const LOG_VOLUME: &str = "log_sqrt_det_g";
pub const RICCI: &str = "ricci";
pub const PREDICTED_CLASS: &str = "predicted_class";
pub const BOUNDARY_DISTANCE: &str = "boundary_distance";

/// Square grid on `[lo, hi]²` with `n` points per side, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::contract(format!("grid needs lo < hi, got [{lo}, {hi}]")));
        }
        if n < 2 {
            return Err(Error::contract(format!(
                "grid needs at least 2 points per side, got {n}"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    /// Index of grid point `(x_col, y_row)`.
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n + col
    }

    /// `n²` points; row `r` holds `y = coordinate(r)`, columns sweep `x`.
    pub fn points(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n * self.n, 2, |k, c| {
            if c == 0 {
                self.coordinate(k % self.n)
            } else {
                self.coordinate(k / self.n)
            }
        })
    }
}

pub fn grid2d(lo: f64, hi: f64, n_per_side: usize) -> Result<DenseMatrix> {
    Ok(GridSpec::new(lo, hi, n_per_side)?.points())
}

fn check_anchor(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::dim("anchor point", expected, found));
    }
    Ok(())
}

/// `(1 − t)x₁ + t x₂` at `t = i/(m − 1)`.
pub fn linear_slice(x1: &[f64], x2: &[f64], m: usize) -> Result<(DenseMatrix, Vec<f64>)> {
    check_anchor(x1.len(), x2.len())?;
    if m < 2 {
        return Err(Error::contract(format!("slice needs at least 2 points, got {m}")));
    }
    let ts: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let points = DenseMatrix::from_fn(m, x1.len(), |i, c| {
        let t = ts[i];
        if i == 0 {
            x1[c]
        } else if i + 1 == m {
            x2[c]
        } else {
            x1[c] + t * (x2[c] - x1[c])
        }
    });
    Ok((points, ts))
}

/// Simplex lattice `tᵢ = kᵢ/(r − 1)` with `Σkᵢ = r − 1`, ordered by `k₁` then
/// `k₂`. Returns the points and the `m × 3` barycentric coordinates.
pub fn ternary_plane(x1: &[f64], x2: &[f64], x3: &[f64], resolution: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    check_anchor(x1.len(), x2.len())?;
    check_anchor(x1.len(), x3.len())?;
    if resolution < 2 {
        return Err(Error::contract(format!(
            "ternary plane needs resolution ≥ 2, got {resolution}"
        )));
    }
    let top = resolution - 1;
    let mut bary = Vec::new();
    for k1 in 0..=top {
        for k2 in 0..=top - k1 {
            let k3 = top - k1 - k2;
            let t1 = k1 as f64 / top as f64;
            let t2 = k2 as f64 / top as f64;
            // Derive t₃ from the others so each row sums to one.
            let t3 = if k3 == 0 { 0.0 } else { 1.0 - t1 - t2 };
            bary.push([t1, t2, t3]);
        }
    }
    let d = x1.len();
    let points = DenseMatrix::from_fn(bary.len(), d, |i, c| {
        let [t1, t2, t3] = bary[i];
        // Edges use the slice formula so they coincide with linear_slice.
        match (t1 == 1.0, t2 == 1.0, t3 == 1.0) {
            (true, _, _) => x1[c],
            (_, true, _) => x2[c],
            (_, _, true) => x3[c],
            _ if t3 == 0.0 => x1[c] + t2 * (x2[c] - x1[c]),
            _ if t2 == 0.0 => x1[c] + t3 * (x3[c] - x1[c]),
            _ if t1 == 0.0 => x2[c] + t3 * (x3[c] - x2[c]),
            _ => t1 * x1[c] + t2 * x2[c] + t3 * x3[c],
        }
    });
    let coords = DenseMatrix::from_fn(bary.len(), 3, |i, c| bary[i][c]);
    Ok((points, coords))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Grid(GridSpec),
    Slice {
        x1: Vec<f64>,
        x2: Vec<f64>,
        t: Vec<f64>,
    },
    Plane {
        resolution: usize,
        barycentric: DenseMatrix,
    },
    Points,
}

impl Provenance {
    pub fn describe(&self) -> String {
        match self {
            Provenance::Grid(g) => format!("grid2d lo={} hi={} n={}", g.lo, g.hi, g.n),
            Provenance::Slice { t, .. } => format!("linear_slice m={}", t.len()),
            Provenance::Plane { resolution, .. } => format!("ternary_plane resolution={resolution}"),
            Provenance::Points => "points".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryField {
    pub points: DenseMatrix,
    pub channels: BTreeMap<String, Vec<f64>>,
    pub provenance: Provenance,
}

impl GeometryField {
    pub fn new(points: DenseMatrix, provenance: Provenance) -> Self {
        Self {
            points,
            channels: BTreeMap::new(),
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn set_channel(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::dim("channel length", self.len(), values.len()));
        }
        self.channels.insert(name.into(), values);
        Ok(())
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.channels
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::contract(format!("field has no channel {name:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDistances {
    pub distances: Vec<f64>,
    /// Crossing points located on grid edges.
    pub crossings: Vec<[f64; 2]>,
    /// Set when the prediction is constant over the grid; distances are ∞.
    pub constant_prediction: bool,
}

/// Distance from each grid point to the nearest decision-boundary crossing.
///
/// Crossings sit on grid edges whose endpoints are predicted differently, at
/// the zero of the linearly interpolated margin between the two classes.
pub fn boundary_distance(net: &MlpNetwork, grid: &GridSpec) -> Result<BoundaryDistances> {
    if net.input_dim() != 2 {
        return Err(Error::dim("boundary distance input", 2, net.input_dim()));
    }
    let points = grid.points();
    let logits = net.logits_batch(&points)?;
    let classes: Vec<usize> = (0..points.rows()).map(|i| argmax(logits.row(i))).collect();
    let mut crossings = Vec::new();
    let n = grid.n;
    let mut edge = |a: usize, b: usize| {
        let (ca, cb) = (classes[a], classes[b]);
        if ca == cb {
            return;
        }
        let ma = logits[(a, ca)] - logits[(a, cb)];
        let mb = logits[(b, ca)] - logits[(b, cb)];
        let t = if ma - mb > 0.0 {
            (ma / (ma - mb)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        let (pa, pb) = (points.row(a), points.row(b));
        crossings.push([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]);
    };
    for r in 0..n {
        for c in 0..n {
            if c + 1 < n {
                edge(grid.index(r, c), grid.index(r, c + 1));
            }
            if r + 1 < n {
                edge(grid.index(r, c), grid.index(r + 1, c));
            }
        }
    }
    let constant_prediction = crossings.is_empty();
    let distances = (0..points.rows())
        .map(|i| {
            let p = points.row(i);
            crossings
                .iter()
                .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(BoundaryDistances {
        distances,
        crossings,
        constant_prediction,
    })
}

/// Average ranks (1-based) with ties sharing the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dim("spearman inputs", x.len(), y.len()));
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

pub const MIN_CORRELATION_POINTS: usize = 10;

/// Spearman correlation between log volume and negative boundary distance
/// over points where both are finite.
pub fn magnification_correlation(field: &GeometryField) -> Result<f64> {
    let vol = field.channel(LOG_VOLUME)?;
    let dist = field.channel(BOUNDARY_DISTANCE)?;
    let (a, b): (Vec<f64>, Vec<f64>) = vol
        .iter()
        .zip(dist)
        .filter(|(v, d)| v.is_finite() && d.is_finite())
        .map(|(v, d)| (*v, -*d))
        .unzip();
    if a.len() < MIN_CORRELATION_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_CORRELATION_POINTS,
            found: a.len(),
        });
    }
    spearman(&a, &b)
}
