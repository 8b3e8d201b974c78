//! Geometry channels of a network over a point set.

use pullback::field::{
    boundary_distance, linear_slice, ternary_plane, BoundaryDistances, GeometryField, GridSpec, Provenance,
    BOUNDARY_DISTANCE, LOG_VOLUME, PREDICTED_CLASS, RICCI,
};
use pullback::geometry::{shallow_ricci, VolumeEvaluator, VolumeMode};
use pullback::network::argmax;
use pullback::{DenseMatrix, Error, MlpNetwork};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldOptions {
    pub mode: VolumeMode,
    /// Ricci is only attempted for 2-D inputs and first-layer feature maps.
    pub ricci: bool,
}

/// `log √det g`, or `−∞` where the full-rank metric is singular.
fn log_volume_at(ev: &VolumeEvaluator, x: &[f64], mode: VolumeMode) -> pullback::Result<f64> {
    match ev.log_volume(x, mode) {
        Err(Error::Singular { .. }) => Ok(f64::NEG_INFINITY),
        other => other,
    }
}

/// Ricci scalar, `NaN` where `det g` is too small for it to be defined.
fn ricci_at(net: &MlpNetwork, x: &[f64]) -> pullback::Result<f64> {
    match shallow_ricci(net, x) {
        Err(Error::Singular { .. }) => Ok(f64::NAN),
        other => other,
    }
}

pub fn ricci_available(net: &MlpNetwork) -> bool {
    net.input_dim() == 2 && net.is_shallow()
}

/// Volume, optional Ricci and predicted class at each row of `points`.
/// Rows are evaluated in parallel; output order is row order.
pub fn point_channels(
    net: &MlpNetwork,
    points: &DenseMatrix,
    opts: FieldOptions,
) -> pullback::Result<Vec<(String, Vec<f64>)>> {
    let ev = VolumeEvaluator::new(net);
    let with_ricci = opts.ricci && ricci_available(net);
    let rows: Vec<(f64, f64)> = (0..points.rows())
        .into_par_iter()
        .map(|i| {
            let x = points.row(i);
            let v = log_volume_at(&ev, x, opts.mode)?;
            let r = if with_ricci { ricci_at(net, x)? } else { f64::NAN };
            Ok((v, r))
        })
        .collect::<pullback::Result<_>>()?;
    let mut out = vec![(LOG_VOLUME.to_string(), rows.iter().map(|r| r.0).collect())];
    if with_ricci {
        out.push((RICCI.to_string(), rows.iter().map(|r| r.1).collect()));
    }
    if net.has_readout() {
        let logits = net.logits_batch(points)?;
        out.push((
            PREDICTED_CLASS.to_string(),
            (0..points.rows()).map(|i| argmax(logits.row(i)) as f64).collect(),
        ));
    }
    Ok(out)
}

fn fill(field: &mut GeometryField, channels: Vec<(String, Vec<f64>)>) -> pullback::Result<()> {
    for (name, values) in channels {
        field.set_channel(name, values)?;
    }
    Ok(())
}

/// Grid field with boundary distances when the network classifies.
pub fn grid_field(
    net: &MlpNetwork,
    grid: &GridSpec,
    opts: FieldOptions,
) -> pullback::Result<(GeometryField, Option<BoundaryDistances>)> {
    let points = grid.points();
    let channels = point_channels(net, &points, opts)?;
    let mut field = GeometryField::new(points, Provenance::Grid(*grid));
    fill(&mut field, channels)?;
    let bd = if net.has_readout() {
        let bd = boundary_distance(net, grid)?;
        field.set_channel(BOUNDARY_DISTANCE, bd.distances.clone())?;
        Some(bd)
    } else {
        None
    };
    Ok((field, bd))
}

pub fn slice_field(
    net: &MlpNetwork,
    x1: &[f64],
    x2: &[f64],
    m: usize,
    opts: FieldOptions,
) -> pullback::Result<GeometryField> {
    let (points, t) = linear_slice(x1, x2, m)?;
    let channels = point_channels(net, &points, opts)?;
    let mut field = GeometryField::new(
        points,
        Provenance::Slice {
            x1: x1.to_vec(),
            x2: x2.to_vec(),
            t,
        },
    );
    fill(&mut field, channels)?;
    Ok(field)
}

pub fn plane_field(
    net: &MlpNetwork,
    anchors: [&[f64]; 3],
    resolution: usize,
    opts: FieldOptions,
) -> pullback::Result<GeometryField> {
    let (points, barycentric) = ternary_plane(anchors[0], anchors[1], anchors[2], resolution)?;
    let channels = point_channels(net, &points, opts)?;
    let mut field = GeometryField::new(
        points,
        Provenance::Plane {
            resolution,
            barycentric,
        },
    );
    fill(&mut field, channels)?;
    Ok(field)
}

/// Mean boundary distance over the top tenth of cells by volume, and over
/// all cells. `None` when the prediction is constant.
pub fn top_decile_distance(field: &GeometryField) -> Option<(f64, f64)> {
    let vol = field.channels.get(LOG_VOLUME)?;
    let dist = field.channels.get(BOUNDARY_DISTANCE)?;
    if dist.iter().any(|d| !d.is_finite()) {
        return None;
    }
    let mut order: Vec<usize> = (0..vol.len()).collect();
    order.sort_by(|&a, &b| vol[b].total_cmp(&vol[a]).then(a.cmp(&b)));
    let k = (vol.len() / 10).max(1);
    let top = order[..k].iter().map(|&i| dist[i]).sum::<f64>() / k as f64;
    let mean = dist.iter().sum::<f64>() / dist.len() as f64;
    Some((top, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pullback::geometry::volume_element;
    use pullback::network::InitScheme;
    use pullback::ActivationKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net(widths: &[usize]) -> MlpNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        MlpNetwork::random(widths, ActivationKind::Sigmoid, InitScheme::default(), &mut rng).unwrap()
    }

    #[test]
    fn grid_channels_match_pointwise_calls() {
        let n = net(&[2, 6, 2]);
        let grid = GridSpec::new(-1.0, 1.0, 5).unwrap();
        let opts = FieldOptions {
            mode: VolumeMode::FullRank,
            ricci: true,
        };
        let (f, bd) = grid_field(&n, &grid, opts).unwrap();
        assert!(bd.is_some());
        let names: Vec<&str> = f.channels.keys().map(String::as_str).collect();
        assert_eq!(names, [BOUNDARY_DISTANCE, LOG_VOLUME, PREDICTED_CLASS, RICCI]);
        for i in 0..f.len() {
            let x = f.points.row(i);
            assert_eq!(
                f.channels[LOG_VOLUME][i],
                volume_element(&n, x, VolumeMode::FullRank).unwrap()
            );
            assert_eq!(f.channels[RICCI][i], shallow_ricci(&n, x).unwrap());
            assert_eq!(f.channels[PREDICTED_CLASS][i], n.predict(x).unwrap() as f64);
        }
    }

    #[test]
    fn narrow_layer_is_singular_in_full_rank_mode() {
        let n = net(&[3, 2, 2]);
        let (pts, _) = linear_slice(&[0.0; 3], &[1.0; 3], 4).unwrap();
        let full = point_channels(
            &n,
            &pts,
            FieldOptions {
                mode: VolumeMode::FullRank,
                ricci: true,
            },
        )
        .unwrap();
        assert!(full[0].1.iter().all(|v| *v == f64::NEG_INFINITY));
        assert_eq!(full.len(), 2, "no Ricci channel for 3-D inputs");
        let pseudo = point_channels(
            &n,
            &pts,
            FieldOptions {
                mode: VolumeMode::Pseudo,
                ricci: false,
            },
        )
        .unwrap();
        assert!(pseudo[0].1.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn top_decile_uses_largest_volumes() {
        let g = GridSpec::new(0.0, 1.0, 4).unwrap();
        let mut f = GeometryField::new(g.points(), Provenance::Grid(g));
        f.set_channel(LOG_VOLUME, (0..16).map(f64::from).collect()).unwrap();
        f.set_channel(BOUNDARY_DISTANCE, (0..16).map(|i| f64::from(16 - i)).collect())
            .unwrap();
        let (top, mean) = top_decile_distance(&f).unwrap();
        assert_eq!(top, 1.0);
        assert_eq!(mean, 8.5);
    }
}
