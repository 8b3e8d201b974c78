use proptest::prelude::*;
use pullback::data::{make_sinusoid, sinusoid_label};
use pullback::field::{average_ranks, linear_slice, spearman, ternary_plane};
use pullback::geometry::{shallow_ricci_2d, shallow_volume_minor, volume_element, VolumeMode};
use pullback::linalg::{determinant, sym_eig};
use pullback::{ActivationKind, DenseMatrix, MlpNetwork};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn activation() -> impl Strategy<Value = ActivationKind> {
    prop_oneof![
        Just(ActivationKind::Erf),
        Just(ActivationKind::Tanh),
        Just(ActivationKind::Sigmoid),
    ]
}

/// Shallow 2-D nets with 3..8 units and a point.
fn shallow_2d() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, ActivationKind, [f64; 2])> {
    (3usize..=8).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.5f64..1.5, 2 * n),
            prop::collection::vec(-1.0f64..1.0, n),
            activation(),
            [-1.0f64..1.0, -1.0f64..1.0],
        )
    })
}

fn net(w: &[f64], b: &[f64], act: ActivationKind) -> MlpNetwork {
    MlpNetwork::shallow(DenseMatrix::new(b.len(), 2, w.to_vec()).unwrap(), b.to_vec(), act).unwrap()
}

proptest! {
    #[test]
    fn spearman_ignores_monotone_transforms(xs in prop::collection::vec(-5.0f64..5.0, 3..40), ys_seed in prop::collection::vec(-5.0f64..5.0, 40)) {
        let ys = &ys_seed[..xs.len()];
        let r = spearman(&xs, ys).unwrap();
        let fx: Vec<f64> = xs.iter().map(|v| v.exp()).collect();
        let fy: Vec<f64> = ys.iter().map(|v| v * v * v + 2.0 * v).collect();
        prop_assert!((spearman(&fx, &fy).unwrap() - r).abs() < 1e-12);
        prop_assert!((spearman(ys, &xs).unwrap() - r).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        let neg: Vec<f64> = ys.iter().map(|v| -v).collect();
        prop_assert!((spearman(&xs, &neg).unwrap() + r).abs() < 1e-12);
    }

    #[test]
    fn ranks_sum_like_a_permutation(xs in prop::collection::vec(prop::sample::select(vec![0.0, 1.0, 2.5, -3.0, 7.0]), 1..30)) {
        let r = average_ranks(&xs);
        let n = xs.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                prop_assert_eq!(xs[i] < xs[j], r[i] < r[j]);
            }
        }
    }

    #[test]
    fn sinusoid_is_reproducible_and_labelled(seed in any::<u64>()) {
        let a = make_sinusoid(seed);
        let b = make_sinusoid(seed);
        prop_assert_eq!(a.inputs.data(), b.inputs.data());
        for i in 0..a.len() {
            let p = a.point(i);
            prop_assert!(p.iter().all(|v| (-1.0..=1.0).contains(v)));
            prop_assert_eq!(a.labels[i], sinusoid_label(p[0], p[1]));
        }
    }

    #[test]
    fn slices_hit_their_endpoints(x1 in prop::collection::vec(-3.0f64..3.0, 4), x2 in prop::collection::vec(-3.0f64..3.0, 4), m in 2usize..30) {
        let (pts, ts) = linear_slice(&x1, &x2, m).unwrap();
        prop_assert_eq!(pts.row(0), &x1[..]);
        prop_assert_eq!(pts.row(m - 1), &x2[..]);
        prop_assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn ternary_lattice_is_barycentric(r in 2usize..15) {
        let (x1, x2, x3) = ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        let (pts, bary) = ternary_plane(&x1, &x2, &x3, r).unwrap();
        prop_assert_eq!(pts.rows(), r * (r + 1) / 2);
        for i in 0..bary.rows() {
            let t = bary.row(i);
            prop_assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(t.iter().all(|v| *v >= 0.0));
            prop_assert!((pts[(i, 0)] - t[1]).abs() < 1e-12 && (pts[(i, 1)] - t[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn geometry_is_rotation_invariant((w, b, act, x) in shallow_2d(), angle in 0.0f64..6.3) {
        let (s, c) = angle.sin_cos();
        let n = b.len();
        // W ↦ W Qᵀ together with x ↦ Q x leaves every preactivation unchanged.
        let rotated: Vec<f64> = (0..n)
            .flat_map(|i| [c * w[2 * i] - s * w[2 * i + 1], s * w[2 * i] + c * w[2 * i + 1]])
            .collect();
        let qx = [c * x[0] - s * x[1], s * x[0] + c * x[1]];
        let (a, r) = (net(&w, &b, act), net(&rotated, &b, act));
        prop_assert!(close(shallow_volume_minor(&a, &x).unwrap(), shallow_volume_minor(&r, &qx).unwrap(), 1e-10));
        prop_assert!(close(shallow_ricci_2d(&a, &x).unwrap(), shallow_ricci_2d(&r, &qx).unwrap(), 1e-8));
    }

    #[test]
    fn unit_order_does_not_matter((w, b, act, x) in shallow_2d(), shift in 1usize..8) {
        let n = b.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let pw: Vec<f64> = perm.iter().flat_map(|&i| [w[2 * i], w[2 * i + 1]]).collect();
        let pb: Vec<f64> = perm.iter().map(|&i| b[i]).collect();
        let (a, p) = (net(&w, &b, act), net(&pw, &pb, act));
        prop_assert!(close(shallow_volume_minor(&a, &x).unwrap(), shallow_volume_minor(&p, &x).unwrap(), 1e-12));
        prop_assert!(close(shallow_ricci_2d(&a, &x).unwrap(), shallow_ricci_2d(&p, &x).unwrap(), 1e-10));
    }

    #[test]
    fn log_volume_matches_the_minor_sum((w, b, act, x) in shallow_2d()) {
        let a = net(&w, &b, act);
        let minor = shallow_volume_minor(&a, &x).unwrap();
        let log = volume_element(&a, &x, VolumeMode::FullRank).unwrap();
        prop_assert!((log - 0.5 * minor.ln()).abs() < 1e-9);
    }

    #[test]
    fn checkpoints_round_trip((w, b, act, x) in shallow_2d()) {
        let a = net(&w, &b, act);
        let back = MlpNetwork::from_bytes(&a.to_bytes()).unwrap();
        prop_assert_eq!(a.to_bytes(), back.to_bytes());
        prop_assert_eq!(a.feature_map(&x).unwrap(), back.feature_map(&x).unwrap());
    }

    #[test]
    fn eigendecomposition_reconstructs(entries in prop::collection::vec(-2.0f64..2.0, 16)) {
        let a = DenseMatrix::new(4, 4, entries).unwrap();
        let s = a.gram();
        let e = sym_eig(&s).unwrap();
        let back = e.vectors.matmul(&DenseMatrix::diagonal(&e.values)).unwrap().matmul_t(&e.vectors).unwrap();
        prop_assert!(back.sub(&s).unwrap().max_abs() <= 1e-10 * s.max_abs().max(1.0));
        prop_assert!(e.values.windows(2).all(|v| v[0] >= v[1]));
        let prod: f64 = e.values.iter().product();
        prop_assert!((determinant(&s).unwrap() - prod).abs() <= 1e-9 * s.max_abs().powi(4).max(1.0));
    }
}
