use codedlab_core::linalg::{
    decoding_row, evaluate_matrix_poly, lagrange_interpolate, vandermonde, Matrix, Scalar,
};
use proptest::prelude::*;

fn well_separated(points: &[Scalar], min_gap: f64) -> bool {
    points
        .iter()
        .enumerate()
        .all(|(a, &p)| points[a + 1..].iter().all(|&q| (p - q).norm() >= min_gap))
}

fn point_set(max_len: usize) -> impl Strategy<Value = Vec<Scalar>> {
    prop::collection::vec((0.5f64..1.5, 0.0f64..std::f64::consts::TAU), 1..=max_len)
        .prop_map(|v| v.into_iter().map(|(r, t)| Scalar::from_polar(r, t)).collect::<Vec<_>>())
        .prop_filter("points must be well separated", |p| well_separated(p, 0.1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn square_vandermonde_decodes_first_row(points in point_set(6)) {
        let a = decoding_row(&points).unwrap();
        let v = vandermonde(&points, points.len());
        let mut residual = 0.0f64;
        for j in 0..points.len() {
            let s: Scalar = (0..points.len()).map(|i| a[i] * v.get(i, j)).sum();
            let target = if j == 0 { 1.0 } else { 0.0 };
            residual += (s - Scalar::new(target, 0.0)).norm_sqr();
        }
        prop_assert!(residual.sqrt() < 1e-10, "residual {}", residual.sqrt());
    }

    #[test]
    fn interpolation_inverts_evaluation(
        points in point_set(7),
        seed in any::<u64>(),
    ) {
        let m = points.len();
        let coeffs: Vec<Matrix> = (0..m)
            .map(|c| Matrix::from_fn_real(2, 3, |i, j| {
                let h = seed.wrapping_mul(6364136223846793005).wrapping_add((c * 31 + i * 7 + j) as u64);
                ((h >> 33) % 2001) as f64 / 1000.0 - 1.0
            }))
            .collect();
        let samples: Vec<Matrix> = points.iter().map(|&x| evaluate_matrix_poly(&coeffs, x)).collect();
        let recovered = lagrange_interpolate(&points, &samples).unwrap();
        for (got, want) in recovered.iter().zip(&coeffs) {
            prop_assert!((got - want).frobenius_norm() < 1e-8);
        }
    }
}
