//! Wedge basis, Killing form, inertia operator, and SO(n) utilities.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use suslov::liealg::{
    commutator, embed, killing_inner, reorthonormalize, split, wedge, InertiaSpec, Rotation,
    SkewMatrix,
};
use suslov::{sampling, Error};

type S = SkewMatrix<f64>;

fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

#[test]
fn wedge_matrix_entries() {
    let w: S = wedge(1, 2, 3).unwrap();
    let m = w.as_matrix();
    let expect = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert_eq!(m, &expect);
}

#[test]
fn wedge_is_antisymmetric_in_its_indices() {
    let a: S = wedge(2, 1, 3).unwrap();
    let b: S = wedge(1, 2, 3).unwrap();
    assert_eq!(a.as_matrix(), &(-b.as_matrix().clone()));
}

#[test]
fn wedge_acts_as_rank_two_rotation_generator() {
    // (Eᵢ∧Eⱼ)Eⱼ = Eᵢ and (Eᵢ∧Eⱼ)Eᵢ = −Eⱼ.
    let w: S = wedge(1, 3, 3).unwrap();
    let e3 = dv(&[0.0, 0.0, 1.0]);
    let e1 = dv(&[1.0, 0.0, 0.0]);
    assert_eq!(w.as_matrix() * &e3, e1);
    assert_eq!(w.as_matrix() * &e1, -dv(&[0.0, 0.0, 1.0]));
}

#[test]
fn wedge_rejects_bad_indices() {
    for (i, j, n) in [(0, 2, 3), (1, 1, 3), (1, 4, 3), (4, 2, 3)] {
        let e = wedge::<f64>(i, j, n).unwrap_err();
        assert!(matches!(e, Error::BadWedgeIndices { .. }), "{e}");
    }
}

#[test]
fn wedge_basis_is_orthonormal_under_half_trace_inner_product() {
    for n in 3..=6 {
        let mut basis = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                basis.push(wedge::<f64>(i, j, n).unwrap());
            }
        }
        for (a, x) in basis.iter().enumerate() {
            for (b, y) in basis.iter().enumerate() {
                let inner = killing_inner(x, y).unwrap();
                let expect = if a == b { 1.0 } else { 0.0 };
                // Entries are 0/±1, so the products are exact.
                assert_eq!(inner, expect, "n={n} a={a} b={b}");
            }
        }
    }
}

#[test]
fn killing_inner_rejects_dimension_mismatch() {
    let x: S = wedge(1, 2, 3).unwrap();
    let y: S = wedge(1, 2, 4).unwrap();
    assert!(matches!(
        killing_inner(&x, &y).unwrap_err(),
        Error::DimensionMismatch { .. }
    ));
}

#[test]
fn inertia_on_wedge_matches_raw_matrix_formula() {
    // For diagonal I, the operator X ↦ IX + XI has Eᵢ∧Eⱼ as an eigenvector
    // with eigenvalue Iᵢ + Iⱼ.  Cross-check against the raw formula.
    let inertia = InertiaSpec::<f64>::physical(&[1.0, 2.0, 3.0]).unwrap();
    let x: S = wedge(1, 3, 3).unwrap();
    let ix = inertia.apply(&x);
    let d = DMatrix::from_diagonal(&dv(&[1.0, 2.0, 3.0]));
    let raw = &d * x.as_matrix() + x.as_matrix() * &d;
    assert_eq!(ix.as_matrix(), &raw);
    assert_eq!(killing_inner(&ix, &x).unwrap(), 4.0); // I₁ + I₃
}

#[test]
fn inertia_physical_acts_on_general_skews_like_ix_plus_xi() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 3..=5 {
        let inertia = sampling::random_physical_inertia::<f64>(n, &mut rng);
        let moments = inertia.moments().unwrap().clone();
        let x = sampling::random_skew::<f64>(n, 1.0, &mut rng);
        let d = DMatrix::from_diagonal(&moments);
        let raw = &d * x.as_matrix() + x.as_matrix() * &d;
        let diff = (inertia.apply(&x).as_matrix() - raw).amax();
        assert!(diff < 1e-14, "n={n} diff={diff}");
    }
}

#[test]
fn split_embed_roundtrip_is_bitwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 3..=6 {
        for _ in 0..10 {
            let x = sampling::random_skew::<f64>(n, 2.0, &mut rng);
            let (h, d) = split(&x);
            // The subalgebra part stays embedded (n×n, zero last row/column).
            assert_eq!(h.dim(), n);
            assert_eq!(d.len(), n - 1);
            for k in 0..n {
                assert_eq!(h.coeff(k, n - 1), 0.0);
                assert_eq!(h.coeff(n - 1, k), 0.0);
            }
            let back = embed(&h, &d).unwrap();
            assert_eq!(back.as_matrix(), x.as_matrix());
        }
    }
}

#[test]
fn embed_rejects_mismatched_lengths() {
    // The generator of rotations in the 1-2 plane has a zero last row and
    // column, so it is a valid embedded so(2) element inside so(3).
    let h: S = wedge(1, 2, 3).unwrap();
    assert!(embed(&h, &dv(&[1.0, 2.0])).is_ok());
    assert!(matches!(
        embed(&h, &dv(&[1.0, 2.0, 3.0])).unwrap_err(),
        Error::DimensionMismatch { .. }
    ));
}

#[test]
fn commutator_of_element_with_itself_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = sampling::random_skew::<f64>(4, 1.0, &mut rng);
    let c = commutator(&x, &x).unwrap();
    assert_eq!(c.norm(), 0.0);
}

#[test]
fn commutator_of_constraint_generators_closes_into_the_subalgebra() {
    // [Eᵢ∧Eₙ, Eⱼ∧Eₙ] = −Eᵢ∧Eⱼ, which lies in so(n−1).
    let a: S = wedge(1, 3, 3).unwrap();
    let b: S = wedge(2, 3, 3).unwrap();
    let c = commutator(&a, &b).unwrap();
    let expect: S = wedge(1, 2, 3).unwrap();
    assert_eq!(c.as_matrix(), &(-expect.as_matrix().clone()));

    for n in [4usize, 5] {
        for i in 1..n {
            for j in 1..n {
                if i == j {
                    continue;
                }
                let x: S = wedge(i, n, n).unwrap();
                let y: S = wedge(j, n, n).unwrap();
                let (_, d_part) = split(&commutator(&x, &y).unwrap());
                assert_eq!(d_part.amax(), 0.0, "n={n} i={i} j={j}");
            }
        }
    }
}

#[test]
fn killing_form_is_ad_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let x = sampling::random_skew::<f64>(4, 1.0, &mut rng);
        let y = sampling::random_skew::<f64>(4, 1.0, &mut rng);
        let z = sampling::random_skew::<f64>(4, 1.0, &mut rng);
        let lhs = killing_inner(&commutator(&x, &y).unwrap(), &z).unwrap();
        let rhs = killing_inner(&y, &commutator(&x, &z).unwrap()).unwrap();
        assert!((lhs + rhs).abs() < 1e-12, "lhs={lhs} rhs={rhs}");
    }
}

#[test]
fn inertia_operator_is_self_adjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in 3..=5 {
        let phys = sampling::random_physical_inertia::<f64>(n, &mut rng);
        // A generic SPD block pair for the same n.
        let m = n - 1;
        let dim_h = m * (m - 1) / 2;
        let mk = DMatrix::<f64>::from_fn(dim_h, dim_h, |_, _| sampling::gaussian(&mut rng));
        let k = &mk * mk.transpose() + DMatrix::identity(dim_h, dim_h) * 0.5;
        let mj = DMatrix::<f64>::from_fn(m, m, |_, _| sampling::gaussian(&mut rng));
        let j = &mj * mj.transpose() + DMatrix::identity(m, m) * 0.5;
        let block = InertiaSpec::block(j, k).unwrap();
        for inertia in [&phys, &block] {
            for _ in 0..10 {
                let x = sampling::random_skew::<f64>(n, 1.0, &mut rng);
                let y = sampling::random_skew::<f64>(n, 1.0, &mut rng);
                let lhs = killing_inner(&inertia.apply(&x), &y).unwrap();
                let rhs = killing_inner(&x, &inertia.apply(&y)).unwrap();
                assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
            }
        }
    }
}

#[test]
fn inertia_preserves_the_splitting() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 5;
    let inertia = sampling::random_physical_inertia::<f64>(n, &mut rng);
    let moments = inertia.moments().unwrap().clone();
    // Constraint directions are eigenvectors with eigenvalue Iᵢ + Iₙ.
    for i in 1..n {
        let x: S = wedge(i, n, n).unwrap();
        let got = inertia.apply(&x);
        let scaled = x.scaled(moments[i - 1] + moments[n - 1]);
        assert_eq!(got.as_matrix(), scaled.as_matrix());
    }
    // so(n−1) maps into so(n−1): the 𝔇-part of the image is zero.
    let (h, _) = split(&sampling::random_skew::<f64>(n, 1.0, &mut rng));
    let lifted = embed(&h, &DVector::zeros(n - 1)).unwrap();
    let (_, d_part) = split(&inertia.apply(&lifted));
    assert_eq!(d_part.amax(), 0.0);
}

#[test]
fn inertia_metric_is_the_diagonal_of_moment_sums() {
    let inertia = InertiaSpec::<f64>::physical(&[1.0, 2.0, 3.0]).unwrap();
    let expect = DMatrix::from_diagonal(&dv(&[4.0, 5.0]));
    assert_eq!(inertia.metric(), &expect);
    let w = dv(&[2.0, -1.0]);
    assert_eq!(inertia.apply_metric(&w), dv(&[8.0, -5.0]));
    let back = inertia.apply_inverse_metric(&inertia.apply_metric(&w));
    assert!((back - w).amax() < 1e-15);
}

#[test]
fn inertia_constructors_validate_their_input() {
    assert!(matches!(
        InertiaSpec::<f64>::physical(&[1.0, 2.0]).unwrap_err(),
        Error::DimensionTooSmall { .. }
    ));
    assert!(matches!(
        InertiaSpec::<f64>::physical(&[1.0, -2.0, 3.0]).unwrap_err(),
        Error::InertiaNotPositive { .. }
    ));
    // Non-symmetric J.
    let j = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    let k = DMatrix::from_row_slice(1, 1, &[1.0]);
    assert!(matches!(
        InertiaSpec::block(j, k).unwrap_err(),
        Error::InertiaNotPositive { .. }
    ));
    // Indefinite J.
    let j = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let k = DMatrix::from_row_slice(1, 1, &[1.0]);
    assert!(matches!(
        InertiaSpec::block(j, k).unwrap_err(),
        Error::InertiaNotPositive { .. }
    ));
    // K of the wrong size for J (J 2×2 ⇒ n−1 = 2 ⇒ K must be 1×1).
    let j = DMatrix::<f64>::identity(2, 2);
    let k = DMatrix::<f64>::identity(2, 2);
    assert!(matches!(
        InertiaSpec::block(j, k).unwrap_err(),
        Error::DimensionMismatch { .. }
    ));
}

#[test]
fn wedge_coordinates_follow_lexicographic_pair_order() {
    let x = SkewMatrix::<f64>::from_upper_fn(3, |i, j| match (i, j) {
        (0, 1) => 2.0,
        (0, 2) => 3.0,
        (1, 2) => 5.0,
        _ => unreachable!(),
    });
    assert_eq!(x.wedge_coordinates(), dv(&[2.0, 3.0, 5.0]));
    // And the coordinates reproduce the element in the wedge basis.
    let rebuilt = wedge::<f64>(1, 2, 3).unwrap().scaled(2.0).as_matrix()
        + wedge::<f64>(1, 3, 3).unwrap().scaled(3.0).as_matrix()
        + wedge::<f64>(2, 3, 3).unwrap().scaled(5.0).as_matrix();
    assert_eq!(x.as_matrix(), &rebuilt);
}

#[test]
fn from_matrix_antisymmetrizes_noisy_input() {
    let noisy = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, -1.0 + 1e-3, -0.5]);
    let x = SkewMatrix::from_matrix(noisy);
    let m = x.as_matrix();
    assert_eq!(m[(0, 0)], 0.0);
    assert_eq!(m[(0, 1)], -m[(1, 0)]);
    assert!((m[(0, 1)] - (1.0 + (1.0 - 1e-3)) / 2.0_f64).abs() < 1e-15);
}

#[test]
fn reorthonormalize_repairs_a_scaled_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let r = sampling::random_rotation::<f64>(4, &mut rng);
    let scaled = r.as_matrix() * 1.001;
    let repaired = reorthonormalize(&scaled).unwrap();
    assert!(repaired.orthogonality_defect() < 1e-12);
    assert!((repaired.as_matrix() - r.as_matrix()).amax() < 1e-2);
    // Idempotence (up to roundoff).
    let twice = reorthonormalize(repaired.as_matrix()).unwrap();
    assert!((twice.as_matrix() - repaired.as_matrix()).amax() < 1e-14);
}

#[test]
fn reorthonormalize_rejects_garbage_and_reflections() {
    let far = DMatrix::from_diagonal(&dv(&[2.0, 1.0, 1.0]));
    assert!(matches!(
        reorthonormalize(&far).unwrap_err(),
        Error::NotOrthogonal { .. }
    ));
    let reflection = DMatrix::from_diagonal(&dv(&[1.0, 1.0, -1.0]));
    assert!(matches!(
        reorthonormalize(&reflection).unwrap_err(),
        Error::NotARotation { .. }
    ));
}

#[test]
fn rotation_from_matrix_validates() {
    let id = Rotation::<f64>::from_matrix(DMatrix::identity(3, 3)).unwrap();
    assert_eq!(id.as_matrix(), &DMatrix::identity(3, 3));
    let near = DMatrix::from_row_slice(2, 2, &[1.0, 1e-3, 0.0, 1.0]);
    assert!(matches!(
        Rotation::from_matrix(near).unwrap_err(),
        Error::NotOrthogonal { .. }
    ));
    let reflection = DMatrix::from_diagonal(&dv(&[1.0, -1.0]));
    assert!(matches!(
        Rotation::from_matrix(reflection).unwrap_err(),
        Error::NotARotation { .. }
    ));
}

#[test]
fn poisson_vector_and_body_axis_read_last_row_and_column() {
    let m = DMatrix::from_row_slice(
        3,
        3,
        &[0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0],
    );
    let r = Rotation::from_matrix(m).unwrap();
    assert_eq!(r.poisson_vector(), dv(&[1.0, 0.0, 0.0]));
    assert_eq!(r.body_axis(), dv(&[-1.0, 0.0, 0.0]));
}

#[test]
fn with_poisson_vector_builds_a_rotation_with_prescribed_last_row() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for n in [2usize, 3, 5] {
        for _ in 0..20 {
            let q = sampling::random_unit_vector::<f64>(n, &mut rng);
            let r = Rotation::with_poisson_vector(&q).unwrap();
            assert!(r.orthogonality_defect() < 1e-12);
            assert!((r.poisson_vector() - &q).amax() < 1e-14);
            assert!(r.as_matrix().determinant() > 0.0);
        }
    }
    // The two poles.
    let north = Rotation::with_poisson_vector(&dv(&[0.0, 0.0, 1.0])).unwrap();
    assert_eq!(north.as_matrix(), &DMatrix::identity(3, 3));
    let south = Rotation::with_poisson_vector(&dv(&[0.0, 0.0, -1.0])).unwrap();
    assert!((south.poisson_vector() - dv(&[0.0, 0.0, -1.0])).amax() < 1e-15);
    assert!(south.orthogonality_defect() < 1e-12);
    // Normalization of a non-unit input.
    let r = Rotation::with_poisson_vector(&dv(&[3.0, 0.0, 4.0])).unwrap();
    assert!((r.poisson_vector() - dv(&[0.6, 0.0, 0.8])).amax() < 1e-15);
    // Degenerate inputs.
    assert!(matches!(
        Rotation::<f64>::with_poisson_vector(&DVector::zeros(3)).unwrap_err(),
        Error::ZeroVector { .. }
    ));
    assert!(matches!(
        Rotation::with_poisson_vector(&dv(&[1.0])).unwrap_err(),
        Error::DimensionTooSmall { .. }
    ));
}

#[test]
fn reprojected_restores_group_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let r = sampling::random_rotation::<f64>(3, &mut rng);
    let drifted = Rotation::from_matrix(r.as_matrix() + DMatrix::repeat(3, 3, 1e-11)).unwrap();
    let fixed = drifted.reprojected().unwrap();
    assert!(fixed.orthogonality_defect() <= drifted.orthogonality_defect());
    assert!(fixed.orthogonality_defect() < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_split_embed_roundtrip(seed in 0u64..1_000_000, n in 3usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sampling::random_skew::<f64>(n, 1.5, &mut rng);
        let (h, d) = split(&x);
        let back = embed(&h, &d).unwrap();
        prop_assert_eq!(back.as_matrix(), x.as_matrix());
    }

    #[test]
    fn prop_poisson_vector_roundtrip(seed in 0u64..1_000_000, n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = sampling::random_unit_vector::<f64>(n, &mut rng);
        let r = Rotation::with_poisson_vector(&q).unwrap();
        prop_assert!(r.orthogonality_defect() < 1e-12);
        prop_assert!((r.poisson_vector() - &q).amax() < 1e-13);
    }
}
