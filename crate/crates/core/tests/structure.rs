use bcs_core::lie::{self, Sign, Structure, SubspaceLabel};
use bcs_core::numerics::{matexp, ComplexMatrix, Complex64, I, ONE, ZERO};
use proptest::prelude::*;

fn matrix_strategy(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), dim * dim).prop_map(move |v| {
        let entries: Vec<Complex64> = v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        ComplexMatrix::from_row_slice(dim, &entries).unwrap()
    })
}

fn split_strategy() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=5).prop_flat_map(|n| (Just(n), 1..n))
}

fn structure_and_matrix() -> impl Strategy<Value = (Structure, ComplexMatrix)> {
    split_strategy().prop_flat_map(|(n, m)| {
        (Just(Structure::new(n, m).unwrap()), matrix_strategy(2 * n))
    })
}

/// Projection of an arbitrary matrix onto su(n,n): `½(V − Q V† Q)` minus the trace part.
fn into_algebra(s: &Structure, v: &ComplexMatrix) -> ComplexMatrix {
    let q = s.q();
    let a = (v - &(&(q * &v.dagger()) * q)).scale_real(0.5);
    let shift = a.trace() / a.dim() as f64;
    &a - &ComplexMatrix::identity(a.dim()).scale(shift)
}

proptest! {
    #[test]
    fn involutions_square_to_identity_and_commute((s, v) in structure_and_matrix()) {
        let tt = lie::theta(&lie::theta(&v));
        let gg = s.gamma(&s.gamma(&v).unwrap()).unwrap();
        prop_assert!(tt.max_abs_diff(&v) < 1e-14);
        prop_assert!(gg.max_abs_diff(&v) < 1e-14);
        let tg = lie::theta(&s.gamma(&v).unwrap());
        let gt = s.gamma(&lie::theta(&v)).unwrap();
        prop_assert!(tg.max_abs_diff(&gt) < 1e-14);
    }

    #[test]
    fn four_projections_resolve_the_identity((s, v) in structure_and_matrix()) {
        let mut sum = ComplexMatrix::zeros(v.dim());
        for label in SubspaceLabel::ALL {
            let p = s.project(&v, label).unwrap();
            let pp = s.project(&p, label).unwrap();
            prop_assert!(pp.max_abs_diff(&p) < 1e-13, "{label} not idempotent");
            for other in SubspaceLabel::ALL {
                if other != label {
                    prop_assert!(s.project(&p, other).unwrap().frobenius_norm() < 1e-13);
                }
            }
            sum = &sum + &p;
        }
        prop_assert!(sum.max_abs_diff(&v) < 1e-13);
    }

    #[test]
    fn projections_are_eigenspaces((s, v) in structure_and_matrix()) {
        for label in SubspaceLabel::ALL {
            let p = s.project(&v, label).unwrap();
            let tp = lie::theta(&p).scale_real(label.theta.value());
            let gp = s.gamma(&p).unwrap().scale_real(label.gamma.value());
            prop_assert!(tp.max_abs_diff(&p) < 1e-13);
            prop_assert!(gp.max_abs_diff(&p) < 1e-13);
        }
    }

    #[test]
    fn projection_composes_theta_and_gamma((s, v) in structure_and_matrix()) {
        for label in SubspaceLabel::ALL {
            let direct = s.project(&v, label).unwrap();
            let composed = s
                .project_gamma(&s.project_theta(&v, label.theta).unwrap(), label.gamma)
                .unwrap();
            prop_assert!(direct.max_abs_diff(&composed) < 1e-13);
        }
    }

    #[test]
    fn four_fold_split_is_orthogonal((s, v, w) in split_strategy().prop_flat_map(|(n, m)| {
        (Just(Structure::new(n, m).unwrap()), matrix_strategy(2 * n), matrix_strategy(2 * n))
    })) {
        let v = into_algebra(&s, &v);
        let w = into_algebra(&s, &w);
        for a in SubspaceLabel::ALL {
            for b in SubspaceLabel::ALL {
                if a == b {
                    continue;
                }
                let pa = s.project(&v, a).unwrap();
                let pb = s.project(&w, b).unwrap();
                let scale = pa.frobenius_norm() * pb.frobenius_norm() + 1.0;
                prop_assert!(s.scalar_product(&pa, &pb).unwrap().abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn algebra_is_closed_under_projection((s, v) in structure_and_matrix()) {
        let v = into_algebra(&s, &v);
        prop_assert!(s.is_in_algebra(&v).unwrap().member);
        for label in SubspaceLabel::ALL {
            let p = s.project(&v, label).unwrap();
            prop_assert!(s.is_in_algebra(&p).unwrap().form_residual < 1e-12);
        }
    }

    #[test]
    fn exponential_of_algebra_is_in_group((s, v) in structure_and_matrix()) {
        let v = into_algebra(&s, &v).scale_real(0.2);
        let g = matexp(&v).unwrap();
        let membership = s.is_in_group(&g).unwrap();
        prop_assert!(membership.member, "{membership:?}");
    }

    #[test]
    fn cartan_exponential_is_in_group(q in prop::collection::vec(-3.0..3.0f64, 2..=5)) {
        let n = q.len();
        let s = Structure::new(n, 1).unwrap();
        let g = lie::exp_cartan(&q);
        let from_matexp = matexp(&lie::embed_cartan(&q)).unwrap();
        prop_assert!(g.max_abs_diff(&from_matexp) < 1e-12 * g.frobenius_norm());
        prop_assert!(s.is_in_group(&g).unwrap().member);
        prop_assert!(s.is_in_algebra(&lie::embed_cartan(&q)).unwrap().member);
    }
}

#[test]
fn scalar_product_is_invariant_under_involutions() {
    let s = Structure::new(3, 1).unwrap();
    let v = into_algebra(&s, &ComplexMatrix::from_fn(6, |r, c| Complex64::new(r as f64 - 0.3 * c as f64, (r * c) as f64 * 0.1)));
    let w = into_algebra(&s, &ComplexMatrix::from_fn(6, |r, c| Complex64::new((r + 2 * c) as f64 * 0.2, 1.0 - r as f64 * 0.4)));
    let base = s.scalar_product(&v, &w).unwrap();
    let via_theta = s.scalar_product(&lie::theta(&v), &lie::theta(&w)).unwrap();
    let via_gamma = s.scalar_product(&s.gamma(&v).unwrap(), &s.gamma(&w).unwrap()).unwrap();
    assert!((base - via_theta).abs() < 1e-12);
    assert!((base - via_gamma).abs() < 1e-12);
}

#[test]
fn central_elements_are_fixed_and_orthogonal_to_m() {
    for n in 2..=6 {
        for m in 1..n {
            let s = Structure::new(n, m).unwrap();
            let plus = SubspaceLabel::new(Sign::Plus, Sign::Plus);
            for c in [s.cl(), s.cr()] {
                assert!(s.project(c, plus).unwrap().max_abs_diff(c) < 1e-15);
                assert!(s.is_in_algebra(c).unwrap().member);
                for b in s.m_basis() {
                    assert!(s.scalar_product(c, b).unwrap().abs() < 1e-15);
                }
            }
        }
    }
}

#[test]
fn central_elements_commute_with_centralizer() {
    let s = Structure::new(4, 2).unwrap();
    let a = lie::embed_cartan(&[1.3, 0.4, 0.9, 0.2]);
    for b in s.m_basis() {
        for c in [s.cl(), s.cr()] {
            let comm = &(b * c) - &(c * b);
            assert!(comm.frobenius_norm() < 1e-15);
        }
        let comm = &(b * &a) - &(&a * b);
        assert!(comm.frobenius_norm() < 1e-15);
    }
}

#[test]
fn cartan_and_m_basis_lie_in_their_subspaces() {
    let s = Structure::new(3, 2).unwrap();
    let a = lie::embed_cartan(&[0.7, 0.3, 1.1]);
    let minus_minus = SubspaceLabel::new(Sign::Minus, Sign::Minus);
    assert!(s.project(&a, minus_minus).unwrap().max_abs_diff(&a) < 1e-15);
    let plus_plus = SubspaceLabel::new(Sign::Plus, Sign::Plus);
    for b in s.m_basis() {
        assert!(s.project(b, plus_plus).unwrap().max_abs_diff(b) < 1e-15);
    }
}

#[test]
fn xi_is_theta_fixed_and_in_algebra() {
    let u = vec![Complex64::new(0.3, 0.8), Complex64::new(-1.1, 0.2), ONE];
    let x = lie::xi(&u).unwrap();
    let s = Structure::new(3, 1).unwrap();
    assert!(lie::theta(&x).max_abs_diff(&x) < 1e-15);
    assert!(s.is_in_algebra(&x).unwrap().member);
    assert!(lie::xi(&[ZERO, ZERO]).is_err());
}

#[test]
fn orbit_block_diagonal_vanishes_for_equal_moduli() {
    let u = lie::u_kappa(0.8, 4).unwrap();
    let x = lie::orbit_block(&u).unwrap();
    for j in 0..4 {
        assert!(x[(j, j)].norm() < 1e-15);
        for k in 0..4 {
            if j != k {
                assert!((x[(j, k)] - I * 1.6).norm() < 1e-15);
            }
        }
    }
}

#[test]
fn regularity_and_chamber() {
    assert!(lie::is_regular(&[1.0, 0.5, 0.7], 1));
    assert!(!lie::is_regular(&[1.0, 0.5, 0.5], 1));
    assert!(!lie::is_regular(&[1.0, 0.5, -0.5], 1));
    // different species may coincide
    assert!(lie::is_regular(&[0.5, 0.5], 1));
    assert!(!lie::is_regular(&[0.0, 0.5], 1));
    assert!(!lie::is_regular(&[1.0, 0.5], 2));

    assert!(lie::in_weyl_chamber(&[2.0, 1.0, 0.3], 2));
    assert_eq!(lie::chamber_violation(&[1.0, 2.0, 0.3], 2), Some(0));
    assert_eq!(lie::chamber_violation(&[2.0, 1.0, -0.3], 2), Some(2));
    assert!((lie::chamber_margin(&[2.0, 1.0, 0.3], 2) - 0.3).abs() < 1e-15);
}

#[test]
fn rejects_invalid_splits() {
    assert!(Structure::new(3, 0).is_err());
    assert!(Structure::new(3, 3).is_err());
    let s = Structure::new(2, 1).unwrap();
    assert!(s.project(&ComplexMatrix::identity(3), SubspaceLabel::ALL[0]).is_err());
}
