//! Property tests for the structural invariants that hold on all inputs,
//! not just the worked examples.

use proptest::prelude::*;

use qgrass::gf::FieldSpec;
use qgrass::linalg::{MatrixFq, Subspace};
use qgrass::qseries::{qpochhammer, qrat, QRat};

fn spec_for(q: u64) -> FieldSpec {
    FieldSpec::of_order(q).unwrap()
}

fn arb_matrix(q: u64, max_dim: usize) -> impl Strategy<Value = MatrixFq> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(move |(rows, cols)| {
        proptest::collection::vec(0..q as u32, rows * cols).prop_map(move |codes| {
            MatrixFq::from_codes(&spec_for(q), rows, cols, &codes)
        })
    })
}

proptest! {
    #[test]
    fn rref_is_idempotent_and_rank_bounded(m in prop_oneof![arb_matrix(2, 6), arb_matrix(3, 5)]) {
        let r = m.rref();
        let again = r.reduced.rref();
        prop_assert_eq!(&r.reduced, &again.reduced);
        prop_assert_eq!(r.rank, again.rank);
        prop_assert!(r.rank <= m.rows().min(m.cols()));
        prop_assert_eq!(r.pivots.len(), r.rank);
    }

    #[test]
    fn modular_law_of_dimensions(
        (q, ambient, rows_a, rows_b, codes) in (prop_oneof![Just(2u64), Just(3)], 1usize..=5)
            .prop_flat_map(|(q, ambient)| {
                (1usize..=4, 1usize..=4).prop_flat_map(move |(ra, rb)| {
                    proptest::collection::vec(0..q as u32, (ra + rb) * ambient)
                        .prop_map(move |codes| (q, ambient, ra, rb, codes))
                })
            })
    ) {
        let spec = spec_for(q);
        let a = MatrixFq::from_codes(&spec, rows_a, ambient, &codes[..rows_a * ambient]);
        let b = MatrixFq::from_codes(&spec, rows_b, ambient, &codes[rows_a * ambient..]);
        let sa = Subspace::from_matrix(&a);
        let sb = Subspace::from_matrix(&b);
        let sum = sa.sum(&sb);
        let inter = sa.intersect(&sb);
        prop_assert_eq!(sa.dim() + sb.dim(), sum.dim() + inter.dim());
        prop_assert!(sum.contains(&sa));
        prop_assert!(sa.contains(&inter));
    }

    #[test]
    fn kernel_annihilates_and_has_complementary_dim(m in arb_matrix(2, 6)) {
        let k = m.kernel_basis();
        prop_assert_eq!(k.dim(), m.rows() - m.rref().rank);
        for i in 0..k.dim() {
            let row = MatrixFq::from_codes(m.spec(), 1, m.rows(), k.basis().row_codes(i));
            prop_assert!(row.mul(&m).is_zero());
        }
    }

    #[test]
    fn pochhammer_splits_multiplicatively(num in -6i64..=6, den in 1i64..=6, k in 0usize..8, j in 0usize..8) {
        // (a; q)_{k+j} = (a; q)_k * (a q^k; q)_j
        let a = QRat::new(num.into(), den.into());
        let base = QRat::new(1.into(), 2.into());
        let shifted = &a * qgrass::qseries::qpow(&base, k as i64);
        let lhs = qpochhammer(&a, &base, k + j);
        let rhs = qpochhammer(&a, &base, k) * qpochhammer(&shifted, &base, j);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn field_inverse_round_trip(q in prop_oneof![Just(2u64), Just(3), Just(4), Just(5), Just(8), Just(9)], code in 1u32..8) {
        let spec = spec_for(q);
        let code = code % (spec.order() - 1) + 1;
        let a = spec.element(code);
        let inv = a.clone().inv().unwrap();
        prop_assert_eq!(a * inv, spec.one());
    }

    #[test]
    fn orbit_counts_partition_grassmannian(n in 0usize..=5, q in prop_oneof![Just(2u64), Just(3), Just(4)]) {
        use num_bigint::BigUint;
        let total: BigUint = (0..=n).map(|k| qgrass::grassmann::orbit_count(n, k, q)).sum();
        prop_assert_eq!(total, qgrass::grassmann::grassmannian_count(2 * n, n, q));
    }

    #[test]
    fn stable_index_is_additive(
        m1 in 0usize..4, n1 in 0usize..4, m2 in 0usize..4, n2 in 0usize..4,
        seed in 0u64..1000,
    ) {
        use qgrass::semiinf::StableOperator;
        use rand::{Rng, SeedableRng};
        let spec = spec_for(2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mk = |rows: usize, cols: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            let codes: Vec<u32> = (0..rows * cols).map(|_| rng.gen_range(0..2)).collect();
            StableOperator::from_corner(MatrixFq::from_codes(&spec, rows, cols, &codes))
        };
        let a = mk(m1, n1, &mut rng);
        let b = mk(m2, n2, &mut rng);
        prop_assert_eq!(a.compose(&b).index(), a.index() + b.index());
    }

    #[test]
    fn delta_rows_are_stochastic(q in prop_oneof![Just(2u64), Just(3), Just(5), Just(7)], k in 0usize..40) {
        let (down, stay, up) = qgrass::spectral::delta_coefficients(q, k);
        prop_assert_eq!(down + stay + up, qrat(1));
    }
}
