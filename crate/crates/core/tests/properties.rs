use proptest::prelude::*;
use strainlim::{ConstitutiveModel, PackedOperator, Regularization, ScalarPotential, SymTensor};

fn tensor(dim: usize) -> impl Strategy<Value = SymTensor> {
    let len = dim * (dim + 1) / 2;
    (proptest::collection::vec(-1.0f64..1.0, len), -2.0f64..1.5).prop_filter_map("zero direction", move |(v, log_mag)| {
        let t = SymTensor::from_packed(dim, &v);
        let n = t.norm();
        (n > 1e-6).then(|| t.scale(10f64.powf(log_mag) / n))
    })
}

fn any_tensor() -> impl Strategy<Value = SymTensor> {
    (1usize..=3).prop_flat_map(tensor)
}

fn pair() -> impl Strategy<Value = (SymTensor, SymTensor)> {
    (1usize..=3).prop_flat_map(|d| (tensor(d), tensor(d)))
}

fn model() -> impl Strategy<Value = ConstitutiveModel> {
    prop_oneof![
        (1.0f64..4.0).prop_map(|q| ConstitutiveModel::bare(ScalarPotential::Prototype { q })),
        (1.0f64..4.0, 1u32..200).prop_map(|(q, n)| ConstitutiveModel::bare(ScalarPotential::Prototype { q })
            .with_regularization(n, Regularization::LinearTikhonov)
            .unwrap()),
        (1.2f64..4.0).prop_map(|p| ConstitutiveModel::bare(ScalarPotential::PowerLaw { p })),
        Just(ConstitutiveModel::bare(ScalarPotential::Linear)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn packed_dot_matches_full_contraction((a, b) in pair()) {
        let (ma, mb) = (a.to_matrix(), b.to_matrix());
        let full: f64 = ma.iter().zip(&mb).map(|(x, y)| x * y).sum();
        prop_assert!((a.dot(&b) - full).abs() <= 1e-12 * (1.0 + a.norm() * b.norm()));
    }

    #[test]
    fn packing_round_trips(t in any_tensor()) {
        let back = SymTensor::sym_part(t.dim(), &t.to_matrix()).unwrap();
        for (x, y) in back.packed().iter().zip(t.packed()) {
            prop_assert!((x - y).abs() <= 1e-15 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn rank_one_inverse_is_inverse(t in any_tensor(), a in 0.1f64..10.0, b in 0.1f64..10.0) {
        let op = PackedOperator::identity_plus_rank_one(a, b, &t.scale(1.0 / t.norm()));
        let inv = op.inverse().unwrap();
        let x = t.scale(0.5) + SymTensor::identity(t.dim());
        let y = inv.apply(&op.apply(&x));
        prop_assert!((y - x).norm() <= 1e-10 * x.norm());
    }

    #[test]
    fn response_is_monotone(m in model(), (a, b) in pair()) {
        let gap = (m.g_apply(&a) - m.g_apply(&b)).dot(&(a - b));
        prop_assert!(gap >= -1e-12);
    }

    #[test]
    fn inversion_round_trips(m in model(), t in any_tensor()) {
        let e = m.g_apply(&t);
        let back = m.invert(&e).unwrap();
        prop_assert!((back - t).norm() <= 1e-9 * (1.0 + t.norm()));
    }

    #[test]
    fn strain_stays_below_limit(q in 1.0f64..4.0, t in any_tensor()) {
        let m = ConstitutiveModel::bare(ScalarPotential::Prototype { q });
        prop_assert!(m.g_apply(&t).norm() < 1.0);
    }
}
