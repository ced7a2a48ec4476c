use bulkq_core::{
    build_tpm, embedded_p, limiting_pi, ModelType, PostingDistribution, SystemParams,
};
use proptest::prelude::*;

/// A stable instance: `ρ = λa/v < 1`.
fn instance() -> impl Strategy<Value = SystemParams> {
    (
        1u32..12,
        0u32..20,
        0.05f64..0.95,
        0usize..3,
        1u32..5,
        0.3f64..3.0,
    )
        .prop_map(|(v, extra, rho, kind, m, mean)| {
            let posting = match kind {
                0 => PostingDistribution::exponential(mean).unwrap(),
                1 => PostingDistribution::deterministic(mean).unwrap(),
                _ => PostingDistribution::erlang(m, mean).unwrap(),
            };
            SystemParams::new(v, v + extra, rho * v as f64 / mean, posting).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn embedded_support_and_normalization(p in instance()) {
        let e = embedded_p(&p, 1e-12).unwrap();
        let s = p.reserved() as usize;
        prop_assert_eq!(e.p.len(), p.w() as usize + 1);
        prop_assert!(e.p[s + 1..].iter().all(|x| *x == 0.0));
        prop_assert!(e.p.iter().all(|x| *x >= 0.0));
        prop_assert!((e.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(e.norm_constant >= 1.0);
    }

    #[test]
    fn limiting_normalization_and_flip(p in instance()) {
        let e = embedded_p(&p, 1e-12).unwrap();
        let lim = limiting_pi(&p, &e).unwrap();
        let w = p.w() as usize;
        prop_assert!((lim.pi.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for k in 0..=w {
            prop_assert_eq!(lim.pi1[k].to_bits(), lim.pi[w - k].to_bits());
        }
        prop_assert_eq!(lim.valid, lim.pi.iter().all(|x| *x >= -1e-9));
    }

    #[test]
    fn tpm_rows_are_stochastic(p in instance()) {
        let m = build_tpm(&p).unwrap();
        prop_assert_eq!(m.size(), p.w() as usize + 1);
        for (i, s) in m.row_sums().iter().enumerate() {
            prop_assert!((s - 1.0).abs() < 1e-12, "row {i} sums to {s}");
        }
        prop_assert!((0..m.size()).all(|i| m.row(i).iter().all(|x| *x >= 0.0)));
    }

    #[test]
    fn model_type_follows_capacity(p in instance()) {
        let want = if p.w() >= 2 * p.v() { ModelType::Type1 } else { ModelType::Type2 };
        prop_assert_eq!(p.model_type(), want);
    }
}

#[test]
fn boundary_shapes() {
    let d = PostingDistribution::exponential(1.0).unwrap();
    for v in 1..8 {
        for w in [v, 2 * v, 2 * v - 1, 2 * v + 1] {
            let p = SystemParams::new(v, w, 0.5 * v as f64, d).unwrap();
            let e = embedded_p(&p, 1e-12).unwrap();
            let lim = limiting_pi(&p, &e).unwrap();
            assert!(
                (lim.pi.iter().sum::<f64>() - 1.0).abs() < 1e-10,
                "v={v} w={w}"
            );
            if w == v {
                assert_eq!(e.p[0], 1.0);
            }
        }
    }
}
