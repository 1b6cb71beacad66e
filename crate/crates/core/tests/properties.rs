use crps_core::verification::{
    cvm_from_probabilities, diebold_mariano, index_from_pvalues, permuted_score_series, score_series,
    shuffle_permutation, discrepancy, Forecast,
};
use crps_core::{crps, Distribution, ForecastObsRecord};
use proptest::prelude::*;

fn any_distribution() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (-5.0..5.0f64, 0.1..5.0f64).prop_map(|(m, s)| Distribution::normal(m, s).unwrap()),
        (0.1..5.0f64).prop_map(|r| Distribution::exponential(r).unwrap()),
        (0.3..8.0f64, 0.2..5.0f64).prop_map(|(k, r)| Distribution::gamma(k, r).unwrap()),
        (0.2..4.0f64, -0.4..0.9f64).prop_map(|(s, g)| Distribution::gp(s, g).unwrap()),
    ]
}

fn records(dist: &Distribution, ys: &[f64]) -> Vec<ForecastObsRecord> {
    ys.iter()
        .enumerate()
        .map(|(t, &y)| ForecastObsRecord::new(t as u64, Forecast::Dist(dist.clone()), y, None).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn crps_is_non_negative(d in any_distribution(), y in -20.0..20.0f64) {
        prop_assert!(crps(&d, y).unwrap() >= 0.0);
    }

    #[test]
    fn quantile_inverts_cdf(d in any_distribution(), p in 0.001..0.999f64) {
        let x = d.quantile(p).unwrap();
        prop_assert!((d.cdf(x) - p).abs() < 1e-8);
    }

    #[test]
    fn dm_is_antisymmetric(a in prop::collection::vec(0.0..10.0f64, 30..80), seed in 0u64..1000) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v + ((i as u64 * 7 + seed) % 5) as f64 * 0.3 - 0.6).collect();
        let ab = diebold_mariano(&a, &b).unwrap();
        let ba = diebold_mariano(&b, &a).unwrap();
        if ab.stat.is_finite() {
            prop_assert!((ab.stat + ba.stat).abs() < 1e-9 * (1.0 + ab.stat.abs()));
            prop_assert!((ab.p_two_sided - ba.p_two_sided).abs() < 1e-12);
        }
    }

    #[test]
    fn cvm_has_lower_bound(p in prop::collection::vec(0.0..1.0f64, 1..200)) {
        let m = p.len() as f64;
        prop_assert!(cvm_from_probabilities(&p).unwrap() >= 1.0 / (12.0 * m) - 1e-12);
    }

    #[test]
    fn index_never_exceeds_one(pf in 0.0..1.0f64, pc in 0.0..1.0f64) {
        prop_assert!(index_from_pvalues(pf, pc) <= 1.0);
    }

    #[test]
    fn permutation_equivariance(
        d in any_distribution(),
        ys in prop::collection::vec(0.0..10.0f64, 2..40),
        seed in 0u64..1000,
    ) {
        let recs = records(&d, &ys);
        let perm = shuffle_permutation(ys.len(), seed);
        let permuted: Vec<_> = perm.iter().map(|&i| recs[i].clone()).collect();
        let a = score_series(&permuted).unwrap().values;
        let base = score_series(&recs).unwrap().values;
        let b: Vec<f64> = perm.iter().map(|&i| base[i]).collect();
        prop_assert_eq!(a, b);
        // The shuffled pairing only reorders which observation meets which forecast.
        let shuffled = permuted_score_series(&recs, &perm).unwrap();
        prop_assert_eq!(shuffled.len(), ys.len());
    }

    #[test]
    fn discrepancy_is_mean_difference(
        f in any_distribution(),
        g in any_distribution(),
        ys in prop::collection::vec(0.0..10.0f64, 5..60),
    ) {
        let sf = score_series(&records(&f, &ys)).unwrap();
        let sg = score_series(&records(&g, &ys)).unwrap();
        let d = discrepancy(&sf, &sg).unwrap();
        prop_assert!((d - (sg.mean() - sf.mean())).abs() < 1e-9 * (1.0 + sg.mean().abs()));
    }
}
