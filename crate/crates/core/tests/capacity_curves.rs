use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use hiermod::capacity::{
    capacity_curves, write_capacity_csv, CapacityCurve, IntegrationSpec, StreamSelector,
};
use hiermod::constellation::{build_hierarchical_16qam, build_reference, ReferenceModulation};
use hiermod::thresholds::PUBLISHED_ALPHAS;

fn gh() -> IntegrationSpec {
    IntegrationSpec::default()
}

#[test]
fn capacities_increase_with_snr() {
    let snrs: Vec<f64> = (0..=30).map(|k| -10.0 + k as f64).collect();
    for &alpha in &PUBLISHED_ALPHAS {
        let c = build_hierarchical_16qam(alpha).unwrap();
        for s in [
            StreamSelector::Full,
            StreamSelector::Hp,
            StreamSelector::Lp,
            StreamSelector::LpGivenHp,
        ] {
            let curve = CapacityCurve::new(&c, s, &gh()).unwrap();
            let values: Vec<f64> = snrs.iter().map(|&x| curve.capacity(x)).collect();
            assert!(
                values.windows(2).all(|w| w[1] >= w[0] - 1e-12),
                "a={alpha} {s}: {values:?}"
            );
            assert!(values[values.len() - 1] <= curve.stream_bits() as f64);
        }
    }
}

#[test]
fn streams_order_with_alpha() {
    for snr in [-2.0, 4.0, 10.0] {
        let hp: Vec<f64> = PUBLISHED_ALPHAS
            .iter()
            .map(|&a| {
                let c = build_hierarchical_16qam(a).unwrap();
                CapacityCurve::new(&c, StreamSelector::Hp, &gh())
                    .unwrap()
                    .capacity(snr)
            })
            .collect();
        let lp: Vec<f64> = PUBLISHED_ALPHAS
            .iter()
            .map(|&a| {
                let c = build_hierarchical_16qam(a).unwrap();
                CapacityCurve::new(&c, StreamSelector::Lp, &gh())
                    .unwrap()
                    .capacity(snr)
            })
            .collect();
        // PUBLISHED_ALPHAS is descending.
        assert!(hp.windows(2).all(|w| w[0] > w[1]), "{snr}: {hp:?}");
        assert!(lp.windows(2).all(|w| w[0] < w[1]), "{snr}: {lp:?}");
    }
}

#[test]
fn gauss_hermite_agrees_with_monte_carlo() {
    let mc = IntegrationSpec::MonteCarlo {
        samples: 1_000_000,
        seed: 7,
    };
    let c = build_hierarchical_16qam(2.0).unwrap();
    for (s, snr) in [
        (StreamSelector::Full, 6.0),
        (StreamSelector::Hp, 0.0),
        (StreamSelector::Lp, 9.0),
    ] {
        let a = CapacityCurve::new(&c, s, &gh()).unwrap().capacity(snr);
        let b = CapacityCurve::new(&c, s, &mc).unwrap().capacity(snr);
        assert_abs_diff_eq!(a, b, epsilon = 3e-3);
    }
}

#[test]
fn more_nodes_change_little() {
    let c = build_hierarchical_16qam(0.8).unwrap();
    let fine = IntegrationSpec::GaussHermite { nodes_per_axis: 64 };
    for snr in [-5.0, 3.0, 12.0] {
        let a = CapacityCurve::new(&c, StreamSelector::Full, &gh())
            .unwrap()
            .capacity(snr);
        let b = CapacityCurve::new(&c, StreamSelector::Full, &fine)
            .unwrap()
            .capacity(snr);
        assert_abs_diff_eq!(a, b, epsilon = 1e-4);
    }
}

#[test]
fn curve_dump_has_one_row_per_point() {
    let q = build_reference(ReferenceModulation::Qpsk);
    let rows = capacity_curves(&q, &[StreamSelector::Full], &[0.0, 5.0], &gh()).unwrap();
    assert_eq!(rows.len(), 2);
    let mut buf = Vec::new();
    write_capacity_csv(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("selector,alpha,es_n0_db,capacity\n"));
    assert_eq!(text.lines().count(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inverse_undoes_normalized(snr in -6.0f64..12.0, k in 0usize..5, hp in any::<bool>()) {
        let c = build_hierarchical_16qam(PUBLISHED_ALPHAS[k]).unwrap();
        let s = if hp { StreamSelector::Hp } else { StreamSelector::Lp };
        let curve = CapacityCurve::new(&c, s, &gh()).unwrap();
        let target = curve.normalized(snr);
        prop_assume!(target > 0.02 && target < 0.98);
        let back = curve.inverse(target).unwrap();
        prop_assert!((back - snr).abs() <= 0.02, "{} -> {} -> {}", snr, target, back);
    }
}
