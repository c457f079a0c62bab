mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use shorcert::cert::{binomial_pvalue, certify, CertifyParams, Verdict};
use shorcert::circuit::{build_qpe_circuit, Backend};
use shorcert::numtheory::{classical_success_fraction, recover_order, extract_factors, OrderFindingInstance};
use shorcert::shor::{
    replicate_experiment, shor_factor, simulate_and_certify, Branch, DistributionCache, ExperimentConfig,
    PaperExperiment, Source,
};
use shorcert::sim::{execute, ideal_qpe_distribution, total_variation, Histogram};

use common::ExactTails;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tail_matches_exact_sum(n in 1u64..300, num in 1u64..1024, k_frac in 0.0f64..=1.0) {
        let b = num as f64 / 1024.0;
        let k = ((n as f64) * k_frac).round() as u64;
        let want = ExactTails::new(n, b).tail(k);
        prop_assume!(want >= 1e-300);
        let got = binomial_pvalue(k, n, b).unwrap().value();
        prop_assert!(((got - want) / want).abs() < 1e-12, "k={} n={} b={}: {:e} vs {:e}", k, n, b, got, want);
    }

    #[test]
    fn engine_matches_oracle_on_small_instances(
        (n, a) in prop_oneof![Just((15u64, 2u64)), Just((15, 4)), Just((15, 7)), Just((21, 5)), Just((21, 8)), Just((33, 10))],
        t in 1u32..=7,
    ) {
        let inst = OrderFindingInstance::new(n, a).unwrap();
        let circuit = build_qpe_circuit(&inst, t, Backend::Permutation).unwrap();
        let state = execute(&circuit, 0).unwrap();
        let phase: Vec<usize> = (0..t as usize).collect();
        let tv = total_variation(
            &state.marginal(&phase).unwrap(),
            &ideal_qpe_distribution(inst.order(), t).unwrap(),
        );
        prop_assert!(tv <= 1e-9, "TV {}", tv);
    }

    #[test]
    fn reported_factors_multiply_back(seed in 0u64..10_000, n in prop_oneof![Just(15u64), Just(21), Just(33), Just(35), Just(39)]) {
        let cfg = ExperimentConfig { seed, ..ExperimentConfig::new(n) };
        let res = shor_factor(&cfg, &mut DistributionCache::new()).unwrap();
        if let Some((f, g)) = res.factors {
            prop_assert_eq!(f * g, n);
            prop_assert!(1 < f && f <= g && g < n);
        }
        prop_assert!(res.attempts.len() as u32 <= cfg.attempt_cap);
    }
}

#[test]
fn per_attempt_success_beats_the_floor() {
    let mut cache = DistributionCache::new();
    for n in [15u64, 21, 35] {
        let nu = classical_success_fraction(n).unwrap();
        let floor = 4.0 / (PI * PI) * nu;
        let mut runs = 0u32;
        let mut factored = 0u32;
        for seed in 0..400 {
            let cfg = ExperimentConfig {
                seed,
                ..ExperimentConfig::new(n)
            };
            let res = shor_factor(&cfg, &mut cache).unwrap();
            runs += res.total_runs;
            factored += res
                .attempts
                .iter()
                .filter(|a| a.branch == Branch::Factored)
                .count() as u32;
        }
        let rate = f64::from(factored) / f64::from(runs);
        let sigma = (floor * (1.0 - floor) / f64::from(runs)).sqrt();
        assert!(rate >= floor - 3.0 * sigma, "N={n}: rate {rate:.3} < floor {floor:.3}");
    }
}

#[test]
fn decoding_examples() {
    // 384 / 512 = 3/4
    assert_eq!(recover_order(384, 512, 7, 15, 15, 8).unwrap(), Some(4));
    assert_eq!(recover_order(0, 512, 7, 15, 15, 8).unwrap(), None);
    // 341 / 2048 has 1/6 among its convergents
    assert_eq!(recover_order(341, 2048, 2, 21, 21, 8).unwrap(), Some(6));
    assert_eq!(extract_factors(7, 4, 15).unwrap(), Some((3, 5)));
}

#[test]
fn replication_from_recorded_counts() {
    let verdicts: Vec<Verdict> = PaperExperiment::ALL
        .iter()
        .map(|&e| replicate_experiment(e, Source::PaperCounts, 0).unwrap().verdict)
        .collect();
    assert_eq!(verdicts, [Verdict::Pass, Verdict::Pass, Verdict::Fail, Verdict::Pass]);
}

#[test]
fn simulated_replications_pass() {
    for e in PaperExperiment::ALL {
        let rep = replicate_experiment(e, Source::Simulate, 11).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{e}");
        assert!(rep.p_hat > 0.9, "{e}: {}", rep.p_hat);
    }
}

#[test]
fn simulated_histograms_are_reproducible() {
    let cfg = PaperExperiment::N21.config(5);
    let (a, rep_a) = simulate_and_certify(&cfg).unwrap();
    let (b, rep_b) = simulate_and_certify(&cfg).unwrap();
    assert_eq!(a.histogram, b.histogram);
    assert_eq!(rep_a, rep_b);
    assert_eq!(rep_a.seed, Some(5));
}

#[test]
fn histogram_csv_round_trip_certifies_identically() {
    let (run, rep) = simulate_and_certify(&PaperExperiment::N35A8.config(3)).unwrap();
    let mut buf = Vec::new();
    run.histogram
        .write_csv(&mut buf, &[("seed".into(), "3".into())])
        .unwrap();
    let back = Histogram::read_csv(buf.as_slice()).unwrap();
    let params = CertifyParams::new(35, Some(8), 4);
    let again = certify(&back, &params).unwrap();
    assert_eq!(again.hits, rep.hits);
    assert_eq!(again.log10_p_value, rep.log10_p_value);
}
