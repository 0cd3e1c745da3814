use num_traits::Zero;
use proptest::prelude::*;

use shiftorbit::birkhoff::average;
use shiftorbit::measure::{
    check_shift_balance, ingest_trajectory, ingestion_balance_bound, integral, markov_word_measure,
    MarkovSpec, Observable,
};
use shiftorbit::rational::{rat, to_f64, Rational};
use shiftorbit::symbolic::{
    classify_f64, empirical_measure, word_indices, word_rank, PeriodicPoint,
};

fn chain() -> impl Strategy<Value = MarkovSpec> {
    (2usize..=4).prop_flat_map(|s| {
        prop::collection::vec(prop::collection::vec(0i64..7, s), s).prop_map(move |mut raw| {
            for (i, row) in raw.iter_mut().enumerate() {
                row[(i + 1) % s] += 1;
            }
            let rows = raw
                .iter()
                .map(|row| {
                    let total: i64 = row.iter().sum();
                    row.iter().map(|&x| rat(x, total)).collect()
                })
                .collect();
            MarkovSpec::from_transition(rows).unwrap()
        })
    })
}

fn periodic(m: usize) -> impl Strategy<Value = PeriodicPoint> {
    prop::collection::vec(0..m, 1..30).prop_map(move |p| PeriodicPoint::new(m, p).unwrap())
}

proptest! {
    #[test]
    fn markov_measures_are_balanced(spec in chain(), n in 1usize..=4) {
        let kappa = markov_word_measure(&spec, n).unwrap();
        let balance = check_shift_balance(&kappa);
        prop_assert!(balance.balanced);
        prop_assert!(balance.max_imbalance.is_zero());
        let total: Rational = kappa.weights().iter().sum();
        prop_assert_eq!(total, rat(1, 1));
    }

    #[test]
    fn markov_marginals_are_consistent(spec in chain(), n in 2usize..=4) {
        let long = markov_word_measure(&spec, n).unwrap();
        let short = markov_word_measure(&spec, n - 1).unwrap();
        prop_assert_eq!(long.marginal(n - 1).unwrap(), short);
    }

    #[test]
    fn integral_is_linear(
        spec in chain(),
        a in -4i32..=4,
        b in -4i32..=4,
        seed in prop::collection::vec(-8i32..=8, 64),
    ) {
        let m = spec.states();
        let d = 2;
        let cells = m * m;
        let f_table: Vec<f64> = seed[..cells].iter().map(|&v| v as f64 / 8.0).collect();
        let g_table: Vec<f64> = seed[cells..2 * cells].iter().map(|&v| v as f64 / 4.0).collect();
        let f = Observable::cellwise_tight(m, d, f_table).unwrap();
        let g = Observable::cellwise_tight(m, d, g_table).unwrap();
        let h = Observable::linear_combination(a as f64, &f, b as f64, &g).unwrap();
        let kappa = markov_word_measure(&spec, 3).unwrap();
        let lhs = integral(&h, &kappa).unwrap();
        let rhs = a as f64 * integral(&f, &kappa).unwrap() + b as f64 * integral(&g, &kappa).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn integral_of_empirical_is_period_mean(
        p in periodic(3),
        table in prop::collection::vec(-16i32..=16, 9),
    ) {
        let f = Observable::cellwise_tight(3, 2, table.iter().map(|&v| v as f64 / 16.0).collect()).unwrap();
        let kappa = empirical_measure(&p, 2).unwrap();
        let by_integral = integral(&f, &kappa).unwrap();
        let by_average = average(&p, &f, p.period()).unwrap();
        prop_assert!((by_integral - by_average).abs() <= 1e-12);
    }

    #[test]
    fn empirical_measures_are_balanced(p in periodic(3), n in 1usize..=4) {
        prop_assert!(check_shift_balance(&empirical_measure(&p, n).unwrap()).balanced);
    }

    #[test]
    fn ingesting_whole_periods_recovers_the_empirical_measure(
        p in periodic(2),
        n in 1usize..=3,
        reps in 1usize..=4,
    ) {
        let mid = |j: usize| (2 * j + 1) as f64 / 4.0;
        let len = reps * p.period() + n - 1;
        let samples: Vec<f64> = (0..len).map(|i| mid(p.period_word()[i % p.period()])).collect();
        let ingested = ingest_trajectory(&samples, 2, n).unwrap();
        prop_assert_eq!(ingested, empirical_measure(&p, n).unwrap());
    }

    #[test]
    fn ingestion_defect_is_one_window(
        symbols in prop::collection::vec(0usize..3, 1..60),
        n in 1usize..=4,
    ) {
        prop_assume!(symbols.len() >= n);
        let samples: Vec<f64> = symbols.iter().map(|&j| (2 * j + 1) as f64 / 6.0).collect();
        let kappa = ingest_trajectory(&samples, 3, n).unwrap();
        let windows = (symbols.len() - n + 1) as i64;
        let imbalance = check_shift_balance(&kappa).max_imbalance;
        prop_assert!(imbalance <= rat(1, windows));
        prop_assert!(imbalance <= ingestion_balance_bound(symbols.len(), n));
    }

    #[test]
    fn ranks_round_trip(m in 2usize..=5, idx in prop::collection::vec(0usize..5, 1..6)) {
        let idx: Vec<usize> = idx.into_iter().map(|j| j % m).collect();
        prop_assert_eq!(word_indices(word_rank(&idx, m), m, idx.len()), idx);
    }

    #[test]
    fn midpoints_classify_to_their_cell(m in 1usize..=64, j in 0usize..64) {
        let j = j % m;
        let mid = (2 * j + 1) as f64 / (2 * m) as f64;
        prop_assert_eq!(classify_f64(mid, m).unwrap(), j);
        prop_assert_eq!(classify_f64(1.0, m).unwrap(), m - 1);
    }
}

#[test]
fn markov_example_integrals() {
    let spec =
        MarkovSpec::from_transition(vec![vec![rat(2, 3), rat(1, 3)], vec![rat(1, 1), rat(0, 1)]])
            .unwrap();
    let kappa = markov_word_measure(&spec, 2).unwrap();
    let first_is_zero = Observable::symbol_indicator(2, 0).unwrap();
    assert_eq!(integral(&first_is_zero, &kappa).unwrap(), 0.75);
    let ones = Observable::word_indicator(&kappa.word(3)).unwrap();
    assert_eq!(integral(&ones, &kappa).unwrap(), 0.0);
    assert_eq!(to_f64(kappa.weight(&kappa.word(0))), 0.5);
}
