use proptest::prelude::*;

use pmlkit::feasibility::{check_feasibility, FeasibilityOptions};
use pmlkit::leakage::{corollary_epsilon, decompose, pml_of_output, worst_case_pml};
use pmlkit::mechanisms::{ldp_budget, piecewise_safe_for_budget, utility_safe};
use pmlkit::model::{induced_input_support, order_from_values, output_support, row_zero_counts, worst_case_order};
use pmlkit::optimizer::{min_epsilon, Mode};
use pmlkit::{Mechanism, Prior, UtilityOrder, UtilityValues};

fn prior_strategy(n: usize) -> impl Strategy<Value = Prior> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        Prior::new(raw.into_iter().map(|v| v / total).collect()).unwrap()
    })
}

fn order_strategy(n: usize, m: usize) -> impl Strategy<Value = UtilityOrder> {
    prop::collection::vec(Just((1..=m).collect::<Vec<usize>>()).prop_shuffle(), n)
        .prop_map(|rows| UtilityOrder::new(rows).unwrap())
}

fn mechanism_strategy(n: usize, m: usize) -> impl Strategy<Value = Mechanism> {
    prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], m), n).prop_map(move |rows| {
        let rows = rows
            .into_iter()
            .map(|mut row| {
                if row.iter().all(|&v| v == 0.0) {
                    row[0] = 1.0;
                }
                let total: f64 = row.iter().sum();
                row.into_iter().map(|v| v / total).collect()
            })
            .collect();
        Mechanism::new(rows).unwrap()
    })
}

fn scenario(max: usize) -> impl Strategy<Value = (Prior, UtilityOrder)> {
    (1..=max, 1..=max).prop_flat_map(|(n, m)| (prior_strategy(n), order_strategy(n, m)))
}

fn with_mechanism(max: usize) -> impl Strategy<Value = (Prior, Mechanism)> {
    (1..=max, 1..=max).prop_flat_map(|(n, m)| (prior_strategy(n), mechanism_strategy(n, m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pml_splits_into_support_and_residual((prior, mech) in with_mechanism(6)) {
        for j in output_support(&mech) {
            let pml = pml_of_output(&prior, &mech, j).unwrap();
            let (s, r) = decompose(&prior, &mech, j).unwrap();
            prop_assert!((s + r - pml).abs() < 1e-9);
            prop_assert!(s >= -1e-12);
            prop_assert!(r >= -1e-12);
            let support = induced_input_support(&mech, j).unwrap();
            let first = mech.get(support[0], j);
            let constant = support.iter().all(|&i| mech.get(i, j) == first);
            if constant {
                prop_assert!(r.abs() < 1e-12);
            } else {
                prop_assert!(r > 0.0);
            }
        }
    }

    #[test]
    fn pml_bounded_by_smallest_prior((prior, mech) in with_mechanism(6)) {
        let pml = worst_case_pml(&prior, &mech).unwrap();
        prop_assert!(pml >= 0.0);
        prop_assert!(pml <= -prior.p_min().ln() + 1e-12);
    }

    #[test]
    fn order_ignores_monotone_transforms(
        rows in (1usize..5, 1usize..6).prop_flat_map(|(n, m)| prop::collection::vec(prop::collection::vec(-20i32..20, m), n)),
        scale in 0.1f64..10.0,
        shift in -50.0f64..50.0,
    ) {
        let values = UtilityValues::new(rows.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect()).unwrap();
        let moved = UtilityValues::new(
            rows.iter().map(|r| r.iter().map(|&v| (v as f64 * scale + shift).exp()).collect()).collect(),
        ).unwrap();
        let order = order_from_values(&values);
        prop_assert_eq!(&order, &order_from_values(&moved));
        for (i, row) in order.as_rows().iter().enumerate() {
            let mut sorted = row.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (1..=row.len()).collect::<Vec<_>>());
            for j in 0..row.len() {
                for k in 0..row.len() {
                    if values.get(i, j) < values.get(i, k) {
                        prop_assert!(row[j] < row[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn worst_case_order_bounded_by_zero_count(
        (order, mech) in (1usize..6, 1usize..6).prop_flat_map(|(n, m)| (order_strategy(n, m), mechanism_strategy(n, m)))
    ) {
        let h = worst_case_order(&mech, &order);
        let fewest = row_zero_counts(&mech).into_iter().min().unwrap();
        prop_assert!(h <= fewest + 1);
        prop_assert!(h >= 1 && h <= order.cols());
    }

    #[test]
    fn utility_safe_meets_closed_form((prior, order) in scenario(6), pick in 0usize..6) {
        let h = pick % order.cols() + 1;
        let mech = utility_safe(&order, h).unwrap();
        prop_assert!(worst_case_order(&mech, &order) >= h);
        prop_assert!(row_zero_counts(&mech).iter().all(|&z| z == h - 1));
        let closed = corollary_epsilon(&prior, &order, h).unwrap();
        prop_assert!((worst_case_pml(&prior, &mech).unwrap() - closed).abs() < 1e-9);
    }

    #[test]
    fn zero_leakage_iff_constant_columns((prior, mech) in with_mechanism(5)) {
        let pml = worst_case_pml(&prior, &mech).unwrap();
        let independent = (0..mech.cols()).all(|j| {
            let col: Vec<f64> = mech.column(j).collect();
            col.iter().all(|&v| (v - col[0]).abs() < 1e-12)
        });
        prop_assert_eq!(pml < 1e-12, independent, "pml = {}", pml);
    }

    #[test]
    fn ldp_budget_increases_with_eps(p_min in 0.01f64..0.5, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let limit = -p_min.ln();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let lo_b = ldp_budget(lo * limit * 0.99, p_min).unwrap().value();
        let hi_b = ldp_budget(hi * limit * 0.99, p_min).unwrap().value();
        prop_assert!(hi_b > lo_b);
        prop_assert!(lo_b >= lo * limit * 0.99 - 1e-12);
    }

    #[test]
    fn piecewise_threshold_is_monotone((prior, order) in scenario(5), a in 0.0f64..4.0, b in 0.0f64..4.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (h_lo, m_lo) = piecewise_safe_for_budget(&prior, &order, lo).unwrap();
        let (h_hi, _) = piecewise_safe_for_budget(&prior, &order, hi).unwrap();
        prop_assert!(h_lo <= h_hi);
        prop_assert!(worst_case_pml(&prior, &m_lo).unwrap() <= lo + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn optimal_never_exceeds_safe((prior, order) in scenario(4), pick in 0usize..4) {
        let h = pick % order.cols() + 1;
        let safe = min_epsilon(&prior, &order, h, Mode::Safe, 1e-6).unwrap();
        let opt = min_epsilon(&prior, &order, h, Mode::Optimal, 1e-6).unwrap();
        prop_assert!(opt.min_eps <= safe.min_eps + 1e-6);
        prop_assert!(worst_case_order(&opt.witness, &order) >= h);
        prop_assert!(worst_case_pml(&prior, &opt.witness).unwrap() <= opt.min_eps + 1e-6);
    }

    #[test]
    fn feasibility_is_monotone_in_eps((prior, order) in scenario(4), pick in 0usize..4, a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let h = pick % order.cols() + 1;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let opts = FeasibilityOptions::default();
        let at_lo = check_feasibility(&prior, &order, h, lo, &opts).unwrap();
        let at_hi = check_feasibility(&prior, &order, h, hi, &opts).unwrap();
        if at_lo.is_feasible() {
            prop_assert!(at_hi.is_feasible());
        }
        if let Some(w) = at_hi.witness {
            prop_assert!(worst_case_pml(&prior, &w).unwrap() <= hi + 1e-6);
        }
    }

    #[test]
    fn pruning_does_not_change_feasibility((prior, order) in scenario(4), pick in 0usize..4, eps in 0.0f64..3.0) {
        let h = pick % order.cols() + 1;
        let pruned = check_feasibility(&prior, &order, h, eps, &FeasibilityOptions::default()).unwrap();
        let full = check_feasibility(&prior, &order, h, eps, &FeasibilityOptions { prune: false, ..Default::default() }).unwrap();
        prop_assert_eq!(pruned.is_feasible(), full.is_feasible());
    }
}
