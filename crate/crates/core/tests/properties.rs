use chrono::{Duration, NaiveDate};
use proptest::prelude::*;

use riskcast::evaluation::{aggregate_periods, period_metrics};
use riskcast::strategy::binarize;
use riskcast::validation::{make_folds, PredictionLog, PredictionRecord};

fn outcomes_and_decisions() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, usize)> {
    (1usize..8, 0usize..60).prop_flat_map(|(h, extra)| {
        let n = h + extra;
        (prop::collection::vec(0u8..2, n), prop::collection::vec(0u8..2, n), Just(h))
    })
}

proptest! {
    #[test]
    fn raising_the_threshold_never_adds_flags(
        p in prop::collection::vec(0.0f64..=1.0, 0..40),
        a in 0.0f64..=1.0,
        b in 0.0f64..=1.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let low = binarize(&p, lo).unwrap();
        let high = binarize(&p, hi).unwrap();
        prop_assert!(low.iter().zip(&high).all(|(l, h)| h <= l));
    }

    #[test]
    fn periods_are_maxima_of_their_days((y, d, h) in outcomes_and_decisions()) {
        let agg = aggregate_periods(&y, &d, h).unwrap();
        prop_assert_eq!(agg.periods.len(), y.len() / h);
        prop_assert_eq!(agg.dropped_days, y.len() % h);
        for p in &agg.periods {
            let days = p.first_day..p.first_day + h;
            prop_assert_eq!(p.risk_true, *y[days.clone()].iter().max().unwrap());
            prop_assert_eq!(p.risk_pred, *d[days.clone()].iter().max().unwrap());
            prop_assert_eq!(p.bias, p.predicted_accident_days as i64 - p.actual_accident_days as i64);
        }
    }

    #[test]
    fn fewer_days_than_a_period_is_an_error(h in 1usize..10, short in 0usize..10) {
        let n = short % h;
        prop_assert!(aggregate_periods(&vec![0; n], &vec![0; n], h).is_err());
    }

    #[test]
    fn metric_identities_hold((y, d, h) in outcomes_and_decisions()) {
        let m = period_metrics(&y, &d, h).unwrap();
        prop_assert_eq!(m.tp + m.fp + m.fn_ + m.tn, y.len() / h);
        if let (Some(re), Some(sp)) = (m.recall, m.specificity) {
            prop_assert_eq!(m.balanced_accuracy, Some((re + sp) / 2.0));
        } else {
            prop_assert_eq!(m.balanced_accuracy, None);
        }
        if let (Some(re), Some(f1)) = (m.recall, m.f1) {
            let pr = m.precision;
            if pr + re > 0.0 {
                prop_assert!(f1 >= pr.min(re) - 1e-12 && f1 <= pr.max(re) + 1e-12);
            } else {
                prop_assert_eq!(f1, 0.0);
            }
        }
    }

    #[test]
    fn folds_tile_the_span(n in 2usize..400, m in 1usize..200, h in 1usize..30) {
        prop_assume!(m < n);
        match make_folds(n, m, h) {
            Ok(folds) => {
                prop_assert_eq!(folds.len(), (n - m) / h);
                for (k, f) in folds.iter().enumerate() {
                    prop_assert_eq!(f.train.clone(), 0..m + k * h);
                    prop_assert_eq!(f.validation.clone(), m + k * h..m + (k + 1) * h);
                    prop_assert!(f.validation.end <= n);
                }
            }
            Err(_) => prop_assert!((n - m) / h == 0),
        }
    }

    #[test]
    fn prediction_logs_round_trip(p in prop::collection::vec(0.0f64..=1.0, 0..30), seed in 0u8..2) {
        let dir = tempfile::tempdir().unwrap();
        let start = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap();
        let mut log = PredictionLog::new();
        for (i, &p) in p.iter().enumerate() {
            log.push(PredictionRecord {
                date: start + Duration::days(i as i64),
                y_true: (i as u8 + seed) % 2,
                p_hat: p,
                horizon: i % 7 + 1,
                retrain_id: i / 7,
                model_id: "m".into(),
            })
            .unwrap();
        }
        let path = dir.path().join("log.csv");
        log.write_csv(&path).unwrap();
        prop_assert_eq!(PredictionLog::read_csv(&path).unwrap(), log);
    }
}
