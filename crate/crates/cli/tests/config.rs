use nctc_cli::config::{rank_rate, trial_seed};
use nctc_cli::{aggregate, run_experiment, snr_slope, ExperimentConfig, ExperimentKind, Method, Row, Status};
use proptest::prelude::*;

#[test]
fn minimal_config_takes_defaults() {
    let cfg = ExperimentConfig::from_json(r#"{"kind": "phase"}"#).unwrap();
    assert_eq!((cfg.d, cfg.r, cfg.trials, cfg.t0, cfg.t_init), (100, 4, 100, 100, 5));
    let grid = cfg.grid();
    assert_eq!(grid.len(), 10);
    assert!((grid[0].p - 0.01).abs() < 1e-15 && (grid[9].p - 0.10).abs() < 1e-15);
    assert!(grid.iter().all(|g| g.l == 16 && g.r == 4));
    assert_eq!(ExperimentConfig::new(ExperimentKind::Phase), cfg);
}

#[test]
fn kinds_parse_in_kebab_case() {
    for (text, kind) in [
        ("convergence", ExperimentKind::Convergence),
        ("snr", ExperimentKind::Snr),
        ("asym-convergence", ExperimentKind::AsymConvergence),
        ("asym_convergence", ExperimentKind::AsymConvergence),
    ] {
        let cfg = ExperimentConfig::from_json(&format!(r#"{{"kind": "{text}"}}"#)).unwrap();
        assert_eq!(cfg.kind, kind);
    }
    let asym = ExperimentConfig::new(ExperimentKind::AsymConvergence);
    assert_eq!(asym.grid()[0].p, 0.05);
    assert_eq!(ExperimentConfig::new(ExperimentKind::Convergence).grid()[0].p, 0.1);
}

#[test]
fn schema_violations_are_rejected() {
    for text in [
        r#"{"kind": "phase", "trials": 0}"#,
        r#"{"kind": "phase", "p_grid": []}"#,
        r#"{"kind": "phase", "p_grid": [0.0]}"#,
        r#"{"kind": "phase", "p_grid": [1.5]}"#,
        r#"{"kind": "snr", "snr_grid": [-1.0]}"#,
        r#"{"kind": "convergence", "sigma": 0.1, "snr": 10}"#,
        r#"{"kind": "convergence", "r": 100}"#,
        r#"{"kind": "convergence", "l": 2}"#,
        r#"{"kind": "convergence", "eps_th": 1.0}"#,
        r#"{"kind": "convergence", "eta": 0}"#,
        r#"{"kind": "convergence", "typo": 1}"#,
        r#"{"kind": "bogus"}"#,
        r#"{"d": 10}"#,
    ] {
        assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
    }
}

#[test]
fn rank_grid_follows_the_rate_formula() {
    let cfg = ExperimentConfig::from_json(r#"{"kind": "rank", "r_grid": [1, 3, 5]}"#).unwrap();
    let ln = 100f64.ln();
    for g in cfg.grid() {
        assert!((g.p - g.r as f64 * ln * ln / 1000.0).abs() <= 1e-15);
        assert_eq!(g.l, g.r * g.r);
    }
    assert!((rank_rate(1, 100) - 0.0212).abs() < 1e-4);
    // Rates above one are not clamped.
    assert!(ExperimentConfig::from_json(r#"{"kind": "rank", "d": 10, "r_grid": [9]}"#).is_err());
}

#[test]
fn seeds_follow_the_offset_formula() {
    assert_eq!(trial_seed(7, 0, 0), 7);
    assert_eq!(trial_seed(7, 3, 5), 7 + 3 * 10007 + 5);
    assert_eq!(trial_seed(u64::MAX, 1, 0), 10006);
}

fn row(grid_index: usize, method: Method, status: Status, success: bool, err: Option<f64>) -> Row {
    Row {
        grid_index,
        trial: 0,
        seed: 0,
        method,
        p: 0.1,
        r: 4,
        snr: None,
        sigma: 0.0,
        status,
        success,
        rel_dist_f: err,
        rel_dist_2inf: err,
        rel_u: None,
        rel_v: None,
        rel_w: None,
        rel_tensor_f: err,
        rel_tensor_inf: err,
        final_loss: err,
    }
}

proptest! {
    #[test]
    fn aggregates_recompute_from_rows(
        flags in prop::collection::vec((0usize..3, any::<bool>(), 0u8..3, 1e-9f64..1.0), 1..40)
    ) {
        let rows: Vec<Row> = flags
            .iter()
            .map(|&(g, method, st, e)| {
                let method = if method { Method::Proposed } else { Method::Tpm };
                match st {
                    0 => row(g, method, Status::Ok, e < 0.5, Some(e)),
                    1 => row(g, method, Status::InitFailure, false, None),
                    _ => row(g, method, Status::Divergence, false, None),
                }
            })
            .collect();
        let aggs = aggregate(&rows);
        prop_assert_eq!(aggs.iter().map(|a| a.trials).sum::<usize>(), rows.len());
        for a in &aggs {
            let group: Vec<&Row> = rows.iter().filter(|r| r.grid_index == a.grid_index && r.method == a.method).collect();
            let wins = group.iter().filter(|r| r.success).count();
            prop_assert_eq!(a.successes, wins);
            prop_assert_eq!(a.success_rate, wins as f64 / group.len() as f64);
            prop_assert_eq!(a.init_failures, group.iter().filter(|r| r.status == Status::InitFailure).count());
            let errs: Vec<f64> = group.iter().filter_map(|r| r.rel_tensor_f).collect();
            match a.mean_rel_tensor_f {
                None => prop_assert!(errs.is_empty()),
                Some(m) => {
                    let lo = errs.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = errs.iter().cloned().fold(0.0, f64::max);
                    prop_assert!(lo <= m * (1.0 + 1e-12) && m <= hi * (1.0 + 1e-12));
                    let med = a.median_rel_tensor_f.unwrap();
                    let below = errs.iter().filter(|&&x| x <= med).count();
                    prop_assert!(2 * below >= errs.len());
                }
            }
        }
    }
}

#[test]
fn slope_of_exact_power_law() {
    let mut rows = Vec::new();
    for (g, snr) in [1.0f64, 10.0, 100.0].into_iter().enumerate() {
        let mut r = row(g, Method::Proposed, Status::Ok, true, Some((2.0 / snr).sqrt()));
        r.snr = Some(snr);
        rows.push(r);
    }
    let slope = snr_slope(&aggregate(&rows)).unwrap();
    assert!((slope + 1.0).abs() <= 1e-12);
}

#[test]
fn failures_stay_in_the_sweep() {
    // At p = 0.02 a 12³ tensor has only a few observed entries, so trials
    // fail; the sweep must still return every row in order.
    let cfg = ExperimentConfig::from_json(
        r#"{"kind": "phase", "d": 12, "r": 3, "p_grid": [0.02, 1.0], "trials": 4, "t0": 10}"#,
    )
    .unwrap();
    let out = run_experiment(&cfg, &[Method::Proposed], Some(2)).unwrap();
    assert_eq!(out.outcomes.len(), 8);
    for (n, o) in out.outcomes.iter().enumerate() {
        assert_eq!((o.row.grid_index, o.row.trial), (n / 4, n % 4));
        assert_eq!(o.row.seed, trial_seed(0, n / 4, n % 4));
        if o.row.status != Status::Ok {
            assert!(!o.row.success && o.row.rel_tensor_f.is_none());
        }
    }
}
