//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with the measured quantities. Run with
//! `cargo test --release -p altmin-core --test acceptance -- --nocapture`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use altmin_core::experiments::{
    angled_state, exp_expectation_check, exp_recovery, exp_step_map, ExperimentConfig,
};
use altmin_core::horacle::{
    h_mc, h_real_closed_form, h_real_mc, h_second_fd, verify_growth_condition, HTable,
};
use altmin_core::measurement::{observe, random_unit, sample_sensing};
use altmin_core::ops::{altmin_step, project_amplitude, project_range, MeasurementSpaceVector};
use altmin_core::{metrics, RngStream};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {id:2} {name:<28} {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn stream(id: u64) -> RngStream {
    RngStream::with_stream(2024, id)
}

#[test]
fn criterion_01_h_moment_identities() {
    let samples = 1_000_000;
    let (est_hi, se_hi) = h_mc(FRAC_PI_2, samples, stream(1)).unwrap();
    let ok_hi = (est_hi - 1.0).abs() <= 4.0 * se_hi;
    let (est_lo, se_lo) = h_mc(0.0, samples, stream(2)).unwrap();
    let ok_lo = (est_lo - FRAC_PI_4).abs() <= 4.0 * se_lo;
    let mut ok_real = true;
    let mut real_detail = String::new();
    for (i, theta) in [0.0, FRAC_PI_4, FRAC_PI_2].into_iter().enumerate() {
        let (est, se) = h_real_mc(theta, samples, stream(3 + i as u64)).unwrap();
        let expect = h_real_closed_form(theta);
        let ok = (est - expect).abs() <= 4.0 * se;
        ok_real &= ok;
        real_detail.push_str(&format!(" real({theta:.3})={est:.5}~{expect:.5}"));
    }
    let pass = ok_hi && ok_lo && ok_real;
    report(
        1,
        "h moment identities",
        pass,
        &format!("h(pi/2)={est_hi:.5}+-{se_hi:.1e} h(0)={est_lo:.5}+-{se_lo:.1e}{real_detail}"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_second_derivative_anchors() {
    let samples = 100_000_000;
    let step = 0.02;
    let at_zero = h_second_fd(0.0, samples, step, stream(10)).unwrap();
    let at_half_pi = h_second_fd(FRAC_PI_2, samples, step, stream(10)).unwrap();
    let ok_zero = (at_zero - PI / 8.0).abs() <= 0.05;
    let ok_half_pi = (at_half_pi - (-1.0)).abs() <= 0.05;
    let pass = ok_zero && ok_half_pi;
    report(
        2,
        "second-derivative anchors",
        pass,
        &format!(
            "h''(0)={at_zero:.4} (target pi/8={:.4}) h''(pi/2)={at_half_pi:.4} (target -1)",
            PI / 8.0
        ),
    );
    assert!(pass, "h''(0) = {at_zero}, h''(pi/2) = {at_half_pi}");
}

#[test]
fn criterion_03_growth_condition() {
    let table = HTable::build(64, 1_000_000, stream(20)).unwrap();
    let r = verify_growth_condition(&table).unwrap();
    report(
        3,
        "growth condition",
        r.pass,
        &format!(
            "min h' lcb={:.4} min ratio={:.4} min h={:.4} interval=({:.3},{:.3})",
            r.h_prime_lcb_min, r.min_slope_ratio, r.min_h, r.lipschitz_interval.0, r.lipschitz_interval.1
        ),
    );
    assert!(r.pass);
}

#[test]
fn criterion_04_expectation_formula() {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = 404;
    let r = exp_expectation_check(&cfg).unwrap();
    let max_dev_x = r
        .rows
        .iter()
        .map(|row| (row.coef_x - row.expected_coef_x).abs())
        .fold(0.0f64, f64::max);
    let max_dev_d = r
        .rows
        .iter()
        .map(|row| (row.coef_d - row.expected_coef_d).abs())
        .fold(0.0f64, f64::max);
    // Coefficients must be independent of eta.
    let mut eta_ok = true;
    for row in &r.rows {
        let mate = r
            .rows
            .iter()
            .find(|o| o.theta == row.theta && o.eta != row.eta)
            .expect("eta sweep has at least two values");
        let tol = 5.0 * (row.coef_x_se.powi(2) + mate.coef_x_se.powi(2)).sqrt();
        eta_ok &= (row.coef_x - mate.coef_x).abs() <= tol;
    }
    let pass = r.pass && eta_ok;
    report(
        4,
        "expectation formula",
        pass,
        &format!("max|coef_x-h|={max_dev_x:.2e} max|coef_d-h'|={max_dev_d:.2e} eta-independent={eta_ok}"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_one_step_angle_map() {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = 505;
    cfg.theta_grid.push(FRAC_PI_2);
    let r = exp_step_map(&cfg).unwrap();
    let max_dev = r
        .rows
        .iter()
        .map(|row| (row.q50 - row.predicted).abs())
        .fold(0.0f64, f64::max);
    let end = r.rows.last().unwrap();
    let fixed_point_ok = (end.q10 - FRAC_PI_2).abs() <= 1e-9
        && (end.q90 - FRAC_PI_2).abs() <= 1e-9
        && (end.predicted - FRAC_PI_2).abs() <= 1e-12;
    // Median curve nondecreasing on the grid, one inversion allowed.
    let inversions = r.rows[..r.rows.len() - 1]
        .windows(2)
        .filter(|w| w[1].q50 < w[0].q50)
        .count();
    let pass = r.pass && fixed_point_ok && inversions <= 1;
    report(
        5,
        "one-step angle map",
        pass,
        &format!("max|q50-pred|={max_dev:.4} (tol 0.05) pi/2 fixed point={fixed_point_ok} inversions={inversions}"),
    );
    assert!(pass, "max deviation {max_dev}, fixed point {fixed_point_ok}");
}

#[test]
fn criterion_06_spread_scaling() {
    let mut base = ExperimentConfig::default();
    base.seed = 606;
    base.theta_grid = vec![0.8];
    let spread = |m: usize| {
        let mut cfg = base.clone();
        cfg.m = m;
        let r = exp_step_map(&cfg).unwrap();
        r.rows[0].q90 - r.rows[0].q10
    };
    let s1 = spread(4096);
    let s2 = spread(16384);
    let ratio = s2 / s1;
    let pass = (0.35..=0.7).contains(&ratio);
    report(
        6,
        "spread scaling in m",
        pass,
        &format!("spread(4096)={s1:.4} spread(16384)={s2:.4} ratio={ratio:.3} (target [0.35, 0.7])"),
    );
    assert!(pass, "ratio {ratio}");
}

#[test]
fn criterion_07_fixed_points_and_equivalence() {
    // T(z) = z.
    let a = sample_sensing(64, 8, stream(70)).unwrap();
    let z = random_unit(8, stream(71)).unwrap();
    let y = observe(&a, &z).unwrap();
    let t = altmin_step(&a, &y, &z).unwrap();
    let fixed_dev = (t.as_vector() - z.as_vector()).norm();
    let fixed_ok = fixed_dev <= 1e-10;
    // Coefficient route vs projection route on 100 random instances.
    let mut max_rel = 0.0f64;
    for i in 0..100 {
        let a = sample_sensing(64, 8, stream(7200 + i)).unwrap();
        let z = random_unit(8, stream(7300 + i)).unwrap();
        let y = observe(&a, &z).unwrap();
        let x = random_unit(8, stream(7400 + i)).unwrap();
        let at = a.apply(altmin_step(&a, &y, &x).unwrap().as_vector()).unwrap();
        let w = MeasurementSpaceVector::new(a.apply(x.as_vector()).unwrap());
        let oracle = project_range(&a, &project_amplitude(&y, &w).unwrap()).unwrap();
        let rel = (at - oracle.as_vector()).norm() / oracle.as_vector().norm();
        max_rel = max_rel.max(rel);
    }
    let routes_ok = max_rel <= 1e-8;
    let pass = fixed_ok && routes_ok;
    report(
        7,
        "fixed point + route equiv",
        pass,
        &format!("|T(z)-z|={fixed_dev:.2e} max route deviation={max_rel:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_end_to_end_recovery() {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = 808;
    cfg.recovery_ns = vec![32];
    cfg.recovery_ratios = vec![128]; // m = 4096
    cfg.recovery_bs = vec![4];
    cfg.recovery_trials = 50;
    cfg.residual_tol = 1e-8;
    cfg.max_iters = 500;
    cfg.success_tol = 1e-6;
    let identity = exp_recovery(&cfg).unwrap();
    let rate_id = identity.rows[0].success_rate;

    // Same cell with Sigma = diag(4, 1, ..., 1).
    let mut cov_cfg = cfg.clone();
    cov_cfg.cov_diag = vec![4.0];
    cov_cfg.recovery_min_rate = 0.9;
    let cov = exp_recovery(&cov_cfg).unwrap();
    let rate_cov = cov.rows[0].success_rate;

    let pass = rate_id >= 0.95 && rate_cov >= 0.9;
    report(
        8,
        "end-to-end recovery",
        pass,
        &format!(
            "identity rate={rate_id:.2} (>=0.95) cov rate={rate_cov:.2} (>=0.90) median iters={}/{}",
            identity.rows[0].median_iters, cov.rows[0].median_iters
        ),
    );
    assert!(pass, "identity {rate_id}, covariance {rate_cov}");
}

#[test]
fn criterion_09_high_probability_improvement() {
    let n = 32;
    let m = 4096;
    let theta0 = 0.5;
    let trials = 500;
    let mut improved = 0usize;
    for t in 0..trials {
        let s = stream(9000 + t as u64);
        let z = random_unit(n, s.child(0)).unwrap();
        let (x0, _) = angled_state(&z, theta0, 0.0, s.child(1)).unwrap();
        let a = sample_sensing(m, n, s.child(2)).unwrap();
        let y = observe(&a, &z).unwrap();
        let x1 = altmin_step(&a, &y, &x0).unwrap();
        if metrics::theta(&x1, &z).unwrap() > theta0 {
            improved += 1;
        }
    }
    let fraction = improved as f64 / trials as f64;
    let pass = fraction >= 0.9;
    report(
        9,
        "high-prob improvement",
        pass,
        &format!("fraction theta(T(x)) > theta(x) = {fraction:.3} over {trials} trials (>=0.9)"),
    );
    assert!(pass, "fraction {fraction}");
}

#[test]
fn criterion_10_determinism() {
    use altmin_core::experiments::{run_experiment, Experiment};

    let base_dir = std::env::temp_dir().join(format!("altmin-acceptance-{}", std::process::id()));
    let mut small = ExperimentConfig::default();
    small.seed = 1010;
    small.n = 8;
    small.m = 128;
    small.trials = 10;
    small.theta_grid = vec![0.5, 1.0];
    small.table_points = 17;
    small.table_samples = 10_000;
    small.exp_samples = 10_000;
    small.recovery_ns = vec![8];
    small.recovery_ratios = vec![32];
    small.recovery_bs = vec![2];
    small.recovery_trials = 5;
    small.max_iters = 200;
    small.recovery_min_rate = 0.0;
    small.step_map_tol = 10.0;

    let csv_for = |exp: Experiment| -> (String, String) {
        let run = |tag: &str| -> String {
            let mut cfg = small.clone();
            cfg.out_dir = base_dir.join(format!("{}-{tag}", exp.name()));
            run_experiment(exp, &cfg).unwrap();
            let file = match exp {
                Experiment::StepMap => "step_map.csv",
                Experiment::HCurve => "h_table.csv",
                Experiment::Expectation => "expectation.csv",
                Experiment::Recovery => "recovery.csv",
            };
            std::fs::read_to_string(cfg.out_dir.join(file)).unwrap()
        };
        (run("a"), run("b"))
    };

    let mut pass = true;
    let mut detail = String::new();
    for exp in [Experiment::StepMap, Experiment::HCurve, Experiment::Expectation, Experiment::Recovery] {
        let (a, b) = csv_for(exp);
        // Wall-time column is the one quantity allowed to differ.
        let strip = |s: &str| -> String {
            if exp == Experiment::Recovery {
                s.lines()
                    .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
                    .collect::<Vec<_>>()
                    .join("\n")
            } else {
                s.to_string()
            }
        };
        let identical = strip(&a) == strip(&b);
        pass &= identical;
        detail.push_str(&format!(" {}={}", exp.name(), if identical { "ok" } else { "DIFFERS" }));
    }
    std::fs::remove_dir_all(&base_dir).ok();
    report(10, "rerun determinism", pass, detail.trim());
    assert!(pass);
}
