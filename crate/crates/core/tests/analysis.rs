mod common;

use multicoal_core::analysis::{classify_cdi, descent_profile, flow_profile, omega, phi_flow, SpeedForm, Verdict};
use multicoal_core::builtin;
use multicoal_core::measures::Atom;
use multicoal_core::MergerMeasureSet;

fn rk4<F: Fn(f64) -> f64>(f: F, y0: f64, t: f64, steps: usize) -> f64 {
    let h = t / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

#[test]
fn builtin_verdicts() {
    let want = [Verdict::ComesDown, Verdict::StaysInfinite, Verdict::ComesDown, Verdict::ComesDown];
    for (name, verdict) in builtin::NAMES.iter().zip(want) {
        let m = builtin::measure_set(name).unwrap();
        assert_eq!(classify_cdi(&m).overall, verdict, "{name}");
    }
}

#[test]
fn finite_start_matches_direct_integration() {
    let atoms = vec![Atom::new(0.8, vec![0.4, 0.1])];
    let m = common::set(2, vec![vec![0.0, 0.5], vec![0.3, 0.0]], vec![1.0, 0.5], vec![atoms, vec![]]);
    let times = [0.1, 0.5, 2.0];
    let got = descent_profile(&m, &times, 30.0, SpeedForm::Exact).unwrap();
    for (&t, &w) in times.iter().zip(&got) {
        let want = rk4(|y| -omega(&m, y).unwrap(), 30.0, t, 4_000);
        assert!((w - want).abs() < 1e-5 * want, "t={t}: {w} vs {want}");
    }
    assert!(got.windows(2).all(|p| p[1] <= p[0]));
}

#[test]
fn infinite_start_for_kingman() {
    let m = MergerMeasureSet::kingman(1.0).unwrap();
    let times = [0.05, 0.5, 3.0];
    let asym = descent_profile(&m, &times, f64::INFINITY, SpeedForm::Asymptotic).unwrap();
    let exact = descent_profile(&m, &times, f64::INFINITY, SpeedForm::Exact).unwrap();
    for (k, &t) in times.iter().enumerate() {
        assert!((asym[k] - 2.0 / t).abs() < 1e-6 * (2.0 / t));
        let want = 1.0 / (1.0 - (-t / 2.0_f64).exp());
        assert!((exact[k] - want).abs() < 1e-6 * want);
    }
}

#[test]
fn infinite_start_needs_coming_down() {
    let m = builtin::measure_set("seed-bank").unwrap();
    assert!(descent_profile(&m, &[1.0], f64::INFINITY, SpeedForm::Exact).is_err());
}

#[test]
fn flow_conserves_total_under_colour_changes_only() {
    let m = common::set(2, vec![vec![0.0, 1.0], vec![2.0, 0.0]], vec![0.0; 2], vec![vec![], vec![]]);
    let path = flow_profile(&m, &[0.0, 1.0, 10.0], &[9.0, 0.0]).unwrap();
    for x in &path {
        assert!((x[0] + x[1] - 9.0).abs() < 1e-8);
    }
    // Stationary split is 2:1.
    assert!((path[2][0] - 6.0).abs() < 1e-6);
    assert!(phi_flow(&m, &[6.0, 3.0]).unwrap().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn flow_total_never_exceeds_descent() {
    let m = builtin::measure_set("multitype-kingman").unwrap();
    let times = [0.2, 1.0, 4.0];
    let path = flow_profile(&m, &times, &[10.0, 10.0]).unwrap();
    let w = descent_profile(&m, &times, 20.0, SpeedForm::Exact).unwrap();
    for (x, w) in path.iter().zip(&w) {
        assert!(x.iter().sum::<f64>() <= w + 1e-6);
    }
}

#[test]
fn discretized_family_needs_a_finite_start() {
    let m = builtin::measure_set("limic-sturm").unwrap();
    assert_eq!(classify_cdi(&m).overall, Verdict::ComesDown);
    let start = std::time::Instant::now();
    assert!(descent_profile(&m, &[0.5], f64::INFINITY, SpeedForm::Exact).is_err());
    assert!(start.elapsed().as_secs_f64() < 1.0);
    let w = descent_profile(&m, &[0.5, 2.0], 200.0, SpeedForm::Exact).unwrap();
    assert!(w[0] < 200.0 && w[1] < w[0]);
}
