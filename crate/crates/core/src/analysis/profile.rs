use super::cdi::{classify_cdi, Verdict};
use super::omega::omega_with;
use super::speeds::{phi_unchecked, SpeedForm};
use crate::measures::MergerMeasureSet;
use crate::numerics::{integrate, integrate_to_infinity, solve_ode, OdeOptions};
use crate::{Error, Result};

const MAX_ITER: usize = 300;

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument("times must be finite and non-negative".into()));
    }
    Ok(())
}

/// `w_n(t)` at each of `times`: the solution of `t = ∫_{w}^{n} dq / Ω(q)`,
/// equivalently of `w' = -Ω(w)`, `w(0) = n`. `n0 = ∞` uses the improper
/// integral and requires the measure set to come down from infinity.
pub fn descent_profile(m: &MergerMeasureSet, times: &[f64], n0: f64, form: SpeedForm) -> Result<Vec<f64>> {
    check_times(times)?;
    if !(n0 > 0.0) {
        return Err(Error::InvalidArgument(format!("starting mass must be positive, got {n0}")));
    }
    let infinite = n0.is_infinite();
    if infinite {
        if classify_cdi(m).overall != Verdict::ComesDown {
            return Err(Error::DivergentIntegral("∫ dq/Ω(q) to infinity is not known to converge for this measure set".into()));
        }
        // Ω is evaluated on the atoms. Without a Kingman part in every type
        // it grows linearly, even when the density behind a discretized
        // family comes down.
        if let Some(i) = (0..m.dim()).find(|&i| m.rho_pair(i) == 0.0) {
            return Err(Error::DivergentIntegral(format!(
                "type {} has no Kingman part, so Ω of the discretized measure grows linearly; start from a finite mass",
                i + 1
            )));
        }
    }
    let omega = |q: f64| omega_with(m, q, form).expect("finite non-negative argument");
    if !infinite && omega(n0) <= 0.0 {
        return Ok(vec![n0; times.len()]);
    }

    // {Ω ≤ 0} = [0, q*] by convexity and Ω(0) = 0.
    let mut hi = if infinite { 1.0 } else { n0 };
    while omega(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if omega(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q_star = lo;

    let travel = |w: f64| -> Result<f64> {
        let f = |q: f64| 1.0 / omega(q);
        let r = if infinite { integrate_to_infinity(f, w, 0.0, 1e-13) } else { integrate(f, w, n0, 0.0, 1e-13) };
        if r.error > 1e-8 * r.value.abs() {
            return Err(Error::DivergentIntegral(format!("∫ dq/Ω(q) from {w} did not converge")));
        }
        Ok(r.value)
    };

    times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(n0);
            }
            let (mut lo, mut hi) = (q_star, n0);
            if infinite {
                hi = (2.0 * q_star).max(1.0);
                while travel(hi)? > t {
                    lo = hi;
                    hi *= 2.0;
                }
            }
            let mut w = hi;
            for _ in 0..MAX_ITER {
                let g = travel(w)? - t;
                if g.abs() <= 1e-14 * t {
                    return Ok(w);
                }
                if g > 0.0 {
                    lo = w;
                } else {
                    hi = w;
                }
                if hi - lo <= 1e-15 * hi {
                    return Ok(w);
                }
                let newton = w + g * omega(w);
                w = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            }
            Ok(w)
        })
        .collect()
}

/// The mean-field path `v' = Φ(v)`, `v(0) = x0`, at each of `times`.
pub fn flow_profile(m: &MergerMeasureSet, times: &[f64], x0: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_times(times)?;
    if x0.len() != m.dim() || x0.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("x0 must be a finite non-negative vector of dimension d".into()));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let sorted: Vec<f64> = order.iter().map(|&k| times[k]).collect();
    let mut clamped = vec![0.0; x0.len()];
    let states = solve_ode(
        |_, y, dy| {
            for (c, v) in clamped.iter_mut().zip(y) {
                *c = v.max(0.0);
            }
            phi_unchecked(m, &clamped, dy)
        },
        0.0,
        x0,
        &sorted,
        OdeOptions::default(),
    )?;
    let mut out = vec![Vec::new(); times.len()];
    for (state, &k) in states.into_iter().zip(&order) {
        out[k] = state;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::FiniteMeasureOnCube;

    #[test]
    fn kingman_from_infinity() {
        let m = MergerMeasureSet::kingman(1.0).unwrap();
        let times = [0.1, 0.5, 1.0, 2.0];
        let w = descent_profile(&m, &times, f64::INFINITY, SpeedForm::Asymptotic).unwrap();
        for (t, w) in times.iter().zip(&w) {
            assert!((w - 2.0 / t).abs() < 1e-6, "t = {t}: {w}");
        }
        let w = descent_profile(&m, &times, f64::INFINITY, SpeedForm::Exact).unwrap();
        for (t, w) in times.iter().zip(&w) {
            let exact = 1.0 / (1.0 - (-t / 2.0).exp());
            assert!((w - exact).abs() < 1e-6, "t = {t}: {w} vs {exact}");
        }
    }

    #[test]
    fn finite_start_is_monotone_in_n() {
        let m = MergerMeasureSet::kingman(1.0).unwrap();
        let times = [0.25, 1.0];
        let inf = descent_profile(&m, &times, f64::INFINITY, SpeedForm::Exact).unwrap();
        let mut prev = vec![0.0; 2];
        for n in [2.0, 5.0, 10.0, 20.0, 100.0] {
            let w = descent_profile(&m, &times, n, SpeedForm::Exact).unwrap();
            for k in 0..2 {
                assert!(w[k] >= prev[k] && w[k] <= inf[k] + 1e-9);
                // Closed form for Ω(q) = q(q-1)/2.
                let c = (1.0 - 1.0 / n) * (-times[k] / 2.0).exp();
                assert!((w[k] - 1.0 / (1.0 - c)).abs() < 1e-8);
            }
            prev = w;
        }
    }

    #[test]
    fn infinite_start_needs_coming_down() {
        let m = MergerMeasureSet::new(
            2,
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![1.0, 0.0],
            vec![FiniteMeasureOnCube::zero(2), FiniteMeasureOnCube::zero(2)],
        )
        .unwrap();
        assert!(matches!(
            descent_profile(&m, &[1.0], f64::INFINITY, SpeedForm::Exact),
            Err(Error::DivergentIntegral(_))
        ));
    }

    #[test]
    fn colour_change_flow_conserves_mass() {
        let m = MergerMeasureSet::new(
            2,
            vec![vec![0.0, 2.0], vec![0.5, 0.0]],
            vec![0.0, 0.0],
            vec![FiniteMeasureOnCube::zero(2), FiniteMeasureOnCube::zero(2)],
        )
        .unwrap();
        let v = flow_profile(&m, &[2.0, 0.0, 1.0], &[3.0, 1.0]).unwrap();
        for state in &v {
            assert!((state.iter().sum::<f64>() - 4.0).abs() < 1e-9);
        }
        assert_eq!(v[1], vec![3.0, 1.0]);
        // Stationary split 0.5 : 2.
        let w = descent_profile(&m, &[1.0], 4.0, SpeedForm::Exact).unwrap();
        assert_eq!(w, vec![4.0]);
    }
}
