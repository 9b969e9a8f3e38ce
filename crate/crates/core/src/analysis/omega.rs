use super::speeds::{big_psi_unchecked, SpeedForm};
use crate::measures::MergerMeasureSet;
use crate::numerics::golden_section;
use crate::{Error, Result};

const MAX_SWEEPS: usize = 500;

/// `Ω(x) = min { Ψ(y) : y ≥ 0, Σ y_j = x }` for the exact `Ψ`.
pub fn omega(m: &MergerMeasureSet, x: f64) -> Result<f64> {
    omega_with(m, x, SpeedForm::Exact)
}

pub fn omega_with(m: &MergerMeasureSet, x: f64, form: SpeedForm) -> Result<f64> {
    Ok(omega_argmin(m, x, form)?.1)
}

/// The minimizer of `Ψ` over the simplex of total mass `x`, and the minimum.
///
/// Pairwise coordinate descent: each move shifts mass between two
/// coordinates along a golden-section line search. Restarts from the
/// symmetric point and every vertex; convexity makes any stationary point
/// global, the restarts guard against the boundary jumps of atoms with
/// `s_j = 1`.
pub fn omega_argmin(m: &MergerMeasureSet, x: f64, form: SpeedForm) -> Result<(Vec<f64>, f64)> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("argument must be finite and non-negative, got {x}")));
    }
    let d = m.dim();
    let f = |y: &[f64]| big_psi_unchecked(m, y, form);
    if d == 1 || x == 0.0 {
        let mut y = vec![0.0; d];
        y[0] = x;
        let v = f(&y);
        return Ok((y, v));
    }
    let mut starts = vec![vec![x / d as f64; d]];
    for v in 0..d {
        let mut y = vec![0.0; d];
        y[v] = x;
        starts.push(y);
    }
    let tol = 1e-11 * x.max(1.0);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mut y in starts {
        let mut fy = f(&y);
        for _ in 0..MAX_SWEEPS {
            let before = fy;
            for i in 0..d {
                for j in (i + 1)..d {
                    let total = y[i] + y[j];
                    if total <= 0.0 {
                        continue;
                    }
                    let mut probe = y.clone();
                    let (t, ft) = golden_section(
                        |t| {
                            probe[i] = t;
                            probe[j] = total - t;
                            f(&probe)
                        },
                        0.0,
                        total,
                        tol,
                    );
                    if ft < fy {
                        y[i] = t;
                        y[j] = total - t;
                        fy = ft;
                    }
                }
            }
            if before - fy <= 1e-14 * fy.abs().max(1.0) {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| fy < b.1) {
            best = Some((y, fy));
        }
    }
    Ok(best.expect("at least one start"))
}
