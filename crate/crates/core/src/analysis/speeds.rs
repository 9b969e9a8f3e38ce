use serde::{Deserialize, Serialize};

use crate::measures::MergerMeasureSet;
use crate::{Error, Result};

/// Which quadratic term `Ψ` uses.
///
/// `Exact` is the expected decrease of the total block count,
/// `ρ x(x-1)/2` per type. `Asymptotic` replaces it by `ρ x²/2`, matching
/// `ψ_i` for large arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedForm {
    #[default]
    Exact,
    Asymptotic,
}

/// `e^{-x} - 1 + x` without cancellation for small `x`.
pub(crate) fn exp_defect(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        x * x * (0.5 - x * (1.0 / 6.0 - x / 24.0))
    } else {
        (-x).exp_m1() + x
    }
}

/// `Π_j (1 - s_j)^{x_j} - 1`, with `0^0 = 1`.
pub(crate) fn participation_defect(s: &[f64], x: &[f64]) -> f64 {
    let mut log = 0.0;
    for (&sj, &xj) in s.iter().zip(x) {
        if xj == 0.0 || sj == 0.0 {
            continue;
        }
        if sj >= 1.0 {
            return -1.0;
        }
        log += xj * (-sj).ln_1p();
    }
    log.exp_m1()
}

fn check_point(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::InvalidArgument(format!("point must have dimension {d}")));
    }
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("coordinates must be finite and non-negative, got {v}")));
    }
    Ok(())
}

fn check_q(q: f64) -> Result<()> {
    if q >= 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("argument must be finite and non-negative, got {q}")))
    }
}

/// `ψ_i(q) = (ρ_{ii→i}/2) q² + ∫ (e^{-q s_i} - 1 + q s_i) Q_{→i}(ds)`.
pub fn psi(m: &MergerMeasureSet, i: usize, q: f64) -> Result<f64> {
    m.check_type(i)?;
    check_q(q)?;
    Ok(psi_unchecked(m, i, q))
}

pub(crate) fn psi_unchecked(m: &MergerMeasureSet, i: usize, q: f64) -> f64 {
    0.5 * m.rho_pair(i) * q * q + m.q(i).atoms().iter().map(|a| a.weight * exp_defect(q * a.point[i])).sum::<f64>()
}

/// `ψ̃_i(q) = ρ_{ii→i} q(q-1)/2 + ∫ (q s_i - 1 + (1 - s_i)^q) Q_{→i}(ds)`.
pub fn psi_tilde(m: &MergerMeasureSet, i: usize, q: f64) -> Result<f64> {
    m.check_type(i)?;
    check_q(q)?;
    let atoms: f64 = m
        .q(i)
        .atoms()
        .iter()
        .map(|a| {
            let s = a.point[i];
            a.weight * (q * s + participation_defect(&[s], &[q]))
        })
        .sum();
    Ok(0.5 * m.rho_pair(i) * q * (q - 1.0) + atoms)
}

/// `Ψ(x)`, the expected rate of decrease of the total block count.
pub fn big_psi(m: &MergerMeasureSet, x: &[f64]) -> Result<f64> {
    big_psi_with(m, x, SpeedForm::Exact)
}

pub fn big_psi_with(m: &MergerMeasureSet, x: &[f64], form: SpeedForm) -> Result<f64> {
    check_point(x, m.dim())?;
    Ok(big_psi_unchecked(m, x, form))
}

pub(crate) fn big_psi_unchecked(m: &MergerMeasureSet, x: &[f64], form: SpeedForm) -> f64 {
    let mut total = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let rho = m.rho_pair(i);
        total += match form {
            SpeedForm::Exact => 0.5 * rho * xi * (xi - 1.0),
            SpeedForm::Asymptotic => 0.5 * rho * xi * xi,
        };
        for a in m.q(i).atoms() {
            let linear: f64 = a.point.iter().zip(x).map(|(s, x)| s * x).sum();
            total += a.weight * (linear + participation_defect(&a.point, x));
        }
    }
    total
}

/// The mean-field vector field `Φ(x)`; `Φ_i` is the expected rate of change
/// of the number of type-`i` blocks.
pub fn phi_flow(m: &MergerMeasureSet, x: &[f64]) -> Result<Vec<f64>> {
    check_point(x, m.dim())?;
    let mut out = vec![0.0; m.dim()];
    phi_unchecked(m, x, &mut out);
    Ok(out)
}

pub(crate) fn phi_unchecked(m: &MergerMeasureSet, x: &[f64], out: &mut [f64]) {
    let d = m.dim();
    for i in 0..d {
        let mut v = 0.0;
        for j in (0..d).filter(|&j| j != i) {
            v += m.rho_change(j, i) * x[j] - m.rho_change(i, j) * x[i];
        }
        v -= 0.5 * m.rho_pair(i) * x[i] * (x[i] - 1.0);
        for a in m.q(i).atoms() {
            v -= a.weight * participation_defect(&a.point, x);
        }
        for j in 0..d {
            for a in m.q(j).atoms() {
                v -= a.weight * a.point[i] * x[i];
            }
        }
        out[i] = v;
    }
}

/// Convenience handle bundling the speed functionals of one measure set.
#[derive(Debug, Clone, Copy)]
pub struct ProcessingSpeeds<'a> {
    pub measure: &'a MergerMeasureSet,
    pub form: SpeedForm,
}

impl<'a> ProcessingSpeeds<'a> {
    pub fn new(measure: &'a MergerMeasureSet) -> Self {
        Self { measure, form: SpeedForm::Exact }
    }

    pub fn psi(&self, i: usize, q: f64) -> Result<f64> {
        psi(self.measure, i, q)
    }

    pub fn psi_tilde(&self, i: usize, q: f64) -> Result<f64> {
        psi_tilde(self.measure, i, q)
    }

    pub fn big_psi(&self, x: &[f64]) -> Result<f64> {
        big_psi_with(self.measure, x, self.form)
    }

    pub fn omega(&self, x: f64) -> Result<f64> {
        super::omega::omega_with(self.measure, x, self.form)
    }

    pub fn phi(&self, x: &[f64]) -> Result<Vec<f64>> {
        phi_flow(self.measure, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Atom, FiniteMeasureOnCube};

    fn with_atoms(d: usize, rho_change: Vec<Vec<f64>>, rho_pair: Vec<f64>, q: Vec<Vec<Atom>>) -> MergerMeasureSet {
        let q = q.into_iter().map(|a| FiniteMeasureOnCube::new(d, a).unwrap()).collect();
        MergerMeasureSet::new(d, rho_change, rho_pair, q).unwrap()
    }

    #[test]
    fn psi_examples() {
        let m = MergerMeasureSet::kingman(2.0).unwrap();
        assert_eq!(psi(&m, 0, 3.0).unwrap(), 9.0);
        let m = with_atoms(2, vec![vec![0.0; 2]; 2], vec![0.0; 2], vec![vec![Atom::new(1.0, vec![1.0, 0.0])], vec![]]);
        assert!((psi(&m, 0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(psi(&m, 0, -1.0).is_err());
    }

    #[test]
    fn big_psi_examples() {
        let m = with_atoms(1, vec![vec![0.0]], vec![0.0], vec![vec![Atom::new(1.0, vec![1.0])]]);
        assert_eq!(big_psi(&m, &[2.0]).unwrap(), 1.0);
        let m = with_atoms(2, vec![vec![0.0; 2]; 2], vec![0.0; 2], vec![vec![Atom::new(1.0, vec![1.0, 1.0])], vec![]]);
        assert_eq!(big_psi(&m, &[2.0, 2.0]).unwrap(), 3.0);
        let k = MergerMeasureSet::kingman(1.0).unwrap();
        assert_eq!(big_psi(&k, &[4.0]).unwrap(), 6.0);
        assert_eq!(big_psi_with(&k, &[4.0], SpeedForm::Asymptotic).unwrap(), 8.0);
    }

    #[test]
    fn phi_examples() {
        let m = with_atoms(2, vec![vec![0.0; 2]; 2], vec![1.0, 1.0], vec![vec![], vec![]]);
        assert_eq!(phi_flow(&m, &[3.0, 2.0]).unwrap(), vec![-3.0, -1.0]);
        let m = with_atoms(2, vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0.0; 2], vec![vec![], vec![]]);
        assert_eq!(phi_flow(&m, &[1.5, 2.5]).unwrap(), vec![2.5, -2.5]);
        assert_eq!(big_psi(&m, &[1.5, 2.5]).unwrap(), 0.0);
    }

    #[test]
    fn psi_equals_minus_sum_phi() {
        let m = with_atoms(
            2,
            vec![vec![0.0, 0.3], vec![0.7, 0.0]],
            vec![0.4, 1.1],
            vec![vec![Atom::new(0.5, vec![0.3, 0.9])], vec![Atom::new(1.5, vec![1.0, 0.2])]],
        );
        for x in [[0.0, 0.0], [0.5, 3.0], [7.25, 1.0], [0.0, 4.0]] {
            let phi = phi_flow(&m, &x).unwrap();
            assert!((big_psi(&m, &x).unwrap() + phi.iter().sum::<f64>()).abs() < 1e-12);
        }
    }

    #[test]
    fn small_argument_defect_is_accurate() {
        let x: f64 = 3e-5;
        let exact = x * x / 2.0 - x * x * x / 6.0 + x.powi(4) / 24.0;
        assert!((exp_defect(x) - exact).abs() <= 1e-15 * exact);
    }
}
