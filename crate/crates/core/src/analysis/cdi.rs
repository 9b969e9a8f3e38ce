use serde::{Deserialize, Serialize};

use super::speeds::exp_defect;
use crate::measures::{Family, MergerMeasureSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ComesDown,
    StaysInfinite,
    Inconclusive,
}

/// Which rule decided a type's verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shortcut {
    /// `ρ_{ii→i} > 0`, so `ψ_i(q) ≥ ρ q²/2`.
    PairwiseRate,
    /// `ψ_i ≡ 0`.
    ZeroSpeed,
    /// `Q̄_{→i}` has finite total mass, so `ψ_i` grows at most linearly.
    FiniteMass,
    /// `∫ u Q̄_{→i}(du) < ∞`, so again `ψ_i(q) ≤ q ∫ u Q̄_{→i}(du)`.
    FiniteFirstMoment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub shortcut: Option<Shortcut>,
    /// Fitted `γ` in `ψ_i(q) ≈ c q^γ` over the upper half of the grid.
    pub tail_exponent: Option<f64>,
    /// `∫_1^{q_max} dq / ψ_i(q)`.
    pub integral_estimate: Option<f64>,
    pub q_max: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeVerdict {
    pub verdict: Verdict,
    pub evidence: Evidence,
}

/// Per-type verdicts, in type order, and the overall verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdiReport {
    pub per_type: Vec<TypeVerdict>,
    pub overall: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdiOptions {
    pub q_max: f64,
    pub margin: f64,
    pub grid_points: usize,
}

impl Default for CdiOptions {
    fn default() -> Self {
        Self { q_max: 1e8, margin: 0.1, grid_points: 64 }
    }
}

pub fn classify_cdi(m: &MergerMeasureSet) -> CdiReport {
    classify_cdi_with(m, CdiOptions::default())
}

pub fn classify_cdi_with(m: &MergerMeasureSet, opts: CdiOptions) -> CdiReport {
    let per_type: Vec<TypeVerdict> = (0..m.dim()).map(|i| classify_type(m, i, opts)).collect();
    let overall = if per_type.iter().all(|t| t.verdict == Verdict::ComesDown) {
        Verdict::ComesDown
    } else if per_type.iter().any(|t| t.verdict == Verdict::StaysInfinite) {
        Verdict::StaysInfinite
    } else {
        Verdict::Inconclusive
    };
    CdiReport { per_type, overall }
}

fn classify_type(m: &MergerMeasureSet, i: usize, opts: CdiOptions) -> TypeVerdict {
    let shortcut = |verdict, s| TypeVerdict {
        verdict,
        evidence: Evidence {
            shortcut: Some(s),
            tail_exponent: None,
            integral_estimate: None,
            q_max: opts.q_max,
            margin: opts.margin,
        },
    };
    if m.rho_pair(i) > 0.0 {
        return shortcut(Verdict::ComesDown, Shortcut::PairwiseRate);
    }
    let q = m.q(i);
    let explicit: Vec<(f64, f64)> = q
        .explicit_atoms()
        .iter()
        .map(|a| (a.weight, a.point[i]))
        .filter(|&(w, u)| w > 0.0 && u > 0.0)
        .collect();
    let family: Option<Family> = q.family().map(|t| t.family).filter(|f| f.moment(2.0) > 0.0);
    let Some(family) = family else {
        return if explicit.is_empty() {
            shortcut(Verdict::StaysInfinite, Shortcut::ZeroSpeed)
        } else {
            shortcut(Verdict::StaysInfinite, Shortcut::FiniteMass)
        };
    };
    if family.moment(0.0).is_finite() {
        return shortcut(Verdict::StaysInfinite, Shortcut::FiniteMass);
    }
    if family.moment(1.0).is_finite() {
        return shortcut(Verdict::StaysInfinite, Shortcut::FiniteFirstMoment);
    }

    let psi = |q: f64| explicit.iter().map(|&(w, u)| w * exp_defect(q * u)).sum::<f64>() + family.psi_integral(q);
    let n = opts.grid_points.max(4);
    let log_max = opts.q_max.ln();
    let grid: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let lq = log_max * k as f64 / (n - 1) as f64;
            (lq, psi(lq.exp()))
        })
        .collect();
    let upper = &grid[n / 2..];
    let (mx, my) = upper
        .iter()
        .fold((0.0, 0.0), |(a, b), &(lq, p)| (a + lq, b + p.ln()));
    let (mx, my) = (mx / upper.len() as f64, my / upper.len() as f64);
    let (sxy, sxx) = upper.iter().fold((0.0, 0.0), |(sxy, sxx), &(lq, p)| {
        (sxy + (lq - mx) * (p.ln() - my), sxx + (lq - mx) * (lq - mx))
    });
    let gamma = sxy / sxx;
    // ∫ dq/ψ = ∫ q/ψ d(ln q), trapezoid on the grid.
    let integral: f64 = grid
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].0.exp() / w[0].1 + w[1].0.exp() / w[1].1))
        .sum();
    let verdict = if gamma > 1.0 + opts.margin {
        Verdict::ComesDown
    } else if gamma < 1.0 - opts.margin {
        Verdict::StaysInfinite
    } else {
        Verdict::Inconclusive
    };
    TypeVerdict {
        verdict,
        evidence: Evidence {
            shortcut: None,
            tail_exponent: Some(gamma),
            integral_estimate: Some(integral),
            q_max: opts.q_max,
            margin: opts.margin,
        },
    }
}
