//! Truncated arrays `μ_{b,k}` on `ℤ^d_{≥0}` minus the box
//! `B_ℓ = {0..ℓ_1} × … × {0..ℓ_d}`, the recursion
//! `μ_{b,k} = μ_{b+e_j,k} + μ_{b+e_j,k+e_j}` and the representation
//!
//! ```text
//! μ_{b,k} = Σ_{x ∈ Γ_ℓ} 1{k = x} ρ(x) + ∫ s^k (1-s)^{b-k} J(ds),
//! ```
//!
//! with minimal elements `Γ_ℓ = {(ℓ_i + 1) e_i}`.

use serde::{Deserialize, Serialize};

use crate::measures::{Atom, FiniteMeasureOnCube, MergerMeasureSet};
use crate::rates::for_each_sub;
use crate::{Error, Result, SCHEMA_VERSION};

/// Default truncation bound per coordinate.
pub const DEFAULT_B_MAX: usize = 16;

/// Index domain `{(b, k) : k ≤ b ≤ B_max·1, k ∉ B_ℓ}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayIndexSet {
    pub d: usize,
    pub ell: Vec<usize>,
    pub b_max: usize,
}

impl ArrayIndexSet {
    pub fn new(ell: Vec<usize>, b_max: usize) -> Result<Self> {
        let d = ell.len();
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if ell.iter().any(|&l| l >= b_max) {
            return Err(Error::InvalidArgument(format!("b_max = {b_max} must exceed every box bound in {ell:?}")));
        }
        let set = Self { d, ell, b_max };
        let mut ok = true;
        for_each_sub(&vec![b_max; d], |k| {
            if set.contains_k(k) && !(0..d).any(|i| k[i] > set.ell[i]) {
                ok = false;
            }
        });
        if !ok {
            return Err(Error::InvalidArgument("domain point without a minimal element below it".into()));
        }
        Ok(set)
    }

    /// `k ∉ B_ℓ`.
    pub fn contains_k(&self, k: &[usize]) -> bool {
        k.iter().zip(&self.ell).any(|(k, l)| k > l)
    }

    pub fn contains(&self, b: &[usize], k: &[usize]) -> bool {
        b.len() == self.d
            && k.len() == self.d
            && b.iter().all(|&x| x <= self.b_max)
            && k.iter().zip(b).all(|(k, b)| k <= b)
            && self.contains_k(k)
    }

    /// `Γ_ℓ`, listed by coordinate.
    pub fn minimal_elements(&self) -> Vec<Vec<usize>> {
        (0..self.d)
            .map(|i| {
                let mut x = vec![0; self.d];
                x[i] = self.ell[i] + 1;
                x
            })
            .collect()
    }

    /// Index of the minimal element equal to `k`, if any.
    pub fn minimal_index(&self, k: &[usize]) -> Option<usize> {
        let i = k.iter().position(|&c| c > 0)?;
        (k[i] == self.ell[i] + 1 && k.iter().enumerate().all(|(j, &c)| j == i || c == 0)).then_some(i)
    }
}

/// Point masses on `Γ_ℓ` and the measure `J`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Representation {
    /// `ρ((ℓ_i + 1) e_i)` at position `i`.
    pub rho: Vec<f64>,
    pub j: FiniteMeasureOnCube,
}

/// A non-negative array on an [`ArrayIndexSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct RateArray {
    index: ArrayIndexSet,
    offsets: Vec<usize>,
    values: Vec<f64>,
    representation: Option<Representation>,
}

impl RateArray {
    fn layout(index: &ArrayIndexSet) -> (Vec<usize>, usize) {
        let mut offsets = Vec::new();
        let mut total = 0;
        for_each_sub(&vec![index.b_max; index.d], |b| {
            offsets.push(total);
            total += b.iter().map(|&c| c + 1).product::<usize>();
        });
        (offsets, total)
    }

    fn pos(&self, b: &[usize], k: &[usize]) -> usize {
        let base = self.index.b_max + 1;
        let mut bi = 0;
        let mut ki = 0;
        for j in (0..self.index.d).rev() {
            bi = bi * base + b[j];
            ki = ki * (b[j] + 1) + k[j];
        }
        self.offsets[bi] + ki
    }

    /// Fills the array from `f(b, k)` on the domain.
    pub fn from_fn<F: FnMut(&[usize], &[usize]) -> f64>(index: ArrayIndexSet, mut f: F) -> Result<Self> {
        let (offsets, total) = Self::layout(&index);
        let mut values = vec![0.0; total];
        let mut bad = None;
        let mut cursor = 0;
        for_each_sub(&vec![index.b_max; index.d], |b| {
            for_each_sub(b, |k| {
                if index.contains_k(k) {
                    let v = f(b, k);
                    if !(v >= 0.0) || !v.is_finite() {
                        bad.get_or_insert(v);
                    }
                    values[cursor] = v;
                }
                cursor += 1;
            });
        });
        if let Some(v) = bad {
            return Err(Error::NegativeRate { what: "array entry".into(), value: v });
        }
        Ok(Self { index, offsets, values, representation: None })
    }

    pub fn index(&self) -> &ArrayIndexSet {
        &self.index
    }

    pub fn representation(&self) -> Option<&Representation> {
        self.representation.as_ref()
    }

    pub fn get(&self, b: &[usize], k: &[usize]) -> Option<f64> {
        self.index.contains(b, k).then(|| self.values[self.pos(b, k)])
    }

    /// Overwrites one entry and drops any attached representation.
    pub fn set(&mut self, b: &[usize], k: &[usize], value: f64) -> Result<()> {
        if !self.index.contains(b, k) {
            return Err(Error::InvalidArgument(format!("({b:?}, {k:?}) is outside the domain")));
        }
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeRate { what: "array entry".into(), value });
        }
        let p = self.pos(b, k);
        self.values[p] = value;
        self.representation = None;
        Ok(())
    }

    /// The translated array `μ^x_{b,k} = μ_{b+x, k+x}` for `x ∈ Γ_ℓ`.
    pub fn translated(&self, x: usize, b: &[usize], k: &[usize]) -> Option<f64> {
        let shift = &self.index.minimal_elements()[x];
        let b: Vec<usize> = b.iter().zip(shift).map(|(a, s)| a + s).collect();
        let k: Vec<usize> = k.iter().zip(shift).map(|(a, s)| a + s).collect();
        self.get(&b, &k)
    }

    /// Largest `|μ|` on the domain.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Builds the truncated array of `(ρ, J)`.
pub fn array_from_representation(ell: Vec<usize>, b_max: usize, rho: Vec<f64>, j: FiniteMeasureOnCube) -> Result<RateArray> {
    let index = ArrayIndexSet::new(ell, b_max)?;
    let d = index.d;
    if rho.len() != d || j.dim() != d {
        return Err(Error::InvalidArgument(format!("rho and J must have dimension {d}")));
    }
    for (i, &r) in rho.iter().enumerate() {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::NegativeRate { what: format!("rho at minimal element {}", i + 1), value: r });
        }
    }
    // Power tables s_j^a and (1 - s_j)^a, a ≤ b_max, per atom.
    let tables: Vec<(f64, Vec<Vec<f64>>, Vec<Vec<f64>>)> = j
        .atoms()
        .iter()
        .map(|a| {
            let pw = |base: f64| (0..=b_max).map(|e| base.powi(e as i32)).collect::<Vec<f64>>();
            (a.weight, a.point.iter().map(|&s| pw(s)).collect(), a.point.iter().map(|&s| pw(1.0 - s)).collect())
        })
        .collect();
    let minimal = index.clone();
    let mut array = RateArray::from_fn(index, |b, k| {
        let mut v = minimal.minimal_index(k).map_or(0.0, |i| rho[i]);
        for (w, sp, cp) in &tables {
            let mut term = *w;
            for t in 0..d {
                term *= sp[t][k[t]] * cp[t][b[t] - k[t]];
            }
            v += term;
        }
        v
    })?;
    array.representation = Some(Representation { rho, j });
    Ok(array)
}

/// The type-`i` merger-rate array `λ_{b,k→i}`, with `ℓ = e_i`.
pub fn merger_rate_array(m: &MergerMeasureSet, i: usize, b_max: usize) -> Result<RateArray> {
    m.check_type(i)?;
    let d = m.dim();
    let mut ell = vec![0; d];
    ell[i] = 1;
    let rho = (0..d).map(|j| if j == i { m.rho_pair(i) } else { m.rho_change(j, i) }).collect();
    array_from_representation(ell, b_max, rho, m.q(i).clone())
}

/// A triple `(b, k, j)` of the recursion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Triple {
    pub b: Vec<usize>,
    pub k: Vec<usize>,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursionCheck {
    pub max_residual: f64,
    pub argmax: Option<Triple>,
    pub triples: usize,
    /// Triples with residual above `tolerance`.
    pub violations: usize,
    pub tolerance: f64,
}

/// Residuals `μ_{b,k} - μ_{b+e_j,k} - μ_{b+e_j,k+e_j}` over every triple
/// inside the truncation.
pub fn check_recursion_array(a: &RateArray) -> RecursionCheck {
    check_recursion_array_with(a, 1e-12)
}

pub fn check_recursion_array_with(a: &RateArray, tolerance: f64) -> RecursionCheck {
    let idx = &a.index;
    let d = idx.d;
    let mut out = RecursionCheck { max_residual: 0.0, argmax: None, triples: 0, violations: 0, tolerance };
    let mut b1 = vec![0; d];
    let mut k1 = vec![0; d];
    for_each_sub(&vec![idx.b_max; d], |b| {
        for_each_sub(b, |k| {
            if !idx.contains_k(k) {
                return;
            }
            let here = a.values[a.pos(b, k)];
            for j in (0..d).filter(|&j| b[j] < idx.b_max) {
                b1.copy_from_slice(b);
                b1[j] += 1;
                k1.copy_from_slice(k);
                k1[j] += 1;
                let r = (here - a.values[a.pos(&b1, k)] - a.values[a.pos(&b1, &k1)]).abs();
                out.triples += 1;
                if r > tolerance {
                    out.violations += 1;
                }
                if r > out.max_residual {
                    out.max_residual = r;
                    out.argmax = Some(Triple { b: b.to_vec(), k: k.to_vec(), j });
                }
            }
        });
    });
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoEstimate {
    /// `μ_{x + B·1, x}` at the deepest available `B`.
    pub value: f64,
    /// Last decrement `μ_{x + (B-1)·1, x} - μ_{x + B·1, x}`.
    pub error_proxy: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEntry {
    pub k: Vec<usize>,
    /// Estimate of `∫ s^k J(ds)`.
    pub value: f64,
    /// Zero off `Γ_ℓ`; the ρ error proxy on `Γ_ℓ`.
    pub error_proxy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    pub schema_version: u32,
    pub rho: Vec<RhoEstimate>,
    pub moments: Vec<MomentEntry>,
    pub recursion: RecursionCheck,
}

impl Recovery {
    pub fn moment(&self, k: &[usize]) -> Option<&MomentEntry> {
        self.moments.iter().find(|m| m.k == k)
    }
}

/// Reads `ρ` off the columns `k = x ∈ Γ_ℓ` and the moments of `J` off the
/// diagonal `b = k`, for `|k| ≤ max_order` outside the box.
pub fn recover_representation(a: &RateArray, max_order: usize) -> Result<Recovery> {
    let recursion = check_recursion_array_with(a, 1e-12 * a.max_abs().max(1.0));
    let tolerance = 1e-10 * a.max_abs().max(1.0);
    if recursion.max_residual > tolerance {
        return Err(Error::RecursionViolated { residual: recursion.max_residual, tolerance });
    }
    let idx = &a.index;
    let d = idx.d;
    let rho: Vec<RhoEstimate> = idx
        .minimal_elements()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let depth = idx.b_max - idx.ell[i] - 1;
            let at = |depth: usize| {
                let b: Vec<usize> = x.iter().map(|c| c + depth).collect();
                a.get(&b, x).expect("column inside the domain")
            };
            let value = at(depth);
            let error_proxy = if depth > 0 { at(depth - 1) - value } else { f64::INFINITY };
            RhoEstimate { value, error_proxy, depth }
        })
        .collect();
    let mut moments = Vec::new();
    for_each_sub(&vec![idx.b_max; d], |k| {
        if !idx.contains_k(k) || k.iter().sum::<usize>() > max_order {
            return;
        }
        let diag = a.get(k, k).expect("diagonal inside the domain");
        let entry = match idx.minimal_index(k) {
            Some(i) => MomentEntry { k: k.to_vec(), value: diag - rho[i].value, error_proxy: rho[i].error_proxy },
            None => MomentEntry { k: k.to_vec(), value: diag, error_proxy: 0.0 },
        };
        moments.push(entry);
    });
    Ok(Recovery { schema_version: SCHEMA_VERSION, rho, moments, recursion })
}

/// Largest discrepancy between the moments of `s^{x∨y-x} J^x` and
/// `s^{x∨y-y} J^y` over pairs of minimal elements, read off the translated
/// arrays, for test exponents `c` with `|c| ≤ max_order`.
pub fn compatibility_residual(a: &RateArray, max_order: usize) -> f64 {
    let idx = &a.index;
    let d = idx.d;
    let gamma = idx.minimal_elements();
    let mut worst: f64 = 0.0;
    for x in 0..d {
        for y in (x + 1)..d {
            let join: Vec<usize> = gamma[x].iter().zip(&gamma[y]).map(|(a, b)| *a.max(b)).collect();
            let dx: Vec<usize> = join.iter().zip(&gamma[x]).map(|(j, g)| j - g).collect();
            let dy: Vec<usize> = join.iter().zip(&gamma[y]).map(|(j, g)| j - g).collect();
            for_each_sub(&vec![max_order; d], |c| {
                if c.iter().sum::<usize>() > max_order {
                    return;
                }
                let kx: Vec<usize> = c.iter().zip(&dx).map(|(c, e)| c + e).collect();
                let ky: Vec<usize> = c.iter().zip(&dy).map(|(c, e)| c + e).collect();
                if let (Some(u), Some(v)) = (a.translated(x, &kx, &kx), a.translated(y, &ky, &ky)) {
                    worst = worst.max((u - v).abs());
                }
            });
        }
    }
    worst
}

/// JSON input of the `arrays` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub ell: Vec<usize>,
    #[serde(default = "default_b_max")]
    pub b_max: usize,
    pub rho: Vec<f64>,
    /// Atoms `[weight, [s_1, ..., s_d]]` of `J`.
    #[serde(default)]
    pub atoms: Vec<(f64, Vec<f64>)>,
}

fn default_b_max() -> usize {
    DEFAULT_B_MAX
}

impl ArrayConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ArrayConfig = serde_json::from_str(text)?;
        if let Some(v) = cfg.schema_version {
            if v != SCHEMA_VERSION {
                return Err(Error::Malformed(format!("unsupported schema_version {v}")));
            }
        }
        Ok(cfg)
    }

    pub fn build(&self) -> Result<RateArray> {
        let d = self.ell.len();
        let atoms = self.atoms.iter().map(|(w, s)| Atom::new(*w, s.clone())).collect();
        array_from_representation(self.ell.clone(), self.b_max, self.rho.clone(), FiniteMeasureOnCube::new(d, atoms)?)
    }
}
