//! The characterizing datum Λ = (ρ_{j→i}, ρ_{ii→i}, Q_{→i}) and the measure
//! transformations built on it.

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::numerics;
use crate::{Error, Result};

/// A weighted point mass of a measure on `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub point: Vec<f64>,
}

impl Atom {
    pub fn new(weight: f64, point: Vec<f64>) -> Self {
        Self { weight, point }
    }
}

/// Node placement used to discretize a parametric density into atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    GaussLegendre,
    Midpoint,
}

/// Within-type parametric merger densities, living on the axis of their
/// target type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    /// `Λ(du) = mass · Beta(a, b)(du)` on the target axis, so that
    /// `Q(du) = u^{-2} Λ(du)`. `Beta(2-α, α)` gives the Beta-coalescents.
    Beta { a: f64, b: f64, mass: f64 },
    /// `Q(du) = c · u^{-theta} du` on `(0, 1]`.
    Power { c: f64, theta: f64 },
}

impl Family {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Family::Beta { a, b, mass } => a > 0.0 && b > 0.0 && mass >= 0.0 && mass.is_finite(),
            Family::Power { c, theta } => c >= 0.0 && c.is_finite() && theta.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Malformed(format!("invalid family parameters {self:?}")))
        }
    }

    /// Density of `Q̄` with respect to Lebesgue measure on `(0, 1)`.
    pub fn density(&self, u: f64) -> f64 {
        match *self {
            Family::Beta { a, b, mass } => {
                mass * ((a - 3.0) * u.ln() + (b - 1.0) * (-u).ln_1p() - ln_beta(a, b)).exp()
            }
            Family::Power { c, theta } => c * u.powf(-theta),
        }
    }

    /// `∫ u^p Q̄(du)` in closed form, `+∞` when it diverges.
    pub fn moment(&self, p: f64) -> f64 {
        match *self {
            Family::Beta { a, b, mass } => {
                let shifted = a + p - 2.0;
                if mass == 0.0 {
                    0.0
                } else if shifted > 0.0 {
                    mass * (ln_beta(shifted, b) - ln_beta(a, b)).exp()
                } else {
                    f64::INFINITY
                }
            }
            Family::Power { c, theta } => {
                let e = p + 1.0 - theta;
                if c == 0.0 {
                    0.0
                } else if e > 0.0 {
                    c / e
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// The integrability functional `∫ u² Q̄(du)` of a within-type density.
    pub fn integrability(&self) -> f64 {
        self.moment(2.0)
    }

    /// `∫_0^1 (e^{-qu} - 1 + qu) Q̄(du)` by quadrature on the exact density.
    pub fn psi_integral(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        // Below eps the integrand is (qu)²/2 to relative accuracy qu/3.
        let eps = (1e-7 / q).min(1e-3);
        let head = 0.5 * q * q * self.head_second_moment(eps);
        let integrand = |z: f64| {
            let u = z.exp();
            let x = q * u;
            ((-x).exp_m1() + x) * self.density(u) * u
        };
        let split = (1.0 / q).clamp(eps, 1.0).ln();
        let lo = eps.ln();
        let mut tail = 0.0;
        for (a, b) in [(lo, split), (split, 0.0)] {
            if b > a {
                tail += numerics::integrate(integrand, a, b, 0.0, 1e-10).value;
            }
        }
        head + tail
    }

    /// `∫_0^eps u² Q̄(du)` with `(1-u)^{b-1}` frozen at 1.
    fn head_second_moment(&self, eps: f64) -> f64 {
        match *self {
            Family::Beta { a, b, mass } => mass * (a * eps.ln() - ln_beta(a, b)).exp() / a,
            Family::Power { c, theta } => {
                let e = 3.0 - theta;
                if e <= 0.0 {
                    f64::INFINITY
                } else {
                    c * eps.powf(e) / e
                }
            }
        }
    }
}

/// Provenance of atoms generated from a parametric family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyTag {
    pub family: Family,
    pub rule: QuadratureRule,
    pub nodes: usize,
    /// Number of trailing atoms of the measure produced by the discretization.
    pub generated: usize,
}

/// A finite measure on `[0,1]^d` stored as weighted atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMeasureOnCube {
    d: usize,
    atoms: Vec<Atom>,
    family: Option<FamilyTag>,
}

impl FiniteMeasureOnCube {
    pub fn zero(d: usize) -> Self {
        Self { d, atoms: Vec::new(), family: None }
    }

    /// Validates and wraps a list of atoms. Zero-weight atoms are kept.
    pub fn new(d: usize, atoms: Vec<Atom>) -> Result<Self> {
        for atom in &atoms {
            validate_atom(d, atom)?;
        }
        Ok(Self { d, atoms, family: None })
    }

    /// Appends the discretization of `family` on the axis of `target`.
    pub fn with_family(mut self, target: usize, family: Family, rule: QuadratureRule, nodes: usize) -> Result<Self> {
        if self.family.is_some() {
            return Err(Error::Malformed("at most one family per target type".into()));
        }
        if target >= self.d {
            return Err(Error::TypeOutOfRange { index: target, d: self.d });
        }
        if nodes == 0 {
            return Err(Error::Malformed("family discretization needs at least one node".into()));
        }
        family.validate()?;
        let (us, ws): (Vec<f64>, Vec<f64>) = match rule {
            QuadratureRule::GaussLegendre => {
                let (x, w) = numerics::gauss_legendre(nodes);
                (x.iter().map(|x| 0.5 * (x + 1.0)).collect(), w.iter().map(|w| 0.5 * w).collect())
            }
            QuadratureRule::Midpoint => {
                let h = 1.0 / nodes as f64;
                ((0..nodes).map(|k| (k as f64 + 0.5) * h).collect(), vec![h; nodes])
            }
        };
        for (u, w) in us.into_iter().zip(ws) {
            let mut point = vec![0.0; self.d];
            point[target] = u;
            self.atoms.push(Atom::new(w * family.density(u), point));
        }
        self.family = Some(FamilyTag { family, rule, nodes, generated: nodes });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn family(&self) -> Option<&FamilyTag> {
        self.family.as_ref()
    }

    /// Atoms supplied explicitly, i.e. excluding family-generated ones.
    pub fn explicit_atoms(&self) -> &[Atom] {
        let generated = self.family.as_ref().map_or(0, |f| f.generated);
        &self.atoms[..self.atoms.len() - generated]
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.weight == 0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `∫ f(s) μ(ds)` over the atoms.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|a| a.weight * f(&a.point)).sum()
    }

    /// Pushforward under `s ↦ s_i`: atoms with `s_i > 0` and the mass at `s_i = 0`.
    pub fn pushforward(&self, i: usize) -> Result<(Vec<(f64, f64)>, f64)> {
        if i >= self.d {
            return Err(Error::TypeOutOfRange { index: i, d: self.d });
        }
        let mut kept = Vec::new();
        let mut dropped = 0.0;
        for a in &self.atoms {
            if a.point[i] > 0.0 {
                kept.push((a.weight, a.point[i]));
            } else {
                dropped += a.weight;
            }
        }
        Ok((kept, dropped))
    }
}

fn validate_atom(d: usize, atom: &Atom) -> Result<()> {
    if !(atom.weight >= 0.0 && atom.weight.is_finite()) {
        return Err(Error::NegativeRate { what: "atom weight".into(), value: atom.weight });
    }
    if atom.point.len() != d || atom.point.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::AtomOutOfCube { point: atom.point.clone(), d });
    }
    if atom.point.iter().all(|&s| s == 0.0) {
        return Err(Error::AtomAtZero);
    }
    Ok(())
}

fn check_rate(what: impl FnOnce() -> String, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeRate { what: what(), value })
    }
}

/// The full datum of a `d`-type Λ-coalescent. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergerMeasureSet {
    d: usize,
    /// `rho_change[j][i] = ρ_{j→i}`; the diagonal is held at zero.
    rho_change: Vec<Vec<f64>>,
    rho_pair: Vec<f64>,
    q: Vec<FiniteMeasureOnCube>,
}

impl MergerMeasureSet {
    pub fn new(
        d: usize,
        mut rho_change: Vec<Vec<f64>>,
        rho_pair: Vec<f64>,
        q: Vec<FiniteMeasureOnCube>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::Malformed("d must be at least 1".into()));
        }
        if rho_change.len() != d || rho_change.iter().any(|r| r.len() != d) {
            return Err(Error::Malformed("rho_change must be d x d".into()));
        }
        if rho_pair.len() != d || q.len() != d {
            return Err(Error::Malformed("rho_pair and q need one entry per type".into()));
        }
        for (j, row) in rho_change.iter_mut().enumerate() {
            row[j] = 0.0;
            for (i, &r) in row.iter().enumerate() {
                check_rate(|| format!("rho_change {}->{}", j + 1, i + 1), r)?;
            }
        }
        for (i, &r) in rho_pair.iter().enumerate() {
            check_rate(|| format!("rho_pair {}", i + 1), r)?;
        }
        for (i, measure) in q.iter().enumerate() {
            if measure.dim() != d {
                return Err(Error::Malformed(format!("Q for type {} has dimension {}", i + 1, measure.dim())));
            }
            for atom in measure.atoms() {
                validate_atom(d, atom)?;
            }
        }
        let set = Self { d, rho_change, rho_pair, q };
        let report = check_integrability(&set);
        if let Some(target) = report.first_divergent() {
            return Err(Error::NonIntegrable {
                target: target + 1,
                detail: "parametric family has an infinite integrability functional".into(),
            });
        }
        Ok(set)
    }

    /// Pure single-type Kingman coalescent with pair rate `rho`.
    pub fn kingman(rho: f64) -> Result<Self> {
        Self::new(1, vec![vec![0.0]], vec![rho], vec![FiniteMeasureOnCube::zero(1)])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `ρ_{j→i}` (zero on the diagonal).
    pub fn rho_change(&self, j: usize, i: usize) -> f64 {
        self.rho_change[j][i]
    }

    pub fn rho_change_matrix(&self) -> &[Vec<f64>] {
        &self.rho_change
    }

    /// `ρ_{ii→i}`.
    pub fn rho_pair(&self, i: usize) -> f64 {
        self.rho_pair[i]
    }

    pub fn rho_pairs(&self) -> &[f64] {
        &self.rho_pair
    }

    /// `Q_{→i}`.
    pub fn q(&self, i: usize) -> &FiniteMeasureOnCube {
        &self.q[i]
    }

    pub fn q_measures(&self) -> &[FiniteMeasureOnCube] {
        &self.q
    }

    /// Total rate at which one block of type `j` leaves by pure colour change.
    pub fn colour_out_rate(&self, j: usize) -> f64 {
        self.rho_change[j].iter().sum()
    }

    pub(crate) fn check_type(&self, i: usize) -> Result<()> {
        if i < self.d {
            Ok(())
        } else {
            Err(Error::TypeOutOfRange { index: i, d: self.d })
        }
    }
}

/// Per-type value of `∫ (s_i² + Σ_{j≠i} s_j) Q_{→i}(ds)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    /// Exact atom sums of the represented measures.
    pub values: Vec<f64>,
    /// Closed-form value of the parametric family behind a discretization, if any.
    pub analytic: Vec<Option<f64>>,
}

impl IntegrabilityReport {
    pub fn is_finite(&self) -> bool {
        self.first_divergent().is_none() && self.values.iter().all(|v| v.is_finite())
    }

    pub fn first_divergent(&self) -> Option<usize> {
        self.analytic.iter().position(|v| v.is_some_and(|v| !v.is_finite()))
    }
}

pub fn check_integrability(m: &MergerMeasureSet) -> IntegrabilityReport {
    let values = (0..m.d)
        .map(|i| {
            m.q[i].integrate(|s| {
                s.iter()
                    .enumerate()
                    .map(|(j, &sj)| if j == i { sj * sj } else { sj })
                    .sum()
            })
        })
        .collect();
    let analytic = m.q.iter().map(|q| q.family().map(|f| f.family.integrability())).collect();
    IntegrabilityReport { values, analytic }
}

/// A single-type datum `(ρ, Q)` with `Q` given by atoms `(weight, u)`, `u ∈ (0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleTypeMeasure {
    pub rho: f64,
    pub atoms: Vec<(f64, f64)>,
}

impl SingleTypeMeasure {
    /// `λ_{b,k} = ρ 1{k=2} + ∫ u^k (1-u)^{b-k} Q(du)`.
    pub fn rate(&self, b: u32, k: u32) -> f64 {
        let kingman = if k == 2 { self.rho } else { 0.0 };
        kingman
            + self
                .atoms
                .iter()
                .map(|&(w, u)| w * u.powi(k as i32) * (1.0 - u).powi((b - k) as i32))
                .sum::<f64>()
    }
}

/// Result of [`project_measure`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub measure: SingleTypeMeasure,
    /// Mass of `Q_{→i}` sitting on `{s_i = 0}`.
    pub dropped_mass: f64,
}

/// The type-`i` projected datum `(ρ_{ii→i}, Q̄_{→i})`.
pub fn project_measure(m: &MergerMeasureSet, i: usize) -> Result<Projection> {
    m.check_type(i)?;
    let (atoms, dropped_mass) = m.q[i].pushforward(i)?;
    Ok(Projection { measure: SingleTypeMeasure { rho: m.rho_pair[i], atoms }, dropped_mass })
}

/// Killing data of the type-`i` projected coalescent.
#[derive(Debug, Clone, PartialEq)]
pub struct KillingData {
    /// Average removal rate `r_i` of a single block.
    pub r: f64,
    /// Per-block elimination rate `Σ_{j≠i} ρ_{i→j}`.
    pub individual_rate: f64,
    /// `W_i` as atoms `(weight, u)`, including any mass at `u = 0`.
    pub large: Vec<(f64, f64)>,
}

impl KillingData {
    pub fn large_mass(&self) -> f64 {
        self.large.iter().map(|a| a.0).sum()
    }
}

pub fn kill_measure(m: &MergerMeasureSet, i: usize) -> Result<KillingData> {
    m.check_type(i)?;
    let individual_rate = m.colour_out_rate(i);
    let mut large = Vec::new();
    let mut r = individual_rate;
    for j in (0..m.d).filter(|&j| j != i) {
        for a in m.q[j].atoms() {
            let u = a.point[i];
            r += a.weight * u;
            if a.weight > 0.0 {
                large.push((a.weight, u));
            }
        }
    }
    Ok(KillingData { r, individual_rate, large })
}

/// A finite measure on `[0, 1]` in the classical single-type parametrization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaMeasure {
    /// Atoms `(weight, s)` with `s ∈ [0, 1]`.
    pub atoms: Vec<(f64, f64)>,
}

/// Splits `Λ = ρ δ_0 + s^{-2} Q`.
pub fn single_type_decompose(lambda: &LambdaMeasure) -> Result<SingleTypeMeasure> {
    let mut rho = 0.0;
    let mut atoms = Vec::new();
    for &(w, s) in &lambda.atoms {
        check_rate(|| "Lambda atom weight".into(), w)?;
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::AtomOutOfCube { point: vec![s], d: 1 });
        }
        if s == 0.0 {
            rho += w;
        } else {
            atoms.push((w / (s * s), s));
        }
    }
    Ok(SingleTypeMeasure { rho, atoms })
}

/// Inverse of [`single_type_decompose`].
pub fn single_type_compose(measure: &SingleTypeMeasure) -> LambdaMeasure {
    let mut atoms = Vec::with_capacity(measure.atoms.len() + 1);
    if measure.rho > 0.0 {
        atoms.push((measure.rho, 0.0));
    }
    atoms.extend(measure.atoms.iter().map(|&(w, s)| (w * s * s, s)));
    LambdaMeasure { atoms }
}

/// Branching data `(β, κ, ν)` of a `d`-type continuous-state branching process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsbpParams {
    pub beta: Vec<f64>,
    /// `kappa[i][j] = κ_{i→j}`.
    pub kappa: Vec<Vec<f64>>,
    /// `nu[i]`: jump atoms `(weight, r)` with `r ∈ ℝ^d_{≥0}`.
    pub nu: Vec<Vec<(f64, Vec<f64>)>>,
}

/// Index convention for the colour-change rates induced by a CSBP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsbpConvention {
    /// A block of type `j` turns into type `i` at rate `κ_{j→i} x_j / x_i`.
    #[default]
    Feller,
    /// `ρ_{j→i} = κ_{i→j} x_i / x_j`, the alternative indexing.
    Transposed,
}

/// Local multitype Λ-coalescent rates of a CSBP at population size `x`.
pub fn csbp_local_rates(p: &CsbpParams, x: &[f64], convention: CsbpConvention) -> Result<MergerMeasureSet> {
    let d = p.beta.len();
    if d == 0 || x.len() != d || p.kappa.len() != d || p.kappa.iter().any(|r| r.len() != d) || p.nu.len() != d {
        return Err(Error::Malformed("CSBP parameters must all have dimension d".into()));
    }
    if let Some(&bad) = x.iter().find(|&&xi| !(xi > 0.0 && xi.is_finite())) {
        return Err(Error::InvalidArgument(format!("population coordinate {bad} must be positive")));
    }
    for (i, &b) in p.beta.iter().enumerate() {
        check_rate(|| format!("beta {}", i + 1), b)?;
    }
    let mut rho_change = vec![vec![0.0; d]; d];
    for j in 0..d {
        for i in (0..d).filter(|&i| i != j) {
            check_rate(|| format!("kappa {}->{}", j + 1, i + 1), p.kappa[j][i])?;
            rho_change[j][i] = match convention {
                CsbpConvention::Feller => p.kappa[j][i] * x[j] / x[i],
                CsbpConvention::Transposed => p.kappa[i][j] * x[i] / x[j],
            };
        }
    }
    let rho_pair = (0..d).map(|i| p.beta[i] / x[i]).collect();
    let mut q = Vec::with_capacity(d);
    for nu_i in &p.nu {
        let mut atoms = Vec::new();
        for (w, r) in nu_i {
            if r.len() != d || r.iter().any(|&rk| !(rk >= 0.0 && rk.is_finite())) {
                return Err(Error::Malformed(format!("nu atom {r:?} must be a non-negative d-vector")));
            }
            // A zero jump moves nothing and maps to the excluded zero vector.
            if r.iter().all(|&rk| rk == 0.0) {
                continue;
            }
            let point = r.iter().zip(x).map(|(&rk, &xk)| rk / (xk + rk)).collect();
            atoms.push(Atom::new(*w, point));
        }
        q.push(FiniteMeasureOnCube::new(d, atoms)?);
    }
    MergerMeasureSet::new(d, rho_change, rho_pair, q)
}
