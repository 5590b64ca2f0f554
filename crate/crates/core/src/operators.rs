//! Degenerate operator families and their radial reduction.
//!
//! For a radial profile `u(x) = g(|x|)` the Hessian has eigenvalue `g''` once
//! (radial direction) and `g'/r` with multiplicity `N - 1` (tangential
//! directions), and the gradient is `g' e_r`. Every supported operator is then
//! a function `H(r, m, q)` of `m = g''`, `q = g'` and `r`, of the form
//!
//! ```text
//! H = k_m(X) X + (N - 1) k_t(Y) Y,   X = |q|^α m,   Y = |q|^α q / r
//! ```
//!
//! where the slopes `k_m`, `k_t` are constants for the divergence-type
//! variants and switch between the ellipticity constants for the Pucci ones.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DiscreteRadialFunction, RadialGrid};
use crate::report::{Check, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    PucciPlus,
    PucciMinus,
    AlphaLaplacian,
    TraceNormalMix,
}

/// Operator parameters. JSON keys: `alpha, a, A, dim, variant, p1, p2, nu, kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOperatorSpec")]
pub struct OperatorSpec {
    pub alpha: f64,
    /// Lower ellipticity constant `a`.
    #[serde(rename = "a")]
    pub lower: f64,
    /// Upper ellipticity constant `A`.
    #[serde(rename = "A")]
    pub upper: f64,
    pub dim: usize,
    pub variant: Variant,
    pub p1: f64,
    pub p2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

/// Wire form; `a`/`A` may be omitted for the variants that induce them.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperatorSpec {
    alpha: f64,
    a: Option<f64>,
    #[serde(rename = "A")]
    big_a: Option<f64>,
    dim: usize,
    variant: Variant,
    p1: Option<f64>,
    p2: Option<f64>,
    nu: Option<f64>,
    kappa: Option<f64>,
}

impl TryFrom<RawOperatorSpec> for OperatorSpec {
    type Error = Error;

    fn try_from(raw: RawOperatorSpec) -> Result<Self> {
        let p1 = raw.p1.unwrap_or(1.0);
        let p2 = raw.p2.unwrap_or(0.0);
        let induced = induced_bounds(raw.variant, raw.alpha, p1, p2);
        let (lower, upper) = match (raw.a, raw.big_a, induced) {
            (Some(a), Some(b), _) => (a, b),
            (None, None, Some(pair)) => pair,
            _ => {
                return Err(Error::InvalidSpec(
                    "both `a` and `A` are required for Pucci variants".into(),
                ))
            }
        };
        let spec = OperatorSpec {
            alpha: raw.alpha,
            lower,
            upper,
            dim: raw.dim,
            variant: raw.variant,
            p1,
            p2,
            nu: raw.nu,
            kappa: raw.kappa,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn induced_bounds(variant: Variant, alpha: f64, p1: f64, p2: f64) -> Option<(f64, f64)> {
    match variant {
        Variant::AlphaLaplacian => Some(((1.0 + alpha).min(1.0), (1.0 + alpha).max(1.0))),
        Variant::TraceNormalMix => Some((p1 + p2.min(0.0), p1 + p2.max(0.0))),
        Variant::PucciPlus | Variant::PucciMinus => None,
    }
}

/// `(g', g'')` at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialJet {
    pub r: f64,
    pub q: f64,
    pub m: f64,
}

impl RadialJet {
    pub fn new(r: f64, q: f64, m: f64) -> Self {
        Self { r, q, m }
    }
}

impl OperatorSpec {
    pub fn pucci_plus(alpha: f64, a: f64, big_a: f64, dim: usize) -> Self {
        Self::with_variant(Variant::PucciPlus, alpha, a, big_a, dim)
    }

    pub fn pucci_minus(alpha: f64, a: f64, big_a: f64, dim: usize) -> Self {
        Self::with_variant(Variant::PucciMinus, alpha, a, big_a, dim)
    }

    pub fn alpha_laplacian(alpha: f64, dim: usize) -> Self {
        let (a, b) = induced_bounds(Variant::AlphaLaplacian, alpha, 1.0, 0.0).unwrap();
        Self::with_variant(Variant::AlphaLaplacian, alpha, a, b, dim)
    }

    pub fn trace_normal_mix(alpha: f64, p1: f64, p2: f64, dim: usize) -> Self {
        let (a, b) = induced_bounds(Variant::TraceNormalMix, alpha, p1, p2).unwrap();
        Self {
            p1,
            p2,
            ..Self::with_variant(Variant::TraceNormalMix, alpha, a, b, dim)
        }
    }

    fn with_variant(variant: Variant, alpha: f64, a: f64, big_a: f64, dim: usize) -> Self {
        Self {
            alpha,
            lower: a,
            upper: big_a,
            dim,
            variant,
            p1: 1.0,
            p2: 0.0,
            nu: None,
            kappa: None,
        }
    }

    pub fn with_gradient_modulus(mut self, nu: f64, kappa: f64) -> Self {
        self.nu = Some(nu);
        self.kappa = Some(kappa);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(self.alpha.is_finite() && self.alpha > -1.0) {
            return bad(format!("alpha = {} must exceed -1", self.alpha));
        }
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower > 0.0) {
            return bad(format!("a = {} must be positive", self.lower));
        }
        if self.upper < self.lower {
            return bad(format!("A = {} must be at least a = {}", self.upper, self.lower));
        }
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if self.variant == Variant::TraceNormalMix && !(self.p1 > 0.0 && self.p1 + self.p2 > 0.0) {
            return bad(format!("need p1 > 0 and p1 + p2 > 0, got p1 = {}, p2 = {}", self.p1, self.p2));
        }
        if let Some((a, b)) = induced_bounds(self.variant, self.alpha, self.p1, self.p2) {
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y.abs().max(1.0);
            if !(close(self.lower, a) && close(self.upper, b)) {
                return bad(format!(
                    "{:?} induces (a, A) = ({a}, {b}), spec has ({}, {})",
                    self.variant, self.lower, self.upper
                ));
            }
        }
        if let Some(nu) = self.nu {
            if !(nu > 0.0 && nu.is_finite()) {
                return bad(format!("nu = {nu} must be positive"));
            }
        }
        if let Some(kappa) = self.kappa {
            if !(kappa > 0.5 && kappa <= 1.0) {
                return bad(format!("kappa = {kappa} must lie in (1/2, 1]"));
            }
        }
        if self.nu.is_some() != self.kappa.is_some() {
            return bad("nu and kappa must be given together".into());
        }
        Ok(())
    }

    /// The solvers only handle the degenerate range `alpha >= 0`.
    pub fn validate_for_solver(&self) -> Result<()> {
        self.validate()?;
        if self.alpha < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "alpha = {} < 0 is not supported by the solver",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Spec of the dual operator `G[v] = -F[-v]`.
    pub fn dual(&self) -> Self {
        let variant = match self.variant {
            Variant::PucciPlus => Variant::PucciMinus,
            Variant::PucciMinus => Variant::PucciPlus,
            v => v,
        };
        Self {
            variant,
            ..self.clone()
        }
    }

    /// Slope `k_m` of the radial term at `x = |q|^α m`. Ties go to the `A` branch.
    pub fn radial_slope(&self, x: f64) -> f64 {
        match self.variant {
            Variant::PucciPlus => {
                if x >= 0.0 {
                    self.upper
                } else {
                    self.lower
                }
            }
            Variant::PucciMinus => {
                if x > 0.0 {
                    self.lower
                } else {
                    self.upper
                }
            }
            Variant::AlphaLaplacian => 1.0 + self.alpha,
            Variant::TraceNormalMix => self.p1 + self.p2,
        }
    }

    /// Slope `k_t` of each tangential term at `y = |q|^α q / r`.
    pub fn tangential_slope(&self, y: f64) -> f64 {
        match self.variant {
            Variant::PucciPlus | Variant::PucciMinus => self.radial_slope(y),
            Variant::AlphaLaplacian => 1.0,
            Variant::TraceNormalMix => self.p1,
        }
    }

    /// Bounds `(min, max)` of the radial and tangential slopes.
    pub fn slope_ranges(&self) -> ((f64, f64), (f64, f64)) {
        match self.variant {
            Variant::PucciPlus | Variant::PucciMinus => {
                ((self.lower, self.upper), (self.lower, self.upper))
            }
            Variant::AlphaLaplacian => ((1.0 + self.alpha, 1.0 + self.alpha), (1.0, 1.0)),
            Variant::TraceNormalMix => ((self.p1 + self.p2, self.p1 + self.p2), (self.p1, self.p1)),
        }
    }

    /// `F` on a radial configuration given separately by the gradient component
    /// along `e_r` and the two Hessian eigenvalues.
    pub fn eval_parts(&self, grad: f64, radial_eig: f64, tangential_eig: f64) -> f64 {
        let weight = grad.abs().powf(self.alpha);
        let x = weight * radial_eig;
        let y = weight * tangential_eig;
        let tangential = if self.dim > 1 {
            (self.dim - 1) as f64 * self.tangential_slope(y) * y
        } else {
            0.0
        };
        self.radial_slope(x) * x + tangential
    }

    pub fn eval_radial(&self, jet: RadialJet) -> Result<f64> {
        if !(jet.r > 0.0) {
            return Err(Error::NonPositiveRadius(jet.r));
        }
        self.validate()?;
        Ok(self.eval_parts(jet.q, jet.m, jet.q / jet.r))
    }

    /// `(M⁻, M⁺)` envelopes of `H` built from `(a, A)`, both times `|q|^α`.
    pub fn sandwich_bounds(&self, jet: RadialJet) -> Result<(f64, f64)> {
        if !(jet.r > 0.0) {
            return Err(Error::NonPositiveRadius(jet.r));
        }
        self.validate()?;
        let weight = jet.q.abs().powf(self.alpha);
        let tang = jet.q / jet.r;
        let n1 = (self.dim - 1) as f64;
        let (a, big_a) = (self.lower, self.upper);
        let pos = |x: f64| x.max(0.0);
        let neg = |x: f64| (-x).max(0.0);
        let lower = a * (pos(jet.m) + n1 * pos(tang)) - big_a * (neg(jet.m) + n1 * neg(tang));
        let upper = big_a * (pos(jet.m) + n1 * pos(tang)) - a * (neg(jet.m) + n1 * neg(tang));
        Ok((weight * lower, weight * upper))
    }

    /// A gradient modulus `ν` that makes the gradient-Hölder hypothesis hold
    /// for radial perturbations with exponent `kappa`, measuring `|M|` by
    /// the largest absolute Hessian eigenvalue.
    pub fn gradient_modulus(&self, kappa: f64) -> f64 {
        let alpha = self.alpha.max(0.0);
        let lip = if alpha >= 1.0 {
            alpha * 1.5f64.powf(alpha - 1.0)
        } else {
            alpha * 0.5f64.powf(alpha - 1.0)
        };
        let (_, (_, kt_max)) = self.slope_ranges();
        let ((_, km_max), _) = self.slope_ranges();
        let g_bound = km_max + (self.dim - 1) as f64 * kt_max;
        (lip * g_bound * 2f64.powf(kappa - 1.0)).max(f64::EPSILON)
    }
}

pub fn eval_radial(op: &OperatorSpec, jet: RadialJet) -> Result<f64> {
    op.eval_radial(jet)
}

pub fn sandwich_bounds(op: &OperatorSpec, jet: RadialJet) -> Result<(f64, f64)> {
    op.sandwich_bounds(jet)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn signed_log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let v = log_uniform(rng, lo, hi);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

const SAMPLE_LO: f64 = 1e-6;
const SAMPLE_HI: f64 = 1e6;
const HYPOTHESIS_TOL: f64 = 1e-10;

struct Worst {
    violation: f64,
    location: f64,
}

impl Worst {
    fn new() -> Self {
        Self {
            violation: 0.0,
            location: f64::NAN,
        }
    }

    fn record(&mut self, violation: f64, location: f64) {
        if violation > self.violation || violation.is_nan() {
            self.violation = violation;
            self.location = location;
        }
    }

    fn check(&self, name: &str) -> Check {
        let location = if self.location.is_nan() { 0.0 } else { self.location };
        Check::new(name, location, -self.violation, HYPOTHESIS_TOL)
    }
}

/// Samples radial configurations and reports the worst relative violation of
/// the homogeneity (`H1`), ellipticity (`H2`) and, when `nu`/`kappa` are
/// set, gradient-Hölder (`H4`) hypotheses. Margins are `-violation`; a check
/// passes when the violation stays below `1e-10`.
pub fn validate_hypotheses(op: &OperatorSpec, sample_count: usize, seed: u64) -> Result<VerificationReport> {
    op.validate()?;
    if sample_count == 0 {
        return Err(Error::InvalidSpec("sample_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n1 = (op.dim - 1) as f64;
    let (a, big_a) = (op.lower, op.upper);
    let mut h1 = Worst::new();
    let mut h2 = Worst::new();
    let mut h4 = Worst::new();

    for _ in 0..sample_count {
        let r = log_uniform(&mut rng, SAMPLE_LO, SAMPLE_HI);
        let q = signed_log_uniform(&mut rng, SAMPLE_LO, SAMPLE_HI);
        let m = signed_log_uniform(&mut rng, SAMPLE_LO, SAMPLE_HI);
        let tang = q / r;
        let weight = q.abs().powf(op.alpha);
        let magnitude = weight * big_a * (m.abs() + n1 * tang.abs());

        // H1: gradient scaled by t, Hessian by mu.
        let t = log_uniform(&mut rng, SAMPLE_LO, SAMPLE_HI);
        let mu = log_uniform(&mut rng, SAMPLE_LO, SAMPLE_HI);
        let base = op.eval_parts(q, m, tang);
        let scaled = op.eval_parts(t * q, mu * m, mu * tang);
        let expected = t.powf(op.alpha) * mu * base;
        let scale = (t.powf(op.alpha) * mu * magnitude).max(f64::MIN_POSITIVE);
        h1.record((scaled - expected).abs() / scale, r);

        // H2: nonnegative increment of the Hessian along the radial and/or
        // tangential eigendirections.
        let (s_rad, s_tan) = match rng.gen_range(0..3) {
            0 => (log_uniform(&mut rng, SAMPLE_LO, SAMPLE_HI), 0.0),
            1 => (0.0, log_uniform(&mut rng, SAMPLE_LO, SAMPLE_HI)),
            _ => (
                log_uniform(&mut rng, SAMPLE_LO, SAMPLE_HI),
                log_uniform(&mut rng, SAMPLE_LO, SAMPLE_HI),
            ),
        };
        let trace = s_rad + n1 * s_tan;
        let diff = op.eval_parts(q, m + s_rad, tang + s_tan) - base;
        let lo = a * weight * trace;
        let hi = big_a * weight * trace;
        let scale = (weight * big_a * (m.abs() + s_rad + n1 * (tang.abs() + s_tan))).max(f64::MIN_POSITIVE);
        let violation = (lo - diff).max(diff - hi).max(0.0) / scale;
        h2.record(violation, r);

        // H4 at |p| = 1 with a radial perturbation |delta| <= 1/2.
        if let (Some(nu), Some(kappa)) = (op.nu, op.kappa) {
            let p = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let delta: f64 = rng.gen_range(-0.5..=0.5);
            let lhs = (op.eval_parts(p + delta, m, tang) - op.eval_parts(p, m, tang)).abs();
            let norm = m.abs().max(tang.abs());
            let rhs = nu * delta.abs().powf(kappa) * norm;
            let scale = rhs.max(big_a * (m.abs() + n1 * tang.abs())).max(f64::MIN_POSITIVE);
            h4.record((lhs - rhs).max(0.0) / scale, r);
        }
    }

    let mut report = VerificationReport::new(format!(
        "relative violation <= {HYPOTHESIS_TOL:e} over {sample_count} log-uniform samples in [1e-6, 1e6]"
    ));
    report.push(h1.check("H1"));
    report.push(h2.check("H2"));
    if op.nu.is_some() {
        report.push(h4.check("H4"));
    }
    Ok(report)
}

/// Profile sampled or evaluated in closed form.
pub trait AnalyticProfile {
    fn value(&self, r: f64) -> f64;
    fn slope(&self, r: f64) -> f64;

    fn sample(&self, grid: &RadialGrid) -> DiscreteRadialFunction {
        let values = grid.nodes().iter().map(|&r| self.value(r)).collect();
        DiscreteRadialFunction::new(grid.clone(), values).expect("grid-sized sample")
    }
}

/// `u(r) = r^{(α+2)/(α+1)}`, solving `|∇u|^α M⁺(D²u) = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PucciPowerProfile {
    pub exponent: f64,
    pub c: f64,
}

impl AnalyticProfile for PucciPowerProfile {
    fn value(&self, r: f64) -> f64 {
        r.powf(self.exponent)
    }

    fn slope(&self, r: f64) -> f64 {
        self.exponent * r.powf(self.exponent - 1.0)
    }
}

/// Returns the exponent `(α+2)/(α+1)` and the constant `c` for which
/// `r^{exponent}` solves the PucciPlus equation.
pub fn closed_form_pucci_power(op: &OperatorSpec) -> Result<(f64, f64)> {
    op.validate_for_solver()?;
    if op.variant != Variant::PucciPlus {
        return Err(Error::InvalidSpec(format!(
            "closed-form power solution needs PucciPlus, got {:?}",
            op.variant
        )));
    }
    let alpha = op.alpha;
    let exponent = (alpha + 2.0) / (alpha + 1.0);
    let c = exponent.powf(alpha + 1.0) * op.upper * (1.0 / (1.0 + alpha) + (op.dim as f64 - 1.0));
    Ok((exponent, c))
}

pub fn pucci_power_profile(op: &OperatorSpec) -> Result<PucciPowerProfile> {
    let (exponent, c) = closed_form_pucci_power(op)?;
    Ok(PucciPowerProfile { exponent, c })
}

/// Radial solution of `div(|∇g|^α ∇g) = c` with `g(0) = 0`, `g'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaLaplacianProfile {
    pub alpha: f64,
    pub dim: usize,
    pub c: f64,
}

impl AnalyticProfile for AlphaLaplacianProfile {
    fn value(&self, r: f64) -> f64 {
        let a = self.alpha;
        let amp = (self.c.abs() / self.dim as f64).powf(1.0 / (1.0 + a));
        self.c.signum() * (1.0 + a) / (2.0 + a) * amp * r.powf((2.0 + a) / (1.0 + a))
    }

    fn slope(&self, r: f64) -> f64 {
        let a = self.alpha;
        self.c.signum() * (self.c.abs() * r / self.dim as f64).powf(1.0 / (1.0 + a))
    }
}

pub fn closed_form_alpha_laplacian(op: &OperatorSpec, c: f64) -> Result<AlphaLaplacianProfile> {
    op.validate_for_solver()?;
    if op.variant != Variant::AlphaLaplacian {
        return Err(Error::InvalidSpec(format!(
            "closed-form alpha-Laplacian profile needs AlphaLaplacian, got {:?}",
            op.variant
        )));
    }
    if !c.is_finite() {
        return Err(Error::InvalidSpec(format!("c = {c} must be finite")));
    }
    Ok(AlphaLaplacianProfile {
        alpha: op.alpha,
        dim: op.dim,
        c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grading;
    use proptest::prelude::*;

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i][i]).collect()
    }

    /// Gradient and Hessian of `g(|x|)` at a generic point of norm `r`.
    fn dense_jet(dim: usize, r: f64, q: f64, m: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let raw: Vec<f64> = (0..dim).map(|i| 0.3 + 0.7 * i as f64).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x: Vec<f64> = raw.iter().map(|v| v / norm * r).collect();
        let grad = x.iter().map(|xi| q * xi / r).collect();
        let hess = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        let xx = x[i] * x[j] / (r * r);
                        let delta = if i == j { 1.0 } else { 0.0 };
                        m * xx + q / r * (delta - xx)
                    })
                    .collect()
            })
            .collect();
        (grad, hess)
    }

    fn dense_pucci(plus: bool, a: f64, big_a: f64, alpha: f64, grad: &[f64], hess: Vec<Vec<f64>>) -> f64 {
        let eig = jacobi_eigenvalues(hess);
        let pos: f64 = eig.iter().map(|e| e.max(0.0)).sum();
        let neg: f64 = eig.iter().map(|e| (-e).max(0.0)).sum();
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let m = if plus { big_a * pos - a * neg } else { a * pos - big_a * neg };
        norm.powf(alpha) * m
    }

    /// `|p|^α (p1 tr(M) + p2 <M p̂, p̂>)` from the dense jet.
    fn dense_trace_normal(p1: f64, p2: f64, alpha: f64, grad: &[f64], hess: &[Vec<f64>]) -> f64 {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let dir: Vec<f64> = grad.iter().map(|g| g / norm).collect();
        let trace: f64 = (0..grad.len()).map(|i| hess[i][i]).sum();
        let normal: f64 = (0..grad.len())
            .flat_map(|i| (0..grad.len()).map(move |j| (i, j)))
            .map(|(i, j)| hess[i][j] * dir[i] * dir[j])
            .sum();
        norm.powf(alpha) * (p1 * trace + p2 * normal)
    }

    #[test]
    fn pucci_plus_matches_dense_hessian() {
        let op = OperatorSpec::pucci_plus(0.0, 1.0, 2.0, 3);
        let v = op.eval_radial(RadialJet::new(1.0, 2.0, -1.0)).unwrap();
        let (grad, hess) = dense_jet(3, 1.0, 2.0, -1.0);
        let dense = dense_pucci(true, 1.0, 2.0, 0.0, &grad, hess);
        assert!((dense - 7.0).abs() < 1e-12);
        assert_eq!(v, 7.0);
    }

    #[test]
    fn degenerate_factor_kills_zero_gradient() {
        for op in [
            OperatorSpec::pucci_plus(1.0, 1.0, 2.0, 3),
            OperatorSpec::pucci_minus(1.0, 1.0, 2.0, 3),
            OperatorSpec::alpha_laplacian(1.0, 3),
            OperatorSpec::trace_normal_mix(1.0, 1.0, 0.5, 3),
        ] {
            assert_eq!(op.eval_radial(RadialJet::new(0.7, 0.0, 5.0)).unwrap(), 0.0);
        }
    }

    #[test]
    fn alpha_laplacian_expansion() {
        let op = OperatorSpec::alpha_laplacian(2.0, 2);
        assert_eq!(op.eval_radial(RadialJet::new(1.0, 1.0, 1.0)).unwrap(), 4.0);
        let (grad, hess) = dense_jet(2, 1.0, 1.0, 1.0);
        let dense = dense_trace_normal(1.0, 2.0, 2.0, &grad, &hess);
        assert!((dense - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_radius_is_rejected() {
        let op = OperatorSpec::pucci_plus(1.0, 1.0, 2.0, 2);
        assert!(matches!(
            op.eval_radial(RadialJet::new(0.0, 1.0, 1.0)),
            Err(Error::NonPositiveRadius(_))
        ));
        assert!(matches!(
            op.sandwich_bounds(RadialJet::new(-1.0, 1.0, 1.0)),
            Err(Error::NonPositiveRadius(_))
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut op = OperatorSpec::pucci_plus(1.0, 2.0, 1.0, 2);
        assert!(matches!(op.eval_radial(RadialJet::new(1.0, 1.0, 1.0)), Err(Error::InvalidSpec(_))));
        op = OperatorSpec::trace_normal_mix(1.0, 1.0, -1.5, 2);
        assert!(op.validate().is_err());
        op = OperatorSpec::alpha_laplacian(1.0, 2);
        op.upper = 5.0;
        assert!(op.validate().is_err());
        op = OperatorSpec::pucci_plus(1.0, 1.0, 2.0, 2).with_gradient_modulus(1.0, 0.4);
        assert!(op.validate().is_err());
    }

    #[test]
    fn sandwich_examples() {
        let op = OperatorSpec::pucci_plus(0.0, 1.0, 2.0, 2);
        let jet = RadialJet::new(1.0, 1.0, 1.0);
        let (lo, hi) = op.sandwich_bounds(jet).unwrap();
        let v = op.eval_radial(jet).unwrap();
        assert_eq!(v, 4.0);
        assert!(lo <= v && v <= hi);

        let op = OperatorSpec::alpha_laplacian(2.0, 2);
        let (lo, hi) = op.sandwich_bounds(jet).unwrap();
        assert!(lo <= 4.0 && 4.0 <= hi);

        let op = OperatorSpec::pucci_minus(1.0, 1.0, 3.0, 4);
        assert_eq!(op.sandwich_bounds(RadialJet::new(1.0, 0.0, 3.0)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn closed_form_constants() {
        let (e, c) = closed_form_pucci_power(&OperatorSpec::pucci_plus(1.0, 1.0, 2.0, 2)).unwrap();
        assert_eq!(e, 1.5);
        assert!((c - 6.75).abs() < 1e-14);
        let (e, c) = closed_form_pucci_power(&OperatorSpec::pucci_plus(0.0, 1.0, 1.0, 1)).unwrap();
        assert_eq!((e, c), (2.0, 2.0));
        // r^2 in N = 1: u'' = 2, no tangential term.
        let op = OperatorSpec::pucci_plus(0.0, 1.0, 1.0, 1);
        assert_eq!(op.eval_radial(RadialJet::new(0.3, 0.6, 2.0)).unwrap(), 2.0);
        let op = OperatorSpec::pucci_plus(0.0, 1.0, 1.0, 3);
        let (_, c) = closed_form_pucci_power(&op).unwrap();
        assert_eq!(c, 6.0);
        assert_eq!(op.eval_radial(RadialJet::new(0.5, 1.0, 2.0)).unwrap(), 6.0);
        assert!(closed_form_pucci_power(&OperatorSpec::alpha_laplacian(1.0, 2)).is_err());
    }

    #[test]
    fn closed_form_pucci_profile_reproduces_c_on_a_fine_grid() {
        for alpha in [0.0, 0.5, 1.0, 2.0, 4.0] {
            for dim in [1, 2, 3] {
                let op = OperatorSpec::pucci_plus(alpha, 1.0, 2.0, dim);
                let prof = pucci_power_profile(&op).unwrap();
                let beta = prof.exponent;
                for k in 0..1000 {
                    let r = 1e-3 + (1.0 - 1e-3) * k as f64 / 999.0;
                    let q = prof.slope(r);
                    let m = beta * (beta - 1.0) * r.powf(beta - 2.0);
                    let h = op.eval_radial(RadialJet::new(r, q, m)).unwrap();
                    assert!(((h - prof.c) / prof.c).abs() < 1e-10, "alpha {alpha} dim {dim} r {r}: {h}");
                }
            }
        }
    }

    #[test]
    fn alpha_laplacian_profiles() {
        let op = OperatorSpec::alpha_laplacian(0.0, 2);
        let p = closed_form_alpha_laplacian(&op, 4.0).unwrap();
        for r in [0.1, 0.5, 0.9] {
            assert!((p.value(r) - r * r).abs() < 1e-15);
        }
        let op = OperatorSpec::alpha_laplacian(2.0, 1);
        let p = closed_form_alpha_laplacian(&op, 1.0).unwrap();
        for r in [0.1, 0.5, 0.9] {
            assert!((p.slope(r) - r.powf(1.0 / 3.0)).abs() < 1e-15);
            assert!((p.value(r) - 0.75 * r.powf(4.0 / 3.0)).abs() < 1e-15);
        }
        let p = closed_form_alpha_laplacian(&OperatorSpec::alpha_laplacian(3.0, 2), 0.0).unwrap();
        assert_eq!(p.value(0.7), 0.0);
        assert!(closed_form_alpha_laplacian(&OperatorSpec::pucci_plus(1.0, 1.0, 1.0, 2), 1.0).is_err());
    }

    #[test]
    fn alpha_laplacian_profile_satisfies_the_radial_equation() {
        // (r^{N-1} |g'|^α g')' = c r^{N-1}, checked through eval_radial.
        for (alpha, dim, c) in [(1.0, 2, 3.0), (2.0, 3, -1.5), (0.5, 1, 2.0)] {
            let op = OperatorSpec::alpha_laplacian(alpha, dim);
            let p = closed_form_alpha_laplacian(&op, c).unwrap();
            for r in [0.2, 0.5, 0.8] {
                let h = 1e-5;
                let m = (p.slope(r + h) - p.slope(r - h)) / (2.0 * h);
                let v = op.eval_radial(RadialJet::new(r, p.slope(r), m)).unwrap();
                assert!((v - c).abs() < 1e-6 * c.abs().max(1.0), "{v} vs {c}");
            }
            let grid = RadialGrid::ball(1.0, 8, Grading::Uniform).unwrap();
            assert_eq!(p.sample(&grid).values()[0], 0.0);
        }
    }

    #[test]
    fn trace_normal_mix_ellipticity_window() {
        let op = OperatorSpec::trace_normal_mix(0.0, 1.0, -0.5, 3);
        assert_eq!((op.lower, op.upper), (0.5, 1.0));
        let jet = RadialJet::new(0.8, 1.0, 0.3);
        let base = op.eval_radial(jet).unwrap();
        let inc = op.eval_radial(RadialJet { m: 1.3, ..jet }).unwrap() - base;
        assert!((inc - 0.5).abs() < 1e-14);
        assert!(inc >= op.lower - 1e-14 && inc <= op.upper + 1e-14);
        let report = validate_hypotheses(&op, 2000, 3).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn hypotheses_hold_for_every_variant() {
        for alpha in [0.0, 0.5, 1.0, 4.0] {
            for op in [
                OperatorSpec::pucci_plus(alpha, 1.0, 2.0, 3),
                OperatorSpec::pucci_minus(alpha, 0.5, 3.0, 2),
                OperatorSpec::alpha_laplacian(alpha, 4),
                OperatorSpec::trace_normal_mix(alpha, 1.0, -0.5, 2),
            ] {
                let op = op.clone().with_gradient_modulus(op.gradient_modulus(0.75), 0.75);
                let report = validate_hypotheses(&op, 2000, 11).unwrap();
                assert_eq!(report.checks.len(), 3);
                assert!(report.passed(), "{:?} alpha {alpha}: {report:?}", op.variant);
            }
        }
    }

    #[test]
    fn too_small_gradient_modulus_is_reported() {
        let op = OperatorSpec::pucci_plus(2.0, 1.0, 2.0, 2).with_gradient_modulus(1e-3, 1.0);
        let report = validate_hypotheses(&op, 500, 1).unwrap();
        assert!(!report.worst("H4").unwrap().pass);
        assert!(validate_hypotheses(&op, 0, 1).is_err());
    }

    #[test]
    fn json_round_trip_and_keys() {
        let op = OperatorSpec::pucci_plus(1.0, 1.0, 2.0, 2);
        let v = serde_json::to_value(&op).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["A", "a", "alpha", "dim", "p1", "p2", "variant"]);
        let back: OperatorSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, op);

        let with_h4 = op.with_gradient_modulus(2.0, 0.75);
        let text = serde_json::to_string(&with_h4).unwrap();
        assert!(text.contains("\"nu\":2.0") && text.contains("\"kappa\":0.75"));

        let lap: OperatorSpec =
            serde_json::from_str(r#"{"alpha": 2.0, "dim": 1, "variant": "AlphaLaplacian"}"#).unwrap();
        assert_eq!((lap.lower, lap.upper), (1.0, 3.0));
        assert!(serde_json::from_str::<OperatorSpec>(r#"{"alpha": 1.0, "dim": 2, "variant": "PucciPlus"}"#).is_err());
    }

    #[test]
    fn dual_of_pucci_plus_is_pucci_minus() {
        let op = OperatorSpec::pucci_plus(1.0, 1.0, 2.0, 2);
        assert_eq!(op.dual().variant, Variant::PucciMinus);
        assert_eq!(op.dual().dual(), op);
        let lap = OperatorSpec::alpha_laplacian(1.0, 2);
        assert_eq!(lap.dual(), lap);
    }

    fn variants(alpha: f64, dim: usize) -> Vec<OperatorSpec> {
        vec![
            OperatorSpec::pucci_plus(alpha, 0.7, 2.3, dim),
            OperatorSpec::pucci_minus(alpha, 0.7, 2.3, dim),
            OperatorSpec::alpha_laplacian(alpha, dim),
            OperatorSpec::trace_normal_mix(alpha, 1.2, -0.4, dim),
            OperatorSpec::trace_normal_mix(alpha, 0.8, 0.9, dim),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn sandwich_holds(
            r in 1e-3f64..10.0,
            q in -50.0f64..50.0,
            m in -50.0f64..50.0,
            alpha in 0.0f64..4.0,
            dim in 1usize..5,
        ) {
            for op in variants(alpha, dim) {
                let jet = RadialJet::new(r, q, m);
                let v = op.eval_radial(jet).unwrap();
                let (lo, hi) = op.sandwich_bounds(jet).unwrap();
                // Envelopes and value can agree exactly, so rounding is
                // measured against the size of the summed terms.
                let terms = q.abs().powf(alpha) * op.upper * (m.abs() + (dim - 1) as f64 * (q / r).abs());
                let slack = 1e-12 * v.abs().max(1.0).max(terms);
                prop_assert!(lo - v <= slack, "{:?}: lo {} > v {}", op.variant, lo, v);
                prop_assert!(v - hi <= slack, "{:?}: v {} > hi {}", op.variant, v, hi);
            }
        }
    }

    proptest! {
        #[test]
        fn pucci_duality(r in 1e-3f64..10.0, q in -50.0f64..50.0, m in -50.0f64..50.0, alpha in 0.0f64..3.0) {
            let plus = OperatorSpec::pucci_plus(alpha, 0.5, 2.0, 3);
            let minus = OperatorSpec::pucci_minus(alpha, 0.5, 2.0, 3);
            let a = minus.eval_radial(RadialJet::new(r, q, m)).unwrap();
            let b = -plus.eval_radial(RadialJet::new(r, -q, -m)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn joint_homogeneity(
            r in 1e-3f64..10.0, q in -20.0f64..20.0, m in -20.0f64..20.0,
            t in 1e-3f64..1e3, mu in 1e-3f64..1e3, alpha in 0.0f64..3.0,
        ) {
            for op in variants(alpha, 3) {
                let tang = q / r;
                let lhs = op.eval_parts(t * q, mu * m, mu * tang);
                let rhs = t.powf(alpha) * mu * op.eval_parts(q, m, tang);
                let scale = t.powf(alpha) * mu * q.abs().powf(alpha) * op.upper * (m.abs() + 2.0 * tang.abs());
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
            }
        }

        #[test]
        fn matches_dense_oracles(
            r in 0.05f64..5.0, q in -5.0f64..5.0, m in -5.0f64..5.0,
            alpha in 0.0f64..3.0, dim in 1usize..5,
        ) {
            prop_assume!(q.abs() > 1e-3);
            let (grad, hess) = dense_jet(dim, r, q, m);
            let jet = RadialJet::new(r, q, m);
            let plus = OperatorSpec::pucci_plus(alpha, 0.7, 2.3, dim);
            let minus = OperatorSpec::pucci_minus(alpha, 0.7, 2.3, dim);
            let lap = OperatorSpec::alpha_laplacian(alpha, dim);
            let mix = OperatorSpec::trace_normal_mix(alpha, 1.2, -0.4, dim);
            let cases = [
                (plus.eval_radial(jet).unwrap(), dense_pucci(true, 0.7, 2.3, alpha, &grad, hess.clone())),
                (minus.eval_radial(jet).unwrap(), dense_pucci(false, 0.7, 2.3, alpha, &grad, hess.clone())),
                (lap.eval_radial(jet).unwrap(), dense_trace_normal(1.0, alpha, alpha, &grad, &hess)),
                (mix.eval_radial(jet).unwrap(), dense_trace_normal(1.2, -0.4, alpha, &grad, &hess)),
            ];
            for (fast, dense) in cases {
                prop_assert!((fast - dense).abs() <= 1e-9 * dense.abs().max(1.0), "{} vs {}", fast, dense);
            }
        }
    }
}
