//! Radial meshes, sampled profiles, difference quotients and derivative numbers.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    Ball,
    Annulus,
}

/// Ball `[0, R)` or annulus `(R1, R)` with Dirichlet data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    #[serde(rename = "R")]
    pub outer: f64,
    #[serde(rename = "R1", default)]
    pub inner: f64,
    #[serde(default)]
    pub bc_inner: f64,
    pub bc_outer: f64,
}

impl Domain {
    pub fn ball(radius: f64, bc_outer: f64) -> Self {
        Self {
            kind: DomainKind::Ball,
            outer: radius,
            inner: 0.0,
            bc_inner: 0.0,
            bc_outer,
        }
    }

    pub fn annulus(inner: f64, outer: f64, bc_inner: f64, bc_outer: f64) -> Self {
        Self {
            kind: DomainKind::Annulus,
            outer,
            inner,
            bc_inner,
            bc_outer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.outer.is_finite() && self.outer > 0.0) {
            return Err(Error::InvalidSpec(format!("R = {} must be positive", self.outer)));
        }
        if !(self.bc_inner.is_finite() && self.bc_outer.is_finite()) {
            return Err(Error::InvalidSpec("boundary data must be finite".into()));
        }
        match self.kind {
            DomainKind::Ball if self.inner != 0.0 => {
                Err(Error::InvalidSpec(format!("a ball has R1 = 0, got {}", self.inner)))
            }
            DomainKind::Annulus if !(self.inner > 0.0 && self.inner < self.outer) => Err(Error::InvalidSpec(
                format!("annulus needs 0 < R1 < R, got R1 = {}, R = {}", self.inner, self.outer),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_ball(&self) -> bool {
        self.kind == DomainKind::Ball
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Grading {
    #[default]
    Uniform,
    GradedAtOrigin,
}

/// Exponent of the graded mesh `r_i = R1 + (R - R1) (i/n)^γ`.
pub const GRADING_EXPONENT: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    grading: Grading,
}

impl RadialGrid {
    /// `n + 1` nodes spanning the closure of `dom`.
    pub fn new(dom: &Domain, n: usize, grading: Grading) -> Result<Self> {
        dom.validate()?;
        if n < 2 {
            return Err(Error::InvalidSpec(format!("grid needs at least 2 cells, got {n}")));
        }
        let (lo, hi) = (dom.inner, dom.outer);
        let nodes = (0..=n)
            .map(|i| {
                if i == n {
                    return hi;
                }
                let t = i as f64 / n as f64;
                let t = match grading {
                    Grading::Uniform => t,
                    Grading::GradedAtOrigin => t.powf(GRADING_EXPONENT),
                };
                lo + (hi - lo) * t
            })
            .collect();
        Self::from_nodes(nodes, grading)
    }

    pub fn ball(radius: f64, n: usize, grading: Grading) -> Result<Self> {
        Self::new(&Domain::ball(radius, 0.0), n, grading)
    }

    pub fn from_nodes(nodes: Vec<f64>, grading: Grading) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidSpec("a grid needs at least two nodes".into()));
        }
        if nodes.iter().any(|r| !r.is_finite()) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSpec("grid nodes must be finite and strictly increasing".into()));
        }
        Ok(Self { nodes, grading })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    /// Number of cells `n`; nodes are indexed `0..=n`.
    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Width of cell `[r_i, r_{i+1}]`.
    pub fn cell(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.cells()).map(|i| self.cell(i)).fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.cells()).map(|i| self.cell(i)).fold(f64::INFINITY, f64::min)
    }

    /// Largest cell adjacent to `r`.
    pub fn local_spacing(&self, r: f64) -> f64 {
        let k = self.cell_index(r);
        let mut h = self.cell(k);
        let at_left_node = (r - self.nodes[k]).abs() <= 1e-12 * self.last().abs().max(1.0);
        if at_left_node && k > 0 {
            h = h.max(self.cell(k - 1));
        }
        let at_right_node = (r - self.nodes[k + 1]).abs() <= 1e-12 * self.last().abs().max(1.0);
        if at_right_node && k + 1 < self.cells() {
            h = h.max(self.cell(k + 1));
        }
        h
    }

    /// Index `k` of the cell `[r_k, r_{k+1}]` containing `r` (clamped).
    pub fn cell_index(&self, r: f64) -> usize {
        let k = self.nodes.partition_point(|&x| x <= r);
        k.saturating_sub(1).min(self.cells() - 1)
    }

    pub fn nearest_node(&self, r: f64) -> usize {
        let k = self.cell_index(r);
        if (r - self.nodes[k]).abs() <= (self.nodes[k + 1] - r).abs() {
            k
        } else {
            k + 1
        }
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.first() && r <= self.last()
    }
}

/// Grid samples of a radial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteRadialFunction {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl DiscreteRadialFunction {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Piecewise-linear interpolant.
    pub fn interpolate(&self, s: f64) -> Result<f64> {
        if !self.grid.contains(s) {
            return Err(Error::OutsideDomain(s));
        }
        let k = self.grid.cell_index(s);
        let (r0, r1) = (self.grid.nodes[k], self.grid.nodes[k + 1]);
        let t = (s - r0) / (r1 - r0);
        Ok(self.values[k] + t * (self.values[k + 1] - self.values[k]))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["r", "u"])?;
        for (r, u) in self.grid.nodes().iter().zip(&self.values) {
            w.write_record([format!("{r:.16e}"), format!("{u:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, grading: Grading) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["r", "u"] {
            return Err(Error::Config(format!("expected header r,u, got {headers:?}")));
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse = |k: usize| -> Result<f64> {
                record[k]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad number {:?}", &record[k])))
            };
            nodes.push(parse(0)?);
            values.push(parse(1)?);
        }
        Self::new(RadialGrid::from_nodes(nodes, grading)?, values)
    }
}

/// Centered first and second difference quotients `(q, m)` at interior node `i`,
/// exact for quadratics on nonuniform meshes.
pub fn difference_quotients(u: &DiscreteRadialFunction, i: usize) -> Result<(f64, f64)> {
    let nodes = u.nodes();
    if i == 0 || i + 1 >= nodes.len() {
        return Err(Error::BoundaryIndex(i));
    }
    let v = u.values();
    let hm = nodes[i] - nodes[i - 1];
    let hp = nodes[i + 1] - nodes[i];
    let dp = v[i + 1] - v[i];
    let dm = v[i] - v[i - 1];
    let q = (hm * hm * dp + hp * hp * dm) / (hm * hp * (hm + hp));
    let m = 2.0 * (dp / hp - dm / hm) / (hm + hp);
    Ok((q, m))
}

/// Finite surrogate for the four one-sided Dini derivatives at `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeNumbers {
    pub lambda_g: f64,
    #[serde(rename = "Lambda_g")]
    pub upper_lambda_g: f64,
    pub lambda_d: f64,
    #[serde(rename = "Lambda_d")]
    pub upper_lambda_d: f64,
    pub window: f64,
    pub scales: usize,
    /// Set when one side had no probes inside the domain and copies the other.
    pub one_sided: bool,
}

impl DerivativeNumbers {
    pub fn spread(&self) -> f64 {
        let hi = self.upper_lambda_g.max(self.upper_lambda_d);
        let lo = self.lambda_g.min(self.lambda_d);
        hi - lo
    }

    pub fn min_abs(&self) -> f64 {
        [self.lambda_g, self.upper_lambda_g, self.lambda_d, self.upper_lambda_d]
            .iter()
            .fold(f64::INFINITY, |acc, v| acc.min(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        [self.lambda_g, self.upper_lambda_g, self.lambda_d, self.upper_lambda_d]
            .iter()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Probes `(u(s) - u(r)) / (s - r)` at `s = r ± window 2^{-k}`, `k < scales`,
/// with linear interpolation off the nodes, and takes min/max per side.
pub fn derivative_numbers(u: &DiscreteRadialFunction, r: f64, window: f64, scales: usize) -> Result<DerivativeNumbers> {
    let grid = u.grid();
    if !grid.contains(r) {
        return Err(Error::OutsideDomain(r));
    }
    if scales < 2 {
        return Err(Error::InvalidSpec(format!("scales = {scales} must be at least 2")));
    }
    let spacing = grid.local_spacing(r);
    if !(window >= 2.0 * spacing) {
        return Err(Error::WindowTooSmall { window, spacing });
    }
    let base = u.interpolate(r)?;
    let side = |sign: f64| -> Option<(f64, f64)> {
        let quotients: Vec<f64> = (0..scales)
            .map(|k| r + sign * window * 0.5f64.powi(k as i32))
            .filter(|&s| grid.contains(s) && s != r)
            .map(|s| (u.interpolate(s).expect("probe inside grid") - base) / (s - r))
            .collect();
        if quotients.is_empty() {
            return None;
        }
        let lo = quotients.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = quotients.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    };
    let (left, right, one_sided) = match (side(-1.0), side(1.0)) {
        (Some(l), Some(r)) => (l, r, false),
        (Some(l), None) => (l, l, true),
        (None, Some(r)) => (r, r, true),
        (None, None) => return Err(Error::OutsideDomain(r)),
    };
    Ok(DerivativeNumbers {
        lambda_g: left.0,
        upper_lambda_g: left.1,
        lambda_d: right.0,
        upper_lambda_d: right.1,
        window,
        scales,
        one_sided,
    })
}

/// `w(p, q, r)(s) = u(r) + p (s - r) + q/2 (s - r)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Paraboloid {
    pub p: f64,
    pub q: f64,
    pub anchor_r: f64,
    pub anchor_value: f64,
}

impl Paraboloid {
    pub fn eval(&self, s: f64) -> f64 {
        let d = s - self.anchor_r;
        self.anchor_value + self.p * d + 0.5 * self.q * d * d
    }
}

pub fn paraboloid_eval(w: &Paraboloid, s: f64) -> f64 {
    w.eval(s)
}

/// Largest slope over adjacent node pairs.
pub fn lipschitz_constant(u: &DiscreteRadialFunction) -> f64 {
    u.nodes()
        .windows(2)
        .zip(u.values().windows(2))
        .map(|(r, v)| ((v[1] - v[0]) / (r[1] - r[0])).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(lo: f64, hi: f64, n: usize) -> RadialGrid {
        let nodes = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        RadialGrid::from_nodes(nodes, Grading::Uniform).unwrap()
    }

    #[test]
    fn graded_grid_shape() {
        let g = RadialGrid::ball(1.0, 100, Grading::GradedAtOrigin).unwrap();
        assert_eq!(g.first(), 0.0);
        assert_eq!(g.last(), 1.0);
        assert!((g.nodes()[1] - 1e-3).abs() < 1e-15);
        assert!(g.cell(0) < g.cell(99));
        let a = RadialGrid::new(&Domain::annulus(0.1, 1.0, 0.0, 0.0), 10, Grading::Uniform).unwrap();
        assert_eq!(a.first(), 0.1);
        assert!((a.cell(3) - 0.09).abs() < 1e-15);
    }

    #[test]
    fn domain_invariants() {
        assert!(Domain::ball(1.0, 0.0).validate().is_ok());
        assert!(Domain::annulus(0.0, 1.0, 0.0, 0.0).validate().is_err());
        assert!(Domain::annulus(1.0, 1.0, 0.0, 0.0).validate().is_err());
        let mut d = Domain::ball(1.0, 0.0);
        d.inner = 0.5;
        assert!(d.validate().is_err());
        assert!(Domain::ball(-1.0, 0.0).validate().is_err());
        let json = serde_json::to_string(&Domain::annulus(0.1, 1.0, 2.0, 3.0)).unwrap();
        assert!(json.contains("\"kind\":\"Annulus\"") && json.contains("\"R1\":0.1"));
    }

    #[test]
    fn quotients_of_linear_and_quadratic() {
        let g = uniform(0.0, 1.0, 10);
        let lin = DiscreteRadialFunction::from_fn(&g, |r| r).unwrap();
        let sq = DiscreteRadialFunction::from_fn(&g, |r| r * r).unwrap();
        for i in 1..10 {
            let (q, m) = difference_quotients(&lin, i).unwrap();
            assert!((q - 1.0).abs() < 1e-12 && m.abs() < 1e-10);
            let (q, m) = difference_quotients(&sq, i).unwrap();
            let r = g.nodes()[i];
            assert!((q - 2.0 * r).abs() < 1e-12 && (m - 2.0).abs() < 1e-10);
        }
        assert!(matches!(difference_quotients(&lin, 0), Err(Error::BoundaryIndex(0))));
        assert!(matches!(difference_quotients(&lin, 10), Err(Error::BoundaryIndex(10))));
    }

    #[test]
    fn cubic_quotients_on_uniform_grid() {
        let h = 0.125;
        let g = uniform(0.0, 1.0, 8);
        let u = DiscreteRadialFunction::from_fn(&g, |r| r * r * r).unwrap();
        for i in 1..8 {
            let r = g.nodes()[i];
            let (q, m) = difference_quotients(&u, i).unwrap();
            assert!((q - (3.0 * r * r + h * h)).abs() < 1e-13);
            assert!((m - 6.0 * r).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratics_exact_on_graded_grid() {
        let g = RadialGrid::ball(2.0, 37, Grading::GradedAtOrigin).unwrap();
        let u = DiscreteRadialFunction::from_fn(&g, |r| 3.0 * r * r - r + 1.0).unwrap();
        for i in 1..37 {
            let r = g.nodes()[i];
            let (q, m) = difference_quotients(&u, i).unwrap();
            assert!((q - (6.0 * r - 1.0)).abs() < 1e-9, "{q}");
            assert!((m - 6.0).abs() < 1e-7, "{m}");
        }
    }

    #[test]
    fn derivative_numbers_of_a_kink() {
        let g = uniform(0.0, 2.0, 2000);
        let u = DiscreteRadialFunction::from_fn(&g, |s| (s - 1.0).abs()).unwrap();
        let d = derivative_numbers(&u, 1.0, 0.1, 6).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() < 1e-9;
        assert!(close(d.lambda_g, -1.0) && close(d.upper_lambda_g, -1.0));
        assert!(close(d.lambda_d, 1.0) && close(d.upper_lambda_d, 1.0));
        assert!((d.spread() - 2.0).abs() < 1e-9);
        assert!(!d.one_sided);
    }

    #[test]
    fn derivative_numbers_smooth_and_constant() {
        let g = uniform(0.0, 1.0, 1000);
        let u = DiscreteRadialFunction::from_fn(&g, |s| s * s).unwrap();
        let d = derivative_numbers(&u, 0.5, 0.1, 6).unwrap();
        for v in [d.lambda_g, d.upper_lambda_g, d.lambda_d, d.upper_lambda_d] {
            assert!((v - 1.0).abs() <= 0.1 + 1e-12);
        }
        let c = DiscreteRadialFunction::from_fn(&g, |_| 4.0).unwrap();
        let d = derivative_numbers(&c, 0.5, 0.1, 6).unwrap();
        assert_eq!(
            [d.lambda_g, d.upper_lambda_g, d.lambda_d, d.upper_lambda_d],
            [0.0; 4]
        );
    }

    #[test]
    fn derivative_numbers_at_the_origin_are_one_sided() {
        let g = uniform(0.0, 1.0, 100);
        let u = DiscreteRadialFunction::from_fn(&g, |s| s).unwrap();
        let d = derivative_numbers(&u, 0.0, 0.1, 4).unwrap();
        assert!(d.one_sided);
        assert_eq!(d.lambda_g, d.lambda_d);
        assert_eq!(d.upper_lambda_g, d.upper_lambda_d);
    }

    #[test]
    fn derivative_number_errors() {
        let g = uniform(0.0, 1.0, 10);
        let u = DiscreteRadialFunction::from_fn(&g, |s| s).unwrap();
        assert!(matches!(
            derivative_numbers(&u, 0.5, 0.15, 3),
            Err(Error::WindowTooSmall { .. })
        ));
        assert!(matches!(derivative_numbers(&u, 1.5, 0.5, 3), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn sine_spread_is_small() {
        let g = uniform(0.0, 1.0, 10_000);
        let u = DiscreteRadialFunction::from_fn(&g, f64::sin).unwrap();
        for r in [0.1, 0.3, 0.5, 0.9] {
            let d = derivative_numbers(&u, r, 1e-2, 6).unwrap();
            assert!(d.spread() <= 1e-2, "{}", d.spread());
            assert!(d.upper_lambda_g >= d.lambda_d - 1e-9);
        }
    }

    #[test]
    fn paraboloid_examples() {
        let w = Paraboloid { p: 0.0, q: 0.0, anchor_r: 0.3, anchor_value: 1.5 };
        assert_eq!(paraboloid_eval(&w, 7.0), 1.5);
        let w = Paraboloid { p: 1.0, q: 0.0, anchor_r: 0.0, anchor_value: 0.0 };
        assert_eq!(paraboloid_eval(&w, 2.0), 2.0);
        let w = Paraboloid { p: 2.0, q: 4.0, anchor_r: 1.0, anchor_value: 3.0 };
        assert_eq!(paraboloid_eval(&w, 1.5), 4.5);
        // The centered second difference recovers q at any spacing.
        for h in [0.3, 0.01, 1e-3] {
            let m = (w.eval(1.0 + h) - 2.0 * w.eval(1.0) + w.eval(1.0 - h)) / (h * h);
            assert!((m - 4.0).abs() < 1e-6);
        }
    }

    #[test]
    fn lipschitz_examples() {
        let g = uniform(0.0, 1.0, 10);
        assert!((lipschitz_constant(&DiscreteRadialFunction::from_fn(&g, |r| 3.0 * r).unwrap()) - 3.0).abs() < 1e-12);
        assert_eq!(lipschitz_constant(&DiscreteRadialFunction::from_fn(&g, |_| 2.0).unwrap()), 0.0);
        let sq = DiscreteRadialFunction::from_fn(&g, |r| r * r).unwrap();
        assert!((lipschitz_constant(&sq) - 1.9).abs() < 1e-12);
        let mut prev = 0.0;
        for n in [10, 20, 40, 80] {
            let l = lipschitz_constant(&DiscreteRadialFunction::from_fn(&uniform(0.0, 1.0, n), |r| r * r).unwrap());
            assert!(l >= prev);
            prev = l;
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = RadialGrid::ball(1.0, 20, Grading::GradedAtOrigin).unwrap();
        let u = DiscreteRadialFunction::from_fn(&g, |r| (3.0 * r).sin() / 7.0).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("r,u\n"));
        assert_eq!(text.lines().count(), 22);
        let back = DiscreteRadialFunction::read_csv(buf.as_slice(), Grading::GradedAtOrigin).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn construction_errors() {
        let g = uniform(0.0, 1.0, 4);
        assert!(matches!(DiscreteRadialFunction::new(g.clone(), vec![0.0; 3]), Err(Error::GridMismatch(_))));
        assert!(DiscreteRadialFunction::new(g, vec![0.0, 1.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(RadialGrid::from_nodes(vec![0.0, 0.5, 0.5], Grading::Uniform).is_err());
        let u = DiscreteRadialFunction::from_fn(&uniform(0.0, 1.0, 4), |r| r).unwrap();
        assert!(matches!(u.interpolate(1.1), Err(Error::OutsideDomain(_))));
        assert!((u.interpolate(0.3).unwrap() - 0.3).abs() < 1e-15);
    }
}
