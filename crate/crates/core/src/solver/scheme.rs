//! Flux-form monotone discretization of `H(r, u'', u') = f`.
//!
//! The regularized flux `Φ = ψ_ε(u')` with `ψ_ε(s) = (s² + ε²)^{α/2} s` is
//! evaluated on each cell from one-sided slopes. At an interior node
//!
//! ```text
//! X = (Φ₊ - Φ₋) / (Δ (1 + α)) ≈ |u'|^α u''
//! Y ≈ |u'|^α u'
//! H = k_m(X) X + (N - 1) k_t(Y) Y / r
//! ```
//!
//! `Y` is the centered average of the two cell fluxes where that keeps the
//! scheme monotone and the forward cell flux otherwise.

use crate::error::{Error, Result};
use crate::grid::{Domain, RadialGrid};
use crate::operators::OperatorSpec;

use super::banded::Banded;

pub(crate) struct Scheme<'a> {
    op: &'a OperatorSpec,
    nodes: &'a [f64],
    ball: bool,
    bc_inner: f64,
    bc_outer: f64,
    centered: Vec<bool>,
    origin: [f64; 3],
}

/// `(ψ_ε(s), ψ_ε'(s))`.
pub(crate) fn regularized_flux(s: f64, eps: f64, alpha: f64) -> (f64, f64) {
    if alpha == 0.0 {
        return (s, 1.0);
    }
    let w = s * s + eps * eps;
    if w == 0.0 {
        return (0.0, 0.0);
    }
    let p = w.powf(alpha / 2.0);
    (p * s, p * ((1.0 + alpha) * s * s + eps * eps) / w)
}

pub(crate) fn check_spans(dom: &Domain, grid: &RadialGrid) -> Result<()> {
    let scale = dom.outer.abs().max(1.0);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * scale;
    if !close(grid.first(), dom.inner) || !close(grid.last(), dom.outer) {
        return Err(Error::GridMismatch(format!(
            "grid spans [{}, {}] but the domain is [{}, {}]",
            grid.first(),
            grid.last(),
            dom.inner,
            dom.outer
        )));
    }
    if grid.cells() < 2 {
        return Err(Error::GridMismatch("need at least one interior node".into()));
    }
    Ok(())
}

impl<'a> Scheme<'a> {
    pub fn new(op: &'a OperatorSpec, dom: &Domain, grid: &'a RadialGrid) -> Result<Self> {
        op.validate_for_solver()?;
        dom.validate()?;
        check_spans(dom, grid)?;
        let nodes = grid.nodes();
        let n = nodes.len() - 1;
        let ((km_min, _), (_, kt_max)) = op.slope_ranges();
        let rho = (1.0 + op.alpha) * kt_max / km_min;
        let n1 = (op.dim - 1) as f64;
        let centered = (0..=n)
            .map(|i| {
                if i == 0 || i == n {
                    return true;
                }
                let hp = nodes[i + 1] - nodes[i];
                nodes[i] >= rho * n1 * hp / 2.0
            })
            .collect();
        let (h1, h2) = (nodes[1] - nodes[0], nodes[2] - nodes[1]);
        let origin = [
            -(2.0 * h1 + h2) / (h1 * (h1 + h2)),
            (h1 + h2) / (h1 * h2),
            -h1 / (h2 * (h1 + h2)),
        ];
        Ok(Self {
            op,
            nodes,
            ball: dom.is_ball(),
            bc_inner: dom.bc_inner,
            bc_outer: dom.bc_outer,
            centered,
            origin,
        })
    }

    /// Residual of every row; fills the active-branch Jacobian when requested.
    pub fn evaluate(&self, u: &[f64], f: &[f64], eps: f64, mut jac: Option<&mut Banded>) -> Vec<f64> {
        let n = self.nodes.len() - 1;
        let mut res = vec![0.0; n + 1];
        if let Some(j) = jac.as_deref_mut() {
            j.clear();
        }

        if self.ball {
            let [c0, c1, c2] = self.origin;
            res[0] = c0 * u[0] + c1 * u[1] + c2 * u[2];
            if let Some(j) = jac.as_deref_mut() {
                j.set(0, 0, c0);
                j.set(0, 1, c1);
                j.set(0, 2, c2);
            }
        } else {
            res[0] = u[0] - self.bc_inner;
            if let Some(j) = jac.as_deref_mut() {
                j.set(0, 0, 1.0);
            }
        }
        res[n] = u[n] - self.bc_outer;
        if let Some(j) = jac.as_deref_mut() {
            j.set(n, n, 1.0);
        }

        let alpha = self.op.alpha;
        let n1 = (self.op.dim - 1) as f64;
        for i in 1..n {
            let r = self.nodes[i];
            let hm = r - self.nodes[i - 1];
            let hp = self.nodes[i + 1] - r;
            let (phim, dphim) = regularized_flux((u[i] - u[i - 1]) / hm, eps, alpha);
            let (phip, dphip) = regularized_flux((u[i + 1] - u[i]) / hp, eps, alpha);
            let delta = 0.5 * (hm + hp) * (1.0 + alpha);
            let x = (phip - phim) / delta;
            let km = self.op.radial_slope(x);
            let mut h = km * x;
            let mut d_plus = km * dphip / (hp * delta);
            let mut d_minus = km * dphim / (hm * delta);
            if n1 > 0.0 {
                let (y, dy_plus, dy_minus) = if self.centered[i] {
                    let w = hm + hp;
                    (
                        (hm * phip + hp * phim) / w,
                        hm * dphip / (hp * w),
                        -hp * dphim / (hm * w),
                    )
                } else {
                    (phip, dphip / hp, 0.0)
                };
                let ct = n1 * self.op.tangential_slope(y) / r;
                h += ct * y;
                d_plus += ct * dy_plus;
                d_minus += ct * dy_minus;
            }
            res[i] = h - f[i];
            if let Some(j) = jac.as_deref_mut() {
                j.set(i, i - 1, d_minus);
                j.set(i, i + 1, d_plus);
                j.set(i, i, -(d_plus + d_minus));
            }
        }
        res
    }

    /// Sets the boundary rows to hold exactly.
    pub fn impose_boundary(&self, u: &mut [f64]) {
        let n = u.len() - 1;
        u[n] = self.bc_outer;
        if self.ball {
            let [c0, c1, c2] = self.origin;
            u[0] = -(c1 * u[1] + c2 * u[2]) / c0;
        } else {
            u[0] = self.bc_inner;
        }
    }

    /// First interior row whose linearization breaks the M-matrix sign
    /// pattern or zero row sum.
    pub fn monotonicity_violation(&self, jac: &Banded) -> Option<usize> {
        let n = self.nodes.len() - 1;
        (1..n).find(|&i| {
            let (lo, di, hi) = (jac.get(i, i - 1), jac.get(i, i), jac.get(i, i + 1));
            let size = lo.abs() + di.abs() + hi.abs();
            lo < 0.0 || hi < 0.0 || di > 0.0 || (lo + di + hi).abs() > 1e-12 * size
        })
    }
}
