//! Certification of regularity, flux and viscosity properties on discrete
//! radial profiles.

mod flux;
mod regularity;
mod viscosity;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{difference_quotients, lipschitz_constant, DiscreteRadialFunction};
use crate::operators::OperatorSpec;
use crate::solver::Solution;

pub use flux::verify_flux_inequalities;
pub use regularity::{c1_bound_check, c1_modulus_report, holder_exponent, HolderEstimate};
pub use viscosity::check_viscosity;

/// `x⁺/a - x⁻/A`.
pub fn epsilon_aa(x: f64, a: f64, big_a: f64) -> Result<f64> {
    if !(a > 0.0 && big_a > 0.0) {
        return Err(Error::InvalidSpec(format!("need a, A > 0, got a = {a}, A = {big_a}")));
    }
    Ok(x.max(0.0) / a - (-x).max(0.0) / big_a)
}

/// `γ = (A/a)(N-1)(1+α)`.
pub fn gamma_exponent(op: &OperatorSpec) -> f64 {
    op.upper / op.lower * gamma_one(op)
}

/// `γ₁ = (N-1)(1+α)`.
pub fn gamma_one(op: &OperatorSpec) -> f64 {
    (op.dim - 1) as f64 * (1.0 + op.alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

/// Maximal run of interior nodes where the centered derivative exceeds the
/// threshold with a fixed sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignInterval {
    pub lo: f64,
    pub hi: f64,
    pub sign: Sign,
    pub threshold: f64,
    /// Node indices of the run, inclusive.
    pub first: usize,
    pub last: usize,
}

/// Centered quotients `(q_i, m_i)` at interior nodes; boundary entries are 0.
pub(crate) fn quotients(u: &DiscreteRadialFunction) -> (Vec<f64>, Vec<f64>) {
    let n = u.nodes().len();
    let mut q = vec![0.0; n];
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        let (qi, mi) = difference_quotients(u, i).expect("interior node");
        q[i] = qi;
        m[i] = mi;
    }
    (q, m)
}

pub fn sign_intervals(u: &DiscreteRadialFunction, threshold: f64) -> Vec<SignInterval> {
    let (q, _) = quotients(u);
    let nodes = u.nodes();
    let n = nodes.len();
    let sign_of = |v: f64| {
        if v > threshold {
            Some(Sign::Positive)
        } else if v < -threshold {
            Some(Sign::Negative)
        } else {
            None
        }
    };
    let mut out = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        let Some(s) = sign_of(q[i]) else {
            i += 1;
            continue;
        };
        let start = i;
        while i + 1 < n - 1 && sign_of(q[i + 1]) == Some(s) {
            i += 1;
        }
        if i - start + 1 >= 3 {
            out.push(SignInterval {
                lo: nodes[start],
                hi: nodes[i],
                sign: s,
                threshold,
                first: start,
                last: i,
            });
        }
        i += 1;
    }
    out
}

/// `max(10 eps_final, h) (1 + Lip(u))`, the level below which the sign of
/// the discrete derivative is treated as noise.
pub fn default_threshold(sol: &Solution) -> f64 {
    let h = sol.grid().max_spacing();
    (10.0 * sol.eps_final).max(h) * (1.0 + lipschitz_constant(&sol.u))
}

/// Discrete zeros of `u'`: the origin of a ball, plus one node per sign
/// change (or run of exact zeros) of the centered derivative.
pub fn discrete_zeros(u: &DiscreteRadialFunction) -> Vec<f64> {
    let (q, _) = quotients(u);
    let nodes = u.nodes();
    let n = nodes.len();
    let mut zeros = Vec::new();
    if nodes[0] == 0.0 {
        zeros.push(0.0);
    }
    let mut i = 1;
    while i < n - 1 {
        if q[i] == 0.0 {
            zeros.push(nodes[i]);
            while i < n - 1 && q[i] == 0.0 {
                i += 1;
            }
            continue;
        }
        if i + 1 < n - 1 && q[i + 1] != 0.0 && q[i].signum() != q[i + 1].signum() {
            let k = if q[i].abs() <= q[i + 1].abs() { i } else { i + 1 };
            zeros.push(nodes[k]);
        }
        i += 1;
    }
    zeros.dedup();
    zeros
}

/// Node index of a discrete zero of `u'` at `r_star`: the origin of a ball,
/// or a node with `|q| < h` or a sign change of `q` across it.
pub(crate) fn zero_index(u: &DiscreteRadialFunction, r_star: f64) -> Result<usize> {
    let grid = u.grid();
    if !grid.contains(r_star) {
        return Err(Error::OutsideDomain(r_star));
    }
    let i = grid.nearest_node(r_star);
    let nodes = u.nodes();
    if i == 0 && nodes[0] == 0.0 {
        return Ok(0);
    }
    let h = grid.max_spacing();
    let n = nodes.len();
    if i == 0 || i == n - 1 {
        let slope = if i == 0 {
            (u.values()[1] - u.values()[0]) / (nodes[1] - nodes[0])
        } else {
            (u.values()[i] - u.values()[i - 1]) / (nodes[i] - nodes[i - 1])
        };
        return if slope.abs() < h {
            Ok(i)
        } else {
            Err(Error::NotAZero { r_star, q: slope })
        };
    }
    let (q, _) = difference_quotients(u, i)?;
    let crosses = (i > 1 && i + 2 < n) && {
        let (ql, _) = difference_quotients(u, i - 1)?;
        let (qr, _) = difference_quotients(u, i + 1)?;
        ql.signum() != qr.signum() || ql.signum() != q.signum() || q.signum() != qr.signum()
    };
    if q.abs() < h || crosses {
        Ok(i)
    } else {
        Err(Error::NotAZero { r_star, q })
    }
}
