use crate::error::{Error, Result};
use crate::operators::OperatorSpec;
use crate::report::{Check, VerificationReport};

use super::{Solution, SourceFunction};

/// Checks `u <= v + tol` at every non-Dirichlet node for solutions with
/// forcing `fu >= fv` and ordered boundary data; `tol` is ten times the
/// larger residual of the two inputs. A grid starting at `r = 0` is a ball,
/// whose origin is not a Dirichlet node.
pub fn comparison_oracle(
    u: &Solution,
    v: &Solution,
    op: &OperatorSpec,
    fu: &SourceFunction,
    fv: &SourceFunction,
) -> Result<VerificationReport> {
    op.validate()?;
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch("comparison needs both solutions on one grid".into()));
    }
    let nodes = u.u.nodes();
    let (uv, vv) = (u.u.values(), v.u.values());
    let n = nodes.len() - 1;
    let dirichlet: Vec<usize> = if nodes[0] == 0.0 { vec![n] } else { vec![0, n] };
    for &i in &dirichlet {
        if uv[i] > vv[i] {
            return Err(Error::PreconditionViolated(format!(
                "boundary ordering fails at r = {}: {} > {}",
                nodes[i], uv[i], vv[i]
            )));
        }
    }
    if let Some(i) = (0..=n).find(|&i| fu.eval(nodes[i]) < fv.eval(nodes[i])) {
        return Err(Error::PreconditionViolated(format!("fu < fv at r = {}", nodes[i])));
    }

    let tol = 10.0 * u.residual_sup.max(v.residual_sup);
    let (mut worst, mut at) = (f64::INFINITY, nodes[0]);
    for i in (0..=n).filter(|i| !dirichlet.contains(i)) {
        let margin = vv[i] - uv[i];
        if margin < worst {
            worst = margin;
            at = nodes[i];
        }
    }
    let mut report = VerificationReport::new(format!("u <= v + {tol:e} (10 x max residual)"));
    report.push(Check::new("comparison", at, worst, tol));
    Ok(report)
}
