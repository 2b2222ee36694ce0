use super::RngStream;
use crate::error::{Error, Result};

/// Slack allowed on an allocation row before it is rejected.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// One categorical draw over `row` (offline index, probability) plus NONE with
/// the residual mass. Rows summing to at most 1 + tolerance are renormalized.
pub fn sample_assignment(row: &[(usize, f64)], rng: &mut RngStream) -> Result<Option<usize>> {
    let mut sum = 0.0;
    for &(_, x) in row {
        if !(x >= 0.0) {
            return Err(Error::InfeasibleMarginals {
                sum: x,
                tol: ROW_TOLERANCE,
            });
        }
        sum += x;
    }
    if sum > 1.0 + ROW_TOLERANCE {
        return Err(Error::InfeasibleMarginals {
            sum,
            tol: ROW_TOLERANCE,
        });
    }
    let scale = if sum > 1.0 { sum } else { 1.0 };
    let u = rng.uniform() * scale;
    let mut acc = 0.0;
    for &(i, x) in row {
        acc += x;
        if u < acc {
            return Ok(Some(i));
        }
    }
    Ok(None)
}
