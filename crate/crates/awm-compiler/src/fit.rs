//! Spline fitting: knot lists to forward-difference segment words.
//!
//! Knots are interpolated with a natural cubic spline (zero second
//! derivative at both ends), each knot interval becomes one segment, and
//! the per-interval polynomial is converted to integer forward differences
//! by rounding. Segment starts hit their knot values exactly; between
//! knots the integer engine replays the rounded-coefficient polynomial.

use crate::gates::ParamSpec;
use awm_sequencer::codec::{SegmentMeta, SplineSegmentWord, COEFF_MAX, COEFF_MIN};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FitError {
    #[error("{field} = {value:.1} on knot interval [{start}, {end}) overflows the 40-bit lane")]
    CoefficientOverflow {
        field: &'static str,
        value: f64,
        start: u64,
        end: u64,
    },
    #[error("knot list invalid: {0}")]
    BadKnots(&'static str),
}

fn round_coeff(
    field: &'static str,
    value: f64,
    interval: (u64, u64),
) -> Result<i64, FitError> {
    let rounded = value.round();
    if rounded < COEFF_MIN as f64 || rounded > COEFF_MAX as f64 {
        return Err(FitError::CoefficientOverflow {
            field,
            value,
            start: interval.0,
            end: interval.1,
        });
    }
    Ok(rounded as i64)
}

/// Second derivatives of the natural cubic spline through `(x, y)`,
/// via the standard tridiagonal solve.
fn natural_spline_m(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let interior = n - 2;
    let mut diag = vec![0.0; interior];
    let mut upper = vec![0.0; interior];
    let mut rhs = vec![0.0; interior];
    for i in 0..interior {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
    }
    // Thomas algorithm; the lower diagonal equals the previous interval's h
    for i in 1..interior {
        let lower = x[i + 1] - x[i];
        let w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m[interior] = rhs[interior - 1] / diag[interior - 1];
    for i in (1..interior).rev() {
        m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
    }
    m
}

/// Fit one parameter over `duration` cycles into spline segment words.
///
/// Constants compile to a single segment with the higher-order coefficients
/// zero. Knot lists produce one segment per interval; the caller is
/// responsible for knot-list validity (see `GateDefinition::validate`).
pub fn fit_segments(
    spec: &ParamSpec,
    duration: u64,
    meta: SegmentMeta,
) -> Result<Vec<SplineSegmentWord>, FitError> {
    match spec {
        ParamSpec::Constant { constant } => {
            let value = round_coeff("u0", *constant, (0, duration))?;
            Ok(vec![SplineSegmentWord::constant(meta, duration, value)])
        }
        ParamSpec::Knots { knots } => {
            if knots.len() < 2 {
                return Err(FitError::BadKnots("need at least two knots"));
            }
            let x: Vec<f64> = knots.iter().map(|k| k.0 as f64).collect();
            let y: Vec<f64> = knots.iter().map(|k| k.1).collect();
            let m = natural_spline_m(&x, &y);
            let mut segments = Vec::with_capacity(knots.len() - 1);
            for i in 0..knots.len() - 1 {
                let interval = (knots[i].0, knots[i + 1].0);
                let h = x[i + 1] - x[i];
                let c = m[i] / 2.0;
                let d = (m[i + 1] - m[i]) / (6.0 * h);
                let b = (y[i + 1] - y[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0;
                // forward differences of a + b s + c s^2 + d s^3 at unit step
                let u0 = y[i];
                let u1 = b + c + d;
                let u2 = 2.0 * c + 6.0 * d;
                let u3 = 6.0 * d;
                segments.push(SplineSegmentWord {
                    meta,
                    tau: interval.1 - interval.0,
                    u0: round_coeff("u0", u0, interval)?,
                    u1: round_coeff("u1", u1, interval)?,
                    u2: round_coeff("u2", u2, interval)?,
                    u3: round_coeff("u3", u3, interval)?,
                });
            }
            Ok(segments)
        }
    }
}
