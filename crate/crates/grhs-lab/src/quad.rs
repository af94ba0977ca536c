//! Adaptive Simpson quadrature backing antiderivative profile nodes.

use crate::profile::ProfileError;

/// Default absolute tolerance for antiderivative node values.
pub const DEFAULT_TOL: f64 = 1e-12;

const MAX_DEPTH: u32 = 48;

/// Integrate `f` over `[a, b]` (either orientation) to absolute tolerance `tol`.
///
/// Integrand failures (domain violations, non-finite values) abort the whole
/// integral. Near the floating-point noise floor of the partial sums the
/// refinement stops even if `tol` was not met; callers pick tolerances with
/// that in mind.
pub fn integrate<F>(f: &mut F, a: f64, b: f64, tol: f64) -> Result<f64, ProfileError>
where
    F: FnMut(f64) -> Result<f64, ProfileError>,
{
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mid = 0.5 * (lo + hi);
    let flo = f(lo)?;
    let fmid = f(mid)?;
    let fhi = f(hi)?;
    let whole = simpson(flo, fmid, fhi, hi - lo);
    let value = refine(f, lo, flo, mid, fmid, hi, fhi, whole, tol.max(0.0), 0)?;
    Ok(sign * value)
}

fn simpson(fa: f64, fm: f64, fb: f64, width: f64) -> f64 {
    width / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    f: &mut F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, ProfileError>
where
    F: FnMut(f64) -> Result<f64, ProfileError>,
{
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let err = left + right - whole;
    // Relative floor: once the split agrees to machine precision of the
    // partial sums, further splitting only amplifies round-off.
    let floor = 1e-15 * (left.abs() + right.abs());
    if err.abs() <= 15.0 * tol.max(floor) || depth >= MAX_DEPTH {
        return Ok(left + right + err / 15.0);
    }
    let half = 0.5 * tol;
    let lv = refine(f, a, fa, lm, flm, m, fm, left, half, depth + 1)?;
    let rv = refine(f, m, fm, rm, frm, b, fb, right, half, depth + 1)?;
    Ok(lv + rv)
}
