use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadratureError {
    #[error("integrand is not finite at t = {at}")]
    NonFinite { at: f64 },
    #[error("tolerance {tol:e} not reached on [{a}, {b}] (estimate {estimate})")]
    NotConverged {
        a: f64,
        b: f64,
        tol: f64,
        estimate: f64,
    },
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute tolerance `tol`.
///
/// `b < a` is allowed and flips the sign. Each accepted panel gets the
/// Richardson correction `(S₂ − S₁)/15`.
pub fn quadrature<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let mut eval = |t: f64| {
        let v = f(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite { at: t })
        }
    };
    let fa = eval(a)?;
    let fb = eval(b)?;
    let m = 0.5 * (a + b);
    let fm = eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let panel = Panel { a, b, fa, fm, fb, whole };
    refine(&mut eval, panel, tol.abs(), MAX_DEPTH).map_err(|e| match e {
        QuadratureError::NotConverged { estimate, .. } => QuadratureError::NotConverged {
            a,
            b,
            tol,
            estimate,
        },
        other => other,
    })
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn refine<F: FnMut(f64) -> Result<f64, QuadratureError>>(
    eval: &mut F,
    p: Panel,
    tol: f64,
    depth: u32,
) -> Result<f64, QuadratureError> {
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    let sum = left + right;
    let delta = sum - p.whole;
    // Relative floor keeps tolerances near round-off from recursing forever.
    let floor = 64.0 * f64::EPSILON * sum.abs();
    if delta.abs() <= 15.0 * tol.max(floor) {
        return Ok(sum + delta / 15.0);
    }
    if depth == 0 || lm == p.a || rm == p.b {
        return Err(QuadratureError::NotConverged {
            a: p.a,
            b: p.b,
            tol,
            estimate: sum,
        });
    }
    let l = refine(
        eval,
        Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left },
        0.5 * tol,
        depth - 1,
    )?;
    let r = refine(
        eval,
        Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right },
        0.5 * tol,
        depth - 1,
    )?;
    Ok(l + r)
}
