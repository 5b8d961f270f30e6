//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{domain, Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut impl FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x)? + f(c + x)?;
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

/// `∫_a^b f` to absolute tolerance `abs_tol`, returning the value and the
/// summed Kronrod error estimates.
pub fn integrate_adaptive(mut f: impl FnMut(f64) -> Result<f64>, a: f64, b: f64, abs_tol: f64) -> Result<(f64, f64)> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return domain(format!("integration interval must be finite with a < b, got [{a}, {b}]"));
    }
    if !(abs_tol > 0.0) {
        return domain("abs_tol must be positive");
    }
    let mut stack = vec![(a, b, abs_tol, 0u32)];
    let (mut total, mut err) = (0.0, 0.0);
    while let Some((lo, hi, tol, depth)) = stack.pop() {
        let (v, e) = gk15(&mut f, lo, hi)?;
        if e <= tol || depth >= 50 {
            if e > tol {
                return Err(Error::NoConvergence { terms: depth as usize, last_term: e });
            }
            total += v;
            err += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, tol / 2.0, depth + 1));
            stack.push((mid, hi, tol / 2.0, depth + 1));
        }
    }
    Ok((total, err))
}
