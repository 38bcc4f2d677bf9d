//! Airy function on the positive axis from its large-argument expansion.
//! Accurate to near double precision for `x >= 6`.

use std::f64::consts::PI;

use crate::numeric::integrate;

/// `(Ai(x), Ai'(x))` for `x >= 6`.
pub(crate) fn airy_ai(x: f64) -> (f64, f64) {
    debug_assert!(x >= 6.0);
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (mut u, mut su, mut sv) = (1.0, 1.0, 1.0);
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf)
            / zeta;
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        // The expansion is asymptotic; stop at its smallest term.
        if u.abs() >= last || u.abs() < 1e-18 {
            break;
        }
        last = u.abs();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        su += sign * u;
        sv += sign * v;
    }
    let pre = (-zeta).exp() / (2.0 * PI.sqrt());
    (pre / x.powf(0.25) * su, -pre * x.powf(0.25) * sv)
}

/// `int_x^inf Ai(t) dt` for `x >= 6`.
pub(crate) fn airy_tail(x: f64) -> f64 {
    let hi = x.max(6.0) + 30.0;
    integrate(|t| airy_ai(t).0, x, hi, 1e-14 * airy_ai(x).0)
}
