//! Gamma function for positive arguments.

use crate::math::{exp, powf, sqrt};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `Γ(x)` for `x > 0` via the Lanczos approximation (`g = 7`, nine terms).
///
/// Arguments below one half are lifted with `Γ(x) = Γ(x+1)/x`, so no
/// reflection formula is involved. Returns NaN for `x <= 0`.
pub fn gamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x < 0.5 {
        return gamma(x + 1.0) / x;
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    sqrt(2.0 * core::f64::consts::PI) * powf(t, z + 0.5) * exp(-t) * acc
}
