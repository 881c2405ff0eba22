//! Model parameters and every closed-form object attached to the blowup
//! profile.
//!
//! With `m = 1/(p−1)` and `s = b + r²` the profile is `φ = (a/s)^m`, and
//! every other object here is a rational function of `r²` times, at most, a
//! Gaussian. Derivatives are written out by hand so that residual identities
//! are limited by rounding only.

use crate::math::{exp, powf, powi, sqrt};

/// Raised when a parameter triple is not admissible.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("coupling c = {c} outside the admissible range (0, p/d^2) = (0, {upper})")]
    Range { c: f64, upper: f64 },
    #[error("nonlinearity power p = {p} must be an odd integer >= 3")]
    Parity { p: u32 },
    #[error("dimension d = {d} must be at least 1")]
    Dimension { d: u32 },
    #[error("blowup time domain violated: t = {t} must satisfy 0 <= t < T = {big_t}")]
    Domain { t: f64, big_t: f64 },
}

/// Validated `(d, p, c)` with the profile constants `a`, `b` attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    d: u32,
    p: u32,
    c: f64,
    a: f64,
    b: f64,
}

impl ModelParams {
    /// Validates the raw triple and computes
    /// `a = (2/(p−1))·sqrt(p/c)` and `b = 2(sqrt(p/c) − d)`.
    pub fn new(d: u32, p: u32, c: f64) -> Result<Self, ModelError> {
        if d == 0 {
            return Err(ModelError::Dimension { d });
        }
        if p < 3 || p.is_multiple_of(2) {
            return Err(ModelError::Parity { p });
        }
        let upper = f64::from(p) / f64::from(d * d);
        if !(c > 0.0 && c < upper) {
            return Err(ModelError::Range { c, upper });
        }
        let root = sqrt(f64::from(p) / c);
        let a = 2.0 / f64::from(p - 1) * root;
        let b = 2.0 * (root - f64::from(d));
        // c < p/d² can still round to b == 0 right at the boundary.
        if b <= 0.0 {
            return Err(ModelError::Range { c, upper });
        }
        Ok(Self { d, p, c, a, b })
    }

    /// Shorthand for the three-dimensional problem every downstream module uses.
    pub fn three_d(p: u32, c: f64) -> Result<Self, ModelError> {
        Self::new(3, p, c)
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn pf(&self) -> f64 {
        f64::from(self.p)
    }

    /// `1/(p−1)`, the self-similar scaling exponent.
    pub fn m(&self) -> f64 {
        1.0 / (self.pf() - 1.0)
    }

    /// `p/(p−1)`, the exponent of the symmetry mode `g = (b+r²)^{−p/(p−1)}`.
    pub fn k(&self) -> f64 {
        self.pf() * self.m()
    }

    // ---- profile ---------------------------------------------------------

    /// `φ(r) = (a/(b+r²))^{1/(p−1)}`.
    pub fn phi(&self, r: f64) -> f64 {
        powf(self.a / (self.b + r * r), self.m())
    }

    /// `(φ, φ', φ'')` at `r`.
    pub fn phi_derivs(&self, r: f64) -> [f64; 3] {
        let m = self.m();
        let s = self.b + r * r;
        let phi = self.phi(r);
        let d1 = -2.0 * m * r * phi / s;
        let d2 = -2.0 * m * phi / s * (1.0 - 2.0 * (m + 1.0) * r * r / s);
        [phi, d1, d2]
    }

    /// Left side of the profile equation minus right side, using closed-form
    /// derivatives:
    /// `φ'' + ((d−1)/r)φ' − (r/2)φ' − φ/(p−1) + φ^p − c r² φ^{2p−1}`.
    pub fn profile_residual(&self, r: f64) -> f64 {
        self.profile_residual_with(r, self.a)
    }

    /// Same as [`profile_residual`](Self::profile_residual) but with the
    /// constant `a` replaced, which makes the residual visibly non-zero.
    pub fn profile_residual_with(&self, r: f64, a: f64) -> f64 {
        let m = self.m();
        let s = self.b + r * r;
        let phi = powf(a / s, m);
        let d1 = -2.0 * m * r * phi / s;
        let d2 = -2.0 * m * phi / s * (1.0 - 2.0 * (m + 1.0) * r * r / s);
        let p = self.p as i32;
        let dm1 = f64::from(self.d) - 1.0;
        d2 + dm1 / r * d1 - 0.5 * r * d1 - m * phi + powi(phi, p)
            - self.c * r * r * powi(phi, 2 * p - 1)
    }

    /// Scale of the terms entering the profile residual; used to make
    /// residual checks relative.
    pub fn profile_residual_scale(&self, r: f64) -> f64 {
        let phi = self.phi(r);
        1.0f64.max(powi(phi, self.p as i32))
    }

    // ---- linearisation ---------------------------------------------------

    /// `V = p φ^{p−1} − c(2p−1) r² φ^{2p−2}`, evaluated through
    /// `φ^{p−1} = a/(b+r²)`.
    pub fn potential_v(&self, r: f64) -> f64 {
        let w = self.a / (self.b + r * r);
        self.pf() * w - self.c * (2.0 * self.pf() - 1.0) * r * r * w * w
    }

    /// `(V, V')` at `r`.
    pub fn potential_v_derivs(&self, r: f64) -> [f64; 2] {
        let s = self.b + r * r;
        let w = self.a / s;
        let dw = -2.0 * r * w / s;
        let k2 = self.c * (2.0 * self.pf() - 1.0);
        let v = self.pf() * w - k2 * r * r * w * w;
        let dv = self.pf() * dw - k2 * (2.0 * r * w * w + 2.0 * r * r * w * dw);
        [v, dv]
    }

    /// The time-translation mode `g(r) = (b+r²)^{−p/(p−1)}`, an eigenfunction
    /// of the linearised operator with eigenvalue `1`.
    pub fn g(&self, r: f64) -> f64 {
        powf(self.b + r * r, -self.k())
    }

    /// `(g, g', g'')` at `r`.
    pub fn g_derivs(&self, r: f64) -> [f64; 3] {
        let k = self.k();
        let s = self.b + r * r;
        let g = powf(s, -k);
        let d1 = -2.0 * k * r * g / s;
        let d2 = -2.0 * k * g / s + 4.0 * k * (k + 1.0) * r * r * g / (s * s);
        [g, d1, d2]
    }

    /// `Lg − g` with `L = Δ_r − (r/2)∂_r − 1/(p−1) + V` in three
    /// dimensions.
    pub fn l_residual_on_g(&self, r: f64) -> f64 {
        let [g, d1, d2] = self.g_derivs(r);
        let lap = d2 + 2.0 / r * d1;
        lap - 0.5 * r * d1 - self.m() * g + self.potential_v(r) * g - g
    }

    /// Largest term entering [`l_residual_on_g`](Self::l_residual_on_g),
    /// floored at one.
    pub fn l_residual_scale(&self, r: f64) -> f64 {
        let [g, d1, d2] = self.g_derivs(r);
        [d2, 2.0 / r * d1, 0.5 * r * d1, self.potential_v(r) * g, g]
            .iter()
            .fold(1.0f64, |acc, t| acc.max(t.abs()))
    }

    /// `g̃(r) = e^{−r²/8} r (b+r²)^{−p/(p−1)}`, the ground state of the
    /// `ℓ = 0` radial operator (eigenvalue `−1`).
    pub fn gtilde(&self, r: f64) -> f64 {
        exp(-r * r / 8.0) * r * self.g(r)
    }

    /// Superpotential `W = −g̃'/g̃ = −1/r + r/4 + 2k r/(b+r²)` and its
    /// derivative.
    pub fn superpotential(&self, r: f64) -> [f64; 2] {
        let k = self.k();
        let s = self.b + r * r;
        let w = -1.0 / r + 0.25 * r + 2.0 * k * r / s;
        let dw = 1.0 / (r * r) + 0.25 + 2.0 * k / s - 4.0 * k * r * r / (s * s);
        [w, dw]
    }
}

/// Spatially homogeneous blowup `(T−t)^{−1/(p−1)} (p−1)^{−1/(p−1)}`.
pub fn ode_blowup(t: f64, big_t: f64, p: u32) -> Result<f64, ModelError> {
    if !(t >= 0.0 && t < big_t) {
        return Err(ModelError::Domain { t, big_t });
    }
    let pm1 = f64::from(p) - 1.0;
    Ok(powf((big_t - t) * pm1, -1.0 / pm1))
}

/// A real function of the radius with optional closed-form derivatives.
pub trait RadialFunction {
    fn value(&self, r: f64) -> f64;

    fn derivative(&self, _r: f64) -> Option<f64> {
        None
    }

    fn second_derivative(&self, _r: f64) -> Option<f64> {
        None
    }
}

/// The blowup profile `φ`.
#[derive(Debug, Clone, Copy)]
pub struct Profile(pub ModelParams);

/// The linearisation potential `V`.
#[derive(Debug, Clone, Copy)]
pub struct Potential(pub ModelParams);

/// The symmetry mode `g`.
#[derive(Debug, Clone, Copy)]
pub struct SymmetryMode(pub ModelParams);

/// The `ℓ = 0` ground state `g̃`.
#[derive(Debug, Clone, Copy)]
pub struct SusyGround(pub ModelParams);

impl RadialFunction for Profile {
    fn value(&self, r: f64) -> f64 {
        self.0.phi(r)
    }
    fn derivative(&self, r: f64) -> Option<f64> {
        Some(self.0.phi_derivs(r)[1])
    }
    fn second_derivative(&self, r: f64) -> Option<f64> {
        Some(self.0.phi_derivs(r)[2])
    }
}

impl RadialFunction for Potential {
    fn value(&self, r: f64) -> f64 {
        self.0.potential_v(r)
    }
    fn derivative(&self, r: f64) -> Option<f64> {
        Some(self.0.potential_v_derivs(r)[1])
    }
}

impl RadialFunction for SymmetryMode {
    fn value(&self, r: f64) -> f64 {
        self.0.g(r)
    }
    fn derivative(&self, r: f64) -> Option<f64> {
        Some(self.0.g_derivs(r)[1])
    }
    fn second_derivative(&self, r: f64) -> Option<f64> {
        Some(self.0.g_derivs(r)[2])
    }
}

impl RadialFunction for SusyGround {
    fn value(&self, r: f64) -> f64 {
        self.0.gtilde(r)
    }
    fn derivative(&self, r: f64) -> Option<f64> {
        // g̃' = −W g̃
        let [w, _] = self.0.superpotential(r);
        Some(-w * self.0.gtilde(r))
    }
    fn second_derivative(&self, r: f64) -> Option<f64> {
        // g̃'' = (W² − W') g̃
        let [w, dw] = self.0.superpotential(r);
        Some((w * w - dw) * self.0.gtilde(r))
    }
}

impl<F: Fn(f64) -> f64> RadialFunction for F {
    fn value(&self, r: f64) -> f64 {
        self(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p3() -> ModelParams {
        ModelParams::three_d(3, 0.3).unwrap()
    }

    fn fd1(f: impl Fn(f64) -> f64, r: f64) -> f64 {
        let h = 1e-5;
        (f(r + h) - f(r - h)) / (2.0 * h)
    }

    fn fd2(f: impl Fn(f64) -> f64, r: f64) -> f64 {
        let h = 1e-4;
        (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h)
    }

    #[test]
    fn constants_for_cubic_case() {
        let m = p3();
        assert_relative_eq!(m.a(), 10f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(m.a(), 3.162278, epsilon = 1e-6);
        assert_relative_eq!(m.b(), 0.324555, epsilon = 1e-6);
    }

    #[test]
    fn boundary_and_parity_errors() {
        assert!(matches!(
            ModelParams::new(3, 3, 1.0 / 3.0),
            Err(ModelError::Range { .. })
        ));
        assert!(matches!(
            ModelParams::new(3, 4, 0.1),
            Err(ModelError::Parity { p: 4 })
        ));
        assert!(matches!(ModelParams::new(3, 1, 0.1), Err(ModelError::Parity { .. })));
        assert!(matches!(ModelParams::new(3, 3, 0.0), Err(ModelError::Range { .. })));
        assert!(matches!(ModelParams::new(3, 3, -0.1), Err(ModelError::Range { .. })));
        assert!(matches!(ModelParams::new(3, 3, f64::NAN), Err(ModelError::Range { .. })));
        assert!(matches!(ModelParams::new(0, 3, 0.1), Err(ModelError::Dimension { .. })));
    }

    #[test]
    fn profile_at_origin() {
        assert_relative_eq!(p3().phi(0.0), 3.121_444_615_919_457, max_relative = 1e-13);
    }

    #[test]
    fn profile_tends_to_ode_constant_as_c_vanishes() {
        let target = 0.5f64.sqrt();
        let mut last = f64::INFINITY;
        for c in [1e-2, 1e-4, 1e-6] {
            let m = ModelParams::three_d(3, c).unwrap();
            let dev = (0..=50)
                .map(|i| (m.phi(0.1 * f64::from(i)) - target).abs())
                .fold(0.0, f64::max);
            assert!(dev < last);
            last = dev;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn ode_blowup_values() {
        assert_relative_eq!(ode_blowup(0.0, 1.0, 3).unwrap(), 0.707_106_781_186_547_5, max_relative = 1e-15);
        assert_relative_eq!(ode_blowup(1.0, 2.0, 5).unwrap(), 0.707_106_781_186_547_5, max_relative = 1e-15);
        assert!(ode_blowup(0.999_999, 1.0, 3).unwrap() > ode_blowup(0.9, 1.0, 3).unwrap());
        assert!(matches!(ode_blowup(1.0, 1.0, 3), Err(ModelError::Domain { .. })));
    }

    #[test]
    fn potential_values() {
        let m = p3();
        assert_relative_eq!(m.potential_v(0.0), 3.0 * m.a() / m.b(), max_relative = 1e-15);
        // independent route: evaluate φ first, then the two terms
        let phi = m.phi(1.0);
        let alt = 3.0 * phi * phi - 0.3 * 5.0 * phi.powi(4);
        assert_relative_eq!(m.potential_v(1.0), alt, max_relative = 1e-13);
        assert_relative_eq!(m.potential_v(1.0), -1.387_425_886_722_793, max_relative = 1e-12);
        for c in [1e-3, 1e-5, 1e-7] {
            let m = ModelParams::three_d(3, c).unwrap();
            assert!((m.potential_v(2.0) - 1.5).abs() < 30.0 * c.sqrt());
        }
    }

    #[test]
    fn potential_decays_like_inverse_square() {
        let m = p3();
        let bound = (0..=90)
            .map(|i| {
                let r = 10.0 + f64::from(i);
                (r * r * m.potential_v(r)).abs()
            })
            .fold(0.0, f64::max);
        assert!(bound < 10.0);
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        let m = ModelParams::three_d(5, 0.15).unwrap();
        for r in [0.3, 1.1, 2.7] {
            let [_, d1, d2] = m.phi_derivs(r);
            assert_relative_eq!(d1, fd1(|x| m.phi(x), r), max_relative = 1e-7);
            assert_relative_eq!(d2, fd2(|x| m.phi(x), r), max_relative = 1e-5);
            let [_, g1, g2] = m.g_derivs(r);
            assert_relative_eq!(g1, fd1(|x| m.g(x), r), max_relative = 1e-7);
            assert_relative_eq!(g2, fd2(|x| m.g(x), r), max_relative = 1e-5);
            let [_, dv] = m.potential_v_derivs(r);
            assert_relative_eq!(dv, fd1(|x| m.potential_v(x), r), max_relative = 1e-7);
            let w = SusyGround(m);
            assert_relative_eq!(w.derivative(r).unwrap(), fd1(|x| m.gtilde(x), r), max_relative = 1e-7);
            assert_relative_eq!(w.second_derivative(r).unwrap(), fd2(|x| m.gtilde(x), r), max_relative = 1e-5);
        }
    }

    #[test]
    fn residuals_vanish() {
        let m = p3();
        assert!(m.profile_residual(0.7).abs() < 1e-10);
        let m5 = ModelParams::three_d(5, 0.1).unwrap();
        assert!(m5.profile_residual(2.3).abs() < 1e-10);
        assert!(m.l_residual_on_g(1.0).abs() < 1e-10);
        let m52 = ModelParams::three_d(5, 0.2).unwrap();
        assert!(m52.l_residual_on_g(0.5).abs() < 1e-10);
    }

    #[test]
    fn perturbed_constant_breaks_residual() {
        let m = p3();
        let bad = m.profile_residual_with(0.7, 1.01 * m.a());
        assert!(bad.abs() > 1e-3, "{bad}");
        assert!(m.profile_residual(0.7).abs() < 1e-12 * m.profile_residual_scale(0.7));
    }

    #[test]
    fn profile_in_other_dimensions() {
        for d in [1, 2, 4] {
            let m = ModelParams::new(d, 3, 0.5 / f64::from(d * d)).unwrap();
            for r in [0.2, 1.0, 3.0] {
                assert!(m.profile_residual(r).abs() < 1e-10 * m.profile_residual_scale(r));
            }
        }
    }

    #[test]
    fn symmetry_modes() {
        let m = p3();
        assert_relative_eq!(m.g(0.0), m.b().powf(-1.5), max_relative = 1e-14);
        assert_eq!(m.gtilde(0.0), 0.0);
        assert_relative_eq!(m.gtilde(2.0), 0.134_887_147_049_247_9, max_relative = 1e-13);
        let ratio = |r: f64| m.gtilde(r) / (r * (-r * r / 8.0).exp() * m.g(r));
        for r in [0.1, 1.0, 5.0] {
            assert_relative_eq!(ratio(r), 1.0, max_relative = 1e-14);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn profile_strictly_decreasing(c in 0.01f64..0.33, r1 in 0.0f64..20.0, dr in 1e-3f64..5.0) {
                let m = ModelParams::three_d(3, c).unwrap();
                prop_assert!(m.phi(r1) > m.phi(r1 + dr));
            }

            #[test]
            fn residuals_vanish_on_log_samples(pick in 0usize..5, e in -3.0f64..1.7) {
                let (p, c) = [(3, 0.26), (3, 0.30), (3, 0.33), (5, 0.1), (5, 0.19)][pick];
                let m = ModelParams::three_d(p, c).unwrap();
                let r = 10f64.powf(e);
                prop_assert!(m.profile_residual(r).abs() <= 1e-9 * m.profile_residual_scale(r));
                prop_assert!(m.l_residual_on_g(r).abs() <= 1e-9 * m.l_residual_scale(r));
            }
        }
    }
}
