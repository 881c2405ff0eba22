//! Upper bound on the number of negative eigenvalues of
//! `A = −d²/dr² + a/r² + b r² + V(r)` on the half line.
//!
//! For a split parameter `−1/4 < α < a` and an exponent `κ ≥ 3/2`, write
//! `Q(r) = (a − α)/r² + b r² + V(r)` and `Q₋ = max(−Q, 0)`. Then
//!
//! ```text
//! #{λ < 0} ≤ (κ−1)^{κ−1} Γ(2κ) / ((4α+1)^{κ−1/2} κ^κ Γ(κ)²) · ∫₀^∞ r^{2κ−1} Q₋(r)^κ dr.
//! ```
//!
//! Applied to the `ℓ = 1` radial operator with `α = δ − 1/4` the factor
//! `4α+1` equals `4δ`. A second normalisation with `4δ+1` in its place is
//! kept alongside; both are always available.

use alloc::vec::Vec;

use crate::math::{exp, ln, powf};
use crate::model::ModelParams;
use crate::quadrature::integrate;
use crate::special::gamma;

pub const KAPPA_MIN: f64 = 1.5;
pub const KAPPA_MAX: f64 = 5.0;

/// Relative tolerance of the bound's quadrature.
pub const QUAD_REL_TOL: f64 = 1e-10;
pub const QUAD_ABS_TOL: f64 = 1e-14;

const SCAN_LO: f64 = 1e-4;
const SCAN_HI: f64 = 1e2;
const SCAN_SAMPLES: usize = 10_000;
const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GgmtError {
    #[error("inverse-square coefficient must be nonzero and > -1/4, got {a}")]
    InverseSquare { a: f64 },
    #[error("confining coefficient must be positive, got {b}")]
    Confining { b: f64 },
    #[error("split parameter {alpha} must lie strictly inside (-1/4, {a})")]
    Split { alpha: f64, a: f64 },
    #[error("exponent kappa = {kappa} outside [1.5, 5]")]
    Kappa { kappa: f64 },
    #[error("delta = {delta} outside (0, 9/4)")]
    Delta { delta: f64 },
    #[error("a prefactor convention must be selected")]
    ConventionRequired,
    #[error("optimisation grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Normalisation of the power factor in the prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GgmtConvention {
    /// `(4α+1)^{κ−1/2}`.
    Theorem4AlphaPlus1,
    /// `(4δ+1)^{κ−1/2}` with `δ = α + 1/4`.
    Appendix4DeltaPlus1,
}

impl GgmtConvention {
    pub const BOTH: [GgmtConvention; 2] = [GgmtConvention::Theorem4AlphaPlus1, GgmtConvention::Appendix4DeltaPlus1];

    pub fn label(&self) -> &'static str {
        match self {
            GgmtConvention::Theorem4AlphaPlus1 => "THEOREM_4ALPHA_PLUS_1",
            GgmtConvention::Appendix4DeltaPlus1 => "APPENDIX_4DELTA_PLUS_1",
        }
    }

    /// The base raised to `κ − 1/2`.
    pub fn base(&self, alpha: f64) -> f64 {
        match self {
            GgmtConvention::Theorem4AlphaPlus1 => 4.0 * alpha + 1.0,
            GgmtConvention::Appendix4DeltaPlus1 => 4.0 * (alpha + 0.25) + 1.0,
        }
    }
}

/// Operator data and split parameters.
#[derive(Clone, Copy)]
pub struct GgmtProblem<V> {
    a_coeff: f64,
    b_coeff: f64,
    potential: V,
    alpha: f64,
    kappa: f64,
}

impl<V: Fn(f64) -> f64> GgmtProblem<V> {
    pub fn new(a_coeff: f64, b_coeff: f64, potential: V, alpha: f64, kappa: f64) -> Result<Self, GgmtError> {
        if !(a_coeff > -0.25) || a_coeff == 0.0 || !a_coeff.is_finite() {
            return Err(GgmtError::InverseSquare { a: a_coeff });
        }
        if !(b_coeff > 0.0) || !b_coeff.is_finite() {
            return Err(GgmtError::Confining { b: b_coeff });
        }
        if !(alpha > -0.25 && alpha < a_coeff) {
            return Err(GgmtError::Split { alpha, a: a_coeff });
        }
        if !(KAPPA_MIN..=KAPPA_MAX).contains(&kappa) {
            return Err(GgmtError::Kappa { kappa });
        }
        Ok(Self { a_coeff, b_coeff, potential, alpha, kappa })
    }

    pub fn a_coeff(&self) -> f64 {
        self.a_coeff
    }

    pub fn b_coeff(&self) -> f64 {
        self.b_coeff
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `Q(r)`.
    pub fn q(&self, r: f64) -> f64 {
        (self.a_coeff - self.alpha) / (r * r) + self.b_coeff * r * r + (self.potential)(r)
    }

    /// `(Q, Q₊, Q₋)` at `r`.
    pub fn q_split(&self, r: f64) -> (f64, f64, f64) {
        let q = self.q(r);
        (q, q.max(0.0), (-q).max(0.0))
    }

    /// Maximal intervals of `[1e-4, 1e2]` on which `Q < 0`, located by a
    /// log-spaced scan and refined by bisection.
    pub fn support_bracket(&self) -> Vec<(f64, f64)> {
        let (llo, lhi) = (ln(SCAN_LO), ln(SCAN_HI));
        let at = |i: usize| exp(llo + (lhi - llo) * i as f64 / (SCAN_SAMPLES - 1) as f64);
        let mut out = Vec::new();
        let mut prev_r = at(0);
        let mut prev_neg = self.q(prev_r) < 0.0;
        let mut start = if prev_neg { Some(prev_r) } else { None };
        for i in 1..SCAN_SAMPLES {
            let r = at(i);
            let neg = self.q(r) < 0.0;
            if neg != prev_neg {
                let root = self.bisect_root(prev_r, r);
                if neg {
                    start = Some(root);
                } else if let Some(s) = start.take() {
                    out.push((s, root));
                }
            }
            prev_r = r;
            prev_neg = neg;
        }
        if let Some(s) = start {
            out.push((s, SCAN_HI));
        }
        out
    }

    fn bisect_root(&self, mut lo: f64, mut hi: f64) -> f64 {
        let lo_neg = self.q(lo) < 0.0;
        while hi - lo > ROOT_TOL * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if (self.q(mid) < 0.0) == lo_neg {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The bound under `convention`; `None` is rejected.
    pub fn bound(&self, convention: Option<GgmtConvention>) -> Result<GgmtResult, GgmtError> {
        let convention = convention.ok_or(GgmtError::ConventionRequired)?;
        Ok(self.bound_with(convention, QUAD_REL_TOL))
    }

    /// The bound with an explicit quadrature tolerance.
    pub fn bound_with(&self, convention: GgmtConvention, rel_tol: f64) -> GgmtResult {
        let support = self.support_bracket();
        let k = self.kappa;
        let mut integral = 0.0;
        let mut quad_error = 0.0;
        for &(r0, r1) in &support {
            let q = integrate(
                |r| {
                    let qm = (-self.q(r)).max(0.0);
                    if qm == 0.0 {
                        0.0
                    } else {
                        powf(r, 2.0 * k - 1.0) * powf(qm, k)
                    }
                },
                r0,
                r1,
                &[],
                rel_tol,
                QUAD_ABS_TOL,
            );
            integral += q.value;
            quad_error += q.error;
        }
        let prefactor = prefactor(k, self.alpha, convention);
        GgmtResult {
            g: prefactor * integral,
            integral,
            prefactor,
            support,
            quad_error: prefactor * quad_error,
            convention,
        }
    }
}

impl<V> core::fmt::Debug for GgmtProblem<V> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("GgmtProblem")
            .field("a_coeff", &self.a_coeff)
            .field("b_coeff", &self.b_coeff)
            .field("alpha", &self.alpha)
            .field("kappa", &self.kappa)
            .finish_non_exhaustive()
    }
}

/// `(κ−1)^{κ−1} Γ(2κ) / (base^{κ−1/2} κ^κ Γ(κ)²)` with the base chosen by
/// `convention`.
pub fn prefactor(kappa: f64, alpha: f64, convention: GgmtConvention) -> f64 {
    let gk = gamma(kappa);
    powf(kappa - 1.0, kappa - 1.0) * gamma(2.0 * kappa)
        / (powf(convention.base(alpha), kappa - 0.5) * powf(kappa, kappa) * gk * gk)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GgmtResult {
    pub g: f64,
    pub integral: f64,
    pub prefactor: f64,
    /// Disjoint intervals on which `Q < 0`, in increasing order.
    pub support: Vec<(f64, f64)>,
    pub quad_error: f64,
    pub convention: GgmtConvention,
}

/// Free-function form of [`GgmtProblem::bound`].
pub fn ggmt_bound<V: Fn(f64) -> f64>(
    problem: &GgmtProblem<V>,
    convention: Option<GgmtConvention>,
) -> Result<GgmtResult, GgmtError> {
    problem.bound(convention)
}

/// The `ℓ = 1` operator at `p = 3` split with `α = δ − 1/4`:
/// `Q(r) = r²/16 − 1/4 − V(r) + (9/4 − δ)/r²`.
pub fn appendix_problem(c: f64, delta: f64, kappa: f64) -> Result<GgmtProblem<impl Fn(f64) -> f64 + Copy>, GgmtError> {
    if !(delta > 0.0 && delta < 2.25) {
        return Err(GgmtError::Delta { delta });
    }
    let params = ModelParams::three_d(3, c)?;
    GgmtProblem::new(2.0, 1.0 / 16.0, move |r| -0.25 - params.potential_v(r), delta - 0.25, kappa)
}

/// `G_{c,δ}(κ)` under `convention`.
pub fn appendix_g(c: f64, delta: f64, kappa: f64, convention: Option<GgmtConvention>) -> Result<GgmtResult, GgmtError> {
    appendix_problem(c, delta, kappa)?.bound(convention)
}

/// A point of an optimisation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub delta: f64,
    pub kappa: f64,
    pub g: f64,
}

/// Evaluates `G` on every `(δ, κ)` pair, in row-major order over
/// `(δ, κ)`.
pub fn g_table(
    c: f64,
    delta_grid: &[f64],
    kappa_grid: &[f64],
    convention: GgmtConvention,
) -> Result<Vec<GridPoint>, GgmtError> {
    let mut out = Vec::with_capacity(delta_grid.len() * kappa_grid.len());
    for &delta in delta_grid {
        for &kappa in kappa_grid {
            let g = appendix_g(c, delta, kappa, Some(convention))?.g;
            out.push(GridPoint { delta, kappa, g });
        }
    }
    Ok(out)
}

/// Minimum of a table, ties going to the smaller `κ` and then the smaller
/// `δ`.
pub fn best_point(points: &[GridPoint]) -> Option<GridPoint> {
    points.iter().copied().fold(None, |best: Option<GridPoint>, pt| match best {
        None => Some(pt),
        Some(b) => {
            let better = pt.g < b.g
                || (pt.g == b.g && (pt.kappa < b.kappa || (pt.kappa == b.kappa && pt.delta < b.delta)));
            Some(if better { pt } else { b })
        }
    })
}

/// Exhaustive minimum of `G_{c,δ}(κ)` over the grids.
pub fn optimize_g(
    c: f64,
    delta_grid: &[f64],
    kappa_grid: &[f64],
    convention: GgmtConvention,
) -> Result<GridPoint, GgmtError> {
    if delta_grid.is_empty() || kappa_grid.is_empty() {
        return Err(GgmtError::EmptyGrid);
    }
    best_point(&g_table(c, delta_grid, kappa_grid, convention)?).ok_or(GgmtError::EmptyGrid)
}

/// `start, start+step, …` up to and including `end` (within rounding).
pub fn linspace_step(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = crate::math::round((end - start) / step) as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}
