//! Radial Schrödinger operators of the linearised problem and their low-lying
//! spectra.
//!
//! Conjugating the linearised operator with the Gaussian weight and splitting
//! into spherical harmonics leaves, for each angular index `ℓ`, the operator
//! `B_ℓ = −d²/dr² + q_ℓ(r)` on `(0, ∞)` with
//!
//! ```text
//! q_ℓ(r) = r²/16 − 3/4 + 1/(p−1) − V(r) + ℓ(ℓ+1)/r².
//! ```
//!
//! Eigenvalues `λ_B` of `B_ℓ` map to eigenvalues `λ_L = −λ_B` of the
//! linearised operator, so unstable directions are the negative `λ_B`.
//!
//! Two solvers are provided and are kept independent of each other:
//! bisection on the Sturm count of a finite-difference matrix (with
//! Richardson extrapolation in the grid spacing), and Prüfer-angle shooting
//! with an adaptive Runge–Kutta integrator.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{atan2, cos, floor, ln, sin, sqrt};
use crate::model::{ModelParams, RadialFunction};
use crate::tridiag::SymTridiag;

/// Largest angular index handled by the solvers.
pub const MAX_ELL: u32 = 8;

/// Eigenvalues with `|λ_B|` below this are reported as marginal rather than
/// unstable.
pub const MARGINAL: f64 = 1e-8;

pub const DEFAULT_R_MAX: f64 = 16.0;
pub const DEFAULT_N: usize = 3199;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("radial reduction requires d = 3, got d = {d}")]
    Dimension { d: u32 },
    #[error("angular index {ell} exceeds the supported maximum {MAX_ELL}")]
    EllTooLarge { ell: u32 },
    #[error("invalid grid: n = {n} (need >= 100), r_max = {r_max} (need >= 8)")]
    Grid { n: usize, r_max: f64 },
    #[error("potential is not finite at grid node r = {r}")]
    SingularNode { r: f64 },
    #[error("requested {k} eigenvalues from a system of size {n}")]
    TooManyEigenvalues { k: usize, n: usize },
    #[error("step size underflow while shooting at r = {r}")]
    Stiffness { r: f64 },
    #[error(
        "solvers disagree on the negative-eigenvalue count: matrix {matrix}, shooting {shooting} (eigenvalue nearest zero: {})",
        .near_zero.unwrap_or(f64::NAN)
    )]
    MethodDisagreement { matrix: usize, shooting: usize, near_zero: Option<f64> },
    #[error("unstable count is {count} at both ends of the interval: no crossing")]
    NoCrossing { count: usize },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Which radial potential an operator carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// `q_ℓ` of the linearisation around the profile.
    Ell(u32),
    /// The supersymmetric partner of `q_0`.
    Susy,
    /// `q_ℓ` in the limit `c → 0`: `r²/16 + ℓ(ℓ+1)/r² − 7/4`.
    EllLimit(u32),
    /// The partner in the limit `c → 0`: `r²/16 + 2/r² − 5/4`.
    SusyLimit,
}

impl OperatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            OperatorKind::Ell(_) => "Q_ELL",
            OperatorKind::Susy => "Q_SUSY",
            OperatorKind::EllLimit(_) => "Q_ELL_LIMIT",
            OperatorKind::SusyLimit => "Q_SUSY_LIMIT",
        }
    }
}

/// A radial Schrödinger problem `−u'' + q(r)u` on `(0, r_max)` with
/// `u(0) = 0` and `u(r_max) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOperatorSpec {
    kind: OperatorKind,
    params: Option<ModelParams>,
}

fn check_ell(ell: u32) -> Result<(), SpectralError> {
    if ell > MAX_ELL {
        Err(SpectralError::EllTooLarge { ell })
    } else {
        Ok(())
    }
}

fn check_d3(params: &ModelParams) -> Result<(), SpectralError> {
    if params.d() != 3 {
        Err(SpectralError::Dimension { d: params.d() })
    } else {
        Ok(())
    }
}

impl RadialOperatorSpec {
    pub fn ell(params: ModelParams, ell: u32) -> Result<Self, SpectralError> {
        check_d3(&params)?;
        check_ell(ell)?;
        Ok(Self { kind: OperatorKind::Ell(ell), params: Some(params) })
    }

    pub fn susy(params: ModelParams) -> Result<Self, SpectralError> {
        check_d3(&params)?;
        Ok(Self { kind: OperatorKind::Susy, params: Some(params) })
    }

    pub fn ell_limit(ell: u32) -> Result<Self, SpectralError> {
        check_ell(ell)?;
        Ok(Self { kind: OperatorKind::EllLimit(ell), params: None })
    }

    pub fn susy_limit() -> Self {
        Self { kind: OperatorKind::SusyLimit, params: None }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn params(&self) -> Option<&ModelParams> {
        self.params.as_ref()
    }

    /// Angular index for the `ℓ` kinds; `None` for the partner operators.
    pub fn angular_index(&self) -> Option<u32> {
        match self.kind {
            OperatorKind::Ell(l) | OperatorKind::EllLimit(l) => Some(l),
            _ => None,
        }
    }

    /// Spherical-harmonic degeneracy `2ℓ+1`; the partner operators live in
    /// the `ℓ = 0` sector.
    pub fn multiplicity(&self) -> u32 {
        2 * self.angular_index().unwrap_or(0) + 1
    }

    /// Exponent of the regular solution at the origin, `u ~ r^{exponent}`.
    /// The partner potentials carry `2/r²`, which behaves like `ℓ = 1`.
    pub fn origin_exponent(&self) -> u32 {
        match self.kind {
            OperatorKind::Ell(l) | OperatorKind::EllLimit(l) => l + 1,
            OperatorKind::Susy | OperatorKind::SusyLimit => 2,
        }
    }

    pub fn potential(&self, r: f64) -> f64 {
        match (self.kind, self.params.as_ref()) {
            (OperatorKind::Ell(l), Some(p)) => q_ell_unchecked(r, p, l),
            (OperatorKind::Susy, Some(p)) => q_susy_unchecked(r, p),
            (OperatorKind::EllLimit(l), _) => q_limit(r, l),
            (OperatorKind::SusyLimit, _) => q_susy_limit(r),
            _ => unreachable!("constructors attach params to the c > 0 kinds"),
        }
    }
}

impl RadialFunction for RadialOperatorSpec {
    fn value(&self, r: f64) -> f64 {
        self.potential(r)
    }
}

fn centrifugal(l: u32, r: f64) -> f64 {
    let l = f64::from(l);
    l * (l + 1.0) / (r * r)
}

fn q_ell_unchecked(r: f64, params: &ModelParams, ell: u32) -> f64 {
    r * r / 16.0 - 0.75 + params.m() - params.potential_v(r) + centrifugal(ell, r)
}

fn q_susy_unchecked(r: f64, params: &ModelParams) -> f64 {
    let p = params.pf();
    let s = params.b() + r * r;
    r * r / 16.0 + 2.0 / (r * r) - 1.25 + p * (r * r - 2.0) / ((p - 1.0) * s)
        + 4.0 * p * r * r / ((p - 1.0) * (p - 1.0) * s * s)
}

/// `q_ℓ(r) = r²/16 − 3/4 + 1/(p−1) − V(r) + ℓ(ℓ+1)/r²`.
pub fn q_ell(r: f64, params: &ModelParams, ell: u32) -> Result<f64, SpectralError> {
    check_d3(params)?;
    Ok(q_ell_unchecked(r, params, ell))
}

/// Closed form of the partner potential,
/// `r²/16 + 2/r² − 5/4 + p(r²−2)/((p−1)(b+r²)) + 4p r²/((p−1)²(b+r²)²)`.
pub fn q_susy(r: f64, params: &ModelParams) -> Result<f64, SpectralError> {
    check_d3(params)?;
    Ok(q_susy_unchecked(r, params))
}

/// `r²/16 + ℓ(ℓ+1)/r² − 7/4`.
pub fn q_limit(r: f64, ell: u32) -> f64 {
    r * r / 16.0 + centrifugal(ell, r) - 1.75
}

/// `r²/16 + 2/r² − 5/4`.
pub fn q_susy_limit(r: f64) -> f64 {
    r * r / 16.0 + 2.0 / (r * r) - 1.25
}

/// Partner potential obtained by factorising `B_0 + 1 = B₊B₋` through the
/// ground state `g̃`: with `W = −g̃'/g̃`, `B₊B₋ = −d² + W² − W'` and the
/// partner is `B₋B₊ − 1 = −d² + W² + W' − 1`.
#[derive(Debug, Clone, Copy)]
pub struct FactorisedPartner(pub ModelParams);

impl FactorisedPartner {
    /// `W² − W' − 1`, which must reproduce `q_0`.
    pub fn original(&self, r: f64) -> f64 {
        let [w, dw] = self.0.superpotential(r);
        w * w - dw - 1.0
    }
}

impl RadialFunction for FactorisedPartner {
    fn value(&self, r: f64) -> f64 {
        let [w, dw] = self.0.superpotential(r);
        w * w + dw - 1.0
    }
}

/// Values of a function at the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

/// Samples the factorised partner potential on the interior nodes of `grid`.
pub fn susy_partner_from_ground(params: &ModelParams, grid: &Grid) -> Result<Sampled, SpectralError> {
    check_d3(params)?;
    let f = FactorisedPartner(*params);
    let nodes = grid.nodes();
    let values = nodes.iter().map(|&r| f.value(r)).collect();
    Ok(Sampled { nodes, values })
}

/// Uniform grid with interior nodes `r_i = i·h`, `i = 1..=n`,
/// `h = r_max/(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    r_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(r_max: f64, n: usize) -> Result<Self, SpectralError> {
        if n < 100 || !(r_max >= 8.0) || !r_max.is_finite() {
            return Err(SpectralError::Grid { n, r_max });
        }
        Ok(Self { r_max, n })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.r_max / (self.n as f64 + 1.0)
    }

    /// Same domain with the spacing halved.
    pub fn refined(&self) -> Self {
        Self { r_max: self.r_max, n: 2 * self.n + 1 }
    }

    /// Same spacing on a domain of twice the length.
    pub fn extended(&self) -> Self {
        Self { r_max: 2.0 * self.r_max, n: 2 * self.n + 1 }
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self { r_max: DEFAULT_R_MAX, n: DEFAULT_N }
    }
}

/// Central second differences with Dirichlet ends:
/// `d_i = 2/h² + q(r_i)`, `e_i = −1/h²`.
pub fn discretize(spec: &RadialOperatorSpec, grid: &Grid) -> Result<SymTridiag, SpectralError> {
    discretize_fn(|r| spec.potential(r), grid)
}

/// [`discretize`] for an arbitrary potential.
pub fn discretize_fn<Q: Fn(f64) -> f64>(q: Q, grid: &Grid) -> Result<SymTridiag, SpectralError> {
    let h = grid.h();
    let inv = 1.0 / (h * h);
    let mut diag = Vec::with_capacity(grid.n());
    for i in 0..grid.n() {
        let r = grid.node(i);
        let v = q(r);
        if !v.is_finite() {
            return Err(SpectralError::SingularNode { r });
        }
        diag.push(2.0 * inv + v);
    }
    Ok(SymTridiag::new(diag, vec![-inv; grid.n() - 1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MatrixBisection,
    ShootingNodeCount,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::MatrixBisection => "MATRIX_BISECTION",
            Method::ShootingNodeCount => "SHOOTING_NODECOUNT",
        }
    }
}

/// Eigenvalues are always stored in the `B` convention; the linearised
/// operator's eigenvalues are `λ_L = −λ_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub errors: Vec<f64>,
    pub method: Method,
    pub convention: Convention,
}

impl Spectrum {
    pub fn lambda_l(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| -l).collect()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

const BISECTION_REL_TOL: f64 = 1e-13;

/// The `k` lowest eigenvalues of the matrix for `grid`, without
/// extrapolation.
pub fn matrix_eigenvalues(spec: &RadialOperatorSpec, grid: &Grid, k: usize) -> Result<Vec<f64>, SpectralError> {
    let sys = discretize(spec, grid)?;
    if k == 0 || k > sys.len() {
        return Err(SpectralError::TooManyEigenvalues { k, n: sys.len() });
    }
    Ok(sys.lowest(k, BISECTION_REL_TOL))
}

/// The `k` lowest eigenvalues by Sturm bisection on the grids `h`, `h/2` and
/// `h/4`, Richardson-extrapolated on the `h²` error term.
///
/// The reported value is the extrapolation from the two finest grids; its
/// error is the distance to the extrapolation from the two coarser grids,
/// floored at the bisection tolerance.
pub fn eigen_lowest(spec: &RadialOperatorSpec, grid: &Grid, k: usize) -> Result<Spectrum, SpectralError> {
    let g1 = grid.refined();
    let g2 = g1.refined();
    let l0 = matrix_eigenvalues(spec, grid, k)?;
    let l1 = matrix_eigenvalues(spec, &g1, k)?;
    let l2 = matrix_eigenvalues(spec, &g2, k)?;
    let mut eigenvalues = Vec::with_capacity(k);
    let mut errors = Vec::with_capacity(k);
    for i in 0..k {
        let coarse = (4.0 * l1[i] - l0[i]) / 3.0;
        let fine = (4.0 * l2[i] - l1[i]) / 3.0;
        eigenvalues.push(fine);
        errors.push((fine - coarse).abs().max(BISECTION_REL_TOL * fine.abs().max(1.0)));
    }
    Ok(Spectrum { eigenvalues, errors, method: Method::MatrixBisection, convention: Convention::B })
}

// ---- shooting ------------------------------------------------------------

/// Tolerances for the Prüfer integration.
#[derive(Debug, Clone, Copy)]
pub struct ShootingTolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for ShootingTolerance {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-12 }
    }
}

/// Starting radius for singular operators; the regular solution's phase is
/// known in closed form up to `O(r²)` there.
const SHOOT_R_START: f64 = 1e-6;

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates the Prüfer phase `θ' = cos²θ + (λ − q) sin²θ` from the
/// origin to `r_end`, starting on the regular solution
/// `u ~ r^{e}` (`tan θ = u/u' = r/e`). Returns `θ(r_end)`.
///
/// The phase crosses multiples of `π` only upwards, so
/// `⌊θ(r_end)/π⌋` is the number of zeros of the regular solution in
/// `(0, r_end)`.
pub fn prufer_phase<Q: Fn(f64) -> f64>(
    q: &Q,
    origin_exponent: u32,
    lambda: f64,
    r_end: f64,
    tol: ShootingTolerance,
) -> Result<f64, SpectralError> {
    let rhs = |r: f64, th: f64| {
        let (s, c) = (sin(th), cos(th));
        c * c + (lambda - q(r)) * s * s
    };
    let e = f64::from(origin_exponent);
    let mut r = if origin_exponent == 1 && q(0.0).is_finite() { 0.0 } else { SHOOT_R_START };
    let mut th = atan2(r, e);
    let mut h = if r == 0.0 { 1e-4 } else { 0.5 * r };
    let mut k = [0.0f64; 7];
    while r < r_end {
        if r + h > r_end {
            h = r_end - r;
        }
        k[0] = rhs(r, th);
        for stage in 1..7 {
            let mut y = th;
            for (j, kj) in k.iter().enumerate().take(stage) {
                y += h * DP_A[stage][j] * kj;
            }
            k[stage] = rhs(r + DP_C[stage] * h, y);
        }
        let mut y5 = th;
        let mut y4 = th;
        for j in 0..7 {
            y5 += h * DP_B5[j] * k[j];
            y4 += h * DP_B4[j] * k[j];
        }
        let err = (y5 - y4).abs();
        let scale = tol.atol + tol.rtol * y5.abs().max(th.abs());
        if err <= scale || h <= 1e-300 {
            r += h;
            th = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(scale / err, 0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 * r.max(1e-300) {
            return Err(SpectralError::Stiffness { r });
        }
    }
    Ok(th)
}

/// Number of zeros of the regular solution of `−u'' + q u = λ u` in
/// `(0, r_max)`; equal to the number of eigenvalues below `λ`.
pub fn shoot_count_nodes(spec: &RadialOperatorSpec, lambda: f64, grid: &Grid) -> Result<usize, SpectralError> {
    let th = prufer_phase(&|r| spec.potential(r), spec.origin_exponent(), lambda, grid.r_max(), ShootingTolerance::default())?;
    Ok(floor(th / core::f64::consts::PI).max(0.0) as usize)
}

/// Lower bound for the spectrum: the minimum of the potential over a dense
/// log-spaced sample of `(0, r_max)`.
fn potential_floor(spec: &RadialOperatorSpec, r_max: f64) -> f64 {
    potential_grid_minimum(&|r| spec.potential(r), 1e-4, r_max, 20_000).1 - 1.0
}

/// Minimum of `q` over `n` log-spaced samples of `[r_lo, r_hi]`, refined by
/// golden-section search around the best sample. Returns `(r, q(r))`.
pub fn potential_grid_minimum<Q: Fn(f64) -> f64>(q: &Q, r_lo: f64, r_hi: f64, n: usize) -> (f64, f64) {
    let (llo, lhi) = (ln(r_lo), ln(r_hi));
    let at = |i: usize| libm::exp(llo + (lhi - llo) * i as f64 / (n - 1) as f64);
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..n {
        let v = q(at(i));
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut a = at(best_i.saturating_sub(1));
    let mut b = at((best_i + 1).min(n - 1));
    let phi = 0.5 * (sqrt(5.0) - 1.0);
    for _ in 0..100 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if q(x1) < q(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let rm = 0.5 * (a + b);
    let vm = q(rm);
    if vm < best {
        (rm, vm)
    } else {
        (at(best_i), best)
    }
}

fn shoot_eigenvalue(
    spec: &RadialOperatorSpec,
    index: usize,
    r_max: f64,
    floor_value: f64,
    tol: ShootingTolerance,
) -> Result<f64, SpectralError> {
    let q = |r: f64| spec.potential(r);
    let e = spec.origin_exponent();
    let target = (index as f64 + 1.0) * core::f64::consts::PI;
    let mut lo = floor_value;
    let mut hi = lo + 2.0;
    while prufer_phase(&q, e, hi, r_max, tol)? < target {
        lo = hi;
        hi += 2.0 * (hi - floor_value);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-13 * mid.abs().max(1.0) {
            break;
        }
        if prufer_phase(&q, e, mid, r_max, tol)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The `k` lowest eigenvalues of the problem truncated at `grid.r_max()`,
/// located by bisection on the Prüfer phase at `r_max`. The error is the
/// change when the integration tolerance is tightened a hundredfold.
pub fn shoot_lowest(spec: &RadialOperatorSpec, grid: &Grid, k: usize) -> Result<Spectrum, SpectralError> {
    let fl = potential_floor(spec, grid.r_max());
    let loose = ShootingTolerance { rtol: 1e-9, atol: 1e-10 };
    let tight = ShootingTolerance::default();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut errors = Vec::with_capacity(k);
    for index in 0..k {
        let a = shoot_eigenvalue(spec, index, grid.r_max(), fl, loose)?;
        let b = shoot_eigenvalue(spec, index, grid.r_max(), fl, tight)?;
        eigenvalues.push(b);
        errors.push((a - b).abs().max(1e-12 * b.abs().max(1.0)));
    }
    Ok(Spectrum { eigenvalues, errors, method: Method::ShootingNodeCount, convention: Convention::B })
}

/// Dispatches to the requested solver.
pub fn spectrum(spec: &RadialOperatorSpec, grid: &Grid, k: usize, method: Method) -> Result<Spectrum, SpectralError> {
    match method {
        Method::MatrixBisection => eigen_lowest(spec, grid, k),
        Method::ShootingNodeCount => shoot_lowest(spec, grid, k),
    }
}

// ---- counting unstable directions ---------------------------------------

/// Outcome of [`unstable_count`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnstableCount {
    pub ell: u32,
    /// Eigenvalues with `λ_B < −MARGINAL`.
    pub count: usize,
    /// Eigenvalues with `|λ_B| <= MARGINAL`.
    pub marginal: usize,
    /// Lowest eigenvalue (matrix route, extrapolated).
    pub lowest: f64,
    /// Eigenvalue closest to zero among those computed.
    pub nearest_zero: f64,
    /// Multiplicity `2ℓ+1` of each radial eigenvalue.
    pub multiplicity: u32,
}

/// Number of strictly negative eigenvalues of `B_ℓ`, agreed between the
/// matrix and shooting solvers.
pub fn unstable_count(params: &ModelParams, ell: u32) -> Result<UnstableCount, SpectralError> {
    unstable_count_on(params, ell, &Grid::default())
}

pub fn unstable_count_on(params: &ModelParams, ell: u32, grid: &Grid) -> Result<UnstableCount, SpectralError> {
    unstable_count_spec(&RadialOperatorSpec::ell(*params, ell)?, grid)
}

/// [`unstable_count_on`] for any radial operator; `ell` is reported as zero
/// for the partner kinds.
pub fn unstable_count_spec(spec: &RadialOperatorSpec, grid: &Grid) -> Result<UnstableCount, SpectralError> {
    let spec = *spec;
    let ell = spec.angular_index().unwrap_or(0);
    // eigenvalues of the finest matrix bound how many we need to look at
    let finest = grid.refined().refined();
    let below = discretize(&spec, &finest)?.count_below(1.0);
    let k = below + 1;
    let sp = eigen_lowest(&spec, grid, k)?;
    let matrix = sp.eigenvalues.iter().filter(|&&l| l < -MARGINAL).count();
    let marginal = sp.eigenvalues.iter().filter(|&&l| l.abs() <= MARGINAL).count();
    let shooting = shoot_count_nodes(&spec, -MARGINAL, grid)?;
    let nearest_zero = sp
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, |a, l| if l.abs() < a.abs() { l } else { a });
    if matrix != shooting {
        return Err(SpectralError::MethodDisagreement {
            matrix,
            shooting,
            near_zero: Some(nearest_zero).filter(|l| l.is_finite()),
        });
    }
    Ok(UnstableCount {
        ell,
        count: matrix,
        marginal,
        lowest: sp.eigenvalues[0],
        nearest_zero,
        multiplicity: spec.multiplicity(),
    })
}

/// Result of a crossing scan in `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub p: u32,
    pub ell: u32,
    /// Midpoint of the final bracket.
    pub c_star: f64,
    pub bracket: (f64, f64),
    pub count_lo: usize,
    pub count_hi: usize,
    /// `(c, eigenvalue)` pairs for the eigenvalue that changes sign, sampled
    /// uniformly on the scan interval.
    pub curve: Vec<(f64, f64)>,
}

/// Width to which [`scan_crossing`] bisects the crossing.
pub const CROSSING_WIDTH: f64 = 1e-4;

/// Locates the coupling at which the number of negative eigenvalues of
/// `B_ℓ` changes between `c_lo` and `c_hi`.
pub fn scan_crossing(p: u32, ell: u32, c_lo: f64, c_hi: f64, points: usize) -> Result<CrossingReport, SpectralError> {
    scan_crossing_on(p, ell, c_lo, c_hi, points, &Grid::default())
}

pub fn scan_crossing_on(
    p: u32,
    ell: u32,
    c_lo: f64,
    c_hi: f64,
    points: usize,
    grid: &Grid,
) -> Result<CrossingReport, SpectralError> {
    let count_at = |c: f64| -> Result<UnstableCount, SpectralError> {
        unstable_count_on(&ModelParams::three_d(p, c)?, ell, grid)
    };
    let lo = count_at(c_lo)?;
    if c_lo == c_hi {
        return Err(SpectralError::NoCrossing { count: lo.count });
    }
    let hi = count_at(c_hi)?;
    if lo.count == hi.count {
        return Err(SpectralError::NoCrossing { count: lo.count });
    }
    let index = lo.count.min(hi.count);
    let eig_at = |c: f64| -> Result<f64, SpectralError> {
        let spec = RadialOperatorSpec::ell(ModelParams::three_d(p, c)?, ell)?;
        Ok(eigen_lowest(&spec, grid, index + 1)?.eigenvalues[index])
    };
    let mut curve = Vec::with_capacity(points);
    for i in 0..points {
        let t = if points > 1 { i as f64 / (points - 1) as f64 } else { 0.0 };
        let c = c_lo + t * (c_hi - c_lo);
        curve.push((c, eig_at(c)?));
    }
    let (mut a, mut b) = (c_lo, c_hi);
    let sign_a = eig_at(a)? < 0.0;
    while (b - a).abs() > CROSSING_WIDTH {
        let mid = 0.5 * (a + b);
        if (eig_at(mid)? < 0.0) == sign_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    let (bl, bh) = if a < b { (a, b) } else { (b, a) };
    Ok(CrossingReport {
        p,
        ell,
        c_star: 0.5 * (bl + bh),
        bracket: (bl, bh),
        count_lo: lo.count,
        count_hi: hi.count,
        curve,
    })
}

/// Relative discrete residual `‖B_h g̃ + g̃‖ / ‖g̃‖` of the exact ground state
/// on `grid`.
pub fn ground_state_residual(params: &ModelParams, grid: &Grid) -> Result<f64, SpectralError> {
    let spec = RadialOperatorSpec::ell(*params, 0)?;
    let sys = discretize(&spec, grid)?;
    let gt: Vec<f64> = grid.nodes().iter().map(|&r| params.gtilde(r)).collect();
    let bg = sys.apply(&gt);
    let num: f64 = bg.iter().zip(&gt).map(|(a, g)| (a + g) * (a + g)).sum();
    let den: f64 = gt.iter().map(|g| g * g).sum();
    Ok(sqrt(num / den))
}

/// Eigenvector of the matrix for `grid` belonging to its `index`-th
/// eigenvalue, normalised in the discrete `L²` norm `h Σ u_i² = 1` and
/// positive near the origin.
pub fn discrete_eigenfunction(
    spec: &RadialOperatorSpec,
    grid: &Grid,
    index: usize,
) -> Result<(f64, Vec<f64>), SpectralError> {
    let sys = discretize(spec, grid)?;
    if index >= sys.len() {
        return Err(SpectralError::TooManyEigenvalues { k: index + 1, n: sys.len() });
    }
    let lam = sys.eigenvalue(index, 1e-15);
    let mut v = sys.eigenvector(lam);
    let s = 1.0 / sqrt(grid.h());
    for x in &mut v {
        *x *= s;
    }
    Ok((lam, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p3(c: f64) -> ModelParams {
        ModelParams::three_d(3, c).unwrap()
    }

    #[test]
    fn potential_values() {
        let m = p3(0.3);
        assert_relative_eq!(q_ell(4.0, &m, 0).unwrap(), 1.069_454_076_133_465_4, max_relative = 1e-13);
        assert_relative_eq!(q_susy(1.0, &m).unwrap(), 1.389_985_177_344_558_6, max_relative = 1e-13);
        assert_relative_eq!(q_limit(2.0, 0), -1.5, epsilon = 1e-15);
        assert_relative_eq!(q_susy_limit(2.0), -0.5, epsilon = 1e-15);
        let m4 = ModelParams::new(4, 3, 0.1).unwrap();
        assert!(matches!(q_ell(1.0, &m4, 0), Err(SpectralError::Dimension { d: 4 })));
        assert!(matches!(q_susy(1.0, &m4), Err(SpectralError::Dimension { d: 4 })));
        assert!(matches!(RadialOperatorSpec::ell_limit(9), Err(SpectralError::EllTooLarge { .. })));
    }

    #[test]
    fn centrifugal_blowup_at_origin() {
        let m = p3(0.3);
        let r = 1e-4;
        assert_relative_eq!(q_ell(r, &m, 1).unwrap() * r * r, 2.0, max_relative = 1e-5);
    }

    #[test]
    fn limit_potentials_are_c_to_zero_limits() {
        let mut last = f64::INFINITY;
        for c in [1e-2, 1e-4, 1e-6] {
            let d = (q_limit(1.5, 1) - q_ell(1.5, &p3(c), 1).unwrap()).abs();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn factorisation_reproduces_closed_forms() {
        for (p, c) in [(3, 0.3), (5, 0.1), (3, 0.05), (7, 0.05)] {
            let m = ModelParams::three_d(p, c).unwrap();
            let f = FactorisedPartner(m);
            for i in 0..200 {
                let r = 0.05 + 0.05 * f64::from(i);
                let scale = 1.0f64.max(q_susy(r, &m).unwrap().abs());
                assert!((f.value(r) - q_susy(r, &m).unwrap()).abs() < 1e-9 * scale, "p={p} r={r}");
                let scale0 = 1.0f64.max(q_ell(r, &m, 0).unwrap().abs());
                assert!((f.original(r) - q_ell(r, &m, 0).unwrap()).abs() < 1e-9 * scale0);
            }
        }
    }

    #[test]
    fn superpotential_grows_like_quarter_r() {
        let m = p3(0.3);
        let [w, _] = m.superpotential(200.0);
        assert_relative_eq!(w / 200.0, 0.25, max_relative = 1e-3);
    }

    #[test]
    fn discretize_stencil() {
        // h = 1 needs r_max = n + 1; bypass the grid minimum for this check
        let grid = Grid { r_max: 4.0, n: 3 };
        let sys = discretize_fn(|_| 0.0, &grid).unwrap();
        assert_eq!(sys.diag, vec![2.0, 2.0, 2.0]);
        assert_eq!(sys.off, vec![-1.0, -1.0]);
        let ev = sys.lowest(3, 1e-15);
        assert_relative_eq!(ev[0], 2.0 - 2f64.sqrt(), epsilon = 1e-13);
        assert_relative_eq!(ev[2], 2.0 + 2f64.sqrt(), epsilon = 1e-13);
        let err = discretize_fn(|r| if r == 2.0 { f64::NAN } else { 0.0 }, &grid);
        assert!(matches!(err, Err(SpectralError::SingularNode { .. })));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(12.0, 99).is_err());
        assert!(Grid::new(7.9, 1000).is_err());
        let g = Grid::new(12.0, 1199).unwrap();
        assert_relative_eq!(g.h(), 0.01, epsilon = 1e-15);
        assert_relative_eq!(g.refined().h(), 0.005, epsilon = 1e-15);
        assert_relative_eq!(g.extended().h(), 0.01, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_shift_shifts_spectrum() {
        let grid = Grid::new(12.0, 400).unwrap();
        let a = discretize_fn(|r| q_limit(r, 0), &grid).unwrap().lowest(4, 1e-14);
        let b = discretize_fn(|r| q_limit(r, 0) + 0.7, &grid).unwrap().lowest(4, 1e-14);
        for (x, y) in a.iter().zip(&b) {
            assert!((y - x - 0.7).abs() < 1e-10);
        }
    }

    #[test]
    fn limit_ladder_before_and_after_extrapolation() {
        let spec = RadialOperatorSpec::ell_limit(0).unwrap();
        let grid = Grid::new(12.0, 1199).unwrap();
        let raw = matrix_eigenvalues(&spec, &grid.refined().refined(), 2).unwrap();
        assert!((raw[0] + 1.0).abs() < 2e-4 && raw[1].abs() < 2e-4, "{raw:?}");
        let sp = eigen_lowest(&spec, &grid, 2).unwrap();
        assert!((sp.eigenvalues[0] + 1.0).abs() < 1e-6);
        assert!(sp.eigenvalues[1].abs() < 1e-6);
        let l1 = eigen_lowest(&RadialOperatorSpec::ell_limit(1).unwrap(), &grid, 1).unwrap();
        assert!((l1.eigenvalues[0] + 0.5).abs() < 1e-6);
        let s = eigen_lowest(&RadialOperatorSpec::susy_limit(), &grid, 1).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-6);
    }

    #[test]
    fn node_counts_on_limit_ladder() {
        let grid = Grid::default();
        let s0 = RadialOperatorSpec::ell_limit(0).unwrap();
        let s1 = RadialOperatorSpec::ell_limit(1).unwrap();
        assert_eq!(shoot_count_nodes(&s0, -0.5, &grid).unwrap(), 1);
        assert_eq!(shoot_count_nodes(&s1, -1.0, &grid).unwrap(), 0);
        assert_eq!(shoot_count_nodes(&s0, 2.5, &grid).unwrap(), 4);
        assert_eq!(shoot_count_nodes(&s1, 3.6, &grid).unwrap(), 5);
        let m = p3(0.2);
        let s = RadialOperatorSpec::ell(m, 2).unwrap();
        let qmin = potential_grid_minimum(&|r| s.potential(r), 1e-3, 12.0, 2000).1;
        assert_eq!(shoot_count_nodes(&s, qmin - 0.1, &grid).unwrap(), 0);
    }

    #[test]
    fn shooting_matches_limit_ladder() {
        // the third level still feels a wall at r = 12
        let grid = Grid::new(20.0, 3999).unwrap();
        let sp = shoot_lowest(&RadialOperatorSpec::ell_limit(2).unwrap(), &grid, 3).unwrap();
        for (n, l) in sp.eigenvalues.iter().enumerate() {
            assert!((l - n as f64).abs() < 1e-8, "{l}");
        }
    }

    #[test]
    fn unstable_counts() {
        assert_eq!(unstable_count(&p3(0.3), 0).unwrap().count, 1);
        assert_eq!(unstable_count(&p3(0.3), 1).unwrap().count, 0);
        assert_eq!(unstable_count(&p3(0.05), 1).unwrap().count, 1);
        let u = unstable_count(&p3(0.3), 2).unwrap();
        assert_eq!((u.count, u.multiplicity), (0, 5));
    }

    #[test]
    fn ground_state_is_eigenvector() {
        let m = p3(0.3);
        let sp = eigen_lowest(&RadialOperatorSpec::ell(m, 0).unwrap(), &Grid::default(), 1).unwrap();
        assert!((sp.eigenvalues[0] + 1.0).abs() < 1e-6, "{:?}", sp);
        let g = Grid::new(12.0, 1199).unwrap();
        let r1 = ground_state_residual(&m, &g).unwrap();
        let r2 = ground_state_residual(&m, &g.refined()).unwrap();
        let order = (r1 / r2).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn crossing_errors() {
        assert!(matches!(
            scan_crossing(3, 1, 0.2, 0.2, 3),
            Err(SpectralError::NoCrossing { count: 0 })
        ));
    }

    #[test]
    fn eigenfunction_normalised() {
        let spec = RadialOperatorSpec::ell_limit(0).unwrap();
        let grid = Grid::new(12.0, 1199).unwrap();
        let (lam, v) = discrete_eigenfunction(&spec, &grid, 0).unwrap();
        assert!((lam + 1.0).abs() < 1e-3);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>() * grid.h();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-10);
        assert!(v[10] > 0.0);
    }
}
