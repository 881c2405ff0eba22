//! Dynamics near the self-similar solution.
//!
//! In similarity variables `τ = log(T/(T−t))`, `y = x/√(T−t)` a solution
//! `u = (T−t)^{−1/(p−1)} (φ + f)(τ, y)` gives
//!
//! ```text
//! ∂_τ f = L f + N(f),   L = Δ − (y/2)·∇ − 1/(p−1) + V,
//! ```
//!
//! where `N` collects the terms of order two and higher. For a radial field
//! of angular index `ℓ`, the substitution `v = r e^{−r²/8} f` turns `L` into
//! `−B_ℓ` with `B_ℓ` the radial Schrödinger operator of [`crate::spectral`].
//! The stepper works on `v`. The implicit part is the spectral module's
//! finite-difference matrix itself, so discrete eigenvectors evolve by pure
//! scaling and the unstable direction is invariant.
//!
//! The weighted inner product is
//! `⟨f, g⟩_σ = 4π ∫₀^∞ f g e^{−r²/4} r² dr = 4π ∫₀^∞ v_f v_g dr`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{exp, ipow, powf, sqrt};
use crate::model::ModelParams;
use crate::quadrature::integrate;
use crate::spectral::{discretize_fn, Grid, SpectralError};
use crate::tridiag::{ShiftedFactor, SymTridiag};

const FOUR_PI: f64 = 4.0 * core::f64::consts::PI;

/// Similarity runs stop once `sup |f|` exceeds this, unless the grid caps
/// the field earlier; see [`blowup_threshold`].
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Largest accepted similarity time step.
pub const DTAU_MAX: f64 = 0.05;

pub const DEFAULT_DTAU: f64 = 5e-4;
pub const DEFAULT_TAU_END: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvolutionError {
    #[error("grid function has {got} samples, grid has {expected}")]
    GridMismatch { expected: usize, got: usize },
    #[error("blowup time {t} outside [1/2, 3/2]")]
    Range { t: f64 },
    #[error("time step {dtau} outside (0, {DTAU_MAX}]")]
    Step { dtau: f64 },
    #[error("sup norm {sup:e} exceeded the blowup threshold at tau = {tau}")]
    BlowupDetected { tau: f64, sup: f64, coef: f64 },
    #[error("unstable coefficient has the same sign at both ends: {coef_lo:e}, {coef_hi:e}")]
    NoSignChange { coef_lo: f64, coef_hi: f64 },
    #[error("no blowup before t = {t_max}")]
    NoBlowup { t_max: f64 },
    #[error("time {t} is not covered by the recorded history")]
    OutOfHistory { t: f64 },
    #[error("nonlinear runs are radial (ell = 0) with the model potential")]
    NonlinearSetup,
    #[error("invalid physical grid: h = {h}, r_max = {r_max}")]
    PhysicalGrid { h: f64, r_max: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

fn check_len(grid: &Grid, got: usize) -> Result<(), EvolutionError> {
    if grid.n() != got {
        Err(EvolutionError::GridMismatch { expected: grid.n(), got })
    } else {
        Ok(())
    }
}

/// Escape level of a nonlinear similarity run on `grid`.
///
/// For `r > 0` the term `−c r² u^{2p−1}` stops growth near the singular
/// steady state `u = (c r²)^{−1/(p−1)}`, so blowup ahead of `T` can only
/// happen at the origin, which the grid excludes. The first node then
/// saturates near `(c h²)^{−1/(p−1)}` instead of diverging. Half that level,
/// capped at [`BLOWUP_THRESHOLD`], marks escape.
pub fn blowup_threshold(params: &ModelParams, grid: &Grid) -> f64 {
    let h = grid.h();
    (0.5 * powf(params.c() * h * h, -params.m())).min(BLOWUP_THRESHOLD)
}

/// `r e^{−r²/8}` at the grid nodes.
pub fn conjugation_weight(grid: &Grid) -> Vec<f64> {
    grid.nodes().iter().map(|&r| r * exp(-r * r / 8.0)).collect()
}

/// `⟨f, g⟩_σ` by the trapezoidal rule on the interior nodes. The integrand
/// vanishes at `r = 0` and is taken to vanish at `r_max`.
pub fn inner_sigma(f: &[f64], g: &[f64], grid: &Grid) -> Result<f64, EvolutionError> {
    check_len(grid, f.len())?;
    check_len(grid, g.len())?;
    let h = grid.h();
    let s: f64 = f
        .iter()
        .zip(g)
        .enumerate()
        .map(|(i, (a, b))| {
            let r = grid.node(i);
            a * b * r * r * exp(-r * r / 4.0)
        })
        .sum();
    Ok(FOUR_PI * h * s)
}

/// `⟨v, w⟩` in the conjugated variable, `4π h Σ v_i w_i`.
fn inner_conj(v: &[f64], w: &[f64], h: f64) -> f64 {
    FOUR_PI * h * v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
}

/// The unstable direction and its normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionWeights {
    grid: Grid,
    /// `e^{−r²/4}` at the nodes.
    pub sigma: Vec<f64>,
    /// The mode in the original variable.
    pub mode: Vec<f64>,
    /// The mode in the conjugated variable.
    pub mode_conj: Vec<f64>,
    /// `⟨g, g⟩_σ`.
    pub norm: f64,
}

impl ProjectionWeights {
    fn from_conj(grid: &Grid, mode_conj: Vec<f64>) -> Self {
        let w = conjugation_weight(grid);
        let mode = mode_conj.iter().zip(&w).map(|(v, w)| v / w).collect();
        let sigma = grid.nodes().iter().map(|&r| exp(-r * r / 4.0)).collect();
        let norm = inner_conj(&mode_conj, &mode_conj, grid.h());
        Self { grid: *grid, sigma, mode, mode_conj, norm }
    }

    /// `g = (b + r²)^{−p/(p−1)}` sampled exactly.
    pub fn closed_form(params: &ModelParams, grid: &Grid) -> Self {
        let conj = grid.nodes().iter().map(|&r| params.gtilde(r)).collect();
        Self::from_conj(grid, conj)
    }

    /// The lowest eigenvector of the discrete `ℓ = 0` operator, scaled to
    /// best match `g` in the weighted norm. The discrete linear flow leaves
    /// its orthogonal complement exactly invariant.
    pub fn discrete(params: &ModelParams, grid: &Grid) -> Result<Self, EvolutionError> {
        let spec = crate::spectral::RadialOperatorSpec::ell(*params, 0)?;
        let (_, v) = crate::spectral::discrete_eigenfunction(&spec, grid, 0)?;
        let exact: Vec<f64> = grid.nodes().iter().map(|&r| params.gtilde(r)).collect();
        let scale = v.iter().zip(&exact).map(|(a, b)| a * b).sum::<f64>() / v.iter().map(|a| a * a).sum::<f64>();
        Ok(Self::from_conj(grid, v.iter().map(|a| a * scale).collect()))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `⟨v, g⟩_σ / ⟨g, g⟩_σ` for `v` given in the conjugated variable.
    pub fn coefficient_conj(&self, v: &[f64]) -> f64 {
        inner_conj(v, &self.mode_conj, self.grid.h()) / self.norm
    }
}

/// Splits `f = coef·g + remainder` with `⟨remainder, g⟩_σ = 0`.
pub fn project_unstable(f: &[f64], weights: &ProjectionWeights) -> Result<(f64, Vec<f64>), EvolutionError> {
    check_len(&weights.grid, f.len())?;
    let coef = inner_sigma(f, &weights.mode, &weights.grid)? / weights.norm;
    let rem = f.iter().zip(&weights.mode).map(|(a, g)| a - coef * g).collect();
    Ok((coef, rem))
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// `F(u) = u^p − c r² u^{2p−1}`.
fn reaction(u: f64, r: f64, params: &ModelParams) -> f64 {
    let p = params.p();
    ipow(u, p) - params.c() * r * r * ipow(u, 2 * p - 1)
}

/// `F'(u)`.
fn reaction_derivative(u: f64, r: f64, params: &ModelParams) -> f64 {
    let p = params.p();
    f64::from(p) * ipow(u, p - 1) - params.c() * r * r * f64::from(2 * p - 1) * ipow(u, 2 * p - 2)
}

/// `N(f) = F(φ+f) − F(φ) − F'(φ) f` at radius `r`.
pub fn nonlinearity_definitional(f: f64, r: f64, params: &ModelParams) -> f64 {
    let phi = params.phi(r);
    reaction(phi + f, r, params) - reaction(phi, r, params) - reaction_derivative(phi, r, params) * f
}

/// Per-node coefficients `N(f) = Σ_{n=2}^{2p−1} a_n(r) fⁿ` of the binomial
/// expansion.
fn expansion_coefficients(r: f64, params: &ModelParams) -> Vec<f64> {
    let p = params.p();
    let q = 2 * p - 1;
    let phi = params.phi(r);
    (2..=q)
        .map(|n| {
            let mut a = -params.c() * r * r * binomial(q, n) * powf(phi, f64::from(q - n));
            if n <= p {
                a += binomial(p, n) * powf(phi, f64::from(p - n));
            }
            a
        })
        .collect()
}

fn horner_tail(coef: &[f64], f: f64) -> f64 {
    // Σ a_n fⁿ starting at n = 2
    let mut acc = 0.0;
    for a in coef.iter().rev() {
        acc = acc * f + a;
    }
    acc * f * f
}

/// `N(f)` through the binomial expansion; free of the cancellation in
/// [`nonlinearity_definitional`] for small `f`.
pub fn nonlinearity_expanded(f: f64, r: f64, params: &ModelParams) -> f64 {
    horner_tail(&expansion_coefficients(r, params), f)
}

/// Which algebraic form [`apply_nonlinearity`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearForm {
    Definitional,
    Expanded,
}

pub fn apply_nonlinearity(
    f: &[f64],
    params: &ModelParams,
    grid: &Grid,
    form: NonlinearForm,
) -> Result<Vec<f64>, EvolutionError> {
    check_len(grid, f.len())?;
    Ok(f.iter()
        .enumerate()
        .map(|(i, &v)| {
            let r = grid.node(i);
            match form {
                NonlinearForm::Definitional => nonlinearity_definitional(v, r, params),
                NonlinearForm::Expanded => nonlinearity_expanded(v, r, params),
            }
        })
        .collect())
}

/// Similarity data of the physical initial value `φ + v₀` for blowup time
/// `T`: `T^{1/(p−1)} (φ(√T r) + v₀(√T r)) − φ(r)`.
pub fn initial_data_op<F: Fn(f64) -> f64>(
    v0: F,
    big_t: f64,
    params: &ModelParams,
    grid: &Grid,
) -> Result<Vec<f64>, EvolutionError> {
    if !(0.5..=1.5).contains(&big_t) {
        return Err(EvolutionError::Range { t: big_t });
    }
    let scale = powf(big_t, params.m());
    let st = sqrt(big_t);
    Ok(grid
        .nodes()
        .iter()
        .map(|&r| scale * (params.phi(st * r) + v0(st * r)) - params.phi(r))
        .collect())
}

/// `d/dT` of the initial-data map at `T = 1, v₀ = 0` is `C̃·g` with
/// `C̃ = b a^{1/(p−1)}/(p−1)`.
pub fn initial_data_slope(params: &ModelParams) -> f64 {
    params.m() * params.b() * powf(params.a(), params.m())
}

/// Linear part of the similarity flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearPart {
    /// `L` with the model potential `V`.
    Model,
    /// `L` with `V = 0`.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityConfig {
    pub grid: Grid,
    pub dtau: f64,
    pub ell: u32,
    pub linear: LinearPart,
    pub nonlinear: bool,
}

impl SimilarityConfig {
    pub fn linear(grid: Grid, dtau: f64, ell: u32) -> Self {
        Self { grid, dtau, ell, linear: LinearPart::Model, nonlinear: false }
    }

    pub fn nonlinear(grid: Grid, dtau: f64) -> Self {
        Self { grid, dtau, ell: 0, linear: LinearPart::Model, nonlinear: true }
    }
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self::nonlinear(Grid::new(12.0, 1199).expect("valid default grid"), DEFAULT_DTAU)
    }
}

/// One recorded point of a similarity trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub tau: f64,
    pub sup_norm: f64,
    pub sigma_norm: f64,
    /// `⟨f, g⟩_σ/⟨g, g⟩_σ`; zero for `ℓ > 0`, where `g` has no component.
    pub unstable_coef: f64,
}

/// A similarity-variable field, stored in the conjugated variable.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityState {
    pub tau: f64,
    pub ell: u32,
    conj: Vec<f64>,
    pub history: Vec<HistoryRow>,
}

impl SimilarityState {
    /// State with `f` given in the original variable.
    pub fn from_values(f: &[f64], ell: u32, grid: &Grid) -> Result<Self, EvolutionError> {
        check_len(grid, f.len())?;
        let w = conjugation_weight(grid);
        Ok(Self { tau: 0.0, ell, conj: f.iter().zip(&w).map(|(a, b)| a * b).collect(), history: Vec::new() })
    }

    /// State with `v = r e^{−r²/8} f` given directly.
    pub fn from_conjugated(v: Vec<f64>, ell: u32, grid: &Grid) -> Result<Self, EvolutionError> {
        check_len(grid, v.len())?;
        Ok(Self { tau: 0.0, ell, conj: v, history: Vec::new() })
    }

    pub fn conjugated(&self) -> &[f64] {
        &self.conj
    }

    /// `f` at the grid nodes.
    pub fn values(&self, grid: &Grid) -> Vec<f64> {
        let w = conjugation_weight(grid);
        self.conj.iter().zip(&w).map(|(a, b)| a / b).collect()
    }

    pub fn sigma_norm(&self, h: f64) -> f64 {
        sqrt(inner_conj(&self.conj, &self.conj, h))
    }
}

/// IMEX Euler for the similarity flow:
/// `(I + Δτ B) v^{n+1} = v^n + Δτ · r e^{−r²/8} N(f^n)`.
#[derive(Debug, Clone)]
pub struct SimilarityStepper {
    config: SimilarityConfig,
    // B scaled by Δτ
    scaled: SymTridiag,
    factor: ShiftedFactor,
    weight: Vec<f64>,
    inv_weight: Vec<f64>,
    // expansion coefficients of N, 2p−2 per node
    expansion: Vec<f64>,
    terms: usize,
    projection: Option<ProjectionWeights>,
    threshold: f64,
}

impl SimilarityStepper {
    pub fn new(params: &ModelParams, config: SimilarityConfig) -> Result<Self, EvolutionError> {
        if !(config.dtau > 0.0 && config.dtau <= DTAU_MAX) {
            return Err(EvolutionError::Step { dtau: config.dtau });
        }
        if config.nonlinear && (config.ell != 0 || config.linear != LinearPart::Model) {
            return Err(EvolutionError::NonlinearSetup);
        }
        if params.d() != 3 {
            return Err(SpectralError::Dimension { d: params.d() }.into());
        }
        let grid = config.grid;
        let ell = f64::from(config.ell);
        let m = params.m();
        let q = |r: f64| {
            let v = match config.linear {
                LinearPart::Model => params.potential_v(r),
                LinearPart::Free => 0.0,
            };
            r * r / 16.0 - 0.75 + m - v + ell * (ell + 1.0) / (r * r)
        };
        let mut b = discretize_fn(q, &grid)?;
        for d in b.diag.iter_mut() {
            *d *= config.dtau;
        }
        for e in b.off.iter_mut() {
            *e *= config.dtau;
        }
        let factor = ShiftedFactor::new(&b, 1.0).ok_or(EvolutionError::Step { dtau: config.dtau })?;
        let weight = conjugation_weight(&grid);
        let inv_weight = weight.iter().map(|w| 1.0 / w).collect();
        let terms = (2 * params.p() - 2) as usize;
        let expansion = if config.nonlinear {
            grid.nodes().iter().flat_map(|&r| expansion_coefficients(r, params)).collect()
        } else {
            Vec::new()
        };
        let projection = if config.ell == 0 && config.linear == LinearPart::Model {
            Some(ProjectionWeights::discrete(params, &grid)?)
        } else {
            None
        };
        let threshold = blowup_threshold(params, &grid);
        Ok(Self { config, scaled: b, factor, weight, inv_weight, expansion, terms, projection, threshold })
    }

    pub fn config(&self) -> &SimilarityConfig {
        &self.config
    }

    pub fn projection(&self) -> Option<&ProjectionWeights> {
        self.projection.as_ref()
    }

    /// Sup norm above which a nonlinear run reports blowup.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn sup_values(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.inv_weight).fold(0.0, |a, (x, w)| a.max((x * w).abs()))
    }

    pub fn record(&self, state: &SimilarityState) -> HistoryRow {
        HistoryRow {
            tau: state.tau,
            sup_norm: self.sup_values(&state.conj),
            sigma_norm: state.sigma_norm(self.config.grid.h()),
            unstable_coef: self.projection.as_ref().map_or(0.0, |p| p.coefficient_conj(&state.conj)),
        }
    }

    /// Advances `state` by one step.
    pub fn step(&self, state: &mut SimilarityState) -> Result<(), EvolutionError> {
        self.step_fraction(state, 1.0)
    }

    /// Advances `state` by `fraction·Δτ` with `0 < fraction <= 1`.
    fn step_fraction(&self, state: &mut SimilarityState, fraction: f64) -> Result<(), EvolutionError> {
        check_len(&self.config.grid, state.conj.len())?;
        let dt = self.config.dtau * fraction;
        let partial;
        let factor = if fraction == 1.0 {
            &self.factor
        } else {
            let mut b = self.scaled.clone();
            b.diag.iter_mut().chain(b.off.iter_mut()).for_each(|x| *x *= fraction);
            partial = ShiftedFactor::new(&b, 1.0).ok_or(EvolutionError::Step { dtau: dt })?;
            &partial
        };
        if self.config.nonlinear {
            let t = self.terms;
            for (i, v) in state.conj.iter_mut().enumerate() {
                let f = *v * self.inv_weight[i];
                *v += dt * self.weight[i] * horner_tail(&self.expansion[i * t..(i + 1) * t], f);
            }
        }
        factor.solve_in_place(&mut state.conj);
        state.tau += dt;
        if self.config.nonlinear {
            let sup = self.sup_values(&state.conj);
            if !(sup <= self.threshold) {
                let coef = self.projection.as_ref().map_or(0.0, |p| p.coefficient_conj(&state.conj));
                return Err(EvolutionError::BlowupDetected { tau: state.tau, sup, coef });
            }
        }
        Ok(())
    }

    /// Steps until `tau_end`, recording every `record_every` steps and at
    /// the end. A final partial step lands exactly on `tau_end`.
    pub fn evolve(&self, state: &mut SimilarityState, tau_end: f64, record_every: usize) -> Result<(), EvolutionError> {
        let span = (tau_end - state.tau) / self.config.dtau;
        let whole = crate::math::floor(span + 1e-9).max(0.0);
        let rest = span - whole;
        let steps = whole as usize;
        let every = record_every.max(1);
        if state.history.last().is_none_or(|h| h.tau < state.tau) {
            let row = self.record(state);
            state.history.push(row);
        }
        for k in 1..=steps {
            self.step(state)?;
            if k % every == 0 || (k == steps && rest <= 1e-9) {
                let row = self.record(state);
                state.history.push(row);
            }
        }
        if rest > 1e-9 {
            self.step_fraction(state, rest)?;
            let row = self.record(state);
            state.history.push(row);
        }
        Ok(())
    }
}

/// Free-function form of [`SimilarityStepper::step`].
pub fn step_similarity(state: &mut SimilarityState, stepper: &SimilarityStepper) -> Result<(), EvolutionError> {
    stepper.step(state)
}

/// Radial heat kernel in three dimensions:
/// `(G_α * f)(ρ) = ∫₀^∞ K(ρ, s) f(s) ds`.
fn radial_kernel(rho: f64, s: f64, alpha: f64) -> f64 {
    let norm = 1.0 / sqrt(4.0 * core::f64::consts::PI * alpha);
    let x = rho * s / (2.0 * alpha);
    if x < 1.0 {
        // 2 e^{−(ρ²+s²)/4α} sinh(x)/ρ, with sinh(x)/ρ = (s/2α)·sinh(x)/x
        let shx = if x == 0.0 { 1.0 } else { libm::sinh(x) / x };
        s * norm * 2.0 * exp(-(rho * rho + s * s) / (4.0 * alpha)) * shx * s / (2.0 * alpha)
    } else {
        s / rho
            * norm
            * (exp(-(rho - s) * (rho - s) / (4.0 * alpha)) - exp(-(rho + s) * (rho + s) / (4.0 * alpha)))
    }
}

/// `[S₀(τ)f](r) = e^{−τ/(p−1)} (G_{α(τ)} * f)(e^{−τ/2} r)` with
/// `α(τ) = 1 − e^{−τ}`, evaluated at the grid nodes by quadrature.
pub fn free_semigroup_apply<F: Fn(f64) -> f64>(f: F, tau: f64, params: &ModelParams, grid: &Grid) -> Vec<f64> {
    let alpha = -libm::expm1(-tau);
    let damp = exp(-tau * params.m());
    let shrink = exp(-tau / 2.0);
    let reach = 40.0 * sqrt(alpha);
    grid.nodes()
        .iter()
        .map(|&r| {
            let rho = shrink * r;
            let lo = (rho - reach).max(0.0);
            let q = integrate(|s| radial_kernel(rho, s, alpha) * f(s), lo, rho + reach, &[rho], 1e-12, 1e-15);
            damp * q.value
        })
        .collect()
}

/// `S₀(τ)` applied to `e^{−r²/(4s)}` in closed form.
pub fn free_semigroup_gaussian(s: f64, tau: f64, m: f64, r: f64) -> f64 {
    let alpha = -libm::expm1(-tau);
    exp(-tau * m) * powf(s / (s + alpha), 1.5) * exp(-exp(-tau) * r * r / (4.0 * (s + alpha)))
}

// ---- blowup-time tuning ---------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneConfig {
    pub similarity: SimilarityConfig,
    pub tau_end: f64,
    /// Half width of the search interval around `T = 1`.
    pub half_width: f64,
    /// Bisection stops when the bracket is narrower than this.
    pub t_tol: f64,
    pub max_iter: usize,
    pub record_every: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            similarity: SimilarityConfig::default(),
            tau_end: DEFAULT_TAU_END,
            half_width: 0.05,
            t_tol: 1e-13,
            max_iter: 80,
            record_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub big_t: f64,
    /// Unstable coefficient at `tau_end` for the returned `T`.
    pub coef: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub trajectory: Vec<HistoryRow>,
    /// Final field `f(tau_end)`.
    pub final_values: Vec<f64>,
}

/// Evolves the data for blowup time `t` and returns the unstable
/// coefficient at the end; an escaping run reports the coefficient at
/// detection.
fn trial<F: Fn(f64) -> f64>(
    v0: &F,
    t: f64,
    params: &ModelParams,
    stepper: &SimilarityStepper,
    cfg: &TuneConfig,
) -> Result<(f64, SimilarityState), EvolutionError> {
    let grid = cfg.similarity.grid;
    let f0 = initial_data_op(v0, t, params, &grid)?;
    let mut state = SimilarityState::from_values(&f0, 0, &grid)?;
    match stepper.evolve(&mut state, cfg.tau_end, cfg.record_every) {
        Ok(()) => Ok((state.history.last().map_or(0.0, |h| h.unstable_coef), state)),
        Err(EvolutionError::BlowupDetected { coef, .. }) => Ok((coef, state)),
        Err(e) => Err(e),
    }
}

/// Chooses `T` so that the unstable coefficient at `tau_end` vanishes, by
/// bisection on its sign over `[1 − Δ, 1 + Δ]`.
pub fn tune_blowup_time<F: Fn(f64) -> f64>(
    v0: F,
    params: &ModelParams,
    cfg: &TuneConfig,
) -> Result<TuneResult, EvolutionError> {
    let stepper = SimilarityStepper::new(params, cfg.similarity)?;
    let (mut lo, mut hi) = (1.0 - cfg.half_width, 1.0 + cfg.half_width);
    let (c_lo, _) = trial(&v0, lo, params, &stepper, cfg)?;
    let (c_hi, _) = trial(&v0, hi, params, &stepper, cfg)?;
    if c_lo == 0.0 || c_hi == 0.0 || (c_lo < 0.0) == (c_hi < 0.0) {
        let (t, c) = if c_lo == 0.0 { (lo, c_lo) } else if c_hi == 0.0 { (hi, c_hi) } else {
            return Err(EvolutionError::NoSignChange { coef_lo: c_lo, coef_hi: c_hi });
        };
        let (_, st) = trial(&v0, t, params, &stepper, cfg)?;
        return Ok(finish(t, c, (lo, hi), 0, st, &cfg.similarity.grid));
    }
    let lo_negative = c_lo < 0.0;
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        let (c, st) = trial(&v0, mid, params, &stepper, cfg)?;
        if c == 0.0 || hi - lo <= cfg.t_tol || iterations >= cfg.max_iter || !(mid > lo && mid < hi) {
            return Ok(finish(mid, c, (lo, hi), iterations, st, &cfg.similarity.grid));
        }
        if (c < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

fn finish(t: f64, coef: f64, bracket: (f64, f64), iterations: usize, st: SimilarityState, grid: &Grid) -> TuneResult {
    let final_values = st.values(grid);
    TuneResult { big_t: t, coef, bracket, iterations, trajectory: st.history, final_values }
}

// ---- physical variables ---------------------------------------------------

/// Spatial and temporal discretisation of the physical solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhysicalScheme {
    /// Second-order centred differences, forward Euler.
    Centered2Euler,
    /// Fourth-order centred differences, classical Runge–Kutta.
    Centered4Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConfig {
    pub h: f64,
    pub r_max: f64,
    pub scheme: PhysicalScheme,
    /// Diffusive step is `dt_factor · h²/4`.
    pub dt_factor: f64,
    /// The run stops once `‖u‖_∞` reaches this.
    pub stop_sup: f64,
    pub t_max: f64,
    /// Snapshots are stored on multiples of this time; zero disables them.
    pub snapshot_every: f64,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self {
            h: 0.02,
            r_max: 20.0,
            scheme: PhysicalScheme::Centered2Euler,
            dt_factor: 1.0,
            stop_sup: 1e6,
            t_max: 10.0,
            snapshot_every: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalRun {
    pub config: PhysicalConfig,
    /// Node `j` sits at `r = j h`; the last node carries fixed boundary data.
    pub r: Vec<f64>,
    pub t_est: f64,
    /// Coefficient of determination of the blowup-rate fit.
    pub fit_r2: f64,
    /// Fitted slope of `‖u‖_∞^{−(p−1)}` against `t`.
    pub fit_slope: f64,
    /// `(t, ‖u(t)‖_∞)`.
    pub sup_history: Vec<(f64, f64)>,
    pub snapshots: Vec<Snapshot>,
}

struct PhysicalOperator<'a> {
    params: &'a ModelParams,
    h: f64,
    r: &'a [f64],
    scheme: PhysicalScheme,
}

impl PhysicalOperator<'_> {
    /// Right-hand side `Δu + F(u)`; the last node is frozen.
    fn rhs(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len() - 1;
        let h2 = self.h * self.h;
        let even = |j: isize| u[j.unsigned_abs()];
        for j in 0..n {
            let lap = match self.scheme {
                PhysicalScheme::Centered2Euler => {
                    if j == 0 {
                        6.0 * (u[1] - u[0]) / h2
                    } else {
                        (u[j + 1] - 2.0 * u[j] + u[j - 1]) / h2 + (u[j + 1] - u[j - 1]) / (self.h * self.r[j])
                    }
                }
                PhysicalScheme::Centered4Rk4 => {
                    if j + 2 > n {
                        (u[j + 1] - 2.0 * u[j] + u[j - 1]) / h2 + (u[j + 1] - u[j - 1]) / (self.h * self.r[j])
                    } else {
                        let ji = j as isize;
                        let (m2, m1, z, p1, p2) = (even(ji - 2), even(ji - 1), u[j], u[j + 1], u[j + 2]);
                        let d2 = (-m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) / (12.0 * h2);
                        if j == 0 {
                            3.0 * d2
                        } else {
                            let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * self.h);
                            d2 + 2.0 * d1 / self.r[j]
                        }
                    }
                }
            };
            out[j] = lap + reaction(u[j], self.r[j], self.params);
        }
        out[n] = 0.0;
    }
}

fn sup_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Integrates the radial physical equation from `u0` (sampled at `r = j h`)
/// until `‖u‖_∞ ≥ stop_sup`, with `dt = min(dt_factor·h²/4, 0.1‖u‖_∞^{−(p−1)})`.
///
/// The blowup time is the root of the least-squares line through
/// `‖u‖_∞^{−(p−1)}` over the last decade of growth.
pub fn evolve_physical<F: Fn(f64) -> f64>(
    u0: F,
    params: &ModelParams,
    config: &PhysicalConfig,
) -> Result<PhysicalRun, EvolutionError> {
    if !(config.h > 0.0 && config.r_max > 10.0 * config.h) || !config.r_max.is_finite() {
        return Err(EvolutionError::PhysicalGrid { h: config.h, r_max: config.r_max });
    }
    let nn = crate::math::round(config.r_max / config.h) as usize;
    let r: Vec<f64> = (0..=nn).map(|j| j as f64 * config.h).collect();
    let mut u: Vec<f64> = r.iter().map(|&x| u0(x)).collect();
    let op = PhysicalOperator { params, h: config.h, r: &r, scheme: config.scheme };
    let pm1 = f64::from(params.p() - 1);
    let dt_diff = config.dt_factor * config.h * config.h / 4.0;
    let mut t = 0.0;
    let mut history = Vec::new();
    let mut snapshots = Vec::new();
    let mut next_snap = if config.snapshot_every > 0.0 { 0.0 } else { f64::INFINITY };
    let mut snap_index = 0usize;
    let mut k1 = vec![0.0; u.len()];
    let (mut k2, mut k3, mut k4, mut tmp) = (k1.clone(), k1.clone(), k1.clone(), k1.clone());
    let mut last_record = f64::NEG_INFINITY;
    loop {
        let sup = sup_abs(&u);
        if !sup.is_finite() {
            break;
        }
        if t >= next_snap - 1e-12 {
            snapshots.push(Snapshot { t, values: u.clone() });
            snap_index += 1;
            next_snap = snap_index as f64 * config.snapshot_every;
        }
        if sup >= config.stop_sup / 10.0 || t - last_record >= 1e-4 {
            history.push((t, sup));
            last_record = t;
        }
        if sup >= config.stop_sup {
            break;
        }
        if t > config.t_max {
            return Err(EvolutionError::NoBlowup { t_max: config.t_max });
        }
        let mut dt = dt_diff.min(0.1 * powf(sup.max(1e-300), -pm1));
        if t + dt > next_snap {
            dt = next_snap - t;
        }
        match config.scheme {
            PhysicalScheme::Centered2Euler => {
                op.rhs(&u, &mut k1);
                for (x, k) in u.iter_mut().zip(&k1) {
                    *x += dt * k;
                }
            }
            PhysicalScheme::Centered4Rk4 => {
                op.rhs(&u, &mut k1);
                for i in 0..u.len() {
                    tmp[i] = u[i] + 0.5 * dt * k1[i];
                }
                op.rhs(&tmp, &mut k2);
                for i in 0..u.len() {
                    tmp[i] = u[i] + 0.5 * dt * k2[i];
                }
                op.rhs(&tmp, &mut k3);
                for i in 0..u.len() {
                    tmp[i] = u[i] + dt * k3[i];
                }
                op.rhs(&tmp, &mut k4);
                for i in 0..u.len() {
                    u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        t += dt;
    }
    let fit: Vec<(f64, f64)> = history
        .iter()
        .filter(|(_, s)| *s >= config.stop_sup / 10.0)
        .map(|&(t, s)| (t, powf(s, -pm1)))
        .collect();
    let (slope, intercept, r2) = linear_fit(&fit);
    Ok(PhysicalRun {
        config: *config,
        r,
        t_est: -intercept / slope,
        fit_r2: r2,
        fit_slope: slope,
        sup_history: history,
        snapshots,
    })
}

/// Least-squares line `y = slope·x + intercept` and its `R²`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - slope * p.0 - intercept) * (p.1 - slope * p.0 - intercept)).sum();
    (slope, intercept, 1.0 - ss_res / syy)
}

/// Radius of the rescaled core on which the error is measured.
pub const RESCALED_CORE: f64 = 5.0;
const RESCALED_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaledError {
    /// Time of the snapshot used.
    pub t: f64,
    /// `T_est − t`.
    pub s: f64,
    pub error: f64,
}

/// Cubic Lagrange interpolation on the uniform grid `r_j = j h`, with the
/// even reflection `u(−r) = u(r)`.
fn interp_cubic(u: &[f64], h: f64, x: f64) -> f64 {
    let n = u.len() - 1;
    let pos = x / h;
    let j = (libm::floor(pos) as isize).clamp(0, n as isize - 1);
    let base = (j - 1).min(n as isize - 3);
    let t = pos - base as f64;
    let at = |k: isize| u[(base + k).unsigned_abs()];
    let (y0, y1, y2, y3) = (at(0), at(1), at(2), at(3));
    // Lagrange basis on nodes 0, 1, 2, 3
    y0 * (t - 1.0) * (t - 2.0) * (t - 3.0) / -6.0 + y1 * t * (t - 2.0) * (t - 3.0) / 2.0
        + y2 * t * (t - 1.0) * (t - 3.0) / -2.0
        + y3 * t * (t - 1.0) * (t - 2.0) / 6.0
}

/// `sup_y |(T−t)^{1/(p−1)} u(t, √(T−t) y) − φ(y)|` over `y ∈ [0, 5]`, using
/// the stored snapshot nearest to `t`.
pub fn rescaled_error(run: &PhysicalRun, t_est: f64, t: f64, params: &ModelParams) -> Result<RescaledError, EvolutionError> {
    let snap = run
        .snapshots
        .iter()
        .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
        .ok_or(EvolutionError::OutOfHistory { t })?;
    let spacing = if run.config.snapshot_every > 0.0 { run.config.snapshot_every } else { 0.0 };
    if (snap.t - t).abs() > 0.5 * spacing + 1e-12 || snap.t >= t_est {
        return Err(EvolutionError::OutOfHistory { t });
    }
    let s = t_est - snap.t;
    let h = run.config.h;
    let rs = sqrt(s);
    // keep clear of the frozen boundary node
    let r_edge = (run.r.len() - 3) as f64 * h;
    let y_max = RESCALED_CORE.min(r_edge / rs);
    if rs * y_max < 3.0 * h {
        return Err(EvolutionError::OutOfHistory { t });
    }
    let scale = powf(s, params.m());
    let mut err = 0.0f64;
    for i in 0..RESCALED_SAMPLES {
        let y = y_max * i as f64 / (RESCALED_SAMPLES - 1) as f64;
        let v = scale * interp_cubic(&snap.values, h, rs * y) - params.phi(y);
        err = err.max(v.abs());
    }
    Ok(RescaledError { t: snap.t, s, error: err })
}

/// Physical times `T(1 − e^{−τ_k})` of similarity checkpoints `τ_k`.
pub fn checkpoint_times(t_est: f64, taus: &[f64]) -> Vec<f64> {
    taus.iter().map(|&tau| -t_est * libm::expm1(-tau)).collect()
}
