//! Zero-point sum, continuum integral and their difference.
//!
//! At fixed in-plane wavevector the discrete zero-point energy samples the
//! `k_z` dependence at `k_z a = π n / N` (`n = 1..2N`), which is the
//! trapezoid rule `T` with `2N` points over one period, while the continuum
//! counterpart is the exact mean `I`. The column difference
//!
//! ```text
//! g(k⊥) = Σ_σ (N/2) [T(ε_σ) - I(ε_σ)]
//! ```
//!
//! is formed first and only then integrated over the in-plane zone with
//! measure `d²(k⊥a)/(2π)²`, using the quadrant `[0, π]²` and a factor 4.
//!
//! # Subtracted evaluation for ferrimagnets
//!
//! The ferrimagnet energy can be rewritten exactly as `ε = u + r` with
//! `u = A_σ + β/2` linear in the z term `t = reg(k_z)^(l/2)` and
//! `r = κ / (ε + u)` a remainder of order `ħω_M² / A_σ`. Then
//!
//! ```text
//! T(ε) - I(ε) = D_z [T(t) - I(t)] + T(r) - I(r)
//! ```
//!
//! The first bracket is independent of `k⊥` and is computed once; it vanishes
//! identically when `l/2` is an integer below `2N` because `t` is then a
//! trigonometric polynomial the trapezoid rule integrates exactly. For `l = 2`
//! the leading part of the remainder, `κ / 2u`, is the reciprocal of
//! `α - b cos k_z`, whose trapezoid error has the closed form
//! `2 I ρ^M / (1 - ρ^M)`; only the `O(κ²)` tail is left to quadrature. This is
//! what makes the exponentially small `l = 2` energy resolvable in binary64.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{reg, AfmParams, DispersionError, DispersionModel, FerriColumn, FerriParams, ModeIndex, Wavevector};
use crate::par::Exec;
use crate::quadrature::{
    graded_toward_lo, integrate_channels_1d, integrate_channels_2d, CompiledRule, QuadResult,
    QuadratureError, QuadratureSpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CasimirError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error("tolerance not met: E_cas = {} meV with error estimate {} meV", best.e_cas, best.error_estimate)]
    ToleranceNotMet { best: Box<CasimirResult> },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl CasimirError {
    /// Numerical result that is still usable despite the error.
    pub fn best(&self) -> Option<&CasimirResult> {
        match self {
            CasimirError::ToleranceNotMet { best } => Some(best),
            _ => None,
        }
    }
}

/// Inner (`k_z`) and outer (in-plane) quadrature, both on `[0, π]`.
///
/// The `k_z` window is folded: `ε` is even and `2π`-periodic in `k_z`, so the
/// mean over `[0, 2π]` equals the mean over `[0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasimirQuadrature {
    pub inner: QuadratureSpec,
    pub outer: QuadratureSpec,
}

impl CasimirQuadrature {
    pub const INNER_ABS_TOL: f64 = 1e-12;
    pub const OUTER_ABS_TOL: f64 = 1e-10;
    pub const FAST_ABS_TOL: f64 = 1e-8;

    /// Graded `k_z` panels toward the branch point at `k_z = 0`, and in-plane
    /// panels graded into the square of half-width 0.1 around the origin.
    pub fn standard() -> Self {
        Self::build(10, 8, 0.3, 18, 12, Self::INNER_ABS_TOL, Self::OUTER_ABS_TOL)
    }

    /// Lower orders and shallower grading, tolerances relaxed to 1e-8 meV.
    pub fn fast() -> Self {
        Self::build(8, 6, 0.25, 12, 8, Self::FAST_ABS_TOL, Self::FAST_ABS_TOL)
    }

    fn build(
        inner_order: usize,
        outer_order: usize,
        ratio: f64,
        inner_levels: usize,
        outer_levels: usize,
        inner_tol: f64,
        outer_tol: f64,
    ) -> Self {
        let mut inner_breaks = graded_toward_lo(0.0, 0.5 * PI, ratio, inner_levels);
        inner_breaks.push(PI);
        let mut outer_breaks = graded_toward_lo(0.0, 0.1, ratio, outer_levels);
        outer_breaks.extend([0.3, 0.7, 1.4, 2.2, PI]);
        let inner = QuadratureSpec::from_breaks(&inner_breaks, inner_order)
            .and_then(|s| s.with_tolerances(inner_tol, 1e-12))
            .expect("valid built-in inner rule");
        let outer = QuadratureSpec::from_breaks(&outer_breaks, outer_order)
            .and_then(|s| s.with_tolerances(outer_tol, 1e-9))
            .expect("valid built-in outer rule");
        CasimirQuadrature { inner, outer }
    }

    pub fn validate(&self) -> Result<(), CasimirError> {
        for (name, spec) in [("inner", &self.inner), ("outer", &self.outer)] {
            spec.validate()?;
            if spec.lo() != 0.0 || spec.hi() != PI {
                return Err(CasimirError::InvalidInput(format!(
                    "{name} quadrature must span [0, π], got [{}, {}]",
                    spec.lo(),
                    spec.hi()
                )));
            }
        }
        Ok(())
    }
}

impl Default for CasimirQuadrature {
    fn default() -> Self {
        Self::standard()
    }
}

/// How the column difference is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Strategy {
    /// `T(ε) - I(ε)` with the full energies.
    Direct,
    /// Exact split of the ferrimagnet energy (see module docs). Same as
    /// `Direct` for antiferromagnets.
    #[default]
    Subtracted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub exec: Exec,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CasimirResult {
    pub n_z: u32,
    /// Casimir energy per surface magnetic unit cell, meV.
    pub e_cas: f64,
    /// `E_cas · N_z^b`, meV.
    pub coefficient: f64,
    pub b_exponent: f64,
    pub e_sum: f64,
    pub e_int: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
    /// `N_z <= 3`, where edge effects are not negligible.
    pub ultrathin: bool,
}

impl CasimirResult {
    pub fn with_exponent(mut self, b: f64) -> Self {
        self.b_exponent = b;
        self.coefficient = casimir_coefficient(&self, b);
        self
    }
}

pub fn casimir_coefficient(result: &CasimirResult, b: f64) -> f64 {
    if b == 0.0 {
        return result.e_cas;
    }
    result.e_cas * (result.n_z as f64).powf(b)
}

/// Closed-form asymptotic coefficient `(-π²/720)(ħω₀/2)` of the gapless
/// antiferromagnet.
pub fn continuum_asymptote(p: &AfmParams) -> Result<f64, CasimirError> {
    if p.delta != 0.0 {
        return Err(CasimirError::NotApplicable(format!("asymptote requires δ = 0, got {}", p.delta)));
    }
    Ok(-PI * PI * p.hbar_omega0 / 1440.0)
}

fn check_nz(n: u32) -> Result<(), CasimirError> {
    if n == 0 {
        Err(CasimirError::InvalidInput("N_z must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `Σ_σ (1/2)(1/2) Σ_{n=1}^{2N} |ε_σ(k_x, k_y, πn/N)|`.
pub fn kz_discrete_sum(model: &DispersionModel, kperp: (f64, f64), n: u32) -> Result<f64, CasimirError> {
    check_nz(n)?;
    let mut total = 0.0;
    for sigma in ModeIndex::BOTH {
        let mut acc = 0.0;
        for j in 1..=2 * n {
            // n = 2N is k_z = 2π, identical to 0 by periodicity.
            let kz = PI * (j % (2 * n)) as f64 / n as f64;
            acc += model.energy(Wavevector::new(kperp.0, kperp.1, kz), sigma, n)?.abs();
        }
        total += 0.25 * acc;
    }
    Ok(total)
}

/// `Σ_σ (1/2) N ∫_BZ d(k_z a)/2π |ε_σ|`, evaluated on the folded window.
pub fn kz_continuum_integral(
    model: &DispersionModel,
    kperp: (f64, f64),
    n: u32,
    spec: &QuadratureSpec,
) -> Result<QuadResult, CasimirError> {
    check_nz(n)?;
    let mut total = QuadResult::default();
    for sigma in ModeIndex::BOTH {
        let outcome = integrate_channels_1d::<1, CasimirError, _>(
            |kz| Ok([model.energy(Wavevector::new(kperp.0, kperp.1, kz), sigma, n)?.abs()]),
            spec,
        )?;
        let r = outcome.channels[0];
        if !outcome.converged {
            return Err(QuadratureError::ToleranceNotMet { best: r, refinements: outcome.refinements }.into());
        }
        let scale = 0.5 * n as f64 / PI;
        total.value += scale * r.value;
        total.error_estimate += scale * r.error_estimate;
        total.evaluations += r.evaluations;
    }
    Ok(total)
}

/// `(z term, weight)` pairs for the sum and both quadrature levels. Sum
/// weights are the multiplicities of the folded nodes divided by `2N`;
/// quadrature weights include the `1/π` of the folded mean.
struct Tables {
    sum: Vec<(f64, f64)>,
    low: Vec<(f64, f64)>,
    high: Vec<(f64, f64)>,
}

impl Tables {
    fn new(n: u32, rule: &CompiledRule, z_term: impl Fn(f64) -> f64) -> Self {
        let m = 2.0 * n as f64;
        let sum = (0..=n)
            .map(|j| {
                let kz = PI * j as f64 / n as f64;
                let mult = if j == 0 || j == n { 1.0 } else { 2.0 };
                (z_term(kz), mult / m)
            })
            .collect();
        let map = |nodes: &[(f64, f64)]| nodes.iter().map(|&(x, w)| (z_term(x), w / PI)).collect();
        Tables { sum, low: map(&rule.low), high: map(&rule.high) }
    }
}

#[derive(Clone, Copy)]
enum Kernel {
    Afm { p: AfmParams, m: f64 },
    Ferri(FerriColumn),
    FerriSplit(FerriColumn),
    FerriSplitTail { col: FerriColumn, kappa: f64 },
}

impl Kernel {
    /// `(ε, q)` where `q` is the part whose `T - I` is taken numerically.
    #[inline]
    fn eval(&self, t: f64) -> Result<(f64, f64), DispersionError> {
        match self {
            Kernel::Afm { p, m } => {
                let e = p.energy_from_lattice(m + t);
                Ok((e, e))
            }
            Kernel::Ferri(c) => {
                let e = c.energy(t)?;
                Ok((e, e))
            }
            Kernel::FerriSplit(c) => {
                let s = c.split(t)?;
                Ok((s.energy, s.r))
            }
            Kernel::FerriSplitTail { col, kappa } => {
                // r - κ/2u = -κ² / (2u (ε + u)²)
                let s = col.split(t)?;
                let d = s.energy + s.u;
                Ok((s.energy, -kappa * kappa / (2.0 * s.u * d * d)))
            }
        }
    }
}

/// Trapezoid-minus-mean of `1/(α - b cos x)` with `M` points, given
/// `α - b = gap > 0` and `b > 0`.
fn reciprocal_cosine_defect(gap: f64, b: f64, m: u32) -> f64 {
    let root = (gap * (gap + 2.0 * b)).sqrt();
    let mean = 1.0 / root;
    let rho = b / (gap + b + root);
    let rho_m = rho.powi(m as i32);
    2.0 * mean * rho_m / (1.0 - rho_m)
}

struct Column {
    /// `g(k⊥)` contribution handled numerically.
    g: f64,
    /// `Σ_σ (N/2) T(ε_σ)`.
    e_sum: f64,
    /// Inner quadrature error, already scaled like `g`.
    err: f64,
    evaluations: u64,
}

struct Prepared<'a> {
    model: &'a DispersionModel,
    n: u32,
    strategy: Strategy,
    inner: &'a QuadratureSpec,
    tables: Tables,
}

impl Prepared<'_> {
    fn z_term(&self, kz: f64) -> f64 {
        match self.model {
            DispersionModel::Afm(_) => reg(kz),
            DispersionModel::Ferri(p) => p.z_term(kz),
        }
    }

    fn kernels(&self, kx: f64, ky: f64) -> Vec<(Kernel, f64)> {
        match (self.model, self.strategy) {
            // Degenerate branches: one evaluation, counted twice.
            (DispersionModel::Afm(p), _) => vec![(Kernel::Afm { p: *p, m: reg(kx) + reg(ky) }, 2.0)],
            (DispersionModel::Ferri(p), Strategy::Direct) => ModeIndex::BOTH
                .iter()
                .map(|&s| (Kernel::Ferri(p.column(kx, ky, s, self.n)), 1.0))
                .collect(),
            (DispersionModel::Ferri(p), Strategy::Subtracted) => ModeIndex::BOTH
                .iter()
                .map(|&s| {
                    let col = p.column(kx, ky, s, self.n);
                    if p.l_exponent == 2.0 {
                        (Kernel::FerriSplitTail { col, kappa: col.kappa() }, 1.0)
                    } else {
                        (Kernel::FerriSplit(col), 1.0)
                    }
                })
                .collect(),
        }
    }

    fn column(&self, kx: f64, ky: f64) -> Result<Column, CasimirError> {
        let half_n = 0.5 * self.n as f64;
        let mut out = Column { g: 0.0, e_sum: 0.0, err: 0.0, evaluations: 0 };
        for (kernel, mult) in self.kernels(kx, ky) {
            let mut t_eps = 0.0;
            let mut t_q = 0.0;
            for &(t, w) in &self.tables.sum {
                let (e, q) = kernel.eval(t)?;
                t_eps += w * e;
                t_q += w * q;
            }
            let level = |nodes: &[(f64, f64)]| -> Result<f64, DispersionError> {
                let mut acc = 0.0;
                for &(t, w) in nodes {
                    acc += w * kernel.eval(t)?.1;
                }
                Ok(acc)
            };
            let low = level(&self.tables.low)?;
            let mut i_q = level(&self.tables.high)?;
            let mut i_err = (i_q - low).abs();
            out.evaluations += (self.tables.sum.len() + self.tables.low.len() + self.tables.high.len()) as u64;
            if !self.inner.accepts(i_q, i_err) {
                let refined = integrate_channels_1d::<1, CasimirError, _>(
                    |kz| Ok([kernel.eval(self.z_term(kz))?.1 / PI]),
                    &self.inner.bisected(),
                )?;
                i_q = refined.channels[0].value;
                i_err = refined.channels[0].error_estimate;
                out.evaluations += refined.channels[0].evaluations;
            }
            let mut g = t_q - i_q;
            if let Kernel::FerriSplitTail { col, kappa } = kernel {
                let gap = col.base() + 0.5 * col.beta();
                let dz = match self.model {
                    DispersionModel::Ferri(p) => p.dz_over_a2,
                    DispersionModel::Afm(_) => unreachable!(),
                };
                g += 0.5 * kappa * reciprocal_cosine_defect(gap, 2.0 * dz, 2 * self.n);
            }
            out.g += mult * half_n * g;
            out.e_sum += mult * half_n * t_eps;
            out.err += mult * half_n * i_err;
        }
        Ok(out)
    }
}

/// `T(t) - I(t)` for the z term of a ferrimagnet, with its error estimate.
fn z_term_defect(p: &FerriParams, n: u32, inner: &QuadratureSpec) -> Result<(f64, f64), CasimirError> {
    let half = 0.5 * p.l_exponent;
    if half.fract() == 0.0 && half < 2.0 * n as f64 {
        return Ok((0.0, 0.0));
    }
    let rule = inner.compile()?;
    let tables = Tables::new(n, &rule, |kz| p.z_term(kz));
    let t: f64 = tables.sum.iter().map(|&(t, w)| t * w).sum();
    let tight = inner.clone().with_tolerances(1e-16, 1e-15)?;
    let outcome = integrate_channels_1d::<1, CasimirError, _>(|kz| Ok([p.z_term(kz) / PI]), &tight)?;
    let i = outcome.channels[0];
    Ok((t - i.value, i.error_estimate))
}

pub fn casimir_energy(model: &DispersionModel, n_z: u32, quad: &CasimirQuadrature) -> Result<CasimirResult, CasimirError> {
    casimir_energy_with(model, n_z, quad, EvalOptions::default())
}

pub fn casimir_energy_with(
    model: &DispersionModel,
    n_z: u32,
    quad: &CasimirQuadrature,
    opts: EvalOptions,
) -> Result<CasimirResult, CasimirError> {
    check_nz(n_z)?;
    quad.validate()?;
    if let DispersionModel::Ferri(p) = model {
        p.validate()?;
    }
    let rule = quad.inner.compile()?;
    let prepared = Prepared {
        model,
        n: n_z,
        strategy: opts.strategy,
        inner: &quad.inner,
        tables: Tables::new(n_z, &rule, |kz| match model {
            DispersionModel::Afm(_) => reg(kz),
            DispersionModel::Ferri(p) => p.z_term(kz),
        }),
    };
    let evaluations = AtomicU64::new(0);
    let outcome = integrate_channels_2d::<3, CasimirError, _>(
        |kx, ky| {
            let c = prepared.column(kx, ky)?;
            evaluations.fetch_add(c.evaluations, Ordering::Relaxed);
            Ok([c.g, c.e_sum, c.err])
        },
        &quad.outer,
        &quad.outer,
        opts.exec,
    )?;

    // Quadrant of the zone times 4, measure 1/(2π)².
    let measure = 1.0 / (PI * PI);
    let [g, sum, inner_err] = outcome.channels;
    let mut e_cas = measure * g.value;
    let mut error_estimate = measure * (g.error_estimate + inner_err.value);
    if let (DispersionModel::Ferri(p), Strategy::Subtracted) = (model, opts.strategy) {
        let (defect, defect_err) = z_term_defect(p, n_z, &quad.inner)?;
        // Σ_σ (N/2) D_z [T(t) - I(t)], constant over the zone.
        e_cas += n_z as f64 * p.dz_over_a2 * defect;
        error_estimate += n_z as f64 * p.dz_over_a2 * defect_err;
    }
    let e_sum = measure * sum.value;
    let result = CasimirResult {
        n_z,
        e_cas,
        coefficient: e_cas,
        b_exponent: 0.0,
        e_sum,
        e_int: e_sum - e_cas,
        error_estimate,
        evaluations: evaluations.into_inner() + g.evaluations,
        ultrathin: n_z <= 3,
    };
    if !outcome.converged || !quad.outer.accepts(e_cas, error_estimate) {
        return Err(CasimirError::ToleranceNotMet { best: Box::new(result) });
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Magnetization {
    pub n_z: u32,
    pub h_step: f64,
    /// `-∂E_cas/∂H₀` by central difference with step `h_step`.
    pub casimir: f64,
    /// Same with `h_step / 2`.
    pub casimir_half_step: f64,
    /// `|D(h) - D(h/2)| / 3`, the Richardson estimate of the `O(h²)` error.
    pub casimir_error: f64,
    /// `-∂E_int/∂H₀`, the bulk part.
    pub bulk: f64,
    pub bulk_error: f64,
}

/// Casimir and bulk contributions to the magnetization per surface magnetic
/// unit cell (meV per meV of Zeeman energy).
pub fn casimir_magnetization(
    p: &FerriParams,
    n_z: u32,
    quad: &CasimirQuadrature,
    h_step: f64,
) -> Result<Magnetization, CasimirError> {
    if !(h_step > 0.0) || !h_step.is_finite() {
        return Err(CasimirError::InvalidInput(format!("h_step must be positive, got {h_step}")));
    }
    let energies = |h: f64| -> Result<(CasimirResult, CasimirResult), CasimirError> {
        let eval = |h0: f64| {
            let shifted = FerriParams { h0, ..*p };
            shifted.validate()?;
            casimir_energy(&DispersionModel::Ferri(shifted), n_z, quad)
        };
        Ok((eval(p.h0 + h)?, eval(p.h0 - h)?))
    };
    let derivative = |h: f64| -> Result<(f64, f64), CasimirError> {
        let (up, down) = energies(h)?;
        Ok((-(up.e_cas - down.e_cas) / (2.0 * h), -(up.e_int - down.e_int) / (2.0 * h)))
    };
    let (cas_h, bulk_h) = derivative(h_step)?;
    let (cas_h2, bulk_h2) = derivative(0.5 * h_step)?;
    Ok(Magnetization {
        n_z,
        h_step,
        casimir: cas_h,
        casimir_half_step: cas_h2,
        casimir_error: (cas_h - cas_h2).abs() / 3.0,
        bulk: bulk_h,
        bulk_error: (bulk_h - bulk_h2).abs() / 3.0,
    })
}

/// Evaluates just the column difference `g(k⊥)` (before the `1/π²` measure).
pub fn column_difference(
    model: &DispersionModel,
    kperp: (f64, f64),
    n: u32,
    quad: &CasimirQuadrature,
    strategy: Strategy,
) -> Result<f64, CasimirError> {
    check_nz(n)?;
    let rule = quad.inner.compile()?;
    let prepared = Prepared {
        model,
        n,
        strategy,
        inner: &quad.inner,
        tables: Tables::new(n, &rule, |kz| match model {
            DispersionModel::Afm(_) => reg(kz),
            DispersionModel::Ferri(p) => p.z_term(kz),
        }),
    };
    let mut g = prepared.column(kperp.0, kperp.1)?.g;
    if let (DispersionModel::Ferri(p), Strategy::Subtracted) = (model, strategy) {
        g += n as f64 * p.dz_over_a2 * z_term_defect(p, n, &quad.inner)?.0;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gapless() -> AfmParams {
        AfmParams::from_exchange(15.0, 1.5, 0.03, 0.49607).unwrap().with_delta(0.0).unwrap()
    }

    fn yig(l: f64) -> FerriParams {
        FerriParams {
            h0: 8.10373e-3,
            delta_plus: 2.13191,
            delta_minus: 41.98072,
            d_over_a2: 3.37645,
            dz_over_a2: 3.37645,
            l_exponent: l,
            hbar_omega_m: 20.3369e-3,
            a_nm: 1.2376,
        }
    }

    #[test]
    fn single_layer_sum_and_integral_at_zone_center() {
        let p = gapless();
        let model = DispersionModel::Afm(p);
        let sum = kz_discrete_sum(&model, (0.0, 0.0), 1).unwrap();
        assert!((sum - 0.5 * p.hbar_omega0).abs() < 1e-12 * p.hbar_omega0);
        let quad = CasimirQuadrature::standard();
        let int = kz_continuum_integral(&model, (0.0, 0.0), 1, &quad.inner).unwrap();
        assert!((int.value - 2.0 * p.hbar_omega0 / PI).abs() < 1e-10);
    }

    #[test]
    fn continuum_integral_is_linear_in_thickness() {
        let spec = CasimirQuadrature::standard().inner;
        let afm = DispersionModel::Afm(gapless());
        let one = kz_continuum_integral(&afm, (0.4, 1.1), 1, &spec).unwrap().value;
        let seven = kz_continuum_integral(&afm, (0.4, 1.1), 7, &spec).unwrap().value;
        assert!((seven - 7.0 * one).abs() < 1e-12 * seven);
    }

    #[test]
    fn difference_first_matches_separate_evaluation() {
        let quad = CasimirQuadrature::standard();
        for model in [DispersionModel::Afm(gapless()), DispersionModel::Ferri(yig(1.9))] {
            for n in [1, 3, 8] {
                let k = (0.3, 0.9);
                let sum = kz_discrete_sum(&model, k, n).unwrap();
                let int = kz_continuum_integral(&model, k, n, &quad.inner).unwrap();
                for strategy in [Strategy::Direct, Strategy::Subtracted] {
                    let g = column_difference(&model, k, n, &quad, strategy).unwrap();
                    assert!((g - (sum - int.value)).abs() < 1e-9 * sum, "{model:?} n={n} {strategy:?}");
                }
            }
        }
    }

    #[test]
    fn cosine_dispersion_has_no_casimir_energy() {
        // Without dipoles and with l = 2 the energy is affine in cos k_z,
        // which the 2N-point sum integrates exactly.
        let p = FerriParams { hbar_omega_m: 0.0, ..yig(2.0) };
        let r = casimir_energy(&DispersionModel::Ferri(p), 4, &CasimirQuadrature::fast()).unwrap();
        assert!(r.e_cas.abs() < 1e-12, "{}", r.e_cas);
        assert_eq!(r.e_sum - r.e_cas, r.e_int);
    }

    #[test]
    fn strategies_agree() {
        let quad = CasimirQuadrature::fast();
        for l in [1.9, 2.0, 2.1] {
            let model = DispersionModel::Ferri(yig(l));
            let direct = casimir_energy_with(&model, 3, &quad, EvalOptions { strategy: Strategy::Direct, ..Default::default() });
            let direct = direct.unwrap_or_else(|e| *e.best().unwrap());
            let split = casimir_energy(&model, 3, &quad).unwrap();
            let tol = 3.0 * (direct.error_estimate + split.error_estimate) + 1e-11;
            assert!((direct.e_cas - split.e_cas).abs() < tol, "l={l}: {} vs {}", direct.e_cas, split.e_cas);
        }
    }

    #[test]
    fn sequential_and_parallel_are_bit_identical() {
        let model = DispersionModel::Ferri(yig(1.99));
        let quad = CasimirQuadrature::fast();
        let run = |exec| casimir_energy_with(&model, 5, &quad, EvalOptions { exec, ..Default::default() }).unwrap();
        assert_eq!(run(Exec::Sequential), run(Exec::Parallel));
    }

    #[test]
    fn reciprocal_cosine_defect_matches_trapezoid() {
        let (gap, b, m) = (0.3, 2.0, 6u32);
        let f = |x: f64| 1.0 / (gap + b - b * x.cos());
        let trap: f64 = (0..m).map(|j| f(2.0 * PI * j as f64 / m as f64)).sum::<f64>() / m as f64;
        let mean = 1.0 / (gap * (gap + 2.0 * b)).sqrt();
        assert!((reciprocal_cosine_defect(gap, b, m) - (trap - mean)).abs() < 1e-13);
    }

    #[test]
    fn coefficient_scaling() {
        let r = CasimirResult {
            n_z: 2,
            e_cas: -0.5341 / 8.0,
            coefficient: 0.0,
            b_exponent: 0.0,
            e_sum: 0.0,
            e_int: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            ultrathin: true,
        };
        assert!((casimir_coefficient(&r, 3.0) + 0.5341).abs() < 1e-15);
        assert_eq!(casimir_coefficient(&r, 0.0), r.e_cas);
        assert_eq!(r.with_exponent(3.0).b_exponent, 3.0);
    }

    #[test]
    fn asymptote() {
        let p = gapless();
        let c = continuum_asymptote(&p).unwrap();
        assert!((c + 0.5342).abs() < 1e-3);
        assert!(matches!(
            continuum_asymptote(&p.with_delta(2e-3).unwrap()),
            Err(CasimirError::NotApplicable(_))
        ));
    }

    #[test]
    fn zero_thickness_rejected() {
        let model = DispersionModel::Afm(gapless());
        assert!(matches!(casimir_energy(&model, 0, &CasimirQuadrature::fast()), Err(CasimirError::InvalidInput(_))));
    }

    #[test]
    fn field_independent_without_dipoles() {
        let p = FerriParams { hbar_omega_m: 0.0, delta_plus: 20.0, delta_minus: 20.0, ..yig(1.9) };
        let m = casimir_magnetization(&p, 4, &CasimirQuadrature::fast(), 1e-3).unwrap();
        assert!(m.casimir.abs() < 1e-8, "{m:?}");
        assert!(m.bulk.abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn magnetization_step_halving_is_consistent() {
        let m = casimir_magnetization(&yig(1.9), 4, &CasimirQuadrature::fast(), 2e-3).unwrap();
        assert!(m.casimir.is_finite() && m.bulk.is_finite());
        assert!((m.casimir - m.casimir_half_step).abs() <= 3.0 * m.casimir_error + 1e-12);
        assert!(m.casimir_error <= 1e-2 * m.casimir.abs() + 1e-9, "{m:?}");
    }
}
