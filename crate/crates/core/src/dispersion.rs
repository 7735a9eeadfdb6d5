//! Lattice-regularized magnon dispersions.
//!
//! All wavevector components are dimensionless (`k_j a`). Exchange terms use
//! the lattice replacement `(k a)^2 -> 2[1 - cos(k a)]`; a non-integer power
//! `(|k_z| a)^l` becomes `(2[1 - cos(k_z a)])^(l/2)`. The dipolar pieces of the
//! thin-film dispersion (mode profile and in-plane direction cosines) use the
//! unregularized in-plane wavevector, reduced to the first zone.
//!
//! The form factor uses the grouping
//! `F = P(1-P) (σ ħω_M / A_σ) (k_x/k_⊥)^2 + 1 - P (k_y/k_⊥)^2`, where the first
//! term carries the Damon-Eshbach surface mode and the last the backward
//! volume mode. `F(k_⊥ = 0) = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error("square-bracket term A_σ(k) = {value} meV is not positive")]
    NonPositiveSquareBracket { value: f64 },
    #[error("complex magnon frequency: A_σ + σħω_M F = {value} meV < 0 (ground state unstable)")]
    ComplexFrequency { value: f64 },
    #[error("invalid parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> DispersionError {
    DispersionError::InvalidParameter { field, reason: reason.into() }
}

/// Dimensionless lattice wavevector `(k_x a, k_y a, k_z a)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wavevector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Wavevector {
    pub const ZERO: Wavevector = Wavevector { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Wavevector { x, y, z }
    }
}

/// Magnon branch `σ = ±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeIndex {
    Plus,
    Minus,
}

impl ModeIndex {
    pub const BOTH: [ModeIndex; 2] = [ModeIndex::Plus, ModeIndex::Minus];

    pub fn sign(self) -> f64 {
        match self {
            ModeIndex::Plus => 1.0,
            ModeIndex::Minus => -1.0,
        }
    }
}

/// Lattice replacement for a squared wavenumber, `2[1 - cos x]`.
///
/// Evaluated as `4 sin^2(x/2)` to keep full relative precision near zero.
#[inline]
pub fn reg(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    4.0 * s * s
}

/// Maps a wavevector component into `[-π, π]`.
#[inline]
pub fn reduce_to_zone(x: f64) -> f64 {
    if (-PI..=PI).contains(&x) {
        x
    } else {
        x - 2.0 * PI * (x / (2.0 * PI)).round()
    }
}

/// Antiferromagnet on a cubic lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfmParams {
    /// `ħω₀ = 2√3 J S`, meV.
    pub hbar_omega0: f64,
    /// Dimensionless gap parameter `δ = 3[(K/6J)^2 + 2(K/6J)]`.
    pub delta: f64,
    /// Exchange, meV.
    pub j: f64,
    pub s: f64,
    /// Easy-axis anisotropy, meV.
    pub k_aniso: f64,
    /// Magnetic unit cell, nm.
    pub a_nm: f64,
}

impl AfmParams {
    pub fn from_exchange(j: f64, s: f64, k_aniso: f64, a_nm: f64) -> Result<Self, DispersionError> {
        if !(j > 0.0) {
            return Err(invalid("J", format!("must be > 0, got {j}")));
        }
        if !(s > 0.0) {
            return Err(invalid("S", format!("must be > 0, got {s}")));
        }
        if !(k_aniso >= 0.0) {
            return Err(invalid("K", format!("must be >= 0, got {k_aniso}")));
        }
        if !(a_nm > 0.0) {
            return Err(invalid("a", format!("must be > 0, got {a_nm}")));
        }
        let ratio = k_aniso / (6.0 * j);
        Ok(AfmParams {
            hbar_omega0: 2.0 * 3f64.sqrt() * j * s,
            delta: 3.0 * (ratio * ratio + 2.0 * ratio),
            j,
            s,
            k_aniso,
            a_nm,
        })
    }

    /// Same material with the gap parameter overridden.
    pub fn with_delta(self, delta: f64) -> Result<Self, DispersionError> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(invalid("delta", format!("must be finite and >= 0, got {delta}")));
        }
        Ok(AfmParams { delta, ..self })
    }

    /// Energy given the summed lattice terms `reg(k_x)+reg(k_y)+reg(k_z)`.
    #[inline]
    pub fn energy_from_lattice(&self, reg_sum: f64) -> f64 {
        self.hbar_omega0 * (self.delta + 0.25 * reg_sum).sqrt()
    }
}

/// Both branches are degenerate; `_sigma` only documents the call site.
pub fn afm_energy(k: Wavevector, p: &AfmParams, _sigma: ModeIndex) -> f64 {
    p.energy_from_lattice(reg(k.x) + reg(k.y) + reg(k.z))
}

/// Ferrimagnetic thin film with in-plane field along `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FerriParams {
    /// Zeeman energy `H₀`, meV.
    pub h0: f64,
    /// `Δ_+`, meV.
    pub delta_plus: f64,
    /// `Δ_-`, meV.
    pub delta_minus: f64,
    /// In-plane stiffness `D/a²`, meV.
    pub d_over_a2: f64,
    /// Out-of-plane stiffness `D_z/a²`, meV.
    pub dz_over_a2: f64,
    /// Power `l` of `|k_z| a`.
    pub l_exponent: f64,
    /// `ħω_M = 4πγM_s`, meV.
    pub hbar_omega_m: f64,
    pub a_nm: f64,
}

impl FerriParams {
    pub fn validate(&self) -> Result<(), DispersionError> {
        let all = [
            ("H0", self.h0),
            ("delta_plus", self.delta_plus),
            ("delta_minus", self.delta_minus),
            ("D", self.d_over_a2),
            ("D_z", self.dz_over_a2),
            ("l", self.l_exponent),
            ("hbar_omegaM", self.hbar_omega_m),
            ("a", self.a_nm),
        ];
        for (field, v) in all {
            if !v.is_finite() {
                return Err(invalid(field, format!("must be finite, got {v}")));
            }
        }
        if !(self.delta_minus > self.h0) {
            return Err(invalid("delta_minus", format!("must exceed H0 = {}, got {}", self.h0, self.delta_minus)));
        }
        if !(self.delta_plus + self.h0 > 0.0) {
            return Err(invalid("delta_plus", format!("delta_plus + H0 must be > 0, got {}", self.delta_plus + self.h0)));
        }
        if !(self.d_over_a2 > 0.0) {
            return Err(invalid("D", format!("must be > 0, got {}", self.d_over_a2)));
        }
        if !(self.dz_over_a2 > 0.0) {
            return Err(invalid("D_z", format!("must be > 0, got {}", self.dz_over_a2)));
        }
        if !(self.l_exponent > 0.0) {
            return Err(invalid("l", format!("must be > 0, got {}", self.l_exponent)));
        }
        if !(self.hbar_omega_m >= 0.0) {
            return Err(invalid("hbar_omegaM", format!("must be >= 0, got {}", self.hbar_omega_m)));
        }
        if !(self.a_nm > 0.0) {
            return Err(invalid("a", format!("must be > 0, got {}", self.a_nm)));
        }
        Ok(())
    }

    pub fn gap(&self, sigma: ModeIndex) -> f64 {
        match sigma {
            ModeIndex::Plus => self.delta_plus,
            ModeIndex::Minus => self.delta_minus,
        }
    }

    /// Regularized `(|k_z| a)^l`.
    #[inline]
    pub fn z_term(&self, kz: f64) -> f64 {
        let r = reg(kz);
        if self.l_exponent == 2.0 {
            r
        } else {
            r.powf(0.5 * self.l_exponent)
        }
    }

    /// Everything that depends only on the in-plane wavevector.
    pub fn column(&self, kx: f64, ky: f64, sigma: ModeIndex, n_z: u32) -> FerriColumn {
        let kx = reduce_to_zone(kx);
        let ky = reduce_to_zone(ky);
        let kperp = kx.hypot(ky);
        let (p, cx2, cy2) = if kperp == 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            (mode_profile(kperp, n_z), (kx / kperp).powi(2), (ky / kperp).powi(2))
        };
        FerriColumn {
            sigma: sigma.sign(),
            omega_m: self.hbar_omega_m,
            dz: self.dz_over_a2,
            base: sigma.sign() * self.h0 + self.gap(sigma) + self.d_over_a2 * (reg(kx) + reg(ky)),
            p,
            cx2,
            cy2,
        }
    }
}

/// Ferrimagnet dispersion at fixed `(k_x, k_y)` as a function of the
/// regularized z term `t = reg(k_z)^(l/2)`.
#[derive(Debug, Clone, Copy)]
pub struct FerriColumn {
    sigma: f64,
    omega_m: f64,
    dz: f64,
    base: f64,
    p: f64,
    cx2: f64,
    cy2: f64,
}

/// `ε = u + r` with `u = A + β/2` exactly linear in the z term.
#[derive(Debug, Clone, Copy)]
pub struct SplitEnergy {
    pub energy: f64,
    pub u: f64,
    pub r: f64,
}

impl FerriColumn {
    /// `A_σ = σH₀ + Δ_σ + D/a²[reg(k_x)+reg(k_y)] + D_z/a² t`.
    #[inline]
    pub fn bracket(&self, t: f64) -> f64 {
        self.base + self.dz * t
    }

    /// `A_σ` at `k_z = 0`.
    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn profile(&self) -> f64 {
        self.p
    }

    #[inline]
    fn form_factor_with(&self, a: f64) -> f64 {
        self.p * (1.0 - self.p) * (self.sigma * self.omega_m / a) * self.cx2 + 1.0 - self.p * self.cy2
    }

    pub fn form_factor(&self, t: f64) -> Result<f64, DispersionError> {
        let a = self.bracket(t);
        if !(a > 0.0) {
            return Err(DispersionError::NonPositiveSquareBracket { value: a });
        }
        Ok(self.form_factor_with(a))
    }

    #[inline]
    pub fn energy(&self, t: f64) -> Result<f64, DispersionError> {
        let a = self.bracket(t);
        if !(a > 0.0) {
            return Err(DispersionError::NonPositiveSquareBracket { value: a });
        }
        let second = a + self.sigma * self.omega_m * self.form_factor_with(a);
        if second < 0.0 {
            return Err(DispersionError::ComplexFrequency { value: second });
        }
        Ok(a.sqrt() * second.sqrt())
    }

    /// `β = σħω_M (1 - P c_y²)`; `A(A + σħω_M F) = A² + βA + γ`.
    pub fn beta(&self) -> f64 {
        self.sigma * self.omega_m * (1.0 - self.p * self.cy2)
    }

    /// `κ = γ - β²/4`, so that `ε² = (A + β/2)² + κ`.
    pub fn kappa(&self) -> f64 {
        let om2 = self.omega_m * self.omega_m;
        let b = 1.0 - self.p * self.cy2;
        om2 * (self.p * (1.0 - self.p) * self.cx2 - 0.25 * b * b)
    }

    /// Energy together with its decomposition into the part linear in the z
    /// term and the small dipolar remainder `r = κ / (ε + u)`.
    #[inline]
    pub fn split(&self, t: f64) -> Result<SplitEnergy, DispersionError> {
        let energy = self.energy(t)?;
        let u = self.bracket(t) + 0.5 * self.beta();
        Ok(SplitEnergy { energy, u, r: self.kappa() / (energy + u) })
    }
}

/// Thickness-averaged dipolar kernel `P = 1 - (1 - e^{-x})/x`, `x = k_⊥ a N_z`.
pub fn mode_profile(kperp_a: f64, n_z: u32) -> f64 {
    let x = kperp_a * n_z as f64;
    if x < 0.5 {
        // x/2! - x^2/3! + x^3/4! - ...
        let mut term = 0.5 * x;
        let mut sum: f64 = 0.0;
        let mut k = 1.0;
        while term.abs() > 1e-18 * sum.abs() && k < 40.0 {
            sum += term;
            k += 1.0;
            term *= -x / (k + 1.0);
        }
        sum
    } else {
        1.0 + (-x).exp_m1() / x
    }
}

pub fn form_factor(k: Wavevector, p: &FerriParams, sigma: ModeIndex, n_z: u32) -> Result<f64, DispersionError> {
    p.column(k.x, k.y, sigma, n_z).form_factor(p.z_term(k.z))
}

pub fn ferri_energy(k: Wavevector, p: &FerriParams, sigma: ModeIndex, n_z: u32) -> Result<f64, DispersionError> {
    p.column(k.x, k.y, sigma, n_z).energy(p.z_term(k.z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum DispersionModel {
    Afm(AfmParams),
    Ferri(FerriParams),
}

impl DispersionModel {
    /// `|ε_σ(k)|` in meV. `n_z` only enters the ferrimagnet mode profile.
    pub fn energy(&self, k: Wavevector, sigma: ModeIndex, n_z: u32) -> Result<f64, DispersionError> {
        match self {
            DispersionModel::Afm(p) => Ok(afm_energy(k, p, sigma)),
            DispersionModel::Ferri(p) => ferri_energy(k, p, sigma, n_z),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cr2o3() -> AfmParams {
        AfmParams::from_exchange(15.0, 1.5, 0.03, 0.49607).unwrap()
    }

    fn yig() -> FerriParams {
        FerriParams {
            h0: 8.10373e-3,
            delta_plus: 2.13191,
            delta_minus: 41.98072,
            d_over_a2: 3.37645,
            dz_over_a2: 3.37645,
            l_exponent: 2.0,
            hbar_omega_m: 20.3369e-3,
            a_nm: 1.2376,
        }
    }

    #[test]
    fn reg_values() {
        assert_eq!(reg(0.0), 0.0);
        assert!((reg(PI) - 4.0).abs() < 1e-15);
        assert!((reg(1e-4) - 1e-8).abs() < 1e-12);
    }

    #[test]
    fn afm_construction_identities() {
        let p = cr2o3();
        let expected_w0 = 2.0 * 3f64.sqrt() * 15.0 * 1.5;
        assert!((p.hbar_omega0 - expected_w0).abs() <= 1e-12 * expected_w0);
        let r = 0.03 / 90.0;
        let expected_delta = 3.0 * (r * r + 2.0 * r);
        assert!((p.delta - expected_delta).abs() <= 1e-12 * expected_delta);
        assert!(AfmParams::from_exchange(15.0, 1.5, -0.1, 0.5).is_err());
    }

    #[test]
    fn afm_examples() {
        let gapless = cr2o3().with_delta(0.0).unwrap();
        assert_eq!(afm_energy(Wavevector::ZERO, &gapless, ModeIndex::Plus), 0.0);
        let corner = Wavevector::new(PI, PI, PI);
        let e = afm_energy(corner, &gapless, ModeIndex::Minus);
        assert!((e - gapless.hbar_omega0 * 3f64.sqrt()).abs() < 1e-12 * e);

        // 77.94 x sqrt(0.002) with the preset's exact ħω₀ and δ.
        let p = cr2o3();
        let e0 = afm_energy(Wavevector::ZERO, &p, ModeIndex::Plus);
        assert!((e0 - p.hbar_omega0 * p.delta.sqrt()).abs() < 1e-13);
        assert!((e0 - 3.4856).abs() < 2e-3, "{e0}");
    }

    #[test]
    fn afm_continuum_limit() {
        let p = cr2o3();
        for k in [Wavevector::new(1e-3, -5e-4, 2e-4), Wavevector::new(-1e-3, 1e-3, 1e-3)] {
            let k2 = k.x * k.x + k.y * k.y + k.z * k.z;
            let continuum = p.hbar_omega0 * (p.delta + 0.25 * k2).sqrt();
            let lattice = afm_energy(k, &p, ModeIndex::Plus);
            assert!((lattice - continuum).abs() < 1e-6 * continuum);
        }
    }

    #[test]
    fn mode_profile_values() {
        assert_eq!(mode_profile(0.0, 10), 0.0);
        assert!((mode_profile(1.0, 1) - (-1f64).exp()).abs() < 1e-15);
        // (1 - e^-x)/x decays like 1/x, so P(700) = 1 - 1/700 to all digits.
        assert!((mode_profile(70.0, 10) - (1.0 - 1.0 / 700.0)).abs() < 1e-12);
        assert!((mode_profile(1e14, 10) - 1.0).abs() < 1e-12);
        // Series and closed form agree across the switch point.
        let below = mode_profile(0.4999999, 1);
        let above = mode_profile(0.5000001, 1);
        assert!((above - below).abs() < 1e-7);
        let closed = 1.0 - (1.0 - (-0.49999f64).exp()) / 0.49999;
        assert!((mode_profile(0.49999, 1) - closed).abs() < 1e-15);
    }

    #[test]
    fn form_factor_geometries() {
        let p = yig();
        for sigma in ModeIndex::BOTH {
            let f0 = form_factor(Wavevector::new(0.0, 0.0, 1.3), &p, sigma, 10).unwrap();
            assert_eq!(f0, 1.0);

            let k = Wavevector::new(0.05, 0.0, 0.4);
            let pp = mode_profile(0.05, 10);
            let a = sigma.sign() * p.h0 + p.gap(sigma) + p.d_over_a2 * reg(0.05) + p.dz_over_a2 * p.z_term(0.4);
            let de = pp * (1.0 - pp) * sigma.sign() * p.hbar_omega_m / a + 1.0;
            assert!((form_factor(k, &p, sigma, 10).unwrap() - de).abs() < 1e-15);

            let k = Wavevector::new(0.0, 0.05, 0.4);
            let bv = form_factor(k, &p, sigma, 10).unwrap();
            assert!((bv - (1.0 - pp)).abs() < 1e-15);
            assert!(bv < 1.0);
        }
    }

    #[test]
    fn ferri_zone_center_without_dipoles() {
        let p = FerriParams { hbar_omega_m: 0.0, ..yig() };
        for sigma in ModeIndex::BOTH {
            let e = ferri_energy(Wavevector::ZERO, &p, sigma, 10).unwrap();
            let expected = sigma.sign() * p.h0 + p.gap(sigma);
            assert!((e - expected).abs() < 1e-14 * expected);
        }
    }

    #[test]
    fn yig_zone_center_energy() {
        let p = yig();
        let e = ferri_energy(Wavevector::ZERO, &p, ModeIndex::Plus, 10).unwrap();
        let a: f64 = 8.10373e-3 + 2.13191;
        let expected = a.sqrt() * (a + 20.3369e-3).sqrt();
        assert!((e - expected).abs() < 1e-14);
    }

    #[test]
    fn backward_volume_minimum_off_center() {
        // 1D scan along k_y: the dipolar drop beats the exchange rise near k = 0.
        let p = yig();
        let e = |ky: f64| ferri_energy(Wavevector::new(0.0, ky, 0.0), &p, ModeIndex::Plus, 10).unwrap();
        let scan: Vec<(f64, f64)> = (0..=2000).map(|i| i as f64 * 1e-4).map(|ky| (ky, e(ky))).collect();
        let (ky_min, e_min) = scan.iter().copied().fold((0.0, f64::INFINITY), |m, s| if s.1 < m.1 { s } else { m });
        assert!(ky_min > 0.0, "minimum at the zone center");
        assert!(e_min < e(0.0));
        assert!(e(0.2) > e_min);
    }

    #[test]
    fn ferri_degeneracy_is_lifted() {
        let p = yig();
        let k = Wavevector::new(0.3, 0.2, 0.1);
        let plus = ferri_energy(k, &p, ModeIndex::Plus, 10).unwrap();
        let minus = ferri_energy(k, &p, ModeIndex::Minus, 10).unwrap();
        assert!((plus - minus).abs() > 1.0);
    }

    #[test]
    fn instability_is_reported() {
        // σ = - with ħω_M larger than A_- at the zone center.
        let p = FerriParams { h0: 0.0, delta_minus: 1.0, hbar_omega_m: 5.0, ..yig() };
        let r = ferri_energy(Wavevector::ZERO, &p, ModeIndex::Minus, 10);
        assert!(matches!(r, Err(DispersionError::ComplexFrequency { .. })));
        let col = FerriColumn { sigma: -1.0, omega_m: 5.0, dz: 1.0, base: 1.0, p: 0.0, cx2: 0.0, cy2: 0.0 };
        assert!(matches!(col.energy(0.0), Err(DispersionError::ComplexFrequency { .. })));
        let col = FerriColumn { base: -1.0, ..col };
        assert!(matches!(col.energy(0.0), Err(DispersionError::NonPositiveSquareBracket { .. })));
        assert!(matches!(col.form_factor(0.0), Err(DispersionError::NonPositiveSquareBracket { .. })));
    }

    #[test]
    fn split_reconstructs_energy() {
        let p = FerriParams { l_exponent: 1.9, ..yig() };
        for sigma in ModeIndex::BOTH {
            let col = p.column(0.02, 0.07, sigma, 10);
            for kz in [0.0, 0.3, 2.0, PI] {
                let s = col.split(p.z_term(kz)).unwrap();
                assert!((s.u + s.r - s.energy).abs() < 1e-14 * s.energy);
                let u_expected = col.bracket(p.z_term(kz)) + 0.5 * col.beta();
                assert_eq!(s.u, u_expected);
                assert!((s.energy * s.energy - (s.u * s.u + col.kappa())).abs() < 1e-12 * s.energy * s.energy);
            }
        }
    }

    #[test]
    fn form_factor_bound_on_grid() {
        // P(1-P) <= 1/4 bounds the Damon-Eshbach term; it only raises F for σ = +.
        let p = yig();
        let n = 64;
        for sigma in ModeIndex::BOTH {
            let a_min = sigma.sign() * p.h0 + p.gap(sigma);
            let upper = 1.0 + sigma.sign().max(0.0) * p.hbar_omega_m / (4.0 * a_min);
            for i in 0..n {
                for j in 0..n {
                    for m in 0..n {
                        let c = |i: usize| -PI + 2.0 * PI * i as f64 / n as f64;
                        let f = form_factor(Wavevector::new(c(i), c(j), c(m)), &p, sigma, 10).unwrap();
                        assert!(f > 0.0 && f <= upper + 1e-15, "F = {f}");
                    }
                }
            }
        }
    }

    fn models() -> Vec<DispersionModel> {
        vec![
            DispersionModel::Afm(cr2o3()),
            DispersionModel::Afm(cr2o3().with_delta(0.0).unwrap()),
            DispersionModel::Ferri(yig()),
            DispersionModel::Ferri(FerriParams { l_exponent: 1.9, dz_over_a2: 0.5 * 3.37645, ..yig() }),
        ]
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
    }

    proptest! {
        #[test]
        fn periodic_in_each_axis(x in -PI..PI, y in -PI..PI, z in -PI..PI, axis in 0usize..3, nz in 1u32..40) {
            for model in models() {
                for sigma in ModeIndex::BOTH {
                    let k = Wavevector::new(x, y, z);
                    let mut shifted = k;
                    match axis {
                        0 => shifted.x += 2.0 * PI,
                        1 => shifted.y += 2.0 * PI,
                        _ => shifted.z += 2.0 * PI,
                    }
                    let a = model.energy(k, sigma, nz).unwrap();
                    let b = model.energy(shifted, sigma, nz).unwrap();
                    prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-3), "{a} vs {b}");
                }
            }
        }

        #[test]
        fn even_in_each_axis(x in -PI..PI, y in -PI..PI, z in -PI..PI, axis in 0usize..3, nz in 1u32..40) {
            for model in models() {
                for sigma in ModeIndex::BOTH {
                    let k = Wavevector::new(x, y, z);
                    let mut flipped = k;
                    match axis {
                        0 => flipped.x = -flipped.x,
                        1 => flipped.y = -flipped.y,
                        _ => flipped.z = -flipped.z,
                    }
                    let a = model.energy(k, sigma, nz).unwrap();
                    let b = model.energy(flipped, sigma, nz).unwrap();
                    prop_assert!(close(a, b), "{a} vs {b}");
                }
            }
        }

        #[test]
        fn afm_modes_degenerate(x in -PI..PI, y in -PI..PI, z in -PI..PI) {
            let p = cr2o3();
            let k = Wavevector::new(x, y, z);
            prop_assert_eq!(afm_energy(k, &p, ModeIndex::Plus), afm_energy(k, &p, ModeIndex::Minus));
            prop_assert!(afm_energy(k, &p, ModeIndex::Plus) >= p.hbar_omega0 * p.delta.sqrt());
        }

        #[test]
        fn yig_energy_positive(x in -PI..PI, y in -PI..PI, z in -PI..PI, l in 1.0f64..2.2, nz in 1u32..40) {
            let p = FerriParams { l_exponent: l, ..yig() };
            for sigma in ModeIndex::BOTH {
                prop_assert!(ferri_energy(Wavevector::new(x, y, z), &p, sigma, nz).unwrap() > 0.0);
            }
        }

        #[test]
        fn mode_profile_monotone(x in 0.0f64..50.0, dx in 1e-6f64..1.0) {
            let a = mode_profile(x, 1);
            let b = mode_profile(x + dx, 1);
            prop_assert!(b >= a && (0.0..1.0).contains(&a));
        }
    }
}
