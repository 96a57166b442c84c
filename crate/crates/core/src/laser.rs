//! Raman coupling and in-plane beam geometry.
//!
//! Two beams with wave numbers `k_e = k_g − Δ′` and `k_g` cross in the xy
//! plane at angles `φ_e` and `−φ_g`. Their momentum difference must point
//! along y with magnitude `q`:
//!
//! ```text
//! k_e cos φ_e − k_g cos φ_g = 0
//! k_e sin φ_e + k_g sin φ_g = q
//! ```
//!
//! which has a solution for `Δ′ < q < √(4 k_g (k_g − Δ′) + Δ′²)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Guard band (in units of `k_g`) kept away from both window edges.
pub const WINDOW_GUARD: f64 = 1e-9;
/// A detuning smaller than this multiple of a Rabi frequency is flagged.
pub const ADIABATIC_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanConfig {
    pub omega_e: f64,
    pub omega_g: f64,
    /// Detuning from the auxiliary level.
    pub delta_r: f64,
    pub k_g: f64,
    /// `(Δ + ω_eg)/c`.
    pub delta_prime: f64,
    pub q: f64,
}

impl RamanConfig {
    pub fn k_e(&self) -> f64 {
        self.k_g - self.delta_prime
    }

    /// False when `δ_r` is not at least ten times both Rabi frequencies.
    pub fn adiabatic(&self) -> bool {
        self.delta_r >= ADIABATIC_RATIO * self.omega_e.abs()
            && self.delta_r >= ADIABATIC_RATIO * self.omega_g.abs()
    }
}

/// Two-photon Rabi frequency after eliminating the auxiliary level,
/// `Ω_e Ω_g / 2δ_r`.
pub fn raman_rabi_magnitude(config: &RamanConfig) -> Result<f64> {
    if !(config.delta_r > 0.0) {
        return Err(Error::Domain(format!(
            "detuning δ_r must be > 0, got {}",
            config.delta_r
        )));
    }
    if !config.adiabatic() {
        log::warn!(
            "δ_r = {} is not much larger than the Rabi frequencies ({}, {})",
            config.delta_r,
            config.omega_e,
            config.omega_g
        );
    }
    Ok(config.omega_e * config.omega_g / (2.0 * config.delta_r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamAngles {
    pub phi_e: f64,
    pub phi_g: f64,
}

impl BeamAngles {
    /// Residuals of the two in-plane constraints.
    pub fn residuals(&self, q: f64, delta_prime: f64, k_g: f64) -> (f64, f64) {
        let k_e = k_g - delta_prime;
        (
            k_e * self.phi_e.cos() - k_g * self.phi_g.cos(),
            k_e * self.phi_e.sin() + k_g * self.phi_g.sin() - q,
        )
    }
}

/// `Γ² = (q² − Δ′²)(4k_g² − q² − 4k_gΔ′ + Δ′²)`.
pub fn gamma_squared(q: f64, delta_prime: f64, k_g: f64) -> f64 {
    (q * q - delta_prime * delta_prime)
        * (4.0 * k_g * k_g - q * q - 4.0 * k_g * delta_prime + delta_prime * delta_prime)
}

/// Upper edge of the admissible `q` window.
pub fn q_max(delta_prime: f64, k_g: f64) -> f64 {
    (4.0 * k_g * (k_g - delta_prime) + delta_prime * delta_prime).sqrt()
}

/// Beam angles realising momentum transfer `q`.
///
/// `φ_g` always lies in `[0, π/2]`. `φ_e` does too for `q² ≥ k_g² − k_e²`;
/// below that the `e` beam has to tilt the other way and `φ_e` comes back
/// negative, in `(−π/2, 0)`, since no non-negative pair satisfies both
/// constraints there.
///
/// The cosines follow `cos φ_e = Γ/(2q k_e)`, `cos φ_g = Γ/(2q k_g)`. The
/// sines are taken from the equivalent closed forms
/// `k_g sin φ_g = (q + (k_g² − k_e²)/q)/2` and
/// `k_e sin φ_e = (q − (k_g² − k_e²)/q)/2`, which avoid the cancellation
/// in `√(1 − cos²)` near the window edges.
pub fn solve_angles(q: f64, delta_prime: f64, k_g: f64) -> Result<BeamAngles> {
    if !(k_g > 0.0) {
        return Err(Error::Domain(format!("k_g must be > 0, got {k_g}")));
    }
    if !(delta_prime >= 0.0 && delta_prime < k_g) {
        return Err(Error::Domain(format!(
            "Δ′ must satisfy 0 <= Δ′ < k_g, got Δ′ = {delta_prime}, k_g = {k_g}"
        )));
    }
    let guard = WINDOW_GUARD * k_g;
    let lower = delta_prime + guard;
    let upper = q_max(delta_prime, k_g) - guard;
    if !(q > lower) {
        return Err(Error::OutOfRange {
            quantity: "q",
            value: q,
            bound: format!("lower bound q > Δ′ = {delta_prime} (guard {guard:e})"),
        });
    }
    if !(q < upper) {
        return Err(Error::OutOfRange {
            quantity: "q",
            value: q,
            bound: format!(
                "upper bound q < √(4k_g(k_g − Δ′) + Δ′²) = {} (guard {guard:e})",
                upper + guard
            ),
        });
    }
    let k_e = k_g - delta_prime;
    let gamma = gamma_squared(q, delta_prime, k_g).sqrt();
    let split = (k_g * k_g - k_e * k_e) / q;
    let sin_g = (q + split) / (2.0 * k_g);
    let sin_e = (q - split) / (2.0 * k_e);
    let cos_e = gamma / (2.0 * q * k_e);
    let cos_g = gamma / (2.0 * q * k_g);
    Ok(BeamAngles {
        phi_e: sin_e.atan2(cos_e),
        phi_g: sin_g.atan2(cos_g),
    })
}

/// The flux range reachable with in-plane beams, `α = qλ/4π` over the
/// open `q` window.
pub fn attainable_alpha_window(delta_prime: f64, k_g: f64, lambda: f64) -> Result<(f64, f64)> {
    if !(k_g > delta_prime && delta_prime >= 0.0) {
        return Err(Error::Domain(format!(
            "need k_g > Δ′ >= 0, got k_g = {k_g}, Δ′ = {delta_prime}"
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("wavelength must be > 0, got {lambda}")));
    }
    let to_alpha = |q: f64| q * lambda / (4.0 * PI);
    Ok((to_alpha(delta_prime), to_alpha(q_max(delta_prime, k_g))))
}
