//! Lowest band of the 1D lattice `V0 sin²(kx)`, its Wannier function, and
//! the overlap integrals that calibrate the laser-assisted hopping.
//!
//! Units: lengths in λ (so `k = 2π`), energies in the recoil energy
//! `E_R = k²/2M`, depths as `s = V0/E_R`, quasimomenta in units of `k`
//! (first zone `[-1, 1)`). The lattice period is λ/2.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::symmetric_ground;

pub const DEFAULT_PLANEWAVES: usize = 41;
pub const DEFAULT_QUASIMOMENTA: usize = 64;
pub const DEFAULT_GRID_POINTS: usize = 1024;
pub const DEFAULT_GRID_PERIODS: usize = 8;
/// Lattice period in units of λ.
pub const LATTICE_PERIOD: f64 = 0.5;
/// Basis-convergence threshold for the accuracy warning (E_R).
pub const BASIS_SHIFT_TOL: f64 = 1e-8;
const K: f64 = TAU;

#[derive(Debug, Clone, PartialEq)]
pub struct BandSolution {
    pub depth: f64,
    pub n_planewaves: usize,
    /// Quasimomenta in units of `k`, uniform on `[-1, 1)`.
    pub quasimomenta: Vec<f64>,
    pub band0_energies: Vec<f64>,
    /// Plane-wave coefficients `c_l(q)`, `l = -L..=L`, of each lowest-band
    /// Bloch state, signed so that `ψ_q(0) = Σ_l c_l > 0`.
    pub coefficients: Vec<Vec<f64>>,
    /// Set when adding plane waves moves the band edges by more than
    /// [`BASIS_SHIFT_TOL`].
    pub accuracy_warning: bool,
}

/// Central-equation matrix at quasimomentum `q`.
fn central_matrix(depth: f64, n_planewaves: usize, q: f64) -> DMatrix<f64> {
    let l_max = (n_planewaves / 2) as i64;
    DMatrix::from_fn(n_planewaves, n_planewaves, |a, b| {
        let la = a as i64 - l_max;
        if a == b {
            (q + 2.0 * la as f64).powi(2) + depth / 2.0
        } else if a.abs_diff(b) == 1 {
            -depth / 4.0
        } else {
            0.0
        }
    })
}

fn lowest_state(depth: f64, n_planewaves: usize, q: f64) -> (f64, Vec<f64>) {
    let (e, v) = symmetric_ground(central_matrix(depth, n_planewaves, q));
    let mut c: Vec<f64> = v.iter().copied().collect();
    if c.iter().sum::<f64>() < 0.0 {
        c.iter_mut().for_each(|x| *x = -*x);
    }
    (e, c)
}

/// Lowest Bloch band on `n_q` quasimomenta by plane-wave diagonalization.
pub fn solve_bands_1d_with(depth: f64, n_planewaves: usize, n_q: usize) -> Result<BandSolution> {
    if !(depth >= 0.0) {
        return Err(Error::Domain(format!("lattice depth must be >= 0, got {depth}")));
    }
    if n_planewaves < 11 || n_planewaves % 2 == 0 {
        return Err(Error::Config(format!(
            "n_planewaves must be odd and >= 11, got {n_planewaves}"
        )));
    }
    if n_q < 2 || n_q % 2 == 1 {
        return Err(Error::Config(format!(
            "quasimomentum count must be even and >= 2, got {n_q}"
        )));
    }
    let quasimomenta: Vec<f64> = (0..n_q).map(|j| -1.0 + 2.0 * j as f64 / n_q as f64).collect();
    let (band0_energies, coefficients) = quasimomenta
        .iter()
        .map(|&q| lowest_state(depth, n_planewaves, q))
        .unzip();
    let edge_shift = [0.0, -1.0]
        .iter()
        .map(|&q| {
            let (a, _) = lowest_state(depth, n_planewaves, q);
            let (b, _) = lowest_state(depth, n_planewaves + 10, q);
            (a - b).abs()
        })
        .fold(0.0, f64::max);
    let accuracy_warning = edge_shift > BASIS_SHIFT_TOL;
    if accuracy_warning {
        log::warn!(
            "plane-wave basis of {n_planewaves} not converged at depth {depth}: band edge moves by {edge_shift:e} E_R"
        );
    }
    Ok(BandSolution {
        depth,
        n_planewaves,
        quasimomenta,
        band0_energies,
        coefficients,
        accuracy_warning,
    })
}

/// [`solve_bands_1d_with`] on the default 64-point quasimomentum grid.
pub fn solve_bands_1d(depth: f64, n_planewaves: usize) -> Result<BandSolution> {
    solve_bands_1d_with(depth, n_planewaves, DEFAULT_QUASIMOMENTA)
}

/// Nearest-neighbour tight-binding hopping from the band width,
/// `(max − min)/4`, in units of E_R.
pub fn hopping_j(solution: &BandSolution) -> f64 {
    if solution.depth < 1.0 {
        log::warn!(
            "depth {} is too shallow for a tight-binding description",
            solution.depth
        );
    }
    let hi = solution.band0_energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = solution.band0_energies.iter().copied().fold(f64::INFINITY, f64::min);
    (hi - lo) / 4.0
}

/// Magnitude of the nearest-neighbour Fourier component of the band,
/// `|(1/N) Σ_q E(q) cos(π q)|`.
pub fn band_fourier_hopping(solution: &BandSolution) -> f64 {
    let n = solution.quasimomenta.len() as f64;
    let s: f64 = solution
        .quasimomenta
        .iter()
        .zip(&solution.band0_energies)
        .map(|(&q, &e)| e * (PI * q).cos())
        .sum();
    (s / n).abs()
}

/// Real-space sampling window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WannierGrid {
    pub points: usize,
    /// Window width in lattice periods, centred on the site at `x = 0`.
    pub periods: usize,
}

impl Default for WannierGrid {
    fn default() -> Self {
        WannierGrid {
            points: DEFAULT_GRID_POINTS,
            periods: DEFAULT_GRID_PERIODS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WannierFunction {
    /// Sample positions in units of λ, `x_i = -W/2 + i·dx`.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub dx: f64,
    pub lattice_period: f64,
}

impl WannierFunction {
    /// Index of `x = 0`.
    pub fn center(&self) -> usize {
        self.grid.len() / 2
    }

    /// `∫ w(x) w(x − shift) dx` for a shift that is a multiple of `dx`.
    pub fn overlap(&self, shift: f64) -> f64 {
        let s = (shift / self.dx).round() as usize;
        let n = self.values.len();
        if s >= n {
            return 0.0;
        }
        (s..n).map(|i| self.values[i] * self.values[i - s]).sum::<f64>() * self.dx
    }

    /// `∫ |w|² dx`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.dx
    }

    /// `∫ |w(y)|² cos(Q y) dy`.
    pub fn cosine_moment(&self, wavenumber: f64) -> f64 {
        self.grid
            .iter()
            .zip(&self.values)
            .map(|(&y, &w)| w * w * (wavenumber * y).cos())
            .sum::<f64>()
            * self.dx
    }

    /// Gaussian width from the second moment of `|w|²`, assuming
    /// `w ∝ exp(−x²/2σ²)` so that `⟨x²⟩ = σ²/2`.
    pub fn gaussian_width(&self) -> f64 {
        let m2: f64 = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(&x, &w)| x * x * w * w)
            .sum::<f64>()
            * self.dx;
        (2.0 * m2 / self.norm_sqr()).sqrt()
    }

    /// Overlap with the copy displaced by λ/4 (the neighbouring sublattice
    /// well).
    pub fn gamma_x(&self) -> f64 {
        self.overlap(0.25)
    }

    /// `∫ |w(y)|² cos(4παy/λ) dy`.
    pub fn gamma_y(&self, alpha: f64) -> f64 {
        self.cosine_moment(4.0 * PI * alpha)
    }
}

/// Lowest-band Wannier function `w(x) ∝ Σ_q ψ_q(x)` with every `ψ_q(0)`
/// real and positive, normalised on the sampling window.
pub fn wannier_on(solution: &BandSolution, grid: WannierGrid) -> Result<WannierFunction> {
    if grid.points < 2 || grid.periods == 0 {
        return Err(Error::Config("Wannier grid needs >= 2 points and >= 1 period".into()));
    }
    let width = grid.periods as f64 * LATTICE_PERIOD;
    let dx = width / grid.points as f64;
    let xs: Vec<f64> = (0..grid.points).map(|i| -width / 2.0 + i as f64 * dx).collect();
    let l_max = (solution.n_planewaves / 2) as i64;
    let mut values = vec![0.0; grid.points];
    for (q, c) in solution.quasimomenta.iter().zip(&solution.coefficients) {
        for (l, &cl) in c.iter().enumerate() {
            if cl == 0.0 {
                continue;
            }
            let kappa = (q + 2.0 * (l as i64 - l_max) as f64) * K;
            for (v, &x) in values.iter_mut().zip(&xs) {
                *v += cl * (kappa * x).cos();
            }
        }
    }
    let norm = (values.iter().map(|v| v * v).sum::<f64>() * dx).sqrt();
    values.iter_mut().for_each(|v| *v /= norm);
    Ok(WannierFunction {
        grid: xs,
        values,
        dx,
        lattice_period: LATTICE_PERIOD,
    })
}

pub fn wannier(solution: &BandSolution) -> Result<WannierFunction> {
    wannier_on(solution, WannierGrid::default())
}

fn default_wannier(depth: f64) -> Result<WannierFunction> {
    wannier(&solve_bands_1d(depth, DEFAULT_PLANEWAVES)?)
}

/// `Γx(s)` with default numerics.
pub fn gamma_x(depth: f64) -> Result<f64> {
    if !(depth > 0.0) {
        return Err(Error::Domain(format!("depth must be > 0, got {depth}")));
    }
    Ok(default_wannier(depth)?.gamma_x())
}

/// `Γy(s, α)` with default numerics.
pub fn gamma_y(depth: f64, alpha: f64) -> Result<f64> {
    if !(depth > 0.0) {
        return Err(Error::Domain(format!("depth must be > 0, got {depth}")));
    }
    Ok(default_wannier(depth)?.gamma_y(alpha))
}

/// Transverse trap frequency of one well, `ν = √(4 E_R V0)` (units E_R).
pub fn well_frequency(depth: f64) -> f64 {
    (4.0 * depth).sqrt()
}

/// Laser-induced hopping along x and the hierarchy checks behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveHopping {
    pub jx: f64,
    pub gamma_x: f64,
    pub gamma_y: f64,
    /// `Ω < Δ/10`
    pub omega_below_offset: bool,
    /// `Δ < ν_x/10`
    pub offset_below_well_frequency: bool,
}

impl EffectiveHopping {
    pub fn valid(&self) -> bool {
        self.omega_below_offset && self.offset_below_well_frequency
    }
}

/// `Jx = Ω Γx(s_x) Γy(s_y, α) / 2`. `omega` and `delta` share one energy
/// unit, which must be E_R for the `ν_x` comparison to make sense.
pub fn effective_jx(
    omega: f64,
    delta: f64,
    depth_x: f64,
    depth_y: f64,
    alpha: f64,
) -> Result<EffectiveHopping> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!("Ω must be >= 0, got {omega}")));
    }
    let gx = gamma_x(depth_x)?;
    let gy = gamma_y(depth_y, alpha)?;
    Ok(EffectiveHopping {
        jx: omega * gx * gy / 2.0,
        gamma_x: gx,
        gamma_y: gy,
        omega_below_offset: omega < delta / 10.0,
        offset_below_well_frequency: delta < well_frequency(depth_x) / 10.0,
    })
}

/// Raman coupling needed for a target `Jx`: `Ω = 2 Jx / (Γx Γy)`.
pub fn omega_for_jx(target_jx: f64, depth_x: f64, depth_y: f64, alpha: f64) -> Result<f64> {
    let g = gamma_x(depth_x)? * gamma_y(depth_y, alpha)?;
    if g <= 0.0 {
        return Err(Error::Domain(format!(
            "Γx·Γy = {g} is not positive; no Ω reaches the target"
        )));
    }
    Ok(2.0 * target_jx / g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_particle_band() {
        let s = solve_bands_1d(0.0, 21).unwrap();
        for (&q, &e) in s.quasimomenta.iter().zip(&s.band0_energies) {
            assert!((e - q * q).abs() < 1e-12, "q = {q}: {e}");
        }
        let min = s.band0_energies.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min.abs() < 1e-14);
    }

    #[test]
    fn band_is_even_in_q() {
        let s = solve_bands_1d(7.0, DEFAULT_PLANEWAVES).unwrap();
        let n = s.quasimomenta.len();
        for j in 1..n {
            // q_j and q_{n-j} are negatives of each other
            assert!((s.quasimomenta[j] + s.quasimomenta[n - j]).abs() < 1e-15);
            assert!((s.band0_energies[j] - s.band0_energies[n - j]).abs() < 1e-12);
        }
        let q0 = n / 2;
        let min = s.band0_energies.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(s.band0_energies[q0], min);
    }

    #[test]
    fn basis_preconditions() {
        assert!(solve_bands_1d(5.0, 9).is_err());
        assert!(solve_bands_1d(5.0, 12).is_err());
        assert!(solve_bands_1d(-1.0, 41).is_err());
        assert!(!solve_bands_1d(20.0, 41).unwrap().accuracy_warning);
        assert!(solve_bands_1d(40.0, 11).unwrap().accuracy_warning);
    }

    #[test]
    fn wannier_is_normalised_even_and_peaked() {
        let w = wannier(&solve_bands_1d(10.0, DEFAULT_PLANEWAVES).unwrap()).unwrap();
        assert!((w.norm_sqr() - 1.0).abs() < 1e-8);
        let c = w.center();
        assert_eq!(w.grid[c], 0.0);
        for i in 1..c {
            assert!((w.values[c + i] - w.values[c - i]).abs() < 1e-8);
        }
        let peak = (0..w.values.len())
            .max_by(|&a, &b| w.values[a].total_cmp(&w.values[b]))
            .unwrap();
        assert_eq!(peak, c);
    }

    // Harmonic approximation of one well: σ = s^(-1/4)/k.
    #[test]
    fn wannier_width_matches_harmonic_estimate() {
        let s = 10.0;
        let w = wannier(&solve_bands_1d(s, DEFAULT_PLANEWAVES).unwrap()).unwrap();
        let sigma = f64::powf(s, -0.25) / K;
        let fit = w.gaussian_width();
        assert!((fit / sigma - 1.0).abs() < 0.15, "fit {fit}, harmonic {sigma}");
    }

    #[test]
    fn gamma_y_at_zero_flux_is_one() {
        for s in [1.0, 4.0, 10.0, 20.0] {
            assert!((gamma_y(s, 0.0).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn gamma_x_gaussian_estimate() {
        let s: f64 = 10.0;
        let estimate = (-PI * PI * s.sqrt() / 16.0).exp();
        let g = gamma_x(s).unwrap();
        assert!(g > estimate / 2.0 && g < estimate * 2.0, "Γx = {g}, estimate {estimate}");
        assert!(g > 0.0 && g < 1.0);
    }

    // The free-particle Wannier function is sinc(πx/a); half a period apart
    // the overlap is sinc(π/2) = 2/π. The window covers the full
    // Born-von Karman cell so normalisation is exact.
    #[test]
    fn gamma_x_shallow_limit() {
        let sol = solve_bands_1d(1e-3, DEFAULT_PLANEWAVES).unwrap();
        let w = wannier_on(&sol, WannierGrid { points: 64 * 128, periods: 64 }).unwrap();
        assert!((w.gamma_x() - 2.0 / PI).abs() < 2e-2, "Γx = {}", w.gamma_x());
    }

    #[test]
    fn orthogonality_one_period_apart() {
        for s in [5.0, 10.0, 20.0] {
            let w = wannier(&solve_bands_1d(s, DEFAULT_PLANEWAVES).unwrap()).unwrap();
            assert!(w.overlap(LATTICE_PERIOD).abs() < 1e-6, "s = {s}: {}", w.overlap(0.5));
        }
    }

    #[test]
    fn hopping_extraction_methods_agree() {
        for s in [8.0, 12.0, 20.0] {
            let sol = solve_bands_1d(s, DEFAULT_PLANEWAVES).unwrap();
            let a = hopping_j(&sol);
            let b = band_fourier_hopping(&sol);
            assert!((a / b - 1.0).abs() < 0.05, "s = {s}: {a} vs {b}");
        }
    }

    #[test]
    fn hopping_positive() {
        for s in [0.5, 3.0, 15.0, 30.0] {
            assert!(hopping_j(&solve_bands_1d(s, DEFAULT_PLANEWAVES).unwrap()) > 0.0);
        }
        // zero depth: free band of width 1 E_R
        let j0 = hopping_j(&solve_bands_1d(0.0, DEFAULT_PLANEWAVES).unwrap());
        assert!((j0 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn effective_hopping() {
        let z = effective_jx(0.0, 1.0, 10.0, 10.0, 0.25).unwrap();
        assert_eq!(z.jx, 0.0);
        let h = effective_jx(0.02, 0.5, 10.0, 10.0, 0.0).unwrap();
        assert!((h.jx - 0.02 * gamma_x(10.0).unwrap() / 2.0).abs() < 1e-15);
        assert!(h.valid());
        let bad = effective_jx(0.2, 0.5, 10.0, 10.0, 0.0).unwrap();
        assert!(!bad.omega_below_offset);
    }

    #[test]
    fn omega_inversion_round_trip() {
        let jy = hopping_j(&solve_bands_1d(10.0, DEFAULT_PLANEWAVES).unwrap());
        let omega = omega_for_jx(jy, 10.0, 10.0, 1.0 / 6.0).unwrap();
        let back = effective_jx(omega, 1.0, 10.0, 10.0, 1.0 / 6.0).unwrap();
        assert!((back.jx - jy).abs() < 1e-14 * jy.max(1.0));
    }
}
