//! Browser bindings for three interactive views: the Hofstadter butterfly,
//! row-density dynamics of a uniform wave packet, and the Wannier overlap
//! curves that calibrate the laser-assisted hopping.
//!
//! The computations live in plain functions returning `Result<_, String>`
//! so they can be tested natively; the `#[wasm_bindgen]` wrappers only
//! translate errors.

use std::f64::consts::PI;

use fluxlattice::dynamics::{detect_row_period, run_uniform_evolution, EvolveOptions, Periodicity};
use fluxlattice::spectra::butterfly;
use fluxlattice::wannier::{hopping_j, solve_bands_1d, wannier, DEFAULT_PLANEWAVES};
use fluxlattice::{Boundary, FluxRatio, LatticeSpec};
use wasm_bindgen::prelude::*;

/// Largest denominator the page may request; keeps a frame under a second.
pub const MAX_RMAX: u32 = 24;
pub const MAX_SIDE: u32 = 64;

/// Flat `[α0, ε0, α1, ε1, …]` for every fraction with `r <= r_max`.
pub fn butterfly_points(r_max: u32, k_samples: u32) -> Result<Vec<f64>, String> {
    if r_max == 0 || r_max > MAX_RMAX {
        return Err(format!("r_max must be in 1..={MAX_RMAX}"));
    }
    let data = butterfly(r_max as u64, k_samples as usize, 1.0, 1).map_err(|e| e.to_string())?;
    Ok(data.points().flat_map(|p| [p.alpha, p.energy]).collect())
}

/// Row densities of an `n × n` lattice (periodic in x) over time.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct DensityMovie {
    rows: usize,
    times: Vec<f64>,
    density: Vec<f64>,
    periods: Vec<i32>,
}

#[wasm_bindgen]
impl DensityMovie {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn frames(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    /// Frame-major densities, `frames × rows` values.
    pub fn density(&self) -> Vec<f64> {
        self.density.clone()
    }

    /// Detected row period per frame, `-1` where the profile is aperiodic.
    pub fn periods(&self) -> Vec<i32> {
        self.periods.clone()
    }
}

/// Evolves the uniform state; `alpha` accepts `p/r`, decimals and `1/2pi`.
/// The y-boundary is periodic when the flux fits the lattice, open otherwise.
pub fn density_movie(alpha: &str, side: u32, t_max: f64, frames: u32) -> Result<DensityMovie, String> {
    if !(2..=MAX_SIDE).contains(&side) {
        return Err(format!("lattice side must be in 2..={MAX_SIDE}"));
    }
    if !(1..=400).contains(&frames) {
        return Err("frames must be in 1..=400".into());
    }
    let flux: FluxRatio = alpha.parse().map_err(|e: fluxlattice::Error| e.to_string())?;
    let n = side as usize;
    let periodic = LatticeSpec::new(n, n, Boundary::Periodic, Boundary::Periodic).map_err(|e| e.to_string())?;
    let spec = if periodic.check_flux(&flux).is_ok() {
        periodic
    } else {
        LatticeSpec::new(n, n, Boundary::Periodic, Boundary::Open).map_err(|e| e.to_string())?
    };
    let opts = EvolveOptions { t_max, samples: frames as usize, ..EvolveOptions::default() };
    let run = run_uniform_evolution(&spec, flux, 1.0, &opts).map_err(|e| e.to_string())?;
    let periods = run
        .profile
        .density
        .iter()
        .map(|row| match detect_row_period(row, flux, 0.95) {
            Ok(Periodicity::Period(p)) => p as i32,
            _ => -1,
        })
        .collect();
    Ok(DensityMovie {
        rows: n,
        times: run.profile.times,
        density: run.profile.density.concat(),
        periods,
    })
}

/// Flat `[V0, Γx, Γy, J/E_R]` rows for `count` depths in `[lo, hi]`.
pub fn calibration_curves(alpha: f64, lo: f64, hi: f64, count: u32) -> Result<Vec<f64>, String> {
    if !(lo >= 0.0 && hi >= lo) || !(1..=200).contains(&count) {
        return Err("need 0 <= lo <= hi and 1 <= count <= 200".into());
    }
    let mut out = Vec::with_capacity(4 * count as usize);
    for i in 0..count {
        let depth = if count == 1 { lo } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 };
        let band = solve_bands_1d(depth, DEFAULT_PLANEWAVES).map_err(|e| e.to_string())?;
        let w = wannier(&band).map_err(|e| e.to_string())?;
        out.extend([depth, w.gamma_x(), w.gamma_y(alpha), hopping_j(&band)]);
    }
    Ok(out)
}

/// Flux realised by a Raman momentum transfer `q` at lattice wavelength
/// `lambda`, `α = qλ/4π`.
#[wasm_bindgen(js_name = fluxFromWavenumber)]
pub fn flux_from_wavenumber(q: f64, lambda: f64) -> f64 {
    q * lambda / (4.0 * PI)
}

#[wasm_bindgen(js_name = butterflyPoints)]
pub fn js_butterfly_points(r_max: u32, k_samples: u32) -> Result<Vec<f64>, JsError> {
    butterfly_points(r_max, k_samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = densityMovie)]
pub fn js_density_movie(alpha: &str, side: u32, t_max: f64, frames: u32) -> Result<DensityMovie, JsError> {
    density_movie(alpha, side, t_max, frames).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = calibrationCurves)]
pub fn js_calibration_curves(alpha: f64, lo: f64, hi: f64, count: u32) -> Result<Vec<f64>, JsError> {
    calibration_curves(alpha, lo, hi, count).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn butterfly_pairs() {
        let v = butterfly_points(2, 4).unwrap();
        assert_eq!(v.len(), 2 * 16 * (1 + 2 + 1));
        assert!(v.chunks(2).all(|p| (0.0..=1.0).contains(&p[0]) && p[1].abs() <= 4.0 + 1e-12));
        assert!(butterfly_points(0, 4).is_err());
        assert!(butterfly_points(MAX_RMAX + 1, 4).is_err());
    }

    #[test]
    fn movie_shape_and_period() {
        let m = density_movie("1/6", 36, 6.0, 60).unwrap();
        assert_eq!(m.frames(), 61);
        assert_eq!(m.density().len(), 61 * 36);
        assert_eq!(m.periods()[40], 6);
        let m = density_movie("1/2pi", 36, 6.0, 60).unwrap();
        assert_eq!(m.periods()[40], -1);
        assert!(density_movie("abc", 8, 1.0, 2).is_err());
    }

    #[test]
    fn calibration_rows() {
        let v = calibration_curves(0.0, 5.0, 10.0, 3).unwrap();
        assert_eq!(v.len(), 12);
        for row in v.chunks(4) {
            assert!((row[2] - 1.0).abs() < 1e-10);
        }
        assert!(v[1] > v[5] && v[5] > v[9]);
        assert!((flux_from_wavenumber(4.0 * PI, 0.5) - 0.5).abs() < 1e-15);
    }
}
