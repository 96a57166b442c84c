//! Single-particle propagation on the flux lattice and the y-periodicity of
//! the resulting density.
//!
//! Times are in units of `1/J`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, FluxRatio, HermitianOperator, LatticeSpec};
use crate::linalg::hermitian_eigh;

/// Operators up to this dimension are propagated by full diagonalization.
pub const DEFAULT_SPECTRAL_MAX_DIM: usize = 1024;
/// Truncation error target of the Chebyshev series.
pub const CHEBYSHEV_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub spec: LatticeSpec,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl WaveState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `|ψ_{n,m}|²` indexed like the lattice.
    pub fn site_density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Equal superposition of every site, `ψ = 1/√(n_x n_y)`.
pub fn uniform_initial_state(spec: &LatticeSpec) -> WaveState {
    let dim = spec.dim();
    let a = 1.0 / (dim as f64).sqrt();
    WaveState {
        spec: *spec,
        amplitudes: vec![Complex64::new(a, 0.0); dim],
        time: 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Spectral path up to `spectral_max_dim`, Chebyshev above.
    Auto,
    Spectral,
    Chebyshev,
}

/// Reusable `exp(-iHt)`; the spectral path diagonalizes once.
#[derive(Debug, Clone)]
pub enum Propagator<'a> {
    Spectral {
        energies: Vec<f64>,
        vectors: DMatrix<Complex64>,
    },
    Chebyshev {
        op: &'a HermitianOperator,
        /// Half-width of an interval containing the spectrum.
        scale: f64,
    },
}

impl<'a> Propagator<'a> {
    pub fn new(op: &'a HermitianOperator, method: Method, spectral_max_dim: usize) -> Self {
        let spectral = match method {
            Method::Spectral => true,
            Method::Chebyshev => false,
            Method::Auto => op.dim() <= spectral_max_dim,
        };
        if spectral {
            let (energies, vectors) = hermitian_eigh(op.to_dense());
            Propagator::Spectral { energies, vectors }
        } else {
            // Gershgorin bound with a small margin keeps the rescaled
            // spectrum strictly inside [-1, 1].
            let scale = op.spectral_bound() * (1.0 + 1e-6);
            Propagator::Chebyshev { op, scale }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Propagator::Spectral { energies, .. } => energies.len(),
            Propagator::Chebyshev { op, .. } => op.dim(),
        }
    }

    /// Advances `state` by `dt`.
    pub fn step(&self, state: &WaveState, dt: f64) -> Result<WaveState> {
        if state.amplitudes.len() != self.dim() {
            return Err(Error::Contract(format!(
                "state has dimension {}, operator has {}",
                state.amplitudes.len(),
                self.dim()
            )));
        }
        if !(dt >= 0.0) {
            return Err(Error::Domain(format!("time step must be >= 0, got {dt}")));
        }
        let amplitudes = if dt == 0.0 {
            state.amplitudes.clone()
        } else {
            match self {
                Propagator::Spectral { energies, vectors } => {
                    spectral_step(energies, vectors, &state.amplitudes, dt)
                }
                Propagator::Chebyshev { scale, .. } if *scale == 0.0 => state.amplitudes.clone(),
                Propagator::Chebyshev { op, scale } => {
                    chebyshev_step(op, *scale, &state.amplitudes, dt)
                }
            }
        };
        Ok(WaveState {
            spec: state.spec,
            amplitudes,
            time: state.time + dt,
        })
    }
}

fn spectral_step(
    energies: &[f64],
    vectors: &DMatrix<Complex64>,
    psi: &[Complex64],
    dt: f64,
) -> Vec<Complex64> {
    let psi = DVector::from_column_slice(psi);
    let mut coeffs = vectors.ad_mul(&psi);
    for (c, &e) in coeffs.iter_mut().zip(energies) {
        *c *= Complex64::from_polar(1.0, -e * dt);
    }
    (vectors * coeffs).iter().copied().collect()
}

/// Bessel functions `J_0(x) .. J_n(x)` for `x > 0` by Miller's backward
/// recurrence, normalised with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    assert!(x > 0.0);
    let start = n.max(x.ceil() as usize) + 30 + (10.0 * x.cbrt()) as usize;
    let start = start + start % 2;
    let mut out = vec![0.0; n + 1];
    let (mut above, mut cur) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        if k <= n {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += if k == 0 { cur } else { 2.0 * cur };
        }
        if k == 0 {
            break;
        }
        let below = 2.0 * k as f64 / x * cur - above;
        above = cur;
        cur = below;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            above *= 1e-250;
            norm *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// Number of Chebyshev terms so that the neglected tail
/// `2 Σ_{k>N} |J_k(x)|` is below `tol`.
fn chebyshev_order(x: f64, tol: f64) -> (usize, Vec<f64>) {
    let cap = (x.ceil() as usize) + 40 + (20.0 * x.cbrt()) as usize;
    let j = bessel_j_sequence(x, cap);
    let mut tail = 0.0;
    let mut n = cap;
    for k in (0..=cap).rev() {
        tail += 2.0 * j[k].abs();
        if tail >= tol {
            n = k;
            break;
        }
    }
    (n.max(1), j)
}

fn chebyshev_step(op: &HermitianOperator, scale: f64, psi: &[Complex64], dt: f64) -> Vec<Complex64> {
    let x = scale * dt;
    let (order, bessel) = chebyshev_order(x, CHEBYSHEV_TOL);
    let dim = psi.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut prev: Vec<Complex64> = psi.to_vec();
    let mut cur = vec![zero; dim];
    op.apply(&prev, &mut cur);
    cur.iter_mut().for_each(|v| *v /= scale);
    let mut next = vec![zero; dim];
    let mut out: Vec<Complex64> = prev.iter().map(|v| v * bessel[0]).collect();
    // (-i)^k cycles 1, -i, -1, i
    let phases = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    for k in 1..=order {
        let c = phases[k % 4] * (2.0 * bessel[k]);
        for (o, v) in out.iter_mut().zip(&cur) {
            *o += c * v;
        }
        if k == order {
            break;
        }
        op.apply(&cur, &mut next);
        for (n, p) in next.iter_mut().zip(&prev) {
            *n = 2.0 * *n / scale - p;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    out
}

/// One-shot `exp(-iH dt)|ψ⟩` with the automatic method choice.
pub fn evolve(state: &WaveState, op: &HermitianOperator, dt: f64) -> Result<WaveState> {
    if state.amplitudes.len() != op.dim() {
        return Err(Error::Contract(format!(
            "state has dimension {}, operator has {}",
            state.amplitudes.len(),
            op.dim()
        )));
    }
    Propagator::new(op, Method::Auto, DEFAULT_SPECTRAL_MAX_DIM).step(state, dt)
}

/// Occupation of each row `m`, summed over `n`.
pub fn density_profile(state: &WaveState) -> Vec<f64> {
    let spec = state.spec;
    let mut out = vec![0.0; spec.n_y];
    for (i, a) in state.amplitudes.iter().enumerate() {
        out[i / spec.n_x] += a.norm_sqr();
    }
    out
}

/// Largest spread `max_n ρ(n,m) − min_n ρ(n,m)` over rows.
pub fn x_nonuniformity(state: &WaveState) -> f64 {
    let spec = state.spec;
    let rho = state.site_density();
    (0..spec.n_y)
        .map(|m| {
            let row = &rho[m * spec.n_x..(m + 1) * spec.n_x];
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Row densities over time, `density[t][m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub times: Vec<f64>,
    pub density: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub t_max: f64,
    /// Number of equal time intervals; `samples + 1` snapshots including
    /// `t = 0`.
    pub samples: usize,
    pub method: Method,
    pub spectral_max_dim: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            t_max: 6.0,
            samples: 60,
            method: Method::Auto,
            spectral_max_dim: DEFAULT_SPECTRAL_MAX_DIM,
        }
    }
}

/// Full run record.
#[derive(Debug, Clone)]
pub struct EvolutionRun {
    pub profile: DensityProfile,
    pub norms: Vec<f64>,
    pub energies: Vec<f64>,
    pub x_nonuniformity: Vec<f64>,
    pub final_state: WaveState,
}

/// Evolves the uniform state under the Landau-gauge Hamiltonian of
/// `(spec, flux, j)` and records row densities at every snapshot.
pub fn run_uniform_evolution(
    spec: &LatticeSpec,
    flux: FluxRatio,
    j: f64,
    opts: &EvolveOptions,
) -> Result<EvolutionRun> {
    if opts.samples == 0 {
        return Err(Error::Config("samples must be >= 1".into()));
    }
    if !(opts.t_max >= 0.0) {
        return Err(Error::Config(format!("t_max must be >= 0, got {}", opts.t_max)));
    }
    let op = build_hamiltonian(spec, flux, j)?;
    let prop = Propagator::new(&op, opts.method, opts.spectral_max_dim);
    let dt = opts.t_max / opts.samples as f64;
    let mut state = uniform_initial_state(spec);
    let mut run = EvolutionRun {
        profile: DensityProfile {
            times: Vec::new(),
            density: Vec::new(),
        },
        norms: Vec::new(),
        energies: Vec::new(),
        x_nonuniformity: Vec::new(),
        final_state: state.clone(),
    };
    for i in 0..=opts.samples {
        if i > 0 {
            state = prop.step(&state, dt)?;
            // keep snapshot times exact multiples of dt
            state.time = dt * i as f64;
        }
        run.profile.times.push(state.time);
        run.profile.density.push(density_profile(&state));
        run.norms.push(state.norm());
        run.energies.push(op.expectation(&state.amplitudes));
        run.x_nonuniformity.push(x_nonuniformity(&state));
    }
    run.final_state = state;
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Periodicity {
    Period(usize),
    Aperiodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodOptions {
    /// Minimum similarity score for a lag to count as a period.
    pub threshold: f64,
    /// Sites dropped at each end before comparing.
    pub edge_trim: usize,
}

impl Default for PeriodOptions {
    fn default() -> Self {
        PeriodOptions {
            threshold: 0.95,
            edge_trim: 0,
        }
    }
}

/// Similarity of a profile with itself shifted by `lag`:
/// `1 − max_i |x[i+lag] − x[i]| / (max x − min x)`.
pub fn shift_similarity(bulk: &[f64], lag: usize) -> f64 {
    let hi = bulk.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = bulk.iter().copied().fold(f64::INFINITY, f64::min);
    let range = hi - lo;
    if range <= 1e-12 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        return 1.0;
    }
    let worst = bulk
        .windows(lag + 1)
        .map(|w| (w[lag] - w[0]).abs())
        .fold(0.0, f64::max);
    1.0 - worst / range
}

/// Smallest lag `1..=max_period` whose [`shift_similarity`] reaches the
/// threshold on the trimmed profile.
pub fn detect_period(profile: &[f64], max_period: usize, opts: &PeriodOptions) -> Result<Periodicity> {
    if max_period == 0 {
        return Err(Error::Config("max_period must be >= 1".into()));
    }
    if profile.len() < 2 * max_period {
        return Err(Error::Contract(format!(
            "profile of length {} is shorter than 2 * max_period = {}",
            profile.len(),
            2 * max_period
        )));
    }
    if profile.len() < 2 * opts.edge_trim + max_period + 1 {
        return Err(Error::Contract(format!(
            "trimming {} sites per edge leaves too little bulk for lag {max_period}",
            opts.edge_trim
        )));
    }
    let bulk = &profile[opts.edge_trim..profile.len() - opts.edge_trim];
    for lag in 1..=max_period {
        if shift_similarity(bulk, lag) >= opts.threshold {
            return Ok(Periodicity::Period(lag));
        }
    }
    Ok(Periodicity::Aperiodic)
}

/// Edge trim used by [`detect_row_period`]: the magnetic cell length `r`,
/// or the nearest integer to `1/α` (folded into `(0, 1/2]`) for a real flux.
pub fn magnetic_length(flux: FluxRatio) -> usize {
    match flux {
        FluxRatio::Rational { r, .. } => r as usize,
        FluxRatio::Real(v) => {
            let f = v.rem_euclid(1.0);
            let f = f.min(1.0 - f);
            if f < 1e-12 {
                1
            } else {
                (1.0 / f).round() as usize
            }
        }
    }
}

/// [`detect_period`] with the standard policy for row-density profiles:
/// trim one magnetic length per edge (capped to leave at least two sites)
/// and try lags up to half of the remaining bulk.
pub fn detect_row_period(profile: &[f64], flux: FluxRatio, threshold: f64) -> Result<Periodicity> {
    if profile.len() < 2 {
        return Err(Error::Contract("profile needs at least two rows".into()));
    }
    let trim = magnetic_length(flux).min((profile.len() - 2) / 2);
    let max_period = (profile.len() - 2 * trim) / 2;
    detect_period(profile, max_period, &PeriodOptions { threshold, edge_trim: trim })
}
