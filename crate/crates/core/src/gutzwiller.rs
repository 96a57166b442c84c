//! Gutzwiller mean-field ground state of the trapped Bose-Hubbard model with
//! Peierls-phase hopping.
//!
//! The variational state is a product of single-site states
//! `Σ_n f_n |n⟩`, truncated at `n_max`. The energy functional is
//!
//! ```text
//! E = Σ_{i≠j} H_ij φ_i* φ_j + Σ_i [ c U_i ⟨n(n−1)⟩_i + (ε_i − μ) ⟨n⟩_i ]
//! ```
//!
//! with `H_ij` the hopping operator of [`build_hamiltonian`], `φ_i = ⟨a_i⟩`
//! and `c` set by the [`Interaction`] convention. Minimising over one site
//! with the others fixed means diagonalising
//! `h_i = η_i a† + η_i* a + c U_i n(n−1) + (ε_i − μ) n`, `η_i = Σ_j H_ij φ_j`,
//! which is what one Gauss-Seidel update does.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, FluxRatio, HermitianOperator, HubbardParams, LatticeSpec};
use crate::linalg::symmetric_ground;

pub const DEFAULT_NMAX: usize = 8;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_SWEEPS: usize = 5000;
/// Initial uniform order parameter; `φ = 0` is itself a fixed point.
pub const INITIAL_PHI: f64 = 0.1;
/// Ground-state weight at `n_max` above which the cutoff is flagged.
pub const CUTOFF_WEIGHT_TOL: f64 = 1e-6;

/// Harmonic trap `ε = (ω_T/2)(w_x (n − c_x)² + w_y (m − c_y)²)` in units of
/// `J`, with offsets counted in sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapParams {
    pub omega_t: f64,
    pub center: (f64, f64),
    pub weights: (f64, f64),
}

impl TrapParams {
    /// Isotropic trap centred on the middle of `spec`.
    pub fn centered(spec: &LatticeSpec, omega_t: f64) -> Self {
        TrapParams {
            omega_t,
            center: (
                (spec.n_x as f64 - 1.0) / 2.0,
                (spec.n_y as f64 - 1.0) / 2.0,
            ),
            weights: (1.0, 1.0),
        }
    }

    pub fn none() -> Self {
        TrapParams {
            omega_t: 0.0,
            center: (0.0, 0.0),
            weights: (1.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_t >= 0.0) {
            return Err(Error::Config(format!(
                "trap strength must be >= 0, got {}",
                self.omega_t
            )));
        }
        Ok(())
    }
}

pub fn site_energy(trap: &TrapParams, n: usize, m: usize) -> f64 {
    let dx = n as f64 - trap.center.0;
    let dy = m as f64 - trap.center.1;
    0.5 * trap.omega_t * (trap.weights.0 * dx * dx + trap.weights.1 * dy * dy)
}

/// Prefactor of `U n(n−1)` in the onsite energy.
///
/// The default is [`Interaction::Half`]: with it, `U = 16J` sits below the
/// square-lattice mean-field critical point `U_c ≈ 5.8·zJ`, so the α = 0
/// trapped ground state is a superfluid dome. Without the 1/2 the same
/// parameters put the trap centre at the Mott boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interaction {
    /// `U n(n−1)`, i.e. `U a†a†aa` without a factor 1/2.
    NormalOrdered,
    /// `(U/2) n(n−1)`.
    #[default]
    Half,
}

impl std::fmt::Display for Interaction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Interaction::NormalOrdered => "normal-ordered",
            Interaction::Half => "half",
        })
    }
}

impl std::str::FromStr for Interaction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normal-ordered" | "full" => Ok(Interaction::NormalOrdered),
            "half" => Ok(Interaction::Half),
            other => Err(Error::Parse(format!(
                "unknown interaction convention {other:?} (expected half or normal-ordered)"
            ))),
        }
    }
}

impl Interaction {
    pub fn factor(self) -> f64 {
        match self {
            Interaction::NormalOrdered => 1.0,
            Interaction::Half => 0.5,
        }
    }
}

/// Product-state variational wave function and the fields derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct GutzwillerState {
    pub spec: LatticeSpec,
    pub n_max: usize,
    /// `coeffs[i][n] = f_n` for site `i`.
    pub coeffs: Vec<Vec<Complex64>>,
    pub phi: Vec<Complex64>,
    pub sigma2: Vec<f64>,
    pub mean_n: Vec<f64>,
}

/// Single-site moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteMoments {
    pub phi: Complex64,
    pub mean_n: f64,
    pub mean_n2: f64,
}

impl SiteMoments {
    /// `(⟨n²⟩ − ⟨n⟩²)/⟨n⟩`, zero where `⟨n⟩ < 1e-12`.
    pub fn sigma2(&self) -> f64 {
        if self.mean_n < 1e-12 {
            0.0
        } else {
            (self.mean_n2 - self.mean_n * self.mean_n) / self.mean_n
        }
    }
}

pub fn site_moments(f: &[Complex64]) -> SiteMoments {
    let mut phi = Complex64::new(0.0, 0.0);
    let mut mean_n = 0.0;
    let mut mean_n2 = 0.0;
    for (n, c) in f.iter().enumerate() {
        let p = c.norm_sqr();
        mean_n += n as f64 * p;
        mean_n2 += (n * n) as f64 * p;
        if n + 1 < f.len() {
            phi += ((n + 1) as f64).sqrt() * c.conj() * f[n + 1];
        }
    }
    SiteMoments {
        phi,
        mean_n,
        mean_n2,
    }
}

impl GutzwillerState {
    /// Every site in `cos β |0⟩ + sin β |1⟩` with `cos β sin β = φ0`.
    pub fn uniform(spec: &LatticeSpec, n_max: usize, phi0: f64) -> Self {
        let beta = 0.5 * (2.0 * phi0).clamp(-1.0, 1.0).asin();
        let mut f = vec![Complex64::new(0.0, 0.0); n_max + 1];
        f[0] = Complex64::new(beta.cos(), 0.0);
        if n_max >= 1 {
            f[1] = Complex64::new(beta.sin(), 0.0);
        } else {
            f[0] = Complex64::new(1.0, 0.0);
        }
        Self::from_coeffs(*spec, n_max, vec![f; spec.dim()])
    }

    pub fn from_coeffs(spec: LatticeSpec, n_max: usize, coeffs: Vec<Vec<Complex64>>) -> Self {
        let mut s = GutzwillerState {
            spec,
            n_max,
            phi: Vec::new(),
            sigma2: Vec::new(),
            mean_n: Vec::new(),
            coeffs,
        };
        s.refresh();
        s
    }

    /// Recomputes `phi`, `sigma2` and `mean_n` from the coefficients.
    pub fn refresh(&mut self) {
        let m: Vec<SiteMoments> = self.coeffs.iter().map(|f| site_moments(f)).collect();
        self.phi = m.iter().map(|x| x.phi).collect();
        self.sigma2 = m.iter().map(|x| x.sigma2()).collect();
        self.mean_n = m.iter().map(|x| x.mean_n).collect();
    }

    /// Multiplies `f_n` at site `i` by `exp(i n θ_i)`, so `φ_i → e^{iθ_i} φ_i`.
    pub fn rotate_phases(&self, theta: &[f64]) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(theta)
            .map(|(f, &t)| {
                f.iter()
                    .enumerate()
                    .map(|(n, c)| c * Complex64::from_polar(1.0, n as f64 * t))
                    .collect()
            })
            .collect();
        Self::from_coeffs(self.spec, self.n_max, coeffs)
    }

    pub fn abs_phi(&self) -> Vec<f64> {
        self.phi.iter().map(|p| p.norm()).collect()
    }

    pub fn total_n(&self) -> f64 {
        self.mean_n.iter().sum()
    }
}

/// Everything that defines the mean-field problem besides the state.
#[derive(Debug, Clone)]
pub struct MeanFieldProblem {
    pub hopping: HermitianOperator,
    pub params: HubbardParams,
    pub trap: TrapParams,
    pub mu: f64,
    pub interaction: Interaction,
    adjacency: Vec<Vec<(usize, Complex64)>>,
    potential: Vec<f64>,
}

impl MeanFieldProblem {
    /// Uses `hopping` as the hopping operator, so any gauge is allowed.
    pub fn new(
        hopping: HermitianOperator,
        params: HubbardParams,
        trap: TrapParams,
        mu: f64,
        interaction: Interaction,
    ) -> Result<Self> {
        params.validate()?;
        trap.validate()?;
        let spec = *hopping.spec();
        let adjacency = hopping.adjacency();
        let potential = (0..spec.dim())
            .map(|i| {
                let (n, m) = spec.coords(i);
                site_energy(&trap, n, m)
            })
            .collect();
        Ok(MeanFieldProblem {
            hopping,
            params,
            trap,
            mu,
            interaction,
            adjacency,
            potential,
        })
    }

    /// Landau-gauge problem for `(spec, flux)` with hopping `params.j`.
    pub fn landau(
        spec: &LatticeSpec,
        flux: FluxRatio,
        params: HubbardParams,
        trap: TrapParams,
        mu: f64,
        interaction: Interaction,
    ) -> Result<Self> {
        let hopping = build_hamiltonian(spec, flux, params.j)?;
        Self::new(hopping, params, trap, mu, interaction)
    }

    pub fn spec(&self) -> &LatticeSpec {
        self.hopping.spec()
    }

    fn onsite_u(&self, site: usize) -> f64 {
        let (n, _) = self.spec().coords(site);
        self.interaction.factor() * self.params.onsite_u(n)
    }

    /// `η_i = Σ_j H_ij φ_j`.
    pub fn eta(&self, site: usize, phi: &[Complex64]) -> Complex64 {
        self.adjacency[site].iter().map(|&(j, t)| t * phi[j]).sum()
    }

    /// Local mean-field Hamiltonian of `site` in the Fock basis `0..=n_max`.
    pub fn local_hamiltonian(&self, site: usize, phi: &[Complex64], n_max: usize) -> DMatrix<Complex64> {
        let eta = self.eta(site, phi);
        let u = self.onsite_u(site);
        let shift = self.potential[site] - self.mu;
        let mut h = DMatrix::zeros(n_max + 1, n_max + 1);
        for n in 0..=n_max {
            let nf = n as f64;
            h[(n, n)] = Complex64::new(u * nf * (nf - 1.0) + shift * nf, 0.0);
            if n < n_max {
                let s = ((n + 1) as f64).sqrt();
                h[(n + 1, n)] = eta * s;
                h[(n, n + 1)] = eta.conj() * s;
            }
        }
        h
    }

    /// Ground state of the local Hamiltonian.
    ///
    /// Writing `η = |η| e^{iθ}` and `f_n = e^{inθ} g_n` turns the matrix
    /// into a real tridiagonal one, which is what gets diagonalized.
    fn local_ground(&self, site: usize, phi: &[Complex64], n_max: usize) -> Vec<Complex64> {
        let eta = self.eta(site, phi);
        let (r, theta) = eta.to_polar();
        let u = self.onsite_u(site);
        let shift = self.potential[site] - self.mu;
        let mut h = DMatrix::<f64>::zeros(n_max + 1, n_max + 1);
        for n in 0..=n_max {
            let nf = n as f64;
            h[(n, n)] = u * nf * (nf - 1.0) + shift * nf;
            if n < n_max {
                let s = r * ((n + 1) as f64).sqrt();
                h[(n + 1, n)] = s;
                h[(n, n + 1)] = s;
            }
        }
        let (_, g) = symmetric_ground(h);
        // fix the overall sign so the vacuum (or lowest occupied) amplitude
        // is positive; the energy does not depend on it
        let pivot = g.iter().copied().find(|v| v.abs() > 1e-300).unwrap_or(1.0);
        let sign = pivot.signum();
        g.iter()
            .enumerate()
            .map(|(n, &v)| Complex64::from_polar(sign * v, n as f64 * theta))
            .collect()
    }

    /// Variational energy of `state`.
    pub fn energy(&self, state: &GutzwillerState) -> f64 {
        let mut e = 0.0;
        for entry in self.hopping.entries() {
            if entry.row != entry.col {
                e += 2.0 * (entry.value * state.phi[entry.row].conj() * state.phi[entry.col]).re;
            }
        }
        for (i, f) in state.coeffs.iter().enumerate() {
            let u = self.onsite_u(i);
            let shift = self.potential[i] - self.mu;
            for (n, c) in f.iter().enumerate() {
                let nf = n as f64;
                e += c.norm_sqr() * (u * nf * (nf - 1.0) + shift * nf);
            }
        }
        e
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub n_max: usize,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            n_max: DEFAULT_NMAX,
            tol: DEFAULT_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub state: GutzwillerState,
    pub converged: bool,
    /// Largest `|Δφ|` of the last sweep.
    pub residual: f64,
    pub sweeps: usize,
    /// Energy after each sweep (index 0 is the initial state).
    pub energies: Vec<f64>,
    /// Some site keeps more than [`CUTOFF_WEIGHT_TOL`] weight at `n_max`.
    pub cutoff_warning: bool,
}

/// Self-consistent ground state by Gauss-Seidel sweeps, forward then
/// backward over the row-major site order, starting from `initial`.
pub fn solve_from(problem: &MeanFieldProblem, initial: GutzwillerState, opts: &SolveOptions) -> Result<GroundState> {
    let spec = *problem.spec();
    if initial.spec != spec || initial.coeffs.len() != spec.dim() {
        return Err(Error::Contract("initial state does not match the lattice".into()));
    }
    if initial.n_max != opts.n_max {
        return Err(Error::Contract(format!(
            "initial state has n_max = {}, options ask for {}",
            initial.n_max, opts.n_max
        )));
    }
    if opts.n_max == 0 {
        return Err(Error::Config("n_max must be >= 1".into()));
    }
    let mut state = initial;
    let dim = spec.dim();
    let mut energies = vec![problem.energy(&state)];
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    let order: Vec<usize> = (0..dim).chain((0..dim).rev()).collect();
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let before = state.phi.clone();
        for &i in &order {
            let f = problem.local_ground(i, &state.phi, opts.n_max);
            let m = site_moments(&f);
            state.phi[i] = m.phi;
            state.mean_n[i] = m.mean_n;
            state.sigma2[i] = m.sigma2();
            state.coeffs[i] = f;
        }
        residual = before
            .iter()
            .zip(&state.phi)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        energies.push(problem.energy(&state));
        if residual < opts.tol {
            break;
        }
    }
    let converged = residual < opts.tol;
    if !converged {
        log::warn!("Gutzwiller iteration not converged after {sweeps} sweeps (residual {residual:e})");
    }
    let cutoff_warning = state
        .coeffs
        .iter()
        .any(|f| f[opts.n_max].norm_sqr() > CUTOFF_WEIGHT_TOL);
    if cutoff_warning {
        log::warn!("Fock cutoff n_max = {} holds weight > {CUTOFF_WEIGHT_TOL:e}", opts.n_max);
    }
    Ok(GroundState {
        state,
        converged,
        residual,
        sweeps,
        energies,
        cutoff_warning,
    })
}

/// [`solve_from`] starting at the uniform `φ = 0.1` state.
pub fn solve_ground_state(problem: &MeanFieldProblem, opts: &SolveOptions) -> Result<GroundState> {
    let initial = GutzwillerState::uniform(problem.spec(), opts.n_max, INITIAL_PHI);
    solve_from(problem, initial, opts)
}

/// Per-site maps and totals of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    pub abs_phi: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub mean_n: Vec<f64>,
    pub total_n: f64,
    pub energy: f64,
}

pub fn observables(problem: &MeanFieldProblem, state: &GutzwillerState) -> Observables {
    Observables {
        abs_phi: state.abs_phi(),
        sigma2: state.sigma2.clone(),
        mean_n: state.mean_n.clone(),
        total_n: state.total_n(),
        energy: problem.energy(state),
    }
}

/// Mean of `map` over the `size × size` block centred on the lattice.
pub fn central_block_mean(spec: &LatticeSpec, map: &[f64], size: usize) -> f64 {
    let n0 = (spec.n_x.saturating_sub(size)) / 2;
    let m0 = (spec.n_y.saturating_sub(size)) / 2;
    let mut acc = 0.0;
    let mut count = 0;
    for m in m0..(m0 + size).min(spec.n_y) {
        for n in n0..(n0 + size).min(spec.n_x) {
            acc += map[spec.index(n, m)];
            count += 1;
        }
    }
    acc / count as f64
}
