//! Lattice geometry, the flux parameter and the Peierls-phase hopping
//! Hamiltonian.
//!
//! Sites are labelled `(n, m)` with `n` running along x (spacing λ/4) and
//! `m` along y (spacing λ/2). The linear index is `n + n_x * m`. Hopping
//! along x carries the Landau-gauge phase `exp(2πiαm)`; hopping along y is
//! real. All energies are in units of the hopping `J`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_integer::Integer;

use crate::error::{Error, Result};

/// Tolerance used when snapping a real flux onto a nearby fraction.
pub const SNAP_TOLERANCE: f64 = 1e-12;
/// Largest denominator tried when snapping.
pub const DEFAULT_SNAP_RMAX: u64 = 64;

/// Flux per plaquette in units of the flux quantum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxRatio {
    /// Exact fraction `p / r`, always stored reduced.
    Rational { p: u64, r: u64 },
    /// Arbitrary real value.
    Real(f64),
}

impl FluxRatio {
    /// Builds a reduced fraction. `r` must be positive.
    pub fn rational(p: u64, r: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::Domain("flux denominator must be >= 1".into()));
        }
        let g = p.gcd(&r);
        let (p, r) = if g == 0 { (0, 1) } else { (p / g, r / g) };
        Ok(FluxRatio::Rational { p, r })
    }

    pub fn real(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Domain(format!("flux must be finite, got {value}")));
        }
        Ok(FluxRatio::Real(value))
    }

    pub fn zero() -> Self {
        FluxRatio::Rational { p: 0, r: 1 }
    }

    pub fn value(&self) -> f64 {
        match *self {
            FluxRatio::Rational { p, r } => p as f64 / r as f64,
            FluxRatio::Real(v) => v,
        }
    }

    /// `(p, r)` for the rational kind.
    pub fn as_fraction(&self) -> Option<(u64, u64)> {
        match *self {
            FluxRatio::Rational { p, r } => Some((p, r)),
            FluxRatio::Real(_) => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, FluxRatio::Rational { .. })
    }

    /// Phase picked up around one plaquette, `2πα`.
    pub fn phase_per_plaquette(&self) -> f64 {
        TAU * self.value()
    }

    /// Peierls angle `2πα·m` on the x-links of row `m`.
    ///
    /// For a fraction the numerator is reduced modulo `r` first, so the
    /// angle stays in `[0, 2π)` and rows that differ by `r` get bit-identical
    /// phases.
    pub fn row_angle(&self, m: usize) -> f64 {
        match *self {
            FluxRatio::Rational { p, r } => {
                let k = ((p % r) as u128 * (m as u128 % r as u128)) % r as u128;
                TAU * k as f64 / r as f64
            }
            FluxRatio::Real(v) => TAU * v * m as f64,
        }
    }

    /// Replaces a real value by `p/r` when it lies within
    /// [`SNAP_TOLERANCE`] of a fraction with `r <= r_max`. Negative values
    /// are left untouched.
    pub fn snap(self, r_max: u64) -> Self {
        match self {
            FluxRatio::Real(v) if v >= 0.0 => {
                for r in 1..=r_max.max(1) {
                    let p = (v * r as f64).round();
                    if (v - p / r as f64).abs() < SNAP_TOLERANCE {
                        return FluxRatio::rational(p as u64, r).expect("r >= 1");
                    }
                }
                self
            }
            other => other,
        }
    }
}

impl fmt::Display for FluxRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluxRatio::Rational { p, r } => write!(f, "{p}/{r}"),
            FluxRatio::Real(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for FluxRatio {
    type Err = Error;

    /// Accepts `p/r`, a decimal, or `1/2pi`-style reciprocals of multiples
    /// of π (e.g. `1/2pi` is `1/(2π)`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("cannot parse flux '{s}'"));
        if let Some((num, den)) = s.split_once('/') {
            let den = den.trim().trim_start_matches('(').trim_end_matches(')');
            if let Some(coef) = den.strip_suffix("pi") {
                let num: f64 = num.trim().parse().map_err(|_| bad())?;
                let coef: f64 = if coef.is_empty() {
                    1.0
                } else {
                    coef.parse().map_err(|_| bad())?
                };
                return FluxRatio::real(num / (coef * PI));
            }
            let p: u64 = num.trim().parse().map_err(|_| bad())?;
            let r: u64 = den.parse().map_err(|_| bad())?;
            return FluxRatio::rational(p, r);
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        FluxRatio::real(v)
    }
}

/// `α = qλ/4π` for a Raman momentum transfer `q`.
pub fn flux_from_wavenumber(q: f64, lambda: f64) -> Result<FluxRatio> {
    if !(q >= 0.0) {
        return Err(Error::Domain(format!("wavenumber q must be >= 0, got {q}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("wavelength must be > 0, got {lambda}")));
    }
    FluxRatio::real(q * lambda / (4.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::Parse(format!(
                "boundary must be 'open' or 'periodic', got '{other}'"
            ))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

/// Rectangular lattice: `n_x` columns along x, `n_y` rows along y.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    pub n_x: usize,
    pub n_y: usize,
    pub bc_x: Boundary,
    pub bc_y: Boundary,
}

impl LatticeSpec {
    /// Lattice spacing along x in units of λ.
    pub const A_X: f64 = 0.25;
    /// Lattice spacing along y in units of λ.
    pub const A_Y: f64 = 0.5;

    pub fn new(n_x: usize, n_y: usize, bc_x: Boundary, bc_y: Boundary) -> Result<Self> {
        if n_x == 0 || n_y == 0 {
            return Err(Error::Config(format!(
                "lattice dimensions must be >= 1, got {n_x}x{n_y}"
            )));
        }
        Ok(LatticeSpec { n_x, n_y, bc_x, bc_y })
    }

    pub fn open(n_x: usize, n_y: usize) -> Result<Self> {
        Self::new(n_x, n_y, Boundary::Open, Boundary::Open)
    }

    pub fn periodic(n_x: usize, n_y: usize) -> Result<Self> {
        Self::new(n_x, n_y, Boundary::Periodic, Boundary::Periodic)
    }

    pub fn dim(&self) -> usize {
        self.n_x * self.n_y
    }

    #[inline]
    pub fn index(&self, n: usize, m: usize) -> usize {
        n + self.n_x * m
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.n_x, index / self.n_x)
    }

    /// Checks that a periodic y-boundary is commensurate with the magnetic
    /// unit cell of `flux`.
    pub fn check_flux(&self, flux: &FluxRatio) -> Result<()> {
        if self.bc_y != Boundary::Periodic {
            return Ok(());
        }
        match *flux {
            FluxRatio::Rational { r, .. } => {
                if self.n_y as u64 % r != 0 {
                    Err(Error::Config(format!(
                        "periodic y-boundary needs r | n_y, but r = {r} does not divide n_y = {}",
                        self.n_y
                    )))
                } else {
                    Ok(())
                }
            }
            FluxRatio::Real(v) => {
                let snapped = FluxRatio::Real(v.rem_euclid(1.0)).snap(self.n_y as u64);
                match snapped {
                    FluxRatio::Rational { r, .. } if self.n_y as u64 % r == 0 => Ok(()),
                    _ => Err(Error::Config(format!(
                        "periodic y-boundary needs a rational flux p/r with r | n_y = {}; got α = {v}",
                        self.n_y
                    ))),
                }
            }
        }
    }

    /// Nearest-neighbour links `(site, +x or +y neighbour, is_x_link)`,
    /// including wrap-around links on periodic axes.
    pub fn links(&self) -> Vec<(usize, usize, bool)> {
        let mut out = Vec::with_capacity(2 * self.dim());
        for m in 0..self.n_y {
            for n in 0..self.n_x {
                let i = self.index(n, m);
                if n + 1 < self.n_x {
                    out.push((i, self.index(n + 1, m), true));
                } else if self.bc_x == Boundary::Periodic {
                    out.push((i, self.index(0, m), true));
                }
                if m + 1 < self.n_y {
                    out.push((i, self.index(n, m + 1), false));
                } else if self.bc_y == Boundary::Periodic {
                    out.push((i, self.index(n, 0), false));
                }
            }
        }
        out
    }
}

/// Bose-Hubbard parameters, energies in units of `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HubbardParams {
    pub j: f64,
    pub u_even: f64,
    pub u_odd: f64,
    /// Nearest-neighbour interaction; carried but not used by any solver.
    pub u_x: f64,
    pub delta: f64,
    pub omega_eg: f64,
}

impl HubbardParams {
    pub fn uniform(j: f64, u: f64) -> Self {
        HubbardParams {
            j,
            u_even: u,
            u_odd: u,
            u_x: 0.0,
            delta: 0.0,
            omega_eg: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j >= 0.0) {
            return Err(Error::Config(format!("J must be >= 0, got {}", self.j)));
        }
        if !(self.u_even >= 0.0 && self.u_odd >= 0.0) {
            return Err(Error::Config("onsite U must be >= 0".into()));
        }
        Ok(())
    }

    /// Onsite interaction for column `n`.
    pub fn onsite_u(&self, n: usize) -> f64 {
        if n % 2 == 0 {
            self.u_even
        } else {
            self.u_odd
        }
    }
}

/// One stored matrix element with `row <= col`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: Complex64,
}

/// Sparse Hermitian operator on lattice sites.
///
/// Only the upper triangle (`row <= col`) is stored, sorted row-major; the
/// lower triangle is implied by conjugation. Diagonal entries are real.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    spec: LatticeSpec,
    flux: FluxRatio,
    hopping: f64,
    entries: Vec<Entry>,
}

impl HermitianOperator {
    /// Builds an operator from `(row, col, value)` triples.
    ///
    /// Triples below the diagonal are conjugated into the upper triangle and
    /// duplicates are summed. Diagonal values must be real.
    pub fn from_triples(
        spec: LatticeSpec,
        flux: FluxRatio,
        hopping: f64,
        triples: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Result<Self> {
        let dim = spec.dim();
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (row, col, value) in triples {
            if row >= dim || col >= dim {
                return Err(Error::Contract(format!(
                    "entry ({row}, {col}) outside dimension {dim}"
                )));
            }
            let (key, v) = if row <= col {
                ((row, col), value)
            } else {
                ((col, row), value.conj())
            };
            *acc.entry(key).or_default() += v;
        }
        let mut entries = Vec::with_capacity(acc.len());
        for ((row, col), value) in acc {
            if row == col && value.im.abs() > 1e-12 * value.re.abs().max(1.0) {
                return Err(Error::Contract(format!(
                    "diagonal entry ({row}, {row}) has imaginary part {}",
                    value.im
                )));
            }
            let value = if row == col {
                Complex64::new(value.re, 0.0)
            } else {
                value
            };
            entries.push(Entry { row, col, value });
        }
        Ok(HermitianOperator {
            dim,
            spec,
            flux,
            hopping,
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn flux(&self) -> FluxRatio {
        self.flux
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// `H[row][col]`, including implied lower-triangle entries.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let (key, conj) = if row <= col {
            ((row, col), false)
        } else {
            ((col, row), true)
        };
        match self
            .entries
            .binary_search_by(|e| (e.row, e.col).cmp(&key))
        {
            Ok(i) if conj => self.entries[i].value.conj(),
            Ok(i) => self.entries[i].value,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.value == Complex64::new(0.0, 0.0))
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for e in &self.entries {
            y[e.row] += e.value * x[e.col];
            if e.row != e.col {
                y[e.col] += e.value.conj() * x[e.row];
            }
        }
    }

    /// `⟨x|H|x⟩`, real for a Hermitian operator.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for e in &self.entries {
            let t = x[e.row].conj() * e.value * x[e.col];
            acc += if e.row == e.col { t.re } else { 2.0 * t.re };
        }
        acc
    }

    /// Neighbours of `site` with the amplitude `H[site][j]`.
    pub fn row_entries(&self, site: usize) -> Vec<(usize, Complex64)> {
        let mut out = Vec::new();
        for e in &self.entries {
            if e.row == site && e.col != site {
                out.push((e.col, e.value));
            } else if e.col == site && e.row != site {
                out.push((e.row, e.value.conj()));
            }
        }
        out
    }

    /// Adjacency lists for all sites, `adj[i] = [(j, H[i][j])]`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, Complex64)>> {
        let mut adj = vec![Vec::new(); self.dim];
        for e in &self.entries {
            if e.row != e.col {
                adj[e.row].push((e.col, e.value));
                adj[e.col].push((e.row, e.value.conj()));
            }
        }
        adj
    }

    /// Gershgorin bound on the spectral radius.
    pub fn spectral_bound(&self) -> f64 {
        let mut rows = vec![0.0f64; self.dim];
        for e in &self.entries {
            let a = e.value.norm();
            rows[e.row] += a;
            if e.row != e.col {
                rows[e.col] += a;
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for e in &self.entries {
            m[(e.row, e.col)] += e.value;
            if e.row != e.col {
                m[(e.col, e.row)] += e.value.conj();
            }
        }
        m
    }

    /// Sorted eigenvalues by dense diagonalization.
    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::linalg::hermitian_eigenvalues(self.to_dense())
    }

    /// Writes the text dump: a header `dim n_x n_y alpha_p alpha_r J`, then
    /// one `row col re im` line per stored entry in row-major order.
    ///
    /// A real flux is written as its value with `alpha_r = 0`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let (p, r) = match self.flux {
            FluxRatio::Rational { p, r } => (p.to_string(), r.to_string()),
            FluxRatio::Real(v) => (format!("{v:e}"), "0".to_string()),
        };
        writeln!(
            w,
            "{} {} {} {} {} {:e}",
            self.dim, self.spec.n_x, self.spec.n_y, p, r, self.hopping
        )?;
        for e in &self.entries {
            writeln!(w, "{} {} {:e} {:e}", e.row, e.col, e.value.re, e.value.im)?;
        }
        Ok(())
    }

    /// Reads a dump produced by [`write_dump`](Self::write_dump). Boundary
    /// conditions are not part of the format and are reported as open.
    pub fn read_dump<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let io = |e: std::io::Error| Error::Parse(e.to_string());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty operator dump".into()))?
            .map_err(io)?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 {
            return Err(Error::Parse(format!("bad header '{header}'")));
        }
        let num = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad integer '{s}'")))
        };
        let float = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))
        };
        let dim = num(h[0])?;
        let spec = LatticeSpec::open(num(h[1])?, num(h[2])?)?;
        if spec.dim() != dim {
            return Err(Error::Parse(format!(
                "header dim {dim} does not match {}x{}",
                spec.n_x, spec.n_y
            )));
        }
        let flux = match num(h[4])? {
            0 => FluxRatio::real(float(h[3])?)?,
            r => FluxRatio::rational(num(h[3])? as u64, r as u64)?,
        };
        let hopping = float(h[5])?;
        let mut triples = Vec::new();
        for line in lines {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("bad entry line '{line}'")));
            }
            triples.push((
                num(f[0])?,
                num(f[1])?,
                Complex64::new(float(f[2])?, float(f[3])?),
            ));
        }
        Self::from_triples(spec, flux, hopping, triples)
    }
}

/// Peierls-phase hopping Hamiltonian in the Landau gauge.
///
/// Each x-link `(n, m) → (n+1, m)` gets `H[(n,m)][(n+1,m)] = J·exp(2πiαm)`,
/// each y-link `(n, m) → (n, m+1)` gets `J`. Wrap-around links on periodic
/// axes follow the same rule.
pub fn build_hamiltonian(spec: &LatticeSpec, flux: FluxRatio, j: f64) -> Result<HermitianOperator> {
    spec.check_flux(&flux)?;
    let triples = spec.links().into_iter().map(|(a, b, is_x)| {
        let amp = if is_x {
            let (_, m) = spec.coords(a);
            Complex64::from_polar(j, flux.row_angle(m))
        } else {
            Complex64::new(j, 0.0)
        };
        (a, b, amp)
    });
    HermitianOperator::from_triples(*spec, flux, j, triples)
}

/// Unitary gauge change `t_ij → t_ij·exp(i(θ_i − θ_j))`. The diagonal is
/// untouched.
pub fn apply_gauge_transform(op: &HermitianOperator, theta: &[f64]) -> Result<HermitianOperator> {
    if theta.len() != op.dim {
        return Err(Error::Contract(format!(
            "gauge field has {} sites, operator has {}",
            theta.len(),
            op.dim
        )));
    }
    let entries = op
        .entries
        .iter()
        .map(|e| {
            let value = if e.row == e.col {
                e.value
            } else {
                e.value * Complex64::from_polar(1.0, theta[e.row] - theta[e.col])
            };
            Entry { value, ..*e }
        })
        .collect();
    Ok(HermitianOperator {
        entries,
        ..op.clone()
    })
}

/// Product of hopping amplitudes (normalised to unit modulus) around the
/// plaquette with lower-left corner `(n, m)`, traversed
/// `(n,m) → (n+1,m) → (n+1,m+1) → (n,m+1) → (n,m)`.
///
/// The hop `a → b` contributes `H[b][a]`; for the Landau-gauge operator the
/// product is `exp(2πiα)`.
pub fn plaquette_holonomy(op: &HermitianOperator, n: usize, m: usize) -> Complex64 {
    let spec = op.spec;
    let nx = |n: usize| (n + 1) % spec.n_x;
    let ny = |m: usize| (m + 1) % spec.n_y;
    let path = [
        spec.index(n, m),
        spec.index(nx(n), m),
        spec.index(nx(n), ny(m)),
        spec.index(n, ny(m)),
        spec.index(n, m),
    ];
    path.windows(2).fold(Complex64::new(1.0, 0.0), |acc, w| {
        let t = op.get(w[1], w[0]);
        acc * t / t.norm()
    })
}
