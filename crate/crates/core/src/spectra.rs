//! Magnetic-Bloch (Harper) band structure and the Hofstadter butterfly.
//!
//! For a rational flux `α = p/r` the Landau-gauge Hamiltonian is periodic
//! along x with period 1 and along y with period `r`. A plane wave
//! `exp(i k_x n)` along x and a magnetic-Bloch condition
//! `g_{m+r} = exp(i k_y r) g_m` along y reduce it to an `r × r` matrix on the
//! magnetic Brillouin zone `[0, 2π) × [0, 2π/r)`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_integer::Integer;

use crate::error::{Error, Result};
use crate::lattice::FluxRatio;
use crate::linalg::hermitian_eigenvalues;
use crate::parallel::ordered_map;

pub const DEFAULT_K_SAMPLES: usize = 64;
pub const DEFAULT_GAP_TOL: f64 = 1e-3;
/// A gap within this multiple of the tolerance triggers one grid doubling.
pub const REFINE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarperProblem {
    pub flux: FluxRatio,
    pub k_x: f64,
    pub k_y: f64,
    pub j: f64,
}

/// The `r × r` Bloch matrix of the magnetic unit cell.
///
/// Diagonal `2J cos(2παm + k_x)`, hopping `J` between `m` and `m+1`, and the
/// closing link `H[r-1][0] = J exp(i k_y r)`. For `r = 1` all three terms
/// land on the single diagonal element, giving `2J(cos k_x + cos k_y)`.
pub fn harper_matrix(problem: &HarperProblem) -> Result<DMatrix<Complex64>> {
    let (_, r) = problem.flux.as_fraction().ok_or_else(|| {
        Error::Domain(format!(
            "Harper reduction needs a rational flux, got {}",
            problem.flux
        ))
    })?;
    let r = r as usize;
    let j = problem.j;
    let mut h = DMatrix::<Complex64>::zeros(r, r);
    for m in 0..r {
        let d = 2.0 * j * (problem.flux.row_angle(m) + problem.k_x).cos();
        h[(m, m)] += Complex64::new(d, 0.0);
    }
    let closing = Complex64::from_polar(j, problem.k_y * r as f64);
    for m in 0..r {
        let next = (m + 1) % r;
        let t = if m + 1 == r {
            closing
        } else {
            Complex64::new(j, 0.0)
        };
        h[(m, next)] += t;
        h[(next, m)] += t.conj();
    }
    Ok(h)
}

/// Uniform grid of the magnetic Brillouin zone for denominator `r`.
pub fn k_grid(r: u64, k_samples: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(k_samples * k_samples);
    for ix in 0..k_samples {
        let kx = TAU * ix as f64 / k_samples as f64;
        for iy in 0..k_samples {
            let ky = TAU * iy as f64 / (k_samples as f64 * r as f64);
            out.push((kx, ky));
        }
    }
    out
}

/// Options for [`spectrum_slice`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceOptions {
    pub k_samples: usize,
    pub gap_tol: f64,
    /// Allow one grid doubling when a gap is ambiguous.
    pub refine: bool,
    pub threads: usize,
}

impl Default for SliceOptions {
    fn default() -> Self {
        SliceOptions {
            k_samples: DEFAULT_K_SAMPLES,
            gap_tol: DEFAULT_GAP_TOL,
            refine: true,
            threads: 1,
        }
    }
}

/// Eigenvalues of one flux value over the magnetic Brillouin zone, with the
/// band structure inferred from them.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSlice {
    pub flux: FluxRatio,
    /// All `r · k_samples²` eigenvalues in units of `J`, ascending.
    pub energies: Vec<f64>,
    /// `[min, max]` of the `k`-th eigenvalue over the zone, one per Bloch
    /// band index.
    pub index_bands: Vec<(f64, f64)>,
    /// Bands after clustering, ascending and disjoint or touching.
    pub band_edges: Vec<(f64, f64)>,
    pub band_count: usize,
    /// Some neighbouring bands meet (gap within tolerance) without
    /// overlapping.
    pub touching: bool,
    /// Grid size the energies were sampled on.
    pub k_samples: usize,
    /// Grid size the band edges were taken from (doubled after refinement).
    pub edge_k_samples: usize,
}

impl SpectrumSlice {
    /// Whether `e` lies in the band union within `tol`.
    pub fn contains(&self, e: f64, tol: f64) -> bool {
        self.band_edges
            .iter()
            .any(|&(lo, hi)| e >= lo - tol && e <= hi + tol)
    }

    /// Smallest gap between neighbouring index bands (negative if they
    /// overlap).
    pub fn min_gap(&self) -> Option<f64> {
        self.index_bands
            .windows(2)
            .map(|w| w[1].0 - w[0].1)
            .min_by(f64::total_cmp)
    }
}

/// Sorted eigenvalues at each grid point plus per-index band extrema.
fn sample_zone(
    flux: FluxRatio,
    j: f64,
    k_samples: usize,
    threads: usize,
) -> Result<(Vec<f64>, Vec<(f64, f64)>)> {
    let (_, r) = flux
        .as_fraction()
        .ok_or_else(|| Error::Domain(format!("spectrum slice needs a rational flux, got {flux}")))?;
    let grid = k_grid(r, k_samples);
    let per_k: Vec<Vec<f64>> = ordered_map(&grid, threads, |&(k_x, k_y)| {
        let h = harper_matrix(&HarperProblem { flux, k_x, k_y, j }).expect("rational flux");
        hermitian_eigenvalues(h)
    });
    let r = r as usize;
    let mut bands = vec![(f64::INFINITY, f64::NEG_INFINITY); r];
    let mut energies = Vec::with_capacity(r * grid.len());
    for evs in &per_k {
        for (b, &e) in bands.iter_mut().zip(evs) {
            b.0 = b.0.min(e);
            b.1 = b.1.max(e);
        }
        energies.extend_from_slice(evs);
    }
    energies.sort_by(f64::total_cmp);
    Ok((energies, bands))
}

struct Clusters {
    edges: Vec<(f64, f64)>,
    touching: bool,
}

/// Groups index bands: a gap larger than `gap_tol` or a contact within
/// `gap_tol` separates bands (the latter marks them touching); an overlap
/// deeper than `gap_tol` merges them.
fn cluster(index_bands: &[(f64, f64)], gap_tol: f64) -> Clusters {
    let mut edges: Vec<(f64, f64)> = Vec::new();
    let mut touching = false;
    for &(lo, hi) in index_bands {
        match edges.last_mut() {
            Some(last) if lo - last.1 < -gap_tol => {
                last.1 = last.1.max(hi);
            }
            Some(last) => {
                if (lo - last.1).abs() <= gap_tol {
                    touching = true;
                }
                edges.push((lo, hi));
            }
            None => edges.push((lo, hi)),
        }
    }
    Clusters { edges, touching }
}

fn ambiguous(index_bands: &[(f64, f64)], gap_tol: f64) -> bool {
    index_bands.windows(2).any(|w| {
        let g = (w[1].0 - w[0].1).abs();
        g > gap_tol && g <= REFINE_FACTOR * gap_tol
    })
}

/// Samples the Harper spectrum of a rational flux on a uniform
/// `k_samples × k_samples` grid and clusters it into bands.
///
/// If some gap is within `REFINE_FACTOR · gap_tol` but above `gap_tol`, the
/// band edges are recomputed once on a doubled grid before clustering. The
/// stored energies always come from the requested grid.
pub fn spectrum_slice(flux: FluxRatio, j: f64, opts: &SliceOptions) -> Result<SpectrumSlice> {
    if opts.k_samples < 2 {
        return Err(Error::Config(format!(
            "k_samples must be >= 2, got {}",
            opts.k_samples
        )));
    }
    let (energies, mut index_bands) = sample_zone(flux, j, opts.k_samples, opts.threads)?;
    let mut edge_k_samples = opts.k_samples;
    if opts.refine && ambiguous(&index_bands, opts.gap_tol) {
        edge_k_samples = 2 * opts.k_samples;
        let (_, fine) = sample_zone(flux, j, edge_k_samples, opts.threads)?;
        index_bands = fine;
    }
    let c = cluster(&index_bands, opts.gap_tol);
    Ok(SpectrumSlice {
        flux,
        energies,
        band_count: c.edges.len(),
        band_edges: c.edges,
        touching: c.touching,
        index_bands,
        k_samples: opts.k_samples,
        edge_k_samples,
    })
}

/// Number of bands of `slice` at gap tolerance `gap_tol`, with the touching
/// flag. Bands that meet at a point count separately.
pub fn band_count(slice: &SpectrumSlice, gap_tol: f64) -> (usize, bool) {
    let c = cluster(&slice.index_bands, gap_tol);
    (c.edges.len(), c.touching)
}

/// Reduced fractions `p/r` with `1 <= r <= r_max` and `0 <= p <= r`, sorted
/// by value.
pub fn fractions(r_max: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for r in 1..=r_max {
        for p in 0..=r {
            if p.gcd(&r) == 1 {
                out.push((p, r));
            }
        }
    }
    out.sort_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)));
    out
}

/// One α column of the butterfly.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterflySlice {
    pub p: u64,
    pub r: u64,
    pub energies: Vec<f64>,
}

impl ButterflySlice {
    pub fn alpha(&self) -> f64 {
        self.p as f64 / self.r as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ButterflyDataset {
    pub slices: Vec<ButterflySlice>,
    pub r_max: u64,
    pub k_samples: usize,
}

/// One `(α, ε)` point with its exact fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ButterflyPoint {
    pub p: u64,
    pub r: u64,
    pub alpha: f64,
    pub energy: f64,
}

impl ButterflyDataset {
    /// Points ordered by `(α, ε)`.
    pub fn points(&self) -> impl Iterator<Item = ButterflyPoint> + '_ {
        self.slices.iter().flat_map(|s| {
            let alpha = s.alpha();
            s.energies.iter().map(move |&energy| ButterflyPoint {
                p: s.p,
                r: s.r,
                alpha,
                energy,
            })
        })
    }

    pub fn len(&self) -> usize {
        self.slices.iter().map(|s| s.energies.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Hofstadter butterfly over all reduced fractions with `r <= r_max`.
///
/// Slices are computed in parallel on `threads` workers; the result is
/// identical for every thread count.
pub fn butterfly(r_max: u64, k_samples: usize, j: f64, threads: usize) -> Result<ButterflyDataset> {
    if r_max < 1 {
        return Err(Error::Config("r_max must be >= 1".into()));
    }
    if k_samples < 2 {
        return Err(Error::Config(format!("k_samples must be >= 2, got {k_samples}")));
    }
    let fr = fractions(r_max);
    let slices = ordered_map(&fr, threads, |&(p, r)| {
        let flux = FluxRatio::Rational { p, r };
        let (energies, _) = sample_zone(flux, j, k_samples, 1).expect("rational flux");
        ButterflySlice { p, r, energies }
    });
    Ok(ButterflyDataset {
        slices,
        r_max,
        k_samples,
    })
}
