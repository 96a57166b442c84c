//! One function per subcommand. Each writes its data files into the output
//! directory and returns a short human-readable summary for stdout.

use std::f64::consts::PI;

use fluxlattice::dynamics::{detect_row_period, run_uniform_evolution, EvolveOptions, Method, Periodicity};
use fluxlattice::gutzwiller::{
    central_block_mean, observables, solve_ground_state, MeanFieldProblem, SolveOptions, TrapParams,
};
use fluxlattice::laser::{gamma_squared, solve_angles};
use fluxlattice::parallel::ordered_map;
use fluxlattice::spectra::{butterfly, spectrum_slice, SliceOptions};
use fluxlattice::wannier::{hopping_j, solve_bands_1d, wannier};
use fluxlattice::{build_hamiltonian, Error, FluxRatio, HubbardParams, LatticeSpec};

use crate::config::{CliError, CliResult, RunConfig};
use crate::output::{fmt_float, heatmap_svg, scatter_svg, write_file, Cell, Csv};

const ENERGY_UNITS: &str = "energies in J";
/// Side of the central block used for the Gutzwiller summary.
pub const CENTRAL_BLOCK: usize = 6;

pub fn run(cfg: &RunConfig) -> CliResult<String> {
    match cfg.command.as_str() {
        "butterfly" => run_butterfly(cfg),
        "spectrum" => run_spectrum(cfg),
        "evolve" => run_evolve(cfg),
        "wannier" => run_wannier(cfg),
        "laser-angles" => run_laser(cfg),
        "gutzwiller" => run_gutzwiller(cfg),
        other => Err(CliError::Usage(format!("unknown command {other:?}"))),
    }
}

fn spectrum_csv(rows: impl Iterator<Item = (u64, u64, f64)>) -> Csv {
    let mut csv = Csv::new(ENERGY_UNITS, &["alpha_p", "alpha_r", "alpha", "energy_over_J"]);
    for (p, r, e) in rows {
        csv.row(&[Cell::Int(p), Cell::Int(r), Cell::Float(p as f64 / r as f64), Cell::Float(e)]);
    }
    csv
}

fn run_butterfly(cfg: &RunConfig) -> CliResult<String> {
    let dir = cfg.out_dir();
    let data = butterfly(cfg.int("rmax") as u64, cfg.int("ksamples"), 1.0, cfg.threads())?;
    let csv = spectrum_csv(data.points().map(|pt| (pt.p, pt.r, pt.energy)));
    write_file(&dir, "butterfly.csv", csv.as_str())?;
    if cfg.flag("svg") {
        let pts: Vec<(f64, f64)> = data.points().map(|pt| (pt.alpha, pt.energy)).collect();
        let svg = scatter_svg(&pts, (0.0, 1.0), (-4.0, 4.0), "Hofstadter butterfly, alpha vs energy/J");
        write_file(&dir, "butterfly.svg", &svg)?;
    }
    Ok(format!(
        "butterfly: {} fractions, {} points -> {}",
        data.slices.len(),
        data.len(),
        dir.display()
    ))
}

fn run_spectrum(cfg: &RunConfig) -> CliResult<String> {
    let dir = cfg.out_dir();
    let flux = cfg.flux("alpha");
    let opts = SliceOptions {
        k_samples: cfg.int("ksamples"),
        gap_tol: cfg.float("gap-tol"),
        threads: cfg.threads(),
        ..SliceOptions::default()
    };
    let slice = spectrum_slice(flux, 1.0, &opts)?;
    let (p, r) = flux.as_fraction().expect("validated rational");
    write_file(&dir, "spectrum.csv", spectrum_csv(slice.energies.iter().map(|&e| (p, r, e))).as_str())?;
    let mut bands = Csv::new(ENERGY_UNITS, &["band", "lower_over_J", "upper_over_J"]);
    for (i, &(lo, hi)) in slice.band_edges.iter().enumerate() {
        bands.row(&[Cell::Int(i as u64), Cell::Float(lo), Cell::Float(hi)]);
    }
    write_file(&dir, "bands.csv", bands.as_str())?;
    let mut out = format!(
        "alpha = {flux}: {} bands{}",
        slice.band_count,
        if slice.touching { " (touching)" } else { "" }
    );
    for (lo, hi) in &slice.band_edges {
        out.push_str(&format!("\n  [{}, {}]", fmt_float(*lo), fmt_float(*hi)));
    }
    Ok(out)
}

fn run_evolve(cfg: &RunConfig) -> CliResult<String> {
    let dir = cfg.out_dir();
    let spec = cfg.evolve_lattice()?;
    let flux = cfg.flux("alpha");
    let method = match cfg.text("method") {
        "spectral" => Method::Spectral,
        "chebyshev" => Method::Chebyshev,
        _ => Method::Auto,
    };
    let opts = EvolveOptions {
        t_max: cfg.float("tmax"),
        samples: cfg.int("samples"),
        method,
        ..EvolveOptions::default()
    };
    if cfg.flag("dump-operator") {
        let op = build_hamiltonian(&spec, flux, 1.0)?;
        let mut buf = Vec::new();
        op.write_dump(&mut buf).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_file(&dir, "operator.txt", &String::from_utf8(buf).expect("ascii dump"))?;
    }
    let run = run_uniform_evolution(&spec, flux, 1.0, &opts)?;
    let mut csv = Csv::new("times in 1/J, density per row (sums to 1)", &["t", "m", "density"]);
    for (t, rows) in run.profile.times.iter().zip(&run.profile.density) {
        for (m, d) in rows.iter().enumerate() {
            csv.row(&[Cell::Float(*t), Cell::Int(m as u64), Cell::Float(*d)]);
        }
    }
    write_file(&dir, "density.csv", csv.as_str())?;
    if cfg.flag("svg") {
        let hi = run.profile.density.iter().flatten().copied().fold(0.0, f64::max);
        let svg = heatmap_svg(&run.profile.density, (0.0, hi), 8.0, "row density, time downwards, m rightwards");
        write_file(&dir, "density.svg", &svg)?;
    }

    let at = cfg.float("period-at");
    let idx = run
        .profile
        .times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - at).abs().total_cmp(&(b.1 - at).abs()))
        .map(|(i, _)| i)
        .expect("at least one snapshot");
    let period = detect_row_period(&run.profile.density[idx], flux, 0.95)?;
    let norm_drift = run.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    let e0 = run.energies[0];
    let energy_drift = run.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
    let period_text = match period {
        Periodicity::Period(p) => p.to_string(),
        Periodicity::Aperiodic => "aperiodic".into(),
    };
    let summary = format!(
        "period_time = {}\nperiod = {period_text}\nnorm_drift = {}\nenergy_drift = {}\n",
        fmt_float(run.profile.times[idx]),
        fmt_float(norm_drift),
        fmt_float(energy_drift)
    );
    write_file(&dir, "evolve_summary.txt", &summary)?;
    Ok(summary.trim_end().to_string())
}

fn run_wannier(cfg: &RunConfig) -> CliResult<String> {
    let dir = cfg.out_dir();
    let npw = cfg.int("planewaves");
    let alphas = cfg.list("alpha").to_vec();
    let depths = cfg.list("depth");
    let rows = ordered_map(depths, cfg.threads(), |&depth| -> fluxlattice::Result<Vec<[f64; 5]>> {
        let band = solve_bands_1d(depth, npw)?;
        let j = hopping_j(&band);
        let w = wannier(&band)?;
        let gx = w.gamma_x();
        Ok(alphas.iter().map(|&a| [depth, a, gx, w.gamma_y(a), j]).collect())
    });
    let mut csv = Csv::new(
        "depth in E_R, alpha in flux quanta, lengths in lambda, J in E_R",
        &["depth", "alpha", "gamma_x", "gamma_y", "J_over_ER"],
    );
    let mut count = 0;
    for block in rows {
        for row in block? {
            csv.row(&row.map(Cell::Float));
            count += 1;
        }
    }
    write_file(&dir, "wannier.csv", csv.as_str())?;
    Ok(format!("wannier: {count} rows -> {}", dir.join("wannier.csv").display()))
}

fn run_laser(cfg: &RunConfig) -> CliResult<String> {
    let (q, dp, kg) = (cfg.float("q"), cfg.float("delta-prime"), cfg.float("kg"));
    let angles = solve_angles(q, dp, kg).map_err(|e| match e {
        Error::OutOfRange { .. } | Error::Domain(_) => CliError::Usage(e.to_string()),
        other => other.into(),
    })?;
    let (r1, r2) = angles.residuals(q, dp, kg);
    let kv = format!(
        "phi_e_rad = {}\nphi_g_rad = {}\nphi_e_deg = {}\nphi_g_deg = {}\ngamma = {}\nresidual_x = {}\nresidual_y = {}\n",
        fmt_float(angles.phi_e),
        fmt_float(angles.phi_g),
        fmt_float(angles.phi_e * 180.0 / PI),
        fmt_float(angles.phi_g * 180.0 / PI),
        fmt_float(gamma_squared(q, dp, kg).sqrt()),
        fmt_float(r1),
        fmt_float(r2),
    );
    write_file(&cfg.out_dir(), "laser_angles.txt", &kv)?;
    if cfg.text("format") == "kv" {
        return Ok(kv.trim_end().to_string());
    }
    Ok(format!(
        "phi_e = {:.9} rad ({:.6} deg)\nphi_g = {:.9} rad ({:.6} deg)\nresiduals: {r1:.3e}, {r2:.3e}",
        angles.phi_e,
        angles.phi_e.to_degrees(),
        angles.phi_g,
        angles.phi_g.to_degrees()
    ))
}

fn run_gutzwiller(cfg: &RunConfig) -> CliResult<String> {
    let dir = cfg.out_dir();
    let size = cfg.int("size");
    let spec = LatticeSpec::open(size, size).map_err(|e| CliError::Usage(e.to_string()))?;
    let flux: FluxRatio = cfg.flux("alpha");
    let problem = MeanFieldProblem::landau(
        &spec,
        flux,
        HubbardParams::uniform(1.0, cfg.float("u")),
        TrapParams::centered(&spec, cfg.float("omega-t")),
        cfg.float("mu"),
        cfg.interaction(),
    )?;
    let opts = SolveOptions {
        n_max: cfg.int("nmax"),
        tol: cfg.float("tol"),
        max_sweeps: cfg.int("max-sweeps"),
    };
    let ground = solve_ground_state(&problem, &opts)?;
    let obs = observables(&problem, &ground.state);

    let mut csv = Csv::new("energies in J, sites indexed (n, m)", &["n", "m", "abs_phi", "sigma2", "mean_n"]);
    for i in 0..spec.dim() {
        let (n, m) = spec.coords(i);
        csv.row(&[
            Cell::Int(n as u64),
            Cell::Int(m as u64),
            Cell::Float(obs.abs_phi[i]),
            Cell::Float(obs.sigma2[i]),
            Cell::Float(obs.mean_n[i]),
        ]);
    }
    write_file(&dir, "gutzwiller.csv", csv.as_str())?;
    let mut trace = Csv::new(ENERGY_UNITS, &["sweep", "energy_over_J"]);
    for (i, e) in ground.energies.iter().enumerate() {
        trace.row(&[Cell::Int(i as u64), Cell::Float(*e)]);
    }
    write_file(&dir, "energies.csv", trace.as_str())?;
    if cfg.flag("svg") {
        let grid = |map: &[f64]| -> Vec<Vec<f64>> {
            (0..spec.n_y).rev().map(|m| (0..spec.n_x).map(|n| map[spec.index(n, m)]).collect()).collect()
        };
        write_file(&dir, "abs_phi.svg", &heatmap_svg(&grid(&obs.abs_phi), (0.0, 1.0), 10.0, "|phi|"))?;
        write_file(&dir, "sigma2.svg", &heatmap_svg(&grid(&obs.sigma2), (0.0, 1.0), 10.0, "sigma^2"))?;
    }
    let block = CENTRAL_BLOCK.min(size);
    let summary = format!(
        "converged = {}\nsweeps = {}\nresidual = {}\nenergy = {}\ntotal_n = {}\ncentral_abs_phi = {}\ncentral_sigma2 = {}\ncutoff_warning = {}\n",
        ground.converged,
        ground.sweeps,
        fmt_float(ground.residual),
        fmt_float(obs.energy),
        fmt_float(obs.total_n),
        fmt_float(central_block_mean(&spec, &obs.abs_phi, block)),
        fmt_float(central_block_mean(&spec, &obs.sigma2, block)),
        ground.cutoff_warning,
    );
    write_file(&dir, "gutzwiller_summary.txt", &summary)?;
    Ok(summary.trim_end().to_string())
}
