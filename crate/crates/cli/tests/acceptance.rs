//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed. Exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fluxlattice::dynamics::{detect_row_period, run_uniform_evolution, EvolveOptions, Periodicity};
use fluxlattice::gutzwiller::{
    central_block_mean, solve_ground_state, GroundState, Interaction, MeanFieldProblem, SolveOptions, TrapParams,
};
use fluxlattice::laser::{q_max, solve_angles, WINDOW_GUARD};
use fluxlattice::spectra::{butterfly, spectrum_slice, SliceOptions};
use fluxlattice::wannier::{gamma_x, gamma_y, hopping_j, solve_bands_1d, DEFAULT_PLANEWAVES};
use fluxlattice::{apply_gauge_transform, build_hamiltonian, Boundary, Error, FluxRatio, HubbardParams, LatticeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn flux(p: u64, r: u64) -> FluxRatio {
    FluxRatio::rational(p, r).unwrap()
}

fn slice_opts() -> SliceOptions {
    SliceOptions { k_samples: 64, ..SliceOptions::default() }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn band_splitting() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for r in 2..=7u64 {
        let s = spectrum_slice(flux(1, r), 1.0, &slice_opts()).map_err(|e| e.to_string())?;
        // touching is only acceptable at ε = 0 for even r
        let touch_ok = !s.touching
            || (r % 2 == 0
                && s.band_edges
                    .windows(2)
                    .filter(|w| (w[1].0 - w[0].1).abs() <= 1e-3)
                    .all(|w| w[0].1.abs() < 1e-3 && w[1].0.abs() < 1e-3));
        ok &= s.band_count == r as usize && touch_ok;
        notes.push(format!("r={r}:{}{}", s.band_count, if s.touching { "t" } else { "" }));
    }
    check(ok, notes.join(" "))
}

fn free_particle_edges() -> Outcome {
    let s = spectrum_slice(FluxRatio::zero(), 1.0, &slice_opts()).map_err(|e| e.to_string())?;
    let (lo, hi) = s.band_edges[0];
    let err = (lo + 4.0).abs().max((hi - 4.0).abs());
    check(s.band_count == 1 && err < 1e-9, format!("edges [{lo}, {hi}], error {err:.1e}"))
}

fn half_flux_closed_form() -> Outcome {
    let s = spectrum_slice(flux(1, 2), 1.0, &slice_opts()).map_err(|e| e.to_string())?;
    let want = 2.0 * 2f64.sqrt();
    let e = &s.band_edges;
    if e.len() != 2 {
        return Err(format!("{} bands", e.len()));
    }
    let err = (e[0].0 + want).abs().max((e[1].1 - want).abs());
    let gap = e[1].0 - e[0].1;
    check(
        err < 1e-6 && gap.abs() < 1e-6 && s.touching,
        format!("edge error {err:.1e}, central gap {gap:.1e}, touching {}", s.touching),
    )
}

fn finite_lattice_containment() -> Outcome {
    let spec = LatticeSpec::periodic(24, 24).unwrap();
    let mut worst = 0.0f64;
    for (p, r) in [(1, 2), (1, 3), (1, 6)] {
        let f = flux(p, r);
        let slice = spectrum_slice(f, 1.0, &slice_opts()).map_err(|e| e.to_string())?;
        let evs = build_hamiltonian(&spec, f, 1.0).map_err(|e| e.to_string())?.eigenvalues();
        for e in evs {
            let d = slice
                .band_edges
                .iter()
                .map(|&(lo, hi)| if e < lo { lo - e } else if e > hi { e - hi } else { 0.0 })
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    check(worst < 1e-8, format!("largest distance outside the bands {worst:.1e}"))
}

fn butterfly_symmetries() -> Outcome {
    let k = 64;
    let data = butterfly(8, k, 1.0, 4).map_err(|e| e.to_string())?;
    let by_frac: BTreeMap<(u64, u64), &Vec<f64>> =
        data.slices.iter().map(|s| ((s.p, s.r), &s.energies)).collect();
    let opts = SliceOptions { k_samples: k, ..SliceOptions::default() };
    let (mut shift, mut mirror, mut negate) = (0.0f64, 0.0f64, 0.0f64);
    for s in &data.slices {
        let shifted = spectrum_slice(flux(s.p + s.r, s.r), 1.0, &opts).map_err(|e| e.to_string())?;
        shift = shift.max(max_abs_diff(&s.energies, &shifted.energies));
        let partner = by_frac
            .get(&match flux(s.r - s.p, s.r) {
                FluxRatio::Rational { p, r } => (p, r),
                FluxRatio::Real(_) => unreachable!(),
            })
            .ok_or("missing 1 - alpha slice")?;
        mirror = mirror.max(max_abs_diff(&s.energies, partner));
        let mut neg: Vec<f64> = s.energies.iter().map(|e| -e).collect();
        neg.sort_by(f64::total_cmp);
        negate = negate.max(max_abs_diff(&s.energies, &neg));
    }
    check(
        shift < 1e-10 && mirror < 1e-10 && negate < 1e-10,
        format!(
            "{} points; max deviation α+1 {shift:.1e}, 1−α {mirror:.1e}, −ε {negate:.1e}",
            data.len()
        ),
    )
}

fn gauge_invariance() -> Outcome {
    let spec = LatticeSpec::periodic(8, 8).unwrap();
    let op = build_hamiltonian(&spec, flux(1, 4), 1.0).unwrap();
    let base = op.eigenvalues();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let theta: Vec<f64> = (0..spec.dim()).map(|_| rng.gen_range(-PI..PI)).collect();
        let moved = apply_gauge_transform(&op, &theta).map_err(|e| e.to_string())?;
        worst = worst.max(max_abs_diff(&base, &moved.eigenvalues()));
    }
    check(worst < 1e-10, format!("20 transforms, max eigenvalue shift {worst:.1e}"))
}

fn square_lattice_36(f: FluxRatio) -> LatticeSpec {
    let bc_y = if f.is_rational() { Boundary::Periodic } else { Boundary::Open };
    LatticeSpec::new(36, 36, Boundary::Periodic, bc_y).unwrap()
}

fn irrational() -> FluxRatio {
    FluxRatio::real(1.0 / (2.0 * PI)).unwrap()
}

fn period_at(f: FluxRatio, t: f64) -> Result<Periodicity, String> {
    let run = run_uniform_evolution(&square_lattice_36(f), f, 1.0, &EvolveOptions::default()).map_err(|e| e.to_string())?;
    let idx = run
        .profile
        .times
        .iter()
        .position(|&x| (x - t).abs() < 1e-9)
        .ok_or("t = 4/J is not a snapshot")?;
    detect_row_period(&run.profile.density[idx], f, 0.95).map_err(|e| e.to_string())
}

fn row_periods() -> Outcome {
    let a = period_at(flux(1, 6), 4.0)?;
    let b = period_at(irrational(), 4.0)?;
    check(
        a == Periodicity::Period(6) && b == Periodicity::Aperiodic,
        format!("α=1/6 → {a:?}, α=1/(2π) → {b:?}"),
    )
}

fn unitarity() -> Outcome {
    let opts = EvolveOptions { t_max: 50.0, samples: 500, ..EvolveOptions::default() };
    let (mut norm, mut energy) = (0.0f64, 0.0f64);
    for f in [flux(1, 6), irrational()] {
        let run = run_uniform_evolution(&square_lattice_36(f), f, 1.0, &opts).map_err(|e| e.to_string())?;
        norm = norm.max(run.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max));
        let e0 = run.energies[0];
        energy = energy.max(run.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max));
    }
    check(norm < 1e-9 && energy < 1e-8, format!("norm drift {norm:.1e}, energy drift {energy:.1e}"))
}

fn calibration_identities() -> Outcome {
    let e = |r: fluxlattice::Result<f64>| r.map_err(|e| e.to_string());
    let mut gy0 = 0.0f64;
    for d in [4.0, 10.0, 20.0] {
        gy0 = gy0.max((e(gamma_y(d, 0.0))? - 1.0).abs());
    }
    let gx: Vec<f64> = (2..=30).map(|d| e(gamma_x(d as f64))).collect::<Result<_, _>>()?;
    let gx_mono = gx.windows(2).all(|w| w[1] < w[0]);
    let gy: Vec<f64> = [0.125, 0.25, 0.375, 0.5]
        .iter()
        .map(|&a| e(gamma_y(10.0, a)))
        .collect::<Result<_, _>>()?;
    let gy_mono = gy.windows(2).all(|w| w[1] < w[0]);
    check(
        gy0 < 1e-10 && gx_mono && gy_mono,
        format!(
            "|Γy(V0,0)−1| ≤ {gy0:.1e}; Γx(2..30) {:.4}→{:.4} decreasing {gx_mono}; Γy(10,α) {:.4}→{:.4} decreasing {gy_mono}",
            gx[0],
            gx[gx.len() - 1],
            gy[0],
            gy[3]
        ),
    )
}

fn deep_lattice_oracles() -> Outcome {
    let s = 15.0f64;
    let j = hopping_j(&solve_bands_1d(s, DEFAULT_PLANEWAVES).map_err(|e| e.to_string())?);
    let j_oracle = 4.0 / PI.sqrt() * s.powf(0.75) * (-2.0 * s.sqrt()).exp();
    let j_rel = (j - j_oracle).abs() / j_oracle;
    let s = 10.0f64;
    let g = gamma_y(s, 0.5).map_err(|e| e.to_string())?;
    let g_oracle = (-0.25 / s.sqrt()).exp();
    let g_rel = (g - g_oracle).abs() / g_oracle;
    check(
        j_rel < 0.15 && g_rel < 0.05,
        format!("J(15) = {j:.5} vs {j_oracle:.5} ({:.1}%), Γy(10,1/2) = {g:.5} vs {g_oracle:.5} ({:.1}%)", 100.0 * j_rel, 100.0 * g_rel),
    )
}

fn beam_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let kg: f64 = 10f64.powf(rng.gen_range(-1.0..2.0));
        let dp = rng.gen_range(0.0..0.5) * kg;
        let (lo, hi) = (dp + WINDOW_GUARD * kg, q_max(dp, kg) - WINDOW_GUARD * kg);
        let q = lo + rng.gen_range(1e-9..1.0) * (hi - lo);
        let a = solve_angles(q, dp, kg).map_err(|e| format!("q = {q}, Δ′ = {dp}, k_g = {kg}: {e}"))?;
        let (r1, r2) = a.residuals(q, dp, kg);
        worst = worst.max(r1.abs().max(r2.abs()) / kg);
    }
    let sym = solve_angles(2f64.sqrt(), 0.0, 1.0).map_err(|e| e.to_string())?;
    let sym_err = (sym.phi_e - FRAC_PI_4).abs().max((sym.phi_g - FRAC_PI_4).abs());
    let named = |r: fluxlattice::Result<_>, word: &str| {
        matches!(r, Err(Error::OutOfRange { ref bound, .. }) if bound.contains(word))
    };
    let lower = named(solve_angles(0.005, 0.01, 1.0), "lower");
    let upper = named(solve_angles(2.5, 0.0, 1.0), "upper");
    check(
        worst < 1e-12 && sym_err < 1e-12 && lower && upper,
        format!("max residual/k_g {worst:.1e}; symmetric case error {sym_err:.1e}; range errors lower {lower}, upper {upper}"),
    )
}

fn mott_limit() -> Outcome {
    let spec = LatticeSpec::open(8, 8).unwrap();
    let mut worst = 0.0f64;
    for interaction in [Interaction::Half, Interaction::NormalOrdered] {
        let p = MeanFieldProblem::landau(
            &spec,
            flux(1, 6),
            HubbardParams::uniform(0.0, 16.0),
            TrapParams::none(),
            6.0,
            interaction,
        )
        .map_err(|e| e.to_string())?;
        let g = solve_ground_state(&p, &SolveOptions::default()).map_err(|e| e.to_string())?;
        for (i, f) in g.state.coeffs.iter().enumerate() {
            worst = worst
                .max((f[1].norm() - 1.0).abs())
                .max(g.state.phi[i].norm())
                .max(g.state.sigma2[i].abs())
                .max((g.state.mean_n[i] - 1.0).abs());
        }
    }
    check(worst < 1e-12, format!("max deviation from Fock n=1 {worst:.1e} (both interaction conventions)"))
}

fn trap_run(alpha: FluxRatio) -> Result<(GroundState, LatticeSpec, Duration), String> {
    let start = Instant::now();
    let spec = LatticeSpec::open(32, 32).unwrap();
    let p = MeanFieldProblem::landau(
        &spec,
        alpha,
        HubbardParams::uniform(1.0, 16.0),
        TrapParams::centered(&spec, 0.06),
        6.0,
        Interaction::default(),
    )
    .map_err(|e| e.to_string())?;
    let g = solve_ground_state(&p, &SolveOptions::default()).map_err(|e| e.to_string())?;
    Ok((g, spec, start.elapsed()))
}

fn trap_comparison(zero: &(GroundState, LatticeSpec, Duration), sixth: &(GroundState, LatticeSpec, Duration)) -> Outcome {
    let block = |g: &GroundState, spec: &LatticeSpec| {
        (
            central_block_mean(spec, &g.state.abs_phi(), 6),
            central_block_mean(spec, &g.state.sigma2, 6),
        )
    };
    let (phi0, s0) = block(&zero.0, &zero.1);
    let (phi6, s6) = block(&sixth.0, &sixth.1);
    let took = zero.2 + sixth.2;
    check(
        phi6 < phi0 && s6 < s0 && took < Duration::from_secs(300),
        format!(
            "central |φ| {phi0:.4} → {phi6:.4}, σ² {s0:.4} → {s6:.4}; converged {}/{} (residual {:.1e}/{:.1e}); {:.1} s",
            zero.0.converged,
            sixth.0.converged,
            zero.0.residual,
            sixth.0.residual,
            took.as_secs_f64()
        ),
    )
}

fn energy_monotone(runs: &[&(GroundState, LatticeSpec, Duration)]) -> Outcome {
    let mut worst_rise = f64::NEG_INFINITY;
    let mut sweeps = Vec::new();
    for r in runs {
        let e = &r.0.energies;
        worst_rise = worst_rise.max(e.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max));
        sweeps.push(r.0.sweeps.to_string());
    }
    check(
        worst_rise <= 1e-10,
        format!("largest sweep-to-sweep change {worst_rise:.1e} over {} sweeps", sweeps.join("+")),
    )
}

fn run_cli(args: &[&str], out: &Path, threads: usize) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_fluxlab"))
        .args(args)
        .args(["--out", out.to_str().unwrap(), "--threads", &threads.to_string()])
        .env("RUST_LOG", "off")
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(())
}

/// Data files of a run directory; `run.json` records the output path and
/// thread count themselves, so it is left out.
fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().to_string_lossy().into_owned();
        if name != "run.json" {
            out.insert(name, fs::read(entry.path()).unwrap());
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let commands: [&[&str]; 7] = [
        &["butterfly", "--rmax", "6", "--ksamples", "32"],
        &["spectrum", "--alpha", "2/5"],
        &["evolve", "--alpha", "1/6"],
        &["evolve", "--alpha", "1/2pi", "--bc-y", "open", "--dump-operator", "true"],
        &["wannier", "--depth", "2:20:10"],
        &["laser-angles", "--q", "1.2", "--delta-prime", "0.01"],
        &["gutzwiller", "--alpha", "1/6", "--size", "12", "--max-sweeps", "300"],
    ];
    let mut files = 0;
    for (i, args) in commands.iter().enumerate() {
        let mut runs = Vec::new();
        for (j, threads) in [1, 4, 1, 4].iter().enumerate() {
            let dir = tmp.path().join(format!("{i}-{j}"));
            run_cli(args, &dir, *threads)?;
            runs.push(data_files(&dir));
        }
        if runs[0].is_empty() || runs.iter().any(|r| *r != runs[0]) {
            return Err(format!("{} output differs between runs", args[0]));
        }
        files += runs[0].len();
    }
    check(true, format!("{} command configs × 4 runs (threads 1, 4, 1, 4), {files} data files byte-identical", commands.len()))
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    if let Some(limit) = limit {
        if took > limit {
            out = Err(format!(
                "{} — took {:.1} s, limit {} s",
                out.unwrap_or_else(|e| e),
                took.as_secs_f64(),
                limit.as_secs()
            ));
        }
    }
    (out, took)
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let mut results: Vec<(u32, &str, Outcome, Duration)> = Vec::new();
    let mut record = |id, name, (o, d): (Outcome, Duration)| {
        let status = if o.is_ok() { "PASS" } else { "FAIL" };
        let detail = o.as_ref().map_or_else(|e| e.clone(), |d| d.clone());
        println!("{status} [{id:2}] {name}: {detail} ({:.2} s)", d.as_secs_f64());
        results.push((id, name, o, d));
    };

    record(1, "band splitting into r bands", timed(secs(10), band_splitting));
    record(2, "free-particle band edges ±4J", timed(None, free_particle_edges));
    record(3, "α = 1/2 edges ±2√2 J and touching", timed(None, half_flux_closed_form));
    record(4, "24×24 spectrum inside Harper bands", timed(None, finite_lattice_containment));
    record(5, "butterfly symmetries", timed(None, butterfly_symmetries));
    record(6, "gauge invariance", timed(None, gauge_invariance));
    record(7, "row-density period 6 vs aperiodic", timed(secs(60), row_periods));
    record(8, "unitarity and energy conservation", timed(None, unitarity));
    record(9, "calibration identities", timed(None, calibration_identities));
    record(10, "deep-lattice cross-oracles", timed(None, deep_lattice_oracles));
    record(11, "beam-angle solver", timed(None, beam_geometry));
    record(12, "Gutzwiller J = 0 Mott limit", timed(None, mott_limit));

    let trap_runs = trap_run(FluxRatio::zero()).and_then(|a| trap_run(flux(1, 6)).map(|b| (a, b)));
    match &trap_runs {
        Ok((a, b)) => {
            let took = a.2 + b.2;
            record(13, "flux suppresses central |φ| and σ²", (trap_comparison(a, b), took));
            record(14, "Gutzwiller energy non-increasing", (energy_monotone(&[a, b]), Duration::ZERO));
        }
        Err(e) => {
            record(13, "flux suppresses central |φ| and σ²", (Err(e.clone()), Duration::ZERO));
            record(14, "Gutzwiller energy non-increasing", (Err(e.clone()), Duration::ZERO));
        }
    }
    record(15, "end-to-end determinism", timed(None, determinism));

    let failed: Vec<u32> = results.iter().filter(|r| r.2.is_err()).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
