use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use catkick_core::mz::CouplingPolicy;
use catkick_core::quad::linspace;
use catkick_core::validate::{self, ValidationConfig};
use catkick_core::wigner::{align_to_imaginary, off_slice_scan, wigner_slice, GridSpec};
use catkick_core::{MZParams, MachZehnder, ModelParams, SingleCavity, TwoPhoton};

use crate::output::{params_line, sibling, Table};
use crate::{CliError, Options};

type Written = Result<Vec<PathBuf>, CliError>;

/// Parallel slice offsets searched for a deeper minimum than the nominal slice.
const SLICE_OFFSETS: [f64; 4] = [-0.4, -0.2, 0.2, 0.4];
/// Relative margin for reporting an off-slice minimum as deeper.
const OFF_SLICE_THRESHOLD: f64 = 0.1;

fn out_path(opts: &Options, name: &str) -> PathBuf {
    opts.out.clone().unwrap_or_else(|| Path::new("out").join(format!("{name}.csv")))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be a positive number, got {v}")))
    }
}

fn points(opts: &Options, default: usize) -> Result<usize, CliError> {
    let n = opts.steps.unwrap_or(default);
    if n < 2 {
        return Err(CliError::Usage(format!("--steps must be at least 2, got {n}")));
    }
    Ok(n)
}

/// Model parameters from the flags; `photons` sizes the default truncation.
fn model(opts: &Options, gamma: f64, g0: f64, omega: f64, photons: u32) -> Result<ModelParams, CliError> {
    let gamma = opts.gamma.unwrap_or(gamma);
    let g0 = opts.g0.unwrap_or(g0);
    let omega = opts.omega_m.unwrap_or(omega);
    let p = ModelParams::with_photons(gamma, g0, omega, photons).map_err(usage)?;
    match opts.fock_dim {
        Some(d) => p.with_fock_dim(d).map_err(usage),
        None => Ok(p),
    }
}

fn usage(e: catkick_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn check(opts: &Options, p: &ModelParams) -> Result<(), CliError> {
    if !opts.validate {
        return Ok(());
    }
    let report = validate::run(&ValidationConfig { fault: opts.inject_fault, ..ValidationConfig::new(*p) })?;
    eprintln!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}

pub fn rate1(opts: &Options) -> Written {
    let p = model(opts, 2.0, 0.02, 0.02, 1)?;
    check(opts, &p)?;
    let ts = linspace(0.0, positive("t-max", opts.t_max.unwrap_or(40.0))?, points(opts, 2001)?);
    let cav = SingleCavity::new(p)?;
    let path = out_path(opts, "rate1");
    let mut t = Table::create(&path, &[params_line(&p)], &["t", "total", "reflected", "transmitted", "interference"])?;
    for r in cav.rate_series(&ts) {
        t.row(&[r.t, r.total, r.reflected, r.transmitted, r.interference])?;
    }
    Ok(vec![t.finish()?])
}

pub fn moments(opts: &Options) -> Written {
    let omegas = match opts.omega_m {
        Some(w) => vec![w],
        None => vec![0.5, 0.2, 0.02],
    };
    let series = omegas
        .iter()
        .map(|&w| model(&Options { omega_m: Some(w), ..opts.clone() }, 2.0, 0.01, w, 1))
        .collect::<Result<Vec<_>, _>>()?;
    for p in &series {
        check(opts, p)?;
    }
    // One period of the slowest mirror by default.
    let slowest = omegas.iter().cloned().fold(f64::INFINITY, f64::min);
    let ts = linspace(0.0, positive("t-max", opts.t_max.unwrap_or(TAU / slowest))?, points(opts, 2001)?);
    let path = out_path(opts, "moments");
    let comments: Vec<String> = series.iter().map(params_line).collect();
    let mut t = Table::create(&path, &comments, &["omega_m", "t", "re_b", "im_b", "momentum"])?;
    for p in series {
        let cav = SingleCavity::new(p)?;
        for &time in &ts {
            let b = cav.conditional_mean_b(time)?;
            t.row(&[p.omega_m, time, b.re, b.im, cav.conditional_momentum(time)?])?;
        }
    }
    Ok(vec![t.finish()?])
}

pub fn mz(opts: &Options) -> Written {
    let p = model(opts, 2.0, 0.02, 0.02, 1)?;
    check(opts, &p)?;
    let mz = MachZehnder::new(MZParams::identical(p)?)?;
    let tm = p.mech_period();
    let base = out_path(opts, "mz");
    let header = vec![params_line(&p)];
    let mut written = Vec::new();

    let ts = linspace(0.0, positive("t-max", opts.t_max.unwrap_or(tm))?, points(opts, 257)?);
    let mut t = Table::create(&sibling(&base, "entropy"), &header, &["t", "entropy", "d1_rate"])?;
    for &time in &ts {
        t.row(&[time, mz.entanglement_entropy(time)?, mz.d1_rate(time)])?;
    }
    written.push(t.finish()?);

    let mut t = Table::create(&sibling(&base, "amplitude"), &header, &["t", "re_b1", "im_b1"])?;
    for (time, b) in ts.iter().zip(mz.mean_amplitude_trajectory(&ts)?) {
        t.row(&[*time, b.re, b.im])?;
    }
    written.push(t.finish()?);

    let n = opts.wigner_points.unwrap_or(161);
    if n < 2 {
        return Err(CliError::Usage(format!("--wigner-points must be at least 2, got {n}")));
    }
    let grid = GridSpec::square(6.0, n);
    let state = mz.mz_conditional_state(0.5 * tm).normalized()?;
    let (aligned, alpha) = align_to_imaginary(&state)?;
    let slice = wigner_slice(&aligned, alpha, &grid)?;
    let scan = off_slice_scan(&aligned, alpha, &GridSpec::square(6.0, n.min(61)), &SLICE_OFFSETS, OFF_SLICE_THRESHOLD)?;
    let b1 = state.mean_b(0)?;
    let comments = vec![
        params_line(&p),
        format!("# state: D1 count at t = T_m/2 = {}, normalized", tm / 2.0),
        format!("# frame: both modes rotated so <b1> = i*{alpha}; unrotated <b1> = ({}, {})", b1.re, b1.im),
        format!("# slice: {}", slice.constraint()),
        format!("# min {} at (x1, p1) = ({}, {}); max {}", slice.min, slice.argmin.0, slice.argmin.1, slice.max),
        format!(
            "# off-slice scan: best min {} at offset {}; deeper than the slice: {}",
            scan.best_min, scan.best_offset, scan.deeper_off_slice
        ),
    ];
    let mut t = Table::create(&sibling(&base, "wigner"), &comments, &["x1", "p1", "w"])?;
    for (i, &x) in slice.x_axis.iter().enumerate() {
        for (j, &pp) in slice.p_axis.iter().enumerate() {
            t.row(&[x, pp, slice.values[(i, j)]])?;
        }
    }
    written.push(t.finish()?);

    let dmax = positive("delta-max", opts.delta_max.unwrap_or(0.3))?;
    if dmax >= 1.0 {
        return Err(CliError::Usage(format!("--delta-max must be below 1, got {dmax}")));
    }
    let half = 30;
    let deltas: Vec<f64> = (-half..=half).map(|k| dmax * k as f64 / half as f64).collect();
    let fixed_ratio = mz.fidelity_vs_detuning(&deltas, CouplingPolicy::FixedRatio)?;
    let fixed_coupling = mz.fidelity_vs_detuning(&deltas, CouplingPolicy::FixedCoupling)?;
    let mut t = Table::create(
        &sibling(&base, "fidelity"),
        &[params_line(&p), "# fidelity: second arm at omega_m2 = (1 + delta) omega_m1, both at t = T_m/2".into()],
        &["delta", "fidelity", "fidelity_fixed_g0"],
    )?;
    for ((d, f), g) in deltas.iter().zip(&fixed_ratio).zip(&fixed_coupling) {
        t.row(&[*d, *f, *g])?;
    }
    written.push(t.finish()?);
    Ok(written)
}

pub fn rate2(opts: &Options) -> Written {
    let p = model(opts, 2.0, 0.05, 0.02, 2)?;
    check(opts, &p)?;
    let tm = p.mech_period();
    let t1 = opts.t1.unwrap_or(0.25 * tm);
    if !(t1 >= 0.0 && t1.is_finite()) {
        return Err(CliError::Usage(format!("--t1 must be >= 0, got {t1}")));
    }
    let n = points(opts, 101)?;
    let taus = linspace(0.0, positive("tau-max", opts.tau_max.unwrap_or(10.0))?, n);
    let tds = linspace(0.0, positive("td-max", opts.td_max.unwrap_or(2.0 * tm))?, n);
    let grid = TwoPhoton::new(p)?.rate_2_grid(t1, &taus, &tds, opts.normalize_r2)?;
    let path = out_path(opts, "rate2");
    let comments = vec![params_line(&p), format!("# t1 = {t1}; normalized by R1(t1): {}", opts.normalize_r2)];
    let mut t = Table::create(&path, &comments, &["tau", "td", "total", "reflected", "transmitted", "interference"])?;
    for (i, &tau) in taus.iter().enumerate() {
        for (j, &td) in tds.iter().enumerate() {
            t.row(&[
                tau,
                td,
                grid.total[(i, j)],
                grid.reflected[(i, j)],
                grid.transmitted[(i, j)],
                grid.interference[(i, j)],
            ])?;
        }
    }
    Ok(vec![t.finish()?])
}

pub fn validate(opts: &Options) -> Written {
    let p = model(opts, 2.0, 0.02, 0.02, 1)?;
    let report = validate::run(&ValidationConfig { fault: opts.inject_fault, ..ValidationConfig::new(p) })?;
    println!("{}", params_line(&p));
    println!("{report}");
    if report.passed() {
        Ok(Vec::new())
    } else {
        Err(CliError::ValidationFailed)
    }
}
