use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use vortexlab::constants::SI;
use vortexlab::device::{derive_scales, BUCKLING_RATIO};
use vortexlab::energetics::{gamma_from_geometry, gibbs_pair, pair_coupling, Landscape, PinningSite, VortexPair};
use vortexlab::fitting::{
    fit_exponential, fit_hyperbola, fit_joint_aqrm, fit_rabi_linear, fit_ramsey_beat, FitResult, JointInit,
    SpectrumDataset,
};
use vortexlab::jumps::{
    dwell_statistics, effective_temperature, iq_cluster, latching_filter, simulate_trajectory, JumpError,
    ReadoutModel, TelegraphParams,
};
use vortexlab::rabi::{
    chi_perturbative, dispersive_shift, sweep_field, HilbertTruncation, QrmParams, DEFAULT_N_FOCK,
};
use vortexlab::tunneling::{
    find_sweet_spot, solve_at_field, spectrum_vs_field, two_level_reduction, DoubleWell, Grid, TunnelModel,
};
use vortexlab::{DerivedScales, DeviceModel};

use crate::config::{RunConfig, Section};
use crate::input;
use crate::output::{num, OutputDir};
use crate::{CliError, Command, Format};

const GHZ: f64 = 1e9;
const MHZ: f64 = 1e6;
const UT: f64 = 1e-6;
const NM: f64 = 1e-9;
const US: f64 = 1e-6;

fn set(target: &mut f64, s: &Section, key: &str) {
    if let Some(v) = s.get(key) {
        *target = v;
    }
}

fn device(cfg: &RunConfig) -> Result<(DeviceModel, DerivedScales), CliError> {
    let mut d = DeviceModel::reference();
    let mut eps0 = None;
    if let Some(s) = cfg.section("device") {
        set(&mut d.w, s, "w_um");
        set(&mut d.t, s, "t_nm");
        set(&mut d.length, s, "length_um");
        set(&mut d.xi, s, "xi_nm");
        set(&mut d.lambda_l, s, "lambda_L_um");
        set(&mut d.f_r, s, "f_r_GHz");
        set(&mut d.z_r, s, "Z_r_ohm");
        eps0 = s.get("eps0_GHz");
    }
    let mut scales = derive_scales(&d, &SI)?;
    if let Some(f) = eps0 {
        scales = scales.with_eps0(SI.h * f)?;
    }
    Ok((d, scales))
}

fn qrm(cfg: &RunConfig) -> Result<(QrmParams, HilbertTruncation), CliError> {
    let mut p = QrmParams::reference_aqrm();
    let mut n = DEFAULT_N_FOCK;
    if let Some(s) = cfg.section("qrm") {
        set(&mut p.f_r, s, "f_r_GHz");
        set(&mut p.g, s, "g_MHz");
        set(&mut p.gamma, s, "gamma_GHz_per_mT");
        set(&mut p.b0, s, "B0_uT");
        set(&mut p.f_q0, s, "f_q0_GHz");
        set(&mut p.theta, s, "theta_deg");
        set(&mut p.phi, s, "phi_deg");
        if let Some(k) = s.count("n_fock")? {
            n = k;
        }
    }
    p.validate()?;
    Ok((p, HilbertTruncation::new(n)?))
}

fn fields(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let s = cfg
        .section("sweep")
        .ok_or_else(|| CliError::Usage("this subcommand needs a [sweep] section".into()))?;
    if let Some(list) = s.list("B_list_uT") {
        if s.get("B_min_uT").is_some() || s.get("points").is_some() {
            return Err(CliError::Config("[sweep] takes either B_list_uT or a range, not both".into()));
        }
        if list.is_empty() {
            return Err(CliError::Usage("empty B sweep: B_list_uT has no values".into()));
        }
        return Ok(list.to_vec());
    }
    let points = s.count("points")?.unwrap_or(0);
    if points == 0 {
        return Err(CliError::Usage("empty B sweep: set points >= 1 or give B_list_uT".into()));
    }
    let lo = s.require("B_min_uT")?;
    if points == 1 {
        return Ok(vec![lo]);
    }
    let hi = s.require("B_max_uT")?;
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

fn sites(cfg: &RunConfig) -> Result<Vec<PinningSite>, CliError> {
    cfg.sections_named("pinning")
        .map(|s| {
            Ok(PinningSite::new(
                s.require("x_nm")?,
                s.get("y_nm").unwrap_or(0.0),
                SI.h * s.require("V_GHz")?,
                s.require("sigma_nm")?,
            ))
        })
        .collect()
}

fn fit_rows(fit: &FitResult) -> Vec<Vec<String>> {
    fit.params
        .iter()
        .map(|(k, v)| vec![k.clone(), num(*v), num(fit.std_errors[k])])
        .collect()
}

/// Writes a fit as the full JSON record or as a `name,value,std_error` table.
fn emit_fit<T: Serialize>(out: &mut OutputDir, format: Format, value: &T, fit: &FitResult) -> Result<(), CliError> {
    match format {
        Format::Json => out.write_json("fit.json", value),
        Format::Csv => out.write_csv("fit.csv", &["name", "value", "std_error"], &fit_rows(fit)),
    }
}

#[derive(Serialize)]
struct PointWarning {
    #[serde(rename = "B_uT")]
    b_ut: f64,
    message: String,
}

pub(crate) fn dispatch(
    cmd: &Command,
    cfg: &RunConfig,
    seed: u64,
    format: Format,
    out: &mut OutputDir,
) -> Result<(), CliError> {
    match cmd {
        Command::Scales => scales(cfg, out),
        Command::Spectrum => spectrum(cfg, out),
        Command::Chi => chi(cfg, out),
        Command::FitSpectrum { input, joint, n_fock } => {
            let data = input::read_spectrum(input)?;
            if *joint {
                let fit = fit_joint_aqrm(&data, JointInit::default(), HilbertTruncation::new(*n_fock)?)?;
                emit_fit(out, format, &fit, &fit.fit)
            } else {
                let fit = fit_hyperbola(&data.qubit_points)?;
                emit_fit(out, format, &fit, &fit.fit)
            }
        }
        Command::FitDecay { input } | Command::FitEcho { input } => {
            let fit = fit_exponential(&input::read_trace(input)?)?;
            emit_fit(out, format, &fit, &fit.fit)
        }
        Command::FitRamsey { input } => {
            let fit = fit_ramsey_beat(&input::read_trace(input)?)?;
            emit_fit(out, format, &fit, &fit.fit)
        }
        Command::FitRabi { input } => {
            let fit = fit_rabi_linear(&input::read_rabi(input)?)?;
            emit_fit(out, format, &fit, &fit.fit)
        }
        Command::Landscape {
            field_ut,
            nx,
            ny,
            y_min_nm,
            y_max_nm,
        } => landscape(cfg, out, *field_ut * UT, (*nx, *ny), (*y_min_nm * NM, *y_max_nm * NM)),
        Command::GammaMap {
            x_points,
            delta_points,
            delta_min_nm,
            delta_max_nm,
        } => gamma_map(cfg, out, *x_points, *delta_points, (*delta_min_nm * NM, *delta_max_nm * NM)),
        Command::Pair => pair(cfg, out, format),
        Command::Tunnel => tunnel(cfg, out, format),
        Command::SynthJumps => synth_jumps(cfg, out, seed),
        Command::AnalyzeJumps {
            input,
            f_q_ghz,
            n_sigma,
        } => analyze_jumps(cfg, out, format, input, *f_q_ghz, *n_sigma),
        Command::BatchFit { input, joint, n_fock } => batch_fit(out, format, input, *joint, *n_fock),
    }
}

fn scales(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (d, s) = device(cfg)?;
    let row = vec![
        num(d.w / 1e-6),
        num(d.xi / NM),
        num(s.pearl_length / 1e-6),
        num(s.eps0 / SI.h / GHZ),
        s.eps0_overridden.to_string(),
        num(s.phi_s),
        num(s.b_s / UT),
        num(BUCKLING_RATIO * s.phi_s),
        num(BUCKLING_RATIO * s.b_s / UT),
    ];
    out.write_csv(
        "scales.csv",
        &[
            "w_um",
            "xi_nm",
            "pearl_length_um",
            "eps0_GHz",
            "eps0_overridden",
            "phi_S",
            "B_S_uT",
            "phi_buckling",
            "B_buckling_uT",
        ],
        &[row],
    )
}

fn spectrum(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (p, trunc) = qrm(cfg)?;
    let bs = fields(cfg)?;
    let results = sweep_field(&p, &bs, trunc);
    let mut rows = Vec::with_capacity(bs.len());
    let mut warnings = Vec::new();
    for (b, r) in bs.iter().zip(&results) {
        match r {
            Ok(s) => rows.push(vec![
                num(b / UT),
                num(s.f_q_dressed / GHZ),
                num(s.f_r_g / GHZ),
                num(s.f_r_e / GHZ),
                num(s.chi / MHZ),
            ]),
            Err(e) => {
                rows.push(vec![num(b / UT), "NaN".into(), "NaN".into(), "NaN".into(), "NaN".into()]);
                warnings.push(PointWarning {
                    b_ut: b / UT,
                    message: e.to_string(),
                });
            }
        }
    }
    if warnings.len() == bs.len() {
        return Err(CliError::Numerical {
            kind: "rabi",
            message: format!("every field point failed; first: {}", warnings[0].message),
        });
    }
    out.write_csv("spectrum.csv", &["B_uT", "f_q_GHz", "f_r_g_GHz", "f_r_e_GHz", "chi_MHz"], &rows)?;
    if !warnings.is_empty() {
        out.write_json("warnings.json", &warnings)?;
    }
    Ok(())
}

fn chi(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (p, trunc) = qrm(cfg)?;
    let bs = fields(cfg)?;
    let results: Vec<_> = bs
        .par_iter()
        .map(|&b| (dispersive_shift(&p, b, trunc), chi_perturbative(&p, b)))
        .collect();
    let mut rows = Vec::with_capacity(bs.len());
    let mut warnings = Vec::new();
    for (b, (exact, pt)) in bs.iter().zip(results) {
        let exact = match exact {
            Ok(v) => num(v / MHZ),
            Err(e) => {
                warnings.push(PointWarning {
                    b_ut: b / UT,
                    message: e.to_string(),
                });
                "NaN".into()
            }
        };
        let pt = pt.map(|v| num(v / MHZ)).unwrap_or_else(|_| "NaN".into());
        rows.push(vec![num(b / UT), exact, pt]);
    }
    if warnings.len() == bs.len() {
        return Err(CliError::Numerical {
            kind: "rabi",
            message: format!("every field point failed; first: {}", warnings[0].message),
        });
    }
    out.write_csv("chi.csv", &["B_uT", "chi_MHz", "chi_PT_MHz"], &rows)?;
    if !warnings.is_empty() {
        out.write_json("warnings.json", &warnings)?;
    }
    Ok(())
}

fn landscape(
    cfg: &RunConfig,
    out: &mut OutputDir,
    b: f64,
    (nx, ny): (usize, usize),
    (y_min, y_max): (f64, f64),
) -> Result<(), CliError> {
    if nx == 0 || ny == 0 || !(y_max >= y_min) {
        return Err(CliError::Usage("landscape needs nx, ny >= 1 and y-max >= y-min".into()));
    }
    let (d, s) = device(cfg)?;
    let land = Landscape::new(d, s, sites(cfg)?, 0.0)?;
    let xs: Vec<f64> = (0..nx).map(|i| d.w * (i as f64 + 0.5) / nx as f64).collect();
    let ys: Vec<f64> = if ny == 1 {
        vec![y_min]
    } else {
        (0..ny).map(|j| y_min + (y_max - y_min) * j as f64 / (ny - 1) as f64).collect()
    };
    let v = land.sample(&xs, &ys, b)?;
    let rows: Vec<Vec<String>> = xs
        .iter()
        .flat_map(|x| ys.iter().map(move |y| (*x, *y)))
        .zip(&v)
        .map(|((x, y), e)| vec![num(x / NM), num(y / NM), num(e / s.eps0), num(e / SI.h / GHZ)])
        .collect();
    out.write_csv("landscape.csv", &["x_nm", "y_nm", "V_over_eps0", "V_GHz"], &rows)
}

fn gamma_map(
    cfg: &RunConfig,
    out: &mut OutputDir,
    x_points: usize,
    delta_points: usize,
    (d_min, d_max): (f64, f64),
) -> Result<(), CliError> {
    if x_points == 0 || delta_points == 0 || !(d_max >= d_min && d_min > 0.0) {
        return Err(CliError::Usage("gamma-map needs positive point counts and 0 < delta-min <= delta-max".into()));
    }
    let (d, s) = device(cfg)?;
    let deltas: Vec<f64> = if delta_points == 1 {
        vec![d_min]
    } else {
        (0..delta_points)
            .map(|j| d_min + (d_max - d_min) * j as f64 / (delta_points - 1) as f64)
            .collect()
    };
    let rows: Vec<Vec<String>> = (0..x_points)
        .into_par_iter()
        .map(|i| {
            let x_bar = d.w * (i as f64 + 0.5) / x_points as f64;
            deltas
                .iter()
                .filter_map(|&delta| {
                    gamma_from_geometry(delta, x_bar, &s, &d)
                        .ok()
                        .map(|g| vec![num(x_bar / 1e-6), num(delta / NM), num(g / 1e12)])
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    out.write_csv("gamma_map.csv", &["x_bar_um", "delta_LR_nm", "gamma_GHz_per_mT"], &rows)
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct PairReport {
    #[serde(rename = "G2_over_eps0")]
    g2_over_eps0: f64,
    #[serde(rename = "G2_GHz")]
    g2_ghz: f64,
    /// `∂²G2/∂R1_a ∂R2_b`, rows a ∈ {x, y} (J/m²)
    hessian_J_per_m2: [[f64; 2]; 2],
    /// Spin couplings, rows and columns ordered (x, z)
    couplings_MHz: [[f64; 2]; 2],
    energy_scale_MHz: f64,
}

fn pair(cfg: &RunConfig, out: &mut OutputDir, format: Format) -> Result<(), CliError> {
    let (d, s) = device(cfg)?;
    let sec = cfg
        .section("pair")
        .ok_or_else(|| CliError::Usage("pair needs a [pair] section".into()))?;
    let r1 = (sec.require("x1_nm")?, sec.get("y1_nm").unwrap_or(0.0));
    let r2 = (sec.require("x2_nm")?, sec.require("y2_nm")?);
    let mut vp = VortexPair::new(r1, r2, sec.require("delta_LR_nm")?);
    vp.alpha = [[sec.get("alpha").unwrap_or(1.0); 2]; 2];
    vp.beta = [[sec.get("beta").unwrap_or(1.0); 2]; 2];
    let g2 = gibbs_pair(r1, r2, &s, &d)?;
    let c = pair_coupling(&vp, &s, &d)?;
    let to_mhz = |j: f64| j / SI.h / MHZ;
    let report = PairReport {
        g2_over_eps0: g2 / s.eps0,
        g2_ghz: g2 / SI.h / GHZ,
        hessian_J_per_m2: c.hessian,
        couplings_MHz: c.couplings.map(|r| r.map(to_mhz)),
        energy_scale_MHz: to_mhz(c.energy_scale),
    };
    match format {
        Format::Json => out.write_json("pair.json", &report),
        Format::Csv => {
            let axes = ["x", "z"];
            let rows: Vec<Vec<String>> = (0..2)
                .flat_map(|a| (0..2).map(move |b| (a, b)))
                .map(|(a, b)| vec![axes[a].to_string(), axes[b].to_string(), num(report.couplings_MHz[a][b])])
                .collect();
            out.write_csv("pair.csv", &["spin1", "spin2", "J_MHz"], &rows)
        }
    }
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct TunnelReport {
    sweet_spot_uT: f64,
    f_q_min_GHz: f64,
    levels_GHz: Vec<f64>,
    Delta_GHz: Option<f64>,
    asymmetry_slope_GHz_per_mT: Option<f64>,
    reduction_error: Option<String>,
}

fn tunnel(cfg: &RunConfig, out: &mut OutputDir, format: Format) -> Result<(), CliError> {
    let (d, s) = device(cfg)?;
    let sites = sites(cfg)?;
    if sites.len() != 2 {
        return Err(CliError::Config(format!(
            "tunnel needs exactly two [pinning] sites, found {}",
            sites.len()
        )));
    }
    let t = cfg
        .section("tunneling")
        .ok_or_else(|| CliError::Usage("tunnel needs a [tunneling] section".into()))?;
    let y_zpf = t.require("y_zpf_nm")?;
    let points = t.count("grid_points")?.unwrap_or(512);
    let k = t.count("k_levels")?.unwrap_or(3).max(3);
    let lo_default = sites.iter().map(|p| p.x - 6.0 * p.sigma).fold(f64::INFINITY, f64::min);
    let hi_default = sites.iter().map(|p| p.x + 6.0 * p.sigma).fold(f64::NEG_INFINITY, f64::max);
    let x_min = t.get("x_min_nm").unwrap_or(lo_default);
    let x_max = t.get("x_max_nm").unwrap_or(hi_default);
    let y = 0.5 * (sites[0].y + sites[1].y);
    let grid = Grid::line(x_min, x_max, points, y)?;
    let model = TunnelModel::from_pinning(&sites[0], y_zpf)?;
    let land = Landscape::new(d, s, sites.clone(), 0.0)?;

    let bs = fields(cfg)?;
    let spec = spectrum_vs_field(&land, &grid, &model, &bs)?;
    let to_ghz = |e: f64| e / SI.h / GHZ;
    let rows: Vec<Vec<String>> = spec
        .points
        .iter()
        .map(|p| vec![num(p.b / UT), num(p.f_q() / GHZ), num(to_ghz(p.e0)), num(to_ghz(p.e1))])
        .collect();
    out.write_csv("tunnel.csv", &["B_uT", "f_q_GHz", "E0_GHz", "E1_GHz"], &rows)?;

    // refine between the sweep neighbours of the lowest point
    let mut sorted = bs.clone();
    sorted.sort_by(f64::total_cmp);
    let i = sorted.iter().position(|b| *b == spec.sweet_spot.b).unwrap_or(0);
    let at_sweet = if i > 0 && i + 1 < sorted.len() {
        let (lo, hi) = (sorted[i - 1], sorted[i + 1]);
        find_sweet_spot(&land, &grid, &model, lo, hi, (hi - lo) * 1e-6)?
    } else {
        solve_at_field(&land, &grid, &model, spec.sweet_spot.b, 3)?
    };
    let b_sweet = at_sweet.field.unwrap_or(spec.sweet_spot.b);
    let levels = solve_at_field(&land, &grid, &model, b_sweet, k)?;
    let reduction = DoubleWell::from_sites(&sites).and_then(|w| two_level_reduction(&levels, &w, &land));
    let report = TunnelReport {
        sweet_spot_uT: b_sweet / UT,
        f_q_min_GHz: at_sweet.splitting() / SI.h / GHZ,
        levels_GHz: levels.energies.iter().map(|e| to_ghz(*e)).collect(),
        Delta_GHz: reduction.as_ref().ok().map(|r| to_ghz(r.delta)),
        asymmetry_slope_GHz_per_mT: reduction.as_ref().ok().map(|r| r.slope / SI.h / 1e12),
        reduction_error: reduction.err().map(|e| e.to_string()),
    };
    match format {
        Format::Json => out.write_json("tunnel.json", &report),
        Format::Csv => out.write_csv(
            "tunnel_summary.csv",
            &["sweet_spot_uT", "f_q_min_GHz", "Delta_GHz"],
            &[vec![
                num(report.sweet_spot_uT),
                num(report.f_q_min_GHz),
                report.Delta_GHz.map(num).unwrap_or_else(|| "NaN".into()),
            ]],
        ),
    }
}

fn jump_models(cfg: &RunConfig) -> Result<(TelegraphParams, ReadoutModel, f64), CliError> {
    let s = cfg.section("jumps").cloned().unwrap_or_default();
    let tg = TelegraphParams::new(
        s.get("T_up_us").unwrap_or(570.0 * US),
        s.get("T_down_us").unwrap_or(135.0 * US),
    )?;
    let ro = ReadoutModel::symmetric(
        s.get("separation_sigma").unwrap_or(6.0),
        s.get("sigma_cloud").unwrap_or(1.0),
        s.get("tau_m_us").unwrap_or(2.0 * US),
        s.get("spacing_us").unwrap_or(5.0 * US),
    )?;
    Ok((tg, ro, s.get("duration_s").unwrap_or(2.5)))
}

fn synth_jumps(cfg: &RunConfig, out: &mut OutputDir, seed: u64) -> Result<(), CliError> {
    let (tg, ro, duration) = jump_models(cfg)?;
    let tr = simulate_trajectory(&tg, &ro, duration, seed)?;
    let states = tr.true_states.unwrap_or_default();
    let rows: Vec<Vec<String>> = tr
        .times
        .iter()
        .zip(&tr.iq)
        .zip(&states)
        .map(|((t, z), s)| vec![num(t / US), num(z.re), num(z.im), u8::from(*s).to_string()])
        .collect();
    out.write_csv("trajectory.csv", &["t_us", "I", "Q", "true_state"], &rows)
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct JumpReport {
    T_up_us: f64,
    T_up_err_us: f64,
    T_down_us: f64,
    T_down_err_us: f64,
    T1_us: f64,
    P_e: f64,
    P_e_assigned: f64,
    T_eff_mK: Option<f64>,
    population_inversion: bool,
    shots: usize,
    dwells_ground: usize,
    dwells_excited: usize,
    center_g: [f64; 2],
    center_e: [f64; 2],
    sigma_cloud: f64,
}

fn analyze_jumps(
    cfg: &RunConfig,
    out: &mut OutputDir,
    format: Format,
    path: &Path,
    f_q_ghz: Option<f64>,
    n_sigma: f64,
) -> Result<(), CliError> {
    let f_q = match f_q_ghz {
        Some(f) => f * GHZ,
        None => qrm(cfg)?.0.f_q0,
    };
    let (spacing, points) = input::read_trajectory(path)?;
    let clusters = iq_cluster(&points, None)?;
    let ro = ReadoutModel {
        center_g: clusters.center_g,
        center_e: clusters.center_e,
        sigma_cloud: clusters.sigma_cloud,
        tau_m: 0.0,
        spacing,
    };
    let states = latching_filter(&points, &ro, n_sigma)?;
    let stats = dwell_statistics(&states, spacing)?;
    let (t_eff, inversion) = match effective_temperature(clusters.p_e, f_q, &SI) {
        Ok(t) => (Some(t / 1e-3), false),
        Err(JumpError::PopulationInversion { .. }) => (None, true),
        Err(e) => return Err(e.into()),
    };
    let report = JumpReport {
        T_up_us: stats.t_up.mean / US,
        T_up_err_us: stats.t_up.std_error / US,
        T_down_us: stats.t_down.mean / US,
        T_down_err_us: stats.t_down.std_error / US,
        T1_us: stats.t1 / US,
        P_e: clusters.p_e,
        P_e_assigned: stats.p_e,
        T_eff_mK: t_eff,
        population_inversion: inversion,
        shots: points.len(),
        dwells_ground: stats.t_up.count,
        dwells_excited: stats.t_down.count,
        center_g: [clusters.center_g.re, clusters.center_g.im],
        center_e: [clusters.center_e.re, clusters.center_e.im],
        sigma_cloud: clusters.sigma_cloud,
    };
    match format {
        Format::Json => out.write_json("jumps.json", &report),
        Format::Csv => out.write_csv(
            "jumps.csv",
            &["T_up_us", "T_down_us", "T1_us", "P_e", "T_eff_mK"],
            &[vec![
                num(report.T_up_us),
                num(report.T_down_us),
                num(report.T1_us),
                num(report.P_e),
                report.T_eff_mK.map(num).unwrap_or_else(|| "NaN".into()),
            ]],
        ),
    }
}

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
struct BatchRow {
    dataset: String,
    converged: bool,
    f_q0_GHz: Option<f64>,
    B0_uT: Option<f64>,
    gamma_GHz_per_mT: Option<f64>,
    g_MHz: Option<f64>,
    error: Option<String>,
}

fn fit_dataset(data: &SpectrumDataset, joint: bool, n_fock: usize) -> Result<BatchRow, CliError> {
    if joint && !data.resonator_points.is_empty() {
        let f = fit_joint_aqrm(data, JointInit::default(), HilbertTruncation::new(n_fock)?)?;
        Ok(BatchRow {
            dataset: String::new(),
            converged: f.fit.converged,
            f_q0_GHz: Some(f.f_q0 / GHZ),
            B0_uT: Some(f.b0 / UT),
            gamma_GHz_per_mT: Some(f.gamma / 1e12),
            g_MHz: Some(f.g / MHZ),
            error: None,
        })
    } else {
        let f = fit_hyperbola(&data.qubit_points)?;
        Ok(BatchRow {
            dataset: String::new(),
            converged: f.fit.converged,
            f_q0_GHz: Some(f.f_q0 / GHZ),
            B0_uT: Some(f.b0 / UT),
            gamma_GHz_per_mT: Some(f.gamma / 1e12),
            g_MHz: None,
            error: None,
        })
    }
}

fn batch_fit(out: &mut OutputDir, format: Format, dir: &Path, joint: bool, n_fock: usize) -> Result<(), CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Io(format!("cannot read {}: {e}", dir.display())))?;
    let mut files: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!("no .csv datasets in {}", dir.display())));
    }
    let rows: Vec<BatchRow> = files
        .par_iter()
        .map(|p| {
            let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let row = input::read_spectrum(p).and_then(|d| fit_dataset(&d, joint, n_fock));
            match row {
                Ok(r) => BatchRow { dataset: id, ..r },
                Err(e) => BatchRow {
                    dataset: id,
                    converged: false,
                    f_q0_GHz: None,
                    B0_uT: None,
                    gamma_GHz_per_mT: None,
                    g_MHz: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.dataset.clone(),
                r.converged.to_string(),
                opt(r.f_q0_GHz),
                opt(r.B0_uT),
                opt(r.gamma_GHz_per_mT),
                opt(r.g_MHz),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    out.write_csv(
        "batch.csv",
        &["dataset", "converged", "f_q0_GHz", "B0_uT", "gamma_GHz_per_mT", "g_MHz", "error"],
        &table,
    )?;
    if format == Format::Json {
        out.write_json("batch.json", &rows)?;
    }
    Ok(())
}
