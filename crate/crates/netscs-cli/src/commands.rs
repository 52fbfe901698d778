//! Subcommand implementations.

use netscs_core::acr::{self, AcrSeries};
use netscs_core::coeffs::{self, CoeffSet, Method, ParticleOptions};
use netscs_core::dist::{self, Grid};
use netscs_core::platoon::{run_platoon, PlatoonResult};
use netscs_core::sim;

use crate::config::{CliError, RunConfig};
use crate::output::{emit, fmt_f, Table};
use crate::parallel;

fn default_controller(xhat: f64, _k: usize) -> f64 {
    -xhat
}

fn particle_options(cfg: &RunConfig, open_loop: bool) -> ParticleOptions {
    ParticleOptions {
        particles: cfg.particles,
        bandwidth: cfg.bandwidth,
        open_loop,
        grid: cfg.grid.clone(),
    }
}

/// Coefficients for every method except Monte Carlo.
fn coefficients_for(cfg: &RunConfig) -> Result<CoeffSet, CliError> {
    let set = match cfg.method {
        Method::Quadrature => coeffs::quadrature_coefficients(&cfg.system, &cfg.grid)?,
        Method::Particle => {
            coeffs::particle_coefficients(&cfg.system, &particle_options(cfg, false), cfg.seed)?
        }
        Method::OpenLoop => coeffs::open_loop_coefficients(&cfg.system)?,
        Method::OpenLoopParticle => {
            coeffs::particle_coefficients(&cfg.system, &particle_options(cfg, true), cfg.seed)?
        }
        Method::MonteCarlo => unreachable!("monte-carlo is handled per command"),
    };
    Ok(set)
}

fn run_tag(cfg: &RunConfig) -> String {
    format!(
        "{} horizon={} trials={} particles={} bandwidth={}",
        cfg.tag(),
        cfg.horizon,
        cfg.trials,
        cfg.particles,
        cfg.bandwidth
    )
}

pub fn cmd_coeffs(cfg: &RunConfig) -> Result<(), CliError> {
    let (pbar, p, low_confidence): (Vec<f64>, Vec<f64>, Vec<usize>) =
        if cfg.method == Method::MonteCarlo {
            let summary = parallel::monte_carlo(
                &cfg.system,
                default_controller,
                cfg.horizon,
                cfg.trials,
                cfg.seed,
            );
            let ests = sim::conditional_frequencies(&summary);
            let pbar: Vec<f64> = ests.iter().map(|e| e.value).collect();
            let p = coeffs::stack(&pbar)?;
            let low = ests
                .iter()
                .enumerate()
                .filter(|(_, e)| e.low_confidence)
                .map(|(i, _)| i + 1);
            (pbar, p, low.collect())
        } else {
            let set = coefficients_for(cfg)?;
            (set.pbar().to_vec(), set.p().to_vec(), Vec::new())
        };

    let mut table = Table::new(&run_tag(cfg), &["n", "pbar", "p"]);
    for n in 0..pbar.len() {
        table.row(&[(n + 1).to_string(), fmt_f(pbar[n]), fmt_f(p[n])]);
    }
    let results = serde_json::json!({
        "method": cfg.method.name(),
        "pbar": pbar,
        "p": p,
    });
    let diagnostics = serde_json::json!({ "low_confidence_depths": low_confidence });
    emit(
        cfg,
        vec![(String::new(), table.finish())],
        results,
        diagnostics,
    )
}

pub fn cmd_acr(cfg: &RunConfig) -> Result<(), CliError> {
    struct AcrOut {
        values: Vec<f64>,
        stationary: f64,
        jury: Option<acr::JuryReport>,
        clamp_excess: f64,
    }
    let out = if cfg.method == Method::MonteCarlo {
        let summary = parallel::monte_carlo(
            &cfg.system,
            default_controller,
            cfg.horizon,
            cfg.trials,
            cfg.seed,
        );
        AcrOut {
            values: summary.acr.values().to_vec(),
            stationary: summary.acr.tail_average(),
            jury: None,
            clamp_excess: 0.0,
        }
    } else {
        let set = coefficients_for(cfg)?;
        let series = acr::recursive_acr(&set, cfg.horizon);
        let jury = acr::jury_stable(&acr::characteristic_polynomial(&set))?;
        AcrOut {
            values: series.values().to_vec(),
            stationary: series.stationary().expect("coefficient methods define it"),
            jury: Some(jury),
            clamp_excess: series.clamp_excess(),
        }
    };

    let mut table = Table::new(&run_tag(cfg), &["k", "acr"]);
    for (k, v) in out.values.iter().enumerate() {
        table.row(&[k.to_string(), fmt_f(*v)]);
    }
    table.row(&["stationary".into(), fmt_f(out.stationary)]);
    let verdict = match &out.jury {
        Some(report) => report.stable.to_string(),
        None => "na".into(),
    };
    table.row(&["jury_stable".into(), verdict.clone()]);

    let results = serde_json::json!({
        "method": cfg.method.name(),
        "acr": out.values,
        "stationary": out.stationary,
        "jury_stable": out.jury.as_ref().map(|r| r.stable),
    });
    let diagnostics = serde_json::json!({
        "clamp_excess": out.clamp_excess,
        "jury_failed_rule": out.jury.as_ref().and_then(|r| r.failed_rule),
        "marginal": out.jury.as_ref().is_some_and(|r| !r.stable),
    });
    emit(
        cfg,
        vec![(String::new(), table.finish())],
        results,
        diagnostics,
    )
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = &cfg.system;
    let gt = parallel::monte_carlo(spec, default_controller, cfg.horizon, cfg.trials, cfg.seed);
    let quad_set = coeffs::quadrature_coefficients(spec, &cfg.grid)?;
    let part_set = coeffs::particle_coefficients(spec, &particle_options(cfg, false), cfg.seed)?;
    let open_set = coeffs::open_loop_coefficients(spec)?;
    let cnm_set = coeffs::particle_coefficients(spec, &particle_options(cfg, true), cfg.seed)?;
    let quad = acr::recursive_acr(&quad_set, cfg.horizon);
    let part = acr::recursive_acr(&part_set, cfg.horizon);
    let open = acr::recursive_acr(&open_set, cfg.horizon);
    let cnm = acr::recursive_acr(&cnm_set, cfg.horizon);

    let mut acr_table = Table::new(
        &run_tag(cfg),
        &[
            "k",
            "gt",
            "quadrature",
            "particle",
            "open_loop",
            "open_loop_particle",
        ],
    );
    for k in 0..=cfg.horizon {
        acr_table.row(&[
            k.to_string(),
            fmt_f(gt.acr.values()[k]),
            fmt_f(quad.values()[k]),
            fmt_f(part.values()[k]),
            fmt_f(open.values()[k]),
            fmt_f(cnm.values()[k]),
        ]);
    }

    // moment comparison and density dumps up to five steps after a reset
    let k_hi = spec.t_max.min(5);
    let pdfs = coeffs::closed_loop_error_pdfs(spec, &cfg.grid, k_hi)?;
    let mut moments_table = Table::new(
        &run_tag(cfg),
        &["k", "mean_closed", "mean_open", "var_closed", "var_open"],
    );
    let mut moment_rows = Vec::new();
    for k in 1..=k_hi {
        let m = dist::moments(&pdfs[k - 1]);
        let var_open = spec.open_loop_variance(k);
        moments_table.row(&[
            k.to_string(),
            fmt_f(m.mean),
            fmt_f(0.0),
            fmt_f(m.variance),
            fmt_f(var_open),
        ]);
        moment_rows.push(serde_json::json!({
            "k": k,
            "mean_closed": m.mean,
            "mean_open": 0.0,
            "var_closed": m.variance,
            "var_open": var_open,
        }));
    }

    let mut parts = vec![
        (String::new(), acr_table.finish()),
        ("moments".to_string(), moments_table.finish()),
    ];
    let mut pdf_json = serde_json::Map::new();
    let mut max_drift: f64 = 0.0;
    for k in 2..=k_hi {
        let closed = &pdfs[k - 1];
        max_drift = max_drift.max(closed.normalization_drift().abs());
        let sigma_k = spec.open_loop_variance(k).sqrt();
        let span = cfg.grid.support_factor * sigma_k;
        let grid = Grid::aligned(span, spec.eta, &cfg.grid)?;
        let open_pdf = dist::make_gaussian(sigma_k, &grid)?;
        for (name, pdf) in [("closed", closed), ("open", &open_pdf)] {
            let mut t = Table::new("", &["z", "density"]);
            let mut zs = Vec::with_capacity(pdf.len());
            let mut ds = Vec::with_capacity(pdf.len());
            for i in 0..pdf.len() {
                t.row(&[fmt_f(pdf.node(i)), fmt_f(pdf.values()[i])]);
                zs.push(pdf.node(i));
                ds.push(pdf.values()[i]);
            }
            parts.push((format!("pdf_{name}_k{k}"), t.finish()));
            pdf_json.insert(
                format!("{name}_k{k}"),
                serde_json::json!({ "z": zs, "density": ds }),
            );
        }
    }

    let series_values = |s: &AcrSeries| s.values().to_vec();
    let results = serde_json::json!({
        "acr": {
            "gt": gt.acr.values(),
            "quadrature": series_values(&quad),
            "particle": series_values(&part),
            "open_loop": series_values(&open),
            "open_loop_particle": series_values(&cnm),
        },
        "stationary": {
            "gt_tail": gt.acr.tail_average(),
            "quadrature": quad.stationary(),
            "particle": part.stationary(),
            "open_loop": open.stationary(),
            "open_loop_particle": cnm.stationary(),
        },
        "moments": moment_rows,
        "pdfs": serde_json::Value::Object(pdf_json),
    });
    let diagnostics = serde_json::json!({
        "max_pdf_drift": max_drift,
        "clamp_excess": quad.clamp_excess().max(part.clamp_excess()).max(open.clamp_excess()),
    });
    emit(cfg, parts, results, diagnostics)
}

pub fn cmd_platoon(cfg: &RunConfig) -> Result<(), CliError> {
    let mut runs: Vec<(f64, PlatoonResult)> = Vec::with_capacity(cfg.etas.len());
    for &eta in &cfg.etas {
        let result = run_platoon(&cfg.platoon(eta), cfg.seed)?;
        runs.push((eta, result));
    }

    let mut sweep = Table::new(
        &run_tag(cfg),
        &[
            "eta",
            "model_stationary",
            "open_loop_stationary",
            "gt_tail",
            "ratio",
        ],
    );
    let mut sweep_rows = Vec::new();
    for (eta, result) in &runs {
        let model = result
            .acr_model
            .stationary()
            .expect("particle method defines it");
        let open = result
            .acr_openloop
            .stationary()
            .expect("closed form defines it");
        sweep.row(&[
            fmt_f(*eta),
            fmt_f(model),
            fmt_f(open),
            fmt_f(result.gt_tail_average),
            fmt_f(open / model),
        ]);
        sweep_rows.push(serde_json::json!({
            "eta": eta,
            "model_stationary": model,
            "open_loop_stationary": open,
            "gt_tail": result.gt_tail_average,
            "ratio": open / model,
        }));
    }

    let (_, first) = &runs[0];
    let mut tracking = Table::new(
        &run_tag(cfg),
        &["t", "mean_gap", "mean_velocity", "leader_velocity"],
    );
    for row in &first.tracking {
        tracking.row(&[
            fmt_f(row.t),
            fmt_f(row.mean_gap),
            fmt_f(row.mean_velocity),
            fmt_f(row.leader_velocity),
        ]);
    }

    let mut parts = vec![
        (String::new(), sweep.finish()),
        ("tracking".to_string(), tracking.finish()),
    ];
    let mut trajectories = serde_json::Map::new();
    for (eta, result) in &runs {
        let mut t = Table::new("", &["k", "gt", "model", "open_loop"]);
        for k in 0..result.acr_gt.values().len() {
            t.row(&[
                k.to_string(),
                fmt_f(result.acr_gt.values()[k]),
                fmt_f(result.acr_model.values()[k]),
                fmt_f(result.acr_openloop.values()[k]),
            ]);
        }
        parts.push((format!("acr_eta{}", fmt_f(*eta)), t.finish()));
        trajectories.insert(
            format!("eta{}", fmt_f(*eta)),
            serde_json::json!({
                "gt": result.acr_gt.values(),
                "model": result.acr_model.values(),
                "open_loop": result.acr_openloop.values(),
            }),
        );
    }

    let results = serde_json::json!({
        "sweep": sweep_rows,
        "tracking": first.tracking.iter().map(|r| serde_json::json!({
            "t": r.t,
            "mean_gap": r.mean_gap,
            "mean_velocity": r.mean_velocity,
            "leader_velocity": r.leader_velocity,
        })).collect::<Vec<_>>(),
        "trajectories": serde_json::Value::Object(trajectories),
    });
    let clamp = runs
        .iter()
        .map(|(_, r)| {
            r.acr_model
                .clamp_excess()
                .max(r.acr_openloop.clamp_excess())
        })
        .fold(0.0_f64, f64::max);
    let diagnostics = serde_json::json!({ "clamp_excess": clamp });
    emit(cfg, parts, results, diagnostics)
}
