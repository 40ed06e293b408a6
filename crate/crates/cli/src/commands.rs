//! Subcommand implementations. Each writes one CSV artifact into the
//! output directory; diagnostics go to stderr via the error path.

use std::path::Path;

use esnlab_core::dynsys::{lorenz_trajectory, observe, Component};
use esnlab_core::experiment::{
    clt_scaling, multi_seed_study, observation_series, pca_project, teacher_states,
};
use esnlab_core::forecast::{autonomous_run, next_step_pairs};
use esnlab_core::reservoir::{column_inputs, drive, make_esn};
use esnlab_core::ridge::{effective_lambda, ridge_svd};
use nalgebra::DVector;
use thiserror::Error;

use crate::config::RunConfig;
use crate::output::{artifact_path, fmt_f64, write_csv, write_esn_blocks};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Core(#[from] esnlab_core::Error),

    #[error("cannot write artifact: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Setup(String),
}

pub fn generate(cfg: &RunConfig, out_dir: &Path) -> Result<(), CommandError> {
    let traj = lorenz_trajectory(
        cfg.initial_state(),
        cfg.lorenz_params(),
        cfg.generate_steps,
        cfg.tau,
    )?;
    let rows = traj.states.iter().enumerate().map(|(k, s)| {
        format!(
            "{k},{},{},{},{}",
            fmt_f64(k as f64 * cfg.tau),
            fmt_f64(s.xi),
            fmt_f64(s.upsilon),
            fmt_f64(s.zeta)
        )
    });
    write_csv(
        &artifact_path(out_dir, "trajectory.csv"),
        "k,t,xi,upsilon,zeta",
        rows,
    )?;
    Ok(())
}

pub fn train(cfg: &RunConfig, out_dir: &Path) -> Result<(), CommandError> {
    let study = cfg.study_config();
    let (xi, zeta) = observation_series(&study)?;
    let traj = teacher_states(&study, cfg.seed, &xi);
    let targets = DVector::from_row_slice(&zeta.values[cfg.washout..]);

    let x = traj.states.rows(0, cfg.ell).into_owned();
    let u = DVector::from_row_slice(&targets.as_slice()[..cfg.ell]);
    let lambda = effective_lambda(cfg.lambda, cfg.ell, cfg.lambda_convention);
    let fit = ridge_svd(&x, &u, lambda)?;

    let predictions = &traj.states * &fit.w;
    let rows = (0..traj.len()).map(|j| {
        format!(
            "{},{},{}",
            cfg.washout + j,
            fmt_f64(predictions[j]),
            fmt_f64(targets[j])
        )
    });
    write_csv(&artifact_path(out_dir, "train.csv"), "k,pred,u_true", rows)?;

    let weight_rows = (0..fit.dim()).map(|i| format!("{i},{}", fmt_f64(fit.w[i])));
    write_csv(&artifact_path(out_dir, "weights.csv"), "i,w", weight_rows)?;

    if cfg.dump_esn {
        let esn = make_esn(&cfg.esn_params());
        write_esn_blocks(&artifact_path(out_dir, "esn.csv"), &esn)?;
    }
    Ok(())
}

pub fn forecast(cfg: &RunConfig, out_dir: &Path) -> Result<(), CommandError> {
    let traj = lorenz_trajectory(
        cfg.initial_state(),
        cfg.lorenz_params(),
        cfg.ref_length - 1,
        cfg.tau,
    )?;
    let series = observe(&traj, Component::Xi);
    let (inputs, targets) = next_step_pairs(&series);
    let teacher_len = cfg.washout + cfg.ell;
    if teacher_len > inputs.len() {
        return Err(CommandError::Setup(format!(
            "washout + ell = {teacher_len} exceeds the {} next-step samples \
             available from ref_length = {}",
            inputs.len(),
            cfg.ref_length
        )));
    }

    let esn = make_esn(&cfg.esn_params());
    let input_matrix = column_inputs(&inputs.values[..teacher_len]);
    let x0 = DVector::zeros(cfg.reservoir_size);
    let states = drive(&esn, &input_matrix, &x0, cfg.washout);
    let u = DVector::from_row_slice(&targets[cfg.washout..teacher_len]);
    let lambda = effective_lambda(cfg.lambda, cfg.ell, cfg.lambda_convention);
    let fit = ridge_svd(&states.states, &u, lambda)?;

    let run = autonomous_run(&esn, &fit, &states.last_state(), cfg.eval_length, false)?;
    // prediction k continues the series at absolute index teacher_len-1+k
    let rows = run.predictions.iter().enumerate().map(|(idx, &v)| {
        let k = idx + 1;
        let truth_index = teacher_len - 1 + k;
        let truth = if truth_index < series.len() {
            fmt_f64(series.values[truth_index])
        } else {
            String::new()
        };
        format!("{k},{},{truth}", fmt_f64(v))
    });
    write_csv(
        &artifact_path(out_dir, "forecast.csv"),
        "k,v_pred,u_true",
        rows,
    )?;

    if cfg.dump_esn {
        write_esn_blocks(&artifact_path(out_dir, "esn.csv"), &esn)?;
    }
    Ok(())
}

pub fn converge(cfg: &RunConfig, out_dir: &Path) -> Result<(), CommandError> {
    let rows = multi_seed_study(&cfg.study_config())?;
    let (header, lines): (&str, Vec<String>) = if cfg.guide_curves {
        (
            "ell,seed,we,rmse,guide_we,guide_rmse",
            rows.iter()
                .map(|r| {
                    let sqrt_ell = (r.ell as f64).sqrt();
                    format!(
                        "{},{},{},{},{},{}",
                        r.ell,
                        r.seed,
                        fmt_f64(r.we),
                        fmt_f64(r.rmse),
                        fmt_f64(45.0 / sqrt_ell),
                        fmt_f64(150.0 / sqrt_ell)
                    )
                })
                .collect(),
        )
    } else {
        (
            "ell,seed,we,rmse",
            rows.iter()
                .map(|r| format!("{},{},{},{}", r.ell, r.seed, fmt_f64(r.we), fmt_f64(r.rmse)))
                .collect(),
        )
    };
    write_csv(&artifact_path(out_dir, "study.csv"), header, lines)?;
    Ok(())
}

pub fn pca(cfg: &RunConfig, out_dir: &Path) -> Result<(), CommandError> {
    let study = cfg.study_config();
    let (xi, _) = observation_series(&study)?;
    let esn = make_esn(&cfg.esn_params());
    let input_matrix = column_inputs(&xi.values[..cfg.washout + cfg.ell]);
    let x0 = DVector::zeros(cfg.reservoir_size);
    let states = drive(&esn, &input_matrix, &x0, cfg.washout);

    let projection = pca_project(&states.states, cfg.pca_components);
    let header = {
        let mut h = String::from("k");
        for j in 1..=cfg.pca_components {
            h.push_str(&format!(",pc{j}"));
        }
        h
    };
    let rows = (0..projection.coords.nrows()).map(|i| {
        let mut row = format!("{}", cfg.washout + i);
        for j in 0..cfg.pca_components {
            row.push(',');
            row.push_str(&fmt_f64(projection.coords[(i, j)]));
        }
        row
    });
    write_csv(&artifact_path(out_dir, "pca.csv"), &header, rows)?;

    if cfg.dump_esn {
        write_esn_blocks(&artifact_path(out_dir, "esn.csv"), &esn)?;
    }
    Ok(())
}

pub fn clt(cfg: &RunConfig, out_dir: &Path) -> Result<(), CommandError> {
    let rows = clt_scaling(|x| x, &cfg.clt_ell_grid, cfg.clt_trials, cfg.seed);
    let lines = rows
        .iter()
        .map(|(ell, std)| format!("{ell},{}", fmt_f64(*std)));
    write_csv(&artifact_path(out_dir, "clt.csv"), "ell,std", lines)?;
    Ok(())
}
