//! Experiment protocol: xi -> zeta regression on a Lorenz trajectory,
//! readout-convergence studies over the training length, PCA of reservoir
//! states, and the scaling probe for time-average fluctuations.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dynsys::{
    lorenz_trajectory, observe, Component, LorenzParams, LorenzState, ScalarSeries,
};
use crate::error::{Error, Result};
use crate::reservoir::{column_inputs, drive, make_esn, EsnParams, StateTrajectory};
use crate::ridge::{
    effective_lambda, readout_error, ridge_svd, rmse, LambdaConvention, ReadoutWeights,
};
use crate::rng::{SplitMix64, Xoshiro256pp};

/// Burn-in steps applied before a drawn point is treated as distributed
/// like the invariant measure in `clt_scaling`.
pub const CLT_BURN_IN: usize = 1000;

/// Everything a convergence study needs.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub lorenz: LorenzParams,
    pub initial_state: LorenzState,
    pub tau: f64,
    pub esn: EsnParams,
    pub lambda: f64,
    pub lambda_convention: LambdaConvention,
    pub washout: usize,
    pub ell_grid: Vec<usize>,
    pub eval_length: usize,
    /// Observation count of the reference trajectory whose fit serves as
    /// the limiting readout.
    pub ref_length: usize,
    pub seeds: Vec<u64>,
}

impl StudyConfig {
    /// The default protocol: tau = 0.01 from (0, 1.0, 1.05), a 300-neuron
    /// unit-norm reservoir, lambda = 1e-9, washout 100, training lengths
    /// 300..4000 in steps of 100 against a 20000-point reference, ten
    /// realisations.
    pub fn standard() -> Self {
        Self {
            lorenz: LorenzParams::classical(),
            initial_state: LorenzState::new(0.0, 1.0, 1.05),
            tau: 0.01,
            esn: EsnParams::default(),
            lambda: 1e-9,
            lambda_convention: LambdaConvention::Raw,
            washout: 100,
            ell_grid: (300..=4000).step_by(100).collect(),
            eval_length: 1000,
            ref_length: 20_000,
            seeds: (1..=10).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        LorenzParams::new(self.lorenz.sigma, self.lorenz.rho, self.lorenz.beta)?;
        if !self.initial_state.is_finite() {
            return Err(Error::NonFinite("initial state"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParam(format!("tau must be > 0, got {}", self.tau)));
        }
        self.esn.validate()?;
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.ell_grid.is_empty() {
            return Err(Error::InvalidParam("ell_grid must be nonempty".into()));
        }
        if self.ell_grid.iter().any(|&l| l == 0) {
            return Err(Error::InvalidParam("ell_grid entries must be >= 1".into()));
        }
        let max_ell = *self.ell_grid.iter().max().expect("nonempty");
        if max_ell + self.washout > self.ref_length {
            return Err(Error::InvalidParam(format!(
                "max(ell_grid) + washout = {} exceeds ref_length = {}",
                max_ell + self.washout,
                self.ref_length
            )));
        }
        if self.eval_length == 0 || self.eval_length > self.ref_length {
            return Err(Error::InvalidParam(format!(
                "eval_length must be in 1..=ref_length, got {}",
                self.eval_length
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParam("seeds must be nonempty".into()));
        }
        Ok(())
    }

    /// Training sample count available after the washout.
    pub fn available_samples(&self) -> usize {
        self.ref_length - self.washout
    }
}

/// One cell of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentRow {
    pub ell: usize,
    pub seed: u64,
    pub we: f64,
    pub rmse: f64,
}

/// Observation and target series of the reference trajectory.
pub fn observation_series(cfg: &StudyConfig) -> Result<(ScalarSeries, ScalarSeries)> {
    assert!(cfg.ref_length >= 1);
    let traj = lorenz_trajectory(cfg.initial_state, cfg.lorenz, cfg.ref_length - 1, cfg.tau)?;
    Ok((
        observe(&traj, Component::Xi),
        observe(&traj, Component::Zeta),
    ))
}

/// Teacher-forced reservoir states for `seed` on the xi observations.
pub fn teacher_states(cfg: &StudyConfig, seed: u64, xi: &ScalarSeries) -> StateTrajectory {
    let esn = make_esn(&EsnParams {
        master_seed: seed,
        ..cfg.esn.clone()
    });
    let x0 = DVector::zeros(cfg.esn.reservoir_size);
    drive(&esn, &column_inputs(&xi.values), &x0, cfg.washout)
}

fn fit_prefix(
    cfg: &StudyConfig,
    states: &DMatrix<f64>,
    targets: &DVector<f64>,
    ell: usize,
) -> Result<ReadoutWeights> {
    let x = states.rows(0, ell).into_owned();
    let u = DVector::from_row_slice(&targets.as_slice()[..ell]);
    ridge_svd(&x, &u, effective_lambda(cfg.lambda, ell, cfg.lambda_convention))
}

/// Trains a readout on the first `ell` post-washout (state, zeta) pairs.
pub fn train_readout(cfg: &StudyConfig, ell: usize, seed: u64) -> Result<ReadoutWeights> {
    cfg.validate()?;
    if ell == 0 || ell + cfg.washout > cfg.ref_length {
        return Err(Error::InvalidParam(format!(
            "ell = {ell} outside 1..={}",
            cfg.available_samples()
        )));
    }
    let (xi, zeta) = observation_series(cfg)?;
    let traj = teacher_states(cfg, seed, &xi);
    let targets = DVector::from_row_slice(&zeta.values[cfg.washout..]);
    fit_prefix(cfg, &traj.states, &targets, ell)
}

fn study_for_seed(
    cfg: &StudyConfig,
    seed: u64,
    xi: &ScalarSeries,
    zeta: &ScalarSeries,
) -> Result<Vec<ExperimentRow>> {
    let traj = teacher_states(cfg, seed, xi);
    let targets = DVector::from_row_slice(&zeta.values[cfg.washout..]);
    let w_limit = fit_prefix(cfg, &traj.states, &targets, traj.len())?;

    let mut rows = cfg
        .ell_grid
        .par_iter()
        .map(|&ell| {
            let fit = fit_prefix(cfg, &traj.states, &targets, ell)?;
            Ok(ExperimentRow {
                ell,
                seed,
                we: readout_error(&fit, &w_limit)?,
                rmse: rmse(&fit, &traj.states, &targets),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.ell, r.seed));
    Ok(rows)
}

/// Readout convergence over the training-length grid for the configured
/// master seed. The limiting readout is the fit on all available samples;
/// each cell reports its distance to that limit and the RMSE over the
/// whole reference trajectory.
pub fn convergence_study(cfg: &StudyConfig) -> Result<Vec<ExperimentRow>> {
    cfg.validate()?;
    let (xi, zeta) = observation_series(cfg)?;
    study_for_seed(cfg, cfg.esn.master_seed, &xi, &zeta)
}

/// Convergence study repeated over `cfg.seeds`, sharing one trajectory.
/// Rows come back sorted by (ell, seed).
pub fn multi_seed_study(cfg: &StudyConfig) -> Result<Vec<ExperimentRow>> {
    cfg.validate()?;
    let (xi, zeta) = observation_series(cfg)?;
    let mut rows = cfg
        .seeds
        .par_iter()
        .map(|&seed| study_for_seed(cfg, seed, &xi, &zeta))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    rows.sort_by_key(|r| (r.ell, r.seed));
    Ok(rows)
}

/// Column-centered principal components of a state matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// l x k scores: the centered states expressed in the top-k basis.
    pub coords: DMatrix<f64>,
    /// T x k orthonormal right singular vectors.
    pub components: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

/// Centers the columns of `states` and projects onto the top `k` right
/// singular vectors of the centered matrix.
pub fn pca_project(states: &DMatrix<f64>, k: usize) -> PcaProjection {
    let (l, t) = states.shape();
    assert!(
        k >= 1 && k <= l.min(t),
        "k = {k} outside 1..={}",
        l.min(t)
    );
    let mut centered = states.clone();
    for j in 0..t {
        let mean = states.column(j).mean();
        for i in 0..l {
            centered[(i, j)] -= mean;
        }
    }
    let svd = centered.svd(true, true);
    let u = svd.u.as_ref().expect("SVD with U requested");
    let v_t = svd.v_t.as_ref().expect("SVD with V^T requested");
    let mut coords = DMatrix::zeros(l, k);
    for j in 0..k {
        let s = svd.singular_values[j];
        for i in 0..l {
            coords[(i, j)] = u[(i, j)] * s;
        }
    }
    PcaProjection {
        coords,
        components: v_t.rows(0, k).transpose(),
        singular_values: svd.singular_values.iter().take(k).copied().collect(),
    }
}

/// For each orbit length, the sample standard deviation over `trials`
/// Birkhoff averages of `observable` on the logistic map, with initial
/// points drawn via a burned-in orbit so they follow the invariant
/// measure. Deterministic in `seed`.
pub fn clt_scaling<F: Fn(f64) -> f64>(
    observable: F,
    ell_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Vec<(usize, f64)> {
    assert!(trials >= 30, "clt_scaling requires at least 30 trials");
    assert!(!ell_grid.is_empty() && ell_grid.iter().all(|&l| l >= 1));
    let mut sm = SplitMix64::new(seed);
    let mut rng = Xoshiro256pp::from_seed64(sm.next_u64());
    let mut out = Vec::with_capacity(ell_grid.len());
    for &ell in ell_grid {
        let mut averages = Vec::with_capacity(trials);
        for _ in 0..trials {
            let x0 = burned_in_start(&mut rng);
            let mut x = x0;
            let mut sum = 0.0;
            for _ in 0..ell {
                sum += observable(x);
                x = 4.0 * x * (1.0 - x);
            }
            averages.push(sum / ell as f64);
        }
        let mean = averages.iter().sum::<f64>() / trials as f64;
        let var = averages
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / (trials - 1) as f64;
        out.push((ell, var.sqrt()));
    }
    out
}

fn burned_in_start(rng: &mut Xoshiro256pp) -> f64 {
    loop {
        let mut x = rng.next_f64();
        if x <= 0.0 || x >= 1.0 || x == 0.5 {
            continue;
        }
        for _ in 0..CLT_BURN_IN {
            x = 4.0 * x * (1.0 - x);
        }
        // a burned orbit that collapsed onto a fixed point is redrawn
        if x > 0.0 && x < 1.0 && x != 0.5 {
            return x;
        }
    }
}
