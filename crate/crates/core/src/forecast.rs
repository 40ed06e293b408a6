//! Closed-loop operation: the readout's prediction is fed back as the
//! next input, turning the driven ESN into an autonomous system.

use nalgebra::{DMatrix, DVector};

use crate::dynsys::ScalarSeries;
use crate::error::{Error, Result};
use crate::reservoir::{drive, Esn};
use crate::ridge::ReadoutWeights;

/// Predictions with |v| beyond this are reported as divergence rather
/// than iterated further.
pub const DIVERGENCE_CUTOFF: f64 = 1e6;

/// Output of a closed-loop run: predictions v_1..v_n and, on request,
/// the states s_1..s_n that produced the following prediction each.
#[derive(Debug, Clone, PartialEq)]
pub struct AutonomousRun {
    pub predictions: Vec<f64>,
    pub states: Option<DMatrix<f64>>,
}

/// Iterates v_{k+1} = w . s_k, s_{k+1} = tanh(A s_k + C v_{k+1} + b) for
/// `n` steps from `s0`, which is typically the last teacher-forced state.
///
/// Requires a scalar-input ESN. A non-finite prediction, or one beyond
/// the divergence cutoff, aborts with the offending 1-based step index.
pub fn autonomous_run(
    e: &Esn,
    w: &ReadoutWeights,
    s0: &DVector<f64>,
    n: usize,
    retain_states: bool,
) -> Result<AutonomousRun> {
    assert_eq!(e.input_dim(), 1, "autonomous feedback requires input_dim = 1");
    assert_eq!(s0.len(), e.reservoir_size(), "state dimension mismatch");
    assert_eq!(w.dim(), e.reservoir_size(), "readout dimension mismatch");

    let mut predictions = Vec::with_capacity(n);
    let mut states = retain_states.then(|| DMatrix::zeros(n, e.reservoir_size()));
    let mut s = s0.clone();
    let mut z = DVector::zeros(1);
    for k in 0..n {
        let v = w.predict(&s);
        if !v.is_finite() || v.abs() > DIVERGENCE_CUTOFF {
            return Err(Error::Diverged {
                step: k + 1,
                value: v,
            });
        }
        predictions.push(v);
        z[0] = v;
        s = e.step(&s, &z);
        if let Some(m) = states.as_mut() {
            m.row_mut(k).tr_copy_from(&s);
        }
    }
    Ok(AutonomousRun {
        predictions,
        states,
    })
}

/// Final state of a teacher-forced drive from the zero state; the seam
/// between training and the autonomous phase.
pub fn handoff_state(e: &Esn, inputs: &DMatrix<f64>, washout: usize) -> DVector<f64> {
    let x0 = DVector::zeros(e.reservoir_size());
    drive(e, inputs, &x0, washout).last_state()
}

/// Next-step training data: inputs z_0..z_{m-2} paired with targets
/// u_k = z_{k+1}. The final observation has no target and is dropped.
pub fn next_step_pairs(series: &ScalarSeries) -> (ScalarSeries, Vec<f64>) {
    assert!(series.len() >= 2, "need at least two observations");
    let inputs = ScalarSeries {
        values: series.values[..series.len() - 1].to_vec(),
        dt: series.dt,
    };
    let targets = series.values[1..].to_vec();
    (inputs, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::{lorenz_trajectory, observe, Component, LorenzParams, LorenzState};
    use crate::reservoir::{column_inputs, make_esn, EsnParams};
    use crate::ridge::ridge_svd;

    fn xi_series(n: usize) -> ScalarSeries {
        let traj = lorenz_trajectory(
            LorenzState::new(0.0, 1.0, 1.05),
            LorenzParams::classical(),
            n - 1,
            0.01,
        )
        .unwrap();
        observe(&traj, Component::Xi)
    }

    fn small_esn(seed: u64) -> Esn {
        make_esn(&EsnParams {
            reservoir_size: 50,
            master_seed: seed,
            ..EsnParams::default()
        })
    }

    #[test]
    fn zero_readout_zero_bias_stays_at_rest() {
        let e = make_esn(&EsnParams {
            reservoir_size: 10,
            master_seed: 1,
            ..EsnParams::default()
        });
        // zero out the bias by hand-building an equivalent system
        let e = Esn::from_parts(
            e.reservoir_matrix().clone(),
            e.input_matrix().clone(),
            DVector::zeros(10),
        );
        let w = ReadoutWeights {
            w: DVector::zeros(10),
            lambda: 0.0,
        };
        let run = autonomous_run(&e, &w, &DVector::zeros(10), 20, true).unwrap();
        assert!(run.predictions.iter().all(|&v| v == 0.0));
        assert!(run.states.unwrap().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn first_prediction_is_readout_of_initial_state() {
        let e = small_esn(2);
        let mut rng = crate::rng::Xoshiro256pp::from_seed64(5);
        let s0 = DVector::from_fn(50, |_, _| rng.uniform(-0.9, 0.9));
        let w = ReadoutWeights {
            w: DVector::from_fn(50, |_, _| rng.uniform(-1.0, 1.0)),
            lambda: 0.0,
        };
        let run = autonomous_run(&e, &w, &s0, 1, false).unwrap();
        assert_eq!(run.predictions, vec![w.predict(&s0)]);
    }

    #[test]
    fn diverged_run_reports_step_index() {
        let e = small_esn(3);
        let w = ReadoutWeights {
            w: DVector::from_element(50, 1e9),
            lambda: 0.0,
        };
        let s0 = DVector::from_element(50, 0.5);
        let err = autonomous_run(&e, &w, &s0, 10, false);
        match err {
            Err(Error::Diverged { step, value }) => {
                assert_eq!(step, 1);
                assert!(value.abs() > DIVERGENCE_CUTOFF);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn states_stay_inside_unit_cube_while_predictions_leave_data_range() {
        // a scaled-up readout sends v well outside the input range the
        // network was built for; the tanh states still cannot escape
        let series = xi_series(600);
        let e = small_esn(4);
        let inputs = column_inputs(&series.values[..500]);
        let traj = drive(&e, &inputs, &DVector::zeros(50), 50);
        let targets = DVector::from_row_slice(&series.values[51..501]);
        let fit = ridge_svd(&traj.states, &targets, 1e-6).unwrap();
        let boosted = ReadoutWeights {
            w: 2.0 * &fit.w,
            lambda: fit.lambda,
        };
        let run = autonomous_run(&e, &boosted, &traj.last_state(), 300, true).unwrap();
        let max_v = run
            .predictions
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v.abs()));
        assert!(max_v > 20.0, "expected inflated predictions, got {max_v}");
        assert!(run
            .states
            .unwrap()
            .iter()
            .all(|&s| s > -1.0 && s < 1.0));
    }

    #[test]
    fn index_discipline_under_instrumented_recomputation() {
        let series = xi_series(400);
        let e = small_esn(6);
        let inputs = column_inputs(&series.values[..300]);
        let traj = drive(&e, &inputs, &DVector::zeros(50), 50);
        let targets = DVector::from_row_slice(&series.values[51..301]);
        let fit = ridge_svd(&traj.states, &targets, 1e-6).unwrap();
        let s0 = traj.last_state();
        let run = autonomous_run(&e, &fit, &s0, 40, true).unwrap();
        let states = run.states.unwrap();

        // v_{k+1} depends only on s_k; s_{k+1} on (s_k, v_{k+1})
        let mut prev = s0;
        for k in 0..40 {
            assert_eq!(run.predictions[k], fit.predict(&prev));
            let z = DVector::from_vec(vec![run.predictions[k]]);
            let expected = e.step(&prev, &z);
            let stored = states.row(k).transpose();
            assert_eq!(stored, expected);
            prev = stored;
        }
    }

    #[test]
    fn autonomous_runs_are_deterministic() {
        let e = small_esn(7);
        let mut rng = crate::rng::Xoshiro256pp::from_seed64(70);
        let s0 = DVector::from_fn(50, |_, _| rng.uniform(-0.5, 0.5));
        let w = ReadoutWeights {
            w: DVector::from_fn(50, |_, _| rng.uniform(-0.2, 0.2)),
            lambda: 0.0,
        };
        let a = autonomous_run(&e, &w, &s0, 100, true).unwrap();
        let b = autonomous_run(&e, &w, &s0, 100, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn handoff_single_input_is_one_step_from_rest() {
        let e = small_esn(8);
        let inputs = column_inputs(&[1.25]);
        let handoff = handoff_state(&e, &inputs, 0);
        let expected = e.step(&DVector::zeros(50), &DVector::from_vec(vec![1.25]));
        assert_eq!(handoff, expected);
    }

    #[test]
    fn handoff_equals_last_drive_row() {
        let series = xi_series(150);
        let e = small_esn(9);
        let inputs = column_inputs(&series.values);
        let handoff = handoff_state(&e, &inputs, 20);
        let traj = drive(&e, &inputs, &DVector::zeros(50), 20);
        assert_eq!(handoff, traj.last_state());
    }

    #[test]
    fn next_step_pairs_shift_by_one() {
        let series = ScalarSeries::new(vec![1.0, 2.0, 3.0, 4.0], 0.1).unwrap();
        let (inputs, targets) = next_step_pairs(&series);
        assert_eq!(inputs.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(targets, vec![2.0, 3.0, 4.0]);
        assert_eq!(inputs.dt, 0.1);
    }
}
