//! Random echo state networks: construction, driving, and checks of the
//! state-contraction (echo state) property.

use nalgebra::{DMatrix, DVector};

use crate::rng::{SplitMix64, Xoshiro256pp};

/// Relative-change tolerance for the power iteration used when rescaling
/// the reservoir matrix.
pub const POWER_ITERATION_TOL: f64 = 1e-10;

/// Iteration cap for the power iteration.
pub const POWER_ITERATION_CAP: usize = 10_000;

/// Construction parameters for a random ESN.
///
/// Entries of the input matrix and bias are drawn i.i.d. uniform on
/// `[-input_scale, input_scale]`; the reservoir matrix is drawn uniform on
/// `[-1, 1]` and rescaled to the target 2-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct EsnParams {
    pub reservoir_size: usize,
    pub input_dim: usize,
    pub spectral_radius_target: f64,
    pub input_scale: f64,
    pub master_seed: u64,
}

impl EsnParams {
    pub fn validate(&self) -> crate::Result<()> {
        if self.reservoir_size < 1 || self.input_dim < 1 {
            return Err(crate::Error::InvalidParam(format!(
                "reservoir_size and input_dim must be >= 1, got {} and {}",
                self.reservoir_size, self.input_dim
            )));
        }
        if !(self.spectral_radius_target > 0.0) {
            return Err(crate::Error::InvalidParam(format!(
                "spectral_radius_target must be > 0, got {}",
                self.spectral_radius_target
            )));
        }
        if !(self.input_scale > 0.0) {
            return Err(crate::Error::InvalidParam(format!(
                "input_scale must be > 0, got {}",
                self.input_scale
            )));
        }
        Ok(())
    }
}

impl Default for EsnParams {
    /// 300 neurons, scalar input, unit 2-norm reservoir, 0.05 input scale.
    fn default() -> Self {
        Self {
            reservoir_size: 300,
            input_dim: 1,
            spectral_radius_target: 1.0,
            input_scale: 0.05,
            master_seed: 1,
        }
    }
}

/// A fixed random state-space system x_{k+1} = tanh(A x_k + C z_k + b).
#[derive(Debug, Clone, PartialEq)]
pub struct Esn {
    a: DMatrix<f64>,
    c: DMatrix<f64>,
    b: DVector<f64>,
}

impl Esn {
    /// Builds a system from explicit matrices, e.g. for hand-crafted
    /// instances or deserialized audits.
    pub fn from_parts(a: DMatrix<f64>, c: DMatrix<f64>, b: DVector<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "reservoir matrix must be square");
        assert_eq!(c.nrows(), a.nrows(), "input matrix row count mismatch");
        assert_eq!(b.len(), a.nrows(), "bias length mismatch");
        Self { a, c, b }
    }

    pub fn reservoir_size(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn reservoir_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn input_matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.b
    }

    /// One update tanh(A x + C z + b).
    pub fn step(&self, x: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.reservoir_size(), "state dimension mismatch");
        assert_eq!(z.len(), self.input_dim(), "input dimension mismatch");
        let mut pre = &self.a * x;
        pre += &self.c * z;
        pre += &self.b;
        pre.apply(|v| *v = v.tanh());
        pre
    }
}

/// Result of a power-iteration 2-norm estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralNorm {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Largest singular value of a square matrix by power iteration on M^T M,
/// started from the normalized all-ones vector. Stops when the estimate's
/// relative change drops below `tol` or after 10^4 iterations, in which
/// case `converged` is false and the last estimate is reported.
pub fn spectral_norm(m: &DMatrix<f64>, tol: f64) -> SpectralNorm {
    assert_eq!(m.nrows(), m.ncols(), "spectral_norm requires a square matrix");
    assert!(tol > 0.0, "spectral_norm requires tol > 0");
    assert!(
        m.iter().all(|v| v.is_finite()),
        "spectral_norm requires finite entries"
    );
    let t = m.nrows();
    let mut v = DVector::from_element(t, 1.0 / (t as f64).sqrt());
    let mut estimate = 0.0_f64;
    for iteration in 1..=POWER_ITERATION_CAP {
        let w = m.transpose() * (m * &v);
        let norm = w.norm();
        if norm == 0.0 {
            // v is in the null space; for the all-ones start this only
            // happens for the zero matrix.
            return SpectralNorm {
                value: 0.0,
                converged: true,
                iterations: iteration,
            };
        }
        let next = norm.sqrt();
        v = w / norm;
        if estimate > 0.0 && (next - estimate).abs() <= tol * next {
            return SpectralNorm {
                value: next,
                converged: true,
                iterations: iteration,
            };
        }
        estimate = next;
    }
    SpectralNorm {
        value: estimate,
        converged: false,
        iterations: POWER_ITERATION_CAP,
    }
}

/// Draws a random ESN from `p.master_seed`.
///
/// The seed is expanded by SplitMix64 into three xoshiro256++ streams, one
/// each for A, C and b. Draw order is fixed: A row-major on U[-1,1], then
/// C row-major and b on U[-scale, scale]. A is rescaled so its 2-norm hits
/// the target.
pub fn make_esn(p: &EsnParams) -> Esn {
    p.validate().expect("invalid EsnParams");
    let mut sm = SplitMix64::new(p.master_seed);
    let mut rng_a = Xoshiro256pp::from_seed64(sm.next_u64());
    let mut rng_c = Xoshiro256pp::from_seed64(sm.next_u64());
    let mut rng_b = Xoshiro256pp::from_seed64(sm.next_u64());

    let t = p.reservoir_size;
    let d = p.input_dim;
    let mut a = DMatrix::zeros(t, t);
    for i in 0..t {
        for j in 0..t {
            a[(i, j)] = rng_a.uniform(-1.0, 1.0);
        }
    }
    let mut c = DMatrix::zeros(t, d);
    for i in 0..t {
        for j in 0..d {
            c[(i, j)] = rng_c.uniform(-p.input_scale, p.input_scale);
        }
    }
    let mut b = DVector::zeros(t);
    for i in 0..t {
        b[i] = rng_b.uniform(-p.input_scale, p.input_scale);
    }

    let norm = spectral_norm(&a, POWER_ITERATION_TOL);
    if norm.value > 0.0 {
        a *= p.spectral_radius_target / norm.value;
    }
    Esn { a, c, b }
}

/// Reservoir states produced by teacher-forced driving, one row per kept
/// step. Row `j` is the state after consuming input `washout_used + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub states: DMatrix<f64>,
    pub washout_used: usize,
}

impl StateTrajectory {
    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }

    /// State after consuming input index `washout_used + j`.
    pub fn state_row(&self, j: usize) -> DVector<f64> {
        self.states.row(j).transpose()
    }

    pub fn last_state(&self) -> DVector<f64> {
        assert!(!self.is_empty());
        self.state_row(self.len() - 1)
    }
}

/// Packs scalar inputs into the l x 1 input matrix `drive` expects.
pub fn column_inputs(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(values.len(), 1, values)
}

/// Iterates the ESN over all inputs (rows of `inputs`) from `x0` and keeps
/// the states after the first `washout` are discarded.
pub fn drive(
    e: &Esn,
    inputs: &DMatrix<f64>,
    x0: &DVector<f64>,
    washout: usize,
) -> StateTrajectory {
    let l = inputs.nrows();
    assert_eq!(inputs.ncols(), e.input_dim(), "input dimension mismatch");
    assert_eq!(x0.len(), e.reservoir_size(), "state dimension mismatch");
    assert!(
        washout < l,
        "washout ({washout}) must be smaller than the input count ({l})"
    );

    let t = e.reservoir_size();
    let kept = l - washout;
    let mut states = DMatrix::zeros(kept, t);
    let mut x = x0.clone();
    let mut z = DVector::zeros(e.input_dim());
    for k in 0..l {
        for j in 0..e.input_dim() {
            z[j] = inputs[(k, j)];
        }
        x = e.step(&x, &z);
        if k >= washout {
            states.row_mut(k - washout).tr_copy_from(&x);
        }
    }
    StateTrajectory {
        states,
        washout_used: washout,
    }
}

/// Gap norms ||x_k - y_k|| of two runs co-driven by the same inputs,
/// including the initial gap; `n` steps are taken, so n+1 values return.
pub fn esp_gap(
    e: &Esn,
    inputs: &DMatrix<f64>,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    n: usize,
) -> Vec<f64> {
    assert!(n <= inputs.nrows(), "esp_gap needs n <= input count");
    assert_eq!(inputs.ncols(), e.input_dim(), "input dimension mismatch");
    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut gaps = Vec::with_capacity(n + 1);
    gaps.push((&x - &y).norm());
    let mut z = DVector::zeros(e.input_dim());
    for k in 0..n {
        for j in 0..e.input_dim() {
            z[j] = inputs[(k, j)];
        }
        x = e.step(&x, &z);
        y = e.step(&y, &z);
        gaps.push((&x - &y).norm());
    }
    gaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::{lorenz_trajectory, observe, Component, LorenzParams, LorenzState};

    fn lorenz_inputs(n: usize) -> DMatrix<f64> {
        let traj = lorenz_trajectory(
            LorenzState::new(0.0, 1.0, 1.05),
            LorenzParams::classical(),
            n - 1,
            0.01,
        )
        .unwrap();
        column_inputs(&observe(&traj, Component::Xi).values)
    }

    fn small_params(seed: u64) -> EsnParams {
        EsnParams {
            reservoir_size: 40,
            input_dim: 1,
            spectral_radius_target: 1.0,
            input_scale: 0.05,
            master_seed: seed,
        }
    }

    #[test]
    fn spectral_norm_identity() {
        let m = DMatrix::<f64>::identity(5, 5);
        let sn = spectral_norm(&m, 1e-10);
        assert!(sn.converged);
        assert!((sn.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        let sn = spectral_norm(&m, 1e-10);
        assert!(sn.converged);
        assert!((sn.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn spectral_norm_zero_matrix() {
        let m = DMatrix::<f64>::zeros(4, 4);
        let sn = spectral_norm(&m, 1e-10);
        assert!(sn.converged);
        assert_eq!(sn.value, 0.0);
    }

    #[test]
    fn spectral_norm_matches_svd_oracle() {
        let mut rng = Xoshiro256pp::from_seed64(7);
        let m = DMatrix::from_fn(6, 6, |_, _| rng.uniform(-1.0, 1.0));
        let oracle = m.clone().svd(false, false).singular_values[0];
        let sn = spectral_norm(&m, 1e-10);
        assert!(sn.converged);
        assert!(
            (sn.value - oracle).abs() <= 1e-8 * oracle,
            "power iteration {} vs svd {}",
            sn.value,
            oracle
        );
    }

    #[test]
    fn make_esn_is_deterministic() {
        let p = small_params(42);
        assert_eq!(make_esn(&p), make_esn(&p));
    }

    #[test]
    fn make_esn_hits_spectral_target_t2() {
        let p = EsnParams {
            reservoir_size: 2,
            master_seed: 42,
            ..EsnParams::default()
        };
        let e = make_esn(&p);
        let sn = spectral_norm(e.reservoir_matrix(), 1e-10);
        assert!((sn.value - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn make_esn_standard_configuration() {
        let e = make_esn(&EsnParams::default());
        assert_eq!(e.reservoir_size(), 300);
        assert_eq!(e.input_dim(), 1);
        assert!(e.input_matrix().iter().all(|v| v.abs() <= 0.05));
        assert!(e.bias().iter().all(|v| v.abs() <= 0.05));
        let sn = spectral_norm(e.reservoir_matrix(), 1e-10);
        assert!((sn.value - 1.0).abs() <= 1e-6, "norm {}", sn.value);
    }

    #[test]
    fn make_esn_respects_rescaling_invariant_across_seeds() {
        for seed in [1u64, 2, 99] {
            let p = EsnParams {
                spectral_radius_target: 0.9,
                ..small_params(seed)
            };
            let e = make_esn(&p);
            let sn = spectral_norm(e.reservoir_matrix(), 1e-10);
            assert!((sn.value - 0.9).abs() <= 0.9 * 1e-6);
        }
    }

    #[test]
    fn step_all_zero_gives_zero() {
        let e = Esn {
            a: DMatrix::zeros(3, 3),
            c: DMatrix::zeros(3, 1),
            b: DVector::zeros(3),
        };
        let out = e.step(&DVector::zeros(3), &DVector::from_vec(vec![5.0]));
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_large_bias_saturates_inside_unit_interval() {
        let e = Esn {
            a: DMatrix::zeros(2, 2),
            c: DMatrix::zeros(2, 1),
            b: DVector::from_vec(vec![9.0, -9.0]),
        };
        let out = e.step(&DVector::zeros(2), &DVector::zeros(1));
        assert!(out[0] > 0.9999 && out[0] < 1.0);
        assert!(out[1] < -0.9999 && out[1] > -1.0);
    }

    #[test]
    fn step_hand_instance() {
        let e = Esn {
            a: DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]),
            c: DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            b: DVector::zeros(2),
        };
        let out = e.step(&DVector::zeros(2), &DVector::from_vec(vec![1.0]));
        assert_eq!(out[0], 1.0_f64.tanh());
        assert_eq!(out[1], 1.0_f64.tanh());
    }

    #[test]
    fn drive_single_input_no_washout() {
        let e = make_esn(&small_params(5));
        let inputs = column_inputs(&[0.7]);
        let x0 = DVector::zeros(40);
        let traj = drive(&e, &inputs, &x0, 0);
        assert_eq!(traj.len(), 1);
        let expected = e.step(&x0, &DVector::from_vec(vec![0.7]));
        assert_eq!(traj.state_row(0), expected);
    }

    #[test]
    fn drive_washout_is_suffix_of_full_run() {
        let e = make_esn(&small_params(6));
        let inputs = lorenz_inputs(120);
        let x0 = DVector::zeros(40);
        let full = drive(&e, &inputs, &x0, 0);
        let cut = drive(&e, &inputs, &x0, 30);
        assert_eq!(cut.len(), 90);
        for j in 0..cut.len() {
            assert_eq!(cut.state_row(j), full.state_row(j + 30));
        }
    }

    #[test]
    fn drive_contraction_forgets_initial_state() {
        let p = EsnParams {
            spectral_radius_target: 0.9,
            ..small_params(11)
        };
        let e = make_esn(&p);
        let inputs = lorenz_inputs(220);
        let x0 = DVector::zeros(40);
        let mut rng = Xoshiro256pp::from_seed64(77);
        let y0 = DVector::from_fn(40, |_, _| rng.uniform(-1.0, 1.0));
        let xs = drive(&e, &inputs, &x0, 0);
        let ys = drive(&e, &inputs, &y0, 0);
        let gap = (xs.state_row(199) - ys.state_row(199)).norm();
        assert!(gap < 1e-8, "gap after 200 steps: {gap}");
    }

    #[test]
    fn driven_states_stay_strictly_inside_unit_cube() {
        let e = make_esn(&EsnParams {
            reservoir_size: 60,
            ..small_params(3)
        });
        let traj = drive(&e, &lorenz_inputs(400), &DVector::zeros(60), 0);
        assert!(traj.states.iter().all(|&v| v > -1.0 && v < 1.0));
    }

    #[test]
    fn esp_gap_identical_starts_stay_zero() {
        let e = make_esn(&small_params(8));
        let inputs = lorenz_inputs(50);
        let x0 = DVector::from_element(40, 0.2);
        let gaps = esp_gap(&e, &inputs, &x0, &x0, 50);
        assert_eq!(gaps.len(), 51);
        assert!(gaps.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn esp_gap_contracts_at_rate_c() {
        let p = EsnParams {
            spectral_radius_target: 0.9,
            ..small_params(21)
        };
        let e = make_esn(&p);
        let inputs = lorenz_inputs(300);
        let x0 = DVector::zeros(40);
        let mut rng = Xoshiro256pp::from_seed64(210);
        let y0 = DVector::from_fn(40, |_, _| rng.uniform(-1.0, 1.0));
        let gaps = esp_gap(&e, &inputs, &x0, &y0, 300);
        for k in 0..300 {
            assert!(
                gaps[k + 1] <= 0.9 * gaps[k] + 1e-12,
                "step {k}: {} vs {}",
                gaps[k + 1],
                gaps[k]
            );
        }
        // and therefore the closed-form bound c^k g_0
        for (k, &g) in gaps.iter().enumerate() {
            assert!(g <= 0.9_f64.powi(k as i32) * gaps[0] + 1e-12);
        }
    }

    #[test]
    fn esp_gap_at_unit_norm_is_recorded_not_asserted() {
        // the boundary case c = 1: decay is measured, no bound is claimed
        let e = make_esn(&small_params(31));
        let inputs = lorenz_inputs(300);
        let x0 = DVector::zeros(40);
        let mut rng = Xoshiro256pp::from_seed64(310);
        let y0 = DVector::from_fn(40, |_, _| rng.uniform(-1.0, 1.0));
        let gaps = esp_gap(&e, &inputs, &x0, &y0, 300);
        assert_eq!(gaps.len(), 301);
        assert!(gaps.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn drive_is_bitwise_deterministic() {
        let e = make_esn(&small_params(13));
        let inputs = lorenz_inputs(100);
        let x0 = DVector::zeros(40);
        assert_eq!(drive(&e, &inputs, &x0, 10), drive(&e, &inputs, &x0, 10));
    }
}
