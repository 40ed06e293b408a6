//! Tikhonov least-squares readout training: a batch SVD solver, a
//! streaming normal-equation accumulator with a symmetric positive
//! definite solve, and the error metrics reported by the experiments.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below this multiple of the largest are treated as zero
/// when solving with lambda = 0.
const RANK_TOL: f64 = 1e-14;

/// A trained linear readout and the regularisation it was fit with.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutWeights {
    pub w: DVector<f64>,
    pub lambda: f64,
}

impl ReadoutWeights {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Readout prediction w . x.
    pub fn predict(&self, x: &DVector<f64>) -> f64 {
        assert_eq!(x.len(), self.dim(), "state dimension mismatch");
        self.w.dot(x)
    }
}

/// How the regularisation parameter scales with the sample count.
///
/// `Raw` minimises sum_k (w.x_k - u_k)^2 + lambda ||w||^2. `Averaged`
/// divides the whole objective by the sample count, which is equivalent
/// to a raw fit with lambda multiplied by the count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaConvention {
    #[default]
    Raw,
    Averaged,
}

impl std::str::FromStr for LambdaConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "raw" => Ok(Self::Raw),
            "averaged" => Ok(Self::Averaged),
            other => Err(format!("expected `raw` or `averaged`, got `{other}`")),
        }
    }
}

/// The raw-sum lambda that realises `convention` for a fit on `ell` samples.
pub fn effective_lambda(lambda: f64, ell: usize, convention: LambdaConvention) -> f64 {
    match convention {
        LambdaConvention::Raw => lambda,
        LambdaConvention::Averaged => lambda * ell as f64,
    }
}

/// Minimiser of sum_k (w.x_k - u_k)^2 + lambda ||w||^2 via the thin SVD
/// X = U S V^T, as w = V diag(s_i / (s_i^2 + lambda)) U^T u.
///
/// lambda = 0 is accepted only when X has full column rank; otherwise the
/// problem is singular.
pub fn ridge_svd(x: &DMatrix<f64>, u: &DVector<f64>, lambda: f64) -> Result<ReadoutWeights> {
    assert!(x.nrows() >= 1, "ridge_svd requires at least one sample");
    assert_eq!(x.nrows(), u.len(), "row count must match target count");
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let svd = x.clone().svd(true, true);
    let sv = &svd.singular_values;
    let u_mat = svd.u.as_ref().expect("SVD with U requested");
    let v_t = svd.v_t.as_ref().expect("SVD with V^T requested");

    if lambda == 0.0 {
        let s_max = sv.max();
        let rank_deficient =
            x.ncols() > x.nrows() || sv.iter().any(|&s| s <= RANK_TOL * s_max);
        if rank_deficient {
            return Err(Error::Singular);
        }
    }

    let proj = u_mat.transpose() * u;
    let filtered = DVector::from_fn(sv.len(), |i, _| {
        let s = sv[i];
        let factor = if lambda == 0.0 {
            1.0 / s
        } else {
            s / (s * s + lambda)
        };
        factor * proj[i]
    });
    Ok(ReadoutWeights {
        w: v_t.transpose() * filtered,
        lambda,
    })
}

/// Running raw sums (sum x x^T, sum u x, count): mergeable sufficient
/// statistics for the normal equations.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEqAccumulator {
    s: DMatrix<f64>,
    t: DVector<f64>,
    n: usize,
}

impl NormalEqAccumulator {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "accumulator dimension must be >= 1");
        Self {
            s: DMatrix::zeros(dim, dim),
            t: DVector::zeros(dim),
            n: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.t.len()
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn moment(&self) -> &DVector<f64> {
        &self.t
    }

    /// Adds one (state, target) sample. The outer product is written to
    /// both triangles from a single multiplication, so S stays exactly
    /// symmetric.
    pub fn accumulate(&mut self, x: &DVector<f64>, u: f64) {
        let d = self.dim();
        assert_eq!(x.len(), d, "state dimension mismatch");
        for i in 0..d {
            for j in i..d {
                let prod = x[i] * x[j];
                self.s[(i, j)] += prod;
                if i != j {
                    self.s[(j, i)] += prod;
                }
            }
            self.t[i] += u * x[i];
        }
        self.n += 1;
    }

    /// Componentwise sum of two accumulators.
    pub fn merge(mut self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "accumulator dimension mismatch");
        self.s += &other.s;
        self.t += &other.t;
        self.n += other.n;
        self
    }
}

/// Solves (S + lambda I) w = t by an in-house Cholesky factorization.
/// This path shares no machinery with `ridge_svd`, so the two can be
/// cross-checked against each other.
pub fn solve_normal(acc: &NormalEqAccumulator, lambda: f64) -> Result<ReadoutWeights> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let d = acc.dim();
    let mut m = acc.s.clone();
    for i in 0..d {
        m[(i, i)] += lambda;
    }
    let l = cholesky_lower(&m).ok_or(Error::Singular)?;

    // forward substitution L y = t
    let mut y = DVector::zeros(d);
    for i in 0..d {
        let mut sum = acc.t[i];
        for j in 0..i {
            sum -= l[(i, j)] * y[j];
        }
        y[i] = sum / l[(i, i)];
    }
    // back substitution L^T w = y
    let mut w = DVector::zeros(d);
    for i in (0..d).rev() {
        let mut sum = y[i];
        for j in (i + 1)..d {
            sum -= l[(j, i)] * w[j];
        }
        w[i] = sum / l[(i, i)];
    }
    Ok(ReadoutWeights { w, lambda })
}

fn cholesky_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let d = m.nrows();
    let mut l = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let mut sum = m[(i, j)];
            for p in 0..j {
                sum -= l[(i, p)] * l[(j, p)];
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l[(i, i)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Root mean square error of the readout over rows of `x` against `u`.
pub fn rmse(w: &ReadoutWeights, x: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
    assert_eq!(x.nrows(), u.len(), "row count must match target count");
    assert!(x.nrows() >= 1, "rmse requires at least one sample");
    let residual = x * &w.w - u;
    (residual.norm_squared() / x.nrows() as f64).sqrt()
}

/// Relative readout error ||w - w_ref|| / ||w_ref||.
pub fn readout_error(w: &ReadoutWeights, w_ref: &ReadoutWeights) -> Result<f64> {
    assert_eq!(w.dim(), w_ref.dim(), "readout dimension mismatch");
    let ref_norm = w_ref.w.norm();
    if ref_norm == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((&w.w - &w_ref.w).norm() / ref_norm)
}
