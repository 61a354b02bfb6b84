//! Linear readout layer: measurement shot noise, least-squares training via
//! SVD pseudoinverse, prediction, and normalized error.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::ReadoutTrace;

/// Relative singular-value cutoff for the pseudoinverse.
pub const SINGULAR_VALUE_RELATIVE_CUTOFF: f64 = 1e-12;

/// Gaussian readout noise model: finite measurement statistics give each
/// trace entry a standard deviation `1/sqrt(n_measurements)`, inflated by
/// `1/sin(angle)` when a weak-measurement angle is set. Leaving the angle
/// unset holds the noise level fixed, the convention when the shot count is
/// assumed large enough to absorb the weaker per-shot signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub n_measurements: f64,
    /// Weak-measurement angle whose `1/sin` factor scales the noise.
    #[serde(default)]
    pub wmp_angle: Option<f64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            n_measurements: 1e10,
            wmp_angle: None,
        }
    }
}

impl NoiseSpec {
    /// Standard deviation per trace entry.
    pub fn std(&self) -> Result<f64> {
        if !(self.n_measurements > 0.0) || !self.n_measurements.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "n_measurements must be positive and finite, got {}",
                self.n_measurements
            )));
        }
        let base = self.n_measurements.sqrt().recip();
        match self.wmp_angle {
            None => Ok(base),
            Some(angle) => {
                if !angle.is_finite() || !(0.0..=std::f64::consts::FRAC_PI_2).contains(&angle) {
                    return Err(Error::InvalidAngle(angle));
                }
                if angle.sin() == 0.0 {
                    return Err(Error::InfiniteNoiseVariance);
                }
                Ok(base / angle.sin())
            }
        }
    }
}

/// Adds i.i.d. Gaussian noise to every trace entry, drawing in row-major
/// order so results are deterministic for a given stream.
pub fn add_shot_noise<R: Rng>(
    trace: &mut ReadoutTrace,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<()> {
    let std = spec.std()?;
    let normal = Normal::new(0.0, std)
        .map_err(|e| Error::InvalidConfig(format!("noise distribution: {e}")))?;
    for v in trace.as_mut_slice() {
        *v += normal.sample(rng);
    }
    Ok(())
}

/// Copies a trace into a samples-by-features design matrix.
pub fn design_matrix(trace: &ReadoutTrace) -> DMatrix<f64> {
    DMatrix::from_row_slice(trace.n_rows(), trace.n_cols(), trace.as_slice())
}

/// SVD factorization of a design matrix, reusable across many targets.
pub struct ReadoutSolver {
    /// `U^T`, k x m.
    u_t: DMatrix<f64>,
    /// `V`, n x k.
    v: DMatrix<f64>,
    /// Reciprocal singular values with the relative cutoff applied.
    inv_s: DVector<f64>,
    n_rows: usize,
}

impl ReadoutSolver {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        Self::with_ridge(x, 0.0)
    }

    /// Solver with an optional Tikhonov penalty `ridge` (0 disables it and
    /// recovers the plain pseudoinverse). Off by default; a diagnostic knob
    /// for near-collinear traces.
    pub fn with_ridge(x: &DMatrix<f64>, ridge: f64) -> Result<Self> {
        if !ridge.is_finite() || ridge < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "ridge penalty must be finite and nonnegative, got {ridge}"
            )));
        }
        let (m, n) = x.shape();
        if m == 0 || n == 0 {
            return Err(Error::Empty {
                what: "design matrix",
            });
        }
        if m < n {
            return Err(Error::InvalidConfig(format!(
                "design matrix has fewer samples ({m}) than features ({n})"
            )));
        }
        let svd = x.clone().svd(true, true);
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^T");
        let s = svd.singular_values;
        let s_max = s.iter().cloned().fold(0.0f64, f64::max);
        let cutoff = s_max * SINGULAR_VALUE_RELATIVE_CUTOFF;
        let inv_s = DVector::from_iterator(
            s.len(),
            s.iter().map(|&sv| {
                if sv > cutoff {
                    if ridge > 0.0 {
                        sv / (sv * sv + ridge)
                    } else {
                        1.0 / sv
                    }
                } else {
                    0.0
                }
            }),
        );
        Ok(Self {
            u_t: u.transpose(),
            v: v_t.transpose(),
            inv_s,
            n_rows: m,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.v.nrows()
    }

    /// Minimum-norm least-squares weights for one target.
    pub fn solve(&self, target: &DVector<f64>) -> Result<DVector<f64>> {
        if target.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                context: "solve",
                left: target.len(),
                right: self.n_rows,
            });
        }
        let mut coeffs = &self.u_t * target;
        coeffs.component_mul_assign(&self.inv_s);
        Ok(&self.v * coeffs)
    }

    /// Weights for a batch of targets given as columns; column `j` of the
    /// result holds the weights for target `j`.
    pub fn solve_batch(&self, targets: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if targets.nrows() != self.n_rows {
            return Err(Error::LengthMismatch {
                context: "solve_batch",
                left: targets.nrows(),
                right: self.n_rows,
            });
        }
        let mut coeffs = &self.u_t * targets;
        for j in 0..coeffs.ncols() {
            for i in 0..coeffs.nrows() {
                coeffs[(i, j)] *= self.inv_s[i];
            }
        }
        Ok(&self.v * coeffs)
    }
}

/// Readout weights together with the training error.
#[derive(Debug, Clone)]
pub struct TrainedReadout {
    pub weights: DVector<f64>,
    pub train_nrmse: f64,
}

/// Trains a linear readout on the full design matrix.
pub fn train_readout(x: &DMatrix<f64>, target: &[f64]) -> Result<TrainedReadout> {
    train_readout_ridge(x, target, 0.0)
}

/// [`train_readout`] with a Tikhonov penalty.
pub fn train_readout_ridge(x: &DMatrix<f64>, target: &[f64], ridge: f64) -> Result<TrainedReadout> {
    let solver = ReadoutSolver::with_ridge(x, ridge)?;
    let f = DVector::from_column_slice(target);
    let weights = solver.solve(&f)?;
    let predictions = x * &weights;
    let train_nrmse = nrmse(predictions.as_slice(), target)?;
    Ok(TrainedReadout {
        weights,
        train_nrmse,
    })
}

/// Applies readout weights to a design matrix.
pub fn predict(x: &DMatrix<f64>, weights: &DVector<f64>) -> Result<DVector<f64>> {
    if x.ncols() != weights.len() {
        return Err(Error::LengthMismatch {
            context: "predict",
            left: x.ncols(),
            right: weights.len(),
        });
    }
    Ok(x * weights)
}

/// Normalized root-mean-square error
/// `sqrt(mean((p - f)^2) / var(f))`; errors on a constant target.
pub fn nrmse(predictions: &[f64], target: &[f64]) -> Result<f64> {
    if predictions.len() != target.len() {
        return Err(Error::LengthMismatch {
            context: "nrmse",
            left: predictions.len(),
            right: target.len(),
        });
    }
    if target.is_empty() {
        return Err(Error::Empty { what: "target" });
    }
    let k = target.len() as f64;
    let mean = target.iter().sum::<f64>() / k;
    let var = target.iter().map(|&f| (f - mean) * (f - mean)).sum::<f64>() / k;
    let (lo, hi) = target
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &f| {
            (lo.min(f), hi.max(f))
        });
    if var == 0.0 || lo == hi {
        return Err(Error::ConstantTarget);
    }
    let mse = predictions
        .iter()
        .zip(target)
        .map(|(&p, &f)| (p - f) * (p - f))
        .sum::<f64>()
        / k;
    Ok((mse / var).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ramp(n: usize) -> Vec<f64> {
        (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn recovers_exact_linear_combination() {
        let u = ramp(200);
        let x = DMatrix::from_fn(200, 2, |i, j| if j == 0 { u[i] } else { u[i] * u[i] });
        let f: Vec<f64> = u.iter().map(|&v| 2.0 * v + 3.0 * v * v).collect();
        let trained = train_readout(&x, &f).unwrap();
        assert_relative_eq!(trained.weights[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(trained.weights[1], 3.0, epsilon = 1e-10);
        assert!(trained.train_nrmse < 1e-10);
    }

    #[test]
    fn orthogonal_target_gives_unit_error() {
        // All-ones column, alternating target: least squares fits the mean
        // (zero), so the normalized error is exactly one.
        let x = DMatrix::from_element(100, 1, 1.0);
        let f: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let trained = train_readout(&x, &f).unwrap();
        assert_relative_eq!(trained.weights[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(trained.train_nrmse, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn duplicate_columns_get_minimum_norm_split() {
        let u = ramp(50);
        let x = DMatrix::from_fn(50, 2, |i, _| u[i]);
        let trained = train_readout(&x, &u).unwrap();
        assert_relative_eq!(trained.weights[0], 0.5, epsilon = 1e-10);
        assert_relative_eq!(trained.weights[1], 0.5, epsilon = 1e-10);
        assert!(trained.train_nrmse < 1e-10);
    }

    #[test]
    fn noise_std_follows_measurement_count_and_angle() {
        let plain = NoiseSpec {
            n_measurements: 1e10,
            wmp_angle: None,
        };
        assert_relative_eq!(plain.std().unwrap(), 1e-5, epsilon = 1e-18);
        let weak = NoiseSpec {
            n_measurements: 1e10,
            wmp_angle: Some(0.1),
        };
        assert_relative_eq!(weak.std().unwrap(), 1e-5 / 0.1f64.sin(), epsilon = 1e-15);
        let degenerate = NoiseSpec {
            n_measurements: 1e10,
            wmp_angle: Some(0.0),
        };
        assert!(matches!(
            degenerate.std(),
            Err(Error::InfiniteNoiseVariance)
        ));
    }

    #[test]
    fn shot_noise_is_deterministic_per_stream() {
        let mut a = ReadoutTrace::with_capacity(3, 2);
        a.push_row(&[0.1, 0.2, 0.3]);
        a.push_row(&[0.4, 0.5, 0.6]);
        let mut b = a.clone();
        let spec = NoiseSpec::default();
        add_shot_noise(&mut a, &spec, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        add_shot_noise(&mut b, &spec, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert!(a.as_slice().iter().zip([0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).any(|(x, y)| x != &y));
        let max_shift = a
            .as_slice()
            .iter()
            .zip([0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        assert!(max_shift < 1e-3, "noise far larger than its std");
    }

    #[test]
    fn nrmse_affine_invariance_and_errors() {
        let f = ramp(64);
        let p: Vec<f64> = f.iter().map(|&v| v + 0.1).collect();
        let base = nrmse(&p, &f).unwrap();
        let fa: Vec<f64> = f.iter().map(|&v| -3.0 * v + 7.0).collect();
        let pa: Vec<f64> = p.iter().map(|&v| -3.0 * v + 7.0).collect();
        assert_relative_eq!(nrmse(&pa, &fa).unwrap(), base, epsilon = 1e-12);
        assert!(matches!(
            nrmse(&[1.0, 1.0], &[2.0, 2.0]),
            Err(Error::ConstantTarget)
        ));
        assert!(nrmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn batch_solve_matches_single_solves() {
        let u = ramp(80);
        let x = DMatrix::from_fn(80, 3, |i, j| u[i].powi(j as i32 + 1));
        let solver = ReadoutSolver::new(&x).unwrap();
        let targets = DMatrix::from_fn(80, 2, |i, j| {
            if j == 0 {
                u[i] * 2.0
            } else {
                u[i] * u[i] - 0.3 * u[i]
            }
        });
        let batch = solver.solve_batch(&targets).unwrap();
        for j in 0..2 {
            let single = solver.solve(&DVector::from_column_slice(targets.column(j).as_slice())).unwrap();
            for i in 0..3 {
                assert_relative_eq!(batch[(i, j)], single[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ridge_shrinks_toward_normal_equation_closed_form() {
        // Single column: w = x.f / (x.x + lambda).
        let u = ramp(120);
        let x = DMatrix::from_fn(120, 1, |i, _| u[i]);
        let f: Vec<f64> = u.iter().map(|&v| 3.0 * v).collect();
        let xx: f64 = u.iter().map(|&v| v * v).sum();
        let xf: f64 = u.iter().zip(&f).map(|(&a, &b)| a * b).sum();
        for lambda in [0.0, 0.5, 10.0] {
            let trained = train_readout_ridge(&x, &f, lambda).unwrap();
            assert_relative_eq!(trained.weights[0], xf / (xx + lambda), epsilon = 1e-10);
        }
        assert!(train_readout_ridge(&x, &f, -1.0).is_err());
        assert!(train_readout_ridge(&x, &f, f64::NAN).is_err());
    }

    #[test]
    fn training_on_noisy_exact_column_stays_accurate() {
        let u = ramp(2000);
        let mut trace = ReadoutTrace::with_capacity(2, 2000);
        for &v in &u {
            trace.push_row(&[v, 0.5 * v * v - 0.2]);
        }
        add_shot_noise(&mut trace, &NoiseSpec::default(), &mut ChaCha8Rng::seed_from_u64(7))
            .unwrap();
        let x = design_matrix(&trace);
        let trained = train_readout(&x, &u).unwrap();
        assert!(trained.train_nrmse <= 1e-3, "nrmse {}", trained.train_nrmse);
    }
}
