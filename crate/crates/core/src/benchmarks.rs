//! Benchmark time series (Lorenz-63, Mackey-Glass) and one-step task
//! packaging with inputs scaled into the encoder's [-1, 1] domain.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::RngExt;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Lorenz-63 generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzSpec {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    /// Integrator step; must divide `sample_interval`.
    pub dt: f64,
    pub sample_interval: f64,
    /// Time units discarded before the first sample.
    pub transient: f64,
    pub initial: [f64; 3],
    /// Seeds a small uniform jitter of the initial state; `None` starts
    /// exactly at `initial` (useful for equilibrium checks).
    pub seed: Option<u64>,
}

impl Default for LorenzSpec {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            dt: 1e-3,
            sample_interval: 0.1,
            transient: 100.0,
            initial: [1.0, 1.0, 1.0],
            seed: None,
        }
    }
}

/// Mackey-Glass generation parameters for
/// `dx/dt = beta x(t - tau) / (1 + x(t - tau)^n) - gamma x(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MackeyGlassSpec {
    pub beta: f64,
    pub gamma: f64,
    pub exponent: i32,
    pub tau: f64,
    /// Integrator step; `tau` and `sample_interval` must be multiples.
    pub dt: f64,
    pub sample_interval: f64,
    /// Value of the constant history on t <= 0.
    pub history: f64,
    pub transient: f64,
}

impl Default for MackeyGlassSpec {
    fn default() -> Self {
        Self {
            beta: 0.2,
            gamma: 0.1,
            exponent: 10,
            tau: 18.0,
            dt: 0.1,
            sample_interval: 3.0,
            history: 1.2,
            transient: 1000.0,
        }
    }
}

/// Checks that `numer / denom` is an integer within rounding slop and
/// returns it.
fn integral_ratio(numer: f64, denom: f64, context: &str) -> Result<usize> {
    if !(denom > 0.0) || !numer.is_finite() || numer < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "{context}: need finite nonnegative ratio, got {numer}/{denom}"
        )));
    }
    let ratio = numer / denom;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "{context}: {numer} is not an integer multiple of {denom}"
        )));
    }
    Ok(rounded as usize)
}

impl LorenzSpec {
    pub fn validate(&self) -> Result<()> {
        integral_ratio(self.sample_interval, self.dt, "lorenz sample interval")?;
        integral_ratio(self.transient, self.dt, "lorenz transient")?;
        Ok(())
    }
}

impl MackeyGlassSpec {
    pub fn validate(&self) -> Result<()> {
        integral_ratio(self.tau, self.dt, "mackey-glass delay")?;
        integral_ratio(self.sample_interval, self.dt, "mackey-glass sample interval")?;
        integral_ratio(self.transient, self.dt, "mackey-glass transient")?;
        if self.exponent < 1 {
            return Err(Error::InvalidConfig(
                "mackey-glass exponent must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Lorenz-63 vector field.
pub fn lorenz_derivative(spec: &LorenzSpec, s: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = s;
    [
        spec.sigma * (y - x),
        x * (spec.rho - z) - y,
        x * y - spec.beta * z,
    ]
}

fn rk4_lorenz(spec: &LorenzSpec, s: [f64; 3], dt: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
    let k1 = lorenz_derivative(spec, s);
    let k2 = lorenz_derivative(spec, add(s, k1, dt / 2.0));
    let k3 = lorenz_derivative(spec, add(s, k2, dt / 2.0));
    let k4 = lorenz_derivative(spec, add(s, k3, dt));
    [
        s[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        s[2] + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

fn jitter_seed_bytes(seed: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"lorenz-initial-jitter");
    h.update(seed.to_le_bytes());
    h.finalize().into()
}

/// Fixed-step RK4 integration of Lorenz-63, sampled every
/// `sample_interval` after the transient.
pub fn integrate_lorenz(spec: &LorenzSpec, n_samples: usize) -> Result<Vec<[f64; 3]>> {
    spec.validate()?;
    let stride = integral_ratio(spec.sample_interval, spec.dt, "lorenz sample interval")?;
    let transient_steps = integral_ratio(spec.transient, spec.dt, "lorenz transient")?;
    let mut s = spec.initial;
    if let Some(seed) = spec.seed {
        let mut rng = ChaCha8Rng::from_seed(jitter_seed_bytes(seed));
        for v in &mut s {
            *v += rng.random_range(-0.5..=0.5);
        }
    }
    for _ in 0..transient_steps {
        s = rk4_lorenz(spec, s, spec.dt);
    }
    let mut out = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        out.push(s);
        if !s.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "lorenz integration",
            });
        }
        if i + 1 < n_samples {
            for _ in 0..stride {
                s = rk4_lorenz(spec, s, spec.dt);
            }
        }
    }
    Ok(out)
}

/// Fixed-step RK4 for the Mackey-Glass delay equation; the delayed value at
/// sub-stage times comes from linear interpolation of the step-resolution
/// history.
pub fn integrate_mackey_glass(spec: &MackeyGlassSpec, n_samples: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    let stride = integral_ratio(spec.sample_interval, spec.dt, "mackey-glass sample interval")?;
    let delay_steps = integral_ratio(spec.tau, spec.dt, "mackey-glass delay")?;
    let transient_steps = integral_ratio(spec.transient, spec.dt, "mackey-glass transient")?;
    let total_steps = transient_steps + (n_samples.max(1) - 1) * stride;

    // hist[i] is x at time i * dt; history before t = 0 is the constant.
    let mut hist: Vec<f64> = Vec::with_capacity(total_steps + 1);
    hist.push(spec.history);
    let delayed = |hist: &[f64], step_offset: f64| -> f64 {
        // x at time (current index + step_offset - delay_steps) * dt.
        let s = hist.len() as f64 - 1.0 + step_offset - delay_steps as f64;
        if s <= 0.0 {
            return spec.history;
        }
        let i = s.floor() as usize;
        let frac = s - i as f64;
        if frac == 0.0 {
            hist[i]
        } else {
            hist[i] * (1.0 - frac) + hist[i + 1] * frac
        }
    };
    let rhs = |x: f64, xd: f64| -> f64 {
        spec.beta * xd / (1.0 + xd.powi(spec.exponent)) - spec.gamma * x
    };
    for _ in 0..total_steps {
        let x = *hist.last().unwrap();
        let xd0 = delayed(&hist, 0.0);
        let xd_half = delayed(&hist, 0.5);
        let xd1 = delayed(&hist, 1.0);
        let k1 = rhs(x, xd0);
        let k2 = rhs(x + 0.5 * spec.dt * k1, xd_half);
        let k3 = rhs(x + 0.5 * spec.dt * k2, xd_half);
        let k4 = rhs(x + spec.dt * k3, xd1);
        let next = x + spec.dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() {
            return Err(Error::NonFinite {
                context: "mackey-glass integration",
            });
        }
        hist.push(next);
    }
    Ok((0..n_samples)
        .map(|i| hist[transient_steps + i * stride])
        .collect())
}

/// The three one-step benchmark tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Lorenz x predicts the next x sample.
    Lxx,
    /// Lorenz x infers the simultaneous z sample.
    Lxz,
    /// Mackey-Glass x predicts the next sample.
    Mg,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Lxx => "lxx",
            TaskKind::Lxz => "lxz",
            TaskKind::Mg => "mg",
        })
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lxx" => Ok(TaskKind::Lxx),
            "lxz" => Ok(TaskKind::Lxz),
            "mg" => Ok(TaskKind::Mg),
            other => Err(Error::InvalidConfig(format!(
                "unknown task {other:?}; expected lxx, lxz, or mg"
            ))),
        }
    }
}

/// Source series for task packaging.
#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Lorenz(Vec<[f64; 3]>),
    MackeyGlass(Vec<f64>),
}

/// Scaled inputs plus original-unit targets for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDataset {
    pub kind: TaskKind,
    /// Scaled inputs, training block then test block.
    pub inputs: Vec<f64>,
    /// Aligned targets in original units.
    pub targets: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    /// Input extrema of the training block used for scaling.
    pub scale_min: f64,
    pub scale_max: f64,
    /// Test inputs that exceeded the training extrema and were clipped.
    pub n_clipped: usize,
}

impl TaskDataset {
    pub fn train_inputs(&self) -> &[f64] {
        &self.inputs[..self.n_train]
    }
    pub fn test_inputs(&self) -> &[f64] {
        &self.inputs[self.n_train..]
    }
    pub fn train_targets(&self) -> &[f64] {
        &self.targets[..self.n_train]
    }
    pub fn test_targets(&self) -> &[f64] {
        &self.targets[self.n_train..]
    }
    /// Maps an original-unit input onto [-1, 1] (without clipping).
    pub fn scale(&self, x: f64) -> f64 {
        2.0 * (x - self.scale_min) / (self.scale_max - self.scale_min) - 1.0
    }
    /// Inverse of [`scale`](Self::scale).
    pub fn unscale(&self, u: f64) -> f64 {
        self.scale_min + (u + 1.0) * (self.scale_max - self.scale_min) / 2.0
    }
}

/// Packages a series into scaled inputs and aligned targets. Next-step kinds
/// consume `n_train + n_test + 1` samples; the scaling extrema come from
/// every series value the training block touches.
pub fn make_task(series: &Series, kind: TaskKind, n_train: usize, n_test: usize) -> Result<TaskDataset> {
    let (x, targets_src, next_step): (Vec<f64>, Vec<f64>, bool) = match (series, kind) {
        (Series::Lorenz(s), TaskKind::Lxx) => {
            let x: Vec<f64> = s.iter().map(|v| v[0]).collect();
            (x.clone(), x, true)
        }
        (Series::Lorenz(s), TaskKind::Lxz) => (
            s.iter().map(|v| v[0]).collect(),
            s.iter().map(|v| v[2]).collect(),
            false,
        ),
        (Series::MackeyGlass(s), TaskKind::Mg) => (s.clone(), s.clone(), true),
        _ => {
            return Err(Error::InvalidConfig(format!(
                "task {kind} does not match the provided series type"
            )));
        }
    };
    let n = n_train + n_test;
    if n == 0 {
        return Err(Error::Empty { what: "task samples" });
    }
    let needed = if next_step { n + 1 } else { n };
    if x.len() < needed {
        return Err(Error::InvalidConfig(format!(
            "series of {} samples is shorter than the {needed} required",
            x.len()
        )));
    }

    // Training block of the raw series: inputs plus, for next-step tasks,
    // the final training target.
    let train_extent = if next_step { n_train + 1 } else { n_train };
    let block = &x[..train_extent.max(1)];
    let scale_min = block.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale_max = block.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(scale_max > scale_min) {
        return Err(Error::ConstantTarget);
    }

    let scale = |v: f64| 2.0 * (v - scale_min) / (scale_max - scale_min) - 1.0;
    let mut inputs = Vec::with_capacity(n);
    let mut n_clipped = 0usize;
    for (i, &v) in x[..n].iter().enumerate() {
        let mut u = scale(v);
        if u < -1.0 || u > 1.0 {
            if i < n_train {
                return Err(Error::InvalidConfig(
                    "training input escaped its own extrema".into(),
                ));
            }
            n_clipped += 1;
            u = u.clamp(-1.0, 1.0);
        }
        inputs.push(u);
    }
    if n_clipped > 0 {
        log::info!("clipped {n_clipped} test inputs to [-1, 1] for task {kind}");
    }
    let targets: Vec<f64> = if next_step {
        targets_src[1..=n].to_vec()
    } else {
        targets_src[..n].to_vec()
    };
    Ok(TaskDataset {
        kind,
        inputs,
        targets,
        n_train,
        n_test,
        scale_min,
        scale_max,
        n_clipped,
    })
}

/// 16-hex-character key identifying a generation request.
pub fn spec_hash<S: Serialize>(spec: &S) -> String {
    let json = serde_json::to_string(spec).expect("spec serialization cannot fail");
    let digest = Sha256::digest(json.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn format_sample(v: f64) -> String {
    // 17 significant digits round-trip f64 exactly.
    format!("{v:.16e}")
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn cache_path(dir: &Path, prefix: &str, key: &str, n_samples: usize) -> PathBuf {
    dir.join(format!("{prefix}-{key}-{n_samples}.txt"))
}

/// Loads a cached Lorenz series or generates and stores it. Lines hold the
/// three components separated by spaces.
pub fn cached_lorenz(dir: &Path, spec: &LorenzSpec, n_samples: usize) -> Result<Vec<[f64; 3]>> {
    let path = cache_path(dir, "lorenz", &spec_hash(&(spec, n_samples)), n_samples);
    if let Ok(text) = fs::read_to_string(&path) {
        let mut out = Vec::with_capacity(n_samples);
        for line in text.lines() {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidConfig(format!("corrupt cache {path:?}: {e}")))?;
            if vals.len() != 3 {
                return Err(Error::InvalidConfig(format!("corrupt cache {path:?}")));
            }
            out.push([vals[0], vals[1], vals[2]]);
        }
        if out.len() == n_samples {
            return Ok(out);
        }
        log::warn!("cache {path:?} has wrong length; regenerating");
    }
    let series = integrate_lorenz(spec, n_samples)?;
    fs::create_dir_all(dir)?;
    let mut text = String::new();
    for s in &series {
        text.push_str(&format!(
            "{} {} {}\n",
            format_sample(s[0]),
            format_sample(s[1]),
            format_sample(s[2])
        ));
    }
    write_atomic(&path, &text)?;
    Ok(series)
}

/// Loads a cached Mackey-Glass series or generates and stores it.
pub fn cached_mackey_glass(
    dir: &Path,
    spec: &MackeyGlassSpec,
    n_samples: usize,
) -> Result<Vec<f64>> {
    let path = cache_path(dir, "mg", &spec_hash(&(spec, n_samples)), n_samples);
    if let Ok(text) = fs::read_to_string(&path) {
        let out: std::result::Result<Vec<f64>, _> = text.lines().map(str::parse).collect();
        match out {
            Ok(out) if out.len() == n_samples => return Ok(out),
            Ok(_) => log::warn!("cache {path:?} has wrong length; regenerating"),
            Err(e) => {
                return Err(Error::InvalidConfig(format!("corrupt cache {path:?}: {e}")));
            }
        }
    }
    let series = integrate_mackey_glass(spec, n_samples)?;
    fs::create_dir_all(dir)?;
    let mut text = String::new();
    for &v in &series {
        text.push_str(&format_sample(v));
        text.push('\n');
    }
    write_atomic(&path, &text)?;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lorenz_equilibrium_is_stationary() {
        let root = 72.0f64.sqrt();
        let spec = LorenzSpec {
            initial: [root, root, 27.0],
            transient: 0.0,
            seed: None,
            ..Default::default()
        };
        let d = lorenz_derivative(&spec, spec.initial);
        for v in d {
            assert!(v.abs() < 1e-12);
        }
        let series = integrate_lorenz(&spec, 10).unwrap();
        for s in &series {
            for (a, b) in s.iter().zip(&spec.initial) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lorenz_sigma_term_sign() {
        let spec = LorenzSpec::default();
        let d = lorenz_derivative(&spec, [1.0, 0.0, 0.0]);
        assert_relative_eq!(d[0], -10.0, epsilon = 1e-12);
    }

    #[test]
    fn lorenz_jitter_changes_series_deterministically() {
        let base = LorenzSpec {
            transient: 1.0,
            ..Default::default()
        };
        let a = integrate_lorenz(
            &LorenzSpec {
                seed: Some(1),
                ..base.clone()
            },
            5,
        )
        .unwrap();
        let a2 = integrate_lorenz(
            &LorenzSpec {
                seed: Some(1),
                ..base.clone()
            },
            5,
        )
        .unwrap();
        let b = integrate_lorenz(
            &LorenzSpec {
                seed: Some(2),
                ..base
            },
            5,
        )
        .unwrap();
        assert_eq!(a, a2);
        assert_ne!(a, b);
    }

    #[test]
    fn mackey_glass_unit_fixed_point_is_stationary() {
        let spec = MackeyGlassSpec {
            history: 1.0,
            transient: 0.0,
            ..Default::default()
        };
        let series = integrate_mackey_glass(&spec, 100).unwrap();
        for v in series {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn mackey_glass_decay_limit_matches_exponential() {
        let spec = MackeyGlassSpec {
            beta: 0.0,
            history: 1.3,
            transient: 0.0,
            ..Default::default()
        };
        let series = integrate_mackey_glass(&spec, 50).unwrap();
        for (k, v) in series.iter().enumerate() {
            let t = k as f64 * spec.sample_interval;
            assert_relative_eq!(*v, 1.3 * (-spec.gamma * t).exp(), epsilon = 1e-8);
        }
    }

    #[test]
    fn spec_validation_rejects_incommensurate_steps() {
        let spec = LorenzSpec {
            sample_interval: 0.1001,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
        let spec = MackeyGlassSpec {
            tau: 18.05,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn make_task_scales_like_worked_example() {
        let series = Series::MackeyGlass(vec![0.0, 5.0, 10.0]);
        let task = make_task(&series, TaskKind::Mg, 2, 0).unwrap();
        assert_eq!(task.inputs, vec![-1.0, 0.0]);
        assert_eq!(task.targets, vec![5.0, 10.0]);
        assert_eq!(task.n_clipped, 0);
    }

    #[test]
    fn lxz_target_is_unscaled_z_component() {
        let series = Series::Lorenz(vec![[1.0, 0.0, 9.0], [2.0, 0.0, 8.0], [3.0, 0.0, 7.0]]);
        let task = make_task(&series, TaskKind::Lxz, 3, 0).unwrap();
        assert_eq!(task.targets, vec![9.0, 8.0, 7.0]);
        assert_eq!(task.inputs, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn scaling_round_trips() {
        let series = Series::MackeyGlass((0..50).map(|i| (i as f64 * 0.7).sin()).collect());
        let task = make_task(&series, TaskKind::Mg, 40, 9).unwrap();
        for &x in &[-0.9, -0.33, 0.0, 0.41, 0.77] {
            assert_relative_eq!(task.unscale(task.scale(x)), x, epsilon = 1e-12);
        }
    }

    #[test]
    fn test_inputs_beyond_training_extrema_are_clipped_and_counted() {
        // Training block spans [0, 4]; test values 9 and -3 fall outside.
        let series = Series::MackeyGlass(vec![0.0, 2.0, 4.0, 9.0, -3.0, 1.0]);
        let task = make_task(&series, TaskKind::Mg, 2, 3).unwrap();
        assert_eq!(task.n_clipped, 2);
        assert!(task.inputs.iter().all(|u| (-1.0..=1.0).contains(u)));
        assert_eq!(task.inputs[3], 1.0);
        assert_eq!(task.inputs[4], -1.0);
    }

    #[test]
    fn mismatched_series_and_kind_is_rejected() {
        let series = Series::MackeyGlass(vec![1.0; 10]);
        assert!(make_task(&series, TaskKind::Lxx, 4, 4).is_err());
        let constant = Series::MackeyGlass(vec![1.0; 10]);
        assert!(matches!(
            make_task(&constant, TaskKind::Mg, 4, 4),
            Err(Error::ConstantTarget)
        ));
    }

    #[test]
    fn cache_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let spec = MackeyGlassSpec {
            transient: 30.0,
            ..Default::default()
        };
        let first = cached_mackey_glass(dir.path(), &spec, 64).unwrap();
        let second = cached_mackey_glass(dir.path(), &spec, 64).unwrap();
        assert_eq!(first, second);
        let lspec = LorenzSpec {
            transient: 1.0,
            seed: Some(7),
            ..Default::default()
        };
        let a = cached_lorenz(dir.path(), &lspec, 32).unwrap();
        let b = cached_lorenz(dir.path(), &lspec, 32).unwrap();
        assert_eq!(a, b);
        // Distinct specs get distinct files.
        assert_ne!(spec_hash(&(&lspec, 32usize)), spec_hash(&(&spec, 64usize)));
    }
}
