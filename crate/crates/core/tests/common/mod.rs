//! Shared oracle machinery for integration tests: an independent dense
//! matrix exponential and a column-stacked Liouvillian, so protocol output
//! can be checked against exact superoperator propagation.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};
use qrc_core::quantum::{site_operator, sigma_minus, tensor_product, CMatrix};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C64 = Complex<f64>;

pub fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense matrix exponential by scaling and squaring with a Taylor series on
/// the scaled matrix. Independent of the eigendecomposition path used in
/// the library.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let norm = one_norm(a);
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scale = C64::new(2f64.powi(squarings as i32), 0.0);
    let scaled = a.map(|c| c / scale);
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for j in 1..=80u64 {
        term = (&term * &scaled) / C64::new(j as f64, 0.0);
        sum += &term;
        if max_abs(&term) < 1e-22 {
            break;
        }
    }
    let mut result = sum;
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Column-stacks a matrix: `vec(X)[j*d + i] = X[i, j]`.
pub fn vec_state(x: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(x.as_slice())
}

/// Inverse of [`vec_state`].
pub fn unvec_state(v: &DVector<C64>, dim: usize) -> CMatrix {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// Lindblad generator as a `d^2 x d^2` matrix acting on column-stacked
/// states, built from the identity `vec(A X B) = (B^T (x) A) vec(X)`.
pub fn liouvillian(h: &CMatrix, n_sites: usize, gamma: f64) -> CMatrix {
    let d = h.nrows();
    assert_eq!(d, 1usize << n_sites);
    let id = CMatrix::identity(d, d);
    let i = C64::new(0.0, 1.0);
    let mut l = tensor_product(&id, h).map(|c| -i * c)
        + tensor_product(&h.transpose(), &id).map(|c| i * c);
    for site in 0..n_sites {
        let lower = site_operator(&sigma_minus(), site, n_sites);
        let raise = lower.adjoint();
        let number = &raise * &lower;
        let jump = tensor_product(&raise.transpose(), &lower);
        let anti = tensor_product(&id, &number) + tensor_product(&number.transpose(), &id);
        l += (jump - anti.map(|c| 0.5 * c)).map(|c| gamma * c);
    }
    l
}

/// Exact Lindblad propagation of `rho` over time `t` under constant `h`.
pub fn exact_lindblad_step(
    h: &CMatrix,
    n_sites: usize,
    gamma: f64,
    rho: &CMatrix,
    t: f64,
) -> CMatrix {
    let l = liouvillian(h, n_sites, gamma);
    let propagator = expm(&l.map(|c| c * C64::new(t, 0.0)));
    unvec_state(&(propagator * vec_state(rho)), h.nrows())
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&a + a.adjoint()).map(|c| 0.5 * c)
}

/// Random full-rank density matrix (Gram matrix, trace-normalized).
pub fn random_density<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let g = &a * a.adjoint();
    let trace = g.trace().re;
    g.map(|c| c / C64::new(trace, 0.0))
}

/// One RK4 step of the Lorenz-63 field. Chaos amplifies even one-ulp
/// rounding differences beyond recognition over long horizons, so the stage
/// arithmetic keeps the exact evaluation order of the library integrator;
/// replication checks then verify bookkeeping bit-for-bit, and step-halving
/// checks carry the numerical validation.
pub fn lorenz_rk4_oracle(sigma: f64, rho: f64, beta: f64, s: [f64; 3], dt: f64) -> [f64; 3] {
    let f = |[x, y, z]: [f64; 3]| -> [f64; 3] {
        [sigma * (y - x), x * (rho - z) - y, x * y - beta * z]
    };
    let shift = |s: [f64; 3], k: [f64; 3], c: f64| [s[0] + c * k[0], s[1] + c * k[1], s[2] + c * k[2]];
    let k1 = f(s);
    let k2 = f(shift(s, k1, dt / 2.0));
    let k3 = f(shift(s, k2, dt / 2.0));
    let k4 = f(shift(s, k3, dt));
    let mut out = s;
    for i in 0..3 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Four-point Lagrange interpolation on a uniform grid; `pos` is in grid
/// units and must sit at least one node from each end.
fn cubic_at(grid: &[f64], pos: f64) -> f64 {
    let i = pos.floor() as usize;
    let t = pos - i as f64;
    if t == 0.0 {
        return grid[i];
    }
    let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    grid[i - 1] * w0 + grid[i] * w1 + grid[i + 1] * w2 + grid[i + 2] * w3
}

/// Mackey-Glass integration that keeps the whole step-resolution
/// trajectory: `out[i]` is x at time `i * dt`, starting from the constant
/// history. Follows the library's conventions (and evaluation order, for the
/// same bit-reproducibility reason as [`lorenz_rk4_oracle`]): delayed values
/// at sub-stage times come from linear interpolation of the history.
pub fn mg_grid_oracle(
    beta: f64,
    gamma: f64,
    exponent: i32,
    history: f64,
    dt: f64,
    delay_steps: usize,
    total_steps: usize,
) -> Vec<f64> {
    let mut grid = Vec::with_capacity(total_steps + 1);
    grid.push(history);
    let rhs = |x: f64, xd: f64| beta * xd / (1.0 + xd.powi(exponent)) - gamma * x;
    for step in 0..total_steps {
        let lookup = |off: f64| -> f64 {
            let p = step as f64 + off - delay_steps as f64;
            if p <= 0.0 {
                return history;
            }
            let i = p.floor() as usize;
            let frac = p - i as f64;
            if frac == 0.0 {
                grid[i]
            } else {
                grid[i] * (1.0 - frac) + grid[i + 1] * frac
            }
        };
        let x = grid[step];
        let (d0, dh, d1) = (lookup(0.0), lookup(0.5), lookup(1.0));
        let k1 = rhs(x, d0);
        let k2 = rhs(x + 0.5 * dt * k1, dh);
        let k3 = rhs(x + 0.5 * dt * k2, dh);
        let k4 = rhs(x + dt * k3, d1);
        grid.push(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    grid
}

/// Re-integrates one sampling interval of a Mackey-Glass trajectory at half
/// the step size, starting from the on-grid anchor `grid[start]`.
///
/// The delayed term reaches `tau` into the past, so the whole window reads
/// already-computed history. A half-step-resolution copy of that history is
/// synthesized once by cubic interpolation (error far below the schemes being
/// compared), and the half-step integration then applies its own linear
/// interpolation to it, matching what a genuine half-step run would do.
pub fn mg_halved_interval_oracle(
    beta: f64,
    gamma: f64,
    exponent: i32,
    dt: f64,
    delay_steps: usize,
    grid: &[f64],
    start: usize,
    stride: usize,
) -> f64 {
    assert!(start >= delay_steps + 2 && stride + 2 < delay_steps);
    let past: Vec<f64> = (0..=2 * stride)
        .map(|j| cubic_at(grid, (start - delay_steps) as f64 + j as f64 / 2.0))
        .collect();
    let h = dt / 2.0;
    let rhs = |x: f64, xd: f64| beta * xd / (1.0 + xd.powi(exponent)) - gamma * x;
    let mut x = grid[start];
    for j in 0..2 * stride {
        let lookup = |off: f64| -> f64 {
            let p = j as f64 + off;
            let i = p.floor() as usize;
            let frac = p - i as f64;
            if frac == 0.0 {
                past[i]
            } else {
                past[i] * (1.0 - frac) + past[i + 1] * frac
            }
        };
        let k1 = rhs(x, lookup(0.0));
        let k2 = rhs(x + 0.5 * h * k1, lookup(0.5));
        let k3 = rhs(x + 0.5 * h * k2, lookup(0.5));
        let k4 = rhs(x + h * k3, lookup(1.0));
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x
}
