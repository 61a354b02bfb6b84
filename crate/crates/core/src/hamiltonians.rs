//! Transverse-field Ising Hamiltonians with random all-to-all couplings, and
//! the driven hopping variant used by the dissipative protocol.

use num_complex::Complex64;
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{pauli_x, pauli_y, pauli_z, sigma_minus, sigma_plus, site_operator, CMatrix};

/// Transverse-field Ising spec: `H = (h/2) sum_i sigma_z^(i)
/// + sum_{i<j} J_ij sigma_x^(i) sigma_x^(j)` with `J_ij ~ U([j_low, j_high])`,
/// optionally rescaled to unit spectral radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfimSpec {
    pub n_sites: usize,
    /// Transverse field strength.
    pub h: f64,
    pub j_low: f64,
    pub j_high: f64,
    /// Rescale so the spectral radius equals one.
    pub normalize: bool,
}

impl Default for TfimSpec {
    fn default() -> Self {
        Self {
            n_sites: 4,
            h: 1.0,
            j_low: 0.0,
            j_high: 1.0,
            normalize: true,
        }
    }
}

/// Driven hopping spec: `H(s) = sum_{i<j} J_ij (sigma_+^(i) sigma_-^(j)
/// + sigma_-^(i) sigma_+^(j)) + s * sigma_y^(0)` with the drive amplitude `s`
/// supplied per input step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivenTfimSpec {
    pub n_sites: usize,
    pub j_low: f64,
    pub j_high: f64,
}

impl Default for DrivenTfimSpec {
    fn default() -> Self {
        Self {
            n_sites: 4,
            j_low: 0.0,
            j_high: 1.0,
        }
    }
}

/// Number of unordered site pairs, i.e. the length of a coupling vector.
pub fn n_pairs(n_sites: usize) -> usize {
    n_sites * (n_sites - 1) / 2
}

/// Draws i.i.d. uniform couplings for every pair `i < j`, ordered
/// `(0,1), (0,2), ..., (0,n-1), (1,2), ...`.
pub fn sample_couplings<R: Rng>(n_sites: usize, low: f64, high: f64, rng: &mut R) -> Vec<f64> {
    (0..n_pairs(n_sites))
        .map(|_| rng.random_range(low..=high))
        .collect()
}

fn check_couplings(n_sites: usize, couplings: &[f64]) -> Result<()> {
    if n_sites == 0 {
        return Err(Error::InvalidConfig("n_sites must be at least 1".into()));
    }
    if couplings.len() != n_pairs(n_sites) {
        return Err(Error::DimensionMismatch {
            context: "coupling vector",
            expected: n_pairs(n_sites),
            got: couplings.len(),
        });
    }
    Ok(())
}

/// Iterates pairs `(i, j)` with `i < j` in coupling-vector order.
pub fn pair_indices(n_sites: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n_sites).flat_map(move |i| (i + 1..n_sites).map(move |j| (i, j)))
}

/// Largest eigenvalue magnitude of a Hermitian matrix.
pub fn spectral_radius(h: &CMatrix) -> f64 {
    let eig = h.clone().symmetric_eigen();
    eig.eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()))
}

/// Builds the Ising Hamiltonian for the given couplings. With
/// `spec.normalize` the matrix is rescaled to unit spectral radius; a zero
/// Hamiltonian cannot be normalized and is reported as an error.
pub fn build_tfim(spec: &TfimSpec, couplings: &[f64]) -> Result<CMatrix> {
    check_couplings(spec.n_sites, couplings)?;
    let n = spec.n_sites;
    let dim = 1usize << n;
    let mut h = CMatrix::zeros(dim, dim);
    let z = pauli_z();
    for i in 0..n {
        h += site_operator(&z, i, n) * Complex64::new(0.5 * spec.h, 0.0);
    }
    let x = pauli_x();
    for ((i, j), &coupling) in pair_indices(n).zip(couplings) {
        let xi = site_operator(&x, i, n);
        let xj = site_operator(&x, j, n);
        h += xi * xj * Complex64::new(coupling, 0.0);
    }
    if spec.normalize {
        let radius = spectral_radius(&h);
        if radius <= 0.0 {
            return Err(Error::InvalidConfig(
                "cannot normalize a zero Hamiltonian to unit spectral radius".into(),
            ));
        }
        h /= Complex64::new(radius, 0.0);
    }
    Ok(h)
}

/// Excitation-conserving hopping part of the driven Hamiltonian (drive off).
pub fn build_hopping(spec: &DrivenTfimSpec, couplings: &[f64]) -> Result<CMatrix> {
    check_couplings(spec.n_sites, couplings)?;
    let n = spec.n_sites;
    let dim = 1usize << n;
    let mut h = CMatrix::zeros(dim, dim);
    let (sp, sm) = (sigma_plus(), sigma_minus());
    for ((i, j), &coupling) in pair_indices(n).zip(couplings) {
        let hop = site_operator(&sp, i, n) * site_operator(&sm, j, n)
            + site_operator(&sm, i, n) * site_operator(&sp, j, n);
        h += hop * Complex64::new(coupling, 0.0);
    }
    Ok(h)
}

/// Drive operator `sigma_y` on the input site.
pub fn drive_operator(n_sites: usize) -> CMatrix {
    site_operator(&pauli_y(), 0, n_sites)
}

/// Full driven Hamiltonian at drive amplitude `s`.
pub fn build_driven_tfim(spec: &DrivenTfimSpec, couplings: &[f64], s: f64) -> Result<CMatrix> {
    let mut h = build_hopping(spec, couplings)?;
    h += drive_operator(spec.n_sites) * Complex64::new(s, 0.0);
    Ok(h)
}
