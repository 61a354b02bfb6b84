//! Dense complex linear algebra for small spin networks: states, operators,
//! tensor products, partial traces, and Hamiltonian propagators.
//!
//! Basis convention: site 0 is the most significant tensor factor, so a basis
//! index `b` of an `n`-site register assigns site `i` the bit
//! `(b >> (n - 1 - i)) & 1`, with bit value 0 meaning spin-up (`<sigma_z> = +1`).
//! The input qubit of the reservoir protocols is site 0.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix used for states and operators.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector.
pub type CVector = DVector<Complex64>;

/// Allowed deviation of a density-matrix trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Allowed Hermiticity defect `max |A_ij - conj(A_ji)|`.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Allowed magnitude of a negative density-matrix eigenvalue.
pub const POSITIVITY_TOL: f64 = 1e-9;
/// Allowed deviation of a propagator from unitarity.
pub const UNITARITY_TOL: f64 = 1e-9;
/// Allowed imaginary part of an expectation value of a Hermitian observable.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// 2x2 identity.
pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Pauli X.
pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

/// Pauli Y.
pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

/// Pauli Z.
pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Raising operator `|1><0|` (creates an excitation; `|1>` has `<sigma_z> = -1`).
pub fn sigma_plus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO])
}

/// Lowering operator `|0><1|` (decays toward `|0>`, `<sigma_z> = +1`).
pub fn sigma_minus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

/// Kronecker product `a (x) b`; output dimensions are the products of the inputs'.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Embeds a single-site operator at `site` of an `n_sites` register
/// (identities elsewhere). Site 0 is the most significant factor.
pub fn site_operator(op: &CMatrix, site: usize, n_sites: usize) -> CMatrix {
    assert!(site < n_sites, "site {site} out of range for {n_sites} sites");
    let mut out = CMatrix::identity(1, 1);
    for i in 0..n_sites {
        if i == site {
            out = out.kronecker(op);
        } else {
            out = out.kronecker(&CMatrix::identity(2, 2));
        }
    }
    out
}

/// Maximum elementwise Hermiticity defect `max |A_ij - conj(A_ji)|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut defect: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    defect
}

/// Maximum elementwise deviation of `U^H U` from the identity.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let gram = u.adjoint() * u;
    let mut defect: f64 = 0.0;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { ONE } else { ZERO };
            defect = defect.max((gram[(i, j)] - target).norm());
        }
    }
    defect
}

/// Traces out the leading two-dimensional tensor factor of a `2d x 2d` matrix,
/// returning the `d x d` reduced matrix.
pub fn partial_trace_first(rho: &CMatrix) -> Result<CMatrix> {
    let dim = rho.nrows();
    if rho.ncols() != dim {
        return Err(Error::DimensionMismatch {
            context: "partial_trace_first (square)",
            expected: dim,
            got: rho.ncols(),
        });
    }
    if dim % 2 != 0 || dim == 0 {
        return Err(Error::DimensionMismatch {
            context: "partial_trace_first (even dimension)",
            expected: dim.max(2) / 2 * 2,
            got: dim,
        });
    }
    let half = dim / 2;
    let mut out = CMatrix::zeros(half, half);
    for i in 0..half {
        for j in 0..half {
            out[(i, j)] = rho[(i, j)] + rho[(half + i, half + j)];
        }
    }
    Ok(out)
}

/// Computes `Tr[rho * obs]` for a Hermitian observable and returns the real
/// part; errors if the imaginary part exceeds tolerance.
pub fn expectation(rho: &CMatrix, obs: &CMatrix) -> Result<f64> {
    if rho.nrows() != obs.nrows() || rho.ncols() != obs.ncols() {
        return Err(Error::DimensionMismatch {
            context: "expectation",
            expected: rho.nrows(),
            got: obs.nrows(),
        });
    }
    let mut tr = ZERO;
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            tr += rho[(i, j)] * obs[(j, i)];
        }
    }
    if tr.im.abs() > EXPECTATION_IMAG_TOL {
        return Err(Error::ComplexExpectation {
            imag: tr.im,
            tol: EXPECTATION_IMAG_TOL,
        });
    }
    Ok(tr.re)
}

/// Propagator `U = exp(-i H t)` via Hermitian eigendecomposition (exact at
/// these dimensions). Errors if `H` is not Hermitian or the result drifts from
/// unitarity.
pub fn unitary_from_hamiltonian(h: &CMatrix, t: f64) -> Result<CMatrix> {
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) || !t.is_finite() {
        return Err(Error::NonFinite {
            context: "hamiltonian or evolution time",
        });
    }
    let defect = hermiticity_defect(h);
    if defect > HERMITICITY_TOL {
        return Err(Error::NotHermitian {
            defect,
            tol: HERMITICITY_TOL,
        });
    }
    let eig = h.clone().symmetric_eigen();
    let dim = h.nrows();
    let mut phased = eig.eigenvectors.clone();
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda * t);
        for r in 0..dim {
            phased[(r, k)] *= phase;
        }
    }
    let u = phased * eig.eigenvectors.adjoint();
    let u_defect = unitarity_defect(&u);
    if u_defect > UNITARITY_TOL {
        return Err(Error::NotUnitary {
            defect: u_defect,
            tol: UNITARITY_TOL,
        });
    }
    Ok(u)
}

/// Single-qubit input encoding: the pure state
/// `sqrt((1+u)/2) |0> + sqrt((1-u)/2) |1>`, whose `<sigma_z>` equals `u`.
pub fn encode_input(u: f64) -> Result<CMatrix> {
    if !(-1.0..=1.0).contains(&u) || !u.is_finite() {
        return Err(Error::InputOutOfRange { value: u });
    }
    let a = ((1.0 + u) / 2.0).sqrt();
    let b = ((1.0 - u) / 2.0).sqrt();
    let mut rho = CMatrix::zeros(2, 2);
    rho[(0, 0)] = Complex64::new(a * a, 0.0);
    rho[(0, 1)] = Complex64::new(a * b, 0.0);
    rho[(1, 0)] = Complex64::new(a * b, 0.0);
    rho[(1, 1)] = Complex64::new(b * b, 0.0);
    Ok(rho)
}

/// One reservoir update: replaces the input qubit with the encoding of `u`
/// and conjugates by the cycle propagator,
/// `U (rho_1(u) (x) Tr_1[rho]) U^H`.
pub fn inject_and_evolve(rho: &CMatrix, u: f64, unitary: &CMatrix) -> Result<CMatrix> {
    let injected = tensor_product(&encode_input(u)?, &partial_trace_first(rho)?);
    if injected.nrows() != unitary.nrows() {
        return Err(Error::DimensionMismatch {
            context: "inject_and_evolve",
            expected: unitary.nrows(),
            got: injected.nrows(),
        });
    }
    Ok(unitary * injected * unitary.adjoint())
}

/// Validated density matrix: unit trace, Hermitian, positive semidefinite
/// within fixed tolerances. Violations are reported as errors, never clipped.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn try_new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                context: "DensityMatrix (square, nonempty)",
                expected: mat.nrows().max(1),
                got: mat.ncols(),
            });
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "density matrix entries",
            });
        }
        let tr: Complex64 = mat.diagonal().iter().sum();
        let deviation = (tr - ONE).norm();
        if deviation > TRACE_TOL {
            return Err(Error::TraceNotOne {
                deviation,
                tol: TRACE_TOL,
            });
        }
        let defect = hermiticity_defect(&mat);
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                defect,
                tol: HERMITICITY_TOL,
            });
        }
        let min_eig = min_eigenvalue(&mat);
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::NotPositiveSemidefinite {
                eigenvalue: min_eig,
                tol: POSITIVITY_TOL,
            });
        }
        Ok(Self { mat })
    }

    /// Pure product state `|0...0><0...0|` on `n_sites` qubits.
    pub fn ground_state(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        let mut mat = CMatrix::zeros(dim, dim);
        mat[(0, 0)] = ONE;
        Self { mat }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

/// Smallest eigenvalue of a (near-)Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Per-site `sigma_z` diagonal signs for fast readout of `<sigma_z^(i)>`
/// from a density matrix's diagonal.
#[derive(Debug, Clone)]
pub struct QubitLayout {
    n_sites: usize,
    /// `z_signs[site][basis_index]` = +1.0 or -1.0.
    z_signs: Vec<Vec<f64>>,
}

impl QubitLayout {
    pub fn new(n_sites: usize) -> Self {
        assert!(n_sites >= 1, "need at least one site");
        let dim = 1usize << n_sites;
        let z_signs = (0..n_sites)
            .map(|site| {
                (0..dim)
                    .map(|b| {
                        if (b >> (n_sites - 1 - site)) & 1 == 0 {
                            1.0
                        } else {
                            -1.0
                        }
                    })
                    .collect()
            })
            .collect();
        Self { n_sites, z_signs }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    /// `<sigma_z^(site)>` read off the diagonal of `rho`.
    pub fn z_expectation(&self, rho: &CMatrix, site: usize) -> f64 {
        let signs = &self.z_signs[site];
        let mut val = 0.0;
        for (b, sign) in signs.iter().enumerate() {
            val += sign * rho[(b, b)].re;
        }
        val
    }
}
