//! Cross-checks of the linear-algebra core against independent oracles:
//! a Taylor-series matrix exponential, a projector-form partial trace, and
//! a column-stacked Lindblad superoperator.

mod common;

use common::{
    exact_lindblad_step, expm, liouvillian, random_density, random_hermitian, test_rng, unvec_state,
    vec_state,
};
use nalgebra::Complex;
use qrc_core::protocols::lindblad_rhs;
use qrc_core::quantum::{
    identity, partial_trace_first, tensor_product, unitary_from_hamiltonian, CMatrix,
};
use rand::RngExt;

type C64 = Complex<f64>;

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[test]
fn oracle_exponential_matches_closed_forms() {
    // exp(0) = I.
    let zero = CMatrix::zeros(3, 3);
    assert!(max_abs_diff(&expm(&zero), &identity(3)) < 1e-15);

    // Diagonal matrices exponentiate entrywise.
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(0.3, -1.2),
        C64::new(-2.0, 0.7),
    ]));
    let expected = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(0.3, -1.2).exp(),
        C64::new(-2.0, 0.7).exp(),
    ]));
    assert!(max_abs_diff(&expm(&d), &expected) < 1e-14);

    // Real antisymmetric generator gives a plane rotation.
    let theta = 1.234f64;
    let g = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(-theta, 0.0),
            C64::new(theta, 0.0),
            C64::new(0.0, 0.0),
        ],
    );
    let rot = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(theta.cos(), 0.0),
            C64::new(-theta.sin(), 0.0),
            C64::new(theta.sin(), 0.0),
            C64::new(theta.cos(), 0.0),
        ],
    );
    assert!(max_abs_diff(&expm(&g), &rot) < 1e-14);
}

#[test]
fn library_unitary_matches_oracle_exponential() {
    let mut rng = test_rng(11);
    for dim in [2usize, 4, 8, 16] {
        for _ in 0..3 {
            let h = random_hermitian(dim, &mut rng);
            let t = rng.random_range(0.1..5.0);
            let lib = unitary_from_hamiltonian(&h, t).unwrap();
            let gen = h.map(|c| C64::new(0.0, -t) * c);
            let oracle = expm(&gen);
            assert!(
                max_abs_diff(&lib, &oracle) < 1e-12,
                "dim {dim}: unitary disagrees with series exponential"
            );
        }
    }
}

#[test]
fn partial_trace_matches_projector_oracle() {
    let mut rng = test_rng(12);
    for n_sites in [2usize, 3, 4] {
        let dim = 1usize << n_sites;
        let half = dim / 2;
        let rho = random_density(dim, &mut rng);

        // <a| x I rho |a> x I summed over the first-qubit basis.
        let id_rest = identity(half);
        let mut reduced = CMatrix::zeros(half, half);
        for a in 0..2usize {
            let mut basis = CMatrix::zeros(1, 2);
            basis[(0, a)] = C64::new(1.0, 0.0);
            let bra = tensor_product(&basis, &id_rest);
            reduced += &bra * &rho * bra.adjoint();
        }

        let lib = partial_trace_first(&rho).unwrap();
        assert!(max_abs_diff(&lib, &reduced) < 1e-13);
    }
}

#[test]
fn lindblad_rhs_matches_superoperator_matrix() {
    let mut rng = test_rng(13);
    for n_sites in [1usize, 2, 3] {
        let dim = 1usize << n_sites;
        let h = random_hermitian(dim, &mut rng);
        let gamma = 0.37;
        let l = liouvillian(&h, n_sites, gamma);
        for _ in 0..4 {
            let rho = random_density(dim, &mut rng);
            let direct = lindblad_rhs(&rho, &h, gamma).unwrap();
            let via_matrix = unvec_state(&(&l * vec_state(&rho)), dim);
            assert!(
                max_abs_diff(&direct, &via_matrix) < 1e-12,
                "n_sites {n_sites}: right-hand side disagrees with superoperator"
            );
        }
    }
}

#[test]
fn zero_decay_propagation_is_unitary_conjugation() {
    let mut rng = test_rng(14);
    let n_sites = 2;
    let dim = 4;
    let h = random_hermitian(dim, &mut rng);
    let rho = random_density(dim, &mut rng);
    let t = 0.9;
    let propagated = exact_lindblad_step(&h, n_sites, 0.0, &rho, t);
    let u = unitary_from_hamiltonian(&h, t).unwrap();
    let conjugated = &u * &rho * u.adjoint();
    assert!(max_abs_diff(&propagated, &conjugated) < 1e-11);
}

#[test]
fn single_site_decay_has_exponential_closed_form() {
    let mut rng = test_rng(15);
    let h = CMatrix::zeros(2, 2);
    let gamma = 0.8;
    let t = 1.7;
    let rho = random_density(2, &mut rng);
    let out = exact_lindblad_step(&h, 1, gamma, &rho, t);

    // sigma_minus decay toward |0>: excited population shrinks by e^{-gamma t},
    // coherences by e^{-gamma t / 2}.
    let decay = (-gamma * t).exp();
    let half_decay = (-0.5 * gamma * t).exp();
    assert!((out[(1, 1)].re - rho[(1, 1)].re * decay).abs() < 1e-12);
    assert!((out[(0, 0)].re - (1.0 - rho[(1, 1)].re * decay)).abs() < 1e-12);
    assert!((out[(0, 1)] - rho[(0, 1)] * C64::new(half_decay, 0.0)).norm() < 1e-12);
}
