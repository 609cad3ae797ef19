use std::sync::Arc;

use ptqm::equivalence::{
    build_cal_u, build_h, build_u, hamiltonian_matrix_rep, BundleConfig, Direction, EquivalenceBundle,
    ObservableMatrix, Pathway, Picture,
};
use ptqm::hilbert::{
    check_unitary, inner_product_plus, is_hermitian_wrt, matrix_representation, MetricConfig, MetricSpace,
    SpaceRole, StateVector,
};
use ptqm::linalg::{c, hermitian_violation, identity_deviation, max_abs, real_diag, CMat, CVec};
use ptqm::oscillator::{diagonalize_oscillator_basis, OscillatorConfig};
use ptqm::potential::PotentialSpec;
use ptqm::sampling::{random_hermitian, random_vector, random_well_conditioned, rng};
use ptqm::shooting::{default_contour, find_eigenvalues, ShootingConfig};
use ptqm::spectrum::Spectrum;
use ptqm::Error;

fn oscillator(eps: f64, n_trunc: usize, levels: Option<usize>) -> Spectrum {
    let p = PotentialSpec::standard(eps).unwrap();
    diagonalize_oscillator_basis(
        &p,
        n_trunc,
        &OscillatorConfig {
            n_levels: levels,
            ..OscillatorConfig::default()
        },
    )
    .unwrap()
}

fn random_space(n: usize, seed: u64) -> (CMat, Arc<MetricSpace>) {
    let s = random_well_conditioned(&mut rng(seed), n);
    let space = MetricSpace::from_basis(&s, SpaceRole::Physical, &MetricConfig::default()).unwrap();
    (s, Arc::new(space))
}

fn cubic_bundle() -> EquivalenceBundle {
    EquivalenceBundle::build(oscillator(1.0, 60, None), &BundleConfig::default()).unwrap()
}

#[test]
fn u_of_orthonormal_basis_is_identity() {
    let space = Arc::new(MetricSpace::from_basis(&CMat::identity(5, 5), SpaceRole::Physical, &MetricConfig::default()).unwrap());
    let u = build_u(&space).unwrap();
    assert!(identity_deviation(u.matrix()) < 1e-15);
}

#[test]
fn u_sends_basis_vectors_to_standard_sequences() {
    let (_, space) = random_space(5, 11);
    let u = build_u(&space).unwrap();
    let image = u.apply(&space.basis_vector(2)).unwrap();
    for (n, z) in image.coeffs().iter().enumerate() {
        let expected = if n == 2 { 1.0 } else { 0.0 };
        assert!((z - c(expected, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn u_preserves_norm_against_coefficient_solve() {
    let (s, space) = random_space(4, 12);
    let u = build_u(&space).unwrap();
    let psi = StateVector::ambient(random_vector(&mut rng(13), 4)).unwrap();
    // completeness oracle: Σ|⟨φₙ,ψ⟩₊|² = |S⁻¹ψ|²
    let coeffs = s.clone().lu().solve(psi.coeffs()).unwrap();
    let seq = u.apply(&psi).unwrap();
    assert!((seq.coeffs().norm() - coeffs.norm()).abs() < 1e-10 * coeffs.norm());
    let direct = inner_product_plus(&psi, &psi, &space).unwrap().re.sqrt();
    assert!((seq.coeffs().norm() - direct).abs() < 1e-10 * direct);
}

#[test]
fn both_maps_are_unitary_at_cubic_coupling() {
    let b = cubic_bundle();
    let tol = b.tolerance();
    for map in [build_u(b.space_h()).unwrap(), build_cal_u(b.space_h()).unwrap()] {
        let r = check_unitary(&map, tol, 17).unwrap();
        assert!(r.unitary() && r.consistent(), "{r:?}");
        assert!(r.pairs >= 100);
    }
}

#[test]
fn harmonic_h_is_odd_integers() {
    let s = oscillator(0.0, 20, Some(10));
    let h = build_h(&s, 10, 1e-8).unwrap();
    for (n, e) in h.iter().enumerate() {
        assert!((e - (2 * n + 1) as f64).abs() < 1e-10);
    }
}

#[test]
fn cubic_h_uses_the_agreed_spectrum() {
    let p = PotentialSpec::standard(1.0).unwrap();
    let shot = find_eigenvalues(&p, &default_contour(&p, 4).unwrap(), 4, &ShootingConfig::default()).unwrap();
    let h = build_h(&oscillator(1.0, 200, Some(4)), 4, 1e-8).unwrap();
    assert_eq!(h.len(), 4);
    for (e, l) in h.iter().zip(&shot.levels) {
        assert!((e - l.energy.re).abs() < 1e-6);
    }
    let rep = hamiltonian_matrix_rep(&oscillator(1.0, 200, Some(2)), 1e-8).unwrap();
    assert_eq!(rep, rep.adjoint());
    assert!((rep[(0, 0)].re - 1.156267).abs() < 1e-6 && (rep[(1, 1)].re - 4.109229).abs() < 1e-6);
    assert_eq!(rep[(0, 1)], c(0.0, 0.0));
}

#[test]
fn complex_levels_are_refused() {
    let mut s = oscillator(1.0, 20, Some(3));
    s.levels[1].energy.im = 1e-3;
    assert!(matches!(build_h(&s, 3, 1e-8), Err(Error::ComplexSpectrum { level: 1, .. })));
}

#[test]
fn position_pathway_representation_is_diagonal() {
    let b = cubic_bundle();
    assert_eq!(b.pathway(), Pathway::Position);
    let h_amb = b.ambient_hamiltonian().unwrap();
    let rep = matrix_representation(&h_amb, b.space_h()).unwrap();
    let e = b.h_diagonal();
    // entrywise, relative to the energies involved
    let relative = |m: &CMat| {
        let mut worst: f64 = 0.0;
        for i in 0..e.len() {
            for j in 0..e.len() {
                let target = if i == j { e[i] } else { 0.0 };
                worst = worst.max((m[(i, j)] - c(target, 0.0)).norm() / (1.0 + e[i].abs().max(e[j].abs())));
            }
        }
        worst
    };
    assert!(relative(&rep) < 1e-8, "{}", relative(&rep));
    let conv = b.cal_u_map().matrix() * &h_amb * b.space_h().basis_change();
    assert!(relative(&conv) < 1e-8 * b.condition_number());
}

#[test]
fn identity_and_energy_observables_map_to_their_partners() {
    let b = cubic_bundle();
    let id = ObservableMatrix::identity(b.dim(), Picture::Pt);
    let o = b.map_observable(&id, Direction::ToConventional).unwrap();
    assert!(identity_deviation(o.entries()) < 1e-15);
    let energy = ObservableMatrix::pt(b.h_matrix()).unwrap();
    let o = b.map_observable(&energy, Direction::ToConventional).unwrap();
    assert_eq!(o.entries(), &b.h_matrix());
    let back = b.map_observable(&o, Direction::ToPt).unwrap();
    assert_eq!(back.picture(), Picture::Pt);
}

#[test]
fn random_observable_transport_identity() {
    let (s, space) = random_space(4, 21);
    let o = random_hermitian(&mut rng(22), 4);
    let s_inv = s.clone().try_inverse().unwrap();
    let ambient = &s * &o * &s_inv;
    let cal_u = build_cal_u(&space).unwrap();
    let back = cal_u.matrix() * ambient * &s;
    assert!(max_abs(&(back - &o)) < 1e-10);
    // the PT-side ambient action is Hermitian in η, the conventional one in the Euclidean product
    assert!(is_hermitian_wrt(&(&s * &o * &s_inv), &space, 1e-10, 1).unwrap().hermitian);
    assert!(hermitian_violation(&o) < 1e-12);
}

#[test]
fn hermiticity_transports_both_ways() {
    let (s, space) = random_space(5, 31);
    let s_inv = s.clone().try_inverse().unwrap();
    let u = build_u(&space).unwrap();
    let u_inv = s_inv.clone();
    let herm = random_hermitian(&mut rng(32), 5);
    let a = &s * &herm * &s_inv;
    assert!(is_hermitian_wrt(&a, &space, 1e-10, 2).unwrap().hermitian);
    assert!(hermitian_violation(&(u.matrix() * &a * &s)) < 1e-10 * max_abs(&herm));

    let mut skew = herm.clone();
    skew[(0, 1)] += c(0.5, 0.0);
    let a = &s * &skew * &u_inv;
    assert!(!is_hermitian_wrt(&a, &space, 1e-10, 3).unwrap().hermitian);
    assert!(hermitian_violation(&(u.matrix() * &a * &s)) > 1e-3);
}

#[test]
fn non_hermitian_observables_are_rejected() {
    let mut m = CMat::identity(3, 3);
    m[(0, 2)] = c(1.0, 0.0);
    assert!(matches!(ObservableMatrix::pt(m), Err(Error::NonHermitian(_))));
}

#[test]
fn bundle_round_trips_and_rejects_tampering() {
    let b = cubic_bundle();
    let json = b.to_json().unwrap();
    let back = EquivalenceBundle::from_json(json.as_bytes()).unwrap();
    assert_eq!(back.h_diagonal(), b.h_diagonal());
    assert!(back.verify(5).unwrap().passed());

    let mut doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    doc["h"][0] = serde_json::json!(1.2);
    assert!(EquivalenceBundle::from_json(doc.to_string().as_bytes()).is_err());
}

#[test]
fn quartic_spectrum_uses_coefficient_pathway() {
    let p = PotentialSpec::standard(2.0).unwrap();
    let s = find_eigenvalues(&p, &default_contour(&p, 3).unwrap(), 3, &ShootingConfig::default()).unwrap();
    let b = EquivalenceBundle::build(s, &BundleConfig::default()).unwrap();
    assert_eq!(b.pathway(), Pathway::Coefficient);
    assert!(b.verify(9).unwrap().passed());
}

#[test]
fn corrupted_h_is_detected() {
    let b = cubic_bundle();
    let mut h = b.h_diagonal().to_vec();
    h[0] += 1e-3;
    let report = b.with_conventional_hamiltonian(h).unwrap().verify(5).unwrap();
    assert!(!report.passed());
    assert!(report.failures().iter().any(|c| c.name.starts_with("h =")));
}

#[test]
fn ill_conditioned_truncation_is_refused() {
    let r = EquivalenceBundle::build(oscillator(1.0, 200, None), &BundleConfig::default());
    assert!(r.is_err());
}

#[test]
fn euclidean_state_maps_round_trip() {
    let b = cubic_bundle();
    let c0 = random_vector(&mut rng(41), b.dim());
    let psi = b.space_h().from_eigen_coeffs(&c0).unwrap();
    let big = b.to_conventional_state(&psi).unwrap();
    assert!((big - &c0).norm() < 1e-8 * c0.norm());
    let _ = real_diag(&[1.0]);
    let _: CVec = c0;
}
