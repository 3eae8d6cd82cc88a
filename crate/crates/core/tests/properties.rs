use proptest::prelude::*;

use sturm_core::eigensolve::SpectralSolver;
use sturm_core::equivalence::{apply_sign_flip, SignSequence};
use sturm_core::fundamental::{BoundaryCondition, IntegratorConfig};
use sturm_core::io::{parse_potential, potential_json};
use sturm_core::maps::{gap_map, SpectralVector};
use sturm_core::potential::Potential;

fn potential(max_modes: usize, max_coeff: f64) -> impl Strategy<Value = Potential> {
    (1..=max_modes).prop_flat_map(move |m| {
        (prop::collection::vec(-max_coeff..max_coeff, m), prop::collection::vec(-max_coeff..max_coeff, m))
            .prop_map(|(c, s)| Potential::from_fourier(&c, &s).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wronskian_is_one(q in potential(6, 1.5), lambda in -20.0f64..2000.0) {
        let f = SpectralSolver::new(&q, &IntegratorConfig::default()).unwrap().fundamental(lambda).unwrap();
        prop_assert!((f.wronskian() - 1.0).abs() < 1e-9 * (1.0 + (f.theta1 * f.dphi1).abs() + (f.dtheta1 * f.phi1).abs()));
    }

    #[test]
    fn reflection_keeps_the_periodic_spectrum(q in potential(4, 1.0)) {
        let a = SpectralSolver::new(&q, &IntegratorConfig::default()).unwrap().periodic_spectrum(5).unwrap();
        let b = SpectralSolver::new(&q.reflect(), &IntegratorConfig::default()).unwrap().periodic_spectrum(5).unwrap();
        prop_assert!((a.lam0_plus - b.lam0_plus).abs() < 1e-7);
        for i in 0..5 {
            prop_assert!((a.minus[i] - b.minus[i]).abs() < 1e-7 * (1.0 + a.minus[i].abs()));
            prop_assert!((a.plus[i] - b.plus[i]).abs() < 1e-7 * (1.0 + a.plus[i].abs()));
        }
    }

    #[test]
    fn reflection_swaps_mixed_spectra(q in potential(4, 1.0)) {
        let cfg = IntegratorConfig::default();
        let dn = SpectralSolver::new(&q, &cfg).unwrap().boundary_eigenvalues(BoundaryCondition::DN, 4).unwrap();
        let nd = SpectralSolver::new(&q.reflect(), &cfg).unwrap().boundary_eigenvalues(BoundaryCondition::ND, 4).unwrap();
        for (a, b) in dn.iter().zip(&nd) {
            prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn potential_json_round_trips(q in potential(8, 10.0)) {
        let back = parse_potential(&potential_json(&q).unwrap(), 8).unwrap();
        prop_assert_eq!(back.potential, q);
        prop_assert!(back.discarded_tail.is_none());
    }

    #[test]
    fn sign_sequences_round_trip(prefix in prop::collection::vec(0u8..2, 0..6), tail in prop::collection::vec(0u8..2, 2)) {
        let s = SignSequence::new(prefix, tail).unwrap();
        let back: SignSequence = s.to_string().parse().unwrap();
        for j in 1..=12 {
            prop_assert_eq!(back.bit(j), s.bit(j));
        }
    }

    #[test]
    fn sign_flip_is_an_involution(q in potential(3, 1.0), bits in prop::collection::vec(0u8..2, 4)) {
        let t = SpectralSolver::new(&q, &IntegratorConfig::default()).unwrap().table(4).unwrap();
        let f = gap_map(&t);
        let s = SignSequence::new(bits[..2].to_vec(), bits[2..].to_vec()).unwrap();
        let twice = apply_sign_flip(&s, &apply_sign_flip(&s, &f).unwrap()).unwrap();
        prop_assert_eq!(&twice, &f);
        let json = f.to_json().unwrap();
        prop_assert_eq!(SpectralVector::from_json(&json).unwrap(), f);
    }
}
