use ctclab_core::circuits::{completion_unitary, controlled_u, FlagBasis};
use ctclab_core::dctc::{cr_output, deutsch_map, solve_fixed_points, superoperator, DeutschInstance, Selection};
use ctclab_core::experiments::{mutual_information, JointTable};
use ctclab_core::pctc::pctc_map;
use ctclab_core::qmat::{
    dagger, eig_hermitian, is_density, is_unitary, kron, partial_trace, trace_distance, ComplexMatrix,
    DimensionSplit, C64,
};
use ctclab_core::random::{random_density, random_hermitian, random_pure, random_unitary};
use ctclab_core::states::{
    bloch_state, measure, proper_mixture, reduce, DensityMatrix, Ensemble, MeasurementBasis, Provenance, PureState,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn complex_matrix(rows: usize, cols: usize, rng: &mut StdRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn paulis() -> Vec<ComplexMatrix> {
    let i = C64::new(0.0, 1.0);
    vec![
        ComplexMatrix::identity(2),
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap(),
        ComplexMatrix::new(2, 2, vec![C64::new(0.0, 0.0), -i, i, C64::new(0.0, 0.0)]).unwrap(),
        ComplexMatrix::diag_real(&[1.0, -1.0]),
    ]
}

fn random_instance(d: usize, rng: &mut StdRng) -> DeutschInstance {
    let input = random_density(d, rng.random_range(1..=d), rng);
    DeutschInstance::new(random_unitary(d * d, rng), input, d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Small-integer entries keep every product exact, so associativity holds bit for bit.
    #[test]
    fn kron_is_associative(seed: u64, a in 1usize..4, b in 1usize..4, c in 1usize..4) {
        let mut r = rng(seed);
        let mut int = |rows, cols| {
            ComplexMatrix::from_fn(rows, cols, |_, _| {
                C64::new(r.random_range(-3..=3) as f64, r.random_range(-3..=3) as f64)
            })
        };
        let (x, y, z) = (int(a, b), int(b, c), int(c, a));
        let left = kron(&kron(&x, &y), &z);
        let right = kron(&x, &kron(&y, &z));
        prop_assert_eq!(left.max_abs_diff(&right), 0.0);
    }

    #[test]
    fn kron_trace_factorizes(seed: u64, a in 1usize..5, b in 1usize..5) {
        let mut r = rng(seed);
        let (x, y) = (complex_matrix(a, a, &mut r), complex_matrix(b, b, &mut r));
        prop_assert!((kron(&x, &y).trace() - x.trace() * y.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_is_linear(seed: u64, a in 1usize..5, b in 1usize..5, keep in 0usize..2) {
        let mut r = rng(seed);
        let split = DimensionSplit::bipartite(a, b);
        let n = a * b;
        let (m, k) = (complex_matrix(n, n, &mut r), complex_matrix(n, n, &mut r));
        let (alpha, beta) = (C64::new(r.random(), r.random()), C64::new(r.random(), r.random()));
        let lhs = partial_trace(&(&m.scale(alpha) + &k.scale(beta)), &split, keep).unwrap();
        let rhs = &partial_trace(&m, &split, keep).unwrap().scale(alpha) + &partial_trace(&k, &split, keep).unwrap().scale(beta);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn eig_reconstructs(seed: u64, d in 1usize..=16) {
        let mut r = rng(seed);
        let h = random_hermitian(d, &mut r);
        let e = eig_hermitian(&h).unwrap();
        prop_assert!(e.reconstruct_with(|l| l).max_abs_diff(&h) <= 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn trace_distance_triangle(seed: u64, d in 1usize..=5) {
        let mut r = rng(seed);
        let [x, y, z] = [0, 1, 2].map(|_| random_density(d, r.random_range(1..=d), &mut r));
        let xy = x.trace_distance(&y).unwrap();
        let yz = y.trace_distance(&z).unwrap();
        let xz = x.trace_distance(&z).unwrap();
        prop_assert!(xz <= xy + yz + 1e-10);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&xy));
    }

    #[test]
    fn schmidt_symmetry(seed: u64, a in 1usize..5, b in 1usize..5) {
        let mut r = rng(seed);
        let psi = PureState::normalized(random_pure(a * b, &mut r).amplitudes().to_vec(), DimensionSplit::bipartite(a, b)).unwrap();
        let sa = reduce(&psi, 0).unwrap().entropy_bits().unwrap();
        let sb = reduce(&psi, 1).unwrap().entropy_bits().unwrap();
        prop_assert!((sa - sb).abs() < 1e-10);
    }

    #[test]
    fn reduce_reproduces_local_expectations(seed: u64) {
        let mut r = rng(seed);
        let psi = PureState::normalized(random_pure(4, &mut r).amplitudes().to_vec(), DimensionSplit::bipartite(2, 2)).unwrap();
        let rho_a = reduce(&psi, 0).unwrap();
        let rho_b = reduce(&psi, 1).unwrap();
        prop_assert_eq!(rho_a.provenance(), Provenance::Improper);
        for o in paulis() {
            let full_a = psi.to_density(Provenance::Proper).expectation(&kron(&o, &ComplexMatrix::identity(2))).unwrap();
            let full_b = psi.to_density(Provenance::Proper).expectation(&kron(&ComplexMatrix::identity(2), &o)).unwrap();
            prop_assert!((full_a - rho_a.expectation(&o).unwrap()).norm() < 1e-10);
            prop_assert!((full_b - rho_b.expectation(&o).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn proper_mixtures_are_densities(seed: u64, d in 1usize..5, n in 1usize..6) {
        let mut r = rng(seed);
        let mut weights: Vec<f64> = (0..n).map(|_| r.random_range(0.01..1.0)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        // absorb rounding into the last weight
        let head: f64 = weights[..n - 1].iter().sum();
        weights[n - 1] = 1.0 - head;
        let members = weights.into_iter().map(|w| (w, random_pure(d, &mut r))).collect();
        let rho = proper_mixture(&Ensemble::new(members).unwrap());
        prop_assert!(is_density(rho.matrix(), 1e-10));
        prop_assert_eq!(rho.provenance(), Provenance::Proper);
    }

    #[test]
    fn born_rule_is_normalized(seed: u64, theta in 0.0f64..3.2, phi in 0.0f64..6.3) {
        let mut r = rng(seed);
        let basis = MeasurementBasis::from_states(
            &[bloch_state(theta, phi), bloch_state(std::f64::consts::PI - theta, phi + std::f64::consts::PI)],
            &["up", "down"],
        ).unwrap();
        let rho = random_density(2, r.random_range(1..=2), &mut r);
        let p = measure(&rho, &basis).unwrap().probabilities();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn antipodal_points_are_orthogonal(theta in -20.0f64..20.0, phi in -20.0f64..20.0) {
        let a = bloch_state(theta, phi);
        let b = bloch_state(std::f64::consts::PI - theta, phi + std::f64::consts::PI);
        prop_assert!(a.inner(&b).norm() < 1e-12);
    }

    #[test]
    fn deutsch_map_is_affine_and_cptp(seed: u64, d in 2usize..=4, alpha in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let inst = random_instance(d, &mut r);
        let s1 = random_density(d, r.random_range(1..=d), &mut r);
        let s2 = random_density(d, r.random_range(1..=d), &mut r);
        let mix = DensityMatrix::mixture(&[(alpha, &s1), (1.0 - alpha, &s2)], Provenance::Unspecified).unwrap();
        let lhs = deutsch_map(&inst, &mix).unwrap();
        let m1 = deutsch_map(&inst, &s1).unwrap();
        let m2 = deutsch_map(&inst, &s2).unwrap();
        let rhs = &(m1.matrix() * alpha) + &(m2.matrix() * (1.0 - alpha));
        prop_assert!(lhs.matrix().max_abs_diff(&rhs) < 1e-12);
        prop_assert!(is_density(m1.matrix(), 1e-10));
        let out = cr_output(&inst, &s1).unwrap();
        prop_assert!(is_density(out.matrix(), 1e-10));
        prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn superoperator_agrees_with_the_map(seed: u64, d in 2usize..=4) {
        let mut r = rng(seed);
        let inst = random_instance(d, &mut r);
        let s = superoperator(&inst).unwrap();
        let sigma = random_density(d, r.random_range(1..=d), &mut r);
        let via_s = ComplexMatrix::unvec_columns(&s.apply(&sigma.matrix().vec_columns()), d, d).unwrap();
        prop_assert!(via_s.max_abs_diff(deutsch_map(&inst, &sigma).unwrap().matrix()) < 1e-12);
    }

    #[test]
    fn fixed_point_reports_are_valid(seed: u64, d in 2usize..=4) {
        let mut r = rng(seed);
        let inst = random_instance(d, &mut r);
        let report = solve_fixed_points(&inst).unwrap();
        prop_assert!(report.residual <= 1e-10);
        prop_assert!(report.fixed_space_dim >= 1);
        prop_assert_eq!(report.basis_of_fixed_space.len(), report.fixed_space_dim);
        prop_assert!(report.entropy_bits >= -1e-12 && report.entropy_bits <= (d as f64).log2() + 1e-12);
    }

    /// Flag-controlled unitaries with a diagonal control input give a mixed
    /// unitary (unital) channel: I/d is fixed, so it is the max-entropy pick.
    #[test]
    fn unital_channels_select_the_maximally_mixed_state(seed: u64, d in 2usize..=4, commuting: bool) {
        let mut r = rng(seed);
        let flags = FlagBasis::standard(d).unwrap();
        let ops: Vec<ComplexMatrix> = (0..d)
            .map(|_| {
                if commuting {
                    let phases: Vec<C64> = (0..d).map(|_| C64::from_polar(1.0, r.random_range(0.0..6.3))).collect();
                    ComplexMatrix::from_fn(d, d, |i, j| if i == j { phases[i] } else { C64::new(0.0, 0.0) })
                } else {
                    random_unitary(d, &mut r)
                }
            })
            .collect();
        let u = controlled_u(&flags, &ops).unwrap();
        let weights: Vec<f64> = (0..d).map(|_| r.random_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let input = DensityMatrix::new(
            ComplexMatrix::diag_real(&weights.iter().map(|w| w / total).collect::<Vec<_>>()),
            DimensionSplit::single(d),
            Provenance::Proper,
        ).unwrap();
        let inst = DeutschInstance::new(u, input, d).unwrap();
        let report = solve_fixed_points(&inst).unwrap();
        let mixed = &ComplexMatrix::identity(d) * (1.0 / d as f64);
        prop_assert!(report.chosen.matrix().max_abs_diff(&mixed) < 1e-8, "{:?}", report.chosen.matrix());
        if report.fixed_space_dim > 1 {
            prop_assert_eq!(report.selection, Selection::MaxEntropy);
        }
        prop_assert!(report.residual <= 1e-10);
    }

    #[test]
    fn completion_maps_src_to_dst(seed: u64, big: bool) {
        let mut r = rng(seed);
        let d = if big { 4 } else { 2 };
        let (src, dst) = (random_pure(d, &mut r), random_pure(d, &mut r));
        let o = completion_unitary(&src, &dst).unwrap();
        prop_assert!(is_unitary(&o, 1e-10));
        let image = PureState::new(o.apply(src.amplitudes()), DimensionSplit::single(d)).unwrap();
        prop_assert!((image.inner(&dst).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn controlled_unitaries_are_unitary(seed: u64, d in 1usize..=4, t in 1usize..=3) {
        let mut r = rng(seed);
        let basis: Vec<PureState> = {
            let u = random_unitary(d, &mut r);
            (0..d).map(|c| PureState::new(u.column(c), DimensionSplit::single(d)).unwrap()).collect()
        };
        let flags = FlagBasis::new(basis).unwrap();
        let ops: Vec<ComplexMatrix> = (0..d).map(|_| random_unitary(t, &mut r)).collect();
        let cu = controlled_u(&flags, &ops).unwrap();
        prop_assert!(dagger(&cu).matmul(&cu).unwrap().max_abs_diff(&ComplexMatrix::identity(d * t)) < 1e-10);
    }

    #[test]
    fn postselection_is_scale_free(seed: u64, d in 1usize..=4, re in -5.0f64..5.0, im in -5.0f64..5.0) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let mut r = rng(seed);
        let c = complex_matrix(d, d, &mut r);
        let rho = random_density(d, d, &mut r);
        let base = pctc_map(&c, &rho).unwrap();
        prop_assert!(is_density(base.matrix(), 1e-10));
        let scaled = pctc_map(&c.scale(C64::new(re, im)), &rho).unwrap();
        prop_assert!(scaled.matrix().max_abs_diff(base.matrix()) < 1e-12);
    }

    #[test]
    fn mutual_information_is_bounded(seed: u64) {
        let mut r = rng(seed);
        let raw: Vec<f64> = (0..4).map(|_| r.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<Vec<f64>> = raw.chunks(2).map(|c| c.iter().map(|x| x / total).collect()).collect();
        let labels = || vec!["0".to_string(), "1".to_string()];
        let t = JointTable::new(labels(), labels(), p).unwrap();
        let mi = mutual_information(&t);
        prop_assert!((-1e-15..=1.0 + 1e-10).contains(&mi));
    }

    #[test]
    fn trace_distance_is_symmetric(seed: u64, d in 1usize..=4) {
        let mut r = rng(seed);
        let (a, b) = (random_density(d, d, &mut r), random_density(d, 1, &mut r));
        let ab = trace_distance(a.matrix(), b.matrix()).unwrap();
        let ba = trace_distance(b.matrix(), a.matrix()).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
    }
}
