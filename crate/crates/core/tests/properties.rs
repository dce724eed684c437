use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use locc_forge::analysis::{analyze_all, analyze_party};
use locc_forge::linalg::{
    c, hermitian_defect, hermitian_solution_space, max_abs, psd_sqrt, trace, CMatrix, CVector, LinearConstraint,
};
use locc_forge::measure::{
    bookkeeping_sums, derived_rng, diagnose_outcomes, gaussian_matrix, random_measurement, random_nonorthogonal_pair,
    surviving_outcome,
};
use locc_forge::states::{local_phase_classes, orthogonality_report, ProductState, StateSet, DEFAULT_TOL};

fn random_unitary(d: usize, rng: &mut ChaCha20Rng) -> CMatrix {
    gaussian_matrix(d, d, rng).qr().q()
}

/// A random subset of a product basis built from one random unitary per
/// party; `keep` is the probability of keeping each basis state.
fn random_product_subset(dims: &[usize], keep: f64, rng: &mut ChaCha20Rng) -> StateSet {
    let bases: Vec<CMatrix> = dims.iter().map(|&d| random_unitary(d, rng)).collect();
    let total: usize = dims.iter().product();
    let mut states = Vec::new();
    for idx in 0..total {
        let mut rest = idx;
        let mut factors = Vec::new();
        for (p, &d) in dims.iter().enumerate().rev() {
            factors.push(bases[p].column(rest % d).into_owned());
            rest /= d;
        }
        factors.reverse();
        if states.is_empty() || rng.random_bool(keep) {
            states.push(ProductState::new(format!("s{idx}"), factors).unwrap());
        }
    }
    StateSet::from_dims(dims.to_vec(), states).unwrap()
}

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..=3, 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn psd_sqrt_squares_back(d in 1usize..=8, seed in any::<u64>()) {
        let mut rng = derived_rng(seed, &[1]);
        let a = gaussian_matrix(d, d, &mut rng);
        let p = &a * a.adjoint();
        let s = psd_sqrt(&p).unwrap();
        let scale = max_abs(&p).max(1.0);
        prop_assert!(hermitian_defect(&s) <= 1e-10 * scale);
        prop_assert!(max_abs(&(&s * &s - &p)) <= 1e-9 * scale);
    }

    #[test]
    fn psd_sqrt_of_rank_deficient(d in 2usize..=6, seed in any::<u64>()) {
        let mut rng = derived_rng(seed, &[2]);
        let a = gaussian_matrix(d, 1, &mut rng);
        let p = &a * a.adjoint();
        let s = psd_sqrt(&p).unwrap();
        prop_assert!(max_abs(&(&s * &s - &p)) <= 1e-9 * max_abs(&p).max(1.0));
    }

    #[test]
    fn solution_space_elements_satisfy_constraints(d in 2usize..=4, k in 0usize..=6, seed in any::<u64>()) {
        let mut rng = derived_rng(seed, &[3]);
        let constraints: Vec<LinearConstraint> = (0..k)
            .map(|_| {
                let bra = gaussian_matrix(d, 1, &mut rng).column(0).into_owned();
                let ket = gaussian_matrix(d, 1, &mut rng).column(0).into_owned();
                LinearConstraint::new(bra, ket).unwrap()
            })
            .collect();
        let space = hermitian_solution_space(&constraints, d).unwrap();
        prop_assert!(space.dimension() + 2 * k >= d * d);
        for (i, h) in space.elements.iter().enumerate() {
            prop_assert!(hermitian_defect(h) <= 1e-10);
            for k in &constraints {
                prop_assert!(k.residual(h) <= 1e-8);
            }
            for (j, g) in space.elements.iter().enumerate() {
                let ip = trace(&(h.adjoint() * g));
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - c(want, 0.0)).norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn solution_space_dimension_unitarily_invariant(d in 2usize..=4, k in 0usize..=5, seed in any::<u64>()) {
        let mut rng = derived_rng(seed, &[4]);
        let pairs: Vec<(CVector, CVector)> = (0..k)
            .map(|_| {
                // repeat a bra sometimes so that the constraint system is degenerate
                let bra = gaussian_matrix(d, 1, &mut rng).column(0).into_owned();
                let ket = if rng.random_bool(0.3) { bra.clone() } else { gaussian_matrix(d, 1, &mut rng).column(0).into_owned() };
                (bra, ket)
            })
            .collect();
        let u = random_unitary(d, &mut rng);
        let plain: Vec<_> = pairs.iter().map(|(a, b)| LinearConstraint::new(a.clone(), b.clone()).unwrap()).collect();
        let rotated: Vec<_> = pairs.iter().map(|(a, b)| LinearConstraint::new(&u * a, &u * b).unwrap()).collect();
        prop_assert_eq!(
            hermitian_solution_space(&plain, d).unwrap().dimension(),
            hermitian_solution_space(&rotated, d).unwrap().dimension()
        );
    }

    #[test]
    fn orthogonality_invariant_under_relabel_and_phase(dims in dims_strategy(), seed in any::<u64>(), theta in 0.0f64..std::f64::consts::TAU) {
        let mut rng = derived_rng(seed, &[5]);
        let set = random_product_subset(&dims, 0.6, &mut rng);
        let base = orthogonality_report(&set, DEFAULT_TOL);
        prop_assert!(base.orthogonal);
        let phase = c(theta.cos(), theta.sin());
        let changed: Vec<ProductState> = set
            .states()
            .iter()
            .rev()
            .enumerate()
            .map(|(i, s)| {
                let p = i % s.parties();
                s.with_factor(p, s.factor(p) * phase).unwrap().relabeled(format!("t{i}"))
            })
            .collect();
        let changed = StateSet::new(set.shape().clone(), changed).unwrap();
        prop_assert!(orthogonality_report(&changed, DEFAULT_TOL).orthogonal);
    }

    #[test]
    fn overlapping_states_detected(dims in dims_strategy(), seed in any::<u64>()) {
        let mut rng = derived_rng(seed, &[6]);
        let set = random_product_subset(&dims, 0.6, &mut rng);
        let first = &set.states()[0];
        let twisted: Vec<CVector> = first.factors().iter().map(|f| f + gaussian_matrix(f.len(), 1, &mut rng).column(0) * c(0.3, 0.0)).collect();
        let intruder = ProductState::new("intruder", twisted).unwrap();
        let extended = set.extended(&[intruder]).unwrap();
        prop_assert!(!orthogonality_report(&extended, DEFAULT_TOL).orthogonal);
    }

    #[test]
    fn phase_classes_partition_the_set(dims in dims_strategy(), seed in any::<u64>()) {
        let mut rng = derived_rng(seed, &[7]);
        let set = random_product_subset(&dims, 0.7, &mut rng);
        for p in 0..set.parties() {
            let classes = local_phase_classes(&set, p, DEFAULT_TOL).unwrap();
            let mut seen: Vec<usize> = classes.iter().flat_map(|c| c.members.iter().copied()).collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..set.len()).collect::<Vec<_>>());
            prop_assert!(classes.len() <= set.dims()[p]);
        }
    }

    #[test]
    fn dimension_monotone_under_adding_states(dims in dims_strategy(), seed in any::<u64>()) {
        let mut rng = derived_rng(seed, &[8]);
        let full = random_product_subset(&dims, 1.0, &mut rng);
        let labels: Vec<String> = full.labels().filter(|_| rng.random_bool(0.5)).map(String::from).collect();
        prop_assume!(!labels.is_empty());
        let part = full.subset(&labels).unwrap();
        for p in 0..full.parties() {
            prop_assert!(analyze_party(&full, p).unwrap().dimension <= analyze_party(&part, p).unwrap().dimension);
        }
    }

    #[test]
    fn state_set_json_round_trip(dims in dims_strategy(), seed in any::<u64>()) {
        let mut rng = derived_rng(seed, &[9]);
        let set = random_product_subset(&dims, 0.5, &mut rng);
        let back = StateSet::from_json(&set.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.labels().collect::<Vec<_>>(), set.labels().collect::<Vec<_>>());
        for (a, b) in set.states().iter().zip(back.states()) {
            for (x, y) in a.factors().iter().zip(b.factors()) {
                prop_assert_eq!(x, y);
            }
        }
        prop_assert_eq!(analyze_all(&back).unwrap().len(), set.parties());
    }

    #[test]
    fn random_measurements_are_complete(d in 1usize..=6, n in 1usize..=6, seed in any::<u64>()) {
        let m = random_measurement(d, n, seed).unwrap();
        prop_assert_eq!(m.outcomes(), n);
        prop_assert!(m.completeness_residual() <= 1e-9);
    }

    #[test]
    fn a_surviving_outcome_always_exists(d in 2usize..=5, n in 1usize..=6, seed in any::<u64>(), overlap in 0.05f64..1.0) {
        let m = random_measurement(d, n, seed).unwrap();
        let pair = random_nonorthogonal_pair(d, overlap, seed ^ 0xABCD).unwrap();
        let (i, post) = surviving_outcome(&m, &pair).unwrap();
        prop_assert!(i < n);
        prop_assert!(post.lambda.norm() > 0.0);
        let (s11, s12) = bookkeeping_sums(&m, &pair);
        prop_assert!((s11 - c(1.0, 0.0)).norm() <= 1e-9);
        prop_assert!(s12.norm() <= 1e-9);
        for diag in diagnose_outcomes(&m, &pair).unwrap() {
            prop_assert!(diag.identity_holds);
        }
    }

    #[test]
    fn projective_measurement_keeps_a_survivor(d in 2usize..=5, seed in any::<u64>(), overlap in 0.05f64..1.0) {
        // rank-one outcomes zero out many terms; the survivor still exists
        let mut rng = derived_rng(seed, &[10]);
        let u = random_unitary(d, &mut rng);
        let basis: Vec<CVector> = (0..d).map(|k| u.column(k).into_owned()).collect();
        let m = locc_forge::Measurement::projective(&basis).unwrap();
        let pair = random_nonorthogonal_pair(d, overlap, seed).unwrap();
        prop_assert!(surviving_outcome(&m, &pair).is_ok());
    }
}
