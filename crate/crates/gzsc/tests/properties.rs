use std::collections::HashSet;

use gzsc::bergman::{bergman_eval, isotropic_state};
use gzsc::combinatorics::{
    compositions, enumerate_patterns, scaled_lattice, semiclassical_lattice, to_f64, weyl_dimension, GzPolytope, HighestWeight, RhoShift,
};
use gzsc::geometry::{flatten, gz_map, interlacing_margin};
use gzsc::harness::{nearest_multi_index, toric_levels};
use gzsc::linalg::{c, haar_unitary, max_abs, random_orbit_point, unitarity_defect, CMat};
use gzsc::monomial::{wigner_d, MonomialModule};
use gzsc::representation::GzModule;
use num_bigint::BigUint;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn weight_strategy(max_n: usize, max_entry: i64) -> impl Strategy<Value = Vec<i64>> {
    (1..=max_n).prop_flat_map(move |n| prop::collection::vec(0..=max_entry, n)).prop_map(|mut v| {
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    })
}

fn regular_strategy() -> impl Strategy<Value = Vec<i64>> {
    (2usize..=3, prop::collection::vec(1i64..=2, 2)).prop_map(|(n, gaps)| {
        let mut v = vec![0i64; n];
        for k in (0..n - 1).rev() {
            v[k] = v[k + 1] + gaps[k];
        }
        v
    })
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    use rand_distr::{Distribution, StandardNormal};
    let z = CMat::from_fn(n, n, |_, _| c(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    (&z + z.adjoint()) * c(0.5, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn patterns_interlace_and_count(l in weight_strategy(4, 4)) {
        let lambda = HighestWeight::new(l.clone()).unwrap();
        let pats = enumerate_patterns(&lambda);
        prop_assert_eq!(BigUint::from(pats.len()), weyl_dimension(&lambda));
        let mut seen = HashSet::new();
        for g in &pats {
            prop_assert!(g.interlaces());
            prop_assert_eq!(g.top(), &l[..]);
            prop_assert!(seen.insert(g.rows().to_vec()));
        }
    }

    #[test]
    fn symmetric_power_weights_are_simple(n in 2usize..=4, p in 0i64..=6) {
        let pats = enumerate_patterns(&HighestWeight::symmetric_power(n, p));
        let weights: HashSet<Vec<i64>> = pats.iter().map(|g| g.weight()).collect();
        prop_assert_eq!(weights.len(), pats.len());
        let all: HashSet<Vec<i64>> = compositions(n, p).into_iter().collect();
        prop_assert_eq!(weights, all);
    }

    #[test]
    fn scaled_lattice_near_polytope(l in regular_strategy(), p in 1i64..=4) {
        let lambda = HighestWeight::new(l).unwrap();
        let poly = GzPolytope::new(&lambda);
        let reach = RhoShift::new(lambda.n()).rho_bar.iter().map(|x| x.abs()).max().unwrap() as f64 / p as f64;
        for x in scaled_lattice(&lambda, p).unwrap() {
            prop_assert!(poly.distance_linf(&to_f64(&x)) <= reach + 1e-12);
        }
        for (_, x) in semiclassical_lattice(&lambda, p).unwrap() {
            prop_assert!(poly.contains(&x));
        }
    }

    #[test]
    fn minors_interlace(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_hermitian(n, &mut rng);
        let mut rows = gz_map(&a);
        rows.push(gzsc::linalg::herm_eigvals(&a));
        prop_assert!(interlacing_margin(&rows) >= -1e-10);
    }

    #[test]
    fn orbit_points_map_into_polytope(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda = HighestWeight::new(vec![3, 1, 0]).unwrap();
        let a = random_orbit_point(&[3.0, 1.0, 0.0], &mut rng);
        prop_assert!(GzPolytope::new(&lambda).distance_linf(&flatten(&gz_map(&a))) < 1e-9);
    }

    #[test]
    fn representation_is_unitary_homomorphism(seed in any::<u64>(), l in regular_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = l.len();
        let m = GzModule::new(&HighestWeight::new(l).unwrap());
        let (g, h) = (haar_unitary(n, &mut rng), haar_unitary(n, &mut rng));
        let (rg, rh, rgh) = (m.group_matrix(&g).unwrap(), m.group_matrix(&h).unwrap(), m.group_matrix(&(&g * &h)).unwrap());
        prop_assert!(unitarity_defect(&rg) < 1e-10);
        prop_assert!(max_abs(&(rgh - rg * rh)) < 1e-8);
    }

    #[test]
    fn monomial_rows_have_unit_mass(seed in any::<u64>(), n in 2usize..=3, p in 0i64..=8) {
        let g = haar_unitary(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let r = MonomialModule::new(n, p).group_matrix(&g);
        for i in 0..r.nrows() {
            let mass: f64 = r.row(i).iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wigner_symmetry(j2 in 0i64..=30, a in 0i64..=30, b in 0i64..=30, beta in 0.0f64..std::f64::consts::PI) {
        let (m2, mp2) = (j2 - 2 * (a % (j2 + 1)), j2 - 2 * (b % (j2 + 1)));
        let d = wigner_d(j2, m2, mp2, beta).unwrap();
        let t = wigner_d(j2, mp2, m2, beta).unwrap();
        let sign = if ((m2 - mp2) / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        prop_assert!((d - sign * t).abs() < 1e-12);
        prop_assert!(d.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn kernel_is_hermitian(seed in any::<u64>(), n in 2usize..=4, p in 0i64..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Complex64> = haar_unitary(n, &mut rng).column(0).iter().copied().collect();
        let y: Vec<Complex64> = haar_unitary(n, &mut rng).column(0).iter().copied().collect();
        let (k1, k2) = (bergman_eval(p, &x, &y), bergman_eval(p, &y, &x));
        prop_assert!((k1 - k2.conj()).norm() <= 1e-12 * k1.norm().max(1.0));
        prop_assert!(bergman_eval(p, &x, &x).re > 0.0);
    }

    #[test]
    fn nearest_levels_are_bohr_sommerfeld(d in 1i64..=80, t in prop::collection::vec(0.05f64..0.45, 2)) {
        let nu = nearest_multi_index(d, &t).unwrap();
        prop_assert_eq!(nu.iter().sum::<i64>(), d);
        let big = d as f64 + 1.5;
        for (l, k) in toric_levels(&nu).iter().zip(&nu[1..]) {
            prop_assert!((l * big - (*k as f64 + 0.5)).abs() < 1e-9);
        }
    }

    #[test]
    fn isotropic_states_localize(k in 1i64..=6, a in 1i64..=3) {
        let p = 4 * k;
        let v = [a as f64 / 4.0];
        let st = isotropic_state(2, p, &v, 0, 4 * p as usize).unwrap();
        prop_assert!(st.leakage() < 1e-8);
        prop_assert!(st.norm_sq() > 0.0);
    }
}
