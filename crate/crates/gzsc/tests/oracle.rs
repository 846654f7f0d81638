//! Closed-form and cross-module oracles.

use gzsc::bergman::{bergman_eval, pairing_check, isotropic_state, reproduce_monomial, SphereRule};
use gzsc::combinatorics::{enumerate_patterns, scaled_lattice, weyl_dimension, GzPolytope, HighestWeight, RhoShift, Q};
use gzsc::geometry::{bohr_sommerfeld_level, flag_fiber_sample, flatten, gz_map, kks_pairing, projector, spectrum_error, toric_moment};
use gzsc::intersect::{toric_intersections, SolverConfig};
use gzsc::linalg::{c, haar_unitary, max_abs, rotation, unitarity_defect, CMat, CVec};
use gzsc::monomial::{exact_matrix_element, wigner_d, MonomialModule};
use gzsc::representation::{phase_aligned_distance, GzModule};
use num_bigint::BigUint;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn hw(l: &[i64]) -> HighestWeight {
    HighestWeight::new(l.to_vec()).unwrap()
}

#[test]
fn pattern_counts() {
    assert_eq!(enumerate_patterns(&hw(&[1, 0])).len(), 2);
    assert_eq!(enumerate_patterns(&hw(&[2, 1, 0])).len(), 8);
    let triv = enumerate_patterns(&hw(&[0, 0, 0]));
    assert_eq!(triv.len(), 1);
    assert!(triv[0].rows().iter().flatten().all(|x| *x == 0));
    assert_eq!(weyl_dimension(&hw(&[2, 1, 0])), BigUint::from(8u32));
    for p in 0..20 {
        assert_eq!(weyl_dimension(&hw(&[p, 0])), BigUint::from(p as u64 + 1));
    }
    assert!(HighestWeight::new(vec![0, 1]).is_err());
}

#[test]
fn pattern_weights() {
    let w: Vec<Vec<i64>> = enumerate_patterns(&hw(&[1, 0])).iter().map(|g| g.weight()).collect();
    assert!(w.contains(&vec![1, 0]) && w.contains(&vec![0, 1]));
    let g = gzsc::combinatorics::GzPattern::from_rows(vec![vec![0], vec![1, 0], vec![1, 0, 0]]).unwrap();
    assert_eq!(g.weight(), vec![0, 1, 0]);
}

#[test]
fn scaled_lattice_counts_match_shifted_dimension() {
    for l in [[2i64, 1, 0], [3, 1, 0], [4, 2, 0]] {
        let lambda = hw(&l);
        let shift = RhoShift::new(3).rho_bar;
        for p in 1..4 {
            let pts = scaled_lattice(&lambda, p).unwrap();
            let shifted = lambda.scaled_shifted(p, &shift).unwrap();
            assert_eq!(BigUint::from(pts.len()), weyl_dimension(&shifted));
        }
    }
    assert!(scaled_lattice(&hw(&[1, 0, 0]), 2).is_err());
    let two = scaled_lattice(&hw(&[1, 0]), 1).unwrap();
    let shifted = hw(&[1, 0]).scaled_shifted(1, &RhoShift::new(2).rho_bar).unwrap();
    assert_eq!(BigUint::from(two.len()), weyl_dimension(&shifted));
}

#[test]
fn monomial_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let id = CMat::identity(3, 3);
    let m = MonomialModule::new(3, 4);
    assert!(max_abs(&(m.group_matrix(&id) - CMat::identity(m.dim(), m.dim()))) < 1e-14);
    // cyclic permutation of coordinates permutes monomials
    let mut sigma = CMat::zeros(3, 3);
    for j in 0..3 {
        sigma[((j + 1) % 3, j)] = c(1.0, 0.0);
    }
    let r = m.group_matrix(&sigma);
    for i in 0..m.dim() {
        let row_mass: Vec<f64> = (0..m.dim()).map(|j| r[(i, j)].norm()).collect();
        assert_eq!(row_mass.iter().filter(|x| (**x - 1.0).abs() < 1e-12).count(), 1);
        assert!((row_mass.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let g = haar_unitary(3, &mut rng);
    let h = haar_unitary(3, &mut rng);
    let (rg, rh, rgh) = (m.group_matrix(&g), m.group_matrix(&h), m.group_matrix(&(&g * &h)));
    assert!(max_abs(&(rgh - rg * rh)) < 1e-9);
}

#[test]
fn monomial_matches_wigner() {
    for beta in [0.3, 1.1, 2.7] {
        let g = rotation(2, 0, 1, beta);
        for j2 in 0..=16 {
            let m = MonomialModule::new(2, j2);
            for nu in m.basis() {
                for mu in m.basis() {
                    let d = wigner_d(j2, mu[0] - mu[1], nu[0] - nu[1], beta).unwrap();
                    let e = m.element(&g, nu, mu).unwrap();
                    assert!((e - c(d, 0.0)).norm() < 1e-10, "j2={j2} {nu:?} {mu:?}");
                }
            }
        }
    }
}

#[test]
fn gz_and_monomial_agree_up_to_phases() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 2..=3 {
        for p in [1, 3, 6] {
            let g = haar_unitary(n, &mut rng);
            let gz = GzModule::new(&HighestWeight::symmetric_power(n, p));
            let mono = MonomialModule::new(n, p);
            let a = gz.group_matrix(&g).unwrap();
            // reorder the monomial matrix to the pattern order by weight
            let idx: Vec<usize> = gz.patterns().iter().map(|q| mono.index_of(&q.weight()).expect("weight is a monomial")).collect();
            let full = mono.group_matrix(&g);
            let b = CMat::from_fn(a.nrows(), a.ncols(), |i, j| full[(idx[i], idx[j])]);
            assert!(phase_aligned_distance(&a, &b) < 1e-9, "n={n} p={p}");
        }
    }
}

#[test]
fn exact_elements_at_small_degree() {
    let beta: f64 = 0.8;
    let (co, si) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let g = rotation(2, 0, 1, beta);
    let e = |nu: [i64; 2], mu: [i64; 2]| exact_matrix_element(&g, &nu, &mu).unwrap().value;
    assert!((e([1, 0], [1, 0]) - c(co, 0.0)).norm() < 1e-15);
    assert!((e([0, 1], [1, 0]) - c(-si, 0.0)).norm() < 1e-15);
    assert!((e([1, 0], [0, 1]) - c(si, 0.0)).norm() < 1e-15);
}

#[test]
fn geometry_examples() {
    let a = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]));
    assert_eq!(gz_map(&a), vec![vec![2.0], vec![2.0, 1.0]]);
    let z = CVec::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
    assert!((gz_map(&projector(&z))[0][0] - 0.36).abs() < 1e-15);
    let e1 = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    assert_eq!(toric_moment(&e1), vec![0.0, 0.0]);
    let bary = CVec::from_element(3, c(1.0 / 3f64.sqrt(), 0.0));
    assert!(toric_moment(&bary).iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    let half = [Q::new(1, 2)];
    assert!(bohr_sommerfeld_level(&half, 2));
    assert!(!bohr_sommerfeld_level(&[Q::new(1, 3)], 2));
    assert!((1..20).all(|p| bohr_sommerfeld_level(&[Q::from_integer(1), Q::from_integer(0)], p)));
}

#[test]
fn kks_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let alpha = gzsc::linalg::random_orbit_point(&[2.0, 1.0, 0.0], &mut rng);
    let x = gzsc::linalg::unitary_log(&haar_unitary(3, &mut rng));
    assert!(kks_pairing(&alpha, &x, &x).abs() < 1e-12);
    let d1 = CMat::from_diagonal(&CVec::from_vec(vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, -2.0)]));
    let d2 = CMat::from_diagonal(&CVec::from_vec(vec![c(0.0, 0.5), c(0.0, 1.0), c(0.0, 0.0)]));
    assert!(kks_pairing(&alpha, &d1, &d2).abs() < 1e-12);
}

#[test]
fn fibre_samples() {
    let lambda = hw(&[2, 1, 0]);
    let v = [1.0, 1.5, 0.5];
    let pts = flag_fiber_sample(&lambda, &v, 100, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    for (i, a) in pts.iter().enumerate() {
        assert!(spectrum_error(a, &[2.0, 1.0, 0.0]) < 1e-9);
        let got = flatten(&gz_map(a));
        assert!(got.iter().zip(&v).all(|(x, y)| (x - y).abs() < 1e-8));
        for b in &pts[..i] {
            assert!(max_abs(&(a - b)) > 1e-6);
        }
    }
    assert!(GzPolytope::new(&lambda).margin(&v) > 0.0);
    assert!(flag_fiber_sample(&lambda, &[2.0, 1.5, 0.5], 1, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}

#[test]
fn equators_meet_twice() {
    let g = rotation(2, 0, 1, 1.0);
    let pts = toric_intersections(&g, &[0.5], &[0.5], &SolverConfig::for_dim(1)).unwrap();
    assert_eq!(pts.points.len(), 2);
    let far = toric_intersections(&rotation(2, 0, 1, 0.3), &[0.1], &[0.9], &SolverConfig::for_dim(1)).unwrap();
    assert!(far.none_found && far.points.is_empty());
}

#[test]
fn bergman_reproduces_monomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (n, p) in [(2usize, 6i64), (3, 5)] {
        let rule = SphereRule::for_degree(n, p as usize);
        let m = MonomialModule::new(n, p);
        let x: Vec<Complex64> = {
            let v = gzsc::linalg::haar_unitary(n, &mut rng).column(0).into_owned();
            v.iter().copied().collect()
        };
        for nu in m.basis() {
            let got = reproduce_monomial(p, nu, &x, &rule);
            let want: Complex64 = nu.iter().zip(&x).map(|(k, z)| z.powu(*k as u32)).product();
            assert!((got - want).norm() < 1e-7 * want.norm().max(1.0), "{nu:?}");
        }
        let y = x.iter().rev().copied().collect::<Vec<_>>();
        assert!((bergman_eval(p, &x, &y) - bergman_eval(p, &y, &x).conj()).norm() < 1e-12);
    }
}

#[test]
fn isotropic_pairing_two_ways() {
    let st = isotropic_state(3, 12, &[1.0 / 3.0, 1.0 / 4.0], 0, 48).unwrap();
    assert!(st.leakage() < 1e-8);
    let (a, b) = pairing_check(&st, &mut ChaCha8Rng::seed_from_u64(1));
    assert!((a - b).norm() < 1e-7 * a.norm().max(1.0));
    assert!(isotropic_state(2, 7, &[0.5], 0, 28).is_err());
}

#[test]
fn haar_is_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for n in 1..6 {
        assert!(unitarity_defect(&haar_unitary(n, &mut rng)) < 1e-13);
    }
}
