use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vortex_core::lattice::Lattice;
use vortex_core::theta::*;
use vortex_core::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn hex() -> C64 {
    Lattice::hexagonal().tau()
}

fn random_z(rng: &mut ChaCha8Rng, tau: C64) -> C64 {
    C64::new(rng.gen_range(-0.5..0.5), 0.0) + tau * rng.gen_range(-1.0..1.0)
}

fn random_element(rng: &mut ChaCha8Rng, space: &ThetaSpace) -> ThetaElement {
    let c = (0..space.n()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    space.element(c).unwrap()
}

/// Relative size of `θ(z)` in the gauge-invariant norm `|θ| e^{−πn(Im z)²/Im τ}`.
fn weighted(theta: &ThetaElement, z: C64) -> f64 {
    theta.normalized().eval(z).norm() * theta.space.log_gauge_weight(z).exp()
}

#[test]
fn basis_relations_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for tau in [hex(), C64::new(0.0, 1.0), C64::new(0.3, 1.2)] {
        for n in 1..=6 {
            let sp = ThetaSpace::new(n, tau).unwrap();
            let nf = n as f64;
            for _ in 0..100 {
                let z = random_z(&mut rng, tau);
                let v = sp.basis_values(z);
                let shifted = sp.basis_values(z + 1.0 / nf);
                let neg = sp.basis_values(-z);
                let scale = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
                for m in 0..n {
                    let phase = (2.0 * PI * I * m as f64 / nf).exp();
                    assert!((shifted[m] - phase * v[m]).norm() < 1e-12 * scale);
                    assert!((neg[m] - v[(n - m) % n]).norm() < 1e-12 * scale);
                    let s = sp.shift_by_tau_over_n(m, z);
                    assert!((s.lhs - s.rhs_minus).norm() < 1e-11 * s.lhs.norm().max(s.rhs_minus.norm()));
                }
            }
        }
    }
}

#[test]
fn shift_relation_examples_fix_the_sign() {
    let tau = hex();
    let two = ThetaSpace::new(2, tau).unwrap();
    let s = two.shift_by_tau_over_n(0, C64::new(0.1, 0.2));
    assert!((s.lhs - s.rhs_minus).norm() < 1e-10 * s.lhs.norm());
    assert!((s.lhs - s.rhs_plus).norm() > 1e-3 * s.lhs.norm());
    let one = ThetaSpace::new(1, tau).unwrap();
    let s = one.shift_by_tau_over_n(0, C64::new(0.0, 0.0));
    assert!((s.lhs - s.rhs_minus).norm() < 1e-10 * s.lhs.norm());
    // Index 5 of V_6 wraps to 0.
    let six = ThetaSpace::new(6, tau).unwrap();
    let z = C64::new(0.17, -0.11);
    let s = six.shift_by_tau_over_n(5, z);
    let wrap = six.basis_values(z)[0] / six.gamma() * (-2.0 * PI * I * z).exp();
    assert!((s.rhs_minus - wrap).norm() < 1e-14 * wrap.norm());
    assert!((s.lhs - s.rhs_minus).norm() < 1e-10 * s.lhs.norm());
}

#[test]
fn basis_index_out_of_range() {
    let sp = ThetaSpace::new(3, hex()).unwrap();
    assert!(sp.basis(3, C64::new(0.0, 0.0)).is_err());
    assert!(sp.element(vec![C64::new(1.0, 0.0); 2]).is_err());
    assert!(ThetaSpace::new(0, hex()).is_err());
    assert!(ThetaSpace::new(1, C64::new(0.0, -1.0)).is_err());
}

#[test]
fn integer_period_of_first_generator() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sp = ThetaSpace::new(1, hex()).unwrap();
    for _ in 0..20 {
        let z = random_z(&mut rng, hex());
        let v = sp.basis_values(z)[0];
        assert!((sp.basis_values(z + 1.0)[0] - v).norm() < 1e-12 * v.norm());
    }
}

#[test]
fn third_generator_phase() {
    let sp = ThetaSpace::new(3, hex()).unwrap();
    let z = C64::new(0.21, 0.13);
    let lhs = sp.basis(1, z + 1.0 / 3.0).unwrap();
    let rhs = (2.0 * PI * I / 3.0).exp() * sp.basis(1, z).unwrap();
    assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
    let four = ThetaSpace::new(4, hex()).unwrap();
    assert!((four.basis(1, -z).unwrap() - four.basis(3, z).unwrap()).norm() < 1e-12);
}

#[test]
fn eval_is_linear_in_coefficients() {
    let sp = ThetaSpace::new(4, hex()).unwrap();
    let z = C64::new(-0.3, 0.4);
    let zero = sp.element(vec![C64::new(0.0, 0.0); 4]).unwrap();
    assert_eq!(zero.eval(z), C64::new(0.0, 0.0));
    for m in 0..4 {
        assert_eq!(sp.basis_element(m).eval(z), sp.basis(m, z).unwrap());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let e = random_element(&mut rng, &sp);
        let w = random_z(&mut rng, hex());
        let (r1, r2) = e.quasi_periodicity_residual(w);
        assert!(r1 < 1e-11 && r2 < 1e-11, "{r1} {r2}");
    }
}

#[test]
fn parity_split_dimensions() {
    let tau = hex();
    let dims = |n| {
        let (e, o) = ThetaSpace::new(n, tau).unwrap().parity_split();
        (e.len(), o.len())
    };
    assert_eq!(dims(1), (1, 0));
    assert_eq!(dims(2), (2, 0));
    assert_eq!(dims(3), (2, 1));
    for n in 1..=10 {
        let (e, o) = dims(n);
        assert_eq!(e + o, n);
        assert_eq!(o, (n - 1) / 2);
    }
    let z = C64::new(0.23, -0.31);
    for n in 1..=7 {
        let (even, odd) = ThetaSpace::new(n, tau).unwrap().parity_split();
        for e in &even {
            assert!((e.eval(-z) - e.eval(z)).norm() < 1e-12);
        }
        for o in &odd {
            assert!((o.eval(-z) + o.eval(z)).norm() < 1e-12);
        }
    }
}

#[test]
fn zero_count_examples() {
    let tau = hex();
    let one = ThetaSpace::new(1, tau).unwrap();
    let t0 = one.basis_element(0);
    assert_eq!(t0.count_zeros().unwrap(), 1);
    let t2 = product(&t0, &t0).unwrap();
    let t4 = product(&t2, &t2).unwrap();
    assert_eq!(t4.count_zeros().unwrap(), 4);
    let w = ThetaSpace::new(2, tau).unwrap().wronskian_element().unwrap();
    assert_eq!(w.n(), 4);
    assert_eq!(w.count_zeros().unwrap(), 4);
}

#[test]
fn generator_zero_is_at_half_period() {
    for tau in [hex(), C64::new(0.0, 1.0), C64::new(0.3, 1.2), C64::new(-0.2, 1.5), C64::new(0.5, 2.0)] {
        let sp = ThetaSpace::new(1, tau).unwrap();
        let d = sp.basis_element(0).find_zeros().unwrap();
        assert_eq!(d.entries.len(), 1);
        assert_eq!(d.entries[0].1, 1);
        let cell = sp.cell();
        let target = cell.reduce((tau + 1.0) * 0.5).0;
        assert!((d.entries[0].0 - target).norm() < 1e-10, "{tau}: {:?}", d.entries);
    }
}

#[test]
fn random_elements_have_n_polished_zeros() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sp = ThetaSpace::new(3, hex()).unwrap();
    let cell = sp.cell();
    for _ in 0..10 {
        let e = random_element(&mut rng, &sp);
        let d = e.find_zeros().unwrap();
        assert_eq!(d.degree(), 3);
        for (z, _) in &d.entries {
            assert!(cell.contains(*z));
            assert!(weighted(&e, *z) < 1e-11);
        }
        // Finer truncation leaves the divisor degree unchanged.
        let finer = ThetaElement { space: sp.with_trunc(sp.trunc() + 4), coeffs: e.coeffs.clone() };
        assert_eq!(finer.find_zeros().unwrap().degree(), 3);
    }
}

#[test]
fn zero_count_is_n_for_random_elements() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for tau in [hex(), C64::new(0.0, 1.0), C64::new(0.3, 1.2)] {
        for n in 1..=10 {
            let sp = ThetaSpace::new(n, tau).unwrap();
            for _ in 0..3 {
                assert_eq!(random_element(&mut rng, &sp).count_zeros().unwrap(), n);
            }
        }
    }
}

#[test]
fn products() {
    let tau = hex();
    let one = ThetaSpace::new(1, tau).unwrap();
    let t0 = one.basis_element(0);
    let sq = product(&t0, &t0).unwrap();
    let d = sq.find_zeros().unwrap();
    assert_eq!(d.entries.len(), 1);
    assert_eq!(d.entries[0].1, 2);
    assert_eq!(d.multiplicity_at(&sq.space.cell(), (tau + 1.0) * 0.5, 1e-8), 2);
    let zero = one.element(vec![C64::new(0.0, 0.0)]).unwrap();
    assert!(product(&sq, &zero).unwrap().coeffs.iter().all(|c| c.norm() < 1e-14));
    let left = product(&sq, &t0).unwrap();
    let right = product(&t0, &sq).unwrap();
    for (a, b) in left.coeffs.iter().zip(&right.coeffs) {
        assert!((a - b).norm() < 1e-10);
    }
    let other = ThetaSpace::new(1, C64::new(0.0, 1.0)).unwrap().basis_element(0);
    assert!(product(&t0, &other).is_err());
}

#[test]
fn singular_family() {
    for n in [2usize, 3] {
        let sp = ThetaSpace::new(n, hex()).unwrap();
        let cell = sp.cell();
        let mut members = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let e = sp.singular_family(a, b).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64((a * n + b) as u64);
                for _ in 0..5 {
                    let (r1, r2) = e.quasi_periodicity_residual(random_z(&mut rng, hex()));
                    assert!(r1 < 1e-10 && r2 < 1e-10);
                }
                let d = e.find_zeros().unwrap();
                assert_eq!(d.entries.len(), 1);
                assert_eq!(d.entries[0].1 as usize, n);
                assert_eq!(d.multiplicity_at(&cell, sp.singular_zero(a, b), 1e-8) as usize, n);
                members.push(e);
            }
        }
        for i in 0..members.len() {
            for j in 0..i {
                assert!(collinearity_defect(&members[i], &members[j]) > 1e-3);
            }
        }
    }
    let sp = ThetaSpace::new(2, hex()).unwrap();
    assert!(sp.singular_family(2, 0).is_err());
    // The (0, 0) member is the square of the generator.
    let t0 = ThetaSpace::new(1, hex()).unwrap().basis_element(0);
    let sq = product(&t0, &t0).unwrap();
    assert!(collinearity_defect(&sq, &sp.singular_family(0, 0).unwrap()) < 1e-10);
}

#[test]
fn wronskian_relations() {
    let tau = hex();
    let two = ThetaSpace::new(2, tau).unwrap();
    let z = C64::new(0.13, 0.27);
    assert!((two.wronskian(-z) + two.wronskian(z)).norm() < 1e-12 * two.wronskian(z).norm());
    assert!(two.wronskian(C64::new(0.0, 0.0)).norm() < 1e-12);
    assert!((two.wronskian(z + 0.5) + two.wronskian(z)).norm() < 1e-10 * two.wronskian(z).norm());
    let w = two.wronskian_element().unwrap();
    let d = w.find_zeros().unwrap();
    assert_eq!(d.degree(), 4);
    let cell = w.space.cell();
    for (a, b) in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)] {
        let p = (tau + 1.0) * 0.5 + a + tau * b;
        assert_eq!(d.multiplicity_at(&cell, p, 1e-7), 1, "missing zero at {p}");
    }
    let three = ThetaSpace::new(3, tau).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let z = random_z(&mut rng, tau);
        let v = three.wronskian(z);
        assert!((three.wronskian(z + 1.0 / 3.0) - v).norm() < 1e-9 * v.norm());
        assert!((three.wronskian(-z) - v).norm() < 1e-9 * v.norm());
    }
}

#[test]
fn quotients() {
    let tau = hex();
    let t0 = ThetaSpace::new(1, tau).unwrap().basis_element(0);
    let t2 = product(&t0, &t0).unwrap();
    let t3 = product(&t2, &t0).unwrap();
    let q = quotient_check(&t3, &t0).unwrap();
    assert!(q.divisible);
    let qe = q.quotient.unwrap();
    assert_eq!(qe.n(), 2);
    assert!(collinearity_defect(&qe, &t2) < 1e-8);

    let two = ThetaSpace::new(2, tau).unwrap();
    let a = two.singular_family(0, 0).unwrap();
    let b = two.singular_family(1, 0).unwrap();
    assert!(!quotient_check(&a, &b).unwrap().divisible);

    let w = two.wronskian_element().unwrap();
    let q = quotient_check(&w, &t0).unwrap();
    assert!(q.divisible && q.residual < 1e-8);
    assert_eq!(q.quotient.unwrap().n(), 3);
    let shifted = ThetaSpace::new(3, tau).unwrap().singular_family(1, 1).unwrap();
    assert!(!quotient_check(&w, &shifted).unwrap().divisible);
}

#[test]
fn identical_divisors_mean_collinear() {
    let tau = C64::new(0.3, 1.2);
    let t0 = ThetaSpace::new(1, tau).unwrap().basis_element(0);
    let t2 = product(&t0, &t0).unwrap();
    let t3 = product(&t2, &t0).unwrap();
    let s3 = ThetaSpace::new(3, tau).unwrap().singular_family(0, 0).unwrap();
    let (d1, d2) = (t3.find_zeros().unwrap(), s3.find_zeros().unwrap());
    assert_eq!(d1.entries.len(), d2.entries.len());
    assert!((d1.entries[0].0 - d2.entries[0].0).norm() < 1e-8);
    assert!(collinearity_defect(&t3, &s3) < 1e-10);
}

#[test]
fn winding_of_identity_around_square() {
    let sq = [C64::new(-1.0, -1.0), C64::new(1.0, -1.0), C64::new(1.0, 1.0), C64::new(-1.0, 1.0)];
    let f = |z: C64| (z * z * z, z * z * 3.0);
    assert_eq!(winding_on_polygon(&f, &sq).unwrap(), 3);
    let g = |z: C64| (z - 5.0, C64::new(1.0, 0.0));
    assert_eq!(winding_on_polygon(&g, &sq).unwrap(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quasi_periodicity_of_random_elements(
        n in 1usize..8,
        re in proptest::collection::vec(-1.0f64..1.0, 8),
        im in proptest::collection::vec(-1.0f64..1.0, 8),
        x in -0.5f64..0.5,
        y in -1.0f64..1.0,
    ) {
        let sp = ThetaSpace::new(n, hex()).unwrap();
        let e = sp.element((0..n).map(|m| C64::new(re[m], im[m])).collect()).unwrap();
        prop_assume!(!e.is_zero());
        let z = C64::new(x, 0.0) + hex() * y;
        let (r1, r2) = e.quasi_periodicity_residual(z);
        prop_assert!(r1 < 1e-10 && r2 < 1e-10);
    }

    #[test]
    fn divisor_degree_is_n(
        n in 1usize..6,
        re in proptest::collection::vec(-1.0f64..1.0, 6),
        im in proptest::collection::vec(-1.0f64..1.0, 6),
    ) {
        let sp = ThetaSpace::new(n, C64::new(0.0, 1.0)).unwrap();
        let e = sp.element((0..n).map(|m| C64::new(re[m], im[m])).collect()).unwrap();
        prop_assume!(e.coeffs.iter().any(|c| c.norm() > 1e-3));
        let d = e.find_zeros().unwrap();
        prop_assert_eq!(d.degree() as usize, n);
        let cell = sp.cell();
        for (z, _) in &d.entries {
            prop_assert!(cell.contains(*z));
        }
    }
}
