use std::f64::consts::PI;

use proptest::prelude::*;
use vortex_core::lattice::*;
use vortex_core::{Error, C64};

fn hex_tau() -> C64 {
    C64::from_polar(1.0, PI / 3.0)
}

#[test]
fn reduction_examples() {
    let t = reduce_to_fundamental_domain(hex_tau()).unwrap();
    assert!((t - hex_tau()).norm() < 1e-15);
    let t = reduce_to_fundamental_domain(C64::new(3.0, 1.0)).unwrap();
    assert!((t - C64::new(0.0, 1.0)).norm() < 1e-14);
    // -1/(0.1 + 0.1i) = -5 + 5i, then a translation by 5.
    let (t, g) = reduce_with_matrix(C64::new(0.1, 0.1)).unwrap();
    assert!((t - C64::new(0.0, 5.0)).norm() < 1e-12);
    assert_eq!(g.det(), 1);
    assert!((g.apply(C64::new(0.1, 0.1)) - t).norm() < 1e-12);
}

#[test]
fn reduction_rejects_non_upper_half_plane() {
    assert!(matches!(reduce_to_fundamental_domain(C64::new(0.2, 0.0)), Err(Error::Domain(_))));
    assert!(matches!(reduce_to_fundamental_domain(C64::new(0.2, -1.0)), Err(Error::Domain(_))));
    assert!(reduce_to_fundamental_domain(C64::new(f64::NAN, 1.0)).is_err());
}

#[test]
fn normalized_generators() {
    let sq = Lattice::square();
    let (g1, g2) = sq.generators();
    assert!((g1 - C64::new((2.0 * PI).sqrt(), 0.0)).norm() < 1e-14);
    assert!((g2 - C64::new(0.0, (2.0 * PI).sqrt())).norm() < 1e-14);
    assert!((Lattice::hexagonal().area() - 2.0 * PI).abs() < 1e-12);
}

#[test]
fn cocycle_examples() {
    assert_eq!(cocycle_constant(1, 0, 5), 0.0);
    assert!((cocycle_constant(1, 1, 1) - PI).abs() < 1e-15);
    assert_eq!(cocycle_constant(1, 1, 2), 0.0);
}

#[test]
fn cocycle_condition_exhaustive() {
    for n in 1..=6 {
        for p in -5..=5 {
            for q in -5..=5 {
                for p2 in -5..=5 {
                    for q2 in -5..=5 {
                        assert!(cocycle_defect(n, (p, q), (p2, q2)) < 1e-9);
                    }
                }
            }
        }
    }
}

#[test]
fn kappa_c_examples() {
    assert_eq!(kappa_c(1.0).unwrap(), 0.0);
    assert!((kappa_c(2.0).unwrap() - 0.5).abs() < 1e-15);
    assert!((kappa_c(1e300).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    assert!(kappa_c(0.99).is_err());
}

#[test]
fn cell_shapes() {
    let hex = Lattice::hexagonal().cell();
    assert!(hex.is_hexagon());
    let r = hex.vertices[0].norm();
    for (i, v) in hex.vertices.iter().enumerate() {
        assert!((v.norm() - r).abs() < 1e-12);
        let w = hex.vertices[(i + 1) % 6];
        assert!(((w - *v).norm() - r).abs() < 1e-12);
    }
    let sq = Lattice::square().cell();
    assert_eq!(sq.vertices.len(), 4);
    let half = (2.0 * PI).sqrt() / 2.0;
    for v in &sq.vertices {
        assert!((v.re.abs() - half).abs() < 1e-12 && (v.im.abs() - half).abs() < 1e-12);
    }
}

#[test]
fn cells_are_centrally_symmetric() {
    for tau in [hex_tau(), C64::new(0.0, 1.0), C64::new(0.3, 1.2), C64::new(-0.41, 1.05)] {
        let c = Lattice::new(tau).unwrap().cell();
        for v in &c.vertices {
            assert!(c.vertices.iter().any(|w| (*w + *v).norm() < 1e-12));
        }
    }
}

#[test]
fn translates_tile_sample_grid() {
    for tau in [C64::new(0.3, 1.2), hex_tau(), C64::new(0.0, 1.0)] {
        let lat = Lattice::new(tau).unwrap();
        let cell = lat.cell();
        let span = 2.0 * cell.diameter();
        for i in 0..100 {
            for j in 0..100 {
                let p = C64::new(span * (i as f64 / 99.0 - 0.5), span * (j as f64 / 99.0 - 0.5));
                assert_eq!(cell.owner_count(p), 1, "tau {tau} point {p}");
            }
        }
        // Vertices and edge midpoints exercise the half-open convention.
        for &v in cell.vertices.iter().chain(cell.edge_midpoints().iter()) {
            assert_eq!(cell.owner_count(v), 1, "tau {tau} boundary {v}");
        }
    }
}

#[test]
fn square_cell_owns_left_and_bottom() {
    let c = Lattice::square().cell();
    let h = (2.0 * PI).sqrt() / 2.0;
    assert!(c.contains(C64::new(-h, 0.0)));
    assert!(c.contains(C64::new(0.0, -h)));
    assert!(c.contains(C64::new(-h, -h)));
    assert!(!c.contains(C64::new(h, 0.0)));
    assert!(!c.contains(C64::new(0.0, h)));
    assert!(!c.contains(C64::new(h, h)));
    assert!(!c.contains(C64::new(-h, h)));
    assert!(!c.contains(C64::new(h, -h)));
}

#[test]
fn shape_validation() {
    let hex = hex_tau();
    assert!(LatticeShape::new(hex, 2, 6, 2).is_ok());
    assert!(LatticeShape::new(hex, 2, 4, 0).is_err());
    assert!(LatticeShape::new(C64::new(0.0, 1.0), 2, 3, 0).is_err());
    assert!(LatticeShape::new(hex, 2, 6, 6).is_err());
    assert!(LatticeShape::new(hex, 0, 2, 0).is_err());
    assert!(LatticeShape::new(hex, 1, 5, 0).is_err());
}

fn upper_half_plane() -> impl Strategy<Value = C64> {
    (-20.0f64..20.0, 0.01f64..20.0).prop_map(|(x, y)| C64::new(x, y))
}

proptest! {
    #[test]
    fn reduction_lands_in_domain_and_is_idempotent(tau in upper_half_plane()) {
        let (t, g) = reduce_with_matrix(tau).unwrap();
        prop_assert!(in_fundamental_domain(t));
        prop_assert!(t.norm() >= 1.0 - 1e-12);
        prop_assert!(t.re > -0.5 - 1e-12 && t.re <= 0.5 + 1e-12);
        prop_assert_eq!(g.det(), 1);
        prop_assert!((g.apply(tau) - t).norm() < 1e-8 * (1.0 + t.norm()));
        let t2 = reduce_to_fundamental_domain(t).unwrap();
        prop_assert!((t2 - t).norm() < 1e-14);
    }

    #[test]
    fn normalized_area_is_two_pi(tau in upper_half_plane()) {
        let lat = Lattice::new(tau).unwrap();
        let (g1, g2) = lat.generators();
        let area = wedge(g1, g2).abs();
        prop_assert!((area / (2.0 * PI) - 1.0).abs() < 1e-12);
        prop_assert!((g1.re * lat.tau().im * g1.re - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn reduce_returns_owned_representative(tau in upper_half_plane(), x in -30.0f64..30.0, y in -30.0f64..30.0) {
        let cell = Lattice::new(tau).unwrap().cell();
        let p = C64::new(x, y);
        let (q, shift) = cell.reduce(p);
        prop_assert!(cell.contains(q));
        prop_assert!((q + shift - p).norm() < 1e-12 * (1.0 + p.norm()));
        prop_assert_eq!(cell.owner_count(p), 1);
    }

    #[test]
    fn physical_rescaling(kappa in 0.1f64..5.0, b in 0.01f64..5.0, n in 1usize..10) {
        let pp = PhysicalParams::new(kappa, b, n).unwrap();
        prop_assert!((pp.lambda() - kappa * kappa * n as f64 / b).abs() < 1e-12 * pp.lambda());
        prop_assert!((pp.cell_area() * b / (2.0 * PI * n as f64) - 1.0).abs() < 1e-14);
        prop_assert!((pp.length_scale().powi(2) * 2.0 * PI - pp.cell_area()).abs() < 1e-10 * pp.cell_area());
    }
}
