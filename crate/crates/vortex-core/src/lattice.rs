//! Normalized lattices, modular reduction and Wigner–Seitz cells.
//!
//! Points of the plane are complex numbers `x1 + i x2`. The normalized lattice of
//! shape `tau` is `sqrt(2π/Im τ)(ℤ + τℤ)`, whose cell has area `2π`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::{Error, Result, C64};

const REDUCTION_CAP: usize = 1000;

/// An element of SL(2,ℤ) acting by `τ ↦ (aτ + b)/(cτ + d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Modular {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Modular {
    pub const IDENTITY: Modular = Modular { a: 1, b: 0, c: 0, d: 1 };

    pub fn apply(&self, tau: C64) -> C64 {
        (tau * self.a as f64 + self.b as f64) / (tau * self.c as f64 + self.d as f64)
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    fn then(self, next: Modular) -> Modular {
        Modular {
            a: next.a * self.a + next.b * self.c,
            b: next.a * self.b + next.b * self.d,
            c: next.c * self.a + next.d * self.c,
            d: next.c * self.b + next.d * self.d,
        }
    }
}

/// Gauss reduction into `|τ| ≥ 1, −1/2 < Re τ ≤ 1/2`, returning the reduced value
/// and the accumulated matrix.
pub fn reduce_with_matrix(tau: C64) -> Result<(C64, Modular)> {
    if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
        return Err(Error::Domain("Im tau must be positive and finite"));
    }
    let eps = 1e-13;
    let mut t = tau;
    let mut g = Modular::IDENTITY;
    for _ in 0..REDUCTION_CAP {
        let shift = (t.re - 0.5).ceil();
        let mut m = shift as i64;
        if (t.re - m as f64 + 0.5).abs() < eps {
            m -= 1;
        }
        if m != 0 {
            t -= m as f64;
            g = g.then(Modular { a: 1, b: -m, c: 0, d: 1 });
        }
        if t.norm_sqr() < 1.0 - eps {
            t = -t.inv();
            g = g.then(Modular { a: 0, b: -1, c: 1, d: 0 });
        } else {
            if (t.norm_sqr() - 1.0).abs() <= eps && t.re < -eps {
                t = -t.inv();
                g = g.then(Modular { a: 0, b: -1, c: 1, d: 0 });
            }
            return Ok((t, g));
        }
    }
    Err(Error::NoConvergence { iterations: REDUCTION_CAP, residual: t.norm() })
}

pub fn reduce_to_fundamental_domain(tau: C64) -> Result<C64> {
    reduce_with_matrix(tau).map(|(t, _)| t)
}

pub fn in_fundamental_domain(tau: C64) -> bool {
    tau.im > 0.0 && tau.norm_sqr() >= 1.0 - 1e-12 && tau.re > -0.5 && tau.re <= 0.5 + 1e-12
}

/// `c_s = π n p q` for `s = p ω1 + q ω2`, reduced into `[0, 2π)`.
pub fn cocycle_constant(p: i64, q: i64, n: i64) -> f64 {
    let k = (n * p * q).rem_euclid(2);
    PI * k as f64
}

/// Distance to `2πℤ` of `c_{s+t} − c_s − c_t − (n/2) s∧t` for the normalized lattice.
pub fn cocycle_defect(n: i64, s: (i64, i64), t: (i64, i64)) -> f64 {
    let c = |p: i64, q: i64| PI * (n * p * q) as f64;
    let wedge = 2.0 * PI * (s.0 * t.1 - s.1 * t.0) as f64;
    let v = c(s.0 + t.0, s.1 + t.1) - c(s.0, s.1) - c(t.0, t.1) - 0.5 * n as f64 * wedge;
    let r = num_traits::Euclid::rem_euclid(&v, &(2.0 * PI));
    r.min(2.0 * PI - r)
}

/// `κ_c = sqrt((1 − 1/β)/2)`.
pub fn kappa_c(beta: f64) -> Result<f64> {
    if !(beta >= 1.0) {
        return Err(Error::Domain("beta must be at least 1"));
    }
    Ok(((1.0 - 1.0 / beta) / 2.0).sqrt())
}

/// `s ∧ t = s1 t2 − s2 t1`.
pub fn wedge(s: C64, t: C64) -> f64 {
    s.re * t.im - s.im * t.re
}

/// A normalized lattice with reduced shape parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    tau: C64,
}

impl Lattice {
    pub fn new(tau: C64) -> Result<Self> {
        Ok(Lattice { tau: reduce_to_fundamental_domain(tau)? })
    }

    pub fn hexagonal() -> Self {
        Lattice { tau: C64::new(0.5, 3.0.sqrt() / 2.0) }
    }

    pub fn square() -> Self {
        Lattice { tau: C64::new(0.0, 1.0) }
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    /// `sqrt(2π/Im τ)`, the length of the first generator.
    pub fn scale(&self) -> f64 {
        (2.0 * PI / self.tau.im).sqrt()
    }

    pub fn generators(&self) -> (C64, C64) {
        let g1 = self.scale();
        (C64::new(g1, 0.0), self.tau * g1)
    }

    pub fn area(&self) -> f64 {
        let (g1, g2) = self.generators();
        wedge(g1, g2).abs()
    }

    pub fn point(&self, p: i64, q: i64) -> C64 {
        let (g1, g2) = self.generators();
        g1 * p as f64 + g2 * q as f64
    }

    /// Coordinates `(s, t)` with `x = s ω1 + t ω2`.
    pub fn coords(&self, x: C64) -> (f64, f64) {
        let (g1, g2) = self.generators();
        let det = wedge(g1, g2);
        (wedge(x, g2) / det, wedge(g1, x) / det)
    }

    /// Dual basis `b_i` with `Re(conj(ω_i) b_j) = 2π δ_ij`.
    pub fn reciprocal(&self) -> (C64, C64) {
        let (g1, g2) = self.generators();
        let det = wedge(g1, g2);
        let rot = |v: C64| C64::new(v.im, -v.re);
        (rot(g2) * (2.0 * PI / det), -rot(g1) * (2.0 * PI / det))
    }

    /// Whether rotation by `2π/k` maps the lattice onto itself.
    pub fn admits_rotation(&self, k: usize) -> bool {
        if k == 0 {
            return false;
        }
        let xi = C64::from_polar(1.0, 2.0 * PI / k as f64);
        let (g1, g2) = self.generators();
        [g1, g2].iter().all(|&v| {
            let (s, t) = self.coords(xi * v);
            (s - s.round()).abs() < 1e-9 && (t - t.round()).abs() < 1e-9
        })
    }

    pub fn cell(&self) -> WignerSeitzCell {
        let (g1, g2) = self.generators();
        WignerSeitzCell::new(g1, g2)
    }

    /// The cell of `ℤ + τℤ`, the natural domain of theta functions.
    pub fn theta_cell(&self) -> WignerSeitzCell {
        WignerSeitzCell::new(C64::new(1.0, 0.0), self.tau)
    }
}

/// Shape data for a flux-`n` lattice with an optional rotation sector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeShape {
    pub lattice: Lattice,
    pub n: usize,
    pub k: usize,
    pub r: usize,
}

impl LatticeShape {
    pub fn new(tau: C64, n: usize, k: usize, r: usize) -> Result<Self> {
        let lattice = Lattice::new(tau)?;
        if n == 0 {
            return Err(Error::Domain("flux n must be positive"));
        }
        if ![1, 2, 3, 4, 6].contains(&k) {
            return Err(Error::Domain("rotation order must be 1, 2, 3, 4 or 6"));
        }
        if r >= k {
            return Err(Error::Domain("sector index must be below k"));
        }
        if !lattice.admits_rotation(k) {
            return Err(Error::Domain("lattice is not invariant under this rotation"));
        }
        Ok(LatticeShape { lattice, n, k, r })
    }
}

/// Physical parameters of the unscaled problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    pub kappa: f64,
    pub b: f64,
    pub n: usize,
}

impl PhysicalParams {
    pub fn new(kappa: f64, b: f64, n: usize) -> Result<Self> {
        if !(kappa > 0.0) || !(b > 0.0) || n == 0 {
            return Err(Error::Domain("kappa, b and n must be positive"));
        }
        Ok(PhysicalParams { kappa, b, n })
    }

    /// `λ = κ² n / b`.
    pub fn lambda(&self) -> f64 {
        self.kappa * self.kappa * self.n as f64 / self.b
    }

    /// Area of the unscaled cell, `2πn/b`.
    pub fn cell_area(&self) -> f64 {
        2.0 * PI * self.n as f64 / self.b
    }

    /// Length rescaling `sqrt(n/b)` between the unscaled and normalized lattices.
    pub fn length_scale(&self) -> f64 {
        (self.n as f64 / self.b).sqrt()
    }
}

/// The Voronoi cell of a lattice at the origin with a half-open boundary.
///
/// The owned boundary is the set of faces whose outward neighbour points left
/// (or straight down), together with the vertices where two owned faces meet.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerSeitzCell {
    pub basis: (C64, C64),
    /// Counter-clockwise vertices.
    pub vertices: Vec<C64>,
    /// Lattice vectors whose perpendicular bisectors carry an edge.
    pub faces: Vec<C64>,
    constraints: Vec<C64>,
}

fn dot(a: C64, b: C64) -> f64 {
    a.re * b.re + a.im * b.im
}

fn owned_face(v: C64) -> bool {
    let tol = 1e-12 * v.norm();
    v.re < -tol || (v.re.abs() <= tol && v.im < 0.0)
}

impl WignerSeitzCell {
    pub fn new(w1: C64, w2: C64) -> Self {
        let mut constraints = Vec::new();
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                if a != 0 || b != 0 {
                    constraints.push(w1 * a as f64 + w2 * b as f64);
                }
            }
        }
        let big = 4.0 * (w1.norm() + w2.norm());
        let mut poly = alloc::vec![
            C64::new(-big, -big),
            C64::new(big, -big),
            C64::new(big, big),
            C64::new(-big, big),
        ];
        for &v in &constraints {
            poly = clip(&poly, v);
        }
        let scale = w1.norm().max(w2.norm());
        let mut vertices: Vec<C64> = Vec::new();
        for p in poly {
            if vertices.iter().all(|q| (p - *q).norm() > 1e-9 * scale) {
                vertices.push(p);
            }
        }
        while vertices.len() > 1 && (vertices[0] - vertices[vertices.len() - 1]).norm() <= 1e-9 * scale {
            vertices.pop();
        }
        let nv = vertices.len();
        let mut faces = Vec::new();
        for i in 0..nv {
            let a = vertices[i];
            let b = vertices[(i + 1) % nv];
            let mid = (a + b) * 0.5;
            if let Some(&v) = constraints
                .iter()
                .find(|&&v| (dot(mid, v) - 0.5 * v.norm_sqr()).abs() < 1e-9 * v.norm_sqr())
            {
                faces.push(v);
            }
        }
        WignerSeitzCell { basis: (w1, w2), vertices, faces, constraints }
    }

    /// Membership in the half-open cell.
    pub fn contains(&self, p: C64) -> bool {
        for &v in &self.constraints {
            let d = dot(p, v) - 0.5 * v.norm_sqr();
            let tol = 1e-12 * v.norm_sqr();
            if d > tol || (d.abs() <= tol && !owned_face(v)) {
                return false;
            }
        }
        true
    }

    /// Membership in the closed cell.
    pub fn contains_closed(&self, p: C64) -> bool {
        self.constraints
            .iter()
            .all(|&v| dot(p, v) - 0.5 * v.norm_sqr() <= 1e-12 * v.norm_sqr())
    }

    fn coords(&self, x: C64) -> (f64, f64) {
        let (w1, w2) = self.basis;
        let det = wedge(w1, w2);
        (wedge(x, w2) / det, wedge(w1, x) / det)
    }

    /// The representative of `p` in the half-open cell and the lattice vector removed.
    pub fn reduce(&self, p: C64) -> (C64, C64) {
        let (w1, w2) = self.basis;
        let (s, t) = self.coords(p);
        let (s0, t0) = (s.round(), t.round());
        let mut best: Option<(C64, C64)> = None;
        for da in -2i64..=2 {
            for db in -2i64..=2 {
                let shift = w1 * (s0 + da as f64) + w2 * (t0 + db as f64);
                let q = p - shift;
                if self.contains(q) {
                    return (q, shift);
                }
                if best.map_or(true, |(b, _)| q.norm() < b.norm()) {
                    best = Some((q, shift));
                }
            }
        }
        best.unwrap_or((p, C64::new(0.0, 0.0)))
    }

    /// Number of translates `cell + t` owning `p`.
    pub fn owner_count(&self, p: C64) -> usize {
        let (w1, w2) = self.basis;
        let (s, t) = self.coords(p);
        let mut count = 0;
        for da in -3i64..=3 {
            for db in -3i64..=3 {
                let shift = w1 * (s.round() + da as f64) + w2 * (t.round() + db as f64);
                if self.contains(p - shift) {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.vertices {
            for b in &self.vertices {
                d = d.max((*a - *b).norm());
            }
        }
        d
    }

    pub fn edge_midpoints(&self) -> Vec<C64> {
        let nv = self.vertices.len();
        (0..nv).map(|i| (self.vertices[i] + self.vertices[(i + 1) % nv]) * 0.5).collect()
    }

    pub fn is_hexagon(&self) -> bool {
        self.vertices.len() == 6
    }
}

fn clip(poly: &[C64], v: C64) -> Vec<C64> {
    let lim = 0.5 * v.norm_sqr();
    let inside = |p: C64| dot(p, v) <= lim;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ia, ib) = (inside(a), inside(b));
        if ia {
            out.push(a);
        }
        if ia != ib {
            let da = dot(a, v) - lim;
            let db = dot(b, v) - lim;
            out.push(a + (b - a) * (da / (da - db)));
        }
    }
    out
}
