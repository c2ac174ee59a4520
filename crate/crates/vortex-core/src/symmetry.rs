//! Rotation actions on `V_n`, their eigenspaces `V_{n,k,r}`, orbit diagrams of
//! rotation-invariant divisors, the `C_6` spanning table and irreducibility.
//!
//! The rotation acts by `ψ ↦ ψ∘R_ξ` with `ξ = e^{2πi/k}`. On theta functions this
//! is `(Tθ)(z) = e^{(C/2)(ξ²−1)z²} θ(ξz)` with `C = πn/Im τ`, so an eigenvector
//! with eigenvalue `ξ^r` vanishes at the origin to an order `≡ r (mod k)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::{Lattice, LatticeShape, WignerSeitzCell};
use crate::linalg::{null_space, singular_values};
use crate::theta::{fit_function, product, quotient_check, ThetaElement, ThetaSpace};
use crate::{Error, Result, C64};

const RANK_TOL: f64 = 1e-8;
const GUARD_LO: f64 = 1e-10;
const GUARD_HI: f64 = 1e-6;

fn root_of_unity(k: usize, r: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * r as f64 / k as f64)
}

/// Lattice used by default for a rotation order.
pub fn default_lattice(k: usize) -> Lattice {
    match k {
        4 => Lattice::square(),
        _ => Lattice::hexagonal(),
    }
}

/// Matrix of the rotation action in the `θ_{n,m}` basis, by collocation.
///
/// The `f_n θ_{n,m}` are orthogonal with equal norms, so the matrix is unitary
/// in this basis as it stands.
pub fn rotation_matrix_t(space: &ThetaSpace, k: usize) -> Result<DMatrix<C64>> {
    if !matches!(k, 2 | 3 | 4 | 6) {
        return Err(Error::Domain("rotation order must be 2, 3, 4 or 6"));
    }
    let lattice = Lattice::new(space.tau())?;
    if (lattice.tau() - space.tau()).norm() > 1e-12 || !lattice.admits_rotation(k) {
        return Err(Error::Incompatible { k, residual: f64::INFINITY });
    }
    let n = space.n();
    let xi = root_of_unity(k, 1);
    let c = PI * n as f64 / space.tau().im;
    let factor = (xi * xi - 1.0) * (c / 2.0);
    let mut t = DMatrix::<C64>::zeros(n, n);
    for m in 0..n {
        let basis = space.basis_element(m);
        let f = |z: C64| (factor * z * z).exp() * basis.eval(xi * z);
        let (fit, _) = match fit_function(space, f, RANK_TOL) {
            Ok(v) => v,
            Err(Error::Collocation { residual, .. }) => return Err(Error::Incompatible { k, residual }),
            Err(e) => return Err(e),
        };
        for (j, c) in fit.coeffs.iter().enumerate() {
            t[(j, m)] = *c;
        }
    }
    Ok(t)
}

/// `‖T*T − I‖` and `‖T^k − I‖` in operator norm.
pub fn rotation_defects(t: &DMatrix<C64>, k: usize) -> (f64, f64) {
    let n = t.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let unitary = singular_values(&(t.adjoint() * t - &id))[0];
    let mut p = id.clone();
    for _ in 0..k {
        p = &p * t;
    }
    (unitary, singular_values(&(p - id))[0])
}

fn eigenspace_once(space: &ThetaSpace, k: usize, r: usize) -> Result<(Vec<ThetaElement>, Option<f64>)> {
    let t = rotation_matrix_t(space, k)?;
    let n = space.n();
    let shifted = &t - DMatrix::<C64>::identity(n, n) * root_of_unity(k, r % k);
    let s = singular_values(&shifted);
    let border = s.iter().copied().find(|&v| (GUARD_LO..=GUARD_HI).contains(&v));
    let basis = null_space(&shifted, RANK_TOL);
    let elems = (0..basis.ncols())
        .map(|j| ThetaElement { space: *space, coeffs: basis.column(j).iter().copied().collect() })
        .collect();
    Ok((elems, border))
}

/// Basis of the `ξ^r`-eigenspace of the rotation action on `V_n`.
///
/// Singular values inside the guard band trigger two retries with a wider
/// series truncation before giving up.
pub fn eigenspace(space: &ThetaSpace, k: usize, r: usize) -> Result<Vec<ThetaElement>> {
    let mut sp = *space;
    let mut last = 0.0;
    for _ in 0..3 {
        let (elems, border) = eigenspace_once(&sp, k, r)?;
        match border {
            None => return Ok(elems),
            Some(b) => {
                last = b;
                sp = sp.with_trunc(sp.trunc() + 8);
            }
        }
    }
    Err(Error::Ambiguous(last))
}

/// `dim V_{n,k,r}` on the default lattice for `k`.
pub fn dim_v(n: usize, k: usize, r: usize) -> Result<usize> {
    let space = ThetaSpace::for_lattice(n, &default_lattice(k))?;
    Ok(eigenspace(&space, k, r)?.len())
}

/// Multiplicities of a rotation-invariant divisor on the hexagonal lattice by
/// orbit type: the origin (1 point), cell vertices (2), edge midpoints (3) and
/// free orbits (6).
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitDiagram {
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
    pub m6: usize,
    pub orbit_representatives: Vec<(C64, usize)>,
}

impl OrbitDiagram {
    pub fn degree(&self) -> usize {
        self.m1 + 2 * self.m2 + 3 * self.m3 + 6 * self.m6
    }

    /// Every point of the divisor with its multiplicity (free orbits placed at
    /// distinct generic positions).
    pub fn divisor_points(&self, cell: &WignerSeitzCell) -> Vec<(C64, u32)> {
        let xi = root_of_unity(6, 1);
        let mut out = Vec::new();
        for &(p, size) in &self.orbit_representatives {
            let mult = match size {
                1 => self.m1,
                2 => self.m2,
                3 => self.m3,
                _ => 1,
            } as u32;
            if mult == 0 {
                continue;
            }
            let mut q = p;
            let mut orbit: Vec<C64> = Vec::new();
            for _ in 0..6 {
                let c = cell.reduce(q).0;
                if !orbit.iter().any(|o| cell.reduce(*o - c).0.norm() < 1e-9) {
                    orbit.push(c);
                }
                q *= xi;
            }
            out.extend(orbit.into_iter().map(|c| (c, mult)));
        }
        out
    }
}

/// Representatives of the special orbits in the hexagonal theta cell.
pub fn special_orbits(tau: C64) -> (C64, C64, C64) {
    (C64::new(0.0, 0.0), (tau + 1.0) / 3.0, C64::new(0.5, 0.0))
}

/// All solutions of `m1 + 2 m2 + 3 m3 + 6 m6 = n` with `m1 ≡ r (mod 6)`.
pub fn enumerate_divisor_diagrams(n: usize, r: usize) -> Vec<OrbitDiagram> {
    let tau = Lattice::hexagonal().tau();
    let (origin, vertex, edge) = special_orbits(tau);
    let mut out = Vec::new();
    for m6 in 0..=n / 6 {
        for m3 in 0..=(n - 6 * m6) / 3 {
            for m2 in 0..=(n - 6 * m6 - 3 * m3) / 2 {
                let m1 = n - 6 * m6 - 3 * m3 - 2 * m2;
                if m1 % 6 != r % 6 {
                    continue;
                }
                let mut reps = vec![(origin, 1), (vertex, 2), (edge, 3)];
                for j in 0..m6 {
                    let t = 0.11 + 0.07 * j as f64;
                    reps.push((C64::new(t, 0.0) + tau * (0.5 * t + 0.013), 6));
                }
                out.push(OrbitDiagram { m1, m2, m3, m6, orbit_representatives: reps });
            }
        }
    }
    out
}

/// Dimension predicted by the diagrams: each free orbit is one complex degree
/// of freedom, and diagrams with fewer free orbits are its degenerations.
pub fn diagram_dimension(n: usize, r: usize) -> usize {
    enumerate_divisor_diagrams(n, r).iter().map(|d| d.m6 + 1).max().unwrap_or(0)
}

/// The generators of the `C_6` tables: `θ_0 ∈ V_2` with zeros at the cell
/// vertices, `θ_2 ∈ V_2` with a double zero at the origin, and `θ_1 ∈ V_4`, the
/// Wronskian of `V_2`, with zeros at the origin and the three half periods.
#[derive(Clone, Debug)]
pub struct Generators {
    pub theta0: ThetaElement,
    pub theta1: ThetaElement,
    pub theta2: ThetaElement,
}

fn vanishing_at(space: &ThetaSpace, p: C64) -> Result<ThetaElement> {
    let row = DMatrix::from_fn(1, space.n(), |_, m| space.basis_values(p)[m]);
    let ns = null_space(&row, 1e-12);
    if ns.ncols() != 1 {
        return Err(Error::KernelDimension(ns.ncols()));
    }
    Ok(ThetaElement { space: *space, coeffs: ns.column(0).iter().copied().collect() }.normalized())
}

impl Generators {
    pub fn new(tau: C64) -> Result<Self> {
        let v2 = ThetaSpace::new(2, tau)?;
        let theta0 = vanishing_at(&v2, (tau + 1.0) / 3.0)?;
        let theta2 = vanishing_at(&v2, C64::new(0.0, 0.0))?;
        let theta1 = v2.wronskian_element()?.normalized();
        Ok(Generators { theta0, theta1, theta2 })
    }

    pub fn hexagonal() -> Result<Self> {
        Self::new(Lattice::hexagonal().tau())
    }
}

/// `θ_0^{e0} θ_1^{e1} θ_2^{e2}`, exponents possibly negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FormalProduct {
    pub e0: i32,
    pub e1: i32,
    pub e2: i32,
}

const fn fp(e0: i32, e1: i32, e2: i32) -> FormalProduct {
    FormalProduct { e0, e1, e2 }
}

impl FormalProduct {
    pub fn degree(&self) -> i32 {
        2 * self.e0 + 4 * self.e1 + 2 * self.e2
    }

    pub fn origin_order(&self) -> i32 {
        self.e1 + 2 * self.e2
    }

    fn power(g: &ThetaElement, e: i32, acc: Option<ThetaElement>) -> Result<Option<ThetaElement>> {
        let mut acc = acc;
        for _ in 0..e.max(0) {
            acc = Some(match acc {
                None => g.clone(),
                Some(a) => product(&a, g)?.normalized(),
            });
        }
        Ok(acc)
    }

    /// Realizes the product; negative exponents are divided out only when the
    /// quotient is certified.
    pub fn build(&self, g: &Generators) -> Result<ThetaElement> {
        let gens = [(&g.theta0, self.e0), (&g.theta1, self.e1), (&g.theta2, self.e2)];
        let mut num = None;
        let mut den = None;
        for (t, e) in gens {
            num = Self::power(t, e, num)?;
            den = Self::power(t, -e, den)?;
        }
        let num = num.ok_or(Error::Domain("product has no positive factor"))?;
        match den {
            None => Ok(num),
            Some(d) => {
                let q = quotient_check(&num, &d)?;
                match (q.divisible, q.quotient) {
                    (true, Some(q)) => Ok(q.normalized()),
                    _ => Err(Error::Precision("table quotient is not divisible")),
                }
            }
        }
    }
}

impl core::fmt::Display for FormalProduct {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let mut first = true;
        for (i, e) in [self.e0, self.e1, self.e2].iter().enumerate() {
            if *e == 0 {
                continue;
            }
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "θ{i}")?;
            } else {
                write!(f, "θ{i}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Products listed as spanning `V_{n,6,r}` for even `n ≤ 10`. The `n = 4`,
/// `r = 2` entry is `θ0 θ2`; `θ0 θ1` has degree 6.
pub const SPANNING_TABLE: &[(usize, usize, &[FormalProduct])] = &[
    (2, 0, &[fp(1, 0, 0)]),
    (2, 2, &[fp(0, 0, 1)]),
    (4, 0, &[fp(2, 0, 0)]),
    (4, 1, &[fp(0, 1, 0)]),
    (4, 2, &[fp(1, 0, 1)]),
    (4, 4, &[fp(0, 0, 2)]),
    (6, 0, &[fp(3, 0, 0), fp(0, 0, 3), fp(0, 2, -1)]),
    (6, 1, &[fp(1, 1, 0)]),
    (6, 2, &[fp(2, 0, 1)]),
    (6, 3, &[fp(0, 1, 1)]),
    (6, 4, &[fp(1, 0, 2)]),
    (8, 0, &[fp(4, 0, 0), fp(1, 0, 3)]),
    (8, 1, &[fp(2, 1, 0)]),
    (8, 2, &[fp(0, 0, 4), fp(0, 2, 0), fp(3, 0, 1)]),
    (8, 3, &[fp(1, 1, 1)]),
    (8, 4, &[fp(2, 0, 2)]),
    (8, 5, &[fp(0, 1, 2)]),
    (10, 0, &[fp(5, 0, 0), fp(2, 0, 3)]),
    (10, 1, &[fp(3, 1, 0), fp(0, 1, 3)]),
    (10, 2, &[fp(4, 0, 1), fp(1, 0, 4), fp(1, 2, 0)]),
    (10, 3, &[fp(2, 1, 1)]),
    (10, 4, &[fp(3, 0, 2), fp(0, 0, 5), fp(0, 2, 1)]),
    (10, 5, &[fp(1, 1, 2)]),
];

/// `(n, r)` pairs with one-dimensional `V_{n,6,r}` for even `n ≤ 10`.
pub const ONE_DIMENSIONAL_PAIRS: &[(usize, usize)] = &[
    (2, 0),
    (2, 2),
    (4, 0),
    (4, 1),
    (4, 2),
    (4, 4),
    (6, 1),
    (6, 2),
    (6, 3),
    (6, 4),
    (8, 1),
    (8, 3),
    (8, 4),
    (8, 5),
    (10, 3),
    (10, 5),
];

pub fn table_entry(n: usize, r: usize) -> &'static [FormalProduct] {
    SPANNING_TABLE.iter().find(|e| e.0 == n && e.1 == r).map(|e| e.2).unwrap_or(&[])
}

/// `‖Tc − ξ^r c‖ / ‖c‖`.
pub fn eigen_defect(t: &DMatrix<C64>, k: usize, r: usize, theta: &ThetaElement) -> f64 {
    let c = DMatrix::from_column_slice(theta.coeffs.len(), 1, &theta.coeffs);
    (t * &c - &c * root_of_unity(k, r % k)).norm() / c.norm()
}

/// The listed products for `(n, r)`, each certified to lie in `V_{n,6,r}`.
pub fn spanning_theta(n: usize, r: usize) -> Result<Vec<ThetaElement>> {
    let entry = table_entry(n, r);
    if entry.is_empty() {
        return Err(Error::Domain("no table entry for (n, r)"));
    }
    let g = Generators::hexagonal()?;
    let space = ThetaSpace::for_lattice(n, &Lattice::hexagonal())?;
    let t = rotation_matrix_t(&space, 6)?;
    let mut out = Vec::new();
    for p in entry {
        if p.degree() != n as i32 {
            return Err(Error::Domain("table product has the wrong degree"));
        }
        let e = p.build(&g)?;
        let d = eigen_defect(&t, 6, r, &e);
        if d > RANK_TOL {
            return Err(Error::Collocation { residual: d, tolerance: RANK_TOL });
        }
        out.push(e);
    }
    Ok(out)
}

/// Numerical rank of a family of elements of one `V_n` (relative threshold 1e-8).
pub fn span_rank(elems: &[ThetaElement]) -> usize {
    if elems.is_empty() {
        return 0;
    }
    let n = elems[0].coeffs.len();
    let m = DMatrix::from_fn(elems.len(), n, |i, j| elems[i].coeffs[j] / elems[i].normalized_scale());
    let s = singular_values(&m);
    s.iter().filter(|&&v| v > RANK_TOL * s[0]).count()
}

trait Scale {
    fn normalized_scale(&self) -> f64;
}

impl Scale for ThetaElement {
    fn normalized_scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// One row of the `C_6` classification.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationRow {
    pub n: usize,
    pub r: usize,
    pub dim: usize,
    pub diagram_dim: usize,
    pub spanning: Vec<FormalProduct>,
    pub spanning_rank: usize,
    pub origin_orders: Vec<u32>,
}

impl ClassificationRow {
    /// The listed products are independent and span the eigenspace.
    pub fn consistent(&self) -> bool {
        self.spanning.len() == self.dim && self.spanning_rank == self.dim
    }
}

/// Order of the zero at the origin.
pub fn origin_order(theta: &ThetaElement) -> Result<u32> {
    let d = theta.find_zeros()?;
    let cell = theta.space.cell();
    Ok(d.multiplicity_at(&cell, C64::new(0.0, 0.0), 1e-6 * cell.diameter()))
}

/// One `(n, r)` cell of the table.
pub fn classification_row(n: usize, r: usize) -> Result<ClassificationRow> {
    let space = ThetaSpace::for_lattice(n, &Lattice::hexagonal())?;
    let eig = eigenspace(&space, 6, r)?;
    let origin_orders = eig.iter().map(origin_order).collect::<Result<Vec<_>>>()?;
    let spanning = table_entry(n, r).to_vec();
    let spanning_rank = if spanning.is_empty() { 0 } else { span_rank(&spanning_theta(n, r)?) };
    Ok(ClassificationRow { n, r, dim: eig.len(), diagram_dim: diagram_dimension(n, r), spanning, spanning_rank, origin_orders })
}

/// Rows for every even `n ≤ n_max` and every `r`.
pub fn classification_table(n_max: usize) -> Result<Vec<ClassificationRow>> {
    let mut rows = Vec::new();
    for n in (2..=n_max).step_by(2) {
        for r in 0..6 {
            rows.push(classification_row(n, r)?);
        }
    }
    Ok(rows)
}

/// Pairs whose eigenspace is one-dimensional.
pub fn one_dimensional(rows: &[ClassificationRow]) -> Vec<(usize, usize)> {
    rows.iter().filter(|r| r.dim == 1).map(|r| (r.n, r.r)).collect()
}

/// Lattices `L′ ⊃ ℤ + τℤ` of index `d`, as generator pairs: for `ac = d` and
/// `0 ≤ b < c`, `L′ = ⟨1/a, −b/d + τ/c⟩`.
pub fn finer_lattices(tau: C64, d: usize) -> Vec<(C64, C64)> {
    let mut out = Vec::new();
    for a in 1..=d {
        if d % a != 0 {
            continue;
        }
        let c = d / a;
        for b in 0..c {
            out.push((C64::new(1.0 / a as f64, 0.0), C64::new(-(b as f64) / d as f64, 0.0) + tau / c as f64));
        }
    }
    out
}

/// `|ψ|²` of the lowest-Landau-level state built from `θ`, in theta coordinates.
pub fn density(theta: &ThetaElement, z: C64) -> f64 {
    let w = theta.space.log_gauge_weight(z);
    theta.eval_weighted(z, C64::new(w, 0.0)).norm_sqr()
}

/// Whether `|ψ|²` is periodic under the given translations.
pub fn density_periodic(theta: &ThetaElement, gens: &[C64]) -> bool {
    let tau = theta.space.tau();
    let samples: Vec<C64> = (0..25)
        .map(|i| {
            let s = ((i as f64 + 0.31) * 0.618_033_988_749_894_9).fract() - 0.5;
            let t = ((i as f64 + 0.17) * 0.754_877_666_246_692_7).fract() - 0.5;
            C64::new(s, 0.0) + tau * t
        })
        .collect();
    let vals: Vec<f64> = samples.iter().map(|&z| density(theta, z)).collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(*v));
    gens.iter().all(|&g| samples.iter().zip(&vals).all(|(&z, &v)| (density(theta, z + g) - v).abs() <= 1e-8 * scale))
}

/// Whether the state is not a lift from a finer lattice.
///
/// Fast path: a zero at the origin whose order differs from every other zero
/// cannot be moved onto another zero by a finer translation. Otherwise every
/// lattice of index `d | n`, `d > 1`, is tested for periodicity of `|ψ|²`.
pub fn irreducible(theta: &ThetaElement, shape: &LatticeShape) -> Result<bool> {
    if shape.n != theta.n() || (shape.lattice.tau() - theta.space.tau()).norm() > 1e-12 {
        return Err(Error::Domain("shape does not match the theta function"));
    }
    let div = theta.find_zeros()?;
    let cell = theta.space.cell();
    let tol = 1e-6 * cell.diameter();
    let m0 = div.multiplicity_at(&cell, C64::new(0.0, 0.0), tol);
    if m0 > 0 && div.entries.iter().all(|(p, m)| p.norm() < tol || *m != m0) {
        return Ok(true);
    }
    let n = theta.n();
    for d in 2..=n {
        if n % d != 0 {
            continue;
        }
        for (g1, g2) in finer_lattices(theta.space.tau(), d) {
            if density_periodic(theta, &[g1, g2]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
