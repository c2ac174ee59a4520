//! Landau levels of `−Δ_{a^n}` with `a^n(x) = (n/2)(−x2, x1)` on gauge-periodic
//! functions, vector modes for the periodic potential `α`, and a finite-difference
//! reference spectrum.
//!
//! Level `m` is spanned by `φ_{m,j} = (2n)^{-m/2}(m!)^{-1/2} (∂̄_{a^n}*)^m φ_{0,j}`,
//! where `φ_{0,j} = f_n θ_{n,j} / ‖f_n θ_{n,j}‖`. Written in `w = x1 + i x2`, each
//! `φ_{m,j}` is `f_n · Σ_{k,p} A^{(m)}_{k,p} (w̄ − w)^k ∂_w^p θ_{n,j}`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::Lattice;
use crate::quadrature::{gauss_legendre, CellGrid};
use crate::theta::{ThetaElement, ThetaSpace};
use crate::{Error, Result, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Eigenvalues `(2m+1)n` with multiplicity `n` for `m ≤ m_max`.
pub fn landau_spectrum(n: usize, m_max: usize) -> Vec<(f64, usize)> {
    (0..=m_max).map(|m| (((2 * m + 1) * n) as f64, n)).collect()
}

/// The Landau basis on a normalized lattice.
#[derive(Clone, Debug)]
pub struct LandauBasis {
    lattice: Lattice,
    space: ThetaSpace,
    n: usize,
    top: usize,
    norm: f64,
    poly: Vec<Vec<Vec<f64>>>,
}

impl LandauBasis {
    /// Basis functions up to level `top` (inclusive).
    pub fn new(lattice: Lattice, n: usize, top: usize) -> Result<Self> {
        let space = ThetaSpace::for_lattice(n, &lattice)?;
        let nf = n as f64;
        let mut poly = vec![vec![vec![1.0]]];
        for m in 0..top {
            let prev = &poly[m];
            let size = m + 2;
            let mut next = vec![vec![0.0; size]; size];
            let get = |k: isize, p: isize| -> f64 {
                if k < 0 || p < 0 || k as usize > m || p as usize > m {
                    0.0
                } else {
                    prev[k as usize][p as usize]
                }
            };
            let scale = 1.0 / (2.0 * nf * (m as f64 + 1.0)).sqrt();
            for k in 0..size {
                for p in 0..size {
                    let (ki, pi) = (k as isize, p as isize);
                    next[k][p] = scale
                        * (2.0 * (k as f64 + 1.0) * get(ki + 1, pi) - 2.0 * get(ki, pi - 1) + nf * get(ki - 1, pi));
                }
            }
            poly.push(next);
        }
        let norm = (2.0 * nf * lattice.tau().im).powf(0.25);
        Ok(LandauBasis { lattice, space, n, top, norm, poly })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn theta_space(&self) -> ThetaSpace {
        self.space
    }

    pub fn eigenvalue(&self, m: usize) -> f64 {
        ((2 * m + 1) * self.n) as f64
    }

    /// `f_n(x) = exp((n/4)(w² − |w|²))`, as a logarithm.
    pub fn log_gauge_factor(&self, x: C64) -> C64 {
        (x * x - x.norm_sqr()) * (self.n as f64 / 4.0)
    }

    /// `ψ(x) = f_n(x) θ(x / sqrt(2π/Im τ))` for an element of `V_n`.
    pub fn lll_from_theta(&self, theta: &ThetaElement, x: C64) -> C64 {
        let z = x / self.lattice.scale();
        theta.eval_weighted(z, self.log_gauge_factor(x))
    }

    fn theta_table(&self, x: C64, pmax: usize) -> Vec<C64> {
        let c = self.lattice.scale();
        let mut d = self.space.derivs_weighted(x / c, pmax, self.log_gauge_factor(x));
        for m in 0..self.n {
            let mut s = 1.0;
            for p in 0..=pmax {
                d[m * (pmax + 1) + p] *= s;
                s /= c;
            }
        }
        d
    }

    /// Values `φ_{m,j}(x)` for `m ≤ top`, laid out as `m*n + j`.
    pub fn eval(&self, x: C64) -> Vec<C64> {
        let pmax = self.top;
        let d = self.theta_table(x, pmax);
        let u = x.conj() - x;
        let mut out = vec![C64::new(0.0, 0.0); (self.top + 1) * self.n];
        let mut upow = vec![C64::new(1.0, 0.0); self.top + 1];
        for k in 1..=self.top {
            upow[k] = upow[k - 1] * u;
        }
        for m in 0..=self.top {
            let a = &self.poly[m];
            for j in 0..self.n {
                let mut acc = C64::new(0.0, 0.0);
                for (k, row) in a.iter().enumerate() {
                    for (p, &coef) in row.iter().enumerate() {
                        if coef != 0.0 {
                            acc += upow[k] * d[j * (pmax + 1) + p] * coef;
                        }
                    }
                }
                out[m * self.n + j] = acc * self.norm;
            }
        }
        out
    }

    /// Values and covariant derivatives `(∇ − i a^n)` by direct differentiation of
    /// the explicit representation (independent of the ladder identities).
    pub fn eval_with_gradient(&self, x: C64) -> (Vec<C64>, Vec<C64>, Vec<C64>) {
        let pmax = self.top + 1;
        let d = self.theta_table(x, pmax);
        let nf = self.n as f64;
        let u = x.conj() - x;
        let len = (self.top + 1) * self.n;
        let (mut val, mut d1, mut d2) = (vec![C64::new(0.0, 0.0); len], vec![C64::new(0.0, 0.0); len], vec![C64::new(0.0, 0.0); len]);
        let upow = |k: usize| -> C64 { u.powu(k as u32) };
        let a_vec = (-x.im * nf / 2.0, x.re * nf / 2.0);
        for m in 0..=self.top {
            let a = &self.poly[m];
            for j in 0..self.n {
                let th = |p: usize| d[j * (pmax + 1) + p];
                let (mut g, mut gwbar, mut gw) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for (k, row) in a.iter().enumerate() {
                    for (p, &coef) in row.iter().enumerate() {
                        if coef == 0.0 {
                            continue;
                        }
                        g += upow(k) * th(p) * coef;
                        if k > 0 {
                            gwbar += upow(k - 1) * th(p) * (coef * k as f64);
                            gw -= upow(k - 1) * th(p) * (coef * k as f64);
                        }
                        gw += upow(k) * th(p + 1) * coef;
                    }
                }
                let dwbar = gwbar - x * g * (nf / 4.0);
                let dw = gw + (x * 2.0 - x.conj()) * g * (nf / 4.0);
                let p1 = dw + dwbar;
                let p2 = I * (dw - dwbar);
                let idx = m * self.n + j;
                val[idx] = g * self.norm;
                d1[idx] = (p1 - I * g * a_vec.0) * self.norm;
                d2[idx] = (p2 - I * g * a_vec.1) * self.norm;
            }
        }
        (val, d1, d2)
    }

    /// Samples of every basis function on a grid: `[m*n + j][q]`.
    pub fn sample(&self, grid: &CellGrid) -> Vec<Vec<C64>> {
        let len = (self.top + 1) * self.n;
        let mut out = vec![Vec::with_capacity(grid.len()); len];
        for &x in &grid.points {
            let v = self.eval(x);
            for (i, val) in v.into_iter().enumerate() {
                out[i].push(val);
            }
        }
        out
    }

    /// `(∂̄_{a^n})* φ` in the basis: raises level `m` to `m+1` with factor `sqrt(2n(m+1))`.
    pub fn raise_coefficients(&self, coeffs: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut out = vec![C64::new(0.0, 0.0); coeffs.len()];
        for m in 0..self.top {
            let f = (2.0 * n as f64 * (m as f64 + 1.0)).sqrt();
            for j in 0..n {
                out[(m + 1) * n + j] = coeffs[m * n + j] * f;
            }
        }
        out
    }
}

/// Eigenvalues of the Galerkin operator `⟨∇_aφ_i, ∇_aφ_j⟩` relative to the Gram
/// matrix, with gradients from [`LandauBasis::eval_with_gradient`].
pub fn assembled_spectrum(basis: &LandauBasis, grid: &CellGrid) -> Result<Vec<f64>> {
    let len = (basis.top + 1) * basis.n;
    let mut g = DMatrix::<C64>::zeros(len, len);
    let mut k = DMatrix::<C64>::zeros(len, len);
    for (&x, &w) in grid.points.iter().zip(&grid.weights) {
        let (v, d1, d2) = basis.eval_with_gradient(x);
        for a in 0..len {
            let (va, d1a, d2a) = (v[a].conj() * w, d1[a].conj() * w, d2[a].conj() * w);
            for b in 0..len {
                g[(a, b)] += va * v[b];
                k[(a, b)] += d1a * d1[b] + d2a * d2[b];
            }
        }
    }
    let chol = g.cholesky().ok_or(Error::Precision("Gram matrix not positive definite"))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(Error::Precision("singular Gram factor"))?;
    let h = &linv * k * linv.adjoint();
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let mut e: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    Ok(e)
}

/// Lowest `count` eigenvalues of the five-point Peierls-phase discretization on a
/// `side × side` grid of the square cell with `n` flux quanta.
///
/// In Landau gauge the torus operator commutes with translations in `x2`; its
/// Fourier blocks chain into `gcd(side, n)` periodic tridiagonal matrices, all
/// equivalent when `n | side`. Eigenvalues come from Sturm-count bisection on
/// one chain (the wrap sits at the potential maximum and is dropped).
pub fn fd_chain_eigenvalues(n: usize, side: usize, count: usize) -> Result<Vec<f64>> {
    if n == 0 || side % n != 0 {
        return Err(Error::Domain("grid side must be a positive multiple of n"));
    }
    let len = side * side / n;
    let h = (2.0 * PI).sqrt() / side as f64;
    let h2 = h * h;
    let diag: Vec<f64> = (0..len)
        .map(|i| {
            let j = i as f64 - (len / 2) as f64;
            (4.0 - 2.0 * (2.0 * PI * n as f64 * j / (side * side) as f64).cos()) / h2
        })
        .collect();
    let e2 = 1.0 / (h2 * h2);
    let below = |x: f64| -> usize {
        let mut c = 0;
        let mut q = diag[0] - x;
        if q < 0.0 {
            c += 1;
        }
        for d in &diag[1..] {
            let qq = if q == 0.0 { 1e-300 } else { q };
            q = d - x - e2 / qq;
            if q < 0.0 {
                c += 1;
            }
        }
        c
    };
    let upper = (2 * count + 3) as f64 * n as f64 * 1.5;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let (mut lo, mut hi) = (0.0, upper);
        while hi - lo > 1e-14 * hi {
            let mid = 0.5 * (lo + hi);
            if below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    Ok(out)
}

/// Two-step Richardson extrapolation of the finite-difference levels over grids
/// `side`, `2·side`, `4·side`. Each level has multiplicity `n` (one per chain).
pub fn fd_reference_spectrum(n: usize, levels: usize, side: usize) -> Result<Vec<(f64, usize)>> {
    let e: Vec<Vec<f64>> = [side, 2 * side, 4 * side]
        .iter()
        .map(|&s| fd_chain_eigenvalues(n, s, levels))
        .collect::<Result<_>>()?;
    let r1: Vec<Vec<f64>> = (0..2)
        .map(|i| (0..levels).map(|k| (4.0 * e[i + 1][k] - e[i][k]) / 3.0).collect())
        .collect();
    Ok((0..levels).map(|k| ((16.0 * r1[1][k] - r1[0][k]) / 15.0, n)).collect())
}

/// `−Δ_{a^n} f(x)` from the five-point stencil with Peierls phases
/// `e^{−i∫a·dl}` on each bond, Richardson-extrapolated from steps `h` and `h/2`.
pub fn peierls_laplacian<F: Fn(C64) -> C64>(n: usize, f: &F, x: C64, h: f64) -> C64 {
    let nf = n as f64;
    let stencil = |h: f64| {
        let f0 = f(x);
        let mut acc = -f0 * 4.0;
        for v in [C64::new(h, 0.0), C64::new(-h, 0.0), C64::new(0.0, h), C64::new(0.0, -h)] {
            let mid = x + v * 0.5;
            let phase = 0.5 * nf * (-mid.im * v.re + mid.re * v.im);
            acc += f(x + v) * C64::from_polar(1.0, -phase);
        }
        -acc / (h * h)
    };
    (stencil(h * 0.5) * 4.0 - stencil(h)) / 3.0
}

/// One divergence-free, mean-zero real vector field built from a rotation orbit
/// of reciprocal vectors: `α(x) = c Σ_k sqrt2 sin(k·x) (−k2, k1)/|k|`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaMode {
    pub wavevectors: Vec<C64>,
    pub k2: f64,
    weight: f64,
}

impl AlphaMode {
    pub fn eval(&self, x: C64) -> (f64, f64) {
        let (mut a1, mut a2) = (0.0, 0.0);
        for k in &self.wavevectors {
            let s = (k.re * x.re + k.im * x.im).sin() * self.weight;
            let kn = k.norm();
            a1 -= s * k.im / kn;
            a2 += s * k.re / kn;
        }
        (a1, a2)
    }

    /// `curl α`.
    pub fn curl(&self, x: C64) -> f64 {
        self.wavevectors
            .iter()
            .map(|k| (k.re * x.re + k.im * x.im).cos() * self.weight * k.norm())
            .sum()
    }
}

/// Odd, divergence-free, mean-zero vector fields with `|k| ≤ cutoff`, grouped into
/// orbits of the rotation group of order `k`, orthonormal in the cell average.
#[derive(Clone, Debug)]
pub struct AlphaBasis {
    pub lattice: Lattice,
    pub modes: Vec<AlphaMode>,
}

impl AlphaBasis {
    pub fn new(lattice: Lattice, cutoff: f64, k: usize) -> Result<Self> {
        if k == 0 || !lattice.admits_rotation(k) {
            return Err(Error::Domain("rotation order incompatible with lattice"));
        }
        let (b1, b2) = lattice.reciprocal();
        let bmin = b1.norm().min(b2.norm()).min((b1 + b2).norm()).min((b1 - b2).norm());
        let reach = (cutoff / bmin).ceil() as i64 * 2 + 2;
        let mut all: Vec<C64> = Vec::new();
        for p in -reach..=reach {
            for q in -reach..=reach {
                let g = b1 * p as f64 + b2 * q as f64;
                if (p != 0 || q != 0) && g.norm() <= cutoff {
                    all.push(g);
                }
            }
        }
        all.sort_by(|a, b| {
            (a.norm_sqr(), a.arg()).partial_cmp(&(b.norm_sqr(), b.arg())).unwrap_or(core::cmp::Ordering::Equal)
        });
        let tol = 1e-9 * cutoff.max(1.0);
        let xi = C64::from_polar(1.0, 2.0 * PI / k as f64);
        let mut used = vec![false; all.len()];
        let mut modes = Vec::new();
        for i in 0..all.len() {
            if used[i] {
                continue;
            }
            let mut orbit: Vec<C64> = Vec::new();
            let mut v = all[i];
            for _ in 0..k {
                for s in [v, -v] {
                    if !orbit.iter().any(|o| (*o - s).norm() < tol) {
                        orbit.push(s);
                    }
                }
                v *= xi;
            }
            for o in &orbit {
                if let Some(j) = all.iter().position(|a| (*a - *o).norm() < tol) {
                    used[j] = true;
                }
            }
            let mut reps: Vec<C64> = Vec::new();
            for o in orbit {
                if !reps.iter().any(|r| (*r + o).norm() < tol) {
                    reps.push(o);
                }
            }
            let weight = (2.0 / reps.len() as f64).sqrt();
            modes.push(AlphaMode { k2: reps[0].norm_sqr(), wavevectors: reps, weight });
        }
        Ok(AlphaBasis { lattice, modes })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `M = curl* curl`, diagonal with entries `|k|²`.
    pub fn apply_m(&self, coeffs: &[f64]) -> Vec<f64> {
        coeffs.iter().zip(&self.modes).map(|(c, m)| c * m.k2).collect()
    }

    pub fn eval(&self, coeffs: &[f64], x: C64) -> (f64, f64) {
        let (mut a1, mut a2) = (0.0, 0.0);
        for (c, m) in coeffs.iter().zip(&self.modes) {
            if *c != 0.0 {
                let (u, v) = m.eval(x);
                a1 += c * u;
                a2 += c * v;
            }
        }
        (a1, a2)
    }

    pub fn curl(&self, coeffs: &[f64], x: C64) -> f64 {
        coeffs.iter().zip(&self.modes).map(|(c, m)| c * m.curl(x)).sum()
    }
}

/// A periodic vector field as a finite Fourier sum `Σ c_G e^{iG·x}` on the
/// reciprocal lattice, `G = p b1 + q b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorFourier {
    pub lattice: Lattice,
    pub terms: Vec<(i64, i64, C64, C64)>,
}

/// A periodic scalar as a finite Fourier sum.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFourier {
    pub lattice: Lattice,
    pub terms: Vec<(i64, i64, C64)>,
}

fn wavevector(l: &Lattice, p: i64, q: i64) -> C64 {
    let (b1, b2) = l.reciprocal();
    b1 * p as f64 + b2 * q as f64
}

impl VectorFourier {
    pub fn eval(&self, x: C64) -> (f64, f64) {
        let (mut a, mut b) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for &(p, q, c1, c2) in &self.terms {
            let g = wavevector(&self.lattice, p, q);
            let e = (I * (g.re * x.re + g.im * x.im)).exp();
            a += c1 * e;
            b += c2 * e;
        }
        (a.re, b.re)
    }

    pub fn divergence(&self, x: C64) -> f64 {
        let mut d = C64::new(0.0, 0.0);
        for &(p, q, c1, c2) in &self.terms {
            let g = wavevector(&self.lattice, p, q);
            d += I * (c1 * g.re + c2 * g.im) * (I * (g.re * x.re + g.im * x.im)).exp();
        }
        d.re
    }

    pub fn curl(&self, x: C64) -> f64 {
        let mut d = C64::new(0.0, 0.0);
        for &(p, q, c1, c2) in &self.terms {
            let g = wavevector(&self.lattice, p, q);
            d += I * (c2 * g.re - c1 * g.im) * (I * (g.re * x.re + g.im * x.im)).exp();
        }
        d.re
    }

    pub fn mean(&self) -> (f64, f64) {
        self.terms
            .iter()
            .filter(|t| t.0 == 0 && t.1 == 0)
            .fold((0.0, 0.0), |(a, b), t| (a + t.2.re, b + t.3.re))
    }
}

impl ScalarFourier {
    pub fn eval(&self, x: C64) -> f64 {
        let mut s = C64::new(0.0, 0.0);
        for &(p, q, c) in &self.terms {
            let g = wavevector(&self.lattice, p, q);
            s += c * (I * (g.re * x.re + g.im * x.im)).exp();
        }
        s.re
    }

    /// `∇η` as a vector field.
    pub fn gradient(&self) -> VectorFourier {
        VectorFourier {
            lattice: self.lattice,
            terms: self
                .terms
                .iter()
                .map(|&(p, q, c)| {
                    let g = wavevector(&self.lattice, p, q);
                    (p, q, I * g.re * c, I * g.im * c)
                })
                .collect(),
        }
    }
}

/// Splits `α_raw = α + ∇η + mean` with `div α = 0`, `⟨α⟩ = 0`; returns `(α, η)`.
pub fn gauge_fix(raw: &VectorFourier) -> (VectorFourier, ScalarFourier) {
    let mut alpha = Vec::new();
    let mut eta = Vec::new();
    for &(p, q, c1, c2) in &raw.terms {
        if p == 0 && q == 0 {
            continue;
        }
        let g = wavevector(&raw.lattice, p, q);
        let g2 = g.norm_sqr();
        let kc = c1 * g.re + c2 * g.im;
        alpha.push((p, q, c1 - kc * (g.re / g2), c2 - kc * (g.im / g2)));
        eta.push((p, q, -I * kc / g2));
    }
    (
        VectorFourier { lattice: raw.lattice, terms: alpha },
        ScalarFourier { lattice: raw.lattice, terms: eta },
    )
}

/// `∮_{∂Ω} (a^n + α)·dl` around the parallelogram cell centred at the origin.
pub fn flux<F: Fn(C64) -> (f64, f64)>(lattice: &Lattice, n: usize, alpha: F) -> f64 {
    let (g1, g2) = lattice.generators();
    let corners = [(g1 + g2) * -0.5, (g1 - g2) * 0.5, (g1 + g2) * 0.5, (g2 - g1) * 0.5];
    let (x, w) = gauss_legendre(48);
    let nf = n as f64;
    let mut total = 0.0;
    for i in 0..4 {
        let a = corners[i];
        let b = corners[(i + 1) % 4];
        let d = b - a;
        for (xi, wi) in x.iter().zip(&w) {
            let p = a + d * (0.5 * (xi + 1.0));
            let (al1, al2) = alpha(p);
            let a1 = -0.5 * nf * p.im + al1;
            let a2 = 0.5 * nf * p.re + al2;
            total += 0.5 * wi * (a1 * d.re + a2 * d.im);
        }
    }
    total
}

/// Observables sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub points: Vec<C64>,
    pub ns: Vec<f64>,
    pub b: Vec<f64>,
    pub j: Vec<(f64, f64)>,
}
