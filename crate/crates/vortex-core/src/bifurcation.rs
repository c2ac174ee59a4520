//! Lyapunov–Schmidt reduction of the rescaled Ginzburg–Landau system near the
//! normal state, and branch tracing in the bifurcation amplitude.
//!
//! Unknowns are `u = (ψ, α)`: `ψ` in the Landau levels of a rotation sector,
//! `α` in odd divergence-free Fourier modes. The map is
//! `F(λ, u) = ((L^n − λ)ψ + h(ψ, α), Mα − P′J(ψ, α))` with
//! `h = 2iα·∇_{a^n}ψ + |α|²ψ + κ²|ψ|²ψ` and `J = Im(ψ̄∇_{a^n}ψ) − α|ψ|²`.
//! Nonlinear terms are evaluated on a uniform cell grid and projected back.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::landau::{flux, AlphaBasis, FieldSample, LandauBasis};
use crate::lattice::{Lattice, LatticeShape};
use crate::quadrature::CellGrid;
use crate::symmetry::eigenspace;
use crate::theta::ThetaSpace;
use crate::{Error, Result, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Discretization and model parameters for one branch.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub shape: LatticeShape,
    pub kappa: f64,
    pub m_max: usize,
    pub alpha_cutoff: f64,
    pub grid_side: usize,
}

impl ProblemConfig {
    /// Defaults: levels up to 16, `|k|² ≤ 120 n`, grid side `24 + 4n`.
    pub fn new(shape: LatticeShape, kappa: f64) -> Self {
        let n = shape.n;
        ProblemConfig {
            shape,
            kappa,
            m_max: 16,
            alpha_cutoff: (120.0 * n as f64).sqrt(),
            grid_side: 24 + 4 * n,
        }
    }
}

/// Coefficients of `ψ` over the sector basis and of `α` over the vector modes.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralState {
    pub psi: Vec<C64>,
    pub alpha: Vec<f64>,
}

impl SpectralState {
    pub fn zeros(np: usize, na: usize) -> Self {
        SpectralState { psi: vec![ZERO; np], alpha: vec![0.0; na] }
    }

    pub fn norm(&self) -> f64 {
        (self.psi_norm().powi(2) + self.alpha_norm().powi(2)).sqrt()
    }

    pub fn psi_norm(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn alpha_norm(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    fn axpy(&self, t: f64, other: &SpectralState) -> SpectralState {
        SpectralState {
            psi: self.psi.iter().zip(&other.psi).map(|(a, b)| a + b * t).collect(),
            alpha: self.alpha.iter().zip(&other.alpha).map(|(a, b)| a + b * t).collect(),
        }
    }

    /// `⟨u, v⟩` with the complex inner product on `ψ` and the real one on `α`.
    pub fn inner(&self, other: &SpectralState) -> C64 {
        let p: C64 = self.psi.iter().zip(&other.psi).map(|(a, b)| a.conj() * b).sum();
        let a: f64 = self.alpha.iter().zip(&other.alpha).map(|(a, b)| a * b).sum();
        p + a
    }

    /// `ψ ↦ e^{iδ}ψ`.
    pub fn rotate_phase(&self, delta: f64) -> SpectralState {
        let e = C64::from_polar(1.0, delta);
        SpectralState { psi: self.psi.iter().map(|c| c * e).collect(), alpha: self.alpha.clone() }
    }
}

/// Basis functions of the problem sampled on one grid.
#[derive(Clone, Debug)]
struct Sampled {
    grid: CellGrid,
    psi: Vec<[Vec<C64>; 3]>,
    alpha: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Fields of a state on a grid.
struct Fields {
    psi: Vec<C64>,
    d1: Vec<C64>,
    d2: Vec<C64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
}

/// The reduced problem on a fixed rotation sector.
#[derive(Clone, Debug)]
pub struct ReducedProblem {
    pub shape: LatticeShape,
    pub kappa: f64,
    pub basis: LandauBasis,
    pub alpha_basis: AlphaBasis,
    /// Coefficients of each sector function over `φ_{m,j}` at its level.
    pub sector: Vec<(usize, Vec<C64>)>,
    solver: Sampled,
    fine: Sampled,
}

impl ReducedProblem {
    pub fn new(config: &ProblemConfig) -> Result<Self> {
        let shape = config.shape;
        let (n, k, r) = (shape.n, shape.k, shape.r);
        if k < 2 {
            return Err(Error::Domain("the sector must include the inversion x -> -x"));
        }
        let lattice = shape.lattice;
        let basis = LandauBasis::new(lattice, n, config.m_max)?;
        let space = ThetaSpace::for_lattice(n, &lattice)?;
        let mut sector = Vec::new();
        for m in 0..=config.m_max {
            for e in eigenspace(&space, k, (r + m) % k)? {
                sector.push((m, e.coeffs));
            }
        }
        let kernel = sector.iter().filter(|s| s.0 == 0).count();
        if kernel != 1 {
            return Err(Error::KernelDimension(kernel));
        }
        let alpha_basis = AlphaBasis::new(lattice, config.alpha_cutoff, k)?;
        let solver = Self::sample(&basis, &alpha_basis, &sector, CellGrid::uniform(lattice, config.grid_side));
        let fine = Self::sample(&basis, &alpha_basis, &sector, CellGrid::uniform(lattice, 2 * config.grid_side));
        Ok(ReducedProblem { shape, kappa: config.kappa, basis, alpha_basis, sector, solver, fine })
    }

    fn sample(basis: &LandauBasis, ab: &AlphaBasis, sector: &[(usize, Vec<C64>)], grid: CellGrid) -> Sampled {
        let n = basis.n();
        let q = grid.len();
        let mut psi: Vec<[Vec<C64>; 3]> = sector.iter().map(|_| [vec![ZERO; q], vec![ZERO; q], vec![ZERO; q]]).collect();
        for (i, &x) in grid.points.iter().enumerate() {
            let (v, d1, d2) = basis.eval_with_gradient(x);
            for (b, (m, c)) in sector.iter().enumerate() {
                let off = m * n;
                let (mut a0, mut a1, mut a2) = (ZERO, ZERO, ZERO);
                for j in 0..n {
                    a0 += c[j] * v[off + j];
                    a1 += c[j] * d1[off + j];
                    a2 += c[j] * d2[off + j];
                }
                psi[b][0][i] = a0;
                psi[b][1][i] = a1;
                psi[b][2][i] = a2;
            }
        }
        let alpha = ab
            .modes
            .iter()
            .map(|mode| {
                let (mut u, mut v) = (vec![0.0; q], vec![0.0; q]);
                for (i, &x) in grid.points.iter().enumerate() {
                    let (a, b) = mode.eval(x);
                    u[i] = a;
                    v[i] = b;
                }
                (u, v)
            })
            .collect();
        Sampled { grid, psi, alpha }
    }

    pub fn n(&self) -> usize {
        self.shape.n
    }

    pub fn psi_len(&self) -> usize {
        self.sector.len()
    }

    pub fn alpha_len(&self) -> usize {
        self.alpha_basis.len()
    }

    pub fn zero_state(&self) -> SpectralState {
        SpectralState::zeros(self.psi_len(), self.alpha_len())
    }

    /// `ψ0`, the kernel element, with cell average `⟨|ψ0|²⟩ = 1`.
    pub fn kernel_state(&self) -> SpectralState {
        let mut s = self.zero_state();
        s.psi[0] = C64::new(1.0, 0.0);
        s
    }

    /// `(2m+1)n` for each sector function.
    pub fn levels(&self) -> Vec<f64> {
        self.sector.iter().map(|(m, _)| self.basis.eigenvalue(*m)).collect()
    }

    fn fields(&self, s: &Sampled, u: &SpectralState) -> Fields {
        let q = s.grid.len();
        let mut f = Fields { psi: vec![ZERO; q], d1: vec![ZERO; q], d2: vec![ZERO; q], a1: vec![0.0; q], a2: vec![0.0; q] };
        for (c, b) in u.psi.iter().zip(&s.psi) {
            if *c == ZERO {
                continue;
            }
            for i in 0..q {
                f.psi[i] += c * b[0][i];
                f.d1[i] += c * b[1][i];
                f.d2[i] += c * b[2][i];
            }
        }
        for (c, (u1, u2)) in u.alpha.iter().zip(&s.alpha) {
            if *c == 0.0 {
                continue;
            }
            for i in 0..q {
                f.a1[i] += c * u1[i];
                f.a2[i] += c * u2[i];
            }
        }
        f
    }

    fn project(&self, s: &Sampled, h: &[C64], j1: &[f64], j2: &[f64]) -> SpectralState {
        let w = &s.grid.weights;
        let psi = s
            .psi
            .iter()
            .map(|b| b[0].iter().zip(h).zip(w).map(|((p, h), w)| p.conj() * h * *w).sum())
            .collect();
        let alpha = s
            .alpha
            .iter()
            .map(|(u1, u2)| (0..w.len()).map(|i| w[i] * (u1[i] * j1[i] + u2[i] * j2[i])).sum())
            .collect();
        SpectralState { psi, alpha }
    }

    /// `(h, J)` sampled, with `J` not yet projected.
    fn nonlinear_fields(&self, f: &Fields) -> (Vec<C64>, Vec<f64>, Vec<f64>) {
        let k2 = self.kappa * self.kappa;
        let q = f.psi.len();
        let (mut h, mut j1, mut j2) = (vec![ZERO; q], vec![0.0; q], vec![0.0; q]);
        for i in 0..q {
            let p = f.psi[i];
            let (a1, a2) = (f.a1[i], f.a2[i]);
            let rho = p.norm_sqr();
            h[i] = I * (f.d1[i] * a1 + f.d2[i] * a2) * 2.0 + p * (a1 * a1 + a2 * a2 + k2 * rho);
            j1[i] = (p.conj() * f.d1[i]).im - a1 * rho;
            j2[i] = (p.conj() * f.d2[i]).im - a2 * rho;
        }
        (h, j1, j2)
    }

    fn nonlinear_on(&self, s: &Sampled, u: &SpectralState) -> SpectralState {
        let f = self.fields(s, u);
        let (h, j1, j2) = self.nonlinear_fields(&f);
        let mut out = self.project(s, &h, &j1, &j2);
        for a in out.alpha.iter_mut() {
            *a = -*a;
        }
        out
    }

    fn linear(&self, lambda: f64, u: &SpectralState) -> SpectralState {
        SpectralState {
            psi: u.psi.iter().zip(self.levels()).map(|(c, e)| c * (e - lambda)).collect(),
            alpha: self.alpha_basis.apply_m(&u.alpha),
        }
    }

    /// `F(λ, u)` in coefficients.
    pub fn assemble_f(&self, lambda: f64, u: &SpectralState) -> SpectralState {
        self.linear(lambda, u).axpy(1.0, &self.nonlinear_on(&self.solver, u))
    }

    /// `F(λ, u)` evaluated on the grid twice as fine as the solver's.
    pub fn assemble_f_fine(&self, lambda: f64, u: &SpectralState) -> SpectralState {
        self.linear(lambda, u).axpy(1.0, &self.nonlinear_on(&self.fine, u))
    }

    /// Analytic Gâteaux derivative `∂_u F(λ, u)[v]`.
    pub fn jacobian_apply(&self, lambda: f64, u: &SpectralState, v: &SpectralState) -> SpectralState {
        let s = &self.solver;
        let f = self.fields(s, u);
        let g = self.fields(s, v);
        let k2 = self.kappa * self.kappa;
        let q = s.grid.len();
        let (mut h, mut j1, mut j2) = (vec![ZERO; q], vec![0.0; q], vec![0.0; q]);
        for i in 0..q {
            let (p, dp) = (f.psi[i], g.psi[i]);
            let (a1, a2, b1, b2) = (f.a1[i], f.a2[i], g.a1[i], g.a2[i]);
            let rho = p.norm_sqr();
            let drho = 2.0 * (p.conj() * dp).re;
            h[i] = I * (f.d1[i] * b1 + f.d2[i] * b2 + g.d1[i] * a1 + g.d2[i] * a2) * 2.0
                + p * (2.0 * (a1 * b1 + a2 * b2))
                + dp * (a1 * a1 + a2 * a2)
                + (dp * (2.0 * rho) + p * p * dp.conj()) * k2;
            j1[i] = (dp.conj() * f.d1[i] + p.conj() * g.d1[i]).im - b1 * rho - a1 * drho;
            j2[i] = (dp.conj() * f.d2[i] + p.conj() * g.d2[i]).im - b2 * rho - a2 * drho;
        }
        let mut nl = self.project(s, &h, &j1, &j2);
        for a in nl.alpha.iter_mut() {
            *a = -*a;
        }
        self.linear(lambda, v).axpy(1.0, &nl)
    }

    /// Solves `P̄F(λ, cψ0 + w) = 0` for `w ⟂ ψ0` by fixed-point iteration
    /// preconditioned with the inverse of `A_λ` on the complement of the kernel.
    pub fn solve_w(&self, lambda: f64, amp: C64, init: Option<&SpectralState>) -> Result<SpectralState> {
        let levels = self.levels();
        let mut w = init.cloned().unwrap_or_else(|| self.zero_state());
        w.psi[0] = ZERO;
        if amp == ZERO {
            return Ok(self.zero_state());
        }
        let mut residual = f64::INFINITY;
        for _ in 0..60 {
            let mut u = w.clone();
            u.psi[0] = amp;
            let nl = self.nonlinear_on(&self.solver, &u);
            let mut next = self.zero_state();
            for b in 1..self.psi_len() {
                next.psi[b] = -nl.psi[b] / (levels[b] - lambda);
            }
            for (i, m) in self.alpha_basis.modes.iter().enumerate() {
                next.alpha[i] = -nl.alpha[i] / m.k2;
            }
            let change = next.axpy(-1.0, &w).norm();
            w = next;
            let mut u = w.clone();
            u.psi[0] = amp;
            let f = self.assemble_f(lambda, &u);
            residual = f.psi[1..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().hypot(f.alpha_norm());
            if residual <= 1e-16 * amp.norm() || change <= 1e-15 * w.norm() {
                return Ok(w);
            }
        }
        if residual < 1e-11 {
            return Ok(w);
        }
        Err(Error::NoConvergence { iterations: 60, residual })
    }

    /// `γ(λ, c) = ⟨ψ0, F_1(λ, cψ0 + w)⟩`, with the correction `w`.
    pub fn gamma(&self, lambda: f64, amp: C64, init: Option<&SpectralState>) -> Result<(C64, SpectralState)> {
        let w = self.solve_w(lambda, amp, init)?;
        let mut u = w.clone();
        u.psi[0] = amp;
        let f = self.assemble_f(lambda, &u);
        Ok((f.psi[0], w))
    }

    /// `γ1(λ, s) = γ(λ, s)/s` for real `s`, extended by `n − λ` at `s = 0`.
    pub fn gamma1(&self, lambda: f64, s: f64) -> Result<f64> {
        self.gamma1_with(lambda, s, None).map(|(g, _)| g)
    }

    fn gamma1_with(&self, lambda: f64, s: f64, init: Option<&SpectralState>) -> Result<(f64, SpectralState)> {
        let n = self.n() as f64;
        if s == 0.0 {
            return Ok((n - lambda, self.zero_state()));
        }
        let (g, w) = self.gamma(lambda, C64::new(s, 0.0), init)?;
        let g1 = g / s;
        if g1.im.abs() > 1e-10 * (1.0 + g1.re.abs()) {
            return Err(Error::Precision("imaginary part of the bifurcation function"));
        }
        Ok((g1.re, w))
    }

    /// Cell-averaged rescaled energy
    /// `⟨|∇_aψ|² + |curl a|² + (κ²/2)(|ψ|² − λ/κ²)²⟩`, `a = a^n + α`.
    pub fn energy(&self, u: &SpectralState, lambda: f64) -> f64 {
        let s = &self.fine;
        let f = self.fields(s, u);
        let n = self.n() as f64;
        let k2 = self.kappa * self.kappa;
        let curl: Vec<f64> = s.grid.points.iter().map(|&x| self.alpha_basis.curl(&u.alpha, x)).collect();
        let vals: Vec<f64> = (0..s.grid.len())
            .map(|i| {
                let p = f.psi[i];
                let g1 = f.d1[i] - I * p * f.a1[i];
                let g2 = f.d2[i] - I * p * f.a2[i];
                let b = n + curl[i];
                g1.norm_sqr() + g2.norm_sqr() + b * b + 0.5 * k2 * (p.norm_sqr() - lambda / k2).powi(2)
            })
            .collect();
        s.grid.average(&vals)
    }

    /// `⟨|ψ|⁴⟩ / ⟨|ψ|²⟩²` on the fine grid.
    pub fn beta_of(&self, u: &SpectralState) -> f64 {
        let f = self.fields(&self.fine, u);
        let g = &self.fine.grid;
        let r2: Vec<f64> = f.psi.iter().map(|p| p.norm_sqr()).collect();
        let r4: Vec<f64> = r2.iter().map(|r| r * r).collect();
        g.average(&r4) / g.average(&r2).powi(2)
    }

    /// `ψ`, `∇_{a^n}ψ` and `α` at arbitrary points.
    pub fn eval_at(&self, u: &SpectralState, x: C64) -> (C64, C64, C64, (f64, f64)) {
        let n = self.n();
        let (v, d1, d2) = self.basis.eval_with_gradient(x);
        let (mut p, mut g1, mut g2) = (ZERO, ZERO, ZERO);
        for ((m, c), z) in self.sector.iter().zip(&u.psi) {
            for j in 0..n {
                p += z * c[j] * v[m * n + j];
                g1 += z * c[j] * d1[m * n + j];
                g2 += z * c[j] * d2[m * n + j];
            }
        }
        (p, g1, g2, self.alpha_basis.eval(&u.alpha, x))
    }

    /// `n_s`, `B` and `J` at the given points.
    pub fn observables(&self, u: &SpectralState, points: &[C64]) -> FieldSample {
        let n = self.n() as f64;
        let mut out = FieldSample { points: points.to_vec(), ns: vec![], b: vec![], j: vec![] };
        for &x in points {
            let (p, g1, g2, (a1, a2)) = self.eval_at(u, x);
            let rho = p.norm_sqr();
            out.ns.push(rho);
            out.b.push(n + self.alpha_basis.curl(&u.alpha, x));
            out.j.push(((p.conj() * g1).im - a1 * rho, (p.conj() * g2).im - a2 * rho));
        }
        out
    }

    /// Observables on a `side × side` grid of the cell.
    pub fn observables_on_grid(&self, u: &SpectralState, side: usize) -> FieldSample {
        let g = CellGrid::uniform(self.shape.lattice, side);
        self.observables(u, &g.points)
    }
}

/// One certified point of a branch.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchSample {
    pub s: f64,
    pub lambda: f64,
    pub state: SpectralState,
    pub energy: f64,
    pub normal_energy: f64,
    pub residual: f64,
    pub beta_s: f64,
}

/// `count` geometric points in `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect()
}

/// The default amplitude grid: 40 geometric points in `[1e-3, 0.1]`.
pub fn default_s_grid() -> Vec<f64> {
    geometric_grid(1e-3, 0.1, 40)
}

/// Solves `γ1(λ, s) = 0` for `λ` by secant steps from `guess`.
fn solve_lambda(p: &ReducedProblem, s: f64, guess: f64, w0: Option<&SpectralState>) -> Result<(f64, SpectralState)> {
    let (mut l0, mut l1) = (guess, guess + 1e-6 * (1.0 + guess.abs()));
    let (mut g0, mut w) = p.gamma1_with(l0, s, w0)?;
    let (mut g1, w1) = p.gamma1_with(l1, s, Some(&w))?;
    w = w1;
    for _ in 0..40 {
        let slope = (g1 - g0) / (l1 - l0);
        if slope.abs() < 1e-3 {
            return Err(Error::Fold(slope));
        }
        let l2 = l1 - g1 / slope;
        let (g2, w2) = p.gamma1_with(l2, s, Some(&w))?;
        w = w2;
        let done = (l2 - l1).abs() <= 1e-15 * (1.0 + l2.abs()) || g2 == 0.0;
        l0 = l1;
        g0 = g1;
        l1 = l2;
        g1 = g2;
        if done || g1.abs() < 1e-15 {
            return Ok((l1, w));
        }
    }
    if g1.abs() < 1e-12 {
        return Ok((l1, w));
    }
    Err(Error::NoConvergence { iterations: 40, residual: g1.abs() })
}

/// Traces the branch over `s_grid` (any order, signs allowed), warm-starting
/// each `λ` from the quadratic extrapolation of the previous samples.
pub fn trace_branch(p: &ReducedProblem, s_grid: &[f64]) -> Result<Vec<BranchSample>> {
    let n = p.n() as f64;
    let mut out = Vec::with_capacity(s_grid.len());
    let mut coef = 0.0;
    let mut w_prev: Option<SpectralState> = None;
    let mut s_prev = 0.0;
    for &s in s_grid {
        if s == 0.0 {
            let z = p.zero_state();
            let e = p.energy(&z, n);
            out.push(BranchSample { s, lambda: n, state: z, energy: e, normal_energy: e, residual: 0.0, beta_s: f64::NAN });
            continue;
        }
        let init = w_prev.as_ref().map(|w| {
            let r = s / s_prev;
            SpectralState {
                psi: w.psi.iter().map(|c| c * r.powi(3)).collect(),
                alpha: w.alpha.iter().map(|a| a * r * r).collect(),
            }
        });
        let (lambda, w) = solve_lambda(p, s, n + coef * s * s, init.as_ref())?;
        coef = (lambda - n) / (s * s);
        let mut u = w.clone();
        u.psi[0] = C64::new(s, 0.0);
        let residual = p.assemble_f_fine(lambda, &u).norm();
        let energy = p.energy(&u, lambda);
        let normal_energy = p.energy(&p.zero_state(), lambda);
        let beta_s = p.beta_of(&u);
        out.push(BranchSample { s, lambda, state: u, energy, normal_energy, residual, beta_s });
        w_prev = Some(w);
        s_prev = s;
    }
    Ok(out)
}

/// Least-squares fit of `y ≈ Σ_j c_j x^{p_j}`; returns coefficients and the
/// maximum residual relative to `max |y|`.
pub fn fit_powers(x: &[f64], y: &[f64], powers: &[i32]) -> (Vec<f64>, f64) {
    let m = powers.len();
    let a = nalgebra::DMatrix::from_fn(x.len(), m, |i, j| x[i].powi(powers[j]));
    let b = nalgebra::DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&b, 1e-14).unwrap_or_else(|_| nalgebra::DVector::zeros(m));
    let r = &a * &c - &b;
    let scale = y.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    (c.iter().copied().collect(), r.amax() / scale)
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (c, _) = fit_powers(&lx, &ly, &[0, 1]);
    c[1]
}

/// Fitted `λ_s − n ≈ c s² + d s⁴` over a branch, excluding the two smallest `|s|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticFit {
    pub c: f64,
    pub d: f64,
    pub pure_error: f64,
    pub even_error: f64,
    pub odd_coefficient: f64,
}

pub fn fit_branch(samples: &[BranchSample], n: usize) -> QuadraticFit {
    let mut pts: Vec<(f64, f64)> = samples.iter().filter(|b| b.s != 0.0).map(|b| (b.s, b.lambda - n as f64)).collect();
    pts.sort_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap_or(core::cmp::Ordering::Equal));
    let pts = if pts.len() > 6 { &pts[2..] } else { &pts[..] };
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (_, pure_error) = fit_powers(&x, &y, &[2]);
    let (even, even_error) = fit_powers(&x, &y, &[2, 4]);
    let (odd, _) = fit_powers(&x, &y, &[2, 3, 4]);
    QuadraticFit { c: even[0], d: even[1], pure_error, even_error, odd_coefficient: odd[1] }
}

/// Direction of bifurcation from the sign of `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `c > 0`: the branch exists for `λ > n`.
    Supercritical,
    /// `c < 0`.
    Subcritical,
    Inconclusive,
}

/// Sign of the branch coefficient `c` for an `n = 1` problem.
pub fn bifurcation_direction(lattice: Lattice, kappa: f64) -> Result<(Direction, f64)> {
    let shape = LatticeShape::new(lattice.tau(), 1, 2, 0)?;
    let p = ReducedProblem::new(&ProblemConfig::new(shape, kappa))?;
    let grid = geometric_grid(1e-2, 0.1, 12);
    let b = trace_branch(&p, &grid)?;
    let fit = fit_branch(&b, 1);
    let noise = 1e-6 * (1.0 + fit.d.abs());
    let dir = if fit.c.abs() <= noise {
        Direction::Inconclusive
    } else if fit.c > 0.0 {
        Direction::Supercritical
    } else {
        Direction::Subcritical
    };
    Ok((dir, fit.c))
}

/// `β = ⟨|ψ0|⁴⟩/⟨|ψ0|²⟩²` for the lowest Landau level of `V_1` on a grid.
pub fn abrikosov_beta(lattice: Lattice, grid: &CellGrid) -> Result<f64> {
    let b = LandauBasis::new(lattice, 1, 0)?;
    let r2: Vec<f64> = grid.points.iter().map(|&x| b.eval(x)[0].norm_sqr()).collect();
    let r4: Vec<f64> = r2.iter().map(|r| r * r).collect();
    Ok(grid.average(&r4) / grid.average(&r2).powi(2))
}

/// Leading coefficient predicted by third-order perturbation theory,
/// `c = (κ² − 1/2)β + 1/2`, for a kernel normalized by `⟨|ψ0|²⟩ = 1`.
pub fn perturbative_coefficient(beta: f64, kappa: f64) -> f64 {
    (kappa * kappa - 0.5) * beta + 0.5
}

/// Checks re-evaluated on one branch sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub residual: f64,
    pub projection: f64,
    pub flux: f64,
    pub div_j: f64,
    pub mean_j: f64,
    pub rotation: f64,
    pub sector_leak: f64,
    pub nontrivial: bool,
}

impl ReducedProblem {
    /// Fine-grid residual, projection, flux, weak current conservation,
    /// rotation invariance of observables and sector closure.
    pub fn certify(&self, sample: &BranchSample) -> Certificate {
        let u = &sample.state;
        let residual = self.assemble_f_fine(sample.lambda, u).norm();
        let projection = (u.psi[0] - C64::new(sample.s, 0.0)).norm();
        let ab = &self.alpha_basis;
        let fl = flux(&self.shape.lattice, self.n(), |x| ab.eval(&u.alpha, x));
        let s = &self.fine;
        let f = self.fields(s, u);
        let (h, j1, j2) = self.nonlinear_fields(&f);
        let mean_j = s.grid.average(&j1).hypot(s.grid.average(&j2));
        let div_j = self.weak_divergence(&s.grid, &j1, &j2, 4);
        let rotation = self.rotation_defect(u);
        let sector_leak = self.sector_leak(s, &h);
        Certificate {
            residual,
            projection,
            flux: fl,
            div_j,
            mean_j,
            rotation,
            sector_leak,
            nontrivial: u.psi_norm() >= sample.s.abs() / 2.0,
        }
    }

    /// `max |⟨J, ∇χ⟩| / ‖∇χ‖` over `χ = e^{iG·x}`, `G = p b1 + q b2`, `|p|, |q| ≤ shells`:
    /// the weak divergence of `J` measured against unit `H¹` test functions.
    pub fn weak_divergence(&self, grid: &CellGrid, j1: &[f64], j2: &[f64], shells: i64) -> f64 {
        let (b1, b2) = self.shape.lattice.reciprocal();
        let mut worst: f64 = 0.0;
        for pi in -shells..=shells {
            for qi in -shells..=shells {
                if pi == 0 && qi == 0 {
                    continue;
                }
                let g = b1 * pi as f64 + b2 * qi as f64;
                let mut acc = ZERO;
                for (i, &x) in grid.points.iter().enumerate() {
                    let e = (I * (g.re * x.re + g.im * x.im)).exp();
                    acc += I * e * (g.re * j1[i] + g.im * j2[i]) * grid.weights[i];
                }
                worst = worst.max(acc.norm() / g.norm());
            }
        }
        worst
    }

    /// Sampled current `J` on a grid.
    pub fn current_on(&self, u: &SpectralState, grid: &CellGrid) -> (Vec<f64>, Vec<f64>) {
        let fs = self.observables(u, &grid.points);
        (fs.j.iter().map(|j| j.0).collect(), fs.j.iter().map(|j| j.1).collect())
    }

    /// Largest change of `n_s`, `B` and `J` under rotation by `2π/k`.
    pub fn rotation_defect(&self, u: &SpectralState) -> f64 {
        let xi = C64::from_polar(1.0, 2.0 * PI / self.shape.k as f64);
        let pts = CellGrid::uniform(self.shape.lattice, 12).points;
        let rot: Vec<C64> = pts.iter().map(|p| p * xi).collect();
        let a = self.observables(u, &pts);
        let b = self.observables(u, &rot);
        let mut d: f64 = 0.0;
        for i in 0..pts.len() {
            d = d.max((a.ns[i] - b.ns[i]).abs()).max((a.b[i] - b.b[i]).abs());
            let jr = C64::new(a.j[i].0, a.j[i].1) * xi;
            d = d.max((jr - C64::new(b.j[i].0, b.j[i].1)).norm());
        }
        d
    }

    /// Norm of the part of `h` in Landau levels outside the sector.
    fn sector_leak(&self, s: &Sampled, h: &[C64]) -> f64 {
        let n = self.n();
        let w = &s.grid.weights;
        let mut total = 0.0;
        let mut full = vec![ZERO; (self.basis.top() + 1) * n];
        for (i, &x) in s.grid.points.iter().enumerate() {
            let v = self.basis.eval(x);
            for (k, vk) in v.iter().enumerate() {
                full[k] += vk.conj() * h[i] * w[i];
            }
        }
        for m in 0..=self.basis.top() {
            let block = &full[m * n..(m + 1) * n];
            let mut inside = 0.0;
            for (lvl, c) in &self.sector {
                if *lvl == m {
                    let z: C64 = c.iter().zip(block).map(|(a, b)| a.conj() * b).sum();
                    inside += z.norm_sqr();
                }
            }
            let all: f64 = block.iter().map(|b| b.norm_sqr()).sum();
            total += (all - inside).max(0.0);
        }
        total.sqrt()
    }
}

/// Branch in the symmetry sector `(n, k, r)` on the lattice the sector needs.
pub fn multi_flux_branch(n: usize, k: usize, r: usize, kappa: f64, s_grid: &[f64]) -> Result<(ReducedProblem, Vec<BranchSample>)> {
    let lattice = match k {
        4 => Lattice::square(),
        2 if n % 2 == 1 => Lattice::square(),
        _ => Lattice::hexagonal(),
    };
    let shape = LatticeShape::new(lattice.tau(), n, k, r)?;
    let p = ReducedProblem::new(&ProblemConfig::new(shape, kappa))?;
    let b = trace_branch(&p, s_grid)?;
    Ok((p, b))
}
