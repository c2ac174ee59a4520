//! n-theta functions: the space `V_n` of entire functions with
//! `θ(z+1) = θ(z)` and `θ(z+τ) = e^{−2πinz} e^{−iπnτ} θ(z)`.
//!
//! The basis is `θ_{n,m}(z) = Σ_{l ≡ m (n)} γ^{l²} e^{2πilz}` with `γ = e^{iπτ/n}`.
//! Zeros are located on the Wigner–Seitz cell of `ℤ + τℤ`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::{Lattice, WignerSeitzCell};
use crate::linalg::lstsq;
use crate::{Error, Result, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Jitter offsets for contour retries: fixed and deterministic.
fn jitter(attempt: usize) -> C64 {
    let g = 0.618_033_988_749_894_9;
    let a = (attempt as f64 * g).fract() - 0.5;
    let b = (attempt as f64 * g * g + 0.25).fract() - 0.5;
    C64::new(a, b)
}

/// Evaluation context for `V_n` at a fixed `τ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaSpace {
    n: usize,
    tau: C64,
    trunc: usize,
}

impl ThetaSpace {
    pub fn new(n: usize, tau: C64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("degree must be positive"));
        }
        if !(tau.im > 0.0) {
            return Err(Error::Domain("Im tau must be positive"));
        }
        Ok(ThetaSpace { n, tau, trunc: Self::default_trunc(n, tau) })
    }

    pub fn for_lattice(n: usize, lattice: &Lattice) -> Result<Self> {
        Self::new(n, lattice.tau())
    }

    /// `ceil(sqrt(40 n / (π Im τ))) + n`.
    pub fn default_trunc(n: usize, tau: C64) -> usize {
        (40.0 * n as f64 / (PI * tau.im)).sqrt().ceil() as usize + n
    }

    /// Overrides the series half-width; terms farther than `trunc` from the
    /// dominant index are dropped.
    pub fn with_trunc(mut self, trunc: usize) -> Self {
        self.trunc = trunc;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn gamma(&self) -> C64 {
        (I * PI * self.tau / self.n as f64).exp()
    }

    pub fn with_degree(&self, n: usize) -> Result<Self> {
        ThetaSpace::new(n, self.tau)
    }

    pub fn cell(&self) -> WignerSeitzCell {
        WignerSeitzCell::new(C64::new(1.0, 0.0), self.tau)
    }

    /// `θ^{(p)}_{n,m}(z) · e^{w}` for all `m < n`, `p ≤ pmax`, laid out as `m*(pmax+1)+p`.
    pub fn derivs_weighted(&self, z: C64, pmax: usize, w: C64) -> Vec<C64> {
        let n = self.n as i64;
        let mut out = vec![C64::new(0.0, 0.0); self.n * (pmax + 1)];
        let peak = -(n as f64) * z.im / self.tau.im;
        let half = (self.trunc + pmax) as i64;
        let lo = peak.floor() as i64 - half;
        let hi = peak.ceil() as i64 + half;
        let a = I * PI * self.tau / n as f64;
        let b = 2.0 * PI * I * z;
        for l in lo..=hi {
            let lf = l as f64;
            let mut term = (w + a * (lf * lf) + b * lf).exp();
            let m = l.rem_euclid(n) as usize;
            let k = C64::new(0.0, 2.0 * PI * lf);
            for p in 0..=pmax {
                out[m * (pmax + 1) + p] += term;
                term *= k;
            }
        }
        out
    }

    pub fn basis_values(&self, z: C64) -> Vec<C64> {
        self.derivs_weighted(z, 0, C64::new(0.0, 0.0))
    }

    pub fn basis(&self, m: usize, z: C64) -> Result<C64> {
        if m >= self.n {
            return Err(Error::Domain("basis index out of range"));
        }
        Ok(self.basis_values(z)[m])
    }

    /// `log |f_n|` normalizer: `−(π n / Im τ) (Im z)²`.
    pub fn log_gauge_weight(&self, z: C64) -> f64 {
        -PI * self.n as f64 * z.im * z.im / self.tau.im
    }

    pub fn element(&self, coeffs: Vec<C64>) -> Result<ThetaElement> {
        if coeffs.len() != self.n {
            return Err(Error::Domain("coefficient count must equal n"));
        }
        Ok(ThetaElement { space: *self, coeffs })
    }

    pub fn basis_element(&self, m: usize) -> ThetaElement {
        let mut c = vec![C64::new(0.0, 0.0); self.n];
        c[m % self.n] = C64::new(1.0, 0.0);
        ThetaElement { space: *self, coeffs: c }
    }

    /// Both sides of `θ_{n,m}(z+τ/n) = γ^{−1} e^{∓2πiz} θ_{n,m+1}(z)`.
    pub fn shift_by_tau_over_n(&self, m: usize, z: C64) -> TauShift {
        let lhs = self.basis_values(z + self.tau / self.n as f64)[m % self.n];
        let next = self.basis_values(z)[(m + 1) % self.n] / self.gamma();
        TauShift {
            lhs,
            rhs_minus: next * (-2.0 * PI * I * z).exp(),
            rhs_plus: next * (2.0 * PI * I * z).exp(),
        }
    }

    /// `σ_{j,±} = θ_j ± θ_{n−j}`, deduplicated.
    pub fn parity_split(&self) -> (Vec<ThetaElement>, Vec<ThetaElement>) {
        let n = self.n;
        let mut even = Vec::new();
        let mut odd = Vec::new();
        for j in 0..=n / 2 {
            let k = (n - j) % n;
            if j == k {
                even.push(self.basis_element(j));
            } else {
                let mut e = vec![C64::new(0.0, 0.0); n];
                e[j] = C64::new(1.0, 0.0);
                e[k] = C64::new(1.0, 0.0);
                let mut o = e.clone();
                o[k] = C64::new(-1.0, 0.0);
                even.push(ThetaElement { space: *self, coeffs: e });
                odd.push(ThetaElement { space: *self, coeffs: o });
            }
        }
        (even, odd)
    }

    /// `Θ(z) = det(θ_j^{(i)}(z))`.
    pub fn wronskian(&self, z: C64) -> C64 {
        let n = self.n;
        let d = self.derivs_weighted(z, n - 1, C64::new(0.0, 0.0));
        let m = DMatrix::from_fn(n, n, |i, j| d[j * n + i]);
        m.determinant()
    }

    /// The Wronskian as an element of `V_{n²}`.
    pub fn wronskian_element(&self) -> Result<ThetaElement> {
        let target = self.with_degree(self.n * self.n)?;
        let (e, _) = fit_function(&target, |z| self.wronskian(z), 1e-9)?;
        Ok(e)
    }

    /// Singular family member `θ_{1,0}(z + (a+bτ)/n)^n e^{2πibz}`.
    pub fn singular_family(&self, a: usize, b: usize) -> Result<ThetaElement> {
        let n = self.n;
        if a >= n || b >= n {
            return Err(Error::Domain("family indices must lie in 0..n"));
        }
        let one = self.with_degree(1)?;
        let shift = (self.tau * b as f64 + a as f64) / n as f64;
        let (e, _) = fit_function(
            self,
            |z| {
                let v = one.basis_values(z + shift)[0];
                v.powu(n as u32) * (2.0 * PI * I * b as f64 * z).exp()
            },
            1e-9,
        )?;
        Ok(e)
    }

    /// Predicted location of the zero of the singular member `(a, b)`.
    pub fn singular_zero(&self, a: usize, b: usize) -> C64 {
        (self.tau + 1.0) * 0.5 - (self.tau * b as f64 + a as f64) / self.n as f64
    }
}

/// Both sides of the `τ/n` shift relation, with each sign of the exponential.
#[derive(Clone, Copy, Debug)]
pub struct TauShift {
    pub lhs: C64,
    pub rhs_minus: C64,
    pub rhs_plus: C64,
}

/// An element of `V_n` in the `θ_{n,m}` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaElement {
    pub space: ThetaSpace,
    pub coeffs: Vec<C64>,
}

impl ThetaElement {
    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.eval_weighted(z, C64::new(0.0, 0.0))
    }

    pub fn eval_weighted(&self, z: C64, w: C64) -> C64 {
        let b = self.space.derivs_weighted(z, 0, w);
        b.iter().zip(&self.coeffs).map(|(x, c)| x * c).sum()
    }

    /// `θ^{(p)}(z)` for `p ≤ pmax`.
    pub fn derivs(&self, z: C64, pmax: usize) -> Vec<C64> {
        let b = self.space.derivs_weighted(z, pmax, C64::new(0.0, 0.0));
        (0..=pmax)
            .map(|p| (0..self.n()).map(|m| b[m * (pmax + 1) + p] * self.coeffs[m]).sum())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    /// Scales the largest coefficient to one.
    pub fn normalized(&self) -> ThetaElement {
        let big = self
            .coeffs
            .iter()
            .copied()
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(core::cmp::Ordering::Equal))
            .unwrap_or(C64::new(0.0, 0.0));
        if big.norm() == 0.0 {
            return self.clone();
        }
        ThetaElement { space: self.space, coeffs: self.coeffs.iter().map(|c| c / big).collect() }
    }

    /// Relative residuals of the two defining quasi-periodicity relations at `z`.
    pub fn quasi_periodicity_residual(&self, z: C64) -> (f64, f64) {
        let n = self.n() as f64;
        let tau = self.space.tau;
        let v = self.eval(z);
        let scale = v.norm().max(1e-300);
        let r1 = (self.eval(z + 1.0) - v).norm() / scale;
        let factor = (-2.0 * PI * I * n * z - I * PI * n * tau).exp();
        let r2 = (self.eval(z + tau) - factor * v).norm() / (factor.norm() * scale);
        (r1, r2)
    }

    pub fn scaled(&self, s: C64) -> ThetaElement {
        ThetaElement { space: self.space, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn count_zeros(&self) -> Result<usize> {
        count_zeros(self)
    }

    pub fn find_zeros(&self) -> Result<Divisor> {
        find_zeros(self)
    }
}

/// Collinearity test of coefficient vectors: smallest singular value of the
/// normalized 2×n matrix.
pub fn collinearity_defect(a: &ThetaElement, b: &ThetaElement) -> f64 {
    let (a, b) = (a.normalized(), b.normalized());
    let n = a.coeffs.len();
    let m = DMatrix::from_fn(2, n, |i, j| if i == 0 { a.coeffs[j] } else { b.coeffs[j] });
    let s = crate::linalg::singular_values(&m);
    s.last().copied().unwrap_or(0.0) / s[0].max(1e-300)
}

/// Collocation points spread over the theta cell.
fn collocation_points(count: usize, offset: f64, tau: C64) -> Vec<C64> {
    let k = (count as f64).sqrt().ceil() as usize;
    let mut pts = Vec::with_capacity(k * k);
    for j in 0..k {
        for i in 0..k {
            let s = (i as f64 + offset) / k as f64 - 0.5;
            let t = (j as f64 + offset * 0.7548776662) / k as f64 - 0.5;
            pts.push(C64::new(s, 0.0) + tau * t);
        }
    }
    pts
}

/// Least-squares fit of a function known to lie in `V_n` (relative residual
/// measured on independent validation points, in the gauge-weighted norm).
pub fn fit_function<F: Fn(C64) -> C64>(space: &ThetaSpace, f: F, tol: f64) -> Result<(ThetaElement, f64)> {
    fit_function_avoiding(space, f, tol, &[])
}

fn fit_function_avoiding<F: Fn(C64) -> C64>(
    space: &ThetaSpace,
    f: F,
    tol: f64,
    avoid: &[C64],
) -> Result<(ThetaElement, f64)> {
    let n = space.n;
    let count = 4 * n + 12;
    let far = |z: &C64| avoid.iter().all(|a| (*z - *a).norm() > 0.05);
    let build = |pts: &[C64]| {
        let a = DMatrix::from_fn(pts.len(), n, |i, m| {
            let w = space.log_gauge_weight(pts[i]);
            space.derivs_weighted(pts[i], 0, C64::new(w, 0.0))[m]
        });
        let b = DMatrix::from_fn(pts.len(), 1, |i, _| f(pts[i]) * space.log_gauge_weight(pts[i]).exp());
        (a, b)
    };
    let pts: Vec<C64> = collocation_points(count, 0.37, space.tau).into_iter().filter(far).collect();
    let (a, b) = build(&pts);
    let (x, _) = lstsq(&a, &b);
    let check: Vec<C64> = collocation_points(count, 0.81, space.tau).into_iter().filter(far).collect();
    let (a2, b2) = build(&check);
    let r = &a2 * &x - &b2;
    let residual = r.norm() / b2.norm().max(1e-300);
    if residual > tol {
        return Err(Error::Collocation { residual, tolerance: tol });
    }
    let coeffs = (0..n).map(|m| x[(m, 0)]).collect();
    Ok((ThetaElement { space: *space, coeffs }, residual))
}

/// `θσ ∈ V_{n+m}`.
pub fn product(a: &ThetaElement, b: &ThetaElement) -> Result<ThetaElement> {
    if (a.space.tau - b.space.tau).norm() > 1e-14 {
        return Err(Error::Domain("factors must share tau"));
    }
    let target = a.space.with_degree(a.n() + b.n())?;
    fit_function(&target, |z| a.eval(z) * b.eval(z), 1e-10).map(|(e, _)| e)
}

/// Outcome of a divisibility test.
#[derive(Clone, Debug)]
pub struct Quotient {
    pub divisible: bool,
    pub quotient: Option<ThetaElement>,
    pub residual: f64,
}

/// Divides `a` by `b` when `div(b) ⊆ div(a)`.
pub fn quotient_check(a: &ThetaElement, b: &ThetaElement) -> Result<Quotient> {
    let da = a.find_zeros()?;
    let db = b.find_zeros()?;
    let cell = a.space.cell();
    let tol = 1e-6 * cell.diameter();
    let contained = db.entries.iter().all(|(p, m)| {
        da.entries.iter().any(|(q, mq)| (*p - *q).norm() < tol && mq >= m)
    });
    if !contained || b.n() > a.n() {
        return Ok(Quotient { divisible: false, quotient: None, residual: f64::INFINITY });
    }
    if a.n() == b.n() {
        let ok = collinearity_defect(a, b) < 1e-8;
        return Ok(Quotient { divisible: ok, quotient: None, residual: 0.0 });
    }
    let target = a.space.with_degree(a.n() - b.n())?;
    let tau = a.space.tau;
    let mut avoid = Vec::new();
    for (p, _) in &db.entries {
        for s in -1i64..=1 {
            for t in -1i64..=1 {
                avoid.push(*p + s as f64 + tau * t as f64);
            }
        }
    }
    match fit_function_avoiding(&target, |z| a.eval(z) / b.eval(z), 1e-8, &avoid) {
        Ok((q, r)) => Ok(Quotient { divisible: true, quotient: Some(q), residual: r }),
        Err(Error::Collocation { residual, .. }) => Ok(Quotient { divisible: false, quotient: None, residual }),
        Err(e) => Err(e),
    }
}

/// Zeros with multiplicities, canonicalized into the half-open theta cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Divisor {
    pub entries: Vec<(C64, u32)>,
}

impl Divisor {
    pub fn degree(&self) -> u32 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// Multiplicity at `p` (zero if absent), comparing modulo the lattice.
    pub fn multiplicity_at(&self, cell: &WignerSeitzCell, p: C64, tol: f64) -> u32 {
        let (q, _) = cell.reduce(p);
        self.entries
            .iter()
            .filter(|(z, _)| {
                let d = cell.reduce(*z - q).0;
                d.norm() < tol
            })
            .map(|e| e.1)
            .sum()
    }
}

fn arg_step(a: C64, b: C64) -> f64 {
    (b / a).arg()
}

const SEGMENT_BUDGET: usize = 20_000;

/// Winding number of `f` around a closed polygon, with adaptive phase tracking.
/// `f` returns the value and the derivative; segments are refined until both
/// the phase step and `length·|f′/f|` are small, so near-passes of high-order
/// zeros cannot alias. Fails when the contour passes too close to a zero.
pub fn winding_on_polygon<F: Fn(C64) -> (C64, C64)>(f: &F, poly: &[C64]) -> Result<i64> {
    const SAMPLES: usize = 24;
    let mut pts = Vec::new();
    let nv = poly.len();
    for i in 0..nv {
        let a = poly[i];
        let b = poly[(i + 1) % nv];
        for k in 0..SAMPLES {
            pts.push(a + (b - a) * (k as f64 / SAMPLES as f64));
        }
    }
    let vals: Vec<(C64, C64)> = pts.iter().map(|&z| f(z)).collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.0.norm()));
    let guard = 1e-11 * scale;
    if vals.iter().any(|v| v.0.norm() <= guard) || scale == 0.0 {
        return Err(Error::Contour { attempts: 0 });
    }
    let mut total = 0.0;
    let mut budget = SEGMENT_BUDGET;
    for i in 0..pts.len() {
        let j = (i + 1) % pts.len();
        total += segment(f, pts[i], pts[j], vals[i], vals[j], guard, &mut budget)?;
    }
    let w = total / (2.0 * PI);
    if (w - w.round()).abs() > 0.05 {
        return Err(Error::Contour { attempts: 0 });
    }
    Ok(w.round() as i64)
}

fn segment<F: Fn(C64) -> (C64, C64)>(
    f: &F,
    a: C64,
    b: C64,
    fa: (C64, C64),
    fb: (C64, C64),
    guard: f64,
    budget: &mut usize,
) -> Result<f64> {
    let d = arg_step(fa.0, fb.0);
    let rate = (fa.1 / fa.0).norm().max((fb.1 / fb.0).norm()) * (b - a).norm();
    if d.abs() < 0.3 && rate < 0.5 {
        return Ok(d);
    }
    // Refinement that does not settle means the phase is roundoff near a zero.
    if *budget == 0 {
        return Err(Error::Contour { attempts: 0 });
    }
    *budget -= 1;
    let m = (a + b) * 0.5;
    let fm = f(m);
    if fm.0.norm() <= guard {
        return Err(Error::Contour { attempts: 0 });
    }
    Ok(segment(f, a, m, fa, fm, guard, budget)? + segment(f, m, b, fm, fb, guard, budget)?)
}

/// Value and derivative scaled by the positive gauge weight, which leaves the
/// phase alone and keeps magnitudes comparable across the cell.
fn value_and_slope(theta: &ThetaElement) -> impl Fn(C64) -> (C64, C64) + '_ {
    move |z| {
        let w = theta.space.log_gauge_weight(z).exp();
        let d = theta.derivs(z, 1);
        (d[0] * w, d[1] * w)
    }
}

/// Number of zeros in one period cell (translated on retries).
pub fn count_zeros(theta: &ThetaElement) -> Result<usize> {
    if theta.is_zero() {
        return Err(Error::Domain("zero element has no finite divisor"));
    }
    let cell = theta.space.cell();
    let diam = cell.diameter();
    let f = value_and_slope(&theta);
    for attempt in 0..9 {
        // Any translate of the cell is a period cell; grow the offset geometrically
        // so that high-order zeros on the boundary are cleared too.
        let shift = if attempt == 0 { C64::new(0.0, 0.0) } else { jitter(attempt) * (1e-6 * diam * 6f64.powi(attempt as i32 - 1)) };
        let poly: Vec<C64> = cell.vertices.iter().map(|v| *v + shift).collect();
        match winding_on_polygon(&f, &poly) {
            Ok(w) => return Ok(w.max(0) as usize),
            Err(Error::Contour { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Contour { attempts: 8 })
}

fn rect(lo: C64, hi: C64) -> [C64; 4] {
    [lo, C64::new(hi.re, lo.im), hi, C64::new(lo.re, hi.im)]
}

fn newton_polish(theta: &ThetaElement, z0: C64, mult: usize) -> C64 {
    let order = mult.saturating_sub(1);
    let mut z = z0;
    for _ in 0..60 {
        let d = theta.derivs(z, order + 1);
        if d[order + 1].norm() == 0.0 {
            break;
        }
        let step = d[order] / d[order + 1];
        z -= step;
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

fn local_winding(theta: &ThetaElement, z: C64, radius: f64) -> Option<i64> {
    let poly: Vec<C64> = (0..8).map(|k| z + C64::from_polar(radius, PI * k as f64 / 4.0)).collect();
    winding_on_polygon(&value_and_slope(theta), &poly).ok()
}

/// Divisor by quadtree subdivision with boxed winding numbers and Newton polish.
pub fn find_zeros(theta: &ThetaElement) -> Result<Divisor> {
    if theta.is_zero() {
        return Err(Error::Domain("zero element has no finite divisor"));
    }
    let theta = theta.normalized();
    let cell = theta.space.cell();
    let diam = cell.diameter();
    let (mut lo, mut hi) = (C64::new(f64::MAX, f64::MAX), C64::new(f64::MIN, f64::MIN));
    for v in &cell.vertices {
        lo = C64::new(lo.re.min(v.re), lo.im.min(v.im));
        hi = C64::new(hi.re.max(v.re), hi.im.max(v.im));
    }
    let pad = 0.03 * diam;
    let f = value_and_slope(&theta);
    let mut found: Vec<(C64, u32)> = Vec::new();
    let mut root = None;
    for attempt in 0..9 {
        let sh = jitter(attempt + 1) * (1e-3 * diam);
        let l = lo - C64::new(pad, pad) + sh;
        let h = hi + C64::new(pad, pad) + sh;
        if let Ok(w) = winding_on_polygon(&f, &rect(l, h)) {
            root = Some((l, h, w));
            break;
        }
    }
    let (l, h, w) = root.ok_or(Error::Contour { attempts: 8 })?;
    let mut queue = vec![(l, h, w)];
    let min_side = 1e-7 * diam;
    while let Some((l, h, w)) = queue.pop() {
        if w <= 0 {
            continue;
        }
        let side = (h.re - l.re).max(h.im - l.im);
        // A multiple zero is accepted before its neighbourhood sinks below
        // roundoff, which happens at about its cluster radius.
        if side < (0.02 * diam).max(8.0 * cluster_radius(w as u32, diam)) {
            let z = newton_polish(&theta, (l + h) * 0.5, w as usize);
            let m = side.min(0.02 * diam);
            let inside = z.re >= l.re - m && z.re <= h.re + m && z.im >= l.im - m && z.im <= h.im + m;
            if inside && local_winding(&theta, z, cluster_radius(w as u32, diam)) == Some(w) {
                found.push((z, w as u32));
                continue;
            }
            if side < min_side {
                return Err(Error::Precision("zero cluster below resolution"));
            }
        }
        let mut ok = false;
        for attempt in 0..9 {
            let t = jitter(attempt) * 0.2;
            let m = C64::new(l.re + (h.re - l.re) * (0.5 + t.re), l.im + (h.im - l.im) * (0.5 + t.im));
            let boxes = [
                (l, m),
                (C64::new(m.re, l.im), C64::new(h.re, m.im)),
                (m, h),
                (C64::new(l.re, m.im), C64::new(m.re, h.im)),
            ];
            let ws: Result<Vec<i64>> = boxes.iter().map(|(a, b)| winding_on_polygon(&f, &rect(*a, *b))).collect();
            if let Ok(ws) = ws {
                if ws.iter().sum::<i64>() == w {
                    for (bx, wi) in boxes.iter().zip(ws) {
                        queue.push((bx.0, bx.1, wi));
                    }
                    ok = true;
                    break;
                }
            }
        }
        if !ok {
            return Err(Error::Contour { attempts: 8 });
        }
    }
    let mut entries: Vec<(C64, u32)> = Vec::new();
    for (z, m) in found {
        let (q, _) = cell.reduce(z);
        if !entries.iter().any(|(p, _)| cell.reduce(*p - q).0.norm() < 1e-6 * diam) {
            entries.push((q, m));
        }
    }
    let entries = merge_clusters(&theta, &cell, entries);
    // Residual relative to the gauge-weighted size of θ on the search box.
    let mut scale: f64 = 0.0;
    for i in 0..=8 {
        for j in 0..=8 {
            let z = C64::new(lo.re + (hi.re - lo.re) * i as f64 / 8.0, lo.im + (hi.im - lo.im) * j as f64 / 8.0);
            scale = scale.max(f(z).0.norm());
        }
    }
    let residual = entries.iter().fold(0.0f64, |r, (z, _)| r.max(f(*z).0.norm())) / scale;
    let div = Divisor { entries };
    if div.degree() as usize != theta.n() {
        return Err(Error::Precision("divisor degree differs from n"));
    }
    if residual > 1e-11 {
        return Err(Error::Precision("polished residual above 1e-11"));
    }
    Ok(div)
}

/// Radius below which `w` zeros cannot be told apart from one zero of order
/// `w`: a relative perturbation `ε` splits such a zero over about `ε^{1/w}`.
fn cluster_radius(w: u32, diam: f64) -> f64 {
    diam * 1e-12f64.powf(1.0 / w as f64).max(1e-4)
}

/// Replaces groups of nearby zeros that are one multiple zero split by
/// roundoff. A group is merged only when the polished centre carries the full
/// winding on a circle of the group's cluster radius.
fn merge_clusters(theta: &ThetaElement, cell: &WignerSeitzCell, entries: Vec<(C64, u32)>) -> Vec<(C64, u32)> {
    let diam = cell.diameter();
    let n = theta.n() as u32;
    let reach = 2.0 * cluster_radius(n, diam);
    let k = entries.len();
    let mut group: Vec<usize> = (0..k).collect();
    fn root(g: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while g[i] != i {
            g[i] = g[g[i]];
            i = g[i];
        }
        i
    }
    for i in 0..k {
        for j in 0..i {
            if cell.reduce(entries[i].0 - entries[j].0).0.norm() < reach {
                let (a, b) = (root(&mut group, i), root(&mut group, j));
                group[a] = b;
            }
        }
    }
    let mut out = Vec::new();
    let mut done = vec![false; k];
    for i in 0..k {
        let g = root(&mut group, i);
        if done[g] {
            continue;
        }
        done[g] = true;
        let members: Vec<usize> = (0..k).filter(|&j| root(&mut group, j) == g).collect();
        if members.len() == 1 {
            out.push(entries[i]);
            continue;
        }
        // Members relative to the first, unwrapped across the cell boundary.
        let base = entries[members[0]].0;
        let pts: Vec<C64> = members.iter().map(|&j| base + cell.reduce(entries[j].0 - base).0).collect();
        let w: u32 = members.iter().map(|&j| entries[j].1).sum();
        let centre = pts.iter().sum::<C64>() / pts.len() as f64;
        let z = newton_polish(theta, centre, w as usize);
        let rho = cluster_radius(w, diam);
        let spread = pts.iter().fold(0.0f64, |m, p| m.max((p - z).norm()));
        if spread < rho && local_winding(theta, z, 1.5 * rho) == Some(w as i64) {
            out.push((cell.reduce(z).0, w));
        } else {
            out.extend(members.iter().map(|&j| entries[j]));
        }
    }
    out
}
