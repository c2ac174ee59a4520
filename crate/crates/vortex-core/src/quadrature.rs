//! Cell quadratures. Weights are normalized so that integrals are cell averages.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::Lattice;
use crate::C64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(order);
    let mut weights = Vec::with_capacity(order);
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if order == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// Quadrature points over one cell, `x = s ω1 + t ω2` with `(s, t) ∈ [−1/2, 1/2)²`.
#[derive(Clone, Debug)]
pub struct CellGrid {
    pub lattice: Lattice,
    pub points: Vec<C64>,
    pub weights: Vec<f64>,
    /// Side length for uniform grids, `None` for Gauss–Legendre rules.
    pub side: Option<usize>,
}

impl CellGrid {
    /// Uniform (trapezoid) rule; spectrally accurate for periodic integrands.
    pub fn uniform(lattice: Lattice, side: usize) -> Self {
        let (g1, g2) = lattice.generators();
        let mut points = Vec::with_capacity(side * side);
        for j in 0..side {
            let t = (j as f64 + 0.5) / side as f64 - 0.5;
            for i in 0..side {
                let s = (i as f64 + 0.5) / side as f64 - 0.5;
                points.push(g1 * s + g2 * t);
            }
        }
        let w = 1.0 / (side * side) as f64;
        CellGrid { lattice, weights: alloc::vec![w; side * side], points, side: Some(side) }
    }

    /// Tensor Gauss–Legendre rule with `panels` panels of `order` nodes per direction.
    pub fn gauss(lattice: Lattice, order: usize, panels: usize) -> Self {
        let (g1, g2) = lattice.generators();
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::new();
        let mut wts = Vec::new();
        let h = 1.0 / panels as f64;
        for p in 0..panels {
            let a = -0.5 + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(a + 0.5 * h * (xi + 1.0));
                wts.push(0.5 * h * wi);
            }
        }
        let mut points = Vec::with_capacity(nodes.len() * nodes.len());
        let mut weights = Vec::with_capacity(nodes.len() * nodes.len());
        for (t, wt) in nodes.iter().zip(&wts) {
            for (s, ws) in nodes.iter().zip(&wts) {
                points.push(g1 * *s + g2 * *t);
                weights.push(ws * wt);
            }
        }
        CellGrid { lattice, points, weights, side: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cell average of sampled values.
    pub fn average(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Cell-averaged inner product `⟨f, g⟩ = avg(conj(f) g)`.
    pub fn inner(&self, f: &[C64], g: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for ((a, b), w) in f.iter().zip(g).zip(&self.weights) {
            acc += a.conj() * b * *w;
        }
        acc
    }
}
