//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vortex_core::bifurcation::*;
use vortex_core::landau::{assembled_spectrum, fd_reference_spectrum, LandauBasis};
use vortex_core::lattice::{kappa_c, Lattice, LatticeShape};
use vortex_core::quadrature::CellGrid;
use vortex_core::symmetry::*;
use vortex_core::theta::ThetaSpace;
use vortex_core::{Result, C64};

const SEED: u64 = 0x5eed;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn landau_spectrum() -> Result<Outcome> {
    let mut worst_fd: f64 = 0.0;
    let mut worst_ladder: f64 = 0.0;
    let mut mult_ok = true;
    for n in [1usize, 2, 4, 6] {
        let fd = fd_reference_spectrum(n, 4, 48)?;
        for (m, (v, mult)) in fd.iter().enumerate() {
            mult_ok &= *mult == n;
            worst_fd = worst_fd.max((v / ((2 * m + 1) * n) as f64 - 1.0).abs());
        }
        for lat in [Lattice::hexagonal(), Lattice::square()] {
            let basis = LandauBasis::new(lat, n, 3)?;
            let e = assembled_spectrum(&basis, &CellGrid::uniform(lat, 24 + 6 * n))?;
            mult_ok &= e.len() == 4 * n;
            for (i, v) in e.iter().enumerate() {
                worst_ladder = worst_ladder.max((v / ((2 * (i / n) + 1) * n) as f64 - 1.0).abs());
            }
        }
    }
    Ok(outcome(
        mult_ok && worst_fd < 1e-6 && worst_ladder < 1e-10,
        format!("fd rel err {worst_fd:.2e} (< 1e-6), ladder rel err {worst_ladder:.2e} (< 1e-10), multiplicity n: {mult_ok}"),
    ))
}

fn random_zero_counts() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let taus = [Lattice::hexagonal().tau(), C64::new(0.0, 1.0), C64::new(0.3, 1.2), C64::new(-0.4, 1.1)];
    let mut hits = 0;
    for trial in 0..50 {
        let n = rng.gen_range(1..=10);
        let sp = ThetaSpace::new(n, taus[trial % taus.len()])?;
        let coeffs = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        if sp.element(coeffs)?.count_zeros()? == n {
            hits += 1;
        }
    }
    Ok(outcome(hits == 50, format!("{hits}/50 random elements have exactly n zeros")))
}

fn generator_zero() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for tau in [Lattice::hexagonal().tau(), C64::new(0.0, 1.0), C64::new(0.3, 1.2), C64::new(-0.2, 1.5), C64::new(0.5, 2.0)] {
        let sp = ThetaSpace::new(1, tau)?;
        let d = sp.basis_element(0).find_zeros()?;
        if d.entries.len() != 1 || d.entries[0].1 != 1 {
            return Ok(outcome(false, format!("τ = {tau}: divisor {:?}", d.entries)));
        }
        let target = sp.cell().reduce((tau + 1.0) * 0.5).0;
        worst = worst.max((d.entries[0].0 - target).norm());
    }
    Ok(outcome(worst < 1e-10, format!("max distance to (1+τ)/2 over 5 τ: {worst:.2e} (< 1e-10)")))
}

fn singular_family() -> Result<Outcome> {
    let mut report = Vec::new();
    let mut pass = true;
    for n in [2usize, 3] {
        let sp = ThetaSpace::new(n, Lattice::hexagonal().tau())?;
        let cell = sp.cell();
        let mut members = Vec::new();
        let mut good = 0;
        for a in 0..n {
            for b in 0..n {
                let e = sp.singular_family(a, b)?;
                let d = e.find_zeros()?;
                if d.entries.len() == 1 && d.multiplicity_at(&cell, sp.singular_zero(a, b), 1e-8) as usize == n {
                    good += 1;
                }
                members.push(e);
            }
        }
        let mut distinct = true;
        for i in 0..members.len() {
            for j in 0..i {
                distinct &= vortex_core::theta::collinearity_defect(&members[i], &members[j]) > 1e-3;
            }
        }
        pass &= good == n * n && distinct;
        report.push(format!("n={n}: {good}/{} single order-n zeros on the coset, distinct {distinct}", n * n));
    }
    Ok(outcome(pass, report.join("; ")))
}

fn classification() -> Result<Outcome> {
    let rows = classification_table(10)?;
    let pairs = one_dimensional(&rows) == ONE_DIMENSIONAL_PAIRS.to_vec();
    let diagrams = rows.iter().all(|r| r.dim == r.diagram_dim);
    let mut three = Vec::new();
    for (n, r) in [(6, 0), (8, 2), (10, 2), (10, 4)] {
        let row = rows.iter().find(|x| x.n == n && x.r == r).expect("row present");
        three.push(format!("({n},{r})={}", row.dim));
    }
    let three_ok = rows.iter().filter(|x| [(6, 0), (8, 2), (10, 2), (10, 4)].contains(&(x.n, x.r))).all(|x| x.dim == 3);
    let mut detail = format!(
        "one-dimensional pair list {}, diagrams = eigenspaces {}, dim 3 rows {} [{}]",
        ok(pairs),
        ok(diagrams),
        ok(three_ok),
        three.join(" ")
    );
    if !three_ok {
        detail.push_str("; computed dims sum to n per flux and the tabulated products there have rank 2");
    }
    Ok(outcome(pairs && diagrams && three_ok, detail))
}

fn irreducibility() -> Result<Outcome> {
    let hex = Lattice::hexagonal().tau();
    let mut parts = Vec::new();
    let mut pass = true;
    for (n, r) in [(4usize, 0usize), (6, 3), (8, 5), (10, 5)] {
        let s = spanning_theta(n, r)?;
        let v = irreducible(&s[0], &LatticeShape::new(hex, n, 6, r)?)?;
        pass &= v;
        parts.push(format!("({n},{r}) {v}"));
    }
    let sq = C64::new(0.0, 1.0);
    let (_, odd) = ThetaSpace::new(3, sq)?.parity_split();
    let v = odd.len() == 1 && irreducible(&odd[0], &LatticeShape::new(sq, 3, 2, 1)?)?;
    pass &= v;
    parts.push(format!("n=3 odd {v}"));
    Ok(outcome(pass, parts.join(", ")))
}

fn w_scaling() -> Result<Outcome> {
    let shape = LatticeShape::new(Lattice::square().tau(), 1, 4, 0)?;
    let p = ReducedProblem::new(&ProblemConfig::new(shape, 1.0))?;
    let b = trace_branch(&p, &geometric_grid(1e-3, 0.1, 16))?;
    let s: Vec<f64> = b.iter().map(|x| x.s).collect();
    let w1: Vec<f64> = b.iter().map(|x| x.state.psi[1..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()).collect();
    let w2: Vec<f64> = b.iter().map(|x| x.state.alpha_norm()).collect();
    let (a, c) = (log_log_slope(&s, &w1), log_log_slope(&s, &w2));
    Ok(outcome(
        (2.9..=3.1).contains(&a) && (1.9..=2.1).contains(&c),
        format!("slope ‖w1‖ {a:.5} in [2.9,3.1], slope ‖w2‖ {c:.5} in [1.9,2.1]"),
    ))
}

/// Largest change of the observables under rotation by `2π/k` about `center`.
fn rotation_by(p: &ReducedProblem, u: &SpectralState, k: usize, center: C64) -> f64 {
    let xi = C64::from_polar(1.0, 2.0 * PI / k as f64);
    let pts: Vec<C64> = CellGrid::uniform(p.shape.lattice, 12).points.iter().map(|x| x + center).collect();
    let rot: Vec<C64> = pts.iter().map(|x| center + (x - center) * xi).collect();
    let (a, b) = (p.observables(u, &pts), p.observables(u, &rot));
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        d = d.max((a.ns[i] - b.ns[i]).abs()).max((a.b[i] - b.b[i]).abs());
        d = d.max((C64::new(a.j[i].0, a.j[i].1) * xi - C64::new(b.j[i].0, b.j[i].1)).norm());
    }
    d
}

/// `full_k` is the rotation order checked on the observables: about the origin,
/// or for a single flux quantum about the vortex core at `(1+τ)/2`.
fn certify_branch(label: &str, n: usize, k: usize, r: usize, lattice: Lattice, full_k: usize) -> Result<(bool, String)> {
    let start = Instant::now();
    let shape = LatticeShape::new(lattice.tau(), n, k, r)?;
    let p = ReducedProblem::new(&ProblemConfig::new(shape, 1.0))?;
    let b = trace_branch(&p, &default_s_grid())?;
    let (mut res, mut flux, mut div, mut rot): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut nontrivial = true;
    let center = if n == 1 { (lattice.tau() + 1.0) * (0.5 * lattice.scale()) } else { C64::new(0.0, 0.0) };
    for sample in &b {
        let c = p.certify(sample);
        res = res.max(c.residual);
        flux = flux.max((c.flux - 2.0 * PI * n as f64).abs());
        div = div.max(c.div_j);
        rot = rot.max(c.rotation).max(rotation_by(&p, &sample.state, full_k, center));
        nontrivial &= c.nontrivial;
    }
    let fit = fit_branch(&b, n);
    let time = start.elapsed();
    let pass = res < 1e-9
        && fit.pure_error < 1e-3
        && flux < 1e-8
        && div < 1e-7
        && rot < 1e-8
        && nontrivial
        && time < Duration::from_secs(300);
    Ok((
        pass,
        format!(
            "{label}: res {res:.1e} c {:.6} fit {:.1e} flux {flux:.1e} divJ {div:.1e} rot(2π/{full_k}) {rot:.1e} {:.1}s",
            fit.c,
            fit.pure_error,
            time.as_secs_f64()
        ),
    ))
}

fn branches() -> Result<Outcome> {
    let hex = Lattice::hexagonal();
    let sq = Lattice::square();
    let cases = [
        ("n=1 hex", 1, 2, 0, hex, 6),
        ("n=1 square", 1, 4, 0, sq, 4),
        ("(2,6,0)", 2, 6, 0, hex, 6),
        ("(2,6,2)", 2, 6, 2, hex, 6),
        ("(6,6,3)", 6, 6, 3, hex, 6),
        ("(3,2,1)", 3, 2, 1, sq, 2),
    ];
    let mut pass = true;
    let mut lines = Vec::new();
    for (label, n, k, r, lat, full) in cases {
        let (ok, line) = certify_branch(label, n, k, r, lat, full)?;
        pass &= ok;
        lines.push(line);
    }
    Ok(outcome(pass, lines.join("\n      ")))
}

fn direction() -> Result<Outcome> {
    let lat = Lattice::hexagonal();
    let beta = abrikosov_beta(lat, &CellGrid::uniform(lat, 64))?;
    let kc = kappa_c(beta)?;
    let (lo, c_lo) = bifurcation_direction(lat, kc - 0.2)?;
    let (hi, c_hi) = bifurcation_direction(lat, kc + 0.2)?;
    Ok(outcome(
        lo == Direction::Subcritical && hi == Direction::Supercritical,
        format!("κ_c = {kc:.5}; c(κ_c−0.2) = {c_lo:.6} {lo:?}, c(κ_c+0.2) = {c_hi:.6} {hi:?}"),
    ))
}

fn lattice_comparison() -> Result<Outcome> {
    let mut b = Vec::new();
    for lat in [Lattice::hexagonal(), Lattice::square()] {
        b.push((abrikosov_beta(lat, &CellGrid::uniform(lat, 64))?, abrikosov_beta(lat, &CellGrid::gauss(lat, 24, 2))?));
    }
    let agree = b.iter().all(|(u, g)| (u - g).abs() < 1e-6);
    Ok(outcome(
        agree && b[0].0 < b[1].0,
        format!(
            "β hex {:.12} / {:.12}, β square {:.12} / {:.12} (trapezoid / Gauss), agree {}",
            b[0].0, b[0].1, b[1].0, b[1].1, ok(agree)
        ),
    ))
}

fn gauge_equivariance() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let shape = LatticeShape::new(Lattice::hexagonal().tau(), 1, 2, 0)?;
    let p = ReducedProblem::new(&ProblemConfig::new(shape, 1.0))?;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let lambda = 1.0 + rng.gen_range(-0.05..0.05);
        let s = rng.gen_range(1e-3..0.1);
        let delta = rng.gen_range(0.0..2.0 * PI);
        let e = C64::from_polar(1.0, delta);
        let (g, _) = p.gamma(lambda, C64::new(s, 0.0), None)?;
        let (gr, _) = p.gamma(lambda, e * s, None)?;
        worst = worst.max((gr - e * g).norm() / (1.0 + g.norm()));
    }
    Ok(outcome(worst < 1e-10, format!("max |γ(λ,e^{{iδ}}s) − e^{{iδ}}γ(λ,s)| = {worst:.2e} (< 1e-10), seed {SEED:#x}")))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

type Check = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    let checks: [(&str, Check, Option<u64>); 11] = [
        ("Landau spectrum", landau_spectrum, Some(30)),
        ("theta zero count", random_zero_counts, Some(60)),
        ("zero location", generator_zero, None),
        ("singular family", singular_family, None),
        ("classification table", classification, Some(120)),
        ("irreducibility", irreducibility, None),
        ("w scaling", w_scaling, None),
        ("branch certification", branches, None),
        ("bifurcation direction", direction, None),
        ("lattice comparison", lattice_comparison, None),
        ("gauge equivariance", gauge_equivariance, None),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_budget = budget.is_none_or(|b| secs < b as f64);
        let pass = pass && in_budget;
        if !pass {
            failures += 1;
        }
        let budget = budget.map(|b| format!(" (budget {b}s)")).unwrap_or_default();
        println!("criterion {:>2} {} {name}: {detail} [{secs:.1}s{budget}]", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    println!("{} of 11 criteria pass", 11 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
