//! The six subcommands. Each writes its artifacts and returns what the
//! manifest needs.

use std::f64::consts::PI;

use serde::Serialize;
use serde_json::{json, Value};
use vortex_core::bifurcation::{
    abrikosov_beta, fit_branch, geometric_grid, perturbative_coefficient, trace_branch, BranchSample, ProblemConfig, ReducedProblem,
    SpectralState,
};
use vortex_core::landau::{assembled_spectrum, fd_reference_spectrum, LandauBasis};
use vortex_core::lattice::{kappa_c, Lattice, LatticeShape};
use vortex_core::quadrature::CellGrid;
use vortex_core::symmetry::{classification_table, one_dimensional, table_entry, ClassificationRow, ONE_DIMENSIONAL_PAIRS};
use vortex_core::theta::ThetaSpace;
use vortex_core::C64;

use crate::config::RunConfig;
use crate::report::{Comparison, Output};
use crate::Failure;

// Fixed certification bounds for branch samples.
pub const PROJECTION_TOL: f64 = 1e-12;
pub const FLUX_TOL: f64 = 1e-8;
pub const DIV_J_TOL: f64 = 1e-7;
pub const MEAN_J_TOL: f64 = 1e-9;
pub const ROTATION_TOL: f64 = 1e-8;
pub const SECTOR_TOL: f64 = 1e-10;
pub const PERTURBATIVE_TOL: f64 = 1e-4;

#[derive(Default)]
pub struct Outcome {
    pub reference: Vec<Comparison>,
    pub checks: Vec<Comparison>,
    pub summary: Value,
}

fn lattice(cfg: &RunConfig) -> Result<Lattice, Failure> {
    Ok(Lattice::new(cfg.tau())?)
}

fn problem(cfg: &RunConfig) -> Result<ReducedProblem, Failure> {
    let shape = LatticeShape::new(cfg.tau(), cfg.n, cfg.k, cfg.r)?;
    Ok(ReducedProblem::new(&ProblemConfig::new(shape, cfg.kappa))?)
}

pub fn spectrum(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, Failure> {
    let lat = lattice(cfg)?;
    let n = cfg.n;
    let basis = LandauBasis::new(lat, n, cfg.levels)?;
    let galerkin = assembled_spectrum(&basis, &CellGrid::uniform(lat, 24 + 6 * n))?;
    let fd = fd_reference_spectrum(n, cfg.levels + 1, cfg.fd_side)?;
    let mut rows = Vec::new();
    let mut o = Outcome::default();
    for (m, (fd_value, fd_mult)) in fd.iter().enumerate() {
        let exact = ((2 * m + 1) * n) as f64;
        let block = &galerkin[m * n..(m + 1) * n];
        let mean = block.iter().sum::<f64>() / n as f64;
        let gal_err = block.iter().map(|v| (v / exact - 1.0).abs()).fold(0.0, f64::max);
        let fd_err = (fd_value / exact - 1.0).abs();
        rows.push(vec![m as f64, n as f64, exact, mean, gal_err, *fd_value, *fd_mult as f64, fd_err]);
        o.reference.push(Comparison::new(
            format!("level {m}: eigenvalue (2m+1)n with multiplicity n"),
            json!({ "eigenvalue": exact, "multiplicity": n }),
            json!({ "galerkin_max_rel_error": gal_err, "fd_eigenvalue": fd_value, "fd_rel_error": fd_err, "fd_multiplicity": fd_mult }),
            gal_err < cfg.spectrum_tol && fd_err < cfg.fd_tol && *fd_mult == n,
        ));
    }
    out.csv(
        "spectrum.csv",
        &[
            "m [Landau level index]",
            "multiplicity [expected, = n]",
            "exact [eigenvalue of -Laplacian_a, field b = n, cell area 2pi]",
            "galerkin_mean [same units]",
            "galerkin_max_rel_error [1]",
            "fd [same units]",
            "fd_multiplicity [count]",
            "fd_rel_error [1]",
        ],
        &rows,
    )?;
    o.summary = json!({ "n": n, "levels": cfg.levels, "fd_side": cfg.fd_side });
    Ok(o)
}

#[derive(Serialize)]
struct RowRecord {
    n: usize,
    r: usize,
    dim: usize,
    diagram_dim: usize,
    table_products: Vec<String>,
    spanning_rank: usize,
    origin_orders: Vec<u32>,
}

fn table_text(rows: &[ClassificationRow]) -> String {
    let head = ["Vortex Number", "r", "Theta functions that span V_{n,6,r}", "computed dim"];
    let mut body: Vec<[String; 4]> = Vec::new();
    let mut last_n = 0;
    for row in rows {
        let products: Vec<String> = table_entry(row.n, row.r).iter().map(|p| p.to_string()).collect();
        if products.is_empty() && row.dim == 0 {
            continue;
        }
        let label = if row.n != last_n { format!("n = {}", row.n) } else { String::new() };
        last_n = row.n;
        let listed = if products.is_empty() { "-".to_string() } else { products.join(", ") };
        body.push([label, row.r.to_string(), listed, row.dim.to_string()]);
    }
    let width = |i: usize| body.iter().map(|b| b[i].chars().count()).chain([head[i].chars().count()]).max().unwrap_or(0);
    let w = [width(0), width(1), width(2), width(3)];
    let line = |cells: [&str; 4]| {
        let padded: Vec<String> = cells.iter().zip(w).map(|(c, w)| format!("{c:<w$}")).collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let rule: String = format!("|{}|\n", w.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|"));
    let mut s = rule.clone();
    s += &line(head);
    s += &rule;
    let mut prev_blank = true;
    for b in &body {
        if !b[0].is_empty() && !prev_blank {
            s += &rule;
        }
        prev_blank = false;
        s += &line([&b[0], &b[1], &b[2], &b[3]]);
    }
    s += &rule;
    s
}

pub fn classify(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, Failure> {
    let rows = classification_table(cfg.n_max)?;
    let records: Vec<RowRecord> = rows
        .iter()
        .map(|r| RowRecord {
            n: r.n,
            r: r.r,
            dim: r.dim,
            diagram_dim: r.diagram_dim,
            table_products: r.spanning.iter().map(|p| p.to_string()).collect(),
            spanning_rank: r.spanning_rank,
            origin_orders: r.origin_orders.clone(),
        })
        .collect();
    out.json("classification.json", &records)?;
    out.text("classification.txt", &table_text(&rows))?;
    let mut o = Outcome::default();
    let expected: Vec<(usize, usize)> = ONE_DIMENSIONAL_PAIRS.iter().copied().filter(|p| p.0 <= cfg.n_max).collect();
    let computed = one_dimensional(&rows);
    o.reference.push(Comparison::new("one-dimensional (n, r) pairs", &expected, &computed, expected == computed));
    for row in &rows {
        let listed = table_entry(row.n, row.r).len();
        o.reference.push(Comparison::new(
            format!("dim V_(n={},k=6,r={}) against the number of listed products", row.n, row.r),
            listed,
            row.dim,
            listed == row.dim,
        ));
        o.checks.push(Comparison::new(
            format!("({},{}) orbit diagrams = eigenspace dimension", row.n, row.r),
            row.dim,
            row.diagram_dim,
            row.dim == row.diagram_dim,
        ));
        if listed > 0 {
            o.checks.push(Comparison::new(
                format!("({},{}) listed products span the eigenspace", row.n, row.r),
                row.dim,
                row.spanning_rank,
                row.spanning_rank == row.dim,
            ));
        }
        let orders_ok = row.origin_orders.iter().all(|&m| m as usize % 6 == row.r);
        o.checks.push(Comparison::new(
            format!("({},{}) origin zero orders are r mod 6", row.n, row.r),
            row.r,
            &row.origin_orders,
            orders_ok,
        ));
    }
    o.summary = json!({ "n_max": cfg.n_max, "rows": rows.len() });
    Ok(o)
}

pub fn zeros(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, Failure> {
    let tau = cfg.tau();
    let space = ThetaSpace::new(cfg.n, tau)?;
    let theta = space.basis_element(0);
    let divisor = theta.find_zeros()?;
    let records: Vec<Value> = divisor.entries.iter().map(|(z, m)| json!({ "re": z.re, "im": z.im, "mult": m })).collect();
    out.json(
        "divisor.json",
        &json!({
            "element": format!("theta_{{{},0}}", cfg.n),
            "n": cfg.n,
            "tau": { "re": tau.re, "im": tau.im },
            "coordinates": "theta coordinate z, lattice Z + tau Z",
            "degree": divisor.degree(),
            "zeros": records,
        }),
    )?;
    let side = cfg.field_side;
    let mut rows = Vec::with_capacity(side * side);
    for j in 0..side {
        for i in 0..side {
            let z = C64::new(i as f64 / side as f64, 0.0) + tau * (j as f64 / side as f64);
            let v = theta.eval(z);
            rows.push(vec![z.re, z.im, v.re, v.im, v.norm()]);
        }
    }
    out.csv(
        "theta_field.csv",
        &["x [Re z, theta coordinate]", "y [Im z]", "re_theta [coefficient of theta_{n,0} = 1]", "im_theta [same]", "abs_theta [same]"],
        &rows,
    )?;
    let mut o = Outcome::default();
    o.reference.push(Comparison::new("number of zeros with multiplicity equals n", cfg.n, divisor.degree(), divisor.degree() as usize == cfg.n));
    if cfg.n == 1 {
        let target = space.cell().reduce((tau + 1.0) * 0.5).0;
        let found = divisor.entries.first().map(|e| e.0);
        let dist = found.map(|z| (z - target).norm()).unwrap_or(f64::INFINITY);
        o.reference.push(Comparison::new(
            "simple zero at (1+tau)/2",
            json!({ "re": target.re, "im": target.im, "mult": 1 }),
            found.map(|z| json!({ "re": z.re, "im": z.im, "mult": divisor.entries[0].1, "distance": dist })),
            divisor.entries.len() == 1 && divisor.entries[0].1 == 1 && dist < cfg.location_tol,
        ));
    }
    o.summary = json!({ "zeros": divisor.entries.len(), "degree": divisor.degree() });
    Ok(o)
}

fn state_json(sample: &BranchSample) -> Value {
    state_value(sample.s, sample.lambda, &sample.state)
}

fn state_value(s: f64, lambda: f64, u: &SpectralState) -> Value {
    json!({
        "s": s,
        "lambda": lambda,
        "psi": u.psi.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
        "alpha": u.alpha,
    })
}

/// Certifies `samples` and records the worst value of each bound.
fn certify_all(p: &ReducedProblem, samples: &[BranchSample], cfg: &RunConfig, o: &mut Outcome) -> Vec<f64> {
    let n = p.n() as f64;
    let mut worst = [0.0f64; 7];
    let mut nontrivial = true;
    let mut residuals = Vec::with_capacity(samples.len());
    for b in samples {
        let c = p.certify(b);
        residuals.push(c.residual);
        let vals = [c.residual, c.projection, (c.flux - 2.0 * PI * n).abs(), c.div_j, c.mean_j, c.rotation, c.sector_leak];
        for (w, v) in worst.iter_mut().zip(vals) {
            *w = w.max(v);
        }
        nontrivial &= c.nontrivial;
    }
    let names = [
        ("full residual on the fine grid", cfg.residual_tol),
        ("projection onto the kernel equals s", PROJECTION_TOL),
        ("flux per cell minus 2 pi n", FLUX_TOL),
        ("weak divergence of J", DIV_J_TOL),
        ("cell average of J", MEAN_J_TOL),
        ("observables under rotation by 2 pi / k", ROTATION_TOL),
        ("residual outside the symmetry sector", SECTOR_TOL),
    ];
    for ((name, tol), w) in names.iter().zip(worst) {
        o.checks.push(Comparison::new(*name, json!({ "below": tol }), w, w < *tol));
    }
    o.checks.push(Comparison::new("nontrivial: |psi| >= s/2", true, nontrivial, nontrivial));
    residuals
}

pub fn branch(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, Failure> {
    let p = problem(cfg)?;
    let grid = geometric_grid(cfg.s_min, cfg.s_max, cfg.s_points);
    let samples = trace_branch(&p, &grid)?;
    let mut o = Outcome::default();
    let residuals = certify_all(&p, &samples, cfg, &mut o);
    let rows: Vec<Vec<f64>> =
        samples.iter().zip(&residuals).map(|(b, r)| vec![b.s, b.lambda, b.energy, *r, b.beta_s]).collect();
    out.csv(
        "branch.csv",
        &[
            "s [<psi0,psi>, <|psi0|^2> = 1]",
            "lambda [rescaled, onset at n]",
            "energy [per cell, rescaled]",
            "residual [Galerkin norm, fine grid]",
            "beta_s [<|psi|^4>/<|psi|^2>^2]",
        ],
        &rows,
    )?;
    for (i, b) in samples.iter().enumerate() {
        out.json(&format!("states/sample_{i:03}.json"), &state_json(b))?;
    }
    let monotone = samples.windows(2).all(|w| w[1].s > w[0].s);
    o.checks.push(Comparison::new("s strictly increasing", true, monotone, monotone));
    let fit = fit_branch(&samples, cfg.n);
    o.checks.push(Comparison::new("lambda - n = c s^2 fit relative error", json!({ "below": 1e-3 }), fit.pure_error, fit.pure_error < 1e-3));
    let mut summary = json!({
        "c": fit.c,
        "d": fit.d,
        "fit_relative_error": fit.pure_error,
        "odd_coefficient": fit.odd_coefficient,
        "samples": samples.len(),
    });
    if cfg.n == 1 {
        let lat = lattice(cfg)?;
        let beta = abrikosov_beta(lat, &CellGrid::uniform(lat, cfg.grid_side))?;
        let kc = kappa_c(beta)?;
        let predicted = perturbative_coefficient(beta, cfg.kappa);
        o.checks.push(Comparison::new(
            "c against (kappa^2 - 1/2) beta + 1/2",
            predicted,
            fit.c,
            (fit.c - predicted).abs() < PERTURBATIVE_TOL,
        ));
        let expected = if cfg.kappa > kc { "supercritical (c > 0)" } else { "subcritical (c < 0)" };
        let computed = if fit.c > 0.0 { "supercritical (c > 0)" } else { "subcritical (c < 0)" };
        o.reference.push(Comparison::new(
            "bifurcation direction from the sign of kappa - kappa_c",
            json!({ "kappa": cfg.kappa, "kappa_c": kc, "direction": expected }),
            json!({ "c": fit.c, "direction": computed }),
            expected == computed,
        ));
        summary["beta"] = json!(beta);
        summary["kappa_c"] = json!(kc);
    }
    o.summary = summary;
    Ok(o)
}

pub fn beta(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, Failure> {
    let pair = |lat: Lattice| -> Result<(f64, f64), Failure> {
        Ok((
            abrikosov_beta(lat, &CellGrid::uniform(lat, cfg.grid_side))?,
            abrikosov_beta(lat, &CellGrid::gauss(lat, cfg.gauss_order, cfg.gauss_panels))?,
        ))
    };
    let lat = lattice(cfg)?;
    let (hex, sq) = (Lattice::hexagonal(), Lattice::square());
    let (bt, bg) = pair(lat)?;
    let (ht, hg) = pair(hex)?;
    let (st, sg) = pair(sq)?;
    let entry = |l: Lattice, t: f64, g: f64| {
        json!({
            "tau": { "re": l.tau().re, "im": l.tau().im },
            "beta_trapezoid": t,
            "beta_gauss": g,
            "kappa_c": kappa_c(t).ok(),
        })
    };
    out.json(
        "beta.json",
        &json!({
            "definition": "<|psi0|^4> / <|psi0|^2>^2 over one cell, lowest Landau level, n = 1",
            "lattice": entry(lat, bt, bg),
            "hexagonal": entry(hex, ht, hg),
            "square": entry(sq, st, sg),
        }),
    )?;
    let mut o = Outcome::default();
    for (name, t, g) in [("configured", bt, bg), ("hexagonal", ht, hg), ("square", st, sg)] {
        o.checks.push(Comparison::new(
            format!("{name}: trapezoid and Gauss quadratures agree"),
            json!({ "below": cfg.quadrature_tol }),
            (t - g).abs(),
            (t - g).abs() < cfg.quadrature_tol,
        ));
    }
    o.reference.push(Comparison::new("beta(hexagonal) < beta(square)", json!({ "square": st }), json!({ "hexagonal": ht }), ht < st));
    o.reference.push(Comparison::new(
        "the hexagonal lattice minimizes beta",
        json!({ "at_least": ht }),
        bt,
        bt >= ht - cfg.quadrature_tol,
    ));
    o.summary = json!({ "beta": bt, "kappa_c": kappa_c(bt).ok() });
    Ok(o)
}

pub fn field_export(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, Failure> {
    let p = problem(cfg)?;
    let samples = trace_branch(&p, &[cfg.s])?;
    let mut o = Outcome::default();
    certify_all(&p, &samples, cfg, &mut o);
    let b = &samples[0];
    let f = p.observables_on_grid(&b.state, cfg.field_side);
    let rows: Vec<Vec<f64>> =
        (0..f.points.len()).map(|i| vec![f.points[i].re, f.points[i].im, f.ns[i], f.b[i], f.j[i].0, f.j[i].1]).collect();
    out.csv(
        "field.csv",
        &[
            "x [length, cell area 2 pi]",
            "y [length]",
            "ns [|psi|^2]",
            "B [curl A, cell mean n]",
            "Jx [Im(conj(psi) D psi)]",
            "Jy [same]",
        ],
        &rows,
    )?;
    out.json("state.json", &state_json(b))?;
    o.summary = json!({ "s": b.s, "lambda": b.lambda, "energy": b.energy, "normal_energy": b.normal_energy });
    Ok(o)
}
