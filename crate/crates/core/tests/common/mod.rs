//! Fixtures and independent oracles shared by the integration tests.
//!
//! Nothing here calls into the special-function or factorization code under
//! test: tails come from direct quadrature and solves from plain Gaussian
//! elimination.
#![allow(dead_code)]

use std::path::PathBuf;

use nfactor_core::data::{load_csv, Dataset, SurvivalFrame};

pub const STAN_COVARIATES: [&str; 4] = ["age", "posttran", "surgery", "year"];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn stan_dataset() -> Dataset {
    load_csv(
        fixture("stan30.csv"),
        &["id", "year", "age", "died", "surgery", "posttran", "t1"],
    )
    .expect("reference fixture loads")
}

pub fn stan_frame() -> SurvivalFrame {
    SurvivalFrame::reconstruct(&stan_dataset(), "t1", "died", "id", &STAN_COVARIATES)
        .expect("reference fixture reconstructs")
}

/// Reference frame restricted to the three identifiable covariates.
pub fn stan_frame_kept() -> SurvivalFrame {
    stan_frame().select_covariates(&[0, 1, 3])
}

pub fn linear_dataset() -> Dataset {
    load_csv(fixture("linear30.csv"), &["y"]).expect("linear fixture loads")
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

// ── quadrature ──────────────────────────────────────────────────────────────

const GL_ORDER: usize = 20;
const GL_PANELS: usize = 400;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre quadrature over equal panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let rule = gauss_legendre(GL_ORDER);
    let h = (b - a) / GL_PANELS as f64;
    let mut total = 0.0;
    for i in 0..GL_PANELS {
        let mid = a + (i as f64 + 0.5) * h;
        let panel: f64 = rule.iter().map(|&(x, w)| w * f(mid + 0.5 * h * x)).sum();
        total += 0.5 * h * panel;
    }
    total
}

/// Chi-square upper tail by quadrature of the unnormalized density.
///
/// With t = u² the integrand u^(k−1)·exp(−u²/2) is smooth on [0, ∞) for every
/// k ≥ 1; the ratio of tail to total mass needs no gamma function.
pub fn chi2_sf_quadrature(x: f64, k: u32) -> f64 {
    let g = |u: f64| u.powi(k as i32 - 1) * (-0.5 * u * u).exp();
    let upper = (k as f64).sqrt() + 40.0;
    let start = x.sqrt();
    let total = integrate(g, 0.0, upper);
    if start >= upper {
        return 0.0;
    }
    integrate(g, start, upper) / total
}

/// Two-sided Student-t tail by quadrature in angle form.
///
/// With s = √ν·tan θ the density becomes cos^(ν−1) θ on [0, π/2). Writing
/// θ = π/2 − φ² removes the endpoint singularity, leaving
/// 2φ·sin(φ²)^(ν−1) on [0, √(π/2)], with the tail on [0, φ0].
pub fn student_t_two_sided_quadrature(t: f64, nu: f64) -> f64 {
    let g = |phi: f64| 2.0 * phi * (phi * phi).sin().powf(nu - 1.0);
    let end = std::f64::consts::FRAC_PI_2.sqrt();
    let theta0 = (t.abs() / nu.sqrt()).atan();
    let phi0 = (std::f64::consts::FRAC_PI_2 - theta0).max(0.0).sqrt();
    integrate(g, 0.0, phi0) / integrate(g, 0.0, end)
}

/// Two-sided normal tail by quadrature of exp(−u²/2).
pub fn normal_two_sided_quadrature(z: f64) -> f64 {
    let g = |u: f64| (-0.5 * u * u).exp();
    let half_mass = (2.0 * std::f64::consts::PI).sqrt() / 2.0;
    integrate(g, z.abs(), z.abs() + 40.0) / half_mass
}

// ── elimination ─────────────────────────────────────────────────────────────

/// Solves a dense system by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// Numerical rank of a column set by row-echelon reduction.
pub fn elimination_rank(columns: &[Vec<f64>]) -> usize {
    if columns.is_empty() {
        return 0;
    }
    let rows = columns[0].len();
    let cols = columns.len();
    let mut m: Vec<Vec<f64>> = (0..rows)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale;
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let piv = (rank..rows)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col].abs() <= tol {
            continue;
        }
        m.swap(rank, piv);
        for row in (rank + 1)..rows {
            let f = m[row][col] / m[rank][col];
            for k in col..cols {
                m[row][k] -= f * m[rank][k];
            }
        }
        rank += 1;
    }
    rank
}

// ── finite differences ──────────────────────────────────────────────────────

/// Central-difference gradient of `f` at `x`.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[i] += h;
            dn[i] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Jacobian of a vector function, row i = d g / d x_i.
pub fn fd_jacobian<G: Fn(&[f64]) -> Vec<f64>>(g: G, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[i] += h;
            dn[i] -= h;
            let gu = g(&up);
            let gd = g(&dn);
            gu.iter()
                .zip(&gd)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect()
        })
        .collect()
}

/// Largest componentwise difference relative to the max-norm of `reference`.
pub fn normwise_rel_err(got: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = got
        .iter()
        .zip(reference)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

// ── search ──────────────────────────────────────────────────────────────────

/// Smallest weight in 1..=max_weight with p ≤ target, by exhaustive scan.
pub fn linear_scan_bracket<F: Fn(u64) -> f64>(p: F, target: f64, max_weight: u64) -> Option<u64> {
    (1..=max_weight).find(|&w| p(w) <= target)
}
