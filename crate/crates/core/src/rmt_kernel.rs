//! The limiting spectral law of a generalised spiked sample covariance.
//!
//! Everything here is expressed through the companion Stieltjes transform
//! m̲(z), the solution of
//!
//! ```text
//! z = −1/m̲ + c Σ_i w_i t_i / (1 + t_i m̲)
//! ```
//!
//! where `(t_i, w_i)` are the atoms of the bulk population law H and `c` is
//! the dimension ratio. The inverse map z(m) drives the support search, the
//! spike location map ψ(α) is z(−1/(σ²α)), and the bias term μ_x is a contour
//! integral of rational functions of m̲.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FactorError, Result};
use crate::spectrum::{FourthMomentSpec, NoiseSpectrum, SpectrumSpec, WEIGHT_TOLERANCE};

/// Iteration cap of the damped fixed-point solver.
pub const FIXED_POINT_CAP: usize = 500;
const DAMPING: f64 = 0.5;
const NEWTON_STEPS: usize = 60;

/// Limiting law F^{c,H} with H discrete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralLaw {
    c: f64,
    /// `(t_i, w_i)`, sorted by decreasing `t_i`.
    atoms: Vec<(f64, f64)>,
    moments: FourthMomentSpec,
}

impl SpectralLaw {
    pub fn new(c: f64, mut atoms: Vec<(f64, f64)>, moments: FourthMomentSpec) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(FactorError::Input(format!(
                "ratio c must be positive, got {c}"
            )));
        }
        if atoms.is_empty() {
            return Err(FactorError::Input("law has no atoms".into()));
        }
        if atoms
            .iter()
            .any(|&(t, w)| !(t.is_finite() && t > 0.0 && w > 0.0 && w <= 1.0))
        {
            return Err(FactorError::Input(
                "atoms must be positive with weights in (0, 1]".into(),
            ));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(FactorError::Input(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        atoms.sort_by(|a, b| b.0.total_cmp(&a.0));
        if atoms.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(FactorError::Input("atoms must be distinct".into()));
        }
        Ok(Self { c, atoms, moments })
    }

    /// Law with atoms σ²·r_i and weights ω_i.
    pub fn from_noise(
        c: f64,
        sigma2: f64,
        bulk: &NoiseSpectrum,
        moments: FourthMomentSpec,
    ) -> Result<Self> {
        Self::new(
            c,
            bulk.atoms()
                .iter()
                .map(|a| (sigma2 * a.r, a.omega))
                .collect(),
            moments,
        )
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn moments(&self) -> FourthMomentSpec {
        self.moments
    }

    /// ∫ t dH(t).
    pub fn mean_atom(&self) -> f64 {
        self.atoms.iter().map(|(t, w)| t * w).sum()
    }

    /// Same law with every atom multiplied by `s`.
    pub fn rescaled(&self, s: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|&(t, w)| (t * s, w)).collect(),
            ..self.clone()
        }
    }

    /// z(m) = −1/m + c Σ w t/(1 + t m).
    pub fn z_of_m(&self, m: Complex64) -> Complex64 {
        let s: Complex64 = self.atoms.iter().map(|&(t, w)| w * t / (1.0 + t * m)).sum();
        -1.0 / m + self.c * s
    }

    /// dz/dm = 1/m² − c Σ w t²/(1 + t m)².
    pub fn dz_dm(&self, m: Complex64) -> Complex64 {
        let s: Complex64 = self
            .atoms
            .iter()
            .map(|&(t, w)| {
                let d = 1.0 + t * m;
                w * t * t / (d * d)
            })
            .sum();
        1.0 / (m * m) - self.c * s
    }

    fn z_real(&self, m: f64) -> f64 {
        -1.0 / m
            + self.c
                * self
                    .atoms
                    .iter()
                    .map(|&(t, w)| w * t / (1.0 + t * m))
                    .sum::<f64>()
    }

    fn dz_real(&self, m: f64) -> f64 {
        1.0 / (m * m)
            - self.c
                * self
                    .atoms
                    .iter()
                    .map(|&(t, w)| {
                        let d = 1.0 + t * m;
                        w * t * t / (d * d)
                    })
                    .sum::<f64>()
    }
}

/// Companion Stieltjes transform m̲(z) of the law.
///
/// Damped fixed-point iteration from m = −1/z followed by Newton polishing.
/// Returns the root with Im m·Im z ≥ 0; for real z outside the support, the
/// real root on the increasing branch of z(m).
pub fn stieltjes_companion(z: Complex64, law: &SpectralLaw) -> Result<Complex64> {
    solve_companion(z, law, -1.0 / z)
}

fn solve_companion(z: Complex64, law: &SpectralLaw, start: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) || z == Complex64::new(0.0, 0.0) {
        return Err(FactorError::Input(format!(
            "cannot evaluate m(z) at z = {z}"
        )));
    }
    let tol = 1e-12 * z.norm().max(1.0);
    let mut m = start;
    for _ in 0..FIXED_POINT_CAP {
        let s: Complex64 = law.atoms.iter().map(|&(t, w)| w * t / (1.0 + t * m)).sum();
        let g = -1.0 / (z - law.c * s);
        let next = (1.0 - DAMPING) * m + DAMPING * g;
        let step = (next - m).norm();
        m = next;
        if !m.re.is_finite() || !m.im.is_finite() {
            return Err(FactorError::numerical(
                "fixed-point iteration diverged",
                f64::INFINITY,
            ));
        }
        if step <= 1e-15 * m.norm() {
            break;
        }
    }

    let mut residual = (law.z_of_m(m) - z).norm();
    for _ in 0..NEWTON_STEPS {
        if residual <= 0.01 * tol {
            break;
        }
        let step = (law.z_of_m(m) - z) / law.dz_dm(m);
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-6 {
            let candidate = m - lambda * step;
            let r = (law.z_of_m(candidate) - z).norm();
            if r < residual && on_branch(z, candidate) {
                m = candidate;
                residual = r;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }

    if z.im == 0.0 {
        m.im = 0.0;
    }
    if residual > tol {
        return Err(FactorError::numerical(
            format!("companion transform did not converge at z = {z}"),
            residual,
        ));
    }
    let branch_ok = if z.im == 0.0 {
        law.dz_dm(m).re > 0.0
    } else {
        on_branch(z, m)
    };
    if !branch_ok {
        return Err(FactorError::numerical(
            format!("companion transform landed on a spurious branch at z = {z}"),
            residual,
        ));
    }
    Ok(m)
}

fn on_branch(z: Complex64, m: Complex64) -> bool {
    if z.im > 0.0 {
        m.im > 0.0
    } else if z.im < 0.0 {
        m.im < 0.0
    } else {
        true
    }
}

/// One connected component of the support of F^{c,H}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    pub lower: f64,
    pub upper: f64,
}

/// Support of F^{c,H}, as disjoint intervals sorted ascending.
///
/// The edges are the values z(m*) at the real critical points of z(m),
/// searched on each interval of the real m-axis between the poles −1/t_i and 0.
pub fn find_support(law: &SpectralLaw) -> Result<Vec<SupportInterval>> {
    let mut poles: Vec<f64> = law.atoms.iter().map(|&(t, _)| -1.0 / t).collect();
    poles.sort_by(f64::total_cmp);
    let scale = poles.iter().map(|p| p.abs()).fold(0.0, f64::max);

    let mut roots = Vec::new();
    // (−∞, first pole)
    let first = poles[0];
    let grid: Vec<f64> = geometric(1e-13, 1e13, 400)
        .into_iter()
        .rev()
        .map(|u| first - u * first.abs())
        .collect();
    collect_roots(law, &grid, &mut roots);
    // between consecutive poles, and from the last pole to 0
    let mut bounds = poles.clone();
    bounds.push(0.0);
    for pair in bounds.windows(2) {
        let grid = two_sided_grid(pair[0], pair[1]);
        collect_roots(law, &grid, &mut roots);
    }
    // (0, ∞)
    let grid: Vec<f64> = geometric(1e-13, 1e13, 400)
        .into_iter()
        .map(|u| u * scale)
        .collect();
    collect_roots(law, &grid, &mut roots);

    let mut edges: Vec<f64> = roots.iter().map(|&m| law.z_real(m)).collect();
    edges.sort_by(f64::total_cmp);
    if edges.len() % 2 == 1 {
        // c = 1 exactly: the lower edge sits at zero without a critical point
        edges.insert(0, 0.0);
    }
    if edges.is_empty() {
        return Err(FactorError::numerical("no support edges found", f64::NAN));
    }
    let intervals: Vec<SupportInterval> = edges
        .chunks(2)
        .map(|p| SupportInterval {
            lower: p[0].max(0.0),
            upper: p[1],
        })
        .collect();
    if intervals.iter().any(|i| !(i.upper > i.lower)) {
        return Err(FactorError::numerical(
            "degenerate support interval",
            f64::NAN,
        ));
    }
    Ok(intervals)
}

fn geometric(from: f64, to: f64, count: usize) -> Vec<f64> {
    let (a, b) = (from.ln(), to.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn two_sided_grid(a: f64, b: f64) -> Vec<f64> {
    let len = b - a;
    let mut s: Vec<f64> = geometric(1e-14, 0.5, 200);
    s.extend((1..400).map(|i| i as f64 / 400.0));
    s.extend(geometric(1e-14, 0.5, 200).into_iter().map(|x| 1.0 - x));
    s.retain(|&x| x > 0.0 && x < 1.0);
    s.sort_by(f64::total_cmp);
    s.dedup();
    s.into_iter()
        .map(|x| a + len * x)
        .filter(|&m| m > a && m < b)
        .collect()
}

fn collect_roots(law: &SpectralLaw, grid: &[f64], roots: &mut Vec<f64>) {
    for pair in grid.windows(2) {
        let (mut lo, mut hi) = (pair[0], pair[1]);
        let (flo, fhi) = (law.dz_real(lo), law.dz_real(hi));
        if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
            continue;
        }
        let lo_sign = flo.signum();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if law.dz_real(mid).signum() == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
}

/// Smallest α (in σ² units) whose spike separates from the bulk: the root of
/// c Σ w r²/(α − r)² = 1 above the largest atom.
pub fn detection_threshold(law: &SpectralLaw, sigma2: f64) -> f64 {
    let h = |alpha: f64| {
        law.c
            * law
                .atoms
                .iter()
                .map(|&(t, w)| {
                    let r = t / sigma2;
                    w * r * r / ((alpha - r) * (alpha - r))
                })
                .sum::<f64>()
    };
    let max_r = law.atoms[0].0 / sigma2;
    let second: f64 = law
        .atoms
        .iter()
        .map(|&(t, w)| w * (t / sigma2).powi(2))
        .sum();
    let mut lo = max_r;
    let mut hi = max_r + (law.c * second).sqrt() * 1.01 + f64::EPSILON * max_r;
    while h(hi) > 1.0 {
        hi = max_r + 2.0 * (hi - max_r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn psi(alpha: f64, law: &SpectralLaw, sigma2: f64) -> f64 {
    let ts = sigma2 * alpha;
    ts + law.c
        * law
            .atoms
            .iter()
            .map(|&(t, w)| w * t * ts / (ts - t))
            .sum::<f64>()
}

/// Almost-sure limit of the sample eigenvalue generated by the population
/// spike σ²α.
pub fn spike_forward(alpha: f64, law: &SpectralLaw, sigma2: f64) -> Result<f64> {
    let threshold = detection_threshold(law, sigma2);
    if !(alpha > threshold) {
        return Err(FactorError::SubCritical { alpha, threshold });
    }
    Ok(psi(alpha, law, sigma2))
}

/// Population spike α whose forward image is `lambda_obs`.
pub fn spike_inverse(lambda_obs: f64, law: &SpectralLaw, sigma2: f64) -> Result<f64> {
    let threshold = detection_threshold(law, sigma2);
    let edge = psi(threshold, law, sigma2);
    if !(lambda_obs > edge) {
        return Err(FactorError::NotASpike {
            value: lambda_obs,
            edge,
        });
    }
    let mut lo = threshold;
    let mut hi = (2.0 * lambda_obs / sigma2).max(threshold * 2.0);
    while psi(hi, law, sigma2) < lambda_obs {
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi(mid, law, sigma2) < lambda_obs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// b = Σ_k Σ_i n_k c α_k σ² r_i ω_i / (α_k − r_i), with `c` taken from `law`.
pub fn bias_b(spec: &SpectrumSpec, law: &SpectralLaw) -> Result<f64> {
    let mut total = 0.0;
    for spike in spec.spikes() {
        for atom in spec.bulk().atoms() {
            if spike.alpha == atom.r {
                return Err(FactorError::Singularity {
                    alpha: spike.alpha,
                    atom: atom.r,
                });
            }
            total += spike.multiplicity as f64
                * law.c
                * spike.alpha
                * spec.sigma2()
                * atom.r
                * atom.omega
                / (spike.alpha - atom.r);
        }
    }
    Ok(total)
}

/// Closed rectangular integration path, positively oriented.
#[derive(Debug, Clone)]
pub struct Contour {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

impl Contour {
    /// Trapezoid rule on the rectangle [left, right] × [−half_height, half_height]
    /// with `panels` panels per side.
    pub fn rectangle(left: f64, right: f64, half_height: f64, panels: usize) -> Self {
        let corners = rectangle_corners(left, right, half_height);
        let mut nodes = Vec::with_capacity(4 * panels);
        let mut weights = Vec::with_capacity(4 * panels);
        for side in 0..4 {
            let (a, b) = (corners[side], corners[(side + 1) % 4]);
            let h = (b - a) / panels as f64;
            for j in 0..panels {
                nodes.push(a + h * j as f64);
                // a corner collects half a panel from each adjacent side
                let w = if j == 0 {
                    let prev = (a - corners[(side + 3) % 4]) / panels as f64;
                    0.5 * (h + prev)
                } else {
                    h
                };
                weights.push(w);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }
}

fn rectangle_corners(left: f64, right: f64, v: f64) -> [Complex64; 4] {
    [
        Complex64::new(left, -v),
        Complex64::new(right, -v),
        Complex64::new(right, v),
        Complex64::new(left, v),
    ]
}

/// Controls for [`mu_x_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuXOptions {
    /// Multiplier on the default horizontal margin 0.1·(upper − lower).
    pub margin_scale: f64,
    /// Absolute agreement required between successive refinements.
    pub tolerance: f64,
    /// Upper bound on the number of contour nodes.
    pub max_nodes: usize,
    /// Evaluate on the law rescaled to unit mean atom, then scale back.
    pub normalize: bool,
}

impl Default for MuXOptions {
    fn default() -> Self {
        Self {
            margin_scale: 1.0,
            tolerance: 1e-8,
            max_nodes: 1 << 14,
            normalize: true,
        }
    }
}

/// The two contour terms of μ_x and the quadrature effort behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuX {
    pub value: f64,
    pub term_q: f64,
    pub term_beta: f64,
    pub nodes: usize,
    pub imaginary: f64,
}

/// μ_x of the law with default options.
pub fn mu_x(law: &SpectralLaw) -> Result<f64> {
    mu_x_with(law, &MuXOptions::default()).map(|r| r.value)
}

/// μ_x = term_q + term_β.
///
/// ```text
/// term_q = −(q/2πi) ∮ c m̲² [c m̲ A₁ − 1] A₂ / (1 − c A₃)² dz
/// term_β = −(βc/2πi) ∮ m̲² [−1 + c m̲ A₁] A₁ A₄ / (1 − c A₃) dz
/// A₁ = ∫ t/(1+tm̲) dH,  A₂ = ∫ t²/(1+tm̲)³ dH,
/// A₃ = ∫ m̲² t²/(1+tm̲)² dH,  A₄ = ∫ 1/(1+tm̲)² dH
/// ```
///
/// Under atom scaling t → s·t, term_q scales by s and term_β is invariant;
/// with `normalize` the rectangle is laid out for the unit-mean law.
pub fn mu_x_with(law: &SpectralLaw, options: &MuXOptions) -> Result<MuX> {
    let q = f64::from(law.moments.q);
    let beta = law.moments.beta;
    if q == 0.0 && beta == 0.0 {
        return Ok(MuX {
            value: 0.0,
            term_q: 0.0,
            term_beta: 0.0,
            nodes: 0,
            imaginary: 0.0,
        });
    }
    let scale = if options.normalize {
        law.mean_atom()
    } else {
        1.0
    };
    let unit = law.rescaled(1.0 / scale);

    let support = find_support(&unit)?;
    let lower = support.first().expect("non-empty").lower;
    let upper = support.last().expect("non-empty").upper;
    let delta = 0.1 * (upper - lower) * options.margin_scale;
    let half_height = delta.max(0.5);
    let corners = rectangle_corners(lower - delta, upper + delta, half_height);

    let c = unit.c;
    let integrand = |m: Complex64| -> [Complex64; 2] {
        let mut a1 = Complex64::new(0.0, 0.0);
        let mut a2 = a1;
        let mut a3 = a1;
        let mut a4 = a1;
        for &(t, w) in &unit.atoms {
            let d = 1.0 + t * m;
            let inv = 1.0 / d;
            let inv2 = inv * inv;
            a1 += w * t * inv;
            a2 += w * t * t * inv2 * inv;
            a3 += w * m * m * t * t * inv2;
            a4 += w * inv2;
        }
        let den = 1.0 - c * a3;
        let m2 = m * m;
        let fq = if q != 0.0 {
            c * m2 * (c * m * a1 - 1.0) * a2 / (den * den)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let fb = if beta != 0.0 {
            m2 * (-1.0 + c * m * a1) * a1 * a4 / den
        } else {
            Complex64::new(0.0, 0.0)
        };
        [fq, fb]
    };
    let evaluate =
        |z: Complex64| -> Result<[Complex64; 2]> { stieltjes_companion(z, &unit).map(integrand) };

    let (integrals, nodes) = romberg_rectangle(&corners, evaluate, options)?;
    // −1/(2πi) = i/(2π)
    let factor = Complex64::new(0.0, 1.0 / (2.0 * std::f64::consts::PI));
    let term_q = factor * q * integrals[0];
    let term_b = factor * beta * c * integrals[1];
    let total = term_q + term_b;
    let scaled_q = term_q.re * scale;
    let value = scaled_q + term_b.re;
    let imaginary = term_q.im * scale + term_b.im;
    if imaginary.abs() > 1e-6 * value.abs().max(1.0) {
        return Err(FactorError::Contour(total.im));
    }
    Ok(MuX {
        value,
        term_q: scaled_q,
        term_beta: term_b.re,
        nodes,
        imaginary,
    })
}

/// Trapezoid sums on the rectangle with panel doubling, accelerated by
/// Richardson extrapolation in h².
fn romberg_rectangle<F>(
    corners: &[Complex64; 4],
    evaluate: F,
    options: &MuXOptions,
) -> Result<([Complex64; 2], usize)>
where
    F: Fn(Complex64) -> Result<[Complex64; 2]> + Sync,
{
    let zero = Complex64::new(0.0, 0.0);
    let corner_values: Vec<[Complex64; 2]> = corners
        .iter()
        .map(|&z| evaluate(z))
        .collect::<Result<_>>()?;
    // Σ of interior node values on each side
    let mut interior = [[zero; 2]; 4];
    let mut panels = 1usize;
    let mut table: Vec<Vec<[Complex64; 2]>> = Vec::new();
    loop {
        let total_nodes = 4 * panels;
        let new_points: Vec<(usize, Complex64)> = if panels == 1 {
            Vec::new()
        } else {
            (0..4)
                .flat_map(|side| {
                    let (a, b) = (corners[side], corners[(side + 1) % 4]);
                    (1..panels)
                        .step_by(2)
                        .map(move |j| (side, a + (b - a) * (j as f64 / panels as f64)))
                })
                .collect()
        };
        let values: Vec<[Complex64; 2]> = new_points
            .par_iter()
            .map(|&(_, z)| evaluate(z))
            .collect::<Result<_>>()?;
        for (&(side, _), v) in new_points.iter().zip(&values) {
            interior[side][0] += v[0];
            interior[side][1] += v[1];
        }
        let mut trap = [zero; 2];
        for side in 0..4 {
            let h = (corners[(side + 1) % 4] - corners[side]) / panels as f64;
            let (fa, fb) = (corner_values[side], corner_values[(side + 1) % 4]);
            for k in 0..2 {
                trap[k] += h * (interior[side][k] + 0.5 * (fa[k] + fb[k]));
            }
        }

        let mut row = vec![trap];
        if let Some(prev) = table.last() {
            let mut factor = 4.0;
            for j in 0..prev.len() {
                let cur = row[j];
                let old = prev[j];
                row.push([
                    cur[0] + (cur[0] - old[0]) / (factor - 1.0),
                    cur[1] + (cur[1] - old[1]) / (factor - 1.0),
                ]);
                factor *= 4.0;
            }
        }
        let best = *row.last().expect("row is non-empty");
        if let Some(prev) = table.last() {
            let prev_best = *prev.last().expect("row is non-empty");
            let diff = (best[0] - prev_best[0])
                .norm()
                .max((best[1] - prev_best[1]).norm());
            let size = best[0].norm().max(best[1].norm()).max(1.0);
            if panels >= 8 && diff <= options.tolerance * size {
                return Ok((best, total_nodes));
            }
            if 8 * panels > options.max_nodes {
                return Err(FactorError::numerical(
                    "contour quadrature did not converge",
                    diff,
                ));
            }
        }
        table.push(row);
        panels *= 2;
    }
}
