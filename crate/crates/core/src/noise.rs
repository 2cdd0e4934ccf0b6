//! Noise-variance estimators for the spiked covariance model.
//!
//! All estimators read the sorted sample eigenvalues l₁ ≥ … ≥ l_N and an
//! assumed number `m` of spikes, except the median estimator which works on
//! the raw panel.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{FactorError, Result};
use crate::rmt_kernel::{
    bias_b, detection_threshold, mu_x_with, spike_inverse, MuXOptions, SpectralLaw,
};
use crate::spectrum::{
    EigenSpectrum, FourthMomentSpec, NoiseSpectrum, PanelData, SpectrumSpec, Spike,
};

/// Relative gap below which neighbouring sample eigenvalues count as one spike.
pub const TIE_TOLERANCE: f64 = 1e-9;
const KN_TOLERANCE: f64 = 1e-10;
const KN_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NoiseMethod {
    Mle,
    Star,
    Passemier,
    KrautNadler,
    UlfarssonSolo,
    Median,
}

impl NoiseMethod {
    pub const ALL: [NoiseMethod; 6] = [
        NoiseMethod::Mle,
        NoiseMethod::Star,
        NoiseMethod::Passemier,
        NoiseMethod::KrautNadler,
        NoiseMethod::UlfarssonSolo,
        NoiseMethod::Median,
    ];

    pub fn label(self) -> &'static str {
        match self {
            NoiseMethod::Mle => "MLE",
            NoiseMethod::Star => "STAR",
            NoiseMethod::Passemier => "P",
            NoiseMethod::KrautNadler => "KN",
            NoiseMethod::UlfarssonSolo => "US",
            NoiseMethod::Median => "MEDIAN",
        }
    }
}

impl std::fmt::Display for NoiseMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A noise-variance estimate with solver metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub value: f64,
    pub method: NoiseMethod,
    pub m_used: usize,
    pub diagnostics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl NoiseEstimate {
    fn new(value: f64, method: NoiseMethod, m_used: usize) -> Self {
        Self {
            value,
            method,
            m_used,
            diagnostics: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}

fn check_m(spectrum: &EigenSpectrum, m: usize) -> Result<()> {
    if m >= spectrum.n() {
        return Err(FactorError::Dimension(format!(
            "m = {m} must be below N = {}",
            spectrum.n()
        )));
    }
    Ok(())
}

fn positive(value: f64, method: NoiseMethod) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(FactorError::numerical(
            format!("{method} estimate is not positive"),
            value,
        ))
    }
}

/// σ̂²_MLE = Σ_{j>m} l_j / ((N − m) Σ ω_i r_i).
pub fn sigma2_mle(
    spectrum: &EigenSpectrum,
    m: usize,
    nonspikes: &NoiseSpectrum,
) -> Result<NoiseEstimate> {
    check_m(spectrum, m)?;
    let value = spectrum.tail_sum(m) / ((spectrum.n() - m) as f64 * nonspikes.mean());
    Ok(NoiseEstimate::new(
        positive(value, NoiseMethod::Mle)?,
        NoiseMethod::Mle,
        m,
    ))
}

/// Groups the top `m` eigenvalues into (representative value, multiplicity).
fn spike_groups(values: &[f64], m: usize) -> Vec<(f64, usize)> {
    let mut groups: Vec<(f64, usize)> = Vec::new();
    let mut last = f64::NAN;
    for &l in &values[..m] {
        match groups.last_mut() {
            Some((sum, count)) if (last - l).abs() <= TIE_TOLERANCE * last.abs() => {
                *sum += l;
                *count += 1;
            }
            _ => groups.push((l, 1)),
        }
        last = l;
    }
    groups
        .into_iter()
        .map(|(sum, count)| (sum / count as f64, count))
        .collect()
}

/// Population spikes implied by the top `m` eigenvalues under `law`, with
/// sub-critical eigenvalues clamped just above the detection threshold.
fn implied_spikes(
    values: &[f64],
    m: usize,
    law: &SpectralLaw,
    sigma2: f64,
    warnings: &mut Vec<String>,
) -> Result<Vec<Spike>> {
    let mut spikes: Vec<Spike> = Vec::new();
    for (l, count) in spike_groups(values, m) {
        let alpha = match spike_inverse(l, law, sigma2) {
            Ok(alpha) => alpha,
            Err(FactorError::NotASpike { edge, .. }) => {
                warnings.push(format!(
                    "eigenvalue {l} is inside the bulk (edge {edge}); spike clamped to threshold"
                ));
                detection_threshold(law, sigma2) * (1.0 + 1e-6)
            }
            Err(e) => return Err(e),
        };
        match spikes.last_mut() {
            Some(prev) if prev.alpha == alpha => prev.multiplicity += count,
            _ => spikes.push(Spike::new(alpha, count)),
        }
    }
    Ok(spikes)
}

/// Bias-corrected noise estimation for a fixed spectrum setting.
///
/// The contour term μ_x depends on σ² only through a linear and a constant
/// part, so both are computed once for the unit-scale law and reused for
/// every σ² and every candidate `m` with the same dimension ratio.
#[derive(Debug, Clone)]
pub struct NoiseCorrector {
    c: f64,
    nonspikes: NoiseSpectrum,
    moments: FourthMomentSpec,
    refine: bool,
    unit_term_q: f64,
    term_beta: f64,
    nodes: usize,
}

impl NoiseCorrector {
    pub fn new(c: f64, nonspikes: &NoiseSpectrum, moments: FourthMomentSpec) -> Result<Self> {
        let law = SpectralLaw::from_noise(c, 1.0, nonspikes, moments)?;
        let mu = mu_x_with(&law, &MuXOptions::default())?;
        Ok(Self {
            c,
            nonspikes: nonspikes.clone(),
            moments,
            refine: true,
            unit_term_q: mu.term_q,
            term_beta: mu.term_beta,
            nodes: mu.nodes,
        })
    }

    /// Corrector for the dimension ratio of `spectrum`.
    pub fn for_spectrum(
        spectrum: &EigenSpectrum,
        nonspikes: &NoiseSpectrum,
        moments: FourthMomentSpec,
    ) -> Result<Self> {
        Self::new(spectrum.c_eff(), nonspikes, moments)
    }

    /// Enables or disables the single refinement pass (on by default).
    pub fn with_refinement(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// μ_x of the law with atoms σ²·r_i.
    pub fn mu_x(&self, sigma2: f64) -> f64 {
        self.unit_term_q * sigma2 + self.term_beta
    }

    /// σ̂²_* at `m` assumed spikes.
    pub fn estimate(&self, spectrum: &EigenSpectrum, m: usize) -> Result<NoiseEstimate> {
        let mle = sigma2_mle(spectrum, m, &self.nonspikes)?;
        let denom = (spectrum.n() - m) as f64 * self.nonspikes.mean();
        let mut warnings = Vec::new();

        let correct = |sigma2: f64, warnings: &mut Vec<String>| -> Result<(f64, f64, f64)> {
            let law = SpectralLaw::from_noise(self.c, sigma2, &self.nonspikes, self.moments)?;
            let spikes = implied_spikes(spectrum.values(), m, &law, sigma2, warnings)?;
            let spec = SpectrumSpec::new(spikes, self.nonspikes.clone(), sigma2)?;
            let b = bias_b(&spec, &law)?;
            let mu = self.mu_x(sigma2);
            Ok((mle.value + (b - mu) / denom, b, mu))
        };

        let (mut value, mut b, mut mu) = correct(mle.value, &mut warnings)?;
        let mut passes = 1.0;
        if self.refine && m > 0 {
            let base = positive(value, NoiseMethod::Star)?;
            let mut second = Vec::new();
            (value, b, mu) = correct(base, &mut second)?;
            warnings = second;
            passes = 2.0;
        }
        let mut estimate =
            NoiseEstimate::new(positive(value, NoiseMethod::Star)?, NoiseMethod::Star, m)
                .with("mle", mle.value)
                .with("bias_b", b)
                .with("mu_x", mu)
                .with("passes", passes)
                .with("contour_nodes", self.nodes as f64);
        estimate.warnings = warnings;
        Ok(estimate)
    }
}

/// σ̂²_* = σ̂²_MLE + (b − μ_x)/((N − m) Σ ω_i r_i), with one refinement pass.
pub fn sigma2_star(
    spectrum: &EigenSpectrum,
    m: usize,
    nonspikes: &NoiseSpectrum,
    moments: FourthMomentSpec,
) -> Result<NoiseEstimate> {
    check_m(spectrum, m)?;
    NoiseCorrector::for_spectrum(spectrum, nonspikes, moments)?.estimate(spectrum, m)
}

/// σ̂²_P = σ̃² + cσ̃²/(N − m)·(m + Σ_k n_k/(α_k − 1)) under H = δ₁.
pub fn sigma2_passemier(spectrum: &EigenSpectrum, m: usize) -> Result<NoiseEstimate> {
    let identity = NoiseSpectrum::identity();
    let base = sigma2_mle(spectrum, m, &identity)?.value;
    let c = spectrum.c_eff();
    let law = SpectralLaw::from_noise(c, base, &identity, FourthMomentSpec::complex_gaussian())?;
    let mut warnings = Vec::new();
    let spikes = implied_spikes(spectrum.values(), m, &law, base, &mut warnings)?;
    let sum: f64 = spikes
        .iter()
        .map(|s| s.multiplicity as f64 / (s.alpha - 1.0))
        .sum();
    let value = base + c * base / (spectrum.n() - m) as f64 * (m as f64 + sum);
    let mut estimate = NoiseEstimate::new(
        positive(value, NoiseMethod::Passemier)?,
        NoiseMethod::Passemier,
        m,
    )
    .with("mle", base);
    estimate.warnings = warnings;
    Ok(estimate)
}

/// Larger root of ρ² − ρ(l + σ² − σ²(N−m)/T) + lσ² = 0; the flag marks a
/// negative discriminant, where the real part is returned.
fn kn_rho(l: f64, sigma2: f64, ratio: f64) -> (f64, bool) {
    let b = l + sigma2 - sigma2 * ratio;
    let disc = b * b - 4.0 * l * sigma2;
    if disc < 0.0 {
        (0.5 * b, true)
    } else {
        (0.5 * (b + disc.sqrt()), false)
    }
}

/// σ̂²_KN by alternating between the ρ̂_j quadratics and the σ² equation.
pub fn sigma2_kn(spectrum: &EigenSpectrum, m: usize) -> Result<NoiseEstimate> {
    let mut sigma2 = sigma2_mle(spectrum, m, &NoiseSpectrum::identity())?.value;
    let values = spectrum.values();
    let n_minus_m = (spectrum.n() - m) as f64;
    let ratio = n_minus_m / spectrum.t_eff() as f64;
    let tail = spectrum.tail_sum(m);

    let update = |sigma2: f64| -> (f64, bool) {
        let mut degenerate = false;
        let mut excess = 0.0;
        for &l in &values[..m] {
            let (rho, flag) = kn_rho(l, sigma2, ratio);
            degenerate |= flag;
            excess += l - rho;
        }
        ((tail + excess) / n_minus_m, degenerate)
    };

    let mut iterations = 0;
    let mut degenerate;
    loop {
        if iterations == KN_CAP {
            return Err(FactorError::numerical(
                "Kraut-Nadler iteration did not converge",
                (update(sigma2).0 - sigma2).abs(),
            ));
        }
        iterations += 1;
        let (next, flag) = update(sigma2);
        degenerate = flag;
        let delta = (next - sigma2).abs();
        sigma2 = next;
        if delta <= KN_TOLERANCE * sigma2.abs().max(1.0) {
            break;
        }
    }

    let residual = (sigma2 - update(sigma2).0).abs();
    let mut estimate = NoiseEstimate::new(
        positive(sigma2, NoiseMethod::KrautNadler)?,
        NoiseMethod::KrautNadler,
        m,
    )
    .with("iterations", iterations as f64)
    .with("residual", residual);
    if degenerate {
        estimate
            .warnings
            .push("negative discriminant: degenerate spike, real part used".into());
    }
    Ok(estimate)
}

/// Median of a non-empty slice; even lengths average the central pair.
pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Median of the Marčenko–Pastur law with ratio `c` and unit scale.
pub fn mp_median(c: f64) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(FactorError::Input(format!(
            "ratio must be positive, got {c}"
        )));
    }
    let atom = if c > 1.0 { 1.0 - 1.0 / c } else { 0.0 };
    if atom >= 0.5 {
        return Err(FactorError::Input(format!(
            "Marchenko-Pastur median is zero at c = {c}"
        )));
    }
    let a = (1.0 - c.sqrt()).powi(2);
    let b = (1.0 + c.sqrt()).powi(2);
    let half = 0.5 * (b - a);
    // u = a + half(1 − cos θ) turns the density into a smooth integrand
    let density = |theta: f64| {
        let s = theta.sin();
        let u = a + half * (1.0 - theta.cos());
        half * half * s * s / (2.0 * std::f64::consts::PI * c * u)
    };
    let cdf = |theta: f64| atom + adaptive_simpson(&density, 0.0, theta, 1e-13);
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
    let to_x = |theta: f64| a + half * (1.0 - f64::cos(theta));
    while to_x(hi) - to_x(lo) > 1e-12 * b {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(to_x(0.5 * (lo + hi)))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 40)
}

/// σ̂²_US = median(l_{m+1}, …, l_N) / median of MP(c_eff).
pub fn sigma2_us(spectrum: &EigenSpectrum, m: usize) -> Result<NoiseEstimate> {
    if m + 1 >= spectrum.n() {
        return Err(FactorError::Dimension(format!(
            "m = {m} must be below N - 1 = {}",
            spectrum.n() - 1
        )));
    }
    let sample = median(&spectrum.values()[m..]);
    let reference = mp_median(spectrum.c_eff())?;
    let value = sample / reference;
    Ok(NoiseEstimate::new(
        positive(value, NoiseMethod::UlfarssonSolo)?,
        NoiseMethod::UlfarssonSolo,
        m,
    )
    .with("mp_median", reference))
}

/// Median over series of the per-series mean square of the row-centred panel.
pub fn sigma2_median(panel: &PanelData) -> Result<NoiseEstimate> {
    let x = panel.row_centered();
    let t = panel.t() as f64;
    let per_row: Vec<f64> = x
        .row_iter()
        .map(|row| row.iter().map(|v| v * v).sum::<f64>() / t)
        .collect();
    let value = median(&per_row);
    Ok(NoiseEstimate::new(
        positive(value, NoiseMethod::Median)?,
        NoiseMethod::Median,
        0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmt_kernel::spike_forward;
    use crate::spectrum::BulkAtom;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spectrum(values: &[f64], t_eff: usize) -> EigenSpectrum {
        EigenSpectrum::from_values(values.to_vec(), t_eff).unwrap()
    }

    fn model1_spectrum() -> EigenSpectrum {
        spectrum(&[100.0, 64.0, 64.0, 36.0, 8.0, 8.0, 8.0, 4.0, 4.0, 4.0], 20)
    }

    #[test]
    fn mle_examples() {
        let ones = spectrum(&[1.0; 8], 16);
        assert_eq!(
            sigma2_mle(&ones, 0, &NoiseSpectrum::identity())
                .unwrap()
                .value,
            1.0
        );
        let v = sigma2_mle(&model1_spectrum(), 4, &NoiseSpectrum::half_and_half()).unwrap();
        assert_relative_eq!(v.value, 4.0, epsilon = 1e-14);
        assert!(matches!(
            sigma2_mle(&ones, 8, &NoiseSpectrum::identity()),
            Err(FactorError::Dimension(_))
        ));
    }

    #[test]
    fn star_without_correction_is_the_mle() {
        let s = model1_spectrum();
        let h = NoiseSpectrum::half_and_half();
        let star = sigma2_star(&s, 0, &h, FourthMomentSpec::complex_gaussian()).unwrap();
        assert_eq!(star.value, sigma2_mle(&s, 0, &h).unwrap().value);
    }

    #[test]
    fn ties_are_grouped() {
        let groups = spike_groups(&[100.0, 64.0, 64.0 * (1.0 - 1e-11), 36.0, 1.0], 4);
        assert_eq!(groups.len(), 3);
        assert_eq!(groups[1].1, 2);
    }

    #[test]
    fn passemier_single_spike_formula() {
        // bulk at 1 with one eigenvalue at the forward image of α = 25
        let n = 21;
        let t = 42;
        let c = n as f64 / t as f64;
        let law =
            SpectralLaw::new(c, vec![(1.0, 1.0)], FourthMomentSpec::complex_gaussian()).unwrap();
        let top = spike_forward(25.0, &law, 1.0).unwrap();
        let mut values = vec![1.0; n];
        values[0] = top;
        let s = spectrum(&values, t);
        let p = sigma2_passemier(&s, 1).unwrap();
        let base = (n - 1) as f64 / (n - 1) as f64;
        assert_eq!(p.diagnostics["mle"], base);
        let expected = base + c / (n - 1) as f64 * (1.0 + 1.0 / 24.0);
        assert!((p.value - expected).abs() < 1e-9);
        assert_eq!(sigma2_passemier(&s, 0).unwrap().value, s.trace() / n as f64);
    }

    #[test]
    fn passemier_equals_uncorrected_star_under_identity_bulk() {
        let s = spectrum(
            &[
                60.0, 31.0, 30.0, 12.0, 3.1, 2.9, 2.4, 2.2, 1.9, 1.6, 1.2, 0.8,
            ],
            30,
        );
        for m in 0..=4 {
            let p = sigma2_passemier(&s, m).unwrap();
            let star = NoiseCorrector::for_spectrum(
                &s,
                &NoiseSpectrum::identity(),
                FourthMomentSpec::complex_gaussian(),
            )
            .unwrap()
            .with_refinement(false)
            .estimate(&s, m)
            .unwrap();
            assert!((p.value - star.value).abs() < 1e-6, "m = {m}");
        }
    }

    #[test]
    fn kn_without_spikes_is_the_mean() {
        let s = model1_spectrum();
        let kn = sigma2_kn(&s, 0).unwrap();
        assert_relative_eq!(kn.value, s.trace() / 10.0, epsilon = 1e-12);
    }

    /// Newton on the full (ρ, σ²) system, solved independently.
    fn kn_newton(values: &[f64], m: usize, t: f64) -> f64 {
        let n = values.len();
        let nm = (n - m) as f64;
        let r = nm / t;
        let tail: f64 = values[m..].iter().sum();
        let mut x: Vec<f64> = values[..m].to_vec();
        x.push(tail / nm);
        for _ in 0..100 {
            let s = x[m];
            let mut f = vec![0.0; m + 1];
            let mut jac = vec![vec![0.0; m + 1]; m + 1];
            for j in 0..m {
                let (l, rho) = (values[j], x[j]);
                f[j] = rho * rho - rho * (l + s - s * r) + l * s;
                jac[j][j] = 2.0 * rho - (l + s - s * r);
                jac[j][m] = -rho * (1.0 - r) + l;
            }
            let excess: f64 = (0..m).map(|j| values[j] - x[j]).sum();
            f[m] = s - (tail + excess) / nm;
            for j in 0..m {
                jac[m][j] = 1.0 / nm;
            }
            jac[m][m] = 1.0;
            // Gaussian elimination
            let mut a = jac.clone();
            let mut rhs = f.clone();
            for col in 0..=m {
                let piv = (col..=m)
                    .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
                    .unwrap();
                a.swap(col, piv);
                rhs.swap(col, piv);
                for row in col + 1..=m {
                    let factor = a[row][col] / a[col][col];
                    for k in col..=m {
                        a[row][k] -= factor * a[col][k];
                    }
                    rhs[row] -= factor * rhs[col];
                }
            }
            let mut dx = vec![0.0; m + 1];
            for row in (0..=m).rev() {
                let tail_sum: f64 = (row + 1..=m).map(|k| a[row][k] * dx[k]).sum();
                dx[row] = (rhs[row] - tail_sum) / a[row][row];
            }
            for k in 0..=m {
                x[k] -= dx[k];
            }
        }
        x[m]
    }

    #[test]
    fn kn_matches_an_independent_newton_solver() {
        let values = [10.0, 1.2, 1.1, 1.0, 0.9, 0.8];
        let s = spectrum(&values, 12);
        let kn = sigma2_kn(&s, 1).unwrap();
        let oracle = kn_newton(&values, 1, 12.0);
        assert!((kn.value - oracle).abs() < 1e-8, "{} vs {oracle}", kn.value);
        assert!(kn.diagnostics["residual"] < 1e-8);
        // the fixed point satisfies the quadratic too
        let (rho, degenerate) = kn_rho(10.0, kn.value, 5.0 / 12.0);
        assert!(!degenerate);
        let q = rho * rho - rho * (10.0 + kn.value - kn.value * 5.0 / 12.0) + 10.0 * kn.value;
        assert!(q.abs() < 1e-8);
    }

    #[test]
    fn kn_picks_the_signal_root() {
        let (rho, _) = kn_rho(1000.0, 1.0, 0.5);
        assert!((rho - (1000.0 - 0.5)).abs() < 1e-2);
    }

    #[test]
    fn mp_median_limits() {
        assert!((mp_median(1e-8).unwrap() - 1.0).abs() < 1e-3);
        assert!(mp_median(2.5).is_err());
        let med = mp_median(0.5).unwrap();
        assert!(med > (1.0 - 0.5f64.sqrt()).powi(2) && med < 1.0);
    }

    #[test]
    fn mp_median_against_sampled_quantile() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let n = 2000;
        let t = 4000;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x = nalgebra::DMatrix::<f64>::from_fn(n, t, |_, _| StandardNormal.sample(&mut rng));
        let values = crate::spectrum::covariance_eigenvalues(&x, t as f64);
        let empirical = median(&values);
        assert!((empirical - mp_median(0.5).unwrap()).abs() < 1e-2);
    }

    #[test]
    fn us_recovers_unit_scale_on_the_mp_median() {
        let med = mp_median(0.5).unwrap();
        let s = spectrum(&[med; 10], 20);
        assert_relative_eq!(sigma2_us(&s, 0).unwrap().value, 1.0, epsilon = 1e-12);
        let tiny = spectrum(&[5.0, 3.0, 2.0, 1.0, 0.5], 500_000_000);
        assert!((sigma2_us(&tiny, 0).unwrap().value - 2.0).abs() < 1e-3);
    }

    #[test]
    fn median_estimator_examples() {
        let panel = PanelData::from_rows(&[
            vec![1.0, -1.0, 1.0, -1.0],
            vec![2f64.sqrt(), -(2f64.sqrt()), 2f64.sqrt(), -(2f64.sqrt())],
            vec![10.0, -10.0, 10.0, -10.0],
        ])
        .unwrap();
        assert_relative_eq!(sigma2_median(&panel).unwrap().value, 2.0, epsilon = 1e-12);
        let flat = PanelData::from_rows(&[vec![3.0, 1.0], vec![5.0, 7.0]]).unwrap();
        assert_relative_eq!(sigma2_median(&flat).unwrap().value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn star_clamps_bulk_eigenvalues() {
        let s = spectrum(&[2.0, 1.9, 1.5, 1.2, 1.0, 0.9, 0.8, 0.5], 16);
        let star = sigma2_star(
            &s,
            2,
            &NoiseSpectrum::identity(),
            FourthMomentSpec::real_gaussian(),
        )
        .unwrap();
        assert!(star.value.is_finite() && star.value > 0.0);
        assert!(!star.warnings.is_empty());
    }

    #[test]
    fn corrector_reuses_the_contour_terms() {
        let h = NoiseSpectrum::new(vec![BulkAtom::new(2.0, 0.5), BulkAtom::new(1.0, 0.5)]).unwrap();
        let moments = FourthMomentSpec::new(1, 3.0).unwrap();
        let corrector = NoiseCorrector::new(1.5, &h, moments).unwrap();
        for sigma2 in [0.01, 1.0, 4.0, 250.0] {
            let law = SpectralLaw::from_noise(1.5, sigma2, &h, moments).unwrap();
            let direct = mu_x_with(&law, &MuXOptions::default()).unwrap().value;
            assert!((corrector.mu_x(sigma2) - direct).abs() < 1e-7 * sigma2.max(1.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn estimators_are_scale_equivariant(
            s in 0.01f64..100.0,
            bulk in proptest::collection::vec(0.5f64..2.0, 12),
        ) {
            let mut values = vec![60.0, 35.0, 20.0];
            values.extend(bulk);
            let base = EigenSpectrum::from_values(values, 30).unwrap();
            let scaled = base.scaled(s);
            let h = NoiseSpectrum::identity();
            let g = FourthMomentSpec::real_gaussian();
            let pairs = [
                (sigma2_mle(&base, 3, &h).unwrap().value, sigma2_mle(&scaled, 3, &h).unwrap().value),
                (sigma2_star(&base, 3, &h, g).unwrap().value, sigma2_star(&scaled, 3, &h, g).unwrap().value),
                (sigma2_passemier(&base, 3).unwrap().value, sigma2_passemier(&scaled, 3).unwrap().value),
                (sigma2_kn(&base, 3).unwrap().value, sigma2_kn(&scaled, 3).unwrap().value),
                (sigma2_us(&base, 3).unwrap().value, sigma2_us(&scaled, 3).unwrap().value),
            ];
            for (a, b) in pairs {
                prop_assert!((b - s * a).abs() <= 1e-8 * (s * a).max(1.0), "{} vs {}", b, s * a);
            }
        }
    }
}
