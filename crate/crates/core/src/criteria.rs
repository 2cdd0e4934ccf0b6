//! Information criteria for the number of factors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FactorError, Result};
use crate::noise::{NoiseCorrector, NoiseEstimate};
use crate::spectrum::{
    covariance_eigenvalues, sample_spectrum, sorted_symmetric_eigen, EigenSpectrum,
    FourthMomentSpec, NoiseSpectrum, PanelData,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Penalty {
    G1,
    G2,
    G3,
}

impl Penalty {
    pub const ALL: [Penalty; 3] = [Penalty::G1, Penalty::G2, Penalty::G3];
}

/// Penalty g_j(N, T) with C²_NT = min(N, T).
pub fn penalty(which: Penalty, n: usize, t: usize) -> f64 {
    let (nf, tf) = (n as f64, t as f64);
    let c2 = nf.min(tf);
    let rate = (nf + tf) / (nf * tf);
    match which {
        Penalty::G1 => rate * (nf * tf / (nf + tf)).ln(),
        Penalty::G2 => rate * c2.ln(),
        Penalty::G3 => c2.ln() / c2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    Pc1,
    Pc2,
    Pc3,
    PcStar1,
    PcStar2,
    PcStar3,
}

impl Criterion {
    pub const ALL: [Criterion; 6] = [
        Criterion::Pc1,
        Criterion::Pc2,
        Criterion::Pc3,
        Criterion::PcStar1,
        Criterion::PcStar2,
        Criterion::PcStar3,
    ];

    pub fn penalty(self) -> Penalty {
        match self {
            Criterion::Pc1 | Criterion::PcStar1 => Penalty::G1,
            Criterion::Pc2 | Criterion::PcStar2 => Penalty::G2,
            Criterion::Pc3 | Criterion::PcStar3 => Penalty::G3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Criterion::Pc1 => "PC_p1",
            Criterion::Pc2 => "PC_p2",
            Criterion::Pc3 => "PC_p3",
            Criterion::PcStar1 => "PC*_p1",
            Criterion::PcStar2 => "PC*_p2",
            Criterion::PcStar3 => "PC*_p3",
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Estimated factors F̃ (T×m, F̃ᵀF̃/T = I) and loadings Λ̃ = X̃F̃/T (N×m).
#[derive(Debug, Clone)]
pub struct FactorBasis {
    pub factors: DMatrix<f64>,
    pub loadings: DMatrix<f64>,
}

impl FactorBasis {
    /// Principal-component basis of the row-centred panel.
    pub fn estimate(panel: &PanelData, m: usize) -> Result<Self> {
        let (n, t) = (panel.n(), panel.t());
        if m > n.min(t) {
            return Err(FactorError::Dimension(format!(
                "m = {m} exceeds min(N, T) = {}",
                n.min(t)
            )));
        }
        let x = panel.row_centered();
        let (_, vectors) = sorted_symmetric_eigen(x.transpose() * &x);
        let factors = vectors.columns(0, m).into_owned() * (t as f64).sqrt();
        let loadings = &x * &factors / t as f64;
        Ok(Self { factors, loadings })
    }

    pub fn common_component(&self) -> DMatrix<f64> {
        &self.loadings * self.factors.transpose()
    }
}

/// V(m) = (NT)⁻¹ Σ_i Σ_t (X̃_it − Λ̃_iᵀ F̃_t)², computed from the fitted basis.
pub fn pca_objective(panel: &PanelData, m: usize) -> Result<f64> {
    let basis = FactorBasis::estimate(panel, m)?;
    let residual = panel.row_centered() - basis.common_component();
    Ok(residual.norm_squared() / (panel.n() * panel.t()) as f64)
}

/// V(0), …, V(m0) through the tail sums of the eigenvalues of X̃X̃ᵀ/T.
fn objective_curve(panel: &PanelData, m0: usize) -> Vec<f64> {
    let values = covariance_eigenvalues(&panel.row_centered(), panel.t() as f64);
    let n = panel.n() as f64;
    (0..=m0)
        .map(|m| values[m..].iter().map(|v| v.max(0.0)).sum::<f64>() / n)
        .collect()
}

/// Per-m criterion values with the selected number of factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: Criterion,
    /// `(m, value)` for m = 0…m₀; NaN where the noise estimate failed.
    pub values: Vec<(usize, f64)>,
    pub m_hat: usize,
    pub m0: usize,
    pub noise_backing: Vec<NoiseEstimate>,
    /// Candidates left out of the argmin, with the reason.
    pub excluded: Vec<(usize, String)>,
}

/// Index of the smallest finite value; ties go to the first.
fn argmin(values: &[(usize, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(m, v) in values {
        if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
            best = Some((m, v));
        }
    }
    best.map(|(m, _)| m)
}

fn check_m0(m0: usize, limit: usize) -> Result<()> {
    if m0 < 1 || m0 > limit {
        return Err(FactorError::Dimension(format!(
            "m0 = {m0} must lie in [1, {limit}]"
        )));
    }
    Ok(())
}

/// PC_pj(m) = V(m) + m·V(m₀)·g_j for j = 1, 2, 3.
pub fn pc_original(panel: &PanelData, m0: usize) -> Result<Vec<CriterionReport>> {
    let (n, t) = (panel.n(), panel.t());
    check_m0(m0, n.min(t) - 1)?;
    let v = objective_curve(panel, m0);
    let scale = v[m0];
    Ok([Criterion::Pc1, Criterion::Pc2, Criterion::Pc3]
        .into_iter()
        .map(|criterion| {
            let g = penalty(criterion.penalty(), n, t);
            let values: Vec<(usize, f64)> = v
                .iter()
                .enumerate()
                .map(|(m, vm)| (m, vm + m as f64 * scale * g))
                .collect();
            CriterionReport {
                criterion,
                m_hat: argmin(&values).expect("objective values are finite"),
                values,
                m0,
                noise_backing: Vec::new(),
                excluded: Vec::new(),
            }
        })
        .collect())
}

/// PC*_pj(m) = σ̂²_*(m) + m·σ̂²_*(m₀)·g_j on the unknown-mean spectrum.
pub fn pc_star(
    panel: &PanelData,
    m0: usize,
    nonspikes: &NoiseSpectrum,
    moments: FourthMomentSpec,
) -> Result<Vec<CriterionReport>> {
    let spectrum = sample_spectrum(panel, false)?;
    check_m0(m0, panel.n() - 1)?;
    let corrector = NoiseCorrector::for_spectrum(&spectrum, nonspikes, moments)?;
    pc_star_from_spectrum(&spectrum, m0, &corrector, panel.t())
}

/// PC* criteria for a precomputed spectrum and corrector; `t` is the panel
/// length entering the penalties.
pub fn pc_star_from_spectrum(
    spectrum: &EigenSpectrum,
    m0: usize,
    corrector: &NoiseCorrector,
    t: usize,
) -> Result<Vec<CriterionReport>> {
    let n = spectrum.n();
    check_m0(m0, n - 1)?;
    let estimates: Vec<Result<NoiseEstimate>> =
        (0..=m0).map(|m| corrector.estimate(spectrum, m)).collect();
    let scale = match &estimates[m0] {
        Ok(e) => e.value,
        Err(e) => return Err(e.clone()),
    };
    let excluded: Vec<(usize, String)> = estimates
        .iter()
        .enumerate()
        .filter_map(|(m, e)| e.as_ref().err().map(|err| (m, err.to_string())))
        .collect();
    let backing: Vec<NoiseEstimate> = estimates.iter().filter_map(|e| e.clone().ok()).collect();

    Ok([Criterion::PcStar1, Criterion::PcStar2, Criterion::PcStar3]
        .into_iter()
        .map(|criterion| {
            let g = penalty(criterion.penalty(), n, t);
            let values: Vec<(usize, f64)> = estimates
                .iter()
                .enumerate()
                .map(|(m, e)| match e {
                    Ok(e) => (m, e.value + m as f64 * scale * g),
                    Err(_) => (m, f64::NAN),
                })
                .collect();
            CriterionReport {
                criterion,
                m_hat: argmin(&values).expect("the m0 estimate is finite"),
                values,
                m0,
                noise_backing: backing.clone(),
                excluded: excluded.clone(),
            }
        })
        .collect())
}

/// How the maximum number of factors is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum M0Mode {
    Fixed(usize),
    Fraction(f64),
}

/// m₀ for an N×T panel; fractions are rounded and clamped to [1, min(N,T)−1].
pub fn choose_m0(n: usize, t: usize, mode: M0Mode) -> Result<usize> {
    let limit = n.min(t);
    if limit < 2 {
        return Err(FactorError::Dimension(format!(
            "panel {n}x{t} is too small for any m0"
        )));
    }
    match mode {
        M0Mode::Fixed(k) => {
            check_m0(k, limit - 1)?;
            Ok(k)
        }
        M0Mode::Fraction(f) => {
            if !(f.is_finite() && f > 0.0) {
                return Err(FactorError::Input(format!(
                    "m0 fraction must be positive, got {f}"
                )));
            }
            Ok(((f * n as f64).round() as usize).clamp(1, limit - 1))
        }
    }
}
