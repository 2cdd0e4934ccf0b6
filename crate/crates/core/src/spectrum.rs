//! Panels, population spectra and sample covariance eigenvalues.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{FactorError, Result};

/// Tolerance on Σω = 1 for discrete spectral weights.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Relative tolerance below which negative round-off eigenvalues are clamped to zero.
const NEGATIVE_EIGEN_TOLERANCE: f64 = 1e-10;

/// An N×T panel: rows are cross-section units, columns are time points.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    values: DMatrix<f64>,
    series_labels: Option<Vec<String>>,
    time_labels: Option<Vec<String>>,
}

impl PanelData {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (n, t) = values.shape();
        if n < 2 || t < 2 {
            return Err(FactorError::Dimension(format!(
                "panel must be at least 2x2, got {n}x{t}"
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            // nalgebra storage is column-major
            let (i, j) = (idx % n, idx / n);
            return Err(FactorError::Input(format!(
                "non-finite value at row {}, column {}",
                i + 1,
                j + 1
            )));
        }
        Ok(Self {
            values,
            series_labels: None,
            time_labels: None,
        })
    }

    /// Builds a panel from row-major series.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != t) {
            return Err(FactorError::Input(format!(
                "row {} has {} values, expected {t}",
                bad + 1,
                rows[bad].len()
            )));
        }
        Self::new(DMatrix::from_fn(n, t, |i, j| rows[i][j]))
    }

    pub fn with_series_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(FactorError::Input(format!(
                "{} series labels for {} series",
                labels.len(),
                self.n()
            )));
        }
        self.series_labels = Some(labels);
        Ok(self)
    }

    pub fn with_time_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.t() {
            return Err(FactorError::Input(format!(
                "{} time labels for {} time points",
                labels.len(),
                self.t()
            )));
        }
        self.time_labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn t(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn series_labels(&self) -> Option<&[String]> {
        self.series_labels.as_deref()
    }

    pub fn time_labels(&self) -> Option<&[String]> {
        self.time_labels.as_deref()
    }

    /// Copy of the values with every row demeaned.
    pub fn row_centered(&self) -> DMatrix<f64> {
        let mut x = self.values.clone();
        for mut row in x.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
        }
        x
    }

    /// Panel with every entry multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let mut out = Self::new(&self.values * s)?;
        out.series_labels = self.series_labels.clone();
        out.time_labels = self.time_labels.clone();
        Ok(out)
    }
}

/// A population spike `alpha` (in σ² units) with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub alpha: f64,
    pub multiplicity: usize,
}

impl Spike {
    pub fn new(alpha: f64, multiplicity: usize) -> Self {
        Self {
            alpha,
            multiplicity,
        }
    }
}

/// One atom `r` of the non-spiked bulk, carrying weight `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkAtom {
    pub r: f64,
    pub omega: f64,
}

impl BulkAtom {
    pub fn new(r: f64, omega: f64) -> Self {
        Self { r, omega }
    }
}

/// Discrete distribution of the non-spiked eigenvalues (in σ² units).
///
/// Atoms are kept sorted strictly decreasing in `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectrum {
    atoms: Vec<BulkAtom>,
}

impl NoiseSpectrum {
    pub fn new(mut atoms: Vec<BulkAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(FactorError::Input("noise spectrum has no atoms".into()));
        }
        for a in &atoms {
            if !(a.r.is_finite() && a.r > 0.0) {
                return Err(FactorError::Input(format!(
                    "bulk atom must be positive, got {}",
                    a.r
                )));
            }
            if !(a.omega > 0.0 && a.omega <= 1.0) {
                return Err(FactorError::Input(format!(
                    "bulk weight must lie in (0, 1], got {}",
                    a.omega
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.omega).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(FactorError::Input(format!(
                "bulk weights sum to {total}, expected 1"
            )));
        }
        atoms.sort_by(|a, b| b.r.total_cmp(&a.r));
        if atoms.windows(2).any(|w| w[0].r == w[1].r) {
            return Err(FactorError::Input("duplicate bulk atoms".into()));
        }
        Ok(Self { atoms })
    }

    /// The point mass at 1 (strict factor model).
    pub fn identity() -> Self {
        Self {
            atoms: vec![BulkAtom::new(1.0, 1.0)],
        }
    }

    /// Two atoms 2 and 1 with equal weight.
    pub fn half_and_half() -> Self {
        Self {
            atoms: vec![BulkAtom::new(2.0, 0.5), BulkAtom::new(1.0, 0.5)],
        }
    }

    pub fn atoms(&self) -> &[BulkAtom] {
        &self.atoms
    }

    /// Σ ω_i r_i.
    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.r * a.omega).sum()
    }

    pub fn max_atom(&self) -> f64 {
        self.atoms[0].r
    }
}

/// Population spectrum σ²·(α₁…α₁, …, α_K…α_K, r₁…r₁, …, r_s…r_s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    spikes: Vec<Spike>,
    bulk: NoiseSpectrum,
    sigma2: f64,
}

impl SpectrumSpec {
    pub fn new(mut spikes: Vec<Spike>, bulk: NoiseSpectrum, sigma2: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(FactorError::Input(format!(
                "sigma2 must be positive, got {sigma2}"
            )));
        }
        spikes.sort_by(|a, b| b.alpha.total_cmp(&a.alpha));
        for s in &spikes {
            if s.multiplicity == 0 || !s.alpha.is_finite() {
                return Err(FactorError::Input(format!("invalid spike {s:?}")));
            }
            if s.alpha <= bulk.max_atom() {
                return Err(FactorError::Input(format!(
                    "spike {} does not exceed the largest bulk atom {}",
                    s.alpha,
                    bulk.max_atom()
                )));
            }
        }
        if spikes.windows(2).any(|w| w[0].alpha == w[1].alpha) {
            return Err(FactorError::Input("spikes must be distinct".into()));
        }
        Ok(Self {
            spikes,
            bulk,
            sigma2,
        })
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    pub fn bulk(&self) -> &NoiseSpectrum {
        &self.bulk
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// M = Σ n_k.
    pub fn total_spikes(&self) -> usize {
        self.spikes.iter().map(|s| s.multiplicity).sum()
    }

    /// The `n` population eigenvalues, sorted descending.
    ///
    /// Bulk atom `r_i` gets `round(ω_i (n − M))` copies (ties to even); the
    /// largest-weight atom absorbs the rounding remainder, the smallest such
    /// atom when weights tie.
    pub fn population_eigenvalues(&self, n: usize) -> Result<Vec<f64>> {
        let m = self.total_spikes();
        if m >= n {
            return Err(FactorError::Dimension(format!(
                "{m} spikes do not fit in dimension {n}"
            )));
        }
        let counts = bulk_counts(&self.bulk, n - m);
        let mut out = Vec::with_capacity(n);
        for s in &self.spikes {
            out.extend(std::iter::repeat_n(self.sigma2 * s.alpha, s.multiplicity));
        }
        for (atom, count) in self.bulk.atoms.iter().zip(counts) {
            out.extend(std::iter::repeat_n(self.sigma2 * atom.r, count));
        }
        debug_assert_eq!(out.len(), n);
        Ok(out)
    }
}

fn bulk_counts(bulk: &NoiseSpectrum, total: usize) -> Vec<usize> {
    let mut counts: Vec<i64> = bulk
        .atoms
        .iter()
        .map(|a| (a.omega * total as f64).round_ties_even() as i64)
        .collect();
    let remainder = total as i64 - counts.iter().sum::<i64>();
    let heaviest = bulk.atoms.iter().enumerate().fold(0, |best, (i, a)| {
        if a.omega >= bulk.atoms[best].omega {
            i
        } else {
            best
        }
    });
    counts[heaviest] += remainder;
    counts.into_iter().map(|c| c.max(0) as usize).collect()
}

/// Fourth-moment description of the standardized innovations.
///
/// `q = 1` for real data, `0` for complex; `beta = E|ξ|⁴ − q − 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentSpec {
    pub q: u8,
    pub beta: f64,
}

impl FourthMomentSpec {
    pub fn new(q: u8, beta: f64) -> Result<Self> {
        if q > 1 {
            return Err(FactorError::Input(format!("q must be 0 or 1, got {q}")));
        }
        if !beta.is_finite() {
            return Err(FactorError::Input("beta must be finite".into()));
        }
        Ok(Self { q, beta })
    }

    pub fn real_gaussian() -> Self {
        Self { q: 1, beta: 0.0 }
    }

    pub fn complex_gaussian() -> Self {
        Self { q: 0, beta: 0.0 }
    }

    /// Real innovations distributed as (Gamma(shape, 1) − shape)/√shape.
    ///
    /// Their excess kurtosis is 6/shape, so E ξ⁴ = 3 + 6/shape.
    pub fn standardized_gamma(shape: f64) -> Self {
        Self::from_fourth_moment(1, 3.0 + 6.0 / shape)
    }

    pub fn from_fourth_moment(q: u8, fourth_moment: f64) -> Self {
        Self {
            q,
            beta: fourth_moment - f64::from(q) - 2.0,
        }
    }
}

impl Default for FourthMomentSpec {
    fn default() -> Self {
        Self::real_gaussian()
    }
}

/// Sample eigenvalues l₁ ≥ … ≥ l_N with the effective sample size behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    values: Vec<f64>,
    n: usize,
    t_eff: usize,
    c_eff: f64,
}

impl EigenSpectrum {
    /// Wraps eigenvalues computed elsewhere; sorts them descending.
    pub fn from_values(mut values: Vec<f64>, t_eff: usize) -> Result<Self> {
        if values.len() < 2 || t_eff < 1 {
            return Err(FactorError::Dimension(format!(
                "spectrum needs N >= 2 and t_eff >= 1, got N = {}, t_eff = {t_eff}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FactorError::Input("non-finite eigenvalue".into()));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        clamp_round_off(&mut values)?;
        let n = values.len();
        Ok(Self {
            values,
            n,
            t_eff,
            c_eff: n as f64 / t_eff as f64,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_eff(&self) -> usize {
        self.t_eff
    }

    pub fn c_eff(&self) -> f64 {
        self.c_eff
    }

    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Σ_{j>m} l_j.
    pub fn tail_sum(&self, m: usize) -> f64 {
        self.values[m.min(self.n)..].iter().sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }
}

fn clamp_round_off(values: &mut [f64]) -> Result<()> {
    let scale = values.first().copied().unwrap_or(0.0).abs().max(1.0);
    let tol = NEGATIVE_EIGEN_TOLERANCE * scale;
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < -tol {
                return Err(FactorError::numerical(
                    "covariance has a significantly negative eigenvalue",
                    *v,
                ));
            }
            *v = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues of the N×N sample covariance of `panel`, sorted descending.
///
/// With `mean_known` the panel is used as is and S = XXᵀ/T; otherwise rows
/// are demeaned and S = X̃X̃ᵀ/(T−1).
pub fn sample_spectrum(panel: &PanelData, mean_known: bool) -> Result<EigenSpectrum> {
    let (x, t_eff) = if mean_known {
        (panel.values().clone(), panel.t())
    } else {
        (panel.row_centered(), panel.t() - 1)
    };
    let values = covariance_eigenvalues(&x, t_eff as f64);
    EigenSpectrum::from_values(values, t_eff)
}

/// Eigenvalues of XXᵀ/divisor, using the smaller Gram matrix when T < N.
pub(crate) fn covariance_eigenvalues(x: &DMatrix<f64>, divisor: f64) -> Vec<f64> {
    let (n, t) = x.shape();
    let gram = if n <= t {
        x * x.transpose()
    } else {
        x.transpose() * x
    };
    let mut values: Vec<f64> = symmetric_eigenvalues(gram)
        .iter()
        .map(|v| v / divisor)
        .collect();
    values.resize(n, 0.0);
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

pub(crate) fn symmetric_eigenvalues(m: DMatrix<f64>) -> DVector<f64> {
    m.symmetric_eigenvalues()
}

/// Eigen-decomposition with eigenvalues sorted descending and matching columns.
pub(crate) fn sorted_symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn model1_spec() -> SpectrumSpec {
        SpectrumSpec::new(
            vec![Spike::new(25.0, 1), Spike::new(16.0, 2), Spike::new(9.0, 1)],
            NoiseSpectrum::half_and_half(),
            4.0,
        )
        .unwrap()
    }

    fn gaussian_panel(n: usize, t: usize, seed: u64) -> PanelData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PanelData::new(DMatrix::from_fn(n, t, |_, _| {
            StandardNormal.sample(&mut rng)
        }))
        .unwrap()
    }

    /// Cyclic Jacobi sweeps; independent of nalgebra's QL-based solver.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut d: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        d.sort_by(|x, y| y.total_cmp(x));
        d
    }

    #[test]
    fn zero_panel_has_zero_spectrum() {
        let panel = PanelData::new(DMatrix::zeros(3, 5)).unwrap();
        let s = sample_spectrum(&panel, true).unwrap();
        assert_eq!(s.t_eff(), 5);
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_row_panel_is_rejected() {
        let row: Vec<f64> = (0..6)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let err = PanelData::from_rows(&[row]).unwrap_err();
        assert!(matches!(err, FactorError::Dimension(_)));
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        let mut m = DMatrix::zeros(3, 4);
        m[(1, 2)] = f64::NAN;
        let err = PanelData::new(m).unwrap_err();
        assert_eq!(
            err,
            FactorError::Input("non-finite value at row 2, column 3".into())
        );
    }

    #[test]
    fn sample_spectrum_matches_jacobi_oracle() {
        let panel = gaussian_panel(4, 8, 7);
        let spectrum = sample_spectrum(&panel, false).unwrap();
        assert_eq!(spectrum.t_eff(), 7);
        let x = panel.row_centered();
        let cov: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| (0..8).map(|t| x[(i, t)] * x[(j, t)]).sum::<f64>() / 7.0)
                    .collect()
            })
            .collect();
        let oracle = jacobi_eigenvalues(cov);
        for (a, b) in spectrum.values().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn wide_and_tall_panels_agree_through_the_dual_gram() {
        let panel = gaussian_panel(12, 5, 3);
        let s = sample_spectrum(&panel, true).unwrap();
        let x = panel.values();
        let direct = symmetric_eigenvalues(x * x.transpose() / 5.0);
        let mut direct: Vec<f64> = direct.iter().copied().collect();
        direct.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in s.values().iter().zip(&direct) {
            assert!((a - b.max(0.0)).abs() < 1e-10);
        }
        assert_eq!(s.values()[5..].iter().filter(|&&v| v == 0.0).count(), 7);
    }

    #[test]
    fn model1_population_spectrum_at_n10() {
        let eig = model1_spec().population_eigenvalues(10).unwrap();
        assert_eq!(
            eig,
            vec![100.0, 64.0, 64.0, 36.0, 8.0, 8.0, 8.0, 4.0, 4.0, 4.0]
        );
    }

    #[test]
    fn identity_population_spectrum() {
        let spec = SpectrumSpec::new(vec![], NoiseSpectrum::identity(), 1.0).unwrap();
        assert_eq!(spec.population_eigenvalues(5).unwrap(), vec![1.0; 5]);
    }

    #[test]
    fn rounding_remainder_goes_to_the_smallest_tied_atom() {
        // 5 bulk slots: round_ties_even(2.5) = 2 each, the remainder lands on r = 1.
        let spec = SpectrumSpec::new(
            vec![Spike::new(10.0, 1)],
            NoiseSpectrum::half_and_half(),
            1.0,
        )
        .unwrap();
        assert_eq!(
            spec.population_eigenvalues(6).unwrap(),
            vec![10.0, 2.0, 2.0, 1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn too_many_spikes_is_a_dimension_error() {
        let err = model1_spec().population_eigenvalues(4).unwrap_err();
        assert!(matches!(err, FactorError::Dimension(_)));
    }

    #[test]
    fn bulk_weights_must_sum_to_one() {
        let err =
            NoiseSpectrum::new(vec![BulkAtom::new(2.0, 0.5), BulkAtom::new(1.0, 0.4)]).unwrap_err();
        assert!(matches!(err, FactorError::Input(_)));
    }

    #[test]
    fn gamma_fourth_moment() {
        let m = FourthMomentSpec::standardized_gamma(2.0);
        assert_eq!(m.q, 1);
        assert_relative_eq!(m.beta, 3.0);
    }

    #[test]
    fn row_shift_is_removed_by_centering() {
        let panel = gaussian_panel(5, 9, 11);
        let mut shifted = panel.values().clone();
        for (i, mut row) in shifted.row_iter_mut().enumerate() {
            row.add_scalar_mut(3.0 * i as f64 - 4.0);
        }
        let a = sample_spectrum(&panel, false).unwrap();
        let b = sample_spectrum(&PanelData::new(shifted).unwrap(), false).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn spectrum_sum_is_trace_and_row_order_is_irrelevant(
                seed in 0u64..1_000, n in 2usize..9, t in 2usize..12, known in any::<bool>()
            ) {
                let panel = gaussian_panel(n, t, seed);
                let s = sample_spectrum(&panel, known).unwrap();
                let x = if known { panel.values().clone() } else { panel.row_centered() };
                let trace = x.iter().map(|v| v * v).sum::<f64>() / s.t_eff() as f64;
                prop_assert!((s.trace() - trace).abs() <= 1e-8 * trace.max(1.0));

                let reversed = DMatrix::from_fn(n, t, |i, j| panel.values()[(n - 1 - i, j)]);
                let r = sample_spectrum(&PanelData::new(reversed).unwrap(), known).unwrap();
                for (a, b) in s.values().iter().zip(r.values()) {
                    prop_assert!((a - b).abs() <= 1e-10 * s.values()[0].max(1.0));
                }
            }

            #[test]
            fn population_eigenvalues_keep_spike_multiplicities(
                n in 6usize..200, k1 in 1usize..3, k2 in 1usize..3, w in 0.05f64..0.95
            ) {
                let bulk = NoiseSpectrum::new(vec![BulkAtom::new(3.0, w), BulkAtom::new(1.0, 1.0 - w)]).unwrap();
                let spec = SpectrumSpec::new(vec![Spike::new(20.0, k1), Spike::new(8.0, k2)], bulk, 2.0).unwrap();
                let eig = spec.population_eigenvalues(n).unwrap();
                prop_assert_eq!(eig.len(), n);
                prop_assert_eq!(eig.iter().filter(|&&v| v == 40.0).count(), k1);
                prop_assert_eq!(eig.iter().filter(|&&v| v == 16.0).count(), k2);
                prop_assert!(eig.windows(2).all(|p| p[0] >= p[1]));
            }
        }
    }
}
