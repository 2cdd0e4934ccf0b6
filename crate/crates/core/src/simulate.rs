//! Data-generating processes and seeded Monte Carlo drivers.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{pc_original, pc_star_from_spectrum, Criterion};
use crate::error::{FactorError, Result};
use crate::noise::{
    sigma2_kn, sigma2_median, sigma2_mle, sigma2_passemier, sigma2_us, NoiseCorrector, NoiseMethod,
};
use crate::spectrum::{
    sample_spectrum, sorted_symmetric_eigen, FourthMomentSpec, NoiseSpectrum, PanelData,
    SpectrumSpec, Spike,
};

/// Noise level σ² of Models 1 and 2.
pub const MODEL_SIGMA2: f64 = 4.0;
/// Spikes of Models 1 and 2 as (α, multiplicity).
pub const MODEL_SPIKES: [(f64, usize); 3] = [(25.0, 1), (16.0, 2), (9.0, 1)];
const GAMMA_SHAPE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Model {
    M1,
    M2,
    M3,
    M4,
    M5,
}

impl Model {
    pub fn is_noise_model(self) -> bool {
        matches!(self, Model::M1 | Model::M2)
    }

    /// Non-spike spectrum of the idiosyncratic part, in σ² units.
    pub fn true_nonspikes(self) -> NoiseSpectrum {
        match self {
            Model::M3 => NoiseSpectrum::identity(),
            _ => NoiseSpectrum::half_and_half(),
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Population {
    Gaussian,
    Gamma,
}

impl Population {
    pub fn moments(self) -> FourthMomentSpec {
        match self {
            Population::Gaussian => FourthMomentSpec::real_gaussian(),
            Population::Gamma => FourthMomentSpec::standardized_gamma(GAMMA_SHAPE),
        }
    }
}

impl std::fmt::Display for Population {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One draw of a simulated panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub model: Model,
    pub population: Population,
    pub n: usize,
    pub t: usize,
    pub theta: f64,
    pub loading_cov_diag: Vec<f64>,
    pub seed: u64,
}

impl DgpSpec {
    pub fn new(model: Model, population: Population, n: usize, t: usize, seed: u64) -> Self {
        Self {
            model,
            population,
            n,
            t,
            theta: 3.0,
            loading_cov_diag: vec![5.0, 4.0, 4.0, 3.0],
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.t < 2 {
            return Err(FactorError::Dimension(format!(
                "panel must be at least 2x2, got {}x{}",
                self.n, self.t
            )));
        }
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(FactorError::Input(format!(
                "theta must be >= 0, got {}",
                self.theta
            )));
        }
        if self.loading_cov_diag.len() > self.n
            || self
                .loading_cov_diag
                .iter()
                .any(|a| !(a.is_finite() && *a >= 0.0))
        {
            return Err(FactorError::Input(
                "loading variances must be non-negative and at most N of them".into(),
            ));
        }
        if self.model.is_noise_model() && self.n <= 4 {
            return Err(FactorError::Dimension("Models 1-2 need N > 4".into()));
        }
        Ok(())
    }
}

/// i.i.d. standardized innovations.
pub fn draw_innovations<R: Rng + ?Sized>(
    population: Population,
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    match population {
        Population::Gaussian => DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng)),
        Population::Gamma => {
            let gamma = Gamma::new(GAMMA_SHAPE, 1.0).expect("valid gamma parameters");
            let scale = GAMMA_SHAPE.sqrt();
            DMatrix::from_fn(rows, cols, |_, _| (gamma.sample(rng) - GAMMA_SHAPE) / scale)
        }
    }
}

/// Eigenvectors of HHᵀ for a standard Gaussian n×n matrix H.
fn random_basis<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let h = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    sorted_symmetric_eigen(&h * h.transpose()).1
}

/// U·diag(√d)·Uᵀ.
fn symmetric_root(u: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut scaled = u.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= d[j].sqrt();
    }
    scaled * u.transpose()
}

/// ⌈n/2⌉ twos followed by ones.
fn half_and_half_diagonal(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i < n.div_ceil(2) { 2.0 } else { 1.0 })
        .collect()
}

/// Diagonal of D in Models 1–2: the spikes, ⌈(N−4)/2⌉ twos, then ones.
pub fn model_diagonal(n: usize) -> Vec<f64> {
    let mut d: Vec<f64> = MODEL_SPIKES
        .iter()
        .flat_map(|&(a, k)| std::iter::repeat_n(a, k))
        .collect();
    d.extend(half_and_half_diagonal(n - d.len()));
    d
}

/// Population spectrum of Models 1–2.
pub fn model_spectrum() -> SpectrumSpec {
    SpectrumSpec::new(
        MODEL_SPIKES
            .iter()
            .map(|&(a, k)| Spike::new(a, k))
            .collect(),
        NoiseSpectrum::half_and_half(),
        MODEL_SIGMA2,
    )
    .expect("model spectrum is valid")
}

/// V^{1/2} of the idiosyncratic noise in Models 3–5.
pub fn build_noise_transform<R: Rng + ?Sized>(
    model: Model,
    n: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    match model {
        Model::M3 => Ok(DMatrix::identity(n, n)),
        Model::M4 => Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            half_and_half_diagonal(n).into_iter().map(f64::sqrt),
        ))),
        Model::M5 => Ok(symmetric_root(
            &random_basis(n, rng),
            &half_and_half_diagonal(n),
        )),
        Model::M1 | Model::M2 => Err(FactorError::Input(format!(
            "{model} has no idiosyncratic noise transform"
        ))),
    }
}

/// X = diag(√eigenvalues)·ξ for an arbitrary population spectrum.
pub fn spiked_panel(
    spec: &SpectrumSpec,
    population: Population,
    n: usize,
    t: usize,
    seed: u64,
) -> Result<PanelData> {
    let d = spec.population_eigenvalues(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = draw_innovations(population, n, t, &mut rng);
    for (i, mut row) in x.row_iter_mut().enumerate() {
        row *= d[i].sqrt();
    }
    PanelData::new(x)
}

/// Draws the panel described by `spec`.
pub fn generate_panel(spec: &DgpSpec) -> Result<PanelData> {
    spec.validate()?;
    let (n, t) = (spec.n, spec.t);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let x = match spec.model {
        Model::M1 => {
            let d = model_diagonal(n);
            let mut x = draw_innovations(spec.population, n, t, &mut rng);
            for (i, mut row) in x.row_iter_mut().enumerate() {
                row *= (MODEL_SIGMA2 * d[i]).sqrt();
            }
            x
        }
        Model::M2 => {
            let u = random_basis(n, &mut rng);
            let b = symmetric_root(&u, &model_diagonal(n)) * MODEL_SIGMA2.sqrt();
            b * draw_innovations(spec.population, n, t, &mut rng)
        }
        Model::M3 | Model::M4 | Model::M5 => {
            let root = build_noise_transform(spec.model, n, &mut rng)?;
            let variances: Vec<f64> = spec
                .loading_cov_diag
                .iter()
                .copied()
                .filter(|a| *a > 0.0)
                .collect();
            let k = variances.len();
            let lambda = DMatrix::from_fn(n, k, |_, j| {
                let z: f64 = StandardNormal.sample(&mut rng);
                variances[j].sqrt() * z
            });
            let f = draw_innovations(spec.population, k, t, &mut rng);
            let e = root * draw_innovations(spec.population, n, t, &mut rng);
            lambda * f + e * spec.theta.sqrt()
        }
    };
    PanelData::new(x)
}

/// Mean, spread and accuracy of one method over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    /// log₁₀ of the mean absolute error against the truth, when one exists.
    pub log10_mae: Option<f64>,
    pub failures: usize,
}

fn summarize(values: &[Option<f64>], truth: Option<f64>) -> MethodSummary {
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    let k = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / k;
    let sd = if ok.len() > 1 {
        (ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    MethodSummary {
        mean,
        sd,
        se: sd / k.sqrt(),
        log10_mae: truth.map(|x| (ok.iter().map(|v| (v - x).abs()).sum::<f64>() / k).log10()),
        failures: values.len() - ok.len(),
    }
}

/// Per-replication values and their summary for one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub model: Model,
    pub population: Population,
    pub n: usize,
    pub t: usize,
    /// Per method, one entry per replication; `None` marks a failure.
    pub estimates: BTreeMap<String, Vec<Option<f64>>>,
    pub summary: BTreeMap<String, MethodSummary>,
    pub replications: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Settings of the noise-estimator study on Models 1–2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudyConfig {
    pub model: Model,
    pub population: Population,
    pub c: f64,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    pub mean_known: bool,
}

impl NoiseStudyConfig {
    pub fn new(model: Model, population: Population, c: f64, n_grid: Vec<usize>) -> Self {
        Self {
            model,
            population,
            c,
            n_grid,
            replications: 200,
            base_seed: 0,
            mean_known: true,
        }
    }

    /// N grid of the study at ratio `c`.
    pub fn paper_grid(c: f64) -> Vec<usize> {
        if c > 1.0 {
            (0..8).map(|k| 90 + 60 * k).collect()
        } else {
            (1..=8).map(|k| 50 * k).collect()
        }
    }
}

fn check_replications(replications: usize) -> Result<()> {
    if replications == 0 {
        return Err(FactorError::Input("replications must be at least 1".into()));
    }
    Ok(())
}

/// Runs all six noise estimators with m = 4 known, per grid point.
pub fn run_noise_study(config: &NoiseStudyConfig) -> Result<Vec<ReplicationResult>> {
    check_replications(config.replications)?;
    if !config.model.is_noise_model() {
        return Err(FactorError::Input(format!(
            "noise study needs Model 1 or 2, got {}",
            config.model
        )));
    }
    let m = MODEL_SPIKES.iter().map(|s| s.1).sum::<usize>();
    let nonspikes = NoiseSpectrum::half_and_half();
    let moments = config.population.moments();
    config
        .n_grid
        .iter()
        .map(|&n| {
            let start = Instant::now();
            let t = (n as f64 / config.c).round() as usize;
            let t_eff = if config.mean_known { t } else { t - 1 };
            let corrector = NoiseCorrector::new(n as f64 / t_eff as f64, &nonspikes, moments)?;
            let rows: Vec<[Option<f64>; 6]> = (0..config.replications)
                .into_par_iter()
                .map(|r| -> Result<[Option<f64>; 6]> {
                    let spec = DgpSpec::new(
                        config.model,
                        config.population,
                        n,
                        t,
                        config.base_seed.wrapping_add(r as u64),
                    );
                    let panel = generate_panel(&spec)?;
                    let spectrum = sample_spectrum(&panel, config.mean_known)?;
                    Ok([
                        sigma2_mle(&spectrum, m, &nonspikes).ok().map(|e| e.value),
                        corrector.estimate(&spectrum, m).ok().map(|e| e.value),
                        sigma2_passemier(&spectrum, m).ok().map(|e| e.value),
                        sigma2_kn(&spectrum, m).ok().map(|e| e.value),
                        sigma2_us(&spectrum, m).ok().map(|e| e.value),
                        sigma2_median(&panel).ok().map(|e| e.value),
                    ])
                })
                .collect::<Result<_>>()?;
            let mut estimates = BTreeMap::new();
            let mut summary = BTreeMap::new();
            for (k, method) in NoiseMethod::ALL.iter().enumerate() {
                let column: Vec<Option<f64>> = rows.iter().map(|row| row[k]).collect();
                summary.insert(
                    method.label().to_string(),
                    summarize(&column, Some(MODEL_SIGMA2)),
                );
                estimates.insert(method.label().to_string(), column);
            }
            Ok(ReplicationResult {
                model: config.model,
                population: config.population,
                n,
                t,
                estimates,
                summary,
                replications: config.replications,
                elapsed: start.elapsed(),
            })
        })
        .collect()
}

/// Settings of the factor-count study on Models 3–5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountStudyConfig {
    pub model: Model,
    pub population: Population,
    pub grid: Vec<(usize, usize)>,
    pub m0: usize,
    pub replications: usize,
    pub base_seed: u64,
    /// Non-spike spectrum handed to PC*; defaults to the model's own.
    pub nonspikes: Option<NoiseSpectrum>,
}

impl CountStudyConfig {
    pub fn new(model: Model, population: Population, grid: Vec<(usize, usize)>) -> Self {
        Self {
            model,
            population,
            grid,
            m0: 8,
            replications: 200,
            base_seed: 0,
            nonspikes: None,
        }
    }

    /// (N, T) grid of the factor-count tables.
    pub fn paper_grid() -> Vec<(usize, usize)> {
        vec![
            (100, 40),
            (100, 60),
            (200, 60),
            (500, 60),
            (1000, 60),
            (2000, 60),
            (100, 100),
            (200, 100),
            (500, 100),
            (1000, 100),
            (2000, 100),
            (40, 100),
            (60, 100),
            (60, 200),
            (60, 500),
            (60, 1000),
            (60, 2000),
            (4000, 60),
            (4000, 100),
            (8000, 60),
            (8000, 100),
            (10, 50),
            (10, 100),
            (20, 100),
        ]
    }
}

/// m̂ under PC_p1..3 and PC*_p1..3 per replication, per grid cell.
pub fn run_count_study(config: &CountStudyConfig) -> Result<Vec<ReplicationResult>> {
    check_replications(config.replications)?;
    if config.model.is_noise_model() {
        return Err(FactorError::Input(format!(
            "count study needs Model 3, 4 or 5, got {}",
            config.model
        )));
    }
    let nonspikes = config
        .nonspikes
        .clone()
        .unwrap_or_else(|| config.model.true_nonspikes());
    let moments = config.population.moments();
    config
        .grid
        .iter()
        .map(|&(n, t)| {
            let start = Instant::now();
            let corrector = NoiseCorrector::new(n as f64 / (t - 1) as f64, &nonspikes, moments)?;
            let rows: Vec<[Option<f64>; 6]> = (0..config.replications)
                .into_par_iter()
                .map(|r| -> Result<[Option<f64>; 6]> {
                    let spec = DgpSpec::new(
                        config.model,
                        config.population,
                        n,
                        t,
                        config.base_seed.wrapping_add(r as u64),
                    );
                    let panel = generate_panel(&spec)?;
                    let original = pc_original(&panel, config.m0)?;
                    let spectrum = sample_spectrum(&panel, false)?;
                    let star = pc_star_from_spectrum(&spectrum, config.m0, &corrector, t);
                    let mut row = [None; 6];
                    for (k, report) in original.iter().enumerate() {
                        row[k] = Some(report.m_hat as f64);
                    }
                    if let Ok(star) = star {
                        for (k, report) in star.iter().enumerate() {
                            row[3 + k] = Some(report.m_hat as f64);
                        }
                    }
                    Ok(row)
                })
                .collect::<Result<_>>()?;
            let mut estimates = BTreeMap::new();
            let mut summary = BTreeMap::new();
            for (k, criterion) in Criterion::ALL.iter().enumerate() {
                let column: Vec<Option<f64>> = rows.iter().map(|row| row[k]).collect();
                summary.insert(criterion.label().to_string(), summarize(&column, Some(4.0)));
                estimates.insert(criterion.label().to_string(), column);
            }
            Ok(ReplicationResult {
                model: config.model,
                population: config.population,
                n,
                t,
                estimates,
                summary,
                replications: config.replications,
                elapsed: start.elapsed(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::symmetric_eigenvalues;

    #[test]
    fn gamma_innovations_are_standardized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = draw_innovations(Population::Gamma, 400, 500, &mut rng);
        let k = (400 * 500) as f64;
        let mean = x.sum() / k;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
        let fourth = x.iter().map(|v| v.powi(4)).sum::<f64>() / k;
        assert!(mean.abs() < 4.0 / k.sqrt());
        assert!((var - 1.0).abs() < 4.0 / k.sqrt() * 3.0);
        assert!((fourth - 6.0).abs() < 0.3, "fourth moment {fourth}");
        assert_eq!(Population::Gamma.moments().beta, 3.0);
    }

    #[test]
    fn seeded_draws_are_identical() {
        let spec = DgpSpec::new(Model::M5, Population::Gamma, 12, 9, 42);
        assert_eq!(
            generate_panel(&spec).unwrap().values(),
            generate_panel(&spec).unwrap().values()
        );
    }

    #[test]
    fn noise_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            build_noise_transform(Model::M3, 4, &mut rng).unwrap(),
            DMatrix::identity(4, 4)
        );
        let m4 = build_noise_transform(Model::M4, 4, &mut rng).unwrap();
        let expected = [2f64.sqrt(), 2f64.sqrt(), 1.0, 1.0];
        for i in 0..4 {
            assert_eq!(m4[(i, i)], expected[i]);
        }
        let m5 = build_noise_transform(Model::M5, 7, &mut rng).unwrap();
        let mut eig: Vec<f64> = symmetric_eigenvalues(&m5 * m5.transpose())
            .iter()
            .copied()
            .collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let target = [2.0, 2.0, 2.0, 2.0, 1.0, 1.0, 1.0];
        for (a, b) in eig.iter().zip(target) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn model_one_matches_the_population_spectrum() {
        let d: Vec<f64> = model_diagonal(10)
            .iter()
            .map(|v| v * MODEL_SIGMA2)
            .collect();
        assert_eq!(d, model_spectrum().population_eigenvalues(10).unwrap());
        assert_eq!(
            d,
            vec![100.0, 64.0, 64.0, 36.0, 8.0, 8.0, 8.0, 4.0, 4.0, 4.0]
        );
    }

    #[test]
    fn noiseless_factor_panel_has_rank_four() {
        let mut spec = DgpSpec::new(Model::M3, Population::Gaussian, 12, 15, 1);
        spec.theta = 0.0;
        let x = generate_panel(&spec).unwrap();
        let x = x.values();
        let eig = symmetric_eigenvalues(x * x.transpose());
        let top = eig.iter().copied().fold(0.0, f64::max);
        let significant = eig.iter().filter(|v| **v > 1e-9 * top).count();
        assert_eq!(significant, 4);
    }

    #[test]
    fn factor_spikes_dominate() {
        let spec = DgpSpec::new(Model::M3, Population::Gaussian, 300, 200, 5);
        let panel = generate_panel(&spec).unwrap();
        let spectrum = sample_spectrum(&panel, false).unwrap();
        let l = spectrum.values();
        assert!(l[3] > 3.0 * l[4]);
    }

    #[test]
    fn single_replication_mae_is_the_absolute_error() {
        let mut config = NoiseStudyConfig::new(Model::M1, Population::Gaussian, 0.5, vec![50]);
        config.replications = 1;
        config.base_seed = 9;
        let cell = &run_noise_study(&config).unwrap()[0];
        for (method, values) in &cell.estimates {
            let v = values[0].unwrap();
            let s = &cell.summary[method];
            assert!((s.log10_mae.unwrap() - (v - 4.0).abs().log10()).abs() < 1e-12);
        }
    }

    #[test]
    fn studies_do_not_depend_on_thread_count() {
        let mut config =
            CountStudyConfig::new(Model::M4, Population::Gamma, vec![(20, 30), (30, 20)]);
        config.replications = 6;
        config.base_seed = 77;
        let pooled = run_count_study(&config).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_count_study(&config).unwrap());
        for (a, b) in pooled.iter().zip(&single) {
            assert_eq!(a.estimates, b.estimates);
            assert_eq!(a.summary, b.summary);
        }
    }
}
