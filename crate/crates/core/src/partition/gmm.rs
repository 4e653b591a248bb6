use std::f64::consts::PI;

use super::kmeans::{kmeans_fit, plus_plus_init, KMeansConfig};
use super::{Partition, PartitionError};
use crate::data::Dataset;
use crate::density::log_sum_exp;
use crate::mix_seed;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmConfig {
    pub max_iter: usize,
    /// Stop when the mean log-likelihood per point improves by less than this.
    pub tol: f64,
    /// Added to every covariance diagonal.
    pub reg: f64,
    /// Attempts with fresh seeds after a singular or collapsed fit.
    pub max_restarts: usize,
    /// Extra EM runs started from k-means++ seeds alone (no Lloyd refinement);
    /// the run with the highest likelihood wins.
    pub extra_inits: usize,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
            reg: 1e-6,
            max_restarts: 5,
            extra_inits: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmmFit {
    pub labels: Vec<usize>,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<f64>>,
    /// Mean log-likelihood per point at convergence.
    pub log_likelihood: f64,
}

/// Lower-triangular Cholesky factor of a row-major `d x d` matrix.
fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

struct Component {
    log_weight: f64,
    mean: Vec<f64>,
    chol: Vec<f64>,
    log_det: f64,
}

impl Component {
    fn new(weight: f64, mean: Vec<f64>, cov: &[f64], d: usize) -> Option<Self> {
        let chol = cholesky(cov, d)?;
        let log_det = 2.0 * (0..d).map(|i| chol[i * d + i].ln()).sum::<f64>();
        Some(Self {
            log_weight: weight.ln(),
            mean,
            chol,
            log_det,
        })
    }

    fn log_pdf(&self, x: &[f64], buf: &mut [f64]) -> f64 {
        let d = self.mean.len();
        // forward substitution L z = x - mean
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for (k, z) in buf[..i].iter().enumerate() {
                s -= self.chol[i * d + k] * z;
            }
            buf[i] = s / self.chol[i * d + i];
        }
        let maha: f64 = buf[..d].iter().map(|z| z * z).sum();
        -0.5 * (d as f64 * (2.0 * PI).ln() + self.log_det + maha)
    }
}

/// Mixture weights, means and row-major covariances.
type Components = (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Weights, means and regularized covariances from soft (or hard) responsibilities.
fn m_step(data: &Dataset, resp: &[Vec<f64>], reg: f64) -> Option<Components> {
    let n = data.len();
    let d = data.dim();
    let k = resp[0].len();
    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut covs = Vec::with_capacity(k);
    for j in 0..k {
        let nk: f64 = resp.iter().map(|r| r[j]).sum();
        if !(nk > 1e-10) {
            return None;
        }
        let mut mean = vec![0.0; d];
        for (p, r) in data.points().zip(resp) {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += r[j] * v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= nk);
        let mut cov = vec![0.0; d * d];
        for (p, r) in data.points().zip(resp) {
            for a in 0..d {
                let da = p[a] - mean[a];
                for b in 0..=a {
                    cov[a * d + b] += r[j] * da * (p[b] - mean[b]);
                }
            }
        }
        for a in 0..d {
            for b in 0..=a {
                cov[a * d + b] /= nk;
                cov[b * d + a] = cov[a * d + b];
            }
            cov[a * d + a] += reg;
        }
        weights.push(nk / n as f64);
        means.push(mean);
        covs.push(cov);
    }
    Some((weights, means, covs))
}

fn one_hot(labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    labels
        .iter()
        .map(|&l| {
            let mut r = vec![0.0; k];
            r[l] = 1.0;
            r
        })
        .collect()
}

/// Runs EM from initial responsibilities. `None` on a singular or collapsed component.
fn run_em(data: &Dataset, mut resp: Vec<Vec<f64>>, config: &GmmConfig) -> Option<GmmFit> {
    let n = data.len();
    let d = data.dim();
    let k = resp[0].len();
    let mut buf = vec![0.0; d];
    let mut prev = f64::NEG_INFINITY;
    let mut params = m_step(data, &resp, config.reg)?;
    let mut ll = f64::NEG_INFINITY;
    for _ in 0..config.max_iter {
        let (weights, means, covs) = &params;
        let comps: Vec<Component> = (0..k)
            .map(|j| Component::new(weights[j], means[j].clone(), &covs[j], d))
            .collect::<Option<_>>()?;
        let mut total = 0.0;
        for (p, r) in data.points().zip(resp.iter_mut()) {
            for (rj, c) in r.iter_mut().zip(&comps) {
                *rj = c.log_weight + c.log_pdf(p, &mut buf);
            }
            let lse = log_sum_exp(r.iter().copied());
            total += lse;
            r.iter_mut().for_each(|v| *v = (*v - lse).exp());
        }
        ll = total / n as f64;
        if !ll.is_finite() {
            return None;
        }
        params = m_step(data, &resp, config.reg)?;
        if (ll - prev).abs() < config.tol {
            break;
        }
        prev = ll;
    }
    let labels = resp
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc },
                )
                .0
        })
        .collect();
    let (weights, means, covariances) = params;
    Some(GmmFit {
        labels,
        weights,
        means,
        covariances,
        log_likelihood: ll,
    })
}

fn nearest_labels(data: &Dataset, centers: &[Vec<f64>]) -> Vec<usize> {
    data.points()
        .map(|p| {
            centers
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (j, c)| {
                    let dd = super::sq_dist(p, c);
                    if dd < acc.1 {
                        (j, dd)
                    } else {
                        acc
                    }
                })
                .0
        })
        .collect()
}

/// Full-covariance Gaussian mixture fitted by EM, initialized from k-means.
pub fn gmm_fit(data: &Dataset, k: usize, seed: u64, config: GmmConfig) -> Result<GmmFit, PartitionError> {
    let n = data.len();
    if k == 0 || k > n {
        return Err(PartitionError::BadClusterCount { k, n });
    }
    for attempt in 0..=config.max_restarts {
        let attempt_seed = mix_seed(seed, attempt as u64);
        let km = kmeans_fit(data, k, attempt_seed, KMeansConfig::default())?;
        let mut best = run_em(data, one_hot(&km.labels, k), &config);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(attempt_seed, 0x5eed));
        for _ in 0..config.extra_inits {
            let centers = plus_plus_init(data, k, &mut rng);
            let start = nearest_labels(data, &centers);
            if let Some(fit) = run_em(data, one_hot(&start, k), &config) {
                if best.as_ref().is_none_or(|b| fit.log_likelihood > b.log_likelihood) {
                    best = Some(fit);
                }
            }
        }
        if let Some(fit) = best {
            return Ok(fit);
        }
        log::debug!("gmm k={k}: singular fit on attempt {attempt}, restarting");
    }
    Err(PartitionError::Singular(config.max_restarts))
}

pub fn gmm_em(data: &Dataset, k: usize, seed: u64) -> Result<Partition, PartitionError> {
    let fit = gmm_fit(data, k, seed, GmmConfig::default())?;
    Partition::new(&fit.labels, format!("gmm_k{k}"))
}
