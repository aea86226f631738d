use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ImageDataset;
use crate::embedding::FeatureVector;
use crate::error::{Error, Result};
use crate::linalg::eigh_symmetric;

/// Principal components with frozen min-max feature scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// k rows of length d, orthonormal, by descending variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub feature_min: Vec<f64>,
    pub feature_max: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Extends `basis` with unit vectors orthogonal to it until it has `k` rows.
fn complete_basis(basis: &mut Vec<Vec<f64>>, k: usize, d: usize) {
    for e in 0..d {
        if basis.len() >= k {
            break;
        }
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        for _ in 0..2 {
            for b in basis.iter() {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
}

pub fn pca_fit(ds: &ImageDataset, k: usize) -> Result<PcaModel> {
    pca_fit_rows(ds.images(), k)
}

/// Top-`k` eigenvectors of the sample covariance (divisor n − 1).
///
/// Uses the n×n Gram matrix when there are fewer samples than pixels.
pub fn pca_fit_rows(rows: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let max = n.min(d);
    if k == 0 || k > max {
        return Err(Error::ComponentCount { k, max });
    }
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: r.len(),
        });
    }
    let mut mean = vec![0.0; d];
    for r in rows {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let total: f64 = centered.iter().map(|c| dot(c, c)).sum();
    if n < 2 || total <= 1e-20 {
        return Err(Error::Degenerate(
            "all images are identical; covariance is zero".into(),
        ));
    }
    let denom = (n - 1) as f64;

    let (values, mut components) = if n < d {
        let gram: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| dot(&centered[i], &centered[j]) / denom)
                    .collect()
            })
            .collect();
        let (vals, vecs) = eigh_symmetric(&gram);
        let floor = vals[0] * 1e-12;
        let mut comps = Vec::new();
        let mut kept = Vec::new();
        for (lambda, u) in vals.iter().zip(&vecs).take(k) {
            if *lambda <= floor {
                break;
            }
            let mut v = vec![0.0; d];
            for (ui, xi) in u.iter().zip(&centered) {
                v.iter_mut().zip(xi).for_each(|(a, b)| *a += ui * b);
            }
            let norm = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
            comps.push(v);
            kept.push(*lambda);
        }
        let have = comps.len();
        complete_basis(&mut comps, k, d);
        kept.extend(std::iter::repeat_n(0.0, comps.len() - have));
        (kept, comps)
    } else {
        let mut cov = vec![vec![0.0; d]; d];
        for c in &centered {
            for i in 0..d {
                if c[i] == 0.0 {
                    continue;
                }
                for j in i..d {
                    cov[i][j] += c[i] * c[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                cov[i][j] /= denom;
                cov[j][i] = cov[i][j];
            }
        }
        let (vals, vecs) = eigh_symmetric(&cov);
        (
            vals.into_iter().take(k).collect(),
            vecs.into_iter().take(k).collect(),
        )
    };
    for c in &mut components {
        fix_sign(c);
    }
    let explained_variance = values.into_iter().map(|v| v.max(0.0)).collect();
    let mut model = PcaModel {
        mean,
        components,
        explained_variance,
        feature_min: vec![f64::INFINITY; k],
        feature_max: vec![f64::NEG_INFINITY; k],
    };
    for r in rows {
        let p = pca_project(&model, r)?;
        for j in 0..k {
            model.feature_min[j] = model.feature_min[j].min(p[j]);
            model.feature_max[j] = model.feature_max[j].max(p[j]);
        }
    }
    Ok(model)
}

/// (image − mean)·componentsᵀ, unscaled.
pub fn pca_project(model: &PcaModel, image: &[f64]) -> Result<Vec<f64>> {
    if image.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: image.len(),
        });
    }
    let centered: Vec<f64> = image.iter().zip(&model.mean).map(|(v, m)| v - m).collect();
    Ok(model.components.iter().map(|c| dot(&centered, c)).collect())
}

/// Projection rescaled by the training min/max and clamped to [0, 1].
pub fn pca_transform(model: &PcaModel, image: &[f64]) -> Result<FeatureVector> {
    let p = pca_project(model, image)?;
    let f = p
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let range = model.feature_max[j] - model.feature_min[j];
            if range <= 1e-15 {
                log::warn!("PCA feature {j} has zero range; pinned to 0.5");
                0.5
            } else {
                (v - model.feature_min[j]) / range
            }
        })
        .collect();
    Ok(FeatureVector::clamped(f))
}

/// Undoes the rescaling and projects back to pixel space, without clamping.
pub fn pca_inverse_unclamped(model: &PcaModel, f: &FeatureVector) -> Result<Vec<f64>> {
    if f.len() != model.k() {
        return Err(Error::DimensionMismatch {
            expected: model.k(),
            actual: f.len(),
        });
    }
    let mut image = model.mean.clone();
    for (j, &v) in f.values().iter().enumerate() {
        let range = model.feature_max[j] - model.feature_min[j];
        let raw = if range <= 1e-15 {
            model.feature_min[j]
        } else {
            model.feature_min[j] + v * range
        };
        image
            .iter_mut()
            .zip(&model.components[j])
            .for_each(|(x, c)| *x += raw * c);
    }
    Ok(image)
}

pub fn pca_inverse(model: &PcaModel, f: &FeatureVector) -> Result<Vec<f64>> {
    Ok(pca_inverse_unclamped(model, f)?
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect())
}

/// Inverse PCA of k uniform [0, 1] draws scaled to unit Euclidean norm.
pub fn random_inverse_probe(model: &PcaModel, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f: Vec<f64> = (0..model.k()).map(|_| rng.gen::<f64>()).collect();
    let norm = dot(&f, &f).sqrt();
    if norm > 0.0 {
        f.iter_mut().for_each(|v| *v /= norm);
    }
    pca_inverse(model, &FeatureVector::clamped(f)).expect("feature length equals k")
}
