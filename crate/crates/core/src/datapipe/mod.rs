//! Image datasets, preprocessing and PCA feature extraction.

mod container;
mod formats;
mod pca;

pub use container::{read_container, write_container, CONTAINER_MAGIC, CONTAINER_VERSION};
pub use formats::{
    load_csv, load_idx, parse_csv, parse_idx, pgm_bytes, read_pgm, write_pgm, PgmFormat,
};
pub use pca::{
    pca_fit, pca_fit_rows, pca_inverse, pca_inverse_unclamped, pca_project, pca_transform,
    random_inverse_probe, PcaModel,
};

use serde::{Deserialize, Serialize};

use crate::embedding::FeatureVector;
use crate::error::{Error, Result};

/// Equal-sized grayscale images with pixels in [0, 1] and one label each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageDataset {
    width: usize,
    height: usize,
    pixels: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl ImageDataset {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<Vec<f64>>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if pixels.len() != labels.len() {
            return Err(Error::CountMismatch {
                images: pixels.len(),
                labels: labels.len(),
            });
        }
        let d = width * height;
        for img in &pixels {
            if img.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: img.len(),
                });
            }
            if let Some((index, &value)) = img
                .iter()
                .enumerate()
                .find(|(_, v)| !(0.0..=1.0).contains(*v))
            {
                return Err(Error::FeatureRange { index, value });
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn images(&self) -> &[Vec<f64>] {
        &self.pixels
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.pixels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Raw pixels as a feature vector.
    pub fn features(&self, i: usize) -> FeatureVector {
        FeatureVector::clamped(self.pixels[i].clone())
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> Vec<u8> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// First `n` images, in order.
    pub fn take(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            width: self.width,
            height: self.height,
            pixels: self.pixels[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }
}

/// The bundled 8×8 handwritten-digits corpus (1797 images, 17 gray levels).
pub fn digits() -> ImageDataset {
    parse_csv(include_str!("../../data/digits.csv"), "digits.csv")
        .expect("bundled digits corpus is valid")
}

/// Keeps images whose label is in `keep`, preserving order.
pub fn filter_classes(ds: &ImageDataset, keep: &[u8]) -> Result<ImageDataset> {
    let (pixels, labels): (Vec<_>, Vec<_>) = ds
        .pixels
        .iter()
        .zip(&ds.labels)
        .filter(|(_, l)| keep.contains(l))
        .map(|(p, &l)| (p.clone(), l))
        .unzip();
    if pixels.is_empty() {
        return Err(Error::EmptySelection(keep.to_vec()));
    }
    Ok(ImageDataset {
        width: ds.width,
        height: ds.height,
        pixels,
        labels,
    })
}

/// 2×2 mean pooling.
pub fn downsample_half(ds: &ImageDataset) -> Result<ImageDataset> {
    let (w, h) = (ds.width, ds.height);
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::OddDimensions {
            width: w,
            height: h,
        });
    }
    let (ow, oh) = (w / 2, h / 2);
    let pixels = ds
        .pixels
        .iter()
        .map(|img| {
            let mut out = vec![0.0; ow * oh];
            for r in 0..oh {
                for c in 0..ow {
                    let at = |dr: usize, dc: usize| img[(2 * r + dr) * w + 2 * c + dc];
                    out[r * ow + c] = 0.25 * (at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1));
                }
            }
            out
        })
        .collect();
    Ok(ImageDataset {
        width: ow,
        height: oh,
        pixels,
        labels: ds.labels.clone(),
    })
}

/// Pixelwise mean over one class.
pub fn class_average(ds: &ImageDataset, label: u8) -> Result<Vec<f64>> {
    let members: Vec<&Vec<f64>> = ds
        .pixels
        .iter()
        .zip(&ds.labels)
        .filter(|(_, &l)| l == label)
        .map(|(p, _)| p)
        .collect();
    if members.is_empty() {
        return Err(Error::MissingLabel(label));
    }
    let mut mean = vec![0.0; ds.n_pixels()];
    for img in &members {
        for (m, v) in mean.iter_mut().zip(img.iter()) {
            *m += v;
        }
    }
    let n = members.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Cosine similarity of two equal-length vectors; 0 if either is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> ImageDataset {
        ImageDataset::new(
            2,
            2,
            vec![
                vec![0.0, 0.0, 1.0, 1.0],
                vec![0.5; 4],
                vec![1.0; 4],
                vec![0.0; 4],
            ],
            vec![3, 6, 3, 9],
        )
        .unwrap()
    }

    #[test]
    fn dataset_invariants() {
        assert!(ImageDataset::new(1, 1, vec![vec![1.5]], vec![0]).is_err());
        assert!(ImageDataset::new(1, 1, vec![vec![0.5]], vec![]).is_err());
        assert!(ImageDataset::new(2, 1, vec![vec![0.5]], vec![0]).is_err());
    }

    #[test]
    fn filtering() {
        let ds = fixture();
        assert_eq!(filter_classes(&ds, &[3, 6, 9]).unwrap(), ds);
        assert!(matches!(
            filter_classes(&ds, &[]),
            Err(Error::EmptySelection(_))
        ));
        let three = filter_classes(&ds, &[3]).unwrap();
        assert_eq!(three.labels(), &[3, 3]);
        assert_eq!(three.image(1), &[1.0; 4]);
    }

    #[test]
    fn pooling() {
        let ds = fixture();
        let half = downsample_half(&ds).unwrap();
        assert_eq!((half.width(), half.height()), (1, 1));
        assert_eq!(half.image(0), &[0.5]);
        assert_eq!(half.image(1), &[0.5]);
        let odd = ImageDataset::new(3, 1, vec![vec![0.0; 3]], vec![0]).unwrap();
        assert!(matches!(
            downsample_half(&odd),
            Err(Error::OddDimensions { .. })
        ));
    }

    #[test]
    fn pooling_matches_direct_loop_on_28x28() {
        let img: Vec<f64> = (0..784).map(|i| ((i * 37) % 256) as f64 / 255.0).collect();
        let ds = ImageDataset::new(28, 28, vec![img.clone()], vec![0]).unwrap();
        let half = downsample_half(&ds).unwrap();
        for r in 0..14 {
            for c in 0..14 {
                let mut s = 0.0;
                for dr in 0..2 {
                    for dc in 0..2 {
                        s += img[(2 * r + dr) * 28 + 2 * c + dc];
                    }
                }
                assert!((half.image(0)[r * 14 + c] - s / 4.0).abs() < 1e-15);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(&img) - mean(half.image(0))).abs() < 1e-12);
    }

    #[test]
    fn averages() {
        let ds = fixture();
        assert_eq!(class_average(&ds, 6).unwrap(), vec![0.5; 4]);
        assert_eq!(class_average(&ds, 3).unwrap(), vec![0.5, 0.5, 1.0, 1.0]);
        assert!(matches!(class_average(&ds, 7), Err(Error::MissingLabel(7))));
    }

    #[test]
    fn bundled_digits() {
        let ds = digits();
        assert_eq!(ds.len(), 1797);
        assert_eq!((ds.width(), ds.height()), (8, 8));
        assert_eq!(filter_classes(&ds, &[3]).unwrap().len(), 183);
        assert_eq!(ds.classes(), (0..10).collect::<Vec<u8>>());
    }
}
