//! Representative skin color via k-means in CIELAB.
//!
//! Masked pixels are clustered with Lloyd's algorithm (k-means++ seeding from
//! a fixed seed). Clusters are ranked by size and accumulated largest-first
//! until they cover `coverage_threshold` of all pixels; the representative
//! color is the size-weighted mean of the accumulated centroids.
//!
//! Equal-size clusters are ordered by centroid L* (descending), then by
//! cluster index. A cluster that empties during iteration is re-seeded once at
//! the pixel farthest from its assigned centroid; if it empties again it is
//! dropped.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::color::{srgb_to_lab, Lab};
use crate::error::{Error, Result};
use crate::mask::SkinMask;
use crate::raster::ImageBuffer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToneParams {
    pub k: usize,
    pub coverage_threshold: f64,
    pub max_iterations: usize,
    /// Stop when no centroid moves farther than this (Lab units).
    pub convergence_epsilon: f64,
    pub seed: u64,
}

impl Default for ToneParams {
    fn default() -> Self {
        Self { k: 4, coverage_threshold: 0.36, max_iterations: 100, convergence_epsilon: 1e-3, seed: 42 }
    }
}

impl ToneParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if !(self.coverage_threshold > 0.0 && self.coverage_threshold <= 1.0) {
            return Err(Error::Config("coverage_threshold must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub centroid: Lab,
    pub pixel_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneEstimate {
    pub representative: Lab,
    /// Non-empty clusters, largest first.
    pub clusters: Vec<Cluster>,
    pub included_cluster_count: usize,
    pub coverage: f64,
}

fn sq_dist(a: Lab, b: Lab) -> f64 {
    let (dl, da, db) = (a.l - b.l, a.a - b.a, a.b - b.b);
    dl * dl + da * da + db * db
}

/// k-means++ initial centers. Stops early once every pixel coincides with a
/// chosen center, so fewer than `k` centers may come back.
pub fn kmeans_pp_seeds(pixels: &[Lab], k: usize, seed: u64) -> Vec<Lab> {
    if pixels.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Vec::with_capacity(k);
    centers.push(pixels[rng.random_range(0..pixels.len())]);
    let mut d2: Vec<f64> = pixels.iter().map(|&p| sq_dist(p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = pixels.len() - 1;
        for (i, &w) in d2.iter().enumerate() {
            acc += w;
            if acc > target && w > 0.0 {
                pick = i;
                break;
            }
        }
        // guard against rounding landing on a zero-weight tail
        while d2[pick] == 0.0 {
            pick -= 1;
        }
        let c = pixels[pick];
        centers.push(c);
        for (d, &p) in d2.iter_mut().zip(pixels) {
            *d = d.min(sq_dist(p, c));
        }
    }
    centers
}

/// Index of the nearest center; ties go to the lower index.
fn nearest(p: Lab, centers: &[Lab], live: &[bool]) -> usize {
    let mut best = usize::MAX;
    let mut best_d = f64::INFINITY;
    for (j, &c) in centers.iter().enumerate() {
        if !live[j] {
            continue;
        }
        let d = sq_dist(p, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn assign(pixels: &[Lab], centers: &[Lab], live: &[bool]) -> Vec<usize> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if pixels.len() >= 16_384 {
            return pixels.par_iter().map(|&p| nearest(p, centers, live)).collect();
        }
    }
    pixels.iter().map(|&p| nearest(p, centers, live)).collect()
}

/// Lloyd iterations from the given seeds. Returns final centroids and sizes;
/// dropped clusters have size 0.
pub fn lloyd(pixels: &[Lab], seeds: &[Lab], params: &ToneParams) -> Vec<Cluster> {
    let k = seeds.len();
    let mut centers = seeds.to_vec();
    let mut live = vec![true; k];
    let mut reseeded = vec![false; k];
    let mut labels = assign(pixels, &centers, &live);

    for _ in 0..params.max_iterations {
        // sequential accumulation keeps the sums bit-stable
        let mut sums = vec![[0.0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (&p, &j) in pixels.iter().zip(&labels) {
            sums[j][0] += p.l;
            sums[j][1] += p.a;
            sums[j][2] += p.b;
            counts[j] += 1;
        }

        let mut shift = 0.0f64;
        let mut reseed_happened = false;
        for j in 0..k {
            if !live[j] {
                continue;
            }
            if counts[j] == 0 {
                if reseeded[j] {
                    live[j] = false;
                    continue;
                }
                reseeded[j] = true;
                reseed_happened = true;
                let mut far = 0;
                let mut far_d = -1.0;
                for (i, (&p, &l)) in pixels.iter().zip(&labels).enumerate() {
                    let d = sq_dist(p, centers[l]);
                    if d > far_d {
                        far_d = d;
                        far = i;
                    }
                }
                centers[j] = pixels[far];
                continue;
            }
            let n = counts[j] as f64;
            let c = Lab::new(sums[j][0] / n, sums[j][1] / n, sums[j][2] / n);
            shift = shift.max(sq_dist(c, centers[j]).sqrt());
            centers[j] = c;
        }

        labels = assign(pixels, &centers, &live);
        if !reseed_happened && shift < params.convergence_epsilon {
            break;
        }
    }

    let mut counts = vec![0usize; k];
    for &j in &labels {
        counts[j] += 1;
    }
    centers.into_iter().zip(counts).map(|(centroid, pixel_count)| Cluster { centroid, pixel_count }).collect()
}

/// Ranks clusters and accumulates the largest until `threshold` coverage.
pub fn accumulate(clusters: Vec<Cluster>, total: usize, threshold: f64) -> ToneEstimate {
    let mut ranked: Vec<(usize, Cluster)> =
        clusters.into_iter().enumerate().filter(|(_, c)| c.pixel_count > 0).collect();
    ranked.sort_by(|(ia, a), (ib, b)| {
        b.pixel_count.cmp(&a.pixel_count).then(b.centroid.l.total_cmp(&a.centroid.l)).then(ia.cmp(ib))
    });
    let clusters: Vec<Cluster> = ranked.into_iter().map(|(_, c)| c).collect();

    let need = threshold * total as f64;
    let mut included = 0;
    let mut covered = 0usize;
    for c in &clusters {
        covered += c.pixel_count;
        included += 1;
        if covered as f64 >= need {
            break;
        }
    }
    let mut acc = [0.0f64; 3];
    for c in &clusters[..included] {
        let w = c.pixel_count as f64;
        acc[0] += w * c.centroid.l;
        acc[1] += w * c.centroid.a;
        acc[2] += w * c.centroid.b;
    }
    let w = covered as f64;
    ToneEstimate {
        representative: Lab::new(acc[0] / w, acc[1] / w, acc[2] / w),
        clusters,
        included_cluster_count: included,
        coverage: covered as f64 / total as f64,
    }
}

pub fn representative_tone(pixels: &[Lab], params: &ToneParams) -> Result<ToneEstimate> {
    params.validate()?;
    if pixels.is_empty() {
        return Err(Error::InsufficientPixels { found: 0, required: params.k });
    }
    if pixels.len() < params.k {
        return Err(Error::InsufficientPixels { found: pixels.len(), required: params.k });
    }
    let seeds = kmeans_pp_seeds(pixels, params.k, params.seed);
    let clusters = lloyd(pixels, &seeds, params);
    Ok(accumulate(clusters, pixels.len(), params.coverage_threshold))
}

/// Lab values of the masked pixels in row-major order.
pub fn extract_masked_pixels(img: &ImageBuffer, mask: &SkinMask) -> Result<Vec<Lab>> {
    if img.dims() != mask.dims() {
        return Err(Error::DimensionMismatch { expected: img.dims(), found: mask.dims() });
    }
    Ok(mask.indices().map(|i| srgb_to_lab(img.pixels()[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{delta_e_76, Rgb8};

    fn repeat(c: Lab, n: usize) -> Vec<Lab> {
        vec![c; n]
    }

    #[test]
    fn identical_pixels_collapse() {
        let c = Lab::new(61.0, 12.0, 18.0);
        let est = representative_tone(&repeat(c, 200), &ToneParams::default()).unwrap();
        assert_eq!(est.representative, c);
        assert_eq!(est.coverage, 1.0);
        assert_eq!(est.included_cluster_count, 1);
        assert_eq!(est.clusters.len(), 1);
    }

    #[test]
    fn dominant_cluster_alone() {
        let c1 = Lab::new(60.0, 10.0, 15.0);
        let c2 = Lab::new(40.0, 5.0, 8.0);
        let mut px = repeat(c1, 800);
        px.extend(repeat(c2, 200));
        let est = representative_tone(&px, &ToneParams::default()).unwrap();
        assert_eq!(est.included_cluster_count, 1);
        assert!(delta_e_76(est.representative, c1) <= 0.5);
        assert!((est.coverage - 0.8).abs() < 1e-12);
    }

    #[test]
    fn four_equal_groups_take_two() {
        let groups = [
            Lab::new(30.0, 5.0, 5.0),
            Lab::new(50.0, 10.0, 10.0),
            Lab::new(70.0, 15.0, 15.0),
            Lab::new(90.0, 20.0, 20.0),
        ];
        let px: Vec<Lab> = groups.iter().flat_map(|&g| repeat(g, 250)).collect();
        let est = representative_tone(&px, &ToneParams::default()).unwrap();
        assert_eq!(est.included_cluster_count, 2);
        assert_eq!(est.coverage, 0.5);
        // tie order: L* descending
        assert_eq!(est.clusters[0].centroid, groups[3]);
        assert_eq!(est.clusters[1].centroid, groups[2]);
        assert_eq!(est.representative, Lab::new(80.0, 17.5, 17.5));
    }

    #[test]
    fn errors() {
        let p = ToneParams::default();
        assert!(matches!(representative_tone(&[], &p), Err(Error::InsufficientPixels { found: 0, .. })));
        assert!(matches!(
            representative_tone(&repeat(Lab::default(), 3), &p),
            Err(Error::InsufficientPixels { found: 3, required: 4 })
        ));
        let bad = ToneParams { coverage_threshold: 0.0, ..p };
        assert!(representative_tone(&repeat(Lab::default(), 10), &bad).is_err());
    }

    #[test]
    fn deterministic() {
        let px: Vec<Lab> =
            (0..500).map(|i| Lab::new((i % 37) as f64 * 2.0, (i % 11) as f64, (i % 7) as f64 * 3.0)).collect();
        let a = representative_tone(&px, &ToneParams::default()).unwrap();
        let b = representative_tone(&px, &ToneParams::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.coverage >= 0.36);
        let sizes: Vec<usize> = a.clusters.iter().map(|c| c.pixel_count).collect();
        assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn masked_pixel_extraction() {
        let mut img = ImageBuffer::filled(4, 3, Rgb8::new(10, 20, 30)).unwrap();
        for (i, p) in img.pixels_mut().iter_mut().enumerate() {
            *p = Rgb8::new(i as u8 * 10, 0, 0);
        }
        assert!(extract_masked_pixels(&img, &SkinMask::empty(4, 3)).unwrap().is_empty());
        let full = SkinMask::from_bits(4, 3, vec![true; 12]).unwrap();
        assert_eq!(extract_masked_pixels(&img, &full).unwrap().len(), 12);

        let bits: Vec<bool> = (0..12).map(|i| (i % 4 + i / 4) % 2 == 0).collect();
        let checker = SkinMask::from_bits(4, 3, bits.clone()).unwrap();
        let got = extract_masked_pixels(&img, &checker).unwrap();
        let expected: Vec<Lab> = (0..12).filter(|&i| bits[i]).map(|i| srgb_to_lab(img.pixels()[i])).collect();
        assert_eq!(got.len(), 6);
        assert_eq!(got, expected);

        assert!(extract_masked_pixels(&img, &SkinMask::empty(3, 4)).is_err());
    }
}
