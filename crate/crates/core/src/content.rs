//! Content catalog, Zipf popularity, and cluster cache selection.

use std::collections::BTreeSet;

use rand::seq::index::sample;

use crate::error::{param, Result};
use crate::rng::{stream, Domain};

/// `P_l = l^{-s} / Σ_k k^{-s}` for `l = 1..=count`.
pub fn zipf_popularity(count: usize, exponent: f64) -> Result<Vec<f64>> {
    if count == 0 {
        return param("catalog must contain at least one object");
    }
    if !(exponent >= 0.0 && exponent.is_finite()) {
        return param(format!("zipf exponent must be >= 0, got {exponent}"));
    }
    let raw: Vec<f64> = (1..=count).map(|l| (l as f64).powf(-exponent)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// `L` equal-size objects with a non-increasing popularity vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentCatalog {
    object_size_bits: f64,
    zipf_exponent: Option<f64>,
    popularity: Vec<f64>,
}

impl ContentCatalog {
    pub fn zipf(count: usize, exponent: f64, object_size_bits: f64) -> Result<Self> {
        check_size(object_size_bits)?;
        Ok(ContentCatalog {
            object_size_bits,
            zipf_exponent: Some(exponent),
            popularity: zipf_popularity(count, exponent)?,
        })
    }

    /// Catalog with an explicit popularity vector. The vector must be
    /// positive, normalized within 1e-12, and sorted most-popular first.
    pub fn explicit(popularity: Vec<f64>, object_size_bits: f64) -> Result<Self> {
        check_size(object_size_bits)?;
        if popularity.is_empty() {
            return param("catalog must contain at least one object");
        }
        if popularity.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return param("popularities must be > 0");
        }
        let total: f64 = popularity.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return param(format!("popularities sum to {total}, expected 1"));
        }
        if popularity.windows(2).any(|w| w[1] > w[0]) {
            return param("popularities must be non-increasing (index 1 most popular)");
        }
        Ok(ContentCatalog {
            object_size_bits,
            zipf_exponent: None,
            popularity,
        })
    }

    /// Same as [`ContentCatalog::zipf`] but takes one size per object;
    /// heterogeneous sizes are rejected.
    pub fn zipf_with_sizes(exponent: f64, sizes: &[f64]) -> Result<Self> {
        let first = *sizes
            .first()
            .ok_or_else(|| crate::Error::Parameter("empty size list".into()))?;
        if sizes.iter().any(|&s| s != first) {
            return param("all content objects must have the same size");
        }
        Self::zipf(sizes.len(), exponent, first)
    }

    pub fn count(&self) -> usize {
        self.popularity.len()
    }

    pub fn object_size_bits(&self) -> f64 {
        self.object_size_bits
    }

    pub fn zipf_exponent(&self) -> Option<f64> {
        self.zipf_exponent
    }

    pub fn popularity(&self) -> &[f64] {
        &self.popularity
    }
}

fn check_size(bits: f64) -> Result<()> {
    if !(bits > 0.0 && bits.is_finite()) {
        return param(format!("object size must be > 0 bits, got {bits}"));
    }
    Ok(())
}

/// Which objects the cluster cache holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CachePolicy {
    #[default]
    TopK,
    RandomK,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCache {
    stored: BTreeSet<usize>,
    storage_power_per_object: f64,
}

impl ClusterCache {
    pub fn new(stored: impl IntoIterator<Item = usize>, storage_power_per_object: f64) -> Self {
        ClusterCache {
            stored: stored.into_iter().collect(),
            storage_power_per_object,
        }
    }

    pub fn empty() -> Self {
        Self::new([], 0.0)
    }

    pub fn contains(&self, content: usize) -> bool {
        self.stored.contains(&content)
    }

    pub fn stored(&self) -> &BTreeSet<usize> {
        &self.stored
    }

    pub fn size(&self) -> usize {
        self.stored.len()
    }

    pub fn storage_power_per_object(&self) -> f64 {
        self.storage_power_per_object
    }

    pub fn with_storage_power(mut self, watts: f64) -> Self {
        self.storage_power_per_object = watts;
        self
    }
}

/// Cache the `k` most popular objects (lower index on ties).
pub fn select_top_k(catalog: &ContentCatalog, k: usize) -> Result<ClusterCache> {
    if k > catalog.count() {
        return param(format!(
            "cache size {k} exceeds catalog size {}",
            catalog.count()
        ));
    }
    let mut order: Vec<usize> = (0..catalog.count()).collect();
    let p = catalog.popularity();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    Ok(ClusterCache::new(order.into_iter().take(k), 0.0))
}

/// Cache `k` objects drawn uniformly without replacement.
pub fn select_random_k(catalog: &ContentCatalog, k: usize, seed: u64) -> Result<ClusterCache> {
    if k > catalog.count() {
        return param(format!(
            "cache size {k} exceeds catalog size {}",
            catalog.count()
        ));
    }
    let mut rng = stream(seed, Domain::CacheSelection, 0);
    Ok(ClusterCache::new(
        sample(&mut rng, catalog.count(), k).into_iter(),
        0.0,
    ))
}

pub fn select_cache(
    catalog: &ContentCatalog,
    k: usize,
    policy: CachePolicy,
    seed: u64,
) -> Result<ClusterCache> {
    match policy {
        CachePolicy::TopK => select_top_k(catalog, k),
        CachePolicy::RandomK => select_random_k(catalog, k, seed),
    }
}

/// `P_hit = Σ_{l ∈ cache} P_l`.
pub fn hit_ratio(cache: &ClusterCache, catalog: &ContentCatalog) -> Result<f64> {
    if let Some(&bad) = cache.stored.iter().find(|&&l| l >= catalog.count()) {
        return param(format!(
            "cached index {} outside catalog of {}",
            bad + 1,
            catalog.count()
        ));
    }
    let p = catalog.popularity();
    Ok(cache.stored.iter().map(|&l| p[l]).sum::<f64>().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zipf_shapes() {
        assert_eq!(zipf_popularity(5, 0.0).unwrap(), vec![0.2; 5]);
        assert_eq!(zipf_popularity(1, 3.0).unwrap(), vec![1.0]);
        assert!(zipf_popularity(0, 1.0).is_err());
        // harmonic number H_5 = 137/60
        let p = zipf_popularity(5, 1.0).unwrap();
        for (got, want) in p.iter().zip([0.43796, 0.21898, 0.14599, 0.10949, 0.08759]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-5);
        }
    }

    #[test]
    fn hit_ratio_edges() {
        let c = ContentCatalog::zipf(5, 1.0, 1e6).unwrap();
        assert_eq!(hit_ratio(&ClusterCache::empty(), &c).unwrap(), 0.0);
        assert_abs_diff_eq!(
            hit_ratio(&select_top_k(&c, 5).unwrap(), &c).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let top2 = select_top_k(&c, 2).unwrap();
        assert_eq!(
            top2.stored().iter().copied().collect::<Vec<_>>(),
            vec![0, 1]
        );
        assert_abs_diff_eq!(hit_ratio(&top2, &c).unwrap(), 0.65693, epsilon = 1e-5);
        assert!(hit_ratio(&ClusterCache::new([7], 0.0), &c).is_err());
    }

    #[test]
    fn top_k_bounds() {
        let c = ContentCatalog::zipf(4, 0.5, 1e6).unwrap();
        assert_eq!(select_top_k(&c, 0).unwrap().size(), 0);
        assert_eq!(select_top_k(&c, 4).unwrap().size(), 4);
        assert!(select_top_k(&c, 5).is_err());
        let r = select_random_k(&c, 2, 9).unwrap();
        assert_eq!(r, select_random_k(&c, 2, 9).unwrap());
        assert_eq!(r.size(), 2);
    }

    #[test]
    fn top_k_beats_every_other_subset() {
        for l in 1..=10usize {
            let c = ContentCatalog::zipf(l, 0.8, 1e6).unwrap();
            for k in 0..=l {
                let best = hit_ratio(&select_top_k(&c, k).unwrap(), &c).unwrap();
                for mask in 0u32..(1 << l) {
                    if mask.count_ones() as usize != k {
                        continue;
                    }
                    let cache = ClusterCache::new((0..l).filter(|i| mask >> i & 1 == 1), 0.0);
                    assert!(hit_ratio(&cache, &c).unwrap() <= best + 1e-15);
                }
            }
        }
    }

    #[test]
    fn skew_raises_hit_ratio() {
        let mut last = 0.0;
        for s in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let c = ContentCatalog::zipf(8, s, 1e6).unwrap();
            let h = hit_ratio(&select_top_k(&c, 3).unwrap(), &c).unwrap();
            assert!(h >= last);
            last = h;
        }
    }

    #[test]
    fn explicit_catalog_checks() {
        assert!(ContentCatalog::explicit(vec![0.5, 0.5], 1e6).is_ok());
        assert!(ContentCatalog::explicit(vec![0.3, 0.7], 1e6).is_err());
        assert!(ContentCatalog::explicit(vec![0.5, 0.4], 1e6).is_err());
        assert!(ContentCatalog::zipf_with_sizes(1.0, &[1e6, 2e6]).is_err());
        assert_eq!(
            ContentCatalog::zipf_with_sizes(1.0, &[1e6, 1e6])
                .unwrap()
                .count(),
            2
        );
    }
}
