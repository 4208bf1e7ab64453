//! Planar Poisson point processes on a disk window.
//!
//! Content indices are zero-based in memory (`0` is the most popular
//! object); the text serialization writes them one-based.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{param, Error, Result};
use crate::numeric::fmt9;
use crate::rng::{stream, Domain, StreamRng};

/// Default simulation window radius in meters.
pub const DEFAULT_SIM_RADIUS: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialPoint {
    pub x: f64,
    pub y: f64,
}

impl SpatialPoint {
    pub fn new(x: f64, y: f64) -> Self {
        SpatialPoint { x, y }
    }

    pub const ORIGIN: SpatialPoint = SpatialPoint { x: 0.0, y: 0.0 };

    pub fn distance(&self, other: &SpatialPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// RRH, user, and per-content RRH densities (points per m²).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityConfig {
    lambda_rrh: f64,
    lambda_user: f64,
    lambda_split: Vec<f64>,
}

impl DensityConfig {
    /// Builds a density bundle. `split` is rescaled so that it sums to
    /// `lambda_rrh`; the last entry absorbs the rounding residue.
    pub fn new(lambda_rrh: f64, lambda_user: f64, split: &[f64]) -> Result<Self> {
        if !(lambda_rrh > 0.0 && lambda_rrh.is_finite()) {
            return param(format!("lambda_rrh must be > 0, got {lambda_rrh}"));
        }
        if !(lambda_user > 0.0 && lambda_user.is_finite()) {
            return param(format!("lambda_user must be > 0, got {lambda_user}"));
        }
        if split.is_empty() {
            return param("lambda_split must name at least one content");
        }
        if split.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return param("every per-content density must be > 0");
        }
        let total: f64 = split.iter().sum();
        let mut scaled: Vec<f64> = split.iter().map(|l| l / total * lambda_rrh).collect();
        let head: f64 = scaled[..scaled.len() - 1].iter().sum();
        let last = scaled.len() - 1;
        scaled[last] = lambda_rrh - head;
        if scaled[last] <= 0.0 {
            return param("per-content density split degenerated after normalization");
        }
        Ok(DensityConfig {
            lambda_rrh,
            lambda_user,
            lambda_split: scaled,
        })
    }

    /// Popularity-proportional split `λ_l = P_l λ_R`.
    pub fn proportional(lambda_rrh: f64, lambda_user: f64, popularity: &[f64]) -> Result<Self> {
        Self::new(lambda_rrh, lambda_user, popularity)
    }

    pub fn lambda_rrh(&self) -> f64 {
        self.lambda_rrh
    }

    pub fn lambda_user(&self) -> f64 {
        self.lambda_user
    }

    pub fn lambda_split(&self) -> &[f64] {
        &self.lambda_split
    }

    /// Thinning probabilities `λ_l / λ_R`.
    pub fn thinning_probabilities(&self) -> Vec<f64> {
        self.lambda_split
            .iter()
            .map(|l| l / self.lambda_rrh)
            .collect()
    }
}

/// Draw a homogeneous PPP of intensity `lambda` on the disk of `radius`
/// centered at the origin.
pub fn sample_ppp(lambda: f64, radius: f64, seed: u64) -> Result<Vec<SpatialPoint>> {
    let mut rng = stream(seed, Domain::Generic, 0);
    sample_ppp_with(lambda, radius, &mut rng)
}

pub(crate) fn sample_ppp_with(
    lambda: f64,
    radius: f64,
    rng: &mut StreamRng,
) -> Result<Vec<SpatialPoint>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return param(format!("PPP density must be > 0, got {lambda}"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return param(format!("PPP window radius must be > 0, got {radius}"));
    }
    let mean = lambda * std::f64::consts::PI * radius * radius;
    let n = Poisson::new(mean)
        .map_err(|e| Error::Parameter(format!("poisson mean {mean}: {e}")))?
        .sample(rng) as usize;
    Ok((0..n).map(|_| uniform_in_disk(radius, rng)).collect())
}

pub(crate) fn uniform_in_disk<R: Rng>(radius: f64, rng: &mut R) -> SpatialPoint {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    SpatialPoint::new(r * phi.cos(), r * phi.sin())
}

/// Uniform on the annulus `inner <= |p| <= outer`.
pub(crate) fn uniform_in_annulus<R: Rng>(inner: f64, outer: f64, rng: &mut R) -> SpatialPoint {
    let (a2, b2) = (inner * inner, outer * outer);
    let r = (a2 + (b2 - a2) * rng.random::<f64>()).sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    SpatialPoint::new(r * phi.cos(), r * phi.sin())
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return param("probability vector is empty");
    }
    if p.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return param("probabilities must be finite and non-negative");
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return param(format!("probabilities sum to {total}, expected 1"));
    }
    Ok(())
}

/// Independent thinning: each point gets content `l` with probability `p[l]`.
pub fn thin_by_content(
    points: &[SpatialPoint],
    popularity: &[f64],
    seed: u64,
) -> Result<Vec<usize>> {
    let mut rng = stream(seed, Domain::Thinning, 0);
    thin_with(points.len(), popularity, &mut rng)
}

pub(crate) fn thin_with(count: usize, p: &[f64], rng: &mut StreamRng) -> Result<Vec<usize>> {
    check_probabilities(p)?;
    Ok((0..count).map(|_| draw_categorical(p, rng)).collect())
}

pub(crate) fn draw_categorical<R: Rng>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // u fell into the rounding gap above the cumulative sum
    p.iter().rposition(|&x| x > 0.0).unwrap_or(0)
}

/// Sampled RRH and user patterns inside the cluster disk.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub cluster_radius: f64,
    pub rrh_points: Vec<SpatialPoint>,
    pub rrh_content: Vec<usize>,
    pub user_points: Vec<SpatialPoint>,
    pub user_marks: Vec<usize>,
    pub rng_seed: u64,
    pub densities: DensityConfig,
}

impl NetworkRealization {
    /// Sample RRHs (thinned by the density split) and users (marked by
    /// `popularity`) on the disk of `radius`.
    pub fn generate(
        densities: &DensityConfig,
        popularity: &[f64],
        radius: f64,
        seed: u64,
    ) -> Result<Self> {
        if popularity.len() != densities.lambda_split().len() {
            return param(format!(
                "popularity has {} entries but density split has {}",
                popularity.len(),
                densities.lambda_split().len()
            ));
        }
        let rrh_points = sample_ppp_with(
            densities.lambda_rrh(),
            radius,
            &mut stream(seed, Domain::RrhPoints, 0),
        )?;
        let rrh_content = thin_with(
            rrh_points.len(),
            &densities.thinning_probabilities(),
            &mut stream(seed, Domain::Thinning, 0),
        )?;
        let user_points = sample_ppp_with(
            densities.lambda_user(),
            radius,
            &mut stream(seed, Domain::UserPoints, 0),
        )?;
        let user_marks = thin_with(
            user_points.len(),
            popularity,
            &mut stream(seed, Domain::UserMarks, 0),
        )?;
        Ok(NetworkRealization {
            cluster_radius: radius,
            rrh_points,
            rrh_content,
            user_points,
            user_marks,
            rng_seed: seed,
            densities: densities.clone(),
        })
    }

    pub fn content_count(&self) -> usize {
        self.densities.lambda_split().len()
    }

    pub fn rrhs_serving(&self, content: usize) -> impl Iterator<Item = usize> + '_ {
        self.rrh_content
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == content)
            .map(|(i, _)| i)
    }

    pub fn users_requesting(&self, content: usize) -> impl Iterator<Item = usize> + '_ {
        self.user_marks
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == content)
            .map(|(i, _)| i)
    }

    /// Check the structural invariants (marks in range, points in the disk).
    pub fn validate(&self) -> Result<()> {
        let l = self.content_count();
        if self.rrh_points.len() != self.rrh_content.len()
            || self.user_points.len() != self.user_marks.len()
        {
            return param("point and mark counts differ");
        }
        if self
            .rrh_content
            .iter()
            .chain(&self.user_marks)
            .any(|&c| c >= l)
        {
            return param("content index out of range");
        }
        let tol = self.cluster_radius * (1.0 + 1e-8);
        if self
            .rrh_points
            .iter()
            .chain(&self.user_points)
            .any(|p| !(p.norm() <= tol))
        {
            return param("point lies outside the cluster disk");
        }
        Ok(())
    }

    /// Serialize to the line-oriented replay format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# clustercache realization v1");
        let _ = writeln!(s, "radius {}", fmt9(self.cluster_radius));
        let _ = writeln!(s, "seed {}", self.rng_seed);
        let _ = writeln!(s, "lambda_rrh {}", fmt9(self.densities.lambda_rrh()));
        let _ = writeln!(s, "lambda_user {}", fmt9(self.densities.lambda_user()));
        let split: Vec<String> = self
            .densities
            .lambda_split()
            .iter()
            .map(|&l| fmt9(l))
            .collect();
        let _ = writeln!(s, "lambda_split {}", split.join(" "));
        for (p, c) in self.rrh_points.iter().zip(&self.rrh_content) {
            let _ = writeln!(s, "rrh {} {} {}", fmt9(p.x), fmt9(p.y), c + 1);
        }
        for (p, c) in self.user_points.iter().zip(&self.user_marks) {
            let _ = writeln!(s, "user {} {} {}", fmt9(p.x), fmt9(p.y), c + 1);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut radius = None;
        let mut seed = None;
        let mut lambda_rrh = None;
        let mut lambda_user = None;
        let mut split: Option<Vec<f64>> = None;
        let mut rrh_points = Vec::new();
        let mut rrh_content = Vec::new();
        let mut user_points = Vec::new();
        let mut user_marks = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: &str| Error::Format {
                line: i + 1,
                message: m.to_string(),
            };
            let mut fields = line.split_whitespace();
            let key = fields.next().unwrap_or_default();
            let rest: Vec<&str> = fields.collect();
            let num = |s: &str| f64::from_str(s).map_err(|_| bad(&format!("bad number `{s}`")));
            match key {
                "radius" => {
                    radius = Some(num(rest.first().ok_or_else(|| bad("missing radius"))?)?)
                }
                "seed" => {
                    let v = rest.first().ok_or_else(|| bad("missing seed"))?;
                    seed = Some(v.parse::<u64>().map_err(|_| bad("bad seed"))?);
                }
                "lambda_rrh" => {
                    lambda_rrh = Some(num(rest.first().ok_or_else(|| bad("missing value"))?)?)
                }
                "lambda_user" => {
                    lambda_user = Some(num(rest.first().ok_or_else(|| bad("missing value"))?)?)
                }
                "lambda_split" => split = Some(rest.iter().map(|s| num(s)).collect::<Result<_>>()?),
                "rrh" | "user" => {
                    if rest.len() != 3 {
                        return Err(bad("expected `role x y content`"));
                    }
                    let p = SpatialPoint::new(num(rest[0])?, num(rest[1])?);
                    let c: usize = rest[2].parse().map_err(|_| bad("bad content index"))?;
                    if c == 0 {
                        return Err(bad("content indices are one-based"));
                    }
                    if key == "rrh" {
                        rrh_points.push(p);
                        rrh_content.push(c - 1);
                    } else {
                        user_points.push(p);
                        user_marks.push(c - 1);
                    }
                }
                other => return Err(bad(&format!("unknown record `{other}`"))),
            }
        }
        let missing = |k: &str| Error::Format {
            line: 0,
            message: format!("missing header `{k}`"),
        };
        let split = split.ok_or_else(|| missing("lambda_split"))?;
        let lambda_rrh = lambda_rrh.ok_or_else(|| missing("lambda_rrh"))?;
        // Header values are already normalized; keep them verbatim.
        let densities = DensityConfig {
            lambda_rrh,
            lambda_user: lambda_user.ok_or_else(|| missing("lambda_user"))?,
            lambda_split: split,
        };
        let r = NetworkRealization {
            cluster_radius: radius.ok_or_else(|| missing("radius"))?,
            rrh_points,
            rrh_content,
            user_points,
            user_marks,
            rng_seed: seed.ok_or_else(|| missing("seed"))?,
            densities,
        };
        r.validate()?;
        Ok(r)
    }
}

/// Nearest RRH assigned to `content`; ties go to the lower RRH index.
pub fn nearest_serving_rrh(
    user: &SpatialPoint,
    realization: &NetworkRealization,
    content: usize,
) -> Result<(usize, f64)> {
    nearest_among(
        user,
        &realization.rrh_points,
        realization.rrhs_serving(content),
    )
    .ok_or_else(|| Error::NotFound(format!("no RRH serves content {}", content + 1)))
}

/// Nearest of the candidate indices into `points`, lowest index on ties.
pub fn nearest_among(
    user: &SpatialPoint,
    points: &[SpatialPoint],
    candidates: impl IntoIterator<Item = usize>,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for i in candidates {
        let d = user.distance(&points[i]);
        match best {
            Some((bi, bd)) if d > bd || (d == bd && i > bi) => {}
            _ => best = Some((i, d)),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn realization_with(rrhs: &[(f64, f64, usize)]) -> NetworkRealization {
        NetworkRealization {
            cluster_radius: 1000.0,
            rrh_points: rrhs
                .iter()
                .map(|&(x, y, _)| SpatialPoint::new(x, y))
                .collect(),
            rrh_content: rrhs.iter().map(|&(_, _, c)| c).collect(),
            user_points: vec![],
            user_marks: vec![],
            rng_seed: 0,
            densities: DensityConfig::new(5e-6, 5e-6, &[0.5, 0.5]).unwrap(),
        }
    }

    #[test]
    fn zero_density_is_an_error() {
        assert!(matches!(
            sample_ppp(0.0, 1000.0, 1),
            Err(Error::Parameter(_))
        ));
        assert!(sample_ppp(1e-6, 0.0, 1).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_ppp(5e-6, 1000.0, 99).unwrap();
        let b = sample_ppp(5e-6, 1000.0, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.norm() <= 1000.0));
    }

    #[test]
    fn mean_count_matches_poisson_mean() {
        // λπr² = 5e-6 · π · 1e6 ≈ 15.708
        let expected = 5e-6 * std::f64::consts::PI * 1e6;
        let seeds = 10_000;
        let total: usize = (0..seeds)
            .map(|s| sample_ppp(5e-6, 1000.0, s).unwrap().len())
            .sum();
        let mean = total as f64 / seeds as f64;
        let se = (expected / seeds as f64).sqrt();
        assert!((mean - expected).abs() < 0.01 * expected, "mean {mean}");
        assert!((mean - expected).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn thinning_single_content() {
        let pts = vec![SpatialPoint::ORIGIN; 50];
        assert!(thin_by_content(&pts, &[1.0], 3)
            .unwrap()
            .iter()
            .all(|&c| c == 0));
    }

    #[test]
    fn thinning_uniform_fractions() {
        let pts = vec![SpatialPoint::ORIGIN; 100_000];
        let marks = thin_by_content(&pts, &[0.2; 5], 11).unwrap();
        for l in 0..5 {
            let frac = marks.iter().filter(|&&c| c == l).count() as f64 / 1e5;
            assert!((frac - 0.2).abs() < 0.02 * 0.2, "class {l}: {frac}");
        }
    }

    #[test]
    fn thinning_zipf_first_class() {
        // Zipf(s=1, L=5): P_1 = 60/137 ≈ 0.43796
        let h: f64 = (1..=5).map(|k| 1.0 / k as f64).sum();
        let p: Vec<f64> = (1..=5).map(|k| 1.0 / k as f64 / h).collect();
        let pts = vec![SpatialPoint::ORIGIN; 100_000];
        let marks = thin_by_content(&pts, &p, 5).unwrap();
        let frac = marks.iter().filter(|&&c| c == 0).count() as f64 / 1e5;
        let se = (0.438 * 0.562 / 1e5f64).sqrt();
        assert!((frac - 0.43796).abs() < 4.0 * se, "{frac}");
    }

    #[test]
    fn thinning_rejects_unnormalized() {
        assert!(thin_by_content(&[SpatialPoint::ORIGIN], &[0.5, 0.4], 0).is_err());
    }

    #[test]
    fn nearest_rrh_rules() {
        let user = SpatialPoint::ORIGIN;
        let r = realization_with(&[(30.0, 0.0, 0)]);
        assert_eq!(nearest_serving_rrh(&user, &r, 0).unwrap(), (0, 30.0));
        let r = realization_with(&[(50.0, 0.0, 0), (0.0, 30.0, 0), (1.0, 0.0, 1)]);
        assert_eq!(nearest_serving_rrh(&user, &r, 0).unwrap(), (1, 30.0));
        let r = realization_with(&[(1.0, 0.0, 1), (0.0, 40.0, 0), (40.0, 0.0, 0)]);
        assert_eq!(nearest_serving_rrh(&user, &r, 0).unwrap().0, 1);
        let r = realization_with(&[(1.0, 0.0, 1)]);
        assert!(matches!(
            nearest_serving_rrh(&user, &r, 0),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn superposition_recovers_the_pattern() {
        let d = DensityConfig::new(5e-6, 5e-6, &[0.5, 0.3, 0.2]).unwrap();
        let r = NetworkRealization::generate(&d, &[0.5, 0.3, 0.2], 1500.0, 4).unwrap();
        let mut merged: Vec<usize> = (0..3)
            .flat_map(|l| r.rrhs_serving(l).collect::<Vec<_>>())
            .collect();
        merged.sort_unstable();
        assert_eq!(merged, (0..r.rrh_points.len()).collect::<Vec<_>>());
    }

    #[test]
    fn density_split_sums_exactly() {
        let d = DensityConfig::new(5e-6, 1e-6, &[3.0, 2.0, 1.7]).unwrap();
        assert_eq!(d.lambda_split().iter().sum::<f64>(), 5e-6);
    }

    #[test]
    fn text_round_trip_is_stable() {
        let d = DensityConfig::new(5e-6, 5e-6, &[0.6, 0.4]).unwrap();
        let r = NetworkRealization::generate(&d, &[0.6, 0.4], 1000.0, 17).unwrap();
        let text = r.to_text();
        let back = NetworkRealization::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.rrh_content, r.rrh_content);
        assert_eq!(back.user_marks, r.user_marks);
    }
}
