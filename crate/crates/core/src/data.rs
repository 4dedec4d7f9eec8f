//! Synthetic dataset generators and the record types datasets are made of.
//!
//! Generators are pure functions of their seed: a fixed seed yields a
//! bit-identical dataset on every run. Stream shuffling for replications is
//! the loader's job, not the generator's.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};
use rand_pcg::Pcg64Mcg;

use crate::numeric::sqrt;
use crate::rng::{beta_one, gamma, standard_normal, uniform_f64, uniform_usize};

/// One continuous observation.
#[derive(Clone, Debug, PartialEq)]
pub struct PointRecord {
    /// Identity in the source file; survives shuffling.
    pub original_id: u64,
    pub coords: Vec<f64>,
    pub gold_label: Option<u32>,
}

/// One entity fragment: a bag of string attributes.
#[derive(Clone, Debug, PartialEq)]
pub struct FragmentRecord {
    pub original_id: u64,
    /// Must include a non-empty `name` for bigram-model runs.
    pub attributes: BTreeMap<String, String>,
    pub gold_entity: Option<String>,
}

impl FragmentRecord {
    pub fn name(&self) -> Option<&str> {
        self.attributes.get("name").map(String::as_str)
    }
}

/// Gaussian-mixture generator parameters. Cluster sizes come from a
/// stick-breaking draw; cluster means sit near one of `n_groups` group
/// centres with a per-cluster Normal perturbation, giving the data a
/// two-level spatial hierarchy.
#[derive(Clone, Debug)]
pub struct GmmGenConfig {
    pub alpha_dp: f64,
    /// Stick-breaking truncation; empty clusters are allowed and dropped.
    pub clusters: usize,
    pub n_points: usize,
    pub n_groups: usize,
    /// Inverse-Gamma shape for per-cluster variances (shape/rate form).
    pub a: f64,
    /// Inverse-Gamma rate.
    pub b: f64,
    pub mu: f64,
    pub lambda: f64,
    /// Cluster means deviate from their group centre with variance
    /// `sigma_i^2 / (perturb_divisor * lambda)`.
    pub perturb_divisor: f64,
    pub dims: usize,
    pub seed: u64,
}

impl Default for GmmGenConfig {
    fn default() -> Self {
        GmmGenConfig {
            alpha_dp: 20.0,
            clusters: 100,
            n_points: 700,
            n_groups: 16,
            a: 2.0,
            b: 0.5,
            mu: 0.0,
            lambda: 0.0002,
            perturb_divisor: 125.0,
            dims: 2,
            seed: 0,
        }
    }
}

/// A generated Gaussian-mixture dataset with its latent structure, kept for
/// self-checks and diagnostics. Only `points` is written to disk.
#[derive(Clone, Debug)]
pub struct GmmDataset {
    pub points: Vec<PointRecord>,
    pub group_centres: Vec<Vec<f64>>,
    pub cluster_means: Vec<Vec<f64>>,
    pub cluster_variances: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
}

/// Stick-breaking cluster sizes: K stick weights `v_k ~ Beta(1, alpha)` give
/// proportions `pi_k = v_k prod_{j<k} (1 - v_j)` (renormalised over the
/// truncation), and `n` points are assigned multinomially. Zero sizes are
/// common and expected.
pub fn stick_breaking_sizes<R: RngCore + ?Sized>(
    alpha_dp: f64,
    k: usize,
    n: usize,
    rng: &mut R,
) -> Vec<usize> {
    assert!(k > 0 && n > 0);
    let mut proportions = Vec::with_capacity(k);
    let mut remaining = 1.0;
    for _ in 0..k {
        let v = beta_one(rng, alpha_dp);
        proportions.push(v * remaining);
        remaining *= 1.0 - v;
    }
    let total: f64 = proportions.iter().sum();
    let mut sizes = alloc::vec![0usize; k];
    for _ in 0..n {
        let mut u = uniform_f64(rng) * total;
        let mut pick = k - 1;
        for (i, &p) in proportions.iter().enumerate() {
            if u < p {
                pick = i;
                break;
            }
            u -= p;
        }
        sizes[pick] += 1;
    }
    sizes
}

/// Generates the hierarchical Gaussian-mixture benchmark dataset.
pub fn gen_gmm(cfg: &GmmGenConfig) -> GmmDataset {
    let mut rng = Pcg64Mcg::seed_from_u64(cfg.seed);
    let sizes = stick_breaking_sizes(cfg.alpha_dp, cfg.clusters, cfg.n_points, &mut rng);
    let nonzero: Vec<usize> = sizes.iter().copied().filter(|&s| s > 0).collect();

    let group_centres: Vec<Vec<f64>> = (0..cfg.n_groups)
        .map(|_| {
            (0..cfg.dims)
                .map(|_| cfg.mu + standard_normal(&mut rng) / sqrt(cfg.lambda))
                .collect()
        })
        .collect();

    let mut cluster_means = Vec::with_capacity(nonzero.len());
    let mut cluster_variances = Vec::with_capacity(nonzero.len());
    for _ in &nonzero {
        // sigma^-2 ~ Gamma(a, rate b), so sigma^2 is inverse-Gamma.
        let precision = gamma(&mut rng, cfg.a, cfg.b);
        let variance = 1.0 / precision;
        let group = &group_centres[uniform_usize(&mut rng, cfg.n_groups)];
        let perturb_sd = sqrt(variance / (cfg.perturb_divisor * cfg.lambda));
        let mean: Vec<f64> = group
            .iter()
            .map(|&g| g + perturb_sd * standard_normal(&mut rng))
            .collect();
        cluster_means.push(mean);
        cluster_variances.push(variance);
    }

    let mut points = Vec::with_capacity(cfg.n_points);
    for (label, (&size, (mean, &variance))) in nonzero
        .iter()
        .zip(cluster_means.iter().zip(&cluster_variances))
        .enumerate()
    {
        let sd = sqrt(variance);
        for _ in 0..size {
            let coords: Vec<f64> = mean
                .iter()
                .map(|&mu| mu + sd * standard_normal(&mut rng))
                .collect();
            points.push(PointRecord {
                original_id: points.len() as u64,
                coords,
                gold_label: Some(label as u32),
            });
        }
    }
    GmmDataset {
        points,
        group_centres,
        cluster_means,
        cluster_variances,
        cluster_sizes: nonzero,
    }
}

/// Ring-shaped clusters: 15 centres uniform on [-5,5]^2, each cluster a
/// uniform draw of 10..=30 points on a circle of radius 0.6 around its
/// centre.
pub fn gen_circles(seed: u64) -> Vec<PointRecord> {
    const N_CLUSTERS: usize = 15;
    const RADIUS: f64 = 0.6;
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let centres: Vec<(f64, f64)> = (0..N_CLUSTERS)
        .map(|_| {
            (
                uniform_f64(&mut rng) * 10.0 - 5.0,
                uniform_f64(&mut rng) * 10.0 - 5.0,
            )
        })
        .collect();
    let mut points = Vec::new();
    for (label, &(cx, cy)) in centres.iter().enumerate() {
        let size = 10 + uniform_usize(&mut rng, 21);
        for _ in 0..size {
            let theta = uniform_f64(&mut rng) * 2.0 * core::f64::consts::PI;
            points.push(PointRecord {
                original_id: points.len() as u64,
                coords: alloc::vec![
                    cx + RADIUS * libm::cos(theta),
                    cy + RADIUS * libm::sin(theta)
                ],
                gold_label: Some(label as u32),
            });
        }
    }
    points
}

/// Gold partition induced by the records' labels, over arrival ids 0..n.
pub fn gold_partition_of_points(points: &[PointRecord]) -> Option<crate::partition::Partition> {
    use crate::partition::{Cluster, DataId, Partition};
    let mut groups: BTreeMap<u32, Vec<DataId>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        groups
            .entry(p.gold_label?)
            .or_default()
            .push(DataId(i as u32));
    }
    let clusters: Vec<Cluster> = groups
        .into_values()
        .map(|members| Cluster::new(members).expect("non-empty gold cluster"))
        .collect();
    Some(Partition::new(clusters).expect("gold labels partition the ids"))
}

/// Gold partition induced by fragment entity labels.
pub fn gold_partition_of_fragments(
    fragments: &[FragmentRecord],
) -> Option<crate::partition::Partition> {
    use crate::partition::{Cluster, DataId, Partition};
    let mut groups: BTreeMap<&str, Vec<DataId>> = BTreeMap::new();
    for (i, f) in fragments.iter().enumerate() {
        groups
            .entry(f.gold_entity.as_deref()?)
            .or_default()
            .push(DataId(i as u32));
    }
    let clusters: Vec<Cluster> = groups
        .into_values()
        .map(|members| Cluster::new(members).expect("non-empty gold cluster"))
        .collect();
    Some(Partition::new(clusters).expect("gold labels partition the ids"))
}
