//! Reproducible synthetic data: isotropic Gaussian blobs plus the seed and
//! train/test samplers used by the experiment harness.
//!
//! Every sampler draws from a `ChaCha8Rng` seeded with `seed_from_u64`, and
//! Gaussian noise comes from `rand_distr::StandardNormal`. Both algorithms
//! are fixed and platform independent, so `(spec, seed)` determines the
//! output bit for bit.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassCatalog, FeatureSet, GroundTruth, PartialLabeling};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    /// Minimum distance between class centres, in within-class standard
    /// deviations.
    pub separation: f64,
    pub seed: u64,
}

impl BlobSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.n < self.m {
            return Err(Error::InvalidConfig(format!(
                "need n >= m >= 2, got n={} m={}",
                self.n, self.m
            )));
        }
        if self.d == 0 {
            return Err(Error::InvalidConfig("d must be at least 1".into()));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "separation must be positive, got {}",
                self.separation
            )));
        }
        Ok(())
    }
}

fn digits(mut v: usize) -> usize {
    let mut w = 1;
    while v >= 10 {
        v /= 10;
        w += 1;
    }
    w
}

/// Zero-padded class names, so byte order equals index order.
pub fn class_names(m: usize) -> Vec<String> {
    let w = digits(m.saturating_sub(1));
    (0..m).map(|h| format!("c{h:0w$}")).collect()
}

/// Orthonormal columns (`d x k`, `k <= d`) from Gram-Schmidt on Gaussian draws.
fn random_frame(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Array2<f64> {
    let mut q = Array2::<f64>::zeros((d, k));
    let mut c = 0;
    while c < k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for p in 0..c {
            let dot: f64 = (0..d).map(|r| v[r] * q[[r, p]]).sum();
            for r in 0..d {
                v[r] -= dot * q[[r, p]];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for r in 0..d {
                q[[r, c]] = v[r] / norm;
            }
            c += 1;
        }
    }
    q
}

/// Class centres with pairwise distance at least `separation`, centred on
/// the origin. When `d >= m - 1` they form a randomly rotated regular
/// simplex (all distances exactly `separation`); otherwise they are drawn by
/// rejection from a cube that starts at side `separation` and grows slowly,
/// which keeps the packing close to the minimum distance.
fn centers(rng: &mut ChaCha8Rng, m: usize, d: usize, separation: f64) -> Array2<f64> {
    let mut c = Array2::<f64>::zeros((m, d));
    if d + 1 >= m {
        // Helmert basis of the sum-zero subspace: vertex i has coordinate
        // h_k[i] on basis vector k, and all vertices sit sqrt(2) apart.
        let helmert = |k: usize, i: usize| -> f64 {
            let norm = ((k * (k + 1)) as f64).sqrt();
            if i < k {
                1.0 / norm
            } else if i == k {
                -(k as f64) / norm
            } else {
                0.0
            }
        };
        let q = random_frame(rng, d, m - 1);
        let scale = separation / std::f64::consts::SQRT_2;
        for i in 0..m {
            for r in 0..d {
                c[[i, r]] = scale * (1..m).map(|k| q[[r, k - 1]] * helmert(k, i)).sum::<f64>();
            }
        }
        return c;
    }
    let mut half = 0.5 * separation;
    let mut placed = 0;
    let mut failures = 0;
    while placed < m {
        let cand: Vec<f64> = (0..d).map(|_| rng.random_range(-half..half)).collect();
        let ok = (0..placed).all(|p| {
            let dist2: f64 = (0..d).map(|r| (cand[r] - c[[p, r]]).powi(2)).sum();
            dist2.sqrt() >= separation
        });
        if ok {
            for r in 0..d {
                c[[placed, r]] = cand[r];
            }
            placed += 1;
        } else {
            failures += 1;
            if failures % 200 == 0 {
                half *= 1.05;
            }
        }
    }
    let mean = c.mean_axis(ndarray::Axis(0)).expect("m >= 2");
    c - &mean
}

/// Blob dataset in class-contiguous order. Class sizes differ by at most one,
/// with the remainder going to the lowest class indices.
pub fn gaussian_blobs(spec: &BlobSpec) -> Result<(FeatureSet, GroundTruth)> {
    spec.validate()?;
    let BlobSpec {
        n,
        d,
        m,
        separation,
        seed,
    } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres = centers(&mut rng, m, d, separation);

    let w = digits(n - 1);
    let ids: Vec<String> = (0..n).map(|i| format!("p{i:0w$}")).collect();
    let mut classes = Vec::with_capacity(n);
    let mut x = Array2::zeros((n, d));
    let mut row = 0;
    for h in 0..m {
        let size = n / m + usize::from(h < n % m);
        for _ in 0..size {
            for r in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                x[[row, r]] = centres[[h, r]] + z;
            }
            classes.push(h);
            row += 1;
        }
    }
    let catalog = ClassCatalog::new(class_names(m))?;
    let features = FeatureSet::new(ids.clone(), x)?;
    Ok((features, GroundTruth { ids, classes, catalog }))
}

/// `ceil(fraction * count)` that ignores representation error, so that
/// 0.1 * 30 gives 3 rather than 4.
fn seed_quota(fraction: f64, count: usize) -> usize {
    let exact = fraction * count as f64;
    let nearest = exact.round();
    if (exact - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        exact.ceil() as usize
    }
}

fn check_fraction(fraction: f64, what: &str) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "{what} must be in (0, 1], got {fraction}"
        )));
    }
    Ok(())
}

fn by_class(classes: &[usize], m: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); m];
    for (i, &c) in classes.iter().enumerate() {
        groups[c].push(i);
    }
    groups
}

/// Stratified seeds: `ceil(fraction * |class h|)` objects of every class.
pub fn sample_partial_labeling(truth: &GroundTruth, fraction: f64, seed: u64) -> Result<PartialLabeling> {
    check_fraction(fraction, "labeled fraction")?;
    let m = truth.catalog.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds = vec![None; truth.ids.len()];
    for (h, mut members) in by_class(&truth.classes, m).into_iter().enumerate() {
        if members.is_empty() {
            return Err(Error::DegenerateClass { class: h });
        }
        members.shuffle(&mut rng);
        let quota = seed_quota(fraction, members.len()).min(members.len());
        for &i in &members[..quota] {
            seeds[i] = Some(h);
        }
    }
    PartialLabeling::new(truth.ids.clone(), seeds, truth.catalog.clone())
}

/// Train and test positions, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded split with `round(test_fraction * n)` test objects. With `truth`,
/// per-class test counts are apportioned by largest remainder.
pub fn train_test_split(n: usize, test_fraction: f64, seed: u64, truth: Option<(&[usize], usize)>) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let total = ((test_fraction * n as f64).round() as usize).clamp(usize::from(n > 1), n.saturating_sub(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::with_capacity(total);
    match truth {
        None => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            test.extend_from_slice(&all[..total]);
        }
        Some((classes, m)) => {
            if classes.len() != n {
                return Err(Error::Shape(format!("{} classes for {n} objects", classes.len())));
            }
            let groups = by_class(classes, m);
            let exact: Vec<f64> = groups.iter().map(|g| test_fraction * g.len() as f64).collect();
            let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| {
                let ra = exact[a] - exact[a].floor();
                let rb = exact[b] - exact[b].floor();
                rb.total_cmp(&ra).then(a.cmp(&b))
            });
            let mut left = total.saturating_sub(quota.iter().sum());
            for &h in order.iter().cycle().take(m * 2) {
                if left == 0 {
                    break;
                }
                if quota[h] < groups[h].len() {
                    quota[h] += 1;
                    left -= 1;
                }
            }
            for (h, mut members) in groups.into_iter().enumerate() {
                members.shuffle(&mut rng);
                test.extend_from_slice(&members[..quota[h]]);
            }
        }
    }
    test.sort_unstable();
    let mut is_test = vec![false; n];
    for &i in &test {
        is_test[i] = true;
    }
    let train = (0..n).filter(|&i| !is_test[i]).collect();
    Ok(Split { train, test })
}
