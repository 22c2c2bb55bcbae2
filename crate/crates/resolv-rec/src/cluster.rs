//! K-Means and diagonal-covariance GMM over resolution-text TF-IDF vectors,
//! used to synthesize proxy resolution ids when the data has none.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::textprep::{self, NgramConfig, NormalizeMode, SparseVector};

const VARIANCE_FLOOR: f64 = 1e-6;
/// GMM runs on a seeded random projection of this width (TF-IDF dimensions
/// make raw diagonal Gaussians degenerate).
pub const GMM_PROJECTION_DIM: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    #[default]
    Kmeans,
    Gmm,
}

/// Fitted K-Means model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub inertia_trace: Vec<f64>,
    pub seed: u64,
}

impl CentroidModel {
    /// Nearest centroid and its squared distance; ties go to the lowest index.
    pub fn assign(&self, v: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.centroids.iter().enumerate() {
            let d = sq_dist(v, c);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_inputs(vectors: &[Vec<f64>], k: usize) -> Result<usize> {
    if k < 1 || vectors.len() < k {
        return Err(Error::InfeasibleClustering {
            k,
            n: vectors.len(),
        });
    }
    let dim = vectors[0].len();
    for v in vectors {
        if v.len() != dim {
            return Err(Error::Shape {
                expected: dim,
                got: v.len(),
            });
        }
    }
    Ok(dim)
}

/// Lloyd's algorithm with k-means++ seeding. Runs to an assignment fixpoint
/// or `max_iter`; empty clusters are repaired by stealing the point farthest
/// from its current centroid.
pub fn kmeans_fit(
    vectors: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<CentroidModel> {
    let dim = check_inputs(vectors, k)?;
    let n = vectors.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(vectors[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = vectors.iter().map(|v| sq_dist(v, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.push(vectors[next].clone());
        for (i, v) in vectors.iter().enumerate() {
            let d = sq_dist(v, centroids.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }

    let mut assignment = vec![usize::MAX; n];
    let mut inertia_trace = Vec::new();
    for _ in 0..max_iter.max(1) {
        // assignment step
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, v) in vectors.iter().enumerate() {
            let (c, d) = nearest(v, &centroids);
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
            inertia += d;
        }
        // empty-cluster repair: farthest point becomes the centroid
        loop {
            let mut counts = vec![0usize; k];
            for &a in &assignment {
                counts[a] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let farthest = (0..n)
                .filter(|&i| counts[assignment[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(&vectors[a], &centroids[assignment[a]])
                        .partial_cmp(&sq_dist(&vectors[b], &centroids[assignment[b]]))
                        .unwrap()
                        .then(b.cmp(&a))
                })
                .expect("n >= k guarantees a donor");
            centroids[empty] = vectors[farthest].clone();
            assignment[farthest] = empty;
            changed = true;
            inertia = (0..n)
                .map(|i| sq_dist(&vectors[i], &centroids[assignment[i]]))
                .sum();
        }
        inertia_trace.push(inertia);
        if !changed && inertia_trace.len() > 1 {
            break;
        }
        // update step
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, v) in vectors.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (s, x) in sums[assignment[i]].iter_mut().zip(v) {
                *s += x;
            }
        }
        for (c, (sum, count)) in centroids.iter_mut().zip(sums.iter().zip(&counts)) {
            if *count > 0 {
                *c = sum.iter().map(|s| s / *count as f64).collect();
            }
        }
    }

    let inertia = (0..n)
        .map(|i| {
            let (_, d) = nearest(&vectors[i], &centroids);
            d
        })
        .sum();
    Ok(CentroidModel {
        k,
        centroids,
        inertia,
        inertia_trace,
        seed,
    })
}

fn nearest(v: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(v, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Fitted diagonal-covariance Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub k: usize,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub log_likelihood_trace: Vec<f64>,
    pub seed: u64,
}

impl GmmModel {
    fn log_component_densities(&self, x: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|c| {
                let mut lp = self.weights[c].ln();
                for ((&xi, &mu), &var) in x.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                    lp += -0.5 * (2.0 * std::f64::consts::PI * var).ln()
                        - (xi - mu) * (xi - mu) / (2.0 * var);
                }
                lp
            })
            .collect()
    }

    /// Posterior component responsibilities for one point.
    pub fn responsibilities(&self, x: &[f64]) -> Vec<f64> {
        let lp = self.log_component_densities(x);
        let max = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = lp.iter().map(|&l| (l - max).exp()).collect();
        let sum: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / sum).collect()
    }

    pub fn assign(&self, x: &[f64]) -> usize {
        let r = self.responsibilities(x);
        r.iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap()
    }

    fn log_likelihood(&self, vectors: &[Vec<f64>]) -> f64 {
        vectors
            .iter()
            .map(|x| {
                let lp = self.log_component_densities(x);
                let max = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                max + lp.iter().map(|&l| (l - max).exp()).sum::<f64>().ln()
            })
            .sum()
    }
}

/// EM for a diagonal GMM, initialized from a K-Means fit.
pub fn gmm_fit(
    vectors: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<GmmModel> {
    let dim = check_inputs(vectors, k)?;
    let n = vectors.len();
    let km = kmeans_fit(vectors, k, seed, 50)?;

    // initialize from the hard clustering
    let mut counts = vec![0usize; k];
    let mut assignment = Vec::with_capacity(n);
    for v in vectors {
        let (c, _) = km.assign(v);
        counts[c] += 1;
        assignment.push(c);
    }
    let mut model = GmmModel {
        k,
        weights: counts.iter().map(|&c| (c.max(1)) as f64 / n as f64).collect(),
        means: km.centroids.clone(),
        variances: vec![vec![VARIANCE_FLOOR; dim]; k],
        log_likelihood_trace: Vec::new(),
        seed,
    };
    let wsum: f64 = model.weights.iter().sum();
    for w in &mut model.weights {
        *w /= wsum;
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        let mut var = vec![0.0; dim];
        for (v, &a) in vectors.iter().zip(&assignment) {
            if a == c {
                for (s, (&x, &mu)) in var.iter_mut().zip(v.iter().zip(&model.means[c])) {
                    *s += (x - mu) * (x - mu);
                }
            }
        }
        model.variances[c] = var
            .into_iter()
            .map(|s| (s / counts[c] as f64).max(VARIANCE_FLOOR))
            .collect();
    }

    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..max_iter {
        // E-step
        let resp: Vec<Vec<f64>> = vectors.iter().map(|x| model.responsibilities(x)).collect();
        // M-step
        let nk: Vec<f64> = (0..k).map(|c| resp.iter().map(|r| r[c]).sum()).collect();
        for c in 0..k {
            if nk[c] <= 0.0 {
                continue;
            }
            model.weights[c] = nk[c] / n as f64;
            let mut mean = vec![0.0; dim];
            for (x, r) in vectors.iter().zip(&resp) {
                for (m, &xi) in mean.iter_mut().zip(x) {
                    *m += r[c] * xi;
                }
            }
            for m in &mut mean {
                *m /= nk[c];
            }
            let mut var = vec![0.0; dim];
            for (x, r) in vectors.iter().zip(&resp) {
                for (s, (&xi, &mu)) in var.iter_mut().zip(x.iter().zip(&mean)) {
                    *s += r[c] * (xi - mu) * (xi - mu);
                }
            }
            model.means[c] = mean;
            model.variances[c] = var
                .into_iter()
                .map(|s| (s / nk[c]).max(VARIANCE_FLOOR))
                .collect();
        }
        let ll = model.log_likelihood(vectors);
        if !ll.is_finite() {
            return Err(Error::Numeric("gmm log-likelihood"));
        }
        model.log_likelihood_trace.push(ll);
        if (ll - prev_ll).abs() < tol {
            break;
        }
        prev_ll = ll;
    }
    Ok(model)
}

/// Proxy resolution-id assignment produced by clustering resolution texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLabeling {
    pub assignment: BTreeMap<String, String>,
    pub method: ClusterMethod,
    pub k: usize,
}

/// Seeded random projection matrix applied to sparse TF-IDF vectors before
/// GMM fitting.
pub fn random_projection(sparse: &[SparseVector], out_dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let in_dim = sparse.first().map_or(0, |v| v.dim);
    let out_dim = out_dim.min(in_dim.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (out_dim as f64).sqrt();
    let proj: Vec<Vec<f64>> = (0..in_dim)
        .map(|_| {
            (0..out_dim)
                .map(|_| if rng.random::<bool>() { scale } else { -scale })
                .collect()
        })
        .collect();
    sparse
        .iter()
        .map(|v| {
            let mut out = vec![0.0; out_dim];
            for &(id, w) in &v.entries {
                for (o, p) in out.iter_mut().zip(&proj[id]) {
                    *o += w * p;
                }
            }
            out
        })
        .collect()
}

/// Clusters training resolution texts and labels each ticket `RSYN-<j>`,
/// clusters indexed by decreasing member count.
pub fn assign_resolution_ids(
    train: &Corpus,
    method: ClusterMethod,
    k: usize,
    seed: u64,
) -> Result<SyntheticLabeling> {
    let eligible: Vec<(&str, Vec<String>)> = train
        .records
        .iter()
        .filter_map(|r| {
            r.resolution_text.as_deref().map(|text| {
                (
                    r.incident_id.as_str(),
                    textprep::prepare(text, NormalizeMode::LemmaStem, &Default::default()),
                )
            })
        })
        .collect();
    if eligible.len() < k {
        return Err(Error::InfeasibleClustering {
            k,
            n: eligible.len(),
        });
    }
    let docs: Vec<Vec<String>> = eligible.iter().map(|(_, t)| t.clone()).collect();
    let vocab = textprep::build_vocab(&docs, 1, 1.0, NgramConfig { max_n: 1 })?;
    let sparse: Vec<SparseVector> = docs.iter().map(|d| textprep::tfidf(d, &vocab)).collect();

    let clusters: Vec<usize> = match method {
        ClusterMethod::Kmeans => {
            let dense: Vec<Vec<f64>> = sparse.iter().map(SparseVector::to_dense).collect();
            let model = kmeans_fit(&dense, k, seed, 100)?;
            dense.iter().map(|v| model.assign(v).0).collect()
        }
        ClusterMethod::Gmm => {
            let dense = random_projection(&sparse, GMM_PROJECTION_DIM, seed ^ 0x9e3779b97f4a7c15);
            let model = gmm_fit(&dense, k, seed, 100, 1e-6)?;
            dense.iter().map(|v| model.assign(v)).collect()
        }
    };

    // rank clusters by decreasing size, ties by original index
    let mut sizes = vec![0usize; k];
    for &c in &clusters {
        sizes[c] += 1;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut rank = vec![0usize; k];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }

    let assignment = eligible
        .iter()
        .zip(&clusters)
        .map(|((id, _), &c)| (id.to_string(), format!("RSYN-{}", rank[c])))
        .collect();
    Ok(SyntheticLabeling {
        assignment,
        method,
        k,
    })
}

/// Silhouette of a synthetic labeling over the same resolution-text TF-IDF
/// space the clustering ran on (used by the CLI k-sweep).
pub fn labeling_silhouette(train: &Corpus, labeling: &SyntheticLabeling) -> Result<f64> {
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    for record in &train.records {
        let (Some(cluster), Some(text)) = (
            labeling.assignment.get(&record.incident_id),
            record.resolution_text.as_deref(),
        ) else {
            continue;
        };
        let Some(rank) = cluster.strip_prefix("RSYN-").and_then(|s| s.parse().ok()) else {
            continue;
        };
        docs.push(textprep::prepare(text, NormalizeMode::LemmaStem, &Default::default()));
        labels.push(rank);
    }
    let vocab = textprep::build_vocab(&docs, 1, 1.0, NgramConfig { max_n: 1 })?;
    let vectors: Vec<Vec<f64>> = docs
        .iter()
        .map(|d| textprep::tfidf(d, &vocab).to_dense())
        .collect();
    silhouette(&vectors, &labels)
}

/// Mean silhouette coefficient (Euclidean); singleton clusters score 0.
pub fn silhouette(vectors: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    assert_eq!(vectors.len(), labels.len());
    let distinct: std::collections::BTreeSet<usize> = labels.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(Error::SingleCluster);
    }
    let n = vectors.len();
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        let own_size = labels.iter().filter(|&&l| l == own).count();
        if own_size == 1 {
            continue; // contributes 0
        }
        let mut intra = 0.0;
        let mut inter: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = sq_dist(&vectors[i], &vectors[j]).sqrt();
            if labels[j] == own {
                intra += d;
            } else {
                let e = inter.entry(labels[j]).or_insert((0.0, 0));
                e.0 += d;
                e.1 += 1;
            }
        }
        let a = intra / (own_size - 1) as f64;
        let b = inter
            .values()
            .map(|(sum, count)| sum / *count as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TicketRecord;
    use rand::Rng;

    fn gauss(rng: &mut ChaCha8Rng) -> f64 {
        // Box-Muller
        let u1: f64 = rng.random_range(1e-12..1.0);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn two_blobs(seed: u64, per_blob: usize, dim: usize, sep: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for blob in 0..2 {
            let center = if blob == 0 { -sep } else { sep };
            for _ in 0..per_blob {
                vectors.push((0..dim).map(|_| center + gauss(&mut rng)).collect());
                labels.push(blob);
            }
        }
        (vectors, labels)
    }

    #[test]
    fn kmeans_recovers_separated_blobs() {
        let (vectors, truth) = two_blobs(1, 20, 3, 10.0);
        let model = kmeans_fit(&vectors, 2, 7, 100).unwrap();
        let assigned: Vec<usize> = vectors.iter().map(|v| model.assign(v).0).collect();
        let direct = assigned == truth;
        let flipped = assigned.iter().map(|&a| 1 - a).collect::<Vec<_>>() == truth;
        assert!(direct || flipped, "partition does not match ground truth");
    }

    #[test]
    fn kmeans_k1_is_mean() {
        let vectors = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 0.0]];
        let model = kmeans_fit(&vectors, 1, 0, 10).unwrap();
        assert!((model.centroids[0][0] - 3.0).abs() < 1e-12);
        assert!((model.centroids[0][1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_k_equals_n_zero_inertia() {
        let vectors = vec![vec![0.0], vec![1.0], vec![2.0], vec![5.0]];
        let model = kmeans_fit(&vectors, 4, 3, 100).unwrap();
        assert!(model.inertia < 1e-12, "inertia = {}", model.inertia);
    }

    #[test]
    fn kmeans_inertia_never_increases() {
        let (vectors, _) = two_blobs(5, 30, 4, 2.0);
        let model = kmeans_fit(&vectors, 5, 11, 100).unwrap();
        for pair in model.inertia_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "trace {:?}", model.inertia_trace);
        }
    }

    #[test]
    fn kmeans_inertia_matches_recomputation() {
        let (vectors, _) = two_blobs(9, 25, 3, 3.0);
        let model = kmeans_fit(&vectors, 3, 2, 100).unwrap();
        let recomputed: f64 = vectors.iter().map(|v| model.assign(v).1).sum();
        assert!((model.inertia - recomputed).abs() <= 1e-6 * recomputed.max(1.0));
    }

    #[test]
    fn kmeans_deterministic_under_seed() {
        let (vectors, _) = two_blobs(2, 15, 3, 1.0);
        let a = kmeans_fit(&vectors, 4, 99, 100).unwrap();
        let b = kmeans_fit(&vectors, 4, 99, 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kmeans_infeasible() {
        assert!(matches!(
            kmeans_fit(&[vec![0.0]], 2, 0, 10),
            Err(Error::InfeasibleClustering { k: 2, n: 1 })
        ));
    }

    #[test]
    fn kmeans_shape_error() {
        assert!(matches!(
            kmeans_fit(&[vec![0.0], vec![0.0, 1.0]], 1, 0, 10),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn gmm_k1_analytic_optimum() {
        let vectors = vec![vec![1.0], vec![2.0], vec![3.0], vec![6.0]];
        let model = gmm_fit(&vectors, 1, 0, 100, 1e-12).unwrap();
        assert!((model.means[0][0] - 3.0).abs() < 1e-9);
        // biased sample variance: mean of squared deviations = 3.5
        assert!((model.variances[0][0] - 3.5).abs() < 1e-9);
        assert!((model.weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gmm_log_likelihood_non_decreasing() {
        for seed in 0..20 {
            let (vectors, _) = two_blobs(seed, 20, 3, 1.5);
            let model = gmm_fit(&vectors, 3, seed + 1, 60, 1e-9).unwrap();
            for pair in model.log_likelihood_trace.windows(2) {
                assert!(
                    pair[1] >= pair[0] - 1e-7,
                    "seed {seed}: trace {:?}",
                    model.log_likelihood_trace
                );
            }
        }
    }

    #[test]
    fn gmm_separated_blobs_confident() {
        let (vectors, truth) = two_blobs(3, 20, 3, 10.0);
        let model = gmm_fit(&vectors, 2, 5, 100, 1e-9).unwrap();
        // map true blob -> learned component via the first point
        for (v, &t) in vectors.iter().zip(&truth) {
            let r = model.responsibilities(v);
            let anchor = model.assign(&vectors[truth.iter().position(|&x| x == t).unwrap()]);
            assert!(r[anchor] >= 0.99, "responsibility {r:?}");
        }
    }

    #[test]
    fn gmm_weights_on_simplex() {
        let (vectors, _) = two_blobs(8, 25, 2, 2.0);
        let model = gmm_fit(&vectors, 4, 1, 80, 1e-9).unwrap();
        let sum: f64 = model.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(model
            .variances
            .iter()
            .flatten()
            .all(|&v| v >= VARIANCE_FLOOR));
    }

    fn labeled_corpus(texts: &[&str]) -> Corpus {
        Corpus::new(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let mut r = TicketRecord::new(format!("INC{i:03}"), format!("issue {i}"));
                    r.resolution_text = Some(t.to_string());
                    r
                })
                .collect(),
        )
    }

    #[test]
    fn identical_resolutions_share_synthetic_label() {
        let corpus = labeled_corpus(&[
            "restarted the billing node",
            "restarted the billing node",
            "replaced faulty antenna cable",
            "replaced faulty antenna cable",
        ]);
        let labeling = assign_resolution_ids(&corpus, ClusterMethod::Kmeans, 2, 42).unwrap();
        assert_eq!(labeling.assignment["INC000"], labeling.assignment["INC001"]);
        assert_eq!(labeling.assignment["INC002"], labeling.assignment["INC003"]);
        assert_ne!(labeling.assignment["INC000"], labeling.assignment["INC002"]);
    }

    #[test]
    fn disjoint_vocabularies_align_with_clusters() {
        let corpus = labeled_corpus(&[
            "billing invoice charge payment",
            "billing invoice payment refund",
            "invoice charge refund billing",
            "antenna signal tower radio",
            "signal tower radio antenna",
            "radio antenna tower signal",
        ]);
        for method in [ClusterMethod::Kmeans, ClusterMethod::Gmm] {
            let labeling = assign_resolution_ids(&corpus, method, 2, 7).unwrap();
            let first = &labeling.assignment["INC000"];
            for i in 0..3 {
                assert_eq!(&labeling.assignment[&format!("INC00{i}")], first);
            }
            let second = &labeling.assignment["INC003"];
            for i in 3..6 {
                assert_eq!(&labeling.assignment[&format!("INC00{i}")], second);
            }
            assert_ne!(first, second);
        }
    }

    #[test]
    fn labels_ranked_by_cluster_size() {
        let corpus = labeled_corpus(&[
            "alpha beta gamma",
            "alpha gamma beta",
            "alpha beta delta",
            "zulu yankee xray",
        ]);
        let labeling = assign_resolution_ids(&corpus, ClusterMethod::Kmeans, 2, 11).unwrap();
        // the 3-member cluster gets RSYN-0
        assert_eq!(labeling.assignment["INC000"], "RSYN-0");
        assert_eq!(labeling.assignment["INC003"], "RSYN-1");
    }

    #[test]
    fn silhouette_tight_blobs() {
        let (vectors, labels) = two_blobs(4, 15, 3, 20.0);
        let score = silhouette(&vectors, &labels).unwrap();
        assert!(score > 0.9, "score = {score}");
    }

    #[test]
    fn silhouette_random_labels_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let vectors: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..3).map(|_| gauss(&mut rng)).collect())
            .collect();
        let labels: Vec<usize> = (0..60).map(|_| rng.random_range(0..3)).collect();
        let score = silhouette(&vectors, &labels).unwrap();
        assert!(score.abs() < 0.2, "score = {score}");
    }

    #[test]
    fn silhouette_singletons_are_zero() {
        let vectors = vec![vec![0.0], vec![1.0], vec![2.0]];
        let labels = vec![0, 1, 2];
        assert_eq!(silhouette(&vectors, &labels).unwrap(), 0.0);
    }

    #[test]
    fn silhouette_single_cluster_errors() {
        let vectors = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            silhouette(&vectors, &[0, 0]),
            Err(Error::SingleCluster)
        ));
    }
}
