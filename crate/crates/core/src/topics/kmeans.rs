use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{TopicError, WeightedMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansParams {
            k,
            seed,
            max_iter: 100,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after every assignment step; the last entry equals `inertia`.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Squared Euclidean distance between a sparse row and a dense centroid,
/// given the precomputed squared norms of both.
fn sq_dist(row: &[(usize, f64)], row_sq: f64, centroid: &[f64], centroid_sq: f64) -> f64 {
    let dot: f64 = row.iter().map(|&(j, v)| v * centroid[j]).sum();
    (row_sq - 2.0 * dot + centroid_sq).max(0.0)
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

struct Points<'a> {
    m: &'a WeightedMatrix,
    sq: Vec<f64>,
}

impl Points<'_> {
    fn dense(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m.n_cols()];
        for &(j, x) in self.m.row(i) {
            v[j] = x;
        }
        v
    }

    fn dist(&self, i: usize, centroid: &[f64], centroid_sq: f64) -> f64 {
        sq_dist(self.m.row(i), self.sq[i], centroid, centroid_sq)
    }
}

/// D²-weighted draw; `None` when every weight is zero.
fn d2_sample(nearest: &[f64], total: f64, rng: &mut ChaCha8Rng) -> Option<usize> {
    if total <= 0.0 {
        return None;
    }
    let mut target = rng.random::<f64>() * total;
    let mut pick = None;
    for (i, &d) in nearest.iter().enumerate() {
        if d > 0.0 {
            pick = Some(i);
            if target < d {
                break;
            }
            target -= d;
        }
    }
    pick
}

/// Greedy k-means++: each step draws `2 + ln k` D²-weighted candidates and
/// keeps the one that lowers the total squared distance most.
fn plus_plus_init(points: &Points, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.m.n_rows();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut chosen = vec![rng.random_range(0..n)];
    let mut centroids = vec![points.dense(chosen[0])];
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| points.dist(i, &centroids[0], sq_norm(&centroids[0])))
        .collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let Some(candidate) = d2_sample(&nearest, total, rng) else {
                break;
            };
            let c = points.dense(candidate);
            let c_sq = sq_norm(&c);
            let updated: Vec<f64> = nearest
                .iter()
                .enumerate()
                .map(|(i, &d)| d.min(points.dist(i, &c, c_sq)))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, candidate, updated));
            }
        }
        let (next, updated) = match best {
            Some((_, next, updated)) => (next, updated),
            None => {
                // every point coincides with a centroid; take an unused index
                let unused: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                let next = unused[rng.random_range(0..unused.len())];
                (next, nearest.clone())
            }
        };
        chosen.push(next);
        nearest = updated;
        centroids.push(points.dense(next));
    }
    centroids
}

/// Assign every point to its nearest centroid (lowest index on ties), then
/// reseed each empty cluster at the point farthest from its centroid.
/// Returns the inertia of the resulting assignment.
fn assign(points: &Points, centroids: &mut [Vec<f64>], assignments: &mut [usize]) -> f64 {
    let k = centroids.len();
    let mut centroid_sq: Vec<f64> = centroids.iter().map(|c| sq_norm(c)).collect();
    let mut dists = vec![0.0; assignments.len()];
    for (i, slot) in assignments.iter_mut().enumerate() {
        let (best, d) = (0..k)
            .map(|c| (c, points.dist(i, &centroids[c], centroid_sq[c])))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        *slot = best;
        dists[i] = d;
    }

    let mut sizes = vec![0usize; k];
    for &c in assignments.iter() {
        sizes[c] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let donor = (0..assignments.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dists[b] >= dists[i] => Some(b),
                _ => Some(i),
            })
            .expect("k <= n leaves a cluster with two or more points");
        sizes[assignments[donor]] -= 1;
        sizes[empty] = 1;
        assignments[donor] = empty;
        dists[donor] = 0.0;
        centroids[empty] = points.dense(donor);
        centroid_sq[empty] = points.sq[donor];
    }
    dists.iter().sum()
}

fn update_centroids(points: &Points, assignments: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; points.m.n_cols()]; k];
    let mut counts = vec![0usize; k];
    for (i, &c) in assignments.iter().enumerate() {
        counts[c] += 1;
        for &(j, v) in points.m.row(i) {
            sums[c][j] += v;
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        let count = count.max(1) as f64;
        sum.iter_mut().for_each(|x| *x /= count);
    }
    sums
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn kmeans(matrix: &WeightedMatrix, params: KMeansParams) -> Result<Clustering, TopicError> {
    let n = matrix.n_rows();
    if params.k == 0 || params.k > n {
        return Err(TopicError::KExceedsDocs { k: params.k, n_docs: n });
    }
    let points = Points {
        m: matrix,
        sq: (0..n)
            .map(|i| matrix.row(i).iter().map(|(_, v)| v * v).sum())
            .collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = plus_plus_init(&points, params.k, &mut rng);
    let mut assignments = vec![0; n];
    let mut trace = Vec::new();
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        trace.push(assign(&points, &mut centroids, &mut assignments));
        let updated = update_centroids(&points, &assignments, params.k);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt();
        centroids = updated;
        if shift < params.tol {
            break;
        }
    }
    // Final assignment against the last centroids.
    let inertia = assign(&points, &mut centroids, &mut assignments);
    trace.push(inertia);

    Ok(Clustering {
        k: params.k,
        assignments,
        centroids,
        inertia,
        inertia_trace: trace,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(raw: &[[f64; 2]]) -> WeightedMatrix {
        WeightedMatrix::from_dense(&raw.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn sse(raw: &[[f64; 2]], labels: &[usize], k: usize) -> f64 {
        (0..k)
            .map(|c| {
                let members: Vec<_> = (0..raw.len()).filter(|&i| labels[i] == c).collect();
                if members.is_empty() {
                    return 0.0;
                }
                let m = members.len() as f64;
                let mean = [
                    members.iter().map(|&i| raw[i][0]).sum::<f64>() / m,
                    members.iter().map(|&i| raw[i][1]).sum::<f64>() / m,
                ];
                members
                    .iter()
                    .map(|&i| (raw[i][0] - mean[0]).powi(2) + (raw[i][1] - mean[1]).powi(2))
                    .sum()
            })
            .sum()
    }

    #[test]
    fn k_equal_one_gives_the_mean() {
        let raw = [[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]];
        let c = kmeans(&points(&raw), KMeansParams::new(1, 7)).unwrap();
        assert!((c.centroids[0][0] - 1.0).abs() < 1e-12);
        assert!((c.centroids[0][1] - 1.0).abs() < 1e-12);
        // total variance: 2 + 2 + 4
        assert!((c.inertia - sse(&raw, &[0, 0, 0], 1)).abs() < 1e-12);
        assert!((c.inertia - 8.0).abs() < 1e-12);
    }

    #[test]
    fn two_pairs_is_the_unique_optimum() {
        let raw = [[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]];
        // brute force over all labelings with both clusters non-empty
        let mut best = (f64::INFINITY, 0u32, vec![]);
        for mask in 1u32..(1 << 4) - 1 {
            let labels: Vec<usize> = (0..4).map(|i| ((mask >> i) & 1) as usize).collect();
            let cost = sse(&raw, &labels, 2);
            if cost < best.0 - 1e-9 {
                best = (cost, 1, labels);
            } else if (cost - best.0).abs() <= 1e-9 {
                best.1 += 1;
            }
        }
        // the optimum and its label swap
        assert_eq!(best.1, 2);
        assert_eq!(best.0, 1.0);
        for seed in 0..20 {
            let c = kmeans(&points(&raw), KMeansParams::new(2, seed)).unwrap();
            let a = &c.assignments;
            assert_eq!(a[0], a[1], "seed {seed}");
            assert_eq!(a[2], a[3], "seed {seed}");
            assert_ne!(a[0], a[2], "seed {seed}");
            assert!((c.inertia - best.0).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let raw: Vec<[f64; 2]> = (0..30)
            .map(|i| [(i * 7 % 11) as f64, (i * 5 % 13) as f64])
            .collect();
        let a = kmeans(&points(&raw), KMeansParams::new(4, 99)).unwrap();
        let b = kmeans(&points(&raw), KMeansParams::new(4, 99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inertia_never_increases() {
        let raw: Vec<[f64; 2]> = (0..60)
            .map(|i| [((i * 37) % 101) as f64 / 10.0, ((i * 53) % 97) as f64 / 10.0])
            .collect();
        for seed in 0..10 {
            let c = kmeans(&points(&raw), KMeansParams::new(5, seed)).unwrap();
            for w in c.inertia_trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", c.inertia_trace);
            }
            assert!(c.sizes().iter().all(|&s| s > 0));
        }
    }

    #[test]
    fn duplicate_points_keep_every_cluster_non_empty() {
        let raw = [[1.0, 1.0]; 5];
        let c = kmeans(&points(&raw), KMeansParams::new(3, 1)).unwrap();
        assert!(c.sizes().iter().all(|&s| s > 0));
        assert_eq!(c.inertia, 0.0);
    }

    #[test]
    fn too_many_clusters() {
        let raw = [[0.0, 0.0]];
        assert!(matches!(
            kmeans(&points(&raw), KMeansParams::new(2, 0)),
            Err(TopicError::KExceedsDocs { .. })
        ));
    }
}
