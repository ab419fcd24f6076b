use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Matrix, TopicError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmfParams {
    pub rank: usize,
    pub max_iter: usize,
    /// Stop when one sweep improves the objective by less than this
    /// fraction of its previous value.
    pub tol: f64,
    pub seed: u64,
}

impl Default for NmfParams {
    fn default() -> Self {
        NmfParams {
            rank: 2,
            max_iter: 200,
            tol: 1e-4,
            seed: 0,
        }
    }
}

/// `V ≈ W·H` with `W: rows × rank`, `H: rank × cols`, both nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmfFactors {
    pub w: Matrix,
    pub h: Matrix,
    /// Squared Frobenius error, starting with the random initialization.
    pub objective_trace: Vec<f64>,
}

impl NmfFactors {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace is never empty")
    }
}

fn objective(v: &Matrix, w: &Matrix, h: &Matrix) -> f64 {
    let wh = w.matmul(h);
    v.as_slice()
        .iter()
        .zip(wh.as_slice())
        .map(|(a, b)| (a - b).powi(2))
        .sum()
}

/// Multiply each entry of `target` by `num / den` where `den > 0`. A zero
/// denominator means the entry does not influence the objective, so it is
/// left unchanged.
fn multiplicative_step(target: &mut Matrix, num: &Matrix, den: &Matrix) {
    for i in 0..target.rows() {
        for j in 0..target.cols() {
            let d = den.get(i, j);
            if d > 0.0 {
                target.set(i, j, target.get(i, j) * num.get(i, j) / d);
            }
        }
    }
}

/// Frobenius-norm NMF by Lee-Seung multiplicative updates.
pub fn nmf(v: &Matrix, params: NmfParams) -> Result<NmfFactors, TopicError> {
    if v.as_slice().iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(TopicError::NegativeInput);
    }
    let (m, n, r) = (v.rows(), v.cols(), params.rank);
    if r == 0 || r > m.min(n) {
        return Err(TopicError::RankTooLarge { rank: r, rows: m, cols: n });
    }

    let mean = v.as_slice().iter().sum::<f64>() / (m * n) as f64;
    let scale = (mean / r as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w = Matrix::from_fn(m, r, |_, _| scale * rng.random::<f64>());
    let mut h = Matrix::from_fn(r, n, |_, _| scale * rng.random::<f64>());

    let mut trace = vec![objective(v, &w, &h)];
    for _ in 0..params.max_iter {
        // H <- H * (W^T V) / (W^T W H)
        let wt = w.transpose();
        let num = wt.matmul(v);
        let den = wt.matmul(&w).matmul(&h);
        multiplicative_step(&mut h, &num, &den);

        // W <- W * (V H^T) / (W H H^T)
        let ht = h.transpose();
        let num = v.matmul(&ht);
        let den = w.matmul(&h.matmul(&ht));
        multiplicative_step(&mut w, &num, &den);

        let prev = *trace.last().expect("seeded above");
        let obj = objective(v, &w, &h);
        trace.push(obj);
        if prev - obj <= params.tol * prev {
            break;
        }
    }
    Ok(NmfFactors {
        w,
        h,
        objective_trace: trace,
    })
}
