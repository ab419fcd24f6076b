use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Matrix, TopicError, Vocabulary};

/// Sparse nonnegative document-term matrix, one sorted `(col, value)` list
/// per row. Rows produced by [`tfidf_matrix`] have unit L2 norm or are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMatrix {
    n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl WeightedMatrix {
    /// Build from dense rows, keeping the nonzero entries.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, TopicError> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut sparse = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != n_cols {
                return Err(TopicError::DimensionMismatch);
            }
            if row.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(TopicError::NegativeInput);
            }
            sparse.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect(),
            );
        }
        Ok(WeightedMatrix {
            n_cols,
            rows: sparse,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        row.binary_search_by_key(&j, |(c, _)| *c)
            .map_or(0.0, |k| row[k].1)
    }

    /// `(row, col, value)` triples in row-major order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v)))
    }

    pub fn to_dense(&self) -> Matrix {
        self.select_rows(&(0..self.n_rows()).collect::<Vec<_>>())
    }

    /// Dense copy of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(rows.len(), self.n_cols);
        for (r, &i) in rows.iter().enumerate() {
            for &(j, v) in &self.rows[i] {
                out.set(r, j, v);
            }
        }
        out
    }
}

/// Smoothed inverse document frequency: `ln((1 + N) / (1 + df)) + 1`.
pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// TF-IDF weights with raw-count TF and smoothed IDF, rows L2-normalized.
/// Tokens outside the vocabulary are ignored.
pub fn tfidf_matrix<D: AsRef<[String]>>(corpus: &[D], vocab: &Vocabulary) -> WeightedMatrix {
    let idf: Vec<f64> = vocab
        .df()
        .iter()
        .map(|&df| smoothed_idf(vocab.n_docs(), df))
        .collect();
    let rows = corpus
        .iter()
        .map(|doc| {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for term in doc.as_ref() {
                if let Some(j) = vocab.index_of(term) {
                    *counts.entry(j).or_insert(0) += 1;
                }
            }
            let mut row: Vec<(usize, f64)> = counts
                .into_iter()
                .map(|(j, tf)| (j, tf as f64 * idf[j]))
                .collect();
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|(_, v)| *v /= norm);
            }
            row
        })
        .collect();
    WeightedMatrix {
        n_cols: vocab.len(),
        rows,
    }
}
