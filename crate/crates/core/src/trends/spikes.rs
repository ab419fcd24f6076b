use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{TimeSeries, TrendError};
use crate::ingest::Post;

pub const DEFAULT_WINDOW: usize = 7;
pub const DEFAULT_Z_THRESHOLD: f64 = 2.0;
pub const SPIKE_TOP_TERMS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub bucket_start: DateTime<Utc>,
    pub post_count: usize,
    /// Infinite when the trailing window is flat and the bucket departs from it.
    #[serde(with = "extended_f64")]
    pub z_score: f64,
    pub top_terms: Vec<String>,
}

/// JSON has no infinities; they travel as the strings `"inf"` / `"-inf"`.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            Repr::Text(if *v > 0.0 { "inf" } else { "-inf" }.into()).serialize(s)
        } else {
            Repr::Finite(*v).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Finite(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad z-score `{t}`"))),
        }
    }
}

/// Rolling z-scores of `counts` against the trailing window.
///
/// Bucket `i` is compared with the `window` buckets before it (population
/// mean and standard deviation). Buckets with `i < window` get `None`. When
/// the window is flat the score is 0 for a bucket equal to it and infinite
/// otherwise.
pub fn rolling_z_scores(counts: &[usize], window: usize) -> Vec<Option<f64>> {
    (0..counts.len())
        .map(|i| {
            if window == 0 || i < window {
                return None;
            }
            let win = &counts[i - window..i];
            let mean = win.iter().sum::<usize>() as f64 / window as f64;
            let var = win
                .iter()
                .map(|&c| (c as f64 - mean).powi(2))
                .sum::<f64>()
                / window as f64;
            let std = var.sqrt();
            let diff = counts[i] as f64 - mean;
            Some(if std > 0.0 {
                diff / std
            } else if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            })
        })
        .collect()
}

/// Most frequent tokens among `posts` in bucket order, ties lexicographic.
fn top_terms<'a>(posts: impl Iterator<Item = &'a Post>, n: usize) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for post in posts {
        for t in &post.tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by_key(|t| std::cmp::Reverse(t.1));
    ranked.into_iter().take(n).map(|(t, _)| t.to_string()).collect()
}

/// Buckets whose rolling z-score reaches `z_threshold`, each with the top
/// terms of the posts falling in it.
pub fn detect_spikes(
    series: &TimeSeries,
    posts: &[Post],
    window: usize,
    z_threshold: f64,
) -> Result<Vec<Spike>, TrendError> {
    if window == 0 || series.buckets.len() < window + 1 {
        return Err(TrendError::SeriesTooShort {
            buckets: series.buckets.len(),
            window,
        });
    }
    let scores = rolling_z_scores(&series.counts(), window);
    Ok(scores
        .iter()
        .enumerate()
        .filter_map(|(i, z)| z.filter(|z| *z >= z_threshold).map(|z| (i, z)))
        .map(|(i, z)| {
            let in_bucket = posts
                .iter()
                .filter(|p| series.index_of(p.timestamp) == Some(i));
            Spike {
                bucket_start: series.buckets[i].start,
                post_count: series.buckets[i].post_count,
                z_score: z,
                top_terms: top_terms(in_bucket, SPIKE_TOP_TERMS),
            }
        })
        .collect())
}
