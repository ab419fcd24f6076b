use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{IngestError, Lang, Post};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRange {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub n_posts: usize,
    pub time_range: TimeRange,
    pub lang_counts: BTreeMap<Lang, usize>,
    /// Fraction of posts carrying each optional field, in `[0, 1]`.
    pub field_fill_rates: BTreeMap<String, f64>,
}

pub fn infer_metadata(posts: &[Post]) -> Result<DatasetMetadata, IngestError> {
    let first = posts.first().ok_or(IngestError::EmptyDataset)?;
    let mut time_range = TimeRange {
        start: first.timestamp,
        end: first.timestamp,
    };
    let mut lang_counts = BTreeMap::new();
    let mut filled: BTreeMap<&str, usize> = [
        "author",
        "geo",
        "parent_id",
        "mentions",
        "likes",
        "shares",
        "lang",
    ]
    .into_iter()
    .map(|k| (k, 0))
    .collect();

    for post in posts {
        time_range.start = time_range.start.min(post.timestamp);
        time_range.end = time_range.end.max(post.timestamp);
        *lang_counts.entry(post.lang).or_insert(0) += 1;
        let present = [
            ("author", post.author.is_some()),
            ("geo", post.geo.is_some()),
            ("parent_id", post.parent_id.is_some()),
            ("mentions", !post.mentions.is_empty()),
            ("likes", post.likes.is_some()),
            ("shares", post.shares.is_some()),
            ("lang", post.lang != Lang::Unknown),
        ];
        for (field, has) in present {
            if has {
                *filled.get_mut(field).expect("field listed above") += 1;
            }
        }
    }

    let n = posts.len() as f64;
    Ok(DatasetMetadata {
        n_posts: posts.len(),
        time_range,
        lang_counts,
        field_fill_rates: filled
            .into_iter()
            .map(|(k, c)| (k.to_string(), c as f64 / n))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::GeoPoint;
    use chrono::TimeZone;

    fn post(id: usize, lang: Lang) -> Post {
        Post {
            id: id.to_string(),
            text: "x".into(),
            norm_text: "x".into(),
            tokens: vec![],
            author: None,
            timestamp: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
                + chrono::Duration::hours(id as i64),
            geo: None,
            parent_id: None,
            mentions: vec![],
            likes: None,
            shares: None,
            lang,
        }
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(infer_metadata(&[]), Err(IngestError::EmptyDataset)));
    }

    #[test]
    fn single_post_range_is_a_point() {
        let meta = infer_metadata(&[post(0, Lang::En)]).unwrap();
        assert_eq!(meta.n_posts, 1);
        assert_eq!(meta.time_range.start, meta.time_range.end);
    }

    #[test]
    fn geo_fill_rate() {
        let mut with_geo = post(1, Lang::En);
        with_geo.geo = GeoPoint::new(25.0, 51.0);
        let meta = infer_metadata(&[post(0, Lang::En), with_geo]).unwrap();
        assert_eq!(meta.field_fill_rates["geo"], 0.5);
        assert_eq!(meta.field_fill_rates["author"], 0.0);
    }

    #[test]
    fn language_counts_over_fixture() {
        let posts: Vec<Post> = (0..100)
            .map(|i| post(i, if i % 10 < 3 { Lang::Ar } else { Lang::En }))
            .collect();
        let meta = infer_metadata(&posts).unwrap();
        assert_eq!(meta.lang_counts[&Lang::Ar], 30);
        assert_eq!(meta.lang_counts[&Lang::En], 70);
        assert_eq!(meta.lang_counts.values().sum::<usize>(), meta.n_posts);
        assert_eq!(meta.time_range.end - meta.time_range.start, chrono::Duration::hours(99));
    }
}
