use chrono::{DateTime, Datelike, Duration, DurationRound, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::ingest::Post;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Hour,
    Day,
    Week,
}

impl Granularity {
    pub fn step(&self) -> Duration {
        match self {
            Granularity::Hour => Duration::hours(1),
            Granularity::Day => Duration::days(1),
            Granularity::Week => Duration::weeks(1),
        }
    }

    /// Start of the UTC bucket holding `t`; weeks start on Monday.
    pub fn floor(&self, t: DateTime<Utc>) -> DateTime<Utc> {
        match self {
            Granularity::Hour => t.duration_trunc(Duration::hours(1)).expect("hour truncation"),
            Granularity::Day => day_start(t),
            Granularity::Week => {
                let day = day_start(t);
                day - Duration::days(i64::from(day.weekday().num_days_from_monday()))
            }
        }
    }
}

fn day_start(t: DateTime<Utc>) -> DateTime<Utc> {
    Utc.from_utc_datetime(&t.date_naive().and_hms_opt(0, 0, 0).expect("midnight"))
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hour" => Ok(Granularity::Hour),
            "day" => Ok(Granularity::Day),
            "week" => Ok(Granularity::Week),
            other => Err(format!("unknown granularity `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub start: DateTime<Utc>,
    pub post_count: usize,
    /// Sum of likes and shares.
    pub engagement: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub granularity: Granularity,
    pub buckets: Vec<Bucket>,
}

impl TimeSeries {
    pub fn counts(&self) -> Vec<usize> {
        self.buckets.iter().map(|b| b.post_count).collect()
    }

    /// Index of the bucket holding `t`, if inside the series.
    pub fn index_of(&self, t: DateTime<Utc>) -> Option<usize> {
        let first = self.buckets.first()?.start;
        let start = self.granularity.floor(t);
        if start < first {
            return None;
        }
        let i = ((start - first).num_seconds() / self.granularity.step().num_seconds()) as usize;
        (i < self.buckets.len()).then_some(i)
    }
}

/// Contiguous UTC buckets from the earliest to the latest post, empty
/// buckets included.
pub fn bucket_timeline(posts: &[Post], granularity: Granularity) -> TimeSeries {
    let (Some(min), Some(max)) = (
        posts.iter().map(|p| p.timestamp).min(),
        posts.iter().map(|p| p.timestamp).max(),
    ) else {
        return TimeSeries {
            granularity,
            buckets: Vec::new(),
        };
    };
    let first = granularity.floor(min);
    let last = granularity.floor(max);
    let step = granularity.step();
    let n = ((last - first).num_seconds() / step.num_seconds()) as usize + 1;
    let mut buckets: Vec<Bucket> = (0..n)
        .map(|i| Bucket {
            start: first + step * i as i32,
            post_count: 0,
            engagement: 0,
        })
        .collect();
    for post in posts {
        let i = ((granularity.floor(post.timestamp) - first).num_seconds() / step.num_seconds()) as usize;
        buckets[i].post_count += 1;
        buckets[i].engagement += post.engagement();
    }
    TimeSeries {
        granularity,
        buckets,
    }
}
