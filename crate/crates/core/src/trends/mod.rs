//! Temporal trends and spatial aggregation.

mod spatial;
mod spikes;
mod timeline;

use thiserror::Error;

pub use spatial::{
    aggregate_regions, extract_locations, haversine_km, Gazetteer, LocationMention,
    LocationSource, Region, RegionCount, GEOTAG_RADIUS_KM, OTHER_REGION,
};
pub use spikes::{
    detect_spikes, rolling_z_scores, Spike, DEFAULT_WINDOW, DEFAULT_Z_THRESHOLD, SPIKE_TOP_TERMS,
};
pub use timeline::{bucket_timeline, Bucket, Granularity, TimeSeries};

#[derive(Debug, Error)]
pub enum TrendError {
    #[error("series has {buckets} buckets; spike detection needs more than the window of {window}")]
    SeriesTooShort { buckets: usize, window: usize },
    #[error("invalid gazetteer: {0}")]
    BadGazetteer(String),
}

impl TrendError {
    pub fn code(&self) -> &'static str {
        match self {
            TrendError::SeriesTooShort { .. } => "SERIES_TOO_SHORT",
            TrendError::BadGazetteer(_) => "BAD_GAZETTEER",
        }
    }
}
