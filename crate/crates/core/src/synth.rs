//! Seeded synthetic corpora with known structure, used by the test suites
//! and to build the shipped `fixtures/posts.jsonl`.
//!
//! Each post belongs to one of three topics with disjoint 10-word keyword
//! sets. Shared background words (place names, sentiment words, the odd
//! propaganda phrase) and the metadata fields give every analysis kind
//! something to find.

use chrono::{Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

pub const TOPIC_KEYWORDS: [[&str; 10]; 3] = [
    [
        "match", "goal", "striker", "league", "stadium", "coach", "penalty", "referee", "midfielder",
        "tournament",
    ],
    [
        "inflation", "market", "stocks", "oil", "budget", "investment", "currency", "bank", "exports",
        "tariff",
    ],
    [
        "vaccine", "hospital", "clinic", "doctors", "virus", "nurses", "patients", "medicine", "surgery",
        "pandemic",
    ],
];

const BACKGROUND: [&str; 23] = [
    "doha", "cairo", "riyadh", "beirut", "dubai", "amman", "today", "people", "city", "week", "report",
    "video", "morning", "night", "update", "great", "terrible", "happy", "sad", "good", "bad", "love",
    "hate",
];

const PHRASES: [&str; 3] = ["fake news", "everybody knows", "before it is too late"];

/// Geotag anchors (lat, lon) near gazetteer entries.
const ANCHORS: [(f64, f64); 5] = [
    (25.2854, 51.531),
    (30.0444, 31.2357),
    (24.7136, 46.6753),
    (33.8938, 35.5018),
    (25.2048, 55.2708),
];

pub const AUTHORS: usize = 30;
pub const DAYS: i64 = 21;
/// Day (0-based) that receives extra posts.
pub const SPIKE_DAY: i64 = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpus {
    /// One JSON object per post, fields as in the default upload schema.
    pub records: Vec<Value>,
    /// Planted topic of each record.
    pub topics: Vec<usize>,
}

impl PlantedCorpus {
    pub fn to_jsonl(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.records.iter().map(|r| r["text"].as_str().unwrap_or_default()).collect()
    }
}

/// `n` posts drawn round-robin across the three topics.
pub fn planted_corpus(seed: u64, n: usize) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).single().expect("valid date");
    let mut records = Vec::with_capacity(n);
    let mut topics = Vec::with_capacity(n);
    for i in 0..n {
        let topic = i % TOPIC_KEYWORDS.len();
        let mut words: Vec<String> = (0..rng.random_range(5..=8))
            .map(|_| TOPIC_KEYWORDS[topic][rng.random_range(0..10)].to_string())
            .collect();
        for _ in 0..rng.random_range(0..=2) {
            words.push(BACKGROUND[rng.random_range(0..BACKGROUND.len())].to_string());
        }
        words.shuffle(&mut rng);
        if rng.random_bool(0.1) {
            let at = rng.random_range(0..=words.len());
            words.insert(at, PHRASES[rng.random_range(0..PHRASES.len())].to_string());
        }
        let mut text = words.join(" ");
        if let Some(first) = text.get(..1) {
            text = first.to_uppercase() + &text[1..];
        }

        let day = if rng.random_bool(0.12) {
            SPIKE_DAY
        } else {
            rng.random_range(0..DAYS)
        };
        let ts = start + Duration::days(day) + Duration::minutes(rng.random_range(0..24 * 60));
        // squaring skews authorship toward low indices
        let author = (AUTHORS as f64 * rng.random::<f64>().powi(2)) as usize;

        let mut obj = Map::new();
        obj.insert("id".into(), json!(format!("p{i:03}")));
        obj.insert("text".into(), json!(text));
        obj.insert("timestamp".into(), json!(ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)));
        obj.insert("author".into(), json!(format!("user_{author:02}")));
        obj.insert("lang".into(), json!("en"));
        obj.insert("likes".into(), json!(rng.random_range(0..50)));
        obj.insert("shares".into(), json!(rng.random_range(0..10)));
        if i > 0 && rng.random_bool(0.3) {
            obj.insert("parent_id".into(), json!(format!("p{:03}", rng.random_range(0..i))));
        }
        if rng.random_bool(0.2) {
            let m: Vec<String> = (0..rng.random_range(1..=2))
                .map(|_| format!("user_{:02}", rng.random_range(0..AUTHORS)))
                .collect();
            obj.insert("mentions".into(), json!(m));
        }
        if rng.random_bool(0.15) {
            let (lat, lon) = ANCHORS[rng.random_range(0..ANCHORS.len())];
            let jitter = |rng: &mut ChaCha8Rng| (rng.random_range(-0.05..0.05) * 1e4f64).round() / 1e4;
            obj.insert("lat".into(), json!(((lat + jitter(&mut rng)) * 1e4).round() / 1e4));
            obj.insert("lon".into(), json!(((lon + jitter(&mut rng)) * 1e4).round() / 1e4));
        }
        records.push(Value::Object(obj));
        topics.push(topic);
    }
    PlantedCorpus { records, topics }
}
