use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::TrendError;
use crate::ingest::{normalize_text, tokenize, GeoPoint, Lang, Post, Stopwords};

const BUILTIN_GAZETTEER: &str = include_str!("../../data/gazetteer.csv");

/// Region assigned to geotags farther than [`GEOTAG_RADIUS_KM`] from every entry.
pub const OTHER_REGION: &str = "other";
pub const GEOTAG_RADIUS_KM: f64 = 100.0;
const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Great-circle distance in kilometres.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Deserialize)]
struct GazetteerRow {
    region: String,
    lang: String,
    alias: String,
    lat: f64,
    lon: f64,
}

/// Place names with coordinates. Each region may carry several aliases.
#[derive(Debug, Clone, PartialEq)]
pub struct Gazetteer {
    regions: Vec<Region>,
    /// Alias token sequence → region index.
    aliases: BTreeMap<Vec<String>, usize>,
    longest_alias: usize,
}

fn alias_tokens(text: &str) -> Vec<String> {
    tokenize(&normalize_text(text, Lang::Unknown), &Stopwords::empty())
}

impl Gazetteer {
    pub fn builtin() -> Self {
        Self::from_csv(BUILTIN_GAZETTEER.as_bytes()).expect("shipped gazetteer parses")
    }

    /// CSV with header `region,lang,alias,lat,lon`.
    pub fn from_csv(bytes: &[u8]) -> Result<Self, TrendError> {
        let mut reader = csv::Reader::from_reader(bytes);
        let mut regions: Vec<Region> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut aliases: BTreeMap<Vec<String>, usize> = BTreeMap::new();
        for (i, row) in reader.deserialize::<GazetteerRow>().enumerate() {
            let row = row.map_err(|e| TrendError::BadGazetteer(e.to_string()))?;
            if GeoPoint::new(row.lat, row.lon).is_none() {
                return Err(TrendError::BadGazetteer(format!(
                    "row {}: coordinates out of range",
                    i + 1
                )));
            }
            if Lang::parse(&row.lang).is_none() {
                return Err(TrendError::BadGazetteer(format!(
                    "row {}: unknown language `{}`",
                    i + 1,
                    row.lang
                )));
            }
            let region = *index.entry(row.region.clone()).or_insert_with(|| {
                regions.push(Region {
                    name: row.region.clone(),
                    lat: row.lat,
                    lon: row.lon,
                });
                regions.len() - 1
            });
            let tokens = alias_tokens(&row.alias);
            if tokens.is_empty() {
                continue;
            }
            if let Some(&prev) = aliases.get(&tokens) {
                if prev != region {
                    return Err(TrendError::BadGazetteer(format!(
                        "alias `{}` names both {} and {}",
                        row.alias, regions[prev].name, row.region
                    )));
                }
            }
            aliases.insert(tokens, region);
        }
        let longest_alias = aliases.keys().map(Vec::len).max().unwrap_or(0);
        Ok(Gazetteer {
            regions,
            aliases,
            longest_alias,
        })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    /// Nearest region within `radius_km`; equidistant regions resolve to the
    /// lexicographically smaller name.
    pub fn nearest(&self, point: GeoPoint, radius_km: f64) -> Option<&Region> {
        self.regions
            .iter()
            .map(|r| (haversine_km(point, GeoPoint { lat: r.lat, lon: r.lon }), r))
            .filter(|(d, _)| *d <= radius_km)
            .min_by(|(da, a), (db, b)| da.total_cmp(db).then_with(|| a.name.cmp(&b.name)))
            .map(|(_, r)| r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocationSource {
    Geotag,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationMention {
    /// The matched text, or `lat,lon` for a geotag.
    pub mention: String,
    pub region: String,
    pub source: LocationSource,
}

/// Location mentions of one post: its geotag first, then text matches in
/// reading order. Text matching prefers the longest alias at each position.
pub fn extract_locations(post: &Post, gazetteer: &Gazetteer) -> Vec<LocationMention> {
    let mut out = Vec::new();
    if let Some(geo) = post.geo {
        out.push(LocationMention {
            mention: format!("{},{}", geo.lat, geo.lon),
            region: gazetteer
                .nearest(geo, GEOTAG_RADIUS_KM)
                .map_or_else(|| OTHER_REGION.to_string(), |r| r.name.clone()),
            source: LocationSource::Geotag,
        });
    }
    let tokens = tokenize(&post.norm_text, &Stopwords::empty());
    let mut i = 0;
    while i < tokens.len() {
        let max = gazetteer.longest_alias.min(tokens.len() - i);
        let hit = (1..=max)
            .rev()
            .find_map(|len| gazetteer.aliases.get(&tokens[i..i + len]).map(|&r| (len, r)));
        match hit {
            Some((len, region)) => {
                out.push(LocationMention {
                    mention: tokens[i..i + len].join(" "),
                    region: gazetteer.regions[region].name.clone(),
                    source: LocationSource::Text,
                });
                i += len;
            }
            None => i += 1,
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCount {
    pub post_count: usize,
    pub lat: f64,
    pub lon: f64,
}

/// Posts per region, counting each post once per region; `other` is left out.
pub fn aggregate_regions(
    per_post: &[Vec<LocationMention>],
    gazetteer: &Gazetteer,
) -> BTreeMap<String, RegionCount> {
    let mut out: BTreeMap<String, RegionCount> = BTreeMap::new();
    for mentions in per_post {
        let regions: BTreeSet<&str> = mentions.iter().map(|m| m.region.as_str()).collect();
        for name in regions {
            let Some(region) = gazetteer.region(name) else {
                continue;
            };
            out.entry(name.to_string())
                .or_insert(RegionCount {
                    post_count: 0,
                    lat: region.lat,
                    lon: region.lon,
                })
                .post_count += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_dataset, PostSchema, SourceFormat};

    fn post(text: &str, geo: Option<(f64, f64)>) -> Post {
        let geo = geo.map_or(String::new(), |(lat, lon)| format!(",\"lat\":{lat},\"lon\":{lon}"));
        let body = format!(
            "{{\"id\":\"1\",\"text\":{},\"timestamp\":\"2024-01-01T00:00:00Z\"{geo}}}",
            serde_json::to_string(text).unwrap()
        );
        parse_dataset(body.as_bytes(), SourceFormat::Jsonl, &PostSchema::default())
            .unwrap()
            .0
            .remove(0)
    }

    #[test]
    fn builtin_size() {
        let g = Gazetteer::builtin();
        assert!(g.regions().len() >= 60);
        assert!(g.region("Doha").is_some());
    }

    #[test]
    fn geotag_at_doha() {
        let g = Gazetteer::builtin();
        let m = extract_locations(&post("nothing here", Some((25.2854, 51.531))), &g);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].region, "Doha");
        assert_eq!(m[0].source, LocationSource::Geotag);
    }

    #[test]
    fn far_geotag_is_other() {
        let g = Gazetteer::builtin();
        let m = extract_locations(&post("x", Some((-33.86, 151.2))), &g);
        assert_eq!(m[0].region, OTHER_REGION);
        assert!(aggregate_regions(&[m], &g).is_empty());
    }

    #[test]
    fn english_and_arabic_text() {
        let g = Gazetteer::builtin();
        let en = extract_locations(&post("I love Doha", None), &g);
        assert_eq!(en.len(), 1);
        assert_eq!((en[0].region.as_str(), en[0].source), ("Doha", LocationSource::Text));
        let ar = extract_locations(&post("الدوحة جميلة", None), &g);
        assert_eq!(ar[0].region, "Doha");
        assert_eq!(ar[0].source, LocationSource::Text);
    }

    #[test]
    fn longest_alias_wins() {
        let g = Gazetteer::builtin();
        let m = extract_locations(&post("زيارة الى سلطنة عمان", None), &g);
        let regions: Vec<_> = m.iter().map(|m| m.region.as_str()).collect();
        assert_eq!(regions, ["Oman"]);
        let m = extract_locations(&post("flights from Abu Dhabi", None), &g);
        assert_eq!(m[0].region, "Abu Dhabi");
    }

    #[test]
    fn equidistant_tie_goes_to_smaller_name() {
        let csv = "region,lang,alias,lat,lon\nZeta,en,Zeta,0,1\nAlpha,en,Alpha,0,-1\n";
        let g = Gazetteer::from_csv(csv.as_bytes()).unwrap();
        let r = g.nearest(GeoPoint { lat: 0.0, lon: 0.0 }, 500.0).unwrap();
        assert_eq!(r.name, "Alpha");
    }

    #[test]
    fn haversine_is_symmetric() {
        let a = GeoPoint { lat: 25.28, lon: 51.53 };
        let b = GeoPoint { lat: 24.71, lon: 46.67 };
        assert_eq!(haversine_km(a, b), haversine_km(b, a));
        // Doha to Riyadh is roughly 490 km
        assert!((haversine_km(a, b) - 490.0).abs() < 15.0);
    }

    #[test]
    fn doha_twice_counts_once() {
        let g = Gazetteer::builtin();
        let m = extract_locations(&post("Doha, always Doha", Some((25.2854, 51.531))), &g);
        assert_eq!(m.len(), 3);
        let counts = aggregate_regions(&[m], &g);
        assert_eq!(counts["Doha"].post_count, 1);
    }

    #[test]
    fn no_locations_empty_map() {
        let g = Gazetteer::builtin();
        assert!(aggregate_regions(&[vec![], vec![]], &g).is_empty());
    }

    #[test]
    fn planted_region_counts() {
        let g = Gazetteer::builtin();
        let texts = [
            "Doha", "Doha", "Doha", "Doha", "Doha", "Cairo", "Cairo", "Cairo", "Cairo",
            "القاهرة", "Beirut and Doha", "Beirut", "Beirut", "nowhere", "nothing", "Riyadh",
            "الرياض", "Riyadh Riyadh", "Tunis", "no place",
        ];
        let per_post: Vec<_> = texts.iter().map(|t| extract_locations(&post(t, None), &g)).collect();
        let counts = aggregate_regions(&per_post, &g);
        let got: Vec<_> = counts.iter().map(|(k, v)| (k.as_str(), v.post_count)).collect();
        assert_eq!(
            got,
            [("Beirut", 3), ("Cairo", 5), ("Doha", 6), ("Riyadh", 3), ("Tunis", 1)]
        );
    }
}
