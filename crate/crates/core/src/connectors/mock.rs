use crate::ingest::{decode_records, normalize_text, Lang, RawRecord, SourceFormat};

use super::{ConnectorError, Credentials, SearchRequest, Source, SourceDescriptor};

const FIXTURE: &str = include_str!("../../data/mock_source.jsonl");

/// Offline source over a fixed record set; matches records whose normalized
/// text contains the normalized query.
pub struct MockSource {
    descriptor: SourceDescriptor,
    records: Vec<RawRecord>,
}

impl MockSource {
    pub fn new(descriptor: SourceDescriptor, records: Vec<RawRecord>) -> Self {
        MockSource { descriptor, records }
    }

    pub fn builtin() -> Self {
        Self::new(SourceDescriptor::free("mock_local", "Local mock feed"), fixture_records())
    }

    pub(super) fn matching(&self, query: &str) -> Vec<RawRecord> {
        let needle = normalize_text(query, Lang::Unknown);
        self.records
            .iter()
            .filter(|r| {
                r.fields
                    .get("text")
                    .is_some_and(|t| normalize_text(t, Lang::Unknown).contains(&needle))
            })
            .cloned()
            .collect()
    }
}

pub(super) fn fixture_records() -> Vec<RawRecord> {
    decode_records(FIXTURE.as_bytes(), SourceFormat::Jsonl).expect("mock fixture decodes")
}

impl Source for MockSource {
    fn descriptor(&self) -> &SourceDescriptor {
        &self.descriptor
    }

    fn fetch(&self, request: &SearchRequest, _: Option<&Credentials>) -> Result<Vec<RawRecord>, ConnectorError> {
        Ok(self.matching(&request.query))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_has_ten_doha_posts() {
        let m = MockSource::builtin();
        assert_eq!(m.matching("doha").len(), 10);
        assert_eq!(m.matching("DOHA").len(), 10);
        assert_eq!(m.matching("الدوحة").len(), 1);
        assert!(m.matching("zzzz").is_empty());
    }
}
