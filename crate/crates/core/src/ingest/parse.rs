use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};

use super::{
    detect_language, normalize_text, tokenize, FieldType, GeoPoint, IngestError, Lang, Post,
    PostSchema, RawRecord, RejectCode, Rejection, SourceFormat, Stopwords, ValidationReport,
};

/// Validates raw records against a schema and turns them into posts.
#[derive(Debug, Clone)]
pub struct Ingestor {
    schema: PostSchema,
    stopwords: Stopwords,
}

impl Default for Ingestor {
    fn default() -> Self {
        Ingestor {
            schema: PostSchema::default(),
            stopwords: Stopwords::builtin(),
        }
    }
}

type RowResult<T> = Result<T, (RejectCode, String)>;

impl Ingestor {
    pub fn new(schema: PostSchema, stopwords: Stopwords) -> Result<Self, IngestError> {
        schema.validate()?;
        Ok(Ingestor { schema, stopwords })
    }

    pub fn schema(&self) -> &PostSchema {
        &self.schema
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    pub fn parse(
        &self,
        bytes: &[u8],
        format: SourceFormat,
    ) -> Result<(Vec<Post>, ValidationReport), IngestError> {
        let records = decode_records(bytes, format)?;
        Ok(self.validate_records(records))
    }

    /// Validate already-decoded records (uploads and connector results share
    /// this path). Duplicate ids: the first accepted occurrence wins.
    pub fn validate_records(
        &self,
        records: impl IntoIterator<Item = RawRecord>,
    ) -> (Vec<Post>, ValidationReport) {
        let mut posts = Vec::new();
        let mut report = ValidationReport::default();
        let mut seen = HashSet::new();
        for record in records {
            let outcome = self.to_post(&record).and_then(|post| {
                if seen.contains(&post.id) {
                    Err((RejectCode::DupId, format!("duplicate id `{}`", post.id)))
                } else {
                    Ok(post)
                }
            });
            match outcome {
                Ok(post) => {
                    seen.insert(post.id.clone());
                    report.accepted += 1;
                    posts.push(post);
                }
                Err((error_code, message)) => report.rejected.push(Rejection {
                    row_index: record.row_index,
                    error_code,
                    message,
                }),
            }
        }
        (posts, report)
    }

    fn to_post(&self, record: &RawRecord) -> RowResult<Post> {
        let get = |name: &str| -> Option<&str> {
            record
                .fields
                .get(name)
                .map(String::as_str)
                .filter(|v| !v.trim().is_empty())
        };

        for field in &self.schema.required {
            if get(field).is_none() {
                if field == "text" && record.fields.contains_key("text") {
                    return Err((RejectCode::EmptyText, "text is blank".into()));
                }
                return Err((
                    RejectCode::MissingField,
                    format!("required field `{field}` is missing"),
                ));
            }
        }

        let mut timestamp = None;
        for (name, value) in &record.fields {
            let Some(kind) = self.schema.field_type(name) else {
                continue;
            };
            if value.trim().is_empty() {
                continue;
            }
            match kind {
                FieldType::String => {}
                FieldType::Integer => {
                    value.trim().parse::<i64>().map_err(|_| {
                        (
                            RejectCode::TypeMismatch,
                            format!("field `{name}` is not an integer"),
                        )
                    })?;
                }
                FieldType::Float => {
                    let ok = value.trim().parse::<f64>().is_ok_and(f64::is_finite);
                    if !ok {
                        return Err((
                            RejectCode::TypeMismatch,
                            format!("field `{name}` is not a finite number"),
                        ));
                    }
                }
                FieldType::Timestamp => {
                    let ts = parse_timestamp(value).ok_or_else(|| {
                        (
                            RejectCode::BadTimestamp,
                            format!("field `{name}` is not an ISO-8601 timestamp"),
                        )
                    })?;
                    if name == "timestamp" {
                        timestamp = Some(ts);
                    }
                }
            }
        }
        let timestamp = timestamp.ok_or((
            RejectCode::MissingField,
            "required field `timestamp` is missing".to_string(),
        ))?;

        let count = |name: &str| -> RowResult<Option<u64>> {
            match get(name) {
                None => Ok(None),
                Some(v) => v.trim().parse::<u64>().map(Some).map_err(|_| {
                    (
                        RejectCode::TypeMismatch,
                        format!("field `{name}` must be a non-negative integer"),
                    )
                }),
            }
        };
        let likes = count("likes")?;
        let shares = count("shares")?;

        let geo = match (get("lat"), get("lon")) {
            (None, None) => None,
            (Some(lat), Some(lon)) => {
                let parsed = lat
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .zip(lon.trim().parse::<f64>().ok())
                    .and_then(|(lat, lon)| GeoPoint::new(lat, lon));
                Some(parsed.ok_or((
                    RejectCode::TypeMismatch,
                    "lat/lon outside [-90,90]x[-180,180]".to_string(),
                ))?)
            }
            (Some(_), None) => {
                return Err((RejectCode::MissingField, "`lat` given without `lon`".into()))
            }
            (None, Some(_)) => {
                return Err((RejectCode::MissingField, "`lon` given without `lat`".into()))
            }
        };

        let text = record.fields.get("text").cloned().unwrap_or_default();
        let explicit_lang = match get("lang") {
            None => None,
            Some(v) => Some(Lang::parse(v).ok_or((
                RejectCode::TypeMismatch,
                format!("lang `{v}` is not one of ar, en, unknown"),
            ))?),
        };
        let lang = explicit_lang.unwrap_or_else(|| detect_language(&text));
        let norm_text = normalize_text(&text, lang);
        if norm_text.is_empty() {
            return Err((RejectCode::EmptyText, "text is empty after cleaning".into()));
        }
        let tokens = tokenize(&norm_text, &self.stopwords);

        Ok(Post {
            id: get("id").unwrap_or_default().trim().to_string(),
            text,
            norm_text,
            tokens,
            author: get("author").map(|a| a.trim().to_string()),
            timestamp,
            geo,
            parent_id: get("parent_id").map(|p| p.trim().to_string()),
            mentions: get("mentions").map(split_mentions).unwrap_or_default(),
            likes,
            shares,
            lang,
        })
    }
}

fn split_mentions(raw: &str) -> Vec<String> {
    raw.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .map(|m| m.trim_start_matches('@'))
        .filter(|m| !m.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Parse with the default schema and built-in stopwords.
pub fn parse_dataset(
    bytes: &[u8],
    format: SourceFormat,
    schema: &PostSchema,
) -> Result<(Vec<Post>, ValidationReport), IngestError> {
    Ingestor::new(schema.clone(), Stopwords::builtin())?.parse(bytes, format)
}

/// RFC 3339, or a naive `YYYY-MM-DD[ T]HH:MM:SS[.f]` / `YYYY-MM-DD` taken as UTC.
pub fn parse_timestamp(value: &str) -> Option<DateTime<Utc>> {
    let value = value.trim();
    if let Ok(ts) = DateTime::parse_from_rfc3339(value) {
        return Some(ts.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%d %H:%M"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(value, fmt) {
            return Some(naive.and_utc());
        }
    }
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|naive| naive.and_utc())
}

/// Decode an upload into raw records without validating them.
///
/// Row-level problems (a JSONL line that is not an object, a CSV row with
/// missing cells) become records that later fail validation; only problems
/// that make the whole document unreadable are errors here.
pub fn decode_records(bytes: &[u8], format: SourceFormat) -> Result<Vec<RawRecord>, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| IngestError::UndecodableInput {
        offset: e.valid_up_to(),
    })?;
    let text = text.strip_prefix('\u{FEFF}').unwrap_or(text);
    match format {
        SourceFormat::Csv => decode_delimited(text, b',', format),
        SourceFormat::Tsv => decode_delimited(text, b'\t', format),
        SourceFormat::Json => decode_json_array(text),
        SourceFormat::Jsonl => Ok(decode_jsonl(text)),
    }
}

fn decode_delimited(
    text: &str,
    delimiter: u8,
    format: SourceFormat,
) -> Result<Vec<RawRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::MalformedDocument {
            format,
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.iter().all(String::is_empty) {
        return Err(IngestError::MalformedDocument {
            format,
            message: "missing header row".into(),
        });
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let mut fields = BTreeMap::new();
        // An unreadable row still counts as a row so that the report stays
        // conserved; it carries no fields and fails as MISSING_FIELD.
        if let Ok(row) = row {
            for (name, value) in headers.iter().zip(row.iter()) {
                if !name.is_empty() {
                    fields.insert(name.clone(), value.to_string());
                }
            }
        }
        records.push(RawRecord {
            row_index: i + 1,
            fields,
            source_format: format,
        });
    }
    Ok(records)
}

pub(crate) fn json_scalar(value: &serde_json::Value) -> Option<String> {
    use serde_json::Value;
    match value {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::Array(items) => Some(
            items
                .iter()
                .filter_map(json_scalar)
                .collect::<Vec<_>>()
                .join(","),
        ),
        Value::Object(_) => Some(value.to_string()),
    }
}

pub(crate) fn json_object_fields(value: &serde_json::Value) -> BTreeMap<String, String> {
    match value {
        serde_json::Value::Object(map) => map
            .iter()
            .filter_map(|(k, v)| json_scalar(v).map(|s| (k.clone(), s)))
            .collect(),
        _ => BTreeMap::new(),
    }
}

fn decode_json_array(text: &str) -> Result<Vec<RawRecord>, IngestError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| IngestError::MalformedDocument {
            format: SourceFormat::Json,
            message: e.to_string(),
        })?;
    let serde_json::Value::Array(items) = value else {
        return Err(IngestError::MalformedDocument {
            format: SourceFormat::Json,
            message: "top-level value must be an array of objects".into(),
        });
    };
    Ok(items
        .iter()
        .enumerate()
        .map(|(i, item)| RawRecord {
            row_index: i + 1,
            fields: json_object_fields(item),
            source_format: SourceFormat::Json,
        })
        .collect())
}

fn decode_jsonl(text: &str) -> Vec<RawRecord> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            let fields = serde_json::from_str::<serde_json::Value>(line)
                .map(|v| json_object_fields(&v))
                .unwrap_or_default();
            RawRecord {
                row_index: i + 1,
                fields,
                source_format: SourceFormat::Jsonl,
            }
        })
        .collect()
}
