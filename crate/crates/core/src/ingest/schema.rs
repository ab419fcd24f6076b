use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldType {
    #[serde(rename = "string")]
    String,
    #[serde(rename = "integer")]
    Integer,
    #[serde(rename = "float")]
    Float,
    #[serde(rename = "iso8601-timestamp")]
    Timestamp,
}

/// Which upload fields must/may be present and how each is typed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostSchema {
    pub required: BTreeSet<String>,
    pub optional: BTreeSet<String>,
    pub type_map: BTreeMap<String, FieldType>,
}

/// Fields a `Post` cannot be built without.
const CORE_FIELDS: [&str; 3] = ["id", "text", "timestamp"];

impl Default for PostSchema {
    fn default() -> Self {
        let required = CORE_FIELDS.iter().map(|s| s.to_string()).collect();
        let optional = [
            "author", "lat", "lon", "parent_id", "mentions", "likes", "shares", "lang",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let type_map = [
            ("id", FieldType::String),
            ("text", FieldType::String),
            ("timestamp", FieldType::Timestamp),
            ("author", FieldType::String),
            ("lat", FieldType::Float),
            ("lon", FieldType::Float),
            ("parent_id", FieldType::String),
            ("mentions", FieldType::String),
            ("likes", FieldType::Integer),
            ("shares", FieldType::Integer),
            ("lang", FieldType::String),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        PostSchema {
            required,
            optional,
            type_map,
        }
    }
}

impl PostSchema {
    pub fn validate(&self) -> Result<(), IngestError> {
        if let Some(both) = self.required.intersection(&self.optional).next() {
            return Err(IngestError::InvalidSchema(format!(
                "field `{both}` is both required and optional"
            )));
        }
        for field in self.required.iter().chain(&self.optional) {
            if !self.type_map.contains_key(field) {
                return Err(IngestError::InvalidSchema(format!(
                    "field `{field}` has no type_map entry"
                )));
            }
        }
        for core in CORE_FIELDS {
            if !self.required.contains(core) {
                return Err(IngestError::InvalidSchema(format!(
                    "field `{core}` must be required"
                )));
            }
        }
        if self.type_map.get("timestamp") != Some(&FieldType::Timestamp) {
            return Err(IngestError::InvalidSchema(
                "field `timestamp` must be typed iso8601-timestamp".into(),
            ));
        }
        Ok(())
    }

    pub fn field_type(&self, field: &str) -> Option<FieldType> {
        if self.required.contains(field) || self.optional.contains(field) {
            self.type_map.get(field).copied()
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_is_valid() {
        PostSchema::default().validate().unwrap();
    }

    #[test]
    fn overlapping_sets_are_rejected() {
        let mut schema = PostSchema::default();
        schema.optional.insert("id".into());
        assert!(matches!(
            schema.validate(),
            Err(IngestError::InvalidSchema(_))
        ));
    }

    #[test]
    fn untyped_field_is_rejected() {
        let mut schema = PostSchema::default();
        schema.optional.insert("region".into());
        assert!(schema.validate().is_err());
        schema.type_map.insert("region".into(), FieldType::String);
        schema.validate().unwrap();
    }

    #[test]
    fn schema_json_uses_documented_type_names() {
        let json = serde_json::to_value(PostSchema::default()).unwrap();
        assert_eq!(json["type_map"]["timestamp"], "iso8601-timestamp");
        assert_eq!(json["type_map"]["likes"], "integer");
    }
}
