use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{DatasetId, StoreError};
use crate::ingest::Post;

/// Schema-less storage for a dataset's posts.
pub trait DocumentStore: Send + Sync {
    fn write_posts(&self, dataset: &DatasetId, posts: &[Post]) -> Result<(), StoreError>;
    fn read_posts(&self, dataset: &DatasetId) -> Result<Vec<Post>, StoreError>;
}

/// One JSONL file per dataset at `<root>/<dataset_id>/posts.jsonl`.
#[derive(Debug, Clone)]
pub struct JsonlDocuments {
    root: PathBuf,
}

impl JsonlDocuments {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        JsonlDocuments { root: root.into() }
    }

    pub fn path_for(&self, dataset: &DatasetId) -> PathBuf {
        self.root.join(dataset.as_str()).join("posts.jsonl")
    }
}

fn write_atomically(path: &Path, posts: &[Post]) -> Result<(), StoreError> {
    let dir = path.parent().expect("dataset file has a parent directory");
    fs::create_dir_all(dir)?;
    let tmp = dir.join("posts.jsonl.tmp");
    {
        let mut out = BufWriter::new(fs::File::create(&tmp)?);
        for post in posts {
            serde_json::to_writer(&mut out, post)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        out.get_ref().sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

impl DocumentStore for JsonlDocuments {
    fn write_posts(&self, dataset: &DatasetId, posts: &[Post]) -> Result<(), StoreError> {
        write_atomically(&self.path_for(dataset), posts)
    }

    fn read_posts(&self, dataset: &DatasetId) -> Result<Vec<Post>, StoreError> {
        let path = self.path_for(dataset);
        let file = fs::File::open(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => StoreError::NotFound {
                entity: "dataset",
                id: dataset.to_string(),
            },
            _ => e.into(),
        })?;
        let mut posts = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            if !line.is_empty() {
                posts.push(serde_json::from_str(&line)?);
            }
        }
        Ok(posts)
    }
}
