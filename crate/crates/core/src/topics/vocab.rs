use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::TopicError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VocabParams {
    /// Terms seen in fewer documents are dropped.
    pub min_df: usize,
    /// Terms seen in a larger fraction of documents are dropped.
    pub max_df_ratio: f64,
}

impl Default for VocabParams {
    fn default() -> Self {
        VocabParams {
            min_df: 2,
            max_df_ratio: 0.95,
        }
    }
}

/// Lexicographically ordered term list with document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<usize>,
    n_docs: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self) -> &[usize] {
        &self.df
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        if self.index.len() == self.terms.len() {
            self.index.get(term).copied()
        } else {
            // deserialized without the lookup table
            self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
        }
    }
}

pub fn build_vocabulary<D: AsRef<[String]>>(
    corpus: &[D],
    params: VocabParams,
) -> Result<Vocabulary, TopicError> {
    if corpus.is_empty() {
        return Err(TopicError::EmptyCorpus);
    }
    let n_docs = corpus.len();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        let distinct: BTreeSet<&str> = doc.as_ref().iter().map(String::as_str).collect();
        for term in distinct {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let (terms, df): (Vec<String>, Vec<usize>) = df
        .into_iter()
        .filter(|&(_, count)| {
            count >= params.min_df && count as f64 / n_docs as f64 <= params.max_df_ratio
        })
        .map(|(t, c)| (t.to_string(), c))
        .unzip();
    if terms.is_empty() {
        return Err(TopicError::EmptyVocabulary);
    }
    let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(Vocabulary {
        terms,
        df,
        n_docs,
        index,
    })
}
