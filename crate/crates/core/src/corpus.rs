//! Document collections parsed from JSON-lines dumps.
//!
//! Each dump line holds one article: its title, raw text, and outgoing
//! links to other article titles. Parsing normalizes text into tokens
//! (Unicode lowercasing, maximal alphanumeric runs, stopwords removed)
//! and interns titles and tokens into dense index spaces, so downstream
//! stages can work with integer ids.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::stopwords::default_stopwords;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    /// Line could not be parsed as a document record (1-based line number).
    #[error("malformed record on line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate document title {0:?}")]
    DuplicateTitle(String),
    /// The article provider failed for a query word.
    #[error("article provider failed for word {word:?}: {reason}")]
    ProviderFailure { word: String, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Splits raw text into lowercase tokens. A token is a maximal run of
/// Unicode letters and digits; tokens found in `stopwords` are removed.
/// No stemming is applied and input order is preserved.
pub fn tokenize(raw_text: &str, stopwords: &BTreeSet<String>) -> Vec<String> {
    raw_text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_lowercase())
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// Tokenizer with a fixed stopword list.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    stopwords: BTreeSet<String>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self {
            stopwords: default_stopwords(),
        }
    }
}

impl Tokenizer {
    pub fn new(stopwords: BTreeSet<String>) -> Self {
        Self { stopwords }
    }

    /// Loads a stopword list from a file with one token per line.
    /// Entries are lowercased; blank lines are ignored.
    pub fn from_stopword_file(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let file = File::open(path.as_ref())?;
        let mut stopwords = BTreeSet::new();
        for line in BufReader::new(file).lines() {
            let word = line?.trim().to_lowercase();
            if !word.is_empty() {
                stopwords.insert(word);
            }
        }
        Ok(Self { stopwords })
    }

    pub fn tokenize(&self, raw_text: &str) -> Vec<String> {
        tokenize(raw_text, &self.stopwords)
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }
}

/// One article: a non-empty title, its normalized tokens, and the set of
/// titles it links to (self-links removed, duplicates collapsed).
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub title: String,
    pub tokens: Vec<String>,
    pub out_links: BTreeSet<String>,
}

/// On-disk record shape for one dump line.
#[derive(Serialize, Deserialize)]
struct DumpRecord {
    title: String,
    text: String,
    links_out: Vec<String>,
}

/// A parsed document collection with interned vocabularies.
///
/// `vocabulary` maps every token occurring in any document to a dense id;
/// `concepts` does the same for document titles. Both preserve first-seen
/// order, so identical input yields identical ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: IndexSet<String>,
    concepts: IndexSet<String>,
}

impl Corpus {
    /// Assembles a corpus, rejecting duplicate titles.
    pub fn from_documents(documents: Vec<Document>) -> Result<Self, CorpusError> {
        let mut vocabulary = IndexSet::new();
        let mut concepts = IndexSet::new();
        for doc in &documents {
            if !concepts.insert(doc.title.clone()) {
                return Err(CorpusError::DuplicateTitle(doc.title.clone()));
            }
            for token in &doc.tokens {
                vocabulary.insert(token.clone());
            }
        }
        Ok(Self {
            documents,
            vocabulary,
            concepts,
        })
    }

    /// Parses a JSON-lines dump. Line numbers in errors are 1-based;
    /// blank lines are skipped.
    pub fn parse_dump(reader: impl BufRead, tokenizer: &Tokenizer) -> Result<Self, CorpusError> {
        let mut documents = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: DumpRecord =
                serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            if record.title.trim().is_empty() {
                return Err(CorpusError::MalformedRecord {
                    line: line_no,
                    reason: "empty title".into(),
                });
            }
            let out_links = record
                .links_out
                .into_iter()
                .filter(|l| *l != record.title)
                .collect();
            documents.push(Document {
                title: record.title,
                tokens: tokenizer.tokenize(&record.text),
                out_links,
            });
        }
        Self::from_documents(documents)
    }

    pub fn parse_dump_file(
        path: impl AsRef<Path>,
        tokenizer: &Tokenizer,
    ) -> Result<Self, CorpusError> {
        Self::parse_dump(BufReader::new(File::open(path.as_ref())?), tokenizer)
    }

    /// Serializes back to the dump format. Tokens are space-joined into the
    /// text field and links are written sorted, so parsing the output
    /// reproduces this corpus exactly and a second serialization is
    /// byte-identical.
    pub fn write_dump(&self, mut writer: impl Write) -> io::Result<()> {
        for doc in &self.documents {
            let record = DumpRecord {
                title: doc.title.clone(),
                text: doc.tokens.join(" "),
                links_out: doc.out_links.iter().cloned().collect(),
            };
            serde_json::to_writer(&mut writer, &record)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn vocabulary(&self) -> &IndexSet<String> {
        &self.vocabulary
    }

    pub fn concepts(&self) -> &IndexSet<String> {
        &self.concepts
    }

    pub fn word_index(&self, word: &str) -> Option<usize> {
        self.vocabulary.get_index_of(word)
    }

    pub fn concept_index(&self, title: &str) -> Option<usize> {
        self.concepts.get_index_of(title)
    }

    pub fn contains_title(&self, title: &str) -> bool {
        self.concepts.contains(title)
    }
}

/// A raw article as returned by an [`ArticleProvider`], before tokenization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankedArticle {
    pub title: String,
    pub text: String,
    pub links_out: Vec<String>,
}

/// Source of ranked articles for a query word, e.g. pre-downloaded search
/// results. Rank order must be deterministic.
pub trait ArticleProvider {
    fn top_articles(&self, word: &str, n: usize) -> Result<Vec<RankedArticle>, CorpusError>;
}

/// Provider backed by a JSON file mapping each query word to its ranked
/// article list.
#[derive(Debug, Clone)]
pub struct FileProvider {
    by_word: std::collections::BTreeMap<String, Vec<RankedArticle>>,
}

impl FileProvider {
    pub fn from_reader(reader: impl io::Read) -> Result<Self, CorpusError> {
        let by_word =
            serde_json::from_reader(reader).map_err(|e| CorpusError::MalformedRecord {
                line: 0,
                reason: format!("provider file: {e}"),
            })?;
        Ok(Self { by_word })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Self::from_reader(BufReader::new(File::open(path.as_ref())?))
    }
}

impl ArticleProvider for FileProvider {
    fn top_articles(&self, word: &str, n: usize) -> Result<Vec<RankedArticle>, CorpusError> {
        match self.by_word.get(word) {
            Some(articles) => Ok(articles.iter().take(n).cloned().collect()),
            None => Err(CorpusError::ProviderFailure {
                word: word.to_string(),
                reason: "word not present in provider file".into(),
            }),
        }
    }
}

/// Builds a corpus for a benchmark word list: the union of the top
/// `n_per_word` articles for every word, deduplicated by title with
/// first-seen order preserved.
pub fn build_task_corpus(
    dataset_words: &[String],
    n_per_word: usize,
    provider: &dyn ArticleProvider,
    tokenizer: &Tokenizer,
) -> Result<Corpus, CorpusError> {
    let mut seen = BTreeSet::new();
    let mut documents = Vec::new();
    for word in dataset_words {
        for article in provider.top_articles(word, n_per_word)? {
            if article.title.trim().is_empty() {
                return Err(CorpusError::ProviderFailure {
                    word: word.clone(),
                    reason: "provider returned an article with an empty title".into(),
                });
            }
            if !seen.insert(article.title.clone()) {
                continue;
            }
            let out_links = article
                .links_out
                .into_iter()
                .filter(|l| *l != article.title)
                .collect();
            documents.push(Document {
                title: article.title,
                tokens: tokenizer.tokenize(&article.text),
                out_links,
            });
        }
    }
    Corpus::from_documents(documents)
}
