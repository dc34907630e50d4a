//! Word/concept TF-IDF matrix: the inverted index at the core of
//! concept-space text representation.
//!
//! Rows are word vectors over concepts (one weight per article the word
//! occurs in), columns are concept vectors over words. Term frequency is
//! the raw in-document count and idf is ln(N / df) with no smoothing, so
//! a word occurring in every document carries zero weight and is simply
//! not stored.

use std::io::{self, BufRead, Write};

use indexmap::IndexSet;

use crate::corpus::Corpus;
use crate::vectors::{SparseVector, VectorOps};

pub const MATRIX_MAGIC: &str = "#esa v1";

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("cannot build an index from an empty corpus")]
    EmptyCorpus,
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
    /// Matrix file violates the expected format (1-based line number).
    #[error("malformed matrix file on line {line}: {reason}")]
    MatrixFormat { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Weighting options for [`build_tfidf`].
#[derive(Debug, Clone, Default)]
pub struct TfIdfOptions {
    /// Replace raw term frequency with 1 + ln(tf).
    pub log_tf: bool,
    /// Drop entries with weight below this threshold after weighting.
    pub min_weight: Option<f64>,
}

/// Result of embedding a token sequence: the centroid of the contributing
/// word rows plus how many tokens did and did not contribute.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedText {
    pub vector: SparseVector,
    pub tokens_used: usize,
    pub tokens_oov: usize,
}

/// Sparse word/concept weight matrix with both row and column access.
///
/// Words and concepts keep the dense ids of the corpus they were built
/// from. Rows and columns store (index, weight) pairs sorted by index;
/// zero weights are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct WordConceptMatrix {
    vocabulary: IndexSet<String>,
    concepts: IndexSet<String>,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
}

/// Builds the TF-IDF matrix for a corpus.
pub fn build_tfidf(
    corpus: &Corpus,
    options: &TfIdfOptions,
) -> Result<WordConceptMatrix, IndexError> {
    if corpus.is_empty() {
        return Err(IndexError::EmptyCorpus);
    }
    let n_docs = corpus.len();
    let n_words = corpus.vocabulary().len();

    // Raw counts per document, sorted by word id for deterministic output.
    let mut doc_counts: Vec<Vec<(usize, u64)>> = Vec::with_capacity(n_docs);
    let mut df = vec![0usize; n_words];
    for doc in corpus.documents() {
        let mut counts = std::collections::BTreeMap::new();
        for token in &doc.tokens {
            let wid = corpus
                .word_index(token)
                .expect("corpus vocabulary covers every document token");
            *counts.entry(wid).or_insert(0u64) += 1;
        }
        for &wid in counts.keys() {
            df[wid] += 1;
        }
        doc_counts.push(counts.into_iter().collect());
    }

    let idf: Vec<f64> = df
        .iter()
        .map(|&d| {
            if d == 0 {
                0.0
            } else {
                (n_docs as f64 / d as f64).ln()
            }
        })
        .collect();

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_words];
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_docs];
    for (cid, counts) in doc_counts.iter().enumerate() {
        for &(wid, tf) in counts {
            if idf[wid] <= 0.0 {
                continue;
            }
            let tf_value = if options.log_tf {
                1.0 + (tf as f64).ln()
            } else {
                tf as f64
            };
            let weight = tf_value * idf[wid];
            if let Some(min) = options.min_weight {
                if weight < min {
                    continue;
                }
            }
            rows[wid].push((cid, weight));
            cols[cid].push((wid, weight));
        }
    }

    Ok(WordConceptMatrix {
        vocabulary: corpus.vocabulary().clone(),
        concepts: corpus.concepts().clone(),
        rows,
        cols,
    })
}

impl WordConceptMatrix {
    pub(crate) fn from_columns(
        vocabulary: IndexSet<String>,
        concepts: IndexSet<String>,
        cols: Vec<Vec<(usize, f64)>>,
    ) -> Self {
        debug_assert_eq!(cols.len(), concepts.len());
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); vocabulary.len()];
        for (cid, col) in cols.iter().enumerate() {
            for &(wid, w) in col {
                rows[wid].push((cid, w));
            }
        }
        Self {
            vocabulary,
            concepts,
            rows,
            cols,
        }
    }

    pub fn vocabulary(&self) -> &IndexSet<String> {
        &self.vocabulary
    }

    pub fn concepts(&self) -> &IndexSet<String> {
        &self.concepts
    }

    pub fn word_count(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn entry_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub(crate) fn column(&self, cid: usize) -> &[(usize, f64)] {
        &self.cols[cid]
    }

    /// The word's vector over concepts; empty for unknown words and for
    /// words whose idf is zero.
    pub fn concepts_for_word(&self, word: &str) -> SparseVector {
        match self.vocabulary.get_index_of(word) {
            Some(wid) => SparseVector::from_sorted_unchecked(self.rows[wid].clone()),
            None => SparseVector::new(),
        }
    }

    /// The concept's vector over words; empty when the underlying document
    /// had no weighted tokens.
    pub fn concept_vector(&self, title: &str) -> Result<SparseVector, IndexError> {
        match self.concepts.get_index_of(title) {
            Some(cid) => Ok(SparseVector::from_sorted_unchecked(self.cols[cid].clone())),
            None => Err(IndexError::UnknownConcept(title.to_string())),
        }
    }

    /// Embeds a token sequence as the centroid of the contributing word
    /// rows: (1/k) * sum over the k tokens with non-empty rows. Tokens
    /// without a row (unknown or zero-idf) are counted as out-of-vocabulary.
    pub fn embed_text(&self, tokens: &[String]) -> EmbeddedText {
        let contributing: Vec<SparseVector> = tokens
            .iter()
            .map(|t| self.concepts_for_word(t))
            .filter(|v| !v.is_zero())
            .collect();
        let used = contributing.len();
        let oov = tokens.len() - used;
        if used == 0 {
            return EmbeddedText {
                vector: SparseVector::new(),
                tokens_used: 0,
                tokens_oov: oov,
            };
        }
        let coeff = 1.0 / used as f64;
        let terms: Vec<(f64, &SparseVector)> = contributing.iter().map(|v| (coeff, v)).collect();
        EmbeddedText {
            vector: SparseVector::weighted_sum(&terms),
            tokens_used: used,
            tokens_oov: oov,
        }
    }

    /// Concepts ranked by weight (descending, concept id breaking ties) for
    /// a vector over concept space.
    pub fn top_concepts(&self, vector: &SparseVector, k: usize) -> Vec<(&str, f64)> {
        let mut entries: Vec<(usize, f64)> = vector.iter().collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries
            .into_iter()
            .take(k)
            .filter_map(|(cid, w)| self.concepts.get_index(cid).map(|c| (c.as_str(), w)))
            .collect()
    }

    /// Writes the matrix in its text format: a header with the number of
    /// distinct words and concepts that carry entries, then one
    /// tab-separated `word concept weight` line per stored entry with the
    /// weight printed to 12 significant digits. Rows follow word insertion
    /// order and each row's entries are sorted by concept title; because
    /// that order is independent of internal concept ids, loading a saved
    /// matrix and saving it again reproduces the bytes exactly.
    pub fn save(&self, mut writer: impl Write) -> io::Result<()> {
        let words_with_entries = self.rows.iter().filter(|r| !r.is_empty()).count();
        let concepts_with_entries = self.cols.iter().filter(|c| !c.is_empty()).count();
        writeln!(
            writer,
            "{MATRIX_MAGIC} words={words_with_entries} concepts={concepts_with_entries}"
        )?;
        for (wid, row) in self.rows.iter().enumerate() {
            let word = &self.vocabulary[wid];
            let mut entries: Vec<(&str, f64)> = row
                .iter()
                .map(|&(cid, w)| (self.concepts[cid].as_str(), w))
                .collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            for (title, weight) in entries {
                writeln!(writer, "{word}\t{title}\t{weight:.11e}")?;
            }
        }
        Ok(())
    }

    /// Reads the text format produced by [`WordConceptMatrix::save`].
    ///
    /// Words and concepts are re-interned in first-appearance order, which
    /// reproduces the save order; entities that carried no entries are not
    /// representable in the format and are absent after a round trip.
    pub fn load(reader: impl BufRead) -> Result<Self, IndexError> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| IndexError::MatrixFormat {
            line: 1,
            reason: "empty file".into(),
        })??;
        let (declared_words, declared_concepts) = parse_header(&header)?;

        let mut vocabulary: IndexSet<String> = IndexSet::new();
        let mut concepts: IndexSet<String> = IndexSet::new();
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (word, concept, weight) =
                match (parts.next(), parts.next(), parts.next(), parts.next()) {
                    (Some(w), Some(c), Some(v), None) => (w, c, v),
                    _ => {
                        return Err(IndexError::MatrixFormat {
                            line: line_no,
                            reason: "expected word<TAB>concept<TAB>weight".into(),
                        })
                    }
                };
            let weight: f64 = weight.parse().map_err(|_| IndexError::MatrixFormat {
                line: line_no,
                reason: format!("unparseable weight {weight:?}"),
            })?;
            if !weight.is_finite() || weight == 0.0 {
                return Err(IndexError::MatrixFormat {
                    line: line_no,
                    reason: "weight must be finite and nonzero".into(),
                });
            }
            let (wid, _) = vocabulary.insert_full(word.to_string());
            let (cid, _) = concepts.insert_full(concept.to_string());
            entries.push((wid, cid, weight));
        }

        if vocabulary.len() != declared_words || concepts.len() != declared_concepts {
            return Err(IndexError::MatrixFormat {
                line: 1,
                reason: format!(
                    "header declares {declared_words} words / {declared_concepts} concepts, \
                     file contains {} / {}",
                    vocabulary.len(),
                    concepts.len()
                ),
            });
        }

        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); vocabulary.len()];
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); concepts.len()];
        for (wid, cid, weight) in entries {
            rows[wid].push((cid, weight));
            cols[cid].push((wid, weight));
        }
        for row in &mut rows {
            row.sort_unstable_by_key(|&(cid, _)| cid);
            if row.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(IndexError::MatrixFormat {
                    line: 1,
                    reason: "duplicate word/concept entry".into(),
                });
            }
        }
        for col in &mut cols {
            col.sort_unstable_by_key(|&(wid, _)| wid);
        }
        Ok(Self {
            vocabulary,
            concepts,
            rows,
            cols,
        })
    }
}

fn parse_header(header: &str) -> Result<(usize, usize), IndexError> {
    let bad = |reason: &str| IndexError::MatrixFormat {
        line: 1,
        reason: reason.into(),
    };
    let rest = header
        .strip_prefix(MATRIX_MAGIC)
        .ok_or_else(|| bad("missing #esa v1 header"))?;
    let mut words = None;
    let mut concepts = None;
    for field in rest.split_whitespace() {
        if let Some(v) = field.strip_prefix("words=") {
            words = Some(v.parse().map_err(|_| bad("unparseable words count"))?);
        } else if let Some(v) = field.strip_prefix("concepts=") {
            concepts = Some(v.parse().map_err(|_| bad("unparseable concepts count"))?);
        } else {
            return Err(bad(&format!("unexpected header field {field:?}")));
        }
    }
    match (words, concepts) {
        (Some(w), Some(c)) => Ok((w, c)),
        _ => Err(bad("header must declare words= and concepts=")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Tokenizer};
    use std::io::Cursor;

    fn corpus_from(lines: &[(&str, &str)]) -> Corpus {
        let tok = Tokenizer::new(Default::default());
        let dump: String = lines
            .iter()
            .map(|(title, text)| {
                format!(r#"{{"title":"{title}","text":"{text}","links_out":[]}}"#) + "\n"
            })
            .collect();
        Corpus::parse_dump(Cursor::new(dump), &tok).unwrap()
    }

    // Hand-computed oracle: d1 = "a a b", d2 = "b".
    // df(a) = 1 so idf(a) = ln 2 and weight(a, d1) = 2 ln 2 = 1.3862943611198906.
    // df(b) = 2 = N so idf(b) = 0 and no entry for b is stored.
    #[test]
    fn tfidf_weights_match_hand_computation() {
        let corpus = corpus_from(&[("d1", "a a b"), ("d2", "b")]);
        let m = build_tfidf(&corpus, &TfIdfOptions::default()).unwrap();

        let a = m.concepts_for_word("a");
        let got: Vec<_> = a.iter().collect();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].0, 0);
        assert_eq!(got[0].1, 1.3862943611198906);

        assert!(m.concepts_for_word("b").is_zero());
        assert_eq!(m.entry_count(), 1);
    }

    #[test]
    fn unknown_word_yields_empty_vector() {
        let corpus = corpus_from(&[("d1", "a"), ("d2", "b")]);
        let m = build_tfidf(&corpus, &TfIdfOptions::default()).unwrap();
        assert!(m.concepts_for_word("zzz").is_zero());
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let corpus = Corpus::default();
        assert!(matches!(
            build_tfidf(&corpus, &TfIdfOptions::default()),
            Err(IndexError::EmptyCorpus)
        ));
    }

    #[test]
    fn concept_vector_errors_on_unknown_title() {
        let corpus = corpus_from(&[("d1", "a"), ("d2", "b")]);
        let m = build_tfidf(&corpus, &TfIdfOptions::default()).unwrap();
        match m.concept_vector("nope").unwrap_err() {
            IndexError::UnknownConcept(t) => assert_eq!(t, "nope"),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn concept_with_no_weighted_tokens_has_empty_vector() {
        // "the" is stopworded away, so d3's column is empty but the
        // concept itself is still addressable.
        let tok = Tokenizer::new(["the".to_string()].into_iter().collect());
        let dump = r#"{"title":"d1","text":"a a","links_out":[]}
{"title":"d2","text":"b","links_out":[]}
{"title":"d3","text":"the the","links_out":[]}
"#;
        let corpus = Corpus::parse_dump(Cursor::new(dump), &tok).unwrap();
        let m = build_tfidf(&corpus, &TfIdfOptions::default()).unwrap();
        assert!(m.concept_vector("d3").unwrap().is_zero());
    }

    #[test]
    fn embedding_a_single_token_equals_its_row() {
        let corpus = corpus_from(&[("d1", "a a b"), ("d2", "b c")]);
        let m = build_tfidf(&corpus, &TfIdfOptions::default()).unwrap();
        let row = m.concepts_for_word("a");
        let embedded = m.embed_text(&["a".to_string()]);
        assert_eq!(embedded.vector, row);
        assert_eq!(embedded.tokens_used, 1);
        assert_eq!(embedded.tokens_oov, 0);
    }

    #[test]
    fn repeated_token_embeds_identically_to_single() {
        let corpus = corpus_from(&[("d1", "a a b"), ("d2", "b c")]);
        let m = build_tfidf(&corpus, &TfIdfOptions::default()).unwrap();
        let single = m.embed_text(&["a".to_string()]);
        let double = m.embed_text(&["a".to_string(), "a".to_string()]);
        assert_eq!(single.vector, double.vector);
        assert_eq!(double.tokens_used, 2);
    }

    #[test]
    fn embedding_counts_oov_tokens() {
        let corpus = corpus_from(&[("d1", "a a b"), ("d2", "b")]);
        let m = build_tfidf(&corpus, &TfIdfOptions::default()).unwrap();
        // "b" has zero idf, "zzz" is unknown; only "a" contributes.
        let embedded = m.embed_text(&["a".into(), "b".into(), "zzz".into()]);
        assert_eq!(embedded.tokens_used, 1);
        assert_eq!(embedded.tokens_oov, 2);
        assert!(!embedded.vector.is_zero());

        let none = m.embed_text(&["b".into(), "zzz".into()]);
        assert!(none.vector.is_zero());
        assert_eq!(none.tokens_used, 0);
        assert_eq!(none.tokens_oov, 2);
    }

    #[test]
    fn log_tf_and_min_weight_options_apply() {
        let corpus = corpus_from(&[("d1", "a a a a b"), ("d2", "b c")]);
        let m = build_tfidf(
            &corpus,
            &TfIdfOptions {
                log_tf: true,
                min_weight: None,
            },
        )
        .unwrap();
        let got: Vec<_> = m.concepts_for_word("a").iter().collect();
        let expected = (1.0 + (4.0f64).ln()) * (2.0f64).ln();
        assert_eq!(got, vec![(0, expected)]);

        let pruned = build_tfidf(
            &corpus,
            &TfIdfOptions {
                log_tf: false,
                min_weight: Some(2.0),
            },
        )
        .unwrap();
        // weight(a, d1) = 4 ln 2 ≈ 2.77 survives; weight(c, d2) = ln 2 ≈ 0.69 is dropped.
        assert_eq!(pruned.entry_count(), 1);
        assert!(pruned.concepts_for_word("c").is_zero());
    }

    #[test]
    fn save_then_load_round_trips_byte_identically() {
        let corpus = corpus_from(&[
            ("Star", "bright star sky"),
            ("Planet", "planet orbits star"),
            ("Guitar", "strings music"),
        ]);
        let m = build_tfidf(&corpus, &TfIdfOptions::default()).unwrap();
        let mut first = Vec::new();
        m.save(&mut first).unwrap();
        let loaded = WordConceptMatrix::load(Cursor::new(&first)).unwrap();
        let mut second = Vec::new();
        loaded.save(&mut second).unwrap();
        assert_eq!(first, second);
        assert_eq!(
            loaded.concepts_for_word("star").nnz(),
            m.concepts_for_word("star").nnz()
        );
        assert_eq!(loaded.entry_count(), m.entry_count());
    }

    #[test]
    fn save_writes_the_documented_format() {
        let corpus = corpus_from(&[("d1", "a a b"), ("d2", "b")]);
        let m = build_tfidf(&corpus, &TfIdfOptions::default()).unwrap();
        let mut out = Vec::new();
        m.save(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "#esa v1 words=1 concepts=1\na\td1\t1.38629436112e0\n");
    }

    #[test]
    fn load_rejects_malformed_input() {
        let err = WordConceptMatrix::load(Cursor::new("nonsense\n")).unwrap_err();
        assert!(matches!(err, IndexError::MatrixFormat { line: 1, .. }));

        let err = WordConceptMatrix::load(Cursor::new("#esa v1 words=1 concepts=1\na\td1\n"))
            .unwrap_err();
        assert!(matches!(err, IndexError::MatrixFormat { line: 2, .. }));

        let err = WordConceptMatrix::load(Cursor::new(
            "#esa v1 words=1 concepts=1\na\td1\tnot_a_number\n",
        ))
        .unwrap_err();
        assert!(matches!(err, IndexError::MatrixFormat { line: 2, .. }));

        let err = WordConceptMatrix::load(Cursor::new("#esa v1 words=2 concepts=1\na\td1\t1.0\n"))
            .unwrap_err();
        assert!(matches!(err, IndexError::MatrixFormat { line: 1, .. }));
    }

    #[test]
    fn top_concepts_orders_by_weight_then_id() {
        let corpus = corpus_from(&[("d1", "a a b"), ("d2", "a c"), ("d3", "c")]);
        let m = build_tfidf(&corpus, &TfIdfOptions::default()).unwrap();
        let v = m.concepts_for_word("a");
        let top = m.top_concepts(&v, 10);
        assert!(top.len() >= 2);
        for pair in top.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
        }
    }
}
