//! Benchmark evaluation: rank correlation against human similarity
//! judgements, multiple-choice synonym selection, and vector-offset
//! analogy completion.
//!
//! Every evaluator handles out-of-vocabulary items the same way: the item
//! is skipped and counted, never silently dropped, and the report always
//! satisfies items_scored + oov_skipped == items_total.

use std::io::{self, BufRead};

use serde::Serialize;

use crate::retrofit::VectorSet;
use crate::vectors::{cosine, VectorOps};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    /// Rank correlation is undefined for constant (or near-empty) inputs.
    #[error("degenerate input: a list with fewer than 2 values or no variation")]
    DegenerateInput,
    #[error("only {scored} item(s) could be scored, need at least {needed}")]
    TooFewPairs { scored: usize, needed: usize },
    /// Dataset file violates the expected format (1-based line number).
    #[error("malformed dataset on line {line}: {reason}")]
    DatasetFormat { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Anything that can map a word to a vector. `embed` returns `None` for
/// words without a usable (nonzero) vector; those count as
/// out-of-vocabulary during evaluation.
pub trait Embedder {
    type Vector: VectorOps;
    fn embed(&self, word: &str) -> Option<Self::Vector>;
}

impl Embedder for crate::index::WordConceptMatrix {
    type Vector = crate::vectors::SparseVector;

    fn embed(&self, word: &str) -> Option<Self::Vector> {
        let row = self.concepts_for_word(word);
        if row.is_zero() {
            None
        } else {
            Some(row)
        }
    }
}

impl<V: VectorOps> Embedder for VectorSet<V> {
    type Vector = V;

    fn embed(&self, word: &str) -> Option<Self::Vector> {
        self.get(word).filter(|v| !v.is_zero()).cloned()
    }
}

/// Snapshot of a matrix's word rows as a named vector set, for evaluators
/// that need a candidate vocabulary (analogy completion). Words whose rows
/// are empty are omitted.
pub fn matrix_word_vectors(
    matrix: &crate::index::WordConceptMatrix,
) -> VectorSet<crate::vectors::SparseVector> {
    let entries: Vec<_> = matrix
        .vocabulary()
        .iter()
        .map(|word| (word.clone(), matrix.concepts_for_word(word)))
        .filter(|(_, row)| !row.is_zero())
        .collect();
    VectorSet::from_entries(entries).expect("matrix vocabulary has no duplicates")
}

/// Evaluation outcome, also serializable as a JSON report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Metric identifier, e.g. "spearman_rho".
    pub metric: String,
    /// Metric value scaled to a percentage: rho * 100 or accuracy * 100.
    pub value_pct: f64,
    pub items_total: usize,
    pub items_scored: usize,
    pub oov_skipped: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Average ranks (1-based; ties share the mean of the ranks they span).
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the mean of ranks i+1 ..= j+1.
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mean_x) * (b - mean_y);
        var_x += (a - mean_x) * (a - mean_x);
        var_y += (b - mean_y) * (b - mean_y);
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(EvalError::DegenerateInput);
    }
    Ok(cov / (var_x * var_y).sqrt())
}

/// Spearman rank correlation: Pearson correlation of average ranks.
/// Errors on length mismatch and on constant or sub-2-element inputs
/// rather than reporting a spurious zero.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(EvalError::DegenerateInput);
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// One human-scored word pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WordPair {
    pub word1: String,
    pub word2: String,
    pub score: f64,
}

/// Loads tab-separated `word1 word2 score` lines. Duplicate unordered
/// pairs are rejected.
pub fn load_word_pairs(reader: impl BufRead) -> Result<Vec<WordPair>, EvalError> {
    let mut pairs: Vec<WordPair> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(EvalError::DatasetFormat {
                line: line_no,
                reason: "expected word1<TAB>word2<TAB>score".into(),
            });
        }
        let score: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| EvalError::DatasetFormat {
                line: line_no,
                reason: format!("unparseable score {:?}", fields[2]),
            })?;
        if !score.is_finite() {
            return Err(EvalError::DatasetFormat {
                line: line_no,
                reason: "score must be finite".into(),
            });
        }
        let (w1, w2) = (fields[0].to_string(), fields[1].to_string());
        let key = if w1 <= w2 {
            (w1.clone(), w2.clone())
        } else {
            (w2.clone(), w1.clone())
        };
        if !seen.insert(key) {
            return Err(EvalError::DatasetFormat {
                line: line_no,
                reason: format!("duplicate pair {w1:?} / {w2:?}"),
            });
        }
        pairs.push(WordPair {
            word1: w1,
            word2: w2,
            score,
        });
    }
    Ok(pairs)
}

/// Spearman correlation between system cosine similarities and human
/// scores over the pairs where both words are embeddable; the rest are
/// counted as skipped.
pub fn eval_wordsim<E: Embedder>(
    embedder: &E,
    pairs: &[WordPair],
) -> Result<EvalReport, EvalError> {
    let mut gold = Vec::new();
    let mut system = Vec::new();
    for pair in pairs {
        if let (Some(u), Some(v)) = (embedder.embed(&pair.word1), embedder.embed(&pair.word2)) {
            gold.push(pair.score);
            system.push(cosine(&u, &v));
        }
    }
    if gold.len() < 2 {
        return Err(EvalError::TooFewPairs {
            scored: gold.len(),
            needed: 2,
        });
    }
    let rho = spearman(&gold, &system)?;
    Ok(EvalReport {
        metric: "spearman_rho".into(),
        value_pct: rho * 100.0,
        items_total: pairs.len(),
        items_scored: gold.len(),
        oov_skipped: pairs.len() - gold.len(),
    })
}

/// One multiple-choice synonym question: pick the candidate closest to
/// the target. `answer` indexes `candidates` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct SynonymQuestion {
    pub target: String,
    pub candidates: Vec<String>,
    pub answer: usize,
}

/// Loads the two-line-per-item synonym format:
///
/// ```text
/// <target>: <c1> <c2> <c3> <c4>
/// answer: <k>
/// ```
///
/// where k is the 0-based index of the correct candidate. Blank lines
/// between items are allowed.
pub fn load_synonym_questions(reader: impl BufRead) -> Result<Vec<SynonymQuestion>, EvalError> {
    let mut questions = Vec::new();
    let mut pending: Option<(usize, SynonymQuestion)> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match pending.take() {
            None => {
                let (target, rest) =
                    line.split_once(':')
                        .ok_or_else(|| EvalError::DatasetFormat {
                            line: line_no,
                            reason: "expected `<target>: <c1> <c2> <c3> <c4>`".into(),
                        })?;
                let target = target.trim();
                let candidates: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                if target.is_empty() || candidates.len() != 4 {
                    return Err(EvalError::DatasetFormat {
                        line: line_no,
                        reason: "expected a target and exactly 4 candidates".into(),
                    });
                }
                let mut unique = candidates.clone();
                unique.sort();
                unique.dedup();
                if unique.len() != 4 {
                    return Err(EvalError::DatasetFormat {
                        line: line_no,
                        reason: "candidates must be distinct".into(),
                    });
                }
                pending = Some((
                    line_no,
                    SynonymQuestion {
                        target: target.to_string(),
                        candidates,
                        answer: 0,
                    },
                ));
            }
            Some((_, mut question)) => {
                let answer = line
                    .strip_prefix("answer:")
                    .map(str::trim)
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| EvalError::DatasetFormat {
                        line: line_no,
                        reason: "expected `answer: <k>`".into(),
                    })?;
                if answer > 3 {
                    return Err(EvalError::DatasetFormat {
                        line: line_no,
                        reason: format!("answer index {answer} out of range 0..=3"),
                    });
                }
                question.answer = answer;
                questions.push(question);
            }
        }
    }
    if let Some((line, _)) = pending {
        return Err(EvalError::DatasetFormat {
            line,
            reason: "question without an answer line".into(),
        });
    }
    Ok(questions)
}

/// Accuracy of picking the candidate with the highest cosine to the
/// target. Questions whose target is out of vocabulary, or where no
/// candidate is embeddable, are skipped; cosine ties resolve to the
/// lowest candidate index.
pub fn eval_toefl<E: Embedder>(
    embedder: &E,
    questions: &[SynonymQuestion],
) -> Result<EvalReport, EvalError> {
    let mut scored = 0;
    let mut correct = 0;
    for q in questions {
        let Some(target) = embedder.embed(&q.target) else {
            continue;
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, candidate) in q.candidates.iter().enumerate() {
            let Some(v) = embedder.embed(candidate) else {
                continue;
            };
            let sim = cosine(&target, &v);
            let better = match best {
                None => true,
                Some((_, best_sim)) => sim > best_sim,
            };
            if better {
                best = Some((i, sim));
            }
        }
        let Some((choice, _)) = best else { continue };
        scored += 1;
        if choice == q.answer {
            correct += 1;
        }
    }
    if scored == 0 {
        return Err(EvalError::TooFewPairs {
            scored: 0,
            needed: 1,
        });
    }
    Ok(EvalReport {
        metric: "synonym_accuracy".into(),
        value_pct: correct as f64 / scored as f64 * 100.0,
        items_total: questions.len(),
        items_scored: scored,
        oov_skipped: questions.len() - scored,
    })
}

/// One analogy item: a is to b as c is to d.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyQuad {
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
}

/// Loads one analogy per line: four space-separated words.
pub fn load_analogy_quads(reader: impl BufRead) -> Result<Vec<AnalogyQuad>, EvalError> {
    let mut quads = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != 4 {
            return Err(EvalError::DatasetFormat {
                line: line_no,
                reason: format!("expected 4 words, found {}", words.len()),
            });
        }
        quads.push(AnalogyQuad {
            a: words[0].to_string(),
            b: words[1].to_string(),
            c: words[2].to_string(),
            d: words[3].to_string(),
        });
    }
    Ok(quads)
}

/// Vector-offset analogy accuracy: the estimate q_b - q_a + q_c is
/// compared by cosine against every named vector except a, b, and c, and
/// the item counts as correct when the argmax is d. Items where a, b, or
/// c is out of vocabulary are skipped; ties resolve to the
/// lexicographically smallest word.
pub fn eval_synrel<V: VectorOps>(
    vectors: &VectorSet<V>,
    quads: &[AnalogyQuad],
) -> Result<EvalReport, EvalError> {
    // Candidate order fixed up front so ties break lexicographically.
    let mut candidate_names: Vec<&str> = vectors.names().collect();
    candidate_names.sort_unstable();

    let mut scored = 0;
    let mut correct = 0;
    for quad in quads {
        let (Some(a), Some(b), Some(c)) = (
            vectors.get(&quad.a).filter(|v| !v.is_zero()),
            vectors.get(&quad.b).filter(|v| !v.is_zero()),
            vectors.get(&quad.c).filter(|v| !v.is_zero()),
        ) else {
            continue;
        };
        let estimate = V::weighted_sum(&[(-1.0, a), (1.0, b), (1.0, c)]);
        let mut best: Option<(&str, f64)> = None;
        for &name in &candidate_names {
            if name == quad.a || name == quad.b || name == quad.c {
                continue;
            }
            let v = vectors
                .get(name)
                .expect("candidate names come from the set");
            let sim = cosine(&estimate, v);
            let better = match best {
                None => true,
                Some((_, best_sim)) => sim > best_sim,
            };
            if better {
                best = Some((name, sim));
            }
        }
        // The question words were embeddable, so the item is scored even
        // when the prediction cannot be d (an out-of-vocabulary d, or an
        // empty candidate pool): that simply counts as wrong.
        scored += 1;
        if best.map(|(predicted, _)| predicted) == Some(quad.d.as_str()) {
            correct += 1;
        }
    }
    if scored == 0 {
        return Err(EvalError::TooFewPairs {
            scored: 0,
            needed: 1,
        });
    }
    Ok(EvalReport {
        metric: "analogy_accuracy".into(),
        value_pct: correct as f64 / scored as f64 * 100.0,
        items_total: quads.len(),
        items_scored: scored,
        oov_skipped: quads.len() - scored,
    })
}
