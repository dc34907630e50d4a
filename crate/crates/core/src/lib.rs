//! Sparse concept-space text embeddings with graph-based refinement.
//!
//! The pipeline this crate implements:
//!
//! 1. [`corpus`]: parse a JSON-lines article dump into tokenized
//!    documents with outgoing link sets, or assemble a task-focused
//!    corpus from a ranked article provider.
//! 2. [`index`]: build a sparse word/concept tf-idf matrix. Rows are
//!    word vectors over concepts (articles), columns are concept vectors
//!    over words, and free text embeds as the centroid of its token rows.
//! 3. [`graph`]: derive an undirected concept relatedness graph from the
//!    articles' mutual links.
//! 4. [`retrofit`]: pull each concept vector toward its graph neighbors
//!    while an anchor term keeps it near its original position, via
//!    in-place coordinate updates with a monotone energy.
//! 5. [`eval`]: score embeddings on rank-correlation, synonym-choice,
//!    and analogy benchmarks with explicit out-of-vocabulary accounting.
//!
//! All artifacts (dumps, matrices, graphs, dense vector sets) have plain
//! text formats with deterministic, byte-stable writers, so identical
//! inputs always produce identical files.

pub mod corpus;
pub mod eval;
pub mod graph;
pub mod index;
pub mod retrofit;
pub mod stopwords;
pub mod vectors;

pub use corpus::{
    build_task_corpus, tokenize, ArticleProvider, Corpus, CorpusError, Document, FileProvider,
    RankedArticle, Tokenizer,
};
pub use eval::{
    eval_synrel, eval_toefl, eval_wordsim, load_analogy_quads, load_synonym_questions,
    load_word_pairs, matrix_word_vectors, spearman, AnalogyQuad, Embedder, EvalError, EvalReport,
    SynonymQuestion, WordPair,
};
pub use graph::{build_graph, ConceptGraph, GraphError};
pub use index::{
    build_tfidf, EmbeddedText, IndexError, TfIdfOptions, WordConceptMatrix, MATRIX_MAGIC,
};
pub use retrofit::{
    load_dense_vectors, objective, retrofit, retrofit_concepts, save_dense_vectors, BetaRule,
    ConvergenceInfo, RetrofitConfig, RetrofitError, UpdateOrder, VectorSet,
};
pub use stopwords::default_stopwords;
pub use vectors::{cosine, DenseVector, SparseVector, VectorOps};
