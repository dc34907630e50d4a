//! Undirected graph over article titles, built from the link structure of
//! a corpus: two articles are connected when both are in the corpus and
//! either one links to the other.
//!
//! Graphs never contain self-loops or isolated nodes. The adjacency-list
//! file format writes every edge on both endpoint lines and replaces
//! spaces in titles with underscores (titles containing literal
//! underscores are therefore not distinguishable from spaced ones after a
//! round trip).

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use crate::corpus::Corpus;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    /// An edge was listed on one endpoint's line but not the other's.
    #[error("asymmetric edge: {0:?} lists {1:?} but not vice versa")]
    AsymmetricEdge(String, String),
    #[error("self-loop on node {0:?}")]
    SelfLoop(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Adjacency keyed by title; neighbor sets are symmetric by construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConceptGraph {
    adjacency: BTreeMap<String, BTreeSet<String>>,
}

/// Builds the inter-article graph of a corpus. An undirected edge {A, B}
/// exists iff both titles are corpus documents and at least one of them
/// lists the other in its outgoing links. Titles that end up with no
/// edges do not appear in the graph.
pub fn build_graph(corpus: &Corpus) -> ConceptGraph {
    let mut graph = ConceptGraph::default();
    for doc in corpus.documents() {
        for link in &doc.out_links {
            if link != &doc.title && corpus.contains_title(link) {
                graph.insert_edge(&doc.title, link);
            }
        }
    }
    graph
}

impl ConceptGraph {
    /// Builds a graph directly from undirected edges. Self-loops are
    /// rejected; duplicate edges collapse.
    pub fn from_edges<S: Into<String>>(
        edges: impl IntoIterator<Item = (S, S)>,
    ) -> Result<Self, GraphError> {
        let mut graph = Self::default();
        for (u, v) in edges {
            let (u, v) = (u.into(), v.into());
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            graph.insert_edge(&u, &v);
        }
        Ok(graph)
    }

    fn insert_edge(&mut self, u: &str, v: &str) {
        debug_assert_ne!(u, v);
        self.adjacency
            .entry(u.to_string())
            .or_default()
            .insert(v.to_string());
        self.adjacency
            .entry(v.to_string())
            .or_default()
            .insert(u.to_string());
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        let degree_sum: usize = self.adjacency.values().map(BTreeSet::len).sum();
        degree_sum / 2
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn contains(&self, title: &str) -> bool {
        self.adjacency.contains_key(title)
    }

    /// Number of neighbors; zero for titles not in the graph.
    pub fn degree(&self, title: &str) -> usize {
        self.adjacency.get(title).map_or(0, BTreeSet::len)
    }

    pub fn neighbors(&self, title: &str) -> Option<&BTreeSet<String>> {
        self.adjacency.get(title)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.adjacency.keys().map(String::as_str)
    }

    pub fn has_edge(&self, u: &str, v: &str) -> bool {
        self.adjacency.get(u).is_some_and(|n| n.contains(v))
    }

    /// Induced subgraph on `keep`: only edges with both endpoints kept
    /// survive, and nodes left without edges are dropped.
    pub fn extract_subgraph(&self, keep: &BTreeSet<String>) -> ConceptGraph {
        let mut out = ConceptGraph::default();
        for (node, neighbors) in &self.adjacency {
            if !keep.contains(node) {
                continue;
            }
            for n in neighbors {
                if n > node && keep.contains(n) {
                    out.insert_edge(node, n);
                }
            }
        }
        out
    }

    /// Writes one line per node, sorted by title: the node followed by its
    /// neighbors in sorted order, all space-separated with underscores
    /// standing in for spaces inside titles.
    pub fn save(&self, mut writer: impl Write) -> io::Result<()> {
        for (node, neighbors) in &self.adjacency {
            write!(writer, "{}", encode_title(node))?;
            for n in neighbors {
                write!(writer, " {}", encode_title(n))?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }

    /// Reads the adjacency-list format, validating that every edge appears
    /// on both endpoint lines and that no node lists itself. Nodes listed
    /// without neighbors are dropped (graphs carry no isolated nodes).
    pub fn load(reader: impl BufRead) -> Result<Self, GraphError> {
        let mut adjacency: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for line in reader.lines() {
            let line = line?;
            let mut fields = line.split_whitespace();
            let Some(node) = fields.next() else { continue };
            let node = decode_title(node);
            let entry = adjacency.entry(node.clone()).or_default();
            for n in fields {
                let n = decode_title(n);
                if n == node {
                    return Err(GraphError::SelfLoop(node));
                }
                entry.insert(n);
            }
        }
        for (node, neighbors) in &adjacency {
            for n in neighbors {
                let reciprocal = adjacency.get(n).is_some_and(|back| back.contains(node));
                if !reciprocal {
                    return Err(GraphError::AsymmetricEdge(node.clone(), n.clone()));
                }
            }
        }
        adjacency.retain(|_, neighbors| !neighbors.is_empty());
        Ok(Self { adjacency })
    }
}

fn encode_title(title: &str) -> String {
    title.replace(' ', "_")
}

fn decode_title(field: &str) -> String {
    field.replace('_', " ")
}
