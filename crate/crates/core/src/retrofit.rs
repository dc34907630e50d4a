//! Graph-based retrofitting: pull each vector toward its graph neighbors
//! while an anchor term holds it near its observed value.
//!
//! For vectors q_i with observed values q̂_i, anchor weights α_i, and
//! coupling weights β_ij, one Gauss–Seidel sweep applies, in a fixed
//! deterministic order,
//!
//! ```text
//! q_i  <-  (Σ_j β_ij q_j + α_i q̂_i) / (Σ_j β_ij + α_i)
//! ```
//!
//! over the graph neighbors j of i that carry vectors. With α_i > 0 the
//! iteration is a contraction with a unique fixed point, reached
//! regardless of update order.
//!
//! Each update is the exact coordinate minimizer of the quadratic
//!
//! ```text
//! E(Q) = Σ_i s_i α_i ‖q_i − q̂_i‖² + Σ_{u,v} γ ‖q_u − q_v‖²
//! ```
//!
//! where the second sum visits every undirected edge once and (s_i, γ) is
//! (degree(i), 1) under inverse-degree coupling and (1, c) under constant
//! coupling c. E therefore never increases across sweeps, and it is the
//! per-sweep progress figure reported in [`ConvergenceInfo`]. The related
//! diagnostic [`objective`], which sums each edge from both endpoints with
//! that endpoint's own β, is *not* a descent function of the iteration:
//! its value can dip below its fixed-point value mid-run and then climb
//! back as the iteration converges.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};

use crate::graph::ConceptGraph;
use crate::index::WordConceptMatrix;
use crate::vectors::{DenseVector, SparseVector, VectorOps};

#[derive(Debug, thiserror::Error)]
pub enum RetrofitError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("duplicate vector name {0:?}")]
    DuplicateName(String),
    /// Vector file violates the expected format (1-based line number).
    #[error("malformed vector file on line {line}: {reason}")]
    VectorFormat { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// How the coupling weight β_ij between a node and each of its neighbors
/// is chosen. β_ij uses the degree of the node being updated, so the two
/// directions of an edge may differ under [`BetaRule::InverseDegree`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaRule {
    /// β_ij = 1 / degree(i); every node distributes unit total coupling.
    InverseDegree,
    /// β_ij = c for every edge.
    Constant(f64),
}

/// Order in which nodes are visited within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    #[default]
    Lexicographic,
    ReverseLexicographic,
    /// The order vectors were inserted into the [`VectorSet`].
    Insertion,
}

/// Solver configuration. The defaults are one unit of anchor weight per
/// vector, inverse-degree coupling, ten sweeps, and early stop once the
/// average per-vector movement in a sweep falls below 1e-2.
#[derive(Debug, Clone)]
pub struct RetrofitConfig {
    pub alpha: f64,
    /// Per-name anchor weights overriding `alpha`.
    pub alpha_overrides: BTreeMap<String, f64>,
    pub beta: BetaRule,
    pub iterations: usize,
    pub tolerance: f64,
    pub update_order: UpdateOrder,
    /// Applied by [`retrofit_concepts`] after convergence: sparse
    /// components with magnitude below the threshold are dropped.
    pub prune_threshold: Option<f64>,
}

impl Default for RetrofitConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            alpha_overrides: BTreeMap::new(),
            beta: BetaRule::InverseDegree,
            iterations: 10,
            tolerance: 1e-2,
            update_order: UpdateOrder::Lexicographic,
            prune_threshold: None,
        }
    }
}

impl RetrofitConfig {
    pub fn validate(&self) -> Result<(), RetrofitError> {
        let nonneg = |value: f64, what: &str| -> Result<(), RetrofitError> {
            if value.is_finite() && value >= 0.0 {
                Ok(())
            } else {
                Err(RetrofitError::InvalidConfig(format!(
                    "{what} must be finite and nonnegative, got {value}"
                )))
            }
        };
        nonneg(self.alpha, "alpha")?;
        for (name, &a) in &self.alpha_overrides {
            nonneg(a, &format!("alpha override for {name:?}"))?;
        }
        if let BetaRule::Constant(c) = self.beta {
            nonneg(c, "constant beta")?;
        }
        nonneg(self.tolerance, "tolerance")?;
        if let Some(t) = self.prune_threshold {
            nonneg(t, "prune threshold")?;
        }
        Ok(())
    }

    pub fn alpha_for(&self, name: &str) -> f64 {
        self.alpha_overrides
            .get(name)
            .copied()
            .unwrap_or(self.alpha)
    }
}

/// Progress report for one [`retrofit`] run. `energies` holds the descent
/// quadratic E before any sweep and after each completed sweep; the
/// sequence is non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceInfo {
    pub sweeps_run: usize,
    pub final_objective: f64,
    pub final_avg_change: f64,
    pub energies: Vec<f64>,
}

/// A named collection of vectors carrying both the evolving values and
/// the observed originals. Insertion order is preserved for output.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet<V> {
    names: Vec<String>,
    index: HashMap<String, usize>,
    current: Vec<V>,
    original: Vec<V>,
}

impl<V: VectorOps> VectorSet<V> {
    /// Builds a set with current == original. Rejects duplicate names and
    /// mixed dimensions.
    pub fn from_entries(entries: Vec<(String, V)>) -> Result<Self, RetrofitError> {
        let mut names = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        let mut current = Vec::with_capacity(entries.len());
        let mut expected_dims: Option<usize> = None;
        for (name, vector) in entries {
            if index.contains_key(&name) {
                return Err(RetrofitError::DuplicateName(name));
            }
            if let Some(d) = vector.dims() {
                match expected_dims {
                    None => expected_dims = Some(d),
                    Some(e) if e != d => {
                        return Err(RetrofitError::DimensionMismatch {
                            expected: e,
                            found: d,
                        })
                    }
                    _ => {}
                }
            }
            index.insert(name.clone(), current.len());
            names.push(name);
            current.push(vector);
        }
        let original = current.clone();
        Ok(Self {
            names,
            index,
            current,
            original,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Current value for a name.
    pub fn get(&self, name: &str) -> Option<&V> {
        self.index.get(name).map(|&i| &self.current[i])
    }

    /// Observed (pre-retrofit) value for a name.
    pub fn original(&self, name: &str) -> Option<&V> {
        self.index.get(name).map(|&i| &self.original[i])
    }

    /// (name, current value) pairs in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &V)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.current.iter())
    }

    pub fn dims(&self) -> Option<usize> {
        self.current.iter().find_map(VectorOps::dims)
    }
}

/// Per-node solver data for one eligible (graph member with a vector) node.
struct NodePlan {
    slot: usize,
    alpha: f64,
    beta: f64,
    anchor_scale: f64,
    neighbor_slots: Vec<usize>,
    denominator: f64,
}

struct Plan {
    nodes: Vec<NodePlan>,
    /// Edge weight γ in the descent quadratic.
    gamma: f64,
}

fn build_plan<V: VectorOps>(
    vectors: &VectorSet<V>,
    graph: &ConceptGraph,
    cfg: &RetrofitConfig,
) -> Result<Plan, RetrofitError> {
    cfg.validate()?;
    let mut order: Vec<usize> = (0..vectors.names.len())
        .filter(|&i| graph.contains(&vectors.names[i]))
        .collect();
    match cfg.update_order {
        UpdateOrder::Lexicographic => {
            order.sort_by(|&a, &b| vectors.names[a].cmp(&vectors.names[b]))
        }
        UpdateOrder::ReverseLexicographic => {
            order.sort_by(|&a, &b| vectors.names[b].cmp(&vectors.names[a]))
        }
        UpdateOrder::Insertion => {}
    }

    let gamma = match cfg.beta {
        BetaRule::InverseDegree => 1.0,
        BetaRule::Constant(c) => c,
    };
    let mut nodes = Vec::with_capacity(order.len());
    for slot in order {
        let name = &vectors.names[slot];
        let degree = graph.degree(name);
        debug_assert!(degree > 0, "graphs carry no isolated nodes");
        let (beta, anchor_scale) = match cfg.beta {
            BetaRule::InverseDegree => (1.0 / degree as f64, degree as f64),
            BetaRule::Constant(c) => (c, 1.0),
        };
        let neighbor_slots: Vec<usize> = graph
            .neighbors(name)
            .expect("eligible node is in the graph")
            .iter()
            .filter_map(|n| vectors.index.get(n).copied())
            .collect();
        let alpha = cfg.alpha_for(name);
        let denominator = alpha + beta * neighbor_slots.len() as f64;
        if denominator == 0.0 {
            return Err(RetrofitError::InvalidConfig(format!(
                "zero update denominator for {name:?} (alpha 0 and no coupled neighbors)"
            )));
        }
        nodes.push(NodePlan {
            slot,
            alpha,
            beta,
            anchor_scale,
            neighbor_slots,
            denominator,
        });
    }
    Ok(Plan { nodes, gamma })
}

/// The quadratic the sweep descends: anchor terms scaled by `anchor_scale`
/// plus every coupled edge once with weight γ.
fn energy_of<V: VectorOps>(plan: &Plan, current: &[V], original: &[V]) -> f64 {
    let mut e = 0.0;
    for node in &plan.nodes {
        e += node.anchor_scale * node.alpha * current[node.slot].dist_sq(&original[node.slot]);
        for &j in &node.neighbor_slots {
            if j > node.slot {
                e += plan.gamma * current[node.slot].dist_sq(&current[j]);
            }
        }
    }
    e
}

fn objective_of<V: VectorOps>(plan: &Plan, current: &[V], original: &[V]) -> f64 {
    let mut psi = 0.0;
    for node in &plan.nodes {
        psi += node.alpha * current[node.slot].dist_sq(&original[node.slot]);
        for &j in &node.neighbor_slots {
            psi += node.beta * current[node.slot].dist_sq(&current[j]);
        }
    }
    psi
}

/// The diagnostic objective Σ_i [α_i‖q_i − q̂_i‖² + Σ_j β_ij‖q_i − q_j‖²]
/// with the inner sum over each node's own neighbor list, so every
/// undirected edge contributes from both endpoints with that endpoint's β.
/// Nodes without vectors and vectors outside the graph contribute nothing.
pub fn objective<V: VectorOps>(
    vectors: &VectorSet<V>,
    graph: &ConceptGraph,
    cfg: &RetrofitConfig,
) -> Result<f64, RetrofitError> {
    let plan = build_plan(vectors, graph, cfg)?;
    Ok(objective_of(&plan, &vectors.current, &vectors.original))
}

/// Runs Gauss–Seidel sweeps until `cfg.iterations` are exhausted or the
/// average per-vector Euclidean movement of a sweep drops below
/// `cfg.tolerance`. Vectors whose names are not graph nodes are returned
/// bit-identical; graph nodes without vectors are skipped entirely.
pub fn retrofit<V: VectorOps>(
    vectors: &VectorSet<V>,
    graph: &ConceptGraph,
    cfg: &RetrofitConfig,
) -> Result<(VectorSet<V>, ConvergenceInfo), RetrofitError> {
    let plan = build_plan(vectors, graph, cfg)?;
    let mut result = vectors.clone();

    if plan.nodes.is_empty() {
        let info = ConvergenceInfo {
            sweeps_run: 0,
            final_objective: 0.0,
            final_avg_change: 0.0,
            energies: vec![0.0],
        };
        return Ok((result, info));
    }

    let mut energies = vec![energy_of(&plan, &result.current, &result.original)];
    let mut sweeps_run = 0;
    let mut final_avg_change = 0.0;
    for _ in 0..cfg.iterations {
        let mut total_change = 0.0;
        for node in &plan.nodes {
            let mut terms: Vec<(f64, &V)> = Vec::with_capacity(node.neighbor_slots.len() + 1);
            for &j in &node.neighbor_slots {
                terms.push((node.beta / node.denominator, &result.current[j]));
            }
            terms.push((node.alpha / node.denominator, &result.original[node.slot]));
            let updated = V::weighted_sum(&terms);
            total_change += updated.dist_sq(&result.current[node.slot]).sqrt();
            result.current[node.slot] = updated;
        }
        sweeps_run += 1;
        final_avg_change = total_change / plan.nodes.len() as f64;
        energies.push(energy_of(&plan, &result.current, &result.original));
        if final_avg_change < cfg.tolerance {
            break;
        }
    }

    let info = ConvergenceInfo {
        sweeps_run,
        final_objective: objective_of(&plan, &result.current, &result.original),
        final_avg_change,
        energies,
    };
    Ok((result, info))
}

/// Retrofits the concept vectors (columns) of a word/concept matrix
/// against a graph over concept titles, rebuilding the matrix with the
/// retrofitted columns. Sparse fill-in is kept unless
/// `cfg.prune_threshold` trims it.
pub fn retrofit_concepts(
    matrix: &WordConceptMatrix,
    graph: &ConceptGraph,
    cfg: &RetrofitConfig,
) -> Result<(WordConceptMatrix, ConvergenceInfo), RetrofitError> {
    let entries: Vec<(String, SparseVector)> = matrix
        .concepts()
        .iter()
        .enumerate()
        .map(|(cid, title)| {
            (
                title.clone(),
                SparseVector::from_sorted_unchecked(matrix.column(cid).to_vec()),
            )
        })
        .collect();
    let vectors = VectorSet::from_entries(entries)?;
    let (result, info) = retrofit(&vectors, graph, cfg)?;
    let cols: Vec<Vec<(usize, f64)>> = result
        .iter()
        .map(|(_, v)| match cfg.prune_threshold {
            Some(t) => v.prune(t).iter().collect(),
            None => v.iter().collect(),
        })
        .collect();
    let rebuilt = WordConceptMatrix::from_columns(
        matrix.vocabulary().clone(),
        matrix.concepts().clone(),
        cols,
    );
    Ok((rebuilt, info))
}

/// Reads the plain-text vector format: one vector per line, the name
/// followed by its components, all space-separated. The first line fixes
/// the dimensionality.
pub fn load_dense_vectors(reader: impl BufRead) -> Result<VectorSet<DenseVector>, RetrofitError> {
    let mut entries: Vec<(String, DenseVector)> = Vec::new();
    let mut dims: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let name = fields.next().expect("non-blank line has a first field");
        let mut values = Vec::new();
        for field in fields {
            let value: f64 = field.parse().map_err(|_| RetrofitError::VectorFormat {
                line: line_no,
                reason: format!("unparseable component {field:?}"),
            })?;
            if !value.is_finite() {
                return Err(RetrofitError::VectorFormat {
                    line: line_no,
                    reason: format!("non-finite component {value}"),
                });
            }
            values.push(value);
        }
        if values.is_empty() {
            return Err(RetrofitError::VectorFormat {
                line: line_no,
                reason: "vector has no components".into(),
            });
        }
        match dims {
            None => dims = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(RetrofitError::VectorFormat {
                    line: line_no,
                    reason: format!("expected {d} components, found {}", values.len()),
                });
            }
            _ => {}
        }
        entries.push((name.to_string(), DenseVector::new(values)));
    }
    VectorSet::from_entries(entries)
}

/// Writes vectors in the same plain-text format, in insertion order,
/// printing each component with the shortest representation that parses
/// back to the same value. Loading and immediately saving a file written
/// by this function reproduces it byte for byte.
pub fn save_dense_vectors(
    vectors: &VectorSet<DenseVector>,
    mut writer: impl Write,
) -> io::Result<()> {
    for (name, v) in vectors.iter() {
        write!(writer, "{name}")?;
        for x in v.as_slice() {
            write!(writer, " {x}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}
