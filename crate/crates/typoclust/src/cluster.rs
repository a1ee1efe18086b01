//! Prototype-based partitioning of the document-term matrix.
//!
//! Documents are compared through the chi-squared distance between row
//! profiles, weighted by inverse corpus word frequencies. A cluster's
//! prototype is the componentwise sum of its member rows; with documents
//! weighted by their share of the corpus mass this prototype minimizes
//! within-cluster inertia, so the assign/update alternation converges
//! monotonically.

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::vocab::DocTermMatrix;

/// Summed count vector of a cluster's member documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prototype {
    pub g: Vec<u64>,
    pub mass: u64,
}

impl Prototype {
    pub fn from_row(row: &[u32], row_total: u64) -> Self {
        Prototype {
            g: row.iter().map(|&c| c as u64).collect(),
            mass: row_total,
        }
    }
}

/// A hard assignment of every document to one of `k` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Cluster id per document index, ids in `0..k`.
    pub assignment: Vec<usize>,
    pub k: usize,
    /// Mass-weighted within-cluster inertia of the returned state.
    pub inertia: f64,
    /// The seed the run was started with.
    pub seed: u64,
}

/// A word over-represented in one cluster, ranked by its contribution to
/// the cluster-by-word chi-squared statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminativeWord {
    pub word: String,
    pub cluster: usize,
    pub score: f64,
    /// Relative frequency of the word in the cluster prototype.
    pub cluster_profile_freq: f64,
    /// Relative frequency of the word in the whole corpus.
    pub corpus_freq: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("k must be between 1 and the number of documents ({n_docs}), got {k}")]
    InvalidK { k: usize, n_docs: usize },
    #[error("degenerate input: zero row total or zero prototype mass")]
    DegenerateInput,
    #[error("cluster {cluster} has no members")]
    EmptyCluster { cluster: usize },
    #[error("restarts and max_iter must be at least 1")]
    InvalidIterationBudget,
    #[error("partition file {path}: {message}")]
    BadPartitionFile { path: String, message: String },
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Chi-squared distance between a document's profile and a prototype's
/// profile: `sum_j (x_j/x - g_j/g)^2 / c_j`.
pub fn chi2_distance(
    row: &[u32],
    row_total: u64,
    proto: &Prototype,
    col_marginals: &[f64],
) -> Result<f64, ClusterError> {
    if row_total == 0 || proto.mass == 0 {
        return Err(ClusterError::DegenerateInput);
    }
    Ok(chi2_unchecked(row, row_total, proto, col_marginals))
}

fn chi2_unchecked(row: &[u32], row_total: u64, proto: &Prototype, col_marginals: &[f64]) -> f64 {
    let row_total = row_total as f64;
    let mass = proto.mass as f64;
    row.iter()
        .zip(&proto.g)
        .zip(col_marginals)
        .map(|((&x, &g), &c)| {
            let diff = x as f64 / row_total - g as f64 / mass;
            diff * diff / c
        })
        .sum()
}

/// Sum member rows per cluster. Fails on the first empty cluster so the
/// caller can repair it.
pub fn compute_prototypes(
    matrix: &DocTermMatrix,
    assignment: &[usize],
    k: usize,
) -> Result<Vec<Prototype>, ClusterError> {
    let mut prototypes = vec![
        Prototype {
            g: vec![0; matrix.n_words()],
            mass: 0,
        };
        k
    ];
    for (row, &cluster) in matrix.counts.iter().zip(assignment) {
        let proto = &mut prototypes[cluster];
        for (gj, &x) in proto.g.iter_mut().zip(row) {
            *gj += x as u64;
        }
    }
    for proto in &mut prototypes {
        proto.mass = proto.g.iter().sum();
    }
    if let Some(cluster) = prototypes.iter().position(|p| p.mass == 0) {
        return Err(ClusterError::EmptyCluster { cluster });
    }
    Ok(prototypes)
}

/// Assign every document to its nearest prototype; ties go to the lowest
/// cluster index.
pub fn assign_step(
    matrix: &DocTermMatrix,
    prototypes: &[Prototype],
    col_marginals: &[f64],
) -> Vec<usize> {
    matrix
        .counts
        .iter()
        .zip(&matrix.row_totals)
        .map(|(row, &total)| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, proto) in prototypes.iter().enumerate() {
                let d = chi2_unchecked(row, total, proto, col_marginals);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Mass-weighted within-cluster inertia `W`.
pub fn inertia(
    matrix: &DocTermMatrix,
    assignment: &[usize],
    prototypes: &[Prototype],
    col_marginals: &[f64],
) -> f64 {
    let n = matrix.grand_total as f64;
    matrix
        .counts
        .iter()
        .zip(&matrix.row_totals)
        .zip(assignment)
        .map(|((row, &total), &cluster)| {
            let weight = total as f64 / n;
            weight * chi2_unchecked(row, total, &prototypes[cluster], col_marginals)
        })
        .sum()
}

/// Per-restart convergence record.
#[derive(Debug, Clone)]
pub struct RestartTrace {
    /// Inertia after each update step.
    pub inertia_per_iteration: Vec<f64>,
    /// Whether the assignment reached a fixed point within the budget.
    pub converged: bool,
}

impl RestartTrace {
    pub fn iterations(&self) -> usize {
        self.inertia_per_iteration.len()
    }
}

/// Run the alternation for several seeded restarts and keep the restart
/// with the smallest inertia (ties to the lowest restart index).
pub fn run_clustering(
    matrix: &DocTermMatrix,
    k: usize,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<Partition, ClusterError> {
    run_clustering_traced(matrix, k, restarts, max_iter, seed).map(|(partition, _)| partition)
}

/// Like [`run_clustering`] but also returns the per-restart traces.
pub fn run_clustering_traced(
    matrix: &DocTermMatrix,
    k: usize,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<(Partition, Vec<RestartTrace>), ClusterError> {
    let n_docs = matrix.n_docs();
    if k < 1 || k > n_docs {
        return Err(ClusterError::InvalidK { k, n_docs });
    }
    if restarts < 1 || max_iter < 1 {
        return Err(ClusterError::InvalidIterationBudget);
    }
    let col_marginals = matrix.col_marginals();

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut traces = Vec::with_capacity(restarts);
    for restart in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
        let seeds = sample_distinct(&mut rng, n_docs, k);
        let (assignment, w, trace) = run_single(matrix, k, max_iter, &seeds, &col_marginals)?;
        if best.as_ref().is_none_or(|(_, best_w)| w < *best_w) {
            best = Some((assignment, w));
        }
        traces.push(trace);
    }

    let (assignment, w) = best.expect("at least one restart ran");
    Ok((
        Partition {
            assignment,
            k,
            inertia: w,
            seed,
        },
        traces,
    ))
}

fn run_single(
    matrix: &DocTermMatrix,
    k: usize,
    max_iter: usize,
    seed_docs: &[usize],
    col_marginals: &[f64],
) -> Result<(Vec<usize>, f64, RestartTrace), ClusterError> {
    let mut prototypes: Vec<Prototype> = seed_docs
        .iter()
        .map(|&s| Prototype::from_row(&matrix.counts[s], matrix.row_totals[s]))
        .collect();
    let mut assignment = assign_step(matrix, &prototypes, col_marginals);
    let mut trace = RestartTrace {
        inertia_per_iteration: Vec::new(),
        converged: false,
    };

    loop {
        repair_empty_clusters(matrix, &mut assignment, k, &prototypes, col_marginals);
        prototypes = compute_prototypes(matrix, &assignment, k)?;
        let w = inertia(matrix, &assignment, &prototypes, col_marginals);
        trace.inertia_per_iteration.push(w);

        let next = assign_step(matrix, &prototypes, col_marginals);
        if next == assignment {
            trace.converged = true;
            return Ok((assignment, w, trace));
        }
        if trace.iterations() >= max_iter {
            return Ok((assignment, w, trace));
        }
        assignment = next;
    }
}

/// Give every empty cluster the document with the largest individual
/// inertia contribution, taken from a cluster that still has at least two
/// members. The donated document becomes a singleton, whose distance to
/// its own prototype is zero, so the following update step cannot raise W.
fn repair_empty_clusters(
    matrix: &DocTermMatrix,
    assignment: &mut [usize],
    k: usize,
    prototypes: &[Prototype],
    col_marginals: &[f64],
) {
    loop {
        let mut sizes = vec![0usize; k];
        for &cluster in assignment.iter() {
            sizes[cluster] += 1;
        }
        let Some(empty) = sizes.iter().position(|&size| size == 0) else {
            return;
        };
        let n = matrix.grand_total as f64;
        let mut donor: Option<(usize, f64)> = None;
        for (s, &cluster) in assignment.iter().enumerate() {
            if sizes[cluster] < 2 {
                continue;
            }
            let weight = matrix.row_totals[s] as f64 / n;
            let contribution = weight
                * chi2_unchecked(
                    &matrix.counts[s],
                    matrix.row_totals[s],
                    &prototypes[cluster],
                    col_marginals,
                );
            if donor.as_ref().is_none_or(|&(_, best)| contribution > best) {
                donor = Some((s, contribution));
            }
        }
        let (s, _) = donor.expect("a cluster with two members exists while one is empty");
        assignment[s] = empty;
    }
}

/// First `k` positions of a Fisher-Yates shuffle; distinct indices,
/// stable across platforms for a given RNG.
fn sample_distinct(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        indices.swap(i, j);
    }
    indices.truncate(k);
    indices
}

/// Words over-represented in each cluster (`p_i^j > c_j`), scored by
/// `(g_i/N) * (p_i^j - c_j)^2 / c_j`, the cell's contribution to the
/// cluster-by-word chi-squared statistic; top `n` per cluster, descending.
pub fn discriminative_words(
    matrix: &DocTermMatrix,
    partition: &Partition,
    top_n: usize,
) -> Result<Vec<DiscriminativeWord>, ClusterError> {
    let prototypes = compute_prototypes(matrix, &partition.assignment, partition.k)?;
    let col_marginals = matrix.col_marginals();
    let n = matrix.grand_total as f64;

    let mut out = Vec::new();
    for (cluster, proto) in prototypes.iter().enumerate() {
        let mass = proto.mass as f64;
        let mut scored: Vec<DiscriminativeWord> = Vec::new();
        for (j, word) in matrix.words.iter().enumerate() {
            let p = proto.g[j] as f64 / mass;
            let c = col_marginals[j];
            if p > c {
                let diff = p - c;
                scored.push(DiscriminativeWord {
                    word: word.clone(),
                    cluster,
                    score: (mass / n) * diff * diff / c,
                    cluster_profile_freq: p,
                    corpus_freq: c,
                });
            }
        }
        scored.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .expect("scores are finite")
                .then_with(|| a.word.cmp(&b.word))
        });
        scored.truncate(top_n);
        out.extend(scored);
    }
    Ok(out)
}

/// Clustering run metadata, serialized next to each partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub inertia: f64,
    pub iterations_per_restart: Vec<usize>,
}

/// Write `doc_id,cluster` rows.
pub fn write_partition_csv(
    doc_ids: &[String],
    partition: &Partition,
    path: &Path,
) -> Result<(), ClusterError> {
    let mut out = String::from("doc_id,cluster\n");
    for (doc_id, &cluster) in doc_ids.iter().zip(&partition.assignment) {
        out.push_str(doc_id);
        out.push(',');
        out.push_str(&cluster.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| ClusterError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Read `doc_id,cluster` rows; a `doc_id,cluster` header line is optional.
pub fn read_partition_csv(path: &Path) -> Result<Vec<(String, usize)>, ClusterError> {
    let bad = |message: String| ClusterError::BadPartitionFile {
        path: path.display().to_string(),
        message,
    };
    let content = std::fs::read_to_string(path).map_err(|source| ClusterError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (doc_id, cluster) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("line {}: expected `doc_id,cluster`", idx + 1)))?;
        if idx == 0 && doc_id.eq_ignore_ascii_case("doc_id") {
            continue;
        }
        let cluster = cluster
            .trim()
            .parse::<usize>()
            .map_err(|_| bad(format!("line {}: `{cluster}` is not a cluster id", idx + 1)))?;
        rows.push((doc_id.to_string(), cluster));
    }
    if rows.is_empty() {
        return Err(bad("no assignments".to_string()));
    }
    Ok(rows)
}
