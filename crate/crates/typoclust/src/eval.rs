//! External validity: compare an emergent partition against reference
//! typologies through the contingency table, the F-measure, and the
//! corrected Rand index.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// An a-priori grouping of documents, read from a `doc_id,label` CSV.
#[derive(Debug, Clone)]
pub struct ReferencePartition {
    pub name: String,
    labels: HashMap<String, String>,
}

impl ReferencePartition {
    pub fn new(name: impl Into<String>, labels: HashMap<String, String>) -> Self {
        ReferencePartition {
            name: name.into(),
            labels,
        }
    }

    /// Read `doc_id,label` rows; a `doc_id,label` header is optional. The
    /// reference name is the file stem.
    pub fn from_csv(path: &Path) -> Result<Self, EvalError> {
        let bad = |message: String| EvalError::BadReferenceFile {
            path: path.display().to_string(),
            message,
        };
        let content = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut labels = HashMap::new();
        for (idx, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (doc_id, label) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("line {}: expected `doc_id,label`", idx + 1)))?;
            if idx == 0 && doc_id.eq_ignore_ascii_case("doc_id") {
                continue;
            }
            let (doc_id, label) = (doc_id.trim(), label.trim());
            if label.is_empty() {
                return Err(bad(format!("line {}: empty label", idx + 1)));
            }
            if labels.insert(doc_id.to_string(), label.to_string()).is_some() {
                return Err(bad(format!("duplicate doc_id `{doc_id}`")));
            }
        }
        if labels.is_empty() {
            return Err(bad("no labels".to_string()));
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "reference".to_string());
        Ok(ReferencePartition { name, labels })
    }

    pub fn label(&self, doc_id: &str) -> Option<&str> {
        self.labels.get(doc_id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Cross-counts of reference groups (rows) by clusters (columns) over the
/// documents present in both partitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    /// Group labels in lexicographic order.
    pub row_labels: Vec<String>,
    /// `cells[i][j]` = documents with group `i` and cluster `j`.
    pub cells: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub n: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no document appears in both the partition and reference `{reference}`")]
    NoOverlap { reference: String },
    #[error("reference file {path}: {message}")]
    BadReferenceFile { path: String, message: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The table plus how many partitioned documents had no reference label.
#[derive(Debug, Clone)]
pub struct ContingencyBuild {
    pub table: ContingencyTable,
    pub excluded: usize,
}

/// Cross-tabulate cluster ids against reference labels over the documents
/// the two partitions share. Partitioned documents without a label are
/// excluded and counted.
pub fn contingency_table(
    reference: &ReferencePartition,
    doc_ids: &[String],
    assignment: &[usize],
    k: usize,
) -> Result<ContingencyBuild, EvalError> {
    let mut row_labels: Vec<String> = Vec::new();
    for doc_id in doc_ids {
        if let Some(label) = reference.label(doc_id) {
            if !row_labels.iter().any(|l| l == label) {
                row_labels.push(label.to_string());
            }
        }
    }
    if row_labels.is_empty() {
        return Err(EvalError::NoOverlap {
            reference: reference.name.clone(),
        });
    }
    row_labels.sort();

    let row_index: HashMap<&str, usize> = row_labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut cells = vec![vec![0u64; k]; row_labels.len()];
    let mut excluded = 0usize;
    for (doc_id, &cluster) in doc_ids.iter().zip(assignment) {
        match reference.label(doc_id) {
            Some(label) => cells[row_index[label]][cluster] += 1,
            None => excluded += 1,
        }
    }

    let row_sums: Vec<u64> = cells.iter().map(|row| row.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..k)
        .map(|j| cells.iter().map(|row| row[j]).sum())
        .collect();
    let n = row_sums.iter().sum();
    Ok(ContingencyBuild {
        table: ContingencyTable {
            row_labels,
            cells,
            row_sums,
            col_sums,
            n,
        },
        excluded,
    })
}

/// How the per-pair F values aggregate into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FWeighting {
    /// Weight each cluster by its size and take the best group for it.
    #[default]
    Cluster,
    /// Weight each group by its size and take the best cluster for it.
    Class,
}

/// F between group `i` and cluster `j`: harmonic mean of recall
/// `n_ij/n_i.` and precision `n_ij/n_.j`; zero when the cell is empty.
fn pair_f(n_ij: u64, n_i: u64, n_j: u64) -> f64 {
    if n_ij == 0 {
        return 0.0;
    }
    let recall = n_ij as f64 / n_i as f64;
    let precision = n_ij as f64 / n_j as f64;
    2.0 * recall * precision / (recall + precision)
}

/// Aggregate F-measure with the default cluster-size weighting.
pub fn f_measure(table: &ContingencyTable) -> f64 {
    f_measure_weighted(table, FWeighting::Cluster)
}

pub fn f_measure_weighted(table: &ContingencyTable, weighting: FWeighting) -> f64 {
    let n = table.n as f64;
    match weighting {
        FWeighting::Cluster => (0..table.col_sums.len())
            .map(|j| {
                let best = (0..table.row_labels.len())
                    .map(|i| pair_f(table.cells[i][j], table.row_sums[i], table.col_sums[j]))
                    .fold(0.0, f64::max);
                table.col_sums[j] as f64 / n * best
            })
            .sum(),
        FWeighting::Class => (0..table.row_labels.len())
            .map(|i| {
                let best = (0..table.col_sums.len())
                    .map(|j| pair_f(table.cells[i][j], table.row_sums[i], table.col_sums[j]))
                    .fold(0.0, f64::max);
                table.row_sums[i] as f64 / n * best
            })
            .sum(),
    }
}

fn choose2(m: u64) -> i128 {
    let m = m as i128;
    m * (m - 1) / 2
}

/// True when the two partitions coincide up to relabeling: every group
/// sits in exactly one cluster and no cluster mixes groups.
fn partitions_identical(table: &ContingencyTable) -> bool {
    let rows_pure = table
        .cells
        .iter()
        .all(|row| row.iter().filter(|&&c| c > 0).count() == 1);
    let cols_pure = (0..table.col_sums.len())
        .all(|j| table.cells.iter().filter(|row| row[j] > 0).count() <= 1);
    rows_pure && cols_pure
}

/// Corrected Rand index of Hubert and Arabie. Computed exactly: with the
/// common denominator `2*C(n,2)` cleared, numerator and denominator are
/// integers, so the only rounding is the final division. A zero
/// denominator means both partitions have the same trivial structure;
/// by convention that is 1.0 when they are equal and 0.0 otherwise.
pub fn corrected_rand(table: &ContingencyTable) -> f64 {
    let sum_cells: i128 = table
        .cells
        .iter()
        .flat_map(|row| row.iter())
        .map(|&c| choose2(c))
        .sum();
    let sum_rows: i128 = table.row_sums.iter().map(|&c| choose2(c)).sum();
    let sum_cols: i128 = table.col_sums.iter().map(|&c| choose2(c)).sum();
    let total = choose2(table.n);

    let numerator = 2 * total * sum_cells - 2 * sum_rows * sum_cols;
    let denominator = total * (sum_rows + sum_cols) - 2 * sum_rows * sum_cols;
    if denominator == 0 {
        return if partitions_identical(table) { 1.0 } else { 0.0 };
    }
    numerator as f64 / denominator as f64
}

/// One Table-2-shaped result row for one reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub experiment: String,
    pub k: usize,
    pub reference: String,
    pub f: f64,
    pub corrected_rand: f64,
    pub contingency: ContingencyTable,
    /// Partitioned documents the reference does not label.
    pub excluded: usize,
}

/// Evaluate a partition against every reference; a reference with no
/// overlapping documents yields an error entry instead of a report.
pub fn evaluate(
    experiment: &str,
    k: usize,
    doc_ids: &[String],
    assignment: &[usize],
    references: &[ReferencePartition],
    weighting: FWeighting,
) -> Vec<Result<EvaluationReport, EvalError>> {
    references
        .iter()
        .map(|reference| {
            let build = contingency_table(reference, doc_ids, assignment, k)?;
            Ok(EvaluationReport {
                experiment: experiment.to_string(),
                k,
                reference: reference.name.clone(),
                f: f_measure_weighted(&build.table, weighting),
                corrected_rand: corrected_rand(&build.table),
                contingency: build.table,
                excluded: build.excluded,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(pairs: &[(&str, &str)]) -> ReferencePartition {
        ReferencePartition::new(
            "ref",
            pairs
                .iter()
                .map(|(d, l)| (d.to_string(), l.to_string()))
                .collect(),
        )
    }

    fn ids(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Table from two label vectors; the oracle-side constructor.
    fn table_from_labels(groups: &[usize], clusters: &[usize]) -> ContingencyTable {
        let r = groups.iter().max().unwrap() + 1;
        let k = clusters.iter().max().unwrap() + 1;
        let mut cells = vec![vec![0u64; k]; r];
        for (&g, &c) in groups.iter().zip(clusters) {
            cells[g][c] += 1;
        }
        let row_sums: Vec<u64> = cells.iter().map(|row| row.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..k).map(|j| cells.iter().map(|row| row[j]).sum()).collect();
        ContingencyTable {
            row_labels: (0..r).map(|i| format!("g{i}")).collect(),
            n: row_sums.iter().sum(),
            cells,
            row_sums,
            col_sums,
        }
    }

    /// Pair-counting corrected Rand: classify every document pair as
    /// together/apart in each partition, then apply the adjusted-index
    /// identity. Independent of the contingency-table route.
    fn pair_counting_rand(groups: &[usize], clusters: &[usize]) -> f64 {
        let n = groups.len();
        let (mut a, mut b, mut c, mut d) = (0f64, 0f64, 0f64, 0f64);
        for s in 0..n {
            for t in s + 1..n {
                let together_ref = groups[s] == groups[t];
                let together_cluster = clusters[s] == clusters[t];
                match (together_ref, together_cluster) {
                    (true, true) => a += 1.0,
                    (true, false) => b += 1.0,
                    (false, true) => c += 1.0,
                    (false, false) => d += 1.0,
                }
            }
        }
        let denominator = (a + b) * (b + d) + (a + c) * (c + d);
        if denominator == 0.0 {
            let equal = b == 0.0 && c == 0.0;
            return if equal { 1.0 } else { 0.0 };
        }
        2.0 * (a * d - b * c) / denominator
    }

    #[test]
    fn contingency_from_assignments() {
        let reference = reference(&[("d1", "A"), ("d2", "A"), ("d3", "B")]);
        let build =
            contingency_table(&reference, &ids(&["d1", "d2", "d3"]), &[0, 0, 1], 2).unwrap();
        assert_eq!(build.table.cells, vec![vec![2, 0], vec![0, 1]]);
        assert_eq!(build.excluded, 0);
    }

    #[test]
    fn unlabeled_documents_are_excluded_and_counted() {
        let reference = reference(&[("d1", "A"), ("d2", "B")]);
        let build =
            contingency_table(&reference, &ids(&["d1", "d2", "d3"]), &[0, 1, 1], 2).unwrap();
        assert_eq!(build.table.n, 2);
        assert_eq!(build.excluded, 1);
    }

    #[test]
    fn no_overlap_is_an_error() {
        let reference = reference(&[("x", "A")]);
        assert!(matches!(
            contingency_table(&reference, &ids(&["d1"]), &[0], 1),
            Err(EvalError::NoOverlap { .. })
        ));
    }

    #[test]
    fn permuting_cluster_ids_permutes_columns_only() {
        let reference = reference(&[("d1", "A"), ("d2", "A"), ("d3", "B")]);
        let docs = ids(&["d1", "d2", "d3"]);
        let original = contingency_table(&reference, &docs, &[0, 0, 1], 2).unwrap();
        let permuted = contingency_table(&reference, &docs, &[1, 1, 0], 2).unwrap();
        assert_eq!(
            original.table.cells,
            permuted
                .table
                .cells
                .iter()
                .map(|row| row.iter().rev().copied().collect::<Vec<_>>())
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn identical_partitions_score_one() {
        let table = table_from_labels(&[0, 0, 1, 1, 2], &[2, 2, 0, 0, 1]);
        assert_eq!(f_measure(&table), 1.0);
        assert_eq!(corrected_rand(&table), 1.0);
    }

    #[test]
    fn hand_checked_two_group_table() {
        // U = {A,A,B,B}, C = {0,0,0,1}.
        let table = table_from_labels(&[0, 0, 1, 1], &[0, 0, 0, 1]);
        let f = f_measure(&table);
        assert!((f - (0.75 * 0.8 + 0.25 * (2.0 / 3.0))).abs() < 1e-15);
        assert_eq!(corrected_rand(&table), 0.0);
    }

    #[test]
    fn one_cluster_partition_has_zero_rand() {
        for groups in [
            vec![0usize, 0, 1, 1, 2, 2],
            vec![0, 1, 2, 3, 4, 5],
            vec![0, 0, 0, 1, 1, 2],
        ] {
            let clusters = vec![0usize; groups.len()];
            let table = table_from_labels(&groups, &clusters);
            assert_eq!(corrected_rand(&table), 0.0, "{groups:?}");
        }
        // Unless the reference is also a single block.
        let table = table_from_labels(&[0, 0, 0], &[0, 0, 0]);
        assert_eq!(corrected_rand(&table), 1.0);
    }

    #[test]
    fn all_singletons_both_sides_is_equal_structure() {
        let table = table_from_labels(&[0, 1, 2], &[2, 0, 1]);
        assert_eq!(corrected_rand(&table), 1.0);
        assert_eq!(f_measure(&table), 1.0);
    }

    #[test]
    fn rand_matches_pair_counting_oracle_on_random_partitions() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        for _ in 0..200 {
            let n = rng.gen_range(2..=30);
            let r = rng.gen_range(1..=6);
            let k = rng.gen_range(1..=6);
            let groups: Vec<usize> = (0..n).map(|_| rng.gen_range(0..r)).collect();
            let clusters: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let table = table_from_labels(&groups, &clusters);
            let expected = pair_counting_rand(&groups, &clusters);
            let actual = corrected_rand(&table);
            assert!(
                (actual - expected).abs() < 1e-12,
                "{groups:?} vs {clusters:?}: {actual} != {expected}"
            );
        }
    }

    #[test]
    fn scores_are_invariant_under_relabeling() {
        use rand::seq::SliceRandom;
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let n = rng.gen_range(4..=20);
            let r = rng.gen_range(2..=4);
            let k = rng.gen_range(2..=4);
            let groups: Vec<usize> = (0..n).map(|_| rng.gen_range(0..r)).collect();
            let clusters: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let mut group_map: Vec<usize> = (0..r).collect();
            let mut cluster_map: Vec<usize> = (0..k).collect();
            group_map.shuffle(&mut rng);
            cluster_map.shuffle(&mut rng);
            let relabeled_groups: Vec<usize> = groups.iter().map(|&g| group_map[g]).collect();
            let relabeled_clusters: Vec<usize> =
                clusters.iter().map(|&c| cluster_map[c]).collect();

            let table = table_from_labels(&groups, &clusters);
            let relabeled = table_from_labels(&relabeled_groups, &relabeled_clusters);
            assert!((f_measure(&table) - f_measure(&relabeled)).abs() < 1e-12);
            assert!(
                (f_measure_weighted(&table, FWeighting::Class)
                    - f_measure_weighted(&relabeled, FWeighting::Class))
                .abs()
                    < 1e-12
            );
            assert!((corrected_rand(&table) - corrected_rand(&relabeled)).abs() < 1e-12);
            let f = f_measure(&table);
            assert!((0.0..=1.0).contains(&f));
            assert!(corrected_rand(&table) <= 1.0);
        }
    }

    #[test]
    fn rand_can_be_negative() {
        // Alternating labels disagree more than chance.
        let table = table_from_labels(&[0, 0, 1, 1], &[0, 1, 0, 1]);
        assert!(corrected_rand(&table) < 0.0);
    }

    #[test]
    fn class_weighting_differs_on_skewed_tables() {
        let table = table_from_labels(&[0, 0, 0, 0, 0, 1], &[0, 0, 0, 0, 0, 0]);
        let by_cluster = f_measure_weighted(&table, FWeighting::Cluster);
        let by_class = f_measure_weighted(&table, FWeighting::Class);
        assert!(by_cluster > by_class);
    }

    #[test]
    fn f_and_rand_trend_together_across_noise_levels() {
        // Planted labels with an increasing fraction of corrupted
        // assignments; the two measures must correlate positively.
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        let mut f_scores = Vec::new();
        let mut rand_scores = Vec::new();
        for trial in 0..100 {
            let noise = (trial % 10) as f64 / 10.0;
            let n = 40;
            let groups: Vec<usize> = (0..n).map(|s| s % 4).collect();
            let clusters: Vec<usize> = groups
                .iter()
                .map(|&g| {
                    if rng.gen_bool(noise) {
                        rng.gen_range(0..4)
                    } else {
                        g
                    }
                })
                .collect();
            let table = table_from_labels(&groups, &clusters);
            f_scores.push(f_measure(&table));
            rand_scores.push(corrected_rand(&table));
        }
        assert!(spearman(&f_scores, &rand_scores) > 0.0);
    }

    fn spearman(a: &[f64], b: &[f64]) -> f64 {
        fn ranks(values: &[f64]) -> Vec<f64> {
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&x, &y| values[x].partial_cmp(&values[y]).unwrap());
            let mut ranks = vec![0.0; values.len()];
            for (rank, &idx) in order.iter().enumerate() {
                ranks[idx] = rank as f64;
            }
            ranks
        }
        let ra = ranks(a);
        let rb = ranks(b);
        let n = a.len() as f64;
        let mean = (n - 1.0) / 2.0;
        let mut cov = 0.0;
        let mut var_a = 0.0;
        let mut var_b = 0.0;
        for (x, y) in ra.iter().zip(&rb) {
            cov += (x - mean) * (y - mean);
            var_a += (x - mean) * (x - mean);
            var_b += (y - mean) * (y - mean);
        }
        cov / (var_a.sqrt() * var_b.sqrt())
    }

    #[test]
    fn evaluate_produces_one_row_per_reference() {
        let references = vec![
            reference(&[("d1", "A"), ("d2", "A"), ("d3", "B")]),
            ReferencePartition::new(
                "other",
                [("d1", "X"), ("d2", "Y"), ("d3", "Y")]
                    .iter()
                    .map(|(d, l)| (d.to_string(), l.to_string()))
                    .collect(),
            ),
            ReferencePartition::new("disjoint", [("zz", "A".to_string())]
                .iter()
                .map(|(d, l)| (d.to_string(), l.clone()))
                .collect()),
        ];
        let rows = evaluate(
            "exp",
            2,
            &ids(&["d1", "d2", "d3"]),
            &[0, 0, 1],
            &references,
            FWeighting::Cluster,
        );
        assert_eq!(rows.len(), 3);
        assert!(rows[0].is_ok());
        assert!(rows[1].is_ok());
        assert!(matches!(rows[2], Err(EvalError::NoOverlap { .. })));
        let first = rows[0].as_ref().unwrap();
        assert_eq!(first.f, 1.0);
        assert_eq!(first.corrected_rand, 1.0);
    }

    #[test]
    fn reference_csv_reading() {
        let dir = tempfile::tempdir().unwrap();
        let with_header = dir.path().join("themes_a.csv");
        std::fs::write(&with_header, "doc_id,label\nd1,A\nd2,B\n").unwrap();
        let reference = ReferencePartition::from_csv(&with_header).unwrap();
        assert_eq!(reference.name, "themes_a");
        assert_eq!(reference.len(), 2);
        assert_eq!(reference.label("d1"), Some("A"));

        let without_header = dir.path().join("plain.csv");
        std::fs::write(&without_header, "d1,A\nd2,B\n").unwrap();
        assert_eq!(ReferencePartition::from_csv(&without_header).unwrap().len(), 2);

        let duplicate = dir.path().join("dup.csv");
        std::fs::write(&duplicate, "d1,A\nd1,B\n").unwrap();
        assert!(ReferencePartition::from_csv(&duplicate).is_err());
    }
}
