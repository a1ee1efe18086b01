//! Vocabulary construction with document-frequency pruning, and the
//! document-term count matrix with its marginals.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// The experiment vocabulary: distinct lemmas that survive pruning,
/// ordered lexicographically so matrix layouts are reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    /// Per word, the number of distinct documents containing it.
    df: Vec<u32>,
}

impl Vocabulary {
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn df(&self, word_id: usize) -> u32 {
        self.df[word_id]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("no word reaches the document-frequency threshold {min_df}")]
    EmptyVocabulary { min_df: u32 },
    #[error("min_df must be at least 1")]
    InvalidMinDf,
    #[error("matrix file {path}: {message}")]
    BadMatrixFile { path: String, message: String },
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Build the vocabulary of lemmas used by at least `min_df` documents.
/// Document frequency counts distinct presence, not occurrences.
pub fn build_vocabulary(
    docs: &[(String, Vec<String>)],
    min_df: u32,
) -> Result<Vocabulary, VocabError> {
    if min_df < 1 {
        return Err(VocabError::InvalidMinDf);
    }
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for (_, lemmas) in docs {
        let distinct: BTreeSet<&str> = lemmas.iter().map(String::as_str).collect();
        for lemma in distinct {
            *df.entry(lemma).or_insert(0) += 1;
        }
    }
    let (words, df): (Vec<String>, Vec<u32>) = df
        .into_iter()
        .filter(|&(_, count)| count >= min_df)
        .map(|(word, count)| (word.to_string(), count))
        .unzip();
    if words.is_empty() {
        return Err(VocabError::EmptyVocabulary { min_df });
    }
    Ok(Vocabulary { words, df })
}

/// Documents-by-words count matrix with row, column and grand totals.
/// Every row and column total is positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocTermMatrix {
    pub doc_ids: Vec<String>,
    pub words: Vec<String>,
    /// `counts[s][j]` = occurrences of word `j` in document `s`.
    pub counts: Vec<Vec<u32>>,
    pub row_totals: Vec<u64>,
    pub col_totals: Vec<u64>,
    pub grand_total: u64,
}

impl DocTermMatrix {
    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_words(&self) -> usize {
        self.words.len()
    }

    /// Corpus word frequencies `c_j = n_.j / N`; all positive.
    pub fn col_marginals(&self) -> Vec<f64> {
        self.col_totals
            .iter()
            .map(|&t| t as f64 / self.grand_total as f64)
            .collect()
    }

    /// Verify the marginal identities; used as an internal self-check.
    pub fn check_marginals(&self) -> Result<(), String> {
        for (s, row) in self.counts.iter().enumerate() {
            let total: u64 = row.iter().map(|&c| c as u64).sum();
            if total != self.row_totals[s] {
                return Err(format!("row total mismatch for `{}`", self.doc_ids[s]));
            }
        }
        for j in 0..self.words.len() {
            let total: u64 = self.counts.iter().map(|row| row[j] as u64).sum();
            if total != self.col_totals[j] {
                return Err(format!("column total mismatch for `{}`", self.words[j]));
            }
        }
        let n: u64 = self.row_totals.iter().sum();
        if n != self.grand_total {
            return Err("grand total mismatch".to_string());
        }
        Ok(())
    }
}

/// A constructed matrix plus whatever had to be removed to keep all
/// marginals positive.
#[derive(Debug, Clone)]
pub struct MatrixBuild {
    pub matrix: DocTermMatrix,
    /// Documents whose rows were all zero, in input order.
    pub excluded_docs: Vec<String>,
    /// Words whose columns were all zero (possible only when the
    /// vocabulary was built from a different document set).
    pub excluded_words: Vec<String>,
}

/// Count vocabulary words per document. Documents with no vocabulary word
/// and words with no remaining occurrence are dropped and reported.
pub fn build_matrix(docs: &[(String, Vec<String>)], vocab: &Vocabulary) -> MatrixBuild {
    let index: HashMap<&str, usize> = vocab
        .words
        .iter()
        .enumerate()
        .map(|(j, w)| (w.as_str(), j))
        .collect();

    let rows = docs
        .iter()
        .map(|(doc_id, lemmas)| {
            let mut row = vec![0u32; vocab.len()];
            for lemma in lemmas {
                if let Some(&j) = index.get(lemma.as_str()) {
                    row[j] += 1;
                }
            }
            (doc_id.clone(), row)
        })
        .collect();
    assemble(rows, vocab.words.clone())
}

/// Drop zero rows and columns, compute the marginals.
fn assemble(rows: Vec<(String, Vec<u32>)>, words: Vec<String>) -> MatrixBuild {
    let mut doc_ids = Vec::new();
    let mut kept_rows: Vec<Vec<u32>> = Vec::new();
    let mut excluded_docs = Vec::new();
    for (doc_id, row) in rows {
        if row.iter().all(|&c| c == 0) {
            excluded_docs.push(doc_id);
        } else {
            doc_ids.push(doc_id);
            kept_rows.push(row);
        }
    }

    let mut full_col_totals: Vec<u64> = vec![0; words.len()];
    for row in &kept_rows {
        for (j, &c) in row.iter().enumerate() {
            full_col_totals[j] += c as u64;
        }
    }
    let (kept, dropped): (Vec<usize>, Vec<usize>) =
        (0..words.len()).partition(|&j| full_col_totals[j] > 0);
    let excluded_words: Vec<String> = dropped.iter().map(|&j| words[j].clone()).collect();

    let words: Vec<String> = kept.iter().map(|&j| words[j].clone()).collect();
    let counts: Vec<Vec<u32>> = kept_rows
        .iter()
        .map(|row| kept.iter().map(|&j| row[j]).collect())
        .collect();
    let row_totals: Vec<u64> = counts
        .iter()
        .map(|row| row.iter().map(|&c| c as u64).sum())
        .collect();
    let col_totals: Vec<u64> = kept.iter().map(|&j| full_col_totals[j]).collect();
    let grand_total: u64 = row_totals.iter().sum();

    MatrixBuild {
        matrix: DocTermMatrix {
            doc_ids,
            words,
            counts,
            row_totals,
            col_totals,
            grand_total,
        },
        excluded_docs,
        excluded_words,
    }
}

/// The per-experiment data-size statistics block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineStats {
    /// Documents retained after structural extraction.
    pub projects: usize,
    /// Tokens before category and stopword filtering.
    pub extracted: usize,
    /// Tokens after filtering, before document-frequency pruning.
    pub selected: usize,
    /// Vocabulary size after pruning.
    pub vocabulary: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub excluded_docs: Vec<String>,
    pub stats: PipelineStats,
}

/// Write the matrix as CSV: header `doc_id,<word1>,...`, one document per
/// row, integer counts.
pub fn write_matrix_csv(matrix: &DocTermMatrix, path: &Path) -> Result<(), VocabError> {
    let io_err = |source| VocabError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(source),
        other => VocabError::BadMatrixFile {
            path: path.display().to_string(),
            message: format!("{other:?}"),
        },
    })?;
    let mut header = vec!["doc_id".to_string()];
    header.extend(matrix.words.iter().cloned());
    writer
        .write_record(&header)
        .and_then(|_| {
            for (doc_id, row) in matrix.doc_ids.iter().zip(&matrix.counts) {
                let mut record = vec![doc_id.clone()];
                record.extend(row.iter().map(|c| c.to_string()));
                writer.write_record(&record)?;
            }
            writer.flush()?;
            Ok(())
        })
        .map_err(|e| VocabError::BadMatrixFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })
}

/// Read a matrix back from its CSV form. Zero rows and columns are dropped
/// the same way `build_matrix` drops them, so a foreign matrix is also
/// safe to cluster.
pub fn read_matrix_csv(path: &Path) -> Result<MatrixBuild, VocabError> {
    let bad = |message: String| VocabError::BadMatrixFile {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.is_empty() || &headers[0] != "doc_id" {
        return Err(bad("first header column must be `doc_id`".to_string()));
    }
    let words: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if words.is_empty() {
        return Err(bad("matrix has no word columns".to_string()));
    }

    let mut docs: Vec<(String, Vec<u32>)> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != words.len() + 1 {
            return Err(bad(format!(
                "row {} has {} fields, expected {}",
                line + 2,
                record.len(),
                words.len() + 1
            )));
        }
        let doc_id = record[0].to_string();
        let row: Vec<u32> = record
            .iter()
            .skip(1)
            .map(|field| {
                field
                    .parse::<u32>()
                    .map_err(|_| bad(format!("row {}: `{field}` is not a count", line + 2)))
            })
            .collect::<Result<_, _>>()?;
        docs.push((doc_id, row));
    }
    Ok(assemble(docs, words))
}

pub fn write_sidecar_json(sidecar: &MatrixSidecar, path: &Path) -> Result<(), VocabError> {
    let io_err = |source| VocabError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    let json = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    file.write_all(json.as_bytes()).map_err(io_err)?;
    file.write_all(b"\n").map_err(io_err)
}
