//! Corpus ingestion: parse XML documents and pull out the text of elements
//! matched by structural selectors.
//!
//! A selector is a `/`-separated path of element names anchored at the root;
//! `//` between steps matches zero or more intermediate elements. Matching is
//! by element name only. When matches nest, only the outermost element is
//! reported, since its text already contains the text of the inner ones.

use std::fs;
use std::path::{Path, PathBuf};

use crate::xml::{self, Element, MalformedXml};

/// One parsed corpus document.
#[derive(Debug, Clone)]
pub struct RawDocument {
    /// Filename stem; unique within a corpus directory.
    pub doc_id: String,
    pub root: Element,
    /// Entity-resolution warnings recorded while parsing.
    pub warnings: Vec<String>,
}

/// Text gathered from one document by a selector set, one fragment per
/// matched element, in document order. Empty matches are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedText {
    pub doc_id: String,
    pub fragments: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Malformed {
        path: PathBuf,
        #[source]
        source: MalformedXml,
    },
    #[error("invalid selector `{selector}`: {message}")]
    InvalidSelector { selector: String, message: String },
    #[error("no .xml files found in {0}")]
    EmptyCorpus(PathBuf),
}

/// Parse a single XML file; the document id is the filename stem.
pub fn parse_document(path: &Path) -> Result<RawDocument, IngestError> {
    let content = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parsed = xml::parse_str(&content).map_err(|source| IngestError::Malformed {
        path: path.to_path_buf(),
        source,
    })?;
    let doc_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(RawDocument {
        doc_id,
        root: parsed.root,
        warnings: parsed.warnings,
    })
}

/// Parse every `.xml` file in a directory, sorted by filename so corpus
/// order does not depend on the platform's directory iteration order.
pub fn load_corpus(dir: &Path) -> Result<Vec<RawDocument>, IngestError> {
    let entries = fs::read_dir(dir).map_err(|source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "xml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(IngestError::EmptyCorpus(dir.to_path_buf()));
    }
    paths.iter().map(|p| parse_document(p)).collect()
}

/// One step of a selector path.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Step {
    /// Matches exactly one element with this name.
    Name(String),
    /// Matches zero or more intermediate elements.
    AnyDescendant,
}

/// A root-anchored element path such as `raweb/presentation` or
/// `raweb//keyword`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementSelector {
    steps: Vec<Step>,
    source: String,
}

impl ElementSelector {
    /// Parse a selector from its source form. Consecutive `//` separators
    /// collapse to one; the path must end with an element name.
    pub fn parse(source: &str) -> Result<Self, IngestError> {
        let invalid = |message: &str| IngestError::InvalidSelector {
            selector: source.to_string(),
            message: message.to_string(),
        };
        let trimmed = source.trim();
        if trimmed.is_empty() {
            return Err(invalid("selector is empty"));
        }
        let mut steps = Vec::new();
        let mut rest = trimmed.strip_prefix('/').unwrap_or(trimmed);
        if trimmed.starts_with("//") {
            steps.push(Step::AnyDescendant);
            rest = &trimmed[2..];
        }
        let mut expect_name = true;
        while !rest.is_empty() {
            if expect_name {
                let end = rest.find('/').unwrap_or(rest.len());
                let name = &rest[..end];
                if name.is_empty() {
                    return Err(invalid("empty element name"));
                }
                steps.push(Step::Name(name.to_string()));
                rest = &rest[end..];
                expect_name = false;
            } else if let Some(r) = rest.strip_prefix("//") {
                if !matches!(steps.last(), Some(Step::AnyDescendant)) {
                    steps.push(Step::AnyDescendant);
                }
                rest = r.trim_start_matches('/');
                expect_name = true;
            } else if let Some(r) = rest.strip_prefix('/') {
                rest = r;
                expect_name = true;
            } else {
                unreachable!("rest starts with `/` when not expecting a name");
            }
        }
        if expect_name {
            return Err(invalid("selector must end with an element name"));
        }
        Ok(ElementSelector {
            steps,
            source: trimmed.to_string(),
        })
    }

    /// The source form this selector was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Whether the root-to-element name path matches this selector.
    fn matches(&self, path: &[&str]) -> bool {
        fn rec(steps: &[Step], path: &[&str]) -> bool {
            match steps.first() {
                None => path.is_empty(),
                Some(Step::Name(name)) => {
                    path.first() == Some(&name.as_str()) && rec(&steps[1..], &path[1..])
                }
                Some(Step::AnyDescendant) => {
                    (0..=path.len()).any(|skip| rec(&steps[1..], &path[skip..]))
                }
            }
        }
        rec(&self.steps, path)
    }
}

/// Extract the text of every element matched by `selector`, outermost
/// matches only, in document order.
pub fn select_elements(doc: &RawDocument, selector: &ElementSelector) -> ExtractedText {
    let mut fragments = Vec::new();
    let mut path = Vec::new();
    collect_matches(&doc.root, selector, &mut path, &mut fragments);
    ExtractedText {
        doc_id: doc.doc_id.clone(),
        fragments,
    }
}

fn collect_matches<'a>(
    element: &'a Element,
    selector: &ElementSelector,
    path: &mut Vec<&'a str>,
    fragments: &mut Vec<String>,
) {
    path.push(&element.name);
    if selector.matches(path) {
        let text = element.normalized_text();
        if !text.is_empty() {
            fragments.push(text);
        }
        // Outermost match: inner text is already included, do not descend.
    } else {
        for child in element.child_elements() {
            collect_matches(child, selector, path, fragments);
        }
    }
    path.pop();
}

/// Apply every selector to every document and merge the fragments per
/// document, selectors in the given order. Documents with no matched text
/// are excluded; the retained count is the "number of projects" statistic.
pub fn extract_experiment_texts(
    corpus: &[RawDocument],
    selectors: &[ElementSelector],
) -> Vec<ExtractedText> {
    corpus
        .iter()
        .filter_map(|doc| {
            let mut fragments = Vec::new();
            for selector in selectors {
                fragments.extend(select_elements(doc, selector).fragments);
            }
            if fragments.is_empty() {
                None
            } else {
                Some(ExtractedText {
                    doc_id: doc.doc_id.clone(),
                    fragments,
                })
            }
        })
        .collect()
}
