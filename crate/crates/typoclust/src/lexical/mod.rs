//! Lexical processing: tokenization, part-of-speech tagging, filtering by
//! word category, stopword removal, and conference-name normalization.

pub mod tagger;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use tagger::{FallbackTagger, PretaggedStream, Tagger};

/// Coarse word categories. Penn-style tags from external taggers collapse
/// onto these: `NN*` to Noun, `VB*` to Verb, `JJ*` to Adj, anything else
/// to Other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PosCategory {
    Noun,
    Verb,
    Adj,
    Other,
}

impl PosCategory {
    /// Map a raw tag (Penn or coarse) onto a category.
    pub fn from_tag(tag: &str) -> Self {
        match tag {
            "NOUN" => PosCategory::Noun,
            "VERB" => PosCategory::Verb,
            "ADJ" => PosCategory::Adj,
            t if t.starts_with("NN") || t.starts_with("NP") => PosCategory::Noun,
            t if t.starts_with("VB") || t.starts_with("VV") || t.starts_with("VH") => {
                PosCategory::Verb
            }
            t if t.starts_with("JJ") => PosCategory::Adj,
            _ => PosCategory::Other,
        }
    }
}

/// A token with its category and lowercase lemma.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub surface: String,
    pub pos: PosCategory,
    pub lemma: String,
}

impl TaggedToken {
    pub fn new(surface: impl Into<String>, pos: PosCategory, lemma: &str) -> Self {
        TaggedToken {
            surface: surface.into(),
            pos,
            lemma: lemma.to_lowercase(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LexicalError {
    #[error("tagged stream has {stream_len} tokens but the text has {token_len}")]
    TaggerStreamMismatch { stream_len: usize, token_len: usize },
    #[error("line {line}: expected `surface<TAB>pos<TAB>lemma`, got `{content}`")]
    BadStreamLine { line: usize, content: String },
    #[error("reading lexical resource: {0}")]
    Io(#[from] std::io::Error),
    #[error("normalization map: {0}")]
    BadNormalizationMap(String),
}

/// Split text into word tokens. Splits on whitespace and punctuation but
/// keeps hyphens and apostrophes that sit inside a token, so forms like
/// `k-means` and `POPL'03` survive. Case is preserved; pure punctuation
/// is dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '-' || c == '\''))
        .map(|piece| piece.trim_matches(|c: char| c == '-' || c == '\''))
        .filter(|piece| !piece.is_empty())
        .map(str::to_string)
        .collect()
}

/// Which tokens to keep after tagging.
#[derive(Debug, Clone)]
pub struct LexicalFilterSpec {
    /// Categories to keep; ignored when `use_tagger` is false.
    pub kept_pos: BTreeSet<PosCategory>,
    /// Lowercase lemmas to drop regardless of category.
    pub stopwords: HashSet<String>,
    /// When false every non-stopword token is kept (the conference-name
    /// experiments, where acronyms are unknown to any tagger).
    pub use_tagger: bool,
    pub normalization_map: Option<NormalizationMap>,
}

impl LexicalFilterSpec {
    pub fn keeping(pos: &[PosCategory]) -> Self {
        LexicalFilterSpec {
            kept_pos: pos.iter().copied().collect(),
            stopwords: HashSet::new(),
            use_tagger: true,
            normalization_map: None,
        }
    }

    pub fn untagged() -> Self {
        LexicalFilterSpec {
            kept_pos: BTreeSet::new(),
            stopwords: HashSet::new(),
            use_tagger: false,
            normalization_map: None,
        }
    }

    pub fn with_stopwords(mut self, stopwords: HashSet<String>) -> Self {
        self.stopwords = stopwords;
        self
    }
}

/// Keep tokens by category and stopword status; returns their lemmas.
/// With `use_tagger` false all non-stopword tokens are kept.
pub fn filter_tokens(tokens: &[TaggedToken], spec: &LexicalFilterSpec) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !spec.use_tagger || spec.kept_pos.contains(&t.pos))
        .filter(|t| !spec.stopwords.contains(&t.lemma))
        .map(|t| t.lemma.clone())
        .collect()
}

/// Tag tokens with no tagger at all: category Other, lemma = lowercased
/// surface. Used when a filter runs with `use_tagger` false.
pub fn identity_tags(tokens: &[String]) -> Vec<TaggedToken> {
    tokens
        .iter()
        .map(|t| TaggedToken::new(t.clone(), PosCategory::Other, t))
        .collect()
}

/// Parse a stopword file: one lowercase lemma per line, `#` comments.
pub fn parse_stopwords(content: &str) -> HashSet<String> {
    content
        .lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(|line| line.to_lowercase())
        .collect()
}

/// The stopword list bundled with the toolkit, seeded with the boilerplate
/// words of conference titles.
pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(include_str!("../../assets/stopwords.txt"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NormEntry {
    canonical: String,
    #[serde(default)]
    patterns: Vec<String>,
}

/// Canonical conference names and the surface patterns that map to them.
#[derive(Debug, Clone, Default)]
pub struct NormalizationMap {
    /// Case-folded pattern (or canonical name) to canonical name.
    lookup: HashMap<String, String>,
}

impl NormalizationMap {
    pub fn empty() -> Self {
        NormalizationMap::default()
    }

    /// Parse the JSON form:
    /// `[{"canonical":"popl","patterns":["popl","principles of programming languages"]}]`.
    pub fn from_json(content: &str) -> Result<Self, LexicalError> {
        let entries: Vec<NormEntry> = serde_json::from_str(content)
            .map_err(|e| LexicalError::BadNormalizationMap(e.to_string()))?;
        Self::from_entries(entries)
    }

    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, &'a [&'a str])>,
    ) -> Result<Self, LexicalError> {
        Self::from_entries(
            pairs
                .into_iter()
                .map(|(canonical, patterns)| NormEntry {
                    canonical: canonical.to_string(),
                    patterns: patterns.iter().map(|p| p.to_string()).collect(),
                })
                .collect(),
        )
    }

    fn from_entries(entries: Vec<NormEntry>) -> Result<Self, LexicalError> {
        let mut lookup = HashMap::new();
        let mut canonicals = HashSet::new();
        for entry in &entries {
            let canonical = entry.canonical.to_lowercase();
            if canonical.is_empty() {
                return Err(LexicalError::BadNormalizationMap(
                    "empty canonical name".to_string(),
                ));
            }
            if !canonicals.insert(canonical.clone()) {
                return Err(LexicalError::BadNormalizationMap(format!(
                    "duplicate canonical name `{canonical}`"
                )));
            }
            lookup.insert(canonical.clone(), canonical.clone());
            for pattern in &entry.patterns {
                if pattern.is_empty() {
                    return Err(LexicalError::BadNormalizationMap(format!(
                        "empty pattern under `{canonical}`"
                    )));
                }
                lookup.insert(pattern.to_lowercase(), canonical.clone());
            }
        }
        Ok(NormalizationMap { lookup })
    }

    fn canonical_for(&self, form: &str) -> Option<&str> {
        self.lookup.get(form).map(String::as_str)
    }
}

/// Canonicalize conference-name forms: case-fold, strip a trailing 2- or
/// 4-digit year (optionally preceded by an apostrophe), then replace by the
/// mapped canonical name when the stripped form matches. A bare year token
/// that directly follows a word is the spaced variant of the same suffix
/// (`POPL 2003`) and is dropped. Idempotent.
pub fn normalize_conference_names(tokens: &[String], map: &NormalizationMap) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    for token in tokens {
        let folded = token.to_lowercase();
        if is_year(&folded) {
            match out.last() {
                Some(prev) if !is_year(prev) => continue,
                _ => {
                    out.push(folded);
                    continue;
                }
            }
        }
        let stripped = strip_year_suffix(&folded);
        let canonical = map.canonical_for(stripped).unwrap_or(stripped);
        out.push(canonical.to_string());
    }
    out
}

fn is_year(token: &str) -> bool {
    (token.len() == 2 || token.len() == 4) && token.bytes().all(|b| b.is_ascii_digit())
}

/// `popl'03` -> `popl`, `popl03` -> `popl`, `ecml2003` -> `ecml`; a token
/// that is nothing but a year is left alone.
fn strip_year_suffix(token: &str) -> &str {
    for digits in [4usize, 2] {
        if token.len() > digits {
            let (stem, tail) = token.split_at(token.len() - digits);
            if tail.bytes().all(|b| b.is_ascii_digit()) {
                let stem = stem.strip_suffix('\'').unwrap_or(stem);
                if !stem.is_empty() {
                    return stem;
                }
            }
        }
    }
    token
}
