//! Part-of-speech tagging backends.
//!
//! Two sources of tags are supported: a stream produced by an external
//! tagger in TreeTagger's `surface<TAB>pos<TAB>lemma` format, and a
//! self-contained fallback tagger driven by a bundled lexicon plus suffix
//! heuristics. The env var `TYPOCLUST_LEXICON` points the fallback tagger
//! at a replacement lexicon file.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{LexicalError, PosCategory, TaggedToken};

/// Anything that can turn a token stream into tagged tokens, one per input
/// token, order preserved.
pub trait Tagger {
    fn tag(&self, tokens: &[String]) -> Result<Vec<TaggedToken>, LexicalError>;
}

/// Tag tokens with the given backend.
pub fn tag_tokens(tokens: &[String], tagger: &dyn Tagger) -> Result<Vec<TaggedToken>, LexicalError> {
    tagger.tag(tokens)
}

const BUNDLED_LEXICON: &str = include_str!("../../assets/english_lexicon.tsv");
pub const LEXICON_ENV_VAR: &str = "TYPOCLUST_LEXICON";

/// Lexicon lookup plus suffix rules. Lemmas come from the lexicon when the
/// surface (or its `-s` singular) is listed, otherwise the lowercased
/// surface is used.
pub struct FallbackTagger {
    lexicon: HashMap<String, (PosCategory, String)>,
}

impl FallbackTagger {
    /// Load the bundled English lexicon, or the file named by
    /// `TYPOCLUST_LEXICON` when that is set.
    pub fn bundled() -> Result<Self, LexicalError> {
        match std::env::var_os(LEXICON_ENV_VAR) {
            Some(path) => Self::from_lexicon_file(Path::new(&path)),
            None => Ok(Self::from_lexicon_str(BUNDLED_LEXICON)),
        }
    }

    pub fn from_lexicon_file(path: &Path) -> Result<Self, LexicalError> {
        Ok(Self::from_lexicon_str(&fs::read_to_string(path)?))
    }

    /// One entry per line, `surface<TAB>pos<TAB>lemma`; `#` comments and
    /// blank lines are skipped. Later entries win.
    pub fn from_lexicon_str(content: &str) -> Self {
        let mut lexicon = HashMap::new();
        for line in content.lines() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            if let (Some(surface), Some(pos), Some(lemma)) =
                (fields.next(), fields.next(), fields.next())
            {
                lexicon.insert(
                    surface.to_lowercase(),
                    (PosCategory::from_tag(pos), lemma.to_lowercase()),
                );
            }
        }
        FallbackTagger { lexicon }
    }

    pub fn len(&self) -> usize {
        self.lexicon.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lexicon.is_empty()
    }

    fn tag_one(&self, surface: &str) -> TaggedToken {
        let folded = surface.to_lowercase();
        if let Some((pos, lemma)) = self.lexicon.get(&folded) {
            return TaggedToken::new(surface, *pos, lemma);
        }
        // Plural: strip -s when the singular is listed.
        if let Some(singular) = folded.strip_suffix('s') {
            if let Some((pos, lemma)) = self.lexicon.get(singular) {
                return TaggedToken::new(surface, *pos, lemma);
            }
        }
        if let Some(pos) = suffix_category(&folded) {
            return TaggedToken::new(surface, pos, &folded);
        }
        TaggedToken::new(surface, PosCategory::Other, &folded)
    }
}

impl Tagger for FallbackTagger {
    fn tag(&self, tokens: &[String]) -> Result<Vec<TaggedToken>, LexicalError> {
        Ok(tokens.iter().map(|t| self.tag_one(t)).collect())
    }
}

fn suffix_category(token: &str) -> Option<PosCategory> {
    const NOUN: &[&str] = &["tion", "ment", "ity", "ness", "er", "ics"];
    const VERB: &[&str] = &["ize", "ate", "ify"];
    const ADJ: &[&str] = &["ous", "ive", "al", "able"];
    // A suffix only counts when something precedes it.
    let hit = |suffixes: &[&str]| {
        suffixes
            .iter()
            .any(|s| token.len() > s.len() && token.ends_with(s))
    };
    if hit(NOUN) {
        Some(PosCategory::Noun)
    } else if hit(VERB) {
        Some(PosCategory::Verb)
    } else if hit(ADJ) {
        Some(PosCategory::Adj)
    } else {
        None
    }
}

/// A pre-tagged token stream read from an external tagger's output.
/// Tagging with it checks only that the stream length matches the token
/// count; the stream's own surfaces and lemmas are authoritative.
pub struct PretaggedStream {
    tokens: Vec<TaggedToken>,
}

impl PretaggedStream {
    /// Parse TreeTagger output: one token per line, exactly three
    /// TAB-separated columns `surface<TAB>pos<TAB>lemma`. The lemma
    /// `<unknown>` falls back to the lowercased surface.
    pub fn from_tsv(content: &str) -> Result<Self, LexicalError> {
        let mut tokens = Vec::new();
        for (idx, line) in content.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [surface, pos, lemma] = fields.as_slice() else {
                return Err(LexicalError::BadStreamLine {
                    line: idx + 1,
                    content: line.to_string(),
                });
            };
            let lemma = if *lemma == "<unknown>" {
                surface.to_lowercase()
            } else {
                lemma.to_lowercase()
            };
            tokens.push(TaggedToken::new(
                surface.to_string(),
                PosCategory::from_tag(pos),
                &lemma,
            ));
        }
        Ok(PretaggedStream { tokens })
    }

    pub fn from_file(path: &Path) -> Result<Self, LexicalError> {
        Self::from_tsv(&fs::read_to_string(path)?)
    }

    pub fn into_tokens(self) -> Vec<TaggedToken> {
        self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl Tagger for PretaggedStream {
    fn tag(&self, tokens: &[String]) -> Result<Vec<TaggedToken>, LexicalError> {
        if self.tokens.len() != tokens.len() {
            return Err(LexicalError::TaggerStreamMismatch {
                stream_len: self.tokens.len(),
                token_len: tokens.len(),
            });
        }
        Ok(self.tokens.clone())
    }
}

/// Serialize tagged tokens back to the TreeTagger TSV form, coarse tags.
pub fn to_tsv(tokens: &[TaggedToken]) -> String {
    let mut out = String::new();
    for token in tokens {
        let tag = match token.pos {
            PosCategory::Noun => "NOUN",
            PosCategory::Verb => "VERB",
            PosCategory::Adj => "ADJ",
            PosCategory::Other => "OTHER",
        };
        out.push_str(&token.surface);
        out.push('\t');
        out.push_str(tag);
        out.push('\t');
        out.push_str(&token.lemma);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn lexicon_lookup_with_plural_stripping() {
        let tagger = FallbackTagger::from_lexicon_str("algorithm\tNN\talgorithm\n");
        let tagged = tagger.tag(&toks(&["algorithms"])).unwrap();
        assert_eq!(
            tagged,
            vec![TaggedToken::new("algorithms", PosCategory::Noun, "algorithm")]
        );
    }

    #[test]
    fn unknown_token_is_other() {
        let tagger = FallbackTagger::from_lexicon_str("");
        let tagged = tagger.tag(&toks(&["zzqx"])).unwrap();
        assert_eq!(tagged[0].pos, PosCategory::Other);
        assert_eq!(tagged[0].lemma, "zzqx");
    }

    #[test]
    fn suffix_rules() {
        let tagger = FallbackTagger::from_lexicon_str("");
        let cases = [
            ("optimization", PosCategory::Noun),
            ("experiment", PosCategory::Noun),
            ("scalability", PosCategory::Noun),
            ("robustness", PosCategory::Noun),
            ("router", PosCategory::Noun),
            ("statistics", PosCategory::Noun),
            ("generalize", PosCategory::Verb),
            ("estimate", PosCategory::Verb),
            ("classify", PosCategory::Verb),
            ("heterogeneous", PosCategory::Adj),
            ("adaptive", PosCategory::Adj),
            ("structural", PosCategory::Adj),
            ("scalable", PosCategory::Adj),
            // Suffix must not swallow the whole token.
            ("er", PosCategory::Other),
            ("al", PosCategory::Other),
        ];
        for (word, expected) in cases {
            let tagged = tagger.tag(&toks(&[word])).unwrap();
            assert_eq!(tagged[0].pos, expected, "{word}");
        }
    }

    #[test]
    fn penn_tags_collapse_to_coarse() {
        let stream = PretaggedStream::from_tsv("clustering\tNN\tclustering\n").unwrap();
        let tagged = stream.tag(&toks(&["clustering"])).unwrap();
        assert_eq!(
            tagged,
            vec![TaggedToken::new("clustering", PosCategory::Noun, "clustering")]
        );
        for (tag, expected) in [
            ("NNS", PosCategory::Noun),
            ("NP", PosCategory::Noun),
            ("VBZ", PosCategory::Verb),
            ("VVN", PosCategory::Verb),
            ("JJR", PosCategory::Adj),
            ("DT", PosCategory::Other),
            ("CC", PosCategory::Other),
        ] {
            assert_eq!(PosCategory::from_tag(tag), expected, "{tag}");
        }
    }

    #[test]
    fn unknown_lemma_falls_back_to_surface() {
        let stream = PretaggedStream::from_tsv("Galois\tNP\t<unknown>\n").unwrap();
        assert_eq!(stream.into_tokens()[0].lemma, "galois");
    }

    #[test]
    fn stream_length_mismatch_is_an_error() {
        let stream = PretaggedStream::from_tsv("one\tNN\tone\n").unwrap();
        let err = stream.tag(&toks(&["one", "two"])).unwrap_err();
        assert!(matches!(
            err,
            LexicalError::TaggerStreamMismatch {
                stream_len: 1,
                token_len: 2
            }
        ));
    }

    #[test]
    fn malformed_stream_line_is_reported_with_line_number() {
        let err = PretaggedStream::from_tsv("fine\tNN\tfine\nbroken line\n").unwrap_err();
        assert!(matches!(err, LexicalError::BadStreamLine { line: 2, .. }));
    }

    #[test]
    fn tagging_preserves_length_and_order() {
        let tagger = FallbackTagger::from_lexicon_str("graph\tNN\tgraph\n");
        let input = toks(&["graph", "zzqx", "graphs"]);
        let tagged = tagger.tag(&input).unwrap();
        assert_eq!(tagged.len(), input.len());
        let surfaces: Vec<_> = tagged.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["graph", "zzqx", "graphs"]);
    }

    #[test]
    fn tsv_round_trip() {
        let tagger = FallbackTagger::from_lexicon_str("graph\tNN\tgraph\n");
        let tagged = tagger.tag(&toks(&["graph", "zzqx"])).unwrap();
        let tsv = to_tsv(&tagged);
        let back = PretaggedStream::from_tsv(&tsv).unwrap().into_tokens();
        assert_eq!(back, tagged);
    }

    #[test]
    fn bundled_lexicon_loads() {
        let tagger = FallbackTagger::from_lexicon_str(BUNDLED_LEXICON);
        assert!(tagger.len() > 100);
        let tagged = tagger.tag(&toks(&["learning"])).unwrap();
        assert_eq!(tagged[0].pos, PosCategory::Noun);
    }
}
