//! Minimal non-validating XML parser.
//!
//! Parses a well-formed document into an element tree. The five built-in
//! entities and numeric character references are resolved; any other entity
//! reference is replaced by its bare name and reported as a warning, so a
//! corpus written against an external DTD still yields usable text.

use std::fmt;

/// A node in the parsed tree: an element or a run of character data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    Text(String),
}

/// An XML element: name, attributes in source order, ordered children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub name: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<Node>,
}

impl Element {
    /// Concatenated character data of this element and all descendants,
    /// in document order, with whitespace runs collapsed to single spaces
    /// and the ends trimmed.
    pub fn normalized_text(&self) -> String {
        let mut raw = String::new();
        self.collect_text(&mut raw);
        let mut out = String::with_capacity(raw.len());
        for piece in raw.split_whitespace() {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(piece);
        }
        out
    }

    fn collect_text(&self, out: &mut String) {
        for child in &self.children {
            match child {
                Node::Text(t) => out.push_str(t),
                Node::Element(e) => e.collect_text(out),
            }
        }
    }

    /// Child elements, skipping text nodes.
    pub fn child_elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }
}

/// Parse failure with 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed XML at line {line}, column {column}: {message}")]
pub struct MalformedXml {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Result of a successful parse: the root element plus any warnings
/// recorded for unresolvable entity references.
#[derive(Debug, Clone)]
pub struct ParsedXml {
    pub root: Element,
    pub warnings: Vec<String>,
}

/// Parse a complete XML document from a string.
pub fn parse_str(input: &str) -> Result<ParsedXml, MalformedXml> {
    let mut parser = Parser::new(input);
    parser.parse_document()
}

struct Parser<'a> {
    input: &'a str,
    bytes: &'a [u8],
    pos: usize,
    warnings: Vec<String>,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Self {
        let input = input.strip_prefix('\u{feff}').unwrap_or(input);
        Parser {
            input,
            bytes: input.as_bytes(),
            pos: 0,
            warnings: Vec::new(),
        }
    }

    fn parse_document(&mut self) -> Result<ParsedXml, MalformedXml> {
        self.skip_misc()?;
        let root = match self.peek() {
            Some(b'<') => self.parse_element()?,
            _ => return Err(self.error_here("expected root element")),
        };
        self.skip_misc()?;
        if self.pos < self.bytes.len() {
            return Err(self.error_here("content after root element"));
        }
        Ok(ParsedXml {
            root,
            warnings: std::mem::take(&mut self.warnings),
        })
    }

    /// Whitespace, comments, processing instructions and DOCTYPE between
    /// markup at the document level.
    fn skip_misc(&mut self) -> Result<(), MalformedXml> {
        loop {
            while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
                self.pos += 1;
            }
            if self.starts_with("<?") {
                self.skip_until("?>", "unterminated processing instruction")?;
            } else if self.starts_with("<!--") {
                self.skip_until("-->", "unterminated comment")?;
            } else if self.starts_with("<!DOCTYPE") {
                self.skip_doctype()?;
            } else {
                return Ok(());
            }
        }
    }

    fn skip_doctype(&mut self) -> Result<(), MalformedXml> {
        let start = self.pos;
        self.pos += "<!DOCTYPE".len();
        let mut bracket_depth = 0usize;
        while let Some(c) = self.peek() {
            self.pos += 1;
            match c {
                b'[' => bracket_depth += 1,
                b']' => bracket_depth = bracket_depth.saturating_sub(1),
                b'>' if bracket_depth == 0 => return Ok(()),
                _ => {}
            }
        }
        Err(self.error_at(start, "unterminated DOCTYPE declaration"))
    }

    fn parse_element(&mut self) -> Result<Element, MalformedXml> {
        let open_pos = self.pos;
        self.expect(b'<')?;
        let name = self.parse_name()?;
        let mut attributes = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'>') => {
                    self.pos += 1;
                    break;
                }
                Some(b'/') => {
                    self.pos += 1;
                    self.expect(b'>')?;
                    return Ok(Element {
                        name,
                        attributes,
                        children: Vec::new(),
                    });
                }
                Some(_) => {
                    let (attr_name, value) = self.parse_attribute()?;
                    if attributes.iter().any(|(n, _)| *n == attr_name) {
                        return Err(
                            self.error_here(&format!("duplicate attribute `{attr_name}`"))
                        );
                    }
                    attributes.push((attr_name, value));
                }
                None => return Err(self.error_at(open_pos, "unterminated start tag")),
            }
        }

        let mut children = Vec::new();
        loop {
            if self.pos >= self.bytes.len() {
                return Err(self.error_at(open_pos, &format!("unclosed element `{name}`")));
            }
            if self.starts_with("</") {
                self.pos += 2;
                let close_name = self.parse_name()?;
                if close_name != name {
                    return Err(self.error_at(
                        self.pos - close_name.len(),
                        &format!("mismatched closing tag `{close_name}`, expected `{name}`"),
                    ));
                }
                self.skip_ws();
                self.expect(b'>')?;
                return Ok(Element {
                    name,
                    attributes,
                    children,
                });
            } else if self.starts_with("<!--") {
                self.skip_until("-->", "unterminated comment")?;
            } else if self.starts_with("<![CDATA[") {
                let text = self.parse_cdata()?;
                push_text(&mut children, &text);
            } else if self.starts_with("<?") {
                self.skip_until("?>", "unterminated processing instruction")?;
            } else if self.starts_with("<") {
                children.push(Node::Element(self.parse_element()?));
            } else {
                let text = self.parse_text()?;
                push_text(&mut children, &text);
            }
        }
    }

    fn parse_attribute(&mut self) -> Result<(String, String), MalformedXml> {
        let name = self.parse_name()?;
        self.skip_ws();
        self.expect(b'=')?;
        self.skip_ws();
        let quote = match self.peek() {
            Some(q @ (b'"' | b'\'')) => q,
            _ => return Err(self.error_here("expected quoted attribute value")),
        };
        self.pos += 1;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == quote {
                let raw = &self.input[start..self.pos];
                if raw.contains('<') {
                    return Err(self.error_at(start, "`<` in attribute value"));
                }
                self.pos += 1;
                let value = self.decode_entities(raw, start)?;
                return Ok((name, value));
            }
            self.pos += 1;
        }
        Err(self.error_at(start, "unterminated attribute value"))
    }

    fn parse_text(&mut self) -> Result<String, MalformedXml> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == b'<' {
                break;
            }
            self.pos += 1;
        }
        self.decode_entities(&self.input[start..self.pos], start)
    }

    fn parse_cdata(&mut self) -> Result<String, MalformedXml> {
        let start = self.pos;
        self.pos += "<![CDATA[".len();
        let data_start = self.pos;
        match self.input[self.pos..].find("]]>") {
            Some(offset) => {
                self.pos += offset + 3;
                Ok(self.input[data_start..data_start + offset].to_string())
            }
            None => Err(self.error_at(start, "unterminated CDATA section")),
        }
    }

    /// Resolve `&amp; &lt; &gt; &quot; &apos;` and numeric character
    /// references; any other `&name;` becomes `name` plus a warning.
    fn decode_entities(&mut self, raw: &str, offset: usize) -> Result<String, MalformedXml> {
        if !raw.contains('&') {
            return Ok(raw.to_string());
        }
        let mut out = String::with_capacity(raw.len());
        let mut rest = raw;
        let mut consumed = 0usize;
        while let Some(amp) = rest.find('&') {
            out.push_str(&rest[..amp]);
            let after = &rest[amp + 1..];
            let semi = after.find(';').ok_or_else(|| {
                self.error_at(offset + consumed + amp, "`&` not part of an entity reference")
            })?;
            let entity = &after[..semi];
            match entity {
                "amp" => out.push('&'),
                "lt" => out.push('<'),
                "gt" => out.push('>'),
                "quot" => out.push('"'),
                "apos" => out.push('\''),
                _ if entity.starts_with('#') => {
                    let code = if let Some(hex) = entity.strip_prefix("#x") {
                        u32::from_str_radix(hex, 16).ok()
                    } else {
                        entity[1..].parse::<u32>().ok()
                    };
                    match code.and_then(char::from_u32) {
                        Some(c) => out.push(c),
                        None => {
                            return Err(self.error_at(
                                offset + consumed + amp,
                                &format!("invalid character reference `&{entity};`"),
                            ))
                        }
                    }
                }
                _ => {
                    if entity.is_empty() || !entity.chars().all(is_name_char) {
                        return Err(self.error_at(
                            offset + consumed + amp,
                            &format!("invalid entity reference `&{entity};`"),
                        ));
                    }
                    self.warnings
                        .push(format!("unknown entity `&{entity};` replaced by `{entity}`"));
                    out.push_str(entity);
                }
            }
            let advance = amp + 1 + semi + 1;
            consumed += advance;
            rest = &rest[advance..];
        }
        out.push_str(rest);
        Ok(out)
    }

    fn parse_name(&mut self) -> Result<String, MalformedXml> {
        let start = self.pos;
        let mut chars = self.input[self.pos..].chars();
        match chars.next() {
            Some(c) if is_name_start(c) => self.pos += c.len_utf8(),
            _ => return Err(self.error_here("expected a name")),
        }
        for c in chars {
            if is_name_char(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        Ok(self.input[start..self.pos].to_string())
    }

    fn skip_until(&mut self, terminator: &str, message: &str) -> Result<(), MalformedXml> {
        let start = self.pos;
        match self.input[self.pos..].find(terminator) {
            Some(offset) => {
                self.pos += offset + terminator.len();
                Ok(())
            }
            None => Err(self.error_at(start, message)),
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, byte: u8) -> Result<(), MalformedXml> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error_here(&format!("expected `{}`", byte as char)))
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn starts_with(&self, prefix: &str) -> bool {
        self.input[self.pos..].starts_with(prefix)
    }

    fn error_here(&self, message: &str) -> MalformedXml {
        self.error_at(self.pos, message)
    }

    fn error_at(&self, pos: usize, message: &str) -> MalformedXml {
        let (line, column) = line_column(self.input, pos.min(self.input.len()));
        MalformedXml {
            line,
            column,
            message: message.to_string(),
        }
    }
}

fn push_text(children: &mut Vec<Node>, text: &str) {
    if text.is_empty() {
        return;
    }
    if let Some(Node::Text(prev)) = children.last_mut() {
        prev.push_str(text);
    } else {
        children.push(Node::Text(text.to_string()));
    }
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == ':'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | ':' | '-' | '.')
}

fn line_column(input: &str, pos: usize) -> (usize, usize) {
    let mut line = 1;
    let mut column = 1;
    for c in input[..pos].chars() {
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    (line, column)
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}", self.name)?;
        for (k, v) in &self.attributes {
            write!(f, " {k}={v:?}")?;
        }
        write!(f, ">")
    }
}
