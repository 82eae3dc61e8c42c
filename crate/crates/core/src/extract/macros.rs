//! Zero-argument author macros: collection from the preamble and expansion.

use std::collections::BTreeMap;

use thiserror::Error;

use super::scan::{balanced_group, letters_len, skip_ws, strip_comments};

/// Expansion gives up after this many rewriting passes.
pub const MAX_EXPANSION_PASSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MacroError {
    #[error("macro expansion did not reach a fixpoint after {0} passes (cyclic definition?)")]
    PassLimitExceeded(usize),
}

/// Map from control word (`\R`) to replacement text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MacroTable {
    entries: BTreeMap<String, String>,
    skipped_parameterized: usize,
}

impl MacroTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Collect `\newcommand`, `\renewcommand`, `\providecommand` and `\def`
    /// definitions without parameters. Anything unparseable is ignored.
    pub fn from_preamble(preamble: &str) -> Self {
        let text = strip_comments(preamble);
        let mut table = MacroTable::new();
        let mut at = 0;
        while let Some(off) = text[at..].find('\\') {
            let start = at + off;
            let word_len = letters_len(&text, start + 1);
            if word_len == 0 {
                at = start + 2;
                continue;
            }
            let word = &text[start + 1..start + 1 + word_len];
            let after = start + 1 + word_len;
            at = match word {
                "newcommand" | "renewcommand" | "providecommand" => {
                    table.parse_newcommand(&text, after, word == "providecommand")
                }
                "def" => table.parse_def(&text, after),
                _ => after,
            };
        }
        table
    }

    fn parse_newcommand(&mut self, text: &str, mut at: usize, provide: bool) -> usize {
        if text[at..].starts_with('*') {
            at += 1;
        }
        at = skip_ws(text, at);
        let (name, mut at) = match read_macro_name(text, at) {
            Some(found) => found,
            None => return at,
        };
        at = skip_ws(text, at);
        if text[at..].starts_with('[') {
            self.skipped_parameterized += 1;
            return at;
        }
        let Some((inner, end)) = balanced_group(text, at, b'{', b'}') else {
            return at;
        };
        if !(provide && self.entries.contains_key(&name)) {
            self.insert(name, text[inner].to_string());
        }
        end
    }

    fn parse_def(&mut self, text: &str, at: usize) -> usize {
        let name_len = letters_len(text, at + 1);
        if !text[at..].starts_with('\\') || name_len == 0 {
            return at;
        }
        let name = text[at..at + 1 + name_len].to_string();
        let mut at = at + 1 + name_len;
        let Some(brace) = text[at..].find('{') else {
            return at;
        };
        if !text[at..at + brace].trim().is_empty() {
            // parameter text such as `#1#2`
            self.skipped_parameterized += 1;
            return at + brace;
        }
        at += brace;
        let Some((inner, end)) = balanced_group(text, at, b'{', b'}') else {
            return at;
        };
        self.insert(name, text[inner].to_string());
        end
    }

    /// Add an entry. Keys must be control words; a key mapping to itself
    /// is dropped.
    pub fn insert(&mut self, key: String, replacement: String) {
        let valid_key = key.len() > 1
            && key.starts_with('\\')
            && key[1..].bytes().all(|b| b.is_ascii_alphabetic());
        if !valid_key || replacement.trim() == key {
            return;
        }
        self.entries.insert(key, replacement);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn skipped_parameterized(&self) -> usize {
        self.skipped_parameterized
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Replace every table key that ends at a non-letter boundary, repeating
    /// until nothing changes.
    pub fn expand(&self, body: &str) -> Result<String, MacroError> {
        if self.entries.is_empty() {
            return Ok(body.to_string());
        }
        let mut text = body.to_string();
        for pass in 0..=MAX_EXPANSION_PASSES {
            let next = self.expand_once(&text);
            if next == text {
                return Ok(text);
            }
            if pass == MAX_EXPANSION_PASSES {
                break;
            }
            text = next;
        }
        Err(MacroError::PassLimitExceeded(MAX_EXPANSION_PASSES))
    }

    fn expand_once(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut at = 0;
        while let Some(off) = text[at..].find('\\') {
            let start = at + off;
            out.push_str(&text[at..start]);
            let word_len = letters_len(text, start + 1);
            if word_len == 0 {
                // control symbol such as `\\` or `\{`: copy both bytes
                let next = text[start + 1..].chars().next().map_or(0, char::len_utf8);
                out.push_str(&text[start..start + 1 + next]);
                at = start + 1 + next;
                continue;
            }
            let end = start + 1 + word_len;
            let word = &text[start..end];
            match self.entries.get(word) {
                Some(replacement) => out.push_str(replacement),
                None => out.push_str(word),
            }
            at = end;
        }
        out.push_str(&text[at..]);
        out
    }
}

/// Either `{\name}` or `\name`.
fn read_macro_name(text: &str, at: usize) -> Option<(String, usize)> {
    if text[at..].starts_with('{') {
        let (inner, end) = balanced_group(text, at, b'{', b'}')?;
        let name = text[inner].trim();
        Some((name.to_string(), end))
    } else if text[at..].starts_with('\\') {
        let len = letters_len(text, at + 1);
        (len > 0).then(|| (text[at..at + 1 + len].to_string(), at + 1 + len))
    } else {
        None
    }
}

/// Convenience wrapper over [`MacroTable::from_preamble`].
pub fn build_macro_table(preamble: &str) -> MacroTable {
    MacroTable::from_preamble(preamble)
}

/// Convenience wrapper over [`MacroTable::expand`].
pub fn expand_macros(body: &str, table: &MacroTable) -> Result<String, MacroError> {
    table.expand(body)
}
