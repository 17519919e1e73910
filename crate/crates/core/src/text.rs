//! Deterministic tokenization, detokenization and first-sentence splitting.
//!
//! Tokens are maximal alphanumeric runs (allowing `'`, `’`, `-` and `.`
//! between two alphanumerics, and `,` between two digits); every other
//! non-whitespace character is a token of its own. Detokenization joins
//! tokens with single spaces except around attaching punctuation, so that
//! `detokenize(tokenize(s))` equals `s` once whitespace is ignored.

const CLOSING: &[&str] = &[".", ",", ";", ":", "!", "?", ")", "]", "}", "%", "…", "”", "’"];
const OPENING: &[&str] = &["(", "[", "{", "$", "#", "“", "‘"];

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '’' | '-' | '.')
}

/// Splits text into word and punctuation tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if !c.is_alphanumeric() {
            tokens.push(c.to_string());
            i += 1;
            continue;
        }
        let start = i;
        i += 1;
        while i < chars.len() {
            let c = chars[i];
            if c.is_alphanumeric() {
                i += 1;
                continue;
            }
            let next_alnum = chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
            let prev = chars[i - 1];
            let joins = (is_joiner(c) && next_alnum)
                || (c == ',' && prev.is_ascii_digit() && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit()));
            if joins {
                i += 2;
            } else {
                break;
            }
        }
        tokens.push(chars[start..i].iter().collect());
    }
    tokens
}

/// Joins tokens back into surface text.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut open_double = false;
    let mut glue_next = true;
    for tok in tokens {
        let tok = tok.as_ref();
        let (space_before, glue_after) = if tok == "\"" {
            open_double = !open_double;
            if open_double {
                (true, true)
            } else {
                (false, false)
            }
        } else if CLOSING.contains(&tok) {
            (false, false)
        } else if OPENING.contains(&tok) {
            (true, true)
        } else {
            (true, false)
        };
        if !out.is_empty() && space_before && !glue_next {
            out.push(' ');
        }
        out.push_str(tok);
        glue_next = glue_after;
    }
    out
}

/// Text with all whitespace removed; the equivalence used by the
/// tokenize/detokenize round-trip.
pub fn strip_whitespace(text: &str) -> String {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Collapses internal whitespace runs to one space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '”' | '’' | ')' | ']')
}

fn opens_sentence(c: char) -> bool {
    c.is_uppercase() || matches!(c, '"' | '\'' | '“' | '‘' | '(')
}

/// Returns the first sentence of a paragraph.
///
/// A sentence ends at `.`, `!` or `?` (plus any closing quotes/brackets)
/// when followed by whitespace and then an uppercase letter or an opening
/// quote. Paragraphs without such a boundary are returned whole.
pub fn first_sentence(paragraph: &str) -> &str {
    let trimmed = paragraph.trim();
    let chars: Vec<(usize, char)> = trimmed.char_indices().collect();
    let mut k = 0;
    while k < chars.len() {
        let (_, c) = chars[k];
        if matches!(c, '.' | '!' | '?') {
            let mut end = k + 1;
            while end < chars.len() && (is_closer(chars[end].1) || matches!(chars[end].1, '.' | '!' | '?')) {
                end += 1;
            }
            let mut ws = end;
            while ws < chars.len() && chars[ws].1.is_whitespace() {
                ws += 1;
            }
            if ws > end && ws < chars.len() && opens_sentence(chars[ws].1) {
                let byte_end = chars.get(end).map_or(trimmed.len(), |(b, _)| *b);
                return &trimmed[..byte_end];
            }
            k = end;
        } else {
            k += 1;
        }
    }
    trimmed
}
