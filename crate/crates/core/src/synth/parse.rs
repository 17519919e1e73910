//! Parsing `- <Label>: <Span>` lines out of free-form LLM output.

use std::sync::LazyLock;

use regex::Regex;

use super::LabelSpanPair;
use crate::text::normalize_whitespace;

/// A dash, a label without colons, a colon, then the span.
static PAIR_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*-\s*(?P<label>[^:]*?)\s*:\s*(?P<span>.*?)\s*$").unwrap());

/// Fixed delimiter set used to split multi-span answers.
pub const CONJUNCTIONS: [&str; 4] = [", ", "; ", " and ", " or "];

static CONJUNCTION: LazyLock<Regex> = LazyLock::new(|| {
    let alts: Vec<String> = CONJUNCTIONS.iter().map(|d| regex::escape(d)).collect();
    Regex::new(&alts.join("|")).unwrap()
});

/// Parsed pairs plus the number of non-blank lines that did not match.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParseOutcome {
    pub pairs: Vec<LabelSpanPair>,
    pub unparsed_lines: usize,
}

/// Splits a span on the conjunction delimiters, scanning left to right.
/// Pieces are trimmed and empty ones dropped.
pub fn split_conjunctions(span_text: &str) -> Vec<String> {
    CONJUNCTION.split(span_text).map(str::trim).filter(|p| !p.is_empty()).map(str::to_string).collect()
}

/// Extracts unaligned `(label, span)` pairs in response order. Never fails.
pub fn parse_llm_response(response: &str) -> ParseOutcome {
    let mut out = ParseOutcome::default();
    for line in response.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let Some(caps) = PAIR_LINE.captures(line) else {
            out.unparsed_lines += 1;
            continue;
        };
        let label = normalize_whitespace(&caps["label"]);
        let span = caps["span"].trim();
        if label.is_empty() || span.is_empty() {
            out.unparsed_lines += 1;
            continue;
        }
        for piece in split_conjunctions(span) {
            out.pairs.push(LabelSpanPair::unaligned(label.clone(), piece));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(resp: &str) -> Vec<(String, String)> {
        parse_llm_response(resp).pairs.into_iter().map(|p| (p.label, p.span_text)).collect()
    }

    fn owned(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn parses_place_line() {
        assert_eq!(pairs("- Place: New York"), owned(&[("Place", "New York")]));
        assert!(pairs("").is_empty());
        assert_eq!(pairs("- People: Tom, Jerry"), owned(&[("People", "Tom"), ("People", "Jerry")]));
    }

    #[test]
    fn ignores_noise_and_counts_it() {
        let out = parse_llm_response("Sure! Here you go:\n\n- Person: Ann\nnot a pair\n-  : empty label\n- Date:   \n");
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.unparsed_lines, 4);
    }

    #[test]
    fn label_whitespace_is_collapsed() {
        assert_eq!(pairs("  -   Time    period :  last  week "), owned(&[("Time period", "last  week")]));
    }

    #[test]
    fn span_may_contain_dash_and_colon() {
        assert_eq!(pairs("- Quote: he said - wow: yes"), owned(&[("Quote", "he said - wow: yes")]));
    }

    /// Independent splitter: at each character position try every delimiter.
    fn brute_split(s: &str) -> Vec<String> {
        let mut pieces = Vec::new();
        let mut start = 0;
        let mut k = 0;
        let b = s.as_bytes();
        'scan: while k < b.len() {
            for d in CONJUNCTIONS {
                if s[k..].starts_with(d) {
                    pieces.push(s[start..k].to_string());
                    k += d.len();
                    start = k;
                    continue 'scan;
                }
            }
            k += s[k..].chars().next().map_or(1, char::len_utf8);
        }
        pieces.push(s[start..].to_string());
        pieces.into_iter().map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_conjunctions("Tom, Jerry"), vec!["Tom", "Jerry"]);
        assert_eq!(split_conjunctions("New York"), vec!["New York"]);
        assert_eq!(split_conjunctions("a, b and c"), brute_split("a, b and c"));
        assert_eq!(split_conjunctions("a, b and c"), vec!["a", "b", "c"]);
        assert_eq!(split_conjunctions("x or and y"), brute_split("x or and y"));
        assert_eq!(split_conjunctions("Tom,Jerry"), vec!["Tom,Jerry"]);
        assert_eq!(split_conjunctions(", , a"), vec!["a"]);
    }

    proptest! {
        #[test]
        fn split_matches_brute_force(parts in proptest::collection::vec("[a-c ,;]{0,4}|and|or", 0..8)) {
            let s = parts.join(" ");
            prop_assert_eq!(split_conjunctions(&s), brute_split(&s));
        }

        #[test]
        fn parser_is_total_and_bounded(resp in "(\\PC|\n|-|:|,| and ){0,200}") {
            let out = parse_llm_response(&resp);
            let lines = resp.lines().count();
            let max_pieces = resp.lines().map(|l| split_conjunctions(l).len().max(1)).max().unwrap_or(0);
            prop_assert!(out.pairs.len() <= lines * max_pieces);
            for p in &out.pairs {
                prop_assert!(!p.label.is_empty() && !p.span_text.is_empty());
            }
        }
    }
}
