//! Character-offset text helpers shared by the verifier, planner and scorer.
//!
//! All offsets are in Unicode scalar values (chars), matching corpus files
//! produced by Python tooling.

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased token text.
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Lowercase and split on whitespace and punctuation: a token is a maximal
/// run of alphanumeric chars.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut current: Option<Token> = None;
    for (i, c) in text.chars().enumerate() {
        if c.is_alphanumeric() {
            let tok = current.get_or_insert_with(|| Token {
                text: String::new(),
                start: i,
                end: i,
            });
            tok.text.extend(c.to_lowercase());
            tok.end = i + 1;
        } else if let Some(tok) = current.take() {
            out.push(tok);
        }
    }
    out.extend(current);
    out
}

/// Char span of the first place where `needle`'s tokens occur as a
/// contiguous token subsequence of `haystack`. A needle without tokens never
/// matches.
pub fn find_token_sequence(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    let needle = tokenize(needle);
    if needle.is_empty() {
        return None;
    }
    let hay = tokenize(haystack);
    hay.windows(needle.len())
        .find(|w| w.iter().zip(&needle).all(|(a, b)| a.text == b.text))
        .map(|w| (w[0].start, w[w.len() - 1].end))
}

fn chars_eq_ci(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Char offset of the first case-insensitive occurrence of `needle`.
pub fn find_case_insensitive(haystack: &str, needle: &str) -> Option<usize> {
    let needle: Vec<char> = needle.chars().collect();
    if needle.is_empty() {
        return None;
    }
    let hay: Vec<char> = haystack.chars().collect();
    hay.windows(needle.len())
        .position(|w| w.iter().zip(&needle).all(|(&a, &b)| chars_eq_ci(a, b)))
}

/// Char offsets of every exact occurrence of `needle`, overlapping included.
pub fn find_all(haystack: &str, needle: &str) -> Vec<usize> {
    let needle: Vec<char> = needle.chars().collect();
    if needle.is_empty() {
        return Vec::new();
    }
    let hay: Vec<char> = haystack.chars().collect();
    hay.windows(needle.len())
        .enumerate()
        .filter(|(_, w)| *w == needle.as_slice())
        .map(|(i, _)| i)
        .collect()
}

/// Substring by char offsets; `None` when out of bounds or reversed.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text.char_indices().map(|(b, _)| b).chain(core::iter::once(text.len()));
    let from = indices.nth(start)?;
    let to = if end == start {
        from
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&text[from..to])
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_on_punctuation() {
        let toks: Vec<String> = tokenize("The bank's Servers, hacked!")
            .into_iter()
            .map(|t| t.text)
            .collect();
        assert_eq!(toks, ["the", "bank", "s", "servers", "hacked"]);
    }

    #[test]
    fn multi_word_sequences() {
        let text = "Officials confirmed a data breach at the clinic.";
        assert_eq!(find_token_sequence(text, "Data Breach"), Some((22, 33)));
        assert_eq!(find_token_sequence("a databreach occurred", "breach"), None);
        assert_eq!(find_token_sequence("data, breach", "data breach"), Some((0, 12)));
        assert_eq!(find_token_sequence("text", "!!"), None);
    }

    #[test]
    fn case_insensitive_offsets_are_chars() {
        assert_eq!(find_case_insensitive("Été: Hackers DEMANDED", "demanded"), Some(13));
        assert_eq!(find_case_insensitive("abc", "x"), None);
    }

    #[test]
    fn slicing_by_chars() {
        let t = "héllo wörld";
        assert_eq!(char_slice(t, 6, 11), Some("wörld"));
        assert_eq!(char_slice(t, 11, 11), Some(""));
        assert_eq!(char_slice(t, 6, 12), None);
        assert_eq!(char_slice(t, 3, 2), None);
        assert_eq!(find_all("aaa", "aa"), [0, 1]);
    }
}
