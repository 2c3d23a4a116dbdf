//! Character-offset string helpers.

use std::ops::Range;

/// Substring by character (not byte) range. Out-of-range ends are clamped.
pub fn char_slice(s: &str, range: Range<usize>) -> String {
    s.chars().skip(range.start).take(range.end.saturating_sub(range.start)).collect()
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Collapses every whitespace run to a single space and trims both ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Character ranges of every occurrence of `needle` in `haystack` that does
/// not start or end inside a word. Matching is per character, optionally
/// case-insensitive.
pub fn find_word_occurrences(haystack: &str, needle: &str, ignore_case: bool) -> Vec<Range<usize>> {
    let hay: Vec<char> = haystack.chars().collect();
    let pat: Vec<char> = needle.chars().collect();
    if pat.is_empty() || pat.len() > hay.len() {
        return Vec::new();
    }
    let same = |a: char, b: char| a == b || (ignore_case && a.to_lowercase().eq(b.to_lowercase()));
    let mut found = Vec::new();
    let mut i = 0;
    while i + pat.len() <= hay.len() {
        let end = i + pat.len();
        let matches = hay[i..end].iter().zip(&pat).all(|(&a, &b)| same(a, b));
        let left_ok = i == 0 || !(hay[i - 1].is_alphanumeric() && pat[0].is_alphanumeric());
        let right_ok = end == hay.len() || !(hay[end].is_alphanumeric() && pat[pat.len() - 1].is_alphanumeric());
        if matches && left_ok && right_ok {
            found.push(i..end);
            i = end;
        } else {
            i += 1;
        }
    }
    found
}
