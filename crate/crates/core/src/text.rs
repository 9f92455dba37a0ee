//! Text normalization shared by generation, cleaning and scoring.

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Punctuation kept by [`remove_disallowed_symbols`], besides letters,
/// digits, whitespace and `% ° µ`.
pub const ALLOWED_PUNCTUATION: &str = ".,;:!?'\"()[]-/&+";

/// Joins tokens into text: no space before closing punctuation and
/// clitics, none after opening brackets.
pub fn realize<S: AsRef<str>>(words: &[S]) -> String {
    let mut out = String::new();
    let mut glue_next = false;
    for w in words {
        let w = match w.as_ref() {
            "``" | "''" => "\"",
            "`" => "'",
            other => other,
        };
        let attach = matches!(w, "," | "." | "?" | "!" | ";" | ":" | ")" | "]" | "%" | "'s" | "'" | "n't");
        if !out.is_empty() && !attach && !glue_next {
            out.push(' ');
        }
        out.push_str(w);
        glue_next = matches!(w, "(" | "[");
    }
    out
}

pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Removes one leading article ("a", "an", "the"), case-insensitively.
pub fn strip_leading_article(s: &str) -> String {
    let trimmed = s.trim_start();
    if let Some((first, rest)) = trimmed.split_once(char::is_whitespace) {
        if ARTICLES.contains(&first.to_lowercase().as_str()) {
            return rest.trim_start().to_string();
        }
    }
    trimmed.to_string()
}

pub fn is_allowed_char(c: char) -> bool {
    c.is_alphanumeric()
        || c.is_whitespace()
        || ALLOWED_PUNCTUATION.contains(c)
        || matches!(c, '%' | '°' | 'µ')
}

pub fn remove_disallowed_symbols(s: &str) -> String {
    s.chars().filter(|&c| is_allowed_char(c)).collect()
}

/// Drops whitespace in front of `? . , ; : !`.
pub fn tighten_punctuation(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if matches!(c, '?' | '.' | ',' | ';' | ':' | '!') {
            while out.ends_with(' ') {
                out.pop();
            }
        }
        out.push(c);
    }
    out
}

/// Answer normalizer used by exact match and token F1: lowercase, strip
/// punctuation, collapse spaces, drop a leading article.
pub fn normalize_answer(s: &str) -> String {
    let lowered: String = s
        .to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_punctuation() { ' ' } else { c })
        .collect();
    strip_leading_article(&collapse_whitespace(&lowered))
}

pub fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

pub fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Function words ignored when checking that a question does not give
/// away its answer.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "in", "on", "at", "to", "for", "by", "with", "and", "or", "is", "are",
    "was", "were", "be", "been", "does", "do", "did", "this", "that", "these", "those", "its",
    "their", "from", "as", "into",
];

pub fn is_stopword(w: &str) -> bool {
    STOPWORDS.contains(&w.to_lowercase().as_str())
}
