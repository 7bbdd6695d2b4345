/// Placeholder for digit sequences.
pub const NUMBER_TOKEN: &str = "0";
/// Tag for tokens made only of unknown symbols.
pub const UNKNOWN_TOKEN: &str = "<unk>";

const COMMON_PUNCTUATION: &str = "–—‘’‚‛“”„‟…«»‹›¡¿·•§°′″";

fn is_common_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || COMMON_PUNCTUATION.contains(c)
}

fn normalize_token(t: &str) -> String {
    let known = t
        .chars()
        .any(|c| c.is_alphabetic() || c.is_numeric() || is_common_punctuation(c));
    if !known {
        return UNKNOWN_TOKEN.to_string();
    }
    let mut out = String::with_capacity(t.len());
    let mut in_number = false;
    for c in t.chars() {
        if c.is_numeric() {
            if !in_number {
                out.push_str(NUMBER_TOKEN);
            }
            in_number = true;
        } else {
            out.push(c);
            in_number = false;
        }
    }
    out
}

/// Replaces every maximal run of digits with `0` and every token consisting
/// solely of unknown symbols (control characters, unassigned or exotic
/// symbols) with `<unk>`.
pub fn normalize_for_embeddings<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens.iter().map(|t| normalize_token(t.as_ref())).collect()
}
