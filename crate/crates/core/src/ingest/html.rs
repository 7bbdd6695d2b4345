//! Single-pass extraction of `<p>` text from possibly malformed HTML.

/// Start tags that implicitly close an open paragraph.
const CLOSES_P_ON_START: &[&str] = &[
    "address", "article", "aside", "blockquote", "center", "details", "dd", "dialog", "dir", "div",
    "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5",
    "h6", "header", "hgroup", "hr", "li", "listing", "main", "menu", "nav", "ol", "p", "plaintext",
    "pre", "search", "section", "summary", "table", "ul", "xmp",
];

/// End tags of containers a paragraph cannot outlive.
const CLOSES_P_ON_END: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "center", "dd", "details", "dialog", "div",
    "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "header", "hgroup", "html",
    "li", "main", "menu", "nav", "ol", "p", "section", "summary", "table", "tbody", "td", "tfoot",
    "th", "thead", "tr", "ul",
];

/// Elements whose content is not markup.
const RAW_TEXT: &[&str] = &["script", "style", "textarea", "title", "xmp", "iframe", "noembed"];

/// Returns the whitespace-normalized text of every non-empty `<p>` element in
/// document order. Inline markup inside a paragraph is stripped; the basic
/// named entities and numeric character references are decoded.
pub fn extract_paragraphs(html: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Option<String> = None;
    let bytes = html.as_bytes();
    let mut pos = 0;

    while pos < html.len() {
        let Some(rel) = html[pos..].find('<') else {
            if let Some(p) = current.as_mut() {
                p.push_str(&decode_entities(&html[pos..]));
            }
            break;
        };
        let lt = pos + rel;
        if let Some(p) = current.as_mut() {
            p.push_str(&decode_entities(&html[pos..lt]));
        }

        let rest = &html[lt..];
        if let Some(body) = rest.strip_prefix("<!--") {
            pos = body.find("-->").map_or(html.len(), |i| lt + 4 + i + 3);
            continue;
        }
        if rest.starts_with("<!") || rest.starts_with("<?") {
            pos = rest.find('>').map_or(html.len(), |i| lt + i + 1);
            continue;
        }

        let Some(tag) = parse_tag(bytes, lt) else {
            // a stray '<' is plain text
            if let Some(p) = current.as_mut() {
                p.push('<');
            }
            pos = lt + 1;
            continue;
        };
        pos = tag.end;

        let name = tag.name.as_str();
        if tag.closing {
            if CLOSES_P_ON_END.contains(&name) {
                flush(&mut current, &mut out);
            }
            continue;
        }
        if CLOSES_P_ON_START.contains(&name) {
            flush(&mut current, &mut out);
        }
        if name == "p" {
            current = Some(String::new());
        } else if name == "br" {
            if let Some(p) = current.as_mut() {
                p.push(' ');
            }
        } else if RAW_TEXT.contains(&name) && !tag.self_closing {
            pos = skip_raw_text(html, pos, name);
        }
    }
    flush(&mut current, &mut out);
    out
}

fn flush(current: &mut Option<String>, out: &mut Vec<String>) {
    if let Some(text) = current.take() {
        let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
        if !normalized.is_empty() {
            out.push(normalized);
        }
    }
}

struct Tag {
    name: String,
    closing: bool,
    self_closing: bool,
    /// Byte offset just past the closing `>`.
    end: usize,
}

/// Parses the tag starting at `bytes[lt] == b'<'`. Returns `None` when the
/// `<` does not start a tag. A tag cut off by the end of input swallows the
/// rest of the document.
fn parse_tag(bytes: &[u8], lt: usize) -> Option<Tag> {
    let mut i = lt + 1;
    let closing = bytes.get(i) == Some(&b'/');
    if closing {
        i += 1;
    }
    let start = i;
    if !bytes.get(i).is_some_and(u8::is_ascii_alphabetic) {
        return None;
    }
    while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' && bytes[i] != b'/' {
        i += 1;
    }
    let name = String::from_utf8_lossy(&bytes[start..i]).to_ascii_lowercase();

    let mut quote: Option<u8> = None;
    let mut last_significant = 0u8;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(q) if b == q => quote = None,
            Some(_) => {}
            None if b == b'"' || b == b'\'' => quote = Some(b),
            None if b == b'>' => {
                return Some(Tag {
                    name,
                    closing,
                    self_closing: last_significant == b'/',
                    end: i + 1,
                });
            }
            None => {}
        }
        if !b.is_ascii_whitespace() {
            last_significant = b;
        }
        i += 1;
    }
    Some(Tag {
        name,
        closing,
        self_closing: false,
        end: bytes.len(),
    })
}

fn skip_raw_text(html: &str, from: usize, name: &str) -> usize {
    let lower = html[from..].to_ascii_lowercase();
    let needle = format!("</{name}");
    match lower.find(&needle) {
        Some(i) => {
            let close = from + i;
            html[close..].find('>').map_or(html.len(), |j| close + j + 1)
        }
        None => html.len(),
    }
}

fn decode_entities(text: &str) -> String {
    if !text.contains('&') {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        match decode_one(rest) {
            Some((c, used)) => {
                out.push(c);
                rest = &rest[used..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Decodes the reference at the start of `s` (which begins with `&`),
/// returning the character and the number of bytes consumed.
fn decode_one(s: &str) -> Option<(char, usize)> {
    if let Some(num) = s.strip_prefix("&#") {
        let (digits, radix, skip) = match num.strip_prefix(['x', 'X']) {
            Some(hex) => (hex, 16, 3),
            None => (num, 10, 2),
        };
        let len = digits.chars().take_while(|c| c.is_digit(radix)).count();
        if len == 0 {
            return None;
        }
        let value = u32::from_str_radix(&digits[..len], radix).unwrap_or(u32::MAX);
        let c = match value {
            0 => '\u{FFFD}',
            v => char::from_u32(v).unwrap_or('\u{FFFD}'),
        };
        let semi = usize::from(digits[len..].starts_with(';'));
        return Some((c, skip + len + semi));
    }
    const NAMED: &[(&str, char, bool)] = &[
        ("amp", '&', true),
        ("lt", '<', true),
        ("gt", '>', true),
        ("quot", '"', true),
        ("apos", '\'', false),
        ("nbsp", '\u{A0}', true),
    ];
    let body = &s[1..];
    for &(name, c, legacy) in NAMED {
        if let Some(after) = body.strip_prefix(name) {
            if after.starts_with(';') {
                return Some((c, 1 + name.len() + 1));
            }
            // legacy entities are recognized without the semicolon
            if legacy && !after.starts_with(|ch: char| ch.is_ascii_alphanumeric()) {
                return Some((c, 1 + name.len()));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(extract_paragraphs("<p>Hello</p><p>World</p>"), vec!["Hello", "World"]);
        assert!(extract_paragraphs("<div>x</div>").is_empty());
        assert_eq!(extract_paragraphs("<p>a &amp; b"), vec!["a & b"]);
        assert!(extract_paragraphs("just some text, no markup").is_empty());
        assert!(extract_paragraphs("").is_empty());
    }

    #[test]
    fn malformed_markup() {
        assert_eq!(extract_paragraphs("<P class=x>one<p>two<div>three</div>"), vec!["one", "two"]);
        assert_eq!(
            extract_paragraphs("<p>x <b>bold <i>it</i></b> y</p>"),
            vec!["x bold it y"]
        );
        assert_eq!(extract_paragraphs("<p>1 < 2 and 3 > 2</p>"), vec!["1 < 2 and 3 > 2"]);
        assert_eq!(extract_paragraphs("<p title='a>b'>q</p>"), vec!["q"]);
        assert_eq!(extract_paragraphs("<p>cut <a href=\"x"), vec!["cut"]);
        assert_eq!(extract_paragraphs("<ul><li><p>a</li><li>b</li></ul>"), vec!["a"]);
    }

    #[test]
    fn skips_comments_scripts_and_styles() {
        let html = "<p>a<!-- <p>hidden</p> -->b</p><script>var s='<p>no</p>';</script>\
                    <style>p{}</style><p>c</p>";
        assert_eq!(extract_paragraphs(html), vec!["ab", "c"]);
    }

    #[test]
    fn entities() {
        assert_eq!(
            extract_paragraphs("<p>&lt;tag&gt; &quot;q&quot; &apos;s&apos; &#65;&#x42;&#X43; &bogus; &amp</p>"),
            vec!["<tag> \"q\" 's' ABC &bogus; &"]
        );
        assert_eq!(extract_paragraphs("<p>&#0;&#xD800;</p>"), vec!["\u{FFFD}\u{FFFD}"]);
    }

    fn reference_paragraphs(html: &str) -> Vec<String> {
        let doc = scraper::Html::parse_document(html);
        let sel = scraper::Selector::parse("p").unwrap();
        doc.select(&sel)
            .map(|p| p.text().collect::<String>().split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|t| !t.is_empty())
            .collect()
    }

    fn arb_text() -> impl Strategy<Value = String> {
        prop::collection::vec(
            prop_oneof![
                "[a-zA-Záčř0-9 ]{1,12}".prop_map(|s| s),
                Just("&amp;".to_string()),
                Just("&lt;".to_string()),
                Just("&gt;".to_string()),
                Just("&quot;".to_string()),
                Just("&#233;".to_string()),
                Just("&#x10D;".to_string()),
            ],
            0..5,
        )
        .prop_map(|v| v.concat())
    }

    fn arb_inline() -> impl Strategy<Value = String> {
        let leaf = arb_text();
        leaf.prop_recursive(2, 8, 3, |inner| {
            (
                prop::sample::select(vec!["b", "i", "em", "span", "a", "strong"]),
                prop::collection::vec(inner, 0..3),
            )
                .prop_map(|(tag, kids)| format!("<{tag} class=\"k\">{}</{tag}>", kids.concat()))
        })
    }

    fn arb_block() -> impl Strategy<Value = String> {
        prop_oneof![
            prop::collection::vec(arb_inline(), 0..4).prop_map(|k| format!("<p>{}</p>", k.concat())),
            arb_text().prop_map(|t| format!("<div>{t}</div>")),
            arb_text().prop_map(|t| format!("<h2>{t}</h2>")),
            prop::collection::vec(arb_inline(), 0..3)
                .prop_map(|k| format!("<div><p>{}</p></div>", k.concat())),
        ]
    }

    proptest! {
        #[test]
        fn matches_reference_parser_on_well_formed_html(blocks in prop::collection::vec(arb_block(), 0..6)) {
            let html = format!(
                "<!DOCTYPE html><html><head><title>t</title></head><body>{}</body></html>",
                blocks.concat()
            );
            prop_assert_eq!(extract_paragraphs(&html), reference_paragraphs(&html));
        }

        #[test]
        fn never_panics(html in any::<String>()) {
            let _ = extract_paragraphs(&html);
        }
    }

    #[test]
    fn reference_agrees_on_examples() {
        for html in ["<p>Hello</p><p>World</p>", "<div>x</div>", "<p>a &amp; b"] {
            assert_eq!(extract_paragraphs(html), reference_paragraphs(html), "{html}");
        }
    }
}
