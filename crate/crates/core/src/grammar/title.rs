//! Node title formats such as `EVD - {content} - {citekey}`.

use regex::Regex;

pub const CONTENT: &str = "{content}";
pub const CITEKEY: &str = "{citekey}";

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Content,
    Citekey,
}

/// A compiled title template.
#[derive(Debug, Clone)]
pub struct TitleFormat {
    segments: Vec<Segment>,
    matcher: Regex,
}

impl TitleFormat {
    pub fn parse(format: &str) -> Result<TitleFormat, String> {
        let mut segments = Vec::new();
        let mut rest = format;
        let mut literal = String::new();
        while let Some(open) = rest.find('{') {
            literal.push_str(&rest[..open]);
            let tail = &rest[open..];
            let placeholder = if tail.starts_with(CONTENT) {
                Segment::Content
            } else if tail.starts_with(CITEKEY) {
                Segment::Citekey
            } else {
                return Err(format!(
                    "unknown placeholder at {:?}; only {CONTENT} and {CITEKEY} are allowed",
                    &tail[..tail.find('}').map(|i| i + 1).unwrap_or(tail.len())]
                ));
            };
            if !literal.is_empty() {
                segments.push(Segment::Literal(std::mem::take(&mut literal)));
            }
            if let Some(Segment::Content | Segment::Citekey) = segments.last() {
                return Err("placeholders must be separated by literal text".to_string());
            }
            rest = &tail[if placeholder == Segment::Content { CONTENT.len() } else { CITEKEY.len() }..];
            segments.push(placeholder);
        }
        literal.push_str(rest);
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }

        let count = |s: &Segment| segments.iter().filter(|x| *x == s).count();
        if count(&Segment::Content) != 1 {
            return Err(format!("format must contain {CONTENT} exactly once"));
        }
        if count(&Segment::Citekey) > 1 {
            return Err(format!("format may contain {CITEKEY} at most once"));
        }
        if format.trim() != format {
            return Err("format has surrounding whitespace".to_string());
        }

        let mut pattern = String::from("^");
        for seg in &segments {
            match seg {
                Segment::Literal(lit) => pattern.push_str(&regex::escape(lit)),
                Segment::Content => pattern.push_str(r"(?P<content>\S(?:.*\S)?)"),
                Segment::Citekey => pattern.push_str(r"@(?P<citekey>[A-Za-z0-9_-]+)"),
            }
        }
        pattern.push('$');
        let matcher = Regex::new(&pattern).map_err(|e| e.to_string())?;
        Ok(TitleFormat { segments, matcher })
    }

    pub fn has_citekey(&self) -> bool {
        self.segments.contains(&Segment::Citekey)
    }

    /// Literal text before the first placeholder.
    pub fn prefix(&self) -> &str {
        match self.segments.first() {
            Some(Segment::Literal(l)) => l,
            _ => "",
        }
    }

    /// Literal text after the last placeholder.
    pub fn suffix(&self) -> &str {
        match self.segments.last() {
            Some(Segment::Literal(l)) if self.segments.len() > 1 => l,
            _ => "",
        }
    }

    /// Whether some title could plausibly match both formats, judged from their
    /// literal prefixes and suffixes.
    pub fn overlaps(&self, other: &TitleFormat) -> bool {
        let (p1, p2) = (self.prefix(), other.prefix());
        let (s1, s2) = (self.suffix(), other.suffix());
        (p1.starts_with(p2) || p2.starts_with(p1)) && (s1.ends_with(s2) || s2.ends_with(s1))
    }

    /// Captures `(content, citekey)` when `title` has this shape.
    pub fn capture(&self, title: &str) -> Option<(String, Option<String>)> {
        let caps = self.matcher.captures(title)?;
        Some((
            caps["content"].to_string(),
            caps.name("citekey").map(|m| m.as_str().to_string()),
        ))
    }

    /// Substitutes placeholders. The caller has already validated the inputs.
    pub fn render(&self, content: &str, citekey: Option<&str>) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(l) => out.push_str(l),
                Segment::Content => out.push_str(content),
                Segment::Citekey => {
                    out.push('@');
                    out.push_str(citekey.unwrap_or_default());
                }
            }
        }
        out
    }
}

pub fn is_valid_citekey(key: &str) -> bool {
    !key.is_empty()
        && key
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evidence_format() {
        let f = TitleFormat::parse("EVD - {content} - {citekey}").unwrap();
        assert!(f.has_citekey());
        assert_eq!(f.prefix(), "EVD - ");
        assert_eq!(f.suffix(), "");
        let (content, key) = f
            .capture("EVD - Children were 2x less susceptible - @zhuChildrenAreUnlikely2020")
            .unwrap();
        assert_eq!(content, "Children were 2x less susceptible");
        assert_eq!(key.as_deref(), Some("zhuChildrenAreUnlikely2020"));
        assert!(f.capture("EVD - no citekey here").is_none());
        assert!(f.capture("EVD -  - @k").is_none());
    }

    #[test]
    fn content_may_contain_the_delimiter() {
        let f = TitleFormat::parse("EVD - {content} - {citekey}").unwrap();
        let title = f.render("a - b", Some("k1"));
        assert_eq!(title, "EVD - a - b - @k1");
        assert_eq!(
            f.capture(&title),
            Some(("a - b".to_string(), Some("k1".to_string())))
        );
    }

    #[test]
    fn bad_formats() {
        assert!(TitleFormat::parse("QUE").is_err());
        assert!(TitleFormat::parse("{content} {content}").is_err());
        assert!(TitleFormat::parse("X {content} {citekey} {citekey}").is_err());
        assert!(TitleFormat::parse("X {name}").is_err());
        assert!(TitleFormat::parse("X {content}{citekey}").is_err());
        assert!(TitleFormat::parse(" X - {content}").is_err());
    }

    #[test]
    fn overlap_detection() {
        let evd = TitleFormat::parse("EVD - {content} - {citekey}").unwrap();
        let evd_plain = TitleFormat::parse("EVD - {content}").unwrap();
        let clm = TitleFormat::parse("CLM - {content}").unwrap();
        let bare = TitleFormat::parse("{content}?").unwrap();
        assert!(evd.overlaps(&evd_plain));
        assert!(!evd.overlaps(&clm));
        // "CLM - why?" matches both
        assert!(bare.overlaps(&clm) && clm.overlaps(&bare));
        let paren = TitleFormat::parse("[{content}]").unwrap();
        assert!(!paren.overlaps(&clm));
        assert!(TitleFormat::parse("{content}").unwrap().overlaps(&clm));
    }
}
