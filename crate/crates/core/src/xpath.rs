//! Absolute XPath handling: positional-predicate stripping.
//!
//! Only the subset produced by element recorders is accepted: a leading `/`,
//! element-name steps, and zero or more `[k]` positional predicates per step.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XPathError {
    #[error("xpath is empty")]
    Empty,
    #[error("xpath `{0}` is not absolute (must start with `/`)")]
    NotAbsolute(String),
    #[error("empty step at position {position} in `{xpath}`")]
    EmptyStep { xpath: String, position: usize },
    #[error("malformed step `{step}` at position {position}: {reason}")]
    MalformedStep {
        step: String,
        position: usize,
        reason: &'static str,
    },
}

/// One parsed location step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step<'a> {
    pub name: &'a str,
    pub predicates: Vec<u64>,
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | ':')
}

fn parse_step(step: &str, position: usize) -> Result<Step<'_>, XPathError> {
    let malformed = |reason| XPathError::MalformedStep {
        step: step.to_string(),
        position,
        reason,
    };
    let name_end = step.find('[').unwrap_or(step.len());
    let name = &step[..name_end];
    let mut chars = name.chars();
    match chars.next() {
        None => return Err(malformed("missing element name")),
        Some(c) if !is_name_start(c) => return Err(malformed("invalid element name")),
        _ => {}
    }
    if !chars.all(is_name_char) {
        return Err(malformed("invalid element name"));
    }

    let mut predicates = Vec::new();
    let mut rest = &step[name_end..];
    while !rest.is_empty() {
        let Some(body) = rest.strip_prefix('[') else {
            return Err(malformed("unexpected text after predicate"));
        };
        let Some(close) = body.find(']') else {
            return Err(malformed("unbalanced brackets"));
        };
        let digits = &body[..close];
        if digits.contains('[') {
            return Err(malformed("unbalanced brackets"));
        }
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed("predicate is not a positional index"));
        }
        let k: u64 = digits
            .parse()
            .map_err(|_| malformed("positional index out of range"))?;
        predicates.push(k);
        rest = &body[close + 1..];
    }
    Ok(Step { name, predicates })
}

/// Parses an absolute XPath into its steps.
pub fn parse(xpath: &str) -> Result<Vec<Step<'_>>, XPathError> {
    if xpath.is_empty() {
        return Err(XPathError::Empty);
    }
    let Some(body) = xpath.strip_prefix('/') else {
        return Err(XPathError::NotAbsolute(xpath.to_string()));
    };
    body.split('/')
        .enumerate()
        .map(|(i, s)| {
            if s.is_empty() {
                Err(XPathError::EmptyStep {
                    xpath: xpath.to_string(),
                    position: i,
                })
            } else {
                parse_step(s, i)
            }
        })
        .collect()
}

/// Removes every positional predicate, leaving the element-name skeleton.
///
/// `/html/body/div[2]/a[12]` becomes `/html/body/div/a`.
pub fn extract_skeleton(xpath: &str) -> Result<String, XPathError> {
    let steps = parse(xpath)?;
    let mut out = String::with_capacity(xpath.len());
    for s in steps {
        out.push('/');
        out.push_str(s.name);
    }
    Ok(out)
}

/// Element name of the last step.
pub fn final_element_name(xpath: &str) -> Result<&str, XPathError> {
    let steps = parse(xpath)?;
    Ok(steps.last().expect("at least one step").name)
}
