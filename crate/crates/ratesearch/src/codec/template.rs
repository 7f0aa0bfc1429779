//! Command templates with `{placeholder}` substitution.
//!
//! Templates are split on whitespace *before* substitution and executed as
//! argv lists, never through a shell, so substituted values cannot inject
//! arguments or shell syntax.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template is empty")]
    Empty,
    #[error("required placeholder {{{name}}} appears {count} times, expected exactly once")]
    PlaceholderCount { name: String, count: usize },
    #[error("unknown placeholder {{{name}}}")]
    UnknownPlaceholder { name: String },
    #[error("unterminated '{{' in template token {token:?}")]
    UnterminatedBrace { token: String },
}

/// Checks that every required placeholder occurs exactly once and that all
/// braces are well formed.
pub fn validate_template(template: &str, required: &[&str]) -> Result<(), TemplateError> {
    if template.split_whitespace().next().is_none() {
        return Err(TemplateError::Empty);
    }
    let mut counts: BTreeMap<&str, usize> = required.iter().map(|&n| (n, 0)).collect();
    for token in template.split_whitespace() {
        for name in placeholders_in(token)? {
            if let Some(count) = counts.get_mut(name) {
                *count += 1;
            }
        }
    }
    for (name, count) in counts {
        if count != 1 {
            return Err(TemplateError::PlaceholderCount {
                name: name.to_string(),
                count,
            });
        }
    }
    Ok(())
}

/// Renders a template into an argv list, substituting every `{name}` from
/// `tokens`. A placeholder without a binding is an error; rendering the same
/// inputs twice yields the same argv.
pub fn render_command(
    template: &str,
    tokens: &BTreeMap<&str, String>,
) -> Result<Vec<String>, TemplateError> {
    let mut argv = Vec::new();
    for raw in template.split_whitespace() {
        let mut out = String::with_capacity(raw.len());
        let mut rest = raw;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let close = after.find('}').ok_or_else(|| TemplateError::UnterminatedBrace {
                token: raw.to_string(),
            })?;
            let name = &after[..close];
            let value = tokens
                .get(name)
                .ok_or_else(|| TemplateError::UnknownPlaceholder {
                    name: name.to_string(),
                })?;
            out.push_str(value);
            rest = &after[close + 1..];
        }
        out.push_str(rest);
        argv.push(out);
    }
    if argv.is_empty() {
        return Err(TemplateError::Empty);
    }
    Ok(argv)
}

/// Names of all placeholders inside one whitespace-delimited token.
fn placeholders_in(token: &str) -> Result<Vec<&str>, TemplateError> {
    let mut names = Vec::new();
    let mut rest = token;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| TemplateError::UnterminatedBrace {
            token: token.to_string(),
        })?;
        names.push(&after[..close]);
        rest = &after[close + 1..];
    }
    Ok(names)
}
