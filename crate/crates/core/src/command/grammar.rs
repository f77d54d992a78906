//! Single-line command grammar.
//!
//! Tokens split on whitespace; single- or double-quoted spans join into one
//! token and adjacent spans concatenate (`'a'"b"` is `ab`). Flags are
//! `--name value`, except declared switches (`--json`) which take no value.
//! The number of leading bare words treated as the verb path depends on the
//! family: `openclaw` takes two, `curl` none, every other family one.

use std::fmt;

pub const CONTROL_FAMILY: &str = "control";
pub const CONTROL_WORDS: [&str; 3] = ["done", "exit", "quit"];
pub const SWITCH_FLAGS: [&str; 1] = ["json"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("empty command")]
    Empty,
    #[error("unterminated {quote} quote starting at byte {offset}")]
    UnterminatedQuote { quote: char, offset: usize },
    #[error("flag --{0} is missing a value")]
    MissingValue(String),
    #[error("flag --{0} given more than once")]
    DuplicateFlag(String),
    #[error("malformed flag {0:?}")]
    BadFlag(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Token {
    text: String,
    quoted: bool,
}

impl Token {
    fn is_flag(&self) -> bool {
        !self.quoted && self.text.starts_with("--")
    }
}

fn tokenize(line: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut current: Option<Token> = None;
    let mut chars = line.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            c if c.is_whitespace() => {
                if let Some(tok) = current.take() {
                    tokens.push(tok);
                }
            }
            '\'' | '"' => {
                let tok = current.get_or_insert_with(|| Token {
                    text: String::new(),
                    quoted: false,
                });
                tok.quoted = true;
                let mut closed = false;
                for (_, inner) in chars.by_ref() {
                    if inner == c {
                        closed = true;
                        break;
                    }
                    tok.text.push(inner);
                }
                if !closed {
                    return Err(ParseError::UnterminatedQuote { quote: c, offset: i });
                }
            }
            _ => {
                current
                    .get_or_insert_with(|| Token {
                        text: String::new(),
                        quoted: false,
                    })
                    .text
                    .push(c);
            }
        }
    }
    if let Some(tok) = current {
        tokens.push(tok);
    }
    Ok(tokens)
}

/// How many bare words after the family form the verb path, when known.
pub fn verb_depth(family: &str) -> Option<usize> {
    match family {
        "openclaw" => Some(2),
        "curl" => Some(0),
        "tasks" | "calendar" | "email" | "file" | "weather" => Some(1),
        _ => None,
    }
}

fn valid_flag_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_')
}

/// One parsed command line. Equality ignores `raw`.
#[derive(Debug, Clone, Eq)]
pub struct CommandLine {
    pub family: String,
    pub verb_path: Vec<String>,
    pub positionals: Vec<String>,
    /// Flag names without the leading `--`, in the order given.
    pub flags: Vec<(String, String)>,
    pub raw: String,
}

impl PartialEq for CommandLine {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
            && self.verb_path == other.verb_path
            && self.positionals == other.positionals
            && self.flags == other.flags
    }
}

impl CommandLine {
    pub fn is_control(&self) -> bool {
        self.family == CONTROL_FAMILY
            && self.positionals.is_empty()
            && self.flags.is_empty()
            && matches!(self.verb_path.as_slice(), [w] if CONTROL_WORDS.contains(&w.as_str()))
    }

    /// The control word (`done`, `exit`, `quit`) for control commands.
    pub fn control_word(&self) -> Option<&str> {
        if self.is_control() {
            self.verb_path.first().map(String::as_str)
        } else {
            None
        }
    }

    pub fn flag(&self, name: &str) -> Option<&str> {
        self.flags
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn has_flag(&self, name: &str) -> bool {
        self.flags.iter().any(|(k, _)| k == name)
    }

    /// Renders back to a line that reparses to an equal `CommandLine`.
    pub fn render(&self) -> String {
        if self.is_control() {
            return self.verb_path.join(" ");
        }
        let mut parts = vec![quote_word(&self.family)];
        parts.extend(self.verb_path.iter().cloned());
        let positional_bare_ok =
            verb_depth(&self.family).is_some_and(|d| d == self.verb_path.len());
        for p in &self.positionals {
            if positional_bare_ok {
                parts.push(quote_value(p));
            } else {
                parts.push(force_quote(p));
            }
        }
        for (k, v) in &self.flags {
            parts.push(format!("--{k}"));
            if !SWITCH_FLAGS.contains(&k.as_str()) {
                parts.push(quote_value(v));
            }
        }
        parts.join(" ")
    }
}

impl fmt::Display for CommandLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn quote_word(s: &str) -> String {
    if !s.is_empty() && !s.contains(|c: char| c.is_whitespace() || c == '\'' || c == '"') {
        s.to_string()
    } else {
        force_quote(s)
    }
}

fn quote_value(s: &str) -> String {
    if s.starts_with("--") {
        force_quote(s)
    } else {
        quote_word(s)
    }
}

fn force_quote(s: &str) -> String {
    if !s.contains('\'') {
        format!("'{s}'")
    } else if !s.contains('"') {
        format!("\"{s}\"")
    } else {
        s.split('\'')
            .map(|part| format!("'{part}'"))
            .collect::<Vec<_>>()
            .join("\"'\"")
    }
}

pub fn parse_command(text: &str) -> Result<CommandLine, ParseError> {
    let tokens = tokenize(text)?;
    let Some(first) = tokens.first() else {
        return Err(ParseError::Empty);
    };
    if tokens.len() == 1 && !first.quoted {
        let word = first.text.to_ascii_lowercase();
        if CONTROL_WORDS.contains(&word.as_str()) {
            return Ok(CommandLine {
                family: CONTROL_FAMILY.to_string(),
                verb_path: vec![word],
                positionals: Vec::new(),
                flags: Vec::new(),
                raw: text.to_string(),
            });
        }
    }
    if first.is_flag() {
        return Err(ParseError::BadFlag(first.text.clone()));
    }
    let family = first.text.clone();
    let depth = verb_depth(&family).unwrap_or(usize::MAX);
    let mut verb_path = Vec::new();
    let mut rest = tokens[1..].iter().peekable();
    while verb_path.len() < depth {
        match rest.peek() {
            Some(tok) if !tok.quoted && !tok.is_flag() => {
                verb_path.push(tok.text.clone());
                rest.next();
            }
            _ => break,
        }
    }
    let mut positionals = Vec::new();
    let mut flags: Vec<(String, String)> = Vec::new();
    while let Some(tok) = rest.next() {
        if !tok.is_flag() {
            positionals.push(tok.text.clone());
            continue;
        }
        let name = &tok.text[2..];
        if !valid_flag_name(name) {
            return Err(ParseError::BadFlag(tok.text.clone()));
        }
        if flags.iter().any(|(k, _)| k == name) {
            return Err(ParseError::DuplicateFlag(name.to_string()));
        }
        if SWITCH_FLAGS.contains(&name) {
            flags.push((name.to_string(), "true".to_string()));
            continue;
        }
        match rest.next() {
            Some(value) if !value.is_flag() => flags.push((name.to_string(), value.text.clone())),
            _ => return Err(ParseError::MissingValue(name.to_string())),
        }
    }
    Ok(CommandLine {
        family,
        verb_path,
        positionals,
        flags,
        raw: text.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_add_with_quoted_title() {
        let c = parse_command(
            "tasks add --title 'Seattle release next step' --priority high --due 2026-03-08",
        )
        .unwrap();
        assert_eq!(c.family, "tasks");
        assert_eq!(c.verb_path, ["add"]);
        assert!(c.positionals.is_empty());
        assert_eq!(c.flag("title"), Some("Seattle release next step"));
        assert_eq!(c.flag("priority"), Some("high"));
        assert_eq!(c.flag("due"), Some("2026-03-08"));
    }

    #[test]
    fn openclaw_positional() {
        let c = parse_command("openclaw config get agent.model").unwrap();
        assert_eq!(c.family, "openclaw");
        assert_eq!(c.verb_path, ["config", "get"]);
        assert_eq!(c.positionals, ["agent.model"]);
    }

    #[test]
    fn control_words() {
        for w in ["done", "exit", "quit", "DONE"] {
            let c = parse_command(w).unwrap();
            assert!(c.is_control());
            assert_eq!(c.control_word(), Some(w.to_ascii_lowercase().as_str()));
        }
        assert!(!parse_command("'done'").unwrap().is_control());
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(parse_command("   "), Err(ParseError::Empty));
        assert_eq!(
            parse_command("tasks add --title"),
            Err(ParseError::MissingValue("title".into()))
        );
        assert_eq!(
            parse_command("tasks add --title --priority high"),
            Err(ParseError::MissingValue("title".into()))
        );
        assert!(matches!(
            parse_command("tasks add --title 'oops"),
            Err(ParseError::UnterminatedQuote { quote: '\'', .. })
        ));
        assert_eq!(
            parse_command("tasks add --title a --title b"),
            Err(ParseError::DuplicateFlag("title".into()))
        );
        assert!(matches!(parse_command("tasks add -- x"), Err(ParseError::BadFlag(_))));
    }

    #[test]
    fn switch_and_hash_target() {
        let c = parse_command("openclaw channels list --json").unwrap();
        assert_eq!(c.flag("json"), Some("true"));
        let c = parse_command(
            "openclaw message send --channel discord --target #general --message 'Hi there.'",
        )
        .unwrap();
        assert_eq!(c.flag("target"), Some("#general"));
    }

    #[test]
    fn quoted_value_that_looks_like_a_flag() {
        let c = parse_command("file create --path /x --content '--not-a-flag'").unwrap();
        assert_eq!(c.flag("content"), Some("--not-a-flag"));
        assert_eq!(parse_command(&c.render()).unwrap(), c);
    }

    #[test]
    fn render_handles_both_quote_kinds() {
        let c = parse_command(r#"file create --path /x --content "it's "'say "hi"'"#).unwrap();
        assert_eq!(c.flag("content"), Some(r#"it's say "hi""#));
        assert_eq!(parse_command(&c.render()).unwrap(), c);
    }

    #[test]
    fn unknown_family_is_greedy() {
        let c = parse_command("frobnicate now please --x y").unwrap();
        assert_eq!(c.verb_path, ["now", "please"]);
        assert_eq!(parse_command(&c.render()).unwrap(), c);
    }

    #[test]
    fn curl_takes_positional_url() {
        let c = parse_command("curl https://status.example.com/health").unwrap();
        assert!(c.verb_path.is_empty());
        assert_eq!(c.positionals, ["https://status.example.com/health"]);
    }
}
