//! The event-construction language emitted by the coding agent.
//!
//! Two surface forms are accepted and normalize to the same [`EventObject`]:
//!
//! ```text
//! PatchVulnerability(mention="patched", time=["Tuesday"], cve="CVE-2021-1234")
//! {"event_type": "PatchVulnerability", "trigger": "patched", "arguments": {"time": ["Tuesday"]}}
//! ```
//!
//! Values are string, integer, number or boolean literals, or flat lists of
//! them. Scalars are normalized to singleton lists and `None`/`null` to the
//! empty list. Strings take single or double quotes with backslash escapes.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::agents::TriggerHypothesis;
use crate::schema::{is_event_type_name, is_role_name, EventSchema, SchemaRegistry, MENTION_FIELD};

/// Top-level fields of the object notation, in canonical order.
pub const EVENT_FIELDS: [&str; 3] = ["event_type", "trigger", "arguments"];

/// Generic constructor name accepted in place of a schema class.
pub const GENERIC_CONSTRUCTOR: &str = "EventObject";

const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Int(i64),
    Num(f64),
    Bool(bool),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Str(_) => "str",
            Value::Int(_) => "int",
            Value::Num(_) => "float",
            Value::Bool(_) => "bool",
        }
    }

    /// Source-literal spelling of the value.
    pub fn to_literal(&self) -> String {
        let mut out = String::new();
        write_value(&mut out, self);
        out
    }

    /// Text used when matching a value against document spans.
    pub fn as_text(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            Value::Int(i) => i.to_string(),
            Value::Num(n) => format!("{n}"),
            Value::Bool(b) => b.to_string(),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_owned())
    }
}

/// A fully specified event instance: type, trigger span and role fillers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventObject {
    pub event_type: String,
    pub trigger: String,
    pub arguments: BTreeMap<String, Vec<Value>>,
}

impl EventObject {
    pub fn new(event_type: impl Into<String>, trigger: impl Into<String>) -> Self {
        Self {
            event_type: event_type.into(),
            trigger: trigger.into(),
            arguments: BTreeMap::new(),
        }
    }

    pub fn with_argument(mut self, role: impl Into<String>, values: Vec<Value>) -> Self {
        self.arguments.insert(role.into(), values);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceForm {
    Constructor,
    Object,
}

/// Result of a successful parse: the normalized event plus any top-level
/// keys beyond the three event fields (reported later by the structural check).
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedEvent {
    pub event: EventObject,
    pub form: SurfaceForm,
    pub extra_fields: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Unbalanced,
    Positional,
    NestedList,
    DuplicateKey,
    MissingField,
    Unexpected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl core::error::Error for ParseError {}

/// Generated code together with its parse outcome and the hypothesis it realizes.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeObject {
    pub raw_source: String,
    pub parsed: Result<ParsedEvent, ParseError>,
    pub origin_hypothesis: Option<TriggerHypothesis>,
}

impl CodeObject {
    pub fn event(&self) -> Option<&EventObject> {
        self.parsed.as_ref().ok().map(|p| &p.event)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Num(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Equals,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Int(_) | Tok::Num(_) => "number".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::LBracket => "`[`".to_string(),
            Tok::RBracket => "`]`".to_string(),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Colon => "`:`".to_string(),
            Tok::Equals => "`=`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

fn err(pos: Pos, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
    ParseError {
        line: pos.line,
        column: pos.column,
        kind,
        message: message.into(),
    }
}

struct Lexer<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.chars().peekable(),
            pos: Pos { line: 1, column: 1 },
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, Pos)>, ParseError> {
        let mut out = Vec::new();
        let mut delims: Vec<(char, Pos)> = Vec::new();
        loop {
            while let Some(&c) = self.chars.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '#' {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let start = self.pos;
            let Some(&c) = self.chars.peek() else {
                if let Some((open, at)) = delims.pop() {
                    return Err(err(at, ParseErrorKind::Unbalanced, format!("unclosed `{open}`")));
                }
                out.push((Tok::Eof, start));
                return Ok(out);
            };
            let tok = match c {
                '(' | '[' | '{' => {
                    self.bump();
                    delims.push((c, start));
                    match c {
                        '(' => Tok::LParen,
                        '[' => Tok::LBracket,
                        _ => Tok::LBrace,
                    }
                }
                ')' | ']' | '}' => {
                    self.bump();
                    let want = match c {
                        ')' => '(',
                        ']' => '[',
                        _ => '{',
                    };
                    match delims.pop() {
                        Some((open, _)) if open == want => {}
                        Some((open, at)) => {
                            return Err(err(
                                start,
                                ParseErrorKind::Unbalanced,
                                format!(
                                    "mismatched `{c}`: `{open}` opened at line {}, column {}",
                                    at.line, at.column
                                ),
                            ))
                        }
                        None => return Err(err(start, ParseErrorKind::Unbalanced, format!("unmatched `{c}`"))),
                    }
                    match c {
                        ')' => Tok::RParen,
                        ']' => Tok::RBracket,
                        _ => Tok::RBrace,
                    }
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                ':' => {
                    self.bump();
                    Tok::Colon
                }
                '=' => {
                    self.bump();
                    Tok::Equals
                }
                '"' | '\'' => self.string(c)?,
                '-' | '0'..='9' => self.number()?,
                c if c.is_ascii_alphabetic() || c == '_' => self.ident(),
                other => {
                    return Err(err(
                        start,
                        ParseErrorKind::Lexical,
                        format!("unexpected character `{}`", other.escape_debug()),
                    ))
                }
            };
            out.push((tok, start));
        }
    }

    fn ident(&mut self) -> Tok {
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.') {
                s.push(c);
                self.bump();
            } else if c == ':' {
                // `Conflict:Attack(` is a type name; `key: value` is not.
                let mut ahead = self.chars.clone();
                ahead.next();
                match ahead.peek() {
                    Some(&n) if n.is_ascii_alphabetic() || n == '_' => {
                        s.push(c);
                        self.bump();
                    }
                    _ => break,
                }
            } else {
                break;
            }
        }
        Tok::Ident(s)
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        let mut s = String::new();
        if self.chars.peek() == Some(&'-') {
            s.push('-');
            self.bump();
        }
        let digits = |lx: &mut Self, s: &mut String| {
            let mut n = 0;
            while let Some(&c) = lx.chars.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    lx.bump();
                    n += 1;
                } else {
                    break;
                }
            }
            n
        };
        if digits(self, &mut s) == 0 {
            return Err(err(start, ParseErrorKind::Lexical, "expected digits in number literal"));
        }
        let mut float = false;
        if self.chars.peek() == Some(&'.') {
            float = true;
            s.push('.');
            self.bump();
            if digits(self, &mut s) == 0 {
                return Err(err(self.pos, ParseErrorKind::Lexical, "expected digits after `.`"));
            }
        }
        if matches!(self.chars.peek(), Some('e' | 'E')) {
            float = true;
            s.push('e');
            self.bump();
            if let Some(&sign @ ('+' | '-')) = self.chars.peek() {
                s.push(sign);
                self.bump();
            }
            if digits(self, &mut s) == 0 {
                return Err(err(self.pos, ParseErrorKind::Lexical, "expected exponent digits"));
            }
        }
        if let Some(&c) = self.chars.peek() {
            if c.is_ascii_alphabetic() || c == '_' {
                return Err(err(self.pos, ParseErrorKind::Lexical, "malformed number literal"));
            }
        }
        if float {
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Tok::Num(v)),
                _ => Err(err(start, ParseErrorKind::Lexical, "number literal out of range")),
            }
        } else {
            s.parse::<i64>()
                .map(Tok::Int)
                .map_err(|_| err(start, ParseErrorKind::Lexical, "integer literal out of range"))
        }
    }

    fn hex4(&mut self, at: Pos) -> Result<u32, ParseError> {
        let mut v = 0u32;
        for _ in 0..4 {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| err(at, ParseErrorKind::Lexical, "invalid `\\u` escape"))?;
            v = v * 16 + d;
        }
        Ok(v)
    }

    fn string(&mut self, quote: char) -> Result<Tok, ParseError> {
        let start = self.pos;
        self.bump();
        let mut s = String::new();
        loop {
            let at = self.pos;
            match self.bump() {
                None | Some('\n') => return Err(err(start, ParseErrorKind::Lexical, "unterminated string literal")),
                Some(c) if c == quote => return Ok(Tok::Str(s)),
                Some('\\') => {
                    let c = self
                        .bump()
                        .ok_or_else(|| err(start, ParseErrorKind::Lexical, "unterminated string literal"))?;
                    match c {
                        'n' => s.push('\n'),
                        't' => s.push('\t'),
                        'r' => s.push('\r'),
                        'b' => s.push('\u{8}'),
                        'f' => s.push('\u{c}'),
                        '0' => s.push('\0'),
                        '\\' | '\'' | '"' | '/' => s.push(c),
                        'u' => {
                            let hi = self.hex4(at)?;
                            let code = if (0xD800..0xDC00).contains(&hi) {
                                if self.bump() != Some('\\') || self.bump() != Some('u') {
                                    return Err(err(at, ParseErrorKind::Lexical, "unpaired surrogate in `\\u` escape"));
                                }
                                let lo = self.hex4(at)?;
                                if !(0xDC00..0xE000).contains(&lo) {
                                    return Err(err(at, ParseErrorKind::Lexical, "unpaired surrogate in `\\u` escape"));
                                }
                                0x10000 + ((hi - 0xD800) << 10) + (lo - 0xDC00)
                            } else {
                                hi
                            };
                            let ch = char::from_u32(code)
                                .ok_or_else(|| err(at, ParseErrorKind::Lexical, "invalid `\\u` escape"))?;
                            s.push(ch);
                        }
                        other => {
                            return Err(err(
                                at,
                                ParseErrorKind::Lexical,
                                format!("unknown escape `\\{}`", other.escape_debug()),
                            ))
                        }
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }
}

/// Generic literal tree; used for the object notation and for parsing
/// structured agent replies.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Int(i64),
    Num(f64),
    Bool(bool),
    Null,
    List(Vec<(Literal, Pos)>),
    Object(Vec<(String, Pos, Literal, Pos)>),
}

impl Literal {
    fn describe(&self) -> &'static str {
        match self {
            Literal::Str(_) => "string",
            Literal::Int(_) | Literal::Num(_) => "number",
            Literal::Bool(_) => "boolean",
            Literal::Null => "null",
            Literal::List(_) => "list",
            Literal::Object(_) => "object",
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Self {
            toks: Lexer::new(src).tokenize()?,
            at: 0,
        })
    }

    fn peek(&self) -> &(Tok, Pos) {
        &self.toks[self.at.min(self.toks.len() - 1)]
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.peek().clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let (tok, pos) = self.peek();
        err(
            *pos,
            ParseErrorKind::Unexpected,
            format!("expected {expected}, found {}", tok.describe()),
        )
    }

    fn expect(&mut self, want: Tok, expected: &str) -> Result<Pos, ParseError> {
        if self.peek().0 == want {
            Ok(self.next().1)
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        match self.peek() {
            (Tok::Eof, _) => Ok(()),
            (tok, pos) => Err(err(
                *pos,
                ParseErrorKind::Unexpected,
                format!("unexpected {} after the event expression", tok.describe()),
            )),
        }
    }

    fn literal(&mut self, depth: usize) -> Result<(Literal, Pos), ParseError> {
        let (tok, pos) = self.next();
        if depth > MAX_DEPTH {
            return Err(err(pos, ParseErrorKind::Unexpected, "literal nested too deeply"));
        }
        let lit = match tok {
            Tok::Str(s) => Literal::Str(s),
            Tok::Int(i) => Literal::Int(i),
            Tok::Num(n) => Literal::Num(n),
            Tok::Ident(id) => match id.as_str() {
                "True" | "true" => Literal::Bool(true),
                "False" | "false" => Literal::Bool(false),
                "None" | "null" => Literal::Null,
                _ => {
                    return Err(err(
                        pos,
                        ParseErrorKind::Unexpected,
                        format!("expected a literal value, found identifier `{id}`"),
                    ))
                }
            },
            Tok::LBracket => {
                let mut items = Vec::new();
                loop {
                    if self.peek().0 == Tok::RBracket {
                        self.next();
                        break;
                    }
                    items.push(self.literal(depth + 1)?);
                    match self.peek().0 {
                        Tok::Comma => {
                            self.next();
                        }
                        Tok::RBracket => {}
                        _ => return Err(self.unexpected("`,` or `]`")),
                    }
                }
                Literal::List(items)
            }
            Tok::LBrace => {
                let mut entries: Vec<(String, Pos, Literal, Pos)> = Vec::new();
                loop {
                    if self.peek().0 == Tok::RBrace {
                        self.next();
                        break;
                    }
                    let (key_tok, key_pos) = self.next();
                    let Tok::Str(key) = key_tok else {
                        return Err(err(
                            key_pos,
                            ParseErrorKind::Unexpected,
                            format!("expected a quoted key, found {}", key_tok.describe()),
                        ));
                    };
                    if entries.iter().any(|(k, ..)| *k == key) {
                        return Err(err(
                            key_pos,
                            ParseErrorKind::DuplicateKey,
                            format!("duplicate key `{key}`"),
                        ));
                    }
                    self.expect(Tok::Colon, "`:` after key")?;
                    let (value, value_pos) = self.literal(depth + 1)?;
                    entries.push((key, key_pos, value, value_pos));
                    match self.peek().0 {
                        Tok::Comma => {
                            self.next();
                        }
                        Tok::RBrace => {}
                        _ => return Err(self.unexpected("`,` or `}`")),
                    }
                }
                Literal::Object(entries)
            }
            other => {
                return Err(err(
                    pos,
                    ParseErrorKind::Unexpected,
                    format!("expected a literal value, found {}", other.describe()),
                ))
            }
        };
        Ok((lit, pos))
    }
}

/// Parse a standalone literal (object, list, string, ...). Trailing input is
/// an error.
pub fn parse_literal(source: &str) -> Result<Literal, ParseError> {
    let mut p = Parser::new(source)?;
    let (lit, _) = p.literal(0)?;
    p.expect_eof()?;
    Ok(lit)
}

fn scalar_value(lit: Literal, pos: Pos) -> Result<Value, ParseError> {
    match lit {
        Literal::Str(s) => Ok(Value::Str(s)),
        Literal::Int(i) => Ok(Value::Int(i)),
        Literal::Num(n) => Ok(Value::Num(n)),
        Literal::Bool(b) => Ok(Value::Bool(b)),
        Literal::List(_) => Err(err(pos, ParseErrorKind::NestedList, "nested lists are not allowed")),
        other => Err(err(
            pos,
            ParseErrorKind::Unexpected,
            format!("expected a string, number or boolean, found {}", other.describe()),
        )),
    }
}

fn argument_values(lit: Literal, pos: Pos) -> Result<Vec<Value>, ParseError> {
    match lit {
        Literal::Null => Ok(Vec::new()),
        Literal::List(items) => items.into_iter().map(|(l, p)| scalar_value(l, p)).collect(),
        other => Ok(alloc::vec![scalar_value(other, pos)?]),
    }
}

fn string_field(lit: Literal, pos: Pos, field: &str) -> Result<String, ParseError> {
    match lit {
        Literal::Str(s) => Ok(s),
        other => Err(err(
            pos,
            ParseErrorKind::Unexpected,
            format!("`{field}` must be a string, found {}", other.describe()),
        )),
    }
}

fn arguments_object(lit: Literal, pos: Pos) -> Result<BTreeMap<String, Vec<Value>>, ParseError> {
    let Literal::Object(entries) = lit else {
        return Err(err(
            pos,
            ParseErrorKind::Unexpected,
            format!("`arguments` must be an object, found {}", lit.describe()),
        ));
    };
    let mut args = BTreeMap::new();
    for (role, _, value, value_pos) in entries {
        args.insert(role, argument_values(value, value_pos)?);
    }
    Ok(args)
}

/// Normalize an object-notation literal into an event.
fn event_from_fields(
    fields: Vec<(String, Pos, Literal, Pos)>,
    open: Pos,
    form: SurfaceForm,
) -> Result<ParsedEvent, ParseError> {
    let mut event_type = None;
    let mut trigger = None;
    let mut arguments = None;
    let mut extra_fields = Vec::new();
    for (key, _, value, value_pos) in fields {
        match key.as_str() {
            "event_type" => event_type = Some(string_field(value, value_pos, "event_type")?),
            "trigger" => trigger = Some(string_field(value, value_pos, "trigger")?),
            "arguments" => arguments = Some(arguments_object(value, value_pos)?),
            _ => extra_fields.push(key),
        }
    }
    let missing = |name: &str| err(open, ParseErrorKind::MissingField, format!("missing field `{name}`"));
    Ok(ParsedEvent {
        event: EventObject {
            event_type: event_type.ok_or_else(|| missing("event_type"))?,
            trigger: trigger.ok_or_else(|| missing("trigger"))?,
            arguments: arguments.ok_or_else(|| missing("arguments"))?,
        },
        form,
        extra_fields,
    })
}

fn parse_constructor(p: &mut Parser, registry: Option<&SchemaRegistry>) -> Result<ParsedEvent, ParseError> {
    let (Tok::Ident(name), name_pos) = p.next() else {
        unreachable!("caller checked for an identifier");
    };
    p.expect(Tok::LParen, "`(` after constructor name")?;

    let mut keywords: Vec<(String, Pos, Literal, Pos)> = Vec::new();
    loop {
        if p.peek().0 == Tok::RParen {
            p.next();
            break;
        }
        let (tok, pos) = p.peek().clone();
        let key = match (&tok, p.peek2()) {
            (Tok::Ident(k), Tok::Equals) => k.clone(),
            _ => {
                return Err(err(
                    pos,
                    ParseErrorKind::Positional,
                    "positional arguments are not allowed; use `role=value`",
                ))
            }
        };
        p.next();
        p.next();
        if keywords.iter().any(|(k, ..)| *k == key) {
            return Err(err(
                pos,
                ParseErrorKind::DuplicateKey,
                format!("duplicate keyword `{key}`"),
            ));
        }
        let (value, value_pos) = p.literal(0)?;
        keywords.push((key, pos, value, value_pos));
        match p.peek().0 {
            Tok::Comma => {
                p.next();
            }
            Tok::RParen => {}
            _ => return Err(p.unexpected("`,` or `)`")),
        }
    }

    let generic = name == GENERIC_CONSTRUCTOR && registry.is_none_or(|r| r.get(&name).is_none());
    if generic {
        return event_from_fields(keywords, name_pos, SurfaceForm::Constructor);
    }

    let mut trigger = None;
    let mut arguments = BTreeMap::new();
    for (key, _, value, value_pos) in keywords {
        if key == MENTION_FIELD {
            trigger = Some(string_field(value, value_pos, MENTION_FIELD)?);
        } else {
            arguments.insert(key, argument_values(value, value_pos)?);
        }
    }
    let trigger = trigger.ok_or_else(|| {
        err(
            name_pos,
            ParseErrorKind::MissingField,
            format!("missing keyword `{MENTION_FIELD}` in `{name}(...)`"),
        )
    })?;
    Ok(ParsedEvent {
        event: EventObject {
            event_type: name,
            trigger,
            arguments,
        },
        form: SurfaceForm::Constructor,
        extra_fields: Vec::new(),
    })
}

/// Parse generated code in either surface form.
///
/// The registry only disambiguates the generic `EventObject(...)`
/// constructor; unknown type names still parse and fail later in verification.
pub fn parse_event(source: &str, registry: Option<&SchemaRegistry>) -> Result<ParsedEvent, ParseError> {
    let mut p = Parser::new(source)?;
    let parsed = match p.peek() {
        (Tok::LBrace, pos) => {
            let open = *pos;
            let (lit, _) = p.literal(0)?;
            let Literal::Object(fields) = lit else {
                unreachable!("`{{` always yields an object");
            };
            event_from_fields(fields, open, SurfaceForm::Object)?
        }
        (Tok::Ident(_), _) if *p.peek2() == Tok::LParen => parse_constructor(&mut p, registry)?,
        _ => return Err(p.unexpected("a constructor call `Type(...)` or an event object `{...}`")),
    };
    p.expect_eof()?;
    Ok(parsed)
}

/// Parse generated code into a [`CodeObject`].
pub fn parse_event_code(source: &str, registry: &SchemaRegistry, origin: Option<TriggerHypothesis>) -> CodeObject {
    CodeObject {
        raw_source: source.to_owned(),
        parsed: parse_event(source, Some(registry)),
        origin_hypothesis: origin,
    }
}

fn write_str_literal(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => {
                out.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Str(s) => write_str_literal(out, s),
        Value::Int(i) => out.push_str(&i.to_string()),
        // `{:?}` always keeps a `.` or exponent, so floats re-parse as floats.
        Value::Num(n) if n.is_finite() => out.push_str(&format!("{n:?}")),
        Value::Num(_) => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
    }
}

fn write_values(out: &mut String, values: &[Value]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_value(out, v);
    }
    out.push(']');
}

/// Argument roles in canonical order: schema declaration order first, then
/// roles unknown to the schema lexicographically.
pub fn canonical_roles<'a>(event: &'a EventObject, schema: Option<&EventSchema>) -> Vec<&'a str> {
    let mut roles: Vec<&str> = event.arguments.keys().map(String::as_str).collect();
    roles.sort_by_key(|r| {
        let idx = schema.and_then(|s| s.role_index(r)).unwrap_or(usize::MAX);
        (idx, *r)
    });
    roles
}

/// Canonical single-line object-notation text for an event.
pub fn serialize_event(event: &EventObject, schema: Option<&EventSchema>) -> String {
    let mut out = String::from("{\"event_type\": ");
    write_str_literal(&mut out, &event.event_type);
    out.push_str(", \"trigger\": ");
    write_str_literal(&mut out, &event.trigger);
    out.push_str(", \"arguments\": {");
    for (i, role) in canonical_roles(event, schema).into_iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_str_literal(&mut out, role);
        out.push_str(": ");
        write_values(&mut out, &event.arguments[role]);
    }
    out.push_str("}}");
    out
}

/// Constructor-call rendering of an event, when its names are expressible
/// as identifiers.
pub fn render_constructor(event: &EventObject, schema: Option<&EventSchema>) -> Option<String> {
    if !is_event_type_name(&event.event_type) || event.event_type == GENERIC_CONSTRUCTOR {
        return None;
    }
    let mut out = String::new();
    out.push_str(&event.event_type);
    out.push_str("(mention=");
    write_str_literal(&mut out, &event.trigger);
    for role in canonical_roles(event, schema) {
        if !is_role_name(role) || role == MENTION_FIELD {
            return None;
        }
        out.push_str(", ");
        out.push_str(role);
        out.push('=');
        write_values(&mut out, &event.arguments[role]);
    }
    out.push(')');
    Some(out)
}
