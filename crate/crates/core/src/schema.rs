//! Event schemas and their class-definition ("schema-as-code") rendering.
//!
//! A schema is rendered as a dataclass listing, a `mention` field followed by
//! one annotated field per role:
//!
//! ```text
//! @dataclass
//! class Databreach:
//!     mention: str
//!     tool: List
//!     victim: List
//! ```
//!
//! The same text is embedded in the planning and coding prompts and can be
//! parsed back with [`parse_schema_code`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::Deserialize;

/// Field that carries the trigger span in rendered schemas and constructor calls.
pub const MENTION_FIELD: &str = "mention";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueType {
    String,
    Integer,
    Number,
    Boolean,
}

impl ValueType {
    pub const ALL: [ValueType; 4] = [
        ValueType::String,
        ValueType::Integer,
        ValueType::Number,
        ValueType::Boolean,
    ];

    /// Ontology-file spelling.
    pub fn name(self) -> &'static str {
        match self {
            ValueType::String => "string",
            ValueType::Integer => "integer",
            ValueType::Number => "number",
            ValueType::Boolean => "boolean",
        }
    }

    /// Annotation spelling used in rendered class text.
    pub fn annotation(self) -> &'static str {
        match self {
            ValueType::String => "str",
            ValueType::Integer => "int",
            ValueType::Number => "float",
            ValueType::Boolean => "bool",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    fn from_annotation(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.annotation() == name)
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Multiplicity {
    /// Zero or more values.
    List,
    /// At most one value.
    OptionalScalar,
    /// Exactly one value.
    RequiredScalar,
}

impl Multiplicity {
    pub const ALL: [Multiplicity; 3] = [
        Multiplicity::List,
        Multiplicity::OptionalScalar,
        Multiplicity::RequiredScalar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Multiplicity::List => "list",
            Multiplicity::OptionalScalar => "optional-scalar",
            Multiplicity::RequiredScalar => "required-scalar",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Whether `count` values satisfy this multiplicity.
    pub fn admits(self, count: usize) -> bool {
        match self {
            Multiplicity::List => true,
            Multiplicity::OptionalScalar => count <= 1,
            Multiplicity::RequiredScalar => count == 1,
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoleSpec {
    pub name: String,
    pub value_type: ValueType,
    pub multiplicity: Multiplicity,
}

impl RoleSpec {
    /// A list-of-string role, the default when an ontology gives no annotation.
    pub fn list(name: impl Into<String>) -> Self {
        Self::new(name, ValueType::String, Multiplicity::List)
    }

    pub fn new(name: impl Into<String>, value_type: ValueType, multiplicity: Multiplicity) -> Self {
        Self {
            name: name.into(),
            value_type,
            multiplicity,
        }
    }

    /// Type annotation as rendered in class text.
    pub fn annotation(&self) -> String {
        match (self.multiplicity, self.value_type) {
            (Multiplicity::List, ValueType::String) => "List".to_string(),
            (Multiplicity::List, t) => format!("List[{}]", t.annotation()),
            (Multiplicity::OptionalScalar, t) => format!("Optional[{}]", t.annotation()),
            (Multiplicity::RequiredScalar, t) => t.annotation().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventSchema {
    event_type: String,
    roles: Vec<RoleSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("malformed ontology: {0}")]
    Malformed(String),
    #[error("invalid event type name `{0}`")]
    InvalidEventType(String),
    #[error("invalid role name `{role}` in event type `{event_type}`")]
    InvalidRoleName { event_type: String, role: String },
    #[error("duplicate event type `{0}`")]
    DuplicateEventType(String),
    #[error("duplicate role `{role}` in event type `{event_type}`")]
    DuplicateRole { event_type: String, role: String },
    #[error("unknown value_type `{value_type}` for role `{role}` in event type `{event_type}`")]
    UnknownValueType {
        event_type: String,
        role: String,
        value_type: String,
    },
    #[error("unknown multiplicity `{multiplicity}` for role `{role}` in event type `{event_type}`")]
    UnknownMultiplicity {
        event_type: String,
        role: String,
        multiplicity: String,
    },
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: unknown field type `{annotation}`")]
    UnknownFieldType {
        line: usize,
        column: usize,
        annotation: String,
    },
    #[error("class `{0}` has no `mention` field")]
    MissingMention(String),
}

pub(crate) fn is_role_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Event type names additionally admit `:` and `.` so ontologies such as
/// `Conflict:Attack` survive rendering. A `:` must be followed by a letter
/// or `_`.
pub(crate) fn is_event_type_name(name: &str) -> bool {
    let bytes = name.as_bytes();
    let word_start = |b: Option<&u8>| matches!(b, Some(c) if c.is_ascii_alphabetic() || *c == b'_');
    word_start(bytes.first())
        && bytes.iter().enumerate().all(|(i, &c)| match c {
            b':' => word_start(bytes.get(i + 1)),
            c => c.is_ascii_alphanumeric() || matches!(c, b'_' | b'-' | b'.'),
        })
}

impl EventSchema {
    pub fn new(event_type: impl Into<String>, roles: Vec<RoleSpec>) -> Result<Self, SchemaError> {
        let event_type = event_type.into();
        if !is_event_type_name(&event_type) {
            return Err(SchemaError::InvalidEventType(event_type));
        }
        for (i, role) in roles.iter().enumerate() {
            if !is_role_name(&role.name) || role.name == MENTION_FIELD {
                return Err(SchemaError::InvalidRoleName {
                    event_type,
                    role: role.name.clone(),
                });
            }
            if roles[..i].iter().any(|r| r.name == role.name) {
                return Err(SchemaError::DuplicateRole {
                    event_type,
                    role: role.name.clone(),
                });
            }
        }
        Ok(Self { event_type, roles })
    }

    pub fn event_type(&self) -> &str {
        &self.event_type
    }

    pub fn roles(&self) -> &[RoleSpec] {
        &self.roles
    }

    pub fn role(&self, name: &str) -> Option<&RoleSpec> {
        self.roles.iter().find(|r| r.name == name)
    }

    /// Declaration index of a role.
    pub fn role_index(&self, name: &str) -> Option<usize> {
        self.roles.iter().position(|r| r.name == name)
    }
}

/// Immutable set of schemas keyed by event type, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemaRegistry {
    schemas: Vec<EventSchema>,
    index: BTreeMap<String, usize>,
}

impl SchemaRegistry {
    pub fn new(schemas: Vec<EventSchema>) -> Result<Self, SchemaError> {
        let mut index = BTreeMap::new();
        for (i, schema) in schemas.iter().enumerate() {
            if index.insert(schema.event_type.clone(), i).is_some() {
                return Err(SchemaError::DuplicateEventType(schema.event_type.clone()));
            }
        }
        Ok(Self { schemas, index })
    }

    pub fn get(&self, event_type: &str) -> Option<&EventSchema> {
        self.index.get(event_type).map(|&i| &self.schemas[i])
    }

    pub fn schemas(&self) -> &[EventSchema] {
        &self.schemas
    }

    pub fn iter(&self) -> core::slice::Iter<'_, EventSchema> {
        self.schemas.iter()
    }

    pub fn len(&self) -> usize {
        self.schemas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemas.is_empty()
    }
}

impl<'a> IntoIterator for &'a SchemaRegistry {
    type Item = &'a EventSchema;
    type IntoIter = core::slice::Iter<'a, EventSchema>;

    fn into_iter(self) -> Self::IntoIter {
        self.schemas.iter()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OntologyEntry {
    event_type: String,
    #[serde(default)]
    roles: Vec<OntologyRole>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OntologyRole {
    name: String,
    value_type: Option<String>,
    multiplicity: Option<String>,
}

/// Load an ontology document: a JSON array of
/// `{"event_type", "roles": [{"name", "value_type"?, "multiplicity"?}]}`.
///
/// A document that is empty or whitespace-only yields an empty registry.
pub fn load_ontology(source: &[u8]) -> Result<SchemaRegistry, SchemaError> {
    if source.iter().all(u8::is_ascii_whitespace) {
        return Ok(SchemaRegistry::default());
    }
    let entries: Vec<OntologyEntry> =
        serde_json::from_slice(source).map_err(|e| SchemaError::Malformed(e.to_string()))?;

    let mut schemas = Vec::with_capacity(entries.len());
    for entry in entries {
        if schemas.iter().any(|s: &EventSchema| s.event_type == entry.event_type) {
            return Err(SchemaError::DuplicateEventType(entry.event_type));
        }
        let mut roles = Vec::with_capacity(entry.roles.len());
        for role in entry.roles {
            let value_type = match role.value_type.as_deref() {
                None => ValueType::String,
                Some(name) => ValueType::from_name(name).ok_or_else(|| SchemaError::UnknownValueType {
                    event_type: entry.event_type.clone(),
                    role: role.name.clone(),
                    value_type: name.to_string(),
                })?,
            };
            let multiplicity = match role.multiplicity.as_deref() {
                None => Multiplicity::List,
                Some(name) => Multiplicity::from_name(name).ok_or_else(|| SchemaError::UnknownMultiplicity {
                    event_type: entry.event_type.clone(),
                    role: role.name.clone(),
                    multiplicity: name.to_string(),
                })?,
            };
            roles.push(RoleSpec::new(role.name, value_type, multiplicity));
        }
        schemas.push(EventSchema::new(entry.event_type, roles)?);
    }
    SchemaRegistry::new(schemas)
}

/// Serialize a registry back into the ontology file format.
pub fn ontology_to_json(registry: &SchemaRegistry) -> String {
    use serde_json::{json, Value};
    let doc: Vec<Value> = registry
        .iter()
        .map(|s| {
            let roles: Vec<Value> = s
                .roles
                .iter()
                .map(|r| {
                    json!({
                        "name": r.name,
                        "value_type": r.value_type.name(),
                        "multiplicity": r.multiplicity.name(),
                    })
                })
                .collect();
            json!({ "event_type": s.event_type, "roles": roles })
        })
        .collect();
    serde_json::to_string_pretty(&doc).unwrap_or_default()
}

/// Render a schema as dataclass source text. Deterministic; the output ends
/// without a trailing newline.
pub fn render_schema_as_code(schema: &EventSchema) -> String {
    let mut out = String::new();
    out.push_str("@dataclass\n");
    out.push_str("class ");
    out.push_str(&schema.event_type);
    out.push_str(":\n    ");
    out.push_str(MENTION_FIELD);
    out.push_str(": str");
    for role in &schema.roles {
        out.push_str("\n    ");
        out.push_str(&role.name);
        out.push_str(": ");
        out.push_str(&role.annotation());
    }
    out
}

/// Render every schema in the registry, separated by blank lines.
pub fn render_registry(schemas: &[&EventSchema]) -> String {
    let parts: Vec<String> = schemas.iter().map(|s| render_schema_as_code(s)).collect();
    parts.join("\n\n")
}

/// Parse a single class definition produced by [`render_schema_as_code`]
/// (or written by hand in the same dialect).
pub fn parse_schema_code(source: &str) -> Result<EventSchema, SchemaError> {
    let mut schemas = parse_schema_definitions(source)?;
    match schemas.len() {
        1 => Ok(schemas.remove(0)),
        0 => Err(SchemaError::Syntax {
            line: 1,
            column: 1,
            message: "expected a class definition".to_string(),
        }),
        _ => Err(SchemaError::Syntax {
            line: 1,
            column: 1,
            message: "expected exactly one class definition".to_string(),
        }),
    }
}

/// Parse a block of class definitions, as embedded in the planning prompt.
pub fn parse_schema_definitions(source: &str) -> Result<Vec<EventSchema>, SchemaError> {
    struct Pending {
        name: String,
        has_mention: bool,
        roles: Vec<RoleSpec>,
    }

    fn finish(p: Pending, out: &mut Vec<EventSchema>) -> Result<(), SchemaError> {
        if !p.has_mention {
            return Err(SchemaError::MissingMention(p.name));
        }
        out.push(EventSchema::new(p.name, p.roles)?);
        Ok(())
    }

    let syntax = |line: usize, column: usize, message: &str| SchemaError::Syntax {
        line,
        column,
        message: message.to_string(),
    };

    let mut out = Vec::new();
    let mut current: Option<Pending> = None;
    let mut pending_decorator = false;

    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed_end = content.trim_end();
        if trimmed_end.trim_start().is_empty() {
            continue;
        }
        let indent = trimmed_end.len() - trimmed_end.trim_start().len();
        let body = trimmed_end.trim_start();
        let col = indent + 1;

        if indent == 0 {
            if body == "@dataclass" {
                if pending_decorator {
                    return Err(syntax(line_no, col, "repeated decorator"));
                }
                pending_decorator = true;
                continue;
            }
            if let Some(rest) = body.strip_prefix("class ") {
                if let Some(p) = current.take() {
                    finish(p, &mut out)?;
                }
                pending_decorator = false;
                let header = rest
                    .strip_suffix(':')
                    .ok_or_else(|| syntax(line_no, trimmed_end.len() + 1, "expected `:` after class name"))?
                    .trim_end();
                let name = match header.find('(') {
                    Some(open) => {
                        if !header.ends_with(')') {
                            return Err(syntax(line_no, 7 + open, "unbalanced parentheses in class header"));
                        }
                        header[..open].trim_end()
                    }
                    None => header,
                };
                if !is_event_type_name(name) {
                    return Err(syntax(line_no, 7, "invalid class name"));
                }
                current = Some(Pending {
                    name: name.to_string(),
                    has_mention: false,
                    roles: Vec::new(),
                });
                continue;
            }
            if body.starts_with("from ") || body.starts_with("import ") {
                continue;
            }
            return Err(syntax(line_no, col, "expected `class` definition"));
        }

        let Some(pending) = current.as_mut() else {
            return Err(syntax(line_no, col, "field outside of a class body"));
        };
        if pending_decorator {
            return Err(syntax(line_no, col, "decorator must precede a class"));
        }
        if body == "pass" {
            continue;
        }
        let colon = body
            .find(':')
            .ok_or_else(|| syntax(line_no, col + body.len(), "expected `name: type`"))?;
        let field = body[..colon].trim_end();
        let annotation = body[colon + 1..].trim();
        let ann_col = col + colon + 1 + (body[colon + 1..].len() - body[colon + 1..].trim_start().len());
        if !is_role_name(field) {
            return Err(syntax(line_no, col, "invalid field name"));
        }
        if annotation.is_empty() {
            return Err(syntax(line_no, ann_col, "missing type annotation"));
        }
        if annotation.contains('=') {
            return Err(syntax(line_no, ann_col, "field defaults are not supported"));
        }
        let unknown = || SchemaError::UnknownFieldType {
            line: line_no,
            column: ann_col,
            annotation: annotation.to_string(),
        };
        if field == MENTION_FIELD {
            if pending.has_mention {
                return Err(syntax(line_no, col, "duplicate `mention` field"));
            }
            if annotation != "str" {
                return Err(unknown());
            }
            pending.has_mention = true;
            continue;
        }
        let (value_type, multiplicity) = parse_annotation(annotation).ok_or_else(unknown)?;
        if pending.roles.iter().any(|r| r.name == field) {
            return Err(SchemaError::DuplicateRole {
                event_type: pending.name.clone(),
                role: field.to_string(),
            });
        }
        pending.roles.push(RoleSpec::new(field, value_type, multiplicity));
    }

    if pending_decorator {
        return Err(syntax(source.lines().count().max(1), 1, "decorator without class"));
    }
    if let Some(p) = current.take() {
        finish(p, &mut out)?;
    }
    Ok(out)
}

fn parse_annotation(annotation: &str) -> Option<(ValueType, Multiplicity)> {
    let compact: String = annotation.chars().filter(|c| !c.is_whitespace()).collect();
    if compact == "List" || compact == "list" {
        return Some((ValueType::String, Multiplicity::List));
    }
    let inner = |prefix: &str| {
        compact
            .strip_prefix(prefix)
            .and_then(|r| r.strip_suffix(']'))
            .and_then(ValueType::from_annotation)
    };
    if let Some(t) = inner("List[").or_else(|| inner("list[")) {
        return Some((t, Multiplicity::List));
    }
    if let Some(t) = inner("Optional[") {
        return Some((t, Multiplicity::OptionalScalar));
    }
    ValueType::from_annotation(&compact).map(|t| (t, Multiplicity::RequiredScalar))
}
