//! Deterministic three-stage verification of generated event code.
//!
//! * T1 semantic: the trigger occurs in the text as a contiguous token
//!   sequence (and, in llm-assisted mode, the judge accepts it).
//! * T2 type: every argument role exists in the schema, every value has the
//!   role's type and every role's value count fits its multiplicity.
//! * T3 structural: the code parsed, has exactly the three event fields and
//!   serializes to text that parses back to the same event.
//!
//! Unparseable code short-circuits to a T3 diagnostic; otherwise the checks
//! run T1, T2, T3 and the first failure is reported.

use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;

use crate::agents::{judge_semantic_compat, BackendError, ChatBackend};
use crate::lang::{parse_event, serialize_event, CodeObject, EventObject, ParsedEvent, Value, EVENT_FIELDS};
use crate::schema::{EventSchema, ValueType};
use crate::text::find_token_sequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Check {
    Semantic,
    Type,
    Structural,
}

impl Check {
    pub const ORDER: [Check; 3] = [Check::Semantic, Check::Type, Check::Structural];

    pub fn label(self) -> &'static str {
        match self {
            Check::Semantic => "T1",
            Check::Type => "T2",
            Check::Structural => "T3",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub failed_check: Check,
    pub message: String,
    /// Role name, field name or span the failure points at.
    pub locus: String,
}

impl Diagnostic {
    pub fn new(check: Check, message: impl Into<String>, locus: impl Into<String>) -> Self {
        Self {
            failed_check: check,
            message: message.into(),
            locus: locus.into(),
        }
    }
}

/// Single-line rendering `[T?] <message> (at <locus>)`, used verbatim in
/// patch prompts.
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let message: String = self
            .message
            .chars()
            .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
            .collect();
        write!(f, "[{}] {} (at {})", self.failed_check, message, self.locus)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationResult {
    pub verdict: bool,
    pub diagnostic: Option<Diagnostic>,
}

impl VerificationResult {
    pub fn pass() -> Self {
        Self {
            verdict: true,
            diagnostic: None,
        }
    }

    pub fn fail(diagnostic: Diagnostic) -> Self {
        Self {
            verdict: false,
            diagnostic: Some(diagnostic),
        }
    }
}

#[derive(Clone, Copy)]
pub enum VerificationMode<'a> {
    /// T1 is the lexical occurrence test only.
    Strict,
    /// T1 additionally asks the judge; an unparseable judge reply fails.
    LlmAssisted(&'a dyn ChatBackend),
}

impl fmt::Debug for VerificationMode<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerificationMode::Strict => f.write_str("Strict"),
            VerificationMode::LlmAssisted(_) => f.write_str("LlmAssisted"),
        }
    }
}

pub type CheckOutcome = Result<(), Diagnostic>;

/// The three checks as a suite, so the verdict logic can be exercised with
/// stubbed outcomes.
pub trait CheckSuite {
    /// `Some` when the source failed to parse.
    fn parse_failure(&self) -> Option<Diagnostic>;
    fn semantic(&self) -> Result<CheckOutcome, BackendError>;
    fn types(&self) -> CheckOutcome;
    fn structure(&self) -> CheckOutcome;
}

/// Run a suite in the fixed order and stop at the first failure.
pub fn run_suite<S: CheckSuite + ?Sized>(suite: &S) -> Result<VerificationResult, BackendError> {
    if let Some(d) = suite.parse_failure() {
        return Ok(VerificationResult::fail(d));
    }
    let outcome = suite
        .semantic()?
        .and_then(|()| suite.types())
        .and_then(|()| suite.structure());
    Ok(match outcome {
        Ok(()) => VerificationResult::pass(),
        Err(d) => VerificationResult::fail(d),
    })
}

fn parse_failure_diagnostic(code: &CodeObject) -> Option<Diagnostic> {
    code.parsed.as_ref().err().map(|e| {
        Diagnostic::new(
            Check::Structural,
            format!("code does not compile: {e}"),
            format!("line {}, column {}", e.line, e.column),
        )
    })
}

/// T1 over a parsed event.
pub fn check_semantic_event(
    event: &EventObject,
    text: &str,
    mode: VerificationMode<'_>,
) -> Result<CheckOutcome, BackendError> {
    if find_token_sequence(text, &event.trigger).is_none() {
        return Ok(Err(Diagnostic::new(
            Check::Semantic,
            "trigger not found in text",
            format!("trigger \"{}\"", event.trigger),
        )));
    }
    if let VerificationMode::LlmAssisted(backend) = mode {
        let verdict = judge_semantic_compat(backend, &event.trigger, &event.event_type, text)?;
        if !verdict.compatible {
            let message = if verdict.unparseable {
                format!("could not confirm that the trigger evokes {}", event.event_type)
            } else {
                format!("trigger is not semantically compatible with {}", event.event_type)
            };
            return Ok(Err(Diagnostic::new(
                Check::Semantic,
                message,
                format!("trigger \"{}\"", event.trigger),
            )));
        }
    }
    Ok(Ok(()))
}

pub fn check_semantic(code: &CodeObject, text: &str, mode: VerificationMode<'_>) -> Result<CheckOutcome, BackendError> {
    match &code.parsed {
        Ok(p) => check_semantic_event(&p.event, text, mode),
        Err(_) => Ok(Err(parse_failure_diagnostic(code).expect("parse error present"))),
    }
}

fn value_matches(value: &Value, expected: ValueType) -> bool {
    matches!(
        (value, expected),
        (Value::Str(_), ValueType::String)
            | (Value::Int(_), ValueType::Integer)
            | (Value::Int(_) | Value::Num(_), ValueType::Number)
            | (Value::Bool(_), ValueType::Boolean)
    )
}

/// T2 over a parsed event. Roles are visited in the event's canonical order
/// (schema declaration order, then unknown roles lexicographically), and
/// required roles missing from the event are reported after that.
pub fn check_types_event(event: &EventObject, schema: &EventSchema) -> CheckOutcome {
    if event.event_type != schema.event_type() {
        return Err(Diagnostic::new(
            Check::Type,
            format!(
                "event type \"{}\" does not match schema {}",
                event.event_type,
                schema.event_type()
            ),
            "event_type",
        ));
    }
    for role in crate::lang::canonical_roles(event, Some(schema)) {
        let values = &event.arguments[role];
        let Some(spec) = schema.role(role) else {
            return Err(Diagnostic::new(
                Check::Type,
                format!(
                    "hallucinated role: \"{role}\" is not defined for {}",
                    schema.event_type()
                ),
                role,
            ));
        };
        if let Some(v) = values.iter().find(|v| !value_matches(v, spec.value_type)) {
            return Err(Diagnostic::new(
                Check::Type,
                format!(
                    "the value {} for {role} is not of type {}",
                    v.to_literal(),
                    spec.value_type.annotation()
                ),
                role,
            ));
        }
        if !spec.multiplicity.admits(values.len()) {
            return Err(Diagnostic::new(
                Check::Type,
                format!(
                    "{role} takes {} but got {} values",
                    multiplicity_phrase(spec.multiplicity),
                    values.len()
                ),
                role,
            ));
        }
    }
    for spec in schema.roles() {
        if !event.arguments.contains_key(&spec.name) && !spec.multiplicity.admits(0) {
            return Err(Diagnostic::new(
                Check::Type,
                format!("{} takes exactly one value but got 0 values", spec.name),
                spec.name.as_str(),
            ));
        }
    }
    Ok(())
}

fn multiplicity_phrase(m: crate::schema::Multiplicity) -> &'static str {
    match m {
        crate::schema::Multiplicity::List => "any number of values",
        crate::schema::Multiplicity::OptionalScalar => "at most one value",
        crate::schema::Multiplicity::RequiredScalar => "exactly one value",
    }
}

pub fn check_types(code: &CodeObject, schema: &EventSchema) -> CheckOutcome {
    match &code.parsed {
        Ok(p) => check_types_event(&p.event, schema),
        Err(_) => Err(parse_failure_diagnostic(code).expect("parse error present")),
    }
}

/// T3 over a parsed event.
pub fn check_structure_parsed(parsed: &ParsedEvent, schema: Option<&EventSchema>) -> CheckOutcome {
    if let Some(extra) = parsed.extra_fields.first() {
        return Err(Diagnostic::new(
            Check::Structural,
            format!(
                "unexpected field \"{extra}\"; an event has exactly the fields {}",
                EVENT_FIELDS.join(", ")
            ),
            extra.as_str(),
        ));
    }
    let text = serialize_event(&parsed.event, schema);
    match parse_event(&text, None) {
        Ok(back) if back.event == parsed.event => Ok(()),
        _ => Err(Diagnostic::new(
            Check::Structural,
            "event object does not serialize to an equivalent object",
            "arguments",
        )),
    }
}

pub fn check_structure(code: &CodeObject) -> CheckOutcome {
    if let Some(d) = parse_failure_diagnostic(code) {
        return Err(d);
    }
    check_structure_parsed(code.parsed.as_ref().expect("parsed"), None)
}

struct CodeSuite<'a> {
    code: &'a CodeObject,
    text: &'a str,
    schema: &'a EventSchema,
    mode: VerificationMode<'a>,
}

impl CheckSuite for CodeSuite<'_> {
    fn parse_failure(&self) -> Option<Diagnostic> {
        parse_failure_diagnostic(self.code)
    }

    fn semantic(&self) -> Result<CheckOutcome, BackendError> {
        check_semantic(self.code, self.text, self.mode)
    }

    fn types(&self) -> CheckOutcome {
        check_types(self.code, self.schema)
    }

    fn structure(&self) -> CheckOutcome {
        match &self.code.parsed {
            Ok(p) => check_structure_parsed(p, Some(self.schema)),
            Err(_) => check_structure(self.code),
        }
    }
}

/// Verify generated code against the text and the hypothesis' schema.
///
/// Errors only when the llm-assisted judge's backend fails; every
/// verification failure is a `verdict: false` result.
pub fn verify(
    code: &CodeObject,
    text: &str,
    schema: &EventSchema,
    mode: VerificationMode<'_>,
) -> Result<VerificationResult, BackendError> {
    run_suite(&CodeSuite {
        code,
        text,
        schema,
        mode,
    })
}

/// Serialize a verification result as a JSON object fragment.
pub fn result_to_json(result: &VerificationResult) -> String {
    match &result.diagnostic {
        None => "{\"verdict\": true, \"diagnostic\": null}".to_string(),
        Some(d) => format!(
            "{{\"verdict\": false, \"diagnostic\": {}}}",
            serde_json::to_string(&d.to_string()).unwrap_or_default()
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_event_code;
    use crate::schema::{load_ontology, parse_schema_code, SchemaRegistry};
    use alloc::vec;

    const PATCH_SCHEMA: &str = "@dataclass\nclass PatchVulnerability:\n    mention: str\n    patch: List\n    cve: List\n    time: List\n    vulnerable_system: List";
    const PATCH_TEXT: &str = "On Tuesday the company patched a vulnerability in its web server.";

    fn registry() -> SchemaRegistry {
        SchemaRegistry::new(vec![parse_schema_code(PATCH_SCHEMA).unwrap()]).unwrap()
    }

    fn code(src: &str) -> CodeObject {
        parse_event_code(src, &registry(), None)
    }

    #[test]
    fn semantic_strict() {
        let ok = code("PatchVulnerability(mention=\"patched\")");
        assert_eq!(
            check_semantic(&ok, PATCH_TEXT, VerificationMode::Strict).unwrap(),
            Ok(())
        );
        let missing = code("PatchVulnerability(mention=\"exploded\")");
        let d = check_semantic(&missing, PATCH_TEXT, VerificationMode::Strict)
            .unwrap()
            .unwrap_err();
        assert_eq!(d.failed_check, Check::Semantic);
        assert!(d.message.contains("trigger not found in text"));
    }

    #[test]
    fn semantic_tokens() {
        let text = "Officials confirmed a data breach at the clinic; the databreach tracker updated.";
        let multi = code("PatchVulnerability(mention=\"data breach\")");
        assert!(check_semantic(&multi, text, VerificationMode::Strict).unwrap().is_ok());
        let inner = code("PatchVulnerability(mention=\"breach\")");
        assert!(
            check_semantic(&inner, "the databreach tracker", VerificationMode::Strict)
                .unwrap()
                .is_err()
        );
    }

    #[test]
    fn integer_vulnerable_system_is_type_error() {
        let c = code(crate::lang::tests_support::PATCH_OBJECT);
        let schema = parse_schema_code(PATCH_SCHEMA).unwrap();
        let d = check_types(&c, &schema).unwrap_err();
        assert_eq!(d.failed_check, Check::Type);
        assert_eq!(d.locus, "vulnerable_system");
        assert_eq!(
            d.to_string(),
            "[T2] the value 1234 for vulnerable_system is not of type str (at vulnerable_system)"
        );
    }

    #[test]
    fn empty_lists_pass_types() {
        let schema = parse_schema_code(PATCH_SCHEMA).unwrap();
        let c = code("PatchVulnerability(mention=\"patched\", patch=[], cve=[], time=[], vulnerable_system=[])");
        assert_eq!(check_types(&c, &schema), Ok(()));
    }

    #[test]
    fn hallucinated_role_and_multiplicity() {
        let reg = load_ontology(
            br#"[{"event_type": "Attack", "roles": [
                {"name": "attacker", "multiplicity": "required-scalar"},
                {"name": "count", "value_type": "integer", "multiplicity": "optional-scalar"},
                {"name": "score", "value_type": "number"}]}]"#,
        )
        .unwrap();
        let schema = reg.get("Attack").unwrap();
        let check = |src: &str| check_types(&parse_event_code(src, &reg, None), schema);

        assert_eq!(
            check("Attack(mention=\"hit\", attacker=\"x\", count=2, score=[1, 2.5])"),
            Ok(())
        );
        let d = check("Attack(mention=\"hit\", attacker=\"x\", weapon=[\"gun\"])").unwrap_err();
        assert!(d.message.starts_with("hallucinated role"), "{d}");
        assert_eq!(
            check("Attack(mention=\"hit\", attacker=[\"x\", \"y\"])")
                .unwrap_err()
                .locus,
            "attacker"
        );
        assert_eq!(check("Attack(mention=\"hit\")").unwrap_err().locus, "attacker");
        assert_eq!(
            check("Attack(mention=\"hit\", attacker=\"x\", count=[1, 2])")
                .unwrap_err()
                .locus,
            "count"
        );
        assert_eq!(
            check("Attack(mention=\"hit\", attacker=\"x\", count=1.5)")
                .unwrap_err()
                .locus,
            "count"
        );
        let d = check("Other(mention=\"hit\", attacker=\"x\")").unwrap_err();
        assert_eq!(d.locus, "event_type");
    }

    #[test]
    fn structure_checks() {
        assert_eq!(check_structure(&code(crate::lang::tests_support::PATCH_OBJECT)), Ok(()));
        let extra = code("{\"event_type\": \"PatchVulnerability\", \"trigger\": \"patched\", \"arguments\": {}, \"confidence\": 0.9}");
        let d = check_structure(&extra).unwrap_err();
        assert!(d.message.starts_with("unexpected field"));
        assert_eq!(d.locus, "confidence");
        let broken = code("PatchVulnerability(mention=\"patched\"");
        let d = check_structure(&broken).unwrap_err();
        assert_eq!(d.failed_check, Check::Structural);
        assert!(d.message.contains("line 1, column 19"), "{d}");
    }

    #[test]
    fn verify_orders_checks() {
        let schema = parse_schema_code(PATCH_SCHEMA).unwrap();
        let run = |src: &str| verify(&code(src), PATCH_TEXT, &schema, VerificationMode::Strict).unwrap();

        let original = run(crate::lang::tests_support::PATCH_OBJECT);
        assert!(!original.verdict);
        assert_eq!(original.diagnostic.unwrap().failed_check, Check::Type);

        let fixed = crate::lang::tests_support::PATCH_OBJECT.replace("[1234]", "[\"1234\"]");
        assert_eq!(run(&fixed), VerificationResult::pass());

        let both = crate::lang::tests_support::PATCH_OBJECT.replace("\"patched\"", "\"exploded\"");
        assert_eq!(run(&both).diagnostic.unwrap().failed_check, Check::Semantic);

        let unparsed = run("PatchVulnerability(mention=\"exploded\", x=[[1]])");
        assert_eq!(unparsed.diagnostic.unwrap().failed_check, Check::Structural);
    }

    #[test]
    fn llm_mode_consults_judge() {
        use crate::agents::{prompts, ScriptedBackend};
        let schema = parse_schema_code(PATCH_SCHEMA).unwrap();
        let fp = prompts::semantic_judge("patched", "PatchVulnerability", PATCH_TEXT).fingerprint();
        let c = code("PatchVulnerability(mention=\"patched\")");

        let yes = ScriptedBackend::default().with_reply(fp.clone(), "yes");
        assert!(
            verify(&c, PATCH_TEXT, &schema, VerificationMode::LlmAssisted(&yes))
                .unwrap()
                .verdict
        );
        let garbage = ScriptedBackend::default().with_reply(fp, "maybe?");
        let r = verify(&c, PATCH_TEXT, &schema, VerificationMode::LlmAssisted(&garbage)).unwrap();
        assert_eq!(r.diagnostic.unwrap().failed_check, Check::Semantic);
        let none = ScriptedBackend::default();
        assert!(verify(&c, PATCH_TEXT, &schema, VerificationMode::LlmAssisted(&none)).is_err());
    }

    #[test]
    fn diagnostic_line_is_single_line() {
        let d = Diagnostic::new(Check::Structural, "a\nb", "x");
        assert_eq!(d.to_string(), "[T3] a b (at x)");
        assert_eq!(
            result_to_json(&VerificationResult::fail(d)),
            "{\"verdict\": false, \"diagnostic\": \"[T3] a b (at x)\"}"
        );
    }
}
