mod common;

use aec_core::agents::BackendError;
use aec_core::lang::parse_event_code;
use aec_core::verifier::{run_suite, verify, Check, CheckOutcome, CheckSuite, Diagnostic, VerificationMode};
use common::*;

struct Stub {
    parse_ok: bool,
    outcomes: [bool; 3],
}

fn outcome(ok: bool, check: Check) -> CheckOutcome {
    if ok {
        Ok(())
    } else {
        Err(Diagnostic::new(check, "stub failure", "stub"))
    }
}

impl CheckSuite for Stub {
    fn parse_failure(&self) -> Option<Diagnostic> {
        (!self.parse_ok).then(|| Diagnostic::new(Check::Structural, "code does not compile", "line 1, column 1"))
    }
    fn semantic(&self) -> Result<CheckOutcome, BackendError> {
        Ok(outcome(self.outcomes[0], Check::Semantic))
    }
    fn types(&self) -> CheckOutcome {
        outcome(self.outcomes[1], Check::Type)
    }
    fn structure(&self) -> CheckOutcome {
        outcome(self.outcomes[2], Check::Structural)
    }
}

#[test]
fn verdict_is_conjunction_and_first_failure_wins() {
    let order = [Check::Semantic, Check::Type, Check::Structural];
    for bits in 0..8u8 {
        let outcomes = [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
        let result = run_suite(&Stub {
            parse_ok: true,
            outcomes,
        })
        .unwrap();
        assert_eq!(result.verdict, outcomes.iter().all(|&b| b), "{outcomes:?}");
        let first_failure = outcomes.iter().position(|&b| !b).map(|i| order[i]);
        assert_eq!(result.diagnostic.map(|d| d.failed_check), first_failure, "{outcomes:?}");
    }
}

#[test]
fn parse_failure_short_circuits_to_structural() {
    for bits in 0..8u8 {
        let outcomes = [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
        let result = run_suite(&Stub {
            parse_ok: false,
            outcomes,
        })
        .unwrap();
        assert!(!result.verdict);
        assert_eq!(result.diagnostic.unwrap().failed_check, Check::Structural);
    }
}

#[test]
fn absent_trigger_reported_before_type_error() {
    let registry = patch_registry();
    let code = parse_event_code(
        r#"PatchVulnerability(mention="exploded", vulnerable_system=[1234])"#,
        &registry,
        None,
    );
    let schema = registry.get("PatchVulnerability").unwrap();
    let result = verify(&code, PATCH_TEXT, schema, VerificationMode::Strict).unwrap();
    let d = result.diagnostic.unwrap();
    assert_eq!(d.failed_check, Check::Semantic);
    assert_eq!(d.message, "trigger not found in text");
}

#[test]
fn parser_position_reaches_diagnostic() {
    let registry = patch_registry();
    let code = parse_event_code(
        "PatchVulnerability(mention=\"patched\",\n  time=[\"Tuesday\"",
        &registry,
        None,
    );
    let schema = registry.get("PatchVulnerability").unwrap();
    let d = verify(&code, PATCH_TEXT, schema, VerificationMode::Strict)
        .unwrap()
        .diagnostic
        .unwrap();
    assert_eq!(d.failed_check, Check::Structural);
    let err = code.parsed.unwrap_err();
    assert!(d.message.contains(&err.to_string()), "{d}");
    assert_eq!(err.line, 2);
}

#[test]
fn strict_mode_is_byte_deterministic() {
    let registry = patch_registry();
    let schema = registry.get("PatchVulnerability").unwrap();
    let render = || {
        let code = parse_event_code(BAD_PATCH, &registry, None);
        aec_core::verifier::result_to_json(&verify(&code, PATCH_TEXT, schema, VerificationMode::Strict).unwrap())
    };
    assert_eq!(render(), render());
}
