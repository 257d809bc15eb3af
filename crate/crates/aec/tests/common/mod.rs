#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aec_core::agents::{format_exemplars, prompts, ExemplarSet, PatchRequest, ScriptedBackend};
use aec_core::eval::load_corpus;
use aec_core::schema::{load_ontology, render_registry, render_schema_as_code, SchemaRegistry};

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn aec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aec"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

pub fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

/// Exemplar replies per schema, three samples each.
pub const EXEMPLARS: &[(&str, [&str; 3])] = &[
    (
        "Databreach",
        [
            "Hackers used malware to breach the company's database last Tuesday, stealing 10,000 customer records from its New York office.",
            "Intruders exfiltrated 2 million patient files from a Texas hospital network in March.",
            "\"A misconfigured server exposed the payroll data of 40,000 employees in Berlin on Monday.\"",
        ],
    ),
    (
        "Ransom",
        [
            "The gang demanded $5 million in bitcoin from the city of Atlanta on Thursday.",
            "Criminals asked the hospital for a ransom of 50 bitcoin last week.",
            "The gang demanded $5 million in bitcoin from the city of Atlanta on Thursday.",
        ],
    ),
    (
        "PatchVulnerability",
        [
            "On Monday the vendor patched CVE-2023-1111 in its mail server with an emergency update.",
            "The company released a fix for the router flaw on Friday.",
            "Engineers patched the database engine with version 4.2 last night.",
        ],
    ),
    (
        "Protest",
        [
            "Workers marched outside the parliament on Saturday.",
            "Students staged a sit-in at the university last spring.",
            "Farmers blocked the highway near Lyon on Tuesday.",
        ],
    ),
    (
        "Attack",
        [
            "Attackers struck the power grid with a worm in December.",
            "A botnet flooded the bank's website with traffic on Sunday.",
            "",
        ],
    ),
];

pub struct Coding {
    pub event_type: &'static str,
    pub trigger: &'static str,
    pub rationale: &'static str,
    /// Replies in order, each with the diagnostic its verification yields
    /// (`None` for the accepted reply).
    pub attempts: &'static [(&'static str, Option<&'static str>)],
}

pub struct DocScript {
    pub id: &'static str,
    /// First planning reply, then the reply to the format reminder if any.
    pub planning: &'static [&'static str],
    pub coding: &'static [Coding],
}

pub const SCRIPT: &[DocScript] = &[
    DocScript {
        id: "d1",
        planning: &[r#"[{"trigger": "demanded", "event_type": "Ransom"}, {"trigger": "infiltrating", "event_type": "Databreach"}]"#],
        coding: &[Coding {
            event_type: "Ransom",
            trigger: "demanded",
            rationale: "",
            attempts: &[(
                r#"Ransom(mention="demanded", attacker=["Hackers"], price=["a million dollar"], time=["Friday"])"#,
                None,
            )],
        }],
    },
    DocScript {
        id: "d2",
        planning: &[r#"[{"trigger": "patched", "event_type": "PatchVulnerability", "confidence": 0.9}]"#],
        coding: &[Coding {
            event_type: "PatchVulnerability",
            trigger: "patched",
            rationale: "",
            attempts: &[
                (
                    "{\n  \"event_type\": \"PatchVulnerability\",\n  \"trigger\": \"patched\",\n  \"arguments\": {\n    \"patch\": [\"security update\"],\n    \"cve\": [\"CVE-2021-1234\"],\n    \"time\": [\"Tuesday\"],\n    \"vulnerable_system\": [1234]\n  }\n}",
                    Some("[T2] the value 1234 for vulnerable_system is not of type str (at vulnerable_system)"),
                ),
                (
                    r#"{"event_type": "PatchVulnerability", "trigger": "patched", "arguments": {"time": ["Tuesday"], "vulnerable_system": ["web server"]}}"#,
                    None,
                ),
            ],
        }],
    },
    DocScript {
        id: "d3",
        planning: &[r#"```json
[{"trigger": "strike", "event_type": "Protest", "confidence": 0.95, "rationale": "a strike is a form of protest"}]
```"#],
        coding: &[Coding {
            event_type: "Protest",
            trigger: "strike",
            rationale: "a strike is a form of protest",
            attempts: &[
                (
                    r#"Protest(mention="strikes", protester=["Protesters"])"#,
                    Some(r#"[T1] trigger not found in text (at trigger "strikes")"#),
                ),
                (
                    "```python\nProtest(mention=\"strike\", protester=[\"Protesters\"], place=[\"the factory\"], time=[\"Monday\"])\n```",
                    None,
                ),
            ],
        }],
    },
    DocScript {
        id: "d4",
        planning: &["[]"],
        coding: &[],
    },
    DocScript {
        id: "d5",
        planning: &[
            "Sure! The text describes an attack.",
            r#"[{"trigger": "hit", "event_type": "Attack"}]"#,
        ],
        coding: &[Coding {
            event_type: "Attack",
            trigger: "hit",
            rationale: "",
            attempts: &[(
                r#"Attack(mention="hit", attacker=["Attackers"], target=["the clinic"], instrument=["ransomware"])"#,
                None,
            )],
        }],
    },
    // d6 is deliberately left unscripted: its planning request fails and
    // the document is skipped.
];

pub fn registry() -> SchemaRegistry {
    load_ontology(&std::fs::read(data("ontology.json")).unwrap()).unwrap()
}

fn code_of(reply: &str) -> &str {
    let trimmed = reply.trim();
    match trimmed.strip_prefix("```") {
        Some(rest) => {
            let body = rest.split_once('\n').map_or("", |(_, b)| b);
            body.rsplit_once("```").map_or(body, |(b, _)| b).trim()
        }
        None => trimmed,
    }
}

/// Build the scripted backend for the demo corpus from [`SCRIPT`].
pub fn build_scripted() -> ScriptedBackend {
    let registry = registry();
    let corpus = load_corpus(&std::fs::read(data("corpus.jsonl")).unwrap()).unwrap();
    let mut backend = ScriptedBackend::default();

    let mut sets = Vec::new();
    for (event_type, replies) in EXEMPLARS {
        let schema = registry.get(event_type).unwrap();
        let roles: Vec<&str> = schema.roles().iter().map(|r| r.name.as_str()).collect();
        let mut sentences: Vec<String> = Vec::new();
        for (sample, reply) in replies.iter().enumerate() {
            let prompt = prompts::retrieval(event_type, &roles, sample);
            backend = backend.with_reply(prompt.fingerprint(), *reply);
            let s = reply.trim().trim_matches('"').to_string();
            if !s.is_empty() && !sentences.contains(&s) {
                sentences.push(s);
            }
        }
        sets.push(ExemplarSet {
            event_type: event_type.to_string(),
            sentences,
            empty_warning: false,
        });
    }
    let schemas: Vec<_> = registry.iter().collect();
    let definitions = render_registry(&schemas);
    let exemplars = format_exemplars(&sets);

    for doc in SCRIPT {
        let text = &corpus.iter().find(|d| d.id == doc.id).unwrap().text;
        let first = prompts::planning(&definitions, &exemplars, text);
        backend = backend.with_reply(first.fingerprint(), doc.planning[0]);
        if let Some(second) = doc.planning.get(1) {
            let retry = prompts::planning_retry(&definitions, &exemplars, text, doc.planning[0]);
            backend = backend.with_reply(retry.fingerprint(), *second);
        }
        for c in doc.coding {
            let definition = render_schema_as_code(registry.get(c.event_type).unwrap());
            let mut previous: Option<(&str, &str)> = None;
            for (reply, diagnostic) in c.attempts {
                let patch = previous.map(|(code, d)| PatchRequest {
                    previous_code: code,
                    diagnostic: d,
                });
                let prompt = prompts::coding(&definition, c.trigger, c.rationale, text, patch);
                backend = backend.with_reply(prompt.fingerprint(), *reply);
                previous = diagnostic.map(|d| (code_of(reply), d));
            }
        }
    }
    backend
}
