use icn_core::scenario::{Scenario, ScenarioError, DEFAULT_SCENARIO_JSON};
use serde_json::{json, Value};

fn base() -> Value {
    serde_json::from_str(DEFAULT_SCENARIO_JSON).unwrap()
}

fn var<'a>(s: &'a mut Value, p: usize, v: usize) -> &'a mut Value {
    &mut s["processes"][p]["variables"][v]
}

fn violations(s: Value) -> Vec<&'static str> {
    match Scenario::from_json(&s.to_string()) {
        Ok(_) => vec![],
        Err(ScenarioError::Invalid(v)) => v.iter().map(|v| v.name()).collect(),
        Err(e) => panic!("unexpected error kind: {e}"),
    }
}

type Mutation = fn(&mut Value);

fn corpus() -> Vec<(&'static str, &'static str, Mutation)> {
    vec![
        ("two-node cycle", "CycleDetected", |s| {
            s["links"].as_array_mut().unwrap().push(json!({
                "source": {"process": "PLC2", "symbol": "PLC2Var0", "field": "SP"},
                "target": {"process": "PLC1", "symbol": "PLC1Var0"},
                "table": [[0.0, 0.0], [1000.0, 3000.0]]
            }));
        }),
        ("self loop", "CycleDetected", |s| {
            s["links"][0]["target"]["symbol"] = json!("PLC1Var4");
        }),
        ("x not increasing", "TableNotMonotone", |s| {
            s["links"][0]["table"] = json!([[0.0, 95.0], [250.0, 80.0], [250.0, 50.0]]);
        }),
        ("single point table", "TableTooShort", |s| {
            s["links"][1]["table"] = json!([[0.0, 0.0]]);
        }),
        ("table beyond target limits", "TableRangeExceedsTarget", |s| {
            s["links"][0]["table"] = json!([[0.0, 120.0], [1000.0, 5.0]]);
        }),
        ("unknown link source", "UnresolvedLinkEndpoint", |s| {
            s["links"][0]["source"]["symbol"] = json!("PLC1Var99");
        }),
        ("unknown link target process", "UnresolvedLinkEndpoint", |s| {
            s["links"][1]["target"]["process"] = json!("PLC9");
        }),
        ("two links drive one target", "DuplicateLinkTarget", |s| {
            s["links"].as_array_mut().unwrap().push(json!({
                "source": {"process": "PLC1", "symbol": "PLC1Var1", "field": "PV"},
                "target": {"process": "PLC1", "symbol": "PLC1Var5"},
                "table": [[0.0, 0.0], [100.0, 100.0]]
            }));
        }),
        ("duplicate process name", "DuplicateProcess", |s| {
            s["processes"][2]["name"] = json!("PLC2");
        }),
        ("agent reused", "DuplicateAgent", |s| {
            s["processes"][1]["agent"] = json!("c1");
        }),
        ("agent name with platform", "InvalidAgentName", |s| {
            s["processes"][0]["agent"] = json!("c1@SCADA");
        }),
        ("repeated symbol", "DuplicateSymbol", |s| {
            var(s, 1, 1)["symbol"] = json!("PLC2Var0");
        }),
        ("empty symbol", "EmptySymbol", |s| {
            var(s, 2, 2)["symbol"] = json!("");
        }),
        ("missing comma in address", "AddressSyntax", |s| {
            var(s, 0, 3)["address_pv"] = json!("s7:[X]db1w2");
        }),
        ("address shared by two variables", "DuplicateAddress", |s| {
            var(s, 0, 2)["address_sp"] = json!("s7:[@localserver]db1,w23");
        }),
        ("limits inverted", "LimitsInverted", |s| {
            var(s, 0, 1)["low_limit"] = json!(100.0);
            var(s, 0, 1)["high_limit"] = json!(0.0);
        }),
        ("initial SP outside limits", "InitialOutOfRange", |s| {
            var(s, 0, 4)["sp"] = json!(1200.0);
        }),
        ("zero time constant", "InvalidTau", |s| {
            var(s, 1, 0)["tau_s"] = json!(0.0);
        }),
        ("negative noise", "InvalidNoise", |s| {
            s["noise_amplitude"] = json!(-0.1);
        }),
        ("platform with whitespace", "InvalidPlatform", |s| {
            s["platform"] = json!("SCA DA");
        }),
        ("poll not a multiple of tick", "InvalidSetting", |s| {
            s["poll_period_ms"] = json!(450);
            s["tick_ms"] = json!(100);
        }),
        ("script names unknown variable", "ScriptUnknownVariable", |s| {
            s["script"][0]["symbol"] = json!("Nope");
        }),
    ]
}

#[test]
fn default_scenario_is_clean() {
    assert_eq!(violations(base()), Vec::<&str>::new());
}

#[test]
fn every_corpus_case_reports_its_violation() {
    let cases = corpus();
    assert!(cases.len() >= 20);
    for (label, expected, mutate) in cases {
        let mut s = base();
        mutate(&mut s);
        let found = violations(s);
        assert!(found.contains(&expected), "{label}: expected {expected}, got {found:?}");
    }
}

#[test]
fn all_violations_are_reported_together() {
    let mut s = base();
    for (_, _, mutate) in corpus().into_iter().filter(|(l, _, _)| {
        matches!(*l, "limits inverted" | "zero time constant" | "x not increasing" | "platform with whitespace")
    }) {
        mutate(&mut s);
    }
    let found = violations(s);
    for name in ["LimitsInverted", "InvalidTau", "TableNotMonotone", "InvalidPlatform"] {
        assert!(found.contains(&name), "missing {name} in {found:?}");
    }
}

#[test]
fn syntax_and_unknown_fields_are_syntax_errors() {
    assert!(matches!(Scenario::from_json("{"), Err(ScenarioError::Syntax(_))));
    let mut s = base();
    s["pol_period_ms"] = json!(500);
    assert!(matches!(Scenario::from_json(&s.to_string()), Err(ScenarioError::Syntax(_))));
}

#[test]
fn omitted_dynamics_take_defaults() {
    let s = json!({
        "processes": [{"name": "P", "agent": "a", "variables": [{
            "symbol": "V", "address_pv": "s7:[S]db1,w0", "address_sp": "s7:[S]db1,w1",
            "low_limit": 0.0, "high_limit": 10.0, "pv": 1.0, "sp": 2.0
        }]}]
    });
    let sc = Scenario::from_json(&s.to_string()).unwrap();
    let v = &sc.processes[0].variables[0];
    assert_eq!(v.tau, std::time::Duration::from_secs(5));
    assert_eq!(v.noise_amplitude, 0.005);
    assert_eq!(sc.poll_period, std::time::Duration::from_millis(500));
    assert_eq!(sc.platform, "SCADA");
    assert!(sc.noise);
}
