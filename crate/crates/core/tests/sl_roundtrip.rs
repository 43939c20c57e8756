use icn_core::acl::Aid;
use icn_core::ontology::{
    AgentAction, Alarm, Content, ContentElement, ControlProcess, Predicate, Variable, VariableRef,
};
use icn_core::sl::{encode_sl, parse_sl, SlError};
use proptest::prelude::*;

fn token() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z][A-Za-z0-9_]{0,12}",
        "s7:\\[@?[A-Z]{1,10}\\]db[1-9][0-9]{0,2},w[0-9]{1,3}",
        // needs quoting: spaces, quotes, parens, backslashes
        "[A-Za-z0-9 ()\"\\\\:'|.-]{1,20}",
    ]
}

fn aid() -> impl Strategy<Value = Aid> {
    (
        "[a-zA-Z][a-zA-Z0-9_-]{0,8}",
        "[A-Z][A-Z0-9]{0,6}",
        proptest::collection::vec("http://[a-z]{1,8}:[0-9]{2,5}/acc", 0..3),
    )
        .prop_map(|(local, platform, addresses)| {
            let mut a = Aid::local(&local, &platform).unwrap();
            a.addresses = addresses;
            a
        })
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1e6f64..1e6,
        (-1000i32..1000).prop_map(f64::from),
    ]
}

fn variable() -> impl Strategy<Value = Variable> {
    (token(), token(), token(), finite(), finite(), finite(), finite())
        .prop_filter("low < high", |(_, _, _, a, b, _, _)| a != b && (b - a).is_finite())
        .prop_map(|(symbol, address_pv, address_sp, a, b, pv, sp)| Variable {
            symbol,
            address_pv,
            address_sp,
            low_limit: a.min(b),
            high_limit: a.max(b),
            pv,
            sp,
        })
}

fn process() -> impl Strategy<Value = ControlProcess> {
    (token(), proptest::collection::vec(variable(), 0..4)).prop_map(|(name, vars)| {
        let mut seen = std::collections::HashSet::new();
        let variables = vars.into_iter().filter(|v| seen.insert(v.symbol.clone())).collect();
        ControlProcess { name, variables }
    })
}

fn alarm() -> impl Strategy<Value = Alarm> {
    (aid(), 0u32..10, "[ -~]{0,40}", variable()).prop_map(|(destination, priority, text, var)| Alarm {
        destination,
        priority,
        text,
        var,
    })
}

fn predicate() -> impl Strategy<Value = Predicate> {
    prop_oneof![
        variable().prop_map(Predicate::IsHigh),
        variable().prop_map(Predicate::IsLow),
        variable().prop_map(Predicate::IsLocal),
        (variable(), process()).prop_map(|(v, p)| Predicate::IsLocatedin(v, p)),
        variable().prop_map(Predicate::IsVariable),
        process().prop_map(Predicate::IsControlProcess),
        proptest::collection::vec(variable(), 0..4).prop_map(Predicate::ListOfVariables),
        proptest::collection::vec(alarm(), 0..3).prop_map(Predicate::ListOfAlarms),
    ]
}

fn action() -> impl Strategy<Value = AgentAction> {
    prop_oneof![
        (token(), finite()).prop_map(|(variable_address, value)| AgentAction::SetVariable {
            variable_address,
            value
        }),
        token().prop_map(|s| AgentAction::GetVariable(VariableRef::Symbol(s))),
        token().prop_map(|s| AgentAction::GetVariable(VariableRef::Address(s))),
        token().prop_map(|symbol| AgentAction::LocateVariable { symbol }),
    ]
}

fn element() -> impl Strategy<Value = ContentElement> {
    prop_oneof![
        predicate().prop_map(ContentElement::Predicate),
        (aid(), action()).prop_map(|(actor, action)| ContentElement::Action { actor, action }),
    ]
}

fn content() -> impl Strategy<Value = Content> {
    proptest::collection::vec(element(), 1..3).prop_map(Content)
}

fn bits(c: &Content) -> String {
    // Debug of f64 is exact, so equal strings mean bit-equal floats (for non-NaN values)
    format!("{c:?}")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parse_inverts_encode(c in content()) {
        let text = encode_sl(&c).unwrap();
        let back = parse_sl(&text).unwrap();
        prop_assert_eq!(bits(&back), bits(&c));
        prop_assert_eq!(back, c);
    }

    #[test]
    fn parse_tolerates_extra_whitespace(c in content()) {
        let text = encode_sl(&c).unwrap();
        // only widen whitespace outside quoted strings
        let mut spaced = String::new();
        let mut in_str = false;
        let mut escaped = false;
        for ch in text.chars() {
            if in_str {
                spaced.push(ch);
                if escaped { escaped = false } else if ch == '\\' { escaped = true } else if ch == '"' { in_str = false }
                continue;
            }
            match ch {
                '"' => { in_str = true; spaced.push(ch) }
                ' ' => spaced.push_str(" \n\t "),
                '(' => spaced.push_str("(\n "),
                ')' => spaced.push_str(" \n)"),
                _ => spaced.push(ch),
            }
        }
        prop_assert_eq!(parse_sl(&spaced).unwrap(), c);
    }
}

#[test]
fn every_ontology_form_round_trips() {
    let v = Variable {
        symbol: "PLC1Var4".into(),
        address_pv: "s7:[LOCALSERVER]db1,w6".into(),
        address_sp: "s7:[LOCALSERVER]db1,w26".into(),
        low_limit: 0.0,
        high_limit: 1000.0,
        pv: 360.0,
        sp: 700.0,
    };
    let p = ControlProcess { name: "PLC1".into(), variables: vec![v.clone()] };
    let a = Alarm {
        destination: Aid::new("R1@SCADA").unwrap(),
        priority: 0,
        text: "x".into(),
        var: v.clone(),
    };
    let actor = Aid::new("c1@SCADA").unwrap();
    let mut forms = vec![
        Predicate::IsHigh(v.clone()),
        Predicate::IsLow(v.clone()),
        Predicate::IsLocal(v.clone()),
        Predicate::IsLocatedin(v.clone(), p.clone()),
        Predicate::IsVariable(v.clone()),
        Predicate::IsControlProcess(p),
        Predicate::ListOfVariables(vec![v.clone()]),
        Predicate::ListOfAlarms(vec![a]),
    ]
    .into_iter()
    .map(Content::predicate)
    .collect::<Vec<_>>();
    forms.push(Content::action(
        actor.clone(),
        AgentAction::SetVariable { variable_address: v.address_sp.clone(), value: 1.5 },
    ));
    forms.push(Content::action(actor.clone(), AgentAction::GetVariable(VariableRef::Symbol("PLC1Var4".into()))));
    forms.push(Content::action(actor, AgentAction::LocateVariable { symbol: "PLC1Var4".into() }));
    assert_eq!(forms.len(), 11);
    for c in forms {
        let text = encode_sl(&c).unwrap();
        assert_eq!(parse_sl(&text).unwrap(), c, "{text}");
    }
}

#[test]
fn ninth_predicate_and_fourth_action_rejected() {
    let v = "(Variable :lowLimit 0.0 :highLimit 1.0 :addressPV a :addressSP b :symbol s :PV 0.0 :SP 0.0)";
    for text in [
        format!("((IsNormal {v}))"),
        format!("((ListOfProcesses (sequence)))"),
        "((action (agent-identifier :name c1@SCADA) (DeleteVariable :symbol s)))".to_string(),
    ] {
        match parse_sl(&text) {
            Err(SlError::SchemaViolation { .. }) => {}
            other => panic!("{text}: expected schema violation, got {other:?}"),
        }
    }
}
