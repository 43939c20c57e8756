//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use icn_agents::runner::{self, Network, SYNC_STEP_MS, TREND_STEPS};
use icn_agents::runtime::{
    Clock, DfTemplate, DirectoryFacilitator, Endpoint, MessageTemplate, Platform, ServiceDescription,
};
use icn_core::acl::{AclMessage, Aid, Performative};
use icn_core::alarm_text::format_alarm_text;
use icn_core::ontology::{AgentAction, Alarm, Content, ContentElement, Predicate, Variable};
use icn_core::scenario::Scenario;
use icn_core::sl::{encode_sl, normalize_whitespace, parse_sl};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const SET_VARIABLE: &str = "(( action
(agent-identifier :name c1@SCADA :addresses (sequence
http://scada:7778/acc))
(SetVariable :variableAddress s7:[LOCALSERVER]db1,w26
:value 334.0)
))";

const LIST_OF_ALARMS: &str = "((ListOfAlarms
(sequence (Alarm :destination (agent-identifier
:name R1@SCADA
:addresses (sequence http://scada:7778/acc))
:priority 2
:text \"Tue Sep 23 08:34:11 2014 |'PLCIVariable4' New SP
(334.0) was forwarded to control process PLC1\"
:var (Variable :lowLimit 0.0 highLimit 1000.0
:addressPV s7:[LOCALSERVER]db1,w6
:addressSP s7:[LOCALSERVER]db1,w26
:symbol PLCIVariable4 :PV 360.0 :SP 334.0))))
)";

fn golden_messages() -> Outcome {
    let actor = Aid::new("c1@SCADA").unwrap().with_address("http://scada:7778/acc");
    let request = Content::action(
        actor,
        AgentAction::SetVariable {
            variable_address: "s7:[LOCALSERVER]db1,w26".into(),
            value: 334.0,
        },
    );
    let encoded = encode_sl(&request).map_err(|e| e.to_string())?;
    ensure!(encoded == normalize_whitespace(SET_VARIABLE), "request encodes as {encoded}");
    ensure!(parse_sl(SET_VARIABLE).ok() == Some(request), "request literal does not parse back");

    let t = Utc.with_ymd_and_hms(2014, 9, 23, 8, 34, 11).unwrap();
    let symbol = "PLCIVariable4";
    let alarm = Content::predicate(Predicate::ListOfAlarms(vec![Alarm {
        destination: Aid::new("R1@SCADA").unwrap().with_address("http://scada:7778/acc"),
        priority: 2,
        text: format_alarm_text(t, symbol, "New SP (334.0) was forwarded to control process PLC1"),
        var: Variable {
            symbol: symbol.into(),
            address_pv: "s7:[LOCALSERVER]db1,w6".into(),
            address_sp: "s7:[LOCALSERVER]db1,w26".into(),
            low_limit: 0.0,
            high_limit: 1000.0,
            pv: 360.0,
            sp: 334.0,
        },
    }]));
    let encoded = encode_sl(&alarm).map_err(|e| e.to_string())?;
    // the literal drops the colon of one slot name
    let expected = normalize_whitespace(LIST_OF_ALARMS).replace(" highLimit ", " :highLimit ");
    ensure!(encoded == expected, "alarm encodes as {encoded}");
    let mut parsed = parse_sl(LIST_OF_ALARMS).map_err(|e| e.to_string())?;
    // the quoted text wraps across a line in the literal
    if let Some(ContentElement::Predicate(Predicate::ListOfAlarms(a))) = parsed.0.first_mut() {
        a[0].text = normalize_whitespace(&a[0].text);
    }
    ensure!(parsed == alarm, "alarm literal parses to {parsed:?}");
    Ok("both examples byte-equal after whitespace normalization; literals parse".into())
}

fn quiet(sc: &Scenario) -> Scenario {
    let mut sc = sc.clone();
    sc.noise = false;
    sc.script.clear();
    sc
}

fn drain(ep: &Endpoint) -> Vec<AclMessage> {
    std::iter::from_fn(|| ep.take(&MessageTemplate::any())).collect()
}

fn send_set(ep: &Endpoint, to: &Aid, address: &str, value: f64) -> String {
    let conv = ep.new_conversation_id();
    let content = Content::action(
        to.clone(),
        AgentAction::SetVariable {
            variable_address: address.into(),
            value,
        },
    );
    let msg = AclMessage::new(Performative::Request, ep.aid().clone())
        .to(to.clone())
        .with_content(encode_sl(&content).unwrap())
        .with_conversation(conv.clone())
        .with_reply_with(conv.clone());
    ep.send(msg).unwrap();
    conv
}

fn single_alarm(msgs: &[AclMessage]) -> Result<Alarm, String> {
    ensure!(msgs.len() == 1, "expected one reply, got {}", msgs.len());
    match parse_sl(&msgs[0].content).map_err(|e| e.to_string())?.first_predicate() {
        Some(Predicate::ListOfAlarms(a)) if a.len() == 1 => Ok(a[0].clone()),
        other => Err(format!("reply is not one alarm: {other:?}")),
    }
}

fn setpoint_fsm() -> Outcome {
    let json = icn_core::scenario::DEFAULT_SCENARIO_JSON.replace("\"PLC1Var4\"", "\"PLC1Variable4\"");
    let sc = quiet(&Scenario::from_json(&json).map_err(|e| e.to_string())?);
    let mut net = Network::boot(&sc).map_err(|e| e.to_string())?;
    let op = net.driver.platform().register("op").unwrap();
    let c1 = Aid::local("c1", &sc.platform).unwrap();
    let plc = net.plc("PLC1").clone();
    let w26 = "s7:[LOCALSERVER]db1,w26";

    send_set(&op, &c1, w26, 334.0);
    net.driver.settle();
    let a = single_alarm(&drain(&op))?;
    let tail = " |'PLC1Variable4' New SP (334.0) was forwarded to control process PLC1";
    ensure!(a.text.ends_with(tail) && a.text.len() == 24 + tail.len(), "apply text {:?}", a.text);
    ensure!(a.priority == 2 && plc.read(w26).unwrap() == 334.0, "334.0 not applied");

    send_set(&op, &c1, w26, 1200.0);
    net.driver.settle();
    let a = single_alarm(&drain(&op))?;
    ensure!(a.priority == 1 && plc.read(w26).unwrap() == 334.0, "1200.0 changed the PLC or was not rejected");

    send_set(&op, &c1, w26, 1000.0);
    net.driver.settle();
    let a = single_alarm(&drain(&op))?;
    ensure!(a.priority == 2 && plc.read(w26).unwrap() == 1000.0, "boundary 1000.0 not applied");

    // randomized: every request answered by exactly one alarm message
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let targets: Vec<(Aid, String, String, f64, f64)> = sc
        .processes
        .iter()
        .flat_map(|p| {
            let aid = Aid::local(&p.agent, &sc.platform).unwrap();
            p.variables.iter().map(move |v| {
                (aid.clone(), p.name.clone(), v.sp_address.to_string(), v.low_limit, v.high_limit)
            })
        })
        .collect();
    let mut expected: HashMap<String, bool> = HashMap::new();
    let mut applied = 0;
    for _ in 0..1000 {
        let (aid, _, addr, lo, hi) = targets.choose(&mut rng).unwrap();
        let span = hi - lo;
        let value = match rng.gen_range(0..10) {
            0 => *lo,
            1 => *hi,
            _ => (rng.gen_range(lo - span * 0.5..hi + span * 0.5) * 10.0).round() / 10.0,
        };
        let ok = *lo <= value && value <= *hi;
        applied += ok as usize;
        expected.insert(send_set(&op, aid, addr, value), ok);
        if rng.gen_bool(0.2) {
            let t = net.elapsed_ms() + 100;
            net.run_to(t);
        }
    }
    net.run_to(net.elapsed_ms() + 100);
    let replies: Vec<_> = drain(&op).into_iter().filter(|m| m.performative == Performative::Inform).collect();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for m in &replies {
        let a = single_alarm(std::slice::from_ref(m))?;
        *seen.entry(m.conversation_id.clone()).or_default() += 1;
        let want = expected.get(&m.conversation_id).ok_or("reply to unknown request")?;
        ensure!((a.priority == 2) == *want, "wrong verdict for {}", m.conversation_id);
    }
    ensure!(seen.len() == 1000 && seen.values().all(|&n| n == 1), "{} requests answered, counts not all 1", seen.len());
    Ok(format!("334 applied, 1200 rejected, 1000 applied; 1000 random requests, 1000 alarms ({applied} applied)"))
}

/// Straight-line evaluation over every segment, independent of the
/// library's search.
fn oracle(points: &[(f64, f64)], x: f64) -> f64 {
    if x <= points[0].0 {
        return points[0].1;
    }
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            return y0 + (x - x0) * (y1 - y0) / (x1 - x0);
        }
    }
    points[points.len() - 1].1
}

fn curve() -> Outcome {
    let sc = Scenario::default_scenario();
    let rows = runner::dependency_sweep(&sc, 1.0).map_err(|e| e.to_string())?;
    let table = [(0.0, 95.0), (250.0, 80.0), (500.0, 50.0), (1000.0, 5.0)];
    ensure!(rows.len() == 1001, "{} sweep points", rows.len());
    let mut worst: f64 = 0.0;
    for w in rows.windows(2) {
        ensure!(w[1].2 <= w[0].2, "increase at x={}: {} -> {}", w[1].1, w[0].2, w[1].2);
    }
    for &(_, x, y) in &rows {
        let want = oracle(&table, x);
        worst = worst.max((y - want).abs() / want.abs());
    }
    ensure!(worst <= 1e-12, "worst relative error {worst:e}");
    Ok(format!("1001 points non-increasing, worst relative error {worst:.1e}"))
}

fn sync() -> Outcome {
    let sc = Scenario::default_scenario();
    let (chain, rows) = runner::sync_chain(&sc).map_err(|e| e.to_string())?;
    ensure!(chain.len() == 3, "chain {chain:?}");
    let t1 = |x: f64| x * 1000.0 / 3000.0;
    let t2 = |x: f64| x * 100.0 / 1000.0;
    let (want2, want3) = (t1(1000.0), t2(t1(1000.0)));
    let poll = sc.poll_period.as_millis() as i64;
    let reached = rows
        .iter()
        .find(|(t, v)| *t >= SYNC_STEP_MS && (v[1] - want2).abs() <= 1e-9 && (v[2] - want3).abs() <= 1e-9)
        .map(|(t, _)| *t)
        .ok_or("never reached")?;
    let lag = reached - SYNC_STEP_MS;
    ensure!(lag <= 3 * poll, "settled after {lag} ms");
    let after: Vec<_> = rows.iter().filter(|(t, _)| *t >= reached).collect();
    ensure!(after.len() > 20, "only {} polls observed after settling", after.len() - 1);
    ensure!(after.iter().all(|(_, v)| v == &after[0].1), "values moved after settling");
    let before = rows.iter().find(|(t, _)| *t == SYNC_STEP_MS).unwrap();
    ensure!(
        (before.1[1] - t1(500.0)).abs() <= 1e-9 && (before.1[2] - t2(t1(500.0))).abs() <= 1e-9,
        "pre-step values {:?}",
        before.1
    );
    Ok(format!(
        "{:.6} and {:.6} reached {lag} ms after the step, constant for {} polls",
        want2,
        want3,
        after.len() - 1
    ))
}

fn trend() -> Outcome {
    let sc = Scenario::default_scenario();
    let tau = sc.process("PLC1").unwrap().variable("PLC1Var0").unwrap().tau.as_secs_f64() * 1000.0;
    let rows = runner::step_trend(&sc, false).map_err(|e| e.to_string())?;
    let initial = sc.process("PLC1").unwrap().variable("PLC1Var0").unwrap().sp;
    let mut checked = 0;
    let mut prev_sp = initial;
    let mut steps = vec![(i64::MIN, initial, 0.0)];
    for (at, sp) in TREND_STEPS {
        steps.push((at, sp, (sp - prev_sp).abs()));
        prev_sp = sp;
    }
    for &(t, pv, sp) in &rows {
        let &(t0, _, step) = steps.iter().rev().find(|(_, s, _)| *s == sp).ok_or("unknown SP in trend")?;
        let bound = if t0 == i64::MIN { 0.0 } else { (-((t - t0) as f64) / tau).exp() * step };
        ensure!((pv - sp).abs() <= bound + 1e-9, "t={t}: |{pv} - {sp}| > {bound}");
        checked += 1;
    }
    ensure!(checked > 20, "only {checked} samples");

    let noisy = runner::step_trend(&sc, true).map_err(|e| e.to_string())?;
    let v = sc.process("PLC1").unwrap().variable("PLC1Var0").unwrap();
    let span = v.high_limit - v.low_limit;
    let settle = TREND_STEPS[TREND_STEPS.len() - 1].0 + (5.0 * tau) as i64;
    let late: Vec<_> = noisy.iter().filter(|(t, _, _)| *t >= settle).collect();
    ensure!(!late.is_empty(), "no samples after 5 tau");
    let worst = late.iter().map(|(_, pv, sp)| (pv - sp).abs()).fold(0.0, f64::max);
    ensure!(worst <= 0.01 * span, "noisy error {worst} > 1% of span");
    Ok(format!(
        "{checked} noise-free samples within the exponential bound; noisy error {:.2}% of span after 5 tau",
        100.0 * worst / span
    ))
}

fn safety() -> Outcome {
    let sc = Scenario::default_scenario();
    let mut net = Network::boot(&sc).map_err(|e| e.to_string())?;
    let rogue = net.driver.platform().register("rogue").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vars: Vec<_> = sc
        .processes
        .iter()
        .flat_map(|p| p.variables.iter().map(move |v| (p, v)))
        .collect();
    let mut requests = 0;
    let mut pending = Vec::new();
    let mut t = 0;
    while t < 60_000 {
        t += rng.gen_range(20..200);
        net.run_to(t);
        let (p, v) = vars.choose(&mut rng).unwrap();
        let span = v.high_limit - v.low_limit;
        let value = match rng.gen_range(0..20) {
            0 => 1e300,
            1 => -1e300,
            2 => v.high_limit + f64::EPSILON * v.high_limit.abs().max(1.0),
            _ => rng.gen_range(v.low_limit - span..v.high_limit + span),
        };
        if rng.gen_bool(0.5) {
            if let Ok(p) = net.gateway.submit_setpoint(&p.name, &v.symbol, value) {
                pending.push(p);
            }
        } else {
            send_set(&rogue, &Aid::local(&p.agent, &sc.platform).unwrap(), &v.sp_address.to_string(), value);
        }
        requests += 1;
        drain(&rogue);
    }
    let violations = net.audit.violations();
    ensure!(violations == 0, "{violations} writes out of range: {:?}", net.audit.violation_log());
    ensure!(net.audit.sp_writes() > 100, "only {} SP writes audited", net.audit.sp_writes());
    Ok(format!("{requests} random requests, {} SP writes audited, 0 out of range", net.audit.sp_writes()))
}

fn soak() -> Outcome {
    const TOTAL: usize = 100_000;
    const AGENTS: usize = 5;
    let a = Platform::new("A", Clock::wall()).unwrap();
    let b = Platform::new("B", Clock::wall()).unwrap();
    a.listen("127.0.0.1:0").map_err(|e| e.to_string())?;
    b.listen("127.0.0.1:0").map_err(|e| e.to_string())?;
    let endpoints: Vec<Endpoint> = (0..AGENTS)
        .map(|i| if i < 3 { a.register(&format!("a{i}")) } else { b.register(&format!("b{i}")) }.unwrap())
        .collect();
    let aids: Vec<Aid> = endpoints.iter().map(|e| e.aid().clone()).collect();
    let per_agent = TOTAL / AGENTS;
    let started = Instant::now();
    let results: Vec<Result<BTreeMap<String, Vec<u64>>, String>> = std::thread::scope(|s| {
        let handles: Vec<_> = endpoints
            .iter()
            .enumerate()
            .map(|(i, ep)| {
                let aids = aids.clone();
                s.spawn(move || {
                    let others: Vec<&Aid> = aids.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, a)| a).collect();
                    let mut seq = vec![0u64; others.len()];
                    let mut got: BTreeMap<String, Vec<u64>> = BTreeMap::new();
                    let mut received = 0;
                    for k in 0..per_agent {
                        let o = k % others.len();
                        let msg = AclMessage::new(Performative::Inform, ep.aid().clone())
                            .to(others[o].clone())
                            .with_content(seq[o].to_string());
                        seq[o] += 1;
                        let r = ep.send(msg).map_err(|e| e.to_string())?;
                        if !r.iter().all(|x| x.delivered()) {
                            return Err(format!("delivery failed: {r:?}"));
                        }
                        while let Some(m) = ep.take(&MessageTemplate::any()) {
                            got.entry(m.sender.name.clone()).or_default().push(m.content.parse().unwrap());
                            received += 1;
                        }
                    }
                    while received < per_agent {
                        let m = ep
                            .receive(&MessageTemplate::any(), Duration::from_secs(10))
                            .ok_or(format!("{}: only {received} of {per_agent} received", ep.aid()))?;
                        got.entry(m.sender.name.clone()).or_default().push(m.content.parse().unwrap());
                        received += 1;
                    }
                    Ok(got)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut total = 0;
    for (i, r) in results.into_iter().enumerate() {
        let got = r?;
        ensure!(got.len() == AGENTS - 1, "agent {i} heard from {} peers", got.len());
        for (from, seqs) in got {
            ensure!(
                seqs.iter().enumerate().all(|(k, &s)| s == k as u64),
                "{from} -> agent {i}: gap, duplicate or reorder"
            );
            total += seqs.len();
        }
    }
    ensure!(total == TOTAL, "{total} messages received");
    ensure!(endpoints.iter().all(|e| e.take(&MessageTemplate::any()).is_none()), "extra messages");
    Ok(format!("{total} messages over 2 platforms in {:.1} s: no loss, no duplicates, FIFO per pair", started.elapsed().as_secs_f64()))
}

fn df_semantics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let types = ["process-control", "operator", "historian"];
    let keys = ["variables", "site", "vendor"];
    let vals = ["x", "y", "z"];
    let random_props = |rng: &mut ChaCha8Rng| -> BTreeMap<String, String> {
        (0..rng.gen_range(0..3))
            .map(|_| (keys.choose(rng).unwrap().to_string(), vals.choose(rng).unwrap().to_string()))
            .collect()
    };
    let mut searches = 0;
    for _ in 0..1000 {
        let df = DirectoryFacilitator::new();
        let mut registered: Vec<ServiceDescription> = Vec::new();
        for _ in 0..rng.gen_range(0..30) {
            let sd = ServiceDescription {
                provider: Aid::new(format!("p{}@S", rng.gen_range(0..8))).unwrap(),
                service_type: types.choose(&mut rng).unwrap().to_string(),
                service_name: format!("s{}", rng.gen_range(0..6)),
                properties: random_props(&mut rng),
            };
            let dup = registered
                .iter()
                .any(|r| r.provider.name == sd.provider.name && r.service_name == sd.service_name);
            ensure!(df.register(sd.clone()).is_err() == dup, "duplicate handling differs");
            if !dup {
                registered.push(sd);
            }
        }
        for _ in 0..5 {
            let tpl = DfTemplate {
                provider: rng.gen_bool(0.3).then(|| format!("p{}@S", rng.gen_range(0..8))),
                service_type: rng.gen_bool(0.5).then(|| types.choose(&mut rng).unwrap().to_string()),
                service_name: rng.gen_bool(0.3).then(|| format!("s{}", rng.gen_range(0..6))),
                properties: random_props(&mut rng),
            };
            let brute: Vec<_> = registered
                .iter()
                .filter(|sd| {
                    tpl.provider.as_deref().is_none_or(|p| p == sd.provider.name)
                        && tpl.service_type.as_deref().is_none_or(|t| t == sd.service_type)
                        && tpl.service_name.as_deref().is_none_or(|n| n == sd.service_name)
                        && tpl.properties.iter().all(|(k, v)| sd.properties.get(k) == Some(v))
                })
                .cloned()
                .collect();
            ensure!(df.search(&tpl) == brute, "search differs from brute force for {tpl:?}");
            searches += 1;
        }
    }

    // notifications through the platform: one message per matching registration
    let platform = Platform::new("S", Clock::virtual_at(0)).unwrap();
    let subs: Vec<(Endpoint, DfTemplate)> = (0..4)
        .map(|i| {
            let ep = platform.register(&format!("sub{i}")).unwrap();
            let tpl = DfTemplate::service_type(types[i % types.len()]);
            platform.df_subscribe(ep.aid().clone(), tpl.clone());
            (ep, tpl)
        })
        .collect();
    let mut expected = vec![0usize; subs.len()];
    for k in 0..200 {
        let sd = ServiceDescription {
            provider: Aid::new(format!("q{k}@S")).unwrap(),
            service_type: types.choose(&mut rng).unwrap().to_string(),
            service_name: format!("n{k}"),
            properties: BTreeMap::new(),
        };
        for (i, (_, tpl)) in subs.iter().enumerate() {
            expected[i] += tpl.matches(&sd) as usize;
        }
        platform.df_register(sd).unwrap();
    }
    for (i, (ep, _)) in subs.iter().enumerate() {
        let n = drain(ep).len();
        ensure!(n == expected[i], "subscriber {i}: {n} notifications, expected {}", expected[i]);
    }
    Ok(format!("{searches} searches over 1000 random registries match brute force; notification counts exact"))
}

fn run_icn(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_icn")).args(args).output().map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "icn {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scenario = dir.path().join("default.json");
    std::fs::write(&scenario, icn_core::scenario::DEFAULT_SCENARIO_JSON).map_err(|e| e.to_string())?;
    let s = scenario.to_str().unwrap();
    let args = ["run", "--scenario", s, "--no-noise", "--seed", "42"];
    let r1 = run_icn(&args)?;
    let r2 = run_icn(&args)?;
    ensure!(!r1.is_empty() && r1 == r2, "reports differ");
    let (d1, d2) = (dir.path().join("f1"), dir.path().join("f2"));
    run_icn(&["demo", "figures", "--out", d1.to_str().unwrap()])?;
    run_icn(&["demo", "figures", "--out", d2.to_str().unwrap()])?;
    for f in ["step_trend.csv", "dependency_curve.csv", "sync_chain.csv"] {
        let read = |d: &Path| std::fs::read(d.join(f)).map_err(|e| e.to_string());
        ensure!(read(&d1)? == read(&d2)?, "{f} differs between runs");
    }
    Ok(format!("two runs: {}-byte reports identical; three CSVs identical", r1.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("golden messages", golden_messages),
        ("setpoint FSM", setpoint_fsm),
        ("dependency curve sweep", curve),
        ("global synchronization chain", sync),
        ("trend step response", trend),
        ("setpoint safety audit", safety),
        ("runtime soak", soak),
        ("directory semantics", df_semantics),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({secs:.1} s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} ({secs:.1} s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
