//! Simulated legacy PLC standing in for the controller and its OPC server.
//!
//! Data blocks hold one `f64` per word address. Agents read and write items
//! by connection string, poll OPC-style groups with an absolute deadband,
//! and the simulator advances first-order dynamics so that every PV follows
//! its SP.

mod address;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use address::{AddressSyntax, CellKey, ItemAddress};

pub const DEFAULT_OPC_SERVER_HOST: &str = "localhost";
pub const DEFAULT_OPC_SERVER_NAME: &str = "OPC.SimaticNet";
pub const DEFAULT_TAU: Duration = Duration::from_secs(5);
pub const DEFAULT_NOISE: f64 = 0.005;
pub const DEFAULT_POLL_PERIOD: Duration = Duration::from_millis(500);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerIdentity {
    pub host: String,
    pub name: String,
}

impl Default for ServerIdentity {
    fn default() -> Self {
        ServerIdentity {
            host: DEFAULT_OPC_SERVER_HOST.into(),
            name: DEFAULT_OPC_SERVER_NAME.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlcError {
    #[error(transparent)]
    Address(#[from] AddressSyntax),
    #[error("dynamics for `{0}`: time constant must be positive")]
    BadTau(String),
    #[error("dynamics for `{0}`: noise amplitude must be finite and non-negative")]
    BadNoise(String),
    #[error("dynamics for `{0}`: lowLimit must be below highLimit")]
    BadLimits(String),
}

/// Dynamics parameters for one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessDynamics {
    pub pv: ItemAddress,
    pub sp: ItemAddress,
    pub low_limit: f64,
    pub high_limit: f64,
    pub tau: Duration,
    /// Fraction of `high_limit - low_limit`.
    pub noise_amplitude: f64,
    pub rng_seed: u64,
}

struct DynamicVariable {
    cfg: ProcessDynamics,
    pv_key: CellKey,
    sp_key: CellKey,
    rng: ChaCha8Rng,
    /// Noise-free process state; the PV cell shows it plus measurement noise.
    state: f64,
    last_pv: f64,
}

/// A named set of items polled together.
#[derive(Debug, Clone)]
pub struct OpcGroup {
    pub name: String,
    pub period: Duration,
    pub deadband: f64,
    items: Vec<ItemAddress>,
    /// `None` until first reported, so the first poll yields a snapshot.
    last_reported: Vec<Option<f64>>,
}

impl OpcGroup {
    pub fn new(name: impl Into<String>, period: Duration, deadband: f64) -> Self {
        OpcGroup {
            name: name.into(),
            period,
            deadband: deadband.max(0.0),
            items: Vec::new(),
            last_reported: Vec::new(),
        }
    }

    /// Adds an item; returns false if the same cell is already in the group.
    pub fn add_item(&mut self, item: ItemAddress) -> bool {
        let key = item.key();
        if self.items.iter().any(|i| i.key() == key) {
            return false;
        }
        self.items.push(item);
        self.last_reported.push(None);
        true
    }

    pub fn items(&self) -> &[ItemAddress] {
        &self.items
    }

    pub fn last_reported(&self, item: &ItemAddress) -> Option<f64> {
        let key = item.key();
        self.items
            .iter()
            .position(|i| i.key() == key)
            .and_then(|i| self.last_reported[i])
    }
}

pub type WriteObserver = Arc<dyn Fn(&ItemAddress, f64) + Send + Sync>;

#[derive(Default)]
struct SimState {
    cells: BTreeMap<CellKey, f64>,
    dynamics: Vec<DynamicVariable>,
    observer: Option<WriteObserver>,
    ticks: u64,
}

/// One simulated PLC with its OPC server. Every operation takes the internal
/// lock once, so reads, writes, polls and ticks are atomic with respect to
/// each other.
pub struct PlcSimulator {
    identity: ServerIdentity,
    state: Mutex<SimState>,
}

impl PlcSimulator {
    pub fn new(identity: ServerIdentity) -> Self {
        PlcSimulator {
            identity,
            state: Mutex::new(SimState::default()),
        }
    }

    pub fn identity(&self) -> &ServerIdentity {
        &self.identity
    }

    fn lock(&self) -> MutexGuard<'_, SimState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn read_item(&self, addr: &ItemAddress) -> f64 {
        self.lock().cells.get(&addr.key()).copied().unwrap_or(0.0)
    }

    pub fn write_item(&self, addr: &ItemAddress, value: f64) {
        let mut st = self.lock();
        st.cells.insert(addr.key(), value);
        if let Some(obs) = &st.observer {
            obs(addr, value);
        }
    }

    pub fn read(&self, addr: &str) -> Result<f64, AddressSyntax> {
        Ok(self.read_item(&ItemAddress::parse(addr)?))
    }

    pub fn write(&self, addr: &str, value: f64) -> Result<(), AddressSyntax> {
        self.write_item(&ItemAddress::parse(addr)?, value);
        Ok(())
    }

    /// Installs a hook called on every `write_item`, under the simulator lock.
    pub fn set_write_observer(&self, observer: Option<WriteObserver>) {
        self.lock().observer = observer;
    }

    pub fn add_dynamics(&self, cfg: ProcessDynamics) -> Result<(), PlcError> {
        let name = cfg.pv.to_string();
        if cfg.tau.is_zero() {
            return Err(PlcError::BadTau(name));
        }
        if !(cfg.noise_amplitude.is_finite() && cfg.noise_amplitude >= 0.0) {
            return Err(PlcError::BadNoise(name));
        }
        if !(cfg.low_limit < cfg.high_limit) {
            return Err(PlcError::BadLimits(name));
        }
        let mut st = self.lock();
        let pv_key = cfg.pv.key();
        let state = st.cells.get(&pv_key).copied().unwrap_or(0.0);
        st.dynamics.push(DynamicVariable {
            pv_key,
            sp_key: cfg.sp.key(),
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            state,
            last_pv: state,
            cfg,
        });
        Ok(())
    }

    /// Advances every dynamic variable by `dt`:
    /// `x += (1 - e^(-dt/tau)) * (SP - x)` and `PV = clamp(x + noise)` with
    /// noise uniform in `±noise_amplitude * span`.
    pub fn tick(&self, dt: Duration) {
        if dt.is_zero() {
            return;
        }
        let mut st = self.lock();
        let SimState {
            cells, dynamics, ..
        } = &mut *st;
        for d in dynamics.iter_mut() {
            let sp = cells.get(&d.sp_key).copied().unwrap_or(0.0);
            let pv_cell = cells.get(&d.pv_key).copied().unwrap_or(0.0);
            if pv_cell.to_bits() != d.last_pv.to_bits() {
                // someone wrote the PV directly; continue from there
                d.state = pv_cell;
            }
            let alpha = -(-dt.as_secs_f64() / d.cfg.tau.as_secs_f64()).exp_m1();
            d.state += alpha * (sp - d.state);
            let span = d.cfg.high_limit - d.cfg.low_limit;
            let noise = if d.cfg.noise_amplitude > 0.0 {
                d.rng.gen_range(-1.0..=1.0) * d.cfg.noise_amplitude * span
            } else {
                0.0
            };
            let pv = (d.state + noise).clamp(d.cfg.low_limit, d.cfg.high_limit);
            cells.insert(d.pv_key.clone(), pv);
            d.last_pv = pv;
        }
        st.ticks += 1;
    }

    pub fn ticks(&self) -> u64 {
        self.lock().ticks
    }

    /// Reports items whose value moved by more than the deadband since they
    /// were last reported, updating `last_reported` for exactly those items.
    pub fn poll_group(&self, group: &mut OpcGroup) -> Vec<(ItemAddress, f64)> {
        let st = self.lock();
        let mut changes = Vec::new();
        for (item, last) in group.items.iter().zip(group.last_reported.iter_mut()) {
            let current = st.cells.get(&item.key()).copied().unwrap_or(0.0);
            let changed = match *last {
                None => true,
                Some(prev) => (current - prev).abs() > group.deadband,
            };
            if changed {
                *last = Some(current);
                changes.push((item.clone(), current));
            }
        }
        changes
    }
}

impl std::fmt::Debug for PlcSimulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlcSimulator")
            .field("identity", &self.identity)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn addr(s: &str) -> ItemAddress {
        ItemAddress::parse(s).unwrap()
    }

    fn sim_with(pv0: f64, sp: f64, tau_s: u64, noise: f64) -> (PlcSimulator, ItemAddress, ItemAddress) {
        let sim = PlcSimulator::new(ServerIdentity::default());
        let pv = addr("s7:[LOCALSERVER]db1,w2");
        let spa = addr("s7:[LOCALSERVER]db1,w22");
        sim.write_item(&pv, pv0);
        sim.write_item(&spa, sp);
        sim.add_dynamics(ProcessDynamics {
            pv: pv.clone(),
            sp: spa.clone(),
            low_limit: 0.0,
            high_limit: 1000.0,
            tau: Duration::from_secs(tau_s),
            noise_amplitude: noise,
            rng_seed: 7,
        })
        .unwrap();
        (sim, pv, spa)
    }

    #[test]
    fn write_then_read() {
        let sim = PlcSimulator::new(ServerIdentity::default());
        sim.write("s7:[LOCALSERVER]db1,w26", 334.0).unwrap();
        assert_eq!(sim.read("s7:[@localserver]db1,w26").unwrap(), 334.0);
        assert_eq!(sim.read("s7:[LOCALSERVER]db9,w0").unwrap(), 0.0);
        assert!(sim.read("s7:[X]db1w2").is_err());
    }

    #[test]
    fn last_writer_wins_against_sequential_model() {
        let sim = PlcSimulator::new(ServerIdentity::default());
        let mut model = std::collections::HashMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let a = ItemAddress::new("S", rng.gen_range(0..4), rng.gen_range(0..8));
            let v: f64 = rng.gen_range(-1e6..1e6);
            sim.write_item(&a, v);
            model.insert((a.db, a.word), v);
            let probe = ItemAddress::new("S", rng.gen_range(0..4), rng.gen_range(0..8));
            let expect = model.get(&(probe.db, probe.word)).copied().unwrap_or(0.0);
            assert_eq!(sim.read_item(&probe), expect);
        }
    }

    #[test]
    fn first_poll_reports_everything_then_deadband_accumulates() {
        let sim = PlcSimulator::new(ServerIdentity::default());
        let a = addr("s7:[S]db1,w2");
        let b = addr("s7:[S]db1,w4");
        let mut g = OpcGroup::new("g", DEFAULT_POLL_PERIOD, 0.5);
        assert!(g.add_item(a.clone()));
        assert!(g.add_item(b.clone()));
        assert!(!g.add_item(addr("s7:[@s]db1,w2")));
        assert_eq!(sim.poll_group(&mut g).len(), 2);
        assert!(sim.poll_group(&mut g).is_empty());
        sim.write_item(&a, 0.4);
        assert!(sim.poll_group(&mut g).is_empty());
        sim.write_item(&a, 0.6);
        assert_eq!(sim.poll_group(&mut g), vec![(a.clone(), 0.6)]);
        assert_eq!(g.last_reported(&a), Some(0.6));
        assert_eq!(g.last_reported(&b), Some(0.0));
    }

    #[test]
    fn zero_deadband_ignores_unchanged() {
        let sim = PlcSimulator::new(ServerIdentity::default());
        let mut g = OpcGroup::new("g", DEFAULT_POLL_PERIOD, 0.0);
        g.add_item(addr("s7:[S]db1,w2"));
        sim.poll_group(&mut g);
        sim.write("s7:[S]db1,w2", 0.0).unwrap();
        assert!(sim.poll_group(&mut g).is_empty());
    }

    #[test]
    fn fixed_point_when_sp_equals_pv() {
        let (sim, pv, _) = sim_with(250.0, 250.0, 5, 0.0);
        for _ in 0..10 {
            sim.tick(Duration::from_millis(100));
        }
        assert_eq!(sim.read_item(&pv), 250.0);
    }

    #[test]
    fn one_time_constant_closed_form() {
        let (sim, pv, _) = sim_with(0.0, 100.0, 5, 0.0);
        sim.tick(Duration::from_secs(5));
        let expected = 100.0 * (1.0 - (-1.0f64).exp());
        assert!((sim.read_item(&pv) - expected).abs() < 1e-12);
        assert!((sim.read_item(&pv) - 63.212).abs() < 1e-3);
    }

    #[test]
    fn five_tau_within_one_percent() {
        let (sim, pv, _) = sim_with(0.0, 800.0, 5, 0.0);
        for _ in 0..250 {
            sim.tick(Duration::from_millis(100));
        }
        assert!((sim.read_item(&pv) - 800.0).abs() <= 0.01 * 800.0);
    }

    #[test]
    fn external_pv_write_resyncs_state() {
        let (sim, pv, _) = sim_with(0.0, 100.0, 5, 0.0);
        sim.tick(Duration::from_secs(1));
        sim.write_item(&pv, 900.0);
        sim.tick(Duration::from_secs(5));
        let expected = 100.0 + 800.0 * (-1.0f64).exp();
        assert!((sim.read_item(&pv) - expected).abs() < 1e-9);
    }

    #[test]
    fn bad_dynamics_rejected() {
        let sim = PlcSimulator::new(ServerIdentity::default());
        let base = ProcessDynamics {
            pv: addr("s7:[S]db1,w2"),
            sp: addr("s7:[S]db1,w4"),
            low_limit: 0.0,
            high_limit: 1.0,
            tau: Duration::ZERO,
            noise_amplitude: 0.0,
            rng_seed: 0,
        };
        assert!(matches!(sim.add_dynamics(base.clone()), Err(PlcError::BadTau(_))));
        let neg = ProcessDynamics {
            tau: DEFAULT_TAU,
            noise_amplitude: -0.1,
            ..base.clone()
        };
        assert!(matches!(sim.add_dynamics(neg), Err(PlcError::BadNoise(_))));
    }

    #[test]
    fn observer_sees_writes() {
        let sim = PlcSimulator::new(ServerIdentity::default());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let sink = seen.clone();
        sim.set_write_observer(Some(Arc::new(move |a: &ItemAddress, v| {
            sink.lock().unwrap().push((a.word, v))
        })));
        sim.write("s7:[S]db1,w26", 334.0).unwrap();
        sim.tick(Duration::from_millis(100));
        assert_eq!(*seen.lock().unwrap(), vec![(26, 334.0)]);
    }

    proptest! {
        #[test]
        fn noiseless_pv_monotone_without_overshoot(
            pv0 in 0.0f64..1000.0,
            sp in 0.0f64..1000.0,
            tau_ms in 100u64..20_000,
            dts in proptest::collection::vec(1u64..2_000, 1..60),
        ) {
            let sim = PlcSimulator::new(ServerIdentity::default());
            let pv = addr("s7:[S]db1,w2");
            let spa = addr("s7:[S]db1,w4");
            sim.write_item(&pv, pv0);
            sim.write_item(&spa, sp);
            sim.add_dynamics(ProcessDynamics {
                pv: pv.clone(), sp: spa, low_limit: 0.0, high_limit: 1000.0,
                tau: Duration::from_millis(tau_ms), noise_amplitude: 0.0, rng_seed: 1,
            }).unwrap();
            let mut prev = pv0;
            for dt in dts {
                sim.tick(Duration::from_millis(dt));
                let now = sim.read_item(&pv);
                prop_assert!((sp - now).abs() <= (sp - prev).abs());
                prop_assert!((now - sp) * (pv0 - sp) >= 0.0);
                prev = now;
            }
        }

        #[test]
        fn identical_seed_identical_trace(seed in any::<u64>()) {
            let run = || {
                let sim = PlcSimulator::new(ServerIdentity::default());
                let pv = addr("s7:[S]db1,w2");
                let spa = addr("s7:[S]db1,w4");
                sim.write_item(&spa, 700.0);
                sim.add_dynamics(ProcessDynamics {
                    pv: pv.clone(), sp: spa, low_limit: 0.0, high_limit: 1000.0,
                    tau: DEFAULT_TAU, noise_amplitude: DEFAULT_NOISE, rng_seed: seed,
                }).unwrap();
                (0..50).map(|_| { sim.tick(Duration::from_millis(100)); sim.read_item(&pv).to_bits() }).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(), run());
        }

        #[test]
        fn polls_reconstruct_every_change_beyond_deadband(
            writes in proptest::collection::vec(-10.0f64..10.0, 1..100),
            deadband in 0.0f64..3.0,
        ) {
            let sim = PlcSimulator::new(ServerIdentity::default());
            let a = addr("s7:[S]db1,w2");
            let mut g = OpcGroup::new("g", DEFAULT_POLL_PERIOD, deadband);
            g.add_item(a.clone());
            sim.poll_group(&mut g);
            let mut reported = 0.0;
            for w in writes {
                sim.write_item(&a, w);
                let changes = sim.poll_group(&mut g);
                if (w - reported).abs() > deadband {
                    prop_assert_eq!(changes, vec![(a.clone(), w)]);
                    reported = w;
                } else {
                    prop_assert!(changes.is_empty());
                }
                prop_assert!((sim.read_item(&a) - reported).abs() <= deadband);
            }
        }
    }
}
