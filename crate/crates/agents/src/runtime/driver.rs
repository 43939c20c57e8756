use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use icn_core::plc::PlcSimulator;

use super::{Mailbox, Platform, Runnable};

/// Rounds without reaching quiescence before the simulation is declared
/// livelocked.
const MAX_SETTLE_ROUNDS: usize = 1_000_000;

/// Deterministic single-threaded execution on a virtual clock.
///
/// Time moves in discrete events: plant ticks every `tick` and agent
/// deadlines. At each instant the plants tick first, then agents are
/// stepped round-robin in insertion order until none has work left.
pub struct SimDriver {
    platform: Platform,
    agents: Vec<Box<dyn Runnable>>,
    plants: Vec<Arc<PlcSimulator>>,
    tick: Duration,
    tick_ms: i64,
    next_tick_ms: i64,
    ticks: u64,
    start_ms: i64,
}

impl SimDriver {
    /// Panics unless the platform runs on a virtual clock.
    pub fn new(platform: Platform, tick: Duration) -> Self {
        assert!(platform.clock().is_virtual(), "SimDriver needs a virtual clock");
        let tick_ms = (tick.as_millis() as i64).max(1);
        let start_ms = platform.now_ms();
        SimDriver {
            platform,
            agents: Vec::new(),
            plants: Vec::new(),
            tick,
            tick_ms,
            next_tick_ms: start_ms + tick_ms,
            ticks: 0,
            start_ms,
        }
    }

    pub fn platform(&self) -> &Platform {
        &self.platform
    }

    pub fn add_plant(&mut self, plc: Arc<PlcSimulator>) {
        self.plants.push(plc);
    }

    pub fn add_agent(&mut self, agent: impl Runnable + 'static) {
        self.agents.push(Box::new(agent));
    }

    pub fn now_ms(&self) -> i64 {
        self.platform.now_ms()
    }

    pub fn elapsed_ms(&self) -> i64 {
        self.now_ms() - self.start_ms
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// Steps agents at the current instant until all are idle. Returns the
    /// number of rounds that did work.
    pub fn settle(&mut self) -> usize {
        let now = self.now_ms();
        let mut rounds = 0;
        loop {
            let mut worked = false;
            for a in self.agents.iter_mut() {
                worked |= a.step(now);
            }
            self.agents.retain(|a| !a.is_stopped());
            if !worked {
                return rounds;
            }
            rounds += 1;
            assert!(rounds < MAX_SETTLE_ROUNDS, "agents did not reach quiescence at t={now}");
        }
    }

    /// Runs every event up to and including `epoch_ms`, then leaves the
    /// clock there with all agents idle.
    pub fn run_until(&mut self, epoch_ms: i64) {
        loop {
            self.settle();
            let next_agent = self.agents.iter().filter_map(|a| a.deadline()).min();
            let next = next_agent.map_or(self.next_tick_ms, |d| d.min(self.next_tick_ms));
            let now = self.now_ms();
            if next > epoch_ms {
                if epoch_ms > now {
                    self.platform.clock().advance_to(epoch_ms);
                    self.settle();
                }
                return;
            }
            self.platform.clock().advance_to(next.max(now));
            if self.next_tick_ms <= self.now_ms() {
                for p in &self.plants {
                    p.tick(self.tick);
                }
                self.ticks += 1;
                self.next_tick_ms += self.tick_ms;
            }
        }
    }

    pub fn run_for(&mut self, d: Duration) {
        let until = self.now_ms() + d.as_millis() as i64;
        self.run_until(until);
    }
}

/// One OS thread per agent on the wall clock, plus one thread ticking the
/// plants.
pub struct ThreadedDriver {
    platform: Platform,
    stop: Arc<AtomicBool>,
    mailboxes: Vec<Arc<Mailbox>>,
    threads: Vec<JoinHandle<()>>,
}

/// Longest an idle agent sleeps before re-checking its behaviours.
const IDLE_WAIT: Duration = Duration::from_millis(50);

impl ThreadedDriver {
    pub fn new(platform: Platform) -> Self {
        ThreadedDriver {
            platform,
            stop: Arc::new(AtomicBool::new(false)),
            mailboxes: Vec::new(),
            threads: Vec::new(),
        }
    }

    pub fn spawn(&mut self, mut agent: impl Runnable + 'static) {
        let platform = self.platform.clone();
        let stop = self.stop.clone();
        let mailbox = agent.mailbox();
        self.mailboxes.push(mailbox.clone());
        let name = agent.aid().to_string();
        let handle = std::thread::Builder::new()
            .name(name)
            .spawn(move || loop {
                // drain the mailbox before honouring a stop request
                if stop.load(Ordering::SeqCst) && mailbox.is_empty() {
                    break;
                }
                let now = platform.now_ms();
                let worked = agent.step(now);
                if agent.is_stopped() {
                    break;
                }
                if worked {
                    continue;
                }
                let wait = agent
                    .deadline()
                    .map(|d| Duration::from_millis((d - now).max(0) as u64))
                    .unwrap_or(IDLE_WAIT)
                    .min(IDLE_WAIT);
                if !wait.is_zero() {
                    mailbox.wait(wait);
                }
            })
            .expect("spawn agent thread");
        self.threads.push(handle);
    }

    /// Ticks `plants` every `tick` of wall time until shutdown.
    pub fn spawn_plants(&mut self, plants: Vec<Arc<PlcSimulator>>, tick: Duration) {
        let stop = self.stop.clone();
        let handle = std::thread::Builder::new()
            .name("plant".into())
            .spawn(move || {
                let mut next = Instant::now() + tick;
                while !stop.load(Ordering::SeqCst) {
                    let now = Instant::now();
                    if now < next {
                        std::thread::sleep((next - now).min(IDLE_WAIT));
                        continue;
                    }
                    for p in &plants {
                        p.tick(tick);
                    }
                    next += tick;
                }
            })
            .expect("spawn plant thread");
        self.threads.push(handle);
    }

    /// Asks every thread to stop, lets agents drain their mailboxes, and
    /// joins them.
    pub fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for m in &self.mailboxes {
            m.notify();
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for ThreadedDriver {
    fn drop(&mut self) {
        self.shutdown();
    }
}
