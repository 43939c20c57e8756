//! Newline-delimited JSON envelopes over TCP, one connection per remote
//! platform. AID addresses keep their `http://host:port/acc` form but only
//! the host and port are used.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::{Mutex, Weak};
use std::time::Duration;

use icn_core::acl::AclMessage;

use super::{Delivery, Platform, PlatformInner};

pub const CONNECT_RETRIES: u32 = 3;
pub const RETRY_BACKOFF: Duration = Duration::from_millis(250);

#[derive(Default)]
pub(super) struct Transport {
    connections: Mutex<HashMap<String, TcpStream>>,
}

/// `http://host:port/acc` → `host:port`.
pub(super) fn socket_address(url: &str) -> &str {
    let rest = url.split_once("://").map_or(url, |(_, r)| r);
    rest.split('/').next().unwrap_or(rest)
}

impl Transport {
    /// Writes one envelope line to `platform`, connecting on first use and
    /// retrying the connection up to [`CONNECT_RETRIES`] times.
    pub(super) fn send(&self, platform: &str, url: &str, line: &str) -> Delivery {
        let mut conns = self.connections.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(stream) = conns.get_mut(platform) {
            if write_line(stream, line).is_ok() {
                return Delivery::Delivered;
            }
            conns.remove(platform);
        }
        let target = socket_address(url);
        let mut last_error = String::new();
        for attempt in 0..=CONNECT_RETRIES {
            if attempt > 0 {
                std::thread::sleep(RETRY_BACKOFF);
            }
            match TcpStream::connect(target) {
                Ok(mut stream) => {
                    let _ = stream.set_nodelay(true);
                    match write_line(&mut stream, line) {
                        Ok(()) => {
                            conns.insert(platform.to_string(), stream);
                            return Delivery::Delivered;
                        }
                        Err(e) => last_error = e.to_string(),
                    }
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Delivery::Transport {
            retries: CONNECT_RETRIES,
            error: format!("{target}: {last_error}"),
        }
    }
}

fn write_line(stream: &mut TcpStream, line: &str) -> std::io::Result<()> {
    stream.write_all(line.as_bytes())?;
    stream.write_all(b"\n")?;
    stream.flush()
}

pub(super) fn listen(addr: &str, platform: Weak<PlatformInner>) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr)?;
    let bound = listener.local_addr()?;
    std::thread::Builder::new()
        .name(format!("acc-listen-{bound}"))
        .spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                if platform.strong_count() == 0 {
                    break;
                }
                let platform = platform.clone();
                let _ = std::thread::Builder::new()
                    .name("acc-conn".into())
                    .spawn(move || serve(stream, platform));
            }
        })?;
    Ok(bound)
}

fn serve(stream: TcpStream, platform: Weak<PlatformInner>) {
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let Some(inner) = platform.upgrade() else { break };
        let platform = Platform { inner };
        match AclMessage::from_json_line(&line) {
            Ok(msg) => platform.deliver_incoming(msg),
            Err(e) => log::warn!("{}: bad envelope: {e}", platform.name()),
        }
    }
}
