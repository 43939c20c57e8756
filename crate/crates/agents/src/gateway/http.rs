//! HTTP and WebSocket front end of the gateway.

use std::io;
use std::net::SocketAddr;
use std::thread::JoinHandle;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, oneshot};

use super::{export_csv, GatewayError, GatewayHandle, SetpointOutcome};

pub fn router(handle: GatewayHandle) -> Router {
    Router::new()
        .route("/api/processes", get(list_processes))
        .route("/api/process/{name}", get(get_process))
        .route("/api/setpoint", post(post_setpoint))
        .route("/api/trend/{symbol}", get(get_trend))
        .route("/ws/stream", get(stream))
        .with_state(handle)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ProcessSummary {
    name: String,
    agent: String,
    stale: bool,
    variables: usize,
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, msg: impl ToString) -> Response {
    (status, Json(ErrorBody { error: msg.to_string() })).into_response()
}

async fn list_processes(State(h): State<GatewayHandle>) -> Json<Vec<ProcessSummary>> {
    let views = h.views();
    Json(
        views
            .processes()
            .map(|p| ProcessSummary {
                name: p.name.clone(),
                agent: p.agent.clone(),
                stale: p.stale,
                variables: p.variables.len(),
            })
            .collect(),
    )
}

async fn get_process(State(h): State<GatewayHandle>, Path(name): Path<String>) -> Response {
    let view = h.views().process(&name).cloned();
    match view {
        Some(v) => Json(v).into_response(),
        None => error(StatusCode::NOT_FOUND, GatewayError::UnknownProcess(name)),
    }
}

#[derive(Deserialize)]
struct SetpointBody {
    process: String,
    symbol: String,
    value: f64,
}

async fn post_setpoint(State(h): State<GatewayHandle>, Json(body): Json<SetpointBody>) -> Response {
    let pending = match h.submit_setpoint(&body.process, &body.symbol, body.value) {
        Ok(p) => p,
        Err(e) => return error(StatusCode::NOT_FOUND, e),
    };
    // the agent answers Timeout itself; the extra margin only guards
    // against a stalled agent
    let limit = h.reply_timeout() * 2;
    match tokio::time::timeout(limit, pending.outcome()).await {
        Ok(Ok(outcome)) => Json(outcome).into_response(),
        Ok(Err(e)) => error(StatusCode::SERVICE_UNAVAILABLE, e),
        Err(_) => Json(SetpointOutcome::Timeout).into_response(),
    }
}

#[derive(Deserialize)]
struct Window {
    from: Option<i64>,
    to: Option<i64>,
}

async fn get_trend(State(h): State<GatewayHandle>, Path(symbol): Path<String>, Query(w): Query<Window>) -> Response {
    let from = w.from.unwrap_or(i64::MIN);
    let to = w.to.unwrap_or(i64::MAX);
    if from > to {
        return error(StatusCode::BAD_REQUEST, "`from` must not exceed `to`");
    }
    match symbol.strip_suffix(".csv") {
        Some(sym) => {
            let samples = h.views().trend(sym, from, to);
            ([(header::CONTENT_TYPE, "text/csv")], export_csv(&samples)).into_response()
        }
        None => Json(h.views().trend(&symbol, from, to)).into_response(),
    }
}

async fn stream(State(h): State<GatewayHandle>, ws: WebSocketUpgrade) -> Response {
    let rx = h.subscribe_events();
    ws.on_upgrade(move |socket| forward_events(socket, rx))
}

async fn forward_events(mut socket: WebSocket, mut rx: broadcast::Receiver<super::StreamEvent>) {
    loop {
        tokio::select! {
            event = rx.recv() => match event {
                Ok(ev) => {
                    let Ok(text) = serde_json::to_string(&ev) else { continue };
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    log::warn!("stream client lagged, {n} events dropped");
                }
                Err(broadcast::error::RecvError::Closed) => return,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}

/// The HTTP server running on its own thread with a private tokio runtime.
pub struct HttpServer {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl HttpServer {
    /// Binds before returning, so a port in use is reported here.
    pub fn start(handle: GatewayHandle, addr: SocketAddr) -> io::Result<HttpServer> {
        let std_listener = std::net::TcpListener::bind(addr)?;
        std_listener.set_nonblocking(true)?;
        let local = std_listener.local_addr()?;
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()?;
        let (tx, rx) = oneshot::channel::<()>();
        let thread = std::thread::Builder::new()
            .name("gateway-http".into())
            .spawn(move || {
                runtime.block_on(async move {
                    let listener = match tokio::net::TcpListener::from_std(std_listener) {
                        Ok(l) => l,
                        Err(e) => {
                            log::error!("gateway listener: {e}");
                            return;
                        }
                    };
                    let server = axum::serve(listener, router(handle)).with_graceful_shutdown(async {
                        let _ = rx.await;
                    });
                    if let Err(e) = server.await {
                        log::error!("gateway http server: {e}");
                    }
                });
                runtime.shutdown_background();
            })?;
        Ok(HttpServer {
            addr: local,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for HttpServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}
