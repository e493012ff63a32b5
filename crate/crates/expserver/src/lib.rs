//! Experiment server for human-bot Hanabi sessions. Each participant plays
//! two blocks of games against two bots, rates each bot after its block and
//! compares them at the end. Every state change is appended to an event log
//! so the server can rebuild its sessions after a restart.

pub mod api;
pub mod balancer;
pub mod export;
pub mod session;
pub mod store;

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use hanabi_core::agents::{default_pool, AgentSpec};
use hanabi_core::harness::{load_pool, validate_pool};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use api::router;
use balancer::Balancer;
use session::{Session, SessionError};
use store::{read_log, recover, EventLog};

/// Version of every JSON payload and log entry.
pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub port: u16,
    /// Agent pool TOML; the default pool when absent.
    pub pool_file: Option<PathBuf>,
    pub data_dir: PathBuf,
    /// Seed for session ids, deck seeds and tie-breaking; drawn from the OS
    /// when absent.
    pub seed: Option<u64>,
    pub max_sessions_per_bot: Option<u32>,
}

impl Default for ServerConfig {
    fn default() -> ServerConfig {
        ServerConfig { port: 8080, pool_file: None, data_dir: PathBuf::from("data"), seed: None, max_sessions_per_bot: None }
    }
}

impl ServerConfig {
    pub fn load(path: &Path) -> Result<ServerConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

pub struct AppState {
    pool: Vec<AgentSpec>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    /// Creation order, for stable exports.
    order: Mutex<Vec<String>>,
    balancer: Mutex<Balancer>,
    log: Mutex<EventLog>,
    rng: Mutex<ChaCha8Rng>,
}

impl AppState {
    /// Loads the pool and rebuilds every session found in the data
    /// directory's log.
    pub fn open(config: &ServerConfig) -> Result<Arc<AppState>, String> {
        let pool = match &config.pool_file {
            Some(path) => load_pool(path).map_err(|e| e.to_string())?,
            None => default_pool(),
        };
        validate_pool(&pool).map_err(|e| e.to_string())?;
        let seed = config.seed.unwrap_or_else(|| rand::rng().random());
        let mut balancer = Balancer::new(pool.iter().map(|s| s.name.clone()).collect(), config.max_sessions_per_bot, seed)
            .map_err(|e| e.to_string())?;
        let log = EventLog::open(&config.data_dir).map_err(|e| format!("{}: {e}", config.data_dir.display()))?;
        let recovered = recover(&read_log(log.path())?)?;
        let mut sessions = HashMap::new();
        let mut order = Vec::new();
        for s in recovered {
            balancer.record(&s.bots[0].name, &s.bots[1].name);
            order.push(s.id.clone());
            sessions.insert(s.id.clone(), Arc::new(Mutex::new(s)));
        }
        if !order.is_empty() {
            log::info!("recovered {} sessions from {}", order.len(), log.path().display());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Skip past ids already handed out under the same seed.
        for _ in 0..order.len() {
            rng.random::<(u128, u64)>();
        }
        Ok(Arc::new(AppState {
            pool,
            sessions: Mutex::new(sessions),
            order: Mutex::new(order),
            balancer: Mutex::new(balancer),
            log: Mutex::new(log),
            rng: Mutex::new(rng),
        }))
    }

    fn spec(&self, name: &str) -> AgentSpec {
        self.pool.iter().find(|s| s.name == name).expect("balancer names come from the pool").clone()
    }

    pub(crate) fn create_session(
        &self,
        familiarity: Option<u8>,
        screened: bool,
    ) -> Result<Arc<Mutex<Session>>, SessionError> {
        let (first, second) = self.balancer.lock().expect("balancer lock").assign()?;
        let (id, seed) = {
            let mut sessions = self.sessions.lock().expect("sessions lock");
            let mut rng = self.rng.lock().expect("rng lock");
            let (mut raw, mut seed): (u128, u64) = rng.random();
            while sessions.contains_key(&format!("{raw:032x}")) {
                (raw, seed) = rng.random();
            }
            let id = format!("{raw:032x}");
            let session = Session::new(id.clone(), seed, [self.spec(&first), self.spec(&second)], familiarity, screened);
            sessions.insert(id.clone(), Arc::new(Mutex::new(session)));
            (id, seed)
        };
        log::debug!("session {id} seed {seed}");
        self.order.lock().expect("order lock").push(id.clone());
        self.session(&id)
    }

    pub fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions
            .lock()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(format!("no session {id}")))
    }

    /// Every session in creation order.
    pub fn all_sessions(&self) -> Vec<Arc<Mutex<Session>>> {
        let order = self.order.lock().expect("order lock").clone();
        order.iter().filter_map(|id| self.session(id).ok()).collect()
    }

    pub fn sync_log(&self) -> std::io::Result<()> {
        self.log.lock().expect("log lock").sync()
    }
}

/// Binds the configured port on all interfaces.
pub async fn bind(config: &ServerConfig) -> Result<tokio::net::TcpListener, String> {
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    tokio::net::TcpListener::bind(addr).await.map_err(|e| format!("{addr}: {e}"))
}

/// Serves until `shutdown` resolves, then syncs the log to disk.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), String> {
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| e.to_string())?;
    state.sync_log().map_err(|e| e.to_string())?;
    log::info!("event log synced");
    Ok(())
}
