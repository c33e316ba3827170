use std::path::{Path, PathBuf};

use anyhow::Context;
use labelassist_service::{router, serve, AppState};
use log::info;

use super::{load_project, CliError, CliResult, EXIT_BIND};

pub fn run(project: &Path, host: &str, port: u16, ui_dir: Option<PathBuf>) -> CliResult {
    let p = load_project(project)?;
    if let Some(dir) = &ui_dir {
        if !dir.is_dir() {
            return Err(CliError::input(
                "missing_directory",
                anyhow::anyhow!("UI directory {} does not exist", dir.display()),
            ));
        }
    }
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("cannot start async runtime")
        .map_err(|e| CliError::input("runtime", e))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("cannot bind {host}:{port}"))
            .map_err(|source| CliError {
                exit: EXIT_BIND,
                code: "bind_failure",
                source,
            })?;
        let addr = listener.local_addr().map_err(|e| CliError {
            exit: EXIT_BIND,
            code: "bind_failure",
            source: e.into(),
        })?;
        let progress = p.progress();
        println!("listening on http://{addr} ({} samples, {} labeled)", progress.total, progress.labeled);
        let app = router(AppState::new(p), ui_dir);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            info!("interrupted, shutting down");
        };
        serve(listener, app, shutdown)
            .await
            .map_err(|e| CliError::input("server_error", e))
    })
}
