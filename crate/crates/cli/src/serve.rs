use std::io::Write;
use std::path::PathBuf;

use vsens_service::AppState;

use crate::{display, Failure};

#[derive(clap::Args)]
pub struct Args {
    /// Port to listen on; 0 picks a free one.
    #[arg(long)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Directory that relative clip and mesh paths resolve against.
    #[arg(long, default_value = ".")]
    root: PathBuf,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::io(format!("cannot start runtime: {e}")))?;
    runtime.block_on(serve(args))
}

async fn serve(args: Args) -> Result<(), Failure> {
    let addr = format!("{}:{}", args.host, args.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| Failure::io(format!("cannot bind {addr}: {e}")))?;
    let bound = listener
        .local_addr()
        .map_err(|e| Failure::io(e.to_string()))?;
    // The only stdout line, so scripts using --port 0 can read the address.
    println!("http://{bound}");
    let _ = std::io::stdout().flush();
    eprintln!(
        "serving sessions from {} (Ctrl-C to stop)",
        display(&args.root)
    );
    let state = AppState::new(args.root);
    vsens_service::serve(listener, state, shutdown_signal())
        .await
        .map_err(|e| Failure::io(format!("server error: {e}")))?;
    log::info!("shut down");
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        if tokio::signal::ctrl_c().await.is_err() {
            std::future::pending::<()>().await;
        }
    };
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = ctrl_c => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => ctrl_c.await,
        }
    }
    #[cfg(not(unix))]
    ctrl_c.await;
}
