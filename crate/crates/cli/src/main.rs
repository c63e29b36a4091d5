use std::process::ExitCode;

use clap::Parser;
use glyphctl::args::{Cli, Command, ServeArgs};
use glyphctl::{commands, server, CmdResult, Failure, Status};
use glyphctl_core::bench::{default_creative_templates, read_templates};

fn serve(args: &ServeArgs, threads: usize) -> CmdResult {
    let templates = match &args.templates {
        Some(p) => {
            let file = std::fs::File::open(p).map_err(|e| Failure::io(p, e))?;
            read_templates(std::io::BufReader::new(file)).map_err(|e| Failure::data(p, e))?
        }
        None => default_creative_templates(),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(threads)
        .enable_all()
        .build()
        .map_err(|e| Failure::io(std::path::Path::new("<runtime>"), e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.bind)
            .await
            .map_err(|e| Failure::io(std::path::Path::new(&args.bind.to_string()), e))?;
        eprintln!("listening on http://{}", args.bind);
        axum::serve(listener, server::router(templates))
            .await
            .map_err(|e| Failure::io(std::path::Path::new(&args.bind.to_string()), e))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return ExitCode::from(Status::Io as u8);
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Render(a) => commands::render_cmd(a),
        Command::Curate(a) => commands::curate_cmd(a),
        Command::Stats(a) => commands::stats_cmd(a),
        Command::Bench(a) => commands::bench_cmd(a),
        Command::Eval(a) => commands::eval_cmd(a),
        Command::Serve(a) => serve(a, threads),
    });
    match result {
        Ok(()) => ExitCode::from(Status::Ok as u8),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.status as u8)
        }
    }
}
