use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use spectral_contour::report::{all_pass, Check};
use spectral_contour_cli::commands::run_command;
use spectral_contour_cli::output::{write_atomic, Environment, Report, Timing};
use spectral_contour_cli::scene::{digest, parse_scene, parse_scene_str, Scene};
use spectral_contour_cli::Command;

#[derive(Parser)]
#[command(name = "spectral-contour", version, about = "Boundary-integral checks for matrix functional calculi")]
struct Cli {
    command: Command,
    /// Scene file (TOML). Optional for `selftest`.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Override the contour node count.
    #[arg(long)]
    nodes: Option<usize>,
    /// Override the scene seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the report and artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write CSV artifacts.
    #[arg(long)]
    csv: bool,
}

fn load(cli: &Cli) -> Result<(Scene, String), String> {
    let (mut scene, bytes) = match &cli.scene {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            (parse_scene(path).map_err(|e| e.to_string())?, bytes)
        }
        None if cli.command == Command::Selftest => (parse_scene_str("").map_err(|e| e.to_string())?, Vec::new()),
        None => return Err(format!("`{}` needs --scene", cli.command.name())),
    };
    if let Some(n) = cli.nodes {
        scene.nodes = n;
    }
    if let Some(s) = cli.seed {
        scene.seed = Some(s);
    }
    scene.validate().map_err(|e| e.to_string())?;
    scene.require(cli.command).map_err(|e| e.to_string())?;
    Ok((scene, digest(&bytes)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scene, scene_digest) = match load(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let start = Instant::now();
    let (checks, summary, artifacts, error) = match run_command(cli.command, &scene, cli.csv) {
        Ok(o) => (o.checks, o.summary, o.artifacts, None),
        Err(e) => (vec![Check::error("command", &e)], serde_json::Value::Null, Vec::new(), Some(e)),
    };
    let pass = all_pass(&checks) && error.is_none();
    let report = Report {
        command: cli.command.name().to_string(),
        scene_digest,
        checks,
        pass,
        error,
        summary,
        environment: Environment { nodes: scene.nodes, seed: scene.seed, version: env!("CARGO_PKG_VERSION") },
        timing: Timing { elapsed_seconds: start.elapsed().as_secs_f64() },
        tolerances: scene.tolerances,
    };
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return ExitCode::from(2);
    }
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    let mut written = vec![cli.out.join(format!("{}-report.json", report.command))];
    let mut io = write_atomic(&written[0], json.as_bytes());
    for a in &artifacts {
        let path = cli.out.join(&a.name);
        io = io.and_then(|_| write_atomic(&path, &a.bytes));
        written.push(path);
    }
    if let Err(e) = io {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(2);
    }
    // a closed stdout (e.g. piped into `head`) must not turn into a panic
    let mut out = std::io::stdout().lock();
    for c in &report.checks {
        let mark = if c.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{mark} {} = {:.6e} (limit {:.3e})", c.name, c.value, c.tolerance);
    }
    for p in &written {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
