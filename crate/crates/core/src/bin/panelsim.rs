use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use panelsim::client::{self, Session};
use panelsim::device::{Device, DeviceConfig};
use panelsim::netlist;
use panelsim::protocol::{Command, Reply, Status};
use panelsim::server::Server;

const DEFAULT_PORT: u16 = 5025;

#[derive(Parser)]
#[command(name = "panelsim", version, about = "Lab-instrument front-panel emulator")]
#[command(after_help = client::command_table_help())]
struct Cli {
    /// TCP port of the emulator.
    #[arg(long, global = true, env = "PANELSIM_PORT", default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, global = true, default_value = "127.0.0.1")]
    host: String,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the emulator until SIGINT/SIGTERM (twice to force).
    Serve {
        /// Patch to load at startup; must lint without errors.
        #[arg(long)]
        patch: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sleep for the simulated duration of each command.
        #[arg(long)]
        pace: bool,
        /// ADC noise, volts RMS.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Check a patch file. Exit 0 if no errors, 1 if errors, 2 if unreadable.
    Lint { path: PathBuf },
    /// Send one command and print the response.
    #[command(after_help = client::command_table_help())]
    Exec {
        name: String,
        #[arg(allow_hyphen_values = true)]
        args: Vec<String>,
    },
    /// Capture a channel to CSV (t_us,code,volts).
    Capture {
        channel: u8,
        n: u16,
        dt_us: u32,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run a file of commands, one per line, `#` for comments. Relative
    /// patch paths resolve against the script's directory.
    Script { path: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Serve {
            ref patch,
            seed,
            pace,
            noise,
        } => serve(&cli.host, cli.port, patch.as_deref(), seed, pace, noise),
        Cmd::Lint { ref path } => lint(path),
        Cmd::Exec { ref name, ref args } => exec(&cli.host, cli.port, name, args),
        Cmd::Capture {
            channel,
            n,
            dt_us,
            ref out,
        } => capture(&cli.host, cli.port, channel, n, dt_us, out),
        Cmd::Script { ref path } => script(&cli.host, cli.port, path),
    };
    ExitCode::from(code)
}

fn serve(host: &str, port: u16, patch: Option<&Path>, seed: u64, pace: bool, noise: f64) -> u8 {
    let config = DeviceConfig {
        seed,
        adc_noise_sigma: noise,
    };
    let mut device = Device::new(&config);
    if let Some(path) = patch {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("panelsim: cannot read {}: {e}", path.display());
                return 2;
            }
        };
        let file = path.display().to_string();
        match device.load_patch(&text) {
            Ok(warnings) => eprint!("{}", netlist::render_all(&warnings, &file)),
            Err(rejected) => {
                eprint!("{}", netlist::render_all(&rejected.diagnostics, &file));
                if let Some(e) = rejected.build_error {
                    eprintln!("{file}: {e}");
                }
                return 2;
            }
        }
    }

    let shutdown = Arc::new(AtomicBool::new(false));
    for sig in [signal_hook::consts::SIGINT, signal_hook::consts::SIGTERM] {
        // The second signal finds the flag already set and exits immediately.
        let forced = signal_hook::flag::register_conditional_shutdown(sig, 1, Arc::clone(&shutdown));
        let graceful = signal_hook::flag::register(sig, Arc::clone(&shutdown));
        if let Err(e) = forced.and(graceful) {
            eprintln!("panelsim: cannot install signal handler: {e}");
            return 1;
        }
    }

    let mut server = match Server::bind((host, port), device, pace) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("panelsim: cannot bind {host}:{port}: {e}");
            return 3;
        }
    };
    match server.local_addr() {
        Ok(addr) => println!("listening on {addr}"),
        Err(e) => eprintln!("panelsim: {e}"),
    }
    let _ = io::stdout().flush();
    match server.run(&shutdown) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("panelsim: {e}");
            3
        }
    }
}

fn lint(path: &Path) -> u8 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("panelsim: cannot read {}: {e}", path.display());
            return 2;
        }
    };
    let diagnostics = match netlist::parse(&text) {
        Ok(n) => netlist::lint(&n),
        Err(d) => d,
    };
    print!("{}", netlist::render_all(&diagnostics, &path.display().to_string()));
    u8::from(netlist::has_errors(&diagnostics))
}

fn connect(host: &str, port: u16) -> Option<Session> {
    match Session::connect(host, port) {
        Ok(s) => Some(s),
        Err(e) => {
            eprintln!("panelsim: cannot connect to {host}:{port}: {e}");
            None
        }
    }
}

fn exec(host: &str, port: u16, name: &str, args: &[String]) -> u8 {
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let cmd = match client::parse_command(name, &args, Path::new(".")) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("panelsim: {e}");
            return 2;
        }
    };
    let Some(mut session) = connect(host, port) else {
        return 3;
    };
    match session.request(&cmd) {
        Ok(resp) => {
            println!("{}", client::render_response(&cmd, &resp));
            u8::from(resp.status != Status::Ok)
        }
        Err(e) => {
            eprintln!("panelsim: {e}");
            3
        }
    }
}

fn capture(host: &str, port: u16, channel: u8, n: u16, dt_us: u32, out: &Path) -> u8 {
    let cmd = Command::Capture { channel, n, dt_us };
    let Some(mut session) = connect(host, port) else {
        return 3;
    };
    let resp = match session.request(&cmd) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("panelsim: {e}");
            return 3;
        }
    };
    if resp.status != Status::Ok {
        println!("{}", resp.status);
        return 1;
    }
    let Some(Reply::Samples(samples)) = cmd.parse_reply(&resp.payload) else {
        eprintln!("panelsim: malformed capture payload");
        return 1;
    };
    let mut csv = String::from("t_us,code,volts\n");
    for (i, code) in samples.iter().enumerate() {
        let t = i as u64 * u64::from(dt_us);
        let volts = f64::from(*code) * 5.0 / 1023.0;
        csv.push_str(&format!("{t},{code},{volts:.4}\n"));
    }
    if let Err(e) = fs::write(out, csv) {
        eprintln!("panelsim: cannot write {}: {e}", out.display());
        return 1;
    }
    0
}

fn script(host: &str, port: u16, path: &Path) -> u8 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("panelsim: cannot read {}: {e}", path.display());
            return 2;
        }
    };
    let Some(mut session) = connect(host, port) else {
        return 3;
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match client::run_script(&mut session, &text, base, &mut out) {
        Ok(outcome) => u8::from(!outcome.all_ok()),
        Err(e) => {
            let _ = out.flush();
            eprintln!("panelsim: {e}");
            3
        }
    }
}
