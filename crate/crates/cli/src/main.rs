//! `junc`: check, compile or interpret Juniper programs.
//!
//! Exit status: 0 on success, 1 when the program has errors, 2 for I/O and
//! usage problems, 3 when the interpreter faults.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use juniper::interp::{read_schedule, write_trace, ScheduleError, SimHost};
use juniper::pipeline::{self, Checked, Options};
use juniper::{stdlib, Diagnostic};

#[derive(Parser)]
#[command(name = "junc", version, about = "Juniper compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and typecheck.
    Check(Common),
    /// Compile to a single C++ file.
    Emit {
        #[command(flatten)]
        common: Common,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run `main` in the reference interpreter against a pin schedule and
    /// write the resulting pin trace.
    RunInterp {
        #[command(flatten)]
        common: Common,
        /// CSV `time_ms,pin,level` with a header line.
        #[arg(long)]
        schedule: PathBuf,
        /// Loop iterations to run before stopping.
        #[arg(long, default_value_t = 1000)]
        budget: u64,
        /// Milliseconds the clock advances per loop iteration.
        #[arg(long, default_value_t = 100)]
        tick: u32,
        /// Trace destination; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Source files, in module order.
    files: Vec<PathBuf>,
    /// Do not prepend the bundled Prelude, Signal, Io, Time and Button modules.
    #[arg(long)]
    no_stdlib: bool,
    #[arg(long, value_enum, default_value_t = DiagFormat::Human)]
    diag: DiagFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagFormat {
    Human,
    /// One `file:line:col: severity: message` per line.
    Lines,
}

#[derive(Debug, thiserror::Error)]
enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Schedule { path: PathBuf, source: ScheduleError },
    #[error("compilation failed")]
    Language,
    #[error("{0}")]
    Fault(juniper::interp::RuntimeFault),
}

impl Error {
    fn code(&self) -> u8 {
        match self {
            Error::Language => 1,
            Error::Io { .. } | Error::Schedule { .. } => 2,
            Error::Fault(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, Error::Language) {
                eprintln!("junc: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Check(common) => compile(&common).map(|_| ()),
        Command::Emit { common, output } => {
            let checked = compile(&common)?;
            let unit = pipeline::emit(&checked);
            std::fs::write(&output, unit.text).map_err(io_err(&output))
        }
        Command::RunInterp { common, schedule, budget, tick, output } => {
            let events = File::open(&schedule)
                .map_err(io_err(&schedule))
                .and_then(|f| read_schedule(f).map_err(|source| Error::Schedule { path: schedule.clone(), source }))?;
            let checked = compile(&common)?;
            let mut host = SimHost::new(tick, budget, events);
            let outcome = pipeline::run(&checked, &mut host);
            // The trace is written even when the run faults.
            let written = match &output {
                Some(path) => File::create(path)
                    .map_err(io_err(path))
                    .and_then(|f| write_trace(f, host.trace()).map_err(io_err(path))),
                None => write_trace(io::stdout().lock(), host.trace()).map_err(io_err(Path::new("<stdout>"))),
            };
            outcome.map_err(Error::Fault)?;
            written
        }
    }
}

/// Reads, parses and checks the inputs, printing every diagnostic.
fn compile(common: &Common) -> Result<Checked, Error> {
    let mut files = Vec::with_capacity(common.files.len());
    for path in &common.files {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        files.push((path.display().to_string(), text));
    }
    let result = pipeline::check(&files, Options { stdlib: !common.no_stdlib });
    let diags = match &result {
        Ok(c) => &c.diagnostics,
        Err(f) => &f.diagnostics,
    };
    report(diags, &files, common.diag);
    result.map_err(|_| Error::Language)
}

fn report(diags: &[Diagnostic], files: &[(String, String)], format: DiagFormat) {
    let mut err = io::stderr().lock();
    for d in diags {
        let line = match format {
            DiagFormat::Lines => d.render_line(),
            DiagFormat::Human => d.render_human(source_of(&d.span.file, files)),
        };
        let _ = writeln!(err, "{line}");
    }
}

fn source_of<'a>(file: &str, files: &'a [(String, String)]) -> Option<&'a str> {
    files
        .iter()
        .find(|(name, _)| name == file)
        .map(|(_, text)| text.as_str())
        .or_else(|| stdlib::SOURCES.iter().find(|(name, _)| *name == file).map(|(_, text)| *text))
}
