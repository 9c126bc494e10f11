use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use codedlab_cli::{has_unrecoverable, load_config, run, write_csv, write_jsonl, write_rows, CliError, Command, Format};

#[derive(Clone, Copy, ValueEnum)]
enum CommandArg {
    Gc,
    Cmm,
    Sketch,
    Descend,
    Report,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Gc => Command::Gc,
            CommandArg::Cmm => Command::Cmm,
            CommandArg::Sketch => Command::Sketch,
            CommandArg::Descend => Command::Descend,
            CommandArg::Report => Command::Report,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

/// Run a coded-computing experiment from a config file.
#[derive(Parser)]
#[command(name = "codedlab", version)]
struct Args {
    command: CommandArg,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent from both here and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

fn execute(args: Args) -> Result<bool, CliError> {
    let mut config = load_config(&args.config)?;
    let command = Command::from(args.command);
    if config.command != command {
        return Err(CliError::Config(vec![codedlab_cli::ConfigError {
            line: None,
            message: format!("command `{command}` does not match the config's [{}] section", config.command),
        }]));
    }
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    if let Some(out) = args.out {
        config = config.with_out(out);
    }
    if let Some(format) = args.format {
        config = config.with_format(match format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
        });
    }

    let threads = std::env::var("CODEDLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("thread pool");
    let rows = pool.install(|| run(&config))?;

    match &config.out {
        Some(path) => write_rows(&rows, &config, path)?,
        None => {
            let stdout = io::stdout().lock();
            let io_err = |source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            };
            match config.format {
                Format::Csv => write_csv(&rows, &config, stdout),
                Format::Jsonl => write_jsonl(&rows, &config, stdout),
            }
            .map_err(io_err)?;
        }
    }
    Ok(has_unrecoverable(&rows))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Args::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            let _ = writeln!(io::stderr(), "codedlab: some rounds were unrecoverable");
            ExitCode::from(3)
        }
        Err(e) => {
            let _ = writeln!(io::stderr(), "codedlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
