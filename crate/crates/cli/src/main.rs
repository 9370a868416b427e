use std::io::{self, Write};
use std::net::SocketAddr;
use std::process::ExitCode;

use clap::Parser;
use gradecast_cli::args::{Cli, Command, ServeArgs};
use gradecast_cli::commands::{
    cmd_evaluate, cmd_export, cmd_predict, cmd_schema, cmd_significance, cmd_synth, cmd_train, load_schema,
};
use gradecast_cli::{service, CliError, CliResult};
use gradecast_core::{QuestionnaireSchema, Registry};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Some(out)) => {
            let mut stdout = io::stdout().lock();
            match writeln!(stdout, "{out}").and_then(|_| stdout.flush()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(gradecast_cli::EXIT_INPUT)
                }
            }
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> CliResult<Option<String>> {
    let schema = load_schema(cli.schema.as_deref())?;
    let pretty = cli.pretty;
    let out = match &cli.command {
        Command::Train(a) => cmd_train(&schema, a, pretty)?,
        Command::Evaluate(a) => cmd_evaluate(&schema, a, pretty)?,
        Command::Predict(a) => cmd_predict(&schema, a, pretty)?,
        Command::Schema(a) => cmd_schema(&schema, a, pretty)?,
        Command::ExportModel(a) => cmd_export(a, pretty)?,
        Command::Significance(a) => cmd_significance(&schema, a, pretty)?,
        Command::Synth(a) => cmd_synth(&schema, a)?,
        Command::Serve(a) => {
            serve(schema, a)?;
            return Ok(None);
        }
    };
    Ok(Some(out))
}

fn serve(schema: QuestionnaireSchema, args: &ServeArgs) -> CliResult<()> {
    let mut registry = Registry::builtin(schema);
    for path in &args.models {
        let id = registry.register_file(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        eprintln!("registered {id}");
    }
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| CliError::input(format!("bad address: {e}")))?;
    let app = service::router(registry, args.static_dir.clone());
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(service::serve(addr, app))?;
    Ok(())
}
