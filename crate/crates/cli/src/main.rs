use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use liesys_cli::report::REPORT_SCHEMA;
use liesys_cli::{catalog, run_command, CliError, Context, Overrides, ProblemFile, Report};

#[derive(Parser)]
#[command(name = "liesys", version, about = "Lie systems and their superposition rules")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Flags {
    /// Integrator tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Allowed drift of the superposition constants
    #[arg(long, global = true)]
    tol_const: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Time interval as `a,b`
    #[arg(long, global = true, value_parser = parse_span, allow_hyphen_values = true)]
    t_span: Option<[f64; 2]>,
    /// Write the JSON report to this file (`-` for stdout)
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Directory for CSV trajectory dumps
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Adjoin brackets until the family closes
    #[arg(long, global = true)]
    complete: bool,
    /// Sample count for the rank criterion
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Superposition constants as a comma-separated list
    #[arg(long, global = true, value_parser = parse_list, allow_hyphen_values = true)]
    k: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Lie closure of the fields, with structure constants
    Closure { file: PathBuf },
    /// Minimal number of particular solutions
    M { file: PathBuf },
    /// Integrate the system from task.x0
    Solve { file: PathBuf },
    /// Rebuild a solution from particular ones through a rule
    Superpose { file: PathBuf },
    /// Check rules for tangency and constancy along solutions
    Verify { file: PathBuf },
    /// Solve the group equation and check the action
    Group { file: PathBuf },
    /// First-order PDE systems
    Pde {
        #[command(subcommand)]
        action: PdeCommand,
    },
    /// Decide whether a function combination of prolonged fields is a prolongation
    Prolongation { file: PathBuf },
    /// The bundled catalog
    Examples {
        #[command(subcommand)]
        action: ExamplesCommand,
    },
    /// Print the report JSON schema
    Schema,
}

#[derive(Subcommand)]
enum PdeCommand {
    /// Zero-curvature test
    Check { file: PathBuf },
    /// Path solving with a path-independence audit
    Solve { file: PathBuf },
    /// Superposition over a parameter grid
    Superpose { file: PathBuf },
}

#[derive(Subcommand)]
enum ExamplesCommand {
    List,
    Run { name: String },
    RunAll,
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{}': {}", x, e)))
        .collect()
}

fn parse_span(s: &str) -> Result<[f64; 2], String> {
    let v = parse_list(s)?;
    <[f64; 2]>::try_from(v).map_err(|_| "expected two numbers a,b".to_string())
}

fn read_problem(path: &PathBuf) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e)))?;
    ProblemFile::from_json(&text)
}

fn execute(cli: &Cli) -> Result<Option<Report>, CliError> {
    let f = &cli.flags;
    let ov = Overrides {
        tol: f.tol,
        tol_const: f.tol_const,
        seed: f.seed,
        t_span: f.t_span,
        complete: f.complete,
        samples: f.samples,
        k: f.k.clone(),
        csv: f.csv.clone(),
    };
    let single = |name: &str, file: &PathBuf| -> Result<Option<Report>, CliError> {
        let p = read_problem(file)?;
        let ctx = Context::new(&p, &ov)?;
        run_command(name, &p, &ctx).map(Some)
    };
    match &cli.command {
        Command::Closure { file } => single("closure", file),
        Command::M { file } => single("m", file),
        Command::Solve { file } => single("solve", file),
        Command::Superpose { file } => single("superpose", file),
        Command::Verify { file } => single("verify", file),
        Command::Group { file } => single("group", file),
        Command::Prolongation { file } => single("prolongation", file),
        Command::Pde { action } => match action {
            PdeCommand::Check { file } => single("pde check", file),
            PdeCommand::Solve { file } => single("pde solve", file),
            PdeCommand::Superpose { file } => single("pde superpose", file),
        },
        Command::Examples { action } => match action {
            ExamplesCommand::List => {
                for name in catalog::names() {
                    let p = catalog::load(name)?;
                    println!("{:<26} {}", name, p.description.unwrap_or_default());
                }
                Ok(None)
            }
            ExamplesCommand::Run { name } => catalog::run(name, f.seed.unwrap_or(0), &ov).map(Some),
            ExamplesCommand::RunAll => catalog::run_all(f.seed.unwrap_or(0), &ov).map(Some),
        },
        Command::Schema => {
            print!("{}", REPORT_SCHEMA);
            Ok(None)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(report)) => {
            match &cli.flags.json {
                Some(p) if p.as_os_str() == "-" => println!("{}", report.to_json()),
                Some(p) => {
                    if let Err(e) = std::fs::write(p, report.to_json()) {
                        eprintln!("error: {}: {}", p.display(), e);
                        return ExitCode::from(1);
                    }
                    print!("{}", report.render_text());
                }
                None => print!("{}", report.render_text()),
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
