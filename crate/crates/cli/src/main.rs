use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};
use xat_core::{
    compile_document, decide, explain, ingest_users, Action, AllPaths, PathExpr, RuleDocument, XatStore,
};

/// Compile XML authorization rules into an access table and check queries against it.
#[derive(Parser, Debug)]
#[command(name = "xat", version)]
struct Cli {
    /// Increase log verbosity (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply rule documents in order and write the resulting table.
    Compile(CompileArgs),
    /// Report which paths a subject may read for a query.
    Check(CheckArgs),
    /// List the absolute paths of the schema.
    Paths(PathsArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct PathSource {
    /// XML instance document to derive paths from.
    #[arg(long, value_name = "FILE")]
    paths_doc: Option<PathBuf>,
    /// Newline-separated list of absolute paths.
    #[arg(long, value_name = "FILE")]
    paths_list: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompileArgs {
    #[command(flatten)]
    source: PathSource,
    /// Table CSV; loaded if present, then overwritten.
    #[arg(long, value_name = "FILE")]
    xat: PathBuf,
    /// Rule document, applied in the order given.
    #[arg(long = "rules", value_name = "FILE")]
    rules: Vec<PathBuf>,
    /// Users XML document to validate and export.
    #[arg(long, value_name = "FILE")]
    users: Option<PathBuf>,
    /// Where to write the users CSV.
    #[arg(long, value_name = "FILE", requires = "users")]
    users_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("who").required(true))]
struct CheckArgs {
    #[command(flatten)]
    source: PathSource,
    #[arg(long, value_name = "FILE")]
    xat: PathBuf,
    /// Subject (role) to check.
    #[arg(long, value_name = "NAME", group = "who")]
    subject: Option<String>,
    /// User ID, resolved to a role through --users.
    #[arg(long, value_name = "ID", group = "who", requires = "users")]
    user: Option<String>,
    #[arg(long, value_name = "FILE")]
    users: Option<PathBuf>,
    /// Path expression, optionally with a trailing [condition].
    #[arg(long, value_name = "EXPR")]
    query: String,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct PathsArgs {
    #[command(flatten)]
    source: PathSource,
    /// Print only the number of paths.
    #[arg(long)]
    count: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Text,
    Csv,
}

mod status {
    pub const OK: u8 = 0;
    pub const INTERNAL: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const ALL_DENIED: u8 = 3;
    pub const NO_MATCH: u8 = 4;
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: status::USAGE, message: message.into() }
    }

    fn at(file: &Path, err: xat_core::Error) -> Failure {
        let code = if err.is_syntax() { status::USAGE } else { status::INTERNAL };
        Failure { code, message: format!("{}: {err}", file.display()) }
    }

    fn io(file: &Path, err: io::Error) -> Failure {
        Failure { code: status::INTERNAL, message: format!("{}: {err}", file.display()) }
    }
}

type Outcome = Result<u8, Failure>;

fn read(file: &Path) -> Result<String, Failure> {
    fs::read_to_string(file).map_err(|e| Failure::io(file, e))
}

fn load_paths(source: &PathSource) -> Result<AllPaths, Failure> {
    let (file, paths) = match (&source.paths_doc, &source.paths_list) {
        (Some(f), _) => (f, AllPaths::from_document(&read(f)?)),
        (None, Some(f)) => (f, AllPaths::from_list(&read(f)?)),
        (None, None) => return Err(Failure::usage("one of --paths-doc or --paths-list is required")),
    };
    let paths = paths.map_err(|e| Failure::at(file, e))?;
    debug!("{} paths from {}", paths.len(), file.display());
    Ok(paths)
}

fn load_xat(file: &Path, required: bool) -> Result<XatStore, Failure> {
    if !required && !file.exists() {
        info!("{} does not exist; starting from an empty table", file.display());
        return Ok(XatStore::new());
    }
    XatStore::from_csv_str(&read(file)?).map_err(|e| Failure::at(file, e))
}

/// Writes through a temp file in the target directory so readers never see a partial table.
fn write_atomic(file: &Path, fill: impl FnOnce(&mut dyn Write) -> xat_core::Result<()>) -> Result<(), Failure> {
    let dir = match file.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(file, e))?;
    fill(&mut tmp).map_err(|e| Failure::at(file, e))?;
    tmp.as_file().sync_all().map_err(|e| Failure::io(file, e))?;
    tmp.persist(file).map_err(|e| Failure::io(file, e.error))?;
    Ok(())
}

fn cmd_compile(args: &CompileArgs) -> Outcome {
    let universe = load_paths(&args.source)?;
    let mut xat = load_xat(&args.xat, false)?;
    // Parse everything up front so a bad document aborts before any change.
    let docs = args
        .rules
        .iter()
        .map(|f| Ok((f, RuleDocument::parse(&read(f)?).map_err(|e| Failure::at(f, e))?)))
        .collect::<Result<Vec<_>, Failure>>()?;
    let users = match &args.users {
        Some(f) => Some(ingest_users(&read(f)?).map_err(|e| Failure::at(f, e))?),
        None => None,
    };

    let mut out = io::stdout().lock();
    for (file, doc) in &docs {
        let summary = compile_document(doc, &universe, &mut xat).map_err(|e| Failure::at(file, e))?;
        writeln!(out, "{}: {} rules, {summary}", file.display(), doc.len()).map_err(|e| Failure::io(file, e))?;
    }
    write_atomic(&args.xat, |w| xat.export_csv(w))?;
    writeln!(out, "{}: {} rows", args.xat.display(), xat.len()).map_err(|e| Failure::io(&args.xat, e))?;

    if let (Some(users), Some(target)) = (&users, &args.users_out) {
        write_atomic(target, |w| users.export_csv(w))?;
        writeln!(out, "{}: {} users", target.display(), users.len()).map_err(|e| Failure::io(target, e))?;
    }
    Ok(status::OK)
}

fn cmd_check(args: &CheckArgs) -> Outcome {
    let query = PathExpr::parse(&args.query).map_err(|e| Failure::usage(format!("query: {e}")))?;
    let universe = load_paths(&args.source)?;
    let xat = load_xat(&args.xat, true)?;
    let subject = match (&args.subject, &args.user) {
        (Some(s), _) => s.clone(),
        (None, Some(id)) => {
            let file = args.users.as_deref().expect("clap enforces --users with --user");
            let users = ingest_users(&read(file)?).map_err(|e| Failure::at(file, e))?;
            let role = users.role_of(id).ok_or_else(|| Failure::usage(format!("unknown user {id}")))?;
            debug!("user {id} has role {role}");
            role.to_string()
        }
        (None, None) => return Err(Failure::usage("one of --subject or --user is required")),
    };

    let decision = decide(&subject, Action::Select, &query, &universe, &xat);
    let stdout = Path::new("<stdout>");
    match args.format {
        Format::Text => print!("{}", explain(&decision)),
        Format::Csv => decision
            .write_csv(io::stdout().lock())
            .map_err(|e| Failure::at(stdout, e))?,
    }
    Ok(if decision.is_unmatched() {
        status::NO_MATCH
    } else if decision.any_granted() {
        status::OK
    } else {
        status::ALL_DENIED
    })
}

fn cmd_paths(args: &PathsArgs) -> Outcome {
    let universe = load_paths(&args.source)?;
    if args.count {
        println!("{}", universe.len());
    } else {
        print!("{}", universe.to_list());
    }
    Ok(status::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let outcome = match &cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Check(a) => cmd_check(a),
        Command::Paths(a) => cmd_paths(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("xat: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
