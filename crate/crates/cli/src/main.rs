//! `screencost` command-line tool.
//!
//! Exit status: 0 on success, 2 when the configuration or arguments are
//! invalid, 3 when a run fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use screencost::config::{parse_config, ToolConfig};
use screencost::dtree;
use screencost::experiment::{compare, run_grid, GridResult, Method};
use screencost::report::{self, emit_table, Format, Manifest, Table};
use screencost::scenario::Scenario;
use screencost::sim::Mode;
use screencost::{analytic, Error};

const OUT_ENV: &str = "SCREENCOST_OUT";
const DEFAULT_OUT: &str = "screencost-out";

#[derive(Debug, Parser)]
#[command(
    name = "screencost",
    version,
    about = "Cost comparison of search-intensity options at a screening checkpoint"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration document; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root seed for replication seeds.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Replications per scenario.
    #[arg(long, global = true, value_name = "N")]
    reps: Option<usize>,
    /// Output directory. Falls back to the config, then $SCREENCOST_OUT,
    /// then ./screencost-out.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Md,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Md => Format::Md,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Mc,
    Des0,
    Des1,
    Des2,
    Des3,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Mc => Mode::Mc,
            ModeArg::Des0 => Mode::Des0,
            ModeArg::Des1 => Mode::Des1,
            ModeArg::Des2 => Mode::Des2,
            ModeArg::Des3 => Mode::Des3,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Sa,
    Dt,
    Mc,
    Des0,
    Des1,
    Des2,
    Des3,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sa => Method::Sa,
            MethodArg::Dt => Method::Dt,
            MethodArg::Mc => Method::Sim(Mode::Mc),
            MethodArg::Des0 => Method::Sim(Mode::Des0),
            MethodArg::Des1 => Method::Sim(Mode::Des1),
            MethodArg::Des2 => Method::Sim(Mode::Des2),
            MethodArg::Des3 => Method::Sim(Mode::Des3),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form scenario analysis grids and expected costs.
    Sa,
    /// Decision-tree rollback, expected end counts and the tree itself.
    Dtree,
    /// Simulate the whole scenario grid in one mode.
    Sim {
        #[arg(long, value_enum)]
        mode: ModeArg,
    },
    /// Expected cost of every search option under several methods.
    Compare {
        /// Methods to compare, comma separated; all by default.
        #[arg(long, value_enum, value_delimiter = ',')]
        methods: Vec<MethodArg>,
    },
    /// Check a configuration document and print its hash.
    ValidateConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}

fn load_config(common: &Common) -> Result<ToolConfig, Error> {
    let document = match &common.config {
        Some(path) => fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?,
        None => String::new(),
    };
    let mut config = parse_config(&document)?;
    if let Some(seed) = common.seed {
        config.root_seed = seed;
    }
    if let Some(reps) = common.reps {
        config.replications.reps = reps;
    }
    config.validate()?;
    Ok(config)
}

fn output_dir(common: &Common, config: &ToolConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .or_else(|| {
            std::env::var_os(OUT_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Collects written files for the manifest.
struct Writer {
    dir: PathBuf,
    format: Format,
    manifest: Manifest,
}

impl Writer {
    fn table(&mut self, table: &Table, suffix: Option<&str>) -> Result<(), Error> {
        let path = emit_table(table, self.format, &self.dir, suffix)?;
        self.record(&path);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), Error> {
        fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.record(&path);
        Ok(())
    }

    fn record(&mut self, path: &Path) {
        let name = path
            .file_name()
            .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        self.manifest.files.push(name);
    }

    fn finish(mut self) -> Result<PathBuf, Error> {
        self.manifest.files.sort();
        self.manifest.write(&self.dir)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = load_config(&cli.common)?;
    let name = match &cli.command {
        Command::ValidateConfig => {
            println!("config ok");
            println!("hash {}", config.hash());
            println!(
                "{} traffic levels, {} clandestine levels, {} search options",
                config.grid.traffic_growth.len(),
                config.grid.clandestine_growth.len(),
                config.grid.search_growth.len()
            );
            return Ok(());
        }
        Command::Sa => "sa",
        Command::Dtree => "dtree",
        Command::Sim { .. } => "sim",
        Command::Compare { .. } => "compare",
    };
    let mut writer = Writer {
        dir: output_dir(&cli.common, &config),
        format: cli.common.format.into(),
        manifest: Manifest::new(name, &config),
    };
    match &cli.command {
        Command::Sa => sa(&config, &mut writer)?,
        Command::Dtree => dtree_cmd(&config, &mut writer)?,
        Command::Sim { mode } => sim(Mode::from(*mode), &config, &mut writer)?,
        Command::Compare { methods } => compare_cmd(methods, &config, &mut writer)?,
        Command::ValidateConfig => unreachable!("handled above"),
    }
    writer.text("config.json", &config.to_json())?;
    let manifest = writer.finish()?;
    println!("wrote {}", manifest.display());
    Ok(())
}

fn percent_suffix(prefix: &str, x: f64) -> String {
    format!("{prefix}{}", (x * 100.0).round() as i64)
}

fn print_costs(result: &GridResult) {
    let label = result.method.label();
    for (sg, cost) in result.sg_levels.iter().zip(&result.option_costs) {
        let sg = format!("{}%", (sg * 100.0).round() as i64);
        println!("{label:6} SG {sg:>4}  {}", cost.display_pounds());
    }
    println!(
        "{label:6} cheapest SG {}%",
        (result.cheapest_growth() * 100.0).round() as i64
    );
}

fn sa(config: &ToolConfig, w: &mut Writer) -> Result<(), Error> {
    for level in &config.grid.clandestine_growth {
        let grid = analytic::sa_grid(
            level.value,
            &config.grid,
            &config.baseline,
            &config.cost_model,
        )?;
        let suffix = percent_suffix("cg", level.value);
        for table in report::sa_tables(&grid) {
            w.table(&table, Some(&suffix))?;
        }
    }
    let result = run_grid(Method::Sa, config)?;
    w.table(&report::option_costs_table(&result)?, Some("sa"))?;
    print_costs(&result);
    Ok(())
}

fn dtree_cmd(config: &ToolConfig, w: &mut Writer) -> Result<(), Error> {
    let tree = dtree::build_tree(&config.grid, &config.baseline, &config.cost_model)?;
    let mut rows = Vec::new();
    for cell in config.grid.cells() {
        for option in &config.grid.search_growth {
            let s = Scenario::new(cell.tg, cell.cg, option.growth);
            let counts = dtree::end_counts(&s, &config.baseline, &config.grid, &config.cost_model)?;
            rows.push((cell.tg, cell.cg, option.growth, counts));
        }
    }
    w.table(&report::tree_counts_table(&rows), None)?;
    let result = run_grid(Method::Dt, config)?;
    w.table(&report::option_costs_table(&result)?, Some("dt"))?;
    w.text("tree.txt", &dtree::to_text(&tree))?;
    w.text("tree.dot", &dtree::to_dot(&tree))?;
    print_costs(&result);
    Ok(())
}

fn write_sim_tables(result: &GridResult, w: &mut Writer) -> Result<(), Error> {
    let suffix = result.method.seed_key().to_ascii_lowercase();
    if !result.found_cg0.is_empty() {
        w.table(&report::simulated_found_table(result)?, Some(&suffix))?;
        w.table(&report::error_table(result)?, Some(&suffix))?;
    }
    w.table(&report::option_costs_table(result)?, Some(&suffix))?;
    w.table(&report::replications_table(&result.cells), Some(&suffix))?;
    w.table(&report::seeds_table(&result.seeds()), Some(&suffix))?;
    w.manifest.add_seeds(result);
    Ok(())
}

fn sim(mode: Mode, config: &ToolConfig, w: &mut Writer) -> Result<(), Error> {
    let result = run_grid(Method::Sim(mode), config)?;
    write_sim_tables(&result, w)?;
    print_costs(&result);
    Ok(())
}

fn compare_cmd(methods: &[MethodArg], config: &ToolConfig, w: &mut Writer) -> Result<(), Error> {
    let methods: Vec<Method> = if methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        methods.iter().map(|&m| m.into()).collect()
    };
    let (comparison, results) = compare(&methods, config)?;
    for result in results.iter().filter(|r| !r.cells.is_empty()) {
        write_sim_tables(result, w)?;
    }
    let table = report::comparison_table(&comparison)?;
    w.table(&table, None)?;
    w.table(&report::relative_table(&comparison)?, None)?;
    print!("{}", table.to_markdown()?);
    Ok(())
}
