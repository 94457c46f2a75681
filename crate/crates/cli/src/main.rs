//! Command-line front end of the cell synthesizer.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use cellsynth::drc::{check_connectivity, run_drc};
use cellsynth::drcfix::{Fixer, GreedyFixer, NoFixer, PolicyFixer};
use cellsynth::ga::{evolve, RoutingProblem};
use cellsynth::io::{export_script, export_svg, import_script, load_config, parse_netlist, NetlistFormat, FORMAT_VERSION};
use cellsynth::nn::WeightFile;
use cellsynth::pipeline::{place, placed_grid, run_pipeline, PipelineConfig};
use cellsynth::placement::PlacementRep;
use cellsynth::protocol::{serve, EnvSession};
use cellsynth::routability::RoutabilityModel;
use cellsynth::tech::ScoreWeights;
use cellsynth::{dataset, fixtures, rng, Netlist, PolicyNet};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "cellsynth", version, about = "Standard-cell layout synthesis")]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = fixtures::DEFAULT_SEED)]
    seed: u64,
    /// Worker threads for annealing restarts and GA children.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CellInput {
    /// Netlist file; `.json` is read as JSON, anything else as SPICE.
    #[arg(long, conflicts_with = "cell")]
    netlist: Option<PathBuf>,
    /// Name of a built-in fixture cell.
    #[arg(long)]
    cell: Option<String>,
}

#[derive(Args)]
struct FixerArg {
    /// `greedy`, `none` or `policy:<weights.json>`.
    #[arg(long, default_value = "greedy")]
    fixer: String,
}

#[derive(Subcommand)]
enum Command {
    /// Anneal a placement and print it as JSON.
    Place {
        #[command(flatten)]
        input: CellInput,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Score weights `w_width,w_cong,w_viol`.
        #[arg(long)]
        weights: Option<String>,
        /// Routability classifier weights used in the last phase of annealing.
        #[arg(long)]
        predictor: Option<PathBuf>,
    },
    /// Route a placement with the genetic router.
    Route {
        #[command(flatten)]
        input: CellInput,
        /// Placement JSON from `place`; annealed afresh when omitted.
        #[arg(long)]
        placement: Option<PathBuf>,
        #[arg(long)]
        gens: Option<usize>,
        #[arg(long)]
        pop: Option<usize>,
        #[arg(long)]
        collect_all: bool,
        #[command(flatten)]
        fixer: FixerArg,
    },
    /// Repair DRC markers of a layout script by extending M1.
    Fix {
        layout: PathBuf,
        #[command(flatten)]
        fixer: FixerArg,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print DRC markers and connectivity issues; exits 1 when any exist.
    Check { layout: PathBuf },
    /// Place, route, repair and check; exits 1 unless the result is clean.
    Full {
        #[command(flatten)]
        input: CellInput,
        #[command(flatten)]
        fixer: FixerArg,
        /// Directory for the layout script and SVG.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        predictor: Option<PathBuf>,
    },
    /// Convert a layout script to SVG or re-emit it.
    Export {
        layout: PathBuf,
        #[arg(long, default_value = "svg")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the repair environment over stdin/stdout.
    ServeEnv,
    /// Write a routability dataset as JSON lines.
    GenDataset {
        /// Fixture cells to sample (all when omitted).
        #[arg(long, value_delimiter = ',')]
        cells: Vec<String>,
        #[arg(long)]
        per_cell: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_netlist(input: &CellInput) -> Result<Netlist> {
    match (&input.netlist, &input.cell) {
        (Some(path), _) => {
            let text = read(path)?;
            let format = NetlistFormat::from_path(&path.to_string_lossy());
            parse_netlist(&text, format).map_err(|e| anyhow!("{}: {e}", path.display()))
        }
        (None, Some(name)) => fixtures::by_name(name).ok_or_else(|| anyhow!("unknown fixture cell {name}")),
        (None, None) => bail!("pass --netlist <file> or --cell <name>"),
    }
}

fn load_layout(path: &Path) -> Result<cellsynth::grid::LayoutGrid> {
    import_script(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn make_fixer(spec: &str) -> Result<Box<dyn Fixer>> {
    Ok(match spec {
        "greedy" => Box::new(GreedyFixer),
        "none" => Box::new(NoFixer),
        s if s.starts_with("policy:") => {
            let path = Path::new(&s["policy:".len()..]);
            let file = WeightFile::parse(&read(path)?)?;
            let weights = PolicyNet::from_weight_file(&file).with_context(|| format!("loading {}", path.display()))?;
            Box::new(PolicyFixer { weights })
        }
        other => bail!("unknown fixer {other}; expected greedy, none or policy:<file>"),
    })
}

fn load_predictor(path: Option<&PathBuf>) -> Result<Option<RoutabilityModel<f32>>> {
    path.map(|p| {
        let file = WeightFile::parse(&read(p)?)?;
        RoutabilityModel::from_weight_file(&file).with_context(|| format!("loading {}", p.display()))
    })
    .transpose()
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global()?;
    }
    let mut config = match &cli.config {
        Some(p) => load_config(&read(p)?).with_context(|| format!("config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    let seed = cli.seed;
    match cli.command {
        Command::Place {
            input,
            steps,
            restarts,
            weights,
            predictor,
        } => {
            let netlist = load_netlist(&input)?;
            config.place_steps = steps.unwrap_or(config.place_steps);
            config.place_restarts = restarts.unwrap_or(config.place_restarts);
            if let Some(w) = weights {
                let v: Vec<f64> = w
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .context("--weights expects three numbers w,c,v")?;
                let [a, b, c] = v[..] else { bail!("--weights expects three numbers w,c,v") };
                config.tech.score_weights = ScoreWeights::new(a, b, c);
            }
            let model = load_predictor(predictor.as_ref())?;
            let rep = place(&netlist, &config, seed, model.as_ref().map(|m| m as _))?;
            emit(None, &to_json(&rep))?;
        }
        Command::Route {
            input,
            placement,
            gens,
            pop,
            collect_all,
            fixer,
        } => {
            let netlist = load_netlist(&input)?;
            let rep: PlacementRep = match placement {
                Some(p) => serde_json::from_str(&read(&p)?).context("placement JSON")?,
                None => place(&netlist, &config, seed, None)?,
            };
            config.ga.generations = gens.unwrap_or(config.ga.generations);
            config.ga.population = pop.unwrap_or(config.ga.population);
            config.ga.collect_all |= collect_all;
            let fixer = make_fixer(&fixer.fixer)?;
            let base = placed_grid(&netlist, &rep, &config.tech)?;
            let problem = RoutingProblem::new(base, config.tech.clone());
            let out = evolve(&problem, &config.ga, fixer.as_ref(), rng::derive(seed, "route"));
            let solutions: Vec<String> = out
                .solutions
                .iter()
                .map(|s| export_script(&s.overlay(&problem.base)))
                .collect();
            let doc = json!({
                "format_version": FORMAT_VERSION,
                "clean": out.clean(),
                "generations_run": out.generations_run,
                "best_fitness": out.best.fitness,
                "trace": out.trace,
                "solutions": solutions,
                "best": export_script(&out.best.solution.overlay(&problem.base)),
            });
            emit(None, &to_json(&doc))?;
            if !out.clean() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Fix {
            layout,
            fixer,
            budget,
            out,
        } => {
            let grid = load_layout(&layout)?;
            let fixer = make_fixer(&fixer.fixer)?;
            let budget = budget.unwrap_or(2 * grid.height * grid.width);
            let res = fixer.fix(&grid, &config.tech, budget);
            eprintln!(
                "{}",
                json!({"before": res.trace[0], "after": res.remaining, "added": res.added.len()})
            );
            emit(out.as_deref(), &export_script(&res.grid))?;
            if res.remaining > 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Check { layout } => {
            let grid = load_layout(&layout)?;
            let markers: Vec<_> = run_drc(&grid, &config.tech.drc_rules)
                .into_iter()
                .map(|m| json!({"rule": m.rule, "track": m.track, "col": m.col}))
                .collect();
            let issues = check_connectivity(&grid);
            let clean = markers.is_empty() && issues.is_empty();
            emit(
                None,
                &to_json(&json!({"format_version": FORMAT_VERSION, "markers": markers, "connectivity": issues})),
            )?;
            if !clean {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Full {
            input,
            fixer,
            out_dir,
            predictor,
        } => {
            let netlist = load_netlist(&input)?;
            let fixer = make_fixer(&fixer.fixer)?;
            let model = load_predictor(predictor.as_ref())?;
            let run = run_pipeline(&netlist, &config, fixer.as_ref(), seed, model.as_ref().map(|m| m as _))?;
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir)?;
                let markers = run_drc(&run.layout, &config.tech.drc_rules);
                fs::write(dir.join(format!("{}.layout", netlist.name)), export_script(&run.layout))?;
                fs::write(dir.join(format!("{}.svg", netlist.name)), export_svg(&run.layout, &markers))?;
            }
            emit(None, &to_json(&run.report))?;
            if !run.report.clean() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Export { layout, format, out } => {
            let grid = load_layout(&layout)?;
            let text = match format.as_str() {
                "svg" => export_svg(&grid, &run_drc(&grid, &config.tech.drc_rules)),
                "script" => export_script(&grid),
                other => bail!("unknown export format {other}; expected svg or script"),
            };
            emit(out.as_deref(), &text)?;
        }
        Command::ServeEnv => {
            let mut session = EnvSession::new(config, seed);
            let stdin = io::stdin();
            serve(stdin.lock(), io::stdout().lock(), &mut session)?;
        }
        Command::GenDataset { cells, per_cell, out } => {
            let netlists: Vec<Netlist> = if cells.is_empty() {
                fixtures::library()
            } else {
                cells
                    .iter()
                    .map(|c| fixtures::by_name(c).ok_or_else(|| anyhow!("unknown fixture cell {c}")))
                    .collect::<Result<_>>()?
            };
            let mut params = dataset::DatasetParams::default();
            params.placements_per_cell = per_cell.unwrap_or(params.placements_per_cell);
            let records = dataset::generate_dataset(&netlists, &params, &config, &GreedyFixer, seed);
            emit(out.as_deref(), &dataset::to_jsonl(&records))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
