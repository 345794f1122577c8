use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use intervene::bench::{run_grid, summarize, GridSpec};
use intervene::graph::{greedy_coloring, DirectedGraph, VertexSet};
use intervene::io::{
    load_graph, load_json, load_scm, save_json, write_dataset_csv, write_records_csv,
    GraphFile, ScmFile,
};
use intervene::learner::{learn_bounded, learn_unbounded, LearnedGraph, SkeletonHint};
use intervene::oracle::{sample, scm_from_graph, CiConfig, DataOracle, GraphOracle};
use intervene::separation::{r_separated, SeparationFlavor};
use intervene::sepsys::{
    bounded_lifted_separating_system, colored_separating_system, lifted_separating_system,
    nm_separating_system, BoundedConfig,
};
use intervene::stable_seed;

#[derive(Parser)]
#[command(
    name = "intervene",
    version,
    about = "Design intervention experiments and learn cyclic causal graphs"
)]
struct Cli {
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,

    /// Print full error details.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DesignMode {
    Colored,
    Lifted,
    Nm,
    BoundedLifted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SkeletonArg {
    Oracle,
    Pc,
    Complete,
}

#[derive(Subcommand)]
enum Command {
    /// Design a family of intervention experiments for a known graph.
    Design {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        mode: DesignMode,
        /// Upper bound on experiment size (modes nm and bounded-lifted).
        #[arg(
            long,
            required_if_eq_any([("mode", "nm"), ("mode", "bounded-lifted")])
        )]
        max_size: Option<usize>,
        #[arg(long, default_value = "d")]
        flavor: SeparationFlavor,
        /// Write the family here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn a graph from an exact oracle or from simulated data.
    Learn {
        /// Ground-truth graph served through an exact oracle.
        #[arg(long, conflicts_with = "scm")]
        graph: Option<PathBuf>,
        /// Linear model sampled per experiment, tested at significance 0.01.
        #[arg(long, required_unless_present = "graph", requires = "samples")]
        scm: Option<PathBuf>,
        /// Samples per experiment (data mode).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value = "d")]
        flavor: SeparationFlavor,
        /// Cap on experiment size; switches to the bounded pipeline.
        #[arg(long)]
        max_size: Option<usize>,
        /// How to obtain the starting skeleton.
        #[arg(long, value_enum)]
        skeleton: Option<SkeletonArg>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the learned graph here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample data from a linear model, optionally under interventions.
    Simulate {
        /// Generate a model from this graph first.
        #[arg(long, conflicts_with = "scm")]
        graph: Option<PathBuf>,
        /// Use an existing model file.
        #[arg(long, required_unless_present = "graph")]
        scm: Option<PathBuf>,
        /// Write the generated model here (with --graph).
        #[arg(long, requires = "graph")]
        emit_scm: Option<PathBuf>,
        /// Comma-separated vertices to intervene on.
        #[arg(long = "do")]
        do_set: Option<String>,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark grid and write one CSV row per trial.
    Bench {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decide separation between two vertices in a graph file.
    Check {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "d")]
        flavor: SeparationFlavor,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Comma-separated conditioning vertices.
        #[arg(long)]
        cond: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command, cli.quiet) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if cli.verbose {
                eprintln!("error: {e:?}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::FAILURE
        }
    }
}

fn parse_vertex_list(file: &GraphFile, list: Option<&str>) -> anyhow::Result<VertexSet> {
    let mut set = VertexSet::new();
    if let Some(list) = list {
        for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            set.insert(file.resolve(token)?);
        }
    }
    Ok(set)
}

fn load_graph_file(path: &Path) -> anyhow::Result<(GraphFile, DirectedGraph)> {
    let file = load_graph(path).with_context(|| format!("loading graph {}", path.display()))?;
    let g = file.to_graph()?;
    Ok((file, g))
}

fn emit_learned(
    learned: &LearnedGraph,
    truth: &DirectedGraph,
    names: Option<Vec<String>>,
    out: Option<&Path>,
    quiet: bool,
) -> anyhow::Result<()> {
    let shd = intervene::bench::shd(truth, &learned.graph)?;
    let f1 = intervene::bench::f1(truth, &learned.graph)?;
    if !quiet {
        println!("experiments: {}", learned.experiments_total);
        println!("max_size: {}", learned.max_experiment_size);
        println!("shd: {shd}");
        println!("f1: {f1:.3}");
    }
    if let Some(out) = out {
        let file = GraphFile::from_graph(&learned.graph, names)?;
        save_json(out, &file)?;
        if !quiet {
            eprintln!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn run(command: Command, quiet: bool) -> anyhow::Result<()> {
    match command {
        Command::Design {
            graph,
            mode,
            max_size,
            flavor,
            out,
        } => {
            let (_file, g) = load_graph_file(&graph)?;
            let family = match mode {
                DesignMode::Colored => {
                    let skeleton = match flavor {
                        SeparationFlavor::D => g.observable_skeleton_d(),
                        SeparationFlavor::Sigma => g.observable_skeleton_sigma(),
                    };
                    colored_separating_system(&greedy_coloring(&skeleton))?
                }
                DesignMode::Lifted => lifted_separating_system(&g.scc_partition()),
                DesignMode::Nm => {
                    nm_separating_system(g.n(), max_size.expect("required by clap"))?
                }
                DesignMode::BoundedLifted => bounded_lifted_separating_system(
                    &g.scc_partition(),
                    &BoundedConfig::new(max_size.expect("required by clap")),
                    g.n(),
                )?,
            };
            if !quiet {
                eprintln!(
                    "designed {} experiments, max size {}",
                    family.len(),
                    family.max_set_size()
                );
            }
            match out {
                Some(path) => save_json(&path, &family)?,
                None => {
                    let mut text = serde_json::to_string_pretty(&family)?;
                    text.push('\n');
                    print!("{text}");
                }
            }
            Ok(())
        }
        Command::Learn {
            graph,
            scm,
            samples,
            flavor,
            max_size,
            skeleton,
            seed,
            out,
        } => {
            let data_mode = scm.is_some();
            let hint = match skeleton {
                Some(SkeletonArg::Oracle) if data_mode => {
                    anyhow::bail!("skeleton oracle requires an exact oracle (use --graph)")
                }
                Some(SkeletonArg::Oracle) => SkeletonHint::OracleExact,
                Some(SkeletonArg::Pc) => SkeletonHint::PcSkeleton(SkeletonHint::DEFAULT_PC_DEPTH),
                Some(SkeletonArg::Complete) => SkeletonHint::Complete,
                None if data_mode => SkeletonHint::PcSkeleton(SkeletonHint::DEFAULT_PC_DEPTH),
                None => SkeletonHint::OracleExact,
            };
            if let Some(path) = graph {
                let (file, g) = load_graph_file(&path)?;
                let mut oracle = GraphOracle::new(g.clone(), flavor);
                let learned = match max_size {
                    None => learn_unbounded(&mut oracle, flavor, hint)?,
                    Some(m) => learn_bounded(&mut oracle, &BoundedConfig::new(m))?,
                };
                emit_learned(&learned, &g, file.names.clone(), out.as_deref(), quiet)
            } else {
                let path = scm.expect("required by clap");
                let file =
                    load_scm(&path).with_context(|| format!("loading model {}", path.display()))?;
                let model = file.to_scm()?;
                let truth = model.graph().clone();
                let ci = CiConfig::new(0.01, samples.expect("required by clap"))?;
                let mut oracle = DataOracle::new(model, ci, seed)?;
                let learned = match max_size {
                    None => learn_unbounded(&mut oracle, flavor, hint)?,
                    Some(m) => learn_bounded(&mut oracle, &BoundedConfig::new(m))?,
                };
                emit_learned(&learned, &truth, file.names.clone(), out.as_deref(), quiet)
            }
        }
        Command::Simulate {
            graph,
            scm,
            emit_scm,
            do_set,
            samples,
            seed,
            out,
        } => {
            let (scm_file, model) = if let Some(path) = graph {
                let (file, g) = load_graph_file(&path)?;
                let model = scm_from_graph(&g, stable_seed(seed, &[1]))?;
                let scm_file = ScmFile::from_scm(&model, file.names.clone());
                if let Some(path) = &emit_scm {
                    save_json(path, &scm_file)?;
                    if !quiet {
                        eprintln!("wrote {}", path.display());
                    }
                }
                (scm_file, model)
            } else {
                let path = scm.expect("required by clap");
                let file =
                    load_scm(&path).with_context(|| format!("loading model {}", path.display()))?;
                let model = file.to_scm()?;
                (file, model)
            };
            let resolver = GraphFile::from_graph(model.graph(), scm_file.names.clone())?;
            let intervention = parse_vertex_list(&resolver, do_set.as_deref())?;
            let data = sample(&model, &intervention, samples, stable_seed(seed, &[2]))?;
            write_dataset_csv(&out, &data, scm_file.names.as_deref())?;
            if !quiet {
                eprintln!("wrote {} rows to {}", samples, out.display());
            }
            Ok(())
        }
        Command::Bench {
            grid,
            trials,
            seed,
            out,
        } => {
            let spec: GridSpec =
                load_json(&grid).with_context(|| format!("loading grid {}", grid.display()))?;
            let records = run_grid(&spec, trials, seed)?;
            write_records_csv(&out, &records)?;
            let failed = records.iter().filter(|r| r.status != "ok").count();
            if failed > 0 {
                eprintln!("{failed} of {} trials failed; see status column", records.len());
            }
            if !quiet {
                for c in summarize(&records) {
                    let m = c.m.map(|m| m.to_string()).unwrap_or_else(|| "-".into());
                    let s = c.samples.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
                    println!(
                        "n={} p={:.4} b={} flavor={} mode={} m={} samples={}: k={} \
                         experiments={:.2}±{:.2} shd={:.2}±{:.2} f1={:.3}±{:.3}",
                        c.n,
                        c.p,
                        c.b,
                        c.flavor,
                        c.mode,
                        m,
                        s,
                        c.trials_ok,
                        c.mean_experiments,
                        c.ci_experiments,
                        c.mean_shd,
                        c.ci_shd,
                        c.mean_f1,
                        c.ci_f1,
                    );
                }
                eprintln!("wrote {} rows to {}", records.len(), out.display());
            }
            Ok(())
        }
        Command::Check {
            graph,
            flavor,
            x,
            y,
            cond,
        } => {
            let (file, g) = load_graph_file(&graph)?;
            let x = file.resolve(&x)?;
            let y = file.resolve(&y)?;
            let cond_set = parse_vertex_list(&file, cond.as_deref())?;
            let cond_vec: Vec<usize> = cond_set.into_iter().collect();
            let separated = r_separated(&g, x, y, &cond_vec, flavor)?;
            println!("{}", if separated { "separated" } else { "not separated" });
            Ok(())
        }
    }
}
