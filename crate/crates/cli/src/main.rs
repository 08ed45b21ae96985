use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use wlmetric::formats::{format_f64, sidecar_path, write_json};
use wlmetric::{
    distance_matrix, graph_distance, kernel_export, knn_classify, load_edgelist_json, load_tudataset, read_classes,
    read_matrix_csv, write_matrix_csv, DistanceMatrix, DistanceParams, LabelScheme, Method, TuOptions,
};
use wlmetric_core::graph::{wl_test, WlOutcome};

#[derive(Parser)]
#[command(name = "wlmetric", version, about = "Weisfeiler-Lehman distances between graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Wl,
    Wllb,
    Wwl,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelsArg {
    Raw,
    Degree,
    F2,
    G,
}

#[derive(Args)]
struct DistanceArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    k: usize,
    /// Probability of staying put in the graph walk.
    #[arg(long, default_value_t = 0.6)]
    q: f64,
    #[arg(long, value_enum, default_value = "degree")]
    labels: LabelsArg,
}

impl DistanceArgs {
    fn params(&self) -> wlmetric::Result<DistanceParams> {
        let method = match self.method {
            MethodArg::Wl => Method::Wl,
            MethodArg::Wllb => Method::Wllb,
            MethodArg::Wwl => Method::Wwl,
        };
        let labels = match self.labels {
            LabelsArg::Raw => LabelScheme::Raw,
            LabelsArg::Degree => LabelScheme::Degree,
            LabelsArg::F2 => LabelScheme::F2,
            LabelsArg::G => LabelScheme::G,
        };
        DistanceParams::new(method, self.k, self.q, labels)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Distance between two edge-list JSON graphs.
    Dist {
        #[command(flatten)]
        distance: DistanceArgs,
        a: PathBuf,
        b: PathBuf,
    },
    /// Pairwise distance matrix of a flat-file dataset, plus a JSON sidecar.
    Matrix {
        #[command(flatten)]
        distance: DistanceArgs,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Cross-validated 1-nearest-neighbour accuracy.
    Knn {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        classes: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Kernel matrix exp(-gamma * d).
    Kernel {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Colour refinement test on two edge-list JSON graphs.
    Wltest {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        max_rounds: Option<usize>,
    },
}

fn run(cli: Cli) -> wlmetric::Result<()> {
    match cli.command {
        Command::Dist { distance, a, b } => {
            let p = distance.params()?;
            let (ga, gb) = (load_edgelist_json(&a)?, load_edgelist_json(&b)?);
            println!("{}", format_f64(graph_distance(&ga, &gb, &p)?));
        }
        Command::Matrix { distance, dataset, out, jobs } => {
            let p = distance.params()?;
            let ds = load_tudataset(&dataset, TuOptions::default())?;
            let dm = distance_matrix(&ds.graphs, &p, jobs)?;
            write_matrix_csv(&out, dm.entries())?;
            let mut meta = dm.meta().cloned().expect("computed matrices carry parameters");
            meta.dataset = Some(ds.name.clone());
            write_json(sidecar_path(&out), &meta)?;
            eprintln!("{} graphs, {} written to {}", ds.len(), meta.tag, out.display());
        }
        Command::Knn { matrix, classes, folds, seed } => {
            let dm = DistanceMatrix::from_entries(read_matrix_csv(&matrix)?, None)?;
            let classes = read_classes(&classes)?;
            let score = knn_classify(&dm, &classes, folds, seed)?;
            println!("accuracy {:.6} +- {:.6}", score.mean, score.std);
        }
        Command::Kernel { matrix, gamma, out } => {
            let dm = DistanceMatrix::from_entries(read_matrix_csv(&matrix)?, None)?;
            write_matrix_csv(&out, &kernel_export(&dm, gamma)?)?;
            write_json(
                sidecar_path(&out),
                &json!({ "kernel": "exp", "gamma": gamma, "distances": matrix.display().to_string() }),
            )?;
        }
        Command::Wltest { a, b, max_rounds } => {
            let (ga, gb) = (load_edgelist_json(&a)?, load_edgelist_json(&b)?);
            match wl_test(&ga, &gb, max_rounds) {
                WlOutcome::DistinguishedAt(r) => println!("distinguished at round {r}"),
                WlOutcome::Indistinguishable => println!("indistinguishable"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

