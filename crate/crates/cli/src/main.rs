mod args;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use sparse_recovery::bp::{brc_bp_check, nsp_check, BrcBpReport, NspReport};
use sparse_recovery::certificates::{brc_omp, erc, erc_oxx_cardinality, erc_oxx_subset, CertificateReport, Evaluation};
use sparse_recovery::dictionaries::{matrix_from_text, Dictionary};
use sparse_recovery::experiments::{
    self, config_from_output, draw_support, random_amplitudes, BrcMapConfig, BrcSigmaConfig, ExperimentConfig,
    ExperimentResult, FVsQConfig, Family, PhaseCurveConfig, PhaseDiagramConfig, Placement, ScatterConfig,
};
use sparse_recovery::greedy::{
    build_failure_input, construct_reaching_input, run_greedy, Algorithm, FailureInput, GreedyTrace, SupportSet,
};
use sparse_recovery::linalg::{compute_spark, Spark};

use args::*;

enum Failure {
    /// Bad configuration or a library error; exit code 2.
    Config(String),
    /// Reading or writing files; exit code 3.
    Io(String),
}

impl From<sparse_recovery::Error> for Failure {
    fn from(e: sparse_recovery::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn algorithm(a: AlgChoice) -> Algorithm {
    match a {
        AlgChoice::Omp => Algorithm::Omp,
        AlgChoice::Ols => Algorithm::Ols,
    }
}

fn evaluation(e: EvalChoice) -> Evaluation {
    match e {
        EvalChoice::Checked => Evaluation::Checked,
        EvalChoice::Fast => Evaluation::Fast,
    }
}

fn family(f: &FamilyArgs) -> Family {
    match f.dict {
        FamilyChoice::Gaussian => Family::Gaussian,
        FamilyChoice::Hybrid => Family::Hybrid { t_max: f.t_max },
    }
}

fn placement(p: PlacementChoice, delta: usize) -> Placement {
    match p {
        PlacementChoice::Random => Placement::Random,
        PlacementChoice::FirstAtoms => Placement::FirstAtoms,
        PlacementChoice::Spaced => Placement::Spaced { delta },
    }
}

fn dictionary(d: &DictArgs) -> Result<Dictionary, Failure> {
    Ok(match d.dict {
        DictChoice::Gaussian => Dictionary::gaussian(d.m, d.n, d.seed)?,
        DictChoice::Hybrid => Dictionary::hybrid(d.m, d.n, d.t_max, d.seed)?,
        DictChoice::Convolutive => Dictionary::convolutive(d.n, d.sigma, d.downsample)?,
        DictChoice::Example1 => Dictionary::example1(d.theta1, d.theta2)?,
        DictChoice::File => {
            let path = d
                .matrix_file
                .as_ref()
                .ok_or_else(|| Failure::Config("--dict file needs --matrix-file".into()))?;
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            let matrix = matrix_from_text(&text)?;
            if d.normalize {
                Dictionary::from_unnormalized(matrix)?
            } else {
                Dictionary::custom(matrix)?
            }
        }
    })
}

/// Output document: the invocation first, then the result.
#[derive(Serialize)]
struct Report<'a, C: Serialize, R: Serialize> {
    config: &'a C,
    #[serde(flatten)]
    body: R,
}

fn emit<C: Serialize, R: Serialize>(config: &C, body: R, out: Option<&PathBuf>) -> Outcome {
    let mut text = serde_json::to_string_pretty(&Report { config, body }).expect("report serializes");
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cert(a: &CertArgs) -> Outcome {
    #[derive(Serialize)]
    struct Body {
        report: CertificateReport,
    }
    let dict = dictionary(&a.dict)?;
    let m = dict.matrix();
    let (alg, eval) = (algorithm(a.alg), evaluation(a.eval));
    let report = match a.condition {
        Condition::Erc => erc(m, &a.qstar)?,
        Condition::Subset => erc_oxx_subset(m, &a.qstar, &a.q, alg, eval)?,
        Condition::Cardinality => erc_oxx_cardinality(m, &a.qstar, a.cardinality, alg, eval)?,
        Condition::Brc => brc_omp(m, &a.qstar, eval)?,
    };
    emit(a, Body { report }, a.out.as_ref())
}

fn greedy(a: &GreedyArgs) -> Outcome {
    #[derive(Serialize)]
    struct Body {
        support: Vec<usize>,
        amplitudes: Vec<f64>,
        y: Vec<f64>,
        trace: GreedyTrace,
    }
    let dict = dictionary(&a.dict)?;
    let m = dict.matrix();
    let n = m.ncols();
    let support = if a.qstar.is_empty() {
        draw_support(&Placement::Random, n, a.k, a.dict.seed)?.0
    } else {
        a.qstar.clone()
    };
    let oracle = SupportSet::new(support.clone(), n)?;
    let x = random_amplitudes(oracle.indices(), n, a.dict.seed);
    let y = m * &x;
    let trace = run_greedy(algorithm(a.alg), m, &y, a.iters.unwrap_or(oracle.len()), Some(&oracle))?;
    let body = Body {
        support: oracle.indices().to_vec(),
        amplitudes: oracle.indices().iter().map(|&i| x[i]).collect(),
        y: y.iter().copied().collect(),
        trace,
    };
    emit(a, body, a.out.as_ref())
}

fn construct(a: &ConstructArgs) -> Outcome {
    #[derive(Serialize)]
    struct Reach {
        y: Vec<f64>,
    }
    #[derive(Serialize)]
    struct Failing {
        failure: FailureInput,
    }
    let dict = dictionary(&a.dict)?;
    let m = dict.matrix();
    let alg = algorithm(a.alg);
    if a.reach_only {
        let y = construct_reaching_input(m, &a.q, alg)?;
        return emit(a, Reach { y: y.iter().copied().collect() }, a.out.as_ref());
    }
    let qstar = SupportSet::new(a.qstar.clone(), m.ncols())?;
    let failure = build_failure_input(m, &qstar, &a.q, alg, None)?;
    emit(a, Failing { failure }, a.out.as_ref())
}

fn bp_check(a: &BpCheckArgs) -> Outcome {
    #[derive(Serialize)]
    struct Body {
        nsp: NspReport,
        brc_bp: BrcBpReport,
    }
    let dict = dictionary(&a.dict)?;
    let body = Body {
        nsp: nsp_check(dict.matrix(), &a.qstar)?,
        brc_bp: brc_bp_check(dict.matrix(), &a.qstar)?,
    };
    emit(a, body, a.out.as_ref())
}

fn spark(a: &SparkArgs) -> Outcome {
    #[derive(Serialize)]
    struct Body {
        spark: Spark,
    }
    let dict = dictionary(&a.dict)?;
    let max = a.max_size.unwrap_or(dict.rows() + 1);
    emit(a, Body { spark: compute_spark(dict.matrix(), max)? }, a.out.as_ref())
}

fn load_config(path: &Path, kind: &str) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let config = config_from_output(&text)?;
    if config.kind() != kind {
        return Err(Failure::Config(format!(
            "{} holds a {} configuration, expected {kind}",
            path.display(),
            config.kind()
        )));
    }
    Ok(config)
}

fn workers(requested: usize) -> usize {
    if requested > 0 {
        return requested;
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn write_result(result: &ExperimentResult, run: &RunArgs) -> Outcome {
    fs::create_dir_all(&run.out_dir).map_err(|e| io_error(&run.out_dir, e))?;
    let stem = result.file_stem();
    let mut written = Vec::new();
    if run.format != OutputFormat::Json {
        let path = run.out_dir.join(format!("{stem}.csv"));
        fs::write(&path, result.to_csv()).map_err(|e| io_error(&path, e))?;
        written.push(path);
    }
    if run.format != OutputFormat::Csv {
        let path = run.out_dir.join(format!("{stem}.json"));
        fs::write(&path, result.to_json()).map_err(|e| io_error(&path, e))?;
        written.push(path);
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    println!("{}", serde_json::to_string(&result.summary).expect("summary serializes"));
    eprintln!("elapsed {:.3}s", result.wall_clock.as_secs_f64());
    Ok(())
}

fn experiment(kind: &str, run: &RunArgs, from_flags: impl FnOnce() -> ExperimentConfig) -> Outcome {
    let config = match &run.config {
        Some(path) => load_config(path, kind)?,
        None => from_flags(),
    };
    let result = experiments::run(&config, workers(run.workers))?;
    write_result(&result, run)
}

fn dispatch(command: &Command) -> Outcome {
    match command {
        Command::Cert(a) => cert(a),
        Command::Greedy(a) => greedy(a),
        Command::Construct(a) => construct(a),
        Command::BpCheck(a) => bp_check(a),
        Command::Spark(a) => spark(a),
        Command::Scatter(a) => experiment("scatter", &a.run, || {
            ExperimentConfig::Scatter(ScatterConfig {
                m: a.m,
                n: a.n,
                k: a.k,
                trials: a.trials,
                seed: a.seed,
            })
        }),
        Command::PhaseCurve(a) => experiment("phase-curve", &a.run, || {
            ExperimentConfig::PhaseCurve(PhaseCurveConfig {
                family: family(&a.family),
                m: a.m,
                n: a.n,
                k: a.k,
                trials: a.trials,
                seed: a.seed,
                placement: placement(a.placement, a.delta),
            })
        }),
        Command::PhaseDiagram(a) => experiment("phase-diagram", &a.run, || {
            ExperimentConfig::PhaseDiagram(PhaseDiagramConfig {
                family: family(&a.family),
                m: a.m,
                n_grid: a.n_grid.clone(),
                k_grid: a.k_grid.clone(),
                trials: a.trials,
                seed: a.seed,
                placement: placement(a.placement, a.delta),
            })
        }),
        Command::FVsQ(a) => experiment("f-vs-q", &a.run, || {
            ExperimentConfig::FVsQ(FVsQConfig {
                n: a.n,
                sigma: a.sigma,
                downsample: a.downsample,
                k: a.k,
                placement: placement(a.placement, a.delta),
            })
        }),
        Command::BrcMap(a) => experiment("brc-map", &a.run, || {
            ExperimentConfig::BrcMap(BrcMapConfig {
                family: family(&a.family),
                m_grid: a.m_grid.clone(),
                n_grid: a.n_grid.clone(),
                trials: a.trials,
                seed: a.seed,
                placement: placement(a.placement, a.delta),
            })
        }),
        Command::BrcSigma(a) => experiment("brc-sigma", &a.run, || {
            ExperimentConfig::BrcSigma(BrcSigmaConfig {
                n: a.n,
                sigmas: a.sigmas.clone(),
                spacings: a.spacings.clone(),
                downsample: a.downsample,
            })
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
