use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use embedding_simplex::embedding::{parse_embeddings, EmbeddingSpace, Format};
use embedding_simplex::report::{
    emit_projection, emit_report, resolve_tokens, run_analysis, to_json, triple_stats_report,
    AnalysisConfig, InputInfo, ProjectionFormat, ReportFormat, DEFAULT_DESCRIBE_K,
    DEFAULT_MAX_WORDS, DEFAULT_TRIPLE_SAMPLES,
};
use embedding_simplex::synth::{generate_simplex_cloud, GenParams};
use embedding_simplex::{Error, ExtractionParams};

#[derive(Parser)]
#[command(name = "embedding-simplex", version, about = "Find the simplex corners of a word embedding cloud")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write a report.
    Analyze(AnalyzeArgs),
    /// Project the cloud onto the plane of three words.
    Project(ProjectArgs),
    /// Generate a synthetic simplex cloud with a ground-truth sidecar.
    Synth(SynthArgs),
    /// Triangle statistics for a given list of vertex words.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Glove,
    W2v,
}

impl From<InputFormat> for Format {
    fn from(f: InputFormat) -> Self {
        match f {
            InputFormat::Glove => Format::GloveText,
            InputFormat::W2v => Format::W2vText,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Embedding file in GloVe or word2vec/fastText text format.
    #[arg(long, short)]
    input: PathBuf,
    /// Input layout; detected from the first line when omitted.
    #[arg(long, value_enum)]
    input_format: Option<InputFormat>,
    #[arg(long, default_value_t = DEFAULT_MAX_WORDS)]
    max_words: usize,
    /// Scale every vector to unit length before analysis.
    #[arg(long)]
    normalize: bool,
}

impl InputArgs {
    fn load(&self) -> Result<EmbeddingSpace, Error> {
        let file = File::open(&self.input).map_err(|e| Error::open(&self.input, e))?;
        let space = parse_embeddings(
            BufReader::new(file),
            self.input_format.map(Format::from),
            self.max_words,
        )?;
        Ok(if self.normalize {
            space.normalized()
        } else {
            space
        })
    }

    fn info(&self, space: &EmbeddingSpace) -> InputInfo {
        InputInfo {
            path: self.input.display().to_string(),
            words: space.len(),
            dim: space.dim(),
            normalized: self.normalize,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormatArg {
    Json,
    Text,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Principal axes scanned for candidates.
    #[arg(long, default_value_t = 50)]
    axes: usize,
    /// Neighbor-list size for gluing.
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Jaccard overlap at which candidates are glued.
    #[arg(long, default_value_t = 0.3)]
    glue_threshold: f64,
    /// Random triangles per vertex in the false-vertex filter.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Largest mean outside fraction a vertex may have.
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    #[arg(long, default_value_t = DEFAULT_TRIPLE_SAMPLES)]
    triple_samples: usize,
    /// Words listed per vertex.
    #[arg(long, default_value_t = DEFAULT_DESCRIBE_K)]
    describe_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormatArg,
    /// Output file (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProjectionFormatArg {
    Csv,
    Svg,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Three comma-separated vertex tokens.
    #[arg(long, value_delimiter = ',', required = true)]
    vertices: Vec<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: ProjectionFormatArg,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 50)]
    dim: usize,
    /// Number of simplex corners.
    #[arg(long, default_value_t = 12)]
    vertices: usize,
    #[arg(long, default_value_t = 20_000)]
    points: usize,
    /// Dirichlet concentration of the mixture weights.
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    /// Standard deviation of the isotropic noise.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random Gaussian corners instead of a regular simplex.
    #[arg(long)]
    irregular: bool,
    /// GloVe text output (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Ground-truth JSON (default: `<out>.truth.json` when --out is set).
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated vertex tokens.
    #[arg(long, value_delimiter = ',', conflicts_with = "vertices_file")]
    vertices: Vec<String>,
    /// File with one vertex token per line.
    #[arg(long)]
    vertices_file: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TRIPLE_SAMPLES)]
    triple_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<(), Error> {
    let config = AnalysisConfig {
        input: args.input.input.clone(),
        format: args.input.input_format.map(Format::from),
        max_words: args.input.max_words,
        normalize: args.input.normalize,
        params: ExtractionParams {
            num_axes: args.axes,
            k: args.k,
            glue_threshold: args.glue_threshold,
            trials: args.trials,
            tau: args.tau,
            seed: args.seed,
        },
        describe_k: args.describe_k,
        triple_samples: args.triple_samples,
    };
    let report = run_analysis(&config)?;
    let format = match args.format {
        ReportFormatArg::Json => ReportFormat::Json,
        ReportFormatArg::Text => ReportFormat::Text,
    };
    write_output(args.out.as_deref(), &emit_report(&report, format)?)
}

fn project(args: ProjectArgs) -> Result<(), Error> {
    if args.vertices.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "expected exactly three vertex tokens, got {}",
            args.vertices.len()
        )));
    }
    let space = args.input.load()?;
    let idx = resolve_tokens(&space, &args.vertices)?;
    let triple = [idx[0], idx[1], idx[2]];
    let format = match args.format {
        ProjectionFormatArg::Csv => ProjectionFormat::Csv,
        ProjectionFormatArg::Svg => ProjectionFormat::Svg,
    };
    write_output(args.out.as_deref(), &emit_projection(&space, triple, format)?)
}

fn synth(args: SynthArgs) -> Result<(), Error> {
    let params = GenParams {
        dim: args.dim,
        vertices: args.vertices,
        points: args.points,
        alpha: args.alpha,
        sigma: args.sigma,
        seed: args.seed,
        irregular: args.irregular,
    };
    let cloud = generate_simplex_cloud(&params)?;
    match &args.out {
        Some(path) => cloud
            .space
            .write_glove(BufWriter::new(File::create(path)?))?,
        None => cloud.space.write_glove(BufWriter::new(io::stdout().lock()))?,
    }
    let truth_path = args.truth.clone().or_else(|| {
        args.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".truth.json");
            PathBuf::from(s)
        })
    });
    if let Some(path) = truth_path {
        fs::write(path, to_json(&cloud.ground_truth())?)?;
    }
    Ok(())
}

fn stats(args: StatsArgs) -> Result<(), Error> {
    let space = args.input.load()?;
    let tokens: Vec<String> = match &args.vertices_file {
        Some(path) => fs::read_to_string(path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect(),
        None => args.vertices.clone(),
    };
    let report = triple_stats_report(
        &space,
        args.input.info(&space),
        &tokens,
        args.triple_samples,
        args.seed,
    )?;
    write_output(args.out.as_deref(), &to_json(&report)?)
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let summary: Vec<&str> = text
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .collect();
            eprintln!(
                "error: usage: {}",
                one_line(summary.join(" ").trim_start_matches("error: "))
            );
            return ExitCode::FAILURE;
        }
    };

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: invalid-argument: {}", one_line(&e.to_string()));
            return ExitCode::FAILURE;
        }
    }

    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Project(a) => project(a),
        Command::Synth(a) => synth(a),
        Command::Stats(a) => stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
