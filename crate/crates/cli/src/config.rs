use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use tpcm_core::{
    load_counts, CountFormat, Estimator, GridSpec, ModelSpec, PairedComparisonData, PosteriorSpec, Prior,
};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Input(String),
    Estimation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Estimation(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Estimation(m) => write!(f, "estimation error: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Matrix,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    T,
    Thurstone,
    BradleyTerry,
    Cauchy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Uniform,
    Jeffreys,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Mean,
    Mode,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Emit {
    Json,
    Table,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Count file; the bundled journal citation matrix is used when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Matrix)]
    pub format: FormatArg,
    #[arg(long, value_enum, default_value_t = ModelArg::T)]
    pub model: ModelArg,
    /// Degrees of freedom for the t model, comma separated. Ignored by the other models.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,15,30")]
    pub nu: Vec<f64>,
    #[arg(long, value_enum, default_value_t = PriorArg::Both)]
    pub prior: PriorArg,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Both)]
    pub estimator: EstimatorArg,
    /// Gauss–Legendre nodes per free coordinate.
    #[arg(long, default_value_t = GridSpec::default().points_per_dim)]
    pub grid_points: usize,
    /// Grid half-width in posterior standard deviations.
    #[arg(long, default_value_t = GridSpec::default().halfwidth)]
    pub halfwidth: f64,
    #[arg(long, default_value = "tpcm-out")]
    pub out: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json,table")]
    pub emit: Vec<Emit>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: PairedComparisonData,
    /// One spec per (model, prior) combination, in output order.
    pub specs: Vec<PosteriorSpec>,
    pub estimators: Vec<Estimator>,
    pub out: PathBuf,
    pub emit: Vec<Emit>,
}

impl RunConfig {
    /// Validates the arguments and loads the data. Configuration problems are
    /// reported before the input is touched.
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let grid = GridSpec {
            points_per_dim: args.grid_points,
            halfwidth: args.halfwidth,
        };
        let priors = match args.prior {
            PriorArg::Uniform => vec![Prior::Uniform],
            PriorArg::Jeffreys => vec![Prior::Jeffreys],
            PriorArg::Both => vec![Prior::Uniform, Prior::Jeffreys],
        };
        let models = match args.model {
            ModelArg::T => {
                if args.nu.is_empty() {
                    return Err(CliError::Config("the nu list is empty".into()));
                }
                args.nu
                    .iter()
                    .map(|&nu| ModelSpec::t(nu).map_err(|e| CliError::Config(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()?
            }
            ModelArg::Thurstone => vec![ModelSpec::Thurstone],
            ModelArg::BradleyTerry => vec![ModelSpec::BradleyTerry],
            ModelArg::Cauchy => vec![ModelSpec::Cauchy],
        };
        let mut specs = Vec::new();
        for &prior in &priors {
            for &model in &models {
                specs.push(PosteriorSpec::new(prior, model, grid).map_err(|e| CliError::Config(e.to_string()))?);
            }
        }
        let estimators = match args.estimator {
            EstimatorArg::Mean => vec![Estimator::Mean],
            EstimatorArg::Mode => vec![Estimator::Mode],
            EstimatorArg::Both => vec![Estimator::Mean, Estimator::Mode],
        };
        let mut emit = Vec::new();
        for e in &args.emit {
            if !emit.contains(e) {
                emit.push(*e);
            }
        }
        std::fs::create_dir_all(&args.out)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", args.out.display())))?;
        let probe = args.out.join(".tpcm-write-probe");
        File::create(&probe)
            .and_then(|_| std::fs::remove_file(&probe))
            .map_err(|e| CliError::Config(format!("output directory {} is not writable: {e}", args.out.display())))?;

        let data = match &args.input {
            None => PairedComparisonData::journals(),
            Some(path) => {
                let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                let format = match args.format {
                    FormatArg::Matrix => CountFormat::MatrixCsv,
                    FormatArg::Long => CountFormat::LongCsv,
                };
                load_counts(BufReader::new(file), format)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
            }
        };
        Ok(Self {
            data,
            specs,
            estimators,
            out: args.out.clone(),
            emit,
        })
    }

    pub fn emits(&self, kind: Emit) -> bool {
        self.emit.contains(&kind)
    }
}

/// File stem for one (model, prior) combination, e.g. `t-nu2_uniform`.
pub fn stem(spec: &PosteriorSpec) -> String {
    let model = match spec.model {
        ModelSpec::TPcm { nu } => format!("t-nu{nu}"),
        other => other.to_string(),
    };
    format!("{model}_{}", spec.prior)
}
