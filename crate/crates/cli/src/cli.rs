//! Command-line surface. Every subcommand loads defaults, overlays the
//! optional `--config` file, then overlays its own flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use avlem::conversation::Strategy;
use avlem::corpus::ReviewFormat;
use avlem::evaluation::ReportFormat;
use avlem::model::{FeedbackUse, Variant};

use crate::config::{BaselineKind, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "avlem",
    version,
    about = "Conversational product search with aspect-value feedback"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert raw review, metadata and aspect-value files to a corpus directory.
    Ingest(IngestArgs),
    /// Generate a planted synthetic corpus directory with its split.
    Synth(SynthArgs),
    /// Split a corpus into train and test.
    Split(SplitArgs),
    /// Train a model.
    Train(TrainArgs),
    /// Evaluate a model with simulated conversations.
    Eval(EvalArgs),
    /// Evaluate a term-based baseline with simulated conversations.
    BaselineEval(BaselineArgs),
    /// Compare analytic gradients with finite differences.
    CheckGrad(CheckGradArgs),
    /// Train and evaluate over a grid of dimensions and question counts.
    Sweep(SweepArgs),
    /// Serve the session API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub reviews: PathBuf,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Tab-separated item, aspect, value, mentions.
    #[arg(long)]
    pub av: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<ReviewFormat>,
    /// `english`, `none`, or a file with one word per line.
    #[arg(long)]
    pub stopwords: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long)]
    pub aspects: Option<usize>,
    #[arg(long)]
    pub values: Option<usize>,
    #[arg(long)]
    pub reviews_per_user: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub review_frac: Option<f64>,
    #[arg(long)]
    pub query_test_frac: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta: Option<usize>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Sub-sampling rate, or `off`.
    #[arg(long)]
    pub subsample: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Model file; the loss trace goes next to it as `<out>.loss.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalFlags {
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub format: Option<ReportFormat>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub eval: EvalFlags,
    /// Which answers the model uses: pos, neg or all.
    #[arg(long)]
    pub feedback: Option<FeedbackUse>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    /// bm25, ql, rocchio, singleneg or multineg.
    #[arg(long)]
    pub ranker: Option<BaselineKind>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Penalty weight for the negative-feedback rerankers and Rocchio.
    #[arg(long)]
    pub weight: Option<f64>,
    #[arg(long)]
    pub top_n: Option<usize>,
    #[command(flatten)]
    pub eval: EvalFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CheckGradArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Restrict to one configuration.
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Optional JSON summary.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Comma-separated embedding sizes.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Comma-separated questions per iteration.
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub feedback: Option<FeedbackUse>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, env = "AVLEM_MODEL")]
    pub model: PathBuf,
    #[arg(long, env = "AVLEM_CORPUS")]
    pub corpus: PathBuf,
    #[arg(long, env = "AVLEM_M")]
    pub m: Option<usize>,
    #[arg(long, env = "AVLEM_ITERATIONS")]
    pub iterations: Option<usize>,
    #[arg(long, env = "AVLEM_PORT")]
    pub port: Option<u16>,
    /// Allow sessions without a known user.
    #[arg(long, env = "AVLEM_ANONYMOUS")]
    pub anonymous: bool,
    #[arg(long, env = "AVLEM_TTL_SECS")]
    pub ttl_secs: Option<u64>,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub feedback: Option<FeedbackUse>,
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn base(common: &Common) -> anyhow::Result<RunConfig> {
    let mut c = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        c.set_seed(s);
    }
    Ok(c)
}

impl ModelArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.model.variant, self.variant);
        set(&mut c.model.dim, self.dim);
        set(&mut c.model.lambda, self.lambda);
    }
}

impl TrainFlags {
    fn apply(&self, c: &mut RunConfig) -> anyhow::Result<()> {
        let t = &mut c.train;
        set(&mut t.epochs, self.epochs);
        set(&mut t.batch_size, self.batch_size);
        set(&mut t.lr0, self.lr);
        set(&mut t.beta, self.beta);
        set(&mut t.l2_gamma, self.l2);
        if let Some(s) = &self.subsample {
            t.subsample_rate = match s.as_str() {
                "off" | "none" => None,
                x => Some(
                    x.parse()
                        .map_err(|_| anyhow::anyhow!("bad --subsample {x:?}"))?,
                ),
            };
        }
        Ok(())
    }
}

impl EvalFlags {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.eval.iterations, self.iterations);
        set(&mut c.eval.m, self.m);
        set(&mut c.eval.strategy, self.strategy);
        set(&mut c.report_format, self.format);
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Synth(_) => "synth",
            Command::Split(_) => "split",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::BaselineEval(_) => "baseline-eval",
            Command::CheckGrad(_) => "check-grad",
            Command::Sweep(_) => "sweep",
            Command::Serve(_) => "serve",
        }
    }

    /// Defaults, then the config file, then this command's flags.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c;
        match self {
            Command::Ingest(a) => {
                c = base(&a.common)?;
                set(&mut c.ingest.format, a.format);
                set(&mut c.ingest.stopwords, a.stopwords.clone());
            }
            Command::Synth(a) => {
                c = base(&a.common)?;
                set(&mut c.synth.users, a.users);
                set(&mut c.synth.items, a.items);
                set(&mut c.synth.aspects, a.aspects);
                set(&mut c.synth.values, a.values);
                set(&mut c.synth.reviews_per_user, a.reviews_per_user);
            }
            Command::Split(a) => {
                c = base(&a.common)?;
                set(&mut c.split.review_frac, a.review_frac);
                set(&mut c.split.query_test_frac, a.query_test_frac);
            }
            Command::Train(a) => {
                c = base(&a.common)?;
                a.model.apply(&mut c);
                a.train.apply(&mut c)?;
            }
            Command::Eval(a) => {
                c = base(&a.common)?;
                a.eval.apply(&mut c);
                set(&mut c.feedback, a.feedback);
            }
            Command::BaselineEval(a) => {
                c = base(&a.common)?;
                a.eval.apply(&mut c);
                let b = &mut c.baseline;
                set(&mut b.ranker, a.ranker);
                set(&mut b.neg.mu, a.mu);
                set(&mut b.bm25.k1, a.k1);
                set(&mut b.bm25.b, a.b);
                set(&mut b.neg.weight, a.weight);
                set(&mut b.rocchio_weight, a.weight);
                set(&mut b.neg.top_n, a.top_n);
            }
            Command::CheckGrad(a) => {
                c = base(&a.common)?;
                let g = &mut c.check_grad;
                set(&mut g.trials, a.trials);
                set(&mut g.dim, a.dim);
                set(&mut g.eps, a.eps);
                if let Some(v) = a.variant {
                    g.variants = vec![v];
                }
            }
            Command::Sweep(a) => {
                c = base(&a.common)?;
                a.model.apply(&mut c);
                a.train.apply(&mut c)?;
                set(&mut c.sweep.dims, a.dims.clone());
                set(&mut c.sweep.m, a.m.clone());
                set(&mut c.sweep.max_iterations, a.max_iterations);
                set(&mut c.feedback, a.feedback);
            }
            Command::Serve(a) => {
                c = base(&a.common)?;
                let s = &mut c.serve;
                set(&mut s.m, a.m);
                set(&mut s.iterations, a.iterations);
                set(&mut s.port, a.port);
                set(&mut s.ttl_secs, a.ttl_secs);
                set(&mut s.strategy, a.strategy);
                set(&mut s.feedback, a.feedback);
                if a.anonymous {
                    s.anonymous = true;
                }
            }
        }
        c.validate()?;
        Ok(c)
    }
}
