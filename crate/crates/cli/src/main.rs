use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sthoi_core::heatmap::{BoxExtraction, Branch, FusionOrder, SizeClass};
use sthoi_core::objects::MultiGtRule;
use sthoi_core::taxonomy::Representative;
use sthoi_core::tracklet::AlphaPreset;
use sthoi_core::Error;

mod config;
mod eval;
mod tools;

#[derive(Parser)]
#[command(name = "sthoi", version, about = "Step-wise ST-HOI evaluation and tooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// MOTA and IDF1 of the human tracks.
    EvalTracking(EvalArgs),
    /// Interaction mAP on the tracking true positives.
    EvalInteraction(EvalArgs),
    /// Interacted-object mIoU on the interaction true positives.
    EvalObjects(EvalArgs),
    /// All three stages.
    EvalAll(EvalArgs),
    /// Box from an STHM heatmap.
    DecodeHeatmap(DecodeArgs),
    /// Fuse part, human and context heatmaps into one STHM file.
    FuseHeatmaps(FuseArgs),
    /// Choose the test videos of a benchmark split.
    MakeSplit(SplitArgs),
    /// Group class words that share a hypernym path.
    ClusterClasses(TaxonomyArgs),
    /// Build a class tree from the clustered words.
    BuildTree(TaxonomyArgs),
    /// Write a synthetic benchmark and its expected scores.
    GenSynthetic(SyntheticArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Strict,
    Loose,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "2d")]
    TwoD,
    #[value(name = "3d")]
    ThreeD,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MultiGtArg {
    TrackletMax,
    FrameMax,
}

impl From<MultiGtArg> for MultiGtRule {
    fn from(a: MultiGtArg) -> Self {
        match a {
            MultiGtArg::TrackletMax => MultiGtRule::TrackletMax,
            MultiGtArg::FrameMax => MultiGtRule::FrameMax,
        }
    }
}

fn parse_preset(s: &str) -> Result<AlphaPreset, String> {
    AlphaPreset::from_name(s).ok_or_else(|| {
        let names: Vec<_> = AlphaPreset::ALL.iter().map(|p| p.name()).collect();
        format!("unknown preset, expected one of {}", names.join(", "))
    })
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Ground truth JSON Lines file.
    #[arg(long)]
    pub gt: PathBuf,
    /// Prediction JSON Lines file.
    #[arg(long)]
    pub pred: PathBuf,
    /// Interaction score mask; overrides --preset.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Named alpha preset (default heatmap-deepsort).
    #[arg(long, value_parser = parse_preset)]
    pub preset: Option<AlphaPreset>,
    #[arg(long)]
    pub tp_miou: Option<f64>,
    #[arg(long)]
    pub tracking_iou: Option<f64>,
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionArg>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub multi_gt: Option<MultiGtArg>,
    /// Ignore ground truth people with no labelled interaction.
    #[arg(long)]
    pub interacting_only: bool,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// key = value settings; flags win over the file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write the full report as JSON to this path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SizeArg {
    Small,
    Medium,
    Large,
}

impl From<SizeArg> for SizeClass {
    fn from(a: SizeArg) -> Self {
        match a {
            SizeArg::Small => SizeClass::Small,
            SizeArg::Medium => SizeClass::Medium,
            SizeArg::Large => SizeClass::Large,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ExtractionArg {
    AllPixels,
    LargestComponent,
}

impl From<ExtractionArg> for BoxExtraction {
    fn from(a: ExtractionArg) -> Self {
        match a {
            ExtractionArg::AllPixels => BoxExtraction::AllPixels,
            ExtractionArg::LargestComponent => BoxExtraction::LargestComponent,
        }
    }
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    /// STHM heatmap file.
    #[arg(long)]
    pub input: PathBuf,
    /// Object size class selecting the threshold.
    #[arg(long, value_enum, conflicts_with_all = ["threshold", "areas"])]
    pub size: Option<SizeArg>,
    /// Explicit threshold on the normalized map.
    #[arg(long, conflicts_with = "areas")]
    pub threshold: Option<f64>,
    /// Human and object box areas; the size class follows from their ratio.
    #[arg(long, num_args = 2, value_names = ["HUMAN", "OBJECT"])]
    pub areas: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub extraction: Option<ExtractionArg>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FuseMode {
    Equal,
    Dynamic,
    Select,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BranchArg {
    Part,
    Human,
    Context,
}

impl From<BranchArg> for Branch {
    fn from(a: BranchArg) -> Self {
        match a {
            BranchArg::Part => Branch::Part,
            BranchArg::Human => Branch::Human,
            BranchArg::Context => Branch::Context,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OrderArg {
    FuseThenNormalize,
    NormalizeThenFuse,
}

impl From<OrderArg> for FusionOrder {
    fn from(a: OrderArg) -> Self {
        match a {
            OrderArg::FuseThenNormalize => FusionOrder::FuseThenNormalize,
            OrderArg::NormalizeThenFuse => FusionOrder::NormalizeThenFuse,
        }
    }
}

#[derive(Args, Debug)]
pub struct FuseArgs {
    #[arg(long)]
    pub part: PathBuf,
    #[arg(long)]
    pub human: PathBuf,
    #[arg(long)]
    pub context: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "equal")]
    pub mode: FuseMode,
    /// Branch weights for dynamic fusion, summing to 1.
    #[arg(long, num_args = 3, value_names = ["PART", "HUMAN", "CONTEXT"], conflicts_with = "logits")]
    pub weights: Option<Vec<f64>>,
    /// Unnormalized branch logits for dynamic fusion (softmaxed).
    #[arg(long, num_args = 3, value_names = ["PART", "HUMAN", "CONTEXT"], allow_negative_numbers = true)]
    pub logits: Option<Vec<f64>>,
    /// Branch kept by select mode.
    #[arg(long, value_enum)]
    pub branch: Option<BranchArg>,
    #[arg(long, value_enum, default_value = "fuse-then-normalize")]
    pub order: OrderArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    /// Exact when the problem is small enough, otherwise heuristic.
    Auto,
    Exact,
    Heuristic,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Split problem as JSON.
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20_000)]
    pub iterations: usize,
    /// Write the solution here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RepresentativeArg {
    Shallowest,
    Deepest,
}

impl From<RepresentativeArg> for Representative {
    fn from(a: RepresentativeArg) -> Self {
        match a {
            RepresentativeArg::Shallowest => Representative::Shallowest,
            RepresentativeArg::Deepest => Representative::Deepest,
        }
    }
}

#[derive(Args, Debug)]
pub struct TaxonomyArgs {
    /// One class word per line.
    #[arg(long)]
    pub words: PathBuf,
    /// Hypernym edges, one `child<TAB>parent` per line.
    #[arg(long)]
    pub ontology: PathBuf,
    #[arg(long, value_enum, default_value = "shallowest")]
    pub representative: RepresentativeArg,
}

#[derive(Args, Debug)]
pub struct SyntheticArgs {
    /// Directory receiving gt.jsonl, pred.jsonl and expected.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub videos: usize,
    #[arg(long, default_value_t = 20)]
    pub seconds: u32,
    #[arg(long, default_value_t = 2)]
    pub tracks: usize,
    /// Seconds dropped from the end of track 0 in each video.
    #[arg(long, default_value_t = 0)]
    pub misses: u32,
    /// False positive people per video.
    #[arg(long, default_value_t = 0)]
    pub fp_tracks: usize,
    /// Frames per second written as tubes.
    #[arg(long, default_value_t = 1)]
    pub fps: usize,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Format(_) | Error::Json(_) => 2,
        Error::IdMismatch(_) => 3,
        Error::EmptyGroundTruth => 4,
        _ => 1,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } | Error::Json(_) => "parse",
        Error::Format(_) => "format",
        Error::IdMismatch(_) => "id_mismatch",
        Error::EmptyGroundTruth => "empty_ground_truth",
        Error::Io(_) => "io",
        Error::TooLarge { .. } => "too_large",
        Error::Infeasible(_) => "infeasible",
        Error::Oracle(_) => "oracle",
        _ => "invalid_input",
    }
}

fn run(cli: Cli) -> sthoi_core::Result<()> {
    match cli.command {
        Command::EvalTracking(a) => eval::run(&a, eval::Section::Tracking),
        Command::EvalInteraction(a) => eval::run(&a, eval::Section::Interaction),
        Command::EvalObjects(a) => eval::run(&a, eval::Section::Objects),
        Command::EvalAll(a) => eval::run(&a, eval::Section::All),
        Command::DecodeHeatmap(a) => tools::decode_heatmap(&a),
        Command::FuseHeatmaps(a) => tools::fuse_heatmaps(&a),
        Command::MakeSplit(a) => tools::make_split(&a),
        Command::ClusterClasses(a) => tools::cluster(&a),
        Command::BuildTree(a) => tools::build_tree(&a),
        Command::GenSynthetic(a) => tools::gen_synthetic(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut record = serde_json::json!({ "error": error_kind(&e), "message": e.to_string() });
            if let Error::Parse { line, .. } = e {
                record["line"] = line.into();
            }
            eprintln!("{record}");
            ExitCode::from(exit_code(&e))
        }
    }
}
