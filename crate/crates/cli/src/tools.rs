use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::json;
use sthoi_core::heatmap::{
    decode_heatmap as decode, fuse, read_sthm, size_classify, write_sthm, BoxExtraction, FusionStrategy, FusionWeights, HeatmapConfig,
    SizeClass,
};
use sthoi_core::io::write_records;
use sthoi_core::split::{solve_exact, solve_heuristic, SplitProblem, EXACT_MAX_VIDEOS};
use sthoi_core::synthetic::{gen_synthetic as generate, SyntheticSpec};
use sthoi_core::taxonomy::{build_taxonomy, cluster_classes, parse_word_list, MockOntology};
use sthoi_core::{Error, Heatmap32, Result};

use crate::config::Settings;
use crate::{DecodeArgs, FuseArgs, FuseMode, SolverArg, SplitArgs, SyntheticArgs, TaxonomyArgs};

fn read_map(path: &Path) -> Result<Heatmap32> {
    read_sthm(BufReader::new(File::open(path)?))
        .map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })
}

fn size_name(s: SizeClass) -> &'static str {
    match s {
        SizeClass::Small => "small",
        SizeClass::Medium => "medium",
        SizeClass::Large => "large",
    }
}

pub fn decode_heatmap(args: &DecodeArgs) -> Result<()> {
    let settings = Settings::load(args.config.as_deref())?;
    let cfg = HeatmapConfig::default();
    let size = match (&args.size, &args.areas) {
        (Some(s), _) => Some(SizeClass::from(*s)),
        (None, Some(a)) => Some(size_classify(a[0], a[1])?),
        (None, None) => None,
    };
    let threshold = args.threshold.unwrap_or_else(|| cfg.threshold_for(size));
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidInput("threshold must lie in (0, 1]".into()));
    }
    let extraction: BoxExtraction = match args.extraction {
        Some(e) => e.into(),
        None => settings
            .get("extraction", |v| match v {
                "all-pixels" => Some(BoxExtraction::AllPixels),
                "largest-component" => Some(BoxExtraction::LargestComponent),
                _ => None,
            })?
            .unwrap_or_default(),
    };
    let map = read_map(&args.input)?;
    let bbox = decode(&map, threshold as f32, extraction).map(|b| b.as_array());
    let record = json!({
        "width": map.width(),
        "height": map.height(),
        "size": size.map(size_name),
        "threshold": threshold,
        "box": bbox,
    });
    println!("{record}");
    Ok(())
}

fn triple(v: &[f64]) -> (f32, f32, f32) {
    (v[0] as f32, v[1] as f32, v[2] as f32)
}

pub fn fuse_heatmaps(args: &FuseArgs) -> Result<()> {
    let strategy = match args.mode {
        FuseMode::Equal => FusionStrategy::Equal,
        FuseMode::Dynamic => {
            let w = match (&args.weights, &args.logits) {
                (Some(w), _) => {
                    let (p, h, c) = triple(w);
                    FusionWeights::new(p, h, c)?
                }
                (None, Some(l)) => {
                    let (p, h, c) = triple(l);
                    FusionWeights::from_logits(p, h, c)?
                }
                (None, None) => return Err(Error::InvalidInput("dynamic fusion needs --weights or --logits".into())),
            };
            FusionStrategy::Dynamic(w)
        }
        FuseMode::Select => {
            let b = args.branch.ok_or_else(|| Error::InvalidInput("select fusion needs --branch".into()))?;
            FusionStrategy::Select(b.into())
        }
    };
    let (hp, hh, hc) = (read_map(&args.part)?, read_map(&args.human)?, read_map(&args.context)?);
    let fused = fuse(&hp, &hh, &hc, strategy, args.order.into())?;
    let mut out = BufWriter::new(File::create(&args.out)?);
    write_sthm(&mut out, &fused)?;
    out.flush()?;
    println!("{}", json!({ "out": args.out.display().to_string(), "width": fused.width(), "height": fused.height() }));
    Ok(())
}

pub fn make_split(args: &SplitArgs) -> Result<()> {
    let problem: SplitProblem = serde_json::from_reader(BufReader::new(File::open(&args.problem)?))?;
    problem.validate()?;
    let exact = match args.solver {
        SolverArg::Exact => true,
        SolverArg::Heuristic => false,
        SolverArg::Auto => problem.videos.len() <= EXACT_MAX_VIDEOS,
    };
    let solution = if exact { solve_exact(&problem)? } else { solve_heuristic(&problem, args.seed, args.iterations)? };
    let mut record = serde_json::to_value(&solution)?;
    record["solver"] = (if exact { "exact" } else { "heuristic" }).into();
    let text = serde_json::to_string_pretty(&record)?;
    match &args.out {
        Some(p) => fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn load_taxonomy_inputs(args: &TaxonomyArgs) -> Result<(Vec<String>, MockOntology)> {
    let words = parse_word_list(&fs::read_to_string(&args.words)?)?;
    let ontology = MockOntology::parse(&fs::read_to_string(&args.ontology)?)?;
    Ok((words, ontology))
}

pub fn cluster(args: &TaxonomyArgs) -> Result<()> {
    let (words, ontology) = load_taxonomy_inputs(args)?;
    let clusters = cluster_classes(&words, &ontology, args.representative.into())?;
    println!("{}", serde_json::to_string_pretty(&clusters)?);
    Ok(())
}

pub fn build_tree(args: &TaxonomyArgs) -> Result<()> {
    let (words, ontology) = load_taxonomy_inputs(args)?;
    let clusters = cluster_classes(&words, &ontology, args.representative.into())?;
    let tree = build_taxonomy(&clusters, &ontology)?;
    println!("{}", serde_json::to_string_pretty(&tree)?);
    Ok(())
}

pub fn gen_synthetic(args: &SyntheticArgs) -> Result<()> {
    let spec = SyntheticSpec {
        seed: args.seed,
        n_videos: args.videos,
        n_seconds: args.seconds,
        n_tracks: args.tracks,
        misses: args.misses,
        fp_tracks: args.fp_tracks,
        frames_per_second: args.fps,
    };
    let s = generate(&spec)?;
    fs::create_dir_all(&args.out_dir)?;
    let write = |name: &str, records: &[sthoi_core::io::TrackletRecord]| -> Result<()> {
        let mut out = BufWriter::new(File::create(args.out_dir.join(name))?);
        write_records(&mut out, records)?;
        out.flush()?;
        Ok(())
    };
    write("gt.jsonl", &s.gt)?;
    write("pred.jsonl", &s.pred)?;
    let expected = json!({ "spec": spec, "expected": s.expected });
    fs::write(args.out_dir.join("expected.json"), serde_json::to_string_pretty(&expected)? + "\n")?;
    println!("{}", json!({ "dir": args.out_dir.display().to_string(), "gt_records": s.gt.len(), "pred_records": s.pred.len() }));
    Ok(())
}
