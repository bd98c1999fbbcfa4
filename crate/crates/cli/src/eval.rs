use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde_json::{json, Map, Value};
use sthoi_core::interaction::{Criterion, IouMode};
use sthoi_core::io::{read_records, Role, TrackletRecord};
use sthoi_core::objects::MultiGtRule;
use sthoi_core::pipeline::{eval_all, EvalReport, PipelineConfig, CELLS};
use sthoi_core::tracklet::{AlphaPreset, EvalConfig};
use sthoi_core::{Error, Result};

use crate::config::Settings;
use crate::{CriterionArg, EvalArgs, ModeArg, MultiGtArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Tracking,
    Interaction,
    Objects,
    All,
}

fn load(path: &Path, role: Role) -> Result<Vec<TrackletRecord>> {
    let file = File::open(path)?;
    read_records(BufReader::new(file), role).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse { line, message: format!("{}: {message}", path.display()) },
        other => other,
    })
}

fn criterion_arg(s: &str) -> Option<CriterionArg> {
    match s {
        "strict" => Some(CriterionArg::Strict),
        "loose" => Some(CriterionArg::Loose),
        "both" => Some(CriterionArg::Both),
        _ => None,
    }
}

fn mode_arg(s: &str) -> Option<ModeArg> {
    match s {
        "2d" => Some(ModeArg::TwoD),
        "3d" => Some(ModeArg::ThreeD),
        "both" => Some(ModeArg::Both),
        _ => None,
    }
}

fn multi_gt_arg(s: &str) -> Option<MultiGtArg> {
    match s {
        "tracklet-max" => Some(MultiGtArg::TrackletMax),
        "frame-max" => Some(MultiGtArg::FrameMax),
        _ => None,
    }
}

fn bool_arg(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

/// Resolved options: flags first, then the settings file, then defaults.
pub struct Resolved {
    pub pipeline: PipelineConfig,
    pub criterion: CriterionArg,
    pub mode: ModeArg,
}

pub fn resolve(args: &EvalArgs, settings: &Settings) -> Result<Resolved> {
    let float = |s: &str| s.parse::<f64>().ok();
    let alpha = match (args.alpha, args.preset) {
        (Some(a), _) => a,
        (None, Some(p)) => p.alpha(),
        (None, None) => match settings.get("alpha", float)? {
            Some(a) => a,
            None => settings.get("preset", AlphaPreset::from_name)?.unwrap_or_default().alpha(),
        },
    };
    let defaults = EvalConfig::default();
    let eval = EvalConfig {
        alpha,
        tp_miou: args.tp_miou.or(settings.get("tp_miou", float)?).unwrap_or(defaults.tp_miou),
        tracking_iou: args.tracking_iou.or(settings.get("tracking_iou", float)?).unwrap_or(defaults.tracking_iou),
    };
    let multi_gt: MultiGtRule = args
        .multi_gt
        .or(settings.get("multi_gt", multi_gt_arg)?)
        .map(Into::into)
        .unwrap_or_default();
    let interacting_only = args.interacting_only || settings.get("interacting_only", bool_arg)?.unwrap_or(false);
    let jobs = args.jobs.or(settings.get("jobs", |s| s.parse::<usize>().ok())?);
    if jobs == Some(0) {
        return Err(Error::InvalidInput("jobs must be at least 1".into()));
    }
    Ok(Resolved {
        pipeline: PipelineConfig { eval, multi_gt, interacting_only, jobs },
        criterion: args.criterion.or(settings.get("criterion", criterion_arg)?).unwrap_or(CriterionArg::Both),
        mode: args.mode.or(settings.get("mode", mode_arg)?).unwrap_or(ModeArg::Both),
    })
}

fn selected_cells(criterion: CriterionArg, mode: ModeArg) -> Vec<(IouMode, Criterion)> {
    CELLS
        .into_iter()
        .filter(|(m, c)| {
            let mode_ok = matches!((mode, m), (ModeArg::Both, _) | (ModeArg::TwoD, IouMode::TwoD) | (ModeArg::ThreeD, IouMode::ThreeD));
            let crit_ok = matches!(
                (criterion, c),
                (CriterionArg::Both, _) | (CriterionArg::Strict, Criterion::Strict) | (CriterionArg::Loose, Criterion::Loose)
            );
            mode_ok && crit_ok
        })
        .collect()
}

fn cell_key(prefix: &str, (m, c): (IouMode, Criterion)) -> String {
    let m = match m {
        IouMode::TwoD => "2d",
        IouMode::ThreeD => "3d",
    };
    let c = match c {
        Criterion::Strict => "strict",
        Criterion::Loose => "loose",
    };
    format!("{prefix}_{m}_{c}")
}

fn section_json(report: &EvalReport, section: Section, cells: &[(IouMode, Criterion)]) -> Value {
    let full = serde_json::to_value(report).expect("report serializes");
    let pick = |name: &str, prefix: &str| -> Value {
        let obj = &full[name];
        let mut out = Map::new();
        for &cell in cells {
            let k = cell_key(prefix, cell);
            out.insert(k.clone(), obj[&k].clone());
        }
        Value::Object(out)
    };
    match section {
        Section::All => full,
        Section::Tracking => json!({
            "tracking": full["tracking"],
            "per_video": report.per_video.iter().map(|v| json!({
                "video": v.video, "mota": v.mota, "idf1": v.idf1, "counts": v.tracking,
            })).collect::<Vec<_>>(),
            "excluded_videos": full["flags"]["excluded_videos"],
        }),
        Section::Interaction => json!({
            "interaction": pick("interaction", "map"),
            "per_class": full["per_class"],
            "classes_without_ground_truth": full["flags"]["classes_without_ground_truth"],
        }),
        Section::Objects => json!({
            "objects": pick("objects", "miou"),
            "object_tracklets": full["flags"]["object_tracklets"],
            "object_tracklets_excluded": full["flags"]["object_tracklets_excluded"],
        }),
    }
}

fn fixed4(v: f64) -> String {
    format!("{:.4}", v)
}

pub fn table(report: &EvalReport, section: Section, cells: &[(IouMode, Criterion)]) -> String {
    let mut out = String::new();
    if matches!(section, Section::Tracking | Section::All) {
        out.push_str(&format!("tracking     MOTA {}  IDF1 {}\n", fixed4(report.tracking.mota), fixed4(report.tracking.idf1)));
    }
    let rows = |out: &mut String, title: &str, get: &dyn Fn(IouMode, Criterion) -> f64| {
        for &(m, c) in cells {
            let label = cell_key(title, (m, c));
            out.push_str(&format!("{label:<20} {}\n", fixed4(get(m, c))));
        }
    };
    if matches!(section, Section::Interaction | Section::All) {
        rows(&mut out, "map", &|m, c| report.interaction.get(m, c));
        if report.flags.no_interaction_ground_truth {
            out.push_str("note: no interaction class has ground truth\n");
        }
    }
    if matches!(section, Section::Objects | Section::All) {
        rows(&mut out, "miou", &|m, c| report.objects.get(m, c));
    }
    if section != Section::Tracking && !report.flags.excluded_videos.is_empty() {
        out.push_str(&format!("note: {} video(s) without ground truth boxes\n", report.flags.excluded_videos.len()));
    }
    out
}

pub fn run(args: &EvalArgs, section: Section) -> Result<()> {
    let settings = Settings::load(args.config.as_deref())?;
    let resolved = resolve(args, &settings)?;
    let gt = load(&args.gt, Role::GroundTruth)?;
    let pred = load(&args.pred, Role::Prediction)?;
    let report = eval_all(&gt, &pred, &resolved.pipeline)?;
    if let Some(path) = &args.report {
        let file = File::create(path)?;
        serde_json::to_writer_pretty(file, &report)?;
    }
    let cells = selected_cells(resolved.criterion, resolved.mode);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&section_json(&report, section, &cells))?);
    } else {
        print!("{}", table(&report, section, &cells));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_selection() {
        assert_eq!(selected_cells(CriterionArg::Both, ModeArg::Both).len(), 4);
        assert_eq!(selected_cells(CriterionArg::Strict, ModeArg::ThreeD), vec![(IouMode::ThreeD, Criterion::Strict)]);
        assert_eq!(cell_key("map", (IouMode::TwoD, Criterion::Loose)), "map_2d_loose");
    }
}
