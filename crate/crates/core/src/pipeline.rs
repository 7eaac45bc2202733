//! End-to-end workflows: hints, projection, matching and evaluation.

use crate::config::RunConfig;
use crate::error::Result;
use crate::eval::{evaluate, MetricsReport};
use crate::hints::{apply_sensor_noise, sample_from_gt};
use crate::matcher::match_stereo;
use crate::occlusion::{classify_occluded, warp_hints};
use crate::patching::{project_with_ownership, Projection};
use crate::types::{DisparityMap, HintSet, OcclusionMask, StereoPair};

/// Occlusion classification followed by patterned projection.
pub fn project(pair: &StereoPair, hints: &HintSet, cfg: &RunConfig) -> Result<(Projection, OcclusionMask)> {
    cfg.occlusion.validate()?;
    let mask = classify_occluded(&warp_hints(hints), &cfg.occlusion);
    let projection = project_with_ownership(
        pair,
        hints,
        &mask,
        &cfg.pattern_config(),
        &cfg.patch,
        cfg.occlusion.policy,
    )?;
    Ok((projection, mask))
}

/// Hints sampled from ground truth at `density`, with sensor noise if
/// enabled.
pub fn hints_from_gt(gt: &DisparityMap, density: f64, cfg: &RunConfig) -> Result<HintSet> {
    let hints = sample_from_gt(gt, &cfg.sampling_config(density))?;
    if cfg.noise {
        Ok(apply_sensor_noise(&hints, &cfg.calibration()?, &cfg.noise_config()))
    } else {
        Ok(hints)
    }
}

/// Relative reduction of `patterned` against `vanilla`, in percent.
pub fn relative_reduction(vanilla: f64, patterned: f64) -> f64 {
    if vanilla == 0.0 {
        0.0
    } else {
        100.0 * (vanilla - patterned) / vanilla
    }
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub density: f64,
    pub hints: usize,
    pub report: MetricsReport,
}

/// Matches and evaluates the pair for each density; density 0 is the plain
/// pair without hints.
pub fn density_sweep(
    pair: &StereoPair,
    gt: &DisparityMap,
    densities: &[f64],
    cfg: &RunConfig,
) -> Result<Vec<SweepEntry>> {
    cfg.validate()?;
    let mut vanilla: Option<MetricsReport> = None;
    let mut out = Vec::with_capacity(densities.len());
    for &density in densities {
        let (hints, report) = if density == 0.0 {
            if vanilla.is_none() {
                vanilla = Some(evaluate(&match_stereo(pair, &cfg.sgm)?, gt, &cfg.taus)?);
            }
            (0, vanilla.clone().expect("just computed"))
        } else {
            let hints = hints_from_gt(gt, density, cfg)?;
            let (projection, _) = project(pair, &hints, cfg)?;
            let disp = match_stereo(&projection.pair, &cfg.sgm)?;
            (hints.count(), evaluate(&disp, gt, &cfg.taus)?)
        };
        out.push(SweepEntry {
            density,
            hints,
            report,
        });
    }
    Ok(out)
}
