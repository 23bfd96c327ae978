//! Pipeline configuration: TOML file plus command-line overrides. Every
//! default matches the shipped hyperparameters (9x9 grid, KFD threshold
//! 0.85, 32 regions, Kaiser beta 25, 0.75-4 Hz band, 10 s windows with
//! 1 s steps).

use anyhow::{bail, Context, Result};
use rppg_core::dsp::DetrendMethod;
use rppg_core::regions::{KfdRule, SelectionConfig};
use rppg_core::rppg::{MethodId, MethodOptions};
use rppg_core::spectral::SpectralConfig;
use serde::Deserialize;
use std::path::Path;

/// Which pipeline variant to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineKind {
    /// Fixed-crop single ROI, no geometric normalization.
    Improved,
    /// Mesh-normalized whole-face single region.
    NormalizedSingle,
    /// Mesh-normalized grid with dynamic multi-region selection.
    MultiRegion,
}

impl PipelineKind {
    pub fn name(&self) -> &'static str {
        match self {
            PipelineKind::Improved => "improved",
            PipelineKind::NormalizedSingle => "normalized_single",
            PipelineKind::MultiRegion => "multi_region",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Ok(match s {
            "improved" => PipelineKind::Improved,
            "normalized_single" => PipelineKind::NormalizedSingle,
            "multi_region" => PipelineKind::MultiRegion,
            other => bail!("unknown pipeline '{other}' (improved | normalized_single | multi_region)"),
        })
    }
}

/// When the band-pass chain runs relative to the RGB-to-pulse conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterStage {
    Pre,
    Post,
    Both,
}

/// Which regions feed the multi-region pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionMode {
    Grid,
    Forehead,
    Cheeks,
    Combined,
}

impl RegionMode {
    pub fn name(&self) -> &'static str {
        match self {
            RegionMode::Grid => "grid",
            RegionMode::Forehead => "forehead",
            RegionMode::Cheeks => "cheeks",
            RegionMode::Combined => "combined",
        }
    }
}

/// Fully resolved pipeline configuration.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub pipeline: PipelineKind,
    pub method: MethodId,
    pub pre_post_filter: FilterStage,
    pub region_mode: RegionMode,
    /// Disabling this in the multi-region pipeline reproduces the
    /// normalized single-region behaviour over the configured regions.
    pub dmrs: bool,
    pub selection: SelectionConfig,
    pub bandpass_low_hz: f64,
    pub bandpass_high_hz: f64,
    pub bandpass_beta: f64,
    /// None chooses round(4.2 * fs) forced odd at run time.
    pub bandpass_taps: Option<usize>,
    pub spectral: SpectralConfig,
    pub detrend: DetrendMethod,
    pub method_options: MethodOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineKind::MultiRegion,
            method: MethodId::Omit,
            pre_post_filter: FilterStage::Pre,
            region_mode: RegionMode::Grid,
            dmrs: true,
            selection: SelectionConfig::default(),
            bandpass_low_hz: 0.75,
            bandpass_high_hz: 4.0,
            bandpass_beta: 25.0,
            bandpass_taps: None,
            spectral: SpectralConfig::default(),
            detrend: DetrendMethod::Linear,
            method_options: MethodOptions::default(),
        }
    }
}

impl PipelineConfig {
    /// Consistency checks across fields.
    pub fn validate(&self) -> Result<()> {
        self.selection.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        if self.method.needs_pixels() && self.pipeline == PipelineKind::Improved {
            bail!("2sr needs pixel access to the normalized face; it cannot run in the improved pipeline");
        }
        if !(self.bandpass_low_hz > 0.0 && self.bandpass_high_hz > self.bandpass_low_hz) {
            bail!("band-pass edges must satisfy 0 < low < high");
        }
        if let Some(t) = self.bandpass_taps {
            if t % 2 == 0 || t < 3 {
                bail!("num_taps must be odd and >= 3");
            }
        }
        if self.pipeline != PipelineKind::MultiRegion && self.region_mode != RegionMode::Grid {
            bail!("fixed patches apply to the multi_region pipeline only");
        }
        Ok(())
    }
}

// ---- TOML schema ----------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    pipeline: PipelineSection,
    #[serde(default)]
    selection: SelectionSection,
    #[serde(default)]
    bandpass: BandpassSection,
    #[serde(default)]
    spectral: SpectralSection,
    #[serde(default)]
    detrend: DetrendSection,
    #[serde(default)]
    ica: IcaSection,
    #[serde(default)]
    pbv: PbvSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineSection {
    kind: Option<String>,
    method: Option<String>,
    pre_post_filter: Option<String>,
    region_mode: Option<String>,
    dmrs: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionSection {
    grid_n: Option<usize>,
    kfd_threshold: Option<f64>,
    kfd_rule: Option<String>,
    dfa_low: Option<f64>,
    dfa_high: Option<f64>,
    max_regions: Option<usize>,
    window_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandpassSection {
    low_hz: Option<f64>,
    high_hz: Option<f64>,
    beta: Option<f64>,
    num_taps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectralSection {
    band_low_hz: Option<f64>,
    band_high_hz: Option<f64>,
    win_s: Option<f64>,
    step_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetrendSection {
    method: Option<String>,
    lambda: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct IcaSection {
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PbvSection {
    signature: Option<[f64; 3]>,
}

/// Loads a config file and applies it over the defaults.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let file: FileConfig = toml::from_str(text).context("parsing config file")?;
    let mut cfg = PipelineConfig::default();

    if let Some(kind) = &file.pipeline.kind {
        cfg.pipeline = PipelineKind::from_name(kind)?;
    }
    if let Some(m) = &file.pipeline.method {
        cfg.method = MethodId::from_name(m).map_err(|e| anyhow::anyhow!("{e}"))?;
    }
    if let Some(s) = &file.pipeline.pre_post_filter {
        cfg.pre_post_filter = match s.as_str() {
            "pre" => FilterStage::Pre,
            "post" => FilterStage::Post,
            "both" => FilterStage::Both,
            other => bail!("unknown filter stage '{other}' (pre | post | both)"),
        };
    }
    if let Some(s) = &file.pipeline.region_mode {
        cfg.region_mode = match s.as_str() {
            "grid" => RegionMode::Grid,
            "forehead" => RegionMode::Forehead,
            "cheeks" => RegionMode::Cheeks,
            "combined" => RegionMode::Combined,
            other => bail!("unknown region mode '{other}'"),
        };
    }
    if let Some(d) = file.pipeline.dmrs {
        cfg.dmrs = d;
    }

    let s = &file.selection;
    if let Some(v) = s.grid_n {
        cfg.selection.grid_n = v;
    }
    if let Some(v) = s.kfd_threshold {
        cfg.selection.kfd_threshold = v;
    }
    if let Some(rule) = &s.kfd_rule {
        cfg.selection.kfd_rule = match rule.as_str() {
            "relative_range" => KfdRule::RelativeRange,
            "relative_max_keep_high" => KfdRule::RelativeToMaxKeepHigh,
            "absolute" => KfdRule::AbsoluteMin,
            other => bail!("unknown kfd rule '{other}'"),
        };
    }
    if let Some(v) = s.dfa_low {
        cfg.selection.dfa_low = v;
    }
    if let Some(v) = s.dfa_high {
        cfg.selection.dfa_high = v;
    }
    if let Some(v) = s.max_regions {
        cfg.selection.max_regions = v;
    }
    if let Some(v) = s.window_s {
        cfg.selection.window_s = v;
        cfg.spectral.win_s = v;
    }

    if let Some(v) = file.bandpass.low_hz {
        cfg.bandpass_low_hz = v;
    }
    if let Some(v) = file.bandpass.high_hz {
        cfg.bandpass_high_hz = v;
    }
    if let Some(v) = file.bandpass.beta {
        cfg.bandpass_beta = v;
    }
    if file.bandpass.num_taps.is_some() {
        cfg.bandpass_taps = file.bandpass.num_taps;
    }

    if let Some(v) = file.spectral.band_low_hz {
        cfg.spectral.band.0 = v;
    }
    if let Some(v) = file.spectral.band_high_hz {
        cfg.spectral.band.1 = v;
    }
    if let Some(v) = file.spectral.win_s {
        cfg.spectral.win_s = v;
        cfg.selection.window_s = v;
    }
    if let Some(v) = file.spectral.step_s {
        cfg.spectral.step_s = v;
    }

    match file.detrend.method.as_deref() {
        None | Some("linear") => cfg.detrend = DetrendMethod::Linear,
        Some("smoothness_priors") => {
            cfg.detrend = DetrendMethod::SmoothnessPriors { lambda: file.detrend.lambda.unwrap_or(300.0) }
        }
        Some(other) => bail!("unknown detrend method '{other}'"),
    }

    if let Some(seed) = file.ica.seed {
        cfg.method_options.ica_seed = seed;
    }
    if let Some(sig) = file.pbv.signature {
        cfg.method_options.pbv_signature = sig;
    }
    cfg.method_options.selection_band = cfg.spectral.band;

    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_the_shipped_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.pipeline, PipelineKind::MultiRegion);
        assert_eq!(cfg.method, MethodId::Omit);
        assert_eq!(cfg.selection.grid_n, 9);
        assert_eq!(cfg.selection.max_regions, 32);
        assert_eq!(cfg.selection.kfd_threshold, 0.85);
        assert_eq!(cfg.bandpass_beta, 25.0);
        assert_eq!(cfg.bandpass_low_hz, 0.75);
        assert_eq!(cfg.bandpass_high_hz, 4.0);
        assert_eq!(cfg.spectral.win_s, 10.0);
        assert_eq!(cfg.spectral.step_s, 1.0);
    }

    #[test]
    fn two_sr_with_improved_pipeline_is_rejected() {
        let err = parse_config("[pipeline]\nkind = \"improved\"\nmethod = \"2sr\"\n").unwrap_err();
        assert!(err.to_string().contains("2sr"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config("[pipeline]\nbogus = 1\n").is_err());
    }

    #[test]
    fn overrides_apply() {
        let cfg = parse_config(
            "[pipeline]\nkind = \"normalized_single\"\nmethod = \"chrom\"\n[selection]\ngrid_n = 7\n[bandpass]\nnum_taps = 201\n",
        )
        .unwrap();
        assert_eq!(cfg.pipeline, PipelineKind::NormalizedSingle);
        assert_eq!(cfg.method, MethodId::Chrom);
        assert_eq!(cfg.selection.grid_n, 7);
        assert_eq!(cfg.bandpass_taps, Some(201));
    }
}
