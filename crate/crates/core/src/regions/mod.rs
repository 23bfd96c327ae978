//! Grid partitioning of the normalized face, per-region RGB traces, the
//! statistical/fractal quality battery, and dynamic multi-region selection.

mod patches;
mod stats;

pub use patches::{fixed_patches, PatchMode};
pub use stats::{dfa_alpha, katz_fd, psd_band_energy, sample_entropy, snr_db, zero_crossings};

use crate::dsp::Signal1D;
use crate::error::{Error, Result};
use crate::facegeom::NormalizedFaceStack;

/// Half-open pixel box [x0, x1) x [y0, y1) in canonical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionBox {
    pub id: usize,
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl RegionBox {
    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }
    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }
    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }
}

/// Per-frame mean RGB time series for one region.
#[derive(Debug, Clone)]
pub struct RgbTrace {
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    pub b: Vec<f64>,
    pub fs: f64,
    pub region_id: usize,
}

impl RgbTrace {
    pub fn len(&self) -> usize {
        self.g.len()
    }
    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
    pub fn channel(&self, mix: ChannelMix) -> Vec<f64> {
        match mix {
            ChannelMix::Red => self.r.clone(),
            ChannelMix::Green => self.g.clone(),
            ChannelMix::Blue => self.b.clone(),
            ChannelMix::Mean => (0..self.len())
                .map(|i| (self.r[i] + self.g[i] + self.b[i]) / 3.0)
                .collect(),
        }
    }
}

/// Channel used for the quality statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelMix {
    Red,
    #[default]
    Green,
    Blue,
    Mean,
}

/// Per-region quality record.
#[derive(Debug, Clone)]
pub struct RegionStats {
    pub region_id: usize,
    pub mean: f64,
    pub std: f64,
    pub variance: f64,
    pub snr_db: f64,
    /// None when the series is constant and the dimension is undefined.
    pub kfd: Option<f64>,
    pub zero_crossings: usize,
    pub sample_entropy: f64,
    pub dfa_alpha: f64,
    pub psd_energy: f64,
}

/// How the Katz-dimension screen interprets its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KfdRule {
    /// Min-max normalize kfd within the window and discard regions whose
    /// score is at or above the threshold (the most-complex band). A
    /// degenerate range keeps every region.
    #[default]
    RelativeRange,
    /// Keep regions with kfd >= threshold * window max.
    RelativeToMaxKeepHigh,
    /// Keep regions with kfd >= threshold.
    AbsoluteMin,
}

/// Dynamic multi-region selection parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    pub grid_n: usize,
    pub kfd_threshold: f64,
    pub kfd_rule: KfdRule,
    pub dfa_low: f64,
    pub dfa_high: f64,
    pub max_regions: usize,
    pub window_s: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            grid_n: 9,
            kfd_threshold: 0.85,
            kfd_rule: KfdRule::RelativeRange,
            dfa_low: 0.75,
            dfa_high: 1.5,
            max_regions: 32,
            window_s: 10.0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 2 {
            return Err(Error::InvalidInput(format!("grid_n must be >= 2, got {}", self.grid_n)));
        }
        if !(self.kfd_threshold > 0.0 && self.kfd_threshold <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "kfd_threshold must be in (0, 1], got {}",
                self.kfd_threshold
            )));
        }
        if self.dfa_low >= self.dfa_high {
            return Err(Error::InvalidInput(format!(
                "dfa band must satisfy low < high, got {}..{}",
                self.dfa_low, self.dfa_high
            )));
        }
        if self.max_regions < 1 {
            return Err(Error::InvalidInput("max_regions must be >= 1".into()));
        }
        Ok(())
    }
}

/// Row-major n x n integer partition of a raster; box widths differ by at
/// most one pixel and the boxes tile the raster exactly.
pub fn grid_partition(width: u32, height: u32, n: usize) -> Result<Vec<RegionBox>> {
    if n == 0 || n as u32 > width.min(height) {
        return Err(Error::InvalidInput(format!(
            "cannot split {width}x{height} raster into {n}x{n} grid"
        )));
    }
    let cuts = |total: u32| -> Vec<u32> {
        // Larger cells first: ceil of the remaining split.
        let mut edges = vec![0u32];
        let mut used = 0u32;
        for i in 0..n {
            let remaining = total - used;
            let cells_left = (n - i) as u32;
            let w = remaining.div_ceil(cells_left);
            used += w;
            edges.push(used);
        }
        edges
    };
    let xs = cuts(width);
    let ys = cuts(height);
    let mut boxes = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            boxes.push(RegionBox {
                id: row * n + col,
                x0: xs[col],
                y0: ys[row],
                x1: xs[col + 1],
                y1: ys[row + 1],
            });
        }
    }
    Ok(boxes)
}

/// Mean pixel value per channel per frame over each box.
pub fn extract_traces(stack: &NormalizedFaceStack, boxes: &[RegionBox]) -> Result<Vec<RgbTrace>> {
    let Some(first) = stack.frames.first() else {
        return Err(Error::EmptyStack);
    };
    for b in boxes {
        if b.x1 > first.width || b.y1 > first.height || b.x0 >= b.x1 || b.y0 >= b.y1 {
            return Err(Error::InvalidInput(format!("region box {b:?} outside raster bounds")));
        }
    }
    let mut traces: Vec<RgbTrace> = boxes
        .iter()
        .map(|b| RgbTrace {
            r: Vec::with_capacity(stack.len()),
            g: Vec::with_capacity(stack.len()),
            b: Vec::with_capacity(stack.len()),
            fs: stack.fs,
            region_id: b.id,
        })
        .collect();
    for frame in &stack.frames {
        for (bi, b) in boxes.iter().enumerate() {
            let mut sum = [0u64; 3];
            for y in b.y0..b.y1 {
                let row = ((y * frame.width + b.x0) * 3) as usize;
                let row_px = &frame.data[row..row + (b.width() * 3) as usize];
                for px in row_px.chunks_exact(3) {
                    sum[0] += px[0] as u64;
                    sum[1] += px[1] as u64;
                    sum[2] += px[2] as u64;
                }
            }
            let area = b.area() as f64;
            traces[bi].r.push(sum[0] as f64 / area);
            traces[bi].g.push(sum[1] as f64 / area);
            traces[bi].b.push(sum[2] as f64 / area);
        }
    }
    Ok(traces)
}

/// Fills the full quality battery for one region trace. An undefined Katz
/// dimension (constant series) is flagged in the record, not an error.
pub fn compute_region_stats(trace: &RgbTrace, mix: ChannelMix, band: (f64, f64)) -> Result<RegionStats> {
    if trace.len() < 64 {
        return Err(Error::InvalidInput(format!("region stats need >= 64 samples, got {}", trace.len())));
    }
    let series = trace.channel(mix);
    let (mean, std, variance) = stats::basic_moments(&series);
    let kfd = match katz_fd(&series) {
        Ok(v) => Some(v),
        Err(Error::UndefinedKfd) => None,
        Err(e) => return Err(e),
    };
    let dfa = if variance > 0.0 { dfa_alpha(&series)? } else { 0.0 };
    let signal = Signal1D::new(series.clone(), trace.fs).unwrap_or_else(|_| Signal1D {
        samples: series.clone(),
        fs: trace.fs,
    });
    Ok(RegionStats {
        region_id: trace.region_id,
        mean,
        std,
        variance,
        snr_db: snr_db(&signal, band),
        kfd,
        zero_crossings: zero_crossings(&series),
        sample_entropy: sample_entropy(&series, 2, 0.2 * std),
        dfa_alpha: dfa,
        psd_energy: psd_band_energy(&signal, band),
    })
}

/// Dynamic multi-region selection.
///
/// Filters in order: (1) drop zero-variance regions, (2) the Katz-dimension
/// screen per `cfg.kfd_rule`, (3) keep DFA alpha in (dfa_low, dfa_high],
/// (4) keep the `max_regions` survivors with highest in-band energy,
/// tie-broken by lowest region id. An empty outcome falls back to the
/// single region with the highest energy.
pub fn select_regions(stats: &[RegionStats], cfg: &SelectionConfig) -> Vec<usize> {
    let live: Vec<&RegionStats> = stats.iter().filter(|s| s.variance > 0.0).collect();

    let kfd_pass = |s: &RegionStats, survivors: &[&RegionStats]| -> bool {
        let Some(k) = s.kfd else { return false };
        match cfg.kfd_rule {
            KfdRule::AbsoluteMin => k >= cfg.kfd_threshold,
            KfdRule::RelativeToMaxKeepHigh => {
                let kmax = survivors.iter().filter_map(|s| s.kfd).fold(f64::NEG_INFINITY, f64::max);
                k >= cfg.kfd_threshold * kmax
            }
            KfdRule::RelativeRange => {
                let kmax = survivors.iter().filter_map(|s| s.kfd).fold(f64::NEG_INFINITY, f64::max);
                let kmin = survivors.iter().filter_map(|s| s.kfd).fold(f64::INFINITY, f64::min);
                if kmax.is_infinite() && kmax > 0.0 {
                    return k.is_finite();
                }
                let range = kmax - kmin;
                if range <= 1e-12 * kmax.abs().max(1.0) {
                    return true;
                }
                (k - kmin) / range < cfg.kfd_threshold
            }
        }
    };

    let mut survivors: Vec<&RegionStats> =
        live.iter().copied().filter(|s| kfd_pass(s, &live)).collect();
    survivors.retain(|s| s.dfa_alpha > cfg.dfa_low && s.dfa_alpha <= cfg.dfa_high);
    survivors.sort_by(|a, b| {
        b.psd_energy
            .partial_cmp(&a.psd_energy)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.region_id.cmp(&b.region_id))
    });
    survivors.truncate(cfg.max_regions);
    let mut ids: Vec<usize> = survivors.iter().map(|s| s.region_id).collect();

    if ids.is_empty() {
        // Always emit a signal: fall back to the most energetic region.
        if let Some(best) = stats.iter().max_by(|a, b| {
            a.psd_energy
                .partial_cmp(&b.psd_energy)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.region_id.cmp(&a.region_id))
        }) {
            ids.push(best.region_id);
        }
    }
    ids.sort_unstable();
    ids
}

/// Sum of selected per-region pulse signals, then amplitude-normalized to
/// unit variance. Near-total cancellation sets the `flat` flag and skips
/// normalization.
#[derive(Debug, Clone)]
pub struct AggregatedPulse {
    pub signal: Signal1D,
    pub flat: bool,
}

pub fn aggregate_regions(pulses: &[(usize, Vec<f64>)], ids: &[usize], fs: f64) -> Result<AggregatedPulse> {
    if ids.is_empty() {
        return Err(Error::InvalidInput("no regions selected for aggregation".into()));
    }
    let mut len = None;
    let mut sum: Vec<f64> = Vec::new();
    let mut input_var = 0.0;
    let mut used = 0usize;
    for &id in ids {
        let Some((_, p)) = pulses.iter().find(|(pid, _)| *pid == id) else {
            return Err(Error::InvalidInput(format!("no pulse signal for region {id}")));
        };
        match len {
            None => {
                len = Some(p.len());
                sum = p.clone();
            }
            Some(l) => {
                if p.len() != l {
                    return Err(Error::InvalidInput("pulse signals differ in length".into()));
                }
                for (s, v) in sum.iter_mut().zip(p.iter()) {
                    *s += v;
                }
            }
        }
        input_var += crate::dsp::variance(p);
        used += 1;
    }
    let input_var = input_var / used as f64;
    let var = crate::dsp::variance(&sum);
    let flat = var < 1e-12 * input_var.max(f64::MIN_POSITIVE);
    if !flat && var > 0.0 {
        let std = var.sqrt();
        for v in &mut sum {
            *v /= std;
        }
    }
    Ok(AggregatedPulse { signal: Signal1D { samples: sum, fs }, flat })
}
