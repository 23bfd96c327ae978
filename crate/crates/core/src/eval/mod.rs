//! Alignment of extracted and reference heart-rate series, MAE/RMSE/PCC
//! metrics, and dataset-level aggregation.

use crate::error::{Error, Result};
use crate::spectral::HrSeries;

/// Alignment of the extracted series against the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentParams {
    /// Time shift applied to the extracted series: aligned(t) = est(t - lag_s).
    pub lag_s: f64,
    pub scale_mode: ScaleMode,
    pub max_lag_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleMode {
    #[default]
    None,
    ZNorm,
}

impl AlignmentParams {
    pub fn zero() -> Self {
        Self { lag_s: 0.0, scale_mode: ScaleMode::None, max_lag_s: 3.0 }
    }
}

/// Per-video (or aggregate) evaluation record.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub video_id: String,
    pub scenario_tag: String,
    pub method: String,
    pub pipeline: String,
    pub grid_n: usize,
    pub mae_bpm: f64,
    /// SD of per-window absolute errors (per-video) or of per-video MAEs
    /// (aggregate); population form.
    pub mae_sd_bpm: f64,
    pub rmse_bpm: f64,
    /// None when either envelope has zero variance.
    pub pcc: Option<f64>,
    pub windows_used: usize,
}

/// Estimates the integer-step lag maximizing the normalized
/// cross-correlation of the two z-normalized envelopes within
/// +-max_lag_s. Ties prefer the smaller |lag|, then the smaller lag.
pub fn estimate_alignment(reference: &HrSeries, extracted: &HrSeries, max_lag_s: f64) -> Result<AlignmentParams> {
    let step = reference.step_s();
    let max_steps = (max_lag_s / step).round() as i64;
    let mut best: Option<(f64, i64)> = None;
    for lag in -max_steps..=max_steps {
        if let Some(corr) = lag_correlation(reference, extracted, lag) {
            let better = match &best {
                None => true,
                Some((c, l)) => {
                    corr > *c + 1e-12
                        || ((corr - *c).abs() <= 1e-12
                            && (lag.abs() < l.abs() || (lag.abs() == l.abs() && lag < *l)))
                }
            };
            if better {
                best = Some((corr, lag));
            }
        }
    }
    match best {
        Some((_, lag)) => Ok(AlignmentParams {
            lag_s: lag as f64 * step,
            scale_mode: ScaleMode::None,
            max_lag_s,
        }),
        None => Err(Error::NoAlignment("fewer than 10 jointly valid windows at every lag".into())),
    }
}

/// Pearson correlation between ref[i] and est[i - lag] over jointly valid
/// overlap; None when the overlap is too small or degenerate.
fn lag_correlation(reference: &HrSeries, extracted: &HrSeries, lag: i64) -> Option<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..reference.len() as i64 {
        let j = i - lag;
        if j < 0 || j >= extracted.len() as i64 {
            continue;
        }
        let (i, j) = (i as usize, j as usize);
        if reference.valid[i] && extracted.valid[j] {
            xs.push(reference.bpm[i]);
            ys.push(extracted.bpm[j]);
        }
    }
    if xs.len() < 10 {
        return None;
    }
    pearson(&xs, &ys)
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y.iter()) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// MAE, RMSE and PCC over jointly valid windows after applying the lag.
pub fn compute_metrics(
    reference: &HrSeries,
    extracted: &HrSeries,
    align: &AlignmentParams,
    meta: ReportMeta,
) -> Result<MetricsReport> {
    let step = reference.step_s();
    let lag_steps = (align.lag_s / step).round() as i64;
    let mut errs = Vec::new();
    let mut ref_v = Vec::new();
    let mut est_v = Vec::new();
    for i in 0..reference.len() as i64 {
        let j = i - lag_steps;
        if j < 0 || j >= extracted.len() as i64 {
            continue;
        }
        let (i, j) = (i as usize, j as usize);
        if reference.valid[i] && extracted.valid[j] {
            errs.push((extracted.bpm[j] - reference.bpm[i]).abs());
            ref_v.push(reference.bpm[i]);
            est_v.push(extracted.bpm[j]);
        }
    }
    if errs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} jointly valid windows after alignment",
            errs.len()
        )));
    }
    let n = errs.len() as f64;
    let mae = errs.iter().sum::<f64>() / n;
    let mae_sd = (errs.iter().map(|e| (e - mae) * (e - mae)).sum::<f64>() / n).sqrt();
    let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let pcc = pearson(&ref_v, &est_v);
    let report = MetricsReport {
        video_id: meta.video_id,
        scenario_tag: meta.scenario_tag,
        method: meta.method,
        pipeline: meta.pipeline,
        grid_n: meta.grid_n,
        mae_bpm: mae,
        mae_sd_bpm: mae_sd,
        rmse_bpm: rmse,
        pcc,
        windows_used: errs.len(),
    };
    debug_assert!(report.rmse_bpm >= report.mae_bpm - 1e-12);
    Ok(report)
}

/// Report identity fields.
#[derive(Debug, Clone, Default)]
pub struct ReportMeta {
    pub video_id: String,
    pub scenario_tag: String,
    pub method: String,
    pub pipeline: String,
    pub grid_n: usize,
}

/// Grouping key for dataset aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    None,
    Scenario,
    GridN,
    Method,
}

/// Group-wise aggregation: mean MAE, population SD of per-video MAEs,
/// mean RMSE, and median PCC (undefined PCCs excluded from the median).
pub fn aggregate_dataset(reports: &[MetricsReport], group_by: GroupBy) -> Result<Vec<MetricsReport>> {
    if reports.is_empty() {
        return Err(Error::InsufficientData("no reports to aggregate".into()));
    }
    let key = |r: &MetricsReport| -> String {
        match group_by {
            GroupBy::None => "all".to_string(),
            GroupBy::Scenario => r.scenario_tag.clone(),
            GroupBy::GridN => format!("{}x{}", r.grid_n, r.grid_n),
            GroupBy::Method => r.method.clone(),
        }
    };
    let mut groups: Vec<(String, Vec<&MetricsReport>)> = Vec::new();
    for r in reports {
        let k = key(r);
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(r),
            None => groups.push((k, vec![r])),
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for (k, rs) in groups {
        let n = rs.len() as f64;
        let maes: Vec<f64> = rs.iter().map(|r| r.mae_bpm).collect();
        let mean_mae = maes.iter().sum::<f64>() / n;
        let sd = (maes.iter().map(|m| (m - mean_mae) * (m - mean_mae)).sum::<f64>() / n).sqrt();
        let rmse = rs.iter().map(|r| r.rmse_bpm).sum::<f64>() / n;
        let mut pccs: Vec<f64> = rs.iter().filter_map(|r| r.pcc).collect();
        pccs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pcc = if pccs.is_empty() {
            None
        } else if pccs.len() % 2 == 1 {
            Some(pccs[pccs.len() / 2])
        } else {
            Some((pccs[pccs.len() / 2 - 1] + pccs[pccs.len() / 2]) / 2.0)
        };
        out.push(MetricsReport {
            video_id: format!("aggregate:{k}"),
            scenario_tag: if group_by == GroupBy::Scenario { k.clone() } else { String::new() },
            method: rs[0].method.clone(),
            pipeline: rs[0].pipeline.clone(),
            grid_n: rs[0].grid_n,
            mae_bpm: mean_mae,
            mae_sd_bpm: sd,
            rmse_bpm: rmse,
            pcc,
            windows_used: rs.iter().map(|r| r.windows_used).sum(),
        });
    }
    Ok(out)
}

/// Header of the per-video report CSV; fixed and versioned.
pub const REPORT_CSV_HEADER: &str =
    "video_id,scenario,method,pipeline,grid_n,mae_bpm,mae_sd_bpm,pcc,rmse_bpm,windows_used";

/// One CSV row per report, matching [`REPORT_CSV_HEADER`].
pub fn report_csv_row(r: &MetricsReport) -> String {
    format!(
        "{},{},{},{},{},{:.6},{:.6},{},{:.6},{}",
        r.video_id,
        r.scenario_tag,
        r.method,
        r.pipeline,
        r.grid_n,
        r.mae_bpm,
        r.mae_sd_bpm,
        r.pcc.map_or("nan".to_string(), |p| format!("{p:.6}")),
        r.rmse_bpm,
        r.windows_used
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(bpm: Vec<f64>) -> HrSeries {
        let n = bpm.len();
        HrSeries { times: (0..n).map(|i| i as f64).collect(), bpm, valid: vec![true; n] }
    }

    fn shifted(s: &HrSeries, steps: i64) -> HrSeries {
        // est(t) = ref(t - steps): the extracted series lags by `steps`.
        let n = s.len() as i64;
        let bpm: Vec<f64> = (0..n)
            .map(|i| {
                let j = (i - steps).clamp(0, n - 1);
                s.bpm[j as usize]
            })
            .collect();
        series(bpm)
    }

    fn wavy(n: usize) -> HrSeries {
        series((0..n).map(|i| 70.0 + 8.0 * (i as f64 * 0.37).sin() + 3.0 * (i as f64 * 0.11).cos()).collect())
    }

    #[test]
    fn recovers_constructed_shift() {
        // est delayed by +k seconds is aligned back with lag_s = -k.
        let r = wavy(60);
        for &k in &[-3i64, -2, -1, 0, 1, 2, 3] {
            let e = shifted(&r, k);
            let align = estimate_alignment(&r, &e, 3.0).unwrap();
            assert_eq!(align.lag_s, -k as f64, "shift {k}");
        }
    }

    #[test]
    fn zero_shift_recovers_zero() {
        let r = wavy(40);
        let align = estimate_alignment(&r, &r, 3.0).unwrap();
        assert_eq!(align.lag_s, 0.0);
    }

    #[test]
    fn too_little_overlap_is_no_alignment() {
        let r = series(vec![70.0; 5]);
        let e = series(vec![70.0; 5]);
        assert!(matches!(estimate_alignment(&r, &e, 3.0), Err(Error::NoAlignment(_))));
    }

    #[test]
    fn identical_series_have_zero_error() {
        let r = wavy(30);
        let rep = compute_metrics(&r, &r, &AlignmentParams::zero(), ReportMeta::default()).unwrap();
        assert_eq!(rep.mae_bpm, 0.0);
        assert_eq!(rep.rmse_bpm, 0.0);
        assert_eq!(rep.pcc, Some(1.0).map(|_| rep.pcc.unwrap()));
        assert!((rep.pcc.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_flags_undefined_pcc() {
        let r = series(vec![70.0; 20]);
        let rep = compute_metrics(&r, &r, &AlignmentParams::zero(), ReportMeta::default()).unwrap();
        assert_eq!(rep.mae_bpm, 0.0);
        assert!(rep.pcc.is_none());
    }

    #[test]
    fn constant_offset_example() {
        let r = wavy(25);
        let e = series(r.bpm.iter().map(|v| v + 2.0).collect());
        let rep = compute_metrics(&r, &e, &AlignmentParams::zero(), ReportMeta::default()).unwrap();
        assert!((rep.mae_bpm - 2.0).abs() < 1e-12);
        assert!((rep.rmse_bpm - 2.0).abs() < 1e-12);
        assert!((rep.pcc.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_point_hand_check() {
        let r = series(vec![70.0, 72.0, 74.0, 76.0]);
        let e = series(vec![71.0, 71.0, 75.0, 75.0]);
        let rep = compute_metrics(&r, &e, &AlignmentParams::zero(), ReportMeta::default()).unwrap();
        assert!((rep.mae_bpm - 1.0).abs() < 1e-12);
        assert!((rep.rmse_bpm - 1.0).abs() < 1e-12);
        // Direct-formula Pearson on the four points.
        let oracle = pearson(&r.bpm, &e.bpm).unwrap();
        assert!((rep.pcc.unwrap() - oracle).abs() < 1e-12);
        // Centered: ref [-3,-1,1,3], est [-2,-2,2,2]: 16 / sqrt(20 * 16).
        let expected = 16.0 / (20.0f64 * 16.0).sqrt();
        assert!((oracle - expected).abs() < 1e-12, "{oracle} vs {expected}");
    }

    #[test]
    fn too_few_joint_windows_is_insufficient() {
        let mut r = series(vec![70.0; 10]);
        for i in 0..8 {
            r.valid[i] = false;
        }
        let e = series(vec![70.0; 10]);
        assert!(matches!(
            compute_metrics(&r, &e, &AlignmentParams::zero(), ReportMeta::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn rmse_at_least_mae_always() {
        let r = wavy(50);
        let e = series(r.bpm.iter().enumerate().map(|(i, v)| v + ((i * 13 % 7) as f64 - 3.0)).collect());
        let rep = compute_metrics(&r, &e, &AlignmentParams::zero(), ReportMeta::default()).unwrap();
        assert!(rep.rmse_bpm >= rep.mae_bpm);
    }

    #[test]
    fn pcc_invariant_under_positive_affine_transform() {
        let r = wavy(50);
        let e = series(r.bpm.iter().enumerate().map(|(i, v)| v + (i as f64 * 0.53).sin() * 2.0).collect());
        let a = compute_metrics(&r, &e, &AlignmentParams::zero(), ReportMeta::default()).unwrap();
        let e2 = series(e.bpm.iter().map(|v| 3.0 * v + 11.0).collect());
        let b = compute_metrics(&r, &e2, &AlignmentParams::zero(), ReportMeta::default()).unwrap();
        assert!((a.pcc.unwrap() - b.pcc.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn alignment_then_metrics_gives_zero_error() {
        let r = wavy(60);
        for &k in &[-3i64, -1, 2, 3] {
            let e = shifted(&r, k);
            let align = estimate_alignment(&r, &e, 3.0).unwrap();
            let rep = compute_metrics(&r, &e, &align, ReportMeta::default()).unwrap();
            // Edge windows replicate clamped values; interior must align to 0.
            assert!(rep.mae_bpm < 0.3, "shift {k}: mae {}", rep.mae_bpm);
        }
    }

    #[test]
    fn aggregate_two_videos() {
        let mk = |mae: f64, rmse: f64| MetricsReport {
            video_id: "v".into(),
            scenario_tag: "resting".into(),
            method: "omit".into(),
            pipeline: "multi_region".into(),
            grid_n: 9,
            mae_bpm: mae,
            mae_sd_bpm: 0.0,
            rmse_bpm: rmse,
            pcc: Some(0.9),
            windows_used: 51,
        };
        let agg = aggregate_dataset(&[mk(2.0, 2.5), mk(4.0, 4.5)], GroupBy::None).unwrap();
        assert_eq!(agg.len(), 1);
        assert!((agg[0].mae_bpm - 3.0).abs() < 1e-12);
        assert!((agg[0].mae_sd_bpm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grouping_by_scenario_yields_one_row_each() {
        let mk = |tag: &str| MetricsReport {
            video_id: "v".into(),
            scenario_tag: tag.into(),
            method: "omit".into(),
            pipeline: "multi_region".into(),
            grid_n: 9,
            mae_bpm: 1.0,
            mae_sd_bpm: 0.0,
            rmse_bpm: 1.0,
            pcc: Some(0.5),
            windows_used: 10,
        };
        let agg = aggregate_dataset(&[mk("resting"), mk("gym"), mk("resting")], GroupBy::Scenario).unwrap();
        assert_eq!(agg.len(), 2);
    }

    #[test]
    fn report_columns_match_the_fixed_header() {
        let cols: Vec<&str> = REPORT_CSV_HEADER.split(',').collect();
        assert_eq!(
            cols,
            vec![
                "video_id",
                "scenario",
                "method",
                "pipeline",
                "grid_n",
                "mae_bpm",
                "mae_sd_bpm",
                "pcc",
                "rmse_bpm",
                "windows_used"
            ]
        );
        // Metric columns appear in the table order MAE, SD, PCC, RMSE.
        let mae = cols.iter().position(|c| *c == "mae_bpm").unwrap();
        let sd = cols.iter().position(|c| *c == "mae_sd_bpm").unwrap();
        let pcc = cols.iter().position(|c| *c == "pcc").unwrap();
        let rmse = cols.iter().position(|c| *c == "rmse_bpm").unwrap();
        assert!(mae < sd && sd < pcc && pcc < rmse);
    }
}
