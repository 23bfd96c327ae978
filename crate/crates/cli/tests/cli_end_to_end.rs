//! File-level integration: synth writes a dataset, evaluate produces
//! reports, plots renders deterministic images.

use rppg_cli::config::PipelineConfig;
use rppg_cli::evaluate::{load_descriptor, run_evaluate, EvaluateOptions};
use rppg_cli::plots::run_plots;
use rppg_cli::synthcmd::{run_synth, SynthOptions};
use rppg_core::rppg::MethodId;

#[test]
fn synth_evaluate_plots_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("data");
    let run_dir = dir.path().join("run");

    let opts = SynthOptions { duration_s: 20.0, count: 2, ..Default::default() };
    run_synth(&data_dir, &opts, 3).unwrap();
    assert!(data_dir.join("dataset.toml").exists());
    assert!(data_dir.join("synth01").join("meta").exists());
    assert!(data_dir.join("synth01_landmarks.csv").exists());
    assert!(data_dir.join("synth01_reference.csv").exists());

    let descriptor = load_descriptor(&data_dir.join("dataset.toml")).unwrap();
    assert_eq!(descriptor.videos.len(), 2);

    let cfg = PipelineConfig::default();
    let eval_opts = EvaluateOptions {
        methods: vec![MethodId::Omit, MethodId::Chrom],
        grid_sweep: false,
        jobs: 2,
        out_dir: run_dir.clone(),
    };
    let summary = run_evaluate(&descriptor, &cfg, &eval_opts).unwrap();
    // 2 videos x 2 methods = 4 rows; 2 aggregate rows (one per method).
    assert_eq!(summary.reports.len(), 4);
    assert_eq!(summary.aggregates.len(), 2);
    assert!(summary.exclusions.is_empty());
    for r in &summary.reports {
        assert!(r.mae_bpm < 5.0, "synthetic MAE {:.2} for {}", r.mae_bpm, r.video_id);
    }
    assert!(run_dir.join("reports.csv").exists());
    assert!(run_dir.join("aggregates.csv").exists());
    assert!(run_dir.join("summary.json").exists());

    // Reports are deterministic: rerun into another directory.
    let run_dir2 = dir.path().join("run2");
    let eval_opts2 = EvaluateOptions { out_dir: run_dir2.clone(), ..eval_opts };
    run_evaluate(&descriptor, &cfg, &eval_opts2).unwrap();
    assert_eq!(
        std::fs::read(run_dir.join("reports.csv")).unwrap(),
        std::fs::read(run_dir2.join("reports.csv")).unwrap()
    );

    // Plots: one overlay per (video, method) plus one box plot.
    let written = run_plots(&run_dir, false).unwrap();
    assert_eq!(written.len(), 5, "{written:?}");
    let log_written = run_plots(&run_dir, true).unwrap();
    assert!(log_written.iter().any(|p| p.ends_with("mae_box_log.png")));

    // Re-rendering produces identical bytes.
    let first = std::fs::read(&written[0]).unwrap();
    run_plots(&run_dir, false).unwrap();
    assert_eq!(first, std::fs::read(&written[0]).unwrap());
}

#[test]
fn missing_reference_is_excluded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("data");
    run_synth(&data_dir, &SynthOptions { duration_s: 15.0, count: 2, ..Default::default() }, 9).unwrap();

    // Corrupt one video's reference after descriptor validation would
    // pass: rewrite the file with garbage so loading fails.
    std::fs::write(data_dir.join("synth02_reference.csv"), "not,a,number,row\nx,y\n").unwrap();

    let descriptor = load_descriptor(&data_dir.join("dataset.toml")).unwrap();
    let cfg = PipelineConfig::default();
    let out_dir = dir.path().join("run");
    let summary = run_evaluate(
        &descriptor,
        &cfg,
        &EvaluateOptions { methods: vec![MethodId::Green], grid_sweep: false, jobs: 1, out_dir },
    )
    .unwrap();
    assert_eq!(summary.reports.len(), 1);
    assert_eq!(summary.exclusions.len(), 1);
    assert!(summary.exclusions[0].contains("synth02"));
}

#[test]
fn grid_sweep_emits_one_aggregate_per_grid() {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("data");
    run_synth(&data_dir, &SynthOptions { duration_s: 15.0, count: 1, ..Default::default() }, 4).unwrap();
    let descriptor = load_descriptor(&data_dir.join("dataset.toml")).unwrap();
    let cfg = PipelineConfig::default();
    let out_dir = dir.path().join("run");
    let summary = run_evaluate(
        &descriptor,
        &cfg,
        &EvaluateOptions { methods: vec![MethodId::Chrom], grid_sweep: true, jobs: 2, out_dir },
    )
    .unwrap();
    assert_eq!(summary.reports.len(), 6);
    let mut labels: Vec<String> = summary
        .aggregates
        .iter()
        .map(|a| a.video_id.trim_start_matches("aggregate:").to_string())
        .collect();
    labels.sort();
    assert_eq!(labels, vec!["10x10", "11x11", "6x6", "7x7", "8x8", "9x9"]);
}
