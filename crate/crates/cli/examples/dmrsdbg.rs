use rppg_cli::config::PipelineConfig;
use rppg_cli::pipeline::{run_extract, VideoData};
use rppg_core::io::{synth_generate, MotionModel, SyntheticSpec};
use rppg_core::rppg::MethodId;

fn main() {
    let perfusion: Vec<usize> = vec![20,21,22,23,24,29,30,31,32,33,47,48,49,50,51,56,57,58,59,60];
    let spec = SyntheticSpec {
        duration_s: 30.0,
        fs: 30.0,
        hr_trajectory: vec![(0.0, 72.0)],
        amplitude: 0.02,
        injected_regions: perfusion.clone(),
        noise_sigma: 2.0,
        motion: MotionModel::TranslationJitter { vx: 2.0, vy: 0.0, sigma: 1.0 },
        frame_size: (340, 260),
        ..Default::default()
    };
    let clip = synth_generate(&spec, 1).unwrap();
    let data = VideoData { frames: clip.frames, fs: spec.fs, landmarks: clip.landmarks };
    let mut cfg = PipelineConfig::default();
    cfg.method = MethodId::Chrom;
    let out = run_extract(&data, &cfg).unwrap();
    println!("hr: {:?}", out.hr.bpm.iter().map(|b| (b*10.0).round()/10.0).collect::<Vec<_>>());
    for target in [0.0, 10.0] {
        let mut sel = Vec::new();
        let mut inj_stats = Vec::new();
        let mut junk_stats = Vec::new();
        for d in out.diagnostics.iter().filter(|d| d.window_start_s == target) {
            if d.selected { sel.push(d.region_id); }
            let rec = (d.region_id, ((d.kfd.unwrap_or(f64::NAN))*100.0).round()/100.0, (d.dfa_alpha*100.0).round()/100.0, (d.psd_energy*1000.0).round()/1000.0, (d.snr_db*10.0).round()/10.0);
            if perfusion.contains(&d.region_id) { inj_stats.push(rec); } else if d.selected { junk_stats.push(rec); }
        }
        let inj_sel = sel.iter().filter(|id| perfusion.contains(id)).count();
        println!("\nwindow {target}: selected {}: {:?}", sel.len(), sel);
        println!("  injected selected: {inj_sel}/20");
        println!("  injected (id,kfd,dfa,energy,snr): {:?}", &inj_stats[..5.min(inj_stats.len())]);
        println!("  selected junk: {:?}", &junk_stats[..8.min(junk_stats.len())]);
    }
}
