//! Motion-robustness oracle: mesh normalization must stabilize region
//! traces on a synthetically moving face.

use rppg_core::facegeom::{normalize_sequence, CanonicalMesh, CANONICAL_SIZE};
use rppg_core::io::{synth_generate, MotionModel, SyntheticSpec};
use rppg_core::regions::{extract_traces, grid_partition};

fn var(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

#[test]
fn normalization_reduces_region_variance_on_a_moving_face() {
    let spec = SyntheticSpec {
        duration_s: 20.0,
        noise_sigma: 1.0,
        amplitude: 0.001,
        injected_regions: vec![],
        motion: MotionModel::Translation { vx: 2.0, vy: 0.0 },
        frame_size: (300, 260),
        ..Default::default()
    };
    let clip = synth_generate(&spec, 11).unwrap();
    let mesh = CanonicalMesh::builtin();
    let stack = normalize_sequence(&clip.frames, &clip.landmarks, &mesh, spec.fs).unwrap();
    assert!(stack.validity.iter().all(|v| *v));

    let boxes = grid_partition(CANONICAL_SIZE, CANONICAL_SIZE, 9).unwrap();
    let norm_traces = extract_traces(&stack, &boxes).unwrap();

    // Unnormalized: the same canonical grid anchored at the first frame's
    // face position, held fixed while the face slides. The generator
    // places landmarks at canonical coordinates plus an integer offset.
    let lm0 = clip.landmarks[0].as_ref().unwrap();
    let ox = (lm0.points[0].0 - rppg_core::facegeom::CANONICAL_68[0].0).round() as u32;
    let oy = (lm0.points[0].1 - rppg_core::facegeom::CANONICAL_68[0].1).round() as u32;
    let crop_boxes: Vec<rppg_core::regions::RegionBox> = boxes
        .iter()
        .map(|b| rppg_core::regions::RegionBox {
            id: b.id,
            x0: b.x0 + ox,
            y0: b.y0 + oy,
            x1: b.x1 + ox,
            y1: b.y1 + oy,
        })
        .collect();
    let fixed_stack = rppg_core::facegeom::NormalizedFaceStack {
        frames: clip.frames.clone(),
        fs: spec.fs,
        validity: vec![true; clip.frames.len()],
    };
    let crop_traces = extract_traces(&fixed_stack, &crop_boxes).unwrap();

    // Compare green-channel variance over face-interior regions (rows 2-6
    // of the canonical grid are inside the face for every column 2-6).
    let mut reductions = Vec::new();
    for row in 2..7 {
        for col in 2..7 {
            let id = row * 9 + col;
            let nv = var(&norm_traces[id].g);
            let cv = var(&crop_traces[id].g);
            if cv > 1e-6 {
                reductions.push(cv / nv.max(1e-9));
            }
        }
    }
    let mean_reduction = reductions.iter().sum::<f64>() / reductions.len() as f64;
    assert!(
        mean_reduction >= 5.0,
        "variance reduction only {mean_reduction:.2}x over {} regions",
        reductions.len()
    );
}
