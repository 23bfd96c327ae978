//! Regenerates the canonical mesh data file. Output goes to stdout:
//!
//! cargo run -p rppg-core --example meshgen > crates/core/src/facegeom/canonical_mesh_v1.txt

fn main() {
    let mesh = rppg_core::facegeom::generate_canonical_mesh().expect("mesh generation");
    print!("{}", mesh.serialize());
}
