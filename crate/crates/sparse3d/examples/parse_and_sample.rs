//! Parse an OFF mesh, normalize it, and draw area-weighted surface samples.
//!
//! ```bash
//! cargo run -p sparse3d --example parse_and_sample
//! ```

use sparse3d::geom::mesh::{normalize_mesh, parse_off};
use sparse3d::geom::sample::sample_surface;
use sparse3d::seed::rng_from;

// A tetrahedron in plain OFF. ModelNet files sometimes glue the counts to
// the header ("OFF4 4 0"); the parser accepts both spellings.
const TETRA_OFF: &str = "\
OFF
4 4 0
1 1 1
1 -1 -1
-1 1 -1
-1 -1 1
3 0 1 2
3 0 3 1
3 0 2 3
3 1 3 2
";

fn main() -> sparse3d::Result<()> {
    let mesh = parse_off(std::io::Cursor::new(TETRA_OFF))?;
    println!(
        "parsed {} vertices, {} faces",
        mesh.vertices.len(),
        mesh.faces.len()
    );

    let mesh = normalize_mesh(&mesh)?;
    let max_norm = mesh.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
    println!("normalized: farthest vertex at {max_norm:.6} (target 0.5)");

    let cloud = sample_surface(&mesh, 16, &mut rng_from(7))?;
    println!("\n16 area-weighted surface samples (position | unit normal):");
    for (p, n) in cloud.points.iter().zip(&cloud.normals) {
        println!(
            "  ({:+.3}, {:+.3}, {:+.3}) | ({:+.3}, {:+.3}, {:+.3})",
            p.x, p.y, p.z, n.x, n.y, n.z
        );
    }
    Ok(())
}
