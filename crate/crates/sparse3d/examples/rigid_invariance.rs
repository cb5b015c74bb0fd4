//! Show that descriptor sets do not move when the object does.
//!
//! The same combination seed is used before and after a random rigid
//! motion, so rows correspond one-to-one and the worst entry-wise
//! deviation is pure floating-point noise.
//!
//! ```bash
//! cargo run -p sparse3d --example rigid_invariance
//! ```

use nalgebra::Vector3;
use sparse3d::descriptor::{build_descriptor_set, DescriptorType};
use sparse3d::geom::cloud::apply_rigid;
use sparse3d::geom::rotation::{random_rotation, RotationMode};
use sparse3d::geom::synth::{synth_shape, SynthKind};
use sparse3d::seed::rng_from;

fn main() -> sparse3d::Result<()> {
    let cloud = synth_shape(SynthKind::Torus, 16, &mut rng_from(3))?;
    let mut rng = rng_from(4);
    let rot = random_rotation(RotationMode::So3, &mut rng);
    let t = Vector3::new(2.0, -5.0, 0.7);
    let moved = apply_rigid(&cloud, &rot, &t);
    println!(
        "applied a random SO(3) rotation plus translation ({}, {}, {})\n",
        t.x, t.y, t.z
    );

    for kind in [
        DescriptorType::TypeA,
        DescriptorType::TypeB,
        DescriptorType::TypeC,
    ] {
        let before = build_descriptor_set(&cloud, kind, 512, false, false, &mut rng_from(5))?;
        let after = build_descriptor_set(&moved, kind, 512, false, false, &mut rng_from(5))?;
        let worst = before
            .data
            .iter()
            .zip(&after.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "Type-{:<3} 512 rows: max |before - after| = {worst:.3e}",
            kind.as_str()
        );
    }

    println!("\nwith scale normalization, uniform rescaling is absorbed too:");
    let scaled = cloud.scaled(1e3);
    let before = build_descriptor_set(
        &cloud,
        DescriptorType::TypeC,
        512,
        true,
        false,
        &mut rng_from(6),
    )?;
    let after = build_descriptor_set(
        &scaled,
        DescriptorType::TypeC,
        512,
        true,
        false,
        &mut rng_from(6),
    )?;
    let worst = before
        .data
        .iter()
        .zip(&after.data)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("Type-C under x1000 scaling: max deviation = {worst:.3e}");
    Ok(())
}
