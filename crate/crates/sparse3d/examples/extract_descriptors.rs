//! Build a fixed-count Type-C descriptor set from a sparse cloud and round
//! it through the SPD1 cache format.
//!
//! ```bash
//! cargo run -p sparse3d --example extract_descriptors
//! ```

use sparse3d::descriptor::cache::{read_spd1, write_spd1};
use sparse3d::descriptor::{build_descriptor_set, DescriptorType};
use sparse3d::geom::synth::{synth_shape, SynthKind};
use sparse3d::seed::rng_from;

fn main() -> sparse3d::Result<()> {
    // 16 points on a torus; C(16,3) = 560 unique triples.
    let cloud = synth_shape(SynthKind::Torus, 16, &mut rng_from(0))?;

    // Oversampled to 4096 rows: each unique triple appears 7 times plus 176
    // sampled extras (4096 = 7 * 560 + 176).
    let set = build_descriptor_set(
        &cloud,
        DescriptorType::TypeC,
        4096,
        true,
        false,
        &mut rng_from(1),
    )?;
    println!(
        "{} rows x {} features, scale normalized: {}",
        set.n_rows, set.width, set.scale_normalized
    );
    println!("first row (lengths are in units of the set's d_max):");
    for (i, v) in set.row(0).iter().enumerate() {
        let name = match i {
            0 | 4 | 8 => "side",
            12..=14 => "centroid dist",
            15..=17 => "interior angle",
            _ => "normal angle",
        };
        println!("  [{i:>2}] {v:+.6}  ({name})");
    }

    let mut bytes = Vec::new();
    write_spd1(&set, &mut bytes)?;
    let back = read_spd1(&mut bytes.as_slice())?;
    println!(
        "\nSPD1 cache: {} bytes, read back {} x {} ({})",
        bytes.len(),
        back.n_rows,
        back.width,
        back.kind.as_str()
    );
    Ok(())
}
