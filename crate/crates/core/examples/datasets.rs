//! Synthetic generators, CSV round trip, and seed/validation splitting.
//!
//! ```bash
//! cargo run --example datasets
//! ```

use graphmetric::data::{gen_blobs, gen_two_moons, load_csv, save_csv, split_labels, Blobs, Role, TwoMoons};

fn main() -> graphmetric::Result<()> {
    let moons = gen_two_moons(
        &TwoMoons {
            n: 200,
            noise_sd: 0.1,
            nuisance_dims: 3,
            nuisance_sd: 2.0,
        },
        7,
    )?;
    println!("two moons: n = {}, d = {}, class counts {:?}", moons.len(), moons.dim(), moons.class_counts());

    let blobs = gen_blobs(
        &Blobs {
            n_per_class: 30,
            classes: 3,
            dim: 5,
            informative_dims: 3,
            separation: 4.0,
            noise_sd: 1.0,
        },
        7,
    )?;
    println!("blobs:     n = {}, d = {}, classes {:?}", blobs.len(), blobs.dim(), blobs.class_names);

    let dir = std::env::temp_dir().join("graphmetric_datasets_example");
    std::fs::create_dir_all(&dir).map_err(|e| graphmetric::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let path = dir.join("moons.csv");
    save_csv(&moons, &path)?;
    let back = load_csv(&path)?;
    println!("csv round trip exact: {}  ({})", back == moons, path.display());

    let split = split_labels(&moons, 10, 0.5, 1)?;
    println!(
        "split: {} seeds, {} validation, {} test",
        split.indices_with_role(Role::Seed).len(),
        split.indices_with_role(Role::Validation).len(),
        split.indices_with_role(Role::TestUnlabeled).len()
    );
    Ok(())
}
