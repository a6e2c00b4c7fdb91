//! Regenerates the bundled fixture files in `crates/core/fixtures/`.

use std::fs;
use std::path::Path;

use psskit::approx::{SemialgSet, SetDescription};
use psskit::fixtures;
use psskit::io::write_points;

fn write_set(dir: &Path, name: &str, desc: &SetDescription) {
    let mut text = serde_json::to_string_pretty(desc).expect("json");
    text.push('\n');
    fs::write(dir.join(name), text).expect("write fixture");
}

fn full(k: &SemialgSet) -> SetDescription {
    SetDescription::from(k)
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    fs::create_dir_all(&dir).expect("fixture dir");
    write_set(&dir, "example6_1.json", &full(&fixtures::example_6_1()));
    write_set(&dir, "oneD.json", &full(&fixtures::one_d()));
    write_set(&dir, "disk.json", &full(&fixtures::unit_disk()));
    let mut bare = full(&fixtures::unit_disk());
    bare.bbox = None;
    write_set(&dir, "unit-disk.json", &bare);
    write_set(&dir, "pid.json", &full(&fixtures::pid()));
    let pts = fixtures::gaussian_mixture_points(100, fixtures::GAUSSIAN_SEED);
    let f = fs::File::create(dir.join("gaussian-points.csv")).expect("csv");
    write_points(f, &pts).expect("write points");
    println!("fixtures written to {}", dir.display());
}
