mod common;

use common::{data_dir, load, random_bv, RANDOM_BV_SEED};

#[test]
fn random_datum_matches_its_seed() {
    let generated = random_bv(RANDOM_BV_SEED);
    let path = data_dir().join("random_bv8.json");
    if std::env::var_os("FLOCKTRACK_WRITE_DATA").is_some() {
        std::fs::write(&path, serde_json::to_string(&generated).unwrap() + "\n").unwrap();
    }
    assert_eq!(load("random_bv8.json"), generated);
}

#[test]
fn canonical_files_load() {
    for (name, cells, mass) in [
        ("two_shock.json", 2, 1.0),
        ("shock_rarefaction.json", 2, 1.5),
        ("flocking.json", 2, 1.0),
        ("stationary.json", 1, 1.0),
    ] {
        let d = load(name);
        assert_eq!(d.cells.len(), cells, "{name}");
        assert!((d.mass() - mass).abs() < 1e-15, "{name}");
    }
    let d = load("random_bv8.json");
    assert_eq!(d.cells.len(), 8);
    assert!(d.cells.iter().all(|c| (0.8..=1.25).contains(&c.rho) && c.v.abs() <= 0.15));
}
