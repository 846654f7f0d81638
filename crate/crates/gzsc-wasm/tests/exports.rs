use gzsc_wasm::{patterns_value, sphere_value, wigner_sweep_value};

#[test]
fn wigner_sweep_tracks_prediction() {
    let v = wigner_sweep_value(std::f64::consts::PI / 3.0, 0.5, 0.5, 20, 60).unwrap();
    let rows = v["records"].as_array().unwrap();
    assert_eq!(rows.len(), 41);
    let last = rows.last().unwrap();
    assert!((last["scaled"].as_f64().unwrap() - last["predicted"].as_f64().unwrap()).abs() < 0.05);
    assert!(wigner_sweep_value(1.0, 0.5, 0.5, 20, 21).is_err());
}

#[test]
fn sphere_points_lie_on_both_circles() {
    let v = sphere_value("rotation:1", 0.5, 0.3).unwrap();
    assert_eq!(v["count"], 2);
    // fixed circle has constant height 1 - 2w
    for p in v["points"].as_array().unwrap() {
        assert!((p["xyz"][2].as_f64().unwrap() - 0.4).abs() < 1e-8);
    }
    assert_eq!(sphere_value("rotation:0.3", 0.1, 0.9).unwrap()["count"], 0);
    assert!(sphere_value("bogus", 0.5, 0.5).is_err());
}

#[test]
fn patterns_listing() {
    let v = patterns_value("2,1,0", 3).unwrap();
    assert_eq!(v["count"], 8);
    assert_eq!(v["weyl"], "8");
    assert_eq!(v["patterns"].as_array().unwrap().len(), 3);
    assert!(patterns_value("0,1", 3).is_err());
}
