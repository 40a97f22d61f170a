use tracegap_core::pipoly::{bundled_table, VolumeTable};
use tracegap_core::volfun::{closed_volume, phi_s, v_pop_type, v_simple, v_simple_via_phi, PopForm};
use tracegap_core::FillingSignature;

fn table_from_disk() -> VolumeTable {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/volumes.json")).unwrap();
    VolumeTable::from_json(&text).unwrap()
}

#[test]
fn shipped_table_is_canonical() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/volumes.json")).unwrap();
    let t = VolumeTable::from_json(&text).unwrap();
    assert_eq!(t.to_json() + "\n", text);
    assert!(t.lints().is_empty());
}

#[test]
fn known_low_genus_values() {
    let t = table_from_disk();
    // V_{1,1}(x) = (x² + 4π²)/48 and V_{0,4}(0) = 2π²
    let pi2 = std::f64::consts::PI.powi(2);
    let v11 = t.entry(1, 1).unwrap().poly.eval(&[3.0]).unwrap();
    assert!((v11 - (9.0 + 4.0 * pi2) / 48.0).abs() < 1e-14);
    let v04 = t.entry(0, 4).unwrap().poly.eval(&[0.0; 4]).unwrap();
    assert!((v04 - 2.0 * pi2).abs() < 1e-13);
}

#[test]
fn simple_volume_agrees_through_an_ingested_table() {
    let t = table_from_disk();
    for g in 2..=5 {
        let phi = phi_s(&t, FillingSignature::new(0, 2), g).unwrap();
        for ell in [0.1, 1.0, 3.3, 9.9] {
            let a = v_simple(&t, g, ell).unwrap();
            let b = v_simple_via_phi(&phi, ell).unwrap();
            assert!(((a - b) / a).abs() < 1e-12, "g={g} ell={ell}");
            assert_eq!(a, v_simple(bundled_table(), g, ell).unwrap());
        }
    }
}

#[test]
fn simple_volume_over_length_increases() {
    // every coefficient of V_{g,n} is positive, so V_g^s(ℓ)/ℓ increases in ℓ
    let t = bundled_table();
    for g in 2..=5 {
        assert!(closed_volume(t, g).unwrap() > 0.0);
        let mut prev = 0.0;
        for i in 1..=40 {
            let ell = 0.25 * i as f64;
            let q = v_simple(t, g, ell).unwrap() / ell;
            assert!(q > prev, "g={g} ell={ell}");
            prev = q;
        }
    }
}

#[test]
fn figure_eight_quadrature_refines_within_its_estimate() {
    let t = bundled_table();
    let phi = phi_s(t, FillingSignature::new(0, 3), 3).unwrap();
    for ell in [4.5, 6.0, 8.0] {
        let coarse = v_pop_type(&phi, ell, 1, PopForm::Primary, 1e-6).unwrap();
        let fine = v_pop_type(&phi, ell, 1, PopForm::Primary, 1e-11).unwrap();
        assert!(
            (coarse.value - fine.value).abs() <= coarse.err.max(1e-9 * fine.value.abs()),
            "ell={ell}: {coarse:?} vs {fine:?}"
        );
    }
}

#[test]
fn symmetry_factor_only_rescales() {
    let t = bundled_table();
    let phi = phi_s(t, FillingSignature::new(0, 3), 2).unwrap();
    let one = v_pop_type(&phi, 5.0, 1, PopForm::Primary, 1e-10).unwrap();
    let four = v_pop_type(&phi, 5.0, 4, PopForm::Primary, 1e-10).unwrap();
    assert!((one.value / four.value - 4.0).abs() < 1e-12);
}
