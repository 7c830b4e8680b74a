use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use beacon::datagen::{generate_station_dataset, preset};
use beacon::datastore::write_dataset_csv;
use beacon::domain::FeatureSet;
use beacon::models::{fit, Family, HyperParams};
use beacon_ffi::*;

fn last_error() -> String {
    let p = beacon_last_error();
    assert!(!p.is_null(), "an error message is set");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn short_station() -> beacon::domain::StationDataset {
    let mut c = preset("Lizard", 3).unwrap();
    c.start_date = chrono::NaiveDate::from_ymd_opt(2021, 3, 1).unwrap();
    c.end_date = chrono::NaiveDate::from_ymd_opt(2021, 5, 31).unwrap();
    generate_station_dataset(&c).unwrap()
}

fn model_json(ds: &beacon::domain::StationDataset) -> (String, beacon::models::FittedModel) {
    let x = FeatureSet::default().matrix(&ds.observations);
    let m = fit(x.view(), &ds.labels(), &HyperParams::default_for(Family::DecisionTree), 1).unwrap();
    (serde_json::to_string(&m).unwrap(), m)
}

unsafe fn load_model(json: &str) -> *mut BeaconModel {
    let text = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(beacon_model_from_json(text.as_ptr(), &mut m), BeaconStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn predictions_match_the_library() {
    let ds = short_station();
    let (json, model) = model_json(&ds);
    let x = FeatureSet::default().matrix(&ds.observations);
    let flat: Vec<f64> = x.iter().copied().collect();
    unsafe {
        let m = load_model(&json);
        assert_eq!(beacon_model_n_features(m), x.ncols());
        let mut proba = vec![0.0; x.nrows()];
        let mut labels = vec![9u8; x.nrows()];
        assert_eq!(beacon_model_predict_proba(m, flat.as_ptr(), x.nrows(), x.ncols(), proba.as_mut_ptr()), BeaconStatus::Ok);
        assert_eq!(beacon_model_predict(m, flat.as_ptr(), x.nrows(), x.ncols(), labels.as_mut_ptr()), BeaconStatus::Ok);
        assert_eq!(proba, model.predict_proba(x.view()).unwrap());
        assert_eq!(labels, model.predict(x.view()).unwrap());

        let mut out = ptr::null_mut();
        assert_eq!(beacon_model_to_json(m, &mut out), BeaconStatus::Ok);
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), beacon::datastore::to_json_string(&model).unwrap());
        beacon_string_free(out);
        beacon_model_free(m);
    }
}

#[test]
fn wrong_width_is_invalid_input() {
    let ds = short_station();
    let (json, _) = model_json(&ds);
    unsafe {
        let m = load_model(&json);
        let x = [0.0; 6];
        let mut out = [0.0; 2];
        let s = beacon_model_predict_proba(m, x.as_ptr(), 2, 3, out.as_mut_ptr());
        assert_eq!(s, BeaconStatus::InvalidInput);
        assert!(!last_error().is_empty());
        beacon_model_free(m);
    }
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(beacon_model_load(ptr::null(), &mut m), BeaconStatus::NullPointer);
        assert!(last_error().contains("path"));
        assert_eq!(beacon_model_predict(ptr::null(), ptr::null(), 0, 0, ptr::null_mut()), BeaconStatus::NullPointer);
        assert_eq!(beacon_solar_elevation(50.0, 0.0, 0.0, ptr::null_mut()), BeaconStatus::NullPointer);
        assert_eq!(beacon_model_n_features(ptr::null()), 0);
        assert_eq!(beacon_dataset_len(ptr::null()), 0);
        beacon_model_free(ptr::null_mut());
        beacon_dataset_free(ptr::null_mut());
        beacon_string_free(ptr::null_mut());
    }
}

#[test]
fn bad_json_and_missing_files() {
    unsafe {
        let mut m = ptr::null_mut();
        let junk = CString::new("{not json").unwrap();
        assert_eq!(beacon_model_from_json(junk.as_ptr(), &mut m), BeaconStatus::Schema);
        assert!(m.is_null());
        let missing = CString::new("/nonexistent/model.json").unwrap();
        assert_eq!(beacon_model_load(missing.as_ptr(), &mut m), BeaconStatus::Io);
        assert!(last_error().contains("/nonexistent/model.json"));

        let mut e = 0.0;
        assert_eq!(beacon_solar_elevation(50.0, 0.0, 0.0, &mut e), BeaconStatus::Ok);
        assert!(beacon_last_error().is_null(), "success clears the error");
    }
}

#[test]
fn invalid_utf8_path() {
    let bytes = [0xffu8, 0xfe, 0];
    let mut m = ptr::null_mut();
    let s = unsafe { beacon_model_load(bytes.as_ptr().cast(), &mut m) };
    assert_eq!(s, BeaconStatus::InvalidUtf8);
}

#[test]
fn solar_elevation_matches_core() {
    let t = 1_624_276_800.0; // 2021-06-21T12:00:00Z
    let mut e = f64::NAN;
    unsafe {
        assert_eq!(beacon_solar_elevation(50.0, -5.0, t, &mut e), BeaconStatus::Ok);
        assert_eq!(beacon_solar_elevation(91.0, 0.0, t, &mut e), BeaconStatus::InvalidInput);
    }
    let mut e2 = f64::NAN;
    unsafe { beacon_solar_elevation(50.0, -5.0, t, &mut e2) };
    assert_eq!(e2, beacon::solar::elevation_at(50.0, -5.0, t));
}

#[test]
fn dataset_and_degradation_report() {
    let ds = short_station();
    let (json, _) = model_json(&ds);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lizard.csv");
    write_dataset_csv(&ds, &path).unwrap();
    unsafe {
        let m = load_model(&json);
        let c_path = CString::new(path.to_str().unwrap()).unwrap();
        let mut d = ptr::null_mut();
        assert_eq!(beacon_dataset_load(c_path.as_ptr(), &mut d), BeaconStatus::Ok);
        assert_eq!(beacon_dataset_len(d), ds.len());

        let levels = [0u32, 10, 20];
        let mut out = ptr::null_mut();
        let s = beacon_degradation_json(m, d, levels.as_ptr(), levels.len(), 5.0, false, &mut out);
        assert_eq!(s, BeaconStatus::Ok, "{}", if s == BeaconStatus::Ok { String::new() } else { last_error() });
        let report: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        assert_eq!(report["levels"].as_array().unwrap().len(), 3);
        assert_eq!(report["levels"][0]["delta_pp"]["accuracy"], 0.0);
        beacon_string_free(out);

        let bad = [5u32, 1];
        let mut out = ptr::null_mut();
        assert_eq!(beacon_degradation_json(m, d, bad.as_ptr(), 2, 5.0, false, &mut out), BeaconStatus::InvalidInput);
        assert!(out.is_null());

        beacon_dataset_free(d);
        beacon_model_free(m);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(beacon_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/beacon.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "beacon_last_error",
        "beacon_model_from_json",
        "beacon_model_predict_proba",
        "beacon_dataset_load",
        "beacon_degradation_json",
        "BEACON_STATUS_NULL_POINTER",
        "typedef struct BeaconModel BeaconModel",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        match Command::new(compiler).args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang]).arg(&header).status() {
            Ok(status) => assert!(status.success(), "{compiler} rejects the header"),
            Err(_) => eprintln!("{compiler} not found; skipping compile check"),
        }
    }
}
