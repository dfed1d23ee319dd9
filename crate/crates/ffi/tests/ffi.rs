//! Exercises the C ABI from Rust: handle lifecycles, status codes, the
//! error channel, and agreement with the core library's own results.

use std::ffi::{c_char, CString};
use std::ptr;

use voltsim::fvm::FaultVariationMap;
use voltsim::profile;
use voltsim_ffi::*;

fn last_error() -> String {
    unsafe {
        let needed = voltsim_last_error(ptr::null_mut(), 0);
        let mut buf = vec![0u8; needed + 1];
        voltsim_last_error(buf.as_mut_ptr() as *mut c_char, buf.len());
        buf.truncate(needed);
        String::from_utf8(buf).unwrap()
    }
}

fn open_profile(name: &str) -> *mut VoltsimProfile {
    let cname = CString::new(name).unwrap();
    let mut handle = ptr::null_mut();
    let status = unsafe { voltsim_profile_new(cname.as_ptr(), &mut handle) };
    assert_eq!(status, VoltsimStatus::Ok, "{name}: {}", last_error());
    assert!(!handle.is_null());
    handle
}

#[test]
fn generated_header_covers_the_api() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/voltsim.h");
    let text = std::fs::read_to_string(header).expect("header is generated by the build script");
    for symbol in [
        "voltsim_profile_new",
        "voltsim_fvm_generate",
        "voltsim_fvm_realize_count",
        "voltsim_secded_decode",
        "voltsim_power_watts",
        "voltsim_last_error",
    ] {
        assert!(text.contains(symbol), "{symbol} missing from voltsim.h");
    }
    assert!(text.contains("VOLTSIM_STATUS_CRASH_REGION"));
}

#[test]
fn profile_lifecycle_and_unknown_name() {
    let p = open_profile("vc707");
    unsafe {
        assert_eq!(voltsim_profile_num_brams(p), 2060);
        assert_eq!(voltsim_profile_num_brams(ptr::null()), 0);

        let mut rate = 0.0;
        let status = voltsim_expected_rate(p, 540, 50.0, 1.0, &mut rate);
        assert_eq!(status, VoltsimStatus::Ok);
        let want = profile::vc707().expected_rate(540, 50.0, 1.0).unwrap();
        assert_eq!(rate, want);

        voltsim_profile_free(p);
    }

    let bogus = CString::new("bogus-board").unwrap();
    let mut handle = ptr::null_mut();
    let status = unsafe { voltsim_profile_new(bogus.as_ptr(), &mut handle) };
    assert_eq!(status, VoltsimStatus::InvalidArgument);
    assert!(handle.is_null());
    assert!(last_error().contains("bogus-board"), "error was: {}", last_error());
}

#[test]
fn error_message_truncates_but_reports_full_length() {
    let bogus = CString::new("x".repeat(64)).unwrap();
    let mut handle = ptr::null_mut();
    unsafe {
        voltsim_profile_new(bogus.as_ptr(), &mut handle);
        let mut small = [0u8; 8];
        let full = voltsim_last_error(small.as_mut_ptr() as *mut c_char, small.len());
        assert!(full > 8, "full message length should exceed the buffer");
        assert_eq!(small[7], 0, "copy must stay NUL-terminated");
        assert!(small[..7].iter().all(|&b| b != 0));
    }
}

#[test]
fn fvm_round_trip_matches_core() {
    let p = open_profile("vc707");
    let core_profile = profile::vc707();
    let core = FaultVariationMap::generate(&core_profile, 3, 1.0).unwrap();

    unsafe {
        let mut fvm = ptr::null_mut();
        assert_eq!(voltsim_fvm_generate(p, 3, 1.0, &mut fvm), VoltsimStatus::Ok);

        let mut cells = 0u64;
        assert_eq!(voltsim_fvm_cell_count(fvm, 540, &mut cells), VoltsimStatus::Ok);
        assert_eq!(cells, core.cells_at(540));

        let mut active = 0u64;
        let status = voltsim_fvm_realize_count(fvm, 560, 50.0, 42, &mut active);
        assert_eq!(status, VoltsimStatus::Ok);
        assert_eq!(active as usize, core.realize(560, 50.0, 42).unwrap().len());

        let status = voltsim_fvm_realize_count(fvm, 530, 50.0, 42, &mut active);
        assert_eq!(status, VoltsimStatus::CrashRegion);
        assert!(last_error().contains("530"));

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("map.json").to_str().unwrap()).unwrap();
        assert_eq!(voltsim_fvm_export(fvm, path.as_ptr()), VoltsimStatus::Ok);

        for with_profile in [true, false] {
            let handle = if with_profile { p as *const VoltsimProfile } else { ptr::null() };
            let mut imported = ptr::null_mut();
            let status = voltsim_fvm_import(path.as_ptr(), handle, &mut imported);
            assert_eq!(status, VoltsimStatus::Ok, "{}", last_error());
            let mut back = 0u64;
            voltsim_fvm_cell_count(imported, 540, &mut back);
            assert_eq!(back, cells);
            voltsim_fvm_free(imported);
        }

        let missing = CString::new(dir.path().join("absent.json").to_str().unwrap()).unwrap();
        let mut imported = ptr::null_mut();
        let status = voltsim_fvm_import(missing.as_ptr(), ptr::null(), &mut imported);
        assert_eq!(status, VoltsimStatus::Io);

        voltsim_fvm_free(fvm);
        voltsim_profile_free(p);
    }
}

#[test]
fn null_arguments_are_rejected_not_crashed() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(
            voltsim_profile_new(ptr::null(), &mut out),
            VoltsimStatus::NullArgument
        );
        let name = CString::new("vc707").unwrap();
        assert_eq!(
            voltsim_profile_new(name.as_ptr(), ptr::null_mut()),
            VoltsimStatus::NullArgument
        );
        let mut cells = 0u64;
        assert_eq!(
            voltsim_fvm_cell_count(ptr::null(), 540, &mut cells),
            VoltsimStatus::NullArgument
        );
        let mut watts = 0.0;
        assert_eq!(
            voltsim_power_watts(ptr::null(), 610, false, &mut watts),
            VoltsimStatus::NullArgument
        );
        assert!(!last_error().is_empty());
    }
}

#[test]
fn secded_covers_all_four_outcomes() {
    let word = 0x5a5a_1234_dead_beefu64;
    let parity = voltsim_secded_encode(word);
    unsafe {
        let mut data = 0u64;
        assert_eq!(voltsim_secded_decode(word, parity, &mut data), VoltsimDecode::Clean);
        assert_eq!(data, word);

        let status = voltsim_secded_decode(word ^ (1 << 17), parity, &mut data);
        assert_eq!(status, VoltsimDecode::Corrected);
        assert_eq!(data, word, "single data flip must be healed");

        let status = voltsim_secded_decode(word, parity ^ 1, &mut data);
        assert_eq!(status, VoltsimDecode::ParityCorrected);
        assert_eq!(data, word);

        let hit = word ^ (1 << 3) ^ (1 << 40);
        let status = voltsim_secded_decode(hit, parity, &mut data);
        assert_eq!(status, VoltsimDecode::DoubleDetected);
        assert_eq!(data, hit, "double errors pass the data through unchanged");

        assert_eq!(
            voltsim_secded_decode(word, parity, ptr::null_mut()),
            VoltsimDecode::Clean
        );
    }
}

#[test]
fn power_matches_calibration_points() {
    let p = open_profile("vc707");
    unsafe {
        for (mv, ecc, want) in [(610u32, false, 0.31f64), (540, false, 0.198), (540, true, 0.211)] {
            let mut watts = 0.0;
            assert_eq!(voltsim_power_watts(p, mv, ecc, &mut watts), VoltsimStatus::Ok);
            assert!((watts - want).abs() < 1e-9, "{mv}mV ecc={ecc}: {watts} vs {want}");
        }
        let mut watts = 0.0;
        assert_eq!(
            voltsim_power_watts(p, 530, false, &mut watts),
            VoltsimStatus::InvalidArgument,
            "530mV sits outside the calibrated range"
        );
        voltsim_profile_free(p);
    }
}
