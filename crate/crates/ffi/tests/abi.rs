use std::ffi::{CStr, CString};
use std::ptr;

use wallx_ffi::*;

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let v = CStr::from_ptr(s).to_str().unwrap().to_owned();
    wallx_string_free(s);
    v
}

#[test]
fn pair_and_dt_round_trip() {
    unsafe {
        let mut eng = ptr::null_mut();
        assert_eq!(
            wallx_engine_new(-1, -1, -1, ptr::null(), &mut eng),
            WallxStatus::Ok
        );
        let mut s = ptr::null_mut();
        assert_eq!(
            wallx_pair(eng, WallxMode::Behrend, 1, 2, &mut s),
            WallxStatus::Ok
        );
        assert_eq!(take(s), "-6");
        assert_eq!(
            wallx_pair(eng, WallxMode::Euler, 1, 2, &mut s),
            WallxStatus::Ok
        );
        assert_eq!(take(s), "6");
        let mut src = WallxSource::User;
        assert_eq!(wallx_dt(eng, 0, 2, 2, &mut s, &mut src), WallxStatus::Ok);
        assert_eq!((take(s).as_str(), src), ("-21/4", WallxSource::Rankzero));
        assert_eq!(
            wallx_dt(eng, 3, 0, 0, &mut s, &mut src),
            WallxStatus::NotAvailable
        );
        assert_eq!(
            wallx_dt(eng, 0, 1, 0, &mut s, &mut src),
            WallxStatus::InvalidArgument
        );
        assert_eq!(
            wallx_dt(eng, 0, 0, 0, &mut s, &mut src),
            WallxStatus::InvalidArgument
        );
        wallx_engine_free(eng);
    }
}

#[test]
fn user_table_and_errors() {
    unsafe {
        let json = CString::new(r#"[{"r": 3, "c": 0, "m2": 0, "value": "1/9"}]"#).unwrap();
        let mut eng = ptr::null_mut();
        assert_eq!(
            wallx_engine_new(-1, -1, -1, json.as_ptr(), &mut eng),
            WallxStatus::Ok
        );
        let (mut s, mut src) = (ptr::null_mut(), WallxSource::Builtin);
        assert_eq!(wallx_dt(eng, 3, 0, 0, &mut s, &mut src), WallxStatus::Ok);
        assert_eq!((take(s).as_str(), src), ("1/9", WallxSource::User));
        assert_eq!(
            wallx_pair(ptr::null(), WallxMode::Behrend, 1, 1, &mut s),
            WallxStatus::NullPointer
        );
        wallx_engine_free(eng);
        wallx_engine_free(ptr::null_mut());

        let bad = CString::new("not json").unwrap();
        assert_eq!(
            wallx_engine_new(-1, -1, -1, bad.as_ptr(), &mut eng),
            WallxStatus::InvalidArgument
        );
        let msg = CStr::from_ptr(wallx_status_message(WallxStatus::NotAvailable));
        assert_eq!(msg.to_str().unwrap(), "DT value not available");
    }
}

#[test]
fn header_is_valid_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::fs::read_to_string(format!("{dir}/include/wallx.h")).unwrap();
    for name in [
        "wallx_engine_new",
        "wallx_engine_free",
        "wallx_pair",
        "wallx_dt",
        "wallx_string_free",
        "WALLX_STATUS_NOT_AVAILABLE",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let src = std::env::temp_dir().join("wallx_header_check.c");
    std::fs::write(
        &src,
        "#include \"wallx.h\"\nint main(void) { return WALLX_STATUS_OK; }\n",
    )
    .unwrap();
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-I", &format!("{dir}/include")])
        .arg(&src)
        .status()
    else {
        return; // no C compiler available
    };
    assert!(status.success());
}
