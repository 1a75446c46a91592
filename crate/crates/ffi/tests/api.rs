use std::ffi::{CStr, CString};
use std::ptr;

use ctxprune_ffi::*;

const SOURCE: &str = "\
def parse_header(raw):
    fields = raw.split(',')
    name = fields[0]
    size = fields[1]
    return name, size

def render_table(rows):
    out = []
    for row in rows:
        out.append(str(row))
    return out
";

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn last_error() -> String {
    let p = ctxprune_last_error_message();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

#[test]
fn compress_round_trip() {
    unsafe {
        let mut c = ptr::null_mut();
        let cfg = cstr("[compression]\nbudget = 30\nfine_ratio = 1.0\n");
        assert_eq!(ctxprune_compressor_new(cfg.as_ptr(), &mut c), CtxpruneStatus::Ok);
        assert!(ctxprune_last_error_message().is_null());
        let (src, q) = (cstr(SOURCE), cstr("render_table rows row"));
        let mut r = ptr::null_mut();
        assert_eq!(
            ctxprune_compress(c, src.as_ptr(), q.as_ptr(), &mut r),
            CtxpruneStatus::Ok
        );
        let text = CStr::from_ptr(ctxprune_result_text(r)).to_str().unwrap();
        assert!(text.starts_with("# ... parse_header omitted\ndef render_table(rows):"));
        let meta: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(ctxprune_result_metadata_json(r)).to_str().unwrap()).unwrap();
        assert_eq!(meta["budget"], 30);
        assert_eq!(ctxprune_result_original_tokens(r), 58);
        assert!(ctxprune_result_retained_tokens(r) <= 30);
        let ratio = ctxprune_result_ratio(r);
        let expected = 58.0 / ctxprune_result_emitted_tokens(r) as f64;
        assert!((ratio - expected).abs() < 1e-12);
        ctxprune_result_free(r);

        assert_eq!(ctxprune_compressor_set_budget(c, 10_000), CtxpruneStatus::Ok);
        assert_eq!(
            ctxprune_compress(c, src.as_ptr(), q.as_ptr(), &mut r),
            CtxpruneStatus::Ok
        );
        assert_eq!(CStr::from_ptr(ctxprune_result_text(r)).to_str().unwrap(), SOURCE);
        assert_eq!(ctxprune_result_ratio(r), 1.0);
        assert_eq!(ctxprune_result_warning_count(r), 0);
        ctxprune_result_free(r);
        ctxprune_compressor_free(c);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(
            ctxprune_compressor_new(ptr::null(), ptr::null_mut()),
            CtxpruneStatus::NullArgument
        );
        let bad = cstr("[compression]\nfine_ratio = 2.0\n");
        assert_eq!(
            ctxprune_compressor_new(bad.as_ptr(), &mut c),
            CtxpruneStatus::ConfigInvalid
        );
        assert!(c.is_null());
        assert!(last_error().contains("fine ratio"));

        assert_eq!(ctxprune_compressor_new(ptr::null(), &mut c), CtxpruneStatus::Ok);
        assert_eq!(ctxprune_compressor_set_budget(c, 0), CtxpruneStatus::ConfigInvalid);
        let mut r = ptr::null_mut();
        let (empty, q) = (cstr(""), cstr("q"));
        assert_eq!(
            ctxprune_compress(c, empty.as_ptr(), q.as_ptr(), &mut r),
            CtxpruneStatus::InvalidInput
        );
        assert!(r.is_null());
        assert_eq!(
            ctxprune_compress(c, ptr::null(), q.as_ptr(), &mut r),
            CtxpruneStatus::NullArgument
        );
        let invalid = [0xffu8, 0xfe, 0];
        assert_eq!(
            ctxprune_compress(c, invalid.as_ptr().cast(), q.as_ptr(), &mut r),
            CtxpruneStatus::InvalidUtf8
        );
        ctxprune_compressor_free(c);
        ctxprune_compressor_free(ptr::null_mut());
        ctxprune_result_free(ptr::null_mut());
        assert!(ctxprune_result_text(ptr::null()).is_null());
        assert!(ctxprune_result_ratio(ptr::null()).is_nan());

        let http =
            cstr("[backend]\nkind = \"http\"\nendpoint = \"http://127.0.0.1:9/v1/completions\"\ntimeout_secs = 2\n");
        assert_eq!(ctxprune_compressor_new(http.as_ptr(), &mut c), CtxpruneStatus::Ok);
        let src = cstr(SOURCE);
        assert_eq!(
            ctxprune_compress(c, src.as_ptr(), q.as_ptr(), &mut r),
            CtxpruneStatus::BackendError
        );
        ctxprune_compressor_free(c);
    }
}

#[test]
fn metrics() {
    unsafe {
        let mut es = 0.0;
        let (a, b) = (cstr("abc"), cstr("abd"));
        assert_eq!(
            ctxprune_edit_similarity(a.as_ptr(), b.as_ptr(), &mut es),
            CtxpruneStatus::Ok
        );
        assert!((es - 66.667).abs() < 0.01);
        let mut em = -1;
        let (h, r) = (cstr("x = 1  \n"), cstr("x = 1"));
        assert_eq!(
            ctxprune_exact_match(h.as_ptr(), r.as_ptr(), &mut em),
            CtxpruneStatus::Ok
        );
        assert_eq!(em, 1);
        assert_eq!(
            ctxprune_exact_match(h.as_ptr(), r.as_ptr(), ptr::null_mut()),
            CtxpruneStatus::NullArgument
        );
        let v = CStr::from_ptr(ctxprune_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
