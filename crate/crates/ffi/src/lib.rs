//! C ABI over the panelsim device.
//!
//! A `PanelsimDevice` is an opaque handle owning one emulated instrument.
//! Commands go in and out as raw protocol frames, so a binding only needs the
//! byte layout it already speaks over TCP. Every function returns a
//! `PanelsimStatus`; none of them unwinds across the boundary.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use panelsim::device::{Device, DeviceConfig, VERSION};
use panelsim::netlist;
use panelsim::protocol;

/// Result codes. Negative values are errors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelsimStatus {
    Ok = 0,
    NullPointer = -1,
    InvalidUtf8 = -2,
    /// `*resp_len` holds the size that would have been needed.
    BufferTooSmall = -3,
    /// Request bytes are not exactly one valid request frame.
    BadFrame = -4,
    /// Patch has lint errors or does not build; the device is unchanged.
    PatchRejected = -5,
    Panic = -6,
}

/// Opaque device handle.
pub struct PanelsimDevice {
    device: Device,
}

const VERSION_C: &CStr = match CStr::from_bytes_with_nul(concat!("panelsim ", env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
    Ok(s) => s,
    Err(_) => panic!("version string contains a NUL"),
};

fn guard(f: impl FnOnce() -> PanelsimStatus) -> PanelsimStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(PanelsimStatus::Panic)
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, PanelsimStatus> {
    if p.is_null() {
        return Err(PanelsimStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| PanelsimStatus::InvalidUtf8)
}

/// NUL-terminated version string with static lifetime. Do not free.
#[no_mangle]
pub extern "C" fn panelsim_version() -> *const c_char {
    debug_assert_eq!(VERSION_C.to_str().ok(), Some(VERSION));
    VERSION_C.as_ptr()
}

/// New device with an empty patch board. Returns NULL only on internal
/// failure. Release with `panelsim_device_free`.
#[no_mangle]
pub extern "C" fn panelsim_device_new(seed: u64) -> *mut PanelsimDevice {
    catch_unwind(|| {
        let device = Device::new(&DeviceConfig {
            seed,
            ..DeviceConfig::default()
        });
        Box::into_raw(Box::new(PanelsimDevice { device }))
    })
    .unwrap_or(ptr::null_mut())
}

/// # Safety
/// `dev` must come from `panelsim_device_new` and not be used afterwards.
/// NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn panelsim_device_free(dev: *mut PanelsimDevice) {
    if !dev.is_null() {
        drop(Box::from_raw(dev));
    }
}

/// Loads patch text. On success or rejection `*diagnostics` (if non-NULL)
/// receives the number of diagnostics produced.
///
/// # Safety
/// `dev` must be a live handle; `text` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn panelsim_device_load_patch(
    dev: *mut PanelsimDevice,
    text: *const c_char,
    diagnostics: *mut u32,
) -> PanelsimStatus {
    guard(|| {
        let Some(dev) = dev.as_mut() else {
            return PanelsimStatus::NullPointer;
        };
        let text = match str_arg(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let (status, count) = match dev.device.load_patch(text) {
            Ok(warnings) => (PanelsimStatus::Ok, warnings.len()),
            Err(r) => (
                PanelsimStatus::PatchRejected,
                r.diagnostics.len() + usize::from(r.build_error.is_some()),
            ),
        };
        if !diagnostics.is_null() {
            *diagnostics = u32::try_from(count).unwrap_or(u32::MAX);
        }
        status
    })
}

/// Executes one request frame and writes the response frame into `resp`.
/// `*resp_len` receives the response length, or the required capacity when
/// `PANELSIM_STATUS_BUFFER_TOO_SMALL` is returned (the command has still
/// run). The protocol status of the command is inside the response frame.
///
/// # Safety
/// `dev` must be a live handle, `req` readable for `req_len` bytes, `resp`
/// writable for `resp_cap` bytes (may be NULL when `resp_cap` is 0).
#[no_mangle]
pub unsafe extern "C" fn panelsim_device_execute(
    dev: *mut PanelsimDevice,
    req: *const u8,
    req_len: usize,
    resp: *mut u8,
    resp_cap: usize,
    resp_len: *mut usize,
) -> PanelsimStatus {
    guard(|| {
        let Some(dev) = dev.as_mut() else {
            return PanelsimStatus::NullPointer;
        };
        if resp_len.is_null() || (req.is_null() && req_len > 0) || (resp.is_null() && resp_cap > 0) {
            return PanelsimStatus::NullPointer;
        }
        let input = if req_len == 0 { &[][..] } else { std::slice::from_raw_parts(req, req_len) };
        let frame = match protocol::decode(input) {
            Ok(f) => f,
            Err(_) => return PanelsimStatus::BadFrame,
        };
        let out = match dev.device.handle_frame(&frame).encode() {
            Ok(b) => b,
            // Responses are at most 4000 bytes of samples.
            Err(_) => return PanelsimStatus::Panic,
        };
        *resp_len = out.len();
        if out.len() > resp_cap {
            return PanelsimStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(out.as_ptr(), resp, out.len());
        PanelsimStatus::Ok
    })
}

/// Latched fault bits (see GET_STATUS), or 0 for a NULL handle.
///
/// # Safety
/// `dev` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn panelsim_device_faults(dev: *const PanelsimDevice) -> u8 {
    dev.as_ref().map_or(0, |d| d.device.faults().bits())
}

/// CRC-8 (poly 0x07, init 0) as used by the frame trailer.
///
/// # Safety
/// `data` must be readable for `len` bytes; may be NULL when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn panelsim_crc8(data: *const u8, len: usize) -> u8 {
    if data.is_null() || len == 0 {
        return protocol::crc8(&[]);
    }
    protocol::crc8(std::slice::from_raw_parts(data, len))
}

/// Lints patch text. `*out` receives the rendered diagnostics, one per line
/// with `file` as the prefix, to be released with `panelsim_string_free`.
/// `*errors` (if non-NULL) receives the number of error-severity entries.
///
/// # Safety
/// `text` and `file` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn panelsim_lint(
    text: *const c_char,
    file: *const c_char,
    out: *mut *mut c_char,
    errors: *mut u32,
) -> PanelsimStatus {
    guard(|| {
        if out.is_null() {
            return PanelsimStatus::NullPointer;
        }
        let (text, file) = match (str_arg(text), str_arg(file)) {
            (Ok(t), Ok(f)) => (t, f),
            (Err(e), _) | (_, Err(e)) => return e,
        };
        let diags = match netlist::parse(text) {
            Ok(n) => netlist::lint(&n),
            Err(d) => d,
        };
        if !errors.is_null() {
            *errors = diags.iter().filter(|d| d.is_error()).count() as u32;
        }
        // Rendered text cannot contain NUL: it comes from valid C strings.
        let rendered = CString::new(netlist::render_all(&diags, file)).unwrap_or_default();
        *out = rendered.into_raw();
        PanelsimStatus::Ok
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn panelsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
