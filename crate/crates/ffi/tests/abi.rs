use std::ffi::{CStr, CString};
use std::ptr;

use panelsim::protocol::{decode, Command, Frame, Reply, Status};
use panelsim_ffi::*;

struct Dev(*mut PanelsimDevice);

impl Dev {
    fn new(seed: u64) -> Dev {
        let p = panelsim_device_new(seed);
        assert!(!p.is_null());
        Dev(p)
    }

    fn load(&self, text: &str) -> (PanelsimStatus, u32) {
        let c = CString::new(text).unwrap();
        let mut n = u32::MAX;
        let s = unsafe { panelsim_device_load_patch(self.0, c.as_ptr(), &mut n) };
        (s, n)
    }

    fn exec_raw(&self, req: &[u8]) -> (PanelsimStatus, Vec<u8>) {
        let mut buf = vec![0u8; 8192];
        let mut len = 0usize;
        let s = unsafe { panelsim_device_execute(self.0, req.as_ptr(), req.len(), buf.as_mut_ptr(), buf.len(), &mut len) };
        buf.truncate(if s == PanelsimStatus::Ok { len } else { 0 });
        (s, buf)
    }

    fn exec(&self, cmd: &Command) -> (Status, Option<Reply>) {
        let (s, bytes) = self.exec_raw(&cmd.to_frame().encode().unwrap());
        assert_eq!(s, PanelsimStatus::Ok);
        let f = decode(&bytes).unwrap();
        let status = Status::from_byte(f.code).unwrap();
        (status, cmd.parse_reply(&f.payload))
    }
}

impl Drop for Dev {
    fn drop(&mut self) {
        unsafe { panelsim_device_free(self.0) }
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(panelsim_version()) };
    assert_eq!(v.to_str().unwrap(), panelsim::device::VERSION);
}

#[test]
fn commands_through_the_abi() {
    let dev = Dev::new(42);
    assert_eq!(dev.load("connect DAC ADC0\nconnect NONINV.OUT ADC1\n"), (PanelsimStatus::Ok, 1));
    assert_eq!(dev.exec(&Command::SetDac { code: 128 }).0, Status::Ok);
    assert_eq!(dev.exec(&Command::GetAdc { channel: 0 }), (Status::Ok, Some(Reply::Code(514))));
    assert_eq!(dev.exec(&Command::SetDac { code: 300 }).0, Status::BadArg);
    assert_eq!(
        dev.exec(&Command::SetPwg { millihertz: 300_000 }),
        (Status::Ok, Some(Reply::Millihertz(300_008)))
    );
    let (s, reply) = dev.exec(&Command::Capture { channel: 0, n: 2000, dt_us: 4 });
    assert_eq!(s, Status::Ok);
    assert!(matches!(reply, Some(Reply::Samples(v)) if v.len() == 2000 && v.iter().all(|&c| c == 514)));
}

#[test]
fn rejected_patch_leaves_device_alone() {
    let dev = Dev::new(1);
    assert_eq!(dev.load("connect DAC ADC0\n").0, PanelsimStatus::Ok);
    assert_eq!(dev.load("connect DOUT0 DOUT1\nconnect PWG BOGUS\n"), (PanelsimStatus::PatchRejected, 1));
    assert_eq!(dev.load("connect INV1.OUT INV1.IN\ninsert INV1.RIN 1k\ninsert INV1.RF 1k\n").0, PanelsimStatus::PatchRejected);
    dev.exec(&Command::SetDac { code: 255 });
    assert_eq!(dev.exec(&Command::GetAdc { channel: 0 }).1, Some(Reply::Code(1023)));
}

#[test]
fn faults_visible() {
    let dev = Dev::new(1);
    dev.load("resistor 40 V5 GND\n");
    assert_eq!(unsafe { panelsim_device_faults(dev.0) }, 0x01);
    assert_eq!(dev.exec(&Command::GetAdc { channel: 0 }).0, Status::FaultActive);
    assert_eq!(unsafe { panelsim_device_faults(ptr::null()) }, 0);
}

#[test]
fn buffer_and_frame_errors() {
    let dev = Dev::new(1);
    let req = Command::GetVersion.to_frame().encode().unwrap();
    let mut len = 0usize;
    let mut small = [0u8; 4];
    let s = unsafe { panelsim_device_execute(dev.0, req.as_ptr(), req.len(), small.as_mut_ptr(), small.len(), &mut len) };
    assert_eq!(s, PanelsimStatus::BufferTooSmall);
    assert_eq!(len, 5 + panelsim::device::VERSION.len());
    let s = unsafe { panelsim_device_execute(dev.0, req.as_ptr(), req.len(), ptr::null_mut(), 0, &mut len) };
    assert_eq!(s, PanelsimStatus::BufferTooSmall);

    let mut bad = req.clone();
    bad[4] ^= 1;
    assert_eq!(dev.exec_raw(&bad).0, PanelsimStatus::BadFrame);
    assert_eq!(dev.exec_raw(&[]).0, PanelsimStatus::BadFrame);
    let mut trailing = req.clone();
    trailing.push(0);
    assert_eq!(dev.exec_raw(&trailing).0, PanelsimStatus::BadFrame);
    // A response frame is not a request.
    let resp = Frame::response(Status::Ok, vec![]).encode().unwrap();
    let (s, bytes) = dev.exec_raw(&resp);
    assert_eq!(s, PanelsimStatus::Ok);
    assert_eq!(decode(&bytes).unwrap().code, Status::BadOpcode as u8);

    let s = unsafe { panelsim_device_execute(ptr::null_mut(), req.as_ptr(), req.len(), small.as_mut_ptr(), 4, &mut len) };
    assert_eq!(s, PanelsimStatus::NullPointer);
    let s = unsafe { panelsim_device_execute(dev.0, req.as_ptr(), req.len(), small.as_mut_ptr(), 4, ptr::null_mut()) };
    assert_eq!(s, PanelsimStatus::NullPointer);
}

#[test]
fn crc_matches_fixture() {
    let data = b"123456789";
    assert_eq!(unsafe { panelsim_crc8(data.as_ptr(), data.len()) }, 0xF4);
    assert_eq!(unsafe { panelsim_crc8(ptr::null(), 0) }, 0);
}

#[test]
fn lint_renders_diagnostics() {
    let text = CString::new("insert INV1.RIN 1k\ninsert INV1.RF 1k\nconnect INV1.OUT DIN0\nconnect INV1.OUT ADC0\n").unwrap();
    let file = CString::new("bench.patch").unwrap();
    let mut out = ptr::null_mut();
    let mut errors = 0;
    let s = unsafe { panelsim_lint(text.as_ptr(), file.as_ptr(), &mut out, &mut errors) };
    assert_eq!(s, PanelsimStatus::Ok);
    let rendered = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    unsafe { panelsim_string_free(out) };
    assert_eq!(errors, 1);
    let lines: Vec<&str> = rendered.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("bench.patch:3:1: error[R1]:"));
    assert!(lines[1].starts_with("bench.patch:4:1: warning[R3]:"));

    let bad_utf8 = [0xFFu8, 0];
    let s = unsafe { panelsim_lint(bad_utf8.as_ptr().cast(), file.as_ptr(), &mut out, ptr::null_mut()) };
    assert_eq!(s, PanelsimStatus::InvalidUtf8);
    let s = unsafe { panelsim_lint(ptr::null(), file.as_ptr(), &mut out, ptr::null_mut()) };
    assert_eq!(s, PanelsimStatus::NullPointer);
    unsafe { panelsim_string_free(ptr::null_mut()) };
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/panelsim.h")).unwrap();
    for sym in [
        "panelsim_version",
        "panelsim_device_new",
        "panelsim_device_free",
        "panelsim_device_load_patch",
        "panelsim_device_execute",
        "panelsim_device_faults",
        "panelsim_crc8",
        "panelsim_lint",
        "panelsim_string_free",
        "PANELSIM_STATUS_BUFFER_TOO_SMALL = -3",
        "typedef struct PanelsimDevice PanelsimDevice;",
    ] {
        assert!(header.contains(sym), "{sym}");
    }
}

/// Compiles and runs a C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    use std::path::PathBuf;
    use std::process::Command as Proc;

    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/abi-* -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libpanelsim_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("panelsim_smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Proc::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Proc::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), format!("{} ok\n", panelsim::device::VERSION));
}
