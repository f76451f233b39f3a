//! C ABI over `pcgt-core`.
//!
//! Every function returns a [`PcgtStatus`]; on failure a message is kept
//! per thread and read with [`pcgt_last_error_message`]. Clouds and
//! buffers are opaque handles released with their `_free` functions.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use pcgt_core::coding::codec::{decode_cloud, encode_cloud, ChannelSet, ModeSelection, QuantConfig, DEFAULT_M};
use pcgt_core::ply::{parse_ply, write_ply, PlyFormat};
use pcgt_core::transform::GraphParams;
use pcgt_core::{Error, PointCloud};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcgtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    CorruptBitstream = 4,
    GeometryMismatch = 5,
    Numerical = 6,
    Io = 7,
    Panic = 8,
}

/// Point positions plus named per-point attribute channels.
pub struct PcgtCloud(PointCloud);

/// Owned byte buffer.
pub struct PcgtBuffer(Vec<u8>);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PcgtEncodeOptions {
    /// Quantization step, at least 1.
    pub qp: u16,
    /// Kept dimensions; 0 selects the mode automatically.
    pub mode: u16,
    pub f: f64,
    pub t: f64,
    pub m: f64,
    /// Rate limit in bits per point for automatic selection; negative or
    /// NaN for none.
    pub rmax: f64,
    /// Nonzero codes Y, Cb and Cr instead of Y alone.
    pub ycbcr: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PcgtStatus {
    match e {
        Error::PlyHeader { .. } | Error::PlyData { .. } | Error::UnsupportedFormat(_) | Error::Truncated { .. } => {
            PcgtStatus::ParseError
        }
        Error::BadMagic | Error::UnsupportedVersion(_) | Error::BitstreamTruncated(_) | Error::CorruptBitstream(_) => {
            PcgtStatus::CorruptBitstream
        }
        Error::PointCountMismatch { .. } => PcgtStatus::GeometryMismatch,
        Error::NoConvergence { .. } => PcgtStatus::Numerical,
        Error::Io(_) | Error::Csv(_) => PcgtStatus::Io,
        _ => PcgtStatus::InvalidArgument,
    }
}

struct Fail(PcgtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PcgtStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PcgtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PcgtStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PcgtStatus::Panic
        }
    }
}

unsafe fn bytes<'a>(data: *const u8, len: usize, what: &str) -> Result<&'a [u8], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(data, len))
}

unsafe fn cloud_ref<'a>(cloud: *const PcgtCloud) -> Result<&'a PointCloud, Fail> {
    cloud.as_ref().map(|c| &c.0).ok_or_else(|| null("cloud"))
}

unsafe fn name_arg(name: *const c_char) -> Result<String, Fail> {
    if name.is_null() {
        return Err(null("channel name"));
    }
    CStr::from_ptr(name)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Fail(PcgtStatus::InvalidArgument, "channel name is not UTF-8".into()))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pcgt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn pcgt_status_string(status: PcgtStatus) -> *const c_char {
    let s: &'static CStr = match status {
        PcgtStatus::Ok => c"ok",
        PcgtStatus::NullPointer => c"null pointer",
        PcgtStatus::InvalidArgument => c"invalid argument",
        PcgtStatus::ParseError => c"malformed PLY input",
        PcgtStatus::CorruptBitstream => c"corrupt bitstream",
        PcgtStatus::GeometryMismatch => c"geometry does not match bitstream",
        PcgtStatus::Numerical => c"eigensolver did not converge",
        PcgtStatus::Io => c"I/O error",
        PcgtStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Creates a cloud from `count` positions laid out as `x0 y0 z0 x1 ...`.
///
/// # Safety
/// `xyz` must point to `3 * count` readable doubles (or be null when
/// `count` is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcgt_cloud_new(xyz: *const f64, count: usize, out: *mut *mut PcgtCloud) -> PcgtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let n = count
            .checked_mul(3)
            .ok_or_else(|| Fail(PcgtStatus::InvalidArgument, "count overflows".into()))?;
        let flat: &[f64] = if n == 0 {
            &[]
        } else if xyz.is_null() {
            return Err(null("xyz"));
        } else {
            slice::from_raw_parts(xyz, n)
        };
        let positions = flat.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
        put(out, PcgtCloud(PointCloud::new(positions)));
        Ok(())
    })
}

/// Parses an ASCII or binary little-endian PLY file held in memory.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcgt_cloud_from_ply(data: *const u8, len: usize, out: *mut *mut PcgtCloud) -> PcgtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cloud = parse_ply(bytes(data, len, "data")?)?;
        put(out, PcgtCloud(cloud));
        Ok(())
    })
}

/// Serializes a cloud as PLY; `ascii` nonzero selects the ASCII format.
///
/// # Safety
/// `cloud` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcgt_cloud_to_ply(
    cloud: *const PcgtCloud,
    ascii: u8,
    out: *mut *mut PcgtBuffer,
) -> PcgtStatus {
    guard(|| {
        let cloud = cloud_ref(cloud)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let format = if ascii != 0 {
            PlyFormat::Ascii
        } else {
            PlyFormat::BinaryLittleEndian
        };
        put(out, PcgtBuffer(write_ply(cloud, format)));
        Ok(())
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `cloud` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcgt_cloud_point_count(cloud: *const PcgtCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.point_count())
}

/// Adds or replaces a channel. Colors are `R`, `G`, `B`; coded channels
/// are `Y`, `Cb`, `Cr`.
///
/// # Safety
/// `cloud` must be a live handle, `name` a NUL-terminated string and
/// `values` must point to `count` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn pcgt_cloud_set_channel(
    cloud: *mut PcgtCloud,
    name: *const c_char,
    values: *const f64,
    count: usize,
) -> PcgtStatus {
    guard(|| {
        let cloud = cloud.as_mut().ok_or_else(|| null("cloud"))?;
        let name = name_arg(name)?;
        let values = if count == 0 {
            Vec::new()
        } else if values.is_null() {
            return Err(null("values"));
        } else {
            slice::from_raw_parts(values, count).to_vec()
        };
        cloud.0.set_channel(name, values)?;
        Ok(())
    })
}

/// Copies a channel into `out`, which must hold exactly the point count.
///
/// # Safety
/// `cloud` must be a live handle, `name` a NUL-terminated string and `out`
/// must point to `count` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pcgt_cloud_get_channel(
    cloud: *const PcgtCloud,
    name: *const c_char,
    out: *mut f64,
    count: usize,
) -> PcgtStatus {
    guard(|| {
        let cloud = cloud_ref(cloud)?;
        let name = name_arg(name)?;
        let values = cloud.require_channel(&name)?;
        if values.len() != count {
            return Err(Error::LengthMismatch {
                expected: values.len(),
                got: count,
            }
            .into());
        }
        if count > 0 {
            if out.is_null() {
                return Err(null("out"));
            }
            ptr::copy_nonoverlapping(values.as_ptr(), out, count);
        }
        Ok(())
    })
}

/// # Safety
/// `cloud` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pcgt_cloud_free(cloud: *mut PcgtCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Defaults: qp 8, automatic mode, f 0.3, t 0.6, m 0.85, no rate limit,
/// luma only.
#[no_mangle]
pub extern "C" fn pcgt_encode_options_default() -> PcgtEncodeOptions {
    PcgtEncodeOptions {
        qp: 8,
        mode: 0,
        f: GraphParams::DEFAULT_F,
        t: GraphParams::DEFAULT_T,
        m: DEFAULT_M,
        rmax: -1.0,
        ycbcr: 0,
    }
}

/// Encodes the attributes of `cloud`. `out_reconstruction` may be null;
/// otherwise it receives the attributes a decoder will produce.
///
/// # Safety
/// `cloud` must be a live handle, `options` readable and `out_bitstream`
/// writable; `out_reconstruction` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn pcgt_encode(
    cloud: *const PcgtCloud,
    options: *const PcgtEncodeOptions,
    out_bitstream: *mut *mut PcgtBuffer,
    out_reconstruction: *mut *mut PcgtCloud,
) -> PcgtStatus {
    guard(|| {
        let cloud = cloud_ref(cloud)?;
        let o = options.as_ref().ok_or_else(|| null("options"))?;
        if out_bitstream.is_null() {
            return Err(null("out_bitstream"));
        }
        let params = GraphParams::new(o.f, o.t)?;
        let mode = match (o.mode, o.rmax >= 0.0) {
            (0, true) => ModeSelection::Constrained { max_bpp: o.rmax },
            (0, false) => ModeSelection::Lagrangian,
            (x, _) => ModeSelection::Fixed(x),
        };
        let mut config = QuantConfig::new(o.qp, mode);
        config.m = o.m;
        let channels = if o.ycbcr != 0 {
            ChannelSet::YCbCr
        } else {
            ChannelSet::Luma
        };
        let result = encode_cloud(cloud, channels, &params, &config)?;
        put(out_bitstream, PcgtBuffer(result.encoded.bytes));
        if !out_reconstruction.is_null() {
            put(out_reconstruction, PcgtCloud(result.reconstruction));
        }
        Ok(())
    })
}

/// Decodes a bitstream onto `geometry`, which must list the encoder's
/// points in the same order.
///
/// # Safety
/// `geometry` must be a live handle, `data` must point to `len` readable
/// bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcgt_decode(
    geometry: *const PcgtCloud,
    data: *const u8,
    len: usize,
    out: *mut *mut PcgtCloud,
) -> PcgtStatus {
    guard(|| {
        let geometry = cloud_ref(geometry)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let decoded = decode_cloud(geometry, bytes(data, len, "data")?)?;
        put(out, PcgtCloud(decoded));
        Ok(())
    })
}

/// # Safety
/// `buffer` must be null or a live handle. The pointer is valid until the
/// buffer is freed.
#[no_mangle]
pub unsafe extern "C" fn pcgt_buffer_data(buffer: *const PcgtBuffer) -> *const u8 {
    buffer.as_ref().map_or(ptr::null(), |b| b.0.as_ptr())
}

/// # Safety
/// `buffer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcgt_buffer_len(buffer: *const PcgtBuffer) -> usize {
    buffer.as_ref().map_or(0, |b| b.0.len())
}

/// # Safety
/// `buffer` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pcgt_buffer_free(buffer: *mut PcgtBuffer) {
    if !buffer.is_null() {
        drop(Box::from_raw(buffer));
    }
}
