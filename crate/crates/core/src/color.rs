//! Full-range BT.709 RGB <-> YCbCr conversion on real-valued channels.

use crate::cloud::PointCloud;
use crate::error::Result;

pub const KR: f64 = 0.2126;
pub const KB: f64 = 0.0722;
pub const KG: f64 = 1.0 - KR - KB;
const CHROMA_OFFSET: f64 = 128.0;
const CB_SCALE: f64 = 2.0 * (1.0 - KB);
const CR_SCALE: f64 = 2.0 * (1.0 - KR);

pub fn rgb_to_ycbcr_pixel(r: f64, g: f64, b: f64) -> [f64; 3] {
    let y = KR * r + KG * g + KB * b;
    [
        y,
        (b - y) / CB_SCALE + CHROMA_OFFSET,
        (r - y) / CR_SCALE + CHROMA_OFFSET,
    ]
}

pub fn ycbcr_to_rgb_pixel(y: f64, cb: f64, cr: f64) -> [f64; 3] {
    let r = y + CR_SCALE * (cr - CHROMA_OFFSET);
    let b = y + CB_SCALE * (cb - CHROMA_OFFSET);
    let g = (y - KR * r - KB * b) / KG;
    [r, g, b]
}

fn convert(cloud: &PointCloud, from: [&str; 3], to: [&str; 3], f: fn(f64, f64, f64) -> [f64; 3]) -> Result<PointCloud> {
    let a = cloud.require_channel(from[0])?;
    let b = cloud.require_channel(from[1])?;
    let c = cloud.require_channel(from[2])?;
    let n = cloud.point_count();
    let mut out = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for i in 0..n {
        let px = f(a[i], b[i], c[i]);
        for (dst, v) in out.iter_mut().zip(px) {
            dst.push(v);
        }
    }
    let mut result = cloud.clone();
    for (name, values) in to.into_iter().zip(out) {
        result.set_channel(name, values)?;
    }
    Ok(result)
}

/// Adds `Y`, `Cb`, `Cr` channels computed from `R`, `G`, `B`.
pub fn rgb_to_ycbcr(cloud: &PointCloud) -> Result<PointCloud> {
    convert(cloud, ["R", "G", "B"], ["Y", "Cb", "Cr"], rgb_to_ycbcr_pixel)
}

/// Adds (or overwrites) `R`, `G`, `B` channels computed from `Y`, `Cb`, `Cr`.
pub fn ycbcr_to_rgb(cloud: &PointCloud) -> Result<PointCloud> {
    convert(cloud, ["Y", "Cb", "Cr"], ["R", "G", "B"], ycbcr_to_rgb_pixel)
}

/// Returns the luma channel, deriving it from RGB when the cloud has no `Y`.
pub fn luma(cloud: &PointCloud) -> Result<Vec<f64>> {
    if let Some(y) = cloud.channel("Y") {
        return Ok(y.to_vec());
    }
    Ok(rgb_to_ycbcr(cloud)?.channel("Y").unwrap().to_vec())
}
