#![allow(dead_code)]

use pcgt_core::PointCloud;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Voxelized sphere shell and ground plane, like a scanned object on a
/// floor. Colors are piecewise smooth: a few regions split by planes, each
/// with its own gradient, plus mild noise. Values are 8-bit integers.
pub fn surface_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = rng(seed);
    let scale = (n as f64).sqrt() * 0.9;
    let center = [scale, scale, scale];
    let mut positions = Vec::with_capacity(n);
    for i in 0..n {
        let p = if i % 4 == 3 {
            [rng.gen_range(0.0..2.0 * scale), rng.gen_range(0.0..2.0 * scale), 0.0]
        } else {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).sqrt();
            [
                center[0] + 0.8 * scale * r * phi.cos(),
                center[1] + 0.8 * scale * r * phi.sin(),
                center[2] + 0.8 * scale * z,
            ]
        };
        positions.push(p.map(f64::round));
    }

    let split = [
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ];
    let mut channel = |k: usize| -> Vec<f64> {
        let base: [f64; 4] = std::array::from_fn(|_| rng.gen_range(40.0..210.0));
        let grad: [[f64; 3]; 4] =
            std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-0.6..0.6) / scale * 40.0));
        positions
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
                let s = d[0] * split[0] + d[1] * split[1] + d[2] * split[2];
                let region = usize::from(s > 0.0) + 2 * usize::from(p[2] == 0.0);
                let g = grad[region];
                let noise = (((i * 2654435761 + k * 97) % 1000) as f64 / 1000.0 - 0.5) * 4.0;
                (base[region] + g[0] * d[0] + g[1] * d[1] + g[2] * d[2] + noise)
                    .round()
                    .clamp(0.0, 255.0)
            })
            .collect()
    };
    let (r, g, b) = (channel(0), channel(1), channel(2));
    PointCloud::new(positions)
        .with_channel("R", r)
        .unwrap()
        .with_channel("G", g)
        .unwrap()
        .with_channel("B", b)
        .unwrap()
}

/// Uniform random voxel positions in a `side`³ cube.
pub fn random_positions(rng: &mut ChaCha8Rng, n: usize, side: u32) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| std::array::from_fn(|_| rng.gen_range(0..side) as f64))
        .collect()
}

/// Exactly `n` points on a fully occupied voxel surface: a sphere shell on
/// a floor, like a voxelized scan. Luma is piecewise linear over three
/// regions (two halves of the sphere split by a random plane, and the
/// floor) and rounded to 8 bits, with no added noise.
pub fn piecewise_smooth_surface(n: usize, seed: u64) -> PointCloud {
    let mut rng = rng(seed);
    let r = (n as f64 / (4.0 * std::f64::consts::PI)).sqrt() * 0.95;
    let c = r.ceil() as i64 + 2;
    let mut positions = Vec::with_capacity(n);
    'shell: for x in -c..=c {
        for y in -c..=c {
            for z in -c..=c {
                let d = ((x * x + y * y + z * z) as f64).sqrt();
                if (d - r).abs() < 0.5 {
                    positions.push([(x + c) as f64, (y + c) as f64, (z + c + 1) as f64]);
                    if positions.len() == n {
                        break 'shell;
                    }
                }
            }
        }
    }
    let side = 2 * c + 1;
    let mut k = 0i64;
    while positions.len() < n {
        positions.push([(k % side) as f64, ((k / side) % side) as f64, 0.0]);
        k += 1;
    }

    let split: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let base: [f64; 3] = std::array::from_fn(|_| rng.gen_range(60.0..200.0));
    let grad: [[f64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-0.8..0.8)));
    let center = c as f64;
    let y = positions
        .iter()
        .map(|p| {
            let d = [p[0] - center, p[1] - center, p[2] - center - 1.0];
            let region = if p[2] == 0.0 {
                2
            } else {
                usize::from(d[0] * split[0] + d[1] * split[1] + d[2] * split[2] > 0.0)
            };
            let g = grad[region];
            (base[region] + g[0] * d[0] + g[1] * d[1] + g[2] * d[2])
                .round()
                .clamp(0.0, 255.0)
        })
        .collect();
    PointCloud::new(positions).with_channel("Y", y).unwrap()
}
