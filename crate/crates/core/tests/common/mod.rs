#![allow(dead_code)]

use rare_mace::{make_pulse, ArrayGeometry, ImageGrid, Layer, LayeredMedium, ScanConfig};

/// Single-layer concrete slab, source and receivers on the face.
pub fn homogeneous_scan(nx: usize, nz: usize, pitch: f64, origin: f64, receivers: Vec<[f64; 2]>, tilt: f64, noise: f64) -> ScanConfig {
    let medium = LayeredMedium::homogeneous(0.5, 2620.0, 1970.0).unwrap();
    let geometry = ArrayGeometry::new([0.0, 0.0], tilt, 0.03, receivers).unwrap();
    let grid = ImageGrid::new(nx, nz, pitch, origin).unwrap();
    let pulse = make_pulse(58e3, 1.0, 2e6).unwrap();
    ScanConfig::new(medium, geometry, grid, pulse, 600, noise).unwrap()
}

/// Water / Plexiglas / concrete stack used by the specimen.
pub fn layered_scan(nx: usize, nz: usize, pitch: f64, origin: f64, noise: f64) -> ScanConfig {
    let medium = LayeredMedium::new(vec![
        Layer::new(0.055, 1500.0, 997.0),
        Layer::new(0.005, 2820.0, 1180.0),
        Layer::new(0.4, 2620.0, 1970.0),
    ])
    .unwrap();
    let receivers = vec![[-0.04, 0.0], [-0.02, 0.0], [0.0, 0.0], [0.02, 0.0], [0.04, 0.0]];
    let geometry = ArrayGeometry::new([0.0, 0.0], 5.0, 0.03, receivers).unwrap();
    let grid = ImageGrid::new(nx, nz, pitch, origin).unwrap();
    let pulse = make_pulse(58e3, 1.0, 2e6).unwrap();
    ScanConfig::new(medium, geometry, grid, pulse, 700, noise).unwrap()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ring-correlated Gaussian noise on an `n × n` field: white noise passed
/// through `kernel` (valid part only), scaled to per-pixel std `sigma`.
pub fn ring_noise(kernel: &rare_mace::agents::RingKernel, n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let s = kernel.size();
    let big = n + s - 1;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let white: Vec<f64> = (0..big * big).map(|_| StandardNormal.sample(&mut rng)).collect();
    let kv = kernel.values();
    let scale = sigma / kv.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = vec![0.0; n * n];
    for z in 0..n {
        for x in 0..n {
            let mut acc = 0.0;
            for b in 0..s {
                let row = &white[(z + b) * big + x..(z + b) * big + x + s];
                let krow = &kv[b * s..(b + 1) * s];
                acc += row.iter().zip(krow).map(|(w, k)| w * k).sum::<f64>();
            }
            out[z * n + x] = acc * scale;
        }
    }
    out
}

pub fn variance(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64
}
