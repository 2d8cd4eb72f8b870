mod common;

use common::{homogeneous_scan, rel_err};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rare_mace::agents::{prior_energy, QggmrfParams, QggmrfShape};
use rare_mace::baselines::{saft_reconstruct, umbir_reconstruct, SaftConfig};
use rare_mace::forward::{simulate_measurements, DirectArrivalCoeffs, SparseColumns, SystemModel};
use rare_mace::mace::MaceConfig;
use rare_mace::{Image, ImageGrid, MeasurementSet, ScanConfig};

fn scatterer_scan() -> ScanConfig {
    let receivers = (-4..=4).map(|i| [i as f64 * 0.015, 0.0]).collect();
    homogeneous_scan(32, 32, 0.003, 0.05, receivers, 0.0, 0.0)
}

fn argmax_abs(img: &Image) -> (usize, usize) {
    let j = (0..img.values.len()).max_by(|a, b| img.values[*a].abs().total_cmp(&img.values[*b].abs())).unwrap();
    img.grid.coords(j)
}

#[test]
fn saft_of_zero_data_is_zero() {
    let scan = scatterer_scan();
    let y = MeasurementSet::zeros(scan.m, scan.k(), scan.pulse.sample_rate());
    let img = saft_reconstruct(&y, &scan, &SaftConfig::default()).unwrap();
    assert!(img.values.iter().all(|v| *v == 0.0));
}

#[test]
fn saft_locates_a_single_scatterer() {
    let scan = scatterer_scan();
    for (ix, iz) in [(16, 12), (10, 20), (22, 8), (5, 28)] {
        let mut x = Image::zeros(scan.grid);
        x.set(ix, iz, 1.0);
        let y = simulate_measurements(&scan, &x, &DirectArrivalCoeffs::zeros(scan.k()), 0).unwrap();
        let img = saft_reconstruct(&y, &scan, &SaftConfig::default()).unwrap();
        let (px, pz) = argmax_abs(&img);
        assert!(px.abs_diff(ix) <= 1 && pz.abs_diff(iz) <= 1, "({ix},{iz}) found at ({px},{pz})");

        // the envelope only smooths along depth; its column peak stays within
        // half a moving-average window of the scatterer
        let env = saft_reconstruct(&y, &scan, &SaftConfig { envelope_detect: true, ..Default::default() }).unwrap();
        let col = env.column(ix);
        let peak = (0..col.len()).max_by(|a, b| col[*a].total_cmp(&col[*b])).unwrap();
        let half_window = (scan.imaging_speed() * scan.pulse.envelope_width() / 2.0 / scan.grid.pitch()).round() as usize / 2;
        assert!(peak.abs_diff(iz) <= half_window, "envelope peak of column {ix} at row {peak}");
    }
}

#[test]
fn saft_is_linear_without_envelope() {
    let scan = scatterer_scan();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = scan.m * scan.k();
    let y1 = MeasurementSet::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect(), scan.m, scan.k(), 2e6).unwrap();
    let y2 = MeasurementSet::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect(), scan.m, scan.k(), 2e6).unwrap();
    let cfg = SaftConfig::default();
    let combo = MeasurementSet::new(y1.y.iter().zip(&y2.y).map(|(a, b)| 2.5 * a - 0.5 * b).collect(), scan.m, scan.k(), 2e6)
        .unwrap();
    let s1 = saft_reconstruct(&y1, &scan, &cfg).unwrap();
    let s2 = saft_reconstruct(&y2, &scan, &cfg).unwrap();
    let sc = saft_reconstruct(&combo, &scan, &cfg).unwrap();
    let expected: Vec<f64> = s1.values.iter().zip(&s2.values).map(|(a, b)| 2.5 * a - 0.5 * b).collect();
    assert!(rel_err(&sc.values, &expected) < 1e-12);
}

#[test]
fn saft_envelope_is_non_negative() {
    let scan = scatterer_scan();
    let mut x = Image::zeros(scan.grid);
    x.set(16, 16, -1.0);
    let y = simulate_measurements(&scan, &x, &DirectArrivalCoeffs::zeros(scan.k()), 0).unwrap();
    let img = saft_reconstruct(&y, &scan, &SaftConfig { envelope_detect: true, ..Default::default() }).unwrap();
    assert!(img.values.iter().all(|v| *v >= 0.0));
}

#[test]
fn saft_rejects_bad_inputs() {
    let scan = scatterer_scan();
    let y = MeasurementSet::zeros(scan.m, scan.k(), 2e6);
    assert!(saft_reconstruct(&y, &scan, &SaftConfig { aperture_limit: 0.0, ..Default::default() }).is_err());
    assert!(saft_reconstruct(&y, &scan, &SaftConfig { aperture_limit: 91.0, ..Default::default() }).is_err());
    let short = MeasurementSet::zeros(scan.m - 1, scan.k(), 2e6);
    assert!(saft_reconstruct(&short, &scan, &SaftConfig::default()).is_err());
}

#[test]
fn narrow_aperture_drops_oblique_receivers() {
    let scan = scatterer_scan();
    let mut x = Image::zeros(scan.grid);
    x.set(16, 4, 1.0);
    let y = simulate_measurements(&scan, &x, &DirectArrivalCoeffs::zeros(scan.k()), 0).unwrap();
    let wide = saft_reconstruct(&y, &scan, &SaftConfig { aperture_limit: 90.0, ..Default::default() }).unwrap();
    let narrow = saft_reconstruct(&y, &scan, &SaftConfig { aperture_limit: 5.0, ..Default::default() }).unwrap();
    assert!(narrow.get(16, 4).abs() < wide.get(16, 4).abs());
}

struct Toy {
    model: SystemModel,
    a: DMatrix<f64>,
    d: DMatrix<f64>,
    y: MeasurementSet,
    grid: ImageGrid,
}

/// Random dense `rows × n` system on a 5 × (n/5) grid with a 2-column D.
fn toy(rows: usize, n: usize, sigma: f64, y: Option<Vec<f64>>, seed: u64) -> Toy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(rows, n, |_, _| rng.random_range(-1.0..1.0));
    let d = DMatrix::from_fn(rows, 2, |i, j| if i % 2 == j { 1.0 } else { 0.0 });
    let cols = |m: &DMatrix<f64>| (0..m.ncols()).map(|j| m.column(j).iter().cloned().collect()).collect::<Vec<Vec<f64>>>();
    let model = SystemModel::new(
        SparseColumns::from_dense_columns(rows, &cols(&a)),
        SparseColumns::from_dense_columns(rows, &cols(&d)),
        sigma,
        rows / 2,
        2,
    )
    .unwrap();
    let y = y.unwrap_or_else(|| (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect());
    let y = MeasurementSet::new(y, rows / 2, 2, 1.0).unwrap();
    Toy { model, a, d, y, grid: ImageGrid::new(5, n / 5, 1.0, 0.0).unwrap() }
}

/// Hessian of a quadratic prior recovered from energy evaluations alone.
fn prior_hessian(grid: ImageGrid, params: &QggmrfParams) -> DMatrix<f64> {
    let n = grid.len();
    let energy = |pairs: &[usize]| {
        let mut v = vec![0.0; n];
        for &j in pairs {
            v[j] += 1.0;
        }
        prior_energy(&Image::new(grid, v).unwrap(), params).unwrap()
    };
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * energy(&[i])
        } else {
            energy(&[i, j]) - energy(&[i]) - energy(&[j])
        }
    })
}

#[test]
fn umbir_quadratic_matches_normal_equations() {
    let sigma = 0.8;
    let t = toy(20, 10, sigma, None, 11);
    let shape = QggmrfShape { p: 2.0, q: 2.0, ..Default::default() };
    let params = QggmrfParams::uniform(shape, &t.grid, 0.5).unwrap();
    let cfg = MaceConfig { beta: 0.5, icd_sweeps_per_call: 20, max_iters: 3000, tol: 1e-12, ..Default::default() };
    let (x, report) = umbir_reconstruct(&t.y, &t.model, &params, &cfg, t.grid).unwrap();
    assert!(report.converged, "residual {:?}", report.residual_history.last());

    // μ = 1: the equilibrium minimizes data term + prior jointly over (z, g)
    let (n, nd) = (t.a.ncols(), t.d.ncols());
    let b = DMatrix::from_fn(t.a.nrows(), n + nd, |i, j| if j < n { t.a[(i, j)] } else { t.d[(i, j - n)] });
    let s2 = sigma * sigma;
    let mut h = b.transpose() * &b / s2;
    let p = prior_hessian(t.grid, &params);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] += p[(i, j)];
        }
    }
    let rhs = b.transpose() * DVector::from_column_slice(&t.y.y) / s2;
    let sol = h.lu().solve(&rhs).unwrap();
    let oracle: Vec<f64> = sol.iter().take(n).cloned().collect();
    let err = rel_err(&x.values, &oracle);
    assert!(err < 1e-5, "relative error {err:e}");
}

#[test]
fn umbir_without_data_weight_stays_at_prior_fixed_point() {
    let t = toy(40, 20, 1e12, None, 4);
    let params = QggmrfParams::uniform(QggmrfShape::default(), &t.grid, 0.3).unwrap();
    let cfg = MaceConfig { beta: 1.0, icd_sweeps_per_call: 5, ..Default::default() };
    let (x, _) = umbir_reconstruct(&t.y, &t.model, &params, &cfg, t.grid).unwrap();
    // the prior-only equilibrium from a zero start is the zero image
    let t1 = toy(40, 20, 1.0, None, 4);
    let (x1, _) = umbir_reconstruct(&t1.y, &t1.model, &params, &cfg, t1.grid).unwrap();
    assert!(x.norm() < 1e-9 * x1.norm(), "{} vs {}", x.norm(), x1.norm());
}

#[test]
fn umbir_fits_noiseless_data_without_prior() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let probe = toy(30, 10, 1.0, None, 8);
    let x_true: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g_true = [0.7, -0.3];
    let y: Vec<f64> = (&probe.a * DVector::from_column_slice(&x_true) + &probe.d * DVector::from_column_slice(&g_true))
        .iter()
        .cloned()
        .collect();
    let t = toy(30, 10, 1.0, Some(y), 8);
    let params = QggmrfParams::uniform(QggmrfShape::default(), &t.grid, 1e6).unwrap();
    let cfg = MaceConfig { beta: 0.05, icd_sweeps_per_call: 10, max_iters: 2000, tol: 1e-10, ..Default::default() };
    let (x, _) = umbir_reconstruct(&t.y, &t.model, &params, &cfg, t.grid).unwrap();
    // residual after the best direct-arrival fit
    let r = DVector::from_column_slice(&t.y.y) - &t.a * DVector::from_column_slice(&x.values);
    let g = (t.d.transpose() * &t.d).cholesky().unwrap().solve(&(t.d.transpose() * &r));
    let res = (r - &t.d * g).norm() / DVector::from_column_slice(&t.y.y).norm();
    assert!(res < 1e-3, "relative residual {res:e}");
}

#[test]
fn umbir_rejects_mismatched_grid() {
    let t = toy(20, 10, 1.0, None, 2);
    let params = QggmrfParams::uniform(QggmrfShape::default(), &t.grid, 0.3).unwrap();
    let other = ImageGrid::new(4, 4, 1.0, 0.0).unwrap();
    assert!(umbir_reconstruct(&t.y, &t.model, &params, &MaceConfig::default(), other).is_err());
}
