use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use turbmodes::simulator::{
    apply_screen, propagate_field, run_ensemble, run_ensemble_sequential, ComplexFieldGrid, EnsembleConfig, Grid,
    PhaseScreen, Projector, ScreenGenerator, ScreenSpec,
};
use turbmodes::{Basis, BeamGeometry, Family, ModeId, TurbulenceModel};

const LAMBDA: f64 = 850e-9;

fn mixed_field(geom: &BeamGeometry, grid: Grid) -> ComplexFieldGrid {
    let parts = [
        (ModeId::hg(0, 0), Complex64::new(0.6, 0.1)),
        (ModeId::hg(2, 1), Complex64::new(-0.3, 0.4)),
        (ModeId::hg(0, 3), Complex64::new(0.2, -0.5)),
    ];
    let mut data = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (mode, c) in parts {
        for (d, v) in data.iter_mut().zip(ComplexFieldGrid::from_mode(mode, geom, grid).data()) {
            *d += c * v;
        }
    }
    ComplexFieldGrid::new(grid, geom.wavelength, data).unwrap()
}

#[test]
fn screens_and_propagation_preserve_power() {
    let grid = Grid::new(128, 2e-3).unwrap();
    let geom = BeamGeometry::at_waist(LAMBDA, 0.012).unwrap();
    let mut field = mixed_field(&geom, grid);
    let p0 = field.power();
    let turb = TurbulenceModel::von_karman(1e-13, 1e-3, 1.0).unwrap();
    let mut spec = ScreenSpec::new(turb, 1000.0, LAMBDA, grid, 3);
    spec.components = 100;
    apply_screen(&mut field, &ScreenGenerator::new(&spec).unwrap().screen(0)).unwrap();
    assert!((field.power() / p0 - 1.0).abs() < 1e-10);
    let out = propagate_field(&field, 300.0).unwrap();
    assert!((out.power() / p0 - 1.0).abs() < 1e-10);
}

#[test]
fn constant_screen_keeps_modal_powers() {
    let grid = Grid::new(128, 2e-3).unwrap();
    let geom = BeamGeometry::at_waist(LAMBDA, 0.012).unwrap();
    let proj = Projector::new(&Basis::enumerate(Family::Hg, 4), &geom, grid).unwrap();
    let mut field = mixed_field(&geom, grid);
    let before = proj.powers(&field).unwrap();
    apply_screen(&mut field, &PhaseScreen { grid, values: vec![1.234; grid.len()] }).unwrap();
    for (a, b) in proj.powers(&field).unwrap().iter().zip(&before) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn modal_powers_survive_free_propagation() {
    let grid = Grid::new(256, 1.5e-3).unwrap();
    let geom = BeamGeometry::new(LAMBDA, 0.012, -200.0).unwrap();
    let basis = Basis::enumerate(Family::Hg, 4);
    let field = mixed_field(&geom, grid);
    let before = Projector::new(&basis, &geom, grid).unwrap().powers(&field).unwrap();
    let dz = 450.0;
    let moved = propagate_field(&field, dz).unwrap();
    let after = Projector::new(&basis, &geom.at(geom.z + dz), grid).unwrap().powers(&moved).unwrap();
    for ((a, b), m) in after.iter().zip(&before).zip(basis.modes()) {
        assert!((a - b).abs() < 1e-6, "{m}: {b} -> {a}");
    }
}

#[test]
fn screen_band_variance_matches_spectrum() {
    let n = 64;
    let grid = Grid::new(n, 5e-3).unwrap();
    let turb = TurbulenceModel::kolmogorov(1e-14).unwrap();
    let mut spec = ScreenSpec::new(turb.clone(), 500.0, LAMBDA, grid, 99);
    spec.lowest_frequency = 1.0 / (n as f64 * grid.pitch);
    spec.components = n / 2 - 1;
    spec.subharmonic_levels = 0;
    let gen = ScreenGenerator::new(&spec).unwrap();
    assert!(gen.warnings().is_empty());
    let f0 = gen.lowest_frequency();

    let fft = FftPlanner::new().plan_fft_forward(n);
    let bands = [(2.0, 4.0), (4.0, 8.0), (8.0, 16.0), (16.0, 28.0)];
    let band_of = |i: i64, j: i64| {
        let r = (i as f64).hypot(j as f64);
        bands.iter().position(|&(lo, hi)| r >= lo && r < hi)
    };
    let freq = |k: usize| if k < n / 2 { k as i64 } else { k as i64 - n as i64 };
    let mut measured = [0.0; 4];
    let screens = 1000;
    for s in 0..screens {
        let screen = gen.screen(s);
        let mut data: Vec<Complex64> = screen.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for row in data.chunks_mut(n) {
            fft.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for a in 0..n {
            for b in 0..n {
                col[b] = data[b * n + a];
            }
            fft.process(&mut col);
            for b in 0..n {
                if let Some(band) = band_of(freq(a), freq(b)) {
                    measured[band] += (col[b] / (n * n) as f64).norm_sqr();
                }
            }
        }
    }
    let dk = 2.0 * PI * f0;
    let k = spec.k();
    let mut expected = [0.0; 4];
    for a in 0..n {
        for b in 0..n {
            let (i, j) = (freq(a), freq(b));
            if let Some(band) = band_of(i, j) {
                let big_k = dk * (i as f64).hypot(j as f64);
                expected[band] += turb.phase_spectrum(big_k, k, spec.slab_length).unwrap() * dk * dk;
            }
        }
    }
    for band in 0..4 {
        let ratio = measured[band] / screens as f64 / expected[band];
        assert!((ratio - 1.0).abs() < 0.05, "band {:?}: ratio {ratio}", bands[band]);
    }
}

fn ensemble_config(family: Family, strength_r0: f64, realizations: usize) -> EnsembleConfig {
    let grid = Grid::new(256, 3.125e-3).unwrap();
    let turb = TurbulenceModel::von_karman(1e-15, 1e-3, 1.0).unwrap();
    let mut screen = ScreenSpec::new(turb, 1000.0, LAMBDA, grid, 21).with_r0(strength_r0).unwrap();
    screen.components = 200;
    EnsembleConfig {
        screen,
        geometry: BeamGeometry::at_waist(LAMBDA, 0.04).unwrap(),
        input: ModeId::fundamental(family),
        basis: Basis::enumerate(family, 4),
        screens_per_realization: 1,
        step: 0.0,
        realizations,
    }
}

#[test]
fn ensembles_are_reproducible() {
    let c = ensemble_config(Family::Lg, 0.1, 6);
    let a = run_ensemble_sequential(&c).unwrap();
    assert_eq!(a, run_ensemble_sequential(&c).unwrap());
    assert_eq!(a, run_ensemble(&c).unwrap());
    let mut other = c.clone();
    other.screen.seed += 1;
    assert_ne!(run_ensemble(&other).unwrap().mean, a.mean);
}

#[test]
fn hg_and_lg_ensembles_group_alike() {
    let hg = run_ensemble(&ensemble_config(Family::Hg, 0.1, 40)).unwrap();
    let mut lg_config = ensemble_config(Family::Lg, 0.1, 40);
    // Same launched field: LG(0,0) and HG(0,0) coincide.
    lg_config.input = ModeId::lg(0, 0);
    let lg = run_ensemble(&lg_config).unwrap();
    for (h, l) in hg.groups.iter().zip(&lg.groups) {
        assert!((h.mean - l.mean).abs() < 0.02 * h.mean, "N={}: {} vs {}", h.order, h.mean, l.mean);
    }
}

#[test]
fn stacked_screens_equal_one_screen() {
    let single = ensemble_config(Family::Hg, 0.15, 200);
    let mut stacked = single.clone();
    stacked.screens_per_realization = 10;
    stacked.screen.slab_length /= 10.0;
    stacked.screen.seed = 5;
    let a = run_ensemble(&single).unwrap();
    let b = run_ensemble(&stacked).unwrap();
    for order in 0..=2 {
        let (x, y) = (a.group(order).unwrap(), b.group(order).unwrap());
        let sigma = x.stderr.hypot(y.stderr);
        let tol = (0.05 * x.mean.max(y.mean)).max(3.0 * sigma);
        assert!((x.mean - y.mean).abs() < tol, "N={order}: {} vs {}", x.mean, y.mean);
    }
}
