use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tas_core::geometry::{build_system_matrix, four_direction_beams, Grid};
use tas_core::harness::relative_error;
use tas_core::phantoms::{forward_project, phantom_flame, true_abs_coeffs, FlameParams};
use tas_core::spectroscopy::LineTable;
use tas_core::stage1::{art_solve, solve_abs_coeffs, ArtConfig};

fn random_flame(rng: &mut ChaCha8Rng) -> FlameParams {
    FlameParams {
        center: (rng.gen_range(0.4..0.6), rng.gen_range(0.4..0.6)),
        radius: rng.gen_range(0.15..0.3),
        falloff: rng.gen_range(0.05..0.1),
        x_plateau: rng.gen_range(1500.0..2000.0),
        x_ambient: rng.gen_range(400.0..600.0),
        y_plateau: rng.gen_range(0.1..0.2),
        y_ambient: rng.gen_range(0.005..0.02),
    }
}

#[test]
fn noiseless_sinograms_of_random_flames_are_recovered() {
    let grid = Grid::unit(40).unwrap();
    let l = build_system_matrix(&grid, &four_direction_beams(&grid, 40), true);
    assert_eq!(l.rows(), 160);
    let table = LineTable::synthetic_h2o();
    let cfg = ArtConfig::default();
    assert!(cfg.sweeps <= 500);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..3 {
        let phantom = phantom_flame(&grid, &random_flame(&mut rng));
        let truth = true_abs_coeffs(&table, &phantom).unwrap();
        let b = forward_project(&l, &table, &phantom).unwrap();
        let rec = solve_abs_coeffs(&l, &b, &cfg, 40, true).unwrap();
        for (ak, tk) in rec.iter().zip(&truth) {
            let err = relative_error(ak, tk).unwrap();
            assert!(err < 0.05, "relative error {err}");
        }
    }
}

#[test]
fn noiseless_default_flame_is_recovered_at_every_wavelength() {
    let grid = Grid::unit(40).unwrap();
    let l = build_system_matrix(&grid, &four_direction_beams(&grid, 40), true);
    let table = LineTable::synthetic_h2o();
    let phantom = phantom_flame(&grid, &FlameParams::default());
    let truth = true_abs_coeffs(&table, &phantom).unwrap();
    let b = forward_project(&l, &table, &phantom).unwrap();
    let rec = solve_abs_coeffs(&l, &b, &ArtConfig::default(), 40, true).unwrap();
    for (ak, tk) in rec.iter().zip(&truth) {
        let err = relative_error(ak, tk).unwrap();
        assert!(err < 0.05, "relative error {err}");
    }
}

#[test]
fn superiorized_art_beats_plain_art_on_a_flame() {
    let grid = Grid::unit(30).unwrap();
    let l = build_system_matrix(&grid, &four_direction_beams(&grid, 30), false);
    let table = LineTable::synthetic_h2o();
    let phantom = phantom_flame(&grid, &FlameParams::default());
    let truth = true_abs_coeffs(&table, &phantom).unwrap();
    let b = forward_project(&l, &table, &phantom).unwrap();
    let k = table.reference_index();
    let plain = ArtConfig {
        superiorize: None,
        ..Default::default()
    };
    let err = |cfg: &ArtConfig| {
        let a = art_solve(&l, &b[k], cfg, 30, None).unwrap().coefficients;
        relative_error(&a, &truth[k]).unwrap()
    };
    assert!(err(&ArtConfig::default()) < err(&plain));
}

#[test]
fn shape_errors_are_reported() {
    let grid = Grid::unit(6).unwrap();
    let l = build_system_matrix(&grid, &four_direction_beams(&grid, 6), false);
    let cfg = ArtConfig::default();
    assert!(art_solve(&l, &[1.0; 5], &cfg, 6, None).is_err());
    assert!(art_solve(&l, &[1.0; 24], &cfg, 5, None).is_err());
    assert!(art_solve(&l, &[1.0; 24], &cfg, 6, Some(&[0.0; 3])).is_err());
}
