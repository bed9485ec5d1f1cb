use std::f64::consts::TAU;

use torus_mfg::io::{
    export_field, export_flux, export_stationary, import_binary, import_csv, import_field, import_flux, parse_config,
    ExportFormat, FieldKind, Mode, RunConfig,
};
use torus_mfg::{Grid, MfgError, Placement, ScalarField, SolverOptions, VectorField};

#[test]
fn minimal_config_takes_defaults() {
    let config = parse_config("schema_version = 1\n").unwrap();
    assert_eq!(config, RunConfig::default());
    assert_eq!(config.mode, Mode::Solve);
    assert_eq!(config.solver, SolverOptions::default());
    let (grid, model) = config.build().unwrap();
    assert_eq!((grid.dim(), grid.n_x(), grid.n_t()), (1, 64, 64));
    assert!(model.m0.iter().all(|&m| m == 1.0));
    assert!(model.hamiltonian.potential().iter().all(|&v| v == 0.0));
}

#[test]
fn exponent_relation_is_enforced() {
    let text = r#"
schema_version = 1
[grid]
dim = 2
n_x = 8
[model.hamiltonian]
exponent = 2.0
[model.coupling]
exponent = 3.0
"#;
    match parse_config(text) {
        Err(MfgError::AssumptionViolation(msg)) => assert!(msg.contains("r > max{d(q-1),1}"), "{msg}"),
        other => panic!("expected an assumption violation, got {other:?}"),
    }
}

#[test]
fn schema_errors_carry_paths() {
    let cases = [
        ("schema_version = 1\n[grid]\nn_x = -4\n", "grid.n_x"),
        ("schema_version = 1\n[solver]\ntol_gapp = 1e-3\n", "solver"),
        (
            "schema_version = 1\n[model.coupling]\nfamily = \"cubic\"\n",
            "model.coupling.family",
        ),
        ("schema_version = 2\n", "schema_version"),
        ("schema_version = 1\n[data]\nm0 = [1.0, 2.0]\n", "data.m0"),
        ("schema_version = 1\n[output]\nformats = []\n", "output.formats"),
    ];
    for (text, want) in cases {
        match parse_config(text) {
            Err(MfgError::Schema { path, .. }) => assert!(path.starts_with(want), "{path} for {text:?}"),
            other => panic!("expected a schema error for {text:?}, got {other:?}"),
        }
    }
}

#[test]
fn presets_expand_on_the_grid() {
    let text = r#"
schema_version = 1
mode = "ergodic"
[grid]
n_x = 16
[model.hamiltonian]
potential = { preset = "cosine", amplitude = 2.0 }
[data]
m0 = { preset = "cosine", amplitude = 0.5, offset = 1.0 }
"#;
    let config = parse_config(text).unwrap();
    let (grid, model) = config.build().unwrap();
    for i in 0..16 {
        let c = (TAU * grid.coords(i)[0]).cos();
        assert!((model.hamiltonian.potential()[i] - 2.0 * c).abs() <= 1e-15);
        assert!((model.m0[i] - (1.0 + 0.5 * c)).abs() <= 1e-15);
    }
}

#[test]
fn constant_field_exports_constant_rows() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(1, 4, 2, 1.0).unwrap();
    let field = ScalarField::constant(grid, Placement::TimeCell, 2.5);
    let path = dir.path().join("m.csv");
    let summary = export_field(&field, &path, ExportFormat::Csv).unwrap();
    assert_eq!(summary.rows, 8);
    let (header, rows) = import_csv(&path).unwrap();
    assert_eq!(header, ["t", "x0", "value"]);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[2] == 2.5));
    // lexicographic in (t, x)
    let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn binary_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(2, 4, 3, 1.5).unwrap();
    let phi = ScalarField::from_fn(grid, Placement::TimeNode, |t, x| (t * 1.3 + x[0]).sin() / 3.0 + x[1]);
    let w = VectorField::from_fn(grid, |t, x, axis| (t + x[0] - x[1]).exp() * (axis as f64 + 0.1) / 7.0);
    let (pp, wp) = (dir.path().join("phi.bin"), dir.path().join("w.bin"));
    export_field(&phi, &pp, ExportFormat::Binary).unwrap();
    export_flux(&w, &wp, ExportFormat::Binary).unwrap();
    let back = import_field(&pp).unwrap();
    assert_eq!(back.grid(), phi.grid());
    assert_eq!(back.placement(), Placement::TimeNode);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(back.values()), bits(phi.values()));
    let wb = import_flux(&wp).unwrap();
    assert_eq!(bits(wb.values()), bits(w.values()));
    let (header, _) = import_binary(&wp).unwrap();
    assert_eq!(header.kind, FieldKind::Flux);
    assert!(import_field(&wp).is_err());
}

#[test]
fn csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(1, 8, 2, 1.0).unwrap();
    let field = ScalarField::from_fn(grid, Placement::TimeNode, |t, x| 0.1 * t + (TAU * x[0]).cos() / 3.0);
    let path = dir.path().join("phi.csv");
    export_field(&field, &path, ExportFormat::Csv).unwrap();
    let (_, rows) = import_csv(&path).unwrap();
    let values: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    assert_eq!(values, field.values());
}

#[test]
fn flux_and_stationary_csv_layouts() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(2, 4, 2, 1.0).unwrap();
    let w = VectorField::zeros(grid);
    let path = dir.path().join("w.csv");
    assert_eq!(export_flux(&w, &path, ExportFormat::Csv).unwrap().rows, 2 * 2 * 16);
    let (header, _) = import_csv(&path).unwrap();
    assert_eq!(header, ["t", "x0", "x1", "axis", "value"]);

    let spath = dir.path().join("m_bar.csv");
    assert_eq!(
        export_stationary(&grid, &[1.0; 16], &spath, ExportFormat::Csv)
            .unwrap()
            .rows,
        16
    );
    let (header, _) = import_csv(&spath).unwrap();
    assert_eq!(header, ["x0", "x1", "value"]);
}
