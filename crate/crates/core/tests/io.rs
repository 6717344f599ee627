//! Container round-trips: scientific-notation JSON, CSV tables, tabulated
//! kernel and spectrum loading, and the binary ensemble format.

use std::fs;
use voltorus_core::error::Error;
use voltorus_core::io::{
    json_string, load_kernel_csv, load_spectrum_csv, read_ensemble, write_ensemble, write_json,
    write_resolvent_csv, write_table_csv,
};
use voltorus_core::kernels::{solve_resolvent, Kernel};
use voltorus_core::simulate::{simulate_exact_gaussian, SimulationConfig, ZeroModePolicy};
use voltorus_core::spectrum::CovarianceSpectrum;

#[test]
fn json_floats_are_scientific_and_non_finite_becomes_null() {
    #[derive(serde::Serialize)]
    struct Probe {
        a: f64,
        b: f64,
        c: f64,
    }
    let s = json_string(&Probe {
        a: 0.1,
        b: f64::NAN,
        c: f64::INFINITY,
    })
    .unwrap();
    assert!(s.contains("e-1") || s.contains("e0"), "{s}");
    assert_eq!(s.matches("null").count(), 2);
    // 17 significant digits round-trip the double exactly.
    let back: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(back["a"].as_f64().unwrap(), 0.1);
}

#[test]
fn resolvent_csv_round_trips_to_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("resolvent.csv");
    let grid = solve_resolvent(&Kernel::Exp, -1.0, 0.01, 1.0).unwrap();
    write_resolvent_csv(&path, &grid).unwrap();

    let mut r = csv::Reader::from_path(&path).unwrap();
    assert_eq!(r.headers().unwrap(), &csv::StringRecord::from(vec!["t", "r"]));
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), grid.values.len());
    for (j, rec) in rows.iter().enumerate() {
        assert_eq!(rec[0].parse::<f64>().unwrap(), grid.t(j));
        assert_eq!(rec[1].parse::<f64>().unwrap(), grid.values[j]);
    }
}

#[test]
fn table_writer_enforces_row_width() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    write_table_csv(&path, &["x", "y"], &[vec![1.0, 2.0]]).unwrap();
    assert!(matches!(
        write_table_csv(&path, &["x", "y"], &[vec![1.0, 2.0, 3.0]]),
        Err(Error::Container(_))
    ));
}

#[test]
fn kernel_csv_loads_as_tabulated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kernel.csv");
    let dt = 0.125;
    let rows: Vec<Vec<f64>> = (0..=16)
        .map(|j| vec![j as f64 * dt, (-(j as f64) * dt).exp()])
        .collect();
    write_table_csv(&path, &["t", "b"], &rows).unwrap();
    let kernel = load_kernel_csv(&path).unwrap();
    for j in 0..=16 {
        let t = j as f64 * dt;
        assert_eq!(kernel.eval(t).unwrap(), (-t).exp());
    }

    // Non-uniform time column is rejected.
    let bad = dir.path().join("bad.csv");
    write_table_csv(&bad, &["t", "b"], &[vec![0.0, 1.0], vec![0.1, 0.9], vec![0.3, 0.7]]).unwrap();
    assert!(load_kernel_csv(&bad).is_err());

    // Time must start at zero.
    let shifted = dir.path().join("shifted.csv");
    write_table_csv(&shifted, &["t", "b"], &[vec![0.5, 1.0], vec![0.6, 0.9]]).unwrap();
    assert!(load_kernel_csv(&shifted).is_err());

    // A single row is not a kernel.
    let short = dir.path().join("short.csv");
    write_table_csv(&short, &["t", "b"], &[vec![0.0, 1.0]]).unwrap();
    assert!(load_kernel_csv(&short).is_err());
}

#[test]
fn spectrum_csv_infers_dimension_and_ball() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spectrum.csv");
    fs::write(
        &path,
        "n1,n2,gamma\n0,0,1.0\n1,0,0.5\n-1,0,0.5\n0,2,0.25\n0,-2,0.25\n",
    )
    .unwrap();
    let spec = load_spectrum_csv(&path).unwrap();
    assert_eq!(spec.d, 2);
    assert_eq!(spec.n_max, 2);
    assert_eq!(spec.gamma(&[0, 0]), 1.0);
    assert_eq!(spec.gamma(&[1, 0]), 0.5);
    assert_eq!(spec.gamma(&[0, -2]), 0.25);
    assert_eq!(spec.gamma(&[1, 1]), 0.0);
}

#[test]
fn ensemble_container_round_trips_bitwise() {
    let spec = CovarianceSpectrum::parametric(2, 3, 1.0, 1.5);
    let config = SimulationConfig {
        d: 2,
        alpha: -1.0,
        n_max: 3,
        time_grid: vec![0.0, 0.5],
        conv_dt: 0.125,
        memory_horizon: 13.0,
        n_paths: 5,
        seed: 99,
        zero_mode_policy: ZeroModePolicy::StationaryKernel,
    };
    let ens = simulate_exact_gaussian(&Kernel::Exp, &spec, &config).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("paths.vfe");
    write_ensemble(&path, &ens).unwrap();
    let back = read_ensemble(&path).unwrap();

    assert_eq!(back.zero, ens.zero);
    assert_eq!(back.cos_coeff, ens.cos_coeff);
    assert_eq!(back.sin_coeff, ens.sin_coeff);
    assert_eq!(back.meta.seed, ens.meta.seed);
    assert_eq!(back.meta.time_grid, ens.meta.time_grid);
    assert_eq!(back.meta.kernel_id, ens.meta.kernel_id);
    assert_eq!(back.index.members.len(), ens.index.members.len());
    assert_eq!(back.gammas, ens.gammas);
    // Reconstructed reports must agree exactly.
    assert_eq!(
        back.coefficient_norm(3, 1, 0.0),
        ens.coefficient_norm(3, 1, 0.0)
    );
}

#[test]
fn ensemble_reader_rejects_corruption() {
    let spec = CovarianceSpectrum::parametric(1, 2, 1.0, 1.0);
    let config = SimulationConfig {
        d: 1,
        alpha: -1.0,
        n_max: 2,
        time_grid: vec![0.0],
        conv_dt: 0.125,
        memory_horizon: 13.0,
        n_paths: 2,
        seed: 1,
        zero_mode_policy: ZeroModePolicy::StationaryKernel,
    };
    let ens = simulate_exact_gaussian(&Kernel::Exp, &spec, &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("paths.vfe");
    write_ensemble(&path, &ens).unwrap();
    let bytes = fs::read(&path).unwrap();

    // Wrong magic.
    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    let p = dir.path().join("magic.vfe");
    fs::write(&p, &bad).unwrap();
    assert!(matches!(read_ensemble(&p), Err(Error::Container(_))));

    // Truncated payload.
    let p = dir.path().join("trunc.vfe");
    fs::write(&p, &bytes[..bytes.len() - 4]).unwrap();
    assert!(read_ensemble(&p).is_err());

    // Trailing garbage.
    let mut padded = bytes.clone();
    padded.extend_from_slice(&[0u8; 8]);
    let p = dir.path().join("padded.vfe");
    fs::write(&p, &padded).unwrap();
    assert!(matches!(read_ensemble(&p), Err(Error::Container(_))));

    // Non-finite payload values.
    let mut poisoned = bytes;
    let tail = poisoned.len() - 8;
    poisoned[tail..].copy_from_slice(&f64::NAN.to_le_bytes());
    let p = dir.path().join("nan.vfe");
    fs::write(&p, &poisoned).unwrap();
    assert!(matches!(read_ensemble(&p), Err(Error::Container(_))));
}

#[test]
fn write_json_appends_newline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    write_json(&path, &serde_json::json!({"x": 1.5})).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.ends_with('\n'));
    assert!(text.contains("1.5"));
}
