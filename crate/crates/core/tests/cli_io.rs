mod common;

use common::{all_fixtures, fixture};
use pwlmap::cli_io::{
    encode_ppm, parse_config, render, run_command, sidecar_path, Command, ConfigError, RunError,
};
use pwlmap::scan::{Axis, CellCode};

#[test]
fn every_fixture_parses_and_round_trips() {
    let names = all_fixtures();
    assert!(names.len() >= 50);
    for name in names {
        let cfg = fixture(&name);
        let again = parse_config(&render(&cfg)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(cfg, again, "{name}");
    }
}

#[test]
fn every_fixture_names_a_command() {
    for name in all_fixtures() {
        assert!(fixture(&name).command.is_some(), "{name}");
    }
}

#[test]
fn config_errors_carry_line_numbers() {
    let e = parse_config("command = orbit\nmap = T1\nbogus = 1\n").unwrap_err();
    assert!(matches!(e, ConfigError::UnknownKey { line: 3, .. }), "{e:?}");
    let e = parse_config("map = T1\ntauL = x\n").unwrap_err();
    assert!(matches!(e, ConfigError::TypeMismatch { line: 2, .. }), "{e:?}");
    let e = parse_config("map = T1\nmap = T2\n").unwrap_err();
    assert!(matches!(e, ConfigError::Duplicate { line: 2, .. }), "{e:?}");
    assert!(parse_config("tauL = 1\n").is_err());
}

#[test]
fn ppm_encoding_is_binary_rgb() {
    let px = encode_ppm(2, 1, &[CellCode::Green, CellCode::Red]).unwrap();
    let header = b"P6\n2 1\n255\n";
    assert_eq!(&px[..header.len()], header);
    assert_eq!(&px[header.len()..], &[0, 160, 0, 200, 0, 0]);
    assert!(matches!(encode_ppm(0, 0, &[]), Err(RunError::EmptyImage(0, 0))));
}

#[test]
fn scan_writes_an_image_and_its_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture("t1_tau_plane");
    let s = cfg.scan2d.as_mut().unwrap();
    s.x_axis = Axis { n: 6, ..s.x_axis.clone() };
    s.y_axis = Axis { n: 5, ..s.y_axis.clone() };
    cfg.thresholds.transient = 200;
    cfg.thresholds.samples = 200;
    let out = dir.path().join("plane.ppm");
    cfg.out = Some(out.clone());
    let report = run_command(&cfg).unwrap();
    assert!(report.summary.starts_with("scan2d 6x5"), "{}", report.summary);
    assert_eq!(report.artifacts, vec![out.clone(), sidecar_path(&out)]);
    let bytes = std::fs::read(&out).unwrap();
    assert!(bytes.starts_with(b"P6\n6 5\n255\n"));
    assert_eq!(bytes.len(), b"P6\n6 5\n255\n".len() + 6 * 5 * 3);
    let side = std::fs::read_to_string(sidecar_path(&out)).unwrap();
    for key in ["map = T1", "transient = 200", "seed = ", "x_axis = ", "y_axis = "] {
        assert!(side.contains(key), "missing {key}");
    }
}

#[test]
fn orbit_writes_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture("t1_two_wqa");
    cfg.command = Some(Command::Orbit);
    cfg.orbit = Some(pwlmap::cli_io::OrbitSection { n_max: 20 });
    let out = dir.path().join("orbit.csv");
    cfg.out = Some(out.clone());
    run_command(&cfg).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,x,y");
    assert_eq!(lines.len(), 22);
    let first: Vec<f64> = lines[1].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(first, vec![0.1, 0.1]);
}

#[test]
fn commands_without_their_section_fail() {
    let mut cfg = fixture("t1_two_wqa");
    cfg.command = Some(Command::Scan1d);
    assert!(run_command(&cfg).is_err());
    for c in Command::ALL {
        assert_eq!(c.name().parse::<Command>().unwrap(), c);
    }
}
