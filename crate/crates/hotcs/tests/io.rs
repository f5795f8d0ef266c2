use hotcs::config::{parse_config, Manifest};
use hotcs::io::{
    encode_pgm, load_csv_vector, load_pgm, parse_pgm, write_csv_report, write_csv_vector, write_json, write_pgm, Table,
};
use hotcs_core::datagen::{gen_image, ImageParams};
use hotcs_core::{CVector, C64};
use std::path::Path;

#[test]
fn pgm_file_roundtrip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let img = gen_image(&ImageParams { size: 32, ..ImageParams::default() }, 11).unwrap();
    let quantized = parse_pgm(&encode_pgm(&img), Path::new("mem")).unwrap();
    let p = dir.path().join("img.pgm");
    write_pgm(&quantized, &p).unwrap();
    assert_eq!(load_pgm(&p).unwrap(), quantized);
    assert_eq!(std::fs::read(&p).unwrap(), encode_pgm(&quantized));
}

#[test]
fn pgm_spec_example() {
    let mut bytes = b"P5 2 2 255\n".to_vec();
    bytes.extend([0, 255, 0, 255]);
    let img = parse_pgm(&bytes, Path::new("x.pgm")).unwrap();
    assert_eq!(img.columns(), vec![vec![0.0, 0.0], vec![1.0, 1.0]]);
}

#[test]
fn pgm_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.pgm");
    std::fs::write(&p, b"P2 2 2 255\n0 0 0 0").unwrap();
    let e = load_pgm(&p).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("bad.pgm"));
    let missing = load_pgm(dir.path().join("none.pgm")).unwrap_err();
    assert!(missing.to_string().contains("none.pgm"));
}

#[test]
fn csv_vector_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let real = CVector::new(vec![C64::new(1.5, 0.0), C64::new(-0.1, 0.0), C64::new(1e-300, 0.0)]).unwrap();
    let cplx = CVector::new(vec![C64::new(1.0, -2.0), C64::new(0.1, 1.0 / 3.0)]).unwrap();
    for (name, v) in [("r.csv", real), ("c.csv", cplx)] {
        let p = dir.path().join(name);
        write_csv_vector(&v, &p).unwrap();
        assert_eq!(load_csv_vector(&p).unwrap(), v);
    }
    let p = dir.path().join("s.csv");
    std::fs::write(&p, "1.0\n2.0\n").unwrap();
    assert_eq!(load_csv_vector(&p).unwrap().as_slice(), &[C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
}

#[test]
fn report_csv_uses_lf_and_fixed_headers() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = Table::new(&["a", "b"]);
    write_csv_report(&t, dir.path().join("empty.csv")).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join("empty.csv")).unwrap(), "a,b\n");
    t.push(vec!["1".into(), "x,y".into()]);
    write_csv_report(&t, dir.path().join("one.csv")).unwrap();
    let text = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    assert_eq!(text, "a,b\n1,\"x,y\"\n");
    assert!(!text.contains('\r'));
}

#[test]
fn manifest_roundtrips_through_loader() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        r#"{"schema_version":1,"seed":8,"pipeline":{"name":"image_cs","prior":"haar:2",
        "image":{"kind":"synthetic_image","size":32},"ratios":[0.5],"snrs_db":[30],
        "solver":{"kind":"lasso","lambda_scale":0.02,"max_iters":500}}}"#,
    )
    .unwrap();
    let p = dir.path().join("manifest.json");
    write_json(&Manifest::new(&cfg), &p).unwrap();
    let back = hotcs::config::load_config(&p).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn write_errors_carry_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let e = write_json(&1, blocker.join("x.json")).unwrap_err();
    assert_eq!(e.exit_code(), 3);
    assert!(e.to_string().contains("x.json"));
}
