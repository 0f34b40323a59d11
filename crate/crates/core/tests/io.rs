mod common;

use std::io::Cursor;

use common::*;
use serde_json::json;
use weylzak::io::*;
use weylzak::*;

fn roundtrip_kernel(k: &Kernel64, dtype: Dtype) -> Kernel64 {
    let mut buf = Vec::new();
    write_kernel(&mut buf, k, dtype, json!({"note": "test"})).unwrap();
    assert_eq!(&buf[..8], MAGIC);
    read_kernel(&mut Cursor::new(buf)).unwrap()
}

#[test]
fn kernel_container_roundtrip() {
    let p = pipeline_at(&GeneratorSpec::exp_kernel_squared(), 16, 4, 3);
    let back = roundtrip_kernel(&p.kernel, Dtype::Complex128);
    assert_eq!(back.xi, p.kernel.xi);
    assert_eq!(back.eta, p.kernel.eta);
    assert_eq!(max_diff(&back.to_dense(), &p.kernel.to_dense()), 0.0);
    let lossy = roundtrip_kernel(&p.kernel, Dtype::Complex64);
    let scale = p.kernel.max_abs();
    assert!(max_diff(&lossy.to_dense(), &p.kernel.to_dense()) < 1e-6 * scale);
    // banded storage survives
    assert_eq!(lossy.rows.iter().map(|r| r.start).collect::<Vec<_>>(), p.kernel.rows.iter().map(|r| r.start).collect::<Vec<_>>());
}

#[test]
fn function_container_roundtrip() {
    let f = indicator_grid(8, 2);
    let mut buf = Vec::new();
    write_function(&mut buf, &f, Dtype::Complex128).unwrap();
    let back: Grid2n<f64> = read_function(&mut Cursor::new(buf)).unwrap();
    assert_eq!(back, f);
}

#[test]
fn zak_container_roundtrip() {
    let p = pipeline_at(&GeneratorSpec::exp_kernel(), 16, 4, 3);
    let mut buf = Vec::new();
    write_zak(&mut buf, &p.zak, Dtype::Complex128, json!({})).unwrap();
    let back: Zak64 = read_zak(&mut Cursor::new(buf)).unwrap();
    assert!(back.same_grid(&p.zak));
    assert_eq!(back.truncation, p.zak.truncation);
    assert_eq!(max_diff(&back.values, &p.zak.values), 0.0);
}

#[test]
fn bracket_container_roundtrip() {
    let p = pipeline_at(&GeneratorSpec::exp_kernel_squared(), 16, 4, 3);
    let mut buf = Vec::new();
    write_bracket(&mut buf, &p.bracket, Dtype::Complex128, json!({"hash": "x"})).unwrap();
    let back: Bracket64 = read_bracket(&mut Cursor::new(buf)).unwrap();
    assert_eq!(back.xi, p.bracket.xi);
    assert_eq!(back.eta, p.bracket.eta);
    assert!(back.self_bracket);
    assert_eq!(back.input_norms, p.bracket.input_norms);
    assert_eq!(max_diff(&back.values, &p.bracket.values), 0.0);
}

#[test]
fn gram_container_and_json() {
    let g = gram_matrix(&indicator_grid(8, 2), 1).unwrap();
    let mut buf = Vec::new();
    write_gram(&mut buf, &g, Dtype::Complex128, json!({})).unwrap();
    let back = read_gram(&mut Cursor::new(buf)).unwrap();
    assert_eq!(back, g);
    let j = gram_json(&g);
    assert_eq!(j["indices"].as_array().unwrap().len(), 9);
    assert_eq!(j["re"][4][4].as_f64().unwrap(), g.at(4, 4).re);
    assert_eq!(j["radius"], 1);
}

#[test]
fn wrong_container_kind_and_magic_are_rejected() {
    let g = gram_matrix(&indicator_grid(8, 2), 1).unwrap();
    let mut buf = Vec::new();
    write_gram(&mut buf, &g, Dtype::Complex64, json!({})).unwrap();
    assert!(read_kernel::<f64>(&mut Cursor::new(buf.clone())).is_err());
    buf[0] = b'X';
    assert!(matches!(read_gram(&mut Cursor::new(buf)), Err(Error::InvalidInput(_))));
    assert!(read_gram(&mut Cursor::new(MAGIC.to_vec())).is_err());
}

#[test]
fn csv_exports() {
    let p = pipeline_at(&GeneratorSpec::exp_kernel(), 8, 2, 2);
    let mut out = Vec::new();
    kernel_csv(&mut out, &p.kernel).unwrap();
    let s = String::from_utf8(out).unwrap();
    assert!(s.starts_with("xi,eta,re,im\n"));
    let stored: usize = p.kernel.rows.iter().map(|r| r.values.len()).sum();
    assert_eq!(s.lines().count(), stored + 1);

    let mut out = Vec::new();
    bracket_csv(&mut out, &p.bracket).unwrap();
    let s = String::from_utf8(out).unwrap();
    assert!(s.starts_with("xi,xi_prime,re,im\n"));
    assert_eq!(s.lines().count(), p.bracket.values.len() + 1);
    let first: Vec<&str> = s.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first.len(), 4);
    assert!((first[2].parse::<f64>().unwrap() - p.bracket.at(0, 0).re).abs() < 1e-12);

    for (slice, head, rows) in [
        (ZakSlice::Eta(0), "xi,xi_prime,re,im", p.zak.xi.len * p.zak.n_xi_prime),
        (ZakSlice::XiPrime(0), "xi,eta,re,im", p.zak.xi.len * p.zak.eta.len),
    ] {
        let mut out = Vec::new();
        zak_csv(&mut out, &p.zak, slice).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.lines().next().unwrap(), head);
        assert_eq!(s.lines().count(), rows + 1);
    }
}

#[test]
fn sampled_kernel_generator_from_file() {
    let p = pipeline_at(&GeneratorSpec::exp_kernel(), 16, 4, 3);
    let dir = std::env::temp_dir().join(format!("weylzak-io-{}", std::process::id()));
    let path = dir.join("k.bin");
    {
        let mut w = create(&path).unwrap();
        write_kernel(&mut w, &p.kernel, Dtype::Complex128, json!({})).unwrap();
    }
    let spec: GeneratorSpec = serde_json::from_value(json!({
        "kind": "sampled_kernel",
        "grid": {"path": path},
    }))
    .unwrap();
    let g = materialize::<f64>(&spec).unwrap();
    let k = weyl_kernel(&g, &KernelWindow::for_generator(4, 3, 16, &g)).unwrap();
    assert!(max_diff(&k.to_dense(), &p.kernel.to_dense()) < 1e-15);
    let back: Kernel64 = read_kernel_bin(&path).unwrap();
    assert_eq!(back.xi, p.kernel.xi);
    std::fs::remove_dir_all(dir).unwrap();
}
