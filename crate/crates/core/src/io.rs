//! Binary container and CSV/JSON exports.
//!
//! Container layout: the 8-byte magic `WEYLZAK\0`, a little-endian `u64`
//! header length, a JSON header, then little-endian complex pairs
//! (`complex64` = two f32, `complex128` = two f64).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bracket::BracketTable;
use crate::error::{Error, Result};
use crate::gram::GramMatrix;
use crate::grid::{Axis, Grid2n};
use crate::kernel::{KernelPath, KernelRow, SampledKernel};
use crate::scalar::Real;
use crate::zak::ZakField;

pub const MAGIC: &[u8; 8] = b"WEYLZAK\0";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    #[default]
    Complex64,
    Complex128,
}

fn write_container<T: Real>(w: &mut impl Write, mut header: Value, dtype: Dtype, data: &[Complex<T>]) -> Result<()> {
    header["dtype"] = serde_json::to_value(dtype)?;
    header["count"] = json!(data.len());
    let h = serde_json::to_vec(&header)?;
    w.write_all(MAGIC)?;
    w.write_all(&(h.len() as u64).to_le_bytes())?;
    w.write_all(&h)?;
    for z in data {
        match dtype {
            Dtype::Complex64 => {
                w.write_all(&(z.re.as_f64() as f32).to_le_bytes())?;
                w.write_all(&(z.im.as_f64() as f32).to_le_bytes())?;
            }
            Dtype::Complex128 => {
                w.write_all(&z.re.as_f64().to_le_bytes())?;
                w.write_all(&z.im.as_f64().to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_container<T: Real>(r: &mut impl Read) -> Result<(Value, Vec<Complex<T>>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidInput("not a weylzak container (bad magic)".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let mut h = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut h)?;
    let header: Value = serde_json::from_slice(&h)?;
    let dtype: Dtype = serde_json::from_value(header["dtype"].clone())?;
    let count = header["count"].as_u64().ok_or_else(|| Error::InvalidInput("header lacks count".into()))? as usize;
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        let z = match dtype {
            Dtype::Complex64 => {
                let mut b = [0u8; 4];
                r.read_exact(&mut b)?;
                let re = f32::from_le_bytes(b) as f64;
                r.read_exact(&mut b)?;
                Complex::new(re, f32::from_le_bytes(b) as f64)
            }
            Dtype::Complex128 => {
                let mut b = [0u8; 8];
                r.read_exact(&mut b)?;
                let re = f64::from_le_bytes(b);
                r.read_exact(&mut b)?;
                Complex::new(re, f64::from_le_bytes(b))
            }
        };
        data.push(Complex::new(T::of(z.re), T::of(z.im)));
    }
    Ok((header, data))
}

fn axis_of(v: &Value, key: &str) -> Result<Axis> {
    Ok(serde_json::from_value(v["axes"][key].clone())?)
}

fn kind_check(h: &Value, kind: &str) -> Result<()> {
    if h["type"] != kind {
        return Err(Error::InvalidInput(format!("expected a {kind} container, found {}", h["type"])));
    }
    Ok(())
}

pub fn write_kernel<T: Real>(w: &mut impl Write, k: &SampledKernel<T>, dtype: Dtype, extra: Value) -> Result<()> {
    let header = json!({
        "type": "sampled_kernel",
        "axes": {"xi": k.xi, "eta": k.eta},
        "dims": [k.xi.len, k.eta.len],
        "provenance": k.path,
        "unknown_rows": k.unknown_rows,
        "row_start": k.rows.iter().map(|r| r.start).collect::<Vec<_>>(),
        "row_len": k.rows.iter().map(|r| r.values.len()).collect::<Vec<_>>(),
        "extra": extra,
    });
    let data: Vec<Complex<T>> = k.rows.iter().flat_map(|r| r.values.iter().copied()).collect();
    write_container(w, header, dtype, &data)
}

pub fn read_kernel<T: Real>(r: &mut impl Read) -> Result<SampledKernel<T>> {
    let (h, data) = read_container::<T>(r)?;
    kind_check(&h, "sampled_kernel")?;
    let xi = axis_of(&h, "xi")?;
    let eta = axis_of(&h, "eta")?;
    let starts: Vec<usize> = serde_json::from_value(h["row_start"].clone())?;
    let lens: Vec<usize> = serde_json::from_value(h["row_len"].clone())?;
    if starts.len() != xi.len || lens.len() != xi.len || lens.iter().sum::<usize>() != data.len() {
        return Err(Error::InvalidInput("kernel container row table is inconsistent".into()));
    }
    let mut off = 0;
    let mut rows = Vec::with_capacity(xi.len);
    for (s, l) in starts.into_iter().zip(lens) {
        if s + l > eta.len {
            return Err(Error::InvalidInput("kernel row band exceeds the eta axis".into()));
        }
        rows.push(KernelRow { start: s, values: data[off..off + l].to_vec() });
        off += l;
    }
    let path: KernelPath = serde_json::from_value(h["provenance"].clone()).unwrap_or(KernelPath::Input);
    Ok(SampledKernel::from_rows(xi, eta, rows, path))
}

pub fn write_function<T: Real>(w: &mut impl Write, g: &Grid2n<T>, dtype: Dtype) -> Result<()> {
    let header = json!({"type": "sampled_function", "axes": {"x": g.x, "y": g.y}, "dims": [g.x.len, g.y.len]});
    write_container(w, header, dtype, &g.values)
}

pub fn read_function<T: Real>(r: &mut impl Read) -> Result<Grid2n<T>> {
    let (h, values) = read_container::<T>(r)?;
    kind_check(&h, "sampled_function")?;
    let x = axis_of(&h, "x")?;
    let y = axis_of(&h, "y")?;
    if values.len() != x.len * y.len {
        return Err(Error::InvalidInput("function container size does not match its axes".into()));
    }
    Ok(Grid2n { x, y, values })
}

pub fn read_kernel_bin<T: Real>(p: &Path) -> Result<SampledKernel<T>> {
    read_kernel(&mut BufReader::new(File::open(p)?))
}

pub fn read_function_bin<T: Real>(p: &Path) -> Result<Grid2n<T>> {
    read_function(&mut BufReader::new(File::open(p)?))
}

pub fn write_zak<T: Real>(w: &mut impl Write, z: &ZakField<T>, dtype: Dtype, extra: Value) -> Result<()> {
    let header = json!({
        "type": "zak_field",
        "axes": {"xi": z.xi, "eta": z.eta},
        "n_xi_prime": z.n_xi_prime,
        "lattice": z.lattice,
        "truncation": z.truncation,
        "dims": [z.xi.len, z.n_xi_prime, z.eta.len],
        "tail": z.tail,
        "extra": extra,
    });
    write_container(w, header, dtype, &z.values)
}

pub fn read_zak<T: Real>(r: &mut impl Read) -> Result<ZakField<T>> {
    let (h, values) = read_container::<T>(r)?;
    kind_check(&h, "zak_field")?;
    let xi = axis_of(&h, "xi")?;
    let eta = axis_of(&h, "eta")?;
    let n_xi_prime = h["n_xi_prime"].as_u64().unwrap_or(0) as usize;
    if values.len() != xi.len * n_xi_prime * eta.len {
        return Err(Error::InvalidInput("Zak container size does not match its axes".into()));
    }
    Ok(ZakField {
        xi,
        n_xi_prime,
        eta,
        lattice: serde_json::from_value(h["lattice"].clone())?,
        truncation: h["truncation"].as_u64().unwrap_or(0) as usize,
        values,
        tail: serde_json::from_value(h["tail"].clone()).unwrap_or_default(),
    })
}

pub fn write_bracket<T: Real>(w: &mut impl Write, b: &BracketTable<T>, dtype: Dtype, extra: Value) -> Result<()> {
    let header = json!({
        "type": "bracket_table",
        "axes": {"xi": b.xi, "eta": b.eta},
        "n_xi_prime": b.n_xi_prime,
        "lattice": b.lattice,
        "self_bracket": b.self_bracket,
        "input_norms": b.input_norms,
        "dims": [b.xi.len, b.n_xi_prime],
        "extra": extra,
    });
    write_container(w, header, dtype, &b.values)
}

pub fn read_bracket<T: Real>(r: &mut impl Read) -> Result<BracketTable<T>> {
    let (h, values) = read_container::<T>(r)?;
    kind_check(&h, "bracket_table")?;
    let xi = axis_of(&h, "xi")?;
    let n_xi_prime = h["n_xi_prime"].as_u64().unwrap_or(0) as usize;
    if values.len() != xi.len * n_xi_prime {
        return Err(Error::InvalidInput("bracket container size does not match its axes".into()));
    }
    Ok(BracketTable {
        xi,
        n_xi_prime,
        lattice: serde_json::from_value(h["lattice"].clone())?,
        values,
        self_bracket: h["self_bracket"].as_bool().unwrap_or(false),
        input_norms: serde_json::from_value(h["input_norms"].clone())?,
        eta: axis_of(&h, "eta")?,
    })
}

pub fn write_gram(w: &mut impl Write, g: &GramMatrix, dtype: Dtype, extra: Value) -> Result<()> {
    let header = json!({
        "type": "gram_matrix",
        "points": g.points,
        "radius": g.radius,
        "provenance": g.provenance,
        "dims": [g.dim(), g.dim()],
        "extra": extra,
    });
    write_container(w, header, dtype, &g.entries)
}

pub fn read_gram(r: &mut impl Read) -> Result<GramMatrix> {
    let (h, entries) = read_container::<f64>(r)?;
    kind_check(&h, "gram_matrix")?;
    Ok(GramMatrix {
        points: serde_json::from_value(h["points"].clone())?,
        radius: h["radius"].as_i64().unwrap_or(0),
        entries,
        provenance: h["provenance"].as_str().unwrap_or_default().to_string(),
    })
}

/// Gram matrix as JSON: lattice indices and separate real/imaginary matrices.
pub fn gram_json(g: &GramMatrix) -> Value {
    let n = g.dim();
    let re: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|b| g.at(a, b).re).collect()).collect();
    let im: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|b| g.at(a, b).im).collect()).collect();
    let idx: Vec<[i64; 2]> = g.points.iter().map(|p| [p.k[0], p.l[0]]).collect();
    json!({"radius": g.radius, "provenance": g.provenance, "indices": idx, "re": re, "im": im})
}

/// `xi,eta,re,im` for every stored band entry.
pub fn kernel_csv<T: Real>(w: &mut impl Write, k: &SampledKernel<T>) -> Result<()> {
    writeln!(w, "xi,eta,re,im")?;
    for (i, r) in k.rows.iter().enumerate() {
        let xi = k.xi.node_f64(i);
        for (j, v) in r.values.iter().enumerate() {
            writeln!(w, "{},{},{:e},{:e}", xi, k.eta.node_f64(r.start + j), v.re.as_f64(), v.im.as_f64())?;
        }
    }
    Ok(())
}

/// Slice of a Zak field for plotting.
#[derive(Clone, Copy, Debug)]
pub enum ZakSlice {
    /// Fixed `eta` index; rows `xi,xi_prime,re,im`.
    Eta(usize),
    /// Fixed `xi'` index; rows `xi,eta,re,im`.
    XiPrime(usize),
}

pub fn zak_csv<T: Real>(w: &mut impl Write, z: &ZakField<T>, slice: ZakSlice) -> Result<()> {
    match slice {
        ZakSlice::Eta(k) => {
            writeln!(w, "xi,xi_prime,re,im")?;
            for i in 0..z.xi.len {
                for j in 0..z.n_xi_prime {
                    let v = z.at(i, j, k);
                    writeln!(w, "{},{},{:e},{:e}", z.xi.node_f64(i), z.xi_prime(j), v.re.as_f64(), v.im.as_f64())?;
                }
            }
        }
        ZakSlice::XiPrime(j) => {
            writeln!(w, "xi,eta,re,im")?;
            for i in 0..z.xi.len {
                for k in 0..z.eta.len {
                    let v = z.at(i, j, k);
                    writeln!(w, "{},{},{:e},{:e}", z.xi.node_f64(i), z.eta.node_f64(k), v.re.as_f64(), v.im.as_f64())?;
                }
            }
        }
    }
    Ok(())
}

pub fn bracket_csv<T: Real>(w: &mut impl Write, b: &BracketTable<T>) -> Result<()> {
    writeln!(w, "xi,xi_prime,re,im")?;
    for i in 0..b.xi.len {
        for j in 0..b.n_xi_prime {
            let v = b.at(i, j);
            writeln!(w, "{},{},{:e},{:e}", b.xi.node_f64(i), b.xi_prime(j), v.re.as_f64(), v.im.as_f64())?;
        }
    }
    Ok(())
}

/// Open a buffered writer, creating parent directories.
pub fn create(p: &Path) -> Result<BufWriter<File>> {
    if let Some(d) = p.parent() {
        std::fs::create_dir_all(d)?;
    }
    Ok(BufWriter::new(File::create(p)?))
}
