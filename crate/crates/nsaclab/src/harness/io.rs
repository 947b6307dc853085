//! Artifact I/O: CSV tables, the self-describing binary field container,
//! run manifests and reproducible random streams.

use crate::field::{BoundaryTag, Grid2, ScalarField2D};
use crate::geometry::Interface;
use crate::harness::HarnessError;
use ndarray::Array2;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::Path;

/// Counter-based random stream: one keyed generator per (seed, stream) pair,
/// reproducible regardless of scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ---------------------------------- manifest ---------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub tool_version: String,
    pub kind: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn config_hash(config: &crate::harness::RunConfig) -> String {
    let canonical = config.canonical_toml();
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_manifest(out_dir: &Path, manifest: &Manifest) -> Result<(), HarnessError> {
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(path, text)?;
    Ok(())
}

// ------------------------------------ CSV ------------------------------------

/// Write a CSV table with a fixed float format so identical runs produce
/// bit-identical bodies.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<(), HarnessError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "{header}")?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(file, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_interface_csv(path: &Path, iface: &Interface) -> Result<(), HarnessError> {
    let n = iface.node_count();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let s = j as f64 / n as f64;
            let p = iface.nodes()[j];
            vec![s, p[0], p[1]]
        })
        .collect();
    write_csv(path, "s,x,y", &rows)
}

pub fn read_interface_csv(path: &Path) -> Result<Interface, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let mut nodes = vec![];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || lineno == 0 && line.starts_with('s') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(HarnessError::Config(format!(
                "{}: line {} has {} columns, expected 3",
                path.display(),
                lineno + 1,
                cols.len()
            )));
        }
        let x: f64 = cols[1]
            .trim()
            .parse()
            .map_err(|e| HarnessError::Config(format!("bad x at line {}: {e}", lineno + 1)))?;
        let y: f64 = cols[2]
            .trim()
            .parse()
            .map_err(|e| HarnessError::Config(format!("bad y at line {}: {e}", lineno + 1)))?;
        nodes.push([x, y]);
    }
    Interface::new(nodes, 0.0).map_err(HarnessError::Geometry)
}

/// Dump a transition profile as (rho, value, derivative) rows.
pub fn write_profile_csv(path: &Path, p: &crate::profile::Profile) -> Result<(), HarnessError> {
    let rows: Vec<Vec<f64>> = (0..p.grid.n)
        .map(|i| vec![p.grid.node(i), p.values[i], p.deriv[i]])
        .collect();
    write_csv(path, "rho,value,derivative", &rows)
}

/// Dump a height-function history as (s, t, h) rows.
pub fn write_height_csv(
    path: &Path,
    hist: &crate::expansion::HeightFunction,
) -> Result<(), HarnessError> {
    let mut rows = vec![];
    for (k, t) in hist.times.iter().enumerate() {
        let snap = &hist.snapshots[k];
        let n = snap.len();
        for j in 0..n {
            rows.push(vec![j as f64 / n as f64, *t, snap.values[j]]);
        }
    }
    write_csv(path, "s,t,h", &rows)
}

// ----------------------------- binary field format ---------------------------

const FIELD_MAGIC: &[u8; 4] = b"NSLB";
const FIELD_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    x0: f64,
    y0: f64,
    offset: f64,
    bc: String,
    time: f64,
}

/// Self-describing binary snapshot: magic, version, JSON header, f64 LE data.
pub fn write_field(path: &Path, field: &ScalarField2D, time: f64) -> Result<(), HarnessError> {
    let g = field.grid;
    let header = FieldHeader {
        nx: g.nx,
        ny: g.ny,
        lx: g.lx,
        ly: g.ly,
        x0: g.x0,
        y0: g.y0,
        offset: g.offset,
        bc: match field.bc {
            BoundaryTag::Periodic => "periodic".to_string(),
            BoundaryTag::DirichletConst(v) => format!("dirichlet:{v}"),
        },
        time,
    };
    let header_json = serde_json::to_vec(&header).expect("header serializes");
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(FIELD_MAGIC)?;
    file.write_all(&FIELD_VERSION.to_le_bytes())?;
    file.write_all(&(header_json.len() as u64).to_le_bytes())?;
    file.write_all(&header_json)?;
    for v in field.data.iter() {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(ScalarField2D, f64), HarnessError> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(HarnessError::Config("not a field container".into()));
    }
    let mut word = [0u8; 4];
    file.read_exact(&mut word)?;
    if u32::from_le_bytes(word) != FIELD_VERSION {
        return Err(HarnessError::Config("unsupported field version".into()));
    }
    let mut len8 = [0u8; 8];
    file.read_exact(&mut len8)?;
    let header_len = u64::from_le_bytes(len8) as usize;
    let mut header_buf = vec![0u8; header_len];
    file.read_exact(&mut header_buf)?;
    let header: FieldHeader = serde_json::from_slice(&header_buf)
        .map_err(|e| HarnessError::Config(format!("bad field header: {e}")))?;
    let n = header.nx * header.ny;
    let mut data = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        file.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    let grid = Grid2 {
        nx: header.nx,
        ny: header.ny,
        lx: header.lx,
        ly: header.ly,
        x0: header.x0,
        y0: header.y0,
        offset: header.offset,
    };
    let bc = if header.bc == "periodic" {
        BoundaryTag::Periodic
    } else if let Some(v) = header.bc.strip_prefix("dirichlet:") {
        BoundaryTag::DirichletConst(
            v.parse()
                .map_err(|e| HarnessError::Config(format!("bad bc value: {e}")))?,
        )
    } else {
        return Err(HarnessError::Config(format!("unknown bc tag {}", header.bc)));
    };
    Ok((
        ScalarField2D {
            grid,
            data: Array2::from_shape_vec((header.nx, header.ny), data).expect("shape"),
            bc,
        },
        header.time,
    ))
}
