//! File formats: CSV tables, JSON reports, surfaces and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xva_pinn_core::geometry::CollocationSet;
use xva_pinn_core::optim::TrajectoryPoint;
use xva_pinn_core::reference::{SolutionSurface, SurfaceMeta};

use crate::error::{CliError, Result};

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value).expect("report serializes") + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// An in-memory CSV table written in one go.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Numbers use the shortest representation that parses back exactly.
    pub fn push(&mut self, cells: impl IntoIterator<Item = f64>) {
        self.push_cells(cells.into_iter().map(|v| v.to_string()));
    }

    pub fn push_cells<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        let row: Vec<String> = cells.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::validation(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_csv()?)
    }
}

/// `axis1`, `axis2`, ... for the spatial coordinates.
pub fn axis_columns(dim: usize) -> Vec<String> {
    (1..=dim).map(|a| format!("axis{a}")).collect()
}

/// `step,total,<one column per region>,lr`.
pub fn trajectory_table(regions: &[String], points: &[&TrajectoryPoint]) -> Table {
    let mut t = Table::new(
        ["step".to_string(), "total".to_string()].into_iter().chain(regions.iter().cloned()).chain(["lr".to_string()]),
    );
    for p in points {
        t.push(std::iter::once(p.step as f64).chain([p.total]).chain(p.terms.iter().copied()).chain([p.lr]));
    }
    t
}

/// Header of comparison tables.
pub fn comparison_header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(axis_columns(dim));
    h.extend(["ref", "approx", "rel_err", "clamped_err"].map(String::from));
    h
}

/// `region,t,axis1[,axis2],weight`.
pub fn grid_table(grid: &CollocationSet) -> Table {
    let dim = grid.domain.spatial_dim();
    let mut t = Table::new(
        ["region".to_string(), "t".to_string()].into_iter().chain(axis_columns(dim)).chain(["weight".to_string()]),
    );
    for r in &grid.regions {
        for (p, w) in r.iter() {
            t.push_cells(std::iter::once(r.id.to_string()).chain(p.iter().chain([&w]).map(|v| v.to_string())));
        }
    }
    t
}

/// Metadata stored next to a surface CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSidecar {
    pub axis_names: Vec<String>,
    pub axes: Vec<Vec<f64>>,
    pub meta: SurfaceMeta,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes `t,axis1[,axis2],value` rows in the surface's storage order and a
/// JSON sidecar with the axes and solver metadata.
pub fn write_surface(path: &Path, surface: &SolutionSurface, axis_names: &[String]) -> Result<usize> {
    let dim = surface.spatial_dim();
    let mut t = Table::new(std::iter::once("t".to_string()).chain(axis_columns(dim)).chain(["value".to_string()]));
    for (i, &v) in surface.values.iter().enumerate() {
        t.push(surface.point(i).into_iter().chain([v]));
    }
    t.write(path)?;
    let sidecar =
        SurfaceSidecar { axis_names: axis_names.to_vec(), axes: surface.axes.clone(), meta: surface.meta.clone() };
    write_json(&sidecar_path(path), &sidecar)?;
    Ok(t.len())
}

pub fn read_surface(path: &Path) -> Result<(SolutionSurface, Vec<String>)> {
    let sidecar: SurfaceSidecar = read_json(&sidecar_path(path))?;
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let n_cols = sidecar.axes.len() + 1;
    let mut values = Vec::new();
    let mut coords = Vec::with_capacity(n_cols);
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != n_cols {
            return Err(CliError::validation(format!(
                "{}: row {row} has {} columns, expected {n_cols}",
                path.display(),
                rec.len()
            )));
        }
        coords.clear();
        for cell in rec.iter() {
            coords.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::validation(format!("{}: row {row}: `{cell}`: {e}", path.display())))?,
            );
        }
        values.push(coords[n_cols - 1]);
        // rows must follow the sidecar's axes in storage order
        let mut rest = values.len() - 1;
        for a in (0..sidecar.axes.len()).rev() {
            let n = sidecar.axes[a].len();
            if n == 0 || sidecar.axes[a][rest % n] != coords[a] {
                return Err(CliError::validation(format!(
                    "{}: row {row} does not match the grid of its sidecar",
                    path.display()
                )));
            }
            rest /= n;
        }
    }
    let surface = SolutionSurface::new(sidecar.axes, values, sidecar.meta)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    Ok((surface, sidecar.axis_names))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub lambda_b: Vec<f64>,
    pub mode: String,
    pub os: String,
    pub arch: String,
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn new(command: &str, config_json: &str) -> Self {
        Manifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: sha256_hex(config_json.as_bytes()),
            seeds: Vec::new(),
            lambda_b: Vec::new(),
            mode: String::new(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            outputs: Vec::new(),
        }
    }

    /// Records the hash of a file already written under `root`.
    pub fn record(&mut self, root: &Path, file: &Path) -> Result<()> {
        let bytes = fs::read(file).map_err(|e| CliError::io(file, e))?;
        let rel = file.strip_prefix(root).unwrap_or(file);
        self.outputs.push(OutputFile { path: rel.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(())
    }

    pub fn write(&mut self, root: &Path) -> Result<()> {
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        write_json(&root.join("manifest.json"), self)
    }
}
