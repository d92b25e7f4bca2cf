//! On-disk artifacts. Every file starts with `# key=value` header lines
//! (JSON sidecars carry the same keys as fields) so its provenance survives
//! being copied out of a run directory.

use std::fmt::Write;

use serde_json::{Map, Value};

use crate::distribution::{format_f64, Distribution, Distribution2D, Protocol};
use crate::error::Result;
use crate::spectral::{Spectrum, Spectrum2D};

#[derive(Clone, Debug, PartialEq)]
pub enum ArtifactData {
    Distribution(Distribution),
    Grid(Distribution2D),
    Spectrum(Spectrum),
    Spectrum2D { protocol: Protocol, spectrum: Spectrum2D },
    Table { protocol: Protocol, columns: Vec<String>, rows: Vec<Vec<String>> },
    Json { protocol: Protocol, value: Value },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    /// File stem, unique within one command's output.
    pub name: String,
    pub data: ArtifactData,
}

impl Artifact {
    pub fn new(name: impl Into<String>, data: ArtifactData) -> Self {
        Artifact { name: name.into(), data }
    }

    pub fn table(name: impl Into<String>, protocol: Protocol, columns: &[&str], rows: Vec<Vec<String>>) -> Self {
        let columns = columns.iter().map(|c| c.to_string()).collect();
        Artifact::new(name, ArtifactData::Table { protocol, columns, rows })
    }

    pub fn protocol(&self) -> Protocol {
        match &self.data {
            ArtifactData::Distribution(d) => d.protocol(),
            ArtifactData::Grid(g) => g.protocol(),
            ArtifactData::Spectrum(_) => Protocol::Quantum1d,
            ArtifactData::Spectrum2D { protocol, .. }
            | ArtifactData::Table { protocol, .. }
            | ArtifactData::Json { protocol, .. } => *protocol,
        }
    }

    /// `(file name, contents)` pairs; `meta` is written into every file
    /// alongside the protocol tag.
    pub fn render(&self, meta: &[(&str, String)]) -> Result<Vec<(String, String)>> {
        let mut meta: Vec<(&str, String)> = meta.to_vec();
        meta.push(("protocol", self.protocol().tag().to_string()));
        let header = |out: &mut String| {
            for (k, v) in &meta {
                let _ = writeln!(out, "# {k}={v}");
            }
        };
        let csv = format!("{}.csv", self.name);
        Ok(match &self.data {
            ArtifactData::Distribution(d) => vec![(csv, d.to_csv_with_meta(&meta))],
            ArtifactData::Grid(g) => {
                let mut out = String::new();
                header(&mut out);
                out.push_str(&g.to_csv());
                vec![(csv, out), (self.sidecar_name(), sidecar(serde_json::to_value(g.sidecar())?, &meta)?)]
            }
            ArtifactData::Spectrum2D { spectrum, .. } => {
                let mut out = String::new();
                header(&mut out);
                out.push_str(&spectrum.to_csv());
                vec![(csv, out), (self.sidecar_name(), sidecar(serde_json::to_value(spectrum.sidecar())?, &meta)?)]
            }
            ArtifactData::Spectrum(s) => {
                let mut out = String::new();
                header(&mut out);
                let _ = writeln!(out, "# n_steps={}", s.n_steps());
                out.push_str(&s.to_csv());
                vec![(csv, out)]
            }
            ArtifactData::Table { columns, rows, .. } => {
                let mut out = String::new();
                header(&mut out);
                out.push_str(&columns.join(","));
                out.push('\n');
                for r in rows {
                    out.push_str(&r.join(","));
                    out.push('\n');
                }
                vec![(csv, out)]
            }
            ArtifactData::Json { value, .. } => {
                let mut obj = Map::new();
                for (k, v) in &meta {
                    obj.insert(k.to_string(), Value::String(v.clone()));
                }
                obj.insert("data".into(), value.clone());
                vec![(format!("{}.json", self.name), serde_json::to_string_pretty(&Value::Object(obj))? + "\n")]
            }
        })
    }

    fn sidecar_name(&self) -> String {
        format!("{}.json", self.name)
    }
}

/// Sidecar fields with the header keys merged in.
fn sidecar(value: Value, meta: &[(&str, String)]) -> Result<String> {
    let mut side = match value {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    for (k, v) in meta {
        side.insert(k.to_string(), Value::String(v.clone()));
    }
    Ok(serde_json::to_string_pretty(&Value::Object(side))? + "\n")
}

/// CSV cell for a float, round-trippable.
pub fn cell(v: f64) -> String {
    format_f64(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::GridSidecar;
    use crate::{walk1d, walk2d};

    fn meta() -> Vec<(&'static str, String)> {
        vec![("tool", "qwalk 0.0.0".into()), ("config", "abc".into())]
    }

    #[test]
    fn distribution_round_trips_with_header() {
        let d = walk1d::distribution(20);
        let files = Artifact::new("d", ArtifactData::Distribution(d.clone())).render(&meta()).unwrap();
        assert_eq!(files[0].0, "d.csv");
        assert!(files[0].1.contains("# config=abc\n# protocol=quantum-1d\n"));
        assert_eq!(Distribution::from_csv(&files[0].1).unwrap(), d);
    }

    #[test]
    fn grid_sidecar_keeps_schema() {
        let g = walk2d::aqw_walk(3);
        let files = Artifact::new("g", ArtifactData::Grid(g.clone())).render(&meta()).unwrap();
        let side: GridSidecar = serde_json::from_str(&files[1].1).unwrap();
        assert_eq!(side, g.sidecar());
        assert!(files[1].1.contains("\"config\": \"abc\""));
        assert_eq!(Distribution2D::from_csv(&files[0].1, &side).unwrap(), g);
    }

    #[test]
    fn table_layout() {
        let a = Artifact::table("t", Protocol::Classical1d, &["a", "b"], vec![vec!["1".into(), "2".into()]]);
        let (_, body) = &a.render(&[]).unwrap()[0];
        assert_eq!(body, "# protocol=classical-1d\na,b\n1,2\n");
    }
}
