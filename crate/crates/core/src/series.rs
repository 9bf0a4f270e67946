//! Sampled correlation functions on tagged grids, and their CSV form.
//!
//! Every series carries its grid tag, normalization descriptor, and a
//! metadata map that is emitted verbatim as a `#`-prefixed JSON header, so
//! an output file is self-describing and byte-reproducible.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    TauSeconds,
    ZMeters,
    /// Distance in units of the characteristic radius r_c.
    ZOverRc,
    KPerMeter,
    /// Wave number in units of 1/r_c.
    KTimesRc,
    OmegaRadPerSec,
    /// Angular frequency in units of v_g0/r_c.
    OmegaRcOverVg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    /// Normalized to the intensity of the input probe pulse, so that the
    /// lossless pair correlation reads |e^(-iV(z)T) - 1|².
    InputIntensity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub grid_kind: GridKind,
    pub normalization: Normalization,
    /// Grid indices where no value could be computed (e.g. an empty
    /// averaging band); the value there is NaN, never a silent zero.
    pub gaps: Vec<usize>,
    pub metadata: Map<String, Value>,
}

impl CorrelationSeries {
    pub fn new(
        grid: Vec<f64>,
        values: Vec<Complex64>,
        grid_kind: GridKind,
        normalization: Normalization,
    ) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Grid(format!(
                "grid length {} != values length {}",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("grid must be strictly increasing".into()));
        }
        Ok(CorrelationSeries {
            grid,
            values,
            grid_kind,
            normalization,
            gaps: Vec::new(),
            metadata: Map::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: Value) -> Self {
        self.metadata.insert(key.to_string(), value);
        self
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Grid spacing if uniform (within 1 part in 1e9), else None.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.grid.len() < 2 {
            return None;
        }
        let h = self.grid[1] - self.grid[0];
        let ok = self
            .grid
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
        ok.then_some(h)
    }

    /// Header JSON: grid kind, normalization, gaps, and user metadata.
    /// Key order is deterministic (sorted).
    pub fn header_json(&self) -> String {
        let mut map = Map::new();
        map.insert("grid_kind".into(), serde_json::to_value(self.grid_kind).unwrap());
        map.insert(
            "normalization".into(),
            serde_json::to_value(self.normalization).unwrap(),
        );
        map.insert("points".into(), Value::from(self.grid.len()));
        if !self.gaps.is_empty() {
            map.insert("gaps".into(), serde_json::to_value(&self.gaps).unwrap());
        }
        for (k, v) in &self.metadata {
            map.insert(k.clone(), v.clone());
        }
        Value::Object(map).to_string()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {}", self.header_json())?;
        writeln!(w, "grid,re,im")?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{},{},{}", x, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("csv output is valid utf-8")
    }
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + h * i as f64).collect()
}
