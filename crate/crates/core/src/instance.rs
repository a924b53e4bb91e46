//! Instance files.
//!
//! One record per line, whitespace separated `x y r`, meters. The first
//! record is the depot and must carry radius 0. Blank lines and lines
//! starting with `#` are ignored, except a leading `# name: <label>` line
//! which names the instance.
//!
//! ```text
//! # name: ns10
//! 600 400 0
//! 112.5 80 35
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rng::SplitMix64;

const NAME_PREFIX: &str = "# name:";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub id: usize,
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
}

impl Sensor {
    pub fn center(&self) -> Point {
        Point::new(self.center_x, self.center_y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub sensors: Vec<Sensor>,
}

impl Instance {
    /// Builds an instance from `(x, y, r)` triples, the first being the depot.
    pub fn from_records(name: impl Into<String>, records: &[(f64, f64, f64)]) -> Result<Self> {
        let sensors = records
            .iter()
            .enumerate()
            .map(|(id, &(x, y, r))| Sensor {
                id,
                center_x: x,
                center_y: y,
                radius: r,
            })
            .collect();
        let inst = Instance {
            name: name.into(),
            sensors,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensors.is_empty() {
            return Err(Error::Validation("an instance needs at least the depot".into()));
        }
        for (idx, s) in self.sensors.iter().enumerate() {
            if s.id != idx {
                return Err(Error::Validation(format!(
                    "sensor ids must be consecutive, found {} at position {idx}",
                    s.id
                )));
            }
            if !(s.center_x.is_finite() && s.center_y.is_finite() && s.radius.is_finite()) {
                return Err(Error::Validation(format!("sensor {idx} has a non-finite field")));
            }
            if s.radius < 0.0 {
                return Err(Error::Validation(format!("sensor {idx} has a negative radius")));
            }
        }
        if self.sensors[0].radius != 0.0 {
            return Err(Error::Validation("depot radius must be 0".into()));
        }
        Ok(())
    }

    /// Number of nodes including the depot.
    pub fn num_nodes(&self) -> usize {
        self.sensors.len()
    }

    pub fn depot(&self) -> &Sensor {
        &self.sensors[0]
    }

    pub fn centers(&self) -> Vec<Point> {
        self.sensors.iter().map(Sensor::center).collect()
    }

    /// Bounding box of the centers as `(min_x, min_y, max_x, max_y)`.
    pub fn center_bbox(&self) -> (f64, f64, f64, f64) {
        self.sensors.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(x0, y0, x1, y1), s| {
                (
                    x0.min(s.center_x),
                    y0.min(s.center_y),
                    x1.max(s.center_x),
                    y1.max(s.center_y),
                )
            },
        )
    }

    pub fn max_radius(&self) -> f64 {
        self.sensors.iter().map(|s| s.radius).fold(0.0, f64::max)
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    if text.trim().is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "empty instance text".into(),
        });
    }
    let mut name = String::new();
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(NAME_PREFIX) {
            if records.is_empty() {
                name = rest.trim().to_string();
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 fields `x y r`, found {}", fields.len()),
            });
        }
        let mut vals = [0.0; 3];
        for (slot, field) in vals.iter_mut().zip(&fields) {
            *slot = field.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("`{field}` is not a number"),
            })?;
            if !slot.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("`{field}` is not finite"),
                });
            }
        }
        records.push((vals[0], vals[1], vals[2]));
    }
    Instance::from_records(name, &records)
}

/// Formats a coordinate with at most 6 fractional digits and no trailing zeros.
pub(crate) fn format_number(v: f64) -> String {
    let mut s = format!("{v:.6}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    if !inst.name.is_empty() {
        let _ = writeln!(out, "{NAME_PREFIX} {}", inst.name);
    }
    for s in &inst.sensors {
        let _ = writeln!(
            out,
            "{} {} {}",
            format_number(s.center_x),
            format_number(s.center_y),
            format_number(s.radius)
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub sensors: usize,
    pub width: f64,
    pub height: f64,
    pub r_min: f64,
    pub r_max: f64,
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Uniform random instance: depot at the box center, sensors uniform in the
/// box, radii uniform in `[r_min, r_max]`. Values are rounded to 6 decimals
/// so the written file reproduces the instance exactly.
///
/// Draw order per sensor is x, y, r, all from one [`SplitMix64`] stream.
pub fn generate_instance(params: &GeneratorParams, seed: u64) -> Result<Instance> {
    let GeneratorParams {
        sensors,
        width,
        height,
        r_min,
        r_max,
    } = *params;
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(Error::InvalidArgument("bounding box must be positive".into()));
    }
    if !(r_min >= 0.0 && r_min <= r_max && r_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "radius range [{r_min}, {r_max}] is invalid"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut records = Vec::with_capacity(sensors + 1);
    records.push((round6(width / 2.0), round6(height / 2.0), 0.0));
    for _ in 0..sensors {
        let x = round6(rng.uniform(0.0, width));
        let y = round6(rng.uniform(0.0, height));
        let r = round6(rng.uniform(r_min, r_max)).clamp(r_min, r_max);
        records.push((x, y, r));
    }
    Instance::from_records(format!("gen_n{sensors}_s{seed}"), &records)
}
