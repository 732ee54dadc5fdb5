//! Built-in weight functions and tabulated weights.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFn};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    /// `m ≡ 1`.
    One,
    /// `sin(3πt)`.
    Sin3Pi,
    /// `cos(2πt)`.
    Cos2Pi,
    /// `1 - 2t`.
    LinearRamp,
    /// Uniform samples on [0, 1], evaluated by linear interpolation.
    Table { name: String, values: Vec<f64> },
}

impl Weight {
    pub const BUILTINS: [Weight; 4] = [Weight::One, Weight::Sin3Pi, Weight::Cos2Pi, Weight::LinearRamp];

    pub fn name(&self) -> &str {
        match self {
            Weight::One => "one",
            Weight::Sin3Pi => "sin3pi",
            Weight::Cos2Pi => "cos2pi",
            Weight::LinearRamp => "linear_ramp",
            Weight::Table { name, .. } => name,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::Sin3Pi => (3.0 * PI * t).sin(),
            Weight::Cos2Pi => (2.0 * PI * t).cos(),
            Weight::LinearRamp => 1.0 - 2.0 * t,
            Weight::Table { values, .. } => {
                let h = 1.0 / (values.len() - 1) as f64;
                crate::grid::interpolate_linear(values, h, t)
            }
        }
    }

    pub fn sample<T: Real>(&self, grid: Grid<T>) -> SampledFn<T> {
        SampledFn::from_fn(grid, |t| T::lit(self.eval(t.to_f64_lossy())))
    }

    /// Loads a `t,value` CSV written by [`SampledFn::write_csv`].
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f: SampledFn<f64> = SampledFn::read_csv(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "table".into());
        Ok(Weight::Table {
            name,
            values: f.into_values(),
        })
    }

    pub fn has_positive_part(&self) -> bool {
        self.probe().iter().any(|&v| v > 0.0)
    }

    pub fn has_negative_part(&self) -> bool {
        self.probe().iter().any(|&v| v < 0.0)
    }

    fn probe(&self) -> Vec<f64> {
        (1..1000).map(|i| self.eval(i as f64 / 1000.0)).collect()
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Weight {
    type Err = Error;

    /// Builtin name, or a path to a CSV table.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(Weight::One),
            "sin3pi" => Ok(Weight::Sin3Pi),
            "cos2pi" => Ok(Weight::Cos2Pi),
            "linear_ramp" => Ok(Weight::LinearRamp),
            path if Path::new(path).is_file() => Weight::from_csv(path),
            other => Err(Error::InvalidInput(format!(
                "unknown weight '{other}' (expected one, sin3pi, cos2pi, linear_ramp or a CSV path)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names_round_trip() {
        for w in Weight::BUILTINS {
            assert_eq!(w.name().parse::<Weight>().unwrap(), w);
        }
        assert!("nope".parse::<Weight>().is_err());
    }

    #[test]
    fn sign_structure() {
        assert!(Weight::One.has_positive_part() && !Weight::One.has_negative_part());
        for w in [Weight::Sin3Pi, Weight::Cos2Pi, Weight::LinearRamp] {
            assert!(w.has_positive_part() && w.has_negative_part(), "{w}");
        }
    }

    #[test]
    fn csv_table_round_trip() {
        let dir = std::env::temp_dir().join(format!("beamspec-weight-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ramp.csv");
        let g: Grid<f64> = Grid::new(20).unwrap();
        Weight::LinearRamp.sample(g).write_csv(&path).unwrap();
        let w = Weight::from_csv(&path).unwrap();
        assert_eq!(w.name(), "ramp");
        for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
            assert!((w.eval(t) - (1.0 - 2.0 * t)).abs() < 1e-12);
        }
        std::fs::remove_dir_all(dir).ok();
    }
}
