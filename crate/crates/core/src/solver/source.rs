use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named builtin right-hand sides. Every builtin is continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Builtin {
    Const {
        value: f64,
    },
    /// `left` below `at - width/2`, `right` above `at + width/2`, linear ramp between.
    Step {
        at: f64,
        left: f64,
        right: f64,
        width: f64,
    },
    /// `offset + amplitude sin(frequency r + phase)`.
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `offset + coef r^exponent`, `exponent >= 0`.
    Power {
        coef: f64,
        exponent: f64,
        #[serde(default)]
        offset: f64,
    },
}

/// Right-hand side `f(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SourceFunction {
    Constant {
        value: f64,
    },
    /// Piecewise-linear table, extended by constants outside its range. The
    /// table is given inline or as a CSV file with header `r,f`.
    Tabulated {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        r: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        f: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
    Expression {
        builtin: Builtin,
    },
}

impl SourceFunction {
    pub fn constant(value: f64) -> Self {
        SourceFunction::Constant { value }
    }

    pub fn table(r: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let s = SourceFunction::Tabulated { r, f, path: None };
        s.validate()?;
        Ok(s)
    }

    pub fn builtin(builtin: Builtin) -> Self {
        SourceFunction::Expression { builtin }
    }

    /// Reads a file-backed table, resolving relative paths against `base`.
    pub fn load(&self, base: &Path) -> Result<Self> {
        let SourceFunction::Tabulated { path: Some(path), .. } = self else {
            return Ok(self.clone());
        };
        let full = if path.is_absolute() { path.clone() } else { base.join(path) };
        let mut reader = csv::Reader::from_path(&full)
            .map_err(|e| Error::Config(format!("cannot read table {}: {e}", full.display())))?;
        let headers = reader.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["r", "f"] {
            return Err(Error::Config(format!("{}: expected header r,f", full.display())));
        }
        let (mut r, mut f) = (Vec::new(), Vec::new());
        for record in reader.records() {
            let record = record?;
            let parse = |k: usize| -> Result<f64> {
                record[k]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{}: bad number {:?}", full.display(), &record[k])))
            };
            r.push(parse(0)?);
            f.push(parse(1)?);
        }
        Self::table(r, f)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match self {
            SourceFunction::Constant { value } if !value.is_finite() => bad("constant f must be finite".into()),
            SourceFunction::Constant { .. } => Ok(()),
            SourceFunction::Tabulated { r, f, path } => {
                if r.is_empty() && path.is_some() {
                    return bad("tabulated f from a file must be loaded before use".into());
                }
                if r.is_empty() || r.len() != f.len() {
                    return bad(format!("table needs matching nonempty columns, got {} and {}", r.len(), f.len()));
                }
                if r.windows(2).any(|w| !(w[1] > w[0])) || r.iter().chain(f).any(|v| !v.is_finite()) {
                    return bad("table abscissae must be finite and strictly increasing".into());
                }
                Ok(())
            }
            SourceFunction::Expression { builtin } => {
                let finite = match builtin {
                    Builtin::Const { value } => value.is_finite(),
                    Builtin::Step { at, left, right, width } => {
                        if !(*width > 0.0) {
                            return bad("step width must be positive".into());
                        }
                        [at, left, right, width].iter().all(|v| v.is_finite())
                    }
                    Builtin::Sine { amplitude, frequency, phase, offset } => {
                        [amplitude, frequency, phase, offset].iter().all(|v| v.is_finite())
                    }
                    Builtin::Power { coef, exponent, offset } => {
                        if !(*exponent >= 0.0) {
                            return bad("power exponent must be nonnegative".into());
                        }
                        [coef, exponent, offset].iter().all(|v| v.is_finite())
                    }
                };
                if finite {
                    Ok(())
                } else {
                    bad("builtin parameters must be finite".into())
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SourceFunction::Constant { value } => *value,
            SourceFunction::Tabulated { r, f, .. } => {
                if x <= r[0] {
                    return f[0];
                }
                let last = r.len() - 1;
                if x >= r[last] {
                    return f[last];
                }
                let k = r.partition_point(|&t| t <= x) - 1;
                let t = (x - r[k]) / (r[k + 1] - r[k]);
                f[k] + t * (f[k + 1] - f[k])
            }
            SourceFunction::Expression { builtin } => match *builtin {
                Builtin::Const { value } => value,
                Builtin::Step { at, left, right, width } => {
                    let t = ((x - at) / width + 0.5).clamp(0.0, 1.0);
                    left + t * (right - left)
                }
                Builtin::Sine { amplitude, frequency, phase, offset } => {
                    offset + amplitude * (frequency * x + phase).sin()
                }
                Builtin::Power { coef, exponent, offset } => offset + coef * x.abs().powf(exponent),
            },
        }
    }

    pub fn sample(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&r| self.eval(r)).collect()
    }

    /// `sup |f|` over `[lo, hi]`, exact for every supported kind.
    pub fn sup_norm(&self, lo: f64, hi: f64) -> f64 {
        let mut points = vec![lo, hi];
        match self {
            SourceFunction::Constant { .. } => {}
            SourceFunction::Tabulated { r, .. } => points.extend(r.iter().copied()),
            SourceFunction::Expression { builtin } => match *builtin {
                Builtin::Const { .. } | Builtin::Power { .. } => {}
                Builtin::Step { at, width, .. } => points.extend([at - width / 2.0, at + width / 2.0]),
                Builtin::Sine { frequency, phase, .. } => {
                    // Extrema at frequency r + phase = pi/2 + k pi.
                    if frequency != 0.0 {
                        let pi = std::f64::consts::PI;
                        let k_of = |x: f64| (frequency * x + phase - pi / 2.0) / pi;
                        let (ka, kb) = (k_of(lo), k_of(hi));
                        let (k0, k1) = (ka.min(kb).ceil() as i64, ka.max(kb).floor() as i64);
                        if k1 >= k0 {
                            points.extend((k0..=k1.min(k0 + 1)).map(|k| (pi / 2.0 + k as f64 * pi - phase) / frequency));
                        }
                    }
                }
            },
        }
        points
            .into_iter()
            .filter(|&x| x >= lo && x <= hi)
            .map(|x| self.eval(x).abs())
            .fold(0.0, f64::max)
    }

    /// `f + delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        match self {
            SourceFunction::Constant { value } => SourceFunction::Constant { value: value + delta },
            SourceFunction::Tabulated { r, f, path } => SourceFunction::Tabulated {
                r: r.clone(),
                f: f.iter().map(|v| v + delta).collect(),
                path: path.clone(),
            },
            SourceFunction::Expression { builtin } => SourceFunction::Expression {
                builtin: match *builtin {
                    Builtin::Const { value } => Builtin::Const { value: value + delta },
                    Builtin::Step { at, left, right, width } => Builtin::Step {
                        at,
                        left: left + delta,
                        right: right + delta,
                        width,
                    },
                    Builtin::Sine { amplitude, frequency, phase, offset } => Builtin::Sine {
                        amplitude,
                        frequency,
                        phase,
                        offset: offset + delta,
                    },
                    Builtin::Power { coef, exponent, offset } => Builtin::Power {
                        coef,
                        exponent,
                        offset: offset + delta,
                    },
                },
            },
        }
    }
}
