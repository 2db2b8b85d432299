//! On-disk formats: the JSON description of a system and the fixed-format
//! CSV tables the command-line tool emits.
//!
//! A system file looks like
//!
//! ```json
//! { "d": 2,
//!   "maps": [ { "r": [0.6, 0.3], "a": [1, 1] },
//!             { "r": ["3/5", "3/10"], "a": [-1, -1] } ],
//!   "p": [0.5, 0.5] }
//! ```
//!
//! Coefficients are JSON numbers or strings of the form `"num/den"`. The
//! exact rational backend engages only when every slope and offset is an
//! integer literal or a rational string: a decimal like `0.6` parses to the
//! nearest binary float, which is not the rational the author meant, so it
//! never silently becomes one.
//!
//! All CSV numbers are printed with 9 decimal digits so that reruns diff
//! cleanly.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{BoxCountSeries, EntropyCurve, SliceReport};
use crate::ifs::{
    rational_to_f64, AffineMap1, DiagonalIFS, DiagonalMap, RationalDiagonalMap, RationalMap1,
};
use crate::measures::DiscreteMeasure;
use crate::separation::SeparationProfile;

/// One coefficient in a system file: a JSON number, or a rational written
/// as `"num/den"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffValue {
    Number(f64),
    Ratio(String),
}

impl CoeffValue {
    /// The float value of the coefficient.
    pub fn to_f64(&self) -> Result<f64> {
        match self {
            CoeffValue::Number(x) => {
                if !x.is_finite() {
                    return Err(Error::InvalidInput(format!("non-finite coefficient {x}")));
                }
                Ok(*x)
            }
            CoeffValue::Ratio(s) => Ok(rational_to_f64(&parse_ratio(s)?)),
        }
    }

    /// The exact rational value, when the coefficient determines one:
    /// integer literals and rational strings do, other decimals do not.
    pub fn to_rational(&self) -> Result<Option<BigRational>> {
        match self {
            CoeffValue::Number(x) => {
                if x.is_finite() && x.fract() == 0.0 {
                    Ok(BigRational::from_float(*x))
                } else {
                    Ok(None)
                }
            }
            CoeffValue::Ratio(s) => Ok(Some(parse_ratio(s)?)),
        }
    }
}

fn parse_ratio(s: &str) -> Result<BigRational> {
    let (num, den) = s
        .split_once('/')
        .ok_or_else(|| Error::InvalidInput(format!("expected \"num/den\", got {s:?}")))?;
    let num: BigInt = num
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad numerator in {s:?}")))?;
    let den: BigInt = den
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad denominator in {s:?}")))?;
    if den.is_zero() {
        return Err(Error::InvalidInput(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(num, den))
}

/// One map of the system file: per-coordinate slopes `r` and offsets `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapEntry {
    pub r: Vec<CoeffValue>,
    pub a: Vec<CoeffValue>,
}

/// The JSON system description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsFile {
    pub d: usize,
    pub maps: Vec<MapEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<CoeffValue>>,
}

/// Which arithmetic backend a run should use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendChoice {
    /// Exact rationals when every coefficient determines one, floats
    /// otherwise.
    Auto,
    /// Require the rational backend; error if a coefficient doesn't
    /// determine a rational.
    Exact,
    /// Force plain floats even for rational input.
    Float,
}

impl IfsFile {
    pub fn from_json(text: &str) -> Result<IfsFile> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("malformed system file: {e}")))
    }

    /// Build the system, choosing the arithmetic backend per `backend`.
    pub fn build(&self, backend: BackendChoice) -> Result<DiagonalIFS> {
        if self.d == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if self.maps.is_empty() {
            return Err(Error::InvalidInput("system needs at least one map".into()));
        }
        for (i, m) in self.maps.iter().enumerate() {
            if m.r.len() != self.d || m.a.len() != self.d {
                return Err(Error::InvalidInput(format!(
                    "map {} must list {} slopes and {} offsets",
                    i, self.d, self.d
                )));
            }
        }
        if backend != BackendChoice::Float {
            if let Some(maps) = self.rational_maps()? {
                return DiagonalIFS::new_exact(maps);
            }
            if backend == BackendChoice::Exact {
                return Err(Error::InvalidInput(
                    "exact backend requested, but a coefficient is a non-integer \
                     decimal; write it as \"num/den\""
                        .into(),
                ));
            }
        }
        let maps = self
            .maps
            .iter()
            .map(|m| {
                let coords = m
                    .r
                    .iter()
                    .zip(&m.a)
                    .map(|(r, a)| AffineMap1::new(r.to_f64()?, a.to_f64()?))
                    .collect::<Result<Vec<_>>>()?;
                Ok(DiagonalMap { coords })
            })
            .collect::<Result<Vec<_>>>()?;
        DiagonalIFS::new(maps)
    }

    /// The maps as exact rationals, or None as soon as one coefficient
    /// doesn't determine a rational.
    fn rational_maps(&self) -> Result<Option<Vec<RationalDiagonalMap>>> {
        let mut maps = Vec::with_capacity(self.maps.len());
        for m in &self.maps {
            let mut coords = Vec::with_capacity(self.d);
            for (r, a) in m.r.iter().zip(&m.a) {
                match (r.to_rational()?, a.to_rational()?) {
                    (Some(r), Some(a)) => coords.push(RationalMap1::new(r, a)?),
                    _ => return Ok(None),
                }
            }
            maps.push(RationalDiagonalMap::new(coords)?);
        }
        Ok(Some(maps))
    }

    /// The weight vector from the file, if present.
    pub fn weights(&self) -> Result<Option<Vec<f64>>> {
        match &self.p {
            None => Ok(None),
            Some(p) => {
                if p.len() != self.maps.len() {
                    return Err(Error::InvalidInput(format!(
                        "{} weights for {} maps",
                        p.len(),
                        self.maps.len()
                    )));
                }
                Ok(Some(p.iter().map(|v| v.to_f64()).collect::<Result<_>>()?))
            }
        }
    }
}

/// Parse a comma-separated weight list; each entry is a decimal or
/// `num/den`.
pub fn parse_weight_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            if s.contains('/') {
                Ok(rational_to_f64(&parse_ratio(s)?))
            } else {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad weight {s:?}")))
            }
        })
        .collect()
}

/// Fixed 9-decimal rendering used in every CSV cell.
pub fn fmt9(x: f64) -> String {
    format!("{x:.9}")
}

/// CSV table of an entropy curve: step, entropy, rate, and the constant
/// predicted limit.
pub fn curve_csv(curve: &EntropyCurve) -> String {
    let mut out = String::from("n,entropy_bits,rate,target\n");
    let target = curve.target.unwrap_or(f64::NAN);
    for row in &curve.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.n,
            fmt9(row.entropy),
            fmt9(row.rate),
            fmt9(target)
        );
    }
    out
}

/// CSV table of covering counts: level, count, log2(count).
pub fn series_csv(series: &BoxCountSeries) -> String {
    let mut out = String::from("n,count,log2_count\n");
    for row in &series.rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            row.n,
            row.count,
            fmt9((row.count as f64).log2())
        );
    }
    out
}

/// CSV table of a separation profile: level, smallest same-slope distance,
/// and the per-level separation constant.
pub fn profile_csv(profile: &SeparationProfile) -> String {
    let mut out = String::from("n,min_rho,c_n\n");
    for i in 0..profile.levels.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            profile.levels[i],
            fmt9(profile.min_rho[i]),
            fmt9(profile.c_values[i])
        );
    }
    out
}

/// CSV table of a measure: one row per atom, coordinates then mass.
pub fn measure_csv(m: &DiscreteMeasure) -> String {
    let mut out = String::new();
    for j in 0..m.d() {
        let _ = write!(out, "x{},", j + 1);
    }
    out.push_str("mass\n");
    for atom in m.atoms() {
        for x in &atom.point {
            let _ = write!(out, "{},", fmt9(*x));
        }
        let _ = writeln!(out, "{}", fmt9(atom.mass));
    }
    out
}

/// CSV table of slice entropy rates: step, then one rate column per
/// coordinate.
pub fn slice_csv(report: &SliceReport) -> String {
    let mut out = String::from("q");
    for j in 0..report.chi.len() {
        let _ = write!(out, ",rate_{}", j + 1);
    }
    out.push('\n');
    for row in &report.rows {
        let _ = write!(out, "{}", row.q);
        for v in &row.values {
            let _ = write!(out, ",{}", fmt9(*v));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_systems_parse_to_the_float_backend() {
        let file = IfsFile::from_json(
            r#"{ "d": 1, "maps": [ { "r": [0.6], "a": [1] }, { "r": [0.6], "a": [-1] } ] }"#,
        )
        .unwrap();
        let ifs = file.build(BackendChoice::Auto).unwrap();
        assert!(!ifs.has_exact());
        assert_eq!(ifs.map(0).coords[0].slope, 0.6);
        assert_eq!(file.weights().unwrap(), None);
    }

    #[test]
    fn rational_strings_engage_the_exact_backend() {
        let file = IfsFile::from_json(
            r#"{ "d": 2,
                 "maps": [ { "r": ["3/5", "3/10"], "a": [1, 1] },
                           { "r": ["3/5", "3/10"], "a": [-1, -1] } ],
                 "p": ["1/2", 0.5] }"#,
        )
        .unwrap();
        let ifs = file.build(BackendChoice::Auto).unwrap();
        assert!(ifs.has_exact());
        assert!((ifs.map(0).coords[0].slope - 0.6).abs() < 1e-15);
        assert_eq!(file.weights().unwrap(), Some(vec![0.5, 0.5]));
    }

    #[test]
    fn backend_can_be_forced_either_way() {
        let rational = IfsFile::from_json(
            r#"{ "d": 1, "maps": [ { "r": ["1/2"], "a": [1] }, { "r": ["1/2"], "a": [-1] } ] }"#,
        )
        .unwrap();
        assert!(!rational.build(BackendChoice::Float).unwrap().has_exact());
        let decimal = IfsFile::from_json(
            r#"{ "d": 1, "maps": [ { "r": [0.6], "a": [1] }, { "r": [0.6], "a": [-1] } ] }"#,
        )
        .unwrap();
        assert!(matches!(
            decimal.build(BackendChoice::Exact),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn malformed_files_are_rejected() {
        for text in [
            "{",
            r#"{ "d": 1, "maps": [] }"#,
            r#"{ "d": 2, "maps": [ { "r": [0.5], "a": [1, 2] } ] }"#,
            r#"{ "d": 1, "maps": [ { "r": [0.5], "a": [1], "x": 3 } ] }"#,
            r#"{ "d": 1, "maps": [ { "r": ["1/0"], "a": [1] } ] }"#,
            r#"{ "d": 1, "maps": [ { "r": ["a/b"], "a": [1] } ] }"#,
            r#"{ "d": 1, "maps": [ { "r": [1.5], "a": [1] } ] }"#,
            r#"{ "d": 0, "maps": [ { "r": [], "a": [] } ] }"#,
        ] {
            let parsed = IfsFile::from_json(text).and_then(|f| f.build(BackendChoice::Auto));
            assert!(parsed.is_err(), "accepted {text}");
        }
        let file = IfsFile::from_json(
            r#"{ "d": 1, "maps": [ { "r": [0.5], "a": [1] } ], "p": [0.5, 0.5] }"#,
        )
        .unwrap();
        assert!(file.weights().is_err());
    }

    #[test]
    fn weight_lists_accept_decimals_and_ratios() {
        assert_eq!(
            parse_weight_list("0.25, 1/4, 0.5").unwrap(),
            vec![0.25, 0.25, 0.5]
        );
        assert!(parse_weight_list("0.5,oops").is_err());
    }

    #[test]
    fn csv_cells_carry_nine_decimals() {
        assert_eq!(fmt9(1.0), "1.000000000");
        assert_eq!(fmt9(0.123456789123), "0.123456789");
        let m = DiscreteMeasure::new(1, vec![(vec![0.5], 0.5), (vec![-1.0], 0.5)]).unwrap();
        assert_eq!(
            measure_csv(&m),
            "x1,mass\n-1.000000000,0.500000000\n0.500000000,0.500000000\n"
        );
    }
}
