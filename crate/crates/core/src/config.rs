//! Model files: TOML with the sections `[parameters]`, `[state_space]`,
//! `[scale]`, `[speed]`, `[boundaries]` and `[market]`.
//!
//! ```toml
//! [parameters]
//! xi = 2.0
//! rho = 3.0
//!
//! [state_space]
//! left = "-inf"
//! right = "inf"
//!
//! [scale]
//! segments = [{ from = "-inf", to = "inf", kind = "affine", slope = 1, intercept = 0 }]
//!
//! [speed]
//! base = "lebesgue"
//! density = [{ from = "-inf", to = "inf", kind = "constant", value = 1 }]
//! atoms = [{ at = "xi", mass = "rho" }]
//!
//! [boundaries]
//! left = "excluded"
//! right = "excluded"
//!
//! [market]
//! start = 1.5
//! rate = 0.05
//! ```
//!
//! Any number may be written as a parameter name, `"inf"` or `"-inf"`.
//! Segment kinds and their fields:
//!
//! | kind | fields |
//! |---|---|
//! | `constant` | `value` |
//! | `affine` | `slope`, `intercept` |
//! | `polynomial` | `coefficients` (list, lowest degree first) |
//! | `power` | `scale`, `shift`, `exponent`, `offset`: `scale·(x − shift)^exponent + offset` |
//! | `svc-distance` | `depth`, `scale`, optional `lo`, `hi` (default 0, 1) |
//! | `svc-distance-integral` | as `svc-distance` |
//! | `inverse-svc-distance-integral` | as `svc-distance`; the inverse function |

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::measures::borel::MAX_SVC_DEPTH;
use crate::measures::SvcSet;
use crate::model::{BoundarySpec, DensityBase, DiffusionSpec, MeasureRepr, Side};
use crate::piecewise::{PiecewiseFn, Segment};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Num {
    Float(f64),
    Int(i64),
    Name(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Field {
    Num(Num),
    List(Vec<Spanned<Num>>),
}

type Table = BTreeMap<String, Spanned<Field>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    #[serde(default)]
    parameters: BTreeMap<String, Spanned<f64>>,
    state_space: StateSpace,
    scale: ScaleSection,
    speed: SpeedSection,
    #[serde(default)]
    boundaries: Boundaries,
    market: Market,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateSpace {
    left: Spanned<Num>,
    right: Spanned<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScaleSection {
    segments: Vec<Spanned<Table>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeedSection {
    #[serde(default)]
    base: Option<Spanned<String>>,
    density: Vec<Spanned<Table>>,
    #[serde(default)]
    atoms: Vec<Spanned<AtomDef>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomDef {
    at: Spanned<Num>,
    mass: Spanned<Num>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Boundaries {
    left: Option<Spanned<String>>,
    right: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Market {
    start: Spanned<Num>,
    #[serde(default)]
    rate: Option<Spanned<Num>>,
}

struct Ctx<'a> {
    path: String,
    text: &'a str,
    params: BTreeMap<String, f64>,
}

impl Ctx<'_> {
    fn line_col(&self, offset: usize) -> (usize, usize) {
        let before = &self.text[..offset.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        (line, col)
    }

    fn err<T>(&self, span: std::ops::Range<usize>, message: impl Into<String>) -> Result<T> {
        let (line, col) = self.line_col(span.start);
        Err(Error::Parse { path: self.path.clone(), line, message: format!("column {col}: {}", message.into()) })
    }

    fn num(&self, v: &Spanned<Num>, field: &str) -> Result<f64> {
        match v.get_ref() {
            Num::Float(x) => Ok(*x),
            Num::Int(i) => Ok(*i as f64),
            Num::Name(s) => match s.trim() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                name => match self.params.get(name) {
                    Some(x) => Ok(*x),
                    None => self.err(v.span(), format!("'{field}' refers to unknown parameter '{name}'")),
                },
            },
        }
    }

    fn field(&self, table: &Spanned<Table>, key: &str) -> Result<f64> {
        match table.get_ref().get(key) {
            Some(f) => match f.get_ref() {
                Field::Num(n) => self.num(&Spanned::new(f.span(), n.clone()), key),
                Field::List(_) => self.err(f.span(), format!("'{key}' must be a number")),
            },
            None => self.err(table.span(), format!("missing field '{key}'")),
        }
    }

    fn field_or(&self, table: &Spanned<Table>, key: &str, default: f64) -> Result<f64> {
        if table.get_ref().contains_key(key) {
            self.field(table, key)
        } else {
            Ok(default)
        }
    }

    fn segment(&self, t: &Spanned<Table>) -> Result<(f64, f64, Segment)> {
        let map = t.get_ref();
        let kind = match map.get("kind").map(|f| f.get_ref()) {
            Some(Field::Num(Num::Name(k))) => k.clone(),
            _ => return self.err(t.span(), "segment needs a string field 'kind'"),
        };
        let from = self.field(t, "from")?;
        let to = self.field(t, "to")?;
        if !(from < to) {
            return self.err(t.span(), format!("segment interval [{from}, {to}] is empty"));
        }
        let allowed: &[&str] = match kind.as_str() {
            "constant" => &["value"],
            "affine" => &["slope", "intercept"],
            "polynomial" => &["coefficients"],
            "power" => &["scale", "shift", "exponent", "offset"],
            "svc-distance" | "svc-distance-integral" | "inverse-svc-distance-integral" => {
                &["depth", "scale", "lo", "hi"]
            }
            other => {
                return self.err(
                    map["kind"].span(),
                    format!(
                        "unknown segment kind '{other}' (expected constant, affine, polynomial, power, svc-distance, \
                         svc-distance-integral or inverse-svc-distance-integral)"
                    ),
                )
            }
        };
        for (k, v) in map {
            if !matches!(k.as_str(), "kind" | "from" | "to") && !allowed.contains(&k.as_str()) {
                return self.err(v.span(), format!("field '{k}' does not apply to a {kind} segment"));
            }
        }
        let svc = |ctx: &Self| -> Result<(SvcSet, f64)> {
            let depth = ctx.field(t, "depth")?;
            if depth.fract() != 0.0 || depth < 1.0 || depth > MAX_SVC_DEPTH as f64 {
                return ctx.err(
                    t.span(),
                    format!("schema violation: 'depth' = {depth} must be an integer in 1..={MAX_SVC_DEPTH}"),
                );
            }
            let (lo, hi) = (ctx.field_or(t, "lo", 0.0)?, ctx.field_or(t, "hi", 1.0)?);
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return ctx.err(t.span(), format!("schema violation: SVC base [{lo}, {hi}] must be a finite interval"));
            }
            Ok((SvcSet { depth: depth as u32, lo, hi }, ctx.field_or(t, "scale", 1.0)?))
        };
        let seg = match kind.as_str() {
            "constant" => Segment::Constant(self.field(t, "value")?),
            "affine" => {
                Segment::Affine { slope: self.field(t, "slope")?, intercept: self.field_or(t, "intercept", 0.0)? }
            }
            "polynomial" => match map.get("coefficients").map(|f| f.get_ref()) {
                Some(Field::List(cs)) => {
                    Segment::Polynomial(cs.iter().map(|c| self.num(c, "coefficients")).collect::<Result<_>>()?)
                }
                _ => return self.err(t.span(), "'coefficients' must be a list of numbers"),
            },
            "power" => Segment::Power {
                scale: self.field_or(t, "scale", 1.0)?,
                shift: self.field_or(t, "shift", 0.0)?,
                exponent: self.field(t, "exponent")?,
                offset: self.field_or(t, "offset", 0.0)?,
            },
            "svc-distance" => {
                let (svc, scale) = svc(self)?;
                Segment::SvcDistance { svc, scale }
            }
            "svc-distance-integral" => {
                let (svc, scale) = svc(self)?;
                Segment::SvcDistanceIntegral { svc, scale }
            }
            _ => {
                let (svc, scale) = svc(self)?;
                Segment::Inverse {
                    inner: Box::new(Segment::SvcDistanceIntegral { svc, scale }),
                    lo: f64::NEG_INFINITY,
                    hi: f64::INFINITY,
                }
            }
        };
        Ok((from, to, seg))
    }

    fn piecewise(&self, list: &[Spanned<Table>], what: &str) -> Result<PiecewiseFn> {
        if list.is_empty() {
            return Err(Error::Parse {
                path: self.path.clone(),
                line: 1,
                message: format!("[{what}] has no segments"),
            });
        }
        let mut breaks = Vec::new();
        let mut segs = Vec::new();
        for t in list {
            let (from, to, seg) = self.segment(t)?;
            if let Some(&last) = breaks.last() {
                if from != last {
                    return self.err(t.span(), format!("segment starts at {from} but the previous one ends at {last}"));
                }
            } else {
                breaks.push(from);
            }
            breaks.push(to);
            segs.push(seg);
        }
        PiecewiseFn::new(breaks, segs).or_else(|e| self.err(list[0].span(), e.to_string()))
    }

    fn boundary(&self, v: &Option<Spanned<String>>, side: Side) -> Result<BoundarySpec> {
        match v {
            None => Ok(BoundarySpec::excluded(side)),
            Some(s) => match s.get_ref().as_str() {
                "excluded" => Ok(BoundarySpec::excluded(side)),
                "absorbing" => Ok(BoundarySpec::absorbing(side)),
                "reflecting" => Ok(BoundarySpec::reflecting(side)),
                other => self.err(s.span(), format!("boundary '{other}' must be excluded, absorbing or reflecting")),
            },
        }
    }
}

/// Parses model-file text; `path` is only used in diagnostics.
pub fn parse_model_str(text: &str, path: &str) -> Result<DiffusionSpec> {
    let file: File = toml::from_str(text).map_err(|e| {
        let (line, col) = match e.span() {
            Some(s) => Ctx { path: String::new(), text, params: BTreeMap::new() }.line_col(s.start),
            None => (1, 1),
        };
        Error::Parse { path: path.to_string(), line, message: format!("column {col}: {}", e.message()) }
    })?;
    let mut ctx = Ctx { path: path.to_string(), text, params: BTreeMap::new() };
    for (k, v) in &file.parameters {
        if matches!(k.as_str(), "inf" | "+inf" | "-inf") {
            return ctx.err(v.span(), format!("parameter name '{k}' is reserved"));
        }
        ctx.params.insert(k.clone(), *v.get_ref());
    }
    let left = ctx.num(&file.state_space.left, "left")?;
    let right = ctx.num(&file.state_space.right, "right")?;
    if !(left < right) {
        return ctx.err(file.state_space.left.span(), format!("state space [{left}, {right}] is empty"));
    }
    let scale = ctx.piecewise(&file.scale.segments, "scale")?;
    let density = ctx.piecewise(&file.speed.density, "speed")?;
    let base = match &file.speed.base {
        None => DensityBase::Lebesgue,
        Some(b) => match b.get_ref().as_str() {
            "lebesgue" => DensityBase::Lebesgue,
            "scale" => DensityBase::Scale,
            other => return ctx.err(b.span(), format!("speed base '{other}' must be lebesgue or scale")),
        },
    };
    let mut atoms = Vec::new();
    for a in &file.speed.atoms {
        let at = ctx.num(&a.get_ref().at, "at")?;
        let mass = ctx.num(&a.get_ref().mass, "mass")?;
        if !(mass > 0.0) || !mass.is_finite() {
            let named = match a.get_ref().mass.get_ref() {
                Num::Name(n) => format!(" (parameter '{n}')"),
                _ => String::new(),
            };
            return ctx.err(
                a.get_ref().mass.span(),
                format!("schema violation: speed atom 'mass'{named} = {mass} must be positive"),
            );
        }
        atoms.push((at, mass));
    }
    let start = ctx.num(&file.market.start, "start")?;
    let rate = match &file.market.rate {
        Some(r) => ctx.num(r, "rate")?,
        None => 0.0,
    };
    if !rate.is_finite() {
        return ctx.err(file.market.rate.as_ref().unwrap().span(), "schema violation: 'rate' must be finite");
    }
    Ok(DiffusionSpec {
        left,
        right,
        left_bc: ctx.boundary(&file.boundaries.left, Side::Left)?,
        right_bc: ctx.boundary(&file.boundaries.right, Side::Right)?,
        scale,
        speed: MeasureRepr { density, base, atoms },
        start,
        rate,
    })
}

pub fn parse_model_file(path: &Path) -> Result<DiffusionSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_model_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arbitrage::build_nu;
    use crate::model::to_natural_scale;

    const BROWNIAN: &str = r#"
[state_space]
left = "-inf"
right = "inf"

[scale]
segments = [{ from = "-inf", to = "inf", kind = "affine", slope = 1, intercept = 0 }]

[speed]
density = [{ from = "-inf", to = "inf", kind = "constant", value = 1 }]

[market]
start = 0
"#;

    fn sticky(rho: &str) -> String {
        format!(
            r#"
[parameters]
xi = 2.0
rho = {rho}

[state_space]
left = "-inf"
right = "inf"

[scale]
segments = [{{ from = "-inf", to = "inf", kind = "affine", slope = 1 }}]

[speed]
base = "lebesgue"
density = [{{ from = "-inf", to = "inf", kind = "constant", value = 1 }}]
atoms = [{{ at = "xi", mass = "rho" }}]

[market]
start = 1.5
rate = 0.05
"#
        )
    }

    #[test]
    fn minimal_brownian_file() {
        let spec = parse_model_str(BROWNIAN, "bm.toml").unwrap();
        assert_eq!(spec.scale.segments()[0], Segment::Affine { slope: 1.0, intercept: 0.0 });
        assert_eq!(spec.rate, 0.0);
        assert!(!spec.left_bc.included());
    }

    #[test]
    fn sticky_file_gives_expected_atom() {
        let spec = parse_model_str(&sticky("3.0"), "sticky.toml").unwrap();
        let b = build_nu(&to_natural_scale(&spec).unwrap()).unwrap();
        assert_eq!(b.nu.atoms().len(), 1);
        assert_eq!(b.nu.atoms()[0].0, 2.0);
        assert!((b.nu.atoms()[0].1 + 0.3).abs() < 1e-15);
    }

    #[test]
    fn negative_mass_names_the_field() {
        let err = parse_model_str(&sticky("-3.0"), "sticky.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mass") && msg.contains("rho"), "{msg}");
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 16),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_and_kind_errors_are_located() {
        let bad = BROWNIAN.replace("kind = \"affine\"", "kind = \"spline\"");
        let msg = parse_model_str(&bad, "m.toml").unwrap_err().to_string();
        assert!(msg.starts_with("m.toml:7:") && msg.contains("spline"), "{msg}");
        let msg = parse_model_str("[state_space\nleft = 1", "m.toml").unwrap_err().to_string();
        assert!(msg.starts_with("m.toml:1:"), "{msg}");
        let msg =
            parse_model_str(&BROWNIAN.replace("start = 0", "start = 0\nspeed = 2"), "m.toml").unwrap_err().to_string();
        assert!(msg.contains("speed"), "{msg}");
    }
}
