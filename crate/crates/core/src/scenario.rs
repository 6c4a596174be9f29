//! Scenario files: a JSON schema with exact rationals written as strings.

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::endomorphism::{AffineMap, EquivariantMap, PhaseMap, Phi, Twist};
use crate::error::{Error, Result};
use crate::exact::{parse_rational, Q};
use crate::geometry::{FlatTorusModel, Model, WeightedSphereModel};
use crate::lattice::IntMat;
use crate::mollifier::{DEFAULT_GRID, DEFAULT_RADIUS};
use crate::symbolic::{Generator, Generators, Symbolic, SymbolicFrequency};

pub const SCHEMA_VERSION: u32 = 1;

/// An exact value written as a string (`"-3/7"`, `"1/2 + alpha"`) or an integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exact(pub String);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

struct ExactVisitor;

impl Visitor<'_> for ExactVisitor {
    type Value = Exact;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("an exact number as a string such as \"-3/7\", or an integer")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exact, E> {
        Ok(Exact(v.to_string()))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exact, E> {
        Ok(Exact(v.to_string()))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exact, E> {
        Ok(Exact(v.to_string()))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exact, E> {
        Err(E::custom(format!("floating-point value {v} is not allowed here; write it as an exact string such as \"1/3\"")))
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(ExactVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    pub approx: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    FlatTorus { n: usize, v: Vec<Exact> },
    WeightedSphere { k: usize, weights: Vec<Exact> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Affine { matrix: Vec<Vec<i64>>, translation: Vec<Exact> },
    Phase { turns: Vec<Exact> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSpec {
    pub modulus: Exact,
    pub turns: Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistSpec {
    pub weight: Exact,
    pub phi: PhiSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub formula: f64,
    pub heat: f64,
    pub averaging: f64,
    pub mollifier: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { formula: 1e-9, heat: 1e-8, averaging: 1e-6, mollifier: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierSpec {
    #[serde(default = "default_ks")]
    pub k: Vec<u32>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_ks() -> Vec<u32> {
    vec![8, 16, 32, 64]
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

fn default_radius() -> f64 {
    DEFAULT_RADIUS
}

impl Default for MollifierSpec {
    fn default() -> Self {
        Self { k: default_ks(), grid: default_grid(), radius: default_radius() }
    }
}

fn default_cutoffs() -> Vec<i64> {
    vec![4, 8]
}

fn default_heat_times() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
    pub model: ModelSpec,
    pub map: MapSpec,
    /// Twist of the torus bundles `Λ^q H* ⊗ ℓ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<TwistSpec>,
    /// One line bundle per degree on sphere models.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bundles: Vec<TwistSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_cutoffs")]
    pub cutoffs: Vec<i64>,
    #[serde(default = "default_heat_times")]
    pub heat_times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollifier: Option<MollifierSpec>,
}

/// A scenario turned into computable objects.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub generators: Generators,
    pub model: Model,
    pub map: EquivariantMap,
    pub twist: Option<Twist>,
    pub bundles: Vec<Twist>,
}

impl Resolved {
    /// Bundles in the form the fixed-point formula expects.
    pub fn rhs_bundles(&self) -> Vec<Twist> {
        match &self.model {
            Model::FlatTorus(_) => self.twist.iter().cloned().collect(),
            Model::WeightedSphere(_) => self.bundles.clone(),
        }
    }
}

fn schema_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema { path: path.into(), message: message.into() }
}

fn rational_at(x: &Exact, path: &str) -> Result<Q> {
    parse_rational(&x.0).ok_or_else(|| schema_err(path, format!("`{}` is not a rational number", x.0)))
}

fn symbolic_at(x: &Exact, gens: &Generators, path: &str) -> Result<Symbolic> {
    gens.parse(&x.0).map_err(|e| schema_err(path, e.to_string()))
}

fn twist_at(t: &TwistSpec, gens: &Generators, path: &str) -> Result<Twist> {
    Ok(Twist {
        weight: symbolic_at(&t.weight, gens, &format!("{path}.weight"))?,
        phi: Phi {
            modulus: rational_at(&t.phi.modulus, &format!("{path}.phi.modulus"))?,
            turns: rational_at(&t.phi.turns, &format!("{path}.phi.turns"))?,
        },
    })
}

impl Scenario {
    /// Parses scenario text. Syntax errors carry line and column, type and
    /// value errors the path of the offending field.
    pub fn parse(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let inner = e.inner();
            match inner.classify() {
                serde_json::error::Category::Syntax | serde_json::error::Category::Eof | serde_json::error::Category::Io => {
                    Error::Parse { line: inner.line(), column: inner.column(), message: inner.to_string() }
                }
                serde_json::error::Category::Data => {
                    let path = e.path().to_string();
                    Error::Schema { path: if path == "." { "(root)".into() } else { path }, message: inner.to_string() }
                }
            }
        })?;
        de.end().map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        if scenario.schema != SCHEMA_VERSION {
            return Err(schema_err("schema", format!("unsupported schema version {} (expected {SCHEMA_VERSION})", scenario.schema)));
        }
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenarios serialize")
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let generators = Generators::new(self.generators.iter().map(|g| Generator { name: g.name.clone(), approx: g.approx }).collect());
        for (i, g) in self.generators.iter().enumerate() {
            if !g.approx.is_finite() {
                return Err(schema_err(format!("generators[{i}].approx"), "must be finite"));
            }
        }
        let (model, dim) = match &self.model {
            ModelSpec::FlatTorus { n, v } => {
                if v.len() != *n || *n < 2 {
                    return Err(schema_err("model.flat_torus.v", format!("expected {n} entries with n ≥ 2, found {}", v.len())));
                }
                let entries = v
                    .iter()
                    .enumerate()
                    .map(|(i, x)| symbolic_at(x, &generators, &format!("model.flat_torus.v[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let freq = SymbolicFrequency::new(entries, generators.clone()).map_err(|e| schema_err("model.flat_torus.v", e.to_string()))?;
                let m = FlatTorusModel::new(freq).map_err(|e| schema_err("model.flat_torus.v", e.to_string()))?;
                (Model::FlatTorus(m), *n)
            }
            ModelSpec::WeightedSphere { k, weights } => {
                if weights.len() != *k || *k < 1 {
                    return Err(schema_err("model.weighted_sphere.weights", format!("expected {k} entries, found {}", weights.len())));
                }
                let entries = weights
                    .iter()
                    .enumerate()
                    .map(|(i, x)| symbolic_at(x, &generators, &format!("model.weighted_sphere.weights[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let freq = SymbolicFrequency::new(entries, generators.clone()).map_err(|e| schema_err("model.weighted_sphere.weights", e.to_string()))?;
                let m = WeightedSphereModel::new(freq).map_err(|e| schema_err("model.weighted_sphere.weights", e.to_string()))?;
                (Model::WeightedSphere(m), *k)
            }
        };
        let map = match (&self.map, &model) {
            (MapSpec::Affine { matrix, translation }, Model::FlatTorus(_)) => {
                if matrix.len() != dim {
                    return Err(schema_err("map.affine.matrix", format!("expected {dim} rows, found {}", matrix.len())));
                }
                for (i, row) in matrix.iter().enumerate() {
                    if row.len() != dim {
                        return Err(schema_err(format!("map.affine.matrix[{i}]"), format!("expected {dim} entries, found {}", row.len())));
                    }
                }
                if translation.len() != dim {
                    return Err(schema_err("map.affine.translation", format!("expected {dim} entries, found {}", translation.len())));
                }
                let c = translation
                    .iter()
                    .enumerate()
                    .map(|(i, x)| rational_at(x, &format!("map.affine.translation[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                EquivariantMap::Affine(AffineMap::new(matrix.clone() as IntMat, c))
            }
            (MapSpec::Phase { turns }, Model::WeightedSphere(_)) => {
                if turns.len() != dim {
                    return Err(schema_err("map.phase.turns", format!("expected {dim} entries, found {}", turns.len())));
                }
                let t = turns.iter().enumerate().map(|(i, x)| rational_at(x, &format!("map.phase.turns[{i}]"))).collect::<Result<Vec<_>>>()?;
                EquivariantMap::Phase(PhaseMap::new(t))
            }
            (MapSpec::Affine { .. }, _) => return Err(schema_err("map", "affine maps act on flat_torus models")),
            (MapSpec::Phase { .. }, _) => return Err(schema_err("map", "phase maps act on weighted_sphere models")),
        };
        let twist = self.twist.as_ref().map(|t| twist_at(t, &generators, "twist")).transpose()?;
        let bundles = self
            .bundles
            .iter()
            .enumerate()
            .map(|(i, t)| twist_at(t, &generators, &format!("bundles[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        match model {
            Model::FlatTorus(_) if !bundles.is_empty() => return Err(schema_err("bundles", "torus scenarios take a single `twist`")),
            Model::WeightedSphere(_) if twist.is_some() => return Err(schema_err("twist", "sphere scenarios list one entry per degree in `bundles`")),
            _ => {}
        }
        if self.cutoffs.is_empty() || self.cutoffs.iter().any(|&c| !(1..=64).contains(&c)) {
            return Err(schema_err("cutoffs", "expected a nonempty list of cutoffs in 1..=64"));
        }
        if self.heat_times.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(schema_err("heat_times", "heat times must be positive"));
        }
        Ok(Resolved { generators, model, map, twist, bundles })
    }
}
