//! Synthetic distributions with ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::atlas::{AtlasPropertySpec, SupportSize};
use crate::decomposable::{Property, PropertySpec};
use crate::error::{invalid, Error, Result};
use crate::model::{bias, l1_to_uniform, Distribution, DistributionFile};

/// The generator families. Parsed from `uniform`, `point-mass:<i>`, `zipf:<a>`, `khist:<k>`,
/// `staircase:<levels>`, `half-heavy:<eps>`, `far-from-monotone:<period>:<amplitude>` and
/// `support:<s0>`; mixtures and explicit vectors only come from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    Uniform,
    PointMass { index: usize },
    /// `mu(i) ∝ i^-a`.
    Zipf { a: f64 },
    /// Random `k`-histogram with random breakpoints and levels.
    KHistogram { k: usize },
    /// `levels` equal blocks with weights `levels, levels-1, ..., 1`.
    Staircase { levels: usize },
    /// First half at `(1+eps)/n`, second half at `(1-eps)/n`.
    HalfHeavy { epsilon: f64 },
    /// Increasing ramps `1 - a, ..., 1 + a` repeated every `period` elements.
    FarFromMonotone { period: usize, amplitude: f64 },
    /// Random weights on `s0` random elements.
    SupportLimited { s0: usize },
    Mixture { components: Vec<MixtureComponent> },
    /// A given probability vector of length `n`.
    Explicit { p: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    #[serde(flatten)]
    pub kind: GeneratorKind,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let bad = || invalid(format!("cannot parse generator '{s}'"));
        let num = |i: usize| -> Result<f64> { args.get(i).and_then(|a| a.parse::<f64>().ok()).ok_or_else(bad) };
        let int = |i: usize| -> Result<usize> { args.get(i).and_then(|a| a.parse::<usize>().ok()).ok_or_else(bad) };
        let arity = |k: usize| if args.len() == k { Ok(()) } else { Err(bad()) };
        match name {
            "uniform" => arity(0).map(|_| GeneratorKind::Uniform),
            "point-mass" => arity(1).and(Ok(GeneratorKind::PointMass { index: int(0)? })),
            "zipf" => arity(1).and(Ok(GeneratorKind::Zipf { a: num(0)? })),
            "khist" => arity(1).and(Ok(GeneratorKind::KHistogram { k: int(0)? })),
            "staircase" => arity(1).and(Ok(GeneratorKind::Staircase { levels: int(0)? })),
            "half-heavy" => arity(1).and(Ok(GeneratorKind::HalfHeavy { epsilon: num(0)? })),
            "far-from-monotone" => {
                arity(2).and(Ok(GeneratorKind::FarFromMonotone { period: int(0)?, amplitude: num(1)? }))
            }
            "support" => arity(1).and(Ok(GeneratorKind::SupportLimited { s0: int(0)? })),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Exact facts about a generated distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    /// ℓ1 distance to uniform.
    pub d_uniform: f64,
    /// `max/min - 1`; infinite with zeros, serialized as null.
    pub bias: f64,
    pub support: usize,
    /// Distances to shipped properties that the family fixes in closed form, keyed by property
    /// name.
    pub distances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generated {
    pub distribution: Distribution,
    pub annotations: Annotations,
}

fn weights(kind: &GeneratorKind, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    Ok(match kind {
        GeneratorKind::Uniform => vec![1.0; n],
        GeneratorKind::PointMass { index } => Distribution::point_mass(n, *index)?.probs().to_vec(),
        GeneratorKind::Zipf { a } => {
            if !a.is_finite() || *a < 0.0 {
                return Err(invalid(format!("zipf exponent must be non-negative, got {a}")));
            }
            (1..=n).map(|i| (i as f64).powf(-a)).collect()
        }
        GeneratorKind::KHistogram { k } => Property::KHistogram(*k).member(n, seed)?.probs().to_vec(),
        GeneratorKind::Staircase { levels } => {
            if *levels == 0 || *levels > n {
                return Err(invalid(format!("staircase needs 1 <= levels <= n, got {levels}")));
            }
            (0..n).map(|i| (levels - i * levels / n) as f64).collect()
        }
        GeneratorKind::HalfHeavy { epsilon } => {
            if !(0.0..=1.0).contains(epsilon) || n % 2 != 0 {
                return Err(invalid(format!("half-heavy needs eps in [0, 1] and even n, got {epsilon}, {n}")));
            }
            (0..n).map(|i| if i < n / 2 { 1.0 + epsilon } else { 1.0 - epsilon }).collect()
        }
        GeneratorKind::FarFromMonotone { period, amplitude } => {
            if *period < 2 || !(0.0..=1.0).contains(amplitude) {
                return Err(invalid("far-from-monotone needs period >= 2 and amplitude in [0, 1]"));
            }
            (0..n)
                .map(|i| 1.0 + amplitude * (2.0 * (i % period) as f64 / (period - 1) as f64 - 1.0))
                .collect()
        }
        GeneratorKind::SupportLimited { s0 } => SupportSize { s0: *s0 }.member(n, seed)?.probs().to_vec(),
        GeneratorKind::Mixture { components } => {
            if components.is_empty() || components.iter().any(|c| !(c.weight >= 0.0)) {
                return Err(invalid("a mixture needs components with non-negative weights"));
            }
            let mut w = vec![0.0; n];
            for (j, c) in components.iter().enumerate() {
                let part = Distribution::from_weights(weights(&c.kind, n, seed.wrapping_add(j as u64 + 1))?)?;
                w.iter_mut().zip(part.probs()).for_each(|(x, p)| *x += c.weight * p);
            }
            w
        }
        GeneratorKind::Explicit { p } => {
            if p.len() != n {
                return Err(Error::DimensionMismatch { left: n, right: p.len() });
            }
            p.clone()
        }
    })
}

/// Builds the distribution, deterministic in `spec.seed`, with its annotations.
pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    let distribution = Distribution::from_weights(weights(&spec.kind, spec.n, spec.seed)?)?;
    let p = distribution.probs();
    let mut distances = BTreeMap::new();
    match &spec.kind {
        GeneratorKind::Uniform => {
            distances.insert(Property::Uniform.name(), 0.0);
            distances.insert(Property::Monotone.name(), 0.0);
        }
        GeneratorKind::Zipf { .. } => {
            distances.insert(Property::Monotone.name(), 0.0);
        }
        GeneratorKind::KHistogram { k } => {
            distances.insert(Property::KHistogram(*k).name(), 0.0);
        }
        GeneratorKind::Staircase { levels } => {
            distances.insert(Property::KHistogram(*levels).name(), 0.0);
            distances.insert(Property::Monotone.name(), 0.0);
        }
        GeneratorKind::HalfHeavy { epsilon } => {
            distances.insert(Property::Uniform.name(), *epsilon);
            distances.insert(Property::KHistogram(2).name(), 0.0);
        }
        GeneratorKind::SupportLimited { s0 } => {
            distances.insert(SupportSize { s0: *s0 }.name(), 0.0);
        }
        _ => {}
    }
    let annotations = Annotations {
        d_uniform: l1_to_uniform(p),
        bias: bias(p),
        support: p.iter().filter(|&&x| x > 0.0).count(),
        distances,
    };
    Ok(Generated { distribution, annotations })
}

/// Reads a distribution file: either `{ "n": .., "p": [..] }` or a generator spec
/// `{ "kind": .., "n": .., .. }`.
pub fn parse_distribution_source(text: &str) -> Result<GeneratorSpec> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("kind").is_some() {
        return Ok(serde_json::from_value(value)?);
    }
    let file: DistributionFile = serde_json::from_value(value)?;
    Ok(GeneratorSpec { kind: GeneratorKind::Explicit { p: file.p }, n: file.n, seed: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposable::distance_to_k_histogram;

    fn gen(kind: GeneratorKind, n: usize) -> Generated {
        generate(&GeneratorSpec { kind, n, seed: 3 }).unwrap()
    }

    #[test]
    fn closed_forms_hold() {
        let u = gen(GeneratorKind::Uniform, 64);
        assert_eq!((u.annotations.d_uniform, u.annotations.bias), (0.0, 0.0));
        let h = gen(GeneratorKind::HalfHeavy { epsilon: 0.25 }, 64);
        assert!((h.annotations.d_uniform - 0.25).abs() < 1e-12);
        assert!((h.annotations.bias - (1.25 / 0.75 - 1.0)).abs() < 1e-12);
        let k = gen(GeneratorKind::KHistogram { k: 5 }, 200);
        assert!(distance_to_k_histogram(&k.distribution, 5).unwrap() < 1e-12);
        let s = gen(GeneratorKind::Staircase { levels: 4 }, 64);
        assert_eq!(s.distribution.prob(1) / s.distribution.prob(64), 4.0);
        assert_eq!(gen(GeneratorKind::SupportLimited { s0: 7 }, 50).annotations.support, 7);
    }

    #[test]
    fn parses_and_round_trips() {
        let k: GeneratorKind = "far-from-monotone:2:1".parse().unwrap();
        assert_eq!(k, GeneratorKind::FarFromMonotone { period: 2, amplitude: 1.0 });
        assert!("zipf".parse::<GeneratorKind>().is_err());
        assert!("wave:3".parse::<GeneratorKind>().is_err());
        let spec = GeneratorSpec {
            kind: GeneratorKind::Mixture {
                components: vec![
                    MixtureComponent { weight: 0.9, kind: GeneratorKind::Uniform },
                    MixtureComponent { weight: 0.1, kind: GeneratorKind::PointMass { index: 2 } },
                ],
            },
            n: 10,
            seed: 1,
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<GeneratorSpec>(&s).unwrap(), spec);
        let d = generate(&spec).unwrap().distribution;
        assert!((d.prob(2) - 0.19).abs() < 1e-12);
    }

    #[test]
    fn reads_both_file_forms() {
        let a = parse_distribution_source(r#"{"n": 2, "p": [0.75, 0.25]}"#).unwrap();
        assert!((generate(&a).unwrap().annotations.d_uniform - 0.5).abs() < 1e-15);
        let b = parse_distribution_source(r#"{"kind": "zipf", "a": 1.0, "n": 8}"#).unwrap();
        assert_eq!(b.kind, GeneratorKind::Zipf { a: 1.0 });
        assert!(parse_distribution_source(r#"{"n": 3, "p": [0.5, 0.5]}"#).and_then(|s| generate(&s)).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let spec = GeneratorSpec { kind: GeneratorKind::KHistogram { k: 3 }, n: 30, seed: 9 };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }
}
