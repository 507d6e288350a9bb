//! Seeded generation of the JSON objects the command line consumes.

use serde::{Deserialize, Serialize};

use crate::effects::{Effect, Ray, State};
use crate::error::{Error, Result};
use crate::linalg::random::{
    haar_unitary, random_effect_matrix, random_projection_matrix, random_state_matrix, random_unit_vector,
};
use crate::linalg::RandomSource;
use crate::maps::EffectMapSpec;
use crate::sharp::random_semilinear;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Unitary,
    Antiunitary,
    Effect,
    State,
    Projection,
    Ray,
    Semilinear,
    /// Map with `T` an effect whose spectrum lies in `[1e−3, 1]`.
    Mk,
}

impl std::str::FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::Config(format!("unknown object kind '{s}'")))
    }
}

/// JSON text of a random object of `kind`; projections have rank
/// `rank.unwrap_or(1)`.
pub fn generate(kind: GenKind, dim: usize, rank: Option<usize>, rng: &mut RandomSource) -> Result<String> {
    if dim == 0 {
        return Err(Error::BadDimension(0));
    }
    Ok(match kind {
        GenKind::Unitary => EffectMapSpec::unitary(haar_unitary(dim, rng)?)?.to_json(),
        GenKind::Antiunitary => EffectMapSpec::antiunitary(haar_unitary(dim, rng)?)?.to_json(),
        GenKind::Effect => Effect::new(random_effect_matrix(dim, rng)?)?.to_json(),
        GenKind::State => State::new(random_state_matrix(dim, rng)?)?.to_json(),
        GenKind::Projection => {
            let k = rank.unwrap_or(1);
            if k > dim {
                return Err(Error::Config(format!("rank {k} exceeds dimension {dim}")));
            }
            Effect::new(random_projection_matrix(dim, k, rng)?)?.to_json()
        }
        GenKind::Ray => Ray::new(random_unit_vector(dim, rng))?.to_json(),
        GenKind::Semilinear => random_semilinear(dim, rng)?.to_json(),
        GenKind::Mk => EffectMapSpec::mk(random_mk_parameter(dim, rng)?)?.to_json(),
    })
}

/// Effect with spectrum uniform in `[MK_FLOOR, 1]` and Haar eigenbasis.
pub fn random_mk_parameter(dim: usize, rng: &mut RandomSource) -> Result<Effect> {
    let values: Vec<f64> = (0..dim).map(|_| rng.uniform_range(crate::maps::MK_FLOOR, 1.0)).collect();
    Effect::new(crate::linalg::random::rotated_diagonal(&values, rng)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_round_trips() {
        let mut rng = RandomSource::new(11);
        for kind in [GenKind::Unitary, GenKind::Antiunitary, GenKind::Mk] {
            let s = generate(kind, 3, None, &mut rng).unwrap();
            assert_eq!(EffectMapSpec::from_json(&s).unwrap().dim(), 3);
        }
        Effect::from_json(&generate(GenKind::Effect, 3, None, &mut rng).unwrap()).unwrap();
        State::from_json(&generate(GenKind::State, 3, None, &mut rng).unwrap()).unwrap();
        let p = Effect::from_json(&generate(GenKind::Projection, 4, Some(2), &mut rng).unwrap()).unwrap();
        assert_eq!(p.rank(), 2);
        Ray::from_json(&generate(GenKind::Ray, 3, None, &mut rng).unwrap()).unwrap();
        crate::sharp::SemilinearOperator::from_json(&generate(GenKind::Semilinear, 3, None, &mut rng).unwrap()).unwrap();
    }

    #[test]
    fn parse_kind() {
        assert_eq!("semilinear".parse::<GenKind>().unwrap(), GenKind::Semilinear);
        assert!("bogus".parse::<GenKind>().is_err());
    }
}
