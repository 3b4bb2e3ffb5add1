use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::CvsParameters;

/// Largest relative deviation of a patient parameter from nominal.
pub const PATIENT_SPREAD: f64 = 0.2;

/// A virtual patient: multiplicative factors on selected parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientSpec {
    pub seed: u64,
    pub factors: Vec<(String, f64)>,
}

impl PatientSpec {
    /// The unperturbed patient.
    pub fn nominal() -> Self {
        Self { seed: 0, factors: Vec::new() }
    }

    pub fn apply(&self, base: &CvsParameters) -> Result<CvsParameters> {
        let mut p = base.clone();
        for (name, f) in &self.factors {
            let slot = p.get_mut(name).ok_or_else(|| Error::InvalidParameter {
                name: name.clone(),
                reason: "not a circulation parameter".into(),
            })?;
            *slot *= f;
        }
        p.validate()?;
        Ok(p)
    }
}

/// Draws a uniform factor in `[0.8, 1.2]` for each significant parameter, in
/// the order given. Deterministic in `seed`.
pub fn generate_patient(seed: u64, significant: &[&str]) -> Result<PatientSpec> {
    if significant.is_empty() {
        return Err(Error::InvalidParameter {
            name: "significant set".into(),
            reason: "must name at least one parameter".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors = significant
        .iter()
        .map(|&name| {
            if CvsParameters::nominal().get(name).is_none() {
                return Err(Error::InvalidParameter { name: name.into(), reason: "not a circulation parameter".into() });
            }
            let f = rng.random_range(1.0 - PATIENT_SPREAD..=1.0 + PATIENT_SPREAD);
            Ok((name.to_string(), f))
        })
        .collect::<Result<_>>()?;
    Ok(PatientSpec { seed, factors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioKind;
    use proptest::prelude::*;

    #[test]
    fn deterministic() {
        let set = ScenarioKind::RsaDown.default_significant();
        assert_eq!(generate_patient(42, set).unwrap(), generate_patient(42, set).unwrap());
        assert_ne!(generate_patient(42, set).unwrap(), generate_patient(43, set).unwrap());
    }

    #[test]
    fn rsa_up_perturbs_exactly_its_set() {
        let p = generate_patient(1, ScenarioKind::RsaUp.default_significant()).unwrap();
        let names: Vec<_> = p.factors.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["Esa", "Vusv", "Vtotal", "λrvf"]);
        let applied = p.apply(&CvsParameters::nominal()).unwrap();
        let nominal = CvsParameters::nominal();
        for (name, v) in applied.iter() {
            if !names.contains(&name) {
                assert_eq!(v, nominal.get(name).unwrap(), "{name}");
            }
        }
    }

    #[test]
    fn rejects_empty_and_unknown() {
        assert!(generate_patient(1, &[]).is_err());
        assert!(generate_patient(1, &["Rband"]).is_err());
    }

    proptest! {
        #[test]
        fn factors_in_range(seed in any::<u64>(), k in 0usize..6) {
            let set = ScenarioKind::ALL[k].default_significant();
            let p = generate_patient(seed, set).unwrap();
            prop_assert_eq!(p.factors.len(), set.len());
            for (_, f) in &p.factors {
                prop_assert!((0.8..=1.2).contains(f));
            }
        }
    }
}
