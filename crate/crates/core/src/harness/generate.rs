use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, Normal};

use crate::error::{Error, Result};
use crate::geometry::ReturnVector;

/// Synthetic market models.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    /// Rows `Dirichlet(1, ..., 1)` rescaled to max 1.
    IidDirichlet,
    /// Asset `t mod d` returns 1, every other asset 0.5.
    TwoAssetSwitch,
    /// Lognormal returns whose drifts rotate sinusoidally between assets.
    KellyDrift,
    /// Lognormal returns; asset 1 falls to 1e-6 for the second half.
    Crash,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::IidDirichlet, Model::TwoAssetSwitch, Model::KellyDrift, Model::Crash];
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::IidDirichlet => "iid-dirichlet",
            Model::TwoAssetSwitch => "two-asset-switch",
            Model::KellyDrift => "kelly-drift",
            Model::Crash => "crash",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::Param(format!("unknown model {s:?}")))
    }
}

const SWITCH_LOW: f64 = 0.5;
const DRIFT_AMPLITUDE: f64 = 0.01;
const DRIFT_VOL: f64 = 0.02;
const CRASH_VOL: f64 = 0.05;
const CRASH_LEVEL: f64 = 1e-6;

/// A `T x d` return matrix, deterministic in `(model, d, T, seed)`.
///
/// Draws come from ChaCha20 seeded with `seed`, stream 0.
pub fn generate(model: Model, assets: usize, horizon: usize, seed: u64) -> Result<Vec<ReturnVector>> {
    if assets < 2 {
        return Err(Error::Param(format!("need at least 2 assets, got {assets}")));
    }
    if horizon < 1 {
        return Err(Error::Param("horizon must be positive".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let d = assets;
    (0..horizon)
        .map(|t| {
            let raw: Vec<f64> = match model {
                Model::IidDirichlet => (0..d).map(|_| Exp1.sample(&mut rng)).map(|x: f64| x.max(f64::MIN_POSITIVE)).collect(),
                Model::TwoAssetSwitch => (0..d).map(|i| if i == t % d { 1.0 } else { SWITCH_LOW }).collect(),
                Model::KellyDrift => {
                    let noise = Normal::new(0.0, DRIFT_VOL).expect("valid normal");
                    let phase = 2.0 * PI * t as f64 / (horizon as f64 / 4.0).max(1.0);
                    (0..d)
                        .map(|i| {
                            let drift = DRIFT_AMPLITUDE * (phase + 2.0 * PI * i as f64 / d as f64).sin();
                            (drift + noise.sample(&mut rng)).exp()
                        })
                        .collect()
                }
                Model::Crash => {
                    let noise = Normal::new(0.0, CRASH_VOL).expect("valid normal");
                    let mut row: Vec<f64> = (0..d).map(|_| noise.sample(&mut rng).exp()).collect();
                    if t >= horizon / 2 {
                        row[0] = CRASH_LEVEL;
                    }
                    row
                }
            };
            ReturnVector::normalized(raw)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switch_rows_alternate() {
        let rows = generate(Model::TwoAssetSwitch, 2, 4, 0).unwrap();
        assert_eq!(rows[0].as_slice(), &[1.0, 0.5]);
        assert_eq!(rows[1].as_slice(), &[0.5, 1.0]);
        assert_eq!(rows[2].as_slice(), &[1.0, 0.5]);
    }

    #[test]
    fn dirichlet_rows_are_normalized() {
        for r in generate(Model::IidDirichlet, 4, 500, 7).unwrap() {
            assert!(r.as_slice().iter().all(|x| *x > 0.0 && *x <= 1.0));
            assert_eq!(r.as_slice().iter().copied().fold(0.0, f64::max), 1.0);
        }
    }

    #[test]
    fn crash_hits_asset_one() {
        let rows = generate(Model::Crash, 3, 10, 3).unwrap();
        assert!(rows[4].as_slice()[0] > 1e-3);
        assert!(rows[5].as_slice()[0] < 1e-5);
    }

    #[test]
    fn names_round_trip() {
        for m in Model::ALL {
            assert_eq!(m.to_string().parse::<Model>().unwrap(), m);
        }
        assert!("nope".parse::<Model>().is_err());
    }

    #[test]
    fn seeds_matter() {
        let a = generate(Model::KellyDrift, 3, 20, 1).unwrap();
        let b = generate(Model::KellyDrift, 3, 20, 1).unwrap();
        let c = generate(Model::KellyDrift, 3, 20, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
