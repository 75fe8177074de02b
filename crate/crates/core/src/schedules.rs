//! Per-iteration `(ζ_k, η_k)` schedules: fixed constants, the ground-truth
//! oracle, and learned feed-forward values with an optional geometric tail.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LrmcError, Result};
use crate::problems::GroundTruth;

/// Step size assumed before the first layer when a learned schedule has no
/// feed-forward layers (`K = 0`) but a recurrent tail.
pub const DEFAULT_ETA_ANCHOR: f64 = 0.5;

/// Admissible constant step sizes for the oracle schedule.
pub const ORACLE_ETA_RANGE: (f64, f64) = (0.25, 8.0 / 9.0);

/// Geometric decay applied after the feed-forward layers:
/// `η_k = β·η_{k−1}`, `ζ_k = φ·ζ_{k−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrentTail {
    pub beta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedSchedule {
    zeta: Vec<f64>,
    eta: Vec<f64>,
    rnn: Option<RecurrentTail>,
}

impl LearnedSchedule {
    /// `zeta` holds `ζ₀..ζ_K`, `eta` holds `η₁..η_K`.
    pub fn new(zeta: Vec<f64>, eta: Vec<f64>, rnn: Option<RecurrentTail>) -> Result<Self> {
        let s = LearnedSchedule { zeta, eta, rnn };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.zeta.len() != self.eta.len() + 1 {
            return Err(LrmcError::schema(
                "zeta",
                format!(
                    "expected K+1 = {} thresholds for K = {}, found {}",
                    self.eta.len() + 1,
                    self.eta.len(),
                    self.zeta.len()
                ),
            ));
        }
        for (k, z) in self.zeta.iter().enumerate() {
            if !(z.is_finite() && *z >= 0.0) {
                return Err(LrmcError::schema(format!("zeta[{k}]"), format!("must be finite and >= 0, got {z}")));
            }
        }
        for (k, e) in self.eta.iter().enumerate() {
            if !(e.is_finite() && *e > 0.0) {
                return Err(LrmcError::schema(format!("eta[{k}]"), format!("must be finite and > 0, got {e}")));
            }
        }
        if let Some(t) = self.rnn {
            for (name, v) in [("rnn.beta", t.beta), ("rnn.phi", t.phi)] {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(LrmcError::schema(name, format!("must lie in (0, 1], got {v}")));
                }
            }
        }
        Ok(())
    }

    /// Feed-forward depth `K`.
    pub fn depth(&self) -> usize {
        self.eta.len()
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn rnn(&self) -> Option<RecurrentTail> {
        self.rnn
    }

    pub fn with_rnn(mut self, tail: RecurrentTail) -> Result<Self> {
        self.rnn = Some(tail);
        self.validate()?;
        Ok(self)
    }

    pub fn without_rnn(mut self) -> Self {
        self.rnn = None;
        self
    }

    fn eta_anchor(&self) -> f64 {
        self.eta.last().copied().unwrap_or(DEFAULT_ETA_ANCHOR)
    }

    pub fn param_at(&self, k: usize) -> Result<(f64, f64)> {
        if k == 0 {
            return Err(LrmcError::param("k", "iteration parameters start at k = 1"));
        }
        let depth = self.depth();
        if k <= depth {
            return Ok((self.zeta[k], self.eta[k - 1]));
        }
        let tail = self.rnn.ok_or(LrmcError::ScheduleExhausted { k, depth })?;
        let steps = (k - depth) as i32;
        Ok((
            self.zeta[depth] * tail.phi.powi(steps),
            self.eta_anchor() * tail.beta.powi(steps),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ScheduleFile", try_from = "ScheduleFile")]
pub enum ParamSchedule {
    Fixed { zeta: f64, eta: f64 },
    /// Thresholds from the ground truth; only usable when it is available.
    Oracle { eta: f64 },
    Learned(LearnedSchedule),
}

impl ParamSchedule {
    pub fn fixed(zeta: f64, eta: f64) -> Result<Self> {
        let s = ParamSchedule::Fixed { zeta, eta };
        s.validate()?;
        Ok(s)
    }

    pub fn oracle(eta: f64) -> Result<Self> {
        let s = ParamSchedule::Oracle { eta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ParamSchedule::Fixed { zeta, eta } => {
                if !(zeta.is_finite() && *zeta >= 0.0) {
                    return Err(LrmcError::schema("zeta", format!("must be finite and >= 0, got {zeta}")));
                }
                if !(eta.is_finite() && *eta > 0.0) {
                    return Err(LrmcError::schema("eta", format!("must be finite and > 0, got {eta}")));
                }
                Ok(())
            }
            ParamSchedule::Oracle { eta } => {
                let (lo, hi) = ORACLE_ETA_RANGE;
                if !(*eta >= lo && *eta <= hi) {
                    return Err(LrmcError::schema(
                        "eta",
                        format!("oracle step size must lie in [1/4, 8/9], got {eta}"),
                    ));
                }
                Ok(())
            }
            ParamSchedule::Learned(l) => l.validate(),
        }
    }

    /// `(ζ_k, η_k)` for iteration `k ≥ 1`.
    pub fn param_at(&self, k: usize) -> Result<(f64, f64)> {
        match self {
            ParamSchedule::Fixed { zeta, eta } => Ok((*zeta, *eta)),
            ParamSchedule::Oracle { .. } => Err(LrmcError::Configuration(
                "oracle thresholds depend on the iterate; evaluate them through the solver".into(),
            )),
            ParamSchedule::Learned(l) => l.param_at(k),
        }
    }

    /// Initialization threshold `ζ₀`.
    pub fn zeta0(&self, truth: Option<&GroundTruth>) -> Result<f64> {
        match self {
            ParamSchedule::Fixed { zeta, .. } => Ok(*zeta),
            ParamSchedule::Oracle { .. } => truth
                .map(|t| crate::matops::inf_norm(t.xstar()))
                .ok_or_else(|| LrmcError::Configuration("oracle schedule requires ground truth".into())),
            ParamSchedule::Learned(l) => Ok(l.zeta[0]),
        }
    }

    /// The same schedule with every threshold multiplied by `c`.
    pub fn scale_thresholds(&self, c: f64) -> Result<Self> {
        Ok(match self {
            ParamSchedule::Fixed { zeta, eta } => ParamSchedule::Fixed {
                zeta: zeta * c,
                eta: *eta,
            },
            ParamSchedule::Oracle { eta } => ParamSchedule::Oracle { eta: *eta },
            ParamSchedule::Learned(l) => ParamSchedule::Learned(LearnedSchedule::new(
                l.zeta.iter().map(|z| z * c).collect(),
                l.eta.clone(),
                l.rnn,
            )?),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScheduleFile::from(self)).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScheduleFile = serde_json::from_str(text).map_err(|e| {
            LrmcError::schema(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        file.try_into()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ScheduleFile {
    Fixed {
        zeta: f64,
        eta: f64,
    },
    Oracle {
        eta: f64,
    },
    Learned {
        #[serde(rename = "K")]
        depth: usize,
        zeta: Vec<f64>,
        eta: Vec<f64>,
        #[serde(default)]
        rnn: Option<RecurrentTail>,
    },
}

impl From<&ParamSchedule> for ScheduleFile {
    fn from(s: &ParamSchedule) -> Self {
        match s {
            ParamSchedule::Fixed { zeta, eta } => ScheduleFile::Fixed {
                zeta: *zeta,
                eta: *eta,
            },
            ParamSchedule::Oracle { eta } => ScheduleFile::Oracle { eta: *eta },
            ParamSchedule::Learned(l) => ScheduleFile::Learned {
                depth: l.depth(),
                zeta: l.zeta.clone(),
                eta: l.eta.clone(),
                rnn: l.rnn,
            },
        }
    }
}

impl From<ParamSchedule> for ScheduleFile {
    fn from(s: ParamSchedule) -> Self {
        (&s).into()
    }
}

impl TryFrom<ScheduleFile> for ParamSchedule {
    type Error = LrmcError;

    fn try_from(f: ScheduleFile) -> Result<Self> {
        let s = match f {
            ScheduleFile::Fixed { zeta, eta } => ParamSchedule::Fixed { zeta, eta },
            ScheduleFile::Oracle { eta } => ParamSchedule::Oracle { eta },
            ScheduleFile::Learned {
                depth,
                zeta,
                eta,
                rnn,
            } => {
                if eta.len() != depth {
                    return Err(LrmcError::schema(
                        "eta",
                        format!("expected K = {depth} step sizes, found {}", eta.len()),
                    ));
                }
                ParamSchedule::Learned(LearnedSchedule { zeta, eta, rnn })
            }
        };
        s.validate()?;
        Ok(s)
    }
}

pub fn save(schedule: &ParamSchedule, path: impl AsRef<Path>) -> Result<()> {
    let mut text = schedule.to_json();
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<ParamSchedule> {
    ParamSchedule::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn learned(zeta: &[f64], eta: &[f64], rnn: Option<(f64, f64)>) -> LearnedSchedule {
        LearnedSchedule::new(
            zeta.to_vec(),
            eta.to_vec(),
            rnn.map(|(beta, phi)| RecurrentTail { beta, phi }),
        )
        .unwrap()
    }

    #[test]
    fn geometric_tail() {
        let s = learned(&[1.0, 0.5, 0.25], &[0.5, 0.4], Some((0.9, 0.5)));
        let (z4, e4) = s.param_at(4).unwrap();
        assert!((e4 - 0.324).abs() < 1e-15);
        assert!((z4 - 0.0625).abs() < 1e-15);
        assert_eq!(s.param_at(2).unwrap(), (0.25, 0.4));
    }

    #[test]
    fn unit_decay_is_constant_tail() {
        let s = learned(&[1.0, 0.5, 0.25], &[0.5, 0.4], Some((1.0, 1.0)));
        for k in 3..20 {
            assert_eq!(s.param_at(k).unwrap(), (0.25, 0.4));
        }
    }

    #[test]
    fn fixed_is_constant() {
        let s = ParamSchedule::fixed(0.1, 0.5).unwrap();
        assert_eq!(s.param_at(1).unwrap(), (0.1, 0.5));
        assert_eq!(s.param_at(1000).unwrap(), (0.1, 0.5));
        assert_eq!(s.zeta0(None).unwrap(), 0.1);
    }

    #[test]
    fn exhaustion_without_tail() {
        let s = learned(&[1.0, 0.5], &[0.5], None);
        assert!(s.param_at(1).is_ok());
        assert!(matches!(
            s.param_at(2),
            Err(LrmcError::ScheduleExhausted { k: 2, depth: 1 })
        ));
    }

    #[test]
    fn oracle_needs_truth() {
        let s = ParamSchedule::oracle(0.5).unwrap();
        assert!(matches!(s.zeta0(None), Err(LrmcError::Configuration(_))));
        assert!(ParamSchedule::oracle(0.1).is_err());
        assert!(ParamSchedule::oracle(0.9).is_err());
    }

    #[test]
    fn file_rejects_negative_eta_with_field_name() {
        let text = r#"{"kind":"learned","K":2,"zeta":[1,0.5,0.2],"eta":[0.5,-0.1],"rnn":null}"#;
        let err = ParamSchedule::from_json(text).unwrap_err();
        assert!(err.to_string().contains("eta[1]"), "{err}");
        let text = r#"{"kind":"fixed","zeta":0.1,"eta":0.5,"extra":1}"#;
        assert!(ParamSchedule::from_json(text).is_err());
        let text = r#"{"kind":"learned","K":2,"zeta":[1,0.5],"eta":[0.5,0.1],"rnn":null}"#;
        assert!(ParamSchedule::from_json(text).unwrap_err().to_string().contains("zeta"));
    }

    #[test]
    fn minimal_recurrent_file_runs_forever() {
        let text = r#"{ "rnn": {"phi": 0.8, "beta": 0.9}, "eta": [], "zeta": [2.0], "K": 0, "kind": "learned" }"#;
        let s = ParamSchedule::from_json(text).unwrap();
        let (z, e) = s.param_at(1_000).unwrap();
        assert!(z >= 0.0 && e > 0.0);
        let (z1, e1) = s.param_at(1).unwrap();
        assert!((z1 - 1.6).abs() < 1e-15 && (e1 - 0.45).abs() < 1e-15);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = ParamSchedule::Learned(learned(&[1.0, 0.3], &[0.7], Some((0.9, 0.6))));
        save(&s, &path).unwrap();
        assert_eq!(load(&path).unwrap(), s);
    }

    fn arb_schedule() -> impl Strategy<Value = ParamSchedule> {
        let learned = (0usize..6)
            .prop_flat_map(|k| {
                (
                    prop::collection::vec(0.0f64..10.0, k + 1),
                    prop::collection::vec(1e-3f64..2.0, k),
                    prop::option::of((1e-3f64..=1.0, 1e-3f64..=1.0)),
                )
            })
            .prop_map(|(z, e, rnn)| {
                ParamSchedule::Learned(
                    LearnedSchedule::new(z, e, rnn.map(|(beta, phi)| RecurrentTail { beta, phi })).unwrap(),
                )
            });
        let fixed = (0.0f64..10.0, 1e-3f64..2.0).prop_map(|(zeta, eta)| ParamSchedule::Fixed { zeta, eta });
        let oracle = (0.25f64..0.88).prop_map(|eta| ParamSchedule::Oracle { eta });
        prop_oneof![learned, fixed, oracle]
    }

    proptest! {
        #[test]
        fn json_round_trip(s in arb_schedule()) {
            prop_assert_eq!(ParamSchedule::from_json(&s.to_json()).unwrap(), s);
        }

        #[test]
        fn tail_ratio_is_exact(
            z in prop::collection::vec(0.01f64..5.0, 3),
            e in prop::collection::vec(0.01f64..1.5, 2),
            beta in 0.1f64..=1.0,
            phi in 0.1f64..=1.0,
            k in 3usize..40,
        ) {
            let s = LearnedSchedule::new(z, e, Some(RecurrentTail { beta, phi })).unwrap();
            let (z0, e0) = s.param_at(k).unwrap();
            let (z1, e1) = s.param_at(k + 1).unwrap();
            prop_assert!((e1 / e0 - beta).abs() <= 1e-12 * beta);
            prop_assert!((z1 / z0 - phi).abs() <= 1e-12 * phi);
            prop_assert!(z1 >= 0.0 && e1 > 0.0);
        }
    }
}
