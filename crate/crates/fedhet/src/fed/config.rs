use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::OptimizerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    FedAvg,
    FedProx,
    FedNova,
    FedMix,
}

impl AlgorithmKind {
    /// Client solvers: proximal for FedProx and FedMix, plain otherwise.
    pub fn proximal_solver(self) -> bool {
        matches!(self, AlgorithmKind::FedProx | AlgorithmKind::FedMix)
    }

    /// Server aggregators: step-normalized for FedNova and FedMix,
    /// sample-weighted otherwise.
    pub fn normalized_aggregation(self) -> bool {
        matches!(self, AlgorithmKind::FedNova | AlgorithmKind::FedMix)
    }

    pub const ALL: [AlgorithmKind; 4] = [
        AlgorithmKind::FedAvg,
        AlgorithmKind::FedProx,
        AlgorithmKind::FedNova,
        AlgorithmKind::FedMix,
    ];
}

impl std::fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AlgorithmKind::FedAvg => "fedavg",
            AlgorithmKind::FedProx => "fedprox",
            AlgorithmKind::FedNova => "fednova",
            AlgorithmKind::FedMix => "fedmix",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fedavg" => Ok(AlgorithmKind::FedAvg),
            "fedprox" => Ok(AlgorithmKind::FedProx),
            "fednova" => Ok(AlgorithmKind::FedNova),
            "fedmix" => Ok(AlgorithmKind::FedMix),
            other => Err(Error::InvalidParam(format!(
                "unknown algorithm {other:?} (expected fedavg|fedprox|fednova|fedmix)"
            ))),
        }
    }
}

/// Hyperparameters shared by every client in a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    /// Proximal coefficient; only FedProx/FedMix read it.
    pub mu: f32,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub lr: f32,
    pub optimizer: OptimizerKind,
}

impl AlgorithmConfig {
    pub fn new(kind: AlgorithmKind) -> Self {
        AlgorithmConfig {
            kind,
            mu: if kind.proximal_solver() { 0.01 } else { 0.0 },
            local_epochs: 1,
            batch_size: 32,
            lr: 1e-3,
            optimizer: OptimizerKind::Adam,
        }
    }

    /// Engine-level consistency: what `run_algorithm_round` enforces.
    /// Plain-solver kinds force `mu = 0`; proximal kinds accept any
    /// `mu >= 0` so the FedProx(mu=0) = FedAvg and FedMix(mu=0) = FedNova
    /// reductions stay runnable.
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::InconsistentConfig(format!(
                "lr {} must be > 0",
                self.lr
            )));
        }
        if self.local_epochs == 0 || self.batch_size == 0 {
            return Err(Error::InconsistentConfig(
                "local_epochs and batch_size must be >= 1".into(),
            ));
        }
        if !(self.mu >= 0.0) {
            return Err(Error::InconsistentConfig(format!(
                "mu {} must be >= 0",
                self.mu
            )));
        }
        if !self.kind.proximal_solver() && self.mu != 0.0 {
            return Err(Error::InconsistentConfig(format!(
                "{} forces mu = 0, got {}",
                self.kind, self.mu
            )));
        }
        Ok(())
    }

    /// User-facing validation: additionally requires `mu > 0` for the
    /// proximal algorithms, where `mu = 0` is almost certainly a config
    /// mistake rather than an intentional reduction.
    pub fn validate_strict(&self) -> Result<()> {
        self.validate()?;
        if self.kind.proximal_solver() && self.mu == 0.0 {
            return Err(Error::InconsistentConfig(format!(
                "{} requires mu > 0",
                self.kind
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_matrix() {
        use AlgorithmKind::*;
        assert!(!FedAvg.proximal_solver() && !FedAvg.normalized_aggregation());
        assert!(FedProx.proximal_solver() && !FedProx.normalized_aggregation());
        assert!(!FedNova.proximal_solver() && FedNova.normalized_aggregation());
        assert!(FedMix.proximal_solver() && FedMix.normalized_aggregation());
    }

    #[test]
    fn plain_kinds_force_zero_mu() {
        let mut cfg = AlgorithmConfig::new(AlgorithmKind::FedAvg);
        assert_eq!(cfg.mu, 0.0);
        assert!(cfg.validate().is_ok());
        cfg.mu = 0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn proximal_kinds_accept_zero_mu_only_loosely() {
        let mut cfg = AlgorithmConfig::new(AlgorithmKind::FedProx);
        cfg.mu = 0.0;
        assert!(cfg.validate().is_ok());
        assert!(cfg.validate_strict().is_err());
        cfg.mu = 0.01;
        assert!(cfg.validate_strict().is_ok());
    }

    #[test]
    fn parse_roundtrip() {
        for kind in AlgorithmKind::ALL {
            assert_eq!(kind.to_string().parse::<AlgorithmKind>().unwrap(), kind);
        }
        assert!("fedsomething".parse::<AlgorithmKind>().is_err());
    }
}
