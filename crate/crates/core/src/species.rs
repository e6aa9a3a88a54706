use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Particle species with the PID codes used as regression targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Pion,
    Kaon,
    Proton,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::Pion, Species::Kaon, Species::Proton];

    /// 1 = pion, 2 = kaon, 3 = proton.
    pub fn code(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn index(self) -> usize {
        match self {
            Species::Pion => 0,
            Species::Kaon => 1,
            Species::Proton => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(Species::Pion),
            2 => Ok(Species::Kaon),
            3 => Ok(Species::Proton),
            other => Err(Error::Parse(format!("unknown species code {other}"))),
        }
    }

    /// Rest mass in GeV/c^2.
    pub fn mass(self) -> f64 {
        match self {
            Species::Pion => 0.139_57,
            Species::Kaon => 0.493_68,
            Species::Proton => 0.938_27,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Species::Pion => "pion",
            Species::Kaon => "kaon",
            Species::Proton => "proton",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Species::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::Parse(format!("unknown species `{name}`")))
    }
}

impl std::fmt::Display for Species {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
