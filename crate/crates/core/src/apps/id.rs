use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eight benchmark applications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AppId {
    #[serde(rename = "HCL", alias = "hcl")]
    Hcl,
    #[serde(rename = "SeizDetSVM", alias = "seizdetsvm")]
    SeizDetSvm,
    #[serde(rename = "SeizDetCNN", alias = "seizdetcnn")]
    SeizDetCnn,
    #[serde(rename = "CWM", alias = "cwm")]
    Cwm,
    #[serde(rename = "GCL", alias = "gcl")]
    Gcl,
    #[serde(rename = "CoughDet", alias = "coughdet")]
    CoughDet,
    #[serde(rename = "ECL", alias = "ecl")]
    Ecl,
    #[serde(rename = "BPfree", alias = "bpfree")]
    BpFree,
}

impl AppId {
    pub const ALL: [AppId; 8] =
        [AppId::Hcl, AppId::SeizDetSvm, AppId::SeizDetCnn, AppId::Cwm, AppId::Gcl, AppId::CoughDet, AppId::Ecl, AppId::BpFree];

    pub fn name(self) -> &'static str {
        match self {
            AppId::Hcl => "HCL",
            AppId::SeizDetSvm => "SeizDetSVM",
            AppId::SeizDetCnn => "SeizDetCNN",
            AppId::Cwm => "CWM",
            AppId::Gcl => "GCL",
            AppId::CoughDet => "CoughDet",
            AppId::Ecl => "ECL",
            AppId::BpFree => "BPfree",
        }
    }

    /// Lower-case identifier used for file names and the command line.
    pub fn slug(self) -> String {
        self.name().to_ascii_lowercase()
    }

    /// Length of one classification window in seconds; `None` for the
    /// training workload, which has no acquisition.
    pub fn window_seconds(self) -> Option<f64> {
        match self {
            AppId::Hcl => Some(15.0),
            AppId::SeizDetSvm => Some(60.0),
            AppId::SeizDetCnn => Some(4.0),
            AppId::Cwm => Some(56.0),
            AppId::Gcl => Some(0.2),
            AppId::CoughDet => Some(0.3),
            AppId::Ecl => Some(10.0),
            AppId::BpFree => None,
        }
    }
}

impl fmt::Display for AppId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AppId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = s.trim().to_ascii_lowercase();
        AppId::ALL.into_iter().find(|a| a.slug() == k).ok_or_else(|| Error::Config(format!("unknown application '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for a in AppId::ALL {
            assert_eq!(a.name().parse::<AppId>().unwrap(), a);
            assert_eq!(a.slug().parse::<AppId>().unwrap(), a);
        }
        assert!(matches!("foo".parse::<AppId>(), Err(Error::Config(_))));
    }

    #[test]
    fn serde_names() {
        assert_eq!(serde_json::to_string(&AppId::SeizDetCnn).unwrap(), "\"SeizDetCNN\"");
        assert_eq!(serde_json::from_str::<AppId>("\"bpfree\"").unwrap(), AppId::BpFree);
    }
}
