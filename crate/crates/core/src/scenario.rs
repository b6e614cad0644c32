//! Scenario catalog and FTP connection definitions.

use serde::{Deserialize, Serialize};

use crate::bundle::MbConvention;
use crate::error::{Error, Result};
use crate::time::SimTime;
use crate::topology::{Cluster, NodeId};

pub const BUILTIN_CATALOG: &str = include_str!("../catalog/scenarios.toml");

pub const PAUSE_TIMES: [u32; 10] = [10, 20, 30, 40, 50, 60, 70, 80, 90, 100];

pub const HORIZON: SimTime = SimTime::from_secs(100);

/// One FTP transfer carried over the bundle layer.
#[derive(Clone, Debug, PartialEq)]
pub struct FtpConnection {
    /// Position in the scenario's connection list; used as flow id in traces.
    pub index: u32,
    /// Label the connection is known by (`FTP(i)`).
    pub ftp: u32,
    pub src: NodeId,
    pub dst: NodeId,
    /// Cluster the connection is filed under.
    pub cluster: Cluster,
    pub start: SimTime,
    pub stop: SimTime,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub scenario_n: u32,
    pub mobile_nodes: usize,
    pub connections: Vec<FtpConnection>,
    pub pause_time: u32,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn ftp_count(&self) -> usize {
        self.connections.len()
    }
}

/// Symbols of the connection-density ratio: connections over mobile nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeltaParams {
    pub ftp_count: u64,
    pub nodes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CatalogFile {
    pub version: u32,
    pub message_mb: u64,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<CatalogScenario>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CatalogScenario {
    pub n: u32,
    pub mobile_nodes: usize,
    #[serde(rename = "connection")]
    pub connections: Vec<CatalogConnection>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CatalogConnection {
    pub ftp: u32,
    pub src: String,
    pub dst: String,
    pub cluster: u8,
    pub start: u32,
    pub stop: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub interpolated: bool,
}

/// Validated scenario catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    file: CatalogFile,
}

impl Catalog {
    pub fn builtin() -> Catalog {
        Catalog::from_toml_str(BUILTIN_CATALOG).expect("built-in catalog is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Catalog> {
        let file: CatalogFile =
            toml::from_str(text).map_err(|e| Error::config(format!("scenario catalog: {e}")))?;
        let cat = Catalog { file };
        cat.validate()?;
        Ok(cat)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Catalog> {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Catalog::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.file).expect("catalog serializes")
    }

    pub fn file(&self) -> &CatalogFile {
        &self.file
    }

    pub fn numbers(&self) -> Vec<u32> {
        self.file.scenarios.iter().map(|s| s.n).collect()
    }

    pub fn scenario(&self, n: u32) -> Option<&CatalogScenario> {
        self.file.scenarios.iter().find(|s| s.n == n)
    }

    pub fn delta_params(&self, n: u32) -> Option<DeltaParams> {
        self.scenario(n).map(|s| DeltaParams {
            ftp_count: s.connections.len() as u64,
            nodes: s.mobile_nodes as u64,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.file.version != 1 {
            return Err(Error::config(format!(
                "unsupported catalog version {}",
                self.file.version
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.file.scenarios {
            if !seen.insert(s.n) {
                return Err(Error::config(format!("scenario {} defined twice", s.n)));
            }
            if s.mobile_nodes == 0 {
                return Err(Error::config(format!(
                    "scenario {} has no mobile nodes",
                    s.n
                )));
            }
            for c in &s.connections {
                let ctx =
                    |m: String| Error::config(format!("scenario {} FTP({}): {m}", s.n, c.ftp));
                let src: NodeId = c.src.parse().map_err(ctx)?;
                let dst: NodeId = c.dst.parse().map_err(ctx)?;
                if !matches!(src, NodeId::Wired(0 | 1)) {
                    return Err(ctx(format!("source {src} is not a wired node")));
                }
                match dst {
                    NodeId::Mobile(i) if (i as usize) < s.mobile_nodes => {}
                    _ => return Err(ctx(format!("destination {dst} is not one of the mobiles"))),
                }
                if Cluster::from_number(c.cluster).is_none() {
                    return Err(ctx(format!("cluster {} is not 1 or 2", c.cluster)));
                }
                if c.start >= c.stop {
                    return Err(ctx("start must precede stop".into()));
                }
            }
        }
        Ok(())
    }

    /// Expands scenario `n` for a pause time and seed.
    pub fn build(
        &self,
        n: u32,
        pause_time: u32,
        seed: u64,
        mb: MbConvention,
    ) -> Result<ScenarioSpec> {
        let s = self.scenario(n).ok_or_else(|| {
            Error::config(format!(
                "unknown scenario {n} (catalog has {:?})",
                self.numbers()
            ))
        })?;
        if !PAUSE_TIMES.contains(&pause_time) {
            return Err(Error::config(format!(
                "pause time {pause_time} is not one of 10, 20, ..., 100"
            )));
        }
        let bytes = mb.bytes(self.file.message_mb);
        let connections = s
            .connections
            .iter()
            .enumerate()
            .map(|(i, c)| FtpConnection {
                index: i as u32,
                ftp: c.ftp,
                src: c.src.parse().expect("validated"),
                dst: c.dst.parse().expect("validated"),
                cluster: Cluster::from_number(c.cluster).expect("validated"),
                start: SimTime::from_secs(u64::from(c.start)),
                stop: SimTime::from_secs(u64::from(c.stop)),
                bytes,
            })
            .collect();
        Ok(ScenarioSpec {
            scenario_n: n,
            mobile_nodes: s.mobile_nodes,
            connections,
            pause_time,
            seed,
        })
    }
}

/// Builds a scenario from the built-in catalog.
pub fn build_scenario(n: u32, pause_time: u32, seed: u64) -> Result<ScenarioSpec> {
    Catalog::builtin().build(n, pause_time, seed, MbConvention::Decimal)
}
