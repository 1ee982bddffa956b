use std::collections::BTreeSet;

use ini::Ini;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AreaGraph, EdgeGraph, EdgeSet};

/// One simulation design: geometry, elevated region and data-generation
/// settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub n_times: usize,
    /// Relative risk inside the high region.
    pub a: f64,
    /// Expected count in every cell.
    pub e_size: f64,
    pub graph: AreaGraph,
    /// Grid dimensions when `graph` is a rook lattice.
    pub shape: Option<LatticeShape>,
    /// Sorted area indices carrying the elevated risk.
    pub high_region: Vec<usize>,
    /// Standard deviation of the per-cell log-risk noise.
    pub noise_sd: f64,
    /// Variance of the smooth spatial field.
    pub gmrf_tau2: f64,
    /// Ridge used to make the smooth-field precision proper.
    pub eps_sim: f64,
    /// Base seed; replicate seeds are derived from it.
    pub seed: u64,
}

/// Grid used by the default geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeShape {
    pub nrow: usize,
    pub ncol: usize,
}

pub const DEFAULT_NOISE_SD: f64 = 0.05;
pub const DEFAULT_GMRF_TAU2: f64 = 0.01;
pub const DEFAULT_EPS_SIM: f64 = 1e-4;

/// Two rectangular blocks covering roughly 30% of each side. On a 10×10 grid
/// these are rows 1–3 × columns 1–3 and rows 6–8 × columns 5–7.
pub fn default_high_region(shape: LatticeShape) -> Vec<usize> {
    let block = |n: usize| (3 * n / 10).max(1);
    let (br, bc) = (block(shape.nrow), block(shape.ncol));
    let origins = [(shape.nrow / 10, shape.ncol / 10), (6 * shape.nrow / 10, shape.ncol / 2)];
    let mut set = BTreeSet::new();
    for (r0, c0) in origins {
        for r in r0..(r0 + br).min(shape.nrow) {
            for c in c0..(c0 + bc).min(shape.ncol) {
                set.insert(r * shape.ncol + c);
            }
        }
    }
    set.into_iter().collect()
}

impl Scenario {
    /// Lattice scenario with the default blocks, noise and field variance.
    pub fn lattice(shape: LatticeShape, n_times: usize, a: f64, e_size: f64) -> Result<Self> {
        let sc = Scenario {
            name: format!("T{n_times}-A{a}-E{e_size}"),
            n_times,
            a,
            e_size,
            graph: AreaGraph::lattice(shape.nrow, shape.ncol)?,
            shape: Some(shape),
            high_region: default_high_region(shape),
            noise_sd: DEFAULT_NOISE_SD,
            gmrf_tau2: DEFAULT_GMRF_TAU2,
            eps_sim: DEFAULT_EPS_SIM,
            seed: 1,
        };
        sc.validate()?;
        Ok(sc)
    }

    /// The fixed design point `T = 5`, `A = 1.5`, `E = 75` on a 10×10 grid.
    pub fn baseline() -> Self {
        Self::lattice(LatticeShape { nrow: 10, ncol: 10 }, 5, 1.5, 75.0).expect("valid baseline")
    }

    /// The nine one-factor-at-a-time designs: `T ∈ {1, 5, 20}`,
    /// `A ∈ {1, 1.5, 2}`, `E ∈ {10, 50, 100}`, others held at the baseline.
    /// The baseline point appears once per group; names are prefixed with
    /// the group (`time-`, `risk-`, `expected-`) so they stay unique.
    pub fn grid(shape: LatticeShape) -> Result<Vec<Self>> {
        let mut out = Vec::with_capacity(9);
        for t in [1, 5, 20] {
            out.push(("time", Self::lattice(shape, t, 1.5, 75.0)?));
        }
        for a in [1.0, 1.5, 2.0] {
            out.push(("risk", Self::lattice(shape, 5, a, 75.0)?));
        }
        for e in [10.0, 50.0, 100.0] {
            out.push(("expected", Self::lattice(shape, 5, 1.5, e)?));
        }
        Ok(out
            .into_iter()
            .enumerate()
            .map(|(k, (group, mut sc))| {
                sc.name = format!("{group}-{}", sc.name);
                sc.seed = k as u64 + 1;
                sc
            })
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_times == 0 {
            return Err(Error::domain("T", "need at least one time period"));
        }
        if !(self.a >= 1.0 && self.a.is_finite()) {
            return Err(Error::domain("A", format!("{} must be at least 1", self.a)));
        }
        if !(self.e_size > 0.0 && self.e_size.is_finite()) {
            return Err(Error::domain("E", format!("{} must be positive", self.e_size)));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::domain("noise_sd", format!("{} must be non-negative", self.noise_sd)));
        }
        if !(self.gmrf_tau2 >= 0.0 && self.gmrf_tau2.is_finite()) {
            return Err(Error::domain("gmrf_tau2", format!("{} must be non-negative", self.gmrf_tau2)));
        }
        if !(self.eps_sim > 0.0 && self.eps_sim.is_finite()) {
            return Err(Error::domain("eps_sim", format!("{} must be positive", self.eps_sim)));
        }
        if self.a > 1.0 && self.high_region.is_empty() {
            return Err(Error::domain("high_region", "empty while A > 1"));
        }
        if let Some(&i) = self.high_region.iter().find(|&&i| i >= self.graph.n_areas()) {
            return Err(Error::AreaOutOfRange { index: i, n_areas: self.graph.n_areas() });
        }
        Ok(())
    }

    pub fn in_high_region(&self) -> Vec<bool> {
        let mut flags = vec![false; self.graph.n_areas()];
        for &i in &self.high_region {
            flags[i] = true;
        }
        flags
    }

    /// Border adjacency for the clustered prior: borders meeting at a grid
    /// corner on lattices, borders sharing an area otherwise.
    pub fn edge_graph(&self) -> Result<EdgeGraph> {
        let es = EdgeSet::from_graph(&self.graph);
        match self.shape {
            Some(s) => EdgeGraph::lattice_corners(s.nrow, s.ncol, &es),
            None => Ok(EdgeGraph::shared_endpoint(&es)),
        }
    }

    /// Per-edge step-change flags in canonical edge order: edges with exactly
    /// one endpoint in the high region, and none at all when `A = 1`.
    pub fn true_boundaries(&self) -> Vec<bool> {
        let es = EdgeSet::from_graph(&self.graph);
        if self.a == 1.0 {
            return vec![false; es.len()];
        }
        let high = self.in_high_region();
        es.edges().iter().map(|&(i, k)| high[i] != high[k]).collect()
    }
}

/// Scenarios and replicate count parsed from a key-value file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
    pub replicates: usize,
}

const KEYS: [&str; 11] =
    ["T", "A", "E", "nrow", "ncol", "noise_sd", "gmrf_tau2", "eps_sim", "replicates", "seed", "high_region"];

impl ScenarioSet {
    /// Parses INI text. Keys outside any section are defaults; every named
    /// section is one scenario overriding them. Without named sections the
    /// defaults themselves form a single scenario called `default`.
    ///
    /// Recognised keys: `T`, `A`, `E`, `nrow`, `ncol`, `noise_sd`,
    /// `gmrf_tau2`, `eps_sim`, `replicates`, `seed`, and `high_region` as a
    /// comma-separated list of area indices.
    pub fn from_ini_str(text: &str, source: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::schema(source, e.to_string()))?;
        let mut defaults: Vec<(String, String)> = Vec::new();
        let mut sections: Vec<(String, Vec<(String, String)>)> = Vec::new();
        for (name, props) in ini.iter() {
            let kv: Vec<(String, String)> = props.iter().map(|(k, v)| (k.to_string(), v.trim().to_string())).collect();
            for (k, _) in &kv {
                if !KEYS.contains(&k.as_str()) {
                    return Err(Error::schema(source, format!("unknown scenario key '{k}'")));
                }
            }
            match name {
                None => defaults = kv,
                Some(n) => sections.push((n.to_string(), kv)),
            }
        }
        let lookup = |kv: &[(String, String)], key: &str| -> Option<String> {
            kv.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.clone())
        };
        let replicates = match lookup(&defaults, "replicates") {
            Some(v) => parse_value::<usize>(&v, "replicates", source)?,
            None => 1,
        };
        if replicates == 0 {
            return Err(Error::domain("replicates", "must be at least 1"));
        }
        if sections.is_empty() {
            sections.push(("default".to_string(), Vec::new()));
        }
        let mut scenarios = Vec::with_capacity(sections.len());
        for (k, (name, kv)) in sections.into_iter().enumerate() {
            let get = |key: &str| lookup(&kv, key).or_else(|| lookup(&defaults, key));
            let num = |key: &str, default: f64| -> Result<f64> {
                get(key).map_or(Ok(default), |v| parse_value::<f64>(&v, key, source))
            };
            let int = |key: &str, default: usize| -> Result<usize> {
                get(key).map_or(Ok(default), |v| parse_value::<usize>(&v, key, source))
            };
            let shape = LatticeShape { nrow: int("nrow", 10)?, ncol: int("ncol", 10)? };
            let mut sc = Scenario::lattice(shape, int("T", 5)?, num("A", 1.5)?, num("E", 75.0)?)?;
            sc.name = name;
            sc.noise_sd = num("noise_sd", DEFAULT_NOISE_SD)?;
            sc.gmrf_tau2 = num("gmrf_tau2", DEFAULT_GMRF_TAU2)?;
            sc.eps_sim = num("eps_sim", DEFAULT_EPS_SIM)?;
            sc.seed = match get("seed") {
                Some(v) => parse_value::<u64>(&v, "seed", source)?,
                None => k as u64 + 1,
            };
            if let Some(list) = get("high_region") {
                let mut areas = list
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_value::<usize>(s.trim(), "high_region", source))
                    .collect::<Result<Vec<_>>>()?;
                areas.sort_unstable();
                areas.dedup();
                sc.high_region = areas;
            }
            sc.validate()?;
            scenarios.push(sc);
        }
        Ok(ScenarioSet { scenarios, replicates })
    }
}

fn parse_value<T: std::str::FromStr>(v: &str, key: &str, source: &str) -> Result<T> {
    v.parse::<T>().map_err(|_| Error::schema(source, format!("key '{key}': cannot parse '{v}'")))
}
