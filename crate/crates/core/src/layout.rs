//! Equally spaced edge-server placement and the connection topology g(.).

use crate::error::{Error, Result};

/// Equally spaced ES positions on the highway. The block of servers is
/// centered, so both highway ends keep symmetric margins.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerLayout {
    positions_m: Vec<f64>,
    spacing_m: f64,
    count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpacingSpec {
    Spacing(f64),
    Count(usize),
}

impl ServerLayout {
    pub fn positions_m(&self) -> &[f64] {
        &self.positions_m
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Layout anchored at position 0 with pitch L/k: positions i*L/k.
    /// Doubling `count` yields a superset of positions, so chains of
    /// anchored layouts nest; used by the refinement monotonicity suites.
    pub fn anchored(length_m: f64, count: usize) -> ServerLayout {
        let spacing = if count == 0 { 0.0 } else { length_m / count as f64 };
        let positions = (0..count).map(|i| i as f64 * spacing).collect();
        ServerLayout {
            positions_m: positions,
            spacing_m: spacing,
            count,
        }
    }
}

/// Places `floor(L/d)` servers at pitch `d` (or exactly `k` servers at
/// pitch `L/k`), centered on the highway.
pub fn place_servers(length_m: f64, by: SpacingSpec) -> Result<ServerLayout> {
    let (count, spacing) = match by {
        SpacingSpec::Spacing(d) => {
            if !(d > 0.0) {
                return Err(Error::NonPositiveSpacing);
            }
            ((length_m / d).floor() as usize, d)
        }
        SpacingSpec::Count(k) => {
            let spacing = if k == 0 { 0.0 } else { length_m / k as f64 };
            (k, spacing)
        }
    };
    if count == 0 {
        return Ok(ServerLayout {
            positions_m: Vec::new(),
            spacing_m: spacing,
            count: 0,
        });
    }
    let offset = (length_m - (count - 1) as f64 * spacing) / 2.0;
    let positions = (0..count).map(|i| offset + i as f64 * spacing).collect();
    Ok(ServerLayout {
        positions_m: positions,
        spacing_m: spacing,
        count,
    })
}

/// Wiring among ESs: two servers are wire-connected iff their labels agree.
#[derive(Debug, Clone, PartialEq)]
pub enum ConnectionTopology {
    /// g_c(x) = 1: one wired network.
    Connected,
    /// g_u(x) = x: every server isolated.
    Unconnected,
    /// Explicit label per server, indexed by server id.
    Custom(Vec<u64>),
}

impl ConnectionTopology {
    pub fn label(&self, server: usize) -> u64 {
        match self {
            ConnectionTopology::Connected => 1,
            ConnectionTopology::Unconnected => server as u64,
            ConnectionTopology::Custom(labels) => labels[server],
        }
    }
}

/// Servers directly connected to `server`: the nearest same-label server
/// on each side, with no same-label server in between. At most two.
pub fn direct_neighbors(
    layout: &ServerLayout,
    topology: &ConnectionTopology,
    server: usize,
) -> Result<Vec<usize>> {
    if server >= layout.count() {
        return Err(Error::UnknownServer(server));
    }
    if let ConnectionTopology::Custom(labels) = topology {
        if labels.len() != layout.count() {
            return Err(Error::LabelCountMismatch {
                labels: labels.len(),
                servers: layout.count(),
            });
        }
    }
    let label = topology.label(server);
    let mut neighbors = Vec::with_capacity(2);
    if let Some(left) = (0..server).rev().find(|&x| topology.label(x) == label) {
        neighbors.push(left);
    }
    if let Some(right) = (server + 1..layout.count()).find(|&x| topology.label(x) == label) {
        neighbors.push(right);
    }
    Ok(neighbors)
}
