use super::{CommunityError, Partition};
use crate::graph::{NodeId, UndirectedGraph};

/// Which pairs enter the modularity sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModularityVariant {
    /// Newman modularity over all ordered same-community pairs, `i = j`
    /// included. This is the quantity Louvain maximizes.
    #[default]
    Standard,
    /// The same sum restricted to `i != j`.
    OffDiagonal,
}

/// Modularity of `p` on `g`:
///
/// `Q = 1/2m · Σ (A_ij − k_i·k_j / 2m) · δ(c_i, c_j)`
///
/// evaluated per community as `Σ_in/2m − (Σ_tot/2m)²`, where `Σ_in` sums the
/// matrix entries inside the community and `Σ_tot` its degrees. The
/// [`OffDiagonal`](ModularityVariant::OffDiagonal) variant removes the
/// diagonal terms `A_ii − k_i²/2m`. A graph without edges scores 0.
pub fn modularity(g: &UndirectedGraph, p: &Partition, variant: ModularityVariant) -> Result<f64, CommunityError> {
    if p.node_count() != g.node_count() {
        return Err(CommunityError::SizeMismatch { partition: p.node_count(), graph: g.node_count() });
    }
    let two_m = g.two_m();
    if two_m == 0.0 {
        return Ok(0.0);
    }
    let mut q = 0.0;
    for (c, members) in p.communities() {
        let mut sigma_in = 0.0;
        let mut sigma_tot = 0.0;
        let mut diagonal = 0.0;
        let mut squared_degrees = 0.0;
        for &i in members {
            let k = g.degree(i);
            sigma_tot += k;
            squared_degrees += k * k;
            for (j, w) in g.neighbors(i) {
                if p.community_of(j) == c {
                    sigma_in += w;
                }
            }
            diagonal += g.weight(i, i as NodeId);
        }
        q += match variant {
            ModularityVariant::Standard => sigma_in / two_m - (sigma_tot / two_m).powi(2),
            ModularityVariant::OffDiagonal => {
                (sigma_in - diagonal) / two_m - (sigma_tot * sigma_tot - squared_degrees) / (two_m * two_m)
            }
        };
    }
    Ok(q)
}
