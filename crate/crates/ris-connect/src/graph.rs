//! Weighted connectivity graph over the UE and the UAVs, its Laplacian, and
//! spectral connectivity measures.
//!
//! Node 0 is the UE; node `1 + k` is UAV `k`. Edge weights are SNRs in dB
//! clamped at zero from below, which keeps the Laplacian positive
//! semidefinite and the connectivity values at the magnitude the experiment
//! tables expect. Graphs here are tiny (V <= ~20), so the eigensolver is a
//! plain cyclic Jacobi iteration on the dense matrix.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::scenario::ScenarioConfig;
use crate::units::linear_to_db;

/// Node role in the connectivity graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Ue,
    Uav(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub u: usize,
    pub v: usize,
    pub weight: T,
}

/// Undirected weighted graph; each pair is stored once, no self-loops,
/// weights nonnegative and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph<T: Scalar> {
    nodes: Vec<NodeKind>,
    edges: Vec<Edge<T>>,
}

impl<T: Scalar> NetworkGraph<T> {
    /// Empty graph over the UE plus `n_uavs` UAVs.
    pub fn new(n_uavs: usize) -> Self {
        let mut nodes = vec![NodeKind::Ue];
        nodes.extend((0..n_uavs).map(NodeKind::Uav));
        Self {
            nodes,
            edges: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_kind(&self, idx: usize) -> NodeKind {
        self.nodes[idx]
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges
            .iter()
            .any(|e| (e.u == u && e.v == v) || (e.u == v && e.v == u))
    }

    pub fn add_edge(&mut self, u: usize, v: usize, weight: T) -> Result<()> {
        let n = self.node_count();
        if u >= n || v >= n {
            return Err(Error::Contract(format!("edge ({u},{v}) out of range")));
        }
        if u == v {
            return Err(Error::Contract(format!("self-loop at node {u}")));
        }
        if weight < T::zero() || !weight.is_finite() {
            return Err(Error::Contract(format!(
                "edge ({u},{v}) weight must be finite and nonnegative"
            )));
        }
        if self.has_edge(u, v) {
            return Err(Error::Contract(format!("duplicate edge ({u},{v})")));
        }
        self.edges.push(Edge { u, v, weight });
        Ok(())
    }

    /// Copy without node `idx` and its incident edges; remaining nodes are
    /// reindexed downward.
    pub fn without_node(&self, idx: usize) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.remove(idx);
        let remap = |i: usize| if i > idx { i - 1 } else { i };
        let edges = self
            .edges
            .iter()
            .filter(|e| e.u != idx && e.v != idx)
            .map(|e| Edge {
                u: remap(e.u),
                v: remap(e.v),
                weight: e.weight,
            })
            .collect();
        Self { nodes, edges }
    }

    /// Copy without any edge touching the UE (node 0).
    pub fn without_ue_edges(&self) -> Self {
        Self {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .copied()
                .filter(|e| e.u != 0 && e.v != 0)
                .collect(),
        }
    }

    /// Connectivity by traversal over edges with positive weight.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut visited = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    visited += 1;
                    stack.push(v);
                }
            }
        }
        visited == n
    }

    /// Adjacency-list export, one `u v weight` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {:.12e}", e.u, e.v, e.weight);
        }
        s
    }

    pub fn laplacian(&self) -> LaplacianMatrix<T> {
        LaplacianMatrix::from_graph(self)
    }
}

/// Dense symmetric V x V Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> LaplacianMatrix<T> {
    /// Element-wise construction: weighted degree on the diagonal, minus the
    /// edge weight off-diagonal.
    pub fn from_graph(graph: &NetworkGraph<T>) -> Self {
        let n = graph.node_count();
        let mut data = vec![T::zero(); n * n];
        for e in graph.edges() {
            data[e.u * n + e.u] += e.weight;
            data[e.v * n + e.v] += e.weight;
            data[e.u * n + e.v] -= e.weight;
            data[e.v * n + e.u] -= e.weight;
        }
        Self { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "matrix must be square");
            data.extend(row);
        }
        Self { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        symmetric_eigenvalues(&self.data, self.n)
    }
}

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations,
/// ascending. Intended for the small matrices this crate builds.
pub fn symmetric_eigenvalues<T: Scalar>(data: &[T], n: usize) -> Vec<T> {
    assert_eq!(data.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![data[0]];
    }
    let mut a = data.to_vec();
    let idx = |i: usize, j: usize| i * n + j;

    let norm = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let eps = T::epsilon() * T::of(16.0) * norm.max(T::one());

    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[idx(i, j)].abs());
            }
        }
        if off <= eps {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq.abs() <= eps * T::of(1e-3) {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                let tau = (aqq - app) / (T::of(2.0) * apq);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    if k != p && k != q {
                        let akp = a[idx(k, p)];
                        let akq = a[idx(k, q)];
                        a[idx(k, p)] = c * akp - s * akq;
                        a[idx(p, k)] = a[idx(k, p)];
                        a[idx(k, q)] = s * akp + c * akq;
                        a[idx(q, k)] = a[idx(k, q)];
                    }
                }
                a[idx(p, p)] = c * c * app - T::of(2.0) * s * c * apq + s * s * aqq;
                a[idx(q, q)] = s * s * app + T::of(2.0) * s * c * apq + c * c * aqq;
                a[idx(p, q)] = T::zero();
                a[idx(q, p)] = T::zero();
            }
        }
    }

    let mut evals: Vec<T> = (0..n).map(|i| a[idx(i, i)]).collect();
    evals.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    evals
}

/// Second-smallest Laplacian eigenvalue. Values below the disconnection
/// tolerance `1e-9 * max(1, lambda_max)` are reported as exactly zero.
pub fn algebraic_connectivity<T: Scalar>(lap: &LaplacianMatrix<T>) -> Result<T> {
    let sym_tol = T::of(1e-9);
    if !lap.is_symmetric(sym_tol) {
        return Err(Error::Contract("Laplacian must be symmetric".into()));
    }
    let n = lap.size();
    if n < 2 {
        return Ok(T::zero());
    }
    let evals = lap.eigenvalues();
    let lambda_max = *evals.last().expect("nonempty spectrum");
    let tol = T::of(1e-9) * lambda_max.max(T::one());
    let lambda2 = evals[1];
    Ok(if lambda2 < tol { T::zero() } else { lambda2 })
}

/// Reliability of dropping `node`: the reciprocal connectivity of the graph
/// without it. Disconnected remainders yield `+inf`. The UE cannot be
/// dropped.
pub fn reliability<T: Scalar>(graph: &NetworkGraph<T>, node: usize) -> Result<T> {
    if node >= graph.node_count() {
        return Err(Error::domain("reliability", format!("node {node} out of range")));
    }
    if graph.node_kind(node) == NodeKind::Ue {
        return Err(Error::domain(
            "reliability",
            "reliability is defined for UAV nodes, not the UE",
        ));
    }
    let remainder = graph.without_node(node);
    let lambda2 = algebraic_connectivity(&remainder.laplacian())?;
    if lambda2 == T::zero() {
        Ok(T::infinity())
    } else {
        Ok(T::one() / lambda2)
    }
}

/// Reliability of removing UAV `k`.
pub fn uav_reliability<T: Scalar>(graph: &NetworkGraph<T>, k: usize) -> Result<T> {
    reliability(graph, k + 1)
}

/// Extend a graph with the reflected UE edges toward the blocked UAVs. Edge
/// weights are the linear SNRs in dB, clamped at zero. The input graph is
/// untouched.
pub fn add_ris_edges<T: Scalar>(
    graph: &NetworkGraph<T>,
    blocked: &[usize],
    ris_snrs: &[T],
) -> Result<NetworkGraph<T>> {
    if blocked.len() != ris_snrs.len() {
        return Err(Error::Contract(
            "one SNR per blocked UAV required".into(),
        ));
    }
    let mut out = graph.clone();
    for (&k, &snr) in blocked.iter().zip(ris_snrs) {
        let node = 1 + k;
        if out.has_edge(0, node) {
            return Err(Error::Contract(format!(
                "UE already linked to blocked UAV {k}"
            )));
        }
        let weight = linear_to_db(snr).max(T::zero());
        out.add_edge(0, node, weight)?;
    }
    Ok(out)
}

/// Build the connectivity graph from SNR tables.
///
/// A UAV-UAV edge exists iff its dB SNR meets `thr_uav_db` (inclusive); a
/// direct UE edge exists iff the UAV is not blocked and its linear SNR meets
/// `thr_ue_db` in dB. Weights are the dB SNRs clamped at zero.
pub fn build_graph(
    config: &ScenarioConfig,
    direct_snrs: &[f64],
    uav_snrs_db: &[Vec<f64>],
) -> Result<NetworkGraph<f64>> {
    let k = config.n_uavs;
    if direct_snrs.len() != k || uav_snrs_db.len() != k {
        return Err(Error::Contract("SNR tables must cover all UAVs".into()));
    }
    let mut g = NetworkGraph::new(k);
    for a in 0..k {
        for b in (a + 1)..k {
            let snr_db = uav_snrs_db[a][b];
            if snr_db >= config.thr_uav_db {
                g.add_edge(1 + a, 1 + b, snr_db.max(0.0))?;
            }
        }
    }
    for (a, &snr) in direct_snrs.iter().enumerate() {
        if config.is_blocked(a) {
            continue;
        }
        let snr_db = linear_to_db(snr);
        if snr_db >= config.thr_ue_db {
            g.add_edge(0, 1 + a, snr_db.max(0.0))?;
        }
    }
    Ok(g)
}

/// Symmetric K x K table of UAV-UAV SNRs in dB (diagonal zero). Purely
/// geometric, so it is computed once per scenario.
pub fn uav_snr_table(config: &ScenarioConfig) -> Result<Vec<Vec<f64>>> {
    let k = config.n_uavs;
    let mut table = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let snr = crate::channel::snr_uav_uav(config, a, b)?;
            table[a][b] = snr;
            table[b][a] = snr;
        }
    }
    Ok(table)
}

/// Direct UE-UAV linear SNRs for one realization; blocked entries are zero
/// placeholders (they never form edges).
pub fn direct_snr_table(
    config: &ScenarioConfig,
    realization: &crate::channel::ChannelRealization,
) -> Vec<f64> {
    (0..config.n_uavs)
        .map(|k| {
            if config.is_blocked(k) {
                0.0
            } else {
                crate::channel::snr_direct(config, k, realization)
                    .expect("unblocked direct SNR")
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{default_scenario, stream_rng, StreamPurpose};
    use rand::Rng;

    fn complete_graph(v: usize, w: f64) -> NetworkGraph<f64> {
        let mut g = NetworkGraph::new(v - 1);
        for a in 0..v {
            for b in (a + 1)..v {
                g.add_edge(a, b, w).unwrap();
            }
        }
        g
    }

    fn random_graph(
        v: usize,
        extra_edges: usize,
        connected: bool,
        rng: &mut impl Rng,
    ) -> NetworkGraph<f64> {
        let mut g = NetworkGraph::new(v - 1);
        if connected {
            // random spanning tree
            for node in 1..v {
                let parent = rng.random_range(0..node);
                g.add_edge(parent, node, rng.random_range(0.1..10.0)).unwrap();
            }
        } else {
            // two blocks with no crossing edge
            let split = v / 2;
            for node in 1..split {
                let parent = rng.random_range(0..node);
                g.add_edge(parent, node, rng.random_range(0.1..10.0)).unwrap();
            }
            for node in (split + 1)..v {
                let parent = rng.random_range(split..node);
                g.add_edge(parent, node, rng.random_range(0.1..10.0)).unwrap();
            }
        }
        for _ in 0..extra_edges {
            let a = rng.random_range(0..v);
            let b = rng.random_range(0..v);
            let crosses = !connected && (a < v / 2) != (b < v / 2);
            if a != b && !g.has_edge(a, b) && !crosses {
                g.add_edge(a, b, rng.random_range(0.1..10.0)).unwrap();
            }
        }
        g
    }

    #[test]
    fn laplacian_smallest_cases() {
        let mut g = NetworkGraph::<f64>::new(1);
        g.add_edge(0, 1, 3.5).unwrap();
        let l = g.laplacian();
        assert_eq!(l.get(0, 0), 3.5);
        assert_eq!(l.get(1, 1), 3.5);
        assert_eq!(l.get(0, 1), -3.5);
        assert_eq!(l.get(1, 0), -3.5);

        let empty = NetworkGraph::<f64>::new(2).laplacian();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(empty.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn laplacian_matches_incidence_product() {
        // Sum of w_l a_l a_l^T over edges must equal the element-wise build.
        let mut rng = stream_rng(3, StreamPurpose::Trial, 0);
        let g = random_graph(6, 6, true, &mut rng);
        let l = g.laplacian();
        let n = g.node_count();
        let mut m = vec![vec![0.0; n]; n];
        for e in g.edges() {
            let mut a = vec![0.0; n];
            a[e.u] = 1.0;
            a[e.v] = -1.0;
            for i in 0..n {
                for j in 0..n {
                    m[i][j] += e.weight * a[i] * a[j];
                }
            }
        }
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                assert!((l.get(i, j) - m[i][j]).abs() < 1e-12);
                row_sum += l.get(i, j);
            }
            assert!(row_sum.abs() < 1e-12, "rows sum to zero");
        }
    }

    #[test]
    fn connectivity_of_reference_spectra() {
        for v in 2..=8 {
            let g = complete_graph(v, 1.0);
            let l2 = algebraic_connectivity(&g.laplacian()).unwrap();
            assert!(
                (l2 - v as f64).abs() < 1e-9,
                "complete graph on {v}: {l2}"
            );
        }

        // Path on 3 nodes has spectrum {0, 1, 3}.
        let mut p3 = NetworkGraph::<f64>::new(2);
        p3.add_edge(0, 1, 1.0).unwrap();
        p3.add_edge(1, 2, 1.0).unwrap();
        let evals = p3.laplacian().eigenvalues();
        assert!(evals[0].abs() < 1e-12);
        assert!((evals[1] - 1.0).abs() < 1e-12);
        assert!((evals[2] - 3.0).abs() < 1e-12);
        assert!((algebraic_connectivity(&p3.laplacian()).unwrap() - 1.0).abs() < 1e-12);

        let mut disconnected = NetworkGraph::<f64>::new(3);
        disconnected.add_edge(0, 1, 2.0).unwrap();
        disconnected.add_edge(2, 3, 2.0).unwrap();
        assert_eq!(algebraic_connectivity(&disconnected.laplacian()).unwrap(), 0.0);
    }

    #[test]
    fn connectivity_rejects_asymmetric_input() {
        let l = LaplacianMatrix::from_rows(vec![vec![1.0, -1.0], vec![0.5, 1.0]]);
        assert!(matches!(
            algebraic_connectivity(&l),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn laplacian_is_positive_semidefinite() {
        let mut rng = stream_rng(4, StreamPurpose::Trial, 1);
        for trial in 0..50 {
            let v = 3 + (trial % 6);
            let g = random_graph(v, 2 * v, trial % 3 != 0, &mut rng);
            let evals = g.laplacian().eigenvalues();
            let bound = -1e-9 * evals.last().unwrap().max(1.0);
            assert!(evals[0] >= bound, "negative eigenvalue {}", evals[0]);
        }
    }

    #[test]
    fn lambda2_positive_iff_connected() {
        let mut rng = stream_rng(5, StreamPurpose::Trial, 2);
        for trial in 0..300 {
            let v = 4 + (trial % 8);
            let connected = trial % 2 == 0;
            let g = random_graph(v, v, connected, &mut rng);
            let l2 = algebraic_connectivity(&g.laplacian()).unwrap();
            assert_eq!(
                l2 > 0.0,
                g.is_connected(),
                "v={v} connected={} l2={l2}",
                g.is_connected()
            );
        }
    }

    #[test]
    fn lambda2_monotone_in_added_edges_and_weights() {
        let mut rng = stream_rng(6, StreamPurpose::Trial, 3);
        for trial in 0..200 {
            let v = 4 + (trial % 6);
            let g = random_graph(v, v / 2, trial % 2 == 0, &mut rng);
            let before = algebraic_connectivity(&g.laplacian()).unwrap();

            // add one random missing edge
            let mut g2 = g.clone();
            'outer: for a in 0..v {
                for b in (a + 1)..v {
                    if !g2.has_edge(a, b) {
                        g2.add_edge(a, b, rng.random_range(0.1..5.0)).unwrap();
                        break 'outer;
                    }
                }
            }
            let after = algebraic_connectivity(&g2.laplacian()).unwrap();
            assert!(after >= before - 1e-9, "edge addition decreased lambda2");

            // scale one existing edge up
            if !g.edges().is_empty() {
                let mut g3 = g.clone();
                let pick = rng.random_range(0..g3.edges.len());
                g3.edges[pick].weight *= 3.0;
                let scaled = algebraic_connectivity(&g3.laplacian()).unwrap();
                assert!(scaled >= before - 1e-9, "weight increase decreased lambda2");
            }
        }
    }

    #[test]
    fn reliability_of_star_and_random_graphs() {
        // Star with the hub at UAV node 1: dropping a leaf keeps the
        // remainder connected; dropping the hub shatters it.
        let v = 6;
        let mut star = NetworkGraph::<f64>::new(v - 1);
        for other in (2..v).chain([0]) {
            star.add_edge(1, other, 1.0).unwrap();
        }
        let leaf_r = reliability(&star, 2).unwrap();
        assert!(leaf_r.is_finite());
        let hub_r = reliability(&star, 1).unwrap();
        assert!(hub_r.is_infinite());

        assert!(reliability(&star, 0).is_err(), "UE removal is undefined");

        // Brute-force check on random connected graphs: R_j from the
        // sub-Laplacian spectrum.
        let mut rng = stream_rng(7, StreamPurpose::Trial, 4);
        for _ in 0..20 {
            let g = random_graph(5, 4, true, &mut rng);
            for node in 1..5 {
                let r = reliability(&g, node).unwrap();
                let sub = g.without_node(node);
                let evals = sub.laplacian().eigenvalues();
                let l2 = evals[1];
                if l2 < 1e-9 * evals.last().unwrap().max(1.0) {
                    assert!(r.is_infinite());
                } else {
                    assert!((r - 1.0 / l2).abs() / r < 1e-9);
                }
            }
        }
    }

    #[test]
    fn reliability_is_scale_covariant() {
        let mut rng = stream_rng(8, StreamPurpose::Trial, 5);
        let g = random_graph(6, 5, true, &mut rng);
        let scale = 3.7;
        let mut scaled = g.clone();
        for e in &mut scaled.edges {
            e.weight *= scale;
        }
        let mut order = Vec::new();
        let mut order_scaled = Vec::new();
        for node in 1..6 {
            let r = reliability(&g, node).unwrap();
            let rs = reliability(&scaled, node).unwrap();
            if r.is_finite() {
                assert!((rs - r / scale).abs() / rs < 1e-9);
            } else {
                assert!(rs.is_infinite());
            }
            order.push((r, node));
            order_scaled.push((rs, node));
        }
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        order_scaled.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ranks: Vec<usize> = order.iter().map(|x| x.1).collect();
        let ranks_scaled: Vec<usize> = order_scaled.iter().map(|x| x.1).collect();
        assert_eq!(ranks, ranks_scaled);
    }

    #[test]
    fn default_scenario_ranks_the_capped_uav_less_reliable() {
        // The split premise: dropping UAV 1 (capped, "y") degrades the
        // network more than dropping UAV 0 (boosted, "x").
        let cfg = default_scenario();
        for t in 0..25 {
            let mut rng = stream_rng(cfg.rng_seed, StreamPurpose::Trial, t);
            let draw = crate::channel::FadingDraw::sample(&cfg, &mut rng).unwrap();
            let g = crate::deploy::base_graph_for_draw(&cfg, &draw).unwrap();
            let r_x = uav_reliability(&g, cfg.blocked_uavs[0]).unwrap();
            let r_y = uav_reliability(&g, cfg.blocked_uavs[1]).unwrap();
            assert!(r_y > r_x, "trial {t}: R_y={r_y} !> R_x={r_x}");
        }
    }

    #[test]
    fn ris_edges_extend_the_graph() {
        let cfg = default_scenario();
        let mut rng = stream_rng(9, StreamPurpose::Trial, 6);
        let r = crate::channel::sample_realization(&cfg, cfg.ris_position, &mut rng).unwrap();
        let g = build_graph(&cfg, &direct_snr_table(&cfg, &r), &uav_snr_table(&cfg).unwrap())
            .unwrap();

        let unchanged = add_ris_edges(&g, &[], &[]).unwrap();
        assert_eq!(unchanged, g);

        let before = algebraic_connectivity(&g.laplacian()).unwrap();
        let extended = add_ris_edges(&g, &cfg.blocked_uavs, &[1e6, 2e5]).unwrap();
        let after = algebraic_connectivity(&extended.laplacian()).unwrap();
        assert!(after >= before - 1e-12);
        assert!(extended.has_edge(0, 1) && extended.has_edge(0, 2));
        assert!(!g.has_edge(0, 1), "input graph untouched");

        // Adding again trips the duplicate-edge contract.
        assert!(matches!(
            add_ris_edges(&extended, &cfg.blocked_uavs, &[1e6, 2e5]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn bridging_two_components_turns_lambda2_positive() {
        // Two triangles bridged through the UE.
        let mut g = NetworkGraph::<f64>::new(6);
        for (a, b) in [(1, 2), (2, 3), (3, 1), (4, 5), (5, 6), (6, 4)] {
            g.add_edge(a, b, 1.0).unwrap();
        }
        g.add_edge(0, 1, 1.0).unwrap();
        assert_eq!(algebraic_connectivity(&g.laplacian()).unwrap(), 0.0);
        let bridged = add_ris_edges(&g, &[3], &[10.0]).unwrap();
        assert!(algebraic_connectivity(&bridged.laplacian()).unwrap() > 0.0);
    }

    #[test]
    fn graph_build_honors_thresholds() {
        let mut cfg = default_scenario();
        cfg.n_uavs = 3;
        cfg.uav_positions = crate::scenario::synth_uav_positions(3, cfg.rng_seed);
        cfg.blocked_uavs = vec![0, 1];

        // All SNRs below threshold: edgeless graph.
        let high = {
            let mut c = cfg.clone();
            c.thr_uav_db = 1e9;
            c.thr_ue_db = 1e9;
            c
        };
        let g = build_graph(&high, &[0.0, 0.0, 1.0], &uav_snr_table(&high).unwrap()).unwrap();
        assert!(g.edges().is_empty());

        // Boundary inclusivity: an edge exactly at threshold exists.
        let table = uav_snr_table(&cfg).unwrap();
        let mut exact = cfg.clone();
        exact.thr_uav_db = table[0][1];
        let g = build_graph(&exact, &[0.0, 0.0, 0.0], &table).unwrap();
        assert!(g.has_edge(1, 2));

        // Hand-evaluated adjacency for a 3-UAV table.
        let mut c = cfg.clone();
        c.thr_uav_db = 60.0;
        c.thr_ue_db = 10.0;
        let table = vec![
            vec![0.0, 61.0, 59.0],
            vec![61.0, 0.0, 66.0],
            vec![59.0, 66.0, 0.0],
        ];
        let direct = vec![0.0, 0.0, crate::units::db_to_linear(12.0)];
        let g = build_graph(&c, &direct, &table).unwrap();
        assert!(g.has_edge(1, 2) && g.has_edge(2, 3) && !g.has_edge(1, 3));
        assert!(g.has_edge(0, 3), "unblocked UAV above threshold");
        assert!(!g.has_edge(0, 1) && !g.has_edge(0, 2), "blocked UAVs");
        assert_eq!(g.edges().len(), 3);
    }

    #[test]
    fn edge_list_export_format() {
        let mut g = NetworkGraph::<f64>::new(2);
        g.add_edge(0, 1, 12.5).unwrap();
        g.add_edge(1, 2, 3.0).unwrap();
        let text = g.to_edge_list();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("0 1 "));
        assert!(lines[1].starts_with("1 2 "));
    }

    #[test]
    fn f32_backend_agrees_on_small_spectra() {
        let mut g = NetworkGraph::<f32>::new(2);
        g.add_edge(0, 1, 1.0).unwrap();
        g.add_edge(1, 2, 1.0).unwrap();
        let l2 = algebraic_connectivity(&g.laplacian()).unwrap();
        assert!((l2 - 1.0).abs() < 1e-5);
    }
}
