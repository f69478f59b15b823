//! Preferential attachment trees (discrete and continuous time),
//! midpoint-cut percolation, cluster observables, and samplers for the
//! limit variables W, the root-cluster chain, f-paths, and the coupled
//! cluster-size bounds.
//!
//! Node labels are 1-based and assigned in arrival order. The root carries
//! one half-edge, so its degree starts at 1 and the weight identity
//! weight(i) = b (degree(i) - 1) + 1 holds for every node.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fenwick::WeightTree;
use crate::theory;

/// An increasing tree built by weight-proportional attachment.
#[derive(Clone, Debug)]
pub struct PATree {
    b: f64,
    parent: Vec<u32>, // parent[i-1] = parent of node i; 0 for the root
    degree: Vec<u32>,
    event_times: Option<Vec<f64>>,
}

impl PATree {
    pub fn n(&self) -> usize {
        self.degree.len()
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Parent label of node i (0 for the root).
    pub fn parent(&self, i: usize) -> usize {
        self.parent[i - 1] as usize
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.degree[i - 1]
    }

    /// Attachment weight of node i: b (degree - 1) + 1, exact.
    pub fn weight(&self, i: usize) -> f64 {
        self.b * f64::from(self.degree[i - 1] - 1) + 1.0
    }

    /// Total weight b(n-1) + n, from integer degree counts.
    pub fn total_weight(&self) -> f64 {
        let n = self.n() as f64;
        self.b * (n - 1.0) + n
    }

    /// Arrival times tau_1..tau_n of the continuous-time build, if any.
    pub fn event_times(&self) -> Option<&[f64]> {
        self.event_times.as_deref()
    }
}

fn grow<R: Rng + ?Sized>(n: usize, b: f64, continuous: bool, rng: &mut R) -> Result<PATree> {
    if n == 0 {
        return Err(Error::parameter("tree size must be >= 1"));
    }
    if b < 0.0 {
        return Err(Error::parameter("b must be >= 0"));
    }
    let mut parent = vec![0u32; n];
    let mut degree = vec![1u32; n]; // root's half-edge; new nodes join with one edge
    let mut times = continuous.then(|| vec![0.0f64; n]);
    let mut weights = WeightTree::with_capacity(n);
    weights.push(1.0);
    let mut now = 0.0f64;
    for k in 2..=n {
        if let Some(times) = times.as_mut() {
            // competing exponentials: next arrival after Exp(b(k-2)+(k-1))
            let rate = b * (k as f64 - 2.0) + (k as f64 - 1.0);
            now += standard_exp(rng) / rate;
            times[k - 1] = now;
        }
        let target = weights.sample(rng);
        let old = b * f64::from(degree[target - 1] - 1) + 1.0;
        degree[target - 1] += 1;
        let new = b * f64::from(degree[target - 1] - 1) + 1.0;
        weights.add(target, new - old);
        weights.push(1.0);
        parent[k - 1] = target as u32;
    }
    Ok(PATree { b, parent, degree, event_times: times })
}

fn standard_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let e = -(1.0 - rng.random::<f64>()).ln();
        if e > 0.0 {
            return e;
        }
    }
}

/// Discrete-time build: node k attaches to a node of the (k-1)-tree with
/// probability proportional to its weight.
pub fn grow_discrete<R: Rng + ?Sized>(n: usize, b: f64, rng: &mut R) -> Result<PATree> {
    grow(n, b, false, rng)
}

/// Continuous-time build via competing exponential clocks; records the
/// arrival times tau_1 = 0 < tau_2 < ... < tau_n.
pub fn grow_continuous<R: Rng + ?Sized>(n: usize, b: f64, rng: &mut R) -> Result<PATree> {
    grow(n, b, true, rng)
}

/// One percolation cluster: root label, node count, attached half-edges,
/// and (continuous builds) its birth time.
#[derive(Clone, Copy, Debug)]
pub struct Cluster {
    pub root: u32,
    pub size: u32,
    pub half_edges: u32,
    pub birth_time: Option<f64>,
}

/// A percolated tree: cut flags per edge, a cluster id per node, and the
/// clusters ordered by root label (equivalently by birth time, since
/// labels are assigned in arrival order).
#[derive(Clone, Debug)]
pub struct PATForest {
    pub tree: PATree,
    cut: Vec<bool>, // cut[i-1]: edge from node i to its parent was cut (root: false)
    cluster_of: Vec<u32>,
    clusters: Vec<Cluster>,
}

/// Cuts each edge at its midpoint with probability 1 - p, independently,
/// and labels the clusters. `p` may be 0 or 1 to force the degenerate
/// configurations.
pub fn percolate<R: Rng + ?Sized>(tree: PATree, p: f64, rng: &mut R) -> Result<PATForest> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::parameter(format!("percolation parameter must be in [0,1], got {p}")));
    }
    let n = tree.n();
    let mut cut = vec![false; n];
    for flag in cut.iter_mut().skip(1) {
        *flag = rng.random::<f64>() > p;
    }
    Ok(assemble(tree, cut))
}

fn assemble(tree: PATree, cut: Vec<bool>) -> PATForest {
    let n = tree.n();
    let mut cluster_of = vec![0u32; n];
    let mut clusters: Vec<Cluster> = vec![Cluster {
        root: 1,
        size: 1,
        half_edges: 0,
        birth_time: tree.event_times().map(|t| t[0]),
    }];
    for i in 2..=n {
        let id = if cut[i - 1] {
            clusters.push(Cluster {
                root: i as u32,
                size: 0,
                half_edges: 0,
                birth_time: tree.event_times().map(|t| t[i - 1]),
            });
            (clusters.len() - 1) as u32
        } else {
            cluster_of[tree.parent(i) - 1]
        };
        cluster_of[i - 1] = id;
        clusters[id as usize].size += 1;
    }
    // half-edges: the root's original one, plus two per cut edge (one on
    // each side); cutting preserves degrees
    clusters[0].half_edges += 1;
    for i in 2..=n {
        if cut[i - 1] {
            clusters[cluster_of[i - 1] as usize].half_edges += 1;
            clusters[cluster_of[tree.parent(i) - 1] as usize].half_edges += 1;
        }
    }
    // enumeration orders by root label and by birth time coincide
    debug_assert!(clusters.windows(2).all(|w| w[0].root < w[1].root));
    if tree.event_times().is_some() {
        debug_assert!(clusters
            .windows(2)
            .all(|w| w[0].birth_time.unwrap() < w[1].birth_time.unwrap()));
    }
    PATForest { tree, cut, cluster_of, clusters }
}

impl PATForest {
    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn cut_count(&self) -> usize {
        self.cut.iter().filter(|&&c| c).count()
    }

    pub fn is_cut(&self, i: usize) -> bool {
        self.cut[i - 1]
    }

    /// Cluster index (0-based) containing node i.
    pub fn cluster_of(&self, i: usize) -> usize {
        self.cluster_of[i - 1] as usize
    }

    /// Size of the cluster rooted at node i, or 0 when the subtree at i is
    /// not a percolation cluster (its parent edge is intact).
    pub fn size_rooted_at(&self, i: usize) -> u32 {
        if i == 1 || self.cut[i - 1] {
            let id = self.cluster_of[i - 1] as usize;
            self.clusters[id].size
        } else {
            0
        }
    }

    /// Rows (node, parent, cut, cluster index) for export.
    pub fn dump_rows(&self) -> impl Iterator<Item = (usize, usize, bool, usize)> + '_ {
        (1..=self.tree.n()).map(move |i| {
            let parent = if i == 1 { 0 } else { self.tree.parent(i) };
            (i, parent, self.cut[i - 1], self.cluster_of[i - 1] as usize)
        })
    }
}

/// Branching functional Y of a cluster: b(size - 2 + half_edges) + size.
pub fn y_value(b: f64, size: u32, half_edges: u32) -> f64 {
    b * (f64::from(size) - 2.0 + f64::from(half_edges)) + f64::from(size)
}

/// Y value of the forest's i-th cluster (1-based, ordered by root label);
/// 0 for an absent cluster, matching the indicator in its definition.
pub fn cluster_y_value(forest: &PATForest, i: usize) -> f64 {
    match forest.clusters.get(i - 1) {
        Some(c) => y_value(forest.tree.b(), c.size, c.half_edges),
        None => 0.0,
    }
}

/// One replicate of the scaled root-cluster size |c_1| / n^kappa.
pub fn sample_root_cluster_scaled<R: Rng + ?Sized>(
    n: usize,
    b: f64,
    p: f64,
    rng: &mut R,
) -> Result<f64> {
    theory::validate_bp(b, p)?;
    let tree = grow_discrete(n, b, rng)?;
    let forest = percolate(tree, p, rng)?;
    let kappa = theory::kappa(theory::Model::Srs, b, p);
    Ok(f64::from(forest.clusters()[0].size) / (n as f64).powf(kappa))
}

/// State of the root-cluster jump chain (size, half-edges), started from
/// (1, 1) at its birth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClusterState {
    pub size: u64,
    pub half_edges: u64,
}

impl ClusterState {
    pub fn y_value(&self, b: f64) -> f64 {
        b * (self.size as f64 - 2.0 + self.half_edges as f64) + self.size as f64
    }
}

/// Evolves the root-cluster chain and reads it off at each time in
/// `times` (ascending, nonnegative). Events arrive at rate equal to the
/// current Y value; each event grows the size with probability p and adds
/// a half-edge otherwise. RNG order per event: holding time, then the
/// intact/cut coin.
pub fn cluster_chain_at_times<R: Rng + ?Sized>(
    b: f64,
    p: f64,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<ClusterState>> {
    theory::validate_bp(b, p)?;
    if times.is_empty() || times.windows(2).any(|w| w[0] > w[1]) || times[0] < 0.0 {
        return Err(Error::usage("times must be nonempty, ascending, nonnegative"));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut state = ClusterState { size: 1, half_edges: 1 };
    let mut now = 0.0f64;
    let mut next = 0usize;
    loop {
        let holding = standard_exp(rng) / state.y_value(b);
        let event_at = now + holding;
        while next < times.len() && times[next] < event_at {
            out.push(state);
            next += 1;
        }
        if next == times.len() {
            return Ok(out);
        }
        now = event_at;
        if rng.random::<f64>() < p {
            state.size += 1;
        } else {
            state.half_edges += 1;
        }
    }
}

/// Size-jump times of one root-cluster chain run to `t_max`; the size at
/// time t is 1 + (number of recorded jump times <= t).
#[derive(Clone, Debug)]
pub struct SizeJumpPath {
    jump_times: Vec<f64>,
}

impl SizeJumpPath {
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    /// Right-continuous size at time t; 0 before birth (t < 0).
    pub fn size_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        (1 + self.jump_times.partition_point(|&u| u <= t)) as f64
    }
}

/// Simulates the root-cluster chain up to `t_max`, recording size jumps.
/// A negative `t_max` yields an empty path (nothing is ever born).
pub fn cluster_chain_path<R: Rng + ?Sized>(
    b: f64,
    p: f64,
    t_max: f64,
    rng: &mut R,
) -> Result<SizeJumpPath> {
    theory::validate_bp(b, p)?;
    let mut jump_times = Vec::new();
    if t_max < 0.0 {
        return Ok(SizeJumpPath { jump_times });
    }
    let mut state = ClusterState { size: 1, half_edges: 1 };
    let mut now = 0.0f64;
    loop {
        now += standard_exp(rng) / state.y_value(b);
        if now > t_max {
            return Ok(SizeJumpPath { jump_times });
        }
        if rng.random::<f64>() < p {
            state.size += 1;
            jump_times.push(now);
        } else {
            state.half_edges += 1;
        }
    }
}

/// Time substitution of the f-path: f(x) = size of the root-cluster chain
/// at time (ln(1-p) - ln x)/(b+1), zero for x >= 1-p.
pub fn f_time(x: f64, b: f64, p: f64) -> f64 {
    ((1.0 - p).ln() - x.ln()) / (b + 1.0)
}

/// Samples the random step function f on a positive ascending grid by
/// simulating one root-cluster trajectory and reading its size at the
/// substituted times.
pub fn sample_f_path<R: Rng + ?Sized>(
    x_grid: &[f64],
    b: f64,
    p: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if x_grid.is_empty() || x_grid[0] <= 0.0 || x_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::usage("x_grid must be nonempty, positive, ascending"));
    }
    theory::validate_bp(b, p)?;
    let t_max = f_time(x_grid[0], b, p);
    let path = cluster_chain_path(b, p, t_max, rng)?;
    Ok(x_grid
        .iter()
        .map(|&x| if x >= 1.0 - p { 0.0 } else { path.size_at(f_time(x, b, p)) })
        .collect())
}

/// One coupled draw of the cluster-size bounds (X_under, X_bar): the same
/// trajectory read at the birth-time bound offsets t_minus <= t_plus.
/// Values at negative offsets are 0 (sizes vanish before birth).
pub fn sample_xbar_xunder<R: Rng + ?Sized>(
    i: usize,
    n: usize,
    eps: f64,
    b: f64,
    p: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if i < 2 {
        return Err(Error::parameter("the upper bound time requires i >= 2"));
    }
    let (t_minus, t_plus) = theory::birth_time_bounds(n, i, b, p, eps)?;
    let path = cluster_chain_path(b, p, t_plus.max(0.0), rng)?;
    Ok((path.size_at(t_minus), path.size_at(t_plus)))
}

/// Martingale value exp(-(b+1) t_max) Y(t_max) of the whole-tree count
/// process, an approximate draw of the Gamma(1/(b+1), 1/(b+1)) limit W.
pub fn sample_w<R: Rng + ?Sized>(b: f64, t_max: f64, rng: &mut R) -> Result<f64> {
    if b < 0.0 || t_max <= 0.0 {
        return Err(Error::parameter("need b >= 0 and t_max > 0"));
    }
    let mut count: u64 = 1;
    let mut now = 0.0f64;
    loop {
        let rate = b * (count as f64 - 1.0) + count as f64;
        now += standard_exp(rng) / rate;
        if now > t_max {
            let y = b * (count as f64 - 1.0) + count as f64;
            return Ok((-(b + 1.0) * t_max).exp() * y);
        }
        count += 1;
    }
}

/// Grows a percolated tree in a single pass (the strong model's cut
/// decision can be taken at insertion time) and records the sum of squared
/// cluster sizes at each checkpoint. Per node the RNG order is: the
/// attachment target, then the cut coin.
///
/// Conditionally on the cluster sizes, the strong walk's position is a
/// stable mixture of one spin per cluster, so this sum gives its variance
/// without spin noise: Var(S_n) = Var(xi) * E[sum of squared sizes].
pub fn percolated_sum_sq_at<R: Rng + ?Sized>(
    b: f64,
    p: f64,
    checkpoints: &[usize],
    rng: &mut R,
) -> Result<Vec<f64>> {
    theory::validate_bp(b, p)?;
    if checkpoints.is_empty()
        || checkpoints[0] == 0
        || checkpoints.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::usage("checkpoints must be ascending and >= 1"));
    }
    let n = *checkpoints.last().unwrap();
    let mut weights = WeightTree::with_capacity(n);
    weights.push(1.0);
    let mut degree = vec![1u32; n];
    let mut cluster_of = vec![0u32; n];
    let mut cluster_sizes: Vec<u64> = vec![1];
    let mut sum_sq: f64 = 1.0;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    if checkpoints[0] == 1 {
        out.push(sum_sq);
        next = 1;
    }
    for k in 2..=n {
        let target = weights.sample(rng);
        let old = b * f64::from(degree[target - 1] - 1) + 1.0;
        degree[target - 1] += 1;
        let new = b * f64::from(degree[target - 1] - 1) + 1.0;
        weights.add(target, new - old);
        weights.push(1.0);
        let id = if rng.random::<f64>() <= p {
            let id = cluster_of[target - 1];
            let size = &mut cluster_sizes[id as usize];
            sum_sq += (2 * *size + 1) as f64;
            *size += 1;
            id
        } else {
            cluster_sizes.push(1);
            sum_sq += 1.0;
            (cluster_sizes.len() - 1) as u32
        };
        cluster_of[k - 1] = id;
        if next < checkpoints.len() && checkpoints[next] == k {
            out.push(sum_sq);
            next += 1;
        }
    }
    Ok(out)
}

/// Arrival time tau_n of the n-th node in the continuous-time build
/// (count process only).
pub fn sample_tau_n<R: Rng + ?Sized>(n: usize, b: f64, rng: &mut R) -> Result<f64> {
    if n == 0 || b < 0.0 {
        return Err(Error::parameter("need n >= 1 and b >= 0"));
    }
    let mut now = 0.0f64;
    for k in 1..n {
        let rate = b * (k as f64 - 1.0) + k as f64;
        now += standard_exp(rng) / rate;
    }
    Ok(now)
}
