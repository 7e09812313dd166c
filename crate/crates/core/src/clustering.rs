//! One-dimensional k-means over per-sample losses.
//!
//! Two clusterers are provided. [`ClusterMethod::ExactDp`] returns the global
//! minimiser of the within-cluster sum of squares: optimal 1-D clusters are
//! contiguous runs of the sorted values, so a dynamic program over the sorted
//! distinct values with prefix sums is exact. [`ClusterMethod::Lloyd`] is the
//! classic assign/update iteration seeded at evenly spaced quantiles.
//!
//! Both return a [`ClusterPartition`] whose clusters are sorted by ascending
//! centroid. Equal values always land in the same cluster, and when there are
//! fewer distinct values than requested clusters the partition has one
//! cluster per distinct value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    #[default]
    ExactDp,
    Lloyd,
}

pub const DEFAULT_LLOYD_MAX_ITER: usize = 100;
pub const DEFAULT_LLOYD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct ClusterRequest<'a> {
    pub losses: &'a [f64],
    pub k: usize,
    pub method: ClusterMethod,
    pub lloyd_max_iter: usize,
    pub lloyd_tol: f64,
}

impl<'a> ClusterRequest<'a> {
    pub fn new(losses: &'a [f64], k: usize) -> Self {
        Self {
            losses,
            k,
            method: ClusterMethod::ExactDp,
            lloyd_max_iter: DEFAULT_LLOYD_MAX_ITER,
            lloyd_tol: DEFAULT_LLOYD_TOL,
        }
    }

    pub fn method(mut self, method: ClusterMethod) -> Self {
        self.method = method;
        self
    }
}

/// Clusters over positions `0..n` of a loss vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPartition {
    requested_k: usize,
    centroids: Vec<f64>,
    members: Vec<Vec<usize>>,
    assignment: Vec<usize>,
}

impl ClusterPartition {
    /// Builds a partition from groups of positions into `losses`.
    ///
    /// Empty groups are dropped, members are sorted, centroids are the member
    /// means, clusters are ordered by centroid and equal centroids merged.
    pub fn from_groups(losses: &[f64], requested_k: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let n = losses.len();
        let mut seen = vec![false; n];
        let mut clusters: Vec<(f64, Vec<usize>)> = Vec::with_capacity(groups.len());
        for mut group in groups.into_iter().filter(|g| !g.is_empty()) {
            group.sort_unstable();
            for &pos in &group {
                if pos >= n || seen[pos] {
                    return Err(Error::usage(format!("position {pos} missing or assigned twice")));
                }
                seen[pos] = true;
            }
            clusters.push((mean_of(losses, &group), group));
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::usage("groups do not cover every loss"));
        }
        clusters.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1[0].cmp(&b.1[0])));

        let mut merged: Vec<(f64, Vec<usize>)> = Vec::with_capacity(clusters.len());
        for (centroid, group) in clusters {
            match merged.last_mut() {
                Some(last) if last.0 == centroid => {
                    last.1.extend(group);
                    last.1.sort_unstable();
                }
                _ => merged.push((centroid, group)),
            }
        }

        let mut assignment = vec![0; n];
        for (j, (_, group)) in merged.iter().enumerate() {
            for &pos in group {
                assignment[pos] = j;
            }
        }
        let (centroids, members) = merged.into_iter().unzip();
        Ok(Self { requested_k, centroids, members, assignment })
    }

    /// Number of non-empty clusters actually produced.
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn requested_k(&self) -> usize {
        self.requested_k
    }

    /// Centroids in strictly ascending order.
    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    /// Positions in cluster `j`, ascending.
    pub fn members(&self, j: usize) -> &[usize] {
        &self.members[j]
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.members
    }

    /// Cluster index for every input position.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

/// Sums in value order so the centroid does not depend on input order.
fn mean_of(losses: &[f64], members: &[usize]) -> f64 {
    let mut values: Vec<f64> = members.iter().map(|&p| losses[p]).collect();
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

fn validate(losses: &[f64], k: usize) -> Result<()> {
    if losses.is_empty() {
        return Err(Error::usage("cannot cluster an empty loss vector"));
    }
    if k == 0 {
        return Err(Error::config("cluster count k must be at least 1"));
    }
    if let Some((id, &loss)) = losses.iter().enumerate().find(|(_, l)| !l.is_finite() || **l < 0.0) {
        return Err(Error::InvalidLoss { id, loss });
    }
    Ok(())
}

/// Within-cluster sum of squared deviations from the cluster means.
///
/// Accumulated in double-double arithmetic, so partitions with the same
/// true SSE evaluate to the same `f64`.
pub fn sse(losses: &[f64], partition: &ClusterPartition) -> Result<f64> {
    if partition.len() != losses.len() {
        return Err(Error::usage(format!("partition covers {} losses, got {}", partition.len(), losses.len())));
    }
    let total =
        partition.members.iter().map(|group| group_sse(group.iter().map(|&p| losses[p]))).fold(Dd::ZERO, Dd::add);
    Ok(total.hi)
}

fn group_sse(values: impl Iterator<Item = f64> + Clone) -> Dd {
    let (lo, hi) = values.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo == hi {
        return Dd::ZERO;
    }
    let (sum, count) = values.clone().fold((Dd::ZERO, 0usize), |(s, c), v| (s.add(Dd::from(v)), c + 1));
    let mean = sum.div(count as f64);
    values.map(|v| Dd::from(v).sub(mean)).map(|d| d.mul(d)).fold(Dd::ZERO, Dd::add)
}

/// `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn normalized(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (o.hi - bb);
        Dd::normalized(s, err + self.lo + o.lo)
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let err = self.hi.mul_add(o.hi, -p);
        Dd::normalized(p, err + self.hi * o.lo + self.lo * o.hi)
    }

    fn div(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let p = q1 * d;
        let rem = self.sub(Dd { hi: p, lo: q1.mul_add(d, -p) });
        Dd::normalized(q1, rem.hi / d)
    }
}

pub fn cluster_losses(request: &ClusterRequest<'_>) -> Result<ClusterPartition> {
    validate(request.losses, request.k)?;
    match request.method {
        ClusterMethod::ExactDp => exact_dp(request.losses, request.k),
        ClusterMethod::Lloyd => lloyd(request.losses, request.k, request.lloyd_max_iter, request.lloyd_tol),
    }
}

/// Runs of equal values in sorted order.
struct DistinctRuns {
    values: Vec<f64>,
    positions: Vec<Vec<usize>>,
}

fn distinct_runs(losses: &[f64]) -> DistinctRuns {
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    let mut values: Vec<f64> = Vec::new();
    let mut positions: Vec<Vec<usize>> = Vec::new();
    for pos in order {
        let v = losses[pos];
        if values.last() == Some(&v) {
            positions.last_mut().unwrap().push(pos);
        } else {
            values.push(v);
            positions.push(vec![pos]);
        }
    }
    DistinctRuns { values, positions }
}

/// Interval costs over weighted sorted values via centred prefix sums.
struct IntervalCost {
    count: Vec<f64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl IntervalCost {
    fn new(runs: &DistinctRuns) -> Self {
        let total: f64 = runs.values.iter().zip(&runs.positions).map(|(v, p)| v * p.len() as f64).sum();
        let n: usize = runs.positions.iter().map(Vec::len).sum();
        let shift = total / n as f64;
        let g = runs.values.len();
        let (mut count, mut sum, mut sum_sq) = (vec![0.0; g + 1], vec![0.0; g + 1], vec![0.0; g + 1]);
        for i in 0..g {
            let c = runs.positions[i].len() as f64;
            let d = runs.values[i] - shift;
            count[i + 1] = count[i] + c;
            sum[i + 1] = sum[i] + c * d;
            sum_sq[i + 1] = sum_sq[i] + c * d * d;
        }
        Self { count, sum, sum_sq }
    }

    /// SSE of runs `a..b` as a single cluster.
    fn cost(&self, a: usize, b: usize) -> f64 {
        let c = self.count[b] - self.count[a];
        let s = self.sum[b] - self.sum[a];
        let q = self.sum_sq[b] - self.sum_sq[a];
        (q - s * s / c).max(0.0)
    }
}

fn exact_dp(losses: &[f64], k: usize) -> Result<ClusterPartition> {
    let runs = distinct_runs(losses);
    let g = runs.values.len();
    let k_eff = k.min(g);
    let cost = IntervalCost::new(&runs);

    // best[j]: optimal cost of the first j runs in the current number of clusters.
    let mut best: Vec<f64> = (0..=g).map(|j| if j == 0 { 0.0 } else { cost.cost(0, j) }).collect();
    // splits[l][j]: start run of the last cluster when j runs use l + 2 clusters.
    let mut splits: Vec<Vec<usize>> = Vec::with_capacity(k_eff.saturating_sub(1));
    for layer in 2..=k_eff {
        let mut next = vec![f64::INFINITY; g + 1];
        let mut split = vec![0usize; g + 1];
        fill_layer(&best, &cost, &mut next, &mut split, layer, g, layer - 1, g - 1);
        best = next;
        splits.push(split);
    }

    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(k_eff);
    let mut end = g;
    for split in splits.iter().rev() {
        let start = split[end];
        groups.push(runs.positions[start..end].concat());
        end = start;
    }
    groups.push(runs.positions[..end].concat());
    ClusterPartition::from_groups(losses, k, groups)
}

/// Fills `next[lo..=hi]` by divide and conquer over monotone split points.
#[allow(clippy::too_many_arguments)]
fn fill_layer(
    prev: &[f64],
    cost: &IntervalCost,
    next: &mut [f64],
    split: &mut [usize],
    lo: usize,
    hi: usize,
    opt_lo: usize,
    opt_hi: usize,
) {
    if lo > hi {
        return;
    }
    let mid = (lo + hi) / 2;
    let mut best = f64::INFINITY;
    let mut best_at = opt_lo;
    // the last cluster takes runs best_at..mid; the earlier ones need >= 1 run each
    for start in opt_lo..=opt_hi.min(mid - 1) {
        let v = prev[start] + cost.cost(start, mid);
        if v < best {
            best = v;
            best_at = start;
        }
    }
    next[mid] = best;
    split[mid] = best_at;
    if mid > lo {
        fill_layer(prev, cost, next, split, lo, mid - 1, opt_lo, best_at);
    }
    fill_layer(prev, cost, next, split, mid + 1, hi, best_at, opt_hi);
}

fn nearest(centroids: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, &c) in centroids.iter().enumerate() {
        let d = (x - c) * (x - c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn lloyd(losses: &[f64], k: usize, max_iter: usize, tol: f64) -> Result<ClusterPartition> {
    if max_iter == 0 {
        return Err(Error::config("lloyd_max_iter must be at least 1"));
    }
    if !(tol >= 0.0) {
        return Err(Error::config("lloyd_tol must be non-negative"));
    }
    let n = losses.len();
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let distinct = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
    let k_eff = k.min(distinct);

    let mut centroids: Vec<f64> = (0..k_eff)
        .map(|j| {
            let q = (j as f64 + 0.5) / k_eff as f64;
            sorted[((q * n as f64) as usize).min(n - 1)]
        })
        .collect();
    let mut assignment = vec![0usize; n];

    for _ in 0..max_iter {
        for (a, &x) in assignment.iter_mut().zip(losses) {
            *a = nearest(&centroids, x);
        }
        let mut sums = vec![0.0; k_eff];
        let mut counts = vec![0usize; k_eff];
        for (&a, &x) in assignment.iter().zip(losses) {
            sums[a] += x;
            counts[a] += 1;
        }
        let mut updated: Vec<f64> =
            (0..k_eff).map(|j| if counts[j] > 0 { sums[j] / counts[j] as f64 } else { centroids[j] }).collect();

        // respawn emptied centroids at the worst-fit points, one point per centroid
        let mut taken = vec![false; n];
        for j in (0..k_eff).filter(|&j| counts[j] == 0) {
            let far = (0..n).filter(|&p| !taken[p]).map(|p| (p, (losses[p] - updated[assignment[p]]).powi(2))).fold(
                None::<(usize, f64)>,
                |acc, (p, d)| match acc {
                    Some((_, best)) if best >= d => acc,
                    _ => Some((p, d)),
                },
            );
            if let Some((p, _)) = far {
                taken[p] = true;
                updated[j] = losses[p];
            }
        }

        let shift = centroids.iter().zip(&updated).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let respawned = counts.contains(&0);
        centroids = updated;
        if !respawned && shift < tol {
            break;
        }
    }

    for (a, &x) in assignment.iter_mut().zip(losses) {
        *a = nearest(&centroids, x);
    }
    let mut groups = vec![Vec::new(); k_eff];
    for (p, &a) in assignment.iter().enumerate() {
        groups[a].push(p);
    }
    ClusterPartition::from_groups(losses, k, groups)
}

/// Exhaustive minimum-SSE partition, for checking the clusterers.
///
/// Enumerates every split of the sorted losses into `min(k, n)` contiguous
/// non-empty runs. Limited to `n <= 16` and `k <= 4`.
pub fn oracle_best_partition(losses: &[f64], k: usize) -> Result<ClusterPartition> {
    validate(losses, k)?;
    let n = losses.len();
    if n > ORACLE_MAX_N || k > ORACLE_MAX_K {
        return Err(Error::usage(format!(
            "oracle limited to n <= {ORACLE_MAX_N} and k <= {ORACLE_MAX_K}, got n = {n}, k = {k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    let parts = k.min(n);

    let run_sse = |run: &[usize]| group_sse(run.iter().map(|&p| losses[p]));

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut cuts: Vec<usize> = (1..parts).collect();
    loop {
        let mut bounds = Vec::with_capacity(parts + 1);
        bounds.push(0);
        bounds.extend_from_slice(&cuts);
        bounds.push(n);
        let total = bounds.windows(2).map(|w| run_sse(&order[w[0]..w[1]])).fold(Dd::ZERO, Dd::add).hi;
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, bounds));
        }
        if !next_combination(&mut cuts, n - 1) {
            break;
        }
    }
    let (_, bounds) = best.expect("at least one partition");
    let groups = bounds.windows(2).map(|w| order[w[0]..w[1]].to_vec()).collect();
    ClusterPartition::from_groups(losses, k, groups)
}

pub const ORACLE_MAX_N: usize = 16;
pub const ORACLE_MAX_K: usize = 4;

/// Advances strictly increasing `cuts` drawn from `1..=max` in lexicographic order.
fn next_combination(cuts: &mut [usize], max: usize) -> bool {
    let r = cuts.len();
    for i in (0..r).rev() {
        if cuts[i] < max - (r - 1 - i) {
            cuts[i] += 1;
            for j in i + 1..r {
                cuts[j] = cuts[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
