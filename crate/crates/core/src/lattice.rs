use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One element of the half-lattice, with |n|^2 cached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMember {
    pub n: Vec<i32>,
    pub m: u64,
}

/// Truncation of the half-lattice Z_s^d to the sup-ball |n|_inf <= n_max.
///
/// Z_s^1 is the positive integers; Z_s^{d+1} = (Z_s^1 x Z^d) u ({0} x Z_s^d),
/// i.e. a point belongs iff its first nonzero coordinate is positive. The full
/// lattice splits disjointly as Z^d = Z_s^d u (-Z_s^d) u {0}. Members are
/// sorted lexicographically; everything downstream (mode ordering, stream ids,
/// container layout) relies on that order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexSet {
    pub d: u32,
    pub n_max: u32,
    pub members: Vec<IndexMember>,
}

pub fn is_half_lattice_member(n: &[i32]) -> bool {
    for &c in n {
        if c > 0 {
            return true;
        }
        if c < 0 {
            return false;
        }
    }
    false // the origin
}

pub fn build_index_set(d: u32, n_max: u32) -> IndexSet {
    assert!(d >= 1, "dimension must be >= 1");
    let mut members = Vec::new();
    let mut point = vec![0i32; d as usize];
    collect_members(&mut point, 0, n_max as i32, &mut members);
    members.sort_by(|a, b| a.n.cmp(&b.n));
    IndexSet { d, n_max, members }
}

fn collect_members(point: &mut Vec<i32>, axis: usize, n_max: i32, out: &mut Vec<IndexMember>) {
    if axis == point.len() {
        if is_half_lattice_member(point) {
            let m = point.iter().map(|&c| (c as i64 * c as i64) as u64).sum();
            out.push(IndexMember {
                n: point.clone(),
                m,
            });
        }
        return;
    }
    for c in -n_max..=n_max {
        point[axis] = c;
        collect_members(point, axis + 1, n_max, out);
    }
}

impl IndexSet {
    /// Checks the disjoint-partition property by exhaustive enumeration:
    /// every nonzero point of the sup-ball lies in exactly one of the set and
    /// its negation, and the origin lies in neither.
    pub fn verify_partition(&self) -> Result<()> {
        let mut point = vec![0i32; self.d as usize];
        let mut stack = vec![(0usize, -(self.n_max as i32))];
        // Iterative odometer over the full ball to keep memory flat.
        let n_max = self.n_max as i32;
        let contains = |n: &[i32]| self.members.binary_search_by(|mm| mm.n.as_slice().cmp(n)).is_ok();
        loop {
            match stack.pop() {
                None => break,
                Some((axis, c)) => {
                    if c > n_max {
                        continue;
                    }
                    point[axis] = c;
                    stack.push((axis, c + 1));
                    if axis + 1 == self.d as usize {
                        let zero = point.iter().all(|&x| x == 0);
                        let pos = contains(&point);
                        let negated: Vec<i32> = point.iter().map(|&x| -x).collect();
                        let neg = contains(&negated);
                        let ok = if zero { !pos && !neg } else { pos != neg };
                        if !ok {
                            return Err(Error::Config(format!(
                                "index-set partition violated at {point:?}"
                            )));
                        }
                    } else {
                        stack.push((axis + 1, -n_max));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Counts of |n|^2 values over nested sup-balls |n|_inf <= N for the dyadic
/// level ladder `levels` (ascending). Shell s holds the points with
/// levels[s-1] < |n|_inf <= levels[s] (shell 0: |n|_inf <= levels[0]).
///
/// Lets every radial weight sum over a d-ball collapse to one pass per
/// distinct |n|^2, which is what keeps the d = 3 regularity scans cheap.
#[derive(Debug, Clone)]
pub struct SupBallCounts {
    pub d: u32,
    pub levels: Vec<u32>,
    /// shells[s] = ascending (|n|^2, multiplicity) pairs for the points in
    /// shell s. Sparse: only d * n_max^2 of the squared radii are reachable.
    shells: Vec<Vec<(u64, u64)>>,
}

pub fn sup_ball_counts(d: u32, levels: &[u32]) -> SupBallCounts {
    assert!(!levels.is_empty() && d >= 1);
    assert!(levels.windows(2).all(|w| w[0] < w[1]), "levels must ascend");
    let n_max = *levels.last().unwrap();
    let m_cap = (d as u64) * (n_max as u64) * (n_max as u64);
    let shells = if d == 1 {
        // m = x^2 with multiplicity 2 (and 1 for the origin): closed form,
        // ascending within each shell by construction.
        let mut shells = Vec::with_capacity(levels.len());
        let mut lo = 0u32;
        for (s, &hi) in levels.iter().enumerate() {
            let mut shell: Vec<(u64, u64)> = Vec::with_capacity((hi - lo + 1) as usize);
            if s == 0 {
                shell.push((0, 1));
            }
            for x in lo + 1..=hi {
                shell.push(((x as u64) * (x as u64), 2));
            }
            shells.push(shell);
            lo = hi;
        }
        shells
    } else if (m_cap as usize + 1).saturating_mul(levels.len()) <= (1usize << 23) {
        // Dense histograms per shell, converted to sparse pairs at the end.
        let mut dense = vec![vec![0u64; m_cap as usize + 1]; levels.len()];
        let shell_of = |sup: u32| levels.partition_point(|&l| l < sup);
        visit_squares(d, n_max, &mut |sup, m| dense[shell_of(sup)][m as usize] += 1);
        dense
            .into_iter()
            .map(|hist| {
                hist.into_iter()
                    .enumerate()
                    .filter(|&(_, c)| c > 0)
                    .map(|(m, c)| (m as u64, c))
                    .collect()
            })
            .collect()
    } else {
        // Huge radius range: collect raw squared radii per shell, then
        // sort + run-length encode.
        let mut raw: Vec<Vec<u64>> = vec![Vec::new(); levels.len()];
        let shell_of = |sup: u32| levels.partition_point(|&l| l < sup);
        visit_squares(d, n_max, &mut |sup, m| raw[shell_of(sup)].push(m));
        raw.into_iter()
            .map(|mut ms| {
                ms.sort_unstable();
                let mut shell: Vec<(u64, u64)> = Vec::new();
                for m in ms {
                    match shell.last_mut() {
                        Some(last) if last.0 == m => last.1 += 1,
                        _ => shell.push((m, 1)),
                    }
                }
                shell
            })
            .collect()
    };
    SupBallCounts {
        d,
        levels: levels.to_vec(),
        shells,
    }
}

/// Calls visit(|n|_inf, |n|^2) for every n in Z^d with |n|_inf <= n_max.
fn visit_squares(d: u32, n_max: u32, visit: &mut impl FnMut(u32, u64)) {
    let r = n_max as i32;
    match d {
        2 => {
            for x in -r..=r {
                let sx = x.unsigned_abs();
                let mx = x as i64 * x as i64;
                for y in -r..=r {
                    visit(sx.max(y.unsigned_abs()), (mx + y as i64 * y as i64) as u64);
                }
            }
        }
        3 => {
            for x in -r..=r {
                let sx = x.unsigned_abs();
                let mx = x as i64 * x as i64;
                for y in -r..=r {
                    let sxy = sx.max(y.unsigned_abs());
                    let mxy = mx + y as i64 * y as i64;
                    for z in -r..=r {
                        visit(sxy.max(z.unsigned_abs()), (mxy + z as i64 * z as i64) as u64);
                    }
                }
            }
        }
        _ => {
            let mut point = vec![0i32; d as usize];
            visit_squares_rec(&mut point, 0, r, visit);
        }
    }
}

fn visit_squares_rec(
    point: &mut Vec<i32>,
    axis: usize,
    n_max: i32,
    visit: &mut impl FnMut(u32, u64),
) {
    if axis == point.len() {
        let sup = point.iter().map(|c| c.unsigned_abs()).max().unwrap();
        let m: i64 = point.iter().map(|&c| c as i64 * c as i64).sum();
        visit(sup, m as u64);
        return;
    }
    for c in -n_max..=n_max {
        point[axis] = c;
        visit_squares_rec(point, axis + 1, n_max, visit);
    }
}

impl SupBallCounts {
    /// Partial sums S_N = sum_{|n|_inf <= levels[l]} f(|n|^2), one value per
    /// level, accumulated shell by shell in ascending-m order (deterministic).
    pub fn partial_sums(&self, f: impl Fn(u64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.levels.len());
        let mut running = 0.0f64;
        for shell in &self.shells {
            let mut shell_sum = 0.0;
            for &(m, count) in shell {
                shell_sum += count as f64 * f(m);
            }
            running += shell_sum;
            out.push(running);
        }
        out
    }
}

/// Distinct values |n|^2 attainable with n in Z^d, |n|_inf <= n_max: sums of
/// d squares, each square at most n_max^2. Ascending.
pub fn achievable_mode_squares(d: u32, n_max: u32) -> Vec<u64> {
    let cap = (d as usize) * (n_max as usize) * (n_max as usize);
    let mut reach = vec![false; cap + 1];
    reach[0] = true;
    for _ in 0..d {
        let mut next = vec![false; cap + 1];
        for (m, &ok) in reach.iter().enumerate() {
            if !ok {
                continue;
            }
            for c in 0..=n_max as usize {
                let m2 = m + c * c;
                if m2 <= cap {
                    next[m2] = true;
                }
            }
        }
        reach = next;
    }
    reach
        .iter()
        .enumerate()
        .filter_map(|(m, &ok)| ok.then_some(m as u64))
        .collect()
}
