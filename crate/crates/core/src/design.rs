//! Initial experimental designs: Latin hypercube, two-level fractional
//! factorial and face-centered central composite.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Result, SpotError};
use crate::param::RegionOfInterest;

/// Attempts to replace a duplicate row created by rounding integral
/// parameters before the duplicate is accepted.
const DEDUP_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    pub values: Vec<f64>,
    pub config: u64,
    pub repeats: u32,
    pub step: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignTable {
    pub roi: RegionOfInterest,
    pub rows: Vec<DesignPoint>,
}

impl DesignTable {
    /// Table of bare points; metadata is filled in by [`assign_metadata`].
    pub fn from_points(roi: &RegionOfInterest, points: Vec<Vec<f64>>) -> Self {
        DesignTable {
            roi: roi.clone(),
            rows: points
                .into_iter()
                .map(|values| DesignPoint {
                    values,
                    config: 0,
                    repeats: 1,
                    step: 0,
                    seed: 0,
                })
                .collect(),
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Total runs this design asks for.
    pub fn total_repeats(&self) -> u64 {
        self.rows.iter().map(|r| u64::from(r.repeats)).sum()
    }
}

pub(crate) fn point_key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// Latin hypercube sample of `size` points: every dimension's range is cut
/// into `size` equal strata and each stratum holds exactly one point, drawn
/// uniformly inside it.
pub fn lhs_points<R: Rng + ?Sized>(
    roi: &RegionOfInterest,
    size: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if size == 0 {
        return Err(SpotError::invalid("design size must be at least 1"));
    }
    let n = roi.dim();
    let mut points = vec![vec![0.0; n]; size];
    // Keeps u strictly below 1 so rounding cannot push a sample into the next stratum.
    let shrink = 1.0 - 16.0 * f64::EPSILON;
    for (j, p) in roi.params().iter().enumerate() {
        let mut strata: Vec<usize> = (0..size).collect();
        strata.shuffle(rng);
        let width = p.high - p.low;
        for (row, &s) in strata.iter().enumerate() {
            let u: f64 = rng.random::<f64>() * shrink;
            let x = p.low + (s as f64 + u) / size as f64 * width;
            points[row][j] = x.min(p.high);
        }
    }
    conform_and_dedup(roi, points, rng)
}

/// Conform every point; rows that collide after rounding are redrawn
/// uniformly over the region.
fn conform_and_dedup<R: Rng + ?Sized>(
    roi: &RegionOfInterest,
    points: Vec<Vec<f64>>,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let integral = roi.params().iter().any(|p| p.ptype.is_integral());
    let mut out = Vec::with_capacity(points.len());
    let mut seen = HashSet::new();
    for p in points {
        let mut q = roi.conform(&p)?;
        if integral {
            let mut attempts = 0;
            while seen.contains(&point_key(&q)) && attempts < DEDUP_ATTEMPTS {
                let draw: Vec<f64> = roi
                    .params()
                    .iter()
                    .map(|d| d.low + rng.random::<f64>() * (d.high - d.low))
                    .collect();
                q = roi.conform(&draw)?;
                attempts += 1;
            }
        }
        seen.insert(point_key(&q));
        out.push(q);
    }
    Ok(out)
}

pub fn lhs_design<R: Rng + ?Sized>(
    roi: &RegionOfInterest,
    size: usize,
    rng: &mut R,
) -> Result<DesignTable> {
    Ok(DesignTable::from_points(roi, lhs_points(roi, size, rng)?))
}

/// Uniform random points in the region, conformed.
pub fn uniform_points<R: Rng + ?Sized>(
    roi: &RegionOfInterest,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    (0..count)
        .map(|_| {
            let p: Vec<f64> = roi
                .params()
                .iter()
                .map(|d| d.low + rng.random::<f64>() * (d.high - d.low))
                .collect();
            roi.conform(&p)
        })
        .collect()
}

/// Two-level design in coded units with the given number of factors.
///
/// Up to four factors the full factorial is returned. Beyond that a
/// resolution-III fraction: `k` base factors with `2^k >= n + 1` span the full
/// factorial, and each remaining factor is the product of a distinct subset
/// of at least two base factors (subsets in order of size, then
/// lexicographic). Rows are in standard order, first factor varying fastest.
pub fn two_level_coded(n: usize) -> Vec<Vec<f64>> {
    let k = if n <= 4 {
        n
    } else {
        (1..).find(|&k| (1usize << k) > n).unwrap()
    };
    let mut generators: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
    'outer: for size in 2..=k {
        for subset in combinations(k, size) {
            if generators.len() == n {
                break 'outer;
            }
            generators.push(subset);
        }
    }
    (0..1usize << k)
        .map(|run| {
            let base: Vec<f64> = (0..k)
                .map(|i| if run >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            generators
                .iter()
                .map(|g| g.iter().map(|&i| base[i]).product())
                .collect()
        })
        .collect()
}

fn combinations(k: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(i + 1, k, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, size, &mut Vec::new(), &mut out);
    out
}

/// Face-centered central composite design in coded units: two-level corners
/// (full factorial up to five factors, a resolution-III fraction beyond),
/// `2n` axial points at distance one, and one center point.
pub fn ccd_coded(n: usize) -> Vec<Vec<f64>> {
    let mut rows = if n <= 5 {
        full_factorial(n)
    } else {
        two_level_coded(n)
    };
    for i in 0..n {
        for s in [-1.0, 1.0] {
            let mut p = vec![0.0; n];
            p[i] = s;
            rows.push(p);
        }
    }
    rows.push(vec![0.0; n]);
    rows
}

fn full_factorial(n: usize) -> Vec<Vec<f64>> {
    (0..1usize << n)
        .map(|run| {
            (0..n)
                .map(|i| if run >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect()
}

fn decode_all(roi: &RegionOfInterest, coded: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let t = roi.coded()?;
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(coded.len());
    let mut seen = HashSet::new();
    for c in coded {
        let p = roi.conform(&t.from_coded(&c)?)?;
        // Rounding of narrow integral ranges can merge design points.
        if seen.insert(point_key(&p)) {
            out.push(p);
        }
    }
    Ok(out)
}

fn require_two_factors(roi: &RegionOfInterest) -> Result<()> {
    if roi.dim() < 2 {
        return Err(SpotError::invalid("factorial designs need at least two parameters"));
    }
    Ok(())
}

pub fn ccd_design(roi: &RegionOfInterest) -> Result<DesignTable> {
    require_two_factors(roi)?;
    let points = decode_all(roi, ccd_coded(roi.dim()))?;
    Ok(DesignTable::from_points(roi, points))
}

/// Resolution-III two-level design plus one center point.
pub fn fractional_factorial_res3(roi: &RegionOfInterest) -> Result<DesignTable> {
    require_two_factors(roi)?;
    let mut coded = two_level_coded(roi.dim());
    coded.push(vec![0.0; roi.dim()]);
    let points = decode_all(roi, coded)?;
    Ok(DesignTable::from_points(roi, points))
}

/// Number rows consecutively after `last_issued` and stamp repeats, step and
/// seed on every row.
pub fn assign_metadata(
    mut table: DesignTable,
    repeats: u32,
    step: u32,
    base_seed: u64,
    last_issued: u64,
) -> Result<DesignTable> {
    if repeats == 0 {
        return Err(SpotError::invalid("repeats must be at least 1"));
    }
    for (i, row) in table.rows.iter_mut().enumerate() {
        row.config = last_issued + 1 + i as u64;
        row.repeats = repeats;
        row.step = step;
        row.seed = base_seed;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::{parse_roi, ParamDef, ParamType};
    use crate::rng;

    fn unit(n: usize, low: f64, high: f64) -> RegionOfInterest {
        RegionOfInterest::new(
            (0..n)
                .map(|i| ParamDef::new(format!("X{i}"), low, high, ParamType::Float))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn lhs_small_sizes() {
        let roi = unit(1, 0.0, 10.0);
        let mut r = rng::stream(1, 0);
        let one = lhs_points(&roi, 1, &mut r).unwrap();
        assert!(one[0][0] >= 0.0 && one[0][0] <= 10.0);
        let two = lhs_points(&roi, 2, &mut r).unwrap();
        let mut v: Vec<f64> = two.iter().map(|p| p[0]).collect();
        v.sort_by(f64::total_cmp);
        assert!(v[0] < 5.0 && v[1] >= 5.0);
        assert!(lhs_points(&roi, 0, &mut r).is_err());
    }

    #[test]
    fn lhs_is_seed_deterministic() {
        let roi = unit(2, 1.0, 50.0);
        let a = lhs_points(&roi, 10, &mut rng::stream(9, 1)).unwrap();
        let b = lhs_points(&roi, 10, &mut rng::stream(9, 1)).unwrap();
        assert_eq!(a, b);
        let distinct: HashSet<Vec<u64>> = (0..100)
            .map(|s| lhs_points(&roi, 10, &mut rng::stream(s, 1)).unwrap().concat())
            .map(|flat| point_key(&flat))
            .collect();
        assert_eq!(distinct.len(), 100);
    }

    #[test]
    fn lhs_integral_columns_avoid_duplicates() {
        let roi = parse_roi("TEMP 1 50 FLOAT\nTMAX 1 50 INT\n").unwrap();
        let pts = lhs_points(&roi, 20, &mut rng::stream(3, 0)).unwrap();
        for p in &pts {
            assert_eq!(p[1].fract(), 0.0);
            assert_eq!(roi.conform(p).unwrap(), *p);
        }
        let narrow = parse_roi("A 1 3 INT\nB 1 2 FACTOR\n").unwrap();
        // Only six distinct points exist; the rest are tolerated duplicates.
        let pts = lhs_points(&narrow, 10, &mut rng::stream(3, 0)).unwrap();
        assert_eq!(pts.len(), 10);
        let distinct: HashSet<_> = pts.iter().map(|p| point_key(p)).collect();
        assert_eq!(distinct.len(), 6);
    }

    #[test]
    fn ccd_shapes() {
        let roi = unit(2, 1.0, 50.0);
        let d = ccd_design(&roi).unwrap();
        assert_eq!(d.len(), 9);
        assert!(d.points().contains(&vec![25.5, 25.5]));
        let distinct: HashSet<_> = d.points().iter().map(|p| point_key(p)).collect();
        assert_eq!(distinct.len(), 9);
        assert_eq!(ccd_design(&unit(3, 0.0, 1.0)).unwrap().len(), 15);
        assert!(ccd_design(&unit(1, 0.0, 1.0)).is_err());
        assert!(ccd_design(&parse_roi("A 1 1 FLOAT\nB 0 1 FLOAT").unwrap()).is_err());
    }

    #[test]
    fn ccd_coded_levels() {
        for n in 2..=7 {
            let rows = ccd_coded(n);
            assert!(rows.iter().flatten().all(|v| [-1.0, 0.0, 1.0].contains(v)));
            assert_eq!(rows.iter().filter(|r| r.iter().all(|&v| v == 0.0)).count(), 1);
        }
        assert_eq!(ccd_coded(5).len(), 32 + 10 + 1);
    }

    #[test]
    fn fractional_factorial_sizes() {
        assert_eq!(fractional_factorial_res3(&unit(2, 0.0, 1.0)).unwrap().len(), 5);
        assert_eq!(fractional_factorial_res3(&unit(3, 0.0, 1.0)).unwrap().len(), 9);
        assert_eq!(fractional_factorial_res3(&unit(7, 0.0, 1.0)).unwrap().len(), 9);
    }

    #[test]
    fn resolution_three_columns_are_orthogonal() {
        for n in 5..=15 {
            let rows = two_level_coded(n);
            assert_eq!(rows.len(), if n <= 7 { 8 } else { 16 });
            for a in 0..n {
                assert_eq!(rows.iter().map(|r| r[a]).sum::<f64>(), 0.0);
                for b in a + 1..n {
                    let dot: f64 = rows.iter().map(|r| r[a] * r[b]).sum();
                    assert_eq!(dot, 0.0, "columns {a} and {b} of n={n}");
                }
            }
        }
    }

    #[test]
    fn metadata() {
        let roi = unit(2, 1.0, 50.0);
        let pts = lhs_points(&roi, 10, &mut rng::stream(1, 0)).unwrap();
        let t = assign_metadata(DesignTable::from_points(&roi, pts), 2, 0, 1235, 0).unwrap();
        assert_eq!(t.rows.iter().map(|r| r.config).collect::<Vec<_>>(), (1..=10).collect::<Vec<_>>());
        assert!(t.rows.iter().all(|r| r.repeats == 2 && r.step == 0 && r.seed == 1235));

        let more = DesignTable::from_points(&roi, vec![vec![1.0, 1.0]; 3]);
        let t = assign_metadata(more, 3, 4, 7, 10).unwrap();
        assert_eq!(t.rows.iter().map(|r| r.config).collect::<Vec<_>>(), vec![11, 12, 13]);
        let empty = assign_metadata(DesignTable::from_points(&roi, vec![]), 2, 0, 1, 0).unwrap();
        assert!(empty.is_empty());
        assert!(assign_metadata(DesignTable::from_points(&roi, vec![]), 0, 0, 1, 0).is_err());
    }
}
