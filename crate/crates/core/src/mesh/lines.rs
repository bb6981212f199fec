//! Coordinate-line generation for one axis.

use super::{nearest, MeshError, MeshMode, MeshPolicy};

/// A coordinate the mesh must honor, with the primitives that own it.
#[derive(Debug, Clone)]
pub(crate) struct FixedCoord {
    pub pos: f64,
    pub owners: Vec<usize>,
    /// Domain bounds never move.
    pub anchored: bool,
}

const DEDUP_TOL: f64 = 1e-9;

pub(crate) fn dedup(mut coords: Vec<FixedCoord>) -> Vec<FixedCoord> {
    coords.sort_by(|a, b| a.pos.total_cmp(&b.pos));
    let mut out: Vec<FixedCoord> = Vec::with_capacity(coords.len());
    for c in coords {
        match out.last_mut() {
            Some(last) if (c.pos - last.pos).abs() <= DEDUP_TOL => {
                last.owners.extend(c.owners);
                last.anchored |= c.anchored;
                if c.anchored {
                    last.pos = c.pos;
                }
            }
            _ => out.push(c),
        }
    }
    for c in &mut out {
        c.owners.sort_unstable();
        c.owners.dedup();
    }
    out
}

/// Fine mode: every interval between fixed coordinates must hold
/// `min_cells_per_feature` cells of at least `min_cell`.
pub(crate) fn check_fine(coords: &[FixedCoord], policy: &MeshPolicy, axis: usize) -> Result<(), MeshError> {
    let need = policy.min_cells_per_feature as f64 * policy.min_cell;
    for w in coords.windows(2) {
        let len = w[1].pos - w[0].pos;
        if len < need * (1.0 - 1e-9) {
            let primitive = w[1].owners.first().or(w[0].owners.first()).copied();
            return Err(MeshError::UnmeshableFeature {
                primitive,
                axis,
                size: len,
                min_cell: policy.min_cell,
            });
        }
    }
    Ok(())
}

/// Coarse mode: spread every run of coordinates closer than `min_cell` to
/// exactly `min_cell` spacing. Returns the new positions, index-aligned with
/// the input.
pub(crate) fn widen_clusters(coords: &[FixedCoord], min_cell: f64) -> Vec<f64> {
    let mut pos: Vec<f64> = coords.iter().map(|c| c.pos).collect();
    let n = pos.len();
    if n < 2 {
        return pos;
    }
    let tight = |a: f64, b: f64| b - a < min_cell * (1.0 - 1e-9);
    for _ in 0..10_000 {
        let Some(start) = (0..n - 1).find(|&i| tight(pos[i], pos[i + 1])) else {
            break;
        };
        let mut end = start + 1;
        while end + 1 < n && tight(pos[end], pos[end + 1]) {
            end += 1;
        }
        let m = end - start + 1;
        let span = (m - 1) as f64 * min_cell;
        let lo_anchor = (start..=end).find(|&i| coords[i].anchored);
        let first = match lo_anchor {
            Some(i) if i == start => pos[start],
            Some(i) if i == end => pos[end] - span,
            _ => {
                let mean = pos[start..=end].iter().sum::<f64>() / m as f64;
                mean - span / 2.0
            }
        };
        for (offset, p) in pos[start..=end].iter_mut().enumerate() {
            *p = first + offset as f64 * min_cell;
        }
    }
    pos
}

/// Fill `[fixed[0], fixed[last]]` with lines following a graded size field
/// and pull lines onto the fixed coordinates.
///
/// The size field grows by less than `ln r` per unit distance from every
/// fixed interval, so the base lines form a progression of ratio below `r`.
/// Fixed coordinates become knots: the nearest base line moves onto them and
/// the lines between knots are mapped affinely. With `exact` every fixed
/// coordinate becomes a knot; otherwise a knot is only kept when the grading
/// ratio survives, and the coordinate is left to snapping.
pub(crate) fn fill(fixed: &[f64], policy: &MeshPolicy, exact: bool) -> Vec<f64> {
    if fixed.len() < 2 {
        return fixed.to_vec();
    }
    let r = policy.grading_ratio.max(1.0);
    let n_min = match policy.mode {
        MeshMode::Coarse => 1,
        MeshMode::Fine => policy.min_cells_per_feature.max(1),
    };
    let seeds: Vec<(f64, f64, f64)> = fixed
        .windows(2)
        .map(|w| (w[0], w[1], ((w[1] - w[0]) / n_min as f64).min(policy.max_cell)))
        .collect();
    let base = base_lines(fixed[0], fixed[fixed.len() - 1], &seeds, policy.max_cell, 0.9 * r.ln());
    let last = base.len() - 1;

    // Knots as (line index, target position), sorted by index.
    let mut knots: Vec<(usize, f64)> = vec![(0, fixed[0]), (last, fixed[fixed.len() - 1])];
    for &x in &fixed[1..fixed.len() - 1] {
        let pos = knots.partition_point(|&(_, kx)| kx < x);
        let (lo_j, hi_j) = (knots[pos - 1].0, knots[pos].0);
        if hi_j - lo_j < 2 {
            continue;
        }
        let j = nearest(&base, x).clamp(lo_j + 1, hi_j - 1);
        let mut trial = knots.clone();
        trial.insert(pos, (j, x));
        if exact {
            knots = trial;
            continue;
        }
        let from = knots[pos - 1].0.saturating_sub(1);
        let to = (knots[pos].0 + 1).min(last);
        let mapped = remap(&base, &trial);
        if first_violation(&mapped[from..=to], r).is_none() {
            knots = trial;
        }
    }
    let mut lines = remap(&base, &knots);
    repair_grading(&mut lines, r);
    lines
}

/// Piecewise-affine map of `base` that sends each knot line to its target.
fn remap(base: &[f64], knots: &[(usize, f64)]) -> Vec<f64> {
    let mut out = base.to_vec();
    for w in knots.windows(2) {
        let ((j0, x0), (j1, x1)) = (w[0], w[1]);
        let (b0, b1) = (base[j0], base[j1]);
        let scale = (x1 - x0) / (b1 - b0);
        for j in j0..=j1 {
            out[j] = x0 + (base[j] - b0) * scale;
        }
    }
    out
}

fn base_lines(lo: f64, hi: f64, seeds: &[(f64, f64, f64)], max_cell: f64, slope: f64) -> Vec<f64> {
    let size_at = |x: f64| -> f64 {
        let mut s = max_cell;
        for &(a, b, h) in seeds {
            let d = if x < a {
                a - x
            } else if x > b {
                x - b
            } else {
                0.0
            };
            s = s.min(h + slope * d);
        }
        s
    };
    // Cumulative cell count (midpoint rule), resolving the finest seed.
    let finest = seeds.iter().map(|s| s.2).fold(max_cell, f64::min);
    let len = hi - lo;
    let samples = ((16.0 * len / finest).ceil() as usize).clamp(256, 1 << 20);
    let mut cum = vec![0.0; samples + 1];
    for i in 0..samples {
        let x = lo + (i as f64 + 0.5) / samples as f64 * len;
        cum[i + 1] = cum[i] + len / samples as f64 / size_at(x);
    }
    let total = cum[samples];
    let n = ((total - 1e-6).ceil() as usize).max(1);
    let mut lines = Vec::with_capacity(n + 1);
    lines.push(lo);
    for c in 1..n {
        let target = total * c as f64 / n as f64;
        let i = cum.partition_point(|&v| v < target).clamp(1, samples);
        let frac = (target - cum[i - 1]) / (cum[i] - cum[i - 1]);
        lines.push(lo + (i as f64 - 1.0 + frac) / samples as f64 * len);
    }
    lines.push(hi);
    lines
}

fn first_violation(lines: &[f64], r: f64) -> Option<usize> {
    lines.windows(3).position(|w| {
        let (a, b) = (w[1] - w[0], w[2] - w[1]);
        a <= 0.0 || b <= 0.0 || a.max(b) > r * a.min(b) * (1.0 + 1e-9)
    })
}

/// Split cells until no neighbouring pair exceeds the grading ratio.
pub(crate) fn repair_grading(lines: &mut Vec<f64>, r: f64) {
    for _ in 0..100_000 {
        let sizes: Vec<f64> = lines.windows(2).map(|w| w[1] - w[0]).collect();
        let bad = sizes.windows(2).position(|s| {
            let (big, small) = if s[0] > s[1] { (s[0], s[1]) } else { (s[1], s[0]) };
            big > r * small * (1.0 + 1e-9)
        });
        let Some(i) = bad else { return };
        let (cell, small) = if sizes[i] > sizes[i + 1] {
            (i, sizes[i + 1])
        } else {
            (i + 1, sizes[i])
        };
        let big = sizes[cell];
        // Geometric split growing away from the small neighbour.
        let mut steps = vec![small * r];
        while steps.iter().sum::<f64>() < big {
            let next = steps[steps.len() - 1] * r;
            steps.push(next);
        }
        let scale = big / steps.iter().sum::<f64>();
        if cell == i {
            steps.reverse();
        }
        let a = lines[cell];
        let new: Vec<f64> = steps[..steps.len() - 1]
            .iter()
            .scan(a, |x, h| {
                *x += h * scale;
                Some(*x)
            })
            .collect();
        lines.splice(cell + 1..cell + 1, new);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fc(pos: f64) -> FixedCoord {
        FixedCoord {
            pos,
            owners: vec![],
            anchored: false,
        }
    }

    #[test]
    fn widening_spreads_close_coordinates() {
        let coords = vec![fc(0.0), fc(1.0), fc(1.027), fc(3.0)];
        let pos = widen_clusters(&coords, 0.1);
        assert!((pos[2] - pos[1] - 0.1).abs() < 1e-12);
        assert!(((pos[1] + pos[2]) / 2.0 - 1.0135).abs() < 1e-12);
    }

    #[test]
    fn fill_respects_grading_and_max_cell() {
        let policy = MeshPolicy {
            max_cell: 0.4,
            min_cell: 0.05,
            ..MeshPolicy::default()
        };
        let lines = fill(&[0.0, 0.05, 5.0, 5.1, 9.0], &policy, true);
        let sizes: Vec<f64> = lines.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(sizes.iter().all(|&s| s <= 0.4 + 1e-12));
        for s in sizes.windows(2) {
            let ratio = s[0].max(s[1]) / s[0].min(s[1]);
            assert!(ratio <= policy.grading_ratio + 1e-9, "ratio {ratio}");
        }
        for f in [0.0, 0.05, 5.0, 5.1, 9.0] {
            assert!(lines.iter().any(|&l| (l - f).abs() < 1e-15));
        }
    }
}
