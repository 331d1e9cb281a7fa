//! Reference implementations written from the metric definitions, in plain
//! arithmetic and by exhaustive search.

/// Segment as `[x1, y1, x2, y2]`.
pub type Seg = [f64; 4];

fn dist(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
}

pub fn structural(a: &Seg, b: &Seg) -> f64 {
    let direct = dist(a[0], a[1], b[0], b[1]) + dist(a[2], a[3], b[2], b[3]);
    let crossed = dist(a[0], a[1], b[2], b[3]) + dist(a[2], a[3], b[0], b[1]);
    if direct < crossed {
        direct
    } else {
        crossed
    }
}

/// Distance from `(px, py)` to the infinite line through `s`, found by
/// golden-section search over the line parameter.
pub fn point_to_line_by_search(px: f64, py: f64, s: &Seg) -> f64 {
    let (dx, dy) = (s[2] - s[0], s[3] - s[1]);
    let f = |t: f64| dist(px, py, s[0] + t * dx, s[1] + t * dy);
    let (mut lo, mut hi) = (-1.0, 2.0);
    while f(lo) < f(lo + 1.0) {
        lo -= 2.0 * (hi - lo);
    }
    while f(hi) < f(hi - 1.0) {
        hi += 2.0 * (hi - lo);
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..300 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi))
}

pub fn orthogonal(a: &Seg, b: &Seg) -> f64 {
    let a_onto_b = point_to_line_by_search(a[0], a[1], b) + point_to_line_by_search(a[2], a[3], b);
    let b_onto_a = point_to_line_by_search(b[0], b[1], a) + point_to_line_by_search(b[2], b[3], a);
    (a_onto_b + b_onto_a) / 2.0
}

/// True-positive flags by replaying detections from the most confident
/// down: a detection is a true positive when some annotation within
/// `d_max` has not been taken by a more confident one; it takes the
/// nearest such annotation (lowest index on ties). Scores must be distinct.
pub fn replay_true_positives(
    preds: &[Seg],
    scores: &[f64],
    gts: &[Seg],
    d_max: f64,
    distance: fn(&Seg, &Seg) -> f64,
) -> Vec<bool> {
    let mut done = vec![false; preds.len()];
    let mut taken = vec![false; gts.len()];
    let mut tp = vec![false; preds.len()];
    for _ in 0..preds.len() {
        let mut next = None;
        for i in 0..preds.len() {
            if !done[i] && next.is_none_or(|n: usize| scores[i] > scores[n]) {
                next = Some(i);
            }
        }
        let i = next.unwrap();
        done[i] = true;
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gts.iter().enumerate() {
            let d = distance(&preds[i], g);
            if !taken[j] && d <= d_max && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, _)) = best {
            taken[j] = true;
            tp[i] = true;
        }
    }
    tp
}

/// Maximum matching cardinality between two pixel sets under a distance
/// limit, and the least total distance among matchings of that size, by
/// dynamic programming over subsets of `gt`.
pub fn best_pixel_assignment(pred: &[(i64, i64)], gt: &[(i64, i64)], d_max: f64) -> (usize, f64) {
    assert!(gt.len() <= 16);
    let full = 1usize << gt.len();
    // best[mask] = (matched count, cost) using exactly the gt pixels in mask.
    let mut best: Vec<Option<(usize, f64)>> = vec![None; full];
    best[0] = Some((0, 0.0));
    for &(px, py) in pred {
        let mut next = best.clone();
        for mask in 0..full {
            let Some((n, c)) = best[mask] else { continue };
            for (j, &(gx, gy)) in gt.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    continue;
                }
                let d = (((px - gx).pow(2) + (py - gy).pow(2)) as f64).sqrt();
                if d > d_max {
                    continue;
                }
                let cand = (n + 1, c + d);
                let slot = &mut next[mask | (1 << j)];
                if slot.is_none_or(|(_, sc)| cand.1 < sc) {
                    *slot = Some(cand);
                }
            }
        }
        best = next;
    }
    let mut out = (0, 0.0);
    for (n, c) in best.into_iter().flatten() {
        if n > out.0 || (n == out.0 && c < out.1) {
            out = (n, c);
        }
    }
    out
}
