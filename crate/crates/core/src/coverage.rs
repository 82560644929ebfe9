//! The single coverage rule shared by UV-space ownership and screen-space
//! rendering.
//!
//! Vertices are snapped to a fixed-point grid with 8 fractional bits. A cell
//! `(x, y)` is covered when its center `(x + ½, y + ½)` lies strictly inside
//! the triangle, or exactly on a top or left edge (y grows downward). Edge
//! functions are evaluated in exact integer arithmetic, so two triangles
//! sharing an edge always partition the cells along it.

const SUB_BITS: u32 = 8;
const ONE: i64 = 1 << SUB_BITS;
const HALF: i64 = ONE / 2;

/// Largest coordinate magnitude accepted, in cells. Beyond this the
/// fixed-point conversion would lose the integer guarantees.
pub const MAX_COORD: f64 = (1u64 << 40) as f64;

#[derive(Debug, Clone, Copy)]
struct Fixed {
    x: i64,
    y: i64,
}

fn snap(p: [f64; 2]) -> Option<Fixed> {
    if !(p[0].is_finite() && p[1].is_finite()) || p[0].abs() > MAX_COORD || p[1].abs() > MAX_COORD {
        return None;
    }
    Some(Fixed {
        x: (p[0] * ONE as f64).round() as i64,
        y: (p[1] * ONE as f64).round() as i64,
    })
}

#[inline]
fn orient(a: Fixed, b: Fixed, p: Fixed) -> i128 {
    (b.x - a.x) as i128 * (p.y - a.y) as i128 - (b.y - a.y) as i128 * (p.x - a.x) as i128
}

#[inline]
fn is_top_left(a: Fixed, b: Fixed) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    dy < 0 || (dy == 0 && dx > 0)
}

struct Edge {
    // value at the current cell center, and its steps in x and y (one cell)
    step_x: i128,
    step_y: i128,
    bias: i128,
}

impl Edge {
    fn new(a: Fixed, b: Fixed) -> Self {
        Edge {
            step_x: -((b.y - a.y) as i128) * ONE as i128,
            step_y: (b.x - a.x) as i128 * ONE as i128,
            bias: if is_top_left(a, b) { 0 } else { -1 },
        }
    }
}

/// Visits every covered cell of `tri` within `[0, width) × [0, height)`.
///
/// The callback receives the cell and barycentric weights of its center with
/// respect to the input vertex order. Degenerate or non-finite triangles
/// cover nothing; the return value is `false` only for non-finite input.
pub fn rasterize<F>(tri: [[f64; 2]; 3], width: usize, height: usize, mut visit: F) -> bool
where
    F: FnMut(usize, usize, [f64; 3]),
{
    let (Some(a), Some(b), Some(c)) = (snap(tri[0]), snap(tri[1]), snap(tri[2])) else {
        return false;
    };
    let area = orient(a, b, c);
    if area == 0 || width == 0 || height == 0 {
        return true;
    }
    // order so that the interior has positive edge functions
    let (v, perm) = if area > 0 {
        ([a, b, c], [0, 1, 2])
    } else {
        ([a, c, b], [0, 2, 1])
    };
    let area = area.abs();

    let min_x = v.iter().map(|p| p.x).min().unwrap();
    let max_x = v.iter().map(|p| p.x).max().unwrap();
    let min_y = v.iter().map(|p| p.y).min().unwrap();
    let max_y = v.iter().map(|p| p.y).max().unwrap();
    // cells whose centers fall inside the bounding box
    let cell_lo = |m: i64| (m - HALF).div_euclid(ONE) + i64::from((m - HALF).rem_euclid(ONE) != 0);
    let cell_hi = |m: i64| (m - HALF).div_euclid(ONE);
    let x0 = cell_lo(min_x).max(0);
    let x1 = cell_hi(max_x).min(width as i64 - 1);
    let y0 = cell_lo(min_y).max(0);
    let y1 = cell_hi(max_y).min(height as i64 - 1);
    if x0 > x1 || y0 > y1 {
        return true;
    }

    // edge i is opposite vertex i
    let edges = [
        Edge::new(v[1], v[2]),
        Edge::new(v[2], v[0]),
        Edge::new(v[0], v[1]),
    ];
    let start = Fixed {
        x: x0 * ONE + HALF,
        y: y0 * ONE + HALF,
    };
    let mut row = [
        orient(v[1], v[2], start),
        orient(v[2], v[0], start),
        orient(v[0], v[1], start),
    ];
    let inv_area = 1.0 / area as f64;
    for y in y0..=y1 {
        let mut e = row;
        for x in x0..=x1 {
            if e[0] + edges[0].bias >= 0 && e[1] + edges[1].bias >= 0 && e[2] + edges[2].bias >= 0 {
                let w = [
                    e[0] as f64 * inv_area,
                    e[1] as f64 * inv_area,
                    e[2] as f64 * inv_area,
                ];
                let mut bary = [0.0; 3];
                for k in 0..3 {
                    bary[perm[k]] = w[k];
                }
                visit(x as usize, y as usize, bary);
            }
            for k in 0..3 {
                e[k] += edges[k].step_x;
            }
        }
        for k in 0..3 {
            row[k] += edges[k].step_y;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cells(tri: [[f64; 2]; 3], w: usize, h: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        rasterize(tri, w, h, |x, y, _| out.push((x, y)));
        out
    }

    /// Independent point-in-triangle check at a cell center, in f64. Only
    /// valid away from edges.
    fn strictly_inside(tri: [[f64; 2]; 3], p: [f64; 2]) -> Option<bool> {
        let e = |a: [f64; 2], b: [f64; 2]| {
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        };
        let v = [e(tri[1], tri[2]), e(tri[2], tri[0]), e(tri[0], tri[1])];
        if v.iter().any(|x| x.abs() < 1e-6) {
            return None;
        }
        Some(v.iter().all(|&x| x > 0.0) || v.iter().all(|&x| x < 0.0))
    }

    #[test]
    fn square_split_on_diagonal_partitions_exactly() {
        let (a, b, c, d) = ([2.0, 2.0], [10.0, 2.0], [10.0, 10.0], [2.0, 10.0]);
        let mut seen = vec![0u8; 16 * 16];
        for tri in [[a, b, c], [a, c, d]] {
            rasterize(tri, 16, 16, |x, y, _| seen[y * 16 + x] += 1);
        }
        for y in 0..16 {
            for x in 0..16 {
                let want = u8::from((2..10).contains(&x) && (2..10).contains(&y));
                assert_eq!(seen[y * 16 + x], want, "cell ({x},{y})");
            }
        }
    }

    #[test]
    fn winding_does_not_change_coverage() {
        let tri = [[0.3, 0.1], [7.9, 2.2], [3.1, 6.7]];
        let mut fwd = cells(tri, 10, 10);
        let mut rev = cells([tri[0], tri[2], tri[1]], 10, 10);
        fwd.sort();
        rev.sort();
        assert_eq!(fwd, rev);
    }

    #[test]
    fn corner_triangle_matches_brute_force_count() {
        // UV (0,0)-(0.01,0)-(0,0.01) on the 4096 grid
        let s = 0.01 * 4096.0;
        let tri = [[0.0, 0.0], [s, 0.0], [0.0, s]];
        let n = cells(tri, 4096, 4096).len();
        let mut brute = 0;
        for y in 0..64 {
            for x in 0..64 {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                if px + py < s {
                    brute += 1;
                }
            }
        }
        assert_eq!(n, brute);
        // the area is ~839 texels; exactly 820 centers lie inside
        assert_eq!(n, 820);
    }

    #[test]
    fn barycentrics_reconstruct_the_center() {
        let tri = [[1.0, 1.0], [9.0, 2.0], [4.0, 8.0]];
        rasterize(tri, 10, 10, |x, y, w| {
            let px = w[0] * tri[0][0] + w[1] * tri[1][0] + w[2] * tri[2][0];
            let py = w[0] * tri[0][1] + w[1] * tri[1][1] + w[2] * tri[2][1];
            assert!((px - (x as f64 + 0.5)).abs() < 1e-9);
            assert!((py - (y as f64 + 0.5)).abs() < 1e-9);
            assert!(w.iter().all(|&v| v >= -1e-12));
        });
    }

    #[test]
    fn degenerate_and_non_finite() {
        assert!(cells([[0.0, 0.0], [5.0, 5.0], [10.0, 10.0]], 16, 16).is_empty());
        assert!(!rasterize(
            [[f64::NAN, 0.0], [1.0, 0.0], [0.0, 1.0]],
            4,
            4,
            |_, _, _| {}
        ));
    }

    #[test]
    fn clipped_to_bounds() {
        let all = cells([[-100.0, -100.0], [300.0, -100.0], [-100.0, 300.0]], 8, 4);
        assert_eq!(all.len(), 32);
    }

    proptest! {
        /// A fan around an interior point partitions the enclosing polygon: no
        /// cell is covered twice, and the union matches the quad split on a
        /// diagonal.
        #[test]
        fn fan_partitions_quad(
            cx in 3.0f64..13.0, cy in 3.0f64..13.0,
            jitter in proptest::array::uniform8(-0.9f64..0.9),
        ) {
            let q = [
                [1.0 + jitter[0], 1.0 + jitter[1]],
                [15.0 + jitter[2], 1.0 + jitter[3]],
                [15.0 + jitter[4], 15.0 + jitter[5]],
                [1.0 + jitter[6], 15.0 + jitter[7]],
            ];
            let c = [cx, cy];
            let mut fan = vec![0u8; 256];
            for i in 0..4 {
                rasterize([q[i], q[(i + 1) % 4], c], 16, 16, |x, y, _| fan[y * 16 + x] += 1);
            }
            let mut split = vec![0u8; 256];
            rasterize([q[0], q[1], q[2]], 16, 16, |x, y, _| split[y * 16 + x] += 1);
            rasterize([q[0], q[2], q[3]], 16, 16, |x, y, _| split[y * 16 + x] += 1);
            prop_assert!(fan.iter().all(|&n| n <= 1));
            prop_assert!(split.iter().all(|&n| n <= 1));
            prop_assert_eq!(fan, split);
        }

        #[test]
        fn agrees_with_float_test_off_edges(
            pts in proptest::array::uniform6(0.0f64..12.0),
        ) {
            let tri = [[pts[0], pts[1]], [pts[2], pts[3]], [pts[4], pts[5]]];
            let mut covered = [false; 144];
            rasterize(tri, 12, 12, |x, y, _| covered[y * 12 + x] = true);
            for y in 0..12 {
                for x in 0..12 {
                    // skip centers too close to an edge for the float check
                    let snapped = tri.map(|p| p.map(|v| (v * 256.0).round() / 256.0));
                    if let Some(inside) = strictly_inside(snapped, [x as f64 + 0.5, y as f64 + 0.5]) {
                        prop_assert_eq!(covered[y * 12 + x], inside, "cell ({}, {})", x, y);
                    }
                }
            }
        }
    }
}
