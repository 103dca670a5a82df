//! Outer contours of foreground components, their convex hulls, hull
//! rasterization and mask intersection.

use crate::error::{check_dims, Result};
use crate::imagecore::BinaryMask;

/// Integer pixel coordinate, `x` to the right and `y` down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }
}

/// Closed outer boundary of one 8-connected foreground component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub points: Vec<Point>,
}

/// Convex polygon with vertices in counter-clockwise order (positive cross
/// products in `(x, y)` coordinates) and no collinear vertices. Degenerate
/// hulls have one or two vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

/// Cross product of `a - o` and `b - o`.
#[inline]
pub fn cross(o: Point, a: Point, b: Point) -> i64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

// Clockwise from west in image coordinates: W, NW, N, NE, E, SE, S, SW.
const NEIGHBORS: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn direction_of(dx: i64, dy: i64) -> usize {
    NEIGHBORS
        .iter()
        .position(|&d| d == (dx, dy))
        .expect("points are 8-neighbours")
}

/// Traces the outer border starting at `start`, whose west neighbour is
/// background (Suzuki–Abe border following with its stopping rule).
fn trace_outer(mask: &BinaryMask, start: Point) -> Vec<Point> {
    let fg = |p: Point| mask.get_signed(p.x, p.y);
    let step = |p: Point, d: usize| Point::new(p.x + NEIGHBORS[d].0, p.y + NEIGHBORS[d].1);

    // Clockwise search from the west neighbour for the first foreground pixel.
    let Some(d1) = (0..8).find(|&d| fg(step(start, d))) else {
        return vec![start];
    };
    let first_next = step(start, d1);

    let mut points = Vec::new();
    let mut prev = first_next;
    let mut cur = start;
    loop {
        points.push(cur);
        // Counter-clockwise search starting just after the previous pixel.
        let back = direction_of(prev.x - cur.x, prev.y - cur.y);
        let next = (1..=8)
            .map(|k| (back + 8 - k) % 8)
            .map(|d| step(cur, d))
            .find(|&p| fg(p))
            .expect("component has at least two pixels");
        if next == start && cur == first_next {
            break;
        }
        prev = cur;
        cur = next;
    }
    points
}

/// One outer contour per 8-connected foreground component, in raster order
/// of each component's first pixel. Hole borders are not reported.
pub fn find_contours(mask: &BinaryMask) -> Vec<Contour> {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut contours = Vec::new();
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            if !mask.labels()[idx] || seen[idx] {
                continue;
            }
            // First pixel of a new component in raster order: its west,
            // north-west, north and north-east neighbours are background.
            seen[idx] = true;
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                for (dx, dy) in NEIGHBORS {
                    let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                    if mask.get_signed(nx, ny) {
                        let j = ny as usize * w + nx as usize;
                        if !seen[j] {
                            seen[j] = true;
                            stack.push((nx as usize, ny as usize));
                        }
                    }
                }
            }
            contours.push(Contour {
                points: trace_outer(mask, Point::new(x as i64, y as i64)),
            });
        }
    }
    contours
}

/// Convex hull by Andrew's monotone chain.
pub fn convex_hull(points: &[Point]) -> Polygon {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() <= 2 {
        return Polygon { vertices: pts };
    }
    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() + 1);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() == 2 && hull[0] == hull[1] {
        hull.pop();
    }
    Polygon { vertices: hull }
}

/// Hull of a contour's points.
pub fn contour_hull(contour: &Contour) -> Polygon {
    convex_hull(&contour.points)
}

fn div_floor(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    a.div_euclid(b)
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -div_floor(-a, b)
}

/// Integer span `[lo, hi]` of lattice points of the polygon on row `y`,
/// boundary included.
fn row_span(vertices: &[Point], y: i64) -> Option<(i64, i64)> {
    let n = vertices.len();
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if a.y == b.y {
            if a.y == y {
                lo = lo.min(a.x.min(b.x));
                hi = hi.max(a.x.max(b.x));
            }
            continue;
        }
        let (p, q) = if a.y < b.y { (a, b) } else { (b, a) };
        if y < p.y || y > q.y {
            continue;
        }
        // Exact crossing x = p.x + (y - p.y)(q.x - p.x)/(q.y - p.y).
        let num = p.x * (q.y - p.y) + (y - p.y) * (q.x - p.x);
        let den = q.y - p.y;
        lo = lo.min(div_ceil(num, den));
        hi = hi.max(div_floor(num, den));
    }
    if n == 1 && vertices[0].y == y {
        return Some((vertices[0].x, vertices[0].x));
    }
    (lo <= hi).then_some((lo, hi))
}

/// Calls `f(x, y)` for every in-bounds pixel whose center lies inside or on `polygon`.
fn for_each_lattice_point(polygon: &Polygon, w: usize, h: usize, mut f: impl FnMut(usize, usize)) {
    let v = &polygon.vertices;
    if v.is_empty() {
        return;
    }
    let (w, h) = (w as i64, h as i64);
    let ymin = v.iter().map(|p| p.y).min().unwrap().max(0);
    let ymax = v.iter().map(|p| p.y).max().unwrap().min(h - 1);
    for y in ymin..=ymax {
        let Some((lo, hi)) = row_span(v, y) else { continue };
        for x in lo.max(0)..=hi.min(w - 1) {
            // A segment covers only the lattice points exactly on it.
            if v.len() != 2 || cross(v[0], v[1], Point::new(x, y)) == 0 {
                f(x as usize, y as usize);
            }
        }
    }
}

/// Sets every pixel whose center lies inside or on `polygon`.
pub fn rasterize_polygon(polygon: &Polygon, out: &mut BinaryMask) {
    let (w, h) = out.dims();
    for_each_lattice_point(polygon, w, h, |x, y| out.set(x, y, true));
}

/// Union of the rasterized convex hulls of every outer contour in `mask`.
pub fn fill_hulls(mask: &BinaryMask) -> BinaryMask {
    fill_hulls_min_area(mask, 0)
}

/// Like [`fill_hulls`], skipping components whose contour hull covers fewer
/// than `min_area` pixels (those components are dropped from the output).
///
/// Hulls of separate components can overlap or touch and so form a new
/// component with a larger hull. Such hulls are merged into the hull of their
/// union until all hulls are apart, which makes the operation idempotent.
pub fn fill_hulls_min_area(mask: &BinaryMask, min_area: usize) -> BinaryMask {
    let (w, h) = mask.dims();
    let mut hulls: Vec<Polygon> = find_contours(mask)
        .iter()
        .map(contour_hull)
        .filter(|hull| {
            if min_area == 0 {
                return true;
            }
            let mut area = 0;
            for_each_lattice_point(hull, w, h, |_, _| area += 1);
            area >= min_area
        })
        .collect();
    // Index (1-based) of the hull that set each pixel.
    let mut owner = vec![0u32; w * h];
    loop {
        owner.fill(0);
        let mut groups = UnionFind::new(hulls.len());
        for (k, hull) in hulls.iter().enumerate() {
            let id = k as u32 + 1;
            for_each_lattice_point(hull, w, h, |x, y| {
                let o = &mut owner[y * w + x];
                if *o != 0 {
                    groups.union(*o as usize - 1, k);
                }
                *o = id;
            });
        }
        join_touching(&owner, w, h, &mut groups);
        if groups.merged == 0 {
            break;
        }
        let mut members: Vec<Vec<Point>> = vec![Vec::new(); hulls.len()];
        for (k, hull) in hulls.iter().enumerate() {
            members[groups.find(k)].extend_from_slice(&hull.vertices);
        }
        hulls = members
            .into_iter()
            .filter(|v| !v.is_empty())
            .map(|v| convex_hull(&v))
            .collect();
    }
    let labels = owner.iter().map(|&o| o != 0).collect();
    BinaryMask::from_labels(w, h, labels).expect("owner buffer matches mask size")
}

/// Joins hulls whose pixels are 8-neighbours.
fn join_touching(owner: &[u32], w: usize, h: usize, groups: &mut UnionFind) {
    for y in 0..h {
        for x in 0..w {
            let a = owner[y * w + x];
            if a == 0 {
                continue;
            }
            let mut join = |nx: usize, ny: usize| {
                let b = owner[ny * w + nx];
                if b != 0 && b != a {
                    groups.union(a as usize - 1, b as usize - 1);
                }
            };
            if x + 1 < w {
                join(x + 1, y);
            }
            if y + 1 < h {
                if x > 0 {
                    join(x - 1, y + 1);
                }
                join(x, y + 1);
                if x + 1 < w {
                    join(x + 1, y + 1);
                }
            }
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
    merged: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            merged: 0,
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
            self.merged += 1;
        }
    }
}

/// Pixelwise AND.
pub fn intersect(t1: &BinaryMask, t2: &BinaryMask) -> Result<BinaryMask> {
    check_dims(t1.dims(), t2.dims())?;
    let labels = t1
        .labels()
        .iter()
        .zip(t2.labels())
        .map(|(&a, &b)| a && b)
        .collect();
    BinaryMask::from_labels(t1.width(), t1.height(), labels)
}

/// Brute-force containment test: is `p` inside or on the hull polygon?
pub fn polygon_contains(polygon: &Polygon, p: Point) -> bool {
    let v = &polygon.vertices;
    match v.len() {
        0 => false,
        1 => v[0] == p,
        2 => {
            cross(v[0], v[1], p) == 0
                && p.x >= v[0].x.min(v[1].x)
                && p.x <= v[0].x.max(v[1].x)
                && p.y >= v[0].y.min(v[1].y)
                && p.y <= v[0].y.max(v[1].y)
        }
        n => (0..n).all(|i| cross(v[i], v[(i + 1) % n], p) >= 0),
    }
}
