use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coord {
    pub x: f64,
    pub y: f64,
}

impl Coord {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl From<(f64, f64)> for Coord {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned world-space bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    fn of(coords: impl IntoIterator<Item = Coord>) -> Self {
        coords.into_iter().fold(
            BBox {
                min_x: f64::INFINITY,
                min_y: f64::INFINITY,
                max_x: f64::NEG_INFINITY,
                max_y: f64::NEG_INFINITY,
            },
            |b, c| BBox {
                min_x: b.min_x.min(c.x),
                min_y: b.min_y.min(c.y),
                max_x: b.max_x.max(c.x),
                max_y: b.max_y.max(c.y),
            },
        )
    }

    pub fn expand(&self, r: f64) -> Self {
        BBox {
            min_x: self.min_x - r,
            min_y: self.min_y - r,
            max_x: self.max_x + r,
            max_y: self.max_y + r,
        }
    }
}

/// Single-part planar geometry. Polygon rings are closed (first = last).
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Coord),
    LineString(Vec<Coord>),
    Polygon {
        exterior: Vec<Coord>,
        holes: Vec<Vec<Coord>>,
    },
}

impl Geometry {
    pub fn bbox(&self) -> BBox {
        match self {
            Geometry::Point(p) => BBox::of([*p]),
            Geometry::LineString(pts) => BBox::of(pts.iter().copied()),
            Geometry::Polygon { exterior, .. } => BBox::of(exterior.iter().copied()),
        }
    }

    /// Even-odd containment over all rings; always false for points and lines.
    pub fn contains(&self, p: Coord) -> bool {
        match self {
            Geometry::Polygon { exterior, holes } => {
                let mut inside = ring_crossings_odd(exterior, p);
                for hole in holes {
                    if ring_crossings_odd(hole, p) {
                        inside = !inside;
                    }
                }
                inside
            }
            _ => false,
        }
    }

    /// Planar distance from `p` to the geometry; zero inside polygons.
    pub fn distance(&self, p: Coord) -> f64 {
        match self {
            Geometry::Point(q) => (p.x - q.x).hypot(p.y - q.y),
            Geometry::LineString(pts) => polyline_distance(pts, p),
            Geometry::Polygon { exterior, holes } => {
                if self.contains(p) {
                    return 0.0;
                }
                holes
                    .iter()
                    .map(|h| polyline_distance(h, p))
                    .fold(polyline_distance(exterior, p), f64::min)
            }
        }
    }

    /// Whether `p` is inside the polygon or strictly closer than `radius` to
    /// the geometry. With `radius = 0` only polygon interiors are covered.
    pub fn covers(&self, p: Coord, radius: f64) -> bool {
        self.contains(p) || self.distance(p) < radius
    }
}

fn ring_crossings_odd(ring: &[Coord], p: Coord) -> bool {
    let mut odd = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_at {
                odd = !odd;
            }
        }
    }
    odd
}

pub(crate) fn segment_distance(p: Coord, a: Coord, b: Coord) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.x + t * dx, a.y + t * dy);
    (p.x - cx).hypot(p.y - cy)
}

fn polyline_distance(pts: &[Coord], p: Coord) -> f64 {
    match pts {
        [] => f64::INFINITY,
        [only] => (p.x - only.x).hypot(p.y - only.y),
        _ => pts
            .windows(2)
            .map(|w| segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub geometry: Geometry,
    pub properties: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorLayer {
    pub features: Vec<Feature>,
}

impl VectorLayer {
    pub fn new(features: Vec<Feature>) -> Self {
        Self { features }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Glob match where `*` matches any (possibly empty) substring.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}

/// `key=pattern` tag predicate: exact key, glob on the value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSelector {
    pub key: String,
    pub pattern: String,
}

impl TagSelector {
    pub fn new(key: impl Into<String>, pattern: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            pattern: pattern.into(),
        }
    }

    pub fn matches(&self, feature: &Feature) -> bool {
        feature
            .properties
            .get(&self.key)
            .is_some_and(|v| glob_match(&self.pattern, v))
    }
}

impl std::str::FromStr for TagSelector {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.split_once('=') {
            Some((k, v)) if !k.is_empty() => Ok(Self::new(k, v)),
            _ => Err(crate::Error::param(format!(
                "tag selector must look like key=pattern, got '{s}'"
            ))),
        }
    }
}
