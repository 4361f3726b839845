//! Mesh construction: structured 1D lines, structured quadrilateral grids,
//! unstructured triangle meshes read from a plain-text format, plus boundary
//! tagging and per-element length scales.

use crate::{Error, Result};
use std::collections::{HashMap, HashSet};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    L2,
    Q4,
    T3,
}

impl ElementKind {
    pub fn n_nodes(self) -> usize {
        match self {
            ElementKind::L2 => 2,
            ElementKind::Q4 => 4,
            ElementKind::T3 => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct Element {
    pub id: usize,
    pub kind: ElementKind,
    pub nodes: Vec<usize>,
    /// Element length scale h (minimum edge length).
    pub h: f64,
}

/// Physical meaning of a tagged boundary node set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
    Wall,
    SupersonicInflow,
    SupersonicOutflow,
}

impl BoundaryTag {
    pub fn parse(s: &str) -> Option<BoundaryTag> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Some(BoundaryTag::Dirichlet),
            "neumann" => Some(BoundaryTag::Neumann),
            "wall" => Some(BoundaryTag::Wall),
            "inflow" | "supersonic_inflow" => Some(BoundaryTag::SupersonicInflow),
            "outflow" | "supersonic_outflow" => Some(BoundaryTag::SupersonicOutflow),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundarySet {
    /// Set name; cases key their boundary data on this.
    pub name: String,
    pub tag: BoundaryTag,
    pub nodes: Vec<usize>,
    /// Outward unit normal per node (parallel to `nodes`); empty in 1D.
    pub normals: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<Node>,
    pub elements: Vec<Element>,
    pub boundaries: Vec<BoundarySet>,
    pub dim: usize,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn boundary(&self, name: &str) -> Option<&BoundarySet> {
        self.boundaries.iter().find(|b| b.name == name)
    }

    pub fn boundary_required(&self, name: &str) -> Result<&BoundarySet> {
        self.boundary(name)
            .ok_or_else(|| Error::MissingTag(name.to_string()))
    }

    /// All node ids that appear in some boundary set.
    pub fn boundary_nodes(&self) -> HashSet<usize> {
        self.boundaries
            .iter()
            .flat_map(|b| b.nodes.iter().copied())
            .collect()
    }
}

fn dist(a: &Node, b: &Node) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// Minimum edge length of an element; errors on near-zero edges.
pub fn element_size(element: &Element, mesh: &Mesh) -> Result<f64> {
    let n = element.nodes.len();
    let mut h = f64::INFINITY;
    for i in 0..n {
        let a = &mesh.nodes[element.nodes[i]];
        let b = &mesh.nodes[element.nodes[(i + 1) % n]];
        if element.kind == ElementKind::L2 && i + 1 == n {
            break; // a line element has a single edge
        }
        let d = dist(a, b);
        if d < 1e-14 {
            return Err(Error::DegenerateElement(element.id));
        }
        h = h.min(d);
    }
    Ok(h)
}

fn signed_area_t3(nodes: &[Node], conn: &[usize]) -> f64 {
    let (a, b, c) = (&nodes[conn[0]], &nodes[conn[1]], &nodes[conn[2]]);
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

fn quad_signed_area(nodes: &[Node], conn: &[usize]) -> f64 {
    // shoelace over the four corners
    let mut s = 0.0;
    for i in 0..4 {
        let a = &nodes[conn[i]];
        let b = &nodes[conn[(i + 1) % 4]];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

/// Equispaced 1D mesh of L2 elements on [x0, x1] with end nodes tagged.
pub fn build_line_mesh(n_nodes: usize, x0: f64, x1: f64) -> Result<Mesh> {
    if n_nodes < 2 {
        return Err(Error::InvalidArgument(format!(
            "line mesh needs at least 2 nodes, got {n_nodes}"
        )));
    }
    if !(x1 > x0) {
        return Err(Error::InvalidArgument(format!(
            "line mesh needs x1 > x0, got [{x0}, {x1}]"
        )));
    }
    let h = (x1 - x0) / (n_nodes - 1) as f64;
    let nodes: Vec<Node> = (0..n_nodes)
        .map(|i| Node {
            id: i,
            x: x0 + h * i as f64,
            y: 0.0,
        })
        .collect();
    let elements: Vec<Element> = (0..n_nodes - 1)
        .map(|e| Element {
            id: e,
            kind: ElementKind::L2,
            nodes: vec![e, e + 1],
            h,
        })
        .collect();
    let boundaries = vec![
        BoundarySet {
            name: "left".into(),
            tag: BoundaryTag::Dirichlet,
            nodes: vec![0],
            normals: vec![],
        },
        BoundarySet {
            name: "right".into(),
            tag: BoundaryTag::Dirichlet,
            nodes: vec![n_nodes - 1],
            normals: vec![],
        },
    ];
    Ok(Mesh {
        nodes,
        elements,
        boundaries,
        dim: 1,
    })
}

/// Axis-aligned rectangle domain.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn unit() -> Rect {
        Rect {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }
}

/// Structured Q4 mesh with nx x ny elements; sides tagged left/right/bottom/top.
pub fn build_structured_quad_mesh(nx: usize, ny: usize, domain: Rect) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(
            "quad mesh needs nx, ny >= 1".to_string(),
        ));
    }
    if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
        return Err(Error::InvalidArgument("empty rectangle".to_string()));
    }
    let dx = (domain.x1 - domain.x0) / nx as f64;
    let dy = (domain.y1 - domain.y0) / ny as f64;
    let nnx = nx + 1;
    let nny = ny + 1;
    let mut nodes = Vec::with_capacity(nnx * nny);
    for j in 0..nny {
        for i in 0..nnx {
            nodes.push(Node {
                id: j * nnx + i,
                x: domain.x0 + dx * i as f64,
                y: domain.y0 + dy * j as f64,
            });
        }
    }
    let h = dx.min(dy);
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let n0 = j * nnx + i;
            elements.push(Element {
                id: j * nx + i,
                kind: ElementKind::Q4,
                nodes: vec![n0, n0 + 1, n0 + 1 + nnx, n0 + nnx],
                h,
            });
        }
    }
    let left: Vec<usize> = (0..nny).map(|j| j * nnx).collect();
    let right: Vec<usize> = (0..nny).map(|j| j * nnx + nx).collect();
    let bottom: Vec<usize> = (0..nnx).collect();
    let top: Vec<usize> = (0..nnx).map(|i| ny * nnx + i).collect();
    let mk = |name: &str, nodes: Vec<usize>, n: [f64; 2]| BoundarySet {
        name: name.into(),
        tag: BoundaryTag::Dirichlet,
        normals: vec![n; nodes.len()],
        nodes,
    };
    let boundaries = vec![
        mk("left", left, [-1.0, 0.0]),
        mk("right", right, [1.0, 0.0]),
        mk("bottom", bottom, [0.0, -1.0]),
        mk("top", top, [0.0, 1.0]),
    ];
    Ok(Mesh {
        nodes,
        elements,
        boundaries,
        dim: 2,
    })
}

/// Structured triangle mesh obtained by splitting each quad of an nx x ny grid
/// along its diagonal. Boundary sets match the quad builder.
pub fn build_structured_tri_mesh(nx: usize, ny: usize, domain: Rect) -> Result<Mesh> {
    let quad = build_structured_quad_mesh(nx, ny, domain)?;
    let mut elements = Vec::with_capacity(2 * quad.elements.len());
    for e in &quad.elements {
        let [a, b, c, d] = [e.nodes[0], e.nodes[1], e.nodes[2], e.nodes[3]];
        for conn in [[a, b, c], [a, c, d]] {
            let id = elements.len();
            let mut el = Element {
                id,
                kind: ElementKind::T3,
                nodes: conn.to_vec(),
                h: 0.0,
            };
            el.h = element_size(&el, &quad)?;
            elements.push(el);
        }
    }
    Ok(Mesh {
        nodes: quad.nodes,
        elements,
        boundaries: quad.boundaries,
        dim: 2,
    })
}

/// Radial Q4 mesh around a half cylinder: radius `r_inner` wall, `r_outer`
/// inflow arc, straight outflow edges at the top and bottom. The half circle
/// spans angles [90, 270] degrees so the inflow faces -x.
pub fn build_half_cylinder_mesh(nr: usize, ntheta: usize, r_inner: f64, r_outer: f64) -> Result<Mesh> {
    if nr == 0 || ntheta == 0 || !(r_outer > r_inner) || !(r_inner > 0.0) {
        return Err(Error::InvalidArgument("bad half-cylinder mesh parameters".into()));
    }
    let nnr = nr + 1;
    let nnt = ntheta + 1;
    let mut nodes = Vec::with_capacity(nnr * nnt);
    for j in 0..nnt {
        // theta from 90 to 270 degrees, counter-clockwise in j
        let theta = std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * j as f64 / ntheta as f64;
        for i in 0..nnr {
            let r = r_inner + (r_outer - r_inner) * i as f64 / nr as f64;
            nodes.push(Node {
                id: j * nnr + i,
                x: r * theta.cos(),
                y: r * theta.sin(),
            });
        }
    }
    let mut elements = Vec::with_capacity(nr * ntheta);
    let mut tmp_mesh = Mesh {
        nodes: nodes.clone(),
        elements: vec![],
        boundaries: vec![],
        dim: 2,
    };
    for j in 0..ntheta {
        for i in 0..nr {
            let n0 = j * nnr + i;
            // counter-clockwise in physical space
            let conn = vec![n0, n0 + nnr, n0 + nnr + 1, n0 + 1];
            let conn = if quad_signed_area(&tmp_mesh.nodes, &conn) > 0.0 {
                conn
            } else {
                vec![conn[0], conn[3], conn[2], conn[1]]
            };
            let mut el = Element {
                id: j * nr + i,
                kind: ElementKind::Q4,
                nodes: conn,
                h: 0.0,
            };
            el.h = element_size(&el, &tmp_mesh)?;
            elements.push(el);
        }
    }
    tmp_mesh.elements = elements;

    // Boundary sets: wall (inner arc), inflow (outer arc), outflow (straight edges)
    let wall: Vec<usize> = (0..nnt).map(|j| j * nnr).collect();
    let inflow: Vec<usize> = (0..nnt).map(|j| j * nnr + nr).collect();
    let mut outflow: Vec<usize> = (0..nnr).collect(); // theta = 90 edge
    outflow.extend((0..nnr).map(|i| ntheta * nnr + i)); // theta = 270 edge
    let wall_normals: Vec<[f64; 2]> = wall
        .iter()
        .map(|&n| {
            let node = &tmp_mesh.nodes[n];
            let r = (node.x * node.x + node.y * node.y).sqrt();
            [-node.x / r, -node.y / r] // outward from the fluid = toward the cylinder axis
        })
        .collect();
    let inflow_normals: Vec<[f64; 2]> = inflow
        .iter()
        .map(|&n| {
            let node = &tmp_mesh.nodes[n];
            let r = (node.x * node.x + node.y * node.y).sqrt();
            [node.x / r, node.y / r]
        })
        .collect();
    let outflow_normals: Vec<[f64; 2]> = (0..nnr)
        .map(|_| [0.0, 1.0])
        .chain((0..nnr).map(|_| [0.0, -1.0]))
        .collect();
    tmp_mesh.boundaries = vec![
        BoundarySet {
            name: "wall".into(),
            tag: BoundaryTag::Wall,
            nodes: wall,
            normals: wall_normals,
        },
        BoundarySet {
            name: "inflow".into(),
            tag: BoundaryTag::SupersonicInflow,
            nodes: inflow,
            normals: inflow_normals,
        },
        BoundarySet {
            name: "outflow".into(),
            tag: BoundaryTag::SupersonicOutflow,
            nodes: outflow,
            normals: outflow_normals,
        },
    ];
    Ok(tmp_mesh)
}

/// Read a T3 mesh from the plain-text format:
///
/// ```text
/// nnodes nelems nbsets
/// id x y                  (nnodes lines)
/// id n1 n2 n3             (nelems lines)
/// tagname count           (per boundary set)
/// node_id nx ny           (count lines)
/// ```
///
/// Indices are 0-based, `#` starts a comment, tagname is one of
/// dirichlet/neumann/wall/inflow/outflow with an optional `:name` suffix.
pub fn load_triangle_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    parse_triangle_mesh(&text)
}

pub fn parse_triangle_mesh(text: &str) -> Result<Mesh> {
    // (line number, significant tokens)
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let body = l.split('#').next().unwrap_or("");
            (i + 1, body.split_whitespace().collect::<Vec<_>>())
        })
        .filter(|(_, toks)| !toks.is_empty())
        .collect();
    let mut cursor = 0usize;
    let mut next = || -> Result<(usize, &Vec<&str>)> {
        let item = lines.get(cursor).ok_or(Error::Parse {
            line: lines.last().map_or(0, |(n, _)| *n),
            msg: "unexpected end of file".into(),
        })?;
        cursor += 1;
        Ok((item.0, &item.1))
    };
    fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
        tok.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("cannot parse '{tok}'"),
        })
    }

    let (hline, header) = next()?;
    if header.len() != 3 {
        return Err(Error::Parse {
            line: hline,
            msg: "expected 'nnodes nelems nbsets'".into(),
        });
    }
    let nnodes: usize = num(header[0], hline)?;
    let nelems: usize = num(header[1], hline)?;
    let nbsets: usize = num(header[2], hline)?;

    let mut nodes = Vec::with_capacity(nnodes);
    for k in 0..nnodes {
        let (ln, toks) = next()?;
        if toks.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "expected 'id x y'".into(),
            });
        }
        let id: usize = num(toks[0], ln)?;
        if id != k {
            return Err(Error::Parse {
                line: ln,
                msg: format!("node ids must be contiguous from 0, got {id}"),
            });
        }
        let x: f64 = num(toks[1], ln)?;
        let y: f64 = num(toks[2], ln)?;
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Parse {
                line: ln,
                msg: "non-finite coordinate".into(),
            });
        }
        nodes.push(Node { id, x, y });
    }

    let mut elements = Vec::with_capacity(nelems);
    for k in 0..nelems {
        let (ln, toks) = next()?;
        if toks.len() != 4 {
            return Err(Error::Parse {
                line: ln,
                msg: "expected 'id n1 n2 n3'".into(),
            });
        }
        let id: usize = num(toks[0], ln)?;
        if id != k {
            return Err(Error::Parse {
                line: ln,
                msg: format!("element ids must be contiguous from 0, got {id}"),
            });
        }
        let mut conn = Vec::with_capacity(3);
        for t in &toks[1..4] {
            let n: usize = num(t, ln)?;
            if n >= nnodes {
                return Err(Error::Topology(format!(
                    "element {id} references missing node {n} (have {nnodes})"
                )));
            }
            conn.push(n);
        }
        // auto-correct clockwise ordering
        if signed_area_t3(&nodes, &conn) < 0.0 {
            conn.swap(1, 2);
        }
        if signed_area_t3(&nodes, &conn) <= 0.0 {
            return Err(Error::DegenerateElement(id));
        }
        elements.push(Element {
            id,
            kind: ElementKind::T3,
            nodes: conn,
            h: 0.0,
        });
    }

    let mut boundaries = Vec::with_capacity(nbsets);
    for _ in 0..nbsets {
        let (ln, toks) = next()?;
        if toks.len() != 2 {
            return Err(Error::Parse {
                line: ln,
                msg: "expected 'tagname count'".into(),
            });
        }
        let (kind_str, name) = match toks[0].split_once(':') {
            Some((k, n)) => (k, n.to_string()),
            None => (toks[0], toks[0].to_string()),
        };
        let tag = BoundaryTag::parse(kind_str).ok_or(Error::Parse {
            line: ln,
            msg: format!("unknown boundary tag '{}'", toks[0]),
        })?;
        let count: usize = num(toks[1], ln)?;
        let mut bnodes = Vec::with_capacity(count);
        let mut normals = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln2, t) = next()?;
            if t.len() != 3 {
                return Err(Error::Parse {
                    line: ln2,
                    msg: "expected 'node_id nx ny'".into(),
                });
            }
            let id: usize = num(t[0], ln2)?;
            if id >= nnodes {
                return Err(Error::Topology(format!(
                    "boundary references missing node {id}"
                )));
            }
            let nx: f64 = num(t[1], ln2)?;
            let ny: f64 = num(t[2], ln2)?;
            let norm = (nx * nx + ny * ny).sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::Parse {
                    line: ln2,
                    msg: format!("normal ({nx}, {ny}) is not unit length"),
                });
            }
            bnodes.push(id);
            normals.push([nx, ny]);
        }
        boundaries.push(BoundarySet {
            name,
            tag,
            nodes: bnodes,
            normals,
        });
    }

    let mut mesh = Mesh {
        nodes,
        elements,
        boundaries,
        dim: 2,
    };
    for e in 0..mesh.elements.len() {
        mesh.elements[e].h = element_size(&mesh.elements[e], &mesh)?;
    }
    validate_boundary_nodes(&mesh)?;
    Ok(mesh)
}

/// Every tagged node must lie on an element edge used by exactly one element.
fn validate_boundary_nodes(mesh: &Mesh) -> Result<()> {
    let mut edge_use: HashMap<(usize, usize), usize> = HashMap::new();
    for e in &mesh.elements {
        let n = e.nodes.len();
        for i in 0..n {
            let a = e.nodes[i];
            let b = e.nodes[(i + 1) % n];
            let key = (a.min(b), a.max(b));
            *edge_use.entry(key).or_insert(0) += 1;
        }
    }
    let hull_nodes: HashSet<usize> = edge_use
        .iter()
        .filter(|(_, &c)| c == 1)
        .flat_map(|(&(a, b), _)| [a, b])
        .collect();
    for b in &mesh.boundaries {
        for &n in &b.nodes {
            if !hull_nodes.contains(&n) {
                return Err(Error::Topology(format!(
                    "boundary node {n} in set '{}' is not on the domain boundary",
                    b.name
                )));
            }
        }
    }
    Ok(())
}
