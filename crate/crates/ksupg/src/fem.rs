//! Shape functions, Gauss quadrature, element matrices and global assembly.
//!
//! Element matrices are the mass matrix `M = ∫ Nᵀ N`, convection matrices
//! `Cx = ∫ Nᵀ ∂ₓN`, `Cy = ∫ Nᵀ ∂ᵧN`, and diffusion matrices
//! `Dx = ∫ ∂ₓNᵀ ∂ₓN`, `Dxy = ∫ ∂ₓNᵀ ∂ᵧN`, `Dy = ∫ ∂ᵧNᵀ ∂ᵧN`, all over the
//! physical element via the isoparametric map.

use crate::mesh::{Element, ElementKind, Mesh};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Reference coordinates; (xi, 0) for line elements.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Full-integration rule: 2-point Gauss (L2), 2x2 Gauss (Q4),
/// degree-2 midpoint rule (T3).
pub fn quadrature_rule(kind: ElementKind) -> QuadratureRule {
    let g = 1.0 / 3.0_f64.sqrt();
    match kind {
        ElementKind::L2 => QuadratureRule {
            points: vec![[-g, 0.0], [g, 0.0]],
            weights: vec![1.0, 1.0],
        },
        ElementKind::Q4 => QuadratureRule {
            points: vec![[-g, -g], [g, -g], [g, g], [-g, g]],
            weights: vec![1.0; 4],
        },
        ElementKind::T3 => QuadratureRule {
            points: vec![[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]],
            weights: vec![1.0 / 6.0; 3],
        },
    }
}

/// Higher-order cross-check rule (3-point Gauss on L2, 3x3 on Q4,
/// degree-5 7-point rule on T3).
pub fn quadrature_rule_refined(kind: ElementKind) -> QuadratureRule {
    match kind {
        ElementKind::L2 => {
            let p = (3.0_f64 / 5.0).sqrt();
            QuadratureRule {
                points: vec![[-p, 0.0], [0.0, 0.0], [p, 0.0]],
                weights: vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
            }
        }
        ElementKind::Q4 => {
            let p = (3.0_f64 / 5.0).sqrt();
            let w = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
            let x = [-p, 0.0, p];
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for j in 0..3 {
                for i in 0..3 {
                    points.push([x[i], x[j]]);
                    weights.push(w[i] * w[j]);
                }
            }
            QuadratureRule { points, weights }
        }
        ElementKind::T3 => {
            // 7-point degree-5 rule
            let a = 0.059715871789770;
            let b = 0.470142064105115;
            let c = 0.797426985353087;
            let d = 0.101286507323456;
            let w1 = 0.225 / 2.0;
            let w2 = 0.132394152788506 / 2.0;
            let w3 = 0.125939180544827 / 2.0;
            QuadratureRule {
                points: vec![
                    [1.0 / 3.0, 1.0 / 3.0],
                    [a, b],
                    [b, a],
                    [b, b],
                    [c, d],
                    [d, c],
                    [d, d],
                ],
                weights: vec![w1, w2, w2, w2, w3, w3, w3],
            }
        }
    }
}

/// Shape function values and reference-space gradients at a reference point.
pub fn shape_functions(kind: ElementKind, ref_point: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let [xi, eta] = ref_point;
    match kind {
        ElementKind::L2 => (
            vec![0.5 * (1.0 - xi), 0.5 * (1.0 + xi)],
            vec![[-0.5, 0.0], [0.5, 0.0]],
        ),
        ElementKind::Q4 => {
            // counter-clockwise corner order
            let signs = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
            let mut vals = Vec::with_capacity(4);
            let mut grads = Vec::with_capacity(4);
            for (sx, sy) in signs {
                vals.push(0.25 * (1.0 + sx * xi) * (1.0 + sy * eta));
                grads.push([0.25 * sx * (1.0 + sy * eta), 0.25 * sy * (1.0 + sx * xi)]);
            }
            (vals, grads)
        }
        ElementKind::T3 => (
            vec![1.0 - xi - eta, xi, eta],
            vec![[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
        ),
    }
}

/// Shape values and physical-space gradients with the Jacobian determinant at
/// a quadrature point of a physical element.
pub struct MappedPoint {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
    pub det_j: f64,
}

pub fn map_to_physical(element: &Element, mesh: &Mesh, ref_point: [f64; 2]) -> Result<MappedPoint> {
    let (values, ref_grads) = shape_functions(element.kind, ref_point);
    if element.kind == ElementKind::L2 {
        let x0 = mesh.nodes[element.nodes[0]].x;
        let x1 = mesh.nodes[element.nodes[1]].x;
        let j = 0.5 * (x1 - x0);
        if j <= 1e-300 {
            return Err(Error::DegenerateElement(element.id));
        }
        let gradients = ref_grads.iter().map(|g| [g[0] / j, 0.0]).collect();
        return Ok(MappedPoint {
            values,
            gradients,
            det_j: j,
        });
    }
    // 2D isoparametric map
    let mut j = [[0.0; 2]; 2];
    for (a, &n) in element.nodes.iter().enumerate() {
        let node = &mesh.nodes[n];
        j[0][0] += ref_grads[a][0] * node.x;
        j[0][1] += ref_grads[a][0] * node.y;
        j[1][0] += ref_grads[a][1] * node.x;
        j[1][1] += ref_grads[a][1] * node.y;
    }
    let det_j = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det_j <= 0.0 {
        return Err(Error::DegenerateElement(element.id));
    }
    // rows of j are (d x_k / d xi_i), so physical gradients need j^{-1}
    let inv = [
        [j[1][1] / det_j, -j[0][1] / det_j],
        [-j[1][0] / det_j, j[0][0] / det_j],
    ];
    let gradients = ref_grads
        .iter()
        .map(|g| {
            [
                inv[0][0] * g[0] + inv[0][1] * g[1],
                inv[1][0] * g[0] + inv[1][1] * g[1],
            ]
        })
        .collect();
    Ok(MappedPoint {
        values,
        gradients,
        det_j,
    })
}

/// Dense per-element matrices.
#[derive(Debug, Clone)]
pub struct ElementMatrices {
    pub n: usize,
    pub mass: Vec<f64>,
    pub cx: Vec<f64>,
    pub cy: Vec<f64>,
    pub dx: Vec<f64>,
    pub dxy: Vec<f64>,
    pub dy: Vec<f64>,
}

impl ElementMatrices {
    fn zeros(n: usize) -> ElementMatrices {
        ElementMatrices {
            n,
            mass: vec![0.0; n * n],
            cx: vec![0.0; n * n],
            cy: vec![0.0; n * n],
            dx: vec![0.0; n * n],
            dxy: vec![0.0; n * n],
            dy: vec![0.0; n * n],
        }
    }
}

pub fn element_matrices(element: &Element, mesh: &Mesh) -> Result<ElementMatrices> {
    element_matrices_with_rule(element, mesh, &quadrature_rule(element.kind))
}

pub fn element_matrices_with_rule(
    element: &Element,
    mesh: &Mesh,
    rule: &QuadratureRule,
) -> Result<ElementMatrices> {
    let n = element.kind.n_nodes();
    let mut m = ElementMatrices::zeros(n);
    for (q, &pt) in rule.points.iter().enumerate() {
        let w = rule.weights[q];
        let mp = map_to_physical(element, mesh, pt)?;
        let scale = w * mp.det_j;
        for a in 0..n {
            for b in 0..n {
                let idx = a * n + b;
                m.mass[idx] += scale * mp.values[a] * mp.values[b];
                m.cx[idx] += scale * mp.values[a] * mp.gradients[b][0];
                m.cy[idx] += scale * mp.values[a] * mp.gradients[b][1];
                m.dx[idx] += scale * mp.gradients[a][0] * mp.gradients[b][0];
                m.dxy[idx] += scale * mp.gradients[a][0] * mp.gradients[b][1];
                m.dy[idx] += scale * mp.gradients[a][1] * mp.gradients[b][1];
            }
        }
    }
    Ok(m)
}

/// Which assembled global operator to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixSelector {
    Mass,
    Cx,
    Cy,
    Dx,
    Dxy,
    /// Transpose pairing ∫ ∂ᵧNᵀ ∂ₓN, used by the implicit 2D cross terms.
    Dyx,
    Dy,
    /// Dx scaled by h_e/2 per element (the stabilization weight).
    DxH,
    DxyH,
    DyxH,
    DyH,
    /// D (1D) scaled by h_e/2.
    DH,
}

/// Node-adjacency sparsity pattern plus per-element scatter maps
/// (local pair index -> CSR value index), built once per mesh.
pub struct AssemblyPlan {
    pub pattern: CsrMatrix,
    /// scatter[e][a * n + b] = value index for (nodes[a], nodes[b]).
    pub scatter: Vec<Vec<usize>>,
}

pub fn assembly_plan(mesh: &Mesh) -> AssemblyPlan {
    let n = mesh.n_nodes();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &mesh.elements {
        for &a in &e.nodes {
            for &b in &e.nodes {
                adj[a].push(b);
            }
        }
    }
    for row in adj.iter_mut() {
        row.sort_unstable();
        row.dedup();
    }
    let pattern = CsrMatrix::from_pattern(n, n, &adj);
    let scatter = mesh
        .elements
        .iter()
        .map(|e| {
            let ne = e.nodes.len();
            let mut map = Vec::with_capacity(ne * ne);
            for &a in &e.nodes {
                for &b in &e.nodes {
                    map.push(pattern.find(a, b).expect("pattern covers element pairs"));
                }
            }
            map
        })
        .collect();
    AssemblyPlan { pattern, scatter }
}

/// Scatter-add element matrices into the global sparse operator.
pub fn assemble(mesh: &Mesh, selector: MatrixSelector) -> Result<CsrMatrix> {
    let plan = assembly_plan(mesh);
    assemble_with_plan(mesh, selector, &plan)
}

pub fn assemble_with_plan(
    mesh: &Mesh,
    selector: MatrixSelector,
    plan: &AssemblyPlan,
) -> Result<CsrMatrix> {
    let mut out = plan.pattern.clone();
    out.values.iter_mut().for_each(|v| *v = 0.0);
    for (e_idx, e) in mesh.elements.iter().enumerate() {
        let em = element_matrices(e, mesh)?;
        let ne = em.n;
        let hf = 0.5 * e.h;
        for a in 0..ne {
            for b in 0..ne {
                let local = a * ne + b;
                let v = match selector {
                    MatrixSelector::Mass => em.mass[local],
                    MatrixSelector::Cx => em.cx[local],
                    MatrixSelector::Cy => em.cy[local],
                    MatrixSelector::Dx => em.dx[local],
                    MatrixSelector::Dxy => em.dxy[local],
                    MatrixSelector::Dyx => em.dxy[b * ne + a],
                    MatrixSelector::Dy => em.dy[local],
                    MatrixSelector::DxH => hf * em.dx[local],
                    MatrixSelector::DxyH => hf * em.dxy[local],
                    MatrixSelector::DyxH => hf * em.dxy[b * ne + a],
                    MatrixSelector::DyH => hf * em.dy[local],
                    MatrixSelector::DH => hf * em.dx[local],
                };
                out.values[plan.scatter[e_idx][local]] += v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_line_mesh, build_structured_quad_mesh, build_structured_tri_mesh, Rect};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn shape_values_at_nodes_and_centers() {
        let (v, _) = shape_functions(ElementKind::L2, [-1.0, 0.0]);
        assert_eq!(v, vec![1.0, 0.0]);
        let (v, _) = shape_functions(ElementKind::Q4, [0.0, 0.0]);
        for x in v {
            assert_close(x, 0.25, 1e-15);
        }
        let (v, _) = shape_functions(ElementKind::T3, [1.0 / 3.0, 1.0 / 3.0]);
        for x in v {
            assert_close(x, 1.0 / 3.0, 1e-15);
        }
    }

    #[test]
    fn shape_partition_of_unity() {
        for kind in [ElementKind::L2, ElementKind::Q4, ElementKind::T3] {
            for pt in [[0.1f64, 0.2], [0.3, 0.05], [-0.4, 0.0]] {
                let pt = if kind == ElementKind::T3 {
                    [pt[0].abs(), pt[1].abs()]
                } else {
                    pt
                };
                let (v, g) = shape_functions(kind, pt);
                assert_close(v.iter().sum::<f64>(), 1.0, 1e-14);
                assert_close(g.iter().map(|x| x[0]).sum::<f64>(), 0.0, 1e-14);
                assert_close(g.iter().map(|x| x[1]).sum::<f64>(), 0.0, 1e-14);
            }
        }
    }

    #[test]
    fn quadrature_weights_sum_to_reference_measure() {
        for (kind, measure) in [
            (ElementKind::L2, 2.0),
            (ElementKind::Q4, 4.0),
            (ElementKind::T3, 0.5),
        ] {
            for rule in [quadrature_rule(kind), quadrature_rule_refined(kind)] {
                assert_close(rule.weights.iter().sum::<f64>(), measure, 1e-14);
            }
        }
    }

    #[test]
    fn quadrature_points_standard_gauss() {
        let r = quadrature_rule(ElementKind::L2);
        let g = 1.0 / 3.0_f64.sqrt();
        assert_close(r.points[0][0], -g, 1e-15);
        assert_close(r.points[1][0], g, 1e-15);
        let rq = quadrature_rule(ElementKind::Q4);
        assert_eq!(rq.points.len(), 4);
        for p in &rq.points {
            assert_close(p[0].abs(), g, 1e-15);
            assert_close(p[1].abs(), g, 1e-15);
        }
        let rt = quadrature_rule(ElementKind::T3);
        assert_eq!(rt.points.len(), 3);
        for w in &rt.weights {
            assert_close(*w, 1.0 / 6.0, 1e-15);
        }
    }

    #[test]
    fn l2_element_matrices_symbolic() {
        let mesh = build_line_mesh(3, 0.0, 1.0).unwrap();
        let h = 0.5;
        let em = element_matrices(&mesh.elements[0], &mesh).unwrap();
        let m_exact = [2.0 * h / 6.0, h / 6.0, h / 6.0, 2.0 * h / 6.0];
        let c_exact = [-0.5, 0.5, -0.5, 0.5];
        let d_exact = [1.0 / h, -1.0 / h, -1.0 / h, 1.0 / h];
        for i in 0..4 {
            assert_close(em.mass[i], m_exact[i], 1e-14);
            assert_close(em.cx[i], c_exact[i], 1e-14);
            assert_close(em.dx[i], d_exact[i], 1e-13);
        }
    }

    #[test]
    fn unit_q4_mass_matrix_symbolic() {
        let mesh = build_structured_quad_mesh(1, 1, Rect::unit()).unwrap();
        let em = element_matrices(&mesh.elements[0], &mesh).unwrap();
        let exact = [
            4.0, 2.0, 1.0, 2.0, //
            2.0, 4.0, 2.0, 1.0, //
            1.0, 2.0, 4.0, 2.0, //
            2.0, 1.0, 2.0, 4.0,
        ];
        for i in 0..16 {
            assert_close(em.mass[i], exact[i] / 36.0, 1e-14);
        }
    }

    #[test]
    fn convection_row_sums_vanish() {
        let mesh = build_structured_tri_mesh(3, 3, Rect::unit()).unwrap();
        for e in &mesh.elements {
            let em = element_matrices(e, &mesh).unwrap();
            let n = em.n;
            for a in 0..n {
                let rx: f64 = (0..n).map(|b| em.cx[a * n + b]).sum();
                let ry: f64 = (0..n).map(|b| em.cy[a * n + b]).sum();
                assert_close(rx, 0.0, 1e-13);
                assert_close(ry, 0.0, 1e-13);
            }
        }
    }

    #[test]
    fn assembled_line_mass_tridiagonal() {
        let mesh = build_line_mesh(3, 0.0, 1.0).unwrap();
        let m = assemble(&mesh, MatrixSelector::Mass).unwrap();
        let h = 0.5;
        assert_close(m.get(0, 0), h / 3.0, 1e-14);
        assert_close(m.get(1, 1), 2.0 * h / 3.0, 1e-14);
        assert_close(m.get(2, 2), h / 3.0, 1e-14);
        assert_close(m.get(0, 1), h / 6.0, 1e-14);
        assert_close(m.get(0, 2), 0.0, 1e-16);
    }

    #[test]
    fn single_element_assembly_equals_element_matrix() {
        let mesh = build_structured_quad_mesh(1, 1, Rect::unit()).unwrap();
        let g = assemble(&mesh, MatrixSelector::Mass).unwrap();
        let em = element_matrices(&mesh.elements[0], &mesh).unwrap();
        let conn = &mesh.elements[0].nodes;
        for a in 0..4 {
            for b in 0..4 {
                assert_close(g.get(conn[a], conn[b]), em.mass[a * 4 + b], 1e-15);
            }
        }
    }

    #[test]
    fn nnz_matches_adjacency_oracle() {
        let mesh = build_structured_quad_mesh(
            60,
            20,
            Rect {
                x0: 0.0,
                x1: 3.0,
                y0: 0.0,
                y1: 1.0,
            },
        )
        .unwrap();
        let m = assemble(&mesh, MatrixSelector::Mass).unwrap();
        // independent adjacency enumeration
        let mut adj = std::collections::HashSet::new();
        for e in &mesh.elements {
            for &a in &e.nodes {
                for &b in &e.nodes {
                    adj.insert((a, b));
                }
            }
        }
        assert_eq!(m.nnz(), adj.len());
    }

    #[test]
    fn mass_is_spd_on_random_vectors() {
        use rand::{Rng, SeedableRng};
        let mesh = build_structured_tri_mesh(6, 5, Rect::unit()).unwrap();
        let m = assemble(&mesh, MatrixSelector::Mass).unwrap();
        for i in 0..m.n_rows {
            assert!(m.get(i, i) > 0.0);
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                let j = m.col_idx[k];
                assert_close(m.values[k], m.get(j, i), 1e-14);
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let x: Vec<f64> = (0..m.n_rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mx = m.spmv(&x).unwrap();
            let quad: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
            assert!(quad > 0.0);
        }
    }

    #[test]
    fn diffusion_interior_null_space_contains_constants() {
        let mesh = build_structured_quad_mesh(8, 8, Rect::unit()).unwrap();
        let dx = assemble(&mesh, MatrixSelector::Dx).unwrap();
        let dy = assemble(&mesh, MatrixSelector::Dy).unwrap();
        let sum = dx.add_scaled(&dy, 1.0);
        let ones = vec![1.0; sum.n_rows];
        let r = sum.spmv(&ones).unwrap();
        let boundary = mesh.boundary_nodes();
        for i in 0..sum.n_rows {
            if !boundary.contains(&i) {
                assert!(r[i].abs() <= 1e-12, "row {i}: {}", r[i]);
            }
        }
    }

    #[test]
    fn quadrature_exactness_q4_2x2_vs_3x3() {
        // affine images: exact agreement
        let mesh = build_structured_quad_mesh(2, 2, Rect::unit()).unwrap();
        for e in &mesh.elements {
            let a = element_matrices_with_rule(e, &mesh, &quadrature_rule(ElementKind::Q4)).unwrap();
            let b =
                element_matrices_with_rule(e, &mesh, &quadrature_rule_refined(ElementKind::Q4))
                    .unwrap();
            for i in 0..16 {
                assert_close(a.mass[i], b.mass[i], 1e-13);
            }
        }
        // mildly distorted element: 3x3 is the reference, agreement to 1e-10
        let mut mesh = build_structured_quad_mesh(1, 1, Rect::unit()).unwrap();
        mesh.nodes[3].x += 0.02;
        mesh.nodes[3].y -= 0.015;
        let e = &mesh.elements[0];
        let a = element_matrices_with_rule(e, &mesh, &quadrature_rule(ElementKind::Q4)).unwrap();
        let b =
            element_matrices_with_rule(e, &mesh, &quadrature_rule_refined(ElementKind::Q4)).unwrap();
        for i in 0..16 {
            assert_close(a.mass[i], b.mass[i], 1e-10);
        }
    }

    #[test]
    fn positive_jacobian_at_all_quadrature_points() {
        let mesh = build_structured_tri_mesh(4, 4, Rect::unit()).unwrap();
        for e in &mesh.elements {
            for pt in &quadrature_rule(e.kind).points {
                assert!(map_to_physical(e, &mesh, *pt).unwrap().det_j > 0.0);
            }
        }
    }

    #[test]
    fn assembly_permutation_conjugation() {
        // permute node numbering, assemble, and compare P^T A P with the original
        let mesh = build_structured_quad_mesh(3, 2, Rect::unit()).unwrap();
        let n = mesh.n_nodes();
        let perm: Vec<usize> = (0..n).map(|i| (i * 5 + 3) % n).collect();
        {
            let mut seen = vec![false; n];
            for &p in &perm {
                assert!(!seen[p]);
                seen[p] = true;
            }
        }
        let mut pmesh = mesh.clone();
        for node in pmesh.nodes.iter_mut() {
            let old = node.id;
            node.id = perm[old];
        }
        pmesh.nodes.sort_by_key(|n| n.id);
        let mut reordered: Vec<crate::mesh::Node> = vec![
            crate::mesh::Node {
                id: 0,
                x: 0.0,
                y: 0.0
            };
            n
        ];
        for node in &mesh.nodes {
            reordered[perm[node.id]] = crate::mesh::Node {
                id: perm[node.id],
                x: node.x,
                y: node.y,
            };
        }
        pmesh.nodes = reordered;
        for e in pmesh.elements.iter_mut() {
            for v in e.nodes.iter_mut() {
                *v = perm[*v];
            }
        }
        let a = assemble(&mesh, MatrixSelector::Mass).unwrap();
        let pa = assemble(&pmesh, MatrixSelector::Mass).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_close(a.get(i, j), pa.get(perm[i], perm[j]), 1e-14);
            }
        }
    }
}
