//! CSV and legacy-ASCII VTK output writers. All writes are atomic
//! (temp file in the target directory, then rename).

use crate::mesh::ElementKind;
use crate::solver::{ConservedField, EquationId, SolverConfig, StepReport};
use crate::{Error, Result};
use std::io::Write;
use std::path::Path;

/// Write a file atomically: temp file beside the target, then rename.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp-write");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// 1D field CSV: `x, rho, u, p, mach, e_internal` for Euler, `x, u` for
/// Burgers. Rows follow mesh node order (ascending x on line meshes).
pub fn write_field_csv(field: &ConservedField, config: &SolverConfig, path: &Path) -> Result<()> {
    let mut text = String::new();
    match field.equation {
        EquationId::Burgers1D => {
            text.push_str("x,u\n");
            for node in &field.mesh.nodes {
                text.push_str(&format!("{},{}\n", fmt(node.x), fmt(field.node(node.id)[0])));
            }
        }
        EquationId::Euler1D => {
            text.push_str("x,rho,u,p,mach,e_internal\n");
            for node in &field.mesh.nodes {
                let s = field.state_1d(node.id, config.gamma, config.r)?;
                let mach = s.u / s.sound_speed();
                let e_int = s.p / ((config.gamma - 1.0) * s.rho);
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    fmt(node.x),
                    fmt(s.rho),
                    fmt(s.u),
                    fmt(s.p),
                    fmt(mach),
                    fmt(e_int)
                ));
            }
        }
        _ => {
            return Err(Error::InvalidArgument(
                "CSV fields are for 1D equations; use the VTK writer in 2D".into(),
            ))
        }
    }
    write_atomic(path, &text)
}

/// Residue history CSV: `iteration, residue`.
pub fn write_history_csv(reports: &[StepReport], path: &Path) -> Result<()> {
    let mut text = String::from("iteration,residue\n");
    for (k, r) in reports.iter().enumerate() {
        text.push_str(&format!("{},{}\n", k + 1, fmt(r.residue)));
    }
    write_atomic(path, &text)
}

/// Legacy ASCII VTK unstructured grid with point data. Euler fields carry
/// rho, p and Mach scalars plus the velocity vector; Burgers carries u.
pub fn write_vtk(field: &ConservedField, config: &SolverConfig, path: &Path) -> Result<()> {
    let mesh = &field.mesh;
    if mesh.dim != 2 {
        return Err(Error::InvalidArgument("VTK writer needs a 2D mesh".into()));
    }
    let mut t = String::new();
    t.push_str("# vtk DataFile Version 3.0\n");
    t.push_str("ksupg field\n");
    t.push_str("ASCII\n");
    t.push_str("DATASET UNSTRUCTURED_GRID\n");
    t.push_str(&format!("POINTS {} double\n", mesh.n_nodes()));
    for n in &mesh.nodes {
        t.push_str(&format!("{} {} 0.0\n", fmt(n.x), fmt(n.y)));
    }
    let total: usize = mesh.elements.iter().map(|e| e.nodes.len() + 1).sum();
    t.push_str(&format!("CELLS {} {}\n", mesh.elements.len(), total));
    for e in &mesh.elements {
        t.push_str(&e.nodes.len().to_string());
        for &n in &e.nodes {
            t.push_str(&format!(" {n}"));
        }
        t.push('\n');
    }
    t.push_str(&format!("CELL_TYPES {}\n", mesh.elements.len()));
    for e in &mesh.elements {
        let code = match e.kind {
            ElementKind::Q4 => 9,
            ElementKind::T3 => 5,
            ElementKind::L2 => 3,
        };
        t.push_str(&format!("{code}\n"));
    }
    t.push_str(&format!("POINT_DATA {}\n", mesh.n_nodes()));
    match field.equation {
        EquationId::Burgers2D => {
            t.push_str("SCALARS u double 1\nLOOKUP_TABLE default\n");
            for i in 0..mesh.n_nodes() {
                t.push_str(&format!("{}\n", fmt(field.node(i)[0])));
            }
        }
        EquationId::Euler2D => {
            let states: Vec<_> = (0..mesh.n_nodes())
                .map(|i| field.state_2d(i, config.gamma, config.r))
                .collect::<Result<_>>()?;
            t.push_str("SCALARS rho double 1\nLOOKUP_TABLE default\n");
            for s in &states {
                t.push_str(&format!("{}\n", fmt(s.rho)));
            }
            t.push_str("SCALARS p double 1\nLOOKUP_TABLE default\n");
            for s in &states {
                t.push_str(&format!("{}\n", fmt(s.p)));
            }
            t.push_str("SCALARS mach double 1\nLOOKUP_TABLE default\n");
            for s in &states {
                let mach = (s.u1 * s.u1 + s.u2 * s.u2).sqrt() / s.sound_speed();
                t.push_str(&format!("{}\n", fmt(mach)));
            }
            t.push_str("VECTORS velocity double\n");
            for s in &states {
                t.push_str(&format!("{} {} 0.0\n", fmt(s.u1), fmt(s.u2)));
            }
        }
        _ => {
            return Err(Error::InvalidArgument(
                "VTK writer needs a 2D equation".into(),
            ))
        }
    }
    write_atomic(path, &t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic::GasState2D;
    use crate::mesh::{build_line_mesh, build_structured_quad_mesh, build_structured_tri_mesh, Rect};
    use crate::solver::StepReport;
    use std::sync::Arc;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn euler_field_csv_row_count_and_roundtrip() {
        let mesh = Arc::new(build_line_mesh(100, -10.0, 10.0).unwrap());
        let config = SolverConfig {
            gamma: 1.4,
            r: 287.0,
            ..Default::default()
        };
        let field = ConservedField::from_fn(mesh, EquationId::Euler1D, |x, _| {
            let (rho, p) = if x < 0.0 { (1.0, 1e5) } else { (0.125, 1e4) };
            vec![rho, 0.0, p / 0.4]
        })
        .unwrap();
        let dir = tmpdir();
        let path = dir.path().join("sod.csv");
        write_field_csv(&field, &config, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 101);
        assert_eq!(lines[0], "x,rho,u,p,mach,e_internal");
        // parse back the density column: identity to the printed digits
        for (k, line) in lines[1..].iter().enumerate() {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            let node = field.node(k);
            assert!((cols[1] - node[0]).abs() <= 1e-15 * node[0].abs());
        }
        // determinism: rewriting produces a byte-identical file
        let path2 = dir.path().join("sod2.csv");
        write_field_csv(&field, &config, &path2).unwrap();
        assert_eq!(text, std::fs::read_to_string(&path2).unwrap());
    }

    #[test]
    fn empty_history_header_only() {
        let dir = tmpdir();
        let path = dir.path().join("hist.csv");
        write_history_csv(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "iteration,residue\n");
        write_history_csv(
            &[StepReport {
                dt: 0.1,
                residue: 0.5,
                linear_iterations: 3,
                wall_time: 0.0,
            }],
            &path,
        )
        .unwrap();
        assert!(std::fs::read_to_string(&path)
            .unwrap()
            .starts_with("iteration,residue\n1,"));
    }

    fn euler2d_field(mesh: Arc<crate::mesh::Mesh>) -> ConservedField {
        ConservedField::from_fn(mesh, EquationId::Euler2D, |x, _| {
            GasState2D::new(1.0 + x, 2.0, 0.0, 1.0, 1.4, 1.0)
                .unwrap()
                .conserved()
                .to_vec()
        })
        .unwrap()
    }

    /// Minimal structural VTK check: section order, counts, cell types.
    fn parse_vtk_structure(text: &str) -> (usize, usize, Vec<usize>) {
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# vtk DataFile"));
        lines.next(); // title
        assert_eq!(lines.next().unwrap(), "ASCII");
        assert_eq!(lines.next().unwrap(), "DATASET UNSTRUCTURED_GRID");
        let points_hdr = lines.next().unwrap();
        let n_points: usize = points_hdr.split_whitespace().nth(1).unwrap().parse().unwrap();
        for _ in 0..n_points {
            let l = lines.next().unwrap();
            assert_eq!(l.split_whitespace().count(), 3);
        }
        let cells_hdr = lines.next().unwrap();
        assert!(cells_hdr.starts_with("CELLS"));
        let n_cells: usize = cells_hdr.split_whitespace().nth(1).unwrap().parse().unwrap();
        for _ in 0..n_cells {
            let l = lines.next().unwrap();
            let k: usize = l.split_whitespace().next().unwrap().parse().unwrap();
            assert_eq!(l.split_whitespace().count(), k + 1);
        }
        let types_hdr = lines.next().unwrap();
        assert!(types_hdr.starts_with("CELL_TYPES"));
        let types: Vec<usize> = (0..n_cells)
            .map(|_| lines.next().unwrap().trim().parse().unwrap())
            .collect();
        let pd = lines.next().unwrap();
        assert!(pd.starts_with("POINT_DATA"));
        (n_points, n_cells, types)
    }

    #[test]
    fn vtk_single_quad() {
        let mesh = Arc::new(build_structured_quad_mesh(1, 1, Rect::unit()).unwrap());
        let field = euler2d_field(mesh);
        let dir = tmpdir();
        let path = dir.path().join("one.vtk");
        write_vtk(&field, &SolverConfig::default(), &path).unwrap();
        let (np, nc, types) = parse_vtk_structure(&std::fs::read_to_string(&path).unwrap());
        assert_eq!(np, 4);
        assert_eq!(nc, 1);
        assert_eq!(types, vec![9]);
    }

    #[test]
    fn vtk_triangles() {
        let mesh = Arc::new(build_structured_tri_mesh(3, 2, Rect::unit()).unwrap());
        let field = euler2d_field(mesh);
        let dir = tmpdir();
        let path = dir.path().join("tri.vtk");
        write_vtk(&field, &SolverConfig::default(), &path).unwrap();
        let (np, nc, types) = parse_vtk_structure(&std::fs::read_to_string(&path).unwrap());
        assert_eq!(np, 12);
        assert_eq!(nc, 12);
        assert!(types.iter().all(|&t| t == 5));
    }
}
