//! MEDIT `.mesh` and TetGen `.node`/`.ele` readers and writers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{TetMesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshFormat {
    MeditMesh,
    TetgenPair,
}

impl MeshFormat {
    /// Guess the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "mesh" => Some(MeshFormat::MeditMesh),
            "node" | "ele" => Some(MeshFormat::TetgenPair),
            _ => None,
        }
    }
}

/// Load a tet mesh. For TetGen pairs `path` may name the `.node` file, the
/// `.ele` file, or the shared basename.
pub fn load_tet_mesh(path: &Path, format: MeshFormat) -> Result<TetMesh> {
    let (vertices, tets) = match format {
        MeshFormat::MeditMesh => {
            let text = std::fs::read_to_string(path)?;
            parse_medit(&text, &path.display().to_string())?
        }
        MeshFormat::TetgenPair => {
            let (node, ele) = tetgen_paths(path);
            let node_text = std::fs::read_to_string(&node)?;
            let ele_text = std::fs::read_to_string(&ele)?;
            parse_tetgen(
                &node_text,
                &ele_text,
                &node.display().to_string(),
                &ele.display().to_string(),
            )?
        }
    };
    TetMesh::new(vertices, tets)
}

pub fn tetgen_paths(path: &Path) -> (PathBuf, PathBuf) {
    let base = match path.extension().and_then(|e| e.to_str()) {
        Some("node") | Some("ele") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let mut node = base.clone().into_os_string();
    node.push(".node");
    let mut ele = base.into_os_string();
    ele.push(".ele");
    (node.into(), ele.into())
}

/// Whitespace token stream that tracks line numbers and drops `#` comments.
struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    path: &'a str,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str, path: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| {
                let line = line.split('#').next().unwrap_or("");
                line.split_whitespace().map(move |tok| (i + 1, tok))
            })
            .collect();
        Self { items, pos: 0, path }
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or_else(|| self.items.last())
            .map_or(0, |t| t.0)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line: self.line(),
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Option<&'a str> {
        let t = self.items.get(self.pos).map(|t| t.1);
        self.pos += 1;
        t
    }

    fn expect_next(&mut self, what: &str) -> Result<&'a str> {
        match self.items.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.1)
            }
            None => Err(self.err(format!("unexpected end of file, expected {what}"))),
        }
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let tok = self.expect_next(what)?;
        tok.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected {what}, found {tok:?}"))
        })
    }

    fn i64(&mut self, what: &str) -> Result<i64> {
        let tok = self.expect_next(what)?;
        tok.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected {what}, found {tok:?}"))
        })
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let tok = self.expect_next(what)?;
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos -= 1;
                Err(self.err(format!("expected {what}, found {tok:?}")))
            }
        }
    }
}

/// Number of integer/real fields per entry for MEDIT sections we skip.
fn medit_skip_width(keyword: &str) -> Option<usize> {
    Some(match keyword {
        "Edges" => 3,
        "Triangles" => 4,
        "Quadrilaterals" => 5,
        "Hexahedra" => 9,
        "Corners" | "RequiredVertices" | "Ridges" | "RequiredEdges" | "RequiredTriangles" => 1,
        "Normals" | "Tangents" => 3,
        "NormalAtVertices" => 2,
        "TangentAtVertices" => 2,
        _ => return None,
    })
}

/// Parse MEDIT text. Only `Vertices` and `Tetrahedra` are used; the boundary
/// is always recomputed from the tets.
pub fn parse_medit(text: &str, path: &str) -> Result<(Vec<Vec3>, Vec<[usize; 4]>)> {
    let mut tok = Tokens::new(text, path);
    let mut vertices = Vec::new();
    let mut tets = Vec::new();
    while let Some(kw) = tok.next() {
        match kw {
            "MeshVersionFormatted" => {
                tok.usize("format version")?;
            }
            "Dimension" => {
                let dim = tok.usize("dimension")?;
                if dim != 3 {
                    return Err(tok.err(format!("only 3D meshes are supported, got dimension {dim}")));
                }
            }
            "Vertices" => {
                let n = tok.usize("vertex count")?;
                vertices.reserve(n);
                for _ in 0..n {
                    let x = tok.f64("x coordinate")?;
                    let y = tok.f64("y coordinate")?;
                    let z = tok.f64("z coordinate")?;
                    tok.i64("vertex reference")?;
                    vertices.push(Vec3::new(x, y, z));
                }
            }
            "Tetrahedra" => {
                let n = tok.usize("tetrahedron count")?;
                tets.reserve(n);
                for _ in 0..n {
                    let mut t = [0usize; 4];
                    for slot in &mut t {
                        let i = tok.usize("vertex index")?;
                        if i == 0 {
                            tok.pos -= 1;
                            return Err(tok.err("MEDIT indices are 1-based, found 0"));
                        }
                        *slot = i - 1;
                    }
                    tok.i64("tetrahedron reference")?;
                    tets.push(t);
                }
            }
            "End" => break,
            other => match medit_skip_width(other) {
                Some(w) => {
                    let n = tok.usize("entry count")?;
                    for _ in 0..n * w {
                        tok.f64("field")?;
                    }
                }
                None => {
                    tok.pos -= 1;
                    return Err(tok.err(format!("unknown MEDIT keyword {other:?}")));
                }
            },
        }
    }
    if vertices.is_empty() {
        return Err(tok.err("no Vertices section"));
    }
    if tets.is_empty() {
        return Err(tok.err("no Tetrahedra section"));
    }
    Ok((vertices, tets))
}

/// Parse a TetGen `.node`/`.ele` pair. The index base (0 or 1) is taken from
/// the first point index in the `.node` file and applied to both files.
pub fn parse_tetgen(
    node: &str,
    ele: &str,
    node_path: &str,
    ele_path: &str,
) -> Result<(Vec<Vec3>, Vec<[usize; 4]>)> {
    let mut tok = Tokens::new(node, node_path);
    let n = tok.usize("point count")?;
    let dim = tok.usize("dimension")?;
    if dim != 3 {
        return Err(tok.err(format!("expected dimension 3, got {dim}")));
    }
    let n_attr = tok.usize("attribute count")?;
    let n_marker = tok.usize("boundary marker flag")?;
    if n_marker > 1 {
        return Err(tok.err("boundary marker flag must be 0 or 1"));
    }
    let mut base = None;
    let mut vertices = Vec::with_capacity(n);
    for k in 0..n {
        let idx = tok.usize("point index")?;
        let b = *base.get_or_insert(idx);
        if b > 1 {
            tok.pos -= 1;
            return Err(tok.err(format!("first point index must be 0 or 1, got {b}")));
        }
        if idx != k + b {
            tok.pos -= 1;
            return Err(tok.err(format!("expected point index {}, got {idx}", k + b)));
        }
        let x = tok.f64("x coordinate")?;
        let y = tok.f64("y coordinate")?;
        let z = tok.f64("z coordinate")?;
        for _ in 0..n_attr + n_marker {
            tok.f64("point attribute")?;
        }
        vertices.push(Vec3::new(x, y, z));
    }
    let base = base.unwrap_or(0);

    let mut tok = Tokens::new(ele, ele_path);
    let m = tok.usize("tetrahedron count")?;
    let per = tok.usize("nodes per tetrahedron")?;
    if per != 4 && per != 10 {
        return Err(tok.err(format!("nodes per tetrahedron must be 4 or 10, got {per}")));
    }
    let n_attr = tok.usize("region attribute flag")?;
    let mut tets = Vec::with_capacity(m);
    for k in 0..m {
        let idx = tok.usize("tetrahedron index")?;
        if idx != k + base {
            tok.pos -= 1;
            return Err(tok.err(format!("expected tetrahedron index {}, got {idx}", k + base)));
        }
        let mut t = [0usize; 4];
        for (j, slot) in t.iter_mut().enumerate() {
            let i = tok.usize("vertex index")?;
            if i < base {
                tok.pos -= 1;
                return Err(tok.err(format!("vertex index {i} below base {base}")));
            }
            if j < 4 {
                *slot = i - base;
            }
        }
        for _ in 4..per {
            tok.usize("higher-order node")?;
        }
        for _ in 0..n_attr {
            tok.f64("region attribute")?;
        }
        tets.push(t);
    }
    if tets.is_empty() {
        return Err(tok.err("no tetrahedra"));
    }
    Ok((vertices, tets))
}

pub fn medit_string(mesh: &TetMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "MeshVersionFormatted 2\nDimension 3\n\nVertices\n{}", mesh.n_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e} 0", v.x, v.y, v.z);
    }
    let _ = writeln!(s, "\nTetrahedra\n{}", mesh.n_tets());
    for t in &mesh.tets {
        let _ = writeln!(s, "{} {} {} {} 0", t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1);
    }
    let b = &mesh.boundary;
    let _ = writeln!(s, "\nTriangles\n{}", b.n_triangles());
    for t in &b.triangles {
        let _ = writeln!(s, "{} {} {} 0", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s.push_str("\nEnd\n");
    s
}

pub fn write_medit(mesh: &TetMesh, path: &Path) -> Result<()> {
    std::fs::write(path, medit_string(mesh))?;
    Ok(())
}

/// Write `<base>.node` and `<base>.ele` with 0-based indices.
pub fn write_tetgen(mesh: &TetMesh, base: &Path) -> Result<()> {
    let (node_path, ele_path) = tetgen_paths(base);
    let mut node = format!("{} 3 0 0\n", mesh.n_vertices());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(node, "{i} {:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
    }
    let mut ele = format!("{} 4 0\n", mesh.n_tets());
    for (i, t) in mesh.tets.iter().enumerate() {
        let _ = writeln!(ele, "{i} {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    std::fs::write(node_path, node)?;
    std::fs::write(ele_path, ele)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = "MeshVersionFormatted 1
Dimension 3
# reference simplex
Vertices
4
0 0 0 0
1 0 0 0
0 1 0 0
0 0 1 0
Triangles
1
1 2 3 0
Tetrahedra
1
1 2 3 4 0
End
";

    #[test]
    fn medit_single_tet() {
        let (v, t) = parse_medit(SINGLE, "single.mesh").unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(t, vec![[0, 1, 2, 3]]);
        let m = TetMesh::new(v, t).unwrap();
        assert!((m.volumes[0] - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(m.boundary.n_triangles(), 4);
    }

    #[test]
    fn medit_errors_carry_line_numbers() {
        let bad = SINGLE.replace("0 1 0 0\n", "0 one 0 0\n");
        match parse_medit(&bad, "bad.mesh").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 8),
            e => panic!("unexpected {e}"),
        }
        assert!(parse_medit("Vertices\n1\n0 0 0 0\nBogus 3\n", "x").is_err());
        assert!(parse_medit("Vertices\n1\n0 0 0 0\n", "x").is_err());
    }

    #[test]
    fn tetgen_zero_and_one_based_agree() {
        let node0 = "4 3 0 0\n0 0 0 0\n1 1 0 0\n2 0 1 0\n3 0 0 1\n";
        let ele0 = "1 4 0\n0 0 1 2 3\n";
        let node1 = "# one-based\n4 3 0 1\n1 0 0 0 5\n2 1 0 0 5\n3 0 1 0 5\n4 0 0 1 5\n";
        let ele1 = "1 4 1\n1 1 2 3 4 7\n";
        let a = parse_tetgen(node0, ele0, "a.node", "a.ele").unwrap();
        let b = parse_tetgen(node1, ele1, "b.node", "b.ele").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1, vec![[0, 1, 2, 3]]);
    }

    #[test]
    fn roundtrip_files() {
        let mesh = crate::mesh::generate::box_mesh(Vec3::zeros(), Vec3::new(1.0, 2.0, 3.0), [2, 2, 2])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("box.mesh");
        write_medit(&mesh, &p).unwrap();
        let back = load_tet_mesh(&p, MeshFormat::MeditMesh).unwrap();
        assert_eq!(back.tets, mesh.tets);
        assert_eq!(back.vertices, mesh.vertices);

        let base = dir.path().join("box");
        write_tetgen(&mesh, &base).unwrap();
        let back = load_tet_mesh(&dir.path().join("box.ele"), MeshFormat::TetgenPair).unwrap();
        assert_eq!(back.tets, mesh.tets);
        assert_eq!(back.vertices, mesh.vertices);
        assert_eq!(MeshFormat::from_path(&p), Some(MeshFormat::MeditMesh));
    }
}
