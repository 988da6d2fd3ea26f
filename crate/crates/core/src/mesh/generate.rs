//! Structured tet mesh generators used for fixtures, tests and examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{signed_volume, TetMesh, Vec3};
use crate::error::{Error, Result};

/// Kuhn subdivision of the unit cube into six tets sharing the main
/// diagonal. Corners are encoded as bit masks `x | y<<1 | z<<2`.
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Axis-aligned box `[lo, hi]` split into `n` cells per axis, six tets per cell.
pub fn box_mesh(lo: Vec3, hi: Vec3, n: [usize; 3]) -> Result<TetMesh> {
    box_mesh_masked(lo, hi, n, |_, _, _| true)
}

/// Like [`box_mesh`] but only cells with `keep(i, j, k)` are emitted; unused
/// grid vertices are dropped.
pub fn box_mesh_masked(
    lo: Vec3,
    hi: Vec3,
    n: [usize; 3],
    keep: impl Fn(usize, usize, usize) -> bool,
) -> Result<TetMesh> {
    if n.iter().any(|&k| k == 0) || (0..3).any(|a| !(hi[a] > lo[a])) {
        return Err(Error::InvalidInput(format!(
            "box mesh needs positive extents and cell counts, got {lo:?}..{hi:?} with {n:?}"
        )));
    }
    let [nx, ny, nz] = n;
    let grid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut map = vec![usize::MAX; (nx + 1) * (ny + 1) * (nz + 1)];
    let mut vertices = Vec::new();
    let mut tets = Vec::new();
    let h = (hi - lo).component_div(&Vec3::new(nx as f64, ny as f64, nz as f64));
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if !keep(i, j, k) {
                    continue;
                }
                let mut corner = [0usize; 8];
                for (c, slot) in corner.iter_mut().enumerate() {
                    let (ci, cj, ck) = (i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                    let g = grid(ci, cj, ck);
                    if map[g] == usize::MAX {
                        map[g] = vertices.len();
                        vertices.push(Vec3::new(
                            if ci == nx { hi.x } else { lo.x + ci as f64 * h.x },
                            if cj == ny { hi.y } else { lo.y + cj as f64 * h.y },
                            if ck == nz { hi.z } else { lo.z + ck as f64 * h.z },
                        ));
                    }
                    *slot = map[g];
                }
                for t in KUHN {
                    tets.push(t.map(|c| corner[c]));
                }
            }
        }
    }
    TetMesh::new(vertices, tets)
}

/// Ball of the given radius: a cube grid with `n` cells per side mapped
/// smoothly onto the sphere.
pub fn ball_mesh(radius: f64, n: usize) -> Result<TetMesh> {
    let cube = box_mesh(Vec3::repeat(-1.0), Vec3::repeat(1.0), [n, n, n])?;
    let vertices = cube
        .vertices
        .iter()
        .map(|p| {
            let (x2, y2, z2) = (p.x * p.x, p.y * p.y, p.z * p.z);
            radius
                * Vec3::new(
                    p.x * (1.0 - y2 / 2.0 - z2 / 2.0 + y2 * z2 / 3.0).sqrt(),
                    p.y * (1.0 - z2 / 2.0 - x2 / 2.0 + z2 * x2 / 3.0).sqrt(),
                    p.z * (1.0 - x2 / 2.0 - y2 / 2.0 + x2 * y2 / 3.0).sqrt(),
                )
        })
        .collect();
    TetMesh::new(vertices, cube.tets)
}

/// Deterministically perturb vertex positions by up to `amplitude` times the
/// shortest incident edge. Boundary vertices only move tangentially to all of
/// their incident boundary faces, so flat faces and straight creases are
/// preserved. The amplitude is halved until no tet loses more than 90% of its
/// volume or flips.
pub fn jitter_vertices(mesh: &TetMesh, amplitude: f64, seed: u64) -> Result<TetMesh> {
    let nv = mesh.n_vertices();
    let mut min_edge = vec![f64::INFINITY; nv];
    for tet in &mesh.tets {
        for a in 0..4 {
            for b in a + 1..4 {
                let l = (mesh.vertices[tet[a]] - mesh.vertices[tet[b]]).norm();
                min_edge[tet[a]] = min_edge[tet[a]].min(l);
                min_edge[tet[b]] = min_edge[tet[b]].min(l);
            }
        }
    }
    let mut normals: Vec<Vec<Vec3>> = vec![Vec::new(); nv];
    for (f, tri) in mesh.boundary.triangles.iter().enumerate() {
        let n = mesh.boundary.normals[f];
        for &v in tri {
            if !normals[v].iter().any(|m: &Vec3| m.dot(&n) > 1.0 - 1e-9) {
                normals[v].push(n);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offsets = Vec::with_capacity(nv);
    for v in 0..nv {
        let mut d = loop {
            let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if d.norm_squared() <= 1.0 {
                break d;
            }
        };
        // Orthonormal basis of the constrained directions.
        let mut basis: Vec<Vec3> = Vec::new();
        for n in &normals[v] {
            let mut w = *n;
            for b in &basis {
                w -= b * b.dot(&w);
            }
            if w.norm() > 1e-6 {
                basis.push(w.normalize());
            }
        }
        for b in &basis {
            d -= b * b.dot(&d);
        }
        offsets.push(d * min_edge[v]);
    }
    let mut amp = amplitude;
    for _ in 0..20 {
        let vertices: Vec<Vec3> = mesh.vertices.iter().zip(&offsets).map(|(p, d)| p + d * amp).collect();
        let ok = mesh.tets.iter().zip(&mesh.volumes).all(|(t, &v0)| {
            let v = signed_volume(&vertices[t[0]], &vertices[t[1]], &vertices[t[2]], &vertices[t[3]]);
            v > 0.1 * v0
        });
        if ok {
            return TetMesh::new(vertices, mesh.tets.clone());
        }
        amp *= 0.5;
    }
    Ok(mesh.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let m = box_mesh(Vec3::zeros(), Vec3::new(0.2, 0.04, 0.04), [20, 4, 4]).unwrap();
        assert_eq!(m.n_vertices(), 21 * 5 * 5);
        assert_eq!(m.n_tets(), 6 * 20 * 4 * 4);
        assert!((m.total_volume() - 0.2 * 0.04 * 0.04).abs() < 1e-15);
    }

    #[test]
    fn jitter_preserves_box_shape() {
        let m = box_mesh(Vec3::zeros(), Vec3::new(1.0, 1.0, 2.0), [3, 3, 4]).unwrap();
        let j = jitter_vertices(&m, 0.2, 42).unwrap();
        assert!((j.total_volume() - 2.0).abs() < 1e-12);
        let (lo, hi) = j.bounds();
        assert!((lo - Vec3::zeros()).norm() < 1e-15);
        assert!((hi - Vec3::new(1.0, 1.0, 2.0)).norm() < 1e-12);
        let moved = m.vertices.iter().zip(&j.vertices).filter(|(a, b)| (*a - *b).norm() > 1e-6).count();
        assert!(moved > m.n_vertices() / 2);
        assert_eq!(jitter_vertices(&m, 0.2, 42).unwrap().vertices, j.vertices);
    }

    #[test]
    fn ball_volume_converges() {
        let m = ball_mesh(1.0, 8).unwrap();
        let exact = 4.0 / 3.0 * std::f64::consts::PI;
        assert!((m.total_volume() - exact).abs() < 0.05 * exact);
        assert_eq!(m.boundary.euler_characteristic(), 2);
    }
}
