mod common;

use common::*;
use michell::extract::{Family, Provenance};
use michell::mesh::Vec3;
use michell::post::{simplify, SimplifyConfig};
use nalgebra::Matrix3;

#[test]
fn axis_aligned_affine_cube_yields_integer_grid() {
    let mesh = unit_cube(6, 3);
    let g = extract_affine(&mesh, |x| x * 4.0);
    let want = affine_preimages(&(Matrix3::identity() * 4.0), &Vec3::zeros(), 1e-6);
    assert_eq!(want.len(), 27);
    let index = match_grid(&g, &want, 1e-7).unwrap();
    assert_eq!(grid_adjacency(&g), expected_adjacency(&index));
    assert_eq!(expected_adjacency(&index).len(), 54);
}

#[test]
fn oblique_affine_map_matches_inverse_images() {
    let mesh = unit_cube(6, 5);
    let (a, b) = oblique_map();
    let g = extract_affine(&mesh, |x| a * x + b);
    let want = affine_preimages(&a, &b, 1e-6);
    // No expected point may sit on the fence.
    assert_eq!(want.len(), affine_preimages(&a, &b, 1e-3).len());
    assert!(want.len() > 20);
    let index = match_grid(&g, &want, 1e-7).unwrap();
    assert_eq!(grid_adjacency(&g), expected_adjacency(&index));
}

#[test]
fn simplification_leaves_only_grid_points_inside() {
    let mesh = unit_cube(5, 8);
    let g = extract_affine(&mesh, |x| x * 4.0);
    let (s, report) = simplify(&g, &SimplifyConfig::default()).unwrap();
    assert_eq!(s.component_count(), g.component_count());
    assert!(report.hits_removed > 0);
    let interior: Vec<usize> = (0..s.nodes.len())
        .filter(|&i| !matches!(s.nodes[i].provenance, Provenance::Boundary | Provenance::Feature))
        .collect();
    assert!(interior.iter().all(|&i| s.nodes[i].provenance == Provenance::InteriorGrid));
    let want = affine_preimages(&(Matrix3::identity() * 4.0), &Vec3::zeros(), 1e-6);
    let index = match_grid(&s, &want, 1e-7).unwrap();
    // Grid neighbours are now joined directly.
    let direct: std::collections::BTreeSet<[usize; 2]> = s
        .elements
        .iter()
        .filter(|e| e.nodes.iter().all(|v| s.nodes[*v].provenance == Provenance::InteriorGrid))
        .map(|e| [e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1])])
        .collect();
    assert_eq!(direct, expected_adjacency(&index));
}

#[test]
fn feature_chains_cover_cube_edges() {
    let mesh = unit_cube(4, 2);
    let g = extract_affine(&mesh, |x| x * 3.0 + Vec3::repeat(0.5));
    let feature_len: f64 = (0..g.elements.len()).filter(|&e| g.elements[e].family == Family::Feature).map(|e| g.element_length(e)).sum();
    assert!((feature_len - 12.0).abs() < 1e-9, "{feature_len}");
}

#[test]
fn extraction_is_deterministic() {
    let mesh = unit_cube(5, 4);
    let (a, b) = oblique_map();
    let g1 = serde_json::to_string(&extract_affine(&mesh, |x| a * x + b)).unwrap();
    let g2 = serde_json::to_string(&extract_affine(&mesh, |x| a * x + b)).unwrap();
    assert_eq!(g1, g2);
}
