//! Frame-element check of a cantilever and a pin-jointed two-bar truss
//! against closed-form answers.

use michell::extract::{Element, Family, Node, Provenance, TrussGraph};
use michell::fem::Material;
use michell::mesh::Vec3;
use michell::post::RadiusPolicy;
use michell::verify::{frame_fem, verify, NodeLoad, Support, TrussModel};

fn graph(points: &[[f64; 3]], edges: &[[usize; 2]]) -> TrussGraph {
    TrussGraph {
        nodes: points
            .iter()
            .enumerate()
            .map(|(i, p)| Node { position: Vec3::from(*p), params: Vec3::repeat(i as f64), provenance: Provenance::InteriorGrid })
            .collect(),
        elements: edges.iter().map(|&nodes| Element { nodes, family: Family::Iso1, tet: None }).collect(),
    }
}

fn main() -> michell::Result<()> {
    let mat = Material::default();
    let (len, r, f) = (0.5, 0.004, 3.0);
    let mut cant = TrussModel::new(graph(&[[0.0; 3], [len, 0.0, 0.0]], &[[0, 1]]), &RadiusPolicy::uniform(r), mat);
    cant.supports.push(Support { node: 0, fixed: [true; 6], value: [0.0; 6] });
    cant.loads.push(NodeLoad { node: 1, force: Vec3::new(0.0, -f, 0.0), moment: Vec3::zeros() });
    let sol = frame_fem(&cant)?;
    let exact = f * len.powi(3) / (3.0 * mat.young_modulus * cant.inertia(0));
    println!("cantilever tip deflection {:.6e} m, closed form {exact:.6e} m", -sol.displacement[1].y);

    let mut two = TrussModel::new(graph(&[[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], &[[0, 2], [1, 2]]), &RadiusPolicy::uniform(0.005), mat);
    two.pinned = vec![true; 2];
    let pin = |node| Support { node, fixed: [true, true, true, false, false, false], value: [0.0; 6] };
    two.supports = vec![pin(0), pin(1), Support { node: 2, fixed: [false, false, true, false, false, false], value: [0.0; 6] }];
    two.loads.push(NodeLoad { node: 2, force: Vec3::new(0.0, -1.0, 0.0), moment: Vec3::zeros() });
    let (sol, report) = verify(&two)?;
    println!("two-bar axial forces {:.9} / {:.9} N (P/sqrt 2 = {:.9})", sol.elements[0].axial_force, sol.elements[1].axial_force, 0.5f64.sqrt());
    println!("first yield at {:.3} N on element {}", report.load_factor, report.critical_element);
    Ok(())
}
