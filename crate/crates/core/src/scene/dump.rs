use super::{Scene, Shape};

fn mm(v: f64) -> String {
    // Adding zero folds -0.0 into 0.0.
    format!("{:.6}", v * 1e3 + 0.0)
}

fn span(v: [f64; 2]) -> String {
    format!("[{},{}]", mm(v[0]), mm(v[1]))
}

/// Canonical, order-independent text dump of a scene (lengths in mm).
pub fn canonical_dump(scene: &Scene) -> String {
    let mut out = String::from("# yeefield scene v1\n");
    let (lo, hi) = scene.bounds;
    out.push_str(&format!(
        "bounds x={} y={} z={}\n",
        span([lo[0], hi[0]]),
        span([lo[1], hi[1]]),
        span([lo[2], hi[2]])
    ));
    let faces: Vec<String> = scene.boundaries.iter().map(|b| format!("{b:?}").to_lowercase()).collect();
    out.push_str(&format!("boundaries {}\n", faces.join(",")));
    out.push_str(&format!(
        "footprint x={} y={}\n",
        span([scene.footprint.0[0], scene.footprint.1[0]]),
        span([scene.footprint.0[1], scene.footprint.1[1]])
    ));
    out.push_str(&format!("f0_hz {:.6e}\n", scene.f0));
    let mut mats: Vec<String> = scene
        .materials
        .iter()
        .map(|m| format!("material {} kind={:?} eps_r={:.6} tan_delta={:.6}", m.name, m.kind, m.eps_r, m.tan_delta))
        .collect();
    mats.sort();
    for m in mats {
        out.push_str(&m);
        out.push('\n');
    }
    let mut lines: Vec<String> = scene
        .primitives
        .iter()
        .map(|p| {
            let mat = &scene.materials[p.material].name;
            let geom = match p.shape {
                Shape::Box { min, max } => format!(
                    "box x={} y={} z={}",
                    span([min[0], max[0]]),
                    span([min[1], max[1]]),
                    span([min[2], max[2]])
                ),
                Shape::Cylinder { center, radius, z0, z1 } => format!(
                    "cylinder c=({},{}) r={} z={}",
                    mm(center[0]),
                    mm(center[1]),
                    mm(radius),
                    span([z0, z1])
                ),
                Shape::Plate { x, y, z } => format!("plate x={} y={} z={}", span(x), span(y), mm(z)),
            };
            format!("prim {:>3} {:<11} {:<12} {}", p.priority, p.tag.as_str(), mat, geom)
        })
        .collect();
    lines.sort();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    let mut ports = scene.ports.clone();
    ports.sort_by_key(|p| p.index);
    for p in ports {
        out.push_str(&format!(
            "port {} pol={:?} at=({},{}) z={} z0={:.3}\n",
            p.index,
            p.polarization,
            mm(p.position[0]),
            mm(p.position[1]),
            span(p.z),
            p.impedance
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{build_array_2x2, build_single_element, ElementParams};

    #[test]
    fn dump_is_deterministic_and_order_independent() {
        let p = ElementParams::default();
        let a = build_array_2x2(&p, true).unwrap();
        let mut b = build_array_2x2(&p, true).unwrap();
        assert_eq!(canonical_dump(&a), canonical_dump(&b));
        b.primitives.reverse();
        assert_eq!(canonical_dump(&a), canonical_dump(&b));
    }

    #[test]
    fn dump_lists_ports_and_vias() {
        let s = build_single_element(&ElementParams::default(), true).unwrap();
        let d = canonical_dump(&s);
        assert_eq!(d.lines().filter(|l| l.starts_with("port ")).count(), 2);
        assert_eq!(d.lines().filter(|l| l.contains("cylinder")).count(), 4);
    }
}
