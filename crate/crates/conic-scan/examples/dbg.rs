use conic_scan::classify::{detect_frame, PipelineConfig};
use conic_scan::geometry::CameraIntrinsics;
use conic_scan::synth::{render, SceneObject, SceneSpec, Shape};

fn obj(name: &str, shape: Shape) -> SceneObject {
    SceneObject {
        name: name.into(),
        shape,
        velocity: [0.0; 3],
    }
}

fn main() {
    let intr = CameraIntrinsics::default_for(320, 240);

    // Three objects resting on a floor 0.8 m below the camera.
    let three = SceneSpec {
        seed: 1,
        noise_sigma: 0.005,
        objects: vec![
            obj(
                "trash_can",
                Shape::Cylinder {
                    center: [-0.55, 0.5, 1.6],
                    axis: [0.0, 1.0, 0.0],
                    radius: 0.18,
                    half_length: 0.3,
                },
            ),
            obj(
                "parking_cone",
                Shape::Cone {
                    apex: [0.55, 0.25, 1.6],
                    axis: [0.0, 1.0, 0.0],
                    half_angle_deg: 16.0,
                    length: 0.55,
                    truncate: 0.1,
                },
            ),
            obj(
                "ball",
                Shape::Sphere {
                    center: [0.0, 0.44, 2.2],
                    radius: 0.36,
                },
            ),
            obj(
                "floor",
                Shape::Plane {
                    point: [0.0, 0.8, 0.0],
                    normal: [0.0, -1.0, 0.0],
                    half_extents: None,
                },
            ),
        ],
        ..SceneSpec::empty()
    };
    let mut cfg = PipelineConfig::default();
    cfg.segmenter.noise_sigma = 0.005;
    cfg.segmenter.error_threshold = 0.015;
    let frame = render(&three, intr, 0.0);
    println!("three-object frame valid px: {}", frame.valid_count());
    let prims = detect_frame(&frame, &cfg);
    println!("three-object scene -> {} primitives", prims.len());
    for p in &prims {
        println!(
            "  {:?} pos {:.3?} radius {:.4} support {} residual {:.4}",
            p.kind(),
            p.position(),
            p.radius(),
            p.support,
            p.residual
        );
    }

    // Sphere resting on a cylinder pedestal.
    let stacked = SceneSpec {
        seed: 2,
        noise_sigma: 0.005,
        objects: vec![
            obj(
                "pedestal",
                Shape::Cylinder {
                    center: [0.0, 0.55, 2.0],
                    axis: [0.0, 1.0, 0.0],
                    radius: 0.15,
                    half_length: 0.35,
                },
            ),
            obj(
                "ball",
                Shape::Sphere {
                    center: [0.0, 0.0, 2.0],
                    radius: 0.2,
                },
            ),
        ],
        ..SceneSpec::empty()
    };
    let frame = render(&stacked, intr, 0.0);
    let prims = detect_frame(&frame, &cfg);
    println!("sphere-on-cylinder -> {} primitives", prims.len());
    for p in &prims {
        println!(
            "  {:?} pos {:.3?} radius {:.4} support {} residual {:.4}",
            p.kind(),
            p.position(),
            p.radius(),
            p.support,
            p.residual
        );
    }
}
