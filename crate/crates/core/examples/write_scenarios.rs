//! Regenerates the sample scenario directory.
//!
//! cargo run -p ufcsr --example write_scenarios -- scenarios

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use ufcsr::fixtures;

const TEXELS_PER_METER: f64 = 160.0;

struct Approach {
    id: &'static str,
    /// Rotation about the head applied to the westbound template.
    turn: f64,
    /// Height of the start of the path above the stop point.
    rise: f64,
    buildings: bool,
}

fn rotate(p: [f64; 3], a: f64) -> [f64; 3] {
    let (s, c) = a.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

fn scenario_toml(a: &Approach) -> String {
    // vehicle heading north turns right onto an eastbound lane south of the
    // head, cruises and stops short of the crossing
    let path = [
        (0.0, [-25.5, -11.5, a.rise], 90.0, "turn"),
        (1.3, [-18.0, -4.0, a.rise * 0.6], 0.0, "cruise"),
        (2.3, [-8.94, -4.0, a.rise * 0.15], 0.0, "decelerate"),
        (3.0, [-5.8, -4.0, 0.0], 0.0, "decelerate"),
    ];
    let mut s = String::new();
    writeln!(s, "id = \"{}\"\nrate = 60.0\nduration = 3.0\n", a.id).unwrap();
    writeln!(s, "[subject]\nmesh = \"vehicle/vehicle.obj\"\nparts = \"vehicle/parts.toml\"\nlook_offset = [0.0, 0.0, 0.9]\n").unwrap();
    for (t, p, yaw, seg) in path {
        let q = rotate(p, a.turn);
        writeln!(
            s,
            "[[subject.keyframes]]\ntime = {t:?}\nposition = [{:.4}, {:.4}, {:.4}]\nyaw_deg = {:?}\nsegment = \"{seg}\"\n",
            q[0],
            q[1],
            q[2],
            yaw + a.turn.to_degrees()
        )
        .unwrap();
    }
    if a.buildings {
        // corner block hiding the start of the turn
        let (c, size) = ([-14.5, -13.25, 4.0], [13.0, 13.5, 8.0]);
        let q = rotate(c, a.turn);
        let (sx, sy) = if (a.turn / FRAC_PI_2).round() as i64 % 2 == 0 {
            (size[0], size[1])
        } else {
            (size[1], size[0])
        };
        writeln!(
            s,
            "[[occluder]]\nkind = \"box\"\ncenter = [{:.4}, {:.4}, {:.4}]\nsize = [{sx:?}, {sy:?}, {:?}]\n",
            q[0], q[1], q[2], size[2]
        )
        .unwrap();
    }
    writeln!(s, "[rig]\nhead = [0.0, 0.0]").unwrap();
    s
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "scenarios".into()),
    );
    let vehicle_dir = root.join("vehicle");
    fs::create_dir_all(&vehicle_dir)?;
    fixtures::write_obj(
        &fixtures::vehicle(TEXELS_PER_METER)?,
        &vehicle_dir.join("vehicle.obj"),
    )?;
    fs::write(vehicle_dir.join("parts.toml"), fixtures::VEHICLE_PART_MAP)?;

    let approaches = [
        Approach {
            id: "A",
            turn: 0.0,
            rise: 0.0,
            buildings: true,
        },
        Approach {
            id: "B",
            turn: std::f64::consts::PI,
            rise: 0.4,
            buildings: false,
        },
        Approach {
            id: "C",
            turn: -FRAC_PI_2,
            rise: 0.0,
            buildings: false,
        },
        Approach {
            id: "D",
            turn: FRAC_PI_2,
            rise: 0.0,
            buildings: true,
        },
    ];
    for a in &approaches {
        fs::write(root.join(format!("{}.toml", a.id)), scenario_toml(a))?;
    }
    fixtures::write_cube_scenario(&root.join("cube"), 181)?;
    println!("wrote {}", root.display());
    Ok(())
}
