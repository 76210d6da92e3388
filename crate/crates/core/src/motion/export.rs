use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::motion::{MarkerTrack, Scene};
use crate::Vec3;

/// Shortest round-trip text of `v`, with an exponent for very small or
/// large magnitudes.
pub fn number(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite floats serialize")
    } else {
        v.to_string()
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Schema(format!("marker csv: {e}"))
}

/// Writes `frame,marker,px,py,pz,vx,vy,vz` rows. Marker ids are
/// `<entity>/<marker>`. `header` lines are emitted first as `# ` comments.
pub fn write_marker_csv<W: Write>(scene: &Scene, header: &[String], mut out: W) -> Result<()> {
    let track = scene.marker_track()?;
    let slots = scene.marker_slots();
    for line in header {
        writeln!(out, "# {line}").map_err(|e| Error::io("<marker csv>", e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frame", "marker", "px", "py", "pz", "vx", "vy", "vz"])
        .map_err(csv_err)?;
    for f in 0..track.frame_count() {
        for (m, slot) in slots.iter().enumerate() {
            let p = track.positions[f][m];
            let v = track.velocities[f][m];
            let id = format!("{}/{}", scene.entity_name(slot.entity), slot.name);
            w.write_record([
                f.to_string(),
                id,
                number(p.x),
                number(p.y),
                number(p.z),
                number(v.x),
                number(v.y),
                number(v.z),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<marker csv>", e))?;
    Ok(())
}

/// Reads a marker CSV back into a track plus the marker id order.
pub fn read_marker_csv<R: Read>(input: R) -> Result<(Vec<String>, MarkerTrack)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let mut ids: Vec<String> = Vec::new();
    let mut positions: Vec<Vec<Vec3>> = Vec::new();
    let mut velocities: Vec<Vec<Vec3>> = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            row.get(i)
                .ok_or_else(|| Error::Schema(format!("marker csv: missing column {i}")))?
                .parse::<f64>()
                .map_err(|e| Error::Schema(format!("marker csv: {e}")))
        };
        let frame = num(0)? as usize;
        let id = row.get(1).unwrap_or_default().to_string();
        if frame == positions.len() {
            positions.push(Vec::new());
            velocities.push(Vec::new());
        } else if frame + 1 != positions.len() {
            return Err(Error::Schema(format!("marker csv: frame {frame} out of order")));
        }
        if frame == 0 {
            ids.push(id);
        }
        positions[frame].push(Vec3::new(num(2)?, num(3)?, num(4)?));
        velocities[frame].push(Vec3::new(num(5)?, num(6)?, num(7)?));
    }
    Ok((
        ids,
        MarkerTrack {
            positions,
            velocities,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let scene = crate::synthetic::box_carry_scene();
        let mut buf = Vec::new();
        write_marker_csv(&scene, &["seed=0".into()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed=0\nframe,marker,px"));
        let (ids, track) = read_marker_csv(text.as_bytes()).unwrap();
        assert_eq!(ids.len(), 38);
        assert_eq!(track, scene.marker_track().unwrap());
    }
}
