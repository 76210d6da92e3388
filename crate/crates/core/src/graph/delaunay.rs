//! Incremental Bowyer-Watson tetrahedralization.
//!
//! Degeneracies (cospherical or coplanar marker subsets are common in mocap)
//! are broken by a deterministic per-index perturbation of at most
//! [`PERTURBATION_SCALE`] meters per axis. All predicates run on the perturbed
//! coordinates, so callers that want to check the output must use
//! [`perturb`] as well.
//!
//! The bounding super-tetrahedron is symbolic: a single vertex at infinity,
//! with "ghost" tetrahedra over every hull face. A ghost is in conflict with a
//! new point when the point lies strictly beyond its hull face.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::Vec3;

pub const PERTURBATION_SCALE: f64 = 1e-10;
const PERTURBATION_SEED: u64 = 0x5eed_1e55_d00d_f00d;
/// Minimum `|orient3d| / extent³` for the initial simplex.
const MIN_RELATIVE_VOLUME: f64 = 1e-9;

const GHOST: usize = usize::MAX;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Offset applied to point `index`; depends only on the index.
pub fn perturbation(index: usize) -> Vec3 {
    let component = |axis: u64| {
        let h = splitmix64(PERTURBATION_SEED ^ splitmix64(index as u64 * 3 + axis));
        // Top 53 bits to [-1, 1).
        ((h >> 11) as f64 / (1u64 << 52) as f64) - 1.0
    };
    Vec3::new(component(0), component(1), component(2)) * PERTURBATION_SCALE
}

pub fn perturb(points: &[Vec3]) -> Vec<Vec3> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| p + perturbation(i))
        .collect()
}

/// Six times the signed volume of `(a, b, c, d)`; positive when `d` lies on
/// the side of `(b - a) × (c - a)`.
pub fn orient3d(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a))
}

fn det3(r0: [f64; 3], r1: [f64; 3], r2: [f64; 3]) -> f64 {
    r0[0] * (r1[1] * r2[2] - r1[2] * r2[1]) - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
        + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0])
}

/// Positive when `e` is strictly inside the circumsphere of `(a, b, c, d)`,
/// negative outside, independent of the tetrahedron's orientation.
pub fn insphere(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3, e: &Vec3) -> f64 {
    let rows: [[f64; 4]; 4] = [a, b, c, d].map(|p| {
        let q = p - e;
        [q.x, q.y, q.z, q.norm_squared()]
    });
    // Cofactor expansion along the lifted column.
    let minor = |skip: usize| {
        let mut r = [[0.0; 3]; 3];
        let mut k = 0;
        for (i, row) in rows.iter().enumerate() {
            if i != skip {
                r[k] = [row[0], row[1], row[2]];
                k += 1;
            }
        }
        det3(r[0], r[1], r[2])
    };
    let lifted = -rows[0][3] * minor(0) + rows[1][3] * minor(1) - rows[2][3] * minor(2)
        + rows[3][3] * minor(3);
    let orientation = orient3d(a, b, c, d);
    -lifted * orientation.signum()
}

/// `p` strictly inside the circumcircle of the (coplanar) triangle `abc`.
fn in_circumcircle(a: &Vec3, b: &Vec3, c: &Vec3, p: &Vec3) -> bool {
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(&ac);
    let denom = 2.0 * n.norm_squared();
    if denom == 0.0 {
        return false;
    }
    let center = a + (n.cross(&ab) * ac.norm_squared() + ac.cross(&n) * ab.norm_squared()) / denom;
    (p - center).norm_squared() < (a - center).norm_squared()
}

struct Triangulation<'a> {
    points: &'a [Vec3],
    /// Real tetrahedra are positively oriented; ghosts store `GHOST` last and
    /// a hull face oriented so the interior is on its positive side.
    tets: Vec<[usize; 4]>,
}

impl Triangulation<'_> {
    fn conflicts(&self, tet: &[usize; 4], p: &Vec3) -> bool {
        let pt = |i: usize| &self.points[i];
        if tet[3] == GHOST {
            let o = orient3d(pt(tet[0]), pt(tet[1]), pt(tet[2]), p);
            o < 0.0 || (o == 0.0 && in_circumcircle(pt(tet[0]), pt(tet[1]), pt(tet[2]), p))
        } else {
            insphere(pt(tet[0]), pt(tet[1]), pt(tet[2]), pt(tet[3]), p) > 0.0
        }
    }

    fn insert(&mut self, index: usize, interior: &Vec3) {
        let p = self.points[index];
        let mut kept = Vec::with_capacity(self.tets.len() + 8);
        let mut cavity = Vec::new();
        for tet in self.tets.drain(..) {
            if Self::conflicts_with(self.points, &tet, &p) {
                cavity.push(tet);
            } else {
                kept.push(tet);
            }
        }
        self.tets = kept;

        let mut faces: HashMap<[usize; 3], (usize, [usize; 3])> = HashMap::new();
        for tet in &cavity {
            for skip in 0..4 {
                let face: [usize; 3] = match skip {
                    0 => [tet[1], tet[2], tet[3]],
                    1 => [tet[0], tet[2], tet[3]],
                    2 => [tet[0], tet[1], tet[3]],
                    _ => [tet[0], tet[1], tet[2]],
                };
                let mut key = face;
                key.sort_unstable();
                faces.entry(key).or_insert((0, face)).0 += 1;
            }
        }
        let mut boundary: Vec<[usize; 3]> = faces
            .into_iter()
            .filter(|(_, (count, _))| *count == 1)
            .map(|(key, _)| key)
            .collect();
        boundary.sort_unstable();

        for face in boundary {
            if face[2] == GHOST {
                let (u, v) = (face[0], face[1]);
                let mut t = [u, v, index, GHOST];
                if orient3d(&self.points[u], &self.points[v], &p, interior) < 0.0 {
                    t.swap(0, 1);
                }
                self.tets.push(t);
            } else {
                let mut t = [face[0], face[1], face[2], index];
                let pt = |i: usize| &self.points[i];
                if orient3d(pt(t[0]), pt(t[1]), pt(t[2]), pt(t[3])) < 0.0 {
                    t.swap(0, 1);
                }
                self.tets.push(t);
            }
        }
    }

    fn conflicts_with(points: &[Vec3], tet: &[usize; 4], p: &Vec3) -> bool {
        Triangulation { points, tets: Vec::new() }.conflicts(tet, p)
    }
}

/// Picks four affinely independent points, or reports a degenerate cloud.
fn initial_simplex(points: &[Vec3]) -> Result<[usize; 4]> {
    let i0 = 0;
    let far = |from: &dyn Fn(&Vec3) -> f64| {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, from(p)))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
    };
    let (i1, d1) = far(&|p| (p - points[i0]).norm());
    if !(d1 > 0.0) {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let a = points[i0];
    let b = points[i1];
    let (i2, area) = far(&|p| (b - a).cross(&(p - a)).norm());
    if !(area > 0.0) {
        return Err(Error::Degenerate("all points are collinear".into()));
    }
    let c = points[i2];
    let (i3, vol) = far(&|p| orient3d(&a, &b, &c, p).abs());
    if !(vol / d1.powi(3) > MIN_RELATIVE_VOLUME) {
        return Err(Error::Degenerate(
            "all points are coplanar even after perturbation".into(),
        ));
    }
    Ok([i0, i1, i2, i3])
}

/// Delaunay tetrahedralization of `points` (perturbed internally).
///
/// Returns tetrahedra as index 4-tuples into `points`, positively oriented
/// in perturbed coordinates, sorted.
pub fn tetrahedralize(points: &[Vec3]) -> Result<Vec<[usize; 4]>> {
    if points.len() < 4 {
        return Err(Error::Degenerate(format!(
            "tetrahedralization needs at least 4 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::Numerical("non-finite point in tetrahedralization input".into()));
    }
    let perturbed = perturb(points);
    let seed = initial_simplex(&perturbed)?;
    let interior = seed.iter().map(|&i| perturbed[i]).sum::<Vec3>() / 4.0;

    let pt = |i: usize| &perturbed[i];
    let mut first = seed;
    if orient3d(pt(first[0]), pt(first[1]), pt(first[2]), pt(first[3])) < 0.0 {
        first.swap(0, 1);
    }
    let mut tets = vec![first];
    for skip in 0..4 {
        let mut face: Vec<usize> = (0..4).filter(|&k| k != skip).map(|k| first[k]).collect();
        if orient3d(pt(face[0]), pt(face[1]), pt(face[2]), &interior) < 0.0 {
            face.swap(0, 1);
        }
        tets.push([face[0], face[1], face[2], GHOST]);
    }

    let mut tri = Triangulation {
        points: &perturbed,
        tets,
    };
    for i in 0..points.len() {
        if !seed.contains(&i) {
            tri.insert(i, &interior);
        }
    }
    let mut out: Vec<[usize; 4]> = tri.tets.into_iter().filter(|t| t[3] != GHOST).collect();
    out.sort_unstable();
    Ok(out)
}

/// Distinct undirected edges `(i, j)`, `i < j`, of a set of tetrahedra, sorted.
pub fn tetrahedra_edges(tets: &[[usize; 4]]) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = tets
        .iter()
        .flat_map(|t| {
            let mut e = Vec::with_capacity(6);
            for a in 0..4 {
                for b in a + 1..4 {
                    e.push((t[a].min(t[b]), t[a].max(t[b])));
                }
            }
            e
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n^5) oracle: every non-degenerate 4-subset whose circumsphere is
    /// empty of the other perturbed points.
    fn brute_force(points: &[Vec3]) -> Vec<[usize; 4]> {
        let p = perturb(points);
        let n = p.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        if orient3d(&p[a], &p[b], &p[c], &p[d]).abs() < 1e-14 {
                            continue;
                        }
                        let empty = (0..n)
                            .filter(|&e| e != a && e != b && e != c && e != d)
                            .all(|e| insphere(&p[a], &p[b], &p[c], &p[d], &p[e]) <= 0.0);
                        if empty {
                            out.push([a, b, c, d]);
                        }
                    }
                }
            }
        }
        out
    }

    fn sorted(tets: &[[usize; 4]]) -> Vec<[usize; 4]> {
        let mut v: Vec<[usize; 4]> = tets
            .iter()
            .map(|t| {
                let mut t = *t;
                t.sort_unstable();
                t
            })
            .collect();
        v.sort_unstable();
        v
    }

    fn volume(points: &[Vec3], tets: &[[usize; 4]]) -> f64 {
        let p = perturb(points);
        tets.iter()
            .map(|t| orient3d(&p[t[0]], &p[t[1]], &p[t[2]], &p[t[3]]) / 6.0)
            .sum()
    }

    #[test]
    fn insphere_sign_convention() {
        let a = Vec3::new(1.0, 1.0, 1.0);
        let b = Vec3::new(1.0, -1.0, -1.0);
        let c = Vec3::new(-1.0, 1.0, -1.0);
        let d = Vec3::new(-1.0, -1.0, 1.0);
        let inside = Vec3::zeros();
        let outside = Vec3::new(3.0, 0.0, 0.0);
        assert!(insphere(&a, &b, &c, &d, &inside) > 0.0);
        assert!(insphere(&b, &a, &c, &d, &inside) > 0.0);
        assert!(insphere(&a, &b, &c, &d, &outside) < 0.0);
        assert!(insphere(&b, &a, &c, &d, &outside) < 0.0);
    }

    #[test]
    fn simplex_gives_one_tetrahedron() {
        let pts = [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let tets = tetrahedralize(&pts).unwrap();
        assert_eq!(tets.len(), 1);
    }

    #[test]
    fn tetrahedron_plus_centroid() {
        let pts = [
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
            Vec3::zeros(),
        ];
        let tets = tetrahedralize(&pts).unwrap();
        let oracle = brute_force(&pts);
        assert_eq!(oracle.len(), 4);
        assert_eq!(sorted(&tets), sorted(&oracle));
        assert_eq!(tetrahedra_edges(&tets).len(), 10);
    }

    #[test]
    fn cube_vertices_resolve_by_perturbation() {
        let mut pts = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    pts.push(Vec3::new(x, y, z));
                }
            }
        }
        let tets = tetrahedralize(&pts).unwrap();
        assert_eq!(sorted(&tets), sorted(&brute_force(&pts)));
        assert!((volume(&pts, &tets) - 1.0).abs() < 1e-9);
        let p = perturb(&pts);
        for t in &tets {
            for e in 0..8 {
                if !t.contains(&e) {
                    assert!(insphere(&p[t[0]], &p[t[1]], &p[t[2]], &p[t[3]], &p[e]) <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn random_sets_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let n = rng.gen_range(4..=12);
            let pts: Vec<Vec3> = (0..n)
                .map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()))
                .collect();
            let tets = tetrahedralize(&pts).unwrap();
            assert_eq!(sorted(&tets), sorted(&brute_force(&pts)));
        }
    }

    #[test]
    fn rejects_too_few_and_coplanar() {
        assert!(tetrahedralize(&[Vec3::zeros(), Vec3::x(), Vec3::y()]).is_err());
        let flat: Vec<Vec3> = (0..10)
            .map(|i| Vec3::new((i % 4) as f64, (i / 4) as f64, 0.0))
            .collect();
        assert!(matches!(tetrahedralize(&flat), Err(Error::Degenerate(_))));
    }

    #[test]
    fn perturbation_is_bounded_and_deterministic() {
        for i in 0..1000 {
            let p = perturbation(i);
            assert!(p.amax() <= PERTURBATION_SCALE);
            assert_eq!(p, perturbation(i));
        }
        assert_ne!(perturbation(1), perturbation(2));
    }
}
