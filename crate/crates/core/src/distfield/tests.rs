use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

type P = [f64; 3];

fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
fn dot(a: P, b: P) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn cross(a: P, b: P) -> P {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn seg_dist(p: P, a: P, b: P) -> f64 {
    let ab = sub(b, a);
    let t = (dot(sub(p, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
    let q = [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]];
    dot(sub(p, q), sub(p, q)).sqrt()
}

/// Oracle by a different route: project onto the plane, test the projection
/// with barycentric coordinates, otherwise take the nearest edge.
fn oracle_tri(p: P, a: P, b: P, c: P) -> f64 {
    let n = cross(sub(b, a), sub(c, a));
    let nn = dot(n, n);
    let s = dot(sub(p, a), n) / nn;
    let q = [p[0] - s * n[0], p[1] - s * n[1], p[2] - s * n[2]];
    let u = dot(cross(sub(c, b), sub(q, b)), n) / nn;
    let v = dot(cross(sub(a, c), sub(q, c)), n) / nn;
    let w = 1.0 - u - v;
    if u >= 0.0 && v >= 0.0 && w >= 0.0 {
        return s.abs() * nn.sqrt();
    }
    seg_dist(p, a, b).min(seg_dist(p, b, c)).min(seg_dist(p, c, a))
}

fn oracle(mesh: &SurfaceMesh, p: P) -> f64 {
    mesh.triangles
        .iter()
        .map(|t| oracle_tri(p, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]))
        .fold(f64::INFINITY, f64::min)
}

fn random_mesh(rng: &mut impl Rng, n_tri: usize, lo: f64, hi: f64) -> SurfaceMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for t in 0..n_tri {
        for _ in 0..3 {
            vertices.push(std::array::from_fn(|_| rng.random_range(lo..hi)));
        }
        triangles.push([3 * t, 3 * t + 1, 3 * t + 2]);
    }
    SurfaceMesh::new(vertices, triangles).unwrap()
}

fn plane_mesh(z: f64, half: f64) -> SurfaceMesh {
    SurfaceMesh::new(
        vec![[-half, -half, z], [half, -half, z], [half, half, z], [-half, half, z]],
        vec![[0, 1, 2], [0, 2, 3]],
    )
    .unwrap()
}

fn icosphere(radius: f64) -> SurfaceMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let vertices = raw
        .iter()
        .map(|v: &P| {
            let n = dot(*v, *v).sqrt();
            [v[0] / n * radius, v[1] / n * radius, v[2] / n * radius]
        })
        .collect();
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    SurfaceMesh::new(vertices, triangles).unwrap()
}

#[test]
fn single_triangle_query_above_plane() {
    let mesh = SurfaceMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]]).unwrap();
    let index = build_index(&mesh).unwrap();
    assert_eq!(closest_distance(&index, [0.0, 0.0, 1.0]), 1.0);
}

#[test]
fn nearest_of_two_disjoint_triangles() {
    let mesh = SurfaceMesh::new(
        vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 5.0],
            [1.0, 0.0, 5.0],
            [0.0, 1.0, 5.0],
        ],
        vec![[0, 1, 2], [3, 4, 5]],
    )
    .unwrap();
    let index = build_index(&mesh).unwrap();
    let hit = index.closest(Vec3::new(0.2, 0.2, 4.0));
    assert_eq!(hit.primitive, 1);
    assert!((hit.distance - 1.0).abs() < 1e-15);
    let hit = index.closest(Vec3::new(0.2, 0.2, 1.5));
    assert_eq!(hit.primitive, 0);
    assert!((hit.distance - 1.5).abs() < 1e-15);
}

#[test]
fn icosphere_centre_distance_is_inradius() {
    let mesh = icosphere(2.0);
    let index = build_index(&mesh).unwrap();
    let d = closest_distance(&index, [0.0; 3]);
    assert!((d - oracle(&mesh, [0.0; 3])).abs() < 1e-12);
    // Inradius / circumradius of a regular icosahedron is φ² / (√3 √(1 + φ²)).
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let r_ratio = phi * phi / (3f64.sqrt() * (1.0 + phi * phi).sqrt());
    assert!((d - 2.0 * r_ratio).abs() < 1e-12, "{d} vs {}", 2.0 * r_ratio);
    assert!(d < 2.0);
}

#[test]
fn plane_distance_and_on_surface() {
    let index = build_index(&plane_mesh(0.0, 1.0)).unwrap();
    assert!((closest_distance(&index, [0.25, 0.25, 0.75]) - 0.75).abs() < 1e-15);
    assert_eq!(closest_distance(&index, [0.3, -0.4, 0.0]), 0.0);
}

#[test]
fn edge_interior_beats_vertices() {
    let mesh = SurfaceMesh::new(vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]], vec![[0, 1, 2]]).unwrap();
    let index = build_index(&mesh).unwrap();
    let p = Vec3::new(1.0, -1.0, 1.0);
    let hit = index.closest(p);
    assert_eq!(hit.feature, Feature::Edge(0));
    let perpendicular = 2f64.sqrt();
    assert!((hit.distance - perpendicular).abs() < 1e-15);
    for v in &mesh.vertices {
        assert!(hit.distance < (p - Vec3::from(*v)).norm());
    }
    let vert = SurfaceIndex::build_with_mode(&mesh, DistanceMode::Vertices).unwrap();
    assert!((vert.closest_distance(p) - 3f64.sqrt()).abs() < 1e-15);
}

#[test]
fn ties_break_to_lowest_triangle() {
    let mut mesh = plane_mesh(1.0, 1.0);
    let base = mesh.vertices.len();
    mesh.vertices.extend([[-1.0, -1.0, -1.0], [1.0, -1.0, -1.0], [1.0, 1.0, -1.0]]);
    mesh.triangles.insert(0, [base, base + 1, base + 2]);
    let index = build_index(&mesh).unwrap();
    let hit = index.closest(Vec3::new(0.5, -0.5, 0.0));
    assert_eq!(hit.primitive, 0);
    assert_eq!(hit.distance, 1.0);
}

#[test]
fn empty_and_degenerate_meshes_rejected() {
    assert!(matches!(build_index(&SurfaceMesh::default()), Err(DistError::EmptyMesh)));
    let flat = SurfaceMesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], vec![[0, 1, 2]]).unwrap();
    assert!(matches!(build_index(&flat), Err(DistError::DegenerateMesh)));
    assert!(matches!(
        SurfaceMesh::new(vec![[0.0; 3]], vec![[0, 0, 1]]),
        Err(DistError::BadTriangleIndex { triangle: 0, index: 1, vertices: 1 })
    ));
}

#[test]
fn degenerate_triangles_are_skipped() {
    let mut mesh = plane_mesh(0.0, 1.0);
    mesh.vertices.push([0.0, 0.0, 0.5]);
    let top = mesh.vertices.len() - 1;
    mesh.triangles.push([top, top, top]);
    let index = build_index(&mesh).unwrap();
    assert_eq!(index.dropped_triangles(), 1);
    assert_eq!(closest_distance(&index, [0.0, 0.0, 0.5]), 0.5);
    assert_eq!(mesh.clone().drop_degenerate(), 1);
}

#[test]
fn two_voxel_signed_distances() {
    let vol = LabeledVolume::new([2, 1, 1], [1.0; 3], vec![Label::Wm, Label::Gm]).unwrap();
    let plane = SurfaceMesh::new(
        vec![[1.0, -5.0, -5.0], [1.0, 5.0, -5.0], [1.0, 5.0, 5.0], [1.0, -5.0, 5.0]],
        vec![[0, 1, 2], [0, 2, 3]],
    )
    .unwrap();
    let map = compute_lcdm(&vol, &plane).unwrap();
    let d: Vec<f64> = map.entries.iter().map(|e| e.distance_mm).collect();
    assert_eq!(d, vec![-0.5, 0.5]);
}

#[test]
fn all_background_gives_empty_map() {
    let vol = LabeledVolume::new([2, 2, 2], [0.5; 3], vec![Label::Bg; 8]).unwrap();
    assert!(compute_lcdm(&vol, &plane_mesh(0.0, 1.0)).unwrap().is_empty());
}

#[test]
fn volume_validation() {
    assert!(LabeledVolume::new([2, 1, 1], [1.0; 3], vec![Label::Gm]).is_err());
    assert!(LabeledVolume::new([1, 1, 1], [1.0, 0.0, 1.0], vec![Label::Gm]).is_err());
    assert!(LabeledVolume::new([0, 1, 1], [1.0; 3], vec![]).is_err());
    assert!(matches!(LabeledVolume::from_codes([1, 1, 1], [1.0; 3], &[9]), Err(DistError::UnknownLabel(9))));
    let v = LabeledVolume::new([2, 3, 4], [0.5, 1.0, 2.0], vec![Label::Gm; 24]).unwrap();
    assert_eq!(v.coords(1 + 2 * (2 + 3 * 3)), [1, 2, 3]);
    assert_eq!(v.centroid(1 + 2 * (2 + 3 * 3)), [0.75, 2.5, 7.0]);
}

fn random_volume(rng: &mut impl Rng, n: usize, vx: f64) -> LabeledVolume {
    let codes: Vec<u8> = (0..n * n * n).map(|_| rng.random_range(0..4)).collect();
    LabeledVolume::from_codes([n; 3], [vx; 3], &codes).unwrap()
}

#[test]
fn random_volume_matches_plane_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vol = random_volume(&mut rng, 8, 0.5);
    let mesh = plane_mesh(1.7, 10.0);
    let map = compute_lcdm(&vol, &mesh).unwrap();
    assert_eq!(map.len(), vol.len() - vol.count(Label::Bg));
    for e in &map.entries {
        let c = vol.centroid(e.voxel_index);
        assert!((e.distance_mm.abs() - oracle(&mesh, c)).abs() < 1e-9);
        assert!((e.distance_mm.abs() - (c[2] - 1.7).abs()).abs() < 1e-9);
        assert_eq!(e.distance_mm < 0.0, e.label == Label::Wm);
    }
}

#[test]
fn cmd_profile_examples() {
    let map = DistanceMap {
        entries: [0.1, 0.1, 1.1]
            .iter()
            .enumerate()
            .map(|(i, &d)| DistanceEntry { voxel_index: i, label: Label::Gm, distance_mm: d })
            .chain(std::iter::once(DistanceEntry { voxel_index: 9, label: Label::Wm, distance_mm: -3.0 }))
            .collect(),
    };
    let prof = cmd_profile(&map, 1.0).unwrap();
    assert_eq!(prof.masses, vec![2.0 / 3.0, 1.0 / 3.0]);
    assert_eq!(prof.cdf, vec![2.0 / 3.0, 1.0]);
    assert_eq!(prof.origin_mm, 0.0);
    assert_eq!(prof.bin_edges(), vec![0.0, 1.0, 2.0]);

    let single = DistanceMap { entries: vec![DistanceEntry { voxel_index: 0, label: Label::Gm, distance_mm: 2.3 }] };
    let prof = cmd_profile(&single, 0.5).unwrap();
    assert_eq!(prof.masses, vec![1.0]);
    assert!(matches!(cmd_profile(&single, 0.0), Err(DistError::InvalidBin(_))));
    assert!(matches!(cmd_profile(&DistanceMap::default(), 1.0), Err(DistError::NoGrayMatter)));
}

fn rotation(axis: P, angle: f64) -> impl Fn(P) -> P {
    let n = dot(axis, axis).sqrt();
    let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    let m = [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ];
    move |p: P| std::array::from_fn(|r| m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lcdm_matches_brute_force(seed in any::<u64>(), n_tri in 1usize..40, n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vol = random_volume(&mut rng, n, 0.5);
        let ext = n as f64 * 0.5;
        let mesh = random_mesh(&mut rng, n_tri, -0.5, ext + 0.5);
        let Ok(map) = compute_lcdm(&vol, &mesh) else { return Ok(()) };
        for e in &map.entries {
            let expect = oracle(&mesh, vol.centroid(e.voxel_index));
            prop_assert!((e.distance_mm.abs() - expect).abs() < 1e-9);
            match e.label {
                Label::Wm => prop_assert!(e.distance_mm <= 0.0),
                _ => prop_assert!(e.distance_mm >= 0.0),
            }
        }
    }

    #[test]
    fn rigid_motion_leaves_distances_unchanged(
        seed in any::<u64>(),
        shift in prop::array::uniform3(-50.0f64..50.0),
        axis in prop::array::uniform3(0.1f64..1.0),
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vol = random_volume(&mut rng, 4, 0.5);
        let mesh = random_mesh(&mut rng, 20, -0.5, 2.5);
        let index = build_index(&mesh).unwrap();
        let rot = rotation(axis, angle);
        let motion = |p: P| { let q = rot(p); [q[0] + shift[0], q[1] + shift[1], q[2] + shift[2]] };
        let moved = build_index(&mesh.map_vertices(motion)).unwrap();
        for i in 0..vol.len() {
            let c = vol.centroid(i);
            let a = closest_distance(&index, c);
            let b = closest_distance(&moved, motion(c));
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        }
        // Pure translation through the volume origin.
        let shifted = LabeledVolume::with_origin(vol.dims(), vol.voxel_mm(), shift, vol.labels().to_vec()).unwrap();
        let tmesh = mesh.map_vertices(|p| [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]]);
        let m0 = compute_lcdm(&vol, &mesh).unwrap();
        let m1 = compute_lcdm(&shifted, &tmesh).unwrap();
        for (x, y) in m0.entries.iter().zip(&m1.entries) {
            prop_assert!((x.distance_mm - y.distance_mm).abs() < 1e-9);
        }
    }

    #[test]
    fn surface_never_farther_than_vertices(seed in any::<u64>(), q in prop::array::uniform3(-3.0f64..3.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = random_mesh(&mut rng, 10, -2.0, 2.0);
        let s = build_index(&mesh).unwrap();
        let v = SurfaceIndex::build_with_mode(&mesh, DistanceMode::Vertices).unwrap();
        let brute = mesh.vertices.iter().map(|&w| dot(sub(q, w), sub(q, w)).sqrt()).fold(f64::INFINITY, f64::min);
        prop_assert!((v.closest_distance(Vec3::from(q)) - brute).abs() < 1e-12);
        prop_assert!(s.closest_distance(Vec3::from(q)) <= brute + 1e-12);
    }

    #[test]
    fn cmd_masses_sum_to_one(ds in prop::collection::vec(-5.0f64..5.0, 1..200), bin in 0.05f64..2.0) {
        let map = DistanceMap {
            entries: ds.iter().enumerate().map(|(i, &d)| DistanceEntry { voxel_index: i, label: Label::Gm, distance_mm: d.abs() }).collect(),
        };
        let p = cmd_profile(&map, bin).unwrap();
        prop_assert!((p.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(*p.cdf.last().unwrap(), 1.0);
    }
}
