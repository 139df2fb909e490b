use neuroseg_core::history::UndoHistory;
use neuroseg_core::measure::distance;
use neuroseg_core::plane::extract_plane;
use neuroseg_core::segment::{
    interpolate_between, overwrite_label, polygon_fill, region_grow, select_region, DiskSelection,
    PolygonSelection, Region, RegionGrowParams,
};
use neuroseg_core::surface::marching_cubes;
use neuroseg_core::transform::{rotate_volume, RotationSpec};
use neuroseg_core::{LabelMap, PlaneId, Volume3D};
use proptest::prelude::*;

// Even-odd test with the same crossing formula and half-open tie rule as the
// scanline rasterizer: a pixel center is inside when an odd number of edge
// crossings on its row lie strictly to its right.
fn brute_force_polygon(points: &[[f64; 2]], w: usize, h: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    for v in 0..h {
        for u in 0..w {
            let y = v as f64;
            let mut right = 0;
            for i in 0..points.len() {
                let a = points[i];
                let b = points[(i + 1) % points.len()];
                if (a[1] > y) != (b[1] > y) {
                    let x = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                    if x > u as f64 {
                        right += 1;
                    }
                }
            }
            if right % 2 == 1 {
                out.push([u, v]);
            }
        }
    }
    out
}

fn brute_force_grow(slice: &[f64], w: usize, h: usize, seed: [usize; 2], r: f64) -> Vec<[usize; 2]> {
    let mut disk = Vec::new();
    for v in 0..h {
        for u in 0..w {
            let (du, dv) = (u as f64 - seed[0] as f64, v as f64 - seed[1] as f64);
            if du * du + dv * dv <= r * r {
                disk.push([u, v]);
            }
        }
    }
    let at = |p: [usize; 2]| slice[p[0] + w * p[1]] as f64;
    let n = disk.len() as f64;
    let mean = disk.iter().map(|&p| at(p)).sum::<f64>() / n;
    let std = (disk.iter().map(|&p| (at(p) - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mc = at(seed);
    disk.into_iter()
        .filter(|&p| p == seed || (mc - std <= at(p) && at(p) <= mc + std))
        .collect()
}

fn sorted(mut v: Vec<[usize; 2]>) -> Vec<[usize; 2]> {
    v.sort_by_key(|p| (p[1], p[0]));
    v
}

fn polygon() -> impl Strategy<Value = Vec<[f64; 2]>> {
    // quarter-pixel lattice so vertices and edges regularly hit pixel centers
    prop::collection::vec((0..=76i32, 0..=60i32), 3..9)
        .prop_map(|pts| pts.into_iter().map(|(x, y)| [x as f64 / 4.0, y as f64 / 4.0]).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn polygon_fill_matches_even_odd(points in polygon()) {
        let (w, h) = (20, 16);
        let mut map = LabelMap::new([w, h, 1]);
        let sel = PolygonSelection::new(PlaneId::Axial, 0, points.clone());
        let changed = polygon_fill(&mut map, &sel, 3).unwrap();
        let expected = brute_force_polygon(&points, w, h);
        let got: Vec<[usize; 2]> = (0..h)
            .flat_map(|v| (0..w).map(move |u| [u, v]))
            .filter(|&[u, v]| map.get([u, v, 0]) == 3)
            .collect();
        prop_assert_eq!(changed, expected.len());
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn region_grow_matches_band_rule(
        data in prop::collection::vec(0.0f64..1000.0, 24 * 18),
        su in 0usize..24, sv in 0usize..18, r in 2.0f64..10.0,
    ) {
        let vol = Volume3D::from_data([24, 18, 1], data.clone()).unwrap();
        let p = RegionGrowParams { plane: PlaneId::Axial, index: 0, seed: [su as i64, sv as i64], radius: r, connectivity_only: false };
        let got = sorted(select_region(&vol, &p).unwrap());
        prop_assert!(got.contains(&[su, sv]));
        prop_assert_eq!(got, sorted(brute_force_grow(&data, 24, 18, [su, sv], r)));
    }

    #[test]
    fn region_grow_is_shift_invariant(
        data in prop::collection::vec(0u8..=255, 16 * 16),
        su in 0usize..16, sv in 0usize..16, r in 2.0f64..10.0, c in -500i32..500,
        conn in any::<bool>(),
    ) {
        let base: Vec<f64> = data.iter().map(|&v| v as f64).collect();
        let shifted: Vec<f64> = base.iter().map(|v| v + c as f64).collect();
        let p = RegionGrowParams { plane: PlaneId::Axial, index: 0, seed: [su as i64, sv as i64], radius: r, connectivity_only: conn };
        let mut a = LabelMap::new([16, 16, 1]);
        let mut b = LabelMap::new([16, 16, 1]);
        region_grow(&Volume3D::from_data([16, 16, 1], base).unwrap(), &mut a, &p, 1).unwrap();
        region_grow(&Volume3D::from_data([16, 16, 1], shifted).unwrap(), &mut b, &p, 1).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn interpolation_is_monotone_under_nesting(
        ca in (6i64..14, 6i64..14), cb in (6i64..14, 6i64..14),
        ra in 1.0f64..4.0, rb in 1.0f64..4.0, ga in 0.0f64..3.0, gb in 0.0f64..3.0,
        gap in 2usize..6,
    ) {
        let dims = [20, 20, gap + 1];
        let disk = |map: &mut LabelMap, z: usize, c: (i64, i64), r: f64| {
            let region = Region::Disk(DiskSelection { plane: PlaneId::Axial, index: z, center: [c.0, c.1], radius: r });
            overwrite_label(map, &region, 1).unwrap();
        };
        let mut small = LabelMap::new(dims);
        let mut large = LabelMap::new(dims);
        disk(&mut small, 0, ca, ra);
        disk(&mut small, gap, cb, rb);
        disk(&mut large, 0, ca, ra + ga);
        disk(&mut large, gap, cb, rb + gb);
        interpolate_between(&mut small, PlaneId::Axial, 0, gap, 1).unwrap();
        interpolate_between(&mut large, PlaneId::Axial, 0, gap, 1).unwrap();
        for (s, l) in small.data().iter().zip(large.data()) {
            prop_assert!(*s == 0 || *l == 1);
        }
    }

    #[test]
    fn identical_endpoints_reproduce(points in polygon(), gap in 2usize..6) {
        let mut map = LabelMap::new([20, 16, gap + 1]);
        for z in [0, gap] {
            polygon_fill(&mut map, &PolygonSelection::new(PlaneId::Axial, z, points.clone()), 2).unwrap();
        }
        prop_assume!(map.count(2) > 0);
        interpolate_between(&mut map, PlaneId::Axial, 0, gap, 2).unwrap();
        let first = extract_plane(map.dims(), map.data(), PlaneId::Axial, 0).unwrap();
        for z in 1..gap {
            prop_assert_eq!(&extract_plane(map.dims(), map.data(), PlaneId::Axial, z).unwrap(), &first);
        }
    }

    #[test]
    fn four_quarter_turns_are_identity(
        n in 3usize..9, seed in any::<u64>(), axis in prop::sample::select(PlaneId::ALL.to_vec()),
    ) {
        let data: Vec<f64> = (0..n * n * n).map(|i| ((i as u64).wrapping_mul(seed | 1) % 997) as f64).collect();
        let v = Volume3D::from_data([n, n, n], data).unwrap();
        let mut r = v.clone();
        for _ in 0..4 {
            r = rotate_volume(&r, RotationSpec { axis, degrees: 90.0 }).unwrap();
        }
        prop_assert_eq!(r.data(), v.data());
        for (a, b) in r.affine().0.iter().flatten().zip(v.affine().0.iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn meshes_are_closed_and_translation_covariant(
        voxels in prop::collection::vec((0usize..5, 0usize..5, 0usize..5), 1..30),
    ) {
        let mut a = LabelMap::new([7, 7, 7]).with_spacing([1.0, 2.0, 0.5]);
        let mut b = LabelMap::new([7, 7, 7]).with_spacing([1.0, 2.0, 0.5]);
        for &(x, y, z) in &voxels {
            a.set_at([x, y, z], 5);
            b.set_at([x + 1, y + 1, z + 1], 5);
        }
        let ma = marching_cubes(&a, 5, None).unwrap();
        let mb = marching_cubes(&b, 5, None).unwrap();
        prop_assert!(ma.is_watertight());
                prop_assert!(ma.signed_volume() > 0.0);
        prop_assert_eq!(ma.triangles, mb.triangles);
        for (p, q) in ma.vertices.iter().zip(&mb.vertices) {
            prop_assert_eq!([p[0] + 1.0, p[1] + 2.0, p[2] + 0.5], *q);
        }
    }

    #[test]
    fn undo_restores_any_edit_sequence(
        edits in prop::collection::vec((0usize..10, 0usize..10, 0.0f64..4.0, 0u16..4), 1..12),
    ) {
        let mut map = LabelMap::new([10, 10, 1]);
        let mut history = UndoHistory::default();
        let mut snapshots = vec![map.clone()];
        for &(x, y, r, label) in &edits {
            map.start_recording();
            let region = Region::Disk(DiskSelection { plane: PlaneId::Axial, index: 0, center: [x as i64, y as i64], radius: r });
            overwrite_label(&mut map, &region, label).unwrap();
            let patch = map.finish_recording();
            // no-op edits leave no undo step
            if !patch.is_empty() {
                snapshots.push(map.clone());
            }
            history.push(patch);
        }
        for k in (0..snapshots.len() - 1).rev() {
            history.undo(&mut map).unwrap();
            prop_assert_eq!(&map, &snapshots[k]);
        }
        prop_assert!(history.undo(&mut map).is_err());
        for snap in &snapshots[1..] {
            history.redo(&mut map).unwrap();
            prop_assert_eq!(&map, snap);
        }
    }

    #[test]
    fn distance_is_a_metric(
        p in prop::array::uniform3(0.0f64..9.0), q in prop::array::uniform3(0.0f64..9.0),
        s in prop::array::uniform3(0.0f64..9.0), sp in prop::array::uniform3(0.1f64..3.0),
    ) {
        let d = |a, b| distance([10, 10, 10], sp, a, b).unwrap();
        prop_assert!(d(p, q) >= 0.0);
        prop_assert_eq!(d(p, q), d(q, p));
        prop_assert!(d(p, s) <= d(p, q) + d(q, s) + 1e-9);
    }
}
