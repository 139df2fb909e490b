mod common;

use std::path::Path;
use std::process::Command;

use common::{ball, nrrd_bytes, random_volume};
use neuroseg::export::sig6;
use neuroseg::volume_io::{read_volume, write_volume};
use neuroseg_core::enhance::{map_slices, sobel, WindowLevel};
use neuroseg_core::extract::{extract_brain, ExtractParams};
use neuroseg_core::segment::{interpolate_between, polygon_fill, region_grow, PolygonSelection, RegionGrowParams};
use neuroseg_core::surface::{marching_cubes, TriMesh};
use neuroseg_core::transform::{rotate_volume, RotationSpec};
use neuroseg_core::{DataType, Histogram, LabelMap, PlaneId, Volume3D};

fn bin(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_neuroseg")).args(args).env_remove("SERVICE_PORT").output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = neuroseg::cli::run(std::iter::once("neuroseg").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    assert!(err.is_empty());
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn labels_of(p: &Path) -> LabelMap {
    LabelMap::from_volume(&read_volume(p).unwrap()).unwrap()
}

#[test]
fn exit_codes_and_streams() {
    let (code, out, err) = bin(&["frobnicate"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("Usage"));
    let (code, out, err) = bin(&["measure", "distance", "--p", "0,0,0", "--q", "3,4,0", "--spacing", "1,1,1"]);
    assert_eq!((code, out.as_str(), err.as_str()), (0, "5.00000 mm\n", ""));
    let (code, out, err) = bin(&["info", "/definitely/missing.nii"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.starts_with("error: "));
    assert_eq!(bin(&["grow", "a", "b", "c", "--seed", "1,2", "--radius", "2", "--label", "1"]).0, 2);
    assert_eq!(bin(&["serve", "--port", "notaport"]).0, 2);
}

#[test]
fn convert_round_trip_is_voxel_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<u8> = (0..60).map(|i| (i * 37 % 251) as u8).collect();
    let nrrd = dir.path().join("in.nrrd");
    std::fs::write(&nrrd, nrrd_bytes([5, 4, 3], &data, true)).unwrap();
    let out = dir.path().join("out.nii.gz");
    let back = dir.path().join("back.nii.gz");
    ok(&["convert", s(&nrrd), s(&out)]);
    ok(&["convert", s(&out), s(&back)]);
    let (a, b, c) = (read_volume(&nrrd).unwrap(), read_volume(&out).unwrap(), read_volume(&back).unwrap());
    assert_eq!(a.data(), c.data());
    assert_eq!(b.affine(), c.affine());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&back).unwrap());
    assert_eq!(run(&["convert", s(&nrrd), s(&dir.path().join("x.nrrd"))]).0, 1);
}

#[test]
fn info_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let vol = random_volume([6, 5, 4], DataType::Int16, 2);
    let p = dir.path().join("v.nii");
    write_volume(&vol, &p).unwrap();
    let info = ok(&["info", s(&p)]);
    assert!(info.contains("dims: 6 5 4\n"));
    assert!(info.contains("spacing: 0.750000 1.25000 2.00000\n"));
    assert!(info.contains("dtype: int16\n"));
    assert!(info.contains("orientation: RAS\n"));
    assert!(info.contains("datatype: 4\n"));

    let hist = ok(&["histogram", s(&p), "--bins", "7"]);
    let h = Histogram::compute(vol.data(), 7, None).unwrap();
    let expected: String =
        (0..7).map(|k| format!("{} {} {}\n", sig6(h.edge(k)), sig6(h.edge(k + 1)), h.counts[k])).collect();
    assert_eq!(hist, expected);
}

#[test]
fn enhance_and_rotate_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let vol = random_volume([9, 8, 3], DataType::Float32, 3);
    let p = dir.path().join("v.nii");
    write_volume(&vol, &p).unwrap();
    let vol = read_volume(&p).unwrap();

    let out = dir.path().join("wl.nii");
    ok(&["enhance", s(&p), s(&out), "--window", "2000", "--level", "-100"]);
    let wl = WindowLevel::new(2000.0, -100.0).unwrap();
    let got = read_volume(&out).unwrap();
    assert_eq!(got.dtype(), DataType::UInt8);
    assert!(got.data().iter().zip(vol.data()).all(|(g, v)| *g == wl.map(*v) as f64));

    let out = dir.path().join("sobel.nii");
    ok(&["enhance", s(&p), s(&out), "--sobel", "--plane", "coronal"]);
    let expected = map_slices(&vol, PlaneId::Coronal, sobel).unwrap();
    // float32 on disk
    let f32s: Vec<f64> = expected.data().iter().map(|&v| v as f32 as f64).collect();
    assert_eq!(read_volume(&out).unwrap().data(), f32s);

    let out = dir.path().join("rot.nii");
    ok(&["rotate", s(&p), s(&out), "--axis", "sagittal", "--degrees", "-90"]);
    let expected = rotate_volume(&vol, RotationSpec { axis: PlaneId::Sagittal, degrees: -90.0 }).unwrap();
    let f32s: Vec<f64> = expected.data().iter().map(|&v| v as f32 as f64).collect();
    assert_eq!(read_volume(&out).unwrap().data(), f32s);

    assert_eq!(run(&["enhance", s(&p), s(&out), "--bandpass", "0.8,0.2"]).0, 1);
}

#[test]
fn editing_commands_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let vol = random_volume([12, 10, 5], DataType::UInt8, 4);
    let img = dir.path().join("img.nii.gz");
    write_volume(&vol, &img).unwrap();

    let filled = dir.path().join("fill.nii.gz");
    let out = ok(&["fill", s(&img), "none", s(&filled), "--plane", "axial", "--index", "1", "--points", "1,1", "9,1", "5,8", "--label", "3"]);
    let mut oracle = LabelMap::new(vol.dims());
    let sel = PolygonSelection::new(PlaneId::Axial, 1, vec![[1.0, 1.0], [9.0, 1.0], [5.0, 8.0]]);
    let n = polygon_fill(&mut oracle, &sel, 3).unwrap();
    assert_eq!(out, format!("changed {n}\n"));
    assert_eq!(labels_of(&filled).data(), oracle.data());

    let copy = dir.path().join("fill3.nii.gz");
    ok(&["fill", s(&img), s(&filled), s(&copy), "--plane", "axial", "--index", "3", "--points", "1,1;9,1;5,8", "--label", "3"]);
    polygon_fill(&mut oracle, &PolygonSelection::new(PlaneId::Axial, 3, sel.points.clone()), 3).unwrap();
    assert_eq!(labels_of(&copy).data(), oracle.data());

    let interp = dir.path().join("interp.nii.gz");
    let out = ok(&["interp", s(&copy), s(&interp), "--plane", "axial", "--a", "1", "--b", "3", "--label", "3"]);
    let n = interpolate_between(&mut oracle, PlaneId::Axial, 1, 3, 3).unwrap();
    assert_eq!(out, format!("changed {n}\n"));
    assert_eq!(labels_of(&interp).data(), oracle.data());

    let grown = dir.path().join("grow.nii.gz");
    let out = ok(&["grow", s(&img), s(&interp), s(&grown), "--seed", "4,5,2", "--radius", "3", "--label", "5", "--plane", "coronal"]);
    let p = RegionGrowParams { plane: PlaneId::Coronal, index: 5, seed: [4, 2], radius: 3.0, connectivity_only: false };
    let vol = read_volume(&img).unwrap();
    let n = region_grow(&vol, &mut oracle, &p, 5).unwrap();
    assert_eq!(out, format!("changed {n}\n"));
    assert_eq!(labels_of(&grown).data(), oracle.data());

    // a world-space seed lands on the same voxel: x = 0.75·4 − 30, y = 1.25·5 + 12.5, z = 2·2 + 4
    let mm = dir.path().join("grow_mm.nii.gz");
    ok(&["grow", s(&img), s(&interp), s(&mm), "--seed", "-27,18.75,8", "--radius", "3.75", "--label", "5", "--plane", "coronal", "--mm"]);
    // 3.75 mm over the finer 0.75 mm in-plane spacing is 5 pixels
    let mut mm_oracle = labels_of(&interp);
    region_grow(&vol, &mut mm_oracle, &RegionGrowParams { radius: 5.0, ..p }, 5).unwrap();
    assert_eq!(labels_of(&mm).data(), mm_oracle.data());

    assert_eq!(run(&["grow", s(&img), "none", s(&mm), "--seed", "40,0,0", "--radius", "2", "--label", "1"]).0, 1);
    assert_eq!(run(&["interp", s(&filled), s(&mm), "--plane", "axial", "--a", "1", "--b", "2", "--label", "3"]).0, 1);
}

#[test]
fn measure_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let mut map = LabelMap::new([12, 12, 2]);
    for v in 1..11 {
        for u in 1..11 {
            map.set_at([u, v, 0], 1);
        }
    }
    let labels = dir.path().join("sq.nii.gz");
    let spacing = [0.5, 0.5, 3.0];
    let map = map.with_spacing(spacing);
    write_volume(&map.to_volume(neuroseg_core::Affine::from_spacing(spacing)).unwrap(), &labels).unwrap();
    assert_eq!(
        ok(&["measure", "area", s(&labels), "--plane", "axial", "--index", "0", "--label", "1"]),
        "area 25.0000 mm²\nperimeter 20.0000 mm\n"
    );
    assert_eq!(ok(&["measure", "volume", s(&labels), "--label", "1"]), "75.0000 mm³\n");
    assert_eq!(ok(&["measure", "volume", s(&labels), "--label", "1", "--spacing", "1,1,1"]), "100.000 mm³\n");
    assert_eq!(ok(&["measure", "angle", "--p", "0,0", "--q", "0,5"]), "90.0000 degrees\n");
    assert_eq!(ok(&["measure", "angle", "--p", "0,0", "--q", "5,0"]), "0.00000 degrees\n");
    assert_eq!(ok(&["measure", "distance", "--p", "0,0,0", "--q", "0,0,1", "--image", s(&labels)]), "3.00000 mm\n");
    // world coordinates through the affine
    assert_eq!(ok(&["measure", "distance", "--p", "0,0,0", "--q", "1.5,2,0", "--image", s(&labels), "--mm"]), "2.50000 mm\n");
    assert_eq!(run(&["measure", "distance", "--p", "0,0,0", "--q", "0,0,5", "--image", s(&labels)]).0, 1);
}

#[test]
fn extract_brain_and_mesh_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let n = 24;
    let data = ball(n, 11.5, 7.0).into_iter().map(|b| if b { 200.0 } else { 10.0 }).collect();
    let vol = Volume3D::from_data([n, n, n], data).unwrap().with_dtype(DataType::UInt8);
    let img = dir.path().join("head.nii");
    write_volume(&vol, &img).unwrap();
    let mask = dir.path().join("mask.nii.gz");
    let out = ok(&["extract-brain", s(&img), s(&mask), "--offset", "-5"]);
    let expected = extract_brain(&read_volume(&img).unwrap(), ExtractParams { threshold_offset: -5.0, ..Default::default() }).unwrap();
    assert_eq!(out, format!("voxels {}\n", expected.count(1)));
    assert_eq!(labels_of(&mask).data(), expected.data());

    let mesh_path = dir.path().join("brain.mesh");
    let out = ok(&["mesh", s(&mask), s(&mesh_path), "--label", "1"]);
    let mesh = marching_cubes(&expected, 1, Some(read_volume(&mask).unwrap().affine())).unwrap();
    assert_eq!(out, format!("vertices {} triangles {}\n", mesh.vertices.len(), mesh.triangles.len()));
    let bytes = std::fs::read(&mesh_path).unwrap();
    assert_eq!(bytes, mesh.to_le_bytes());
    assert!(TriMesh::from_le_bytes(&bytes, 1).unwrap().is_watertight());

    let flat = Volume3D::from_data([4, 4, 4], vec![3.0; 64]).unwrap();
    let flat_path = dir.path().join("flat.nii");
    write_volume(&flat, &flat_path).unwrap();
    let (code, _, err) = run(&["extract-brain", s(&flat_path), s(&mask)]);
    assert_eq!(code, 1);
    assert!(err.contains("fewer than two distinct levels"));
}

#[test]
fn fill_needs_three_points() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img.nii");
    write_volume(&random_volume([4, 4, 2], DataType::UInt8, 0), &img).unwrap();
    let (code, _, err) = run(&["fill", s(&img), "none", s(&dir.path().join("out.nii")), "--plane", "axial", "--index", "0", "--points", "1,1;2,2", "--label", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("at least 3 points"), "{err}");
}
