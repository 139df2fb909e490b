//! Batch command line. `run` is the whole program; `main` only forwards
//! process arguments and streams.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error. Results go to
//! stdout, diagnostics to stderr. Numbers print with 6 significant digits.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use neuroseg_core::enhance::{bandpass, hamming_lowpass, map_slices, sobel, WindowLevel};
use neuroseg_core::extract::{extract_brain, ExtractParams};
use neuroseg_core::measure;
use neuroseg_core::orient::{orientation_code, orientation_of};
use neuroseg_core::segment::{interpolate_between, polygon_fill, region_grow, PolygonSelection, RegionGrowParams};
use neuroseg_core::surface::marching_cubes;
use neuroseg_core::transform::{rotate_volume, RotationSpec};
use neuroseg_core::{DataType, Histogram, Label, LabelMap, PlaneId, Volume3D};

use crate::error::{Error, Result};
use crate::export::sig6;
use crate::service::{self, ServiceConfig};
use crate::session::grow_radius_pixels;
use crate::volume_io::{get_metadata, read_volume, write_volume};

#[derive(Parser, Debug)]
#[command(name = "neuroseg", version, about = "Neuroimage segmentation workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert a NIfTI or NRRD volume to NIfTI (.nii or .nii.gz)
    Convert { input: PathBuf, output: PathBuf },
    /// Print geometry and header fields
    Info { input: PathBuf },
    /// Print an intensity histogram, one `lo hi count` line per bin
    Histogram {
        input: PathBuf,
        #[arg(long, default_value_t = 256)]
        bins: usize,
    },
    /// Window/level to 8 bits, or filter every slice of a plane
    Enhance(EnhanceArgs),
    /// Rotate within the grid about the volume center
    Rotate {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_parser = parse_plane)]
        axis: PlaneId,
        #[arg(long, allow_hyphen_values = true)]
        degrees: f64,
    },
    /// Seeded region grow on one slice
    Grow(GrowArgs),
    /// Fill a polygon on one slice
    Fill(FillArgs),
    /// Interpolate a label between two slices
    Interp {
        labels: PathBuf,
        output: PathBuf,
        #[arg(long, value_parser = parse_plane)]
        plane: PlaneId,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        #[arg(long)]
        label: Label,
    },
    /// Distance, angle, area/perimeter or volume
    Measure {
        #[command(subcommand)]
        what: MeasureCommand,
    },
    /// Classical brain extraction; writes a label map (label 1)
    ExtractBrain {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset: f64,
        #[arg(long, default_value_t = ExtractParams::default().morph_radius_mm)]
        radius_mm: f64,
    },
    /// Surface mesh of one label in the little-endian binary mesh layout
    Mesh {
        labels: PathBuf,
        output: PathBuf,
        #[arg(long)]
        label: Label,
    },
    /// Run the HTTP service (loopback by default)
    Serve {
        /// Defaults to $SERVICE_PORT, then 8765
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
        /// Pin measurement and project timestamps (Unix seconds)
        #[arg(long)]
        fixed_timestamp: Option<i64>,
    },
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("filter").required(true).args(["window", "bandpass", "sobel", "hamming"])))]
pub struct EnhanceArgs {
    input: PathBuf,
    output: PathBuf,
    #[arg(long, requires = "level")]
    window: Option<f64>,
    #[arg(long, requires = "window", allow_hyphen_values = true)]
    level: Option<f64>,
    /// Normalized radial band `lo,hi` within [0, 1]
    #[arg(long, value_parser = parse_pair)]
    bandpass: Option<[f64; 2]>,
    #[arg(long)]
    sobel: bool,
    /// Hamming low-pass cutoff in normalized frequency
    #[arg(long)]
    hamming: Option<f64>,
    /// Plane whose slices are filtered
    #[arg(long, value_parser = parse_plane, default_value = "axial")]
    plane: PlaneId,
}

#[derive(Args, Debug)]
pub struct GrowArgs {
    input: PathBuf,
    /// Existing label map, or `none` for an empty one
    labels: PathBuf,
    output: PathBuf,
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    seed: [f64; 3],
    /// Disk radius in in-plane pixels (millimetres with --mm)
    #[arg(long)]
    radius: f64,
    #[arg(long)]
    label: Label,
    #[arg(long, value_parser = parse_plane, default_value = "axial")]
    plane: PlaneId,
    #[arg(long)]
    connectivity_only: bool,
    /// Seed is in world millimetres and the radius in millimetres
    #[arg(long)]
    mm: bool,
}

#[derive(Args, Debug)]
pub struct FillArgs {
    input: PathBuf,
    /// Existing label map, or `none` for an empty one
    labels: PathBuf,
    output: PathBuf,
    #[arg(long, value_parser = parse_plane)]
    plane: PlaneId,
    #[arg(long)]
    index: usize,
    /// Vertices as `u,v` (or world `x,y,z` with --mm)
    #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
    points: Vec<String>,
    #[arg(long)]
    label: Label,
    #[arg(long)]
    mm: bool,
}

#[derive(Subcommand, Debug)]
pub enum MeasureCommand {
    /// Distance in mm between two voxel coordinates
    Distance {
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        p: [f64; 3],
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        q: [f64; 3],
        /// Voxel spacing; defaults to the image's, else 1,1,1
        #[arg(long, value_parser = parse_triple)]
        spacing: Option<[f64; 3]>,
        /// Image supplying spacing and bounds
        #[arg(long)]
        image: Option<PathBuf>,
        /// Points are world millimetres (needs --image)
        #[arg(long, requires = "image")]
        mm: bool,
    },
    /// Angle of segment pq against the horizontal axis, degrees in [0, 180)
    Angle {
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        p: [f64; 2],
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        q: [f64; 2],
        /// In-plane spacing `su,sv`
        #[arg(long, value_parser = parse_pair, default_value = "1,1")]
        spacing: [f64; 2],
    },
    /// Area (mm²) and perimeter (mm) of a label on one slice
    Area {
        labels: PathBuf,
        #[arg(long, value_parser = parse_plane)]
        plane: PlaneId,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        label: Label,
        /// Overrides the label map's spacing
        #[arg(long, value_parser = parse_triple)]
        spacing: Option<[f64; 3]>,
    },
    /// Volume (mm³) of a label
    Volume {
        labels: PathBuf,
        #[arg(long)]
        label: Label,
        #[arg(long, value_parser = parse_triple)]
        spacing: Option<[f64; 3]>,
    },
}

fn parse_plane(s: &str) -> std::result::Result<PlaneId, String> {
    PlaneId::ALL
        .into_iter()
        .find(|p| p.name().eq_ignore_ascii_case(s))
        .ok_or_else(|| format!("expected axial, coronal or sagittal, got {s:?}"))
}

fn parse_numbers<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0f64; N];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse().map_err(|_| format!("{p:?} is not a number"))?;
        if !o.is_finite() {
            return Err(format!("{p:?} is not finite"));
        }
    }
    Ok(out)
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    parse_numbers::<2>(s)
}

fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    parse_numbers::<3>(s)
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Core(neuroseg_core::Error::Validation(msg.into()))
}

/// Reads a label map congruent with `reference`; `none` gives an empty one.
pub fn read_labels_for(path: &Path, reference: &Volume3D) -> Result<LabelMap> {
    if path.as_os_str() == "none" {
        return Ok(LabelMap::for_volume(reference));
    }
    let map = LabelMap::from_volume(&read_volume(path)?)?;
    if map.dims() != reference.dims() {
        return Err(Error::Core(neuroseg_core::Error::DimMismatch(format!(
            "label map {:?} vs image {:?}",
            map.dims(),
            reference.dims()
        ))));
    }
    Ok(map)
}

fn read_label_file(path: &Path) -> Result<(LabelMap, Volume3D)> {
    let vol = read_volume(path)?;
    Ok((LabelMap::from_volume(&vol)?, vol))
}

fn write_labels(map: &LabelMap, reference: &Volume3D, path: &Path) -> Result<()> {
    write_volume(&map.to_volume(reference.affine().clone())?, path)
}

/// Nearest voxel index of a world point, bounds-checked.
fn world_to_index(vol: &Volume3D, p: [f64; 3]) -> Result<[usize; 3]> {
    let v = vol.world_to_voxel(p);
    let r = v.map(|c| c.round() as i64);
    if !vol.contains(r) {
        return Err(invalid(format!("world point {p:?} maps to voxel {r:?}, outside {:?}", vol.dims())));
    }
    Ok(r.map(|c| c as usize))
}

fn voxel_index(vol: &Volume3D, p: [f64; 3]) -> Result<[usize; 3]> {
    if p.iter().any(|c| c.fract() != 0.0) {
        return Err(invalid(format!("voxel coordinates must be integers, got {p:?}")));
    }
    let r = p.map(|c| c as i64);
    if !vol.contains(r) {
        return Err(invalid(format!("voxel {r:?} outside {:?}", vol.dims())));
    }
    Ok(r.map(|c| c as usize))
}

fn list(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(sig6).collect::<Vec<_>>().join(" ")
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(|e| Error::io("<stdout>", e));
    match cmd {
        Command::Convert { input, output } => {
            let vol = read_volume(&input)?;
            write_volume(&vol, &output)?;
        }
        Command::Info { input } => {
            let vol = read_volume(&input)?;
            w(out, format!("dims: {}", vol.dims().map(|d| d.to_string()).join(" ")))?;
            w(out, format!("frames: {}", vol.frames()))?;
            w(out, format!("spacing: {}", list(vol.spacing())))?;
            w(out, format!("dtype: {}", vol.dtype().name()))?;
            if let Ok(o) = orientation_of(vol.affine()) {
                w(out, format!("orientation: {}", orientation_code(&o)))?;
            }
            if let Some((lo, hi)) = vol.min_max() {
                w(out, format!("range: {} {}", sig6(lo), sig6(hi)))?;
            }
            for (k, v) in get_metadata(&input)? {
                w(out, format!("{k}: {v}"))?;
            }
        }
        Command::Histogram { input, bins } => {
            let vol = read_volume(&input)?;
            let h = Histogram::compute(vol.data(), bins, None)?;
            for (k, c) in h.counts.iter().enumerate() {
                w(out, format!("{} {} {c}", sig6(h.edge(k)), sig6(h.edge(k + 1))))?;
            }
        }
        Command::Enhance(a) => {
            let vol = read_volume(&a.input)?;
            let result = if let (Some(window), Some(level)) = (a.window, a.level) {
                let wl = WindowLevel::new(window, level)?;
                let data = vol.data().iter().map(|&v| wl.map(v) as f64).collect();
                vol.with_data(data)?.with_dtype(DataType::UInt8)
            } else if let Some([lo, hi]) = a.bandpass {
                map_slices(&vol, a.plane, |s| bandpass(s, lo, hi))?
            } else if a.sobel {
                map_slices(&vol, a.plane, sobel)?
            } else if let Some(c) = a.hamming {
                map_slices(&vol, a.plane, |s| hamming_lowpass(s, c))?
            } else {
                unreachable!("clap requires one filter")
            };
            write_volume(&result, &a.output)?;
        }
        Command::Rotate { input, output, axis, degrees } => {
            let vol = read_volume(&input)?;
            write_volume(&rotate_volume(&vol, RotationSpec { axis, degrees })?, &output)?;
        }
        Command::Grow(a) => {
            let vol = read_volume(&a.input)?;
            let mut map = read_labels_for(&a.labels, &vol)?;
            let seed = if a.mm { world_to_index(&vol, a.seed)? } else { voxel_index(&vol, a.seed)? };
            let (index, u, v) = a.plane.project(seed);
            let radius = if a.mm {
                grow_radius_pixels(vol.spacing(), a.plane, None, Some(a.radius))?
            } else {
                a.radius
            };
            let params = RegionGrowParams {
                plane: a.plane,
                index,
                seed: [u as i64, v as i64],
                radius,
                connectivity_only: a.connectivity_only,
            };
            let n = region_grow(&vol, &mut map, &params, a.label)?;
            write_labels(&map, &vol, &a.output)?;
            w(out, format!("changed {n}"))?;
        }
        Command::Fill(a) => {
            let vol = read_volume(&a.input)?;
            let mut map = read_labels_for(&a.labels, &vol)?;
            let points = fill_points(&vol, &a)?;
            let n = polygon_fill(&mut map, &PolygonSelection::new(a.plane, a.index, points), a.label)?;
            write_labels(&map, &vol, &a.output)?;
            w(out, format!("changed {n}"))?;
        }
        Command::Interp { labels, output, plane, a, b, label } => {
            let (mut map, reference) = read_label_file(&labels)?;
            let n = interpolate_between(&mut map, plane, a, b, label)?;
            write_labels(&map, &reference, &output)?;
            w(out, format!("changed {n}"))?;
        }
        Command::Measure { what } => measure_cmd(what, out)?,
        Command::ExtractBrain { input, output, offset, radius_mm } => {
            let vol = read_volume(&input)?;
            let params = ExtractParams {
                threshold_offset: offset,
                morph_radius_mm: radius_mm,
            };
            let map = extract_brain(&vol, params)?;
            write_labels(&map, &vol, &output)?;
            w(out, format!("voxels {}", map.count(1)))?;
        }
        Command::Mesh { labels, output, label } => {
            let (map, reference) = read_label_file(&labels)?;
            let mesh = marching_cubes(&map, label, Some(reference.affine()))?;
            std::fs::write(&output, mesh.to_le_bytes()).map_err(|e| Error::io(&output, e))?;
            w(out, format!("vertices {} triangles {}", mesh.vertices.len(), mesh.triangles.len()))?;
        }
        Command::Serve { port, bind, fixed_timestamp } => {
            let port = ServiceConfig::resolve_port(port).map_err(invalid)?;
            service::run_blocking(ServiceConfig { bind, port, fixed_timestamp })?;
        }
    }
    Ok(())
}

fn fill_points(vol: &Volume3D, a: &FillArgs) -> Result<Vec<[f64; 2]>> {
    // accept both `--points 1,1 4,1 4,4` and `--points "1,1;4,1;4,4"`
    let raw: Vec<&str> = a.points.iter().flat_map(|s| s.split(';')).filter(|s| !s.trim().is_empty()).collect();
    if raw.len() < 3 {
        return Err(invalid(format!("a polygon needs at least 3 points, got {}", raw.len())));
    }
    raw.into_iter()
        .map(|s| {
            if a.mm {
                let v = vol.world_to_voxel(parse_triple(s).map_err(invalid)?);
                let (u, w, _) = a.plane.axes();
                Ok([v[u], v[w]])
            } else {
                parse_pair(s).map_err(invalid)
            }
        })
        .collect()
}

fn measure_cmd(what: MeasureCommand, out: &mut dyn Write) -> Result<()> {
    let line = match what {
        MeasureCommand::Distance { p, q, spacing, image, mm } => {
            let d = match image {
                Some(path) => {
                    let vol = read_volume(&path)?;
                    let (p, q) = if mm { (vol.world_to_voxel(p), vol.world_to_voxel(q)) } else { (p, q) };
                    measure::distance(vol.dims(), spacing.unwrap_or(vol.spacing()), p, q)?
                }
                None => measure::distance_mm(spacing.unwrap_or([1.0; 3]), p, q),
            };
            format!("{} mm", sig6(d))
        }
        MeasureCommand::Angle { p, q, spacing } => format!("{} degrees", sig6(measure::angle(p, q, spacing)?)),
        MeasureCommand::Area { labels, plane, index, label, spacing } => {
            let (map, _) = read_label_file(&labels)?;
            let (area, perim) = measure::area_perimeter(&map, plane, index, label, spacing.unwrap_or(map.spacing()))?;
            format!("area {} mm²\nperimeter {} mm", sig6(area), sig6(perim))
        }
        MeasureCommand::Volume { labels, label, spacing } => {
            let (map, _) = read_label_file(&labels)?;
            format!("{} mm³", sig6(measure::region_volume(&map, label, spacing.unwrap_or(map.spacing()))))
        }
    };
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(err, "{text}");
                    2
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
