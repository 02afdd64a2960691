//! PLY vertex clouds: ASCII and binary little-endian, `x/y/z` as float or
//! double, optional `red/green/blue` uchar colors and an optional integer
//! `votes` property. Other elements and properties are skipped.

use std::io::Cursor;
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::Point3;

use super::{read_bytes, write_bytes, IngestError};
use crate::geom::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlyEncoding {
    Ascii,
    #[default]
    BinaryLittleEndian,
}

/// Storage type of the coordinate properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlyScalar {
    Float32,
    #[default]
    Float64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PlyWriteOptions {
    pub encoding: PlyEncoding,
    pub scalar: PlyScalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarKind {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarKind {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => ScalarKind::I8,
            "uchar" | "uint8" => ScalarKind::U8,
            "short" | "int16" => ScalarKind::I16,
            "ushort" | "uint16" => ScalarKind::U16,
            "int" | "int32" => ScalarKind::I32,
            "uint" | "uint32" => ScalarKind::U32,
            "float" | "float32" => ScalarKind::F32,
            "double" | "float64" => ScalarKind::F64,
            _ => return None,
        })
    }

    fn is_integer(self) -> bool {
        !matches!(self, ScalarKind::F32 | ScalarKind::F64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PropertyKind {
    Scalar(ScalarKind),
    List { count: ScalarKind, item: ScalarKind },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropertyKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLittleEndian,
}

struct Header {
    format: Format,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, IngestError> {
    let mut offset = 0usize;
    let next_line = |offset: &mut usize| -> Result<(usize, String), IngestError> {
        let start = *offset;
        let rest = &bytes[start..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| IngestError::parse(start, "unterminated header line"))?;
        *offset = start + end + 1;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| IngestError::parse(start, "header is not valid text"))?;
        Ok((start, line.trim_end_matches('\r').to_owned()))
    };

    let (_, magic) = next_line(&mut offset)?;
    if magic.trim() != "ply" {
        return Err(IngestError::parse(0, "missing `ply` magic"));
    }

    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let (line_start, line) = next_line(&mut offset)?;
        let mut words = line.split_whitespace();
        match words.next() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                format = Some(match words.next() {
                    Some("ascii") => Format::Ascii,
                    Some("binary_little_endian") => Format::BinaryLittleEndian,
                    Some(other) => return Err(IngestError::UnsupportedEncoding(other.to_owned())),
                    None => return Err(IngestError::parse(line_start, "format line lacks an encoding")),
                });
            }
            Some("element") => {
                let name = words.next().ok_or_else(|| IngestError::parse(line_start, "element lacks a name"))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| IngestError::parse(line_start, "element count is not a non-negative integer"))?;
                elements.push(Element { name: name.to_owned(), count, properties: Vec::new() });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| IngestError::parse(line_start, "property before any element"))?;
                let bad = || IngestError::parse(line_start, format!("malformed property line `{line}`"));
                let first = words.next().ok_or_else(bad)?;
                let kind = if first == "list" {
                    let count = words.next().and_then(ScalarKind::parse).ok_or_else(bad)?;
                    let item = words.next().and_then(ScalarKind::parse).ok_or_else(bad)?;
                    if !count.is_integer() {
                        return Err(bad());
                    }
                    PropertyKind::List { count, item }
                } else {
                    PropertyKind::Scalar(ScalarKind::parse(first).ok_or_else(bad)?)
                };
                let name = words.next().ok_or_else(bad)?;
                element.properties.push(Property { name: name.to_owned(), kind });
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(IngestError::parse(line_start, format!("unknown header keyword `{other}`")));
            }
        }
    }
    let format = format.ok_or_else(|| IngestError::parse(0, "header lacks a format line"))?;
    Ok(Header { format, elements, body_offset: offset })
}

/// Pulls typed scalars out of a PLY body.
trait ScalarSource {
    fn offset(&self) -> usize;
    fn next(&mut self, kind: ScalarKind) -> Result<f64, IngestError>;
}

struct AsciiSource<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl ScalarSource for AsciiSource<'_> {
    fn offset(&self) -> usize {
        self.pos
    }

    fn next(&mut self, kind: ScalarKind) -> Result<f64, IngestError> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(IngestError::parse(start, "unexpected end of data"));
        }
        let token = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| IngestError::parse(start, "non-text token"))?;
        let bad = || IngestError::parse(start, format!("`{token}` is not a valid {kind:?}"));
        let value = match kind {
            ScalarKind::F32 => token.parse::<f32>().map_err(|_| bad())? as f64,
            ScalarKind::F64 => token.parse::<f64>().map_err(|_| bad())?,
            _ => {
                let v = token.parse::<i64>().map_err(|_| bad())?;
                let (lo, hi) = match kind {
                    ScalarKind::I8 => (i8::MIN as i64, i8::MAX as i64),
                    ScalarKind::U8 => (0, u8::MAX as i64),
                    ScalarKind::I16 => (i16::MIN as i64, i16::MAX as i64),
                    ScalarKind::U16 => (0, u16::MAX as i64),
                    ScalarKind::I32 => (i32::MIN as i64, i32::MAX as i64),
                    _ => (0, u32::MAX as i64),
                };
                if v < lo || v > hi {
                    return Err(bad());
                }
                v as f64
            }
        };
        Ok(value)
    }
}

struct BinarySource<'a> {
    cursor: Cursor<&'a [u8]>,
    base: usize,
}

impl ScalarSource for BinarySource<'_> {
    fn offset(&self) -> usize {
        self.base + self.cursor.position() as usize
    }

    fn next(&mut self, kind: ScalarKind) -> Result<f64, IngestError> {
        let at = self.offset();
        let c = &mut self.cursor;
        let value = match kind {
            ScalarKind::I8 => c.read_i8().map(f64::from),
            ScalarKind::U8 => c.read_u8().map(f64::from),
            ScalarKind::I16 => c.read_i16::<LittleEndian>().map(f64::from),
            ScalarKind::U16 => c.read_u16::<LittleEndian>().map(f64::from),
            ScalarKind::I32 => c.read_i32::<LittleEndian>().map(f64::from),
            ScalarKind::U32 => c.read_u32::<LittleEndian>().map(f64::from),
            ScalarKind::F32 => c.read_f32::<LittleEndian>().map(f64::from),
            ScalarKind::F64 => c.read_f64::<LittleEndian>(),
        };
        value.map_err(|_| IngestError::parse(at, "unexpected end of data"))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    X,
    Y,
    Z,
    Red,
    Green,
    Blue,
    Votes,
    Skip,
}

/// Parses a PLY file held in memory.
pub fn parse_point_cloud(bytes: &[u8]) -> Result<PointCloud, IngestError> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body_offset..];
    let mut source: Box<dyn ScalarSource> = match header.format {
        Format::Ascii => Box::new(AsciiSource { bytes: body, pos: 0 }),
        Format::BinaryLittleEndian => {
            Box::new(BinarySource { cursor: Cursor::new(body), base: header.body_offset })
        }
    };

    let vertex_index = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or(IngestError::MissingXyz)?;
    let vertex = &header.elements[vertex_index];
    let find = |name: &str| {
        vertex.properties.iter().position(|p| p.name == name && matches!(p.kind, PropertyKind::Scalar(_)))
    };
    if find("x").is_none() || find("y").is_none() || find("z").is_none() {
        return Err(IngestError::MissingXyz);
    }
    let is_uchar = |name: &str| {
        find(name).is_some_and(|i| vertex.properties[i].kind == PropertyKind::Scalar(ScalarKind::U8))
    };
    let has_colors = is_uchar("red") && is_uchar("green") && is_uchar("blue");
    let has_votes = find("votes")
        .is_some_and(|i| matches!(vertex.properties[i].kind, PropertyKind::Scalar(k) if k.is_integer()));
    let roles: Vec<Role> = vertex
        .properties
        .iter()
        .map(|p| match p.name.as_str() {
            _ if !matches!(p.kind, PropertyKind::Scalar(_)) => Role::Skip,
            "x" => Role::X,
            "y" => Role::Y,
            "z" => Role::Z,
            "red" if has_colors => Role::Red,
            "green" if has_colors => Role::Green,
            "blue" if has_colors => Role::Blue,
            "votes" if has_votes => Role::Votes,
            _ => Role::Skip,
        })
        .collect();

    // Element counts come from untrusted headers; never reserve past the body size.
    let reserve = vertex.count.min(body.len());
    let mut positions = Vec::with_capacity(reserve);
    let mut colors = Vec::with_capacity(if has_colors { reserve } else { 0 });
    let mut votes = Vec::with_capacity(if has_votes { reserve } else { 0 });

    for (element_index, element) in header.elements.iter().enumerate() {
        if element_index > vertex_index {
            break;
        }
        let is_vertex = element_index == vertex_index;
        for _ in 0..element.count {
            let mut xyz = [0.0; 3];
            let mut rgb = [0u8; 3];
            for (prop_index, prop) in element.properties.iter().enumerate() {
                match prop.kind {
                    PropertyKind::List { count, item } => {
                        let at = source.offset();
                        let n = source.next(count)?;
                        if n < 0.0 {
                            return Err(IngestError::parse(at, "negative list length"));
                        }
                        for _ in 0..n as u64 {
                            source.next(item)?;
                        }
                    }
                    PropertyKind::Scalar(kind) => {
                        let at = source.offset();
                        let value = source.next(kind)?;
                        if !is_vertex {
                            continue;
                        }
                        match roles[prop_index] {
                            Role::X => xyz[0] = value,
                            Role::Y => xyz[1] = value,
                            Role::Z => xyz[2] = value,
                            Role::Red => rgb[0] = value as u8,
                            Role::Green => rgb[1] = value as u8,
                            Role::Blue => rgb[2] = value as u8,
                            Role::Votes => {
                                if value < 0.0 {
                                    return Err(IngestError::parse(at, "negative vote count"));
                                }
                                votes.push(value as u32);
                            }
                            Role::Skip => {}
                        }
                    }
                }
            }
            if is_vertex {
                if !xyz.iter().all(|v| v.is_finite()) {
                    return Err(IngestError::parse(source.offset(), "non-finite vertex coordinate"));
                }
                positions.push(Point3::from(xyz));
                if has_colors {
                    colors.push(rgb);
                }
            }
        }
    }

    let mut cloud = PointCloud::new(positions)?;
    if has_colors {
        cloud = cloud.with_colors(colors)?;
    }
    if has_votes {
        cloud = cloud.with_votes(votes)?;
    }
    Ok(cloud)
}

pub fn read_point_cloud(path: impl AsRef<Path>) -> Result<PointCloud, IngestError> {
    parse_point_cloud(&read_bytes(path.as_ref())?)
}

/// Writes double-precision coordinates in the given encoding.
pub fn write_point_cloud(cloud: &PointCloud, path: impl AsRef<Path>, encoding: PlyEncoding) -> Result<(), IngestError> {
    write_point_cloud_with(cloud, path, PlyWriteOptions { encoding, scalar: PlyScalar::Float64 })
}

pub fn write_point_cloud_with(
    cloud: &PointCloud,
    path: impl AsRef<Path>,
    options: PlyWriteOptions,
) -> Result<(), IngestError> {
    write_bytes(path.as_ref(), &encode_point_cloud(cloud, options))
}

pub(crate) fn encode_point_cloud(cloud: &PointCloud, options: PlyWriteOptions) -> Vec<u8> {
    let scalar_name = match options.scalar {
        PlyScalar::Float32 => "float",
        PlyScalar::Float64 => "double",
    };
    let mut header = String::from("ply\n");
    header.push_str(match options.encoding {
        PlyEncoding::Ascii => "format ascii 1.0\n",
        PlyEncoding::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    header.push_str("comment islescale\n");
    header.push_str(&format!("element vertex {}\n", cloud.len()));
    for axis in ["x", "y", "z"] {
        header.push_str(&format!("property {scalar_name} {axis}\n"));
    }
    if cloud.colors().is_some() {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    if cloud.votes().is_some() {
        header.push_str("property uint votes\n");
    }
    header.push_str("end_header\n");

    let mut out = header.into_bytes();
    for (i, p) in cloud.positions().iter().enumerate() {
        let color = cloud.colors().map(|c| c[i]);
        let vote = cloud.votes().map(|v| v[i]);
        match options.encoding {
            PlyEncoding::Ascii => {
                let mut line = match options.scalar {
                    // Debug formatting is the shortest string that parses back to the same value.
                    PlyScalar::Float32 => format!("{:?} {:?} {:?}", p.x as f32, p.y as f32, p.z as f32),
                    PlyScalar::Float64 => format!("{:?} {:?} {:?}", p.x, p.y, p.z),
                };
                if let Some([r, g, b]) = color {
                    line.push_str(&format!(" {r} {g} {b}"));
                }
                if let Some(v) = vote {
                    line.push_str(&format!(" {v}"));
                }
                line.push('\n');
                out.extend_from_slice(line.as_bytes());
            }
            PlyEncoding::BinaryLittleEndian => {
                for v in [p.x, p.y, p.z] {
                    match options.scalar {
                        PlyScalar::Float32 => out.write_f32::<LittleEndian>(v as f32),
                        PlyScalar::Float64 => out.write_f64::<LittleEndian>(v),
                    }
                    .expect("writing to a Vec cannot fail");
                }
                if let Some(rgb) = color {
                    out.extend_from_slice(&rgb);
                }
                if let Some(v) = vote {
                    out.write_u32::<LittleEndian>(v).expect("writing to a Vec cannot fail");
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn colored() -> PointCloud {
        PointCloud::new(vec![
            Point3::new(0.5, -1.25, 3.0),
            Point3::new(1e-3, 2.0e5, -7.75),
            Point3::new(0.1, 0.2, 0.3),
        ])
        .unwrap()
        .with_colors(vec![[255, 0, 10], [1, 2, 3], [128, 64, 32]])
        .unwrap()
    }

    #[test]
    fn single_ascii_vertex() {
        let ply = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n";
        let cloud = parse_point_cloud(ply).unwrap();
        assert_eq!(cloud.positions(), &[Point3::origin()]);
        assert!(cloud.colors().is_none());
    }

    #[test]
    fn ascii_and_binary_agree() {
        let cloud = colored();
        for scalar in [PlyScalar::Float32, PlyScalar::Float64] {
            let a = encode_point_cloud(&cloud, PlyWriteOptions { encoding: PlyEncoding::Ascii, scalar });
            let b = encode_point_cloud(&cloud, PlyWriteOptions { encoding: PlyEncoding::BinaryLittleEndian, scalar });
            assert_eq!(parse_point_cloud(&a).unwrap(), parse_point_cloud(&b).unwrap());
        }
    }

    #[test]
    fn float32_binary_is_bit_exact() {
        let f32_cloud = PointCloud::new(
            colored().positions().iter().map(|p| p.map(|v| v as f32 as f64)).collect(),
        )
        .unwrap();
        let opts = PlyWriteOptions { encoding: PlyEncoding::BinaryLittleEndian, scalar: PlyScalar::Float32 };
        let back = parse_point_cloud(&encode_point_cloud(&f32_cloud, opts)).unwrap();
        for (a, b) in back.positions().iter().zip(f32_cloud.positions()) {
            for k in 0..3 {
                assert_eq!(a[k].to_bits(), b[k].to_bits());
            }
        }
    }

    #[test]
    fn empty_cloud_and_votes() {
        let empty = PointCloud::default();
        let bytes = encode_point_cloud(&empty, PlyWriteOptions::default());
        assert!(String::from_utf8_lossy(&bytes).contains("element vertex 0"));
        assert!(parse_point_cloud(&bytes).unwrap().is_empty());

        let voted = colored().with_votes(vec![0, 7, u32::MAX]).unwrap();
        for encoding in [PlyEncoding::Ascii, PlyEncoding::BinaryLittleEndian] {
            let bytes = encode_point_cloud(&voted, PlyWriteOptions { encoding, scalar: PlyScalar::Float64 });
            assert_eq!(parse_point_cloud(&bytes).unwrap(), voted);
        }
    }

    #[test]
    fn skips_unknown_properties_and_elements() {
        let ply = b"ply\nformat ascii 1.0\ncomment x\nelement camera 1\nproperty list uchar float k\nelement vertex 2\nproperty float nx\nproperty double x\nproperty double y\nproperty double z\nproperty float intensity\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n3 1 2 3\n9 1 2 3 0.5\n9 4 5 6 0.5\n3 0 1 1\n";
        let cloud = parse_point_cloud(ply).unwrap();
        assert_eq!(cloud.positions(), &[Point3::new(1.0, 2.0, 3.0), Point3::new(4.0, 5.0, 6.0)]);
    }

    #[test]
    fn structured_errors() {
        let big = b"ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(parse_point_cloud(big), Err(IngestError::UnsupportedEncoding(_))));
        let no_xyz = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n";
        assert!(matches!(parse_point_cloud(no_xyz), Err(IngestError::MissingXyz)));
        let truncated = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n\0\0\0\0";
        match parse_point_cloud(truncated) {
            Err(IngestError::Parse { offset, .. }) => assert_eq!(offset, truncated.len()),
            other => panic!("unexpected {other:?}"),
        }
        let huge = b"ply\nformat ascii 1.0\nelement vertex 18446744073709551615\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n";
        assert!(matches!(parse_point_cloud(huge), Err(IngestError::Parse { .. })));
        assert!(matches!(parse_point_cloud(b"not a ply"), Err(IngestError::Parse { .. })));
    }
}
