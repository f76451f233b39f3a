//! PLY reader and writer for vertex-only point clouds.
//!
//! Reads ASCII and binary little-endian PLY 1.0. Vertex `x`, `y`, `z` become
//! positions, `red`/`green`/`blue` become the `R`, `G`, `B` channels and every
//! other scalar vertex property becomes a channel under its own name. Other
//! elements (faces, edges) are skipped.

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar {
        name: String,
        ty: ScalarType,
    },
    List {
        name: String,
        count: ScalarType,
        item: ScalarType,
    },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    body_offset: usize,
}

fn header_err(line: usize, msg: impl Into<String>) -> Error {
    Error::PlyHeader { line, msg: msg.into() }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0usize;
    let mut line_no = 0usize;
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();

    loop {
        let rest = &bytes[pos..];
        let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
            return Err(header_err(line_no + 1, "unexpected end of header"));
        };
        line_no += 1;
        let raw = &rest[..nl];
        pos += nl + 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| header_err(line_no, "header is not valid text"))?
            .trim_end_matches('\r');
        let mut tok = line.split_whitespace();
        let Some(keyword) = tok.next() else {
            continue;
        };

        if line_no == 1 {
            if keyword != "ply" {
                return Err(header_err(1, "missing 'ply' magic"));
            }
            continue;
        }

        match keyword {
            "format" => {
                let kind = tok.next().unwrap_or("");
                let version = tok.next().unwrap_or("");
                if version != "1.0" {
                    return Err(header_err(line_no, format!("unknown version {version:?}")));
                }
                format = Some(match kind {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    "binary_big_endian" => return Err(Error::UnsupportedFormat("binary_big_endian".into())),
                    other => return Err(header_err(line_no, format!("unknown format {other:?}"))),
                });
            }
            "comment" | "obj_info" => {}
            "element" => {
                let name = tok.next().ok_or_else(|| header_err(line_no, "element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| header_err(line_no, "element without valid count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| header_err(line_no, "property before any element"))?;
                let parts: Vec<&str> = tok.collect();
                let prop = match parts.as_slice() {
                    ["list", count, item, name] => Property::List {
                        name: name.to_string(),
                        count: ScalarType::parse(count)
                            .ok_or_else(|| header_err(line_no, format!("unknown type {count:?}")))?,
                        item: ScalarType::parse(item)
                            .ok_or_else(|| header_err(line_no, format!("unknown type {item:?}")))?,
                    },
                    [ty, name] => Property::Scalar {
                        name: name.to_string(),
                        ty: ScalarType::parse(ty).ok_or_else(|| header_err(line_no, format!("unknown type {ty:?}")))?,
                    },
                    _ => return Err(header_err(line_no, "malformed property line")),
                };
                element.props.push(prop);
            }
            "end_header" => break,
            other => return Err(header_err(line_no, format!("unexpected keyword {other:?}"))),
        }
    }

    let format = format.ok_or_else(|| header_err(line_no, "missing format line"))?;
    Ok(Header {
        format,
        elements,
        body_offset: pos,
    })
}

/// Where each vertex property lands in the output cloud.
#[derive(Clone, Copy)]
enum Slot {
    Position(usize),
    Channel(usize),
}

struct VertexLayout {
    slots: Vec<Slot>,
    channel_names: Vec<String>,
}

fn vertex_layout(vertex: &Element) -> Result<VertexLayout> {
    let mut slots = Vec::with_capacity(vertex.props.len());
    let mut channel_names = Vec::new();
    let mut seen_axes = [false; 3];
    for prop in &vertex.props {
        let Property::Scalar { name, .. } = prop else {
            return Err(Error::UnsupportedFormat(format!(
                "list property {:?} on vertex element",
                prop.name()
            )));
        };
        let slot = match name.as_str() {
            "x" => Slot::Position(0),
            "y" => Slot::Position(1),
            "z" => Slot::Position(2),
            other => {
                let mapped = match other {
                    "red" => "R",
                    "green" => "G",
                    "blue" => "B",
                    o => o,
                };
                channel_names.push(mapped.to_string());
                Slot::Channel(channel_names.len() - 1)
            }
        };
        if let Slot::Position(axis) = slot {
            seen_axes[axis] = true;
        }
        slots.push(slot);
    }
    if seen_axes != [true; 3] {
        return Err(Error::PlyHeader {
            line: 0,
            msg: "vertex element lacks x, y, z".into(),
        });
    }
    Ok(VertexLayout { slots, channel_names })
}

/// Parses a PLY file held in memory. Point order equals file order.
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let vertex_idx = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| header_err(0, "no vertex element"))?;
    let vertex = &header.elements[vertex_idx];
    let layout = vertex_layout(vertex)?;
    let body = &bytes[header.body_offset..];

    let n = vertex.count;
    let mut positions = vec![[0.0f64; 3]; n];
    let mut channels = vec![vec![0.0f64; n]; layout.channel_names.len()];
    let mut store = |row: usize, col: usize, v: f64| match layout.slots[col] {
        Slot::Position(a) => positions[row][a] = v,
        Slot::Channel(c) => channels[c][row] = v,
    };

    match header.format {
        PlyFormat::Ascii => {
            let text = std::str::from_utf8(body).map_err(|e| Error::PlyData {
                offset: header.body_offset + e.valid_up_to(),
                msg: "ascii body is not valid text".into(),
            })?;
            let mut lines = text.lines().filter(|l| !l.trim().is_empty());
            for elem in &header.elements[..vertex_idx] {
                for _ in 0..elem.count {
                    lines.next().ok_or(Error::Truncated {
                        expected: n * vertex.props.len(),
                        found: 0,
                    })?;
                }
            }
            let nprops = vertex.props.len();
            for row in 0..n {
                let Some(line) = lines.next() else {
                    return Err(Error::Truncated {
                        expected: n * nprops,
                        found: row * nprops,
                    });
                };
                let mut count = 0;
                for (col, tok) in line.split_whitespace().take(nprops).enumerate() {
                    let v: f64 = tok.parse().map_err(|_| Error::PlyData {
                        offset: header.body_offset + (line.as_ptr() as usize - text.as_ptr() as usize),
                        msg: format!("bad number {tok:?} in vertex {row}"),
                    })?;
                    store(row, col, v);
                    count += 1;
                }
                if count < nprops {
                    return Err(Error::Truncated {
                        expected: n * nprops,
                        found: row * nprops + count,
                    });
                }
            }
        }
        PlyFormat::BinaryLittleEndian => {
            let mut cursor = 0usize;
            for elem in &header.elements[..vertex_idx] {
                for _ in 0..elem.count {
                    cursor = skip_binary_instance(body, cursor, elem, header.body_offset)?;
                }
            }
            let types: Vec<ScalarType> = vertex
                .props
                .iter()
                .map(|p| match p {
                    Property::Scalar { ty, .. } => *ty,
                    Property::List { .. } => unreachable!("rejected by vertex_layout"),
                })
                .collect();
            let nprops = types.len();
            for row in 0..n {
                for (col, ty) in types.iter().enumerate() {
                    let size = ty.size();
                    if cursor + size > body.len() {
                        return Err(Error::Truncated {
                            expected: n * nprops,
                            found: row * nprops + col,
                        });
                    }
                    store(row, col, ty.read_le(&body[cursor..cursor + size]));
                    cursor += size;
                }
            }
        }
    }

    let mut cloud = PointCloud::new(positions);
    for (name, values) in layout.channel_names.into_iter().zip(channels) {
        cloud.set_channel(name, values)?;
    }
    Ok(cloud)
}

fn skip_binary_instance(body: &[u8], mut cursor: usize, elem: &Element, base: usize) -> Result<usize> {
    let short = |cursor: usize| Error::PlyData {
        offset: base + cursor,
        msg: format!("element {:?} runs past end of file", elem.name),
    };
    for prop in &elem.props {
        match prop {
            Property::Scalar { ty, .. } => cursor += ty.size(),
            Property::List { count, item, .. } => {
                let end = cursor + count.size();
                if end > body.len() {
                    return Err(short(cursor));
                }
                let len = count.read_le(&body[cursor..end]);
                if len.is_nan() || len < 0.0 {
                    return Err(short(cursor));
                }
                cursor = end + len as usize * item.size();
            }
        }
        if cursor > body.len() {
            return Err(short(cursor));
        }
    }
    Ok(cursor)
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Serializes a cloud. Positions and non-color channels are written as
/// `double`; `R`, `G`, `B` (when all three exist) as `uchar`.
pub fn write_ply(cloud: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let rgb = match (cloud.channel("R"), cloud.channel("G"), cloud.channel("B")) {
        (Some(r), Some(g), Some(b)) => Some([r, g, b]),
        _ => None,
    };
    let extra: Vec<(&str, &[f64])> = cloud
        .channel_names()
        .filter(|n| rgb.is_none() || !matches!(*n, "R" | "G" | "B"))
        .map(|n| (n, cloud.channel(n).unwrap()))
        .collect();

    let mut out = Vec::new();
    out.extend_from_slice(b"ply\n");
    out.extend_from_slice(match format {
        PlyFormat::Ascii => b"format ascii 1.0\n".as_slice(),
        PlyFormat::BinaryLittleEndian => b"format binary_little_endian 1.0\n".as_slice(),
    });
    out.extend_from_slice(format!("element vertex {}\n", cloud.point_count()).as_bytes());
    for axis in ["x", "y", "z"] {
        out.extend_from_slice(format!("property double {axis}\n").as_bytes());
    }
    if rgb.is_some() {
        for c in ["red", "green", "blue"] {
            out.extend_from_slice(format!("property uchar {c}\n").as_bytes());
        }
    }
    for (name, _) in &extra {
        out.extend_from_slice(format!("property double {name}\n").as_bytes());
    }
    out.extend_from_slice(b"end_header\n");

    for (i, p) in cloud.positions().iter().enumerate() {
        match format {
            PlyFormat::Ascii => {
                let mut fields: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                if let Some(rgb) = rgb {
                    fields.extend(rgb.iter().map(|c| to_u8(c[i]).to_string()));
                }
                fields.extend(extra.iter().map(|(_, v)| v[i].to_string()));
                out.extend_from_slice(fields.join(" ").as_bytes());
                out.push(b'\n');
            }
            PlyFormat::BinaryLittleEndian => {
                for v in p {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                if let Some(rgb) = rgb {
                    out.extend(rgb.iter().map(|c| to_u8(c[i])));
                }
                for (_, v) in &extra {
                    out.extend_from_slice(&v[i].to_le_bytes());
                }
            }
        }
    }
    out
}
