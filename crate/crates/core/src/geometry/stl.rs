//! STL reading and writing.
//!
//! Both binary and ASCII variants are supported on read; detection checks
//! the binary length invariant (84 + 50 * facet count) before falling back
//! to ASCII. Facet normals in the file are ignored; orientation comes from
//! the vertex winding.

use nalgebra::Point3;
use std::collections::HashMap;
use std::io::Write;

use super::Mesh;
use crate::error::{Error, Result};

/// Raw facet: three vertices as read from the file.
pub type RawTriangle = [[f32; 3]; 3];

pub fn parse_stl(bytes: &[u8]) -> Result<Vec<RawTriangle>> {
    if looks_binary(bytes) {
        parse_binary(bytes)
    } else {
        parse_ascii(bytes)
    }
}

fn looks_binary(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    bytes.len() == 84 + 50 * count
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<RawTriangle>> {
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let mut tris = Vec::with_capacity(count);
    let mut off = 84;
    for _ in 0..count {
        // 12 bytes facet normal (skipped), 3 * 12 bytes vertices, 2 attr.
        let mut tri = [[0f32; 3]; 3];
        for (v, vert) in tri.iter_mut().enumerate() {
            let base = off + 12 + v * 12;
            for (c, coord) in vert.iter_mut().enumerate() {
                let s = base + c * 4;
                *coord = f32::from_le_bytes(bytes[s..s + 4].try_into().unwrap());
            }
        }
        tris.push(tri);
        off += 50;
    }
    Ok(tris)
}

fn parse_ascii(bytes: &[u8]) -> Result<Vec<RawTriangle>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::StlFormat("not valid UTF-8 and not binary".into()))?;
    let mut tokens = text.split_whitespace().peekable();
    let expect = |want: &str, tokens: &mut std::iter::Peekable<std::str::SplitWhitespace>| {
        match tokens.next() {
            Some(t) if t.eq_ignore_ascii_case(want) => Ok(()),
            Some(t) => Err(Error::StlFormat(format!("expected '{want}', found '{t}'"))),
            None => Err(Error::StlFormat(format!("expected '{want}', found end of file"))),
        }
    };
    expect("solid", &mut tokens)?;
    // Optional solid name: consume tokens until 'facet' or 'endsolid'.
    while let Some(&t) = tokens.peek() {
        if t.eq_ignore_ascii_case("facet") || t.eq_ignore_ascii_case("endsolid") {
            break;
        }
        tokens.next();
    }
    let mut tris = Vec::new();
    loop {
        match tokens.peek() {
            Some(&t) if t.eq_ignore_ascii_case("endsolid") => break,
            Some(&t) if t.eq_ignore_ascii_case("facet") => {
                tokens.next();
                expect("normal", &mut tokens)?;
                for _ in 0..3 {
                    parse_f32(&mut tokens)?;
                }
                expect("outer", &mut tokens)?;
                expect("loop", &mut tokens)?;
                let mut tri = [[0f32; 3]; 3];
                for vert in tri.iter_mut() {
                    expect("vertex", &mut tokens)?;
                    for coord in vert.iter_mut() {
                        *coord = parse_f32(&mut tokens)?;
                    }
                }
                expect("endloop", &mut tokens)?;
                expect("endfacet", &mut tokens)?;
                tris.push(tri);
            }
            Some(&t) => return Err(Error::StlFormat(format!("unexpected token '{t}'"))),
            None => return Err(Error::StlFormat("missing 'endsolid'".into())),
        }
    }
    Ok(tris)
}

fn parse_f32(tokens: &mut std::iter::Peekable<std::str::SplitWhitespace>) -> Result<f32> {
    let t = tokens
        .next()
        .ok_or_else(|| Error::StlFormat("expected number, found end of file".into()))?;
    t.parse::<f32>()
        .map_err(|_| Error::StlFormat(format!("bad number '{t}'")))
}

/// Builds an indexed mesh from raw facets, deduplicating vertices on exact
/// bit equality of the file coordinates.
pub fn index_triangles(tris: &[RawTriangle]) -> Result<Mesh> {
    let mut index: HashMap<[u32; 3], usize> = HashMap::new();
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces = Vec::with_capacity(tris.len());
    for tri in tris {
        let mut f = [0usize; 3];
        for (k, v) in tri.iter().enumerate() {
            let key = [v[0].to_bits(), v[1].to_bits(), v[2].to_bits()];
            let idx = *index.entry(key).or_insert_with(|| {
                vertices.push(Point3::new(v[0] as f64, v[1] as f64, v[2] as f64));
                vertices.len() - 1
            });
            f[k] = idx;
        }
        faces.push(f);
    }
    Mesh::new(vertices, faces)
}

pub fn write_binary(mesh: &Mesh, out: &mut dyn Write) -> Result<()> {
    let mut header = [0u8; 80];
    let tag = b"fording hull";
    header[..tag.len()].copy_from_slice(tag);
    out.write_all(&header)?;
    out.write_all(&(mesh.faces.len() as u32).to_le_bytes())?;
    for fi in 0..mesh.faces.len() {
        let n = mesh.face_normal(fi);
        for c in 0..3 {
            out.write_all(&(n[c] as f32).to_le_bytes())?;
        }
        for p in mesh.face_vertices(fi) {
            for c in 0..3 {
                out.write_all(&(p[c] as f32).to_le_bytes())?;
            }
        }
        out.write_all(&0u16.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_ascii(mesh: &Mesh, name: &str, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "solid {name}")?;
    for fi in 0..mesh.faces.len() {
        let n = mesh.face_normal(fi);
        writeln!(out, "  facet normal {} {} {}", n.x as f32, n.y as f32, n.z as f32)?;
        writeln!(out, "    outer loop")?;
        for p in mesh.face_vertices(fi) {
            writeln!(
                out,
                "      vertex {} {} {}",
                p.x as f32, p.y as f32, p.z as f32
            )?;
        }
        writeln!(out, "    endloop")?;
        writeln!(out, "  endfacet")?;
    }
    writeln!(out, "endsolid {name}")?;
    Ok(())
}
