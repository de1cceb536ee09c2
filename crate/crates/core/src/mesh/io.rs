//! Plain-text mesh format.
//!
//! ```text
//! simplexmesh <tdim> <gdim>
//! <num_vertices> <num_cells>
//! <gdim reals per vertex line>
//! <tdim + 1 vertex indices per cell line>
//! cell_markers              (optional)
//! <one marker per cell line>
//! facet_markers             (optional)
//! <sorted facet vertex tuple> <marker>
//! ```
//!
//! Reals are written with 17 significant digits so that reading back a
//! written file reproduces every coordinate bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Mesh, MeshError, ReferenceShape};

pub fn write_mesh(mesh: &Mesh, mut out: impl Write) -> Result<(), MeshError> {
    let tdim = mesh.tdim();
    writeln!(out, "simplexmesh {} {}", tdim, mesh.gdim())?;
    writeln!(out, "{} {}", mesh.num_vertices(), mesh.num_cells())?;
    for v in 0..mesh.num_vertices() {
        let line: Vec<String> = mesh.vertex(v).iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    for c in 0..mesh.num_cells() {
        let line: Vec<String> = mesh.cell_vertices(c).iter().map(usize::to_string).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    if mesh.cell_markers().iter().any(|&m| m != 0) {
        writeln!(out, "cell_markers")?;
        for m in mesh.cell_markers() {
            writeln!(out, "{m}")?;
        }
    }
    if mesh.facet_markers().iter().any(|&m| m != 0) {
        writeln!(out, "facet_markers")?;
        for (f, &m) in mesh.facet_markers().iter().enumerate() {
            if m != 0 {
                let verts: Vec<String> = mesh.entity_vertices(tdim - 1, f).iter().map(usize::to_string).collect();
                writeln!(out, "{} {m}", verts.join(" "))?;
            }
        }
    }
    Ok(())
}

pub fn write_mesh_file(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mesh(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_mesh_file(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    read_mesh(BufReader::new(File::open(path)?))
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

fn numbers<T: std::str::FromStr>(line: usize, text: &str, expected: usize) -> Result<Vec<T>, MeshError> {
    let values: Vec<T> = text
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| parse_err(line, format!("cannot parse '{t}'"))))
        .collect::<Result<_, _>>()?;
    if values.len() != expected {
        return Err(parse_err(line, format!("expected {expected} values, found {}", values.len())));
    }
    Ok(values)
}

pub fn read_mesh(input: impl Read) -> Result<Mesh, MeshError> {
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    let mut it = lines.iter();
    let (ln, header) = it.next().ok_or_else(|| parse_err(1, "empty mesh file"))?;
    let words: Vec<&str> = header.split_whitespace().collect();
    if words.len() != 3 || words[0] != "simplexmesh" {
        return Err(parse_err(*ln, "expected 'simplexmesh <tdim> <gdim>'"));
    }
    let dims = numbers::<usize>(*ln, &words[1..].join(" "), 2)?;
    let shape = ReferenceShape::from_tdim(dims[0]).ok_or_else(|| parse_err(*ln, "tdim must be 1, 2 or 3"))?;
    let gdim = dims[1];

    let (ln, counts) = it.next().ok_or_else(|| parse_err(*ln + 1, "missing vertex and cell counts"))?;
    let counts = numbers::<usize>(*ln, counts, 2)?;
    let (nv, nc) = (counts[0], counts[1]);

    let mut coords = Vec::with_capacity(nv * gdim);
    for _ in 0..nv {
        let (ln, text) = it.next().ok_or_else(|| parse_err(0, "unexpected end of file in vertices"))?;
        coords.extend(numbers::<f64>(*ln, text, gdim)?);
    }
    let mut cells = Vec::with_capacity(nc * shape.num_vertices());
    for _ in 0..nc {
        let (ln, text) = it.next().ok_or_else(|| parse_err(0, "unexpected end of file in cells"))?;
        cells.extend(numbers::<usize>(*ln, text, shape.num_vertices())?);
    }

    let mut cell_markers = None;
    let mut facet_markers = Vec::new();
    let mut section = None;
    for (ln, text) in it {
        match text.trim() {
            "cell_markers" => {
                section = Some("cell");
                cell_markers = Some(Vec::with_capacity(nc));
            }
            "facet_markers" => section = Some("facet"),
            _ => match section {
                Some("cell") => {
                    let m = numbers::<usize>(*ln, text, 1)?;
                    cell_markers.as_mut().expect("section opened").push(m[0]);
                }
                Some(_) => {
                    let v = numbers::<usize>(*ln, text, shape.tdim() + 1)?;
                    facet_markers.push((*ln, v));
                }
                None => return Err(parse_err(*ln, "trailing data after cells")),
            },
        }
    }

    let mut mesh = Mesh::from_flat(shape, gdim, coords, cells)?;
    if let Some(markers) = cell_markers {
        mesh.set_input_cell_markers(&markers)?;
    }
    let fd = shape.tdim() - 1;
    for (ln, entry) in facet_markers {
        let (verts, marker) = entry.split_at(fd + 1);
        let f = mesh.find_entity(verts).ok_or_else(|| parse_err(ln, format!("no facet with vertices {verts:?}")))?;
        mesh.set_facet_marker(f, marker[0])?;
    }
    Ok(mesh)
}
