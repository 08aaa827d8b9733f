use crate::math::Vec3;

use super::{Aabb, GeometryError};

/// Triangles with area at or below this (m²) are dropped at load.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    pub name: String,
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    degenerate_dropped: usize,
}

impl TriangleMesh {
    /// Checks indices and drops degenerate triangles.
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<Self, GeometryError> {
        if let Some(bad) = triangles
            .iter()
            .flatten()
            .find(|&&i| i as usize >= vertices.len())
        {
            return Err(GeometryError::IndexOutOfRange {
                line: 0,
                index: *bad as i64,
                count: vertices.len(),
            });
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::MalformedRecord {
                line: 0,
                message: "non-finite vertex".into(),
            });
        }
        let before = triangles.len();
        let triangles: Vec<[u32; 3]> = triangles
            .into_iter()
            .filter(|t| {
                let [a, b, c] = t.map(|i| vertices[i as usize]);
                0.5 * (b - a).cross(c - a).norm() > DEGENERATE_AREA
            })
            .collect();
        let degenerate_dropped = before - triangles.len();
        Ok(TriangleMesh {
            name: name.into(),
            vertices,
            triangles,
            degenerate_dropped,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, index: usize) -> [Vec3; 3] {
        self.triangles[index].map(|i| self.vertices[i as usize])
    }

    /// Number of degenerate triangles removed when the mesh was built.
    pub fn degenerate_dropped(&self) -> usize {
        self.degenerate_dropped
    }

    pub fn bounds(&self) -> Option<Aabb> {
        let mut it = self.vertices.iter();
        let first = *it.next()?;
        Some(it.fold(Aabb::point(first), |b, v| b.grow(*v)))
    }
}

/// Parses the `v`/`f` subset of Wavefront OBJ.
///
/// Faces with more than three vertices are fan-triangulated around their
/// first vertex; `v/vt/vn` references use only the position index; negative
/// indices count back from the most recent vertex. Other records are ignored.
pub fn parse_obj(text: &str) -> Result<TriangleMesh, GeometryError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut fields = content.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<&str> = fields.collect();
                if coords.len() < 3 {
                    return Err(GeometryError::MalformedRecord {
                        line,
                        message: format!("vertex needs 3 coordinates, got {}", coords.len()),
                    });
                }
                let mut xyz = [0.0; 3];
                for (slot, tok) in xyz.iter_mut().zip(&coords) {
                    *slot = match tok.parse::<f64>() {
                        Ok(v) if v.is_finite() => v,
                        _ => {
                            return Err(GeometryError::MalformedRecord {
                                line,
                                message: format!("bad coordinate {tok:?}"),
                            })
                        }
                    };
                }
                vertices.push(Vec3::from(xyz));
            }
            Some("f") => {
                let refs = fields
                    .map(|f| resolve_index(f, vertices.len(), line))
                    .collect::<Result<Vec<u32>, _>>()?;
                if refs.len() < 3 {
                    return Err(GeometryError::MalformedRecord {
                        line,
                        message: format!("face needs at least 3 vertices, got {}", refs.len()),
                    });
                }
                for k in 1..refs.len() - 1 {
                    triangles.push([refs[0], refs[k], refs[k + 1]]);
                }
            }
            _ => {}
        }
    }
    let mesh = TriangleMesh::new("mesh", vertices, triangles)?;
    if mesh.degenerate_dropped > 0 {
        log::warn!("dropped {} degenerate triangles", mesh.degenerate_dropped);
    }
    Ok(mesh)
}

fn resolve_index(field: &str, vertex_count: usize, line: usize) -> Result<u32, GeometryError> {
    let head = field.split('/').next().unwrap_or("");
    let raw: i64 = head.parse().map_err(|_| GeometryError::MalformedRecord {
        line,
        message: format!("bad face index {field:?}"),
    })?;
    let out_of_range = GeometryError::IndexOutOfRange {
        line,
        index: raw,
        count: vertex_count,
    };
    let resolved = match raw {
        0 => return Err(out_of_range),
        r if r > 0 => r - 1,
        r => vertex_count as i64 + r,
    };
    if resolved < 0 || resolved >= vertex_count as i64 {
        return Err(out_of_range);
    }
    Ok(resolved as u32)
}
