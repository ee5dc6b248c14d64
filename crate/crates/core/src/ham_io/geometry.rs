use crate::error::{Error, Result};

/// Atoms with Cartesian coordinates in Ångström.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub atoms: Vec<(String, [f64; 3])>,
    pub charge: i32,
    pub multiplicity: u32,
}

impl Geometry {
    pub fn new(atoms: Vec<(String, [f64; 3])>) -> Result<Self> {
        for (sym, xyz) in &atoms {
            if xyz.iter().any(|c| !c.is_finite()) {
                return Err(Error::Validation(format!("atom {sym} has non-finite coordinates")));
            }
        }
        Ok(Self {
            atoms,
            charge: 0,
            multiplicity: 1,
        })
    }

    /// Electron count of the neutral-shifted molecule (H and N only).
    pub fn n_electrons(&self) -> Result<usize> {
        let mut z: i64 = 0;
        for (sym, _) in &self.atoms {
            z += match sym.as_str() {
                "H" => 1,
                "He" => 2,
                "C" => 6,
                "N" => 7,
                "O" => 8,
                other => return Err(Error::Unsupported(format!("unknown element '{other}'"))),
            };
        }
        usize::try_from(z - i64::from(self.charge))
            .map_err(|_| Error::Validation("charge exceeds nuclear charge".into()))
    }
}

/// Linear chain of `n` hydrogen atoms along z.
pub fn hydrogen_chain(n: usize, spacing_angstrom: f64) -> Geometry {
    Geometry {
        atoms: (0..n)
            .map(|k| ("H".to_string(), [0.0, 0.0, k as f64 * spacing_angstrom]))
            .collect(),
        charge: 0,
        multiplicity: 1,
    }
}

fn parse_atom(line: &str, line_no: usize) -> Result<(String, [f64; 3])> {
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() < 4 {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("expected 'symbol x y z', found '{line}'"),
        });
    }
    let mut xyz = [0.0; 3];
    for (c, s) in xyz.iter_mut().zip(&f[1..4]) {
        *c = s.parse().map_err(|e| Error::Parse {
            line: line_no,
            msg: format!("bad coordinate '{s}': {e}"),
        })?;
    }
    Ok((f[0].to_string(), xyz))
}

/// Parses one or more concatenated XYZ frames, returning each comment line with its geometry.
pub fn parse_xyz_frames(text: &str) -> Result<Vec<(String, Geometry)>> {
    let lines: Vec<&str> = text.lines().collect();
    let mut frames = Vec::new();
    let mut k = 0;
    while k < lines.len() {
        if lines[k].trim().is_empty() {
            k += 1;
            continue;
        }
        let count: usize = lines[k].trim().parse().map_err(|e| Error::Parse {
            line: k + 1,
            msg: format!("expected an atom count: {e}"),
        })?;
        if k + 2 + count > lines.len() {
            return Err(Error::Parse {
                line: lines.len(),
                msg: format!("frame starting at line {} is truncated", k + 1),
            });
        }
        let comment = lines[k + 1].trim().to_string();
        let atoms = (0..count)
            .map(|a| parse_atom(lines[k + 2 + a], k + 3 + a))
            .collect::<Result<Vec<_>>>()?;
        frames.push((comment, Geometry::new(atoms)?));
        k += 2 + count;
    }
    Ok(frames)
}

/// Parses a single XYZ block.
pub fn parse_xyz(text: &str) -> Result<Geometry> {
    let mut frames = parse_xyz_frames(text)?;
    match frames.len() {
        1 => Ok(frames.remove(0).1),
        k => Err(Error::Validation(format!("expected one XYZ frame, found {k}"))),
    }
}

/// Nine out-of-plane (HNNH dihedral) isomerization geometries of diazene, labeled by angle in degrees.
pub fn diazene_out_of_plane() -> Vec<(f64, Geometry)> {
    bundled(include_str!("../../data/diazene_out_of_plane.xyz"))
}

/// Nine in-plane (NNH angle) isomerization geometries of diazene, labeled by angle in degrees.
pub fn diazene_in_plane() -> Vec<(f64, Geometry)> {
    bundled(include_str!("../../data/diazene_in_plane.xyz"))
}

fn bundled(text: &str) -> Vec<(f64, Geometry)> {
    parse_xyz_frames(text)
        .expect("bundled geometry data is well formed")
        .into_iter()
        .map(|(comment, g)| {
            let angle = comment
                .split_once('=')
                .and_then(|(_, v)| v.trim().parse().ok())
                .expect("bundled frames carry an angle label");
            (angle, g)
        })
        .collect()
}
