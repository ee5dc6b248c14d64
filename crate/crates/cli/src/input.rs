use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use hfsim::error::Context;
use hfsim::ham_io::{core_orbital_basis, hydrogen_sto3g_integrals, parse_fcidump_with_header, parse_xyz};
use hfsim::pipeline::chain_hamiltonian;
use hfsim::scf::MolecularHamiltonian;
use hfsim::{Error, Result};

use crate::args::HamiltonianArgs;

/// Atom count of a chain spec such as `H12`.
pub fn parse_chain(spec: &str) -> Result<usize> {
    spec.strip_prefix('H')
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|&n| n >= 2)
        .ok_or_else(|| Error::Validation(format!("chain spec `{spec}` should look like H6")))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(Error::from).context(|| path.display().to_string())
}

fn half(electrons: usize) -> Result<usize> {
    if !electrons.is_multiple_of(2) {
        return Err(Error::Unsupported(format!(
            "{electrons} electrons cannot fill doubly occupied orbitals; pass --eta"
        )));
    }
    Ok(electrons / 2)
}

/// Hamiltonian and occupied-orbital count selected by the flags.
pub fn load_hamiltonian(args: &HamiltonianArgs) -> Result<(MolecularHamiltonian, usize)> {
    let (ham, electrons) = if let Some(spec) = &args.chain {
        let n = parse_chain(spec)?;
        (chain_hamiltonian(n, args.spacing)?, Some(n))
    } else if let Some(path) = &args.fcidump {
        let (ham, header) = parse_fcidump_with_header(&read(path)?).context(|| path.display().to_string())?;
        (ham, header.nelec)
    } else if let Some(path) = &args.xyz {
        let geom = parse_xyz(&read(path)?).context(|| path.display().to_string())?;
        let ao = hydrogen_sto3g_integrals(&geom)?;
        (core_orbital_basis(&ao)?.1, Some(geom.n_electrons()?))
    } else {
        return Err(Error::Validation("one of --chain, --fcidump or --xyz is required".into()));
    };
    let eta = match (args.eta, electrons) {
        (Some(eta), _) => eta,
        (None, Some(e)) => half(e)?,
        (None, None) => return Err(Error::Validation("the FCIDUMP header has no NELEC; pass --eta".into())),
    };
    Ok((ham, eta))
}

/// Buffered writer to `path`, or stdout when absent.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(Error::from).context(|| p.display().to_string())?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Writes the schema line that precedes every CSV table.
pub fn schema_line(w: &mut dyn Write, schema: &str) -> Result<()> {
    writeln!(w, "# schema: {schema}")?;
    Ok(())
}
