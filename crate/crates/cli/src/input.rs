use anyhow::{bail, Context, Result};
use ptopo_core::io::{read_raw_volume, sidecar_path};
use ptopo_core::{Hierarchy, ScalarField, VolumeHeader};

use crate::InputArgs;

/// Parses `X,Y,Z` or `X,Y` vertex counts.
pub fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let dims = match parts.as_slice() {
        [x, y] => [*x, *y, 1],
        [x, y, z] => [*x, *y, *z],
        _ => return Err(format!("expected X,Y,Z or X,Y, got `{s}`")),
    };
    if dims.contains(&0) {
        return Err("dims must be positive".into());
    }
    Ok(dims)
}

/// Header from flags, falling back to the `<input>.json` sidecar for
/// whatever is missing.
fn header(args: &InputArgs) -> Result<VolumeHeader> {
    if let (Some(dims), Some(dtype)) = (args.dims, args.dtype) {
        return Ok(VolumeHeader { dims, dtype });
    }
    let path = sidecar_path(&args.input);
    if !path.exists() {
        bail!(
            "--dims and --dtype are required when {} does not exist",
            path.display()
        );
    }
    let side = VolumeHeader::read_sidecar(&path)?;
    Ok(VolumeHeader {
        dims: args.dims.unwrap_or(side.dims),
        dtype: args.dtype.unwrap_or(side.dtype),
    })
}

pub fn load(args: &InputArgs) -> Result<(ScalarField, Hierarchy)> {
    let header = header(args)?;
    let field = read_raw_volume(&args.input, &header)
        .with_context(|| format!("reading {}", args.input.display()))?;
    if field.verts()[0] < 2 || field.verts()[1] < 2 {
        bail!("the grid needs at least 2 vertices along x and y");
    }
    let hierarchy = Hierarchy::build(field.cells(), field.dimension(), None)?;
    Ok((field, hierarchy))
}
