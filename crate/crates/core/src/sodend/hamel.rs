use super::field::{position_names, BasicFunction};
use crate::error::{Error, Result};
use crate::expr::{differentiate, simplify, Expr};

fn check_index(f: &BasicFunction, idx: &[usize]) -> Result<()> {
    if let Some(&bad) = idx.iter().find(|&&i| i >= f.n()) {
        return Err(Error::invalid(format!("index {bad} out of range for dimension {}", f.n())));
    }
    Ok(())
}

/// Structure coefficient `γᵏᵢⱼ = (∂ⱼf·δᵏᵢ − ∂ᵢf·δᵏⱼ)/f²` of the frame
/// `Yᵢ = f⁻¹∂/∂xⁱ`, so that `[Yᵢ, Yⱼ] = Σₖ γᵏᵢⱼYₖ`. Indices are zero-based.
pub fn hamel_symbol(f: &BasicFunction, i: usize, j: usize, k: usize) -> Result<Expr> {
    check_index(f, &[i, j, k])?;
    let numerator = match (k == i, k == j) {
        (true, true) | (false, false) => return Ok(Expr::zero()),
        (true, false) => f.partial(j),
        (false, true) => -f.partial(i),
    };
    if numerator.is_const(0.0) {
        return Ok(Expr::zero());
    }
    Ok(simplify(&(numerator / Expr::powi(f.expr().clone(), 2))))
}

/// `Yᵢ g = f⁻¹ ∂g/∂xⁱ`.
pub fn frame_apply(f: &BasicFunction, i: usize, g: &Expr) -> Result<Expr> {
    check_index(f, &[i])?;
    let name = &position_names(f.n())[i];
    Ok(simplify(&(differentiate(g, name) / f.expr().clone())))
}

/// `[Yᵢ, Yⱼ] g` computed directly from the frame.
pub fn frame_bracket(f: &BasicFunction, i: usize, j: usize, g: &Expr) -> Result<Expr> {
    let ij = frame_apply(f, i, &frame_apply(f, j, g)?)?;
    let ji = frame_apply(f, j, &frame_apply(f, i, g)?)?;
    Ok(simplify(&(ij - ji)))
}

/// `Σₖ γᵏᵢⱼ Yₖ g`, the bracket expanded through the Hamel symbols.
pub fn hamel_expansion(f: &BasicFunction, i: usize, j: usize, g: &Expr) -> Result<Expr> {
    (0..f.n()).try_fold(Expr::zero(), |acc, k| Ok(acc + hamel_symbol(f, i, j, k)? * frame_apply(f, k, g)?))
}
