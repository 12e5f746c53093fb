use super::{FieldError, VectorField};

/// Multilinear periodic interpolation of every component at `point`.
pub fn interpolate(f: &VectorField, point: &[f64]) -> Result<Vec<f64>, FieldError> {
    let mut out = vec![0.0; f.grid().dim()];
    interpolate_into(f, point, &mut out)?;
    Ok(out)
}

/// Allocation-free form of [`interpolate`]; `out` holds one value per component.
pub fn interpolate_into(f: &VectorField, point: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
    let grid = f.grid();
    let d = grid.dim();
    if point.len() < d {
        return Err(FieldError::InvalidPoint(format!(
            "{} coordinates for a {d}-d grid",
            point.len()
        )));
    }
    if point[..d].iter().any(|x| !x.is_finite()) {
        return Err(FieldError::InvalidPoint(format!("{:?}", &point[..d])));
    }
    let n = grid.n();
    let h = grid.spacing();
    let l = grid.box_length();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..d {
        let s = point[a].rem_euclid(l) / h;
        let i0 = (s.floor() as usize).min(n - 1);
        lo[a] = i0;
        hi[a] = (i0 + 1) % n;
        frac[a] = (s - i0 as f64).clamp(0.0, 1.0);
    }
    out[..d].iter_mut().for_each(|o| *o = 0.0);
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut flat = 0usize;
        for a in 0..d {
            let upper = (corner >> (d - 1 - a)) & 1 == 1;
            flat = flat * n + if upper { hi[a] } else { lo[a] };
            w *= if upper { frac[a] } else { 1.0 - frac[a] };
        }
        if w == 0.0 {
            continue;
        }
        for (o, comp) in out.iter_mut().zip(f.components()) {
            *o += w * comp.values()[flat];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn reproduces_nodes_exactly() {
        let g = Grid::new(2, 8, 2.0).unwrap();
        let f = VectorField::from_fn(g, |x| vec![(x[0] * 3.1).sin() + x[1], x[0] * x[1]]);
        for i in [0, 9, 37, 63] {
            let x = g.coords(i);
            assert_eq!(interpolate(&f, &x[..2]).unwrap(), f.at(i));
        }
    }

    #[test]
    fn wraps_periodically() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let f = VectorField::from_fn(g, |x| vec![x[0]]);
        let a = interpolate(&f, &[0.3]).unwrap();
        let b = interpolate(&f, &[1.3]).unwrap();
        let c = interpolate(&f, &[-0.7]).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-15 && (a[0] - c[0]).abs() < 1e-15);
    }

    #[test]
    fn nan_point_rejected() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let f = VectorField::zeros(g);
        assert!(matches!(
            interpolate(&f, &[f64::NAN]),
            Err(FieldError::InvalidPoint(_))
        ));
    }
}
