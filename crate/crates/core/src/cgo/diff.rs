use num_complex::Complex64;

use crate::geometry::{ComplexField, Domain};

/// Fourth-order central first derivative along one axis; second order in the two outer layers.
fn first(values: &[Complex64], domain: &Domain, along_x: bool) -> Vec<Complex64> {
    let (nx, ny) = (domain.nx, domain.ny);
    let (len, step, spacing) = if along_x {
        (nx, 1, domain.dx())
    } else {
        (ny, nx, domain.dy())
    };
    (0..nx * ny)
        .map(|n| {
            let k = if along_x { n % nx } else { n / nx };
            let at = |o: isize| values[(n as isize + o * step as isize) as usize];
            if k >= 2 && k + 2 < len {
                (at(-2) - at(-1) * 8.0 + at(1) * 8.0 - at(2)) / (12.0 * spacing)
            } else if k >= 1 && k + 1 < len {
                (at(1) - at(-1)) / (2.0 * spacing)
            } else if k == 0 {
                (at(1) - at(0)) / spacing
            } else {
                (at(0) - at(-1)) / spacing
            }
        })
        .collect()
}

/// Fourth-order central second derivative along one axis; zero in the two outer layers.
fn second(values: &[Complex64], domain: &Domain, along_x: bool) -> Vec<Complex64> {
    let (nx, ny) = (domain.nx, domain.ny);
    let (len, step, spacing) = if along_x {
        (nx, 1, domain.dx())
    } else {
        (ny, nx, domain.dy())
    };
    (0..nx * ny)
        .map(|n| {
            let k = if along_x { n % nx } else { n / nx };
            let at = |o: isize| values[(n as isize + o * step as isize) as usize];
            if k >= 2 && k + 2 < len {
                (-at(-2) + at(-1) * 16.0 - at(0) * 30.0 + at(1) * 16.0 - at(2))
                    / (12.0 * spacing * spacing)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

fn field(domain: &Domain, values: Vec<Complex64>) -> ComplexField {
    ComplexField::from_vec(*domain, values).expect("grid shape")
}

/// `d/dx` of a complex field.
pub fn partial_x(f: &ComplexField) -> ComplexField {
    field(f.domain(), first(f.values(), f.domain(), true))
}

/// `d/dy` of a complex field.
pub fn partial_y(f: &ComplexField) -> ComplexField {
    field(f.domain(), first(f.values(), f.domain(), false))
}

/// `d = (d/dx - i d/dy) / 2`.
pub fn partial_z(f: &ComplexField) -> ComplexField {
    let i = Complex64::i();
    partial_x(f).zip_map(&partial_y(f), |a, b| (a - i * b) * 0.5)
}

/// `dbar = (d/dx + i d/dy) / 2`.
pub fn partial_zbar(f: &ComplexField) -> ComplexField {
    let i = Complex64::i();
    partial_x(f).zip_map(&partial_y(f), |a, b| (a + i * b) * 0.5)
}

/// `d^2/dx^2 + d^2/dy^2`.
pub fn laplacian(f: &ComplexField) -> ComplexField {
    let d = f.domain();
    let xx = second(f.values(), d, true);
    let yy = second(f.values(), d, false);
    field(d, xx.iter().zip(&yy).map(|(a, b)| a + b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_a_polynomial() {
        let d = Domain::square(-1.0, 1.0, 41).unwrap();
        let f = ComplexField::from_fn(d, |x, y| Complex64::new(x * x * y, x - y * y * y));
        let z = partial_z(&f);
        let lap = laplacian(&f);
        for n in 0..d.len() {
            let (i, j) = d.ij(n);
            if i < 2 || j < 2 || i + 2 >= d.nx || j + 2 >= d.ny {
                continue;
            }
            let (x, y) = d.coords(n);
            let fx = Complex64::new(2.0 * x * y, 1.0);
            let fy = Complex64::new(x * x, -3.0 * y * y);
            let exact = (fx - Complex64::i() * fy) * 0.5;
            assert!((z.values()[n] - exact).norm() < 1e-12);
            assert!((lap.values()[n] - Complex64::new(2.0 * y, -6.0 * y)).norm() < 1e-10);
        }
    }
}
