//! Classical tangent-bundle and Riemannian formulas in two dimensions, written
//! directly in coordinates. Jets only supply exact partial derivatives.

#![allow(dead_code)]

use anholo::field::Field;
use anholo::jets::{coordinate_jets, Jet};

type J2 = [[Jet; 2]; 2];

fn inv2(g: &J2) -> J2 {
    let det = &g[0][0] * &g[1][1] - &g[0][1] * &g[1][0];
    let r = det.recip().expect("singular 2×2 matrix");
    [[&g[1][1] * &r, -(&g[0][1] * &r)], [-(&g[1][0] * &r), &g[0][0] * &r]]
}

/// Gaussian curvature of a 2D metric given on coordinate jets, from the
/// Christoffel symbols and the Riemann tensor R^l_ijk = ∂_j Γ^l_ik − ∂_k Γ^l_ij
/// + Γ^l_jm Γ^m_ik − Γ^l_km Γ^m_ij.
pub fn gaussian_curvature(metric: impl Fn(&[Jet]) -> J2, u: [f64; 2]) -> f64 {
    let c = coordinate_jets(&u, 2);
    let g = metric(&c);
    let gi = inv2(&g);
    // Γ_k,ij (first kind), order 1
    let first =
        |k: usize, i: usize, j: usize| -> Jet { (g[j][k].derivative(i) + g[i][k].derivative(j) - g[i][j].derivative(k)).scale(0.5) };
    let gamma = |l: usize, i: usize, j: usize| -> Jet {
        let gi1: [Jet; 2] = [gi[l][0].truncate(1), gi[l][1].truncate(1)];
        &gi1[0] * &first(0, i, j) + &gi1[1] * &first(1, i, j)
    };
    let riemann = |l: usize, i: usize, j: usize, k: usize| -> f64 {
        let mut r = gamma(l, i, k).derivative(j).value() - gamma(l, i, j).derivative(k).value();
        for m in 0..2 {
            r += gamma(l, j, m).value() * gamma(m, i, k).value() - gamma(l, k, m).value() * gamma(m, i, j).value();
        }
        r
    };
    let r1212: f64 = (0..2).map(|l| g[0][l].value() * riemann(l, 1, 0, 1)).sum();
    let det = g[0][0].value() * g[1][1].value() - g[0][1].value() * g[1][0].value();
    r1212 / det
}

/// Classical Lagrange-space data on TM for n = 2 at (x, y).
pub struct ClassicalLagrange {
    /// g_ab = ½ ∂²l/∂y^a∂y^b
    pub g: [[f64; 2]; 2],
    /// G^a = ¼ g^ab (∂²l/∂y^b∂x^k y^k − ∂l/∂x^b)
    pub spray: [f64; 2],
    /// N^a_b = ∂G^a/∂y^b, [a][b]
    pub n: [[f64; 2]; 2],
    /// L^a_bc = ½ g^ad (δ_c g_bd + δ_b g_cd − δ_d g_bc)
    pub l: [[[f64; 2]; 2]; 2],
    /// C^a_bc = ½ g^ad (∂_c g_bd + ∂_b g_cd − ∂_d g_bc) in y
    pub c: [[[f64; 2]; 2]; 2],
    /// Sasaki metric in coordinates (dx, dy)
    pub sasaki: [[f64; 4]; 4],
    /// almost complex structure in coordinates: F(δ_a) = −∂_{y^a}, F(∂_{y^a}) = δ_a; [row][col]
    pub f: [[f64; 4]; 4],
    /// ω = g_ab δy^a ∧ dx^b in coordinates, ω[i][j] = ω(∂_i, ∂_j)
    pub omega: [[f64; 4]; 4],
}

pub fn classical_lagrange(l: &dyn Field, pt: [f64; 4]) -> ClassicalLagrange {
    let c = coordinate_jets(&pt, 4);
    let lj = l.eval_jet(&c).unwrap();
    let x = |k: usize| k;
    let y = |a: usize| 2 + a;
    let gj: J2 = std::array::from_fn(|a| std::array::from_fn(|b| lj.derivative(y(a)).derivative(y(b)).scale(0.5)));
    let gi = inv2(&gj);
    // G^a as jets of order 1
    let rhs: [Jet; 2] = std::array::from_fn(|b| {
        let dyb = lj.derivative(y(b));
        let mut t = lj.derivative(x(b)).truncate(1).scale(-1.0);
        for k in 0..2 {
            t = t + (dyb.derivative(x(k)) * &c[y(k)]).truncate(1);
        }
        t
    });
    let spray_j: [Jet; 2] = std::array::from_fn(|a| (&gi[a][0].truncate(1) * &rhs[0] + &gi[a][1].truncate(1) * &rhs[1]).scale(0.25));
    let spray = [spray_j[0].value(), spray_j[1].value()];
    let n: [[f64; 2]; 2] = std::array::from_fn(|a| std::array::from_fn(|b| spray_j[a].derivative(y(b)).value()));
    let g: [[f64; 2]; 2] = std::array::from_fn(|a| std::array::from_fn(|b| gj[a][b].value()));
    let giv: [[f64; 2]; 2] = std::array::from_fn(|a| std::array::from_fn(|b| gi[a][b].value()));
    let dy = |a: usize, b: usize, e: usize| gj[a][b].derivative(y(e)).value();
    let delta = |a: usize, b: usize, cc: usize| gj[a][b].derivative(x(cc)).value() - (0..2).map(|e| n[e][cc] * dy(a, b, e)).sum::<f64>();
    let lc: [[[f64; 2]; 2]; 2] = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            std::array::from_fn(|cc| (0..2).map(|d| 0.5 * giv[a][d] * (delta(b, d, cc) + delta(cc, d, b) - delta(b, cc, d))).sum())
        })
    });
    let cc3: [[[f64; 2]; 2]; 2] = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            std::array::from_fn(|cc| (0..2).map(|d| 0.5 * giv[a][d] * (dy(b, d, cc) + dy(cc, d, b) - dy(b, cc, d))).sum())
        })
    });
    let mut sasaki = [[0.0; 4]; 4];
    for a in 0..2 {
        for b in 0..2 {
            let mut xx = g[a][b];
            for cc in 0..2 {
                for d in 0..2 {
                    xx += n[cc][a] * g[cc][d] * n[d][b];
                }
            }
            sasaki[a][b] = xx;
            let xy: f64 = (0..2).map(|cc| n[cc][a] * g[cc][b]).sum();
            sasaki[a][2 + b] = xy;
            sasaki[2 + b][a] = xy;
            sasaki[2 + a][2 + b] = g[a][b];
        }
    }
    // F(∂_{y^a}) = ∂_{x^a} − N^b_a ∂_{y^b}; F(∂_{x^a}) = −∂_{y^a} + N^b_a (∂_{x^b} − N^c_b ∂_{y^c})
    let mut f = [[0.0; 4]; 4];
    for a in 0..2 {
        f[a][2 + a] = 1.0;
        for b in 0..2 {
            f[2 + b][2 + a] = -n[b][a];
        }
        f[2 + a][a] -= 1.0;
        for b in 0..2 {
            f[b][a] += n[b][a];
            for cc in 0..2 {
                f[2 + cc][a] -= n[b][a] * n[cc][b];
            }
        }
    }
    let mut omega = [[0.0; 4]; 4];
    for a in 0..2 {
        for b in 0..2 {
            omega[2 + a][b] = g[a][b];
            omega[b][2 + a] = -g[a][b];
            // g_ab N^a_c dx^c ∧ dx^b
            for cc in 0..2 {
                omega[cc][b] += g[a][b] * n[a][cc];
                omega[b][cc] -= g[a][b] * n[a][cc];
            }
        }
    }
    ClassicalLagrange { g, spray, n, l: lc, c: cc3, sasaki, f, omega }
}
