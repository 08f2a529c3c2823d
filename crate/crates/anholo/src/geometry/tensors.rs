use crate::linalg::{t3, T3};

use super::connection::DConn;
use super::metric::GeomPoint;
use super::{max_abs3, vals2, vals3, Arr3, Arr4};

/// Full-frame torsion T[D][X][Y] = Γ[D][Y][X] − Γ[D][X][Y] − W^D_XY, i.e. the
/// c_D component of D_X Y − D_Y X − [X, Y].
pub fn full_torsion(full: &T3, gp: &GeomPoint) -> T3 {
    let r = gp.rank();
    let k = full[0][0][0].order();
    t3(r, r, r, |d, x, y| &(&full[d][y][x] - &full[d][x][y]) - &gp.cf.frame.w[d][x][y].truncate(k))
}

/// Full-frame nonmetricity Q[X][Y][Z] = −(D_X G)(c_Y, c_Z).
pub fn full_nonmetricity(full: &T3, gp: &GeomPoint) -> T3 {
    let r = gp.rank();
    let k = full[0][0][0].order();
    let gm = gp.full_metric();
    t3(r, r, r, |x, y, z| {
        let mut acc = gp.d(x, &gm[y][z]);
        for f in 0..r {
            acc = &acc - &(&full[f][y][x] * &gm[f][z].truncate(k));
            acc = &acc - &(&full[f][z][x] * &gm[y][f].truncate(k));
        }
        -&acc
    })
}

/// Full-frame curvature R[D][B][X][Y] = c^D ⌋ R(c_X, c_Y) c_B. Needs jets of
/// order ≥ 1 in `full`.
pub fn full_curvature(full: &T3, gp: &GeomPoint) -> Arr4 {
    let r = gp.rank();
    let w = &gp.cf.frame.w;
    let mut out = vec![vec![vec![vec![0.0; r]; r]; r]; r];
    let dv: Vec<Vec<Vec<Vec<f64>>>> = (0..r)
        .map(|x| (0..r).map(|d| (0..r).map(|b| (0..r).map(|y| gp.d(x, &full[d][b][y]).value()).collect()).collect()).collect())
        .collect();
    let v = vals3(full);
    for d in 0..r {
        for b in 0..r {
            for x in 0..r {
                for y in 0..r {
                    let mut s = dv[x][d][b][y] - dv[y][d][b][x];
                    for f in 0..r {
                        s += v[f][b][y] * v[d][f][x] - v[f][b][x] * v[d][f][y];
                        s -= w[f][x][y].value() * v[d][b][f];
                    }
                    out[d][b][x][y] = s;
                }
            }
        }
    }
    out
}

/// The five d-torsion blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionBlocks {
    /// T^a'_b'c' = L^a'_b'c' − L^a'_c'b'
    pub hhh: Arr3,
    /// T^a'_b'a = K^a'_b'a
    pub hhv: Arr3,
    /// T^a_b'c' = Ω^a_b'c'
    pub vhh: Arr3,
    /// T^a_bb' = ∂_b N^a_b' − L^a_bb'
    pub vvh: Arr3,
    /// T^a_bc = K^a_bc − K^a_cb
    pub vvv: Arr3,
}

impl TorsionBlocks {
    pub fn max_abs(&self) -> f64 {
        [&self.hhh, &self.hhv, &self.vhh, &self.vvh, &self.vvv].iter().map(|t| max_abs3(t)).fold(0.0, f64::max)
    }
}

pub fn torsion(conn: &DConn, gp: &GeomPoint) -> TorsionBlocks {
    let (mh, mv) = (conn.mh, conn.mv);
    let c = conn.values();
    let cf = &gp.cf;
    let hhh = (0..mh).map(|a| (0..mh).map(|b| (0..mh).map(|e| c.lh[a][b][e] - c.lh[a][e][b]).collect()).collect()).collect();
    let vhh = vals3(&cf.omega);
    let vvh = (0..mv).map(|a| (0..mv).map(|b| (0..mh).map(|bp| cf.dn[a][bp][b].value() - c.lv[a][b][bp]).collect()).collect()).collect();
    let vvv = (0..mv).map(|a| (0..mv).map(|b| (0..mv).map(|e| c.kv[a][b][e] - c.kv[a][e][b]).collect()).collect()).collect();
    TorsionBlocks { hhh, hhv: c.kh, vhh, vvh, vvv }
}

/// Nonmetricity split into the four compatibility conditions: components of
/// Q = −D G on (direction type, metric block).
#[derive(Clone, Debug, PartialEq)]
pub struct NonmetricityBlocks {
    /// −D_{z_c'} g_a'b' as [c'][a'][b']
    pub h_on_g: Arr3,
    /// −D_{v_c} g_a'b' as [c][a'][b']
    pub v_on_g: Arr3,
    /// −D_{z_c'} h_ab as [c'][a][b]
    pub h_on_h: Arr3,
    /// −D_{v_c} h_ab as [c][a][b]
    pub v_on_h: Arr3,
}

impl NonmetricityBlocks {
    /// max |residual| of each condition, in the order above.
    pub fn residuals(&self) -> [f64; 4] {
        [max_abs3(&self.h_on_g), max_abs3(&self.v_on_g), max_abs3(&self.h_on_h), max_abs3(&self.v_on_h)]
    }

    pub fn max_abs(&self) -> f64 {
        self.residuals().iter().cloned().fold(0.0, f64::max)
    }
}

pub fn nonmetricity(conn: &DConn, gp: &GeomPoint) -> NonmetricityBlocks {
    split_nonmetricity(&vals3(&full_nonmetricity(&conn.full(), gp)), gp.mh(), gp.mv())
}

pub fn split_nonmetricity(q: &Arr3, mh: usize, mv: usize) -> NonmetricityBlocks {
    let blk = |xo: usize, xn: usize, o: usize, n: usize| -> Arr3 {
        (0..xn).map(|x| (0..n).map(|a| (0..n).map(|b| q[xo + x][o + a][o + b]).collect()).collect()).collect()
    };
    NonmetricityBlocks { h_on_g: blk(0, mh, 0, mh), v_on_g: blk(mh, mv, 0, mh), h_on_h: blk(0, mh, mh, mv), v_on_h: blk(mh, mv, mh, mv) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvatureMode {
    /// block formulas without structure-function terms
    NoStructureTerms,
    /// adds the terms from the structure functions in [z_a, z_b]
    Complete,
}

/// d-curvatures with Ricci, scalar and Einstein contractions.
#[derive(Clone, Debug)]
pub struct CurvatureReport {
    /// R^a'_e'b'c'
    pub r_h: Arr4,
    /// R^a_bb'e'
    pub r_v: Arr4,
    /// P^a'_e'b'a
    pub p_h: Arr4,
    /// P^c_ba'a
    pub p_v: Arr4,
    /// S^a'_b'bc
    pub s_h: Arr4,
    /// S^a_bcd
    pub s_v: Arr4,
    /// Ricci d-tensor over the adapted frame (blocks R_a'b', R_a'a, R_aa', S_ab)
    pub ricci: Vec<Vec<f64>>,
    pub scalar: f64,
    pub einstein: Vec<Vec<f64>>,
}

impl CurvatureReport {
    pub fn max_abs(&self) -> f64 {
        [&self.r_h, &self.r_v, &self.p_h, &self.p_v, &self.s_h, &self.s_v].iter().map(|t| super::max_abs4(t)).fold(0.0, f64::max)
    }

    /// Largest violation of antisymmetry in the last two lower indices of the
    /// R and S blocks.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut w = 0.0_f64;
        for t in [&self.r_h, &self.r_v, &self.s_h, &self.s_v] {
            for a in t {
                for b in a {
                    for (i, row) in b.iter().enumerate() {
                        for (j, v) in row.iter().enumerate() {
                            w = w.max((v + b[j][i]).abs());
                        }
                    }
                }
            }
        }
        w
    }

    /// max |R_AB − R_BA| over mixed blocks.
    pub fn ricci_asymmetry(&self) -> f64 {
        let r = self.ricci.len();
        let mut w = 0.0_f64;
        for i in 0..r {
            for j in 0..r {
                w = w.max((self.ricci[i][j] - self.ricci[j][i]).abs());
            }
        }
        w
    }
}

/// Six d-curvature blocks from the connection coefficients. `conn` must carry
/// jets of order ≥ 1.
pub fn curvature(conn: &DConn, gp: &GeomPoint, mode: CurvatureMode) -> CurvatureReport {
    let (mh, mv) = (conn.mh, conn.mv);
    let cf = &gp.cf;
    let v = conn.values();
    let om = vals3(&cf.omega);
    let dn: Arr3 = vals3(&cf.dn);
    // z_X / v_X derivatives of each block, dX[x][..]
    let der = |t: &T3, dirs: std::ops::Range<usize>| -> Vec<Arr3> {
        dirs.map(|x| t.iter().map(|m| m.iter().map(|r| r.iter().map(|j| gp.d(x, j).value()).collect()).collect()).collect()).collect()
    };
    let zlh = der(&conn.lh, 0..mh);
    let vlh = der(&conn.lh, mh..mh + mv);
    let zlv = der(&conn.lv, 0..mh);
    let vlv = der(&conn.lv, mh..mh + mv);
    let zkh = der(&conn.kh, 0..mh);
    let vkh = der(&conn.kh, mh..mh + mv);
    let zkv = der(&conn.kv, 0..mh);
    let vkv = der(&conn.kv, mh..mh + mv);
    // mixed torsion entering the P-blocks: ∂_a N^b_b' − L^b_ab', stored [b][b'][a]
    let tm: Arr3 = (0..mv).map(|b| (0..mh).map(|bp| (0..mv).map(|a| dn[b][bp][a] - v.lv[b][a][bp]).collect()).collect()).collect();
    let (lh, lv, kh, kv) = (&v.lh, &v.lv, &v.kh, &v.kv);
    let c = vals3(&cf.c);
    let nn = vals2(&cf.nn);
    let complete = mode == CurvatureMode::Complete;

    let r_h: Arr4 = (0..mh)
        .map(|a| {
            (0..mh)
                .map(|e| {
                    (0..mh)
                        .map(|b| {
                            (0..mh)
                                .map(|cc| {
                                    let mut s = zlh[cc][a][e][b] - zlh[b][a][e][cc];
                                    for d in 0..mh {
                                        s += lh[d][e][b] * lh[a][d][cc] - lh[d][e][cc] * lh[a][d][b];
                                    }
                                    for x in 0..mv {
                                        s -= kh[a][e][x] * om[x][b][cc];
                                    }
                                    if complete {
                                        for f in 0..mh {
                                            s -= c[f][cc][b] * lh[a][e][f];
                                            for d in 0..mv {
                                                s -= c[f][cc][b] * nn[d][f] * kh[a][e][d];
                                            }
                                        }
                                    }
                                    s
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let r_v: Arr4 = (0..mv)
        .map(|a| {
            (0..mv)
                .map(|b| {
                    (0..mh)
                        .map(|bp| {
                            (0..mh)
                                .map(|ep| {
                                    let mut s = zlv[ep][a][b][bp] - zlv[bp][a][b][ep];
                                    for cc in 0..mv {
                                        s += lv[cc][b][bp] * lv[a][cc][ep] - lv[cc][b][ep] * lv[a][cc][bp];
                                        s -= kv[a][b][cc] * om[cc][bp][ep];
                                    }
                                    if complete {
                                        for f in 0..mh {
                                            s -= c[f][ep][bp] * lv[a][b][f];
                                            for d in 0..mv {
                                                s -= c[f][ep][bp] * nn[d][f] * kv[a][b][d];
                                            }
                                        }
                                    }
                                    s
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let p_h: Arr4 = (0..mh)
        .map(|ap| {
            (0..mh)
                .map(|ep| {
                    (0..mh)
                        .map(|bp| {
                            (0..mv)
                                .map(|a| {
                                    let mut inner = zkh[bp][ap][ep][a];
                                    for d in 0..mh {
                                        inner += lh[ap][d][bp] * kh[d][ep][a] - lh[d][ep][bp] * kh[ap][d][a];
                                    }
                                    for cc in 0..mv {
                                        inner -= lv[cc][a][bp] * kh[ap][ep][cc];
                                    }
                                    let mut s = vlh[a][ap][ep][bp] - inner;
                                    for b in 0..mv {
                                        s += kh[ap][ep][b] * tm[b][bp][a];
                                    }
                                    s
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let p_v: Arr4 = (0..mv)
        .map(|cc| {
            (0..mv)
                .map(|b| {
                    (0..mh)
                        .map(|ap| {
                            (0..mv)
                                .map(|a| {
                                    let mut inner = zkv[ap][cc][b][a];
                                    for d in 0..mv {
                                        inner += lv[cc][d][ap] * kv[d][b][a] - lv[d][b][ap] * kv[cc][d][a] - lv[d][a][ap] * kv[cc][b][d];
                                    }
                                    let mut s = vlv[a][cc][b][ap] - inner;
                                    for d in 0..mv {
                                        s += kv[cc][b][d] * tm[d][ap][a];
                                    }
                                    s
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let s_h: Arr4 = (0..mh)
        .map(|ap| {
            (0..mh)
                .map(|bp| {
                    (0..mv)
                        .map(|b| {
                            (0..mv)
                                .map(|cc| {
                                    let mut s = vkh[cc][ap][bp][b] - vkh[b][ap][bp][cc];
                                    for e in 0..mh {
                                        s += kh[e][bp][b] * kh[ap][e][cc] - kh[e][bp][cc] * kh[ap][e][b];
                                    }
                                    s
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let s_v: Arr4 = (0..mv)
        .map(|a| {
            (0..mv)
                .map(|b| {
                    (0..mv)
                        .map(|cc| {
                            (0..mv)
                                .map(|d| {
                                    let mut s = vkv[d][a][b][cc] - vkv[cc][a][b][d];
                                    for e in 0..mv {
                                        s += kv[e][b][cc] * kv[a][e][d] - kv[e][b][d] * kv[a][e][cc];
                                    }
                                    s
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let r = mh + mv;
    let mut ricci = vec![vec![0.0; r]; r];
    for a in 0..mh {
        for b in 0..mh {
            ricci[a][b] = (0..mh).map(|cc| r_h[cc][a][b][cc]).sum();
        }
        for x in 0..mv {
            ricci[a][mh + x] = -(0..mh).map(|bp| p_h[bp][a][bp][x]).sum::<f64>();
            ricci[mh + x][a] = (0..mv).map(|b| p_v[b][x][a][b]).sum();
        }
    }
    for a in 0..mv {
        for b in 0..mv {
            ricci[mh + a][mh + b] = (0..mv).map(|cc| s_v[cc][a][b][cc]).sum();
        }
    }
    let gi = vals2(&gp.ginv);
    let hi = vals2(&gp.hinv);
    let mut scalar = 0.0;
    for a in 0..mh {
        for b in 0..mh {
            scalar += gi[a][b] * ricci[a][b];
        }
    }
    for a in 0..mv {
        for b in 0..mv {
            scalar += hi[a][b] * ricci[mh + a][mh + b];
        }
    }
    let gm: Vec<Vec<f64>> = vals2(&gp.full_metric());
    let einstein = (0..r).map(|a| (0..r).map(|b| ricci[a][b] - 0.5 * gm[a][b] * scalar).collect()).collect();
    CurvatureReport { r_h, r_v, p_h, p_v, s_h, s_v, ricci, scalar, einstein }
}

/// The same six blocks read off a full-frame curvature array.
pub fn blocks_from_full(rf: &Arr4, mh: usize, mv: usize) -> [Arr4; 6] {
    let mk = |n1: usize, n2: usize, n3: usize, n4: usize, f: &dyn Fn(usize, usize, usize, usize) -> f64| -> Arr4 {
        (0..n1).map(|a| (0..n2).map(|b| (0..n3).map(|c| (0..n4).map(|d| f(a, b, c, d)).collect()).collect()).collect()).collect()
    };
    [
        mk(mh, mh, mh, mh, &|a, e, b, c| rf[a][e][c][b]),
        mk(mv, mv, mh, mh, &|a, b, bp, ep| rf[mh + a][mh + b][ep][bp]),
        mk(mh, mh, mh, mv, &|a, e, bp, x| rf[a][e][mh + x][bp]),
        mk(mv, mv, mh, mv, &|c, b, ap, a| rf[mh + c][mh + b][mh + a][ap]),
        mk(mh, mh, mv, mv, &|a, bp, b, c| rf[a][bp][mh + c][mh + b]),
        mk(mv, mv, mv, mv, &|a, b, c, d| rf[mh + a][mh + b][mh + d][mh + c]),
    ]
}

/// Ricci contraction of a full-frame curvature with the convention R[D][B][X][Y] = c^D ⌋ R(c_X, c_Y) c_B: Ric_BY = Σ_D R[D][B][D][Y].
pub fn full_ricci(rf: &Arr4) -> Vec<Vec<f64>> {
    let r = rf.len();
    (0..r).map(|b| (0..r).map(|y| (0..r).map(|d| rf[d][b][d][y]).sum()).collect()).collect()
}

/// Covariant derivative of a (0,2) tensor over the adapted frame:
/// out[X][A][B] = c_X(T_AB) − Γ^E_AX T_EB − Γ^E_BX T_AE. `t` needs one jet order
/// more than `full`.
pub fn covariant_derivative_02(full: &T3, t: &crate::linalg::Mat, gp: &GeomPoint) -> T3 {
    let r = gp.rank();
    let k = full[0][0][0].order();
    t3(r, r, r, |x, a, b| {
        let mut acc = gp.d(x, &t[a][b]).truncate(k);
        for e in 0..r {
            acc = &acc - &(&full[e][a][x] * &t[e][b].truncate(k));
            acc = &acc - &(&full[e][b][x] * &t[a][e].truncate(k));
        }
        acc
    })
}

/// Covariant derivative of an endomorphism F (F c_A = F[B][A] c_B):
/// out[X][B][A] = c_X(F^B_A) + Γ^B_EX F^E_A − F^B_E Γ^E_AX.
pub fn covariant_derivative_endo(full: &T3, f: &crate::linalg::Mat, gp: &GeomPoint) -> T3 {
    let r = gp.rank();
    let k = full[0][0][0].order();
    t3(r, r, r, |x, b, a| {
        let mut acc = gp.d(x, &f[b][a]).truncate(k);
        for e in 0..r {
            acc = &acc + &(&full[b][e][x] * &f[e][a].truncate(k));
            acc = &acc - &(&f[b][e].truncate(k) * &full[e][a][x]);
        }
        acc
    })
}
