use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::jets::{coordinate_jets, Jet};
use crate::linalg::{t3, Mat, T3};

use super::metric::GeomPoint;
use super::tensors::{full_nonmetricity, full_torsion};
use super::{vals3, Arr3};

/// The four blocks of a d-connection, each indexed [upper][lower][direction]:
/// L^a'_b'c' (`lh`), L^a_bc' (`lv`), K^a'_b'c (`kh`), K^a_bc (`kv`).
#[derive(Clone, Debug)]
pub struct DConn {
    pub mh: usize,
    pub mv: usize,
    pub lh: T3,
    pub lv: T3,
    pub kh: T3,
    pub kv: T3,
}

impl DConn {
    pub fn zero(mh: usize, mv: usize, like: &Jet) -> DConn {
        let z = like.lift(0.0);
        DConn {
            mh,
            mv,
            lh: t3(mh, mh, mh, |_, _, _| z.clone()),
            lv: t3(mv, mv, mh, |_, _, _| z.clone()),
            kh: t3(mh, mh, mv, |_, _, _| z.clone()),
            kv: t3(mv, mv, mv, |_, _, _| z.clone()),
        }
    }

    pub fn order(&self) -> usize {
        self.lh.first().or(self.kv.first()).map(|m| m[0][0].order()).unwrap_or(0)
    }

    /// Full coefficient array Γ[D][B][X]; mixed blocks vanish.
    pub fn full(&self) -> T3 {
        let (mh, mv) = (self.mh, self.mv);
        let r = mh + mv;
        let z = self.lh.first().or(self.kv.first()).map(|m| m[0][0].lift(0.0)).expect("empty connection");
        t3(r, r, r, |d, b, x| match (d < mh, b < mh, x < mh) {
            (true, true, true) => self.lh[d][b][x].clone(),
            (false, false, true) => self.lv[d - mh][b - mh][x].clone(),
            (true, true, false) => self.kh[d][b][x - mh].clone(),
            (false, false, false) => self.kv[d - mh][b - mh][x - mh].clone(),
            _ => z.clone(),
        })
    }

    /// d-blocks of a full coefficient array (mixed blocks are dropped).
    pub fn from_full(full: &T3, mh: usize, mv: usize) -> DConn {
        DConn {
            mh,
            mv,
            lh: t3(mh, mh, mh, |a, b, c| full[a][b][c].clone()),
            lv: t3(mv, mv, mh, |a, b, c| full[mh + a][mh + b][c].clone()),
            kh: t3(mh, mh, mv, |a, b, c| full[a][b][mh + c].clone()),
            kv: t3(mv, mv, mv, |a, b, c| full[mh + a][mh + b][mh + c].clone()),
        }
    }

    pub fn map2(&self, o: &DConn, f: impl Fn(&Jet, &Jet) -> Jet) -> DConn {
        let m = |a: &T3, b: &T3| -> T3 {
            a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.iter().zip(q).map(|(s, t)| f(s, t)).collect()).collect()).collect()
        };
        DConn { mh: self.mh, mv: self.mv, lh: m(&self.lh, &o.lh), lv: m(&self.lv, &o.lv), kh: m(&self.kh, &o.kh), kv: m(&self.kv, &o.kv) }
    }

    pub fn add(&self, o: &DConn) -> DConn {
        self.map2(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &DConn) -> DConn {
        self.map2(o, |a, b| a - b)
    }

    pub fn truncate(&self, order: usize) -> DConn {
        self.map2(self, |a, _| a.truncate(order))
    }

    pub fn max_abs_diff(&self, o: &DConn) -> f64 {
        let d = self.sub(o);
        [&d.lh, &d.lv, &d.kh, &d.kv].iter().flat_map(|t| t.iter().flatten().flatten()).fold(0.0_f64, |a, j| a.max(j.value().abs()))
    }

    pub fn values(&self) -> DConnValues {
        DConnValues { lh: vals3(&self.lh), lv: vals3(&self.lv), kh: vals3(&self.kh), kv: vals3(&self.kv) }
    }
}

/// Numeric snapshot of a d-connection.
#[derive(Clone, Debug, PartialEq)]
pub struct DConnValues {
    pub lh: Arr3,
    pub lv: Arr3,
    pub kh: Arr3,
    pub kv: Arr3,
}

/// Connection blocks given by fields of (x, y), shaped like [`DConn`].
pub struct FieldConnection {
    pub lh: Vec<Vec<Vec<ScalarField>>>,
    pub lv: Vec<Vec<Vec<ScalarField>>>,
    pub kh: Vec<Vec<Vec<ScalarField>>>,
    pub kv: Vec<Vec<Vec<ScalarField>>>,
}

impl FieldConnection {
    pub fn eval(&self, gp: &GeomPoint) -> Result<DConn> {
        let (mh, mv) = (gp.mh(), gp.mv());
        let cj = coordinate_jets(&gp.pt, gp.order);
        let ev = |t: &Vec<Vec<Vec<ScalarField>>>, a: usize, b: usize, c: usize| -> Result<T3> {
            if t.len() != a || t.iter().any(|m| m.len() != b || m.iter().any(|r| r.len() != c)) {
                return Err(Error::Dimension("connection block has wrong shape".into()));
            }
            t.iter().map(|m| m.iter().map(|r| r.iter().map(|f| f.eval_jet(&cj)).collect()).collect()).collect()
        };
        Ok(DConn {
            mh,
            mv,
            lh: ev(&self.lh, mh, mh, mh)?,
            lv: ev(&self.lv, mv, mv, mh)?,
            kh: ev(&self.kh, mh, mh, mv)?,
            kv: ev(&self.kv, mv, mv, mv)?,
        })
    }
}

fn tr(j: &Jet, order: usize) -> Jet {
    j.truncate(order)
}

/// Frame derivatives of the metric blocks: dg[X][a'][b'] = c_X g_a'b', dh likewise.
fn metric_derivatives(gp: &GeomPoint) -> (T3, T3) {
    let r = gp.rank();
    let (mh, mv) = (gp.mh(), gp.mv());
    let dg = t3(r, mh, mh, |x, a, b| gp.d(x, &gp.g[a][b]));
    let dh = t3(r, mv, mv, |x, a, b| gp.d(x, &gp.h[a][b]));
    (dg, dh)
}

/// Christoffel-type combination ½ m^{ae} (d_c m_be + d_b m_ce − d_e m_bc) over
/// directions `off..off+k`.
fn christoffel(minv: &Mat, dm: &T3, off: usize, k: usize, order: usize, zero: &Jet) -> T3 {
    t3(k, k, k, |a, b, c| {
        let mut acc = zero.clone();
        for e in 0..k {
            let s = &(&dm[off + c][b][e] + &dm[off + b][c][e]) - &dm[off + e][b][c];
            acc = &acc + &(&tr(&minv[a][e], order) * &s);
        }
        acc.scale(0.5)
    })
}

/// The canonical d-connection of a d-metric.
pub fn canonical_dconnection(gp: &GeomPoint) -> DConn {
    let k = gp.order;
    let (mh, mv) = (gp.mh(), gp.mv());
    let zero = gp.zero().truncate(k);
    let (dg, dh) = metric_derivatives(gp);
    let dn = &gp.cf.dn;
    let lh = christoffel(&gp.ginv, &dg, 0, mh, k, &zero);
    let kv = christoffel(&gp.hinv, &dh, mh, mv, k, &zero);
    let lv = t3(mv, mv, mh, |a, b, cp| {
        let mut inner = zero.clone();
        for c in 0..mv {
            let mut s = dh[cp][b][c].clone();
            for d in 0..mv {
                s = &s - &(&tr(&dn[d][cp][b], k) * &tr(&gp.h[d][c], k));
                s = &s - &(&tr(&dn[d][cp][c], k) * &tr(&gp.h[d][b], k));
            }
            inner = &inner + &(&tr(&gp.hinv[a][c], k) * &s);
        }
        &tr(&dn[a][cp][b], k) + &inner.scale(0.5)
    });
    let kh = t3(mh, mh, mv, |a, b, c| {
        let mut acc = zero.clone();
        for e in 0..mh {
            acc = &acc + &(&tr(&gp.ginv[a][e], k) * &dg[mh + c][e][b]);
        }
        acc.scale(0.5)
    });
    DConn { mh, mv, lh, lv, kh, kv }
}

/// Berwald-type d-connection (L̂, ∂N, 0, K̂).
pub fn berwald_dconnection(gp: &GeomPoint) -> DConn {
    let k = gp.order;
    let can = canonical_dconnection(gp);
    let (mh, mv) = (gp.mh(), gp.mv());
    let zero = gp.zero().truncate(k);
    DConn {
        mh,
        mv,
        lh: can.lh,
        lv: t3(mv, mv, mh, |a, b, cp| tr(&gp.cf.dn[a][cp][b], k)),
        kh: t3(mh, mh, mv, |_, _, _| zero.clone()),
        kv: can.kv,
    }
}

/// Levi-Civita coefficients Γ[D][B][X] from the Koszul formula with the
/// anholonomy of the adapted frame.
pub fn levi_civita(gp: &GeomPoint) -> T3 {
    let k = gp.order;
    let r = gp.rank();
    let gm = gp.full_metric();
    let gi = gp.full_inverse();
    let w = &gp.cf.frame.w;
    let zero = gp.zero().truncate(k);
    // lowered: low[A][B][E] = g(c_A, ∇_E c_B)
    let low = t3(r, r, r, |a, b, e| {
        let mut acc = &(&gp.d(b, &gm[a][e]) + &gp.d(e, &gm[b][a])) - &gp.d(a, &gm[e][b]);
        for kk in 0..r {
            acc = &acc + &(&tr(&gm[a][kk], k) * &tr(&w[kk][e][b], k));
            acc = &acc + &(&tr(&gm[b][kk], k) * &tr(&w[kk][a][e], k));
            acc = &acc - &(&tr(&gm[e][kk], k) * &tr(&w[kk][b][a], k));
        }
        acc.scale(0.5)
    });
    t3(r, r, r, |d, b, e| {
        let mut acc = zero.clone();
        for a in 0..r {
            acc = &acc + &(&tr(&gi[d][a], k) * &low[a][b][e]);
        }
        acc
    })
}

/// Levi-Civita coefficients assembled blockwise from the canonical
/// d-connection plus N-curvature, structure-function and metric corrections.
pub fn levi_civita_from_canonical(gp: &GeomPoint) -> T3 {
    let k = gp.order;
    let (mh, mv) = (gp.mh(), gp.mv());
    let r = mh + mv;
    let can = canonical_dconnection(gp);
    let (dg, dh) = metric_derivatives(gp);
    let cf = &gp.cf;
    let zero = gp.zero().truncate(k);
    let g = |a: usize, b: usize| tr(&gp.g[a][b], k);
    let h = |a: usize, b: usize| tr(&gp.h[a][b], k);
    let gi = |a: usize, b: usize| tr(&gp.ginv[a][b], k);
    let hi = |a: usize, b: usize| tr(&gp.hinv[a][b], k);
    let dn = |c: usize, a: usize, b: usize| tr(&cf.dn[c][a][b], k);
    let c = |f: usize, a: usize, b: usize| tr(&cf.c[f][a][b], k);
    // v-part of [z_i, z_j]
    let xi = t3(mv, mh, mh, |a, i, j| tr(&cf.frame.w[mh + a][i][j], k));
    let raise_g = |kk: usize, f: &dyn Fn(usize) -> Jet| -> Jet {
        let mut acc = zero.clone();
        for l in 0..mh {
            acc = &acc + &(&gi(kk, l) * &f(l));
        }
        acc.scale(0.5)
    };
    let mut out = t3(r, r, r, |_, _, _| zero.clone());
    for kk in 0..mh {
        for j in 0..mh {
            for i in 0..mh {
                let corr = raise_g(kk, &|l| {
                    let mut s = zero.clone();
                    for m in 0..mh {
                        s = &s + &(&g(l, m) * &c(m, i, j));
                        s = &s - &(&g(j, m) * &c(m, i, l));
                        s = &s - &(&g(i, m) * &c(m, j, l));
                    }
                    s
                });
                out[kk][j][i] = &can.lh[kk][j][i] + &corr;
            }
        }
    }
    for a in 0..mv {
        for j in 0..mh {
            for i in 0..mh {
                let mut s = xi[a][i][j].scale(0.5);
                for b in 0..mv {
                    s = &s - &(&hi(a, b) * &dg[mh + b][i][j]).scale(0.5);
                }
                out[mh + a][j][i] = s;
            }
        }
    }
    for kk in 0..mh {
        for b in 0..mv {
            for i in 0..mh {
                out[kk][mh + b][i] = raise_g(kk, &|l| {
                    let mut s = dg[mh + b][i][l].clone();
                    for cc in 0..mv {
                        s = &s - &(&h(b, cc) * &xi[cc][i][l]);
                    }
                    s
                });
            }
        }
    }
    for a in 0..mv {
        for b in 0..mv {
            for i in 0..mh {
                out[mh + a][mh + b][i] = can.lv[a][b][i].clone();
            }
        }
    }
    for kk in 0..mh {
        for j in 0..mh {
            for cc in 0..mv {
                out[kk][j][mh + cc] = raise_g(kk, &|l| {
                    let mut s = dg[mh + cc][j][l].clone();
                    for d in 0..mv {
                        s = &s - &(&h(cc, d) * &xi[d][j][l]);
                    }
                    s
                });
            }
        }
    }
    for a in 0..mv {
        for j in 0..mh {
            for cc in 0..mv {
                out[mh + a][j][mh + cc] = &can.lv[a][cc][j] - &dn(a, j, cc);
            }
        }
    }
    for kk in 0..mh {
        for b in 0..mv {
            for cc in 0..mv {
                out[kk][mh + b][mh + cc] = raise_g(kk, &|l| {
                    let mut s = -&dh[l][b][cc];
                    for d in 0..mv {
                        s = &s + &(&h(b, d) * &dn(d, l, cc));
                        s = &s + &(&h(cc, d) * &dn(d, l, b));
                    }
                    s
                });
            }
        }
    }
    for a in 0..mv {
        for b in 0..mv {
            for cc in 0..mv {
                out[mh + a][mh + b][mh + cc] = can.kv[a][b][cc].clone();
            }
        }
    }
    out
}

/// Metrization: adds Z^A_BX = ½ G^AE (D_X G)_EB, which removes all
/// nonmetricity of a d-connection.
pub fn metrize(conn: &DConn, gp: &GeomPoint) -> DConn {
    let full = conn.full();
    let q = full_nonmetricity(&full, gp);
    let gi = gp.full_inverse();
    let k = conn.order();
    let r = gp.rank();
    let zero = gp.zero().truncate(k);
    let z = t3(r, r, r, |a, b, x| {
        let mut acc = zero.clone();
        for e in 0..r {
            acc = &acc - &(&gi[a][e].truncate(k) * &q[x][e][b]);
        }
        acc.scale(0.5)
    });
    let zd = DConn::from_full(&z, gp.mh(), gp.mv());
    conn.add(&zd)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObataVariant {
    /// O⁻ on the L-type blocks and O⁺ on the K-type blocks
    Paper,
    /// O⁻ applied to the first two slots in every block
    Projector,
}

/// Metric d-connections Γ̂ + O·Y parametrized by arbitrary tensors Y shaped like
/// a d-connection.
pub fn obata_family(gp: &GeomPoint, y: &DConn, variant: ObataVariant) -> DConn {
    let can = canonical_dconnection(gp);
    let k = gp.order;
    let (mh, mv) = (gp.mh(), gp.mv());
    let zero = gp.zero().truncate(k);
    let g = |a: usize, b: usize| gp.g[a][b].truncate(k);
    let gi = |a: usize, b: usize| gp.ginv[a][b].truncate(k);
    let h = |a: usize, b: usize| gp.h[a][b].truncate(k);
    let hi = |a: usize, b: usize| gp.hinv[a][b].truncate(k);
    // ½(Y^a_bx ± m_bm m^la Y^m_lx) within one block
    let proj =
        |yb: &T3, a: usize, b: usize, x: usize, n: usize, sign: f64, m: &dyn Fn(usize, usize) -> Jet, mi: &dyn Fn(usize, usize) -> Jet| {
            let mut acc = zero.clone();
            for l in 0..n {
                for mm in 0..n {
                    acc = &acc + &(&(&m(b, mm) * &mi(l, a)) * &yb[mm][l][x]);
                }
            }
            (&yb[a][b][x] + &acc.scale(sign)).scale(0.5)
        };
    let z = match variant {
        ObataVariant::Projector => DConn {
            mh,
            mv,
            lh: t3(mh, mh, mh, |a, b, x| proj(&y.lh, a, b, x, mh, -1.0, &g, &gi)),
            lv: t3(mv, mv, mh, |a, b, x| proj(&y.lv, a, b, x, mv, -1.0, &h, &hi)),
            kh: t3(mh, mh, mv, |a, b, x| proj(&y.kh, a, b, x, mh, -1.0, &g, &gi)),
            kv: t3(mv, mv, mv, |a, b, x| proj(&y.kv, a, b, x, mv, -1.0, &h, &hi)),
        },
        ObataVariant::Paper => {
            // first block: O⁻^{l'a'}_{c'm'} Y^{m'}_{l'b'}, direction and lower slot exchanged
            let lh = t3(mh, mh, mh, |a, b, c| {
                let mut acc = zero.clone();
                for l in 0..mh {
                    for mm in 0..mh {
                        acc = &acc + &(&(&g(c, mm) * &gi(l, a)) * &y.lh[mm][l][b]);
                    }
                }
                (&y.lh[a][c][b] - &acc).scale(0.5)
            });
            DConn {
                mh,
                mv,
                lh,
                lv: t3(mv, mv, mh, |a, b, x| proj(&y.lv, a, b, x, mv, -1.0, &h, &hi)),
                kh: t3(mh, mh, mv, |a, b, x| proj(&y.kh, a, b, x, mh, 1.0, &g, &gi)),
                kv: t3(mv, mv, mv, |a, b, x| proj(&y.kv, a, b, x, mv, 1.0, &h, &hi)),
            }
        }
    };
    can.add(&z)
}

/// τ-terms that give a connection prescribed pure torsions:
/// τ^a_bc = ½ m^ad (m_df T^f_bc − m_bf T^f_dc − m_cf T^f_db), per block.
pub fn tau_terms(m: &Mat, minv: &Mat, t: &Arr3, order: usize) -> T3 {
    let n = m.len();
    let zero = m[0][0].truncate(order).lift(0.0);
    t3(n, n, n, |a, b, c| {
        let mut acc = zero.clone();
        for d in 0..n {
            let mut s = zero.clone();
            for f in 0..n {
                let mdf = m[d][f].truncate(order);
                let mbf = m[b][f].truncate(order);
                let mcf = m[c][f].truncate(order);
                s = &s + &(&(&mdf.scale(t[f][b][c]) - &mbf.scale(t[f][d][c])) - &mcf.scale(t[f][d][b]));
            }
            acc = &acc + &(&minv[a][d].truncate(order) * &s);
        }
        acc.scale(0.5)
    })
}

/// Adds τ-terms to the L^a'_b'c' and K^a_bc blocks so that the pure torsions
/// become `t_h` and `t_v`.
pub fn with_prescribed_torsion(conn: &DConn, gp: &GeomPoint, t_h: &Arr3, t_v: &Arr3) -> Result<DConn> {
    for (name, t) in [("horizontal", t_h), ("vertical", t_v)] {
        for a in 0..t.len() {
            for b in 0..t.len() {
                for c in 0..t.len() {
                    if (t[a][b][c] + t[a][c][b]).abs() > 1e-12 {
                        return Err(Error::Validation(format!("{name} torsion target is not antisymmetric")));
                    }
                }
            }
        }
    }
    let k = conn.order();
    let mut out = conn.clone();
    let th = tau_terms(&gp.g, &gp.ginv, t_h, k);
    let tv = tau_terms(&gp.h, &gp.hinv, t_v, k);
    out.lh = out
        .lh
        .iter()
        .zip(&th)
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p.iter().zip(q).map(|(s, t)| s + t).collect()).collect())
        .collect();
    out.kv = out
        .kv
        .iter()
        .zip(&tv)
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p.iter().zip(q).map(|(s, t)| s + t).collect()).collect())
        .collect();
    Ok(out)
}

/// Deforms a connection (full coefficients) so that its full-frame torsion and
/// nonmetricity become the targets T[D][X][Y] and Q[X][Y][Z]:
/// g(Z(X,Y),W) = ½[T(X,Y)·W − T(Y,W)·X + T(W,X)·Y] + ½[Q(X;Y,W) + Q(Y;X,W) − Q(W;X,Y)]
/// applied to the differences between targets and the torsion and nonmetricity of `base`.
pub fn deform_connection(base: &T3, gp: &GeomPoint, t_target: &Arr3, q_target: &Arr3) -> Result<T3> {
    let r = gp.rank();
    for d in 0..r {
        for x in 0..r {
            for y in 0..r {
                if (t_target[d][x][y] + t_target[d][y][x]).abs() > 1e-12 {
                    return Err(Error::Validation("torsion target is not antisymmetric in its lower pair".into()));
                }
                if (q_target[d][x][y] - q_target[d][y][x]).abs() > 1e-12 {
                    return Err(Error::Validation("nonmetricity target is not symmetric in its last pair".into()));
                }
            }
        }
    }
    let k = base[0][0][0].order();
    let t0 = full_torsion(base, gp);
    let q0 = full_nonmetricity(base, gp);
    let gm = gp.full_metric();
    let gi = gp.full_inverse();
    let zero = gp.zero().truncate(k);
    // lowered torsion difference tl[W][X][Y] = g_WD (T − T0)^D_XY
    let td = t3(r, r, r, |d, x, y| &zero.lift(t_target[d][x][y]) - &t0[d][x][y].truncate(k));
    let tl = t3(r, r, r, |w, x, y| {
        let mut acc = zero.clone();
        for d in 0..r {
            acc = &acc + &(&gm[w][d].truncate(k) * &td[d][x][y]);
        }
        acc
    });
    let qd = t3(r, r, r, |x, y, z| &zero.lift(q_target[x][y][z]) - &q0[x][y][z].truncate(k));
    // zl[W][X][Y] = g(Z(X,Y), W)
    let zl = t3(r, r, r, |w, x, y| {
        let t = &(&tl[w][x][y] - &tl[x][y][w]) + &tl[y][w][x];
        let q = &(&qd[x][y][w] + &qd[y][x][w]) - &qd[w][x][y];
        (&t + &q).scale(0.5)
    });
    // Z(X, Y) = D_X Y − base_X Y, so Γ[D][Y][X] gains G^DW zl[W][X][Y]
    Ok(t3(r, r, r, |d, y, x| {
        let mut acc = base[d][y][x].truncate(k);
        for w in 0..r {
            acc = &acc + &(&gi[d][w].truncate(k) * &zl[w][x][y]);
        }
        acc
    }))
}

/// Completes the `lh` and `kv` blocks of `conn` to a d-connection that keeps
/// the almost complex structure F parallel. F must swap the horizontal and
/// vertical subspaces; `finv` is its inverse. The remaining blocks are
/// transported through F: D_X c_B = F⁻¹ D_X (F c_B).
pub fn f_compatible_dconnection(conn: &DConn, f: &Mat, finv: &Mat, gp: &GeomPoint) -> DConn {
    let k = gp.order;
    let (mh, mv) = (gp.mh(), gp.mv());
    let zero = gp.zero().truncate(k);
    // lv[d][b][x]: F maps v_b into the horizontal span, where lh acts along z_x
    let lv = t3(mv, mv, mh, |d, b, x| {
        let mut acc = zero.clone();
        for e in 0..mh {
            let mut s = gp.d(x, &f[e][mh + b]).truncate(k);
            for g in 0..mh {
                s = &s + &(&f[g][mh + b].truncate(k) * &conn.lh[e][g][x]);
            }
            acc = &acc + &(&finv[mh + d][e].truncate(k) * &s);
        }
        acc
    });
    let kh = t3(mh, mh, mv, |d, b, x| {
        let mut acc = zero.clone();
        for e in 0..mv {
            let mut s = gp.d(mh + x, &f[mh + e][b]).truncate(k);
            for g in 0..mv {
                s = &s + &(&f[mh + g][b].truncate(k) * &conn.kv[e][g][x]);
            }
            acc = &acc + &(&finv[d][mh + e].truncate(k) * &s);
        }
        acc
    });
    DConn { mh, mv, lh: conn.lh.clone(), lv, kh, kv: conn.kv.clone() }
}
