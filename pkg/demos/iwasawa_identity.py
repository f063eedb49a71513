"""On the Iwasawa manifold neither i dg ^ dbar g nor g ^ i ddbar g vanishes,
yet their integrals cancel as Stokes demands.
"""
from hermvol import condition_iii, i_del_wedge_delbar, iwasawa_standard, remark2_identity

g = iwasawa_standard()
print("|i dg ^ dbar g| =", i_del_wedge_delbar(g.form).norm())

r = remark2_identity(g)
print(f"pointwise residual {r.residual:.1e}")
print(f"int (n-2) g^(n-3) i dg dbar g = {r.integral_dg_dbarg:+.6f}")
print(f"int g^(n-2) i ddbar g         = {r.integral_ddbar_g:+.6f}")
print(f"sum                           = {r.integral_sum:+.1e}")

c = condition_iii(g)
print("i ddbar g^k = 0 for all k?", c.verdict, c.details)
