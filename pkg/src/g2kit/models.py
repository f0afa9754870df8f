"""Standard model forms used across the toolkit and its tests.

Six-dimensional forms use 1-based labels ``x_1..x_6`` in their text (axes
0..5).  The seven-dimensional cylinder forms put ``t = x_0`` on axis 0.
"""

from __future__ import annotations

from .exterior import Form, parse_form, wedge

PHI0_TEXT = "dx123 + dx145 + dx167 + dx246 - dx257 - dx347 - dx356"
PSI0_TEXT = "dx4567 + dx2367 + dx2345 + dx1357 - dx1346 - dx1256 - dx1247"
RE_OMEGA_TEXT = "dx135 - dx146 - dx236 - dx245"
IM_OMEGA_TEXT = "dx136 + dx145 + dx235 - dx246"
KAHLER_TEXT = "dx12 + dx34 + dx56"

# coordinate examples in the cylinder R x R^6
CYL_RHO_TEXT = "dx135 + dx632 + dx254 + dx416"
TWISTED_OMEGA_TEXT = "dx63 + dx25 + dx41"


def phi0() -> Form:
    """The flat G2 3-form on R^7 (labels 1..7 on axes 0..6)."""
    return parse_form(PHI0_TEXT, dim=7, base=1)


def psi0() -> Form:
    return parse_form(PSI0_TEXT, dim=7, base=1)


def re_omega() -> Form:
    """Real part of ``dz1 dz2 dz3`` with ``z_j = x_{2j-1} + i x_{2j}``."""
    return parse_form(RE_OMEGA_TEXT, dim=6, base=1)


def im_omega() -> Form:
    return parse_form(IM_OMEGA_TEXT, dim=6, base=1)


def kahler() -> Form:
    return parse_form(KAHLER_TEXT, dim=6, base=1)


def half_kahler_squared() -> Form:
    w = kahler()
    return 0.5 * wedge(w, w)


def cylinder_rho() -> Form:
    return parse_form(CYL_RHO_TEXT, dim=6, base=1)


def twisted_omega() -> Form:
    return parse_form(TWISTED_OMEGA_TEXT, dim=6, base=1)


def lift(a: Form) -> Form:
    """Push a form on R^6 to R x R^6, shifting axis i to i + 1."""
    if a.dim != 6:
        raise ValueError("lift expects a 6-dimensional form")
    return Form(7, a.degree, {tuple(i + 1 for i in idx): c for idx, c in a.terms.items()})


def dt() -> Form:
    return Form.basis(7, (0,))


def phi_from_pair(rho: Form, omega: Form) -> Form:
    """``rho + dt ^ omega`` on R x M."""
    return lift(rho) + wedge(dt(), lift(omega))


def psi_from_pair(rho: Form, tau: Form) -> Form:
    """``dt ^ rho + tau`` on R x M."""
    return wedge(dt(), lift(rho)) + lift(tau)
