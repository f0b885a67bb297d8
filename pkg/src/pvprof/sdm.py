"""De Soto single-diode model of a PV module and its array scaling.

Implements the five-parameter equivalent circuit of De Soto et al. (2006):
a photocurrent source in parallel with one diode and a shunt resistance,
in series with a series resistance.  Reference-condition parameters are
translated to operating irradiance/temperature, the implicit I-V equation
is solved by bracketed root finding, and the maximum power point is located
by golden-section search plus one derivative polish step.

All heavy routines have an array core (suffix ``_arrays``) that broadcasts
over numpy arrays; the dataclass API wraps scalars around it.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import Boltzmann as K_BOLTZMANN
from scipy.constants import elementary_charge as Q_ELEMENTARY
from scipy.optimize import brentq

from .exceptions import SolverError

G_REF = 1000.0           # reference irradiance, W/m^2
T_REF_C = 25.0           # reference cell temperature, degC
T_REF_K = 298.15
EG_REF_EV = 1.121        # silicon band gap at reference temperature, eV
EG_SLOPE_PER_K = -0.0002677   # relative band-gap change per kelvin
NIGHT_RSH_CAP = 1e8      # shunt-resistance surrogate for zero irradiance, ohm
_EXP_CAP = 700.0         # exp() argument clamp; keeps wild probes finite
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = 1.0 - _INVPHI


@dataclass(frozen=True)
class SdmParamsRef:
    """Single-diode parameters at reference conditions (1000 W/m^2, 25 degC).

    Parameters
    ----------
    i_ph_ref : float
        Photocurrent, A.
    i_0_ref : float
        Diode saturation current, A.
    r_s : float
        Series resistance, ohm.
    r_sh_ref : float
        Shunt resistance, ohm.
    n_diode : float
        Diode ideality factor, dimensionless.
    """

    i_ph_ref: float
    i_0_ref: float
    r_s: float
    r_sh_ref: float
    n_diode: float

    def __post_init__(self):
        vals = (self.i_ph_ref, self.i_0_ref, self.r_s, self.r_sh_ref,
                self.n_diode)
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise ValueError(f"parameters must be positive and finite: {self}")
        if not 0.5 <= self.n_diode <= 2.5:
            raise ValueError(f"diode factor {self.n_diode} outside [0.5, 2.5]")
        if self.i_0_ref >= self.i_ph_ref:
            raise ValueError("saturation current must be below photocurrent")

    def as_array(self):
        return np.array([self.i_ph_ref, self.i_0_ref, self.r_s,
                         self.r_sh_ref, self.n_diode])

    @classmethod
    def from_array(cls, arr):
        return cls(*(float(x) for x in arr))


PARAM_NAMES = ("i_ph_ref", "i_0_ref", "r_s", "r_sh_ref", "n_diode")


@dataclass(frozen=True)
class OperatingConditions:
    """Plane-of-array irradiance (W/m^2) and cell temperature (degC)."""

    g_poa: float
    t_cell: float

    def __post_init__(self):
        if not (math.isfinite(self.g_poa) and self.g_poa >= 0):
            raise ValueError(f"irradiance must be >= 0, got {self.g_poa}")
        if not -60.0 <= self.t_cell <= 120.0:
            raise ValueError(f"cell temperature {self.t_cell} outside [-60, 120]")


@dataclass(frozen=True)
class ArrayTopology:
    """Uniform array layout: series cells per module, modules per string, strings."""

    cells_in_series: int
    modules_per_string: int
    strings_in_parallel: int

    def __post_init__(self):
        for name in ("cells_in_series", "modules_per_string", "strings_in_parallel"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")


@dataclass(frozen=True)
class SdmParamsOperating:
    """Diode-equation coefficients at one operating condition.

    ``a_mod`` is the modified ideality factor n*Ns*k*T/q in volts, at the
    level of the module's cell string.
    """

    i_ph: float
    i_0: float
    r_s: float
    r_sh: float
    a_mod: float


@dataclass(frozen=True)
class IvPoint:
    """A point on the I-V curve; ``p`` is always the exact product v*i."""

    v: float
    i: float
    p: float

    @classmethod
    def from_vi(cls, v, i):
        return cls(float(v), float(i), float(v) * float(i))


def translate_arrays(i_ph_ref, i_0_ref, r_s, r_sh_ref, n_diode,
                     g_poa, t_cell, cells_in_series, alpha_isc=0.0,
                     night_rsh_cap=NIGHT_RSH_CAP):
    """Translate reference parameters to operating conditions (array core).

    Broadcasts every argument; returns the tuple
    ``(i_ph, i_0, r_s, r_sh, a_mod)`` of operating coefficients.

    The auxiliary equations follow De Soto et al. (2006): photocurrent linear
    in irradiance with temperature coefficient ``alpha_isc``; saturation
    current with the cubic temperature factor and band-gap exponential;
    shunt resistance inverse in irradiance (capped at ``night_rsh_cap``
    instead of going to infinity at zero irradiance); series resistance
    constant; modified ideality factor proportional to absolute temperature.
    """
    g = np.asarray(g_poa, dtype=float)
    t = np.asarray(t_cell, dtype=float)
    t_k = t + 273.15
    i_ph = g / G_REF * (np.asarray(i_ph_ref, dtype=float)
                        + alpha_isc * (t - T_REF_C))
    eg = EG_REF_EV * (1.0 + EG_SLOPE_PER_K * (t_k - T_REF_K))
    i_0 = np.asarray(i_0_ref, dtype=float) * (t_k / T_REF_K) ** 3 * np.exp(
        (EG_REF_EV / T_REF_K - eg / t_k) * (Q_ELEMENTARY / K_BOLTZMANN))
    day = g > 0
    r_sh = np.where(day,
                    np.asarray(r_sh_ref, dtype=float) * G_REF / np.where(day, g, 1.0),
                    night_rsh_cap)
    r_sh = np.minimum(r_sh, night_rsh_cap)
    a_mod = (np.asarray(n_diode, dtype=float) * cells_in_series
             * K_BOLTZMANN * t_k / Q_ELEMENTARY)
    r_s_b = np.broadcast_to(np.asarray(r_s, dtype=float),
                            np.broadcast_shapes(np.shape(i_ph), np.shape(a_mod)))
    i_ph, i_0, r_sh, a_mod = np.broadcast_arrays(i_ph, i_0, r_sh, a_mod)
    return i_ph, i_0, r_s_b, r_sh, a_mod


def translate_to_operating(params: SdmParamsRef, cond: OperatingConditions,
                           cells_in_series: int,
                           alpha_isc=0.0) -> SdmParamsOperating:
    """Translate one reference parameter set to one operating condition."""
    i_ph, i_0, r_s, r_sh, a = translate_arrays(
        params.i_ph_ref, params.i_0_ref, params.r_s, params.r_sh_ref,
        params.n_diode, cond.g_poa, cond.t_cell, cells_in_series, alpha_isc)
    return SdmParamsOperating(float(i_ph), float(i_0), float(r_s),
                              float(r_sh), float(a))


def diode_residual(i, v, op: SdmParamsOperating):
    """Residual of the implicit diode equation at a candidate (v, i) pair, A."""
    vd = v + i * op.r_s
    return op.i_ph - op.i_0 * math.expm1(min(vd / op.a_mod, _EXP_CAP)) \
        - vd / op.r_sh - i


def _current_at_vd(vd, i_ph, i_0, r_sh, a):
    # explicit current when the curve is parameterized by diode voltage
    return i_ph - i_0 * np.expm1(np.minimum(vd / a, _EXP_CAP)) - vd / r_sh


def open_circuit_diode_voltage_arrays(i_ph, i_0, r_sh, a):
    """Diode voltage at zero terminal current (elementwise).

    Newton iteration started at the analytic upper bound a*log1p(i_ph/i_0);
    the residual is concave and decreasing, so the iterates descend
    monotonically onto the root.  Zero photocurrent maps to zero volts.
    """
    i_ph, i_0, r_sh, a = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (i_ph, i_0, r_sh, a)))
    vd = a * np.log1p(np.maximum(i_ph, 0.0) / i_0)
    for _ in range(80):
        e = np.exp(np.minimum(vd / a, _EXP_CAP))
        resid = i_ph - i_0 * (e - 1.0) - vd / r_sh
        slope = -i_0 * e / a - 1.0 / r_sh
        step = resid / slope
        vd_new = np.maximum(vd - step, 0.0)
        if np.all(np.abs(vd_new - vd) <= 1e-14 * (1.0 + vd)):
            vd = vd_new
            break
        vd = vd_new
    return vd


def mpp_arrays(i_ph, i_0, r_s, r_sh, a, bracket_tol=1e-9):
    """Maximum power point, elementwise over broadcast parameter arrays.

    Returns ``(v, i, p)``.  Golden-section search on p(v) over the physical
    branch, shrinking the bracket to ``bracket_tol`` volts, then one Newton
    polish step on dp/dv using analytic derivatives.  Power is unimodal along
    the curve for physical parameter values, which the search relies on.
    """
    i_ph, i_0, r_s, r_sh, a = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (i_ph, i_0, r_s, r_sh, a)))
    lit = i_ph > 0

    def power_at(vd):
        cur = _current_at_vd(vd, i_ph, i_0, r_sh, a)
        return (vd - cur * r_s) * cur

    vd_oc = open_circuit_diode_voltage_arrays(i_ph, i_0, r_sh, a)
    lo = np.zeros_like(vd_oc)
    hi = vd_oc.copy()
    span = float(np.max(hi, initial=0.0))
    n_iter = 0
    if span > bracket_tol:
        n_iter = int(math.ceil(math.log(span / bracket_tol)
                               / math.log(1.0 / _INVPHI))) + 1
    h = hi - lo
    x1 = lo + _INVPHI2 * h
    x2 = lo + _INVPHI * h
    f1 = power_at(x1)
    f2 = power_at(x2)
    for _ in range(n_iter):
        left = f1 >= f2          # maximum lies in [lo, x2]
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        h = hi - lo
        x_keep = np.where(left, x1, x2)
        f_keep = np.where(left, f1, f2)
        x_new = np.where(left, lo + _INVPHI2 * h, lo + _INVPHI * h)
        f_new = power_at(x_new)
        x1 = np.where(left, x_new, x_keep)
        f1 = np.where(left, f_new, f_keep)
        x2 = np.where(left, x_keep, x_new)
        f2 = np.where(left, f_keep, f_new)

    vd = np.where(f1 >= f2, x1, x2)

    # Newton polish on dp/dvd with analytic derivatives; applied
    # unconditionally so the returned point is smooth in the parameters
    # (the golden bracket alone has bracket_tol granularity)
    for _ in range(2):
        e = np.exp(np.minimum(vd / a, _EXP_CAP))
        cur = i_ph - i_0 * (e - 1.0) - vd / r_sh
        di = -i_0 * e / a - 1.0 / r_sh
        d2i = -i_0 * e / (a * a)
        vol = vd - cur * r_s
        dv = 1.0 - r_s * di
        dp = dv * cur + vol * di
        d2p = -r_s * d2i * cur + 2.0 * dv * di + vol * d2i
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d2p < 0, -dp / d2p, 0.0)
        vd = np.clip(vd + step, 0.0, vd_oc)

    cur = _current_at_vd(vd, i_ph, i_0, r_sh, a)
    vol = vd - cur * r_s
    p = vol * cur
    zero = np.zeros_like(p)
    return (np.where(lit, vol, zero), np.where(lit, cur, zero),
            np.where(lit, p, zero))


def solve_current(v, op: SdmParamsOperating):
    """Terminal current at terminal voltage ``v``.

    Bracketed root finding on the implicit diode equation, starting from the
    bracket [-i_ph, 2*i_ph] and expanding geometrically if needed, followed
    by Newton polish.  The returned current satisfies the implicit equation
    with absolute residual below 1e-9 A.

    Raises
    ------
    SolverError
        If no sign change is found after bracket expansion.
    """
    v = float(v)

    def f(i):
        return diode_residual(i, v, op)

    lo, hi = -op.i_ph, 2.0 * op.i_ph
    width = max(hi - lo, 1.0)
    for _ in range(80):
        if lo < hi and f(lo) > 0.0 > f(hi):
            break
        lo -= width
        hi += width
        width *= 2.0
    else:
        raise SolverError("no bracket for terminal current", v=v, op=op)
    i = brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    for _ in range(5):
        resid = f(i)
        if abs(resid) < 1e-12:
            break
        vd = v + i * op.r_s
        slope = -op.i_0 * math.exp(min(vd / op.a_mod, _EXP_CAP)) \
            * op.r_s / op.a_mod - op.r_s / op.r_sh - 1.0
        i -= resid / slope
    return float(i)


def short_circuit_current(op: SdmParamsOperating):
    """Current at zero terminal voltage."""
    return solve_current(0.0, op)


def solve_voltage(i, op: SdmParamsOperating):
    """Terminal voltage at terminal current ``i`` (0 <= i <= i_sc).

    Solved on the diode-voltage axis, where the residual is monotone; the
    result satisfies the same residual contract as :func:`solve_current`.

    Raises
    ------
    ValueError
        If ``i`` lies above the short-circuit current (or below zero).
    """
    i = float(i)
    if i < 0:
        raise ValueError(f"current must be >= 0, got {i}")
    if op.i_ph <= 0:
        if i > 1e-12:
            raise ValueError("current above short-circuit current of a dark module")
        return 0.0
    i_sc = short_circuit_current(op)
    if i > i_sc * (1.0 + 1e-9) + 1e-12:
        raise ValueError(f"current {i} above short-circuit current {i_sc}")
    i = min(i, i_sc)

    def g(vd):
        return op.i_ph - op.i_0 * math.expm1(min(vd / op.a_mod, _EXP_CAP)) \
            - vd / op.r_sh - i

    vd_hi = op.a_mod * math.log1p(op.i_ph / op.i_0) + 1.0
    vd = brentq(g, 0.0, vd_hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    for _ in range(5):
        resid = g(vd)
        if abs(resid) < 1e-12:
            break
        slope = -op.i_0 * math.exp(min(vd / op.a_mod, _EXP_CAP)) / op.a_mod \
            - 1.0 / op.r_sh
        vd -= resid / slope
    return float(vd - i * op.r_s)


def open_circuit_voltage(op: SdmParamsOperating):
    """Voltage at zero terminal current (zero for a dark module)."""
    return solve_voltage(0.0, op)


def find_mpp(op: SdmParamsOperating) -> IvPoint:
    """Maximum power point of one operating condition.

    A dark module (``i_ph <= 0``) yields the zero point.
    """
    if op.i_ph <= 0:
        return IvPoint(0.0, 0.0, 0.0)
    v, i, _ = mpp_arrays(op.i_ph, op.i_0, op.r_s, op.r_sh, op.a_mod)
    return IvPoint.from_vi(float(v), float(i))


def simulate_array_mpp_arrays(i_ph_ref, i_0_ref, r_s, r_sh_ref, n_diode,
                              g_poa, t_cell, topo: ArrayTopology,
                              alpha_isc=0.0):
    """Array-level MPP voltage/current/power over broadcast inputs.

    Assumes a uniform, mismatch-free array: module MPP voltage scales with
    modules per string, current with parallel strings.
    """
    ops = translate_arrays(i_ph_ref, i_0_ref, r_s, r_sh_ref, n_diode,
                           g_poa, t_cell, topo.cells_in_series, alpha_isc)
    v, i, p = mpp_arrays(*ops)
    v_dc = v * topo.modules_per_string
    i_dc = i * topo.strings_in_parallel
    return v_dc, i_dc, v_dc * i_dc


def simulate_array_mpp(params: SdmParamsRef, topo: ArrayTopology,
                       cond: OperatingConditions, alpha_isc=0.0):
    """Array-level (v_dc, i_dc) at the maximum power point."""
    v_dc, i_dc, _ = simulate_array_mpp_arrays(
        params.i_ph_ref, params.i_0_ref, params.r_s, params.r_sh_ref,
        params.n_diode, cond.g_poa, cond.t_cell, topo, alpha_isc)
    return float(v_dc), float(i_dc)
