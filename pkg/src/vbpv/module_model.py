"""PV module electrical and thermal model.

The electrical model is the five-parameter single-diode equation lumped
over ``N_s`` series cells, with the rear face contributing a second
photocurrent. Parameters are translated to operating conditions with the
De Soto relations (photocurrent linear in irradiance and temperature,
saturation current following the silicon band gap). Shunt resistance is
held constant.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import lambertw

from .errors import ExtractionError, InputError

BOLTZMANN_EV = 8.617333262e-5  # eV/K
T_REF_C = 25.0
T_REF_K = 273.15 + T_REF_C
E_GAP_REF = 1.121  # eV, crystalline silicon
DEGDT = -0.0002677
G_STC = 1000.0
BSTC_REAR = 135.0


@dataclass(frozen=True)
class ModuleSpec:
    """Datasheet parameters at STC. Temperature coefficients are in %/degC."""

    name: str
    p_max: float
    n_cells: int
    v_mp: float
    i_mp: float
    v_oc: float
    i_sc: float
    efficiency: float
    tc_voc: float
    tc_isc: float
    tc_power: float
    bifaciality: float = 0.0
    length: float = 2.0
    width: float = 1.0
    phi_voc: float | None = None
    phi_isc: float | None = None

    def __post_init__(self):
        if not (0 < self.v_mp < self.v_oc):
            raise InputError(f"{self.name}: need 0 < v_mp < v_oc")
        if not (0 < self.i_mp < self.i_sc):
            raise InputError(f"{self.name}: need 0 < i_mp < i_sc")
        if abs(self.v_mp * self.i_mp - self.p_max) > 0.01 * self.p_max:
            raise InputError(f"{self.name}: p_max differs from v_mp*i_mp by more than 1%")
        if not (self.tc_voc < 0 and self.tc_power < 0 and self.tc_isc > 0):
            raise InputError(f"{self.name}: expected tc_voc < 0, tc_power < 0, tc_isc > 0")
        if not 0.0 <= self.bifaciality <= 1.0:
            raise InputError(f"{self.name}: bifaciality must be within [0, 1]")
        if self.n_cells < 1 or self.length <= 0 or self.width <= 0:
            raise InputError(f"{self.name}: n_cells and dimensions must be positive")

    @property
    def is_bifacial(self) -> bool:
        return self.bifaciality > 0

    @property
    def phi_isc_effective(self) -> float:
        return self.bifaciality if self.phi_isc is None else self.phi_isc

    @property
    def phi_voc_effective(self) -> float:
        return self.bifaciality if self.phi_voc is None else self.phi_voc


@dataclass(frozen=True)
class SingleDiodeParams:
    """Reference (STC) single-diode parameters for a whole module.

    ``i_ph_r`` is the rear photocurrent under 1000 W/m2 rear illumination.
    ``alpha_isc`` (A/K) and ``n_cells`` drive the temperature translation.
    """

    i_ph_f: float
    i_ph_r: float
    i_0: float
    n_ideality: float
    r_s: float
    r_sh: float
    n_cells: int
    alpha_isc: float
    e_gap: float = E_GAP_REF

    def __post_init__(self):
        positive = (self.i_ph_f, self.i_0, self.n_ideality, self.r_s, self.r_sh, self.e_gap)
        if min(positive) <= 0 or self.i_ph_r < 0:
            raise InputError("single-diode parameters must be positive")
        if self.r_sh / self.r_s <= 10:
            raise InputError(f"r_sh/r_s = {self.r_sh / self.r_s:.2f} must exceed 10")

    @property
    def a_ref(self) -> float:
        """Modified ideality factor n*Ns*kT/q at the reference temperature, in volts."""
        return self.n_ideality * self.n_cells * BOLTZMANN_EV * T_REF_K


@dataclass(frozen=True)
class ThermalParams:
    alpha_front: float = 0.9
    alpha_rear: float = 0.9
    u_value: float = 28.8

    def __post_init__(self):
        if not (0 < self.alpha_front <= 1 and 0 < self.alpha_rear <= 1):
            raise InputError("absorptances must be within (0, 1]")
        if self.u_value <= 0:
            raise InputError("u_value must be > 0")


# NOCT-like (800 W/m2, 20 degC) calibration: 45 degC monofacial, 47 degC bifacial
THERMAL_MONOFACIAL = ThermalParams(0.9, 0.9, 28.8)
THERMAL_BIFACIAL = ThermalParams(0.9, 0.9, 26.2)


def default_thermal(spec: ModuleSpec) -> ThermalParams:
    return THERMAL_BIFACIAL if spec.is_bifacial else THERMAL_MONOFACIAL


@dataclass(frozen=True)
class BifacialityFactors:
    phi_pmax: float
    phi_voc: float
    phi_isc: float
    unusual: bool = False

    def in_band(self, low=0.75, high=0.95) -> bool:
        """Whether phi_pmax falls in a technology band (n-PERT by default)."""
        return low <= self.phi_pmax <= high


# ---------------------------------------------------------------------------
# Bifaciality and simple models


def bifaciality_factors(front: dict, rear: dict) -> BifacialityFactors:
    """Rear-to-front ratios of ``p_max``, ``v_oc`` and ``i_sc``.

    A rear value above the front value sets ``unusual`` rather than raising.
    """
    keys = ("p_max", "v_oc", "i_sc")
    for k in keys:
        if front[k] <= 0:
            raise InputError(f"front {k} must be > 0")
    ratios = [rear[k] / front[k] for k in keys]
    return BifacialityFactors(*ratios, unusual=any(r > 1 for r in ratios))


def cell_temperature(t_ambient, g_front, g_rear, thermal: ThermalParams):
    """Steady-state heat balance: T_a + (a_f*G_f + a_r*G_r)/U."""
    return t_ambient + (thermal.alpha_front * g_front + thermal.alpha_rear * g_rear) / thermal.u_value


def simple_power(spec: ModuleSpec, g_equivalent, t_cell):
    """Nameplate power scaled by irradiance and the power temperature coefficient."""
    g = np.asarray(g_equivalent, dtype=float)
    if np.any(g < 0):
        raise InputError("equivalent irradiance must be >= 0")
    p = spec.p_max * (g / G_STC) * (1.0 + spec.tc_power / 100.0 * (np.asarray(t_cell) - T_REF_C))
    p = np.maximum(p, 0.0)
    return float(p) if p.ndim == 0 else p


# ---------------------------------------------------------------------------
# Single-diode evaluation


def _lambertw_exp(x):
    """Principal branch W(exp(x)) without overflowing for large x."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 300.0
    if np.any(small):
        out[small] = lambertw(np.exp(x[small])).real
    if np.any(~small):
        xl = x[~small]
        w = xl - np.log(xl)
        for _ in range(8):
            w = w - (w + np.log(w) - xl) / (1.0 + 1.0 / w)
        out[~small] = w
    return out


@dataclass(frozen=True)
class _Operating:
    i_ph: np.ndarray
    i_0: np.ndarray
    a: np.ndarray
    r_s: float
    r_sh: float


def _at_conditions(params: SingleDiodeParams, g_front, g_rear, phi_isc, t_cell) -> _Operating:
    g_front = np.asarray(g_front, dtype=float)
    g_rear = np.asarray(g_rear, dtype=float)
    t_cell = np.asarray(t_cell, dtype=float)
    if np.any(g_front < 0) or np.any(g_rear < 0):
        raise InputError("irradiance must be >= 0")
    if np.any(t_cell < -40) or np.any(t_cell > 100):
        raise InputError("cell temperature must be within [-40, 100] degC")
    tk = t_cell + 273.15
    i_ph_stc_t = params.i_ph_f + params.alpha_isc * (t_cell - T_REF_C)
    i_ph = (g_front / G_STC + phi_isc * g_rear / G_STC) * i_ph_stc_t
    eg = params.e_gap * (1.0 + DEGDT * (tk - T_REF_K))
    i_0 = params.i_0 * (tk / T_REF_K) ** 3 * np.exp(
        params.e_gap / (BOLTZMANN_EV * T_REF_K) - eg / (BOLTZMANN_EV * tk)
    )
    a = params.a_ref * tk / T_REF_K
    shape = np.broadcast(i_ph, i_0, a).shape
    return _Operating(np.broadcast_to(i_ph, shape), np.broadcast_to(i_0, shape),
                      np.broadcast_to(a, shape), params.r_s, params.r_sh)


def _current(op: _Operating, v):
    """Terminal current at voltage ``v`` (explicit Lambert-W solution)."""
    rs, rsh = op.r_s, op.r_sh
    v = np.asarray(v, dtype=float)
    log_theta = (np.log(rs * op.i_0 * rsh / (op.a * (rs + rsh)))
                 + rsh * (rs * (op.i_ph + op.i_0) + v) / (op.a * (rs + rsh)))
    return (rsh * (op.i_ph + op.i_0) - v) / (rs + rsh) - op.a / rs * _lambertw_exp(log_theta)


def _open_circuit_voltage(op: _Operating):
    rsh = op.r_sh
    log_psi = np.log(op.i_0 * rsh / op.a) + rsh * (op.i_ph + op.i_0) / op.a
    voc = (op.i_ph + op.i_0) * rsh - op.a * _lambertw_exp(log_psi)
    return np.where(op.i_ph > 0, np.maximum(voc, 0.0), 0.0)


def _golden_mpp(op: _Operating, iterations: int = 80):
    voc = _open_circuit_voltage(op)
    lo = np.zeros_like(voc)
    hi = voc.copy()
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc = c * _current(op, c)
    fd = d * _current(op, d)
    for _ in range(iterations):
        left = fc > fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new_c = hi - inv_phi * (hi - lo)
        new_d = lo + inv_phi * (hi - lo)
        # reuse the surviving interior point, evaluate only the new one
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        fc_next = np.where(left, c_next * _current(op, c_next), fd)
        fd_next = np.where(left, fc, d_next * _current(op, d_next))
        c, d, fc, fd = c_next, d_next, fc_next, fd_next
    v = (lo + hi) / 2.0
    i = _current(op, v)
    dark = op.i_ph <= 0
    v = np.where(dark, 0.0, v)
    i = np.where(dark, 0.0, i)
    return v, i, v * i


def open_circuit_voltage(params: SingleDiodeParams, g_front, g_rear=0.0, phi_isc=0.0, t_cell=25.0):
    voc = _open_circuit_voltage(_at_conditions(params, g_front, g_rear, phi_isc, t_cell))
    return float(voc) if voc.ndim == 0 else voc


def current_at(params: SingleDiodeParams, v, g_front, g_rear=0.0, phi_isc=0.0, t_cell=25.0):
    i = _current(_at_conditions(params, g_front, g_rear, phi_isc, t_cell), v)
    return float(i) if i.ndim == 0 else i


def iv_curve(params: SingleDiodeParams, g_front, g_rear=0.0, phi_isc=0.0, t_cell=25.0,
             n_points: int = 101):
    """(V, I) pairs on an even voltage grid from 0 to V_oc.

    In the dark the grid spans 0 to the reference V_oc and the currents are
    the (non-positive) dark-curve values.
    """
    if n_points < 2:
        raise InputError("n_points must be >= 2")
    op = _at_conditions(params, float(g_front), float(g_rear), phi_isc, float(t_cell))
    voc = float(_open_circuit_voltage(op))
    if voc <= 0:
        voc = float(_open_circuit_voltage(_at_conditions(params, G_STC, 0.0, 0.0, t_cell)))
    v = np.linspace(0.0, voc, n_points)
    i = _current(op, v)
    return list(zip(v.tolist(), i.tolist()))


def mpp(params: SingleDiodeParams, g_front, g_rear=0.0, phi_isc=0.0, t_cell=25.0):
    """Maximum power point (V, I, P) by golden-section search on [0, V_oc].

    Vectorized over broadcastable inputs; returns (0, 0, 0) in the dark.
    """
    v, i, p = _golden_mpp(_at_conditions(params, g_front, g_rear, phi_isc, t_cell))
    if v.ndim == 0:
        return float(v), float(i), float(p)
    return v, i, p


def bstc_rating(spec: ModuleSpec, params: SingleDiodeParams) -> float:
    """Modeled power at the bifacial test condition (1000 front + 135 rear W/m2, 25 degC)."""
    if not spec.is_bifacial:
        raise InputError(f"{spec.name} is monofacial; BSTC rating is undefined")
    g_e = bstc_equivalent_irradiance(spec.bifaciality)
    return mpp(params, g_e, 0.0, 0.0, T_REF_C)[2]


def bstc_equivalent_irradiance(bifaciality: float) -> float:
    return G_STC + bifaciality * BSTC_REAR


# ---------------------------------------------------------------------------
# Parameter extraction


def _photo_and_saturation(spec, a, rs, rsh):
    """Solve the short- and open-circuit conditions (linear in I_ph, I_0)."""
    e_sc = math.exp(spec.i_sc * rs / a)
    e_oc = math.exp(spec.v_oc / a)
    i_0 = (spec.i_sc * (1.0 + rs / rsh) - spec.v_oc / rsh) / (e_oc - e_sc)
    i_ph = spec.v_oc / rsh + i_0 * (e_oc - 1.0)
    return i_ph, i_0


def _iv_residuals(spec: ModuleSpec, a, rs, rsh):
    """MPP current and dP/dV = 0 residuals, or None outside the physical domain."""
    if a <= 0 or rs <= 0 or rsh <= 10 * rs:
        return None
    i_ph, i_0 = _photo_and_saturation(spec, a, rs, rsh)
    if i_0 <= 0 or i_ph <= 0:
        return None
    vd = spec.v_mp + spec.i_mp * rs
    e_mp = math.exp(vd / a)
    r_mpp = (i_ph - i_0 * (e_mp - 1.0) - vd / rsh - spec.i_mp) / spec.i_mp
    g = i_0 / a * e_mp + 1.0 / rsh
    didv = -g / (1.0 + rs * g)
    r_slope = (spec.i_mp + spec.v_mp * didv) / spec.i_mp
    return np.array([r_mpp, r_slope])


def _params_from(spec: ModuleSpec, a, rs, rsh, e_gap=E_GAP_REF) -> SingleDiodeParams:
    i_ph, i_0 = _photo_and_saturation(spec, a, rs, rsh)
    return SingleDiodeParams(
        i_ph_f=i_ph,
        i_ph_r=spec.phi_isc_effective * i_ph,
        i_0=i_0,
        n_ideality=a / (spec.n_cells * BOLTZMANN_EV * T_REF_K),
        r_s=rs,
        r_sh=rsh,
        n_cells=spec.n_cells,
        alpha_isc=spec.tc_isc / 100.0 * spec.i_sc,
        e_gap=e_gap,
    )


def _voc_tc_residual(spec: ModuleSpec, params: SingleDiodeParams, dt=10.0):
    """Modeled minus datasheet V_oc change over +dt kelvin, relative to V_oc."""
    voc_hot = float(_open_circuit_voltage(_at_conditions(params, G_STC, 0.0, 0.0, T_REF_C + dt)))
    return (voc_hot - spec.v_oc * (1.0 + spec.tc_voc / 100.0 * dt)) / spec.v_oc


def _extraction_residuals(spec: ModuleSpec, x, dt=10.0):
    a, rs, rsh = x[0], x[1], math.exp(x[2])
    r_iv = _iv_residuals(spec, a, rs, rsh)
    if r_iv is None:
        return None
    r_temp = _voc_tc_residual(spec, _params_from(spec, a, rs, rsh), dt)
    return np.append(r_iv, r_temp)


def _damped_newton(fun, x, max_iter, tol, name):
    r = fun(x)
    if r is None:
        raise ExtractionError(f"{name}: infeasible starting point")
    n = len(x)
    for _ in range(max_iter):
        norm = np.max(np.abs(r))
        if norm < tol:
            return x
        jac = np.empty((n, n))
        for j in range(n):
            h = 1e-7 * max(abs(x[j]), 1e-3)
            xp = x.copy()
            xp[j] += h
            rp = fun(xp)
            if rp is None:
                xp[j] -= 2 * h
                rp = fun(xp)
                h = -h
            if rp is None:
                raise ExtractionError(f"{name}: Jacobian undefined", r)
            jac[:, j] = (rp - r) / h
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise ExtractionError(f"{name}: singular Jacobian", r) from None
        lam = 1.0
        while lam > 1e-6:
            x_new = x + lam * step
            r_new = fun(x_new)
            if r_new is not None and np.max(np.abs(r_new)) < norm:
                x, r = x_new, r_new
                break
            lam /= 2.0
        else:
            raise ExtractionError(f"{name}: line search stalled", r)
    if np.max(np.abs(r)) < tol:
        return x
    raise ExtractionError(f"{name}: no convergence after {max_iter} iterations", r)


def extract_single_diode(spec: ModuleSpec, max_iter: int = 200, tol: float = 1e-9) -> SingleDiodeParams:
    """Fit the five single-diode parameters to a datasheet.

    Conditions: I(0) = I_sc, I(V_oc) = 0, I(V_mp) = I_mp, dP/dV = 0 at the
    MPP, and the V_oc temperature coefficient. The short/open-circuit pair
    is solved in closed form for I_ph and I_0; damped Newton handles the
    remaining three unknowns (a, R_s, log R_sh).

    Some datasheets have no physical root: their knee is too square for an
    ideality factor that also reproduces the V_oc coefficient with the
    silicon band gap. Those fall back to an exact STC fit at
    R_sh = 100 V_oc/I_sc, and the band gap used in the temperature
    translation is calibrated so the V_oc coefficient still matches.
    """
    vt = BOLTZMANN_EV * T_REF_K
    x0 = np.array([
        1.2 * spec.n_cells * vt,
        0.1 * (spec.v_oc - spec.v_mp) / spec.i_mp,
        math.log(5.0 * spec.v_mp / (spec.i_sc - spec.i_mp)),
    ])
    try:
        x = _damped_newton(lambda x: _extraction_residuals(spec, x), x0, max_iter, tol, spec.name)
        return _params_from(spec, x[0], x[1], math.exp(x[2]))
    except ExtractionError as primary:
        failure = primary

    rsh = 100.0 * spec.v_oc / spec.i_sc
    try:
        x = _damped_newton(lambda x: _iv_residuals(spec, x[0], x[1], rsh), x0[:2].copy(),
                           max_iter, tol, spec.name)
    except ExtractionError as err:
        raise ExtractionError(f"{spec.name}: no solution ({failure}; fallback: {err})",
                              err.residuals) from None
    a, rs = float(x[0]), float(x[1])

    def temp_residual(e_gap):
        return _voc_tc_residual(spec, _params_from(spec, a, rs, rsh, e_gap))

    lo, hi = 0.3, 3.0
    if temp_residual(lo) * temp_residual(hi) > 0:
        raise ExtractionError(f"{spec.name}: no band gap reproduces the V_oc coefficient ({failure})")
    e_gap = brentq(temp_residual, lo, hi, xtol=1e-12)
    return _params_from(spec, a, rs, rsh, e_gap)


# ---------------------------------------------------------------------------
# Spec files


def load_module_spec(path) -> ModuleSpec:
    with open(Path(path), encoding="utf-8") as fh:
        return ModuleSpec(**json.load(fh))


def dump_module_spec(spec: ModuleSpec, path) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(asdict(spec), fh, indent=2)
        fh.write("\n")


def bundled_modules() -> dict[str, ModuleSpec]:
    text = resources.files("vbpv").joinpath("data/modules.json").read_text(encoding="utf-8")
    return {key: ModuleSpec(**value) for key, value in json.loads(text).items()}
