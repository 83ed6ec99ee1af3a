"""Time integration of the normalized curvature-flow PDE on the sphere grid.

The evolving unknown is phi = log r with

    d(phi)/d(tau) = -(e^{(beta-1)phi} rho + (rho/r) lam^beta g(r/lam))
                      * sigma_k(kappa)^alpha  +  gamma,

where lam = exp(gamma*tau) is the normalization factor, advanced analytically
(never integrated).  Stepping is classic explicit RK4 with a parabolic CFL
bound recomputed from the current curvature field every step; all reductions
are fixed-order numpy reductions so repeated runs are bit-identical.

The physical-time picture: the unnormalized surface shrinks toward the origin,
r_phys = exp(phi - gamma*tau); ``unnormalize`` reconstructs it together with
the physical time t(tau).
"""

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import DiagnosticsSeries
from .speed_profile import (
    BumpG,
    ExpFlatG,
    MonomialG,
    ScaledSpeedContext,
    SpeedProfile,
    TabulatedG,
    ZeroG,
    validate_for_regime,
)
from .sphere_geometry import (
    RadialGraph,
    graph_from_text,
    graph_to_text,
    weingarten,
)
from .symfunc import CONE_EPS, sigma_k_partials

_MIN_DT = 1e-14
_ALPHA_TOL = 1e-12


class FlowError(Exception):
    """Base class for run-terminating integration errors; carries the failing tau."""

    def __init__(self, message, tau=None):
        super().__init__(message)
        self.tau = tau

    def __str__(self):
        base = super().__str__()
        if self.tau is not None:
            return f"{base} (at tau={self.tau:.6g})"
        return base


class ConeViolationError(FlowError):
    """A node's curvature left the k-convexity cone."""

    def __init__(self, node, margin, tau=None):
        super().__init__(f"cone margin {margin:.3e} <= {CONE_EPS:g} at node {node}", tau)
        self.node = node
        self.margin = margin


class NonFiniteRHSError(FlowError):
    """The PDE right-hand side produced a non-finite value."""


class StepTooSmallError(FlowError):
    """The stable step size collapsed below 1e-14."""


class AdmissibilityError(ValueError):
    """Profile/initial-data combination fails its theorem-regime validator."""


@dataclass(frozen=True)
class FlowState:
    """One instant of the normalized flow.  lam == exp(gamma*tau) always."""

    tau: float
    graph: RadialGraph
    lam: float
    step_count: int
    last_dt: float
    profile: SpeedProfile


@dataclass(frozen=True)
class StepControl:
    """Integration controls.  sphericity_stop = 0 disables that termination."""

    t_end: float
    cfl: float = 0.2
    dt_max: float = 1.0
    sphericity_stop: float = 0.0
    max_steps: int = 10_000_000
    record_every: int = 10

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must be in (0, 1], got {self.cfl}")
        if not self.t_end > 0.0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not self.dt_max > 0.0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")
        if self.sphericity_stop < 0.0:
            raise ValueError("sphericity_stop must be >= 0 (0 disables)")
        if self.max_steps < 1 or self.record_every < 1:
            raise ValueError("max_steps and record_every must be >= 1")


@dataclass(frozen=True)
class RunResult:
    state: FlowState
    series: DiagnosticsSeries
    reason: str  # "t_end" | "sphericity_stop" | "max_steps"


# ---------------------------------------------------------------------------
# normalization maps


def lambda_maps(profile, t):
    """(lambda(t), tau(t)) for physical time t >= 0."""
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    gamma = profile.gamma
    if profile.equality_regime:
        return math.exp(gamma * t), t
    p = profile.beta - profile.ka - 1.0
    lam = (1.0 + p * gamma * t) ** (1.0 / p)
    tau = math.log1p(p * gamma * t) / (p * gamma)
    return lam, tau


def t_of_tau(profile, tau):
    """Physical time for normalized time tau; inverse of lambda_maps' tau(t)."""
    if profile.equality_regime:
        return tau
    p = profile.beta - profile.ka - 1.0
    return math.expm1(p * profile.gamma * tau) / (p * profile.gamma)


def lambda_of_tau(profile, tau):
    return math.exp(profile.gamma * tau)


def unnormalize(state):
    """(t, graph) of the original shrinking flow: r_phys = r * lambda^-1."""
    t = t_of_tau(state.profile, state.tau)
    phi_phys = state.graph.phi - state.profile.gamma * state.tau
    return t, RadialGraph(state.graph.grid, phi_phys)


# ---------------------------------------------------------------------------
# right-hand side


def _cone_gate(profile, field, tau):
    """Abort on cone exit, except for (k, alpha) = (1, 1) where the operator
    stays uniformly parabolic for any curvature sign."""
    if profile.k == 1 and abs(profile.alpha - 1.0) <= _ALPHA_TOL:
        return
    node_margin = field.sigma[..., : profile.k].min(axis=-1)
    margin = node_margin.min()
    if margin <= CONE_EPS:
        node = np.unravel_index(int(np.argmin(node_margin)), node_margin.shape)
        node = node[0] if len(node) == 1 else node
        raise ConeViolationError(node=node, margin=float(margin), tau=tau)


def _sigma_pow(sig, alpha):
    if abs(alpha - 1.0) <= _ALPHA_TOL:
        return sig
    return np.power(sig, alpha)


def rhs(profile, graph, lam, tau=None):
    """d(phi)/d(tau) per node, plus the curvature field and coefficient A."""
    field = weingarten(graph)
    _cone_gate(profile, field, tau)
    sig = field.sigma[..., profile.k - 1]
    speed = ScaledSpeedContext(profile, lam).eval(field.r)
    A = np.exp((profile.beta - 1.0) * graph.phi) * field.rho + (
        field.rho / field.r
    ) * speed.g
    out = -A * _sigma_pow(sig, profile.alpha) + profile.gamma
    if not np.all(np.isfinite(out)):
        raise NonFiniteRHSError("non-finite right-hand side", tau)
    return out, field, A


def is_zonal(graph):
    """True when the field is bit-exactly longitude-independent (n=2 only).

    Every stencil and coefficient in this module is longitude-uniform, so a
    bit-exactly zonal state stays bit-exactly zonal under RK4; the longitude
    direction then contributes nothing to the stability bound.
    """
    return graph.grid.n == 2 and float(np.ptp(graph.phi, axis=1).max()) == 0.0


def stable_dt_bound(profile, graph, field, A, zonal=None):
    """Parabolic bound h_eff^2 / D_max from the linearized principal symbol.

    D = alpha * A * sigma_k^(alpha-1) * maxeig(d sigma_k / d kappa) / (r rho)
    per node; for n=2 the longitude direction carries the metric factor
    sin^2(theta) unless the state is bit-exactly zonal.
    """
    k, alpha = profile.k, profile.alpha
    sdot_max = sigma_k_partials(field.kappa, k).max(axis=-1)
    D = A * sdot_max / (field.r * field.rho)
    if abs(alpha - 1.0) > _ALPHA_TOL:
        sig = field.sigma[..., k - 1]
        D = alpha * np.power(sig, alpha - 1.0) * D
    grid = graph.grid
    if grid.n == 1:
        return float(grid.h_theta**2 / D.max())
    if zonal is None:
        zonal = is_zonal(graph)
    ht2 = grid.h_theta**2
    if zonal:
        return float(ht2 / D.max())
    sin2 = np.sin(grid.theta)[:, None] ** 2
    allowed = np.minimum(ht2, grid.h_phi**2 * sin2) / D
    return float(allowed.min())


def step(state, control, dt_cap=math.inf):
    """One explicit RK4 step; dt = min(dt_max, cfl * stability bound, dt_cap)."""
    profile, grid = state.profile, state.graph.grid
    gamma = profile.gamma
    tau0, phi0 = state.tau, state.graph.phi
    zonal = is_zonal(state.graph)

    def stage(phi_arr, tau_stage):
        try:
            return rhs(profile, RadialGraph(grid, phi_arr), math.exp(gamma * tau_stage), tau_stage)
        except FlowError as err:
            if err.tau is None:
                err.tau = tau_stage
            raise

    k1, field0, A0 = stage(phi0, tau0)
    dt = min(control.dt_max, control.cfl * stable_dt_bound(profile, state.graph, field0, A0, zonal), dt_cap)
    if dt < _MIN_DT:
        raise StepTooSmallError(f"stable step {dt:.3e} below {_MIN_DT:g}", tau0)
    half = tau0 + 0.5 * dt
    k2, _, _ = stage(phi0 + (0.5 * dt) * k1, half)
    k3, _, _ = stage(phi0 + (0.5 * dt) * k2, half)
    k4, _, _ = stage(phi0 + dt * k3, tau0 + dt)
    phi1 = phi0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    tau1 = tau0 + dt
    return FlowState(
        tau=tau1,
        graph=RadialGraph(grid, phi1),
        lam=math.exp(gamma * tau1),
        step_count=state.step_count + 1,
        last_dt=dt,
        profile=profile,
    )


# ---------------------------------------------------------------------------
# runs


def initial_state(profile, graph, validate_regime=True):
    """FlowState at tau = 0.  Unless disabled, the profile must pass its
    theorem-regime validator (override knob for deliberately inadmissible runs)."""
    if graph.grid.n != profile.n:
        raise ValueError(f"grid dimension {graph.grid.n} != profile n {profile.n}")
    if validate_regime:
        report = validate_for_regime(profile)
        if not report.ok:
            raise AdmissibilityError(
                f"profile fails its regime validator: condition {report.condition!r}, "
                f"worst violation {report.worst_violation:.3e} at r={report.location:.6g}"
            )
    return FlowState(
        tau=0.0, graph=graph, lam=1.0, step_count=0, last_dt=0.0, profile=profile
    )


def diagnostics_row(state):
    """The per-record reduction vector (see DiagnosticsSeries for the order)."""
    profile = state.profile
    field = weingarten(state.graph)
    speed = ScaledSpeedContext(profile, state.lam).eval(field.r)
    sig = field.sigma[..., profile.k - 1]
    big_phi = speed.f * _sigma_pow(sig, profile.alpha)
    r_min = float(field.r.min())
    r_max = float(field.r.max())
    return {
        "tau": state.tau,
        "r_min": r_min,
        "r_max": r_max,
        "osc": r_max - r_min,
        "grad_phi_max": float(field.grad_phi_norm().max()),
        "grad_r_max": float(field.grad_r_norm().max()),
        "u_min": float(field.u.min()),
        "phi_min_cap": float(big_phi.min()),
        "phi_max_cap": float(big_phi.max()),
        "cone_margin": float(field.sigma[..., : profile.k].min()),
        "a_max": float(np.abs(field.kappa).max()),
        "dt": state.last_dt,
    }


def run(state, control):
    """Advance until t_end, sphericity_stop, or max_steps (checked in that
    order), recording diagnostics every record_every steps plus the final state."""
    series = DiagnosticsSeries()
    last_recorded = -1
    while True:
        if state.step_count % control.record_every == 0 and state.step_count != last_recorded:
            series.append(**diagnostics_row(state))
            last_recorded = state.step_count
        if state.tau >= control.t_end - 1e-15:
            reason = "t_end"
            break
        if control.sphericity_stop > 0.0:
            if float(np.ptp(np.exp(state.graph.phi))) < control.sphericity_stop:
                reason = "sphericity_stop"
                break
        if state.step_count >= control.max_steps:
            reason = "max_steps"
            break
        try:
            state = step(state, control, dt_cap=control.t_end - state.tau)
        except FlowError as err:
            if err.tau is None:
                err.tau = state.tau
            raise
    if state.step_count != last_recorded:
        series.append(**diagnostics_row(state))
    return RunResult(state=state, series=series, reason=reason)


# ---------------------------------------------------------------------------
# checkpointing (bit-exact resume)


def _fmt(x):
    return format(float(x), ".17g")


def _profile_line(profile):
    g = profile.g
    parts = [
        f"n={profile.n}",
        f"k={profile.k}",
        f"alpha={_fmt(profile.alpha)}",
        f"beta={_fmt(profile.beta)}",
        f"g={g.KIND}",
    ]
    if g.KIND == "bump":
        parts += [f"epsilon={_fmt(g.epsilon)}", f"p={_fmt(g.p)}"]
    elif g.KIND == "expflat":
        parts += [f"p={_fmt(g.p)}"]
    elif g.KIND == "monomial":
        parts += [f"l={_fmt(g.l)}"]
    elif g.KIND == "tabulated":
        parts += [f"points={len(g.points)}"]
    return "profile: " + " ".join(parts)


def save_checkpoint(state, path):
    lines = ["anisoflow-checkpoint 1", _profile_line(state.profile)]
    g = state.profile.g
    if g.KIND == "tabulated":
        for pt, val, der in zip(g.points, g.values, g.derivs):
            lines.append(f"table: {_fmt(pt)},{_fmt(val)},{_fmt(der)}")
    lines.append(
        "state: "
        f"tau={_fmt(state.tau)} lambda={_fmt(state.lam)} "
        f"step_count={state.step_count} last_dt={_fmt(state.last_dt)}"
    )
    lines.append("graph:")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
        fh.write(graph_to_text(state.graph))


def _parse_kv(text):
    return dict(tok.split("=", 1) for tok in text.split())


def load_checkpoint(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "anisoflow-checkpoint 1":
        raise ValueError("not an anisoflow checkpoint")
    if not lines[1].startswith("profile: "):
        raise ValueError("checkpoint missing profile line")
    pf = _parse_kv(lines[1][len("profile: ") :])
    idx = 2
    kind = pf["g"]
    if kind == "tabulated":
        count = int(pf["points"])
        rows = []
        for _ in range(count):
            if not lines[idx].startswith("table: "):
                raise ValueError("checkpoint missing tabulated g rows")
            rows.append([float(v) for v in lines[idx][len("table: ") :].split(",")])
            idx += 1
        pts, vals, ders = (np.array(col) for col in zip(*rows))
        g = TabulatedG(points=pts, values=vals, derivs=ders)
    elif kind == "zero":
        g = ZeroG()
    elif kind == "bump":
        g = BumpG(epsilon=float(pf["epsilon"]), p=float(pf["p"]))
    elif kind == "expflat":
        g = ExpFlatG(p=float(pf["p"]))
    elif kind == "monomial":
        g = MonomialG(l=float(pf["l"]))
    else:
        raise ValueError(f"unknown g kind {kind!r} in checkpoint")
    profile = SpeedProfile(
        n=int(pf["n"]), k=int(pf["k"]), alpha=float(pf["alpha"]), beta=float(pf["beta"]), g=g
    )
    if not lines[idx].startswith("state: "):
        raise ValueError("checkpoint missing state line")
    st = _parse_kv(lines[idx][len("state: ") :])
    idx += 1
    if lines[idx].strip() != "graph:":
        raise ValueError("checkpoint missing graph section")
    graph = graph_from_text("\n".join(lines[idx + 1 :]))
    tau = float(st["tau"])
    lam = float(st["lambda"])
    expected = math.exp(profile.gamma * tau)
    if lam != expected:
        raise ValueError(
            f"checkpoint lambda {lam!r} inconsistent with exp(gamma*tau) = {expected!r}"
        )
    state = FlowState(
        tau=tau,
        graph=graph,
        lam=lam,
        step_count=int(st["step_count"]),
        last_dt=float(st["last_dt"]),
        profile=profile,
    )
    if graph.grid.n != profile.n:
        raise ValueError("checkpoint grid dimension does not match profile")
    return state
