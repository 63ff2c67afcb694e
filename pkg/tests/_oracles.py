"""Independent reference implementations used as test oracles.

These deliberately avoid the package's vectorized kernels: plain scalar math,
explicit matrices, term-by-term sums.
"""

import math

import numpy as np

from riskmpc.ocp import ObjectPrediction, OcpProblem, OcpWeights
from riskmpc.risk import InfraRiskParams, LaneLine, ObjectRiskParams, ObjectState
from riskmpc.vehicle import ControlInput, VehicleParams, VehicleState, step


def infra_oracle(x, y, lines, amplitude, sigma):
    total = 0.0
    for ln in lines:
        yl = ln.c0 + ln.c1 * x + ln.c2 * x ** 2 + ln.c3 * x ** 3
        amp = amplitude if ln.amplitude is None else ln.amplitude
        total += amp * math.exp(-((y - yl) ** 2) / (2 * sigma ** 2))
    return total


def object_oracle(x, y, objects):
    total = 0.0
    for o, r in objects:
        d = np.array([x - o.x_o, y - o.y_o])
        R = np.array([[math.cos(o.theta_o), -math.sin(o.theta_o)],
                      [math.sin(o.theta_o), math.cos(o.theta_o)]])
        Sigma = np.diag([r.sigma_x ** 2, r.sigma_y ** 2])
        f = float(d @ R @ np.linalg.inv(Sigma) @ R.T @ d)
        total += r.amplitude_AO * math.exp(-f / 2)
    return total


def cost_oracle(problem, z):
    """Objective summed term by term from repeated single steps."""
    u = np.asarray(z, dtype=float).reshape(-1, 2)
    wd, wa = problem.weights.input_weight
    s = problem.initial_state
    states = [s]
    total = 0.0
    for d, a in u:
        total += wd * d * d + wa * a * a
        s = step(s, ControlInput(float(d), float(a)), problem.vehicle)
        states.append(s)
    ref = problem.reference.as_tuple()
    for w, sv, rv in zip(problem.weights.terminal_weight, states[-1].as_tuple(), ref):
        total += w * (sv - rv) ** 2
    if any(problem.weights.stage_weight):
        for k in range(1, problem.horizon_N):
            for w, sv, rv in zip(problem.weights.stage_weight, states[k].as_tuple(),
                                 problem.stage_references[k - 1].as_tuple()):
                total += w * (sv - rv) ** 2
    names = ("x", "y", "theta", "v")
    for k in range(1, problem.horizon_N + 1):
        st = states[k]
        total += infra_oracle(st.x, st.y, problem.lines, problem.infra.amplitude_AI, problem.infra.sigma)
        objs = [(pred.states[k], pred.risk) for pred in problem.object_predictions]
        total += object_oracle(st.x, st.y, objs)
        for name, val in zip(names, st.as_tuple()):
            lo, hi = problem.vehicle.state_bounds[name]
            viol = max(0.0, val - hi, lo - val)
            total += problem.penalty_weight * viol * viol
    return total


def central_difference(f, z, h):
    z = np.asarray(z, dtype=float)
    g = np.zeros_like(z)
    for i in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (f(zp) - f(zm)) / (2 * h)
    return g


def relative_error(analytic, numeric, floor=1e-6):
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    return float(np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), floor))


def random_lines(rng, n=None):
    n = int(rng.integers(1, 5)) if n is None else n
    return [LaneLine(float(rng.uniform(-2, 12)), float(rng.uniform(-0.05, 0.05)),
                     float(rng.uniform(-1e-3, 1e-3)), float(rng.uniform(-1e-5, 1e-5)))
            for _ in range(n)]


def random_objects(rng, near, n=None):
    n = int(rng.integers(1, 4)) if n is None else n
    out = []
    for _ in range(n):
        o = ObjectState(float(near[0] + rng.uniform(-15, 15)), float(near[1] + rng.uniform(-3, 3)),
                        float(rng.uniform(-math.pi, math.pi)))
        r = ObjectRiskParams(float(rng.uniform(10, 1000)), float(rng.uniform(2, 25)),
                             float(rng.uniform(0.8, 3)))
        out.append((o, r))
    return out


def random_problem(rng, N=None, with_stage=False):
    """A random but well-scaled horizon problem plus an input vector inside the box."""
    N = int(rng.integers(2, 21)) if N is None else N
    ts = float(rng.uniform(0.2, 0.8))
    vehicle = VehicleParams(
        wheelbase_L=float(rng.uniform(2, 3.5)),
        ts=ts,
        state_bounds={"y": (1.0, 9.5), "v": (0.0, 10.0)},
        input_bounds={"delta": (-0.1, 0.1), "a": (-4.0, 0.5)},
    )
    x0 = VehicleState(float(rng.uniform(-10, 10)), float(rng.uniform(0, 10)),
                      float(rng.uniform(-0.2, 0.2)), float(rng.uniform(0, 12)))
    ref = VehicleState(x0.x + N * ts * 10, float(rng.uniform(1, 9)), 0.0, 10.0)
    preds = []
    for _ in range(int(rng.integers(0, 4))):
        o = ObjectState(float(x0.x + rng.uniform(0, 60)), float(rng.uniform(0, 10)),
                        float(rng.uniform(-0.5, 0.5)))
        speed = float(rng.uniform(0, 8))
        states = tuple(ObjectState(o.x_o + k * ts * speed * math.cos(o.theta_o),
                                   o.y_o + k * ts * speed * math.sin(o.theta_o), o.theta_o)
                       for k in range(N + 1))
        preds.append(ObjectPrediction(states, ObjectRiskParams(float(rng.uniform(10, 1000)),
                                                               float(rng.uniform(5, 25)),
                                                               float(rng.uniform(1, 2)))))
    stage_w = tuple(float(w) for w in rng.uniform(0, 1, 4)) if with_stage else (0, 0, 0, 0)
    stage_refs = tuple(VehicleState(x0.x + k * ts * 10, ref.y, 0.0, 10.0) for k in range(1, N)) \
        if with_stage else None
    problem = OcpProblem(
        horizon_N=N,
        initial_state=x0,
        reference=ref,
        weights=OcpWeights((float(rng.uniform(0, 5)), float(rng.uniform(0, 200))),
                           tuple(float(w) for w in rng.uniform(0, 1, 4)), stage_w),
        vehicle=vehicle,
        lines=tuple(random_lines(rng)),
        infra=InfraRiskParams(float(rng.uniform(10, 300)), float(rng.uniform(0.8, 2))),
        object_predictions=tuple(preds),
        penalty_weight=float(rng.uniform(0, 1e4)),
        stage_references=stage_refs,
    )
    z = np.column_stack([rng.uniform(-0.1, 0.1, N), rng.uniform(-4, 0.5, N)]).ravel()
    return problem, z
