"""Compiled numeric core: pairwise potential, per-candidate energy,
Metropolis chain, and beam casting.

Every caller (public energy evaluation, the velocity sampler, sensing)
goes through these functions so results are bit-identical regardless of
entry point. Compiled with numba when available; the same code runs as
plain Python otherwise, just slower.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


# Distances below this are clamped so the 1/r and r^-6 terms stay finite.
R_FLOOR = 1e-6

# Row indices into the (3, 5) pair-parameter array used by energy().
PAIR_OBJECT = 0
PAIR_OBSTACLE = 1
PAIR_ROBOT = 2
# Columns: epsilon, r0, alpha, charge_product, eps0.


@njit(cache=True, nogil=True)
def cb_phi(r: float, eps: float, r0: float, alpha: float, cc: float, eps0: float) -> float:
    """Exp-6 pair potential plus a Coulomb term, well depth -eps at r0
    when cc == 0. r is clamped at R_FLOOR."""
    if r < R_FLOOR:
        r = R_FLOOR
    ratio = r0 / r
    exp6 = eps * (
        (6.0 / (alpha - 6.0)) * math.exp(alpha * (1.0 - r / r0))
        - (alpha / (alpha - 6.0)) * ratio**6
    )
    return exp6 + cc / (4.0 * math.pi * eps0 * r)


@njit(cache=True, nogil=True)
def energy(
    vx: float,
    vy: float,
    dt: float,
    obj_rel: np.ndarray,
    obs_rel: np.ndarray,
    nbr_rel: np.ndarray,
    nbr_vel: np.ndarray,
    grad_sx: float,
    grad_sy: float,
    grad_n: int,
    mass: float,
    v_max: float,
    pair: np.ndarray,
) -> float:
    """Energy of candidate velocity (vx, vy) against one frozen perception.

    Point sets are relative to the robot's current position; the candidate
    is scored at the predicted position after dt. pair is the (3, 5) array
    of (epsilon, r0, alpha, charge_product, eps0) rows indexed by
    PAIR_OBJECT / PAIR_OBSTACLE / PAIR_ROBOT; the object row's r0 already
    reflects the push/circulate standoff. grad_n <= 0 disables the
    surface-following mismatch term.
    """
    dx = vx * dt
    dy = vy * dt
    h = 0.0

    eps = pair[PAIR_OBJECT, 0]
    r0 = pair[PAIR_OBJECT, 1]
    alpha = pair[PAIR_OBJECT, 2]
    cc = pair[PAIR_OBJECT, 3]
    eps0 = pair[PAIR_OBJECT, 4]
    for i in range(obj_rel.shape[0]):
        rx = obj_rel[i, 0] - dx
        ry = obj_rel[i, 1] - dy
        h += cb_phi(math.sqrt(rx * rx + ry * ry), eps, r0, alpha, cc, eps0)

    if grad_n > 0:
        qx = grad_sx - vx
        qy = grad_sy - vy
        h += 0.5 * mass * (qx * qx + qy * qy)

    eps = pair[PAIR_OBSTACLE, 0]
    r0 = pair[PAIR_OBSTACLE, 1]
    alpha = pair[PAIR_OBSTACLE, 2]
    cc = pair[PAIR_OBSTACLE, 3]
    eps0 = pair[PAIR_OBSTACLE, 4]
    for i in range(obs_rel.shape[0]):
        rx = obs_rel[i, 0] - dx
        ry = obs_rel[i, 1] - dy
        h += cb_phi(math.sqrt(rx * rx + ry * ry), eps, r0, alpha, cc, eps0)

    eps = pair[PAIR_ROBOT, 0]
    r0 = pair[PAIR_ROBOT, 1]
    alpha = pair[PAIR_ROBOT, 2]
    cc = pair[PAIR_ROBOT, 3]
    eps0 = pair[PAIR_ROBOT, 4]
    svx = 0.0
    svy = 0.0
    n_nbr = nbr_rel.shape[0]
    for i in range(n_nbr):
        px = nbr_rel[i, 0] + nbr_vel[i, 0] * dt
        py = nbr_rel[i, 1] + nbr_vel[i, 1] * dt
        rx = px - dx
        ry = py - dy
        h += cb_phi(math.sqrt(rx * rx + ry * ry), eps, r0, alpha, cc, eps0)
        svx += nbr_vel[i, 0]
        svy += nbr_vel[i, 1]
    if n_nbr > 0:
        rvx = svx - vx
        rvy = svy - vy
        h += 0.5 * mass * (rvx * rvx + rvy * rvy)

    gap = v_max - math.sqrt(vx * vx + vy * vy)
    h += 0.5 * mass * gap * gap
    return h


@njit(cache=True, nogil=True)
def mh_chain(
    v0x: float,
    v0y: float,
    normals: np.ndarray,
    uniforms: np.ndarray,
    sigma: float,
    clip_v: float,
    temp: float,
    burn: int,
    dt: float,
    obj_rel: np.ndarray,
    obs_rel: np.ndarray,
    nbr_rel: np.ndarray,
    nbr_vel: np.ndarray,
    grad_sx: float,
    grad_sy: float,
    grad_n: int,
    mass: float,
    v_max: float,
    pair: np.ndarray,
) -> tuple:
    """Metropolis chain over candidate velocities; returns the mean of the
    post-burn-in chain states (iterations burn+1..I inclusive).

    Proposals are Gaussian around the tick-start velocity (not the chain
    state), so the chain targets the Boltzmann law tilted by the proposal
    density: a low-pass on the commanded velocity that keeps isolated
    robots on ballistic headings. normals has shape (I, 2), uniforms
    shape (I,); proposals are radially clipped to clip_v before
    evaluation. Acceptance: dE < 0 or u < e^-dE on energies divided by
    temp.
    """
    cx = v0x
    cy = v0y
    s = math.sqrt(cx * cx + cy * cy)
    if s > clip_v:
        cx *= clip_v / s
        cy *= clip_v / s
    c0x = cx
    c0y = cy
    e_cur = (
        energy(cx, cy, dt, obj_rel, obs_rel, nbr_rel, nbr_vel, grad_sx, grad_sy, grad_n, mass, v_max, pair)
        / temp
    )
    ax = 0.0
    ay = 0.0
    iters = normals.shape[0]
    for k in range(iters):
        px = c0x + sigma * normals[k, 0]
        py = c0y + sigma * normals[k, 1]
        s = math.sqrt(px * px + py * py)
        if s > clip_v:
            px *= clip_v / s
            py *= clip_v / s
        e_new = (
            energy(px, py, dt, obj_rel, obs_rel, nbr_rel, nbr_vel, grad_sx, grad_sy, grad_n, mass, v_max, pair)
            / temp
        )
        de = e_new - e_cur
        if de < 0.0 or uniforms[k] < math.exp(-de):
            cx = px
            cy = py
            e_cur = e_new
        if k >= burn:
            ax += cx
            ay += cy
    m = iters - burn
    return ax / m, ay / m


@njit(cache=True, nogil=True)
def cast_beams(
    ox: float,
    oy: float,
    beam_count: int,
    segs: np.ndarray,
    labels: np.ndarray,
    max_range: float,
) -> tuple:
    """Cast beam_count rays uniformly over [0, 2pi) from (ox, oy) against
    the segment soup segs (S, 4) with per-segment integer labels.

    Returns (hx, hy, hlabel, hmask): nearest hit per beam within
    max_range, hmask 0 where the beam misses.
    """
    hx = np.zeros(beam_count)
    hy = np.zeros(beam_count)
    hlabel = np.zeros(beam_count, dtype=np.int64)
    hmask = np.zeros(beam_count, dtype=np.int64)
    for b in range(beam_count):
        ang = 2.0 * math.pi * b / beam_count
        dx = math.cos(ang)
        dy = math.sin(ang)
        best_t = max_range
        best_s = -1
        for s in range(segs.shape[0]):
            axp = segs[s, 0] - ox
            ayp = segs[s, 1] - oy
            ex = segs[s, 2] - segs[s, 0]
            ey = segs[s, 3] - segs[s, 1]
            denom = dx * ey - dy * ex
            if abs(denom) < 1e-15:
                continue
            t = (axp * ey - ayp * ex) / denom
            u = (axp * dy - ayp * dx) / denom
            if t >= 0.0 and 0.0 <= u <= 1.0 and t <= best_t:
                best_t = t
                best_s = s
        if best_s >= 0:
            hx[b] = ox + dx * best_t
            hy[b] = oy + dy * best_t
            hlabel[b] = labels[best_s]
            hmask[b] = 1
    return hx, hy, hlabel, hmask


def warmup() -> None:
    """Force-compile the kernels (useful before timing-sensitive runs)."""
    pair = np.ones((3, 5))
    pair[:, 2] = 12.0
    pts = np.zeros((1, 2))
    energy(0.0, 0.0, 0.1, pts, pts, pts, pts, 0.0, 0.0, 0, 1.0, 0.12, pair)
    mh_chain(
        0.0, 0.0, np.zeros((2, 2)), np.zeros(2), 0.01, 0.12, 1.0, 1, 0.1,
        pts, pts, pts, pts, 0.0, 0.0, 0, 1.0, 0.12, pair,
    )
    cast_beams(0.0, 0.0, 4, np.array([[1.0, -1.0, 1.0, 1.0]]), np.zeros(1, dtype=np.int64), 2.0)
