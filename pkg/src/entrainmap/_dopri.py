"""Dormand-Prince 5(4) step with Hairer's continuous extension.

Functions here are numba-jitted; the generic integrator in ``odeint`` calls
their ``py_func`` so both paths execute the same arithmetic.
"""
import numpy as np
from numba import njit

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
D1 = -12715105075 / 11282082432
D3 = 87487479700 / 32700410799
D4 = -10690763975 / 1880347072
D5 = 701980252875 / 199316789632
D6 = -1453857185 / 822651844
D7 = 69997945 / 29380423

# controller constants (Hairer, Norsett & Wanner)
SAFETY = 0.9
BETA = 0.04
EXPO = 0.2 - BETA * 0.75
FAC_MIN = 0.2
FAC_MAX = 10.0


A = np.zeros((7, 6))
A[1, 0] = A21
A[2, :2] = A31, A32
A[3, :3] = A41, A42, A43
A[4, :4] = A51, A52, A53, A54
A[5, :5] = A61, A62, A63, A64, A65
A[6, :6] = A71, 0.0, A73, A74, A75, A76
C = np.array([0.0, C2, C3, C4, C5, 1.0, 1.0])
E = np.array([E1, 0.0, E3, E4, E5, E6, E7])
D = np.array([D1, 0.0, D3, D4, D5, D6, D7])


@njit(cache=True)
def stage_state(y, h, K, s):
    """Input state of stage ``s``; stage 6 input is the 5th-order solution."""
    out = y.copy()
    for j in range(s):
        a = A[s, j]
        if a != 0.0:
            out += h * a * K[j]
    return out


@njit(cache=True)
def stage_time(t, h, s, t_end_stage):
    return t_end_stage if s >= 5 else t + C[s] * h


@njit(cache=True)
def finish(y, y_new, h, K):
    """Error estimate and dense-output rows for a completed stage set."""
    n = y.shape[0]
    err = np.zeros(n)
    acc = np.zeros(n)
    for j in range(7):
        err += E[j] * K[j]
        acc += D[j] * K[j]
    cont = np.empty((5, n))
    ydiff = y_new - y
    bspl = h * K[0] - ydiff
    cont[0] = y
    cont[1] = ydiff
    cont[2] = bspl
    cont[3] = ydiff - h * K[6] - bspl
    cont[4] = h * acc
    return h * err, cont


@njit
def step(rhs, t, y, h, k1, args, t_end_stage):
    """One trial step. Returns ``(y_new, k7, err, cont)``.

    ``t_end_stage`` is the time passed to the rhs for the last two stages so
    that a step ending on a forcing switch still sees the left-hand value.
    ``cont`` holds the five dense-output coefficient rows.
    """
    K = np.empty((7, y.shape[0]))
    K[0] = k1
    for s in range(1, 7):
        K[s] = rhs(stage_time(t, h, s, t_end_stage), stage_state(y, h, K, s), args)
    y_new = stage_state(y, h, K, 6)
    err, cont = finish(y, y_new, h, K)
    return y_new, K[6], err, cont


@njit(cache=True)
def error_norm(err, y, y_new, rtol, atol):
    s = 0.0
    for i in range(y.shape[0]):
        sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        s += (err[i] / sc) ** 2
    return np.sqrt(s / y.shape[0])


@njit(cache=True)
def dense(cont, theta):
    t1 = 1.0 - theta
    return cont[0] + theta * (cont[1] + t1 * (cont[2] + theta * (cont[3] + t1 * cont[4])))


@njit(cache=True)
def dense_component(cont, theta, i):
    t1 = 1.0 - theta
    return cont[0, i] + theta * (cont[1, i] + t1 * (cont[2, i] + theta * (cont[3, i] + t1 * cont[4, i])))


@njit(cache=True)
def step_factor(err, err_old):
    """PI controller factor for the next step size."""
    if err == 0.0:
        return FAC_MAX
    fac = err ** EXPO / err_old ** BETA / SAFETY
    fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac))
    return 1.0 / fac
