"""Straight-line scalar Rusanov reference for one patch.

Independent of the fvbatch package on purpose: plain Python floats, nested
loops, direct multi-dimensional indexing, no enumerators and no batching.
Kernel tests compare against this implementation.
"""

import math


def euler_pressure_ref(q, gamma):
    rho = q[0]
    mom2 = 0.0
    for j in q[1:-1]:
        mom2 += j * j
    return (gamma - 1.0) * (q[-1] - 0.5 * mom2 / rho)


def euler_flux_ref(q, direction, gamma):
    """Directional Euler flux of a single state, as a list of floats."""
    rho = q[0]
    p = euler_pressure_ref(q, gamma)
    jn = q[1 + direction]
    out = [jn]
    for axis in range(len(q) - 2):
        out.append(jn * q[1 + axis] / rho)
    out[1 + direction] += p
    out.append((q[-1] + p) * jn / rho)
    return out


def euler_max_eig_ref(q, direction, gamma):
    rho = q[0]
    p = euler_pressure_ref(q, gamma)
    c = math.sqrt(gamma * p / rho)
    return abs(q[1 + direction] / rho) + c


def rusanov_update_2d(q_haloed, p, s, dt, dx, gamma=1.4):
    """One forward-Euler Rusanov step on a 2d patch with a one-volume halo.

    q_haloed: nested list [y][x][unknown] of size (p+2) x (p+2) x s.
    Returns (q_new, max_eig) with q_new a [y][x][unknown] list of size
    p x p x s (interior only) and max_eig the patch maximum directional
    eigenvalue over interior volumes.
    """
    inv = dt / dx
    q_new = [[[0.0] * s for _ in range(p)] for _ in range(p)]
    max_eig = 0.0

    for y in range(1, p + 1):
        for x in range(1, p + 1):
            qc = q_haloed[y][x]
            qxm = q_haloed[y][x - 1]
            qxp = q_haloed[y][x + 1]
            qym = q_haloed[y - 1][x]
            qyp = q_haloed[y + 1][x]

            lam_x = euler_max_eig_ref(qc, 0, gamma)
            lam_y = euler_max_eig_ref(qc, 1, gamma)
            if lam_x > max_eig:
                max_eig = lam_x
            if lam_y > max_eig:
                max_eig = lam_y

            a_xm = max(euler_max_eig_ref(qxm, 0, gamma), lam_x)
            a_xp = max(euler_max_eig_ref(qxp, 0, gamma), lam_x)
            a_ym = max(euler_max_eig_ref(qym, 1, gamma), lam_y)
            a_yp = max(euler_max_eig_ref(qyp, 1, gamma), lam_y)

            fc_x = euler_flux_ref(qc, 0, gamma)
            fm_x = euler_flux_ref(qxm, 0, gamma)
            fp_x = euler_flux_ref(qxp, 0, gamma)
            fc_y = euler_flux_ref(qc, 1, gamma)
            fm_y = euler_flux_ref(qym, 1, gamma)
            fp_y = euler_flux_ref(qyp, 1, gamma)

            for u in range(s):
                val = qc[u]
                # jump dissipation, one term per face: x-, x+, y-, y+
                val += 0.5 * inv * a_xm * (qxm[u] - qc[u])
                val += 0.5 * inv * a_xp * (qxp[u] - qc[u])
                val += 0.5 * inv * a_ym * (qym[u] - qc[u])
                val += 0.5 * inv * a_yp * (qyp[u] - qc[u])
                # centered flux average difference, one term per direction
                favg_xm = 0.5 * (fm_x[u] + fc_x[u])
                favg_xp = 0.5 * (fc_x[u] + fp_x[u])
                val += inv * (favg_xm - favg_xp)
                favg_ym = 0.5 * (fm_y[u] + fc_y[u])
                favg_yp = 0.5 * (fc_y[u] + fp_y[u])
                val += inv * (favg_ym - favg_yp)
                q_new[y - 1][x - 1][u] = val

    return q_new, max_eig


def rusanov_update_3d(q_haloed, p, s, dt, dx, gamma=1.4):
    """3d counterpart of rusanov_update_2d; q_haloed is [z][y][x][unknown]."""
    inv = dt / dx
    q_new = [[[[0.0] * s for _ in range(p)] for _ in range(p)] for _ in range(p)]
    max_eig = 0.0

    for z in range(1, p + 1):
        for y in range(1, p + 1):
            for x in range(1, p + 1):
                qc = q_haloed[z][y][x]
                neighbours = [
                    (q_haloed[z][y][x - 1], q_haloed[z][y][x + 1], 0),
                    (q_haloed[z][y - 1][x], q_haloed[z][y + 1][x], 1),
                    (q_haloed[z - 1][y][x], q_haloed[z + 1][y][x], 2),
                ]

                vals = list(qc)
                for qm, qp, direction in neighbours:
                    lam_c = euler_max_eig_ref(qc, direction, gamma)
                    if lam_c > max_eig:
                        max_eig = lam_c
                    a_m = max(euler_max_eig_ref(qm, direction, gamma), lam_c)
                    a_p = max(euler_max_eig_ref(qp, direction, gamma), lam_c)
                    for u in range(s):
                        vals[u] += 0.5 * inv * a_m * (qm[u] - qc[u])
                        vals[u] += 0.5 * inv * a_p * (qp[u] - qc[u])
                for qm, qp, direction in neighbours:
                    fc = euler_flux_ref(qc, direction, gamma)
                    fm = euler_flux_ref(qm, direction, gamma)
                    fp = euler_flux_ref(qp, direction, gamma)
                    for u in range(s):
                        favg_m = 0.5 * (fm[u] + fc[u])
                        favg_p = 0.5 * (fc[u] + fp[u])
                        vals[u] += inv * (favg_m - favg_p)
                q_new[z - 1][y - 1][x - 1] = vals

    return q_new, max_eig
