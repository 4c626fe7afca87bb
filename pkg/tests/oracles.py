"""Independent reference routines used to check the package.

These are deliberately naive scalar transcriptions and share no code with
``mlbpso`` beyond plain data.
"""
import math


def db_to_lin(x):
    return 10.0 ** (x / 10.0)


def interference_terms(k, gains_db, loss_db, shadow_db, loads, groups, powers_dbm):
    """Sum of co-channel terms, one cell at a time."""
    total = 0.0
    for i in range(len(loads)):
        if i == k or groups[i] != groups[k]:
            continue
        p_i = db_to_lin(powers_dbm[i])
        g_i = db_to_lin(gains_db[i])
        s_i = db_to_lin(shadow_db[i])
        q_i = db_to_lin(loss_db[i])
        total += loads[i] * p_i * g_i * s_i / q_i
    return total


def sinr_reference(k, gains_db, loss_db, shadow_db, interference_mw, powers_dbm,
                   noise_density=-174.0, bandwidth=180e3):
    noise = db_to_lin(noise_density + 10.0 * math.log10(bandwidth))
    signal = (db_to_lin(powers_dbm[k]) * db_to_lin(gains_db[k]) * db_to_lin(shadow_db[k])
              / db_to_lin(loss_db[k]))
    return 10.0 * math.log10(signal / (interference_mw + noise))


def pareto_better(a, b):
    """Maximization dominance written out objective by objective."""
    return ((a[0] >= b[0] and a[1] >= b[1]) and (a[0] > b[0] or a[1] > b[1]))


def brute_nondominated(points):
    """Set of distinct objective tuples not dominated by any other point."""
    out = set()
    for p in points:
        if not any(pareto_better(q, p) for q in points):
            out.add(tuple(p))
    return out


def chi_reference(phi):
    return 2.0 / abs(2.0 - phi - math.sqrt(phi ** 2 - 4.0 * phi))


def velocity_step_reference(p, v, q, g, r1, r2, c1, cmax, lo, hi):
    """One constriction step, dimension by dimension, with clamp + zeroing."""
    new_p, new_v = [], []
    for d in range(len(p)):
        vd = c1 * v[d] + cmax * r1[d] * (q[d] - p[d]) + cmax * r2[d] * (g[d] - p[d])
        pd = p[d] + vd
        if pd < lo[d]:
            pd, vd = lo[d], 0.0
        elif pd > hi[d]:
            pd, vd = hi[d], 0.0
        new_p.append(pd)
        new_v.append(vd)
    return new_p, new_v


def staircase_area(points, ref, n=2000):
    """Dominated area of a 2-D max front by midpoint integration over f1."""
    lo = ref[0]
    hi = max(p[0] for p in points)
    dx = (hi - lo) / n
    area = 0.0
    for j in range(n):
        x = lo + (j + 0.5) * dx
        h = max((p[1] for p in points if p[0] >= x), default=ref[1])
        area += max(h - ref[1], 0.0) * dx
    return area


def benchmark_front_hypervolume(ref=(-20.0, -40.0), n=200_000):
    """Dominated area of the continuous front of (-x^2, -(x-2)^2), x in [0, 2].

    Midpoint quadrature over f1: for f1 below -4 the best attainable f2 is 0
    (x = 2); on [-4, 0] it is -(sqrt(-f1) - 2)^2.
    """
    lo, hi = ref[0], 0.0
    dx = (hi - lo) / n
    area = 0.0
    for j in range(n):
        f1 = lo + (j + 0.5) * dx
        f2 = 0.0 if f1 <= -4.0 else -(math.sqrt(-f1) - 2.0) ** 2
        area += (f2 - ref[1]) * dx
    return area
