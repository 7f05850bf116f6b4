"""Compiled fixed-step integrator for the multi-area frequency model.

The continuous states live in one flat vector:

    [0, na)            per-area frequency deviation x = f - f0, Hz
    [na, 2na)          per-area angle deviation from the scheduled angles, rad
    [2na, 2na+ng)      governor valve states, pu on fleet rated MW
    [2na+ng, 2na+2ng)  turbine mechanical deviations, pu on fleet rated MW
    [.., +nc)          converter washout states, Hz
    [.., +nc)          converter droop lag states, MW

Relay state machines (UFLS timers, FFR trigger/activation latches) advance
at step boundaries; shed power and the contingency enter the derivative as
per-area injections held constant over each step.  Everything is float64
with a fixed operation order, so identical inputs give bit-identical
traces.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


TWO_PI = 2.0 * np.pi


@njit(cache=True)
def _powers(y, na, ng, nc, g_area, g_par, c_area, c_par,
            l_from, l_to, l_par, pmech, pconv, pexp):
    """Per-area mechanical, converter, and tie-export-deviation power, MW."""
    for a in range(na):
        pmech[a] = 0.0
        pconv[a] = 0.0
        pexp[a] = 0.0
    off_m = 2 * na + ng
    off_w = off_m + ng
    off_pd = off_w + nc
    for i in range(ng):
        mm = y[off_m + i]
        lo = g_par[i, 5]
        hi = g_par[i, 6]
        if mm < lo:
            mm = lo
        elif mm > hi:
            mm = hi
        pmech[g_area[i]] += mm * g_par[i, 0]
    for j in range(nc):
        a = c_area[j]
        z = (y[a] - y[off_w + j]) * c_par[j, 2]  # filtered df/dt, Hz/s
        psi = -c_par[j, 0] * z
        if psi < 0.0:
            psi = 0.0
        if psi > c_par[j, 1]:
            psi = c_par[j, 1]
        pdrp = y[off_pd + j]
        if pdrp < 0.0:
            pdrp = 0.0
        tot = psi + pdrp
        if tot > c_par[j, 5]:
            tot = c_par[j, 5]
        pconv[a] += tot
    for l in range(l_from.shape[0]):
        fl = l_par[l, 2] + l_par[l, 0] * (y[na + l_from[l]] - y[na + l_to[l]])
        if fl > l_par[l, 1]:
            fl = l_par[l, 1]
        elif fl < -l_par[l, 1]:
            fl = -l_par[l, 1]
        dfl = fl - l_par[l, 2]
        pexp[l_from[l]] += dfl
        pexp[l_to[l]] -= dfl


@njit(cache=True)
def _deriv(y, dy, na, ng, nc, f0, x0, a_c0, a_dcoef, pinj,
           g_area, g_par, g_dbkind, c_area, c_par,
           l_from, l_to, l_par, pmech, pconv, pexp):
    _powers(y, na, ng, nc, g_area, g_par, c_area, c_par,
            l_from, l_to, l_par, pmech, pconv, pexp)
    for a in range(na):
        x = y[a]
        dy[a] = a_c0[a] * (pmech[a] + pconv[a] + pinj[a]
                           - a_dcoef[a] * (x - x0) - pexp[a])
        dy[na + a] = TWO_PI * (x - x0)
    off_v = 2 * na
    off_m = off_v + ng
    off_w = off_m + ng
    off_pd = off_w + nc
    for i in range(ng):
        x = y[g_area[i]]
        db = g_par[i, 2]
        if g_dbkind[i] == 0:  # step: full signal passes outside the band
            s = 0.0 if (x >= -db and x <= db) else x
        else:  # offset: signal measured from the band edge
            if x > db:
                s = x - db
            elif x < -db:
                s = x + db
            else:
                s = 0.0
        u = -(s / f0) * g_par[i, 1]
        dy[off_v + i] = (u - y[off_v + i]) * g_par[i, 3]
        mm = y[off_m + i]
        dm = (y[off_v + i] - mm) * g_par[i, 4]
        # anti-windup: hold the turbine state at its limit
        if (mm >= g_par[i, 6] and dm > 0.0) or (mm <= g_par[i, 5] and dm < 0.0):
            dm = 0.0
        dy[off_m + i] = dm
    for j in range(nc):
        x = y[c_area[j]]
        dy[off_w + j] = (x - y[off_w + j]) * c_par[j, 2]
        cmd = -((x - x0) / f0) * c_par[j, 3]
        if cmd < 0.0:
            cmd = 0.0
        dy[off_pd + j] = (cmd - y[off_pd + j]) * c_par[j, 4]


@njit(cache=True)
def run_sim(nsteps, dt, n_out, na, ng, nc, f0, x0,
            y0, a_c0, a_dcoef, pinj0,
            cont_area, cont_step, cont_mw,
            g_area, g_par, g_dbkind,
            c_area, c_par,
            l_from, l_to, l_par,
            u_area, u_set, u_shed, u_steps,
            r_area, r_trig, r_amount, r_delay_steps):
    """Integrate the model over nsteps of dt, relays at every boundary.

    Returns output samples every n_out steps plus the relay event arrays
    and diagnostics (status 0 ok / 1 non-finite state, last valid time,
    extreme frequency deviations seen at any boundary).
    """
    nstate = y0.shape[0]
    nu = u_area.shape[0]
    nf = r_area.shape[0]
    nl = l_from.shape[0]
    nsamp = nsteps // n_out + 1

    out_t = np.empty(nsamp)
    out_f = np.empty((nsamp, na))
    out_mech = np.empty((nsamp, na))
    out_conv = np.empty((nsamp, na))
    out_ffr = np.empty((nsamp, na))
    out_ufls = np.empty((nsamp, na))
    out_exp = np.empty((nsamp, na))

    max_ev = nu + 2 * nf
    ev_time = np.empty(max_ev)
    ev_kind = np.empty(max_ev, dtype=np.int64)
    ev_idx = np.empty(max_ev, dtype=np.int64)
    ev_mw = np.empty(max_ev)
    n_ev = 0

    y = y0.copy()
    k1 = np.empty(nstate)
    k2 = np.empty(nstate)
    k3 = np.empty(nstate)
    k4 = np.empty(nstate)
    yt = np.empty(nstate)
    pmech = np.empty(na)
    pconv = np.empty(na)
    pexp = np.empty(na)
    pinj = np.empty(na)
    pffr = np.zeros(na)
    pufls = np.zeros(na)

    u_count = np.zeros(nu, dtype=np.int64)
    u_tripped = np.zeros(nu, dtype=np.bool_)
    r_trigstep = np.full(nf, -1, dtype=np.int64)
    r_active = np.zeros(nf, dtype=np.bool_)

    status = 0
    last_valid = 0.0
    max_x = y[0]
    min_x = y[0]
    off_m = 2 * na + ng

    for kb in range(nsteps + 1):
        tb = kb * dt

        # relay evaluation at this boundary
        for r in range(nu):
            if u_tripped[r]:
                continue
            if f0 + y[u_area[r]] < u_set[r]:
                u_count[r] += 1
                if u_count[r] >= u_steps[r]:
                    u_tripped[r] = True
                    pufls[u_area[r]] += u_shed[r]
                    ev_time[n_ev] = tb
                    ev_kind[n_ev] = 0
                    ev_idx[n_ev] = r
                    ev_mw[n_ev] = u_shed[r]
                    n_ev += 1
            else:
                u_count[r] = 0
        for r in range(nf):
            if r_trigstep[r] < 0 and f0 + y[r_area[r]] < r_trig[r]:
                r_trigstep[r] = kb
                ev_time[n_ev] = tb
                ev_kind[n_ev] = 1
                ev_idx[n_ev] = r
                ev_mw[n_ev] = 0.0
                n_ev += 1
            if r_trigstep[r] >= 0 and not r_active[r]:
                if kb >= r_trigstep[r] + r_delay_steps[r]:
                    r_active[r] = True
                    pffr[r_area[r]] += r_amount[r]
                    ev_time[n_ev] = tb
                    ev_kind[n_ev] = 2
                    ev_idx[n_ev] = r
                    ev_mw[n_ev] = r_amount[r]
                    n_ev += 1

        for a in range(na):
            if y[a] > max_x:
                max_x = y[a]
            if y[a] < min_x:
                min_x = y[a]

        if kb % n_out == 0:
            s = kb // n_out
            _powers(y, na, ng, nc, g_area, g_par, c_area, c_par,
                    l_from, l_to, l_par, pmech, pconv, pexp)
            out_t[s] = tb
            for a in range(na):
                out_f[s, a] = f0 + y[a]
                out_mech[s, a] = pmech[a]
                out_conv[s, a] = pconv[a]
                out_ffr[s, a] = pffr[a]
                out_ufls[s, a] = pufls[a]
                out_exp[s, a] = pexp[a]

        if kb == nsteps:
            last_valid = tb
            break

        # net injection held constant over the step; pinj0 carries any
        # standing imbalance between committed generation and load
        for a in range(na):
            pinj[a] = pinj0[a] + pffr[a] + pufls[a]
        if cont_area >= 0 and kb >= cont_step:
            pinj[cont_area] -= cont_mw

        _deriv(y, k1, na, ng, nc, f0, x0, a_c0, a_dcoef, pinj,
               g_area, g_par, g_dbkind, c_area, c_par, l_from, l_to, l_par,
               pmech, pconv, pexp)
        for i in range(nstate):
            yt[i] = y[i] + 0.5 * dt * k1[i]
        _deriv(yt, k2, na, ng, nc, f0, x0, a_c0, a_dcoef, pinj,
               g_area, g_par, g_dbkind, c_area, c_par, l_from, l_to, l_par,
               pmech, pconv, pexp)
        for i in range(nstate):
            yt[i] = y[i] + 0.5 * dt * k2[i]
        _deriv(yt, k3, na, ng, nc, f0, x0, a_c0, a_dcoef, pinj,
               g_area, g_par, g_dbkind, c_area, c_par, l_from, l_to, l_par,
               pmech, pconv, pexp)
        for i in range(nstate):
            yt[i] = y[i] + dt * k3[i]
        _deriv(yt, k4, na, ng, nc, f0, x0, a_c0, a_dcoef, pinj,
               g_area, g_par, g_dbkind, c_area, c_par, l_from, l_to, l_par,
               pmech, pconv, pexp)
        ok = True
        for i in range(nstate):
            y[i] = y[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not np.isfinite(y[i]):
                ok = False
        if not ok:
            status = 1
            last_valid = tb
            for s in range((kb + 1) // n_out + 1, nsamp):
                out_t[s] = np.nan
            break
        # turbine states stay inside their limits between steps
        for i in range(ng):
            mm = y[off_m + i]
            if mm < g_par[i, 5]:
                y[off_m + i] = g_par[i, 5]
            elif mm > g_par[i, 6]:
                y[off_m + i] = g_par[i, 6]

    return (out_t, out_f, out_mech, out_conv, out_ffr, out_ufls, out_exp,
            ev_time[:n_ev], ev_kind[:n_ev], ev_idx[:n_ev], ev_mw[:n_ev],
            status, last_valid, max_x, min_x)
