"""Pure-Python inner loops. ``_kernels.pyx`` is a line-for-line typed copy;
both must produce bit-identical results (checked in the test suite).

Array layouts are documented in ``_backend.py``.
"""

import math

NEVER = -(1 << 60)


def _gen_advance(gen, gen_i, queue, g, k, dt, amp, t_w, tau, smooth, enabled):
    """Pop due triggers of generator ``g`` and return its output at step ``k``."""
    qcap = queue.shape[1]
    while gen_i[g, 3] > 0 and queue[g, gen_i[g, 2]] <= k:
        gen_i[g, 0] = queue[g, gen_i[g, 2]]
        gen_i[g, 1] = 1
        gen_i[g, 2] = (gen_i[g, 2] + 1) % qcap
        gen_i[g, 3] -= 1
        gen[g, 0] = gen[g, 1]
    val = 0.0
    if gen_i[g, 1]:
        s = (k - gen_i[g, 0]) * dt
        w = 2.0 * math.pi / t_w
        if smooth and s < 0.25 * t_w:
            c = math.cos(w * s)
            sn = math.sin(w * s)
            val = gen[g, 0] * c * c + amp * sn * sn
        elif s < 0.75 * t_w:
            val = amp * math.sin(w * s)
        else:
            x = (s - 0.75 * t_w) / tau
            if x > 40.0:
                gen_i[g, 1] = 0
            else:
                val = -amp * math.exp(-x)
    if not enabled:
        val = 0.0
    gen[g, 1] = val
    return val


def _gen_push(gen_i, queue, g, step):
    qcap = queue.shape[1]
    if gen_i[g, 3] >= qcap:
        raise OverflowError("write-pulse trigger queue full")
    queue[g, (gen_i[g, 2] + gen_i[g, 3]) % qcap] = step
    gen_i[g, 3] += 1


def _conductance(model, vc, dev):
    if model == 1:
        return dev[9] * (dev[10] / abs(vc) + dev[11] / (abs(vc) * (vc - dev[12]) * (vc - dev[12])))
    return dev[6] * vc


def _gfrac(model, vc, dev):
    """Conductance as a fraction of G_max, the variable of the soft bound."""
    if model == 1:
        return _conductance(1, vc, dev) / dev[6]
    return (vc - dev[4]) / (dev[5] - dev[4])


def _pump(model, vc, v, dt, dev):
    """Threshold charge pump on the state variable; returns the new state."""
    if model == 1:
        v_tp = 0.5 - 0.01 * (vc + 0.5)
        v_tn = vc
    else:
        v_tp = dev[7]
        v_tn = dev[8]
    lo = dev[4]
    hi = dev[5]
    if v > v_tp:
        rate = -dev[2] * (v - v_tp)
        if dev[3] != 0.0:
            rate *= max(_gfrac(model, vc, dev), 0.0) ** dev[3]
    elif v < v_tn:
        rate = -dev[1] * (v - v_tn)
        if dev[3] != 0.0:
            rate *= max(1.0 - _gfrac(model, vc, dev), 0.0) ** dev[3]
    else:
        return vc
    vc = vc + rate * dt
    if vc < lo:
        vc = lo
    elif vc > hi:
        vc = hi
    return vc


def _lif(v, ref, k, i_in, lp):
    """Returns (v, ref_until, spiked)."""
    if k < ref:
        return lp[3], ref, 0
    v = v * lp[0] + (i_in / lp[1]) * (1.0 - lp[0])
    if v >= lp[2]:
        return lp[3], k + int(lp[4]), 1
    return v, ref, 0


def _record_spike(spikes, counters, k, kind, idx):
    n = counters[0]
    if n < spikes.shape[0]:
        spikes[n, 0] = k
        spikes[n, 1] = kind
        spikes[n, 2] = idx
    counters[0] = n + 1


def circuit_run(n_steps, step0, dt, vc, dev, v_in, in_ref, i_in, lif_in,
                v_out, out_ref, i_teach, lif_out, gen, gen_i, queue, wp,
                read_start, rp, hx, hy, fp, ring, s1, s2, ap, racc, flags,
                ev, spikes, reads, trace, counters):
    m = vc.shape[0]
    n = vc.shape[1]
    model = int(dev[0])
    amp_w = wp[0]
    t_w = wp[1]
    tau_row = wp[2]
    tau_col = wp[3]
    smooth = int(wp[4])
    writes = int(wp[5])
    n_off = int(wp[6])
    amp_r = rp[0]
    period = rp[1]
    n_dur = int(rp[2])
    n_skip = int(rp[3])
    n_end = int(rp[4])
    n_per = int(rp[5])
    fa = fp[0]
    fc = fp[1]
    order = int(fp[2])
    bypass = int(fp[3])
    nring = ring.shape[1]
    d1 = ap[0]
    d2 = ap[1]
    v0 = ap[2]
    inc_scale = ap[3] * dt / ap[4]
    plastic = int(flags[0])
    out_lif = int(flags[1])
    rec_reads = int(flags[2])
    tcol = int(flags[3])
    n_trace = trace.shape[0]
    n_ev = ev.shape[0]
    for kk in range(n_steps):
        k = step0 + kk
        # input layer and forced events
        for i in range(m):
            v_in[i], in_ref[i], spk = _lif(v_in[i], in_ref[i], k, i_in[i], lif_in)
            if spk:
                read_start[i] = k + (n_per - k % n_per) % n_per
                if rec_reads:
                    for j in range(n):
                        racc[i, j, 0] = 0.0
                        racc[i, j, 1] = 0.0
                        racc[i, j, 2] = 0.0
                _gen_push(gen_i, queue, i, k + n_off)
                _record_spike(spikes, counters, k, 0, i)
        while counters[2] < n_ev and ev[counters[2], 0] <= k:
            e = counters[2]
            if ev[e, 0] == k:
                if ev[e, 1] == 0:
                    i = ev[e, 2]
                    read_start[i] = k + (n_per - k % n_per) % n_per
                    if rec_reads:
                        for j in range(n):
                            racc[i, j, 0] = 0.0
                            racc[i, j, 1] = 0.0
                            racc[i, j, 2] = 0.0
                    _gen_push(gen_i, queue, i, k + n_off)
                    _record_spike(spikes, counters, k, 0, i)
                else:
                    j = ev[e, 2]
                    _gen_push(gen_i, queue, m + j, k + n_off)
                    _record_spike(spikes, counters, k, 1, j)
            counters[2] = e + 1
        # generators
        sr = amp_r * math.sin(2.0 * math.pi * (k * dt) / period)
        for i in range(m):
            _gen_advance(gen, gen_i, queue, i, k, dt, amp_w, t_w, tau_row, smooth, writes)
        for j in range(n):
            _gen_advance(gen, gen_i, queue, m + j, k, dt, amp_w, t_w, tau_col, smooth, writes)
        gate = 0
        for i in range(m):
            ph = k - read_start[i]
            if n_skip <= ph < n_end:
                gate = 1
                break
        for j in range(n):
            vcol = gen[m + j, 1]
            cur = 0.0
            for i in range(m):
                vrow = gen[i, 1]
                ph = k - read_start[i]
                if 0 <= ph < n_dur:
                    vrow += sr
                vd = vrow - vcol
                g = _conductance(model, vc[i, j], dev)
                if model == 2:
                    cur += g / (2.0 * dev[13]) * vd * abs(vd)
                else:
                    cur += g * vd
                if rec_reads and n_skip <= ph < n_end:
                    racc[i, j, 1] += g * dt / ap[4]
                    wv = abs(gen[i, 1] - vcol)
                    if wv > racc[i, j, 2]:
                        racc[i, j, 2] = wv
                if plastic:
                    vc[i, j] = _pump(model, vc[i, j], vd, dt, dev)
            # sense path
            y = cur
            if not bypass:
                for st in range(order):
                    y_new = fa * hy[j, st] + fc * (y - hx[j, st])
                    hx[j, st] = y
                    hy[j, st] = y_new
                    y = y_new
            ring[j, k % nring] = abs(y)
            env = 0.0
            for r in range(nring):
                if ring[j, r] > env:
                    env = ring[j, r]
            if gate:
                inc = inc_scale * env
                s1[j] += inc
                s2[j] += inc
                if rec_reads:
                    for i in range(m):
                        ph = k - read_start[i]
                        if n_skip <= ph < n_end:
                            racc[i, j, 0] += inc
            if n_trace > 0 and j == tcol and 0 <= kk < n_trace:
                trace[kk, 0] = gen[0, 1] + (sr if 0 <= k - read_start[0] < n_dur else 0.0)
                trace[kk, 1] = vcol
                trace[kk, 2] = cur
                trace[kk, 3] = y
                trace[kk, 4] = env
                trace[kk, 5] = _conductance(model, vc[0, j], dev)
                trace[kk, 6] = v0 * (s2[j] - s1[j])
            # output neuron
            if out_lif:
                i_tot = v0 * (s2[j] - s1[j]) + i_teach[j]
                v_out[j], out_ref[j], spk = _lif(v_out[j], out_ref[j], k, i_tot, lif_out)
                if spk:
                    _gen_push(gen_i, queue, m + j, k + n_off)
                    _record_spike(spikes, counters, k, 1, j)
            s1[j] *= d1
            s2[j] *= d2
        # read windows closing at this step
        for i in range(m):
            if k - read_start[i] == n_end - 1:
                if rec_reads:
                    for j in range(n):
                        r = counters[1]
                        if r < reads.shape[0]:
                            reads[r, 0] = read_start[i]
                            reads[r, 1] = i
                            reads[r, 2] = j
                            reads[r, 3] = racc[i, j, 0]
                            reads[r, 4] = racc[i, j, 1]
                            reads[r, 5] = racc[i, j, 2]
                        counters[1] = r + 1
                read_start[i] = NEVER


def ref_run(n_steps, step0, dt, w, vc, dev, mode, v_in, in_ref, i_in, lif_in,
            v_out, out_ref, i_teach, lif_out, s1, s2, ap, last_pre, last_post,
            sp, flags, ftab, ftp, gen, gen_i, queue, wp, gtab, gp, ev, spikes,
            vbias, counters):
    m = w.shape[0]
    n = w.shape[1]
    d1 = ap[0]
    d2 = ap[1]
    v0 = ap[2]
    a_plus = sp[0]
    a_minus = sp[1]
    tau_plus = sp[2]
    tau_minus = sp[3]
    p = sp[4]
    g_max = sp[5]
    plastic = int(flags[0])
    out_lif = int(flags[1])
    n_ev = ev.shape[0]
    n_off = int(wp[6])
    n_dt = ftab.shape[1]
    n_th = ftab.shape[2]
    th0 = ftp[0]
    dth = ftp[1]
    gv0 = gp[0]
    gdv = gp[1]
    v_ref = gp[3]
    n_g = gtab.shape[0]
    lo = dev[4]
    hi = dev[5]
    for kk in range(n_steps):
        k = step0 + kk
        if mode == 2:
            for g in range(m + n):
                tau = wp[2] if g < m else wp[3]
                _gen_advance(gen, gen_i, queue, g, k, dt, wp[0], wp[1], tau, int(wp[4]), 1)
        # forced events due at this step occupy ev[e0:e1]
        e0 = counters[2]
        e1 = e0
        while e1 < n_ev and ev[e1, 0] <= k:
            e1 += 1
        counters[2] = e1
        for i in range(m):
            v_in[i], in_ref[i], spk = _lif(v_in[i], in_ref[i], k, i_in[i], lif_in)
            for e in range(e0, e1):
                if ev[e, 0] == k and ev[e, 1] == 0 and ev[e, 2] == i:
                    spk = 1
            if not spk:
                continue
            _record_spike(spikes, counters, k, 0, i)
            if mode == 2:
                _gen_push(gen_i, queue, i, k + n_off)
            for j in range(n):
                fac = 1.0
                if mode == 2:
                    vb = gen[i, 1] - gen[m + j, 1]
                    r = counters[1]
                    if r < vbias.shape[0]:
                        vbias[r] = vb
                    counters[1] = r + 1
                    x = (vb - gv0) / gdv
                    if x < 0.0 or x >= n_g - 1:
                        fac = abs(vb) / v_ref
                    else:
                        ix = int(x)
                        fr = x - ix
                        fac = gtab[ix] * (1.0 - fr) + gtab[ix + 1] * fr
                s1[j] += w[i, j] * fac
                s2[j] += w[i, j] * fac
                # depression: pair with the last post spike
                if plastic and last_post[j] != NEVER:
                    lag = k - last_post[j]
                    if mode == 1:
                        th = 0.5 - 0.01 * (vc[i, j] + 0.5)
                        f = _ftab_lookup(ftab, 1, lag, th, th0, dth, n_dt, n_th)
                        sat = 1.0
                        if dev[3] != 0.0:
                            sat = max(w[i, j] / g_max, 0.0) ** dev[3]
                        nv = vc[i, j] - dev[2] * f * sat
                        vc[i, j] = lo if nv < lo else nv
                        w[i, j] = _conductance(1, vc[i, j], dev)
                    else:
                        dg = -a_minus * math.exp(-(lag * dt) / tau_minus)
                        if p != 0.0:
                            dg *= (w[i, j] / g_max) ** p
                        nw = w[i, j] + dg
                        w[i, j] = 0.0 if nw < 0.0 else (g_max if nw > g_max else nw)
            last_pre[i] = k
        # output layer
        for j in range(n):
            spk = 0
            if out_lif:
                i_tot = v0 * (s2[j] - s1[j]) + i_teach[j]
                v_out[j], out_ref[j], spk = _lif(v_out[j], out_ref[j], k, i_tot, lif_out)
            for e in range(e0, e1):
                if ev[e, 0] == k and ev[e, 1] == 1 and ev[e, 2] == j:
                    spk = 1
            if spk:
                _record_spike(spikes, counters, k, 1, j)
                if mode == 2:
                    _gen_push(gen_i, queue, m + j, k + n_off)
                if plastic:
                    for i in range(m):
                        if last_pre[i] == NEVER:
                            continue
                        lag = k - last_pre[i]
                        if mode == 1:
                            th = -vc[i, j]
                            f = _ftab_lookup(ftab, 0, lag, th, th0, dth, n_dt, n_th)
                            sat = 1.0
                            if dev[3] != 0.0:
                                sat = max(1.0 - w[i, j] / g_max, 0.0) ** dev[3]
                            nv = vc[i, j] + dev[1] * f * sat
                            vc[i, j] = hi if nv > hi else nv
                            w[i, j] = _conductance(1, vc[i, j], dev)
                        else:
                            dg = a_plus * math.exp(-(lag * dt) / tau_plus)
                            if p != 0.0:
                                dg *= (1.0 - w[i, j] / g_max) ** p
                            nw = w[i, j] + dg
                            w[i, j] = 0.0 if nw < 0.0 else (g_max if nw > g_max else nw)
                last_post[j] = k
            s1[j] *= d1
            s2[j] *= d2


def _ftab_lookup(ftab, pol, lag, th, th0, dth, n_dt, n_th):
    """Overlap integral for a pair ``lag`` steps apart at threshold ``th``
    (linear in threshold, zero beyond the tabulated lag range)."""
    if lag >= n_dt:
        return 0.0
    x = (th - th0) / dth
    if x <= 0.0:
        return ftab[pol, lag, 0]
    if x >= n_th - 1:
        return ftab[pol, lag, n_th - 1]
    ix = int(x)
    fr = x - ix
    return ftab[pol, lag, ix] * (1.0 - fr) + ftab[pol, lag, ix + 1] * fr
