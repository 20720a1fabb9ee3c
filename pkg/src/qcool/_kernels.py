"""Numba kernels acting in place on amplitude arrays.

Qubit ``q`` is bit ``q`` of the basis index (little endian). A Pauli string is
encoded as ``(xmask, zmask, phase)`` with
``P|j> = phase * (-1)**popcount(j & zmask) |j ^ xmask>`` and ``phase = i**nY``.

The propagation kernels work on split real/imaginary float arrays; that layout
vectorizes far better than complex128 under numba.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _parity(v):
    v ^= v >> 32
    v ^= v >> 16
    v ^= v >> 8
    v ^= v >> 4
    v ^= v >> 2
    v ^= v >> 1
    return v & 1


# --------------------------------------------------------------------------
# complex128 kernels (measurement, Pauli application, noise)


@njit(cache=True)
def apply_pauli(psi, out, xmask, zmask, phase):
    for j in range(psi.shape[0]):
        s = 1.0 - 2.0 * _parity(np.int64(j) & zmask)
        out[j ^ xmask] = phase * s * psi[j]


@njit(cache=True)
def apply_pauli_inplace(psi, xmask, zmask, phase):
    n = psi.shape[0]
    if xmask == 0:
        for j in range(n):
            s = 1.0 - 2.0 * _parity(np.int64(j) & zmask)
            psi[j] *= phase * s
        return
    low = xmask & (-xmask)
    for j in range(n):
        if j & low:
            continue
        jj = j ^ xmask
        a = psi[j]
        b = psi[jj]
        sa = 1.0 - 2.0 * _parity(np.int64(j) & zmask)
        sb = 1.0 - 2.0 * _parity(np.int64(jj) & zmask)
        psi[jj] = phase * sa * a
        psi[j] = phase * sb * b


@njit(cache=True)
def weight_bit_clear(psi, bit):
    """Probability of the subspace where ``bit`` is 0."""
    mask = np.int64(1) << bit
    acc = 0.0
    for j in range(psi.shape[0]):
        if not (j & mask):
            acc += psi[j].real ** 2 + psi[j].imag ** 2
    return acc


@njit(cache=True)
def project_bit(psi, bit, keep_set, scale):
    mask = np.int64(1) << bit
    for j in range(psi.shape[0]):
        if ((j & mask) != 0) == keep_set:
            psi[j] *= scale
        else:
            psi[j] = 0.0


@njit(cache=True)
def flip_bit(psi, bit):
    mask = np.int64(1) << bit
    for j in range(psi.shape[0]):
        if not (j & mask):
            jj = j | mask
            tmp = psi[j]
            psi[j] = psi[jj]
            psi[jj] = tmp


# --------------------------------------------------------------------------
# split-layout propagation kernels


@njit(cache=True, inline="always")
def _pair_block(re, im, j0, stride, cc, sc, cf, sf):
    # exp(-i th_f X_lo) exp(-i th_c X_lo X_hi) on the 4 amplitudes of bits (b, b+1)
    j1 = j0 + stride
    j2 = j1 + stride
    j3 = j2 + stride
    r0 = re[j0]
    r1 = re[j1]
    r2 = re[j2]
    r3 = re[j3]
    i0 = im[j0]
    i1 = im[j1]
    i2 = im[j2]
    i3 = im[j3]
    br0 = cc * r0 + sc * i3
    bi0 = cc * i0 - sc * r3
    br3 = cc * r3 + sc * i0
    bi3 = cc * i3 - sc * r0
    br1 = cc * r1 + sc * i2
    bi1 = cc * i1 - sc * r2
    br2 = cc * r2 + sc * i1
    bi2 = cc * i2 - sc * r1
    re[j0] = cf * br0 + sf * bi1
    im[j0] = cf * bi0 - sf * br1
    re[j1] = cf * br1 + sf * bi0
    im[j1] = cf * bi1 - sf * br0
    re[j2] = cf * br2 + sf * bi3
    im[j2] = cf * bi2 - sf * br3
    re[j3] = cf * br3 + sf * bi2
    im[j3] = cf * bi3 - sf * br2


@njit(cache=True)
def x_rotations_split(re, im, xmasks, angles):
    """exp(-i angle_k X-string_k) for X-only strings outside the pair layout."""
    n = re.shape[0]
    half = n >> 1
    for k in range(xmasks.shape[0]):
        xm = xmasks[k]
        c = np.cos(angles[k])
        s = np.sin(angles[k])
        if s == 0.0 and c == 1.0:
            continue
        low = xm & (-xm)
        lm = low - 1
        for i in range(half):
            j = ((i & ~lm) << 1) | (i & lm)
            jj = j ^ xm
            ar = re[j]
            ai = im[j]
            br = re[jj]
            bi = im[jj]
            re[j] = c * ar + s * bi
            im[j] = c * ai - s * br
            re[jj] = c * br + s * ai
            im[jj] = c * bi - s * ar


@njit(cache=True)
def strang_steps(
    re,
    im,
    stat_half_c,
    stat_half_s,
    stat_full_c,
    stat_full_s,
    level,
    tab_c,
    tab_s,
    pair_bits,
    cc,
    sc,
    cf,
    sf,
    extra_masks,
    extra_angles,
):
    """Run ``tab_c.shape[0]`` Strang steps D(h) X(dt) D(h) in place.

    ``tab_c[k, l] + i tab_s[k, l]`` is the half-step bath phase of level ``l``
    at step ``k``. ``cc/sc/cf/sf[k, p]`` are cos/sin of the coupling and field
    angles of pair ``p`` living on bits ``pair_bits[p]`` and ``pair_bits[p]+1``.
    X-strings that do not fit the pair layout rotate by ``extra_angles[k]``.
    Consecutive diagonal half steps are merged into a single pass.
    """
    dim = re.shape[0]
    nsteps = tab_c.shape[0]
    nlev = tab_c.shape[1]
    npairs = pair_bits.shape[0]
    comb_c = np.empty(nlev)
    comb_s = np.empty(nlev)
    for k in range(nsteps):
        for l in range(nlev):
            if k == 0:
                comb_c[l] = tab_c[0, l]
                comb_s[l] = tab_s[0, l]
            else:
                a = tab_c[k - 1, l]
                b = tab_s[k - 1, l]
                c = tab_c[k, l]
                d = tab_s[k, l]
                comb_c[l] = a * c - b * d
                comb_s[l] = a * d + b * c
        if k == 0:
            sc_arr = stat_half_c
            ss_arr = stat_half_s
        else:
            sc_arr = stat_full_c
            ss_arr = stat_full_s
        for j in range(dim):
            lv = level[j]
            pc = sc_arr[j] * comb_c[lv] - ss_arr[j] * comb_s[lv]
            ps = sc_arr[j] * comb_s[lv] + ss_arr[j] * comb_c[lv]
            r = re[j]
            i = im[j]
            re[j] = r * pc - i * ps
            im[j] = r * ps + i * pc
        for p in range(npairs):
            stride = np.int64(1) << pair_bits[p]
            block = stride << 2
            a1 = cc[k, p]
            b1 = sc[k, p]
            a2 = cf[k, p]
            b2 = sf[k, p]
            for hi in range(0, dim, block):
                for lo in range(stride):
                    _pair_block(re, im, hi + lo, stride, a1, b1, a2, b2)
        if extra_masks.shape[0] > 0:
            x_rotations_split(re, im, extra_masks, extra_angles[k])
    k = nsteps - 1
    for j in range(dim):
        lv = level[j]
        pc = stat_half_c[j] * tab_c[k, lv] - stat_half_s[j] * tab_s[k, lv]
        ps = stat_half_c[j] * tab_s[k, lv] + stat_half_s[j] * tab_c[k, lv]
        r = re[j]
        i = im[j]
        re[j] = r * pc - i * ps
        im[j] = r * ps + i * pc


@njit(cache=True)
def x_expectations_split(re, im, xmasks):
    """<psi| X-string_k |psi> (real) for each mask."""
    n = re.shape[0]
    out = np.zeros(xmasks.shape[0])
    for k in range(xmasks.shape[0]):
        xm = xmasks[k]
        acc = 0.0
        for j in range(n):
            jj = j ^ xm
            acc += re[j] * re[jj] + im[j] * im[jj]
        out[k] = acc
    return out


@njit(cache=True)
def apply_pauli_split(re, im, xmask, zmask, ph_re, ph_im):
    """In-place P psi on split arrays, ``ph_re + i ph_im`` the string phase."""
    n = re.shape[0]
    if xmask == 0:
        for j in range(n):
            s = 1.0 - 2.0 * _parity(np.int64(j) & zmask)
            r = re[j]
            i = im[j]
            re[j] = s * (ph_re * r - ph_im * i)
            im[j] = s * (ph_re * i + ph_im * r)
        return
    low = xmask & (-xmask)
    for j in range(n):
        if j & low:
            continue
        jj = j ^ xmask
        sa = 1.0 - 2.0 * _parity(np.int64(j) & zmask)
        sb = 1.0 - 2.0 * _parity(np.int64(jj) & zmask)
        ar = re[j]
        ai = im[j]
        br = re[jj]
        bi = im[jj]
        re[jj] = sa * (ph_re * ar - ph_im * ai)
        im[jj] = sa * (ph_re * ai + ph_im * ar)
        re[j] = sb * (ph_re * br - ph_im * bi)
        im[j] = sb * (ph_re * bi + ph_im * br)


@njit(cache=True)
def weighted_norm_split(re, im, weights):
    acc = 0.0
    for j in range(re.shape[0]):
        acc += (re[j] * re[j] + im[j] * im[j]) * weights[j]
    return acc
