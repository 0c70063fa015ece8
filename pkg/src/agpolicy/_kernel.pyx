# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled daily step of the crop surrogate.

Mirrors ``_kernel_py.advance_day`` operation for operation; built with
``-ffp-contract=off`` so no fused multiply-adds change the rounding.
"""

from libc.math cimport exp

BACKEND = "cython"

cdef enum:
    CUMSUMFERT = 0
    DAP = 1
    DTT = 2
    ISTAGE = 3
    VSTAGE = 4
    PLTPOP = 5
    RAIN = 6
    SRAD = 7
    TMAX = 8
    TMIN = 9
    SW = 10
    XLAI = 11
    NSTRES = 12
    PCNGRN = 13
    SWFAC = 14
    TLEACHD = 15
    GRNWT = 16
    CLEACH = 17
    CNOX = 18
    TNOXD = 19
    TRNU = 20
    WTNUP = 21
    TOPWT = 22
    ES = 23
    RUNOFF = 24
    WTDEP = 25
    RTDEP = 26
    TOTAML = 27
    CUM_GDD = 28
    STORAGE = 29
    SOIL_N = 30
    STRESS_MEM = 31
    DAYS_EMERGED = 32
    LAI_FLOWER = 33
    VOLAT_Q = 34
    N_VOLAT_DAYS = 5
    STATE_SIZE = 39

cdef enum:
    P_TBASE = 0
    P_GDD_EMERGE = 1
    P_GDD_FLOWER = 2
    P_GDD_FILL = 3
    P_GDD_MATURITY = 4
    P_PHYLLOCHRON = 5
    P_MAX_LEAVES = 6
    P_K = 7
    P_RUE = 8
    P_MAX_LAI = 9
    P_GRAIN_FRAC = 10
    P_TAW = 11
    P_FC_FRAC = 12
    P_DRAIN_COEF = 13
    P_MINERALIZATION = 14
    P_VOLAT_FRAC = 15
    P_DEMAND_EARLY = 16
    P_DEMAND_LATE = 17
    P_DENIT_RATE = 18
    P_SENESCENCE_FLOOR = 19
    P_PCN_EPS = 20
    P_ROOT_MAX = 21
    P_ROOT_INIT = 22
    P_ROOT_GDD = 23
    P_GRAIN_PART = 24
    PARAM_SIZE = 25

cdef enum:
    F_RAIN = 0
    F_IRRIGATION = 1
    F_RUNOFF = 2
    F_DRAINAGE = 3
    F_ES = 4
    F_TRANSPIRATION = 5
    F_STORAGE_BEFORE = 6
    F_STORAGE_AFTER = 7
    F_FERTILIZER = 8
    F_MINERALIZATION = 9
    F_UPTAKE = 10
    F_LEACHING = 11
    F_DENITRIFICATION = 12
    F_VOLATILIZATION = 13
    F_SOIL_N_BEFORE = 14
    F_SOIL_N_AFTER = 15
    F_GROWTH = 16
    FLUX_SIZE = 17


def layout():
    return {
        "CUMSUMFERT": CUMSUMFERT, "DAP": DAP, "DTT": DTT, "ISTAGE": ISTAGE, "VSTAGE": VSTAGE,
        "PLTPOP": PLTPOP, "RAIN": RAIN, "SRAD": SRAD, "TMAX": TMAX, "TMIN": TMIN, "SW": SW,
        "XLAI": XLAI, "NSTRES": NSTRES, "PCNGRN": PCNGRN, "SWFAC": SWFAC, "TLEACHD": TLEACHD,
        "GRNWT": GRNWT, "CLEACH": CLEACH, "CNOX": CNOX, "TNOXD": TNOXD, "TRNU": TRNU,
        "WTNUP": WTNUP, "TOPWT": TOPWT, "ES": ES, "RUNOFF": RUNOFF, "WTDEP": WTDEP,
        "RTDEP": RTDEP, "TOTAML": TOTAML, "CUM_GDD": CUM_GDD, "STORAGE": STORAGE,
        "SOIL_N": SOIL_N, "STRESS_MEM": STRESS_MEM, "DAYS_EMERGED": DAYS_EMERGED,
        "LAI_FLOWER": LAI_FLOWER, "VOLAT_Q": VOLAT_Q, "N_VOLAT_DAYS": N_VOLAT_DAYS,
        "STATE_SIZE": STATE_SIZE,
        "P_TBASE": P_TBASE, "P_GDD_EMERGE": P_GDD_EMERGE, "P_GDD_FLOWER": P_GDD_FLOWER,
        "P_GDD_FILL": P_GDD_FILL, "P_GDD_MATURITY": P_GDD_MATURITY,
        "P_PHYLLOCHRON": P_PHYLLOCHRON, "P_MAX_LEAVES": P_MAX_LEAVES, "P_K": P_K,
        "P_RUE": P_RUE, "P_MAX_LAI": P_MAX_LAI, "P_GRAIN_FRAC": P_GRAIN_FRAC, "P_TAW": P_TAW,
        "P_FC_FRAC": P_FC_FRAC, "P_DRAIN_COEF": P_DRAIN_COEF,
        "P_MINERALIZATION": P_MINERALIZATION, "P_VOLAT_FRAC": P_VOLAT_FRAC,
        "P_DEMAND_EARLY": P_DEMAND_EARLY, "P_DEMAND_LATE": P_DEMAND_LATE,
        "P_DENIT_RATE": P_DENIT_RATE, "P_SENESCENCE_FLOOR": P_SENESCENCE_FLOOR,
        "P_PCN_EPS": P_PCN_EPS, "P_ROOT_MAX": P_ROOT_MAX, "P_ROOT_INIT": P_ROOT_INIT,
        "P_ROOT_GDD": P_ROOT_GDD, "P_GRAIN_PART": P_GRAIN_PART, "PARAM_SIZE": PARAM_SIZE,
        "F_RAIN": F_RAIN, "F_IRRIGATION": F_IRRIGATION, "F_RUNOFF": F_RUNOFF,
        "F_DRAINAGE": F_DRAINAGE, "F_ES": F_ES, "F_TRANSPIRATION": F_TRANSPIRATION,
        "F_STORAGE_BEFORE": F_STORAGE_BEFORE, "F_STORAGE_AFTER": F_STORAGE_AFTER,
        "F_FERTILIZER": F_FERTILIZER, "F_MINERALIZATION": F_MINERALIZATION,
        "F_UPTAKE": F_UPTAKE, "F_LEACHING": F_LEACHING,
        "F_DENITRIFICATION": F_DENITRIFICATION, "F_VOLATILIZATION": F_VOLATILIZATION,
        "F_SOIL_N_BEFORE": F_SOIL_N_BEFORE, "F_SOIL_N_AFTER": F_SOIL_N_AFTER,
        "F_GROWTH": F_GROWTH, "FLUX_SIZE": FLUX_SIZE,
    }


def advance_day(double[::1] s, const double[::1] p, double srad, double tmax, double tmin,
                double rain, double n_fert, double water, double[::1] f):
    if s.shape[0] < STATE_SIZE or p.shape[0] < PARAM_SIZE or f.shape[0] < FLUX_SIZE:
        raise ValueError("state, parameter or flux array too short")
    _step(&s[0], &p[0], srad, tmax, tmin, rain, n_fert, water, &f[0])


def run_season(double[::1] s, const double[::1] p, const double[:, ::1] wx, Py_ssize_t start,
               const double[:, ::1] actions, double max_days, double[:, ::1] obs_out,
               double[:, ::1] flux_out):
    """Step through ``actions`` until maturity or ``max_days``; returns the days simulated.

    Row ``d`` of ``obs_out``/``flux_out`` receives the reported state and the
    fluxes after day ``d``.
    """
    cdef Py_ssize_t n = actions.shape[0], d, k, w
    if s.shape[0] < STATE_SIZE or p.shape[0] < PARAM_SIZE:
        raise ValueError("state or parameter array too short")
    if actions.shape[1] != 2 or wx.shape[1] != 4:
        raise ValueError("actions must be (n, 2) and weather (days, 4)")
    if obs_out.shape[0] < n or obs_out.shape[1] < TOTAML + 1 or flux_out.shape[0] < n \
            or flux_out.shape[1] < FLUX_SIZE:
        raise ValueError("output arrays too small")
    for d in range(n):
        w = start + <Py_ssize_t>s[DAP]
        if w < 0 or w >= wx.shape[0]:
            raise ValueError("weather series too short")
        _step(&s[0], &p[0], wx[w, 0], wx[w, 1], wx[w, 2], wx[w, 3], actions[d, 0], actions[d, 1],
              &flux_out[d, 0])
        for k in range(TOTAML + 1):
            obs_out[d, k] = s[k]
        if s[ISTAGE] >= 4.0 or s[DAP] >= max_days:
            return d + 1
    return n


cdef void _step(double* s, const double* p, double srad, double tmax, double tmin,
                double rain, double n_fert, double water, double* f) noexcept nogil:
    cdef double tmean, dtt, cum, stage, max_leaves, vstage, gdd_flower, progress, mem, lai
    cdef double lai_flower, v_flower, root, taw, fc, s0, s1, runoff, drainage, s2, et0
    cdef double shade, cover, swfac, transp, es, loss, ratio, s3, n0, miner, pool, vol
    cdef double per_day, leach, denit, potential, rate, demand, uptake, nstres, stress
    cdef double growth, topwt, grnwt, cap, n, wtnup, denom, pcn
    cdef int i

    # phenology
    tmean = (tmax + tmin) / 2.0
    dtt = tmean - p[P_TBASE]
    if dtt < 0.0:
        dtt = 0.0
    cum = s[CUM_GDD] + dtt
    stage = 0.0
    if cum >= p[P_GDD_EMERGE]:
        stage = 1.0
    if cum >= p[P_GDD_FLOWER]:
        stage = 2.0
    if cum >= p[P_GDD_FILL]:
        stage = 3.0
    if cum >= p[P_GDD_MATURITY]:
        stage = 4.0
    if stage < s[ISTAGE]:
        stage = s[ISTAGE]
    max_leaves = p[P_MAX_LEAVES]
    vstage = cum / p[P_PHYLLOCHRON]
    if vstage > max_leaves:
        vstage = max_leaves

    gdd_flower = p[P_GDD_FLOWER]
    progress = 0.0
    mem = s[STRESS_MEM]
    if stage == 0.0:
        lai = 0.0
    elif cum < gdd_flower:
        lai = p[P_MAX_LAI] * (vstage / max_leaves) * mem
    else:
        lai_flower = s[LAI_FLOWER]
        if lai_flower < 0.0:
            v_flower = gdd_flower / p[P_PHYLLOCHRON]
            if v_flower > max_leaves:
                v_flower = max_leaves
            lai_flower = p[P_MAX_LAI] * (v_flower / max_leaves) * mem
            s[LAI_FLOWER] = lai_flower
        progress = (cum - gdd_flower) / (p[P_GDD_MATURITY] - gdd_flower)
        if progress > 1.0:
            progress = 1.0
        lai = lai_flower * (1.0 - (1.0 - p[P_SENESCENCE_FLOOR]) * progress)
    root = p[P_ROOT_INIT] + cum / p[P_ROOT_GDD]
    if root > p[P_ROOT_MAX]:
        root = p[P_ROOT_MAX]

    # water balance
    taw = p[P_TAW]
    fc = p[P_FC_FRAC] * taw
    s0 = s[STORAGE]
    s1 = s0 + rain + water
    runoff = 0.0
    if s1 > taw:
        runoff = s1 - taw
    s1 = s1 - runoff
    drainage = 0.0
    if s1 > fc:
        drainage = p[P_DRAIN_COEF] * (s1 - fc)
    s2 = s1 - drainage
    et0 = 0.0135 * (srad / 2.45) * (tmean + 17.8)
    if et0 < 0.0:
        et0 = 0.0
    shade = exp(-p[P_K] * lai)
    cover = 1.0 - shade
    swfac = s2 / (0.5 * taw)
    if swfac > 1.0:
        swfac = 1.0
    if swfac < 0.0:
        swfac = 0.0
    transp = et0 * cover * swfac
    es = et0 * shade * (s2 / taw)
    loss = transp + es
    if loss > s2:
        ratio = s2 / loss
        transp = transp * ratio
        es = es * ratio
    s3 = s2 - transp - es
    if s3 < 0.0:
        s3 = 0.0

    # nitrogen balance
    n0 = s[SOIL_N]
    miner = p[P_MINERALIZATION]
    pool = n0 + n_fert + miner
    vol = s[VOLAT_Q]
    if vol > pool:
        vol = pool
    pool = pool - vol
    for i in range(N_VOLAT_DAYS - 1):
        s[VOLAT_Q + i] = s[VOLAT_Q + i + 1]
    s[VOLAT_Q + N_VOLAT_DAYS - 1] = 0.0
    if n_fert > 0.0:
        per_day = p[P_VOLAT_FRAC] * n_fert / N_VOLAT_DAYS
        for i in range(N_VOLAT_DAYS):
            s[VOLAT_Q + i] = s[VOLAT_Q + i] + per_day
    leach = pool * (drainage / taw)
    pool = pool - leach
    denit = 0.0
    if s3 > fc:
        denit = p[P_DENIT_RATE] * pool
    pool = pool - denit
    potential = 10.0 * p[P_RUE] * srad * cover
    rate = p[P_DEMAND_EARLY]
    if cum >= gdd_flower:
        rate = p[P_DEMAND_EARLY] + (p[P_DEMAND_LATE] - p[P_DEMAND_EARLY]) * progress
    demand = rate * potential
    uptake = demand
    if uptake > pool:
        uptake = pool
    pool = pool - uptake
    if pool < 0.0:
        pool = 0.0
    nstres = 1.0
    if demand > 0.0:
        nstres = uptake / demand

    # growth
    stress = swfac
    if nstres < stress:
        stress = nstres
    growth = potential * stress
    topwt = s[TOPWT] + growth
    grnwt = s[GRNWT]
    if stage >= 3.0:
        grnwt = grnwt + p[P_GRAIN_PART] * growth
        cap = p[P_GRAIN_FRAC] * topwt
        if grnwt > cap:
            grnwt = cap
        if grnwt < s[GRNWT]:
            grnwt = s[GRNWT]
    if stage >= 1.0 and cum < gdd_flower:
        n = s[DAYS_EMERGED]
        s[STRESS_MEM] = (mem * n + stress) / (n + 1.0)
        s[DAYS_EMERGED] = n + 1.0
    wtnup = s[WTNUP] + uptake
    denom = grnwt
    if denom < p[P_PCN_EPS]:
        denom = p[P_PCN_EPS]
    pcn = wtnup * 0.6 / denom
    if pcn > 1.0:
        pcn = 1.0

    s[CUMSUMFERT] = s[CUMSUMFERT] + n_fert
    s[DAP] = s[DAP] + 1.0
    s[DTT] = dtt
    s[ISTAGE] = stage
    s[VSTAGE] = vstage
    s[RAIN] = rain
    s[SRAD] = srad
    s[TMAX] = tmax
    s[TMIN] = tmin
    s[SW] = s3 / taw
    s[XLAI] = lai
    s[NSTRES] = nstres
    s[PCNGRN] = pcn
    s[SWFAC] = swfac
    s[TLEACHD] = leach
    s[GRNWT] = grnwt
    s[CLEACH] = s[CLEACH] + leach
    s[CNOX] = s[CNOX] + denit
    s[TNOXD] = denit
    s[TRNU] = uptake
    s[WTNUP] = wtnup
    s[TOPWT] = topwt
    s[ES] = es
    s[RUNOFF] = runoff
    s[RTDEP] = root
    s[TOTAML] = s[TOTAML] + vol
    s[CUM_GDD] = cum
    s[STORAGE] = s3
    s[SOIL_N] = pool

    f[F_RAIN] = rain
    f[F_IRRIGATION] = water
    f[F_RUNOFF] = runoff
    f[F_DRAINAGE] = drainage
    f[F_ES] = es
    f[F_TRANSPIRATION] = transp
    f[F_STORAGE_BEFORE] = s0
    f[F_STORAGE_AFTER] = s3
    f[F_FERTILIZER] = n_fert
    f[F_MINERALIZATION] = miner
    f[F_UPTAKE] = uptake
    f[F_LEACHING] = leach
    f[F_DENITRIFICATION] = denit
    f[F_VOLATILIZATION] = vol
    f[F_SOIL_N_BEFORE] = n0
    f[F_SOIL_N_AFTER] = pool
    f[F_GROWTH] = growth
