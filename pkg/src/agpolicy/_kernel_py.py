"""Pure-Python daily step of the crop surrogate.

Reference implementation of the compiled ``_kernel`` extension. Both must
perform the same floating-point operations in the same order so that they
produce bitwise-identical trajectories.
"""

from math import exp

from ._layout import (
    CLEACH, CNOX, CUM_GDD, CUMSUMFERT, DAP, DAYS_EMERGED, DTT, ES, F_DENITRIFICATION,
    F_DRAINAGE, F_ES, F_FERTILIZER, F_GROWTH, F_IRRIGATION, F_LEACHING, F_MINERALIZATION,
    F_RAIN, F_RUNOFF, F_SOIL_N_AFTER, F_SOIL_N_BEFORE, F_STORAGE_AFTER, F_STORAGE_BEFORE,
    F_TRANSPIRATION, F_UPTAKE, F_VOLATILIZATION, FLUX_SIZE, GRNWT, ISTAGE, LAI_FLOWER, N_VOLAT_DAYS,
    NSTRES, P_DEMAND_EARLY, P_DEMAND_LATE, P_DENIT_RATE, P_DRAIN_COEF, P_FC_FRAC,
    P_GDD_EMERGE, P_GDD_FILL, P_GDD_FLOWER, P_GDD_MATURITY, P_GRAIN_FRAC, P_GRAIN_PART, P_K,
    P_MAX_LAI, P_MAX_LEAVES, P_MINERALIZATION, P_PCN_EPS, P_PHYLLOCHRON, P_ROOT_GDD, P_ROOT_INIT,
    P_ROOT_MAX, P_RUE, P_SENESCENCE_FLOOR, P_TAW, P_TBASE, P_VOLAT_FRAC, PCNGRN, RAIN,
    RTDEP, RUNOFF, SOIL_N, SRAD, STORAGE, STRESS_MEM, SW, SWFAC, TLEACHD, TMAX, TMIN,
    TNOXD, TOPWT, TOTAML, TRNU, VOLAT_Q, VSTAGE, WTNUP, XLAI,
)

BACKEND = "python"


def advance_day(s, p, srad, tmax, tmin, rain, n_fert, water, f):
    """Advance state ``s`` by one day in place and write fluxes into ``f``.

    Order: phenology and canopy, water balance, nitrogen balance, growth.
    """
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


def run_season(s, p, wx, start, actions, max_days, obs_out, flux_out):
    """Step through ``actions`` until maturity or ``max_days``; returns the days simulated.

    ``s``, ``p`` and the rows of ``wx``/``actions`` may be lists or arrays;
    rows ``d`` of ``obs_out``/``flux_out`` receive the reported state and
    fluxes after day ``d``.
    """
    f = [0.0] * FLUX_SIZE
    n_obs = TOTAML + 1
    for d in range(len(actions)):
        w = start + int(s[DAP])
        if w < 0 or w >= len(wx):
            raise ValueError("weather series too short")
        srad, tmax, tmin, rain = wx[w]
        n_fert, water = actions[d]
        advance_day(s, p, srad, tmax, tmin, rain, n_fert, water, f)
        obs_out[d] = s[:n_obs]
        flux_out[d] = f[:]
        if s[ISTAGE] >= 4.0 or s[DAP] >= max_days:
            return d + 1
    return len(actions)
