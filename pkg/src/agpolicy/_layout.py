"""Flat array layout shared by both implementations of the daily step kernel.

The first 28 state slots are the reported variables in observation order.
``_kernel.pyx`` duplicates these indices as a C enum; a test checks that
both agree.
"""

FULL_FIELDS = (
    "cumsumfert", "dap", "dtt", "istage", "vstage", "pltpop", "rain", "srad",
    "tmax", "tmin", "sw", "xlai", "nstres", "pcngrn", "swfac", "tleachd",
    "grnwt", "cleach", "cnox", "tnoxd", "trnu", "wtnup", "topwt", "es",
    "runoff", "wtdep", "rtdep", "totaml",
)
PARTIAL_FIELDS = FULL_FIELDS[:12]
PARTIAL_INDICES = tuple(range(12))

(CUMSUMFERT, DAP, DTT, ISTAGE, VSTAGE, PLTPOP, RAIN, SRAD, TMAX, TMIN, SW, XLAI,
 NSTRES, PCNGRN, SWFAC, TLEACHD, GRNWT, CLEACH, CNOX, TNOXD, TRNU, WTNUP,
 TOPWT, ES, RUNOFF, WTDEP, RTDEP, TOTAML) = range(28)

# internal pools
CUM_GDD = 28
STORAGE = 29  # soil water, mm
SOIL_N = 30  # mineral N, kg/ha
STRESS_MEM = 31  # running mean of the growth stress factor before flowering
DAYS_EMERGED = 32
LAI_FLOWER = 33  # canopy size frozen at flowering, -1 until then
VOLAT_Q = 34  # 5 slots of pending volatilization, kg/ha
N_VOLAT_DAYS = 5
STATE_SIZE = VOLAT_Q + N_VOLAT_DAYS

# parameters
(P_TBASE, P_GDD_EMERGE, P_GDD_FLOWER, P_GDD_FILL, P_GDD_MATURITY, P_PHYLLOCHRON,
 P_MAX_LEAVES, P_K, P_RUE, P_MAX_LAI, P_GRAIN_FRAC, P_TAW, P_FC_FRAC, P_DRAIN_COEF,
 P_MINERALIZATION, P_VOLAT_FRAC, P_DEMAND_EARLY, P_DEMAND_LATE, P_DENIT_RATE,
 P_SENESCENCE_FLOOR, P_PCN_EPS, P_ROOT_MAX, P_ROOT_INIT, P_ROOT_GDD, P_GRAIN_PART) = range(25)
PARAM_SIZE = 25

# per-step fluxes written by the kernel
(F_RAIN, F_IRRIGATION, F_RUNOFF, F_DRAINAGE, F_ES, F_TRANSPIRATION, F_STORAGE_BEFORE,
 F_STORAGE_AFTER, F_FERTILIZER, F_MINERALIZATION, F_UPTAKE, F_LEACHING, F_DENITRIFICATION,
 F_VOLATILIZATION, F_SOIL_N_BEFORE, F_SOIL_N_AFTER, F_GROWTH) = range(17)
FLUX_SIZE = 17
FLUX_FIELDS = (
    "rain", "irrigation", "runoff", "drainage", "es", "transpiration", "storage_before",
    "storage_after", "fertilizer", "mineralization", "uptake", "leaching", "denitrification",
    "volatilization", "soil_n_before", "soil_n_after", "growth",
)


def layout():
    """Index table used to cross-check the compiled kernel."""
    names = {k: v for k, v in globals().items() if k.isupper() and isinstance(v, int)}
    return names
