"""Short-circuit-current constrained unit commitment toolkit.

Computes three-phase subtransient short-circuit currents in mixed
synchronous-generator / inverter-based-generator networks, fits linear
SCC surrogates (least-squares, conservative, and margin-classification
variants, plus the exact McCormick-relaxed analytical formulation) and
solves SCC- and frequency-constrained unit commitment with a built-in
MILP kernel.  Every solved schedule can be audited against the exact
SCC oracle.
"""

from .caseio import (
    CaseSyntaxError,
    load_bundled_case,
    load_bundled_instance,
    parse_case,
    parse_uc_instance,
    write_case,
    write_uc_instance,
)
from .linalg import LuFactors, SingularMatrixError, invert, lu_factor, solve
from .network import (
    GROUND,
    Branch,
    Bus,
    CaseError,
    FrequencyParams,
    Ibg,
    NetworkCase,
    SynchGen,
    TreeNode,
    UcInstance,
    WindFarm,
)
from .scc import (
    CommitmentPattern,
    IslandedNetworkError,
    SccResult,
    all_on,
    build_admittance,
    scc_all_buses,
    sg_norton_current,
    verify_superposition,
)

__version__ = "0.1.0"
