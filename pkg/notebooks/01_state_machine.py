# %% [markdown]
# # The modulator as a state machine
#
# A CPM modulator with rational modulation indices `r_n / p` has a finite
# state: the accumulated phase, counted in steps of `pi / p`, plus the last
# `L - 1` symbols.  This script builds that machine for a small binary
# full-response format and prints its transition matrix.

# %%
import numpy as np

from cpmspectra import CpmFormat, PhaseResponse, normalize_indices
from cpmspectra.machine import SmState, build_machine, format_tpm, state_update

fmt = CpmFormat(2, PhaseResponse("cpfsk", 1), normalize_indices(["3/4"]))
print(fmt.describe())

# %% [markdown]
# One step of the machine: from phase state 2 the symbol +1 adds `r = 3`.

# %%
print(state_update(fmt, SmState(2), 1, 0))

# %% [markdown]
# The transition matrix is column stochastic.  Listing the even phase
# states first exposes the checkerboard structure: an odd `r` always moves
# the machine between the even and the odd half.

# %%
pti = build_machine(fmt)
print(format_tpm(pti, 0))
print("column sums:", pti.pi(0).sum(axis=0).real)

# %% [markdown]
# The invariant distribution is uniform over phase states.

# %%
print(np.round(pti.apv.real, 4))
