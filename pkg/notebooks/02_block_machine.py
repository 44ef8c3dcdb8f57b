# %% [markdown]
# # Parity classes and the block machine
#
# With several modulation indices the per-symbol machine is periodic in
# time and its state parity follows the parity pattern of the `r_n`.  After
# `N_c` symbols a trajectory is back in its starting parity class, and
# grouping those symbols into one block gives a time-invariant chain on half
# of the states.

# %%
import numpy as np

from cpmspectra import CpmFormat, ModulationIndexSet, PhaseResponse, normalize_indices
from cpmspectra.chain import build_polyphase, cyclo_period, stationary_distribution, trajectory_tpms

for r in [(2, 1, 3), (2, 3, 2), (2, 3)]:
    idx = ModulationIndexSet(r, 4)
    fmt = CpmFormat(2, PhaseResponse("cpfsk", 1), idx)
    print(r, "N_c =", cyclo_period(idx), trajectory_tpms(fmt, "+").labels)

# %% [markdown]
# A quaternary format with indices 4/16, 5/16, 8/16, 10/16 has one odd
# numerator per period, so the block length doubles to 8 symbols.

# %%
fmt = CpmFormat(4, PhaseResponse("cpfsk", 1), normalize_indices(["4/16", "5/16", "8/16", "10/16"]))
m = build_polyphase(fmt)
print("N_c =", m.n_c, " states per class =", m.i0, " words per block =", m.n_words)

# %% [markdown]
# Both classes see the same block transition matrix, and it mixes quickly.

# %%
p_inf, _ = stationary_distribution(m)
print("classes identical:", np.array_equal(m.big_tpm["+"], m.big_tpm["-"]))
print("second eigenvalue modulus:", np.sort(np.abs(np.linalg.eigvals(m.tpm)))[-2])
