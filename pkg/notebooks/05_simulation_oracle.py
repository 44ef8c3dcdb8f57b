# %% [markdown]
# # Monte-Carlo check with a Welch estimate
#
# Synthesize a long random waveform, estimate its PSD with Welch averaging
# and compare with the closed form.  Segments are a multiple of the block
# length so every segment starts at the same cyclostationary phase.

# %%
import numpy as np

from cpmspectra import CpmFormat, PhaseResponse, normalize_indices
from cpmspectra.chain import build_polyphase
from cpmspectra.oracle import WelchConfig, empirical_chain_stats, simulate_psd
from cpmspectra.spectrum import closed_form_psd

fmt = CpmFormat(2, PhaseResponse("gmsk", 4), normalize_indices(["1/2"]))
est = simulate_psd(fmt, WelchConfig(symbols=200_000, segment_symbols=256, seed=1))
sel = np.abs(est.grid) <= 2
ref = closed_form_psd(build_polyphase(fmt), est.grid[sel])
keep = ref.psd_db >= -40
dev = np.abs(10 * np.log10(est.psd[sel][keep] / ref.psd[keep]))
print(f"{est.n_segments} segments, max deviation {dev.max():.2f} dB within 40 dB of peak")
print(f"estimated power {est.total_power():.4f}")

# %% [markdown]
# The state path of the modulator can be simulated directly, and its visit
# frequencies at block boundaries match the stationary distribution.

# %%
multih = CpmFormat(4, PhaseResponse("cpfsk", 1),
                   normalize_indices(["4/16", "5/16", "8/16", "10/16"]))
stats = empirical_chain_stats(multih, 10 ** 6, seed=3)
m = build_polyphase(multih)
print("total variation at block boundaries:", round(stats.tv_distance(m.stationary), 4))
print("parity at block boundaries never changes:", not stats.block_parity.any())
