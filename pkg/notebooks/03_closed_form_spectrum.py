# %% [markdown]
# # Closed-form power spectral density
#
# The average PSD follows from the block machine and the Fourier transforms
# of the block waveforms, with one small resolvent per frequency.  MSK has a
# textbook closed form, which makes a convenient sanity check.

# %%
import numpy as np

from cpmspectra import CpmFormat, PhaseResponse, normalize_indices
from cpmspectra.chain import build_polyphase
from cpmspectra.spectrum import closed_form_psd

grid = np.linspace(-4, 4, 2001)
msk = CpmFormat(2, PhaseResponse("cpfsk", 1), normalize_indices(["1/2"]))
res = closed_form_psd(build_polyphase(msk), grid)
# the textbook expression has removable singularities at fT = +-1/4
f = grid + 1e-4
check = closed_form_psd(build_polyphase(msk), f)
textbook = 16 / np.pi ** 2 * (np.cos(2 * np.pi * f) / (1 - 16 * f ** 2)) ** 2
print("max deviation from the MSK formula:", np.abs(check.psd - textbook).max())
print("total power:", res.total_power())

# %% [markdown]
# Smoother phase pulses concentrate the spectrum: compare the level at
# `fT = 1.5` for several formats.

# %%
formats = {
    "MSK": msk,
    "RC, L=2, M=4": CpmFormat(4, PhaseResponse("rc", 2), normalize_indices(["4/16", "5/16"])),
    "GMSK, L=4": CpmFormat(2, PhaseResponse("gmsk", 4), normalize_indices(["1/2"])),
    "multi-h CPFSK": CpmFormat(4, PhaseResponse("cpfsk", 1),
                               normalize_indices(["4/16", "5/16", "8/16", "10/16"])),
}
k = np.argmin(np.abs(grid - 1.5))
for name, fmt in formats.items():
    r = closed_form_psd(build_polyphase(fmt), grid)
    print(f"{name:15s} {r.psd_db[k]:8.1f} dB   power {r.total_power():.5f}")

# %% [markdown]
# With an integer index (`p = 1`) part of the power sits in spectral lines.

# %%
h1 = CpmFormat(2, PhaseResponse("cpfsk", 1), normalize_indices(["1"]))
r = closed_form_psd(build_polyphase(h1), grid)
for ln in r.lines:
    print(f"line k={ln.k}  fT={ln.freq:+.2f}  weight={ln.weight:.4f}")
