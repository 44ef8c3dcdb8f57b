# %% [markdown]
# # The command-line tool
#
# `cpm-spectra` wraps the library.  `validate` sizes a format without
# computing anything, `run` writes CSV spectra and a JSON diagnostics file.

# %%
import io
import json
import tempfile
from pathlib import Path

from cpmspectra.cli import main

out = io.StringIO()
main(["validate", "--preset", "multih-4-16"], stream=out)
print(out.getvalue())

# %%
with tempfile.TemporaryDirectory() as tmp:
    out = io.StringIO()
    code = main(["run", "--preset", "rc-l2", "--out", tmp], stream=out)
    print("exit status", code)
    print(out.getvalue())
    diag = json.loads((Path(tmp) / "diagnostics.json").read_text())
    print({k: diag[k] for k in ("N_c", "I_0", "N_0", "p")})
    print((Path(tmp) / "spectrum.csv").read_text().splitlines()[:3])
