"""Regenerate the embedded square-root factors of the LSP correlation tables.

Run after editing data/lsp_tables.json:

    python3 scripts/regen_corr_sqrt.py
"""

from importlib import resources
from pathlib import Path

from mmwave3gpp.large_scale import SQRT_FILE, write_sqrt_file

if __name__ == "__main__":
    target = Path(str(resources.files("mmwave3gpp").joinpath(SQRT_FILE)))
    write_sqrt_file(target)
    print(f"wrote {target}")
