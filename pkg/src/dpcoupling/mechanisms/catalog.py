"""Shipped bundle files and the loader reading them back.

Every bundle exists as ``<name>.pwhile`` (plus ``<name>.proof`` when it has
a script) in the ``data`` directory next to this module.  The files are
generated from the builders at their default shapes; ``python3 -m
dpcoupling.mechanisms.catalog`` regenerates them.
"""

from __future__ import annotations

import argparse
from pathlib import Path
from typing import Dict, List, Optional

from ..aprhl.proof import parse_proof
from ..lang.parser import parse_program
from ..lang.typing import typecheck
from .bundles import BUILDERS, MechanismBundle

DATA_DIR = Path(__file__).with_name("data")


def bundle_names() -> List[str]:
    return sorted(BUILDERS)


def rendered(bundle: MechanismBundle) -> Dict[str, str]:
    """File name -> contents for one bundle."""
    out = {f"{bundle.name}.pwhile": bundle.source}
    text = bundle.proof_text()
    if text is not None:
        out[f"{bundle.name}.proof"] = text
    return out


def generate(directory: Path = DATA_DIR) -> List[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name in bundle_names():
        for fname, text in rendered(BUILDERS[name]()).items():
            path = directory / fname
            path.write_text(text)
            written.append(path)
    return written


def load_bundle(name: str, directory: Optional[Path] = None) -> MechanismBundle:
    """The named bundle with program and proof read from the data files.

    Claimed cost, ranges and expectation come from the builder's defaults.
    """
    if name not in BUILDERS:
        raise KeyError(f"unknown mechanism {name!r}; known: {', '.join(bundle_names())}")
    directory = directory or DATA_DIR
    bundle = BUILDERS[name]()
    src = (directory / f"{name}.pwhile").read_text()
    bundle.program = parse_program(src)
    typecheck(bundle.program)
    bundle.source = src
    proof_path = directory / f"{name}.proof"
    bundle.proof = parse_proof(proof_path.read_text()) if proof_path.exists() else None
    return bundle


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Regenerate the shipped mechanism files.")
    ap.add_argument("--out", type=Path, default=DATA_DIR)
    args = ap.parse_args(argv)
    for path in generate(args.out):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
