"""Write the golden-vector suite to entropy-codec/tests/golden/.

Each case becomes four little-endian files (symbols i32, contexts u16,
table blob, reference payload) plus one shared index.json; the native
crate's golden test replays them byte-for-byte.

Usage: python3 tools/make_golden_vectors.py [out_dir]
"""

import json
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import golden_support as gs  # noqa: E402


def main() -> None:
    root = Path(__file__).resolve().parent.parent
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else root / "entropy-codec/tests/golden"
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    index = {"seed": gs.SUITE_SEED, "cases": []}
    for case in gs.iter_cases():
        payload = gs.reference_payload(case)
        blob = case.table_set.blob()
        tag = f"{case.index:03d}"
        (out / f"sym_{tag}.bin").write_bytes(
            np.asarray(case.symbols, dtype="<i4").tobytes()
        )
        (out / f"ctx_{tag}.bin").write_bytes(
            np.asarray(case.contexts, dtype="<u2").tobytes()
        )
        (out / f"blob_{tag}.bin").write_bytes(blob)
        (out / f"pay_{tag}.bin").write_bytes(payload)
        index["cases"].append(
            {
                "case": case.index,
                "count": len(case.symbols),
                "payload_len": len(payload),
                "table_id": f"{case.table_set.table_id():016x}",
            }
        )
        if case.index % 50 == 0:
            print(f"case {case.index} done at {time.time() - started:.1f}s", flush=True)
    (out / "index.json").write_text(json.dumps(index, indent=1))
    n_symbols = sum(c["count"] for c in index["cases"])
    print(
        f"wrote {len(index['cases'])} cases, {n_symbols} symbols "
        f"to {out} in {time.time() - started:.1f}s"
    )


if __name__ == "__main__":
    main()
