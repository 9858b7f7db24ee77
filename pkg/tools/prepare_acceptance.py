#!/usr/bin/env python3
"""Prefill the acceptance-test cache (hours of training on one core).

Run this in the background before `pytest tests/test_acceptance.py`; the
tests revalidate whatever this produces and fall back to training inline
when the cache is absent.
"""

import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import acceptance_support as accept


def main() -> int:
    t0 = time.time()
    accept.ensure_overfit()
    print(f"overfit cache ready after {time.time() - t0:.0f}s", flush=True)
    accept.ensure_ablation()
    print(f"all caches ready after {time.time() - t0:.0f}s", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
