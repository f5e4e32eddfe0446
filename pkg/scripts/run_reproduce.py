#!/usr/bin/env python3
"""Run the full experiment reproduction with sensible defaults.

Equivalent to `reinsopt reproduce --out results --seed 42`; kept as a script
so the whole pipeline is one command from a fresh checkout.
"""

import sys

from reinsopt.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:] or ["reproduce", "--out", "results", "--seed", "42"]
    if argv and argv[0] != "reproduce":
        argv = ["reproduce", *argv]
    sys.exit(main(argv))
