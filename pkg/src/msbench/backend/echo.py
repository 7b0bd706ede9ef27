"""Minimal external backend server speaking the msbench wire protocol.

Run as ``python -m msbench.backend.echo``. By default it answers every
request with uniform probability vectors; ``--kernel reference`` runs the
built-in reference kernel instead. The fault options exist to exercise the
client's error handling.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import protocol
from .reference import ReferenceWeights, reference_infer
from ..imaging import WindowBatch


def main(argv=None):
    parser = argparse.ArgumentParser(prog="msbench.backend.echo", description=__doc__)
    parser.add_argument("--classes", type=int, default=23)
    parser.add_argument("--kernel", choices=["uniform", "reference"], default="uniform")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--delay", type=float, default=0.0, help="seconds to sleep per request")
    parser.add_argument("--truncate-after", type=int, default=None,
                        help="send only this many bytes of the first response, then exit")
    parser.add_argument("--scale", type=float, default=1.0,
                        help="multiply probabilities by this factor before sending")
    args = parser.parse_args(argv)

    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    weights = ReferenceWeights(args.seed, args.classes) if args.kernel == "reference" else None
    while True:
        windows = protocol.read_request(stdin)
        if windows is None:
            return 0
        n = windows.shape[0]
        if weights is not None:
            probs = reference_infer(WindowBatch("", windows), args.seed, weights).probs
        else:
            probs = np.full((n, args.classes), 1.0 / args.classes)
        if args.delay:
            time.sleep(args.delay)
        frame = protocol.encode_response(probs * args.scale)
        if args.truncate_after is not None:
            stdout.write(frame[: args.truncate_after])
            stdout.flush()
            return 3
        stdout.write(frame)
        stdout.flush()


if __name__ == "__main__":
    sys.exit(main())
