"""fracflow-plot: batch figures from fracflow CSV files.

Usage:
    fracflow-plot --kind snapshot|rates|sweep --in FILE [--in FILE...]
                  --out FILE.png [--guides v1,v2] [--title TEXT]

Exit codes: 0 on success, 2 on missing files or schema violations.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .render import FigureSpec, render
from .schemas import SchemaError

logger = logging.getLogger("fracflow-plot")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracflow-plot", description=__doc__.splitlines()[0])
    ap.add_argument("--kind", required=True, choices=["snapshot", "rates", "sweep"])
    ap.add_argument("--in", dest="inputs", action="append", required=True, metavar="FILE")
    ap.add_argument("--out", required=True, metavar="FILE.png")
    ap.add_argument("--guides", help="comma-separated horizontal guide values")
    ap.add_argument("--title")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    guides = []
    if args.guides:
        try:
            guides = [float(tok) for tok in args.guides.split(",") if tok.strip()]
        except ValueError:
            logger.error("--guides must be comma-separated numbers, got %r", args.guides)
            return 2
    spec = FigureSpec(kind=args.kind, inputs=args.inputs, output=args.out,
                      guides=guides, title=args.title)
    try:
        out = render(spec)
    except SchemaError as exc:
        logger.error("%s", exc)
        return 2
    logger.info("wrote %s", out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
