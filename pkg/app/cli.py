"""Command-line entry point.

Every subcommand reads its inputs as file paths or inline JSON (an argument
starting with ``{`` or ``[``), runs one library operation through
``CommandService`` and prints JSON on standard output. Logs go to standard
error.

Exit codes: 0 on success, 2 when the answer is a valid "false" or
"infeasible", 1 on input errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, TextIO

from pydantic import ValidationError

from app.core.config import settings
from app.core.error_handlers import ErrorHandler
from app.core.logging import setup_logging
from app.services.command_service import CommandService
from app.services.exceptions import InfeasibleError, MalformedInput, ServiceException

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NEGATIVE = 2


def load_json(argument: str) -> Any:
    """Inline JSON when the argument starts with '{' or '[', otherwise a file path"""
    text = argument.strip()
    if text[:1] in ("{", "["):
        source = "inline"
    else:
        path = Path(argument)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise MalformedInput(
                f"Cannot read {argument}",
                error_code="INPUT_NOT_FOUND",
                details={"path": argument, "reason": str(e)},
            )
        source = str(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedInput(
            "Malformed JSON",
            details={"source": source, "line": e.lineno, "column": e.colno, "reason": e.msg},
        )


def _poset(argument: str) -> dict:
    data = load_json(argument)
    if isinstance(data, dict) and "edges" in data:
        return {"hasse": data}
    return {"order": data}


def _lattice(argument: str) -> dict:
    if argument.strip().isdigit():
        return {"dimension": int(argument)}
    return {"lattice": load_json(argument)}


def _request(args: argparse.Namespace) -> dict:
    """Assemble the request payload of the chosen subcommand"""
    command = args.command
    if command == "dominance":
        return {**_poset(args.poset), "mu1": load_json(args.mu1), "mu2": load_json(args.mu2), "method": args.method}
    if command == "couple":
        return {"flow": load_json(args.flow), "mu1": load_json(args.mu1), "method": args.method}
    if command == "decompose":
        return {"flow": load_json(args.flow), "stabilize": args.stabilize}
    if command == "wasserstein":
        return {"graph": load_json(args.graph), "mu1": load_json(args.mu1), "mu2": load_json(args.mu2), "method": args.method}
    if command == "ring":
        data = {"graph": load_json(args.graph), "mu1": load_json(args.mu1), "mu2": load_json(args.mu2)}
        if args.orientation:
            data["orientation"] = load_json(args.orientation)
        return data
    if command == "holley":
        return {
            **_lattice(args.lattice),
            "mu1": load_json(args.mu1),
            "mu2": load_json(args.mu2),
            "search": args.search,
            "budget": args.budget,
        }
    if command == "truncate":
        data = {
            "instance": args.instance,
            "params": load_json(args.params),
            "level": args.level,
            "mode": args.mode,
            "report": args.report,
            "tolerance": args.tolerance,
        }
        if args.edge:
            data["edge"] = args.edge
        if args.prefix:
            data["prefix"] = load_json(args.prefix)
        if args.tail_weight is not None:
            data["tail_weight"] = args.tail_weight
        return data
    if command == "verify":
        bundle = load_json(args.bundle)
        if not isinstance(bundle, dict):
            raise MalformedInput("The verify bundle must be a JSON object", details={"source": args.bundle})
        return {**bundle, "kind": args.kind, "seed": args.seed}
    if command == "lattice":
        return {
            "dimension": args.dimension,
            "mu1": load_json(args.mu1),
            "mu2": load_json(args.mu2),
            "probe_count": args.budget,
            "seed": args.seed,
        }
    raise MalformedInput(f"Unknown command '{command}'", error_code="UNKNOWN_COMMAND")


def _parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--float", action="store_true", help="Emit rationals as decimals")

    parser = argparse.ArgumentParser(
        prog="flowcoupling",
        description="Flows, couplings and stochastic dominance on finite digraphs, in exact arithmetic.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("dominance", parents=[common], help="Decide mu1 <= mu2 with a certificate")
    p.add_argument("poset", help="Order pairs {'pairs': ...} or a Hasse digraph {'edges': ...}")
    p.add_argument("mu1")
    p.add_argument("mu2")
    p.add_argument("--method", choices=["flow", "oracle", "chain", "tree", "ring"], default="flow")

    p = commands.add_parser("couple", parents=[common], help="Coupling of mu1 and mu1 - div Q from a flow")
    p.add_argument("flow")
    p.add_argument("mu1")
    p.add_argument("--method", choices=["ledger", "decomposition"], default="ledger")

    p = commands.add_parser("decompose", parents=[common], help="Path decomposition of an acyclic flow")
    p.add_argument("flow")
    p.add_argument("--stabilize", action="store_true")

    p = commands.add_parser("wasserstein", parents=[common], help="Optimal transport on a weighted digraph")
    p.add_argument("graph")
    p.add_argument("mu1")
    p.add_argument("mu2")
    p.add_argument("--method", choices=["beckmann", "kantorovich"], default="beckmann")

    p = commands.add_parser("holley", parents=[common], help="Holley's condition on a finite lattice")
    p.add_argument("lattice", help="Join/meet tables, or N for the Boolean lattice {0,1}^N")
    p.add_argument("mu1")
    p.add_argument("mu2")
    p.add_argument("--search", action="store_true", help="Search for a tilting measure")
    p.add_argument("--budget", type=int, default=None)

    p = commands.add_parser("ring", parents=[common], help="Optimal cycle coefficients on a weighted ring")
    p.add_argument("graph")
    p.add_argument("mu1")
    p.add_argument("mu2")
    p.add_argument("--orientation", default=None)

    p = commands.add_parser("truncate", parents=[common], help="Truncation reports for a built-in countable instance")
    p.add_argument("instance", choices=["z-chain", "binary-tree"])
    p.add_argument("params")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--mode", choices=["single", "split"], default="single")
    p.add_argument(
        "--report",
        choices=["truncation", "coupling", "flux", "sup-tail", "assessment", "tree-edge", "chain-window"],
        default="truncation",
    )
    p.add_argument("--tolerance", default="1/2", help="Threshold epsilon for the sup-tail evidence")
    p.add_argument("--edge", nargs=2, metavar=("X", "Y"), default=None)
    p.add_argument("--prefix", default=None, help="Decomposition prefix as a path measure")
    p.add_argument("--tail-weight", default=None)

    p = commands.add_parser("verify", parents=[common], help="Invariant report for an artifact bundle")
    p.add_argument("bundle", help="JSON object holding the artifacts and the measures they refer to")
    p.add_argument("--kind", choices=["coupling", "flow", "decomposition", "verdict"], required=True)
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)

    p = commands.add_parser("lattice", parents=[common], help="Random Hasse flows on {0,1}^N against the optimum")
    p.add_argument("dimension", type=int)
    p.add_argument("mu1")
    p.add_argument("mu2")
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    p.add_argument("--budget", type=int, default=None, help="Number of random flows")

    return parser.parse_args(argv)


def _emit(data: Any, out: TextIO) -> None:
    out.write(json.dumps(data, indent=2, ensure_ascii=False))
    out.write("\n")


def run(args: argparse.Namespace, service: Optional[CommandService] = None, out: Optional[TextIO] = None) -> int:
    service = service or CommandService()
    out = out or sys.stdout
    try:
        result = service.execute(args.command, _request(args))
    except ValidationError as e:
        _emit(ErrorHandler.error_body("Validation failed", "VALIDATION_ERROR", ErrorHandler.validation_details(e)), out)
        return EXIT_INPUT_ERROR
    except ServiceException as e:
        logger.warning(f"Command failed: {e.message}", extra={"command": args.command, "error_code": e.error_code})
        _emit(ErrorHandler.error_body(e.message, e.error_code, e.details), out)
        return EXIT_NEGATIVE if isinstance(e, InfeasibleError) else EXIT_INPUT_ERROR

    _emit(result.payload.model_dump(mode="json", exclude_none=True, context={"float": args.float}), out)
    return EXIT_NEGATIVE if result.negative else EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    setup_logging()
    return run(_parse_args(argv))


if __name__ == "__main__":
    raise SystemExit(main())
