import argparse
import logging
import sys
import traceback

from src.cli.commands import VERBS, CommandOptions, run_command
from src.utils.config import RunConfig
from src.utils.errors import LabError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vlntrans", description="Sub-instruction translator navigation lab")
    parser.add_argument("verb", choices=VERBS)
    parser.add_argument("--config", help="JSON run configuration (defaults when omitted)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value; may repeat")
    parser.add_argument("--ablation", action="append", default=[],
                        choices=["no-translator", "no-sig", "no-dsl", "no-ss", "freeze-translator"])
    parser.add_argument("--output-dir", help="run directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, help="overrides seeds.seed")
    parser.add_argument("--runs", nargs="*", default=[], help="report: run directories to aggregate")
    parser.add_argument("--maps", type=int, default=0, help="gen-worlds: render maps of the first N seen worlds")
    parser.add_argument("--limit", type=int, default=20, help="translate: number of records to decode")
    parser.add_argument("--progress", action="store_true", help="show progress bars")
    parser.add_argument("--log-level", default="INFO")
    return parser


def load_config(args) -> RunConfig:
    overrides = list(args.overrides)
    if args.output_dir:
        overrides.append(f"output_dir={args.output_dir}")
    if args.seed is not None:
        overrides.append(f"seeds.seed={args.seed}")
    for flag in args.ablation:
        overrides.append(f"ablation.{flag.replace('-', '_')}=true")
    return RunConfig.load(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.INFO), format=LOG_FORMAT)
    try:
        config = load_config(args)
        options = CommandOptions(progress=args.progress, maps=args.maps, runs=args.runs, limit=args.limit)
        result = run_command(args.verb, config, options)
        print(result.summary)
        return 0
    except LabError as e:
        print(f"error {e.category}: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("\nRun interrupted by user", file=sys.stderr)
        return 1
    except Exception as e:
        logging.getLogger("main").error("unexpected failure: %s\n%s", e, traceback.format_exc())
        print(f"Fatal error: {str(e)}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
