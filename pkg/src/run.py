import logger_init
import argparse
import os
import sys

from dotenv import load_dotenv

from gln_tracking.errors import ConfigError
from gln_tracking.task_manager import RunStatusCode, run_command, status_for
from gln_tracking.utils import load_run_config

COMMANDS = ("simulate", "track", "forecast", "evaluate", "backtest")


def build_parser():
    load_dotenv()
    parser = argparse.ArgumentParser(description="Track a bounded GLN time series and score its forecasts")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", "--config_file", dest="config_file", type=str,
                        default=os.getenv("GLN_TRACKING_CONFIG", "./config/gln-tracking_config.json"))
    parser.add_argument("--data", type=str, nargs="+", default=None,
                        help="t,x[,b_true] CSV (evaluate accepts several replicas)")
    parser.add_argument("--trajectory", type=str, default=None, help="trajectory CSV written by 'track'")
    parser.add_argument("--forecast", type=str, nargs="+", default=None,
                        help="forecast CSV written by 'forecast', one per --data file")
    parser.add_argument("--out", type=str, default="./output")
    parser.add_argument("--method", type=str, default=None,
                        help="ngd, rmle_b, rmle_1, ongd, climatology, persistence, ideal")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--replicas", type=int, default=None)
    parser.add_argument("--log_lev", type=str, default=os.getenv("GLN_TRACKING_LOG_LEVEL", "INFO"),
                        help="NOTSET, DEBUG, INFO, WARNING, ERROR, CRITICAL")
    parser.add_argument("--log_file", type=str, default=os.getenv("GLN_TRACKING_LOG_FILE", "./log/gln-tracking.log"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    SERVER_NAME = "gln_tracking"
    logger_it = logger_init.initialize_logger(SERVER_NAME, args.log_lev, args.log_file)
    logger_init.set_logger(logger_it)
    logger = logger_init.get_logger()

    logger.info(f'RUN INFO')
    logger.info(f'- Command: {args.command}')
    logger.info(f'- Log: {args.log_file}')
    logger.info(f'- Config: {args.config_file}')

    overrides = {"method": args.method, "seed": args.seed, "replicas": args.replicas}
    try:
        config = load_run_config(args.config_file, overrides)
    except ConfigError as e:
        logger.error(f'[Config] {e}')
        return int(status_for(e)[1])

    code = run_command(args.command, config, args)
    if code != RunStatusCode.SUCCESS:
        logger.error(f'{args.command} finished with exit code {int(code)}')
    return int(code)


if __name__ == "__main__":
    sys.exit(main())
