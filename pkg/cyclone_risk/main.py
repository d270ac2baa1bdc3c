import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from .commands import COMMANDS
from .config import Settings, load_settings
from .exceptions import CycloneRiskError, InputError, NumericalError

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclone-risk",
        description="热带气旋季节活动与单个气旋损失的层级贝叶斯模型",
    )
    parser.add_argument("--config", help="key=value 配置文件, 其中的值覆盖命令行参数")
    parser.add_argument("--data-root", dest="data_root", help="相对路径的根目录")
    parser.add_argument("--seed", dest="seed", type=int, help="全部随机性的唯一来源")
    parser.add_argument("-v", "--verbose", action="store_true", help="DEBUG 日志")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def settings_from_args(args: argparse.Namespace) -> Settings:
    """与 Settings 字段同名的参数作为命令行取值传入"""
    fields = set(Settings.model_fields)
    flags = {k: v for k, v in vars(args).items() if k.upper() in fields and v is not None}
    if args.verbose:
        flags["LOG_LEVEL"] = "DEBUG"
    return load_settings(args.config, **flags)


def configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT, force=True)


def _report(error: CycloneRiskError) -> int:
    sys.stderr.write(json.dumps(error.to_payload(), ensure_ascii=False) + "\n")
    return error.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = settings_from_args(args)
        configure_logging(cfg.LOG_LEVEL)
        return args.handler(args, cfg) or 0
    except CycloneRiskError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return _report(e)
    except ValidationError as e:
        return _report(InputError(f"输入校验失败: {e}"))
    except (FileNotFoundError, PermissionError) as e:
        return _report(InputError(f"无法读取文件: {e}"))
    except Exception as e:
        # 全局异常处理
        logger.error(f"全局异常: {e}", exc_info=True)
        return _report(NumericalError(f"内部错误: {e}"))


if __name__ == "__main__":
    sys.exit(main())
