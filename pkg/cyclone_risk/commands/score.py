"""
score 命令 - 真值在预测分布下的 delta 与重现期
"""
import argparse
import logging

from ..config import Settings
from ..core.scoring import score_storm
from ..exceptions import InputError
from ..services.export import read_predictive_draws, read_predictive_summary
from .common import emit_json, resolve_path

logger = logging.getLogger(__name__)

TRUTH_VARIABLES = ("min_pressure", "max_wind", "damage")


def register(subparsers) -> None:
    parser = subparsers.add_parser("score", help="delta 评分")
    parser.add_argument("--predictive", required=True, help="predict-cyclone 的输出 (.jsonl)")
    parser.add_argument("--truth", help="minCP,maxWS,damage; 缺省时使用预测结果中记录的真值")
    parser.set_defaults(handler=run)


def parse_truth(text: str) -> dict:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != len(TRUTH_VARIABLES):
        raise InputError(f"--truth 需要 {len(TRUTH_VARIABLES)} 个逗号分隔的值: {text!r}")
    try:
        return {k: float(v) for k, v in zip(TRUTH_VARIABLES, parts) if v}
    except ValueError:
        raise InputError(f"--truth 含非数值: {text!r}")


def run(args: argparse.Namespace, cfg: Settings) -> int:
    path = resolve_path(cfg, args.predictive)
    draws = read_predictive_draws(path)
    summary = read_predictive_summary(path)
    if args.truth:
        truth = parse_truth(args.truth)
    elif "truth" in summary:
        truth = {k: v for k, v in summary["truth"].items() if v is not None}
    else:
        raise InputError("没有真值: 请指定 --truth")

    scores = score_storm(draws, truth, cfg.CREDIBLE_LEVEL)
    # 与逐风暴 delta 汇总表同版式
    row = {"storm": summary.get("storm")}
    row.update({f"delta_{k}": v["delta"] for k, v in scores.items()})
    emit_json({"row": row, "scores": scores})
    for variable, score in scores.items():
        logger.info(f"{variable}: alpha={score['alpha']:.4f}, delta={score['delta']:.4f}, {score['rarity']['statement']}")
    return 0
