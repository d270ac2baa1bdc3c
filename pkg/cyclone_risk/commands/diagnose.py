"""
diagnose / summary 命令
"""
import argparse
import logging

from ..config import Settings
from ..core.diagnostics import diagnostics, posterior_summary
from ..core.seasonal import expected_damage_summary
from ..services.chain_store import read_chain
from ..services.export import write_csv
from .common import emit_json, resolve_path

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    diagnose = subparsers.add_parser("diagnose", help="收敛诊断 (多条链时计算 R-hat)")
    diagnose.add_argument("--chain", required=True, action="append", help="可重复指定多条链")
    diagnose.add_argument("--min-samples", dest="min_diagnostic_samples", type=int)
    diagnose.add_argument("--out", help="诊断表 CSV")
    diagnose.set_defaults(handler=run_diagnose)

    summary = subparsers.add_parser("summary", help="后验汇总表")
    summary.add_argument("--chain", required=True)
    summary.add_argument("--out", help="汇总表 CSV")
    summary.set_defaults(handler=run_summary)


def run_diagnose(args: argparse.Namespace, cfg: Settings) -> int:
    chains = [read_chain(resolve_path(cfg, p)) for p in args.chain]
    table = diagnostics(chains, cfg.MIN_DIAGNOSTIC_SAMPLES)
    print(table.to_string())
    if args.out:
        write_csv(table.reset_index(), resolve_path(cfg, args.out))
    logger.info(f"接受率: {table.attrs.get('acceptance')}, 链数: {table.attrs.get('n_chains')}")
    flagged = table.index[table["degenerate"]].tolist()
    if flagged:
        logger.warning(f"退化参数 (链上恒定): {flagged}")
    return 0


def run_summary(args: argparse.Namespace, cfg: Settings) -> int:
    chain = read_chain(resolve_path(cfg, args.chain))
    table = posterior_summary(chain, cfg.CREDIBLE_LEVEL)
    print(table.to_string())
    if args.out:
        write_csv(table.reset_index(), resolve_path(cfg, args.out))
    if chain.metadata.get("model") == "seasonal":
        emit_json({"group": chain.metadata.get("group"), "expected_damage": expected_damage_summary(chain, cfg.CREDIBLE_LEVEL)})
    return 0
