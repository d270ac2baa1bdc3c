"""
收敛诊断与后验汇总

ESS 用自相关和截断 (Geyer 初始正序列), R-hat 用链对半拆分后的 Gelman-Rubin 统计量,
Geweke z 比较前 10% 与后 50% 的均值。
"""
from __future__ import annotations

import logging
from typing import List, Sequence, Union

import numpy as np
import pandas as pd

from ..config import settings
from ..exceptions import TooShortChainError
from .mcmc import PosteriorChain

logger = logging.getLogger(__name__)

ChainInput = Union[PosteriorChain, Sequence[PosteriorChain]]


def autocorrelation(x: np.ndarray, max_lag: int = None) -> np.ndarray:
    """FFT 计算的样本自相关 (lag 0 为 1)"""
    x = np.asarray(x, dtype=float)
    n = len(x)
    centered = x - x.mean()
    var = centered.dot(centered)
    if var == 0:
        return np.ones(1)
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centered, n=size)
    acov = np.fft.irfft(spectrum * np.conjugate(spectrum), n=size)[:n]
    acf = acov / var
    if max_lag is not None:
        acf = acf[: max_lag + 1]
    return acf


def integrated_autocorrelation_time(x: np.ndarray) -> float:
    """tau = 1 + 2 * sum(rho_k), 在相邻两项之和首次为负时截断"""
    acf = autocorrelation(x)
    n = len(acf)
    tau = 1.0
    k = 1
    while k + 1 < n:
        pair = acf[k] + acf[k + 1]
        if pair < 0:
            break
        tau += 2.0 * pair
        k += 2
    return max(tau, 1.0 / np.log10(max(n, 10)))


def effective_sample_size(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(len(x) / integrated_autocorrelation_time(x))


def split_rhat(chains: Sequence[np.ndarray]) -> float:
    """每条链对半拆分后的 Gelman-Rubin R-hat"""
    halves = []
    for chain in chains:
        half = len(chain) // 2
        halves.extend([chain[:half], chain[half: 2 * half]])
    seqs = np.vstack(halves)
    m, n = seqs.shape
    means = seqs.mean(axis=1)
    b = n * means.var(ddof=1)
    w = seqs.var(axis=1, ddof=1).mean()
    if w == 0:
        return 1.0
    var_plus = (n - 1) / n * w + b / n
    return float(np.sqrt(var_plus / w))


def geweke_z(x: np.ndarray, first: float = 0.1, last: float = 0.5) -> float:
    x = np.asarray(x, dtype=float)
    n = len(x)
    a = x[: int(first * n)]
    b = x[int((1 - last) * n):]
    var_a = a.var(ddof=1) * integrated_autocorrelation_time(a) / len(a)
    var_b = b.var(ddof=1) * integrated_autocorrelation_time(b) / len(b)
    denom = np.sqrt(var_a + var_b)
    if denom == 0:
        return 0.0
    return float((a.mean() - b.mean()) / denom)


def _as_chain_list(chain: ChainInput) -> List[PosteriorChain]:
    if isinstance(chain, PosteriorChain):
        return [chain]
    return list(chain)


def diagnostics(chain: ChainInput, min_samples: int = None) -> pd.DataFrame:
    """
    每个参数一行: 均值、标准差、lag-1 自相关、ESS、split R-hat、Geweke z、退化标记
    多条链时 ESS 为各链之和
    """
    chains = _as_chain_list(chain)
    min_samples = settings.MIN_DIAGNOSTIC_SAMPLES if min_samples is None else min_samples
    shortest = min(c.n_samples for c in chains)
    if shortest < min_samples:
        raise TooShortChainError(f"链太短: {shortest} 个样本, 至少需要 {min_samples}")

    names = chains[0].names
    rows = []
    for j, name in enumerate(names):
        columns = [c.samples[:, j] for c in chains]
        pooled = np.concatenate(columns)
        degenerate = bool(np.all(pooled == pooled[0]))
        if degenerate:
            logger.warning(f"参数 {name} 的链为常数, 诊断量无意义")
            ess, lag1, rhat, z = float(len(pooled)), 1.0, 1.0, 0.0
        else:
            ess = float(sum(effective_sample_size(col) for col in columns))
            lag1 = float(np.mean([autocorrelation(col, 1)[-1] for col in columns]))
            rhat = split_rhat(columns)
            z = float(np.mean([geweke_z(col) for col in columns]))
        rows.append({
            "parameter": name,
            "mean": float(pooled.mean()),
            "sd": float(pooled.std(ddof=1)),
            "lag1_autocorr": lag1,
            "ess": ess,
            "split_rhat": rhat,
            "geweke_z": z,
            "degenerate": degenerate,
        })
    report = pd.DataFrame(rows).set_index("parameter")
    acceptance = {}
    for c in chains:
        for block, rate in c.acceptance_rates().items():
            acceptance.setdefault(block, []).append(rate)
    report.attrs["acceptance"] = {block: float(np.mean(v)) for block, v in acceptance.items()}
    report.attrs["n_chains"] = len(chains)
    return report


def posterior_summary(chain: ChainInput, credible_level: float = 0.95) -> pd.DataFrame:
    """均值、后验标准差 (样本标准差) 与等尾可信区间"""
    chains = _as_chain_list(chain)
    samples = np.vstack([c.samples for c in chains])
    tail = (1.0 - credible_level) / 2.0
    lower = np.quantile(samples, tail, axis=0)
    upper = np.quantile(samples, 1.0 - tail, axis=0)
    sd = samples.std(axis=0, ddof=1) if samples.shape[0] > 1 else np.zeros(samples.shape[1])
    return pd.DataFrame(
        {
            "mean": samples.mean(axis=0),
            "sd": sd,
            "lower": lower,
            "upper": upper,
        },
        index=pd.Index(chains[0].names, name="parameter"),
    )
