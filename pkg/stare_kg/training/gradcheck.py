# stare_kg/training/gradcheck.py
"""Central finite differences against autograd, per parameter tensor."""
import logging
from typing import Callable, Dict, List, Optional

import torch
import torch.nn as nn
from pydantic import BaseModel

log = logging.getLogger(__name__)


class ParamCheck(BaseModel):
    name: str
    shape: List[int]
    checked: int
    max_abs_analytic: float
    max_abs_numeric: float
    max_rel_error: float


class GradCheckReport(BaseModel):
    step: float
    tolerance: float
    params: List[ParamCheck]

    @property
    def max_rel_error(self) -> float:
        return max((p.max_rel_error for p in self.params), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance

    def worst(self) -> Optional[ParamCheck]:
        return max(self.params, key=lambda p: p.max_rel_error, default=None)

    def format_table(self) -> str:
        width = max([len(p.name) for p in self.params] + [9])
        lines = [f"{'parameter':<{width}}  {'checked':>7}  {'max_rel_err':>12}"]
        for p in self.params:
            lines.append(f"{p.name:<{width}}  {p.checked:>7}  {p.max_rel_error:>12.3e}")
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{verdict}: max_rel_err={self.max_rel_error:.3e} tolerance={self.tolerance:.1e}")
        return "\n".join(lines)


def relative_error(analytic: torch.Tensor, numeric: torch.Tensor) -> float:
    """max|a - n| / max(max|a|, max|n|, 1e-12) over the checked entries."""
    if analytic.numel() == 0:
        return 0.0
    diff = (analytic - numeric).abs().max().item()
    scale = max(analytic.abs().max().item(), numeric.abs().max().item(), 1e-12)
    return diff / scale


def _entries(numel: int, max_entries: int, generator: torch.Generator) -> torch.Tensor:
    if max_entries <= 0 or numel <= max_entries:
        return torch.arange(numel)
    return torch.randperm(numel, generator=generator)[:max_entries].sort().values


def grad_check(
    model: nn.Module,
    loss_fn: Callable[[], torch.Tensor],
    step: float = 1e-5,
    tolerance: float = 1e-4,
    max_entries: int = 0,
    seed: int = 0,
) -> GradCheckReport:
    """Compare autograd gradients of `loss_fn()` with central differences.

    `loss_fn` must be deterministic (dropout disabled); float64 parameters
    are expected, anything else is checked with a warning.
    """
    model.zero_grad()
    loss_fn().backward()
    analytic: Dict[str, torch.Tensor] = {}
    for name, p in model.named_parameters():
        if p.dtype != torch.float64:
            log.warning(f"Gradient check on non-float64 parameter | name={name} | dtype={p.dtype}")
        analytic[name] = p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p)

    generator = torch.Generator().manual_seed(seed)
    checks = []
    with torch.no_grad():
        for name, p in model.named_parameters():
            flat = p.data.view(-1)
            idx = _entries(flat.numel(), max_entries, generator)
            numeric = torch.empty(len(idx), dtype=torch.float64)
            for j, i in enumerate(idx.tolist()):
                original = flat[i].item()
                flat[i] = original + step
                plus = loss_fn().item()
                flat[i] = original - step
                minus = loss_fn().item()
                flat[i] = original
                numeric[j] = (plus - minus) / (2.0 * step)
            a = analytic[name].reshape(-1)[idx].to(torch.float64)
            checks.append(ParamCheck(
                name=name,
                shape=list(p.shape),
                checked=len(idx),
                max_abs_analytic=a.abs().max().item() if len(idx) else 0.0,
                max_abs_numeric=numeric.abs().max().item() if len(idx) else 0.0,
                max_rel_error=relative_error(a, numeric),
            ))

    report = GradCheckReport(step=step, tolerance=tolerance, params=checks)
    worst = report.worst()
    log.info(f"Gradient check done | params={len(checks)} | max_rel_err={report.max_rel_error:.3e} | "
             f"worst={worst.name if worst else None} | passed={report.passed}")
    return report
