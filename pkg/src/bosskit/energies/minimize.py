"""Staged quasi-Newton minimization over named parameter blocks.

Gradients come from torch autograd; the inner driver is scipy's L-BFGS-B,
which is deterministic given identical inputs. A schedule activates block
subsets stage by stage (e.g. translation, then pose, then shape, then
everything), optionally with per-element masks freezing entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from scipy import optimize

from ..errors import NonFiniteObjectiveError

DEFAULT_MAX_ITER = 500
DEFAULT_F_TOL = 1e-7
DEFAULT_G_TOL = 1e-6


@dataclass
class VariableBlock:
    """One named optimization variable with an optional free-entry mask."""

    name: str
    value: np.ndarray
    mask: np.ndarray | None = None  # True entries are optimized

    def __post_init__(self):
        self.value = np.array(self.value, dtype=np.float64)
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.value.shape:
                raise ValueError(f"mask shape mismatch for block '{self.name}'")

    @property
    def free_indices(self) -> np.ndarray:
        if self.mask is None:
            return np.arange(self.value.size)
        return np.nonzero(self.mask.reshape(-1))[0]


@dataclass
class Stage:
    blocks: tuple[str, ...]
    max_iter: int | None = None
    name: str = ""


@dataclass
class MinimizeResult:
    values: dict[str, np.ndarray]
    objective: float
    terms: dict[str, float]
    n_iterations: int
    converged: bool
    line_search_failed: bool
    records: list[dict] = field(default_factory=list)


def _compose(block: VariableBlock, x_slice: torch.Tensor | None) -> torch.Tensor:
    base = torch.as_tensor(block.value).reshape(-1)
    if x_slice is None:
        return base.reshape(block.value.shape)
    if block.mask is None:
        return x_slice.reshape(block.value.shape)
    out = base.clone()
    out[torch.as_tensor(block.free_indices)] = x_slice
    return out.reshape(block.value.shape)


def minimize(
    objective,
    blocks: list[VariableBlock],
    schedule: list[Stage],
    max_iter: int = DEFAULT_MAX_ITER,
    f_tol: float = DEFAULT_F_TOL,
    g_tol: float = DEFAULT_G_TOL,
    log=None,
) -> MinimizeResult:
    """Run the stage schedule to convergence.

    ``objective(tensors)`` receives every block as a torch tensor (active
    blocks carry gradients) and returns (total, per-term dict). Convergence
    per stage: relative objective decrease below f_tol, or projected
    gradient infinity norm below g_tol, capped at max_iter iterations.
    Non-finite objectives abort naming the offending term; line-search
    failures return the best iterate with a flag.
    """
    by_name = {b.name: b for b in blocks}
    records: list[dict] = []
    total_iters = 0
    converged_all = True
    line_search_failed = False
    last_f = np.nan
    last_terms: dict[str, float] = {}

    for stage_id, stage in enumerate(schedule):
        active = [by_name[name] for name in stage.blocks]
        sizes = [len(b.free_indices) for b in active]
        if sum(sizes) == 0:
            continue
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        x0 = np.concatenate(
            [b.value.reshape(-1)[b.free_indices] for b in active]
        )
        cache = {}

        def fun(x):
            nonlocal last_f, last_terms
            leaves = []
            tensors = {}
            for i, b in enumerate(active):
                leaf = torch.tensor(x[offsets[i] : offsets[i + 1]], requires_grad=True)
                leaves.append(leaf)
                tensors[b.name] = _compose(b, leaf)
            for b in blocks:
                if b.name not in tensors:
                    tensors[b.name] = torch.as_tensor(b.value)
            total, terms = objective(tensors)
            if not torch.isfinite(total):
                for name, value in terms.items():
                    v = float(value.detach()) if torch.is_tensor(value) else float(value)
                    if not np.isfinite(v):
                        raise NonFiniteObjectiveError(name, v)
                raise NonFiniteObjectiveError("total", float(total.detach()))
            total.backward()
            grad = np.concatenate(
                [
                    leaf.grad.numpy() if leaf.grad is not None else np.zeros(sizes[i])
                    for i, leaf in enumerate(leaves)
                ]
            )
            f = float(total.detach())
            last_f = f
            last_terms = {
                k: float(v.detach()) if torch.is_tensor(v) else float(v)
                for k, v in terms.items()
            }
            cache["grad_norm"] = float(np.abs(grad).max()) if len(grad) else 0.0
            return f, grad

        iteration = {"count": 0}

        def callback(_xk):
            iteration["count"] += 1
            records.append(
                {
                    "stage": stage.name or f"stage{stage_id}",
                    "iteration": iteration["count"],
                    "objective": last_f,
                    "terms": dict(last_terms),
                    "grad_norm": cache.get("grad_norm", np.nan),
                }
            )
            if log is not None:
                log(records[-1])

        res = optimize.minimize(
            fun,
            x0,
            jac=True,
            method="L-BFGS-B",
            options={
                "maxiter": stage.max_iter if stage.max_iter is not None else max_iter,
                "ftol": f_tol,
                "gtol": g_tol,
            },
            callback=callback,
        )
        for i, b in enumerate(active):
            flat = b.value.reshape(-1)
            flat[b.free_indices] = res.x[offsets[i] : offsets[i + 1]]
        total_iters += int(res.nit)
        message = str(res.message).upper()
        if "ABNORMAL" in message or "LNSRCH" in message or "LINE SEARCH" in message:
            line_search_failed = True
        elif not res.success and "ITERATIONS" not in message and "EVALUATIONS" not in message:
            converged_all = False
        # evaluate once more so the reported objective matches final values
        last_f, _ = fun(np.concatenate([b.value.reshape(-1)[b.free_indices] for b in active]))

    return MinimizeResult(
        values={b.name: b.value.copy() for b in blocks},
        objective=last_f,
        terms=dict(last_terms),
        n_iterations=total_iters,
        converged=converged_all and not line_search_failed,
        line_search_failed=line_search_failed,
        records=records,
    )
