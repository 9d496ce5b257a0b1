"""Central finite-difference checks for every analytic gradient in the package."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CATEGORIES, AlignmentParams, Modality
from .data import SEG_CLASSES, RawRecord
from .losses import PairSimilarities, align_loss_grad, align_loss_terms, cross_entropy

FD_STEP = 1e-5
# entries smaller than this are compared absolutely: FD roundoff is ~1e-11 at step 1e-5
FD_FLOOR = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_rel_err: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.max_rel_err < self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: max_rel_err={self.max_rel_err:.3e} tol={self.tol:.0e}"


def rel_err(analytic, numeric, floor: float = 0.0) -> np.ndarray:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.divide(np.abs(analytic - numeric), scale, out=np.zeros_like(scale), where=scale > 0)


def random_alignment_params(rng) -> AlignmentParams:
    alpha = rng.uniform(0.3, 1.0)
    m = rng.uniform(0.05, alpha - 0.05)
    return AlignmentParams(alpha=alpha, m=m, tau_p=rng.uniform(1.0, 20.0), tau_n=rng.uniform(5.0, 60.0))


def check_align_grad(n_param_sets: int = 10, n_samples: int = 1000, seed: int = 0,
                     step: float = FD_STEP) -> CheckResult:
    """Each of ``n_samples`` similarities is checked as a positive and as a negative.

    The loss is a per-pair average of separable terms, so moving one entry of
    an N-entry batch by +-h changes the loss by that entry's term difference
    over N. All N central differences are therefore taken in one vectorised
    pass over the per-pair terms.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_param_sets):
        p = random_alignment_params(rng)
        s = rng.uniform(-1.0 + 2 * step, 1.0 - 2 * step, size=n_samples)
        g_pos, g_neg = align_loss_grad(PairSimilarities(s, s), p)
        n = s.size
        hi_pos, hi_neg = align_loss_terms(PairSimilarities(s + step, s + step), p)
        lo_pos, lo_neg = align_loss_terms(PairSimilarities(s - step, s - step), p)
        fd_pos = (hi_pos - lo_pos) / (2 * step) / n
        fd_neg = (hi_neg - lo_neg) / (2 * step) / n
        worst = max(worst, rel_err(g_pos, fd_pos).max(), rel_err(g_neg, fd_neg).max())
    return CheckResult("align_loss_grad", float(worst), 1e-4)


def _fd_array(f, x: np.ndarray, step: float) -> np.ndarray:
    grad = np.empty_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = f()
        flat[i] = orig - step
        lo = f()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * step)
    return grad


def check_cross_entropy_grads(seed: int = 0, step: float = FD_STEP) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    worst = 0.0
    for _ in range(20):
        logits = rng.normal(scale=3.0, size=int(rng.integers(2, 12)))
        target = int(rng.integers(logits.size))
        _, g = cross_entropy(logits, np.asarray(target))
        fd = _fd_array(lambda: cross_entropy(logits, np.asarray(target))[0], logits, step)
        worst = max(worst, rel_err(g, fd, floor=FD_FLOOR).max())
    out.append(CheckResult("id_loss_grad", float(worst), 1e-4))
    worst = 0.0
    for _ in range(5):
        h, w = (int(v) for v in rng.integers(1, 5, size=2))
        logits = rng.normal(scale=3.0, size=(h, w, SEG_CLASSES))
        labels = rng.integers(SEG_CLASSES, size=(h, w))
        _, g = cross_entropy(logits, labels)
        fd = _fd_array(lambda: cross_entropy(logits, labels)[0], logits, step)
        worst = max(worst, rel_err(g, fd, floor=FD_FLOOR).max())
    out.append(CheckResult("seg_loss_grad", float(worst), 1e-4))
    return out


def tiny_batch(rng, n: int = 4, d_vis: int = 6, d_txt: int = 5, grid=(3, 2)):
    """``n`` visual and ``n`` textual records over two identities, with seg grids."""
    visual, textual = [], []
    for i in range(n):
        pid = i % 2
        attrs_v = {c: rng.standard_normal(d_vis) for c in CATEGORIES if rng.random() < 0.8}
        attrs_t = {c: rng.standard_normal(d_txt) for c in CATEGORIES if rng.random() < 0.8}
        visual.append(RawRecord(
            pid, Modality.VISUAL, rng.standard_normal(d_vis), attrs_v,
            seg_cells=rng.standard_normal(grid + (d_vis,)),
            seg_labels=rng.integers(SEG_CLASSES, size=grid)))
        textual.append(RawRecord(pid, Modality.TEXTUAL, rng.standard_normal(d_txt), attrs_t))
    return visual, textual


def check_model_grad(seed: int = 0, hidden=None, normalize: bool = False, dim: int = 8,
                     step: float = 1e-6, tol: float = 1e-3) -> CheckResult:
    """Total joint loss gradient vs finite differences for every encoder parameter."""
    from .trainer import Model, TrainConfig, batch_loss

    rng = np.random.default_rng(seed)
    visual, textual = tiny_batch(rng)
    cfg = TrainConfig(dim=dim, hidden=hidden, normalize_embeddings=normalize, k=2, seed=seed,
                      id_on_text=True)
    dims = {"v_glo": 6, "v_attr": 6, "t_glo": 5, "t_attr": 5}
    model = Model.init(dims, cfg, [0, 1], rng)
    grads = batch_loss(model, visual, textual).grads
    worst = 0.0
    for name, value in model.params.items():
        fd = _fd_array(lambda: batch_loss(model, visual, textual, with_grad=False).total, value, step)
        err = np.linalg.norm(grads[name] - fd) / max(np.linalg.norm(grads[name]), np.linalg.norm(fd), 1e-12)
        worst = max(worst, err, rel_err(grads[name], fd, floor=1e-6).max())
    label = "model_grad" + (f"[hidden={hidden}]" if hidden else "") + ("[normalized]" if normalize else "")
    return CheckResult(label, float(worst), tol)


def run_all(seed: int = 0) -> list[CheckResult]:
    results = [check_align_grad(seed=seed)]
    results += check_cross_entropy_grads(seed=seed)
    results.append(check_model_grad(seed=seed))
    results.append(check_model_grad(seed=seed, hidden=7))
    results.append(check_model_grad(seed=seed, normalize=True))
    return results
