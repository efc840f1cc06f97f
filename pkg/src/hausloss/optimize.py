"""Direct gradient descent on a logit field against a known truth mask.

Each case starts from a softened, perturbed copy of a synthetic truth mask
and descends a chosen loss with respect to the logits ``z`` of
``q = sigmoid(z)``.  This isolates what a loss rewards from everything a
network would add, which makes it a cheap way to compare how different loss
families trade off overlap against boundary distance.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit, logit

from .errors import ConfigError, EmptyBoundary, EmptyMask
from .grid import ProbMap, threshold
from .hd_dt import DtLossEvaluator
from .losses import (HD_FAMILIES, LambdaState, combine, default_params, dsc_loss, hd_loss,
                     update_lambda_from_terms)
from .metrics import dsc, exact_hd
from .synth import SynthConfig, generate_truth, perturb, soften

TRAJECTORY_FIELDS = ("case", "family", "iteration", "loss", "hd", "dsc", "lambda", "step")


@dataclass(frozen=True)
class OptimizeConfig:
    """Schedule for the optimization demo.

    Every ``epoch`` iterations the DT distance map of the current prediction
    and the Dice weight lambda are recomputed, and the step size is reset so
    that the Dice part of the loss alone would change no logit by more than
    ``step``.  Runs of different families therefore move their shared Dice
    term at the same rate and differ only by what the HD term adds.  Within
    an epoch the step size is fixed except that it is halved whenever the
    loss rises.
    """

    synth: SynthConfig = field(default_factory=SynthConfig)
    n_cases: int = 20
    iterations: int = 20
    epoch: int = 5
    step: float = 1.0
    families: tuple = ("dsc", "dt", "er", "cv")
    init_clip: float = 0.02
    divergence_factor: float = 1e6

    def __post_init__(self):
        synth = self.synth
        if isinstance(synth, dict):
            synth = SynthConfig.from_dict(synth)
        object.__setattr__(self, "synth", synth)
        object.__setattr__(self, "families", tuple(self.families))
        if self.n_cases < 1 or self.iterations < 0 or self.epoch < 1:
            raise ConfigError("n_cases >= 1, iterations >= 0 and epoch >= 1 are required")
        if not self.step > 0:
            raise ConfigError("step must be positive")
        if not 0 < self.init_clip < 0.5:
            raise ConfigError("init_clip must lie in (0, 0.5)")
        for fam in self.families:
            if fam != "dsc" and fam not in HD_FAMILIES:
                raise ConfigError(f"unknown loss family {fam!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizeConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown optimize config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CaseResult:
    case: int
    family: str
    rows: list
    final_q: np.ndarray
    diverged: bool = False

    @property
    def final(self) -> dict:
        return self.rows[-1]


def initial_map(truth, cfg: OptimizeConfig, index: int) -> ProbMap:
    """Softened rough segmentation used as the starting point."""
    return soften(perturb(truth, cfg.synth, index), cfg.synth.smoothing_radius)


def _safe_hd(truth, q: np.ndarray) -> float:
    try:
        return exact_hd(truth, threshold(ProbMap(q)).data)
    except (EmptyMask, EmptyBoundary):
        return math.inf


class _Case:
    """Optimization state of one corpus case under one loss family."""

    def __init__(self, cfg: OptimizeConfig, index: int, family: str):
        self.index = index
        self.family = family
        self.mask = generate_truth(cfg.synth, index)
        self.truth = ProbMap(self.mask.data.astype(np.float64), self.mask.spec)
        soft = initial_map(self.mask, cfg, index).data
        self.z = logit(np.clip(soft, cfg.init_clip, 1.0 - cfg.init_clip))
        self.q0 = expit(self.z)
        self.q = self.q0
        self.params = None if family == "dsc" else default_params(family)
        self.dt = None
        if family in ("dt", "dt-os"):
            self.dt = DtLossEvaluator(self.truth, self.params, refresh_every=10 ** 9)
        # one step size per case, shared by every family: the Dice gradient
        # at the starting map moves no logit by more than cfg.step
        sig = expit(self.z)
        g = dsc_loss(self.truth, ProbMap(self.q0, self.mask.spec)).grad * sig * (1.0 - sig)
        self.step_size = cfg.step / max(float(np.abs(g).max()), 1e-300)
        self.prev = None
        self.first = None
        self.rows = []
        self.done = False
        self.diverged = False

    @property
    def qmap(self) -> ProbMap:
        return ProbMap(self.q, self.mask.spec)

    def hd_term(self):
        if self.dt is not None:
            return self.dt(self.qmap)
        return hd_loss(self.family, self.truth, self.qmap, self.params)

    def terms(self):
        """Current (HD term, Dice term) values, used for the lambda update."""
        if self.family == "dsc":
            return 0.0, dsc_loss(self.truth, self.qmap).value
        return self.hd_term().value, dsc_loss(self.truth, self.qmap).value

    def new_epoch(self):
        self.prev = None
        if self.dt is not None:
            self.dt.refresh()

    def step(self, cfg: OptimizeConfig, it: int, lam: float) -> None:
        d = dsc_loss(self.truth, self.qmap)
        if self.family == "dsc":
            ev, direction = d, d.grad
        else:
            hd = self.hd_term()
            ev = combine(hd, d, lam)
            # descend f / lambda = HD / lambda + DSC: same minimizer, and the
            # Dice part moves exactly as in a Dice-only run.  lambda = 0 means
            # every HD term was zero at the epoch start; the limit is Dice alone.
            direction = d.grad + (hd.grad / lam if lam > 0 else 0.0)
        if self.first is None:
            self.first = abs(ev.value)
        self.rows.append({"case": self.index, "family": self.family, "iteration": it,
                          "loss": ev.value, "hd": _safe_hd(self.mask, self.q),
                          "dsc": dsc(self.truth, self.qmap),
                          "lambda": lam if self.family != "dsc" else 1.0,
                          "step": self.step_size})
        if not math.isfinite(ev.value) or abs(ev.value) > cfg.divergence_factor * max(self.first, 1e-12):
            self.diverged = self.done = True
            return
        if it == cfg.iterations:
            self.done = True
            return
        if self.prev is not None and ev.value > self.prev:
            self.step_size *= 0.5
        self.prev = ev.value
        sig = expit(self.z)
        self.z = self.z - self.step_size * direction * sig * (1.0 - sig)
        self.q = expit(self.z)

    def result(self) -> CaseResult:
        return CaseResult(self.index, self.family, self.rows, np.asarray(self.q), self.diverged)


def run_family(cfg: OptimizeConfig, family: str, cases=None):
    """Optimize several cases in lockstep under one loss family.

    Lambda is shared by the cases: at the start of every epoch it is set to
    the ratio of the mean HD term to the mean Dice term over all of them.
    """
    cases = range(cfg.n_cases) if cases is None else cases
    states = [_Case(cfg, i, family) for i in cases]
    lam = LambdaState()
    for it in range(cfg.iterations + 1):
        live = [s for s in states if not s.done]
        if not live:
            break
        if it % cfg.epoch == 0:
            for s in live:
                s.new_epoch()
            if family != "dsc":
                hd_terms, dsc_terms = zip(*(s.terms() for s in live))
                lam = update_lambda_from_terms(lam, hd_terms, dsc_terms, strict=False)
        for s in live:
            s.step(cfg, it, lam.lam)
    return [s.result() for s in states], lam


def run_case(cfg: OptimizeConfig, index: int, family: str) -> CaseResult:
    """Optimize a single case on its own (lambda computed from that case alone)."""
    results, _ = run_family(cfg, family, [index])
    return results[0]


def summarize(results) -> dict:
    """Per-family means plus paired comparisons against the Dice-only runs."""
    by_key = {(r.case, r.family): r for r in results}
    families = sorted({r.family for r in results}, key=lambda f: (f != "dsc", f))
    cases = sorted({r.case for r in results})
    table = {}
    for fam in families:
        finals = [by_key[c, fam].final for c in cases if (c, fam) in by_key]
        entry = {
            "mean_final_hd": float(np.mean([f["hd"] for f in finals])),
            "mean_final_dsc": float(np.mean([f["dsc"] for f in finals])),
            "mean_initial_hd": float(np.mean([by_key[c, fam].rows[0]["hd"] for c in cases
                                              if (c, fam) in by_key])),
            "diverged": sum(by_key[c, fam].diverged for c in cases if (c, fam) in by_key),
        }
        if fam != "dsc" and "dsc" in families:
            paired = [(by_key[c, fam].final, by_key[c, "dsc"].final) for c in cases
                      if (c, fam) in by_key and (c, "dsc") in by_key]
            entry["frac_hd_le_dsc_only"] = float(np.mean([a["hd"] <= b["hd"] for a, b in paired]))
            entry["mean_dsc_gap"] = float(np.mean([a["dsc"] - b["dsc"] for a, b in paired]))
        table[fam] = entry
    return table


def run(cfg: OptimizeConfig, executor=None):
    """Every family over the whole corpus; ``executor`` may be any object with ``map``.

    Returns the case results (family-major) and the lambda history per family.
    """
    mapper = executor.map if executor is not None else map
    out = list(mapper(_run_family_job, [(cfg, fam) for fam in cfg.families]))
    results = [r for res, _ in out for r in res]
    history = {fam: list(lam.history) for fam, (_, lam) in zip(cfg.families, out)}
    return results, history


def _run_family_job(job):
    cfg, family = job
    return run_family(cfg, family)
