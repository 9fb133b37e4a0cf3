"""Pure preference-loss math: DPO loss, Bradley-Terry loss, implied reward.

These are verification utilities and telemetry math, not a trainer. The
partition function Z(x) is deliberately absent: it cancels in everything
computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def softplus(t: float) -> float:
    """log(1 + e^t) with asymptotic branches beyond |t| = 30 to avoid
    overflow while keeping the function monotone."""
    if t > 30.0:
        return t + math.exp(-t)
    if t < -30.0:
        return math.exp(t)
    return math.log1p(math.exp(t))


@dataclass(frozen=True)
class PolicyLogProbs:
    """Sequence log-probabilities of one preference pair under the policy
    being trained and the frozen reference policy."""

    logp_chosen_policy: float
    logp_rejected_policy: float
    logp_chosen_ref: float
    logp_rejected_ref: float
    beta: float

    def __post_init__(self):
        logps = (
            self.logp_chosen_policy,
            self.logp_rejected_policy,
            self.logp_chosen_ref,
            self.logp_rejected_ref,
        )
        for v in logps:
            if not math.isfinite(v):
                raise ValueError("log-probabilities must be finite")
            if v > 0:
                raise ValueError(f"log-probability {v} is positive")
        if not math.isfinite(self.beta) or self.beta <= 0:
            raise ValueError(f"beta must be finite and > 0, got {self.beta}")


def dpo_loss(p: PolicyLogProbs) -> float:
    """-log sigmoid(beta * [(logp_cw - logp_cw_ref) - (logp_rl - logp_rl_ref)]),
    evaluated through the softplus identity -log sigmoid(z) = log(1 + e^-z)."""
    margin = (p.logp_chosen_policy - p.logp_chosen_ref) - (
        p.logp_rejected_policy - p.logp_rejected_ref
    )
    return softplus(-p.beta * margin)


def bt_loss(r_chosen: float, r_rejected: float) -> float:
    """Bradley-Terry negative log-likelihood of preferring chosen: equals
    ln 2 at equal rewards and decays to 0 as the reward gap grows."""
    if not (math.isfinite(r_chosen) and math.isfinite(r_rejected)):
        raise ValueError("rewards must be finite")
    return softplus(-(r_chosen - r_rejected))


def implied_reward_delta(logp_policy: float, logp_ref: float, beta: float) -> float:
    """beta * (logp_policy - logp_ref): the reward implied by the policy's
    closed form, up to the additive beta * ln Z(x) shared by both sides."""
    if not (math.isfinite(logp_policy) and math.isfinite(logp_ref)):
        raise ValueError("log-probabilities must be finite")
    if not math.isfinite(beta) or beta <= 0:
        raise ValueError(f"beta must be finite and > 0, got {beta}")
    return beta * (logp_policy - logp_ref)
