"""Built-in adversaries, selectable by string key.

Four roles: erasure-channel distinguishers read A-side views, output
estimators read B-side views, bit guessers read B-side bit-channel views,
and audit adversaries read one party's raw channel observation. Estimates
against these fixed sets are lower bounds on the universally quantified
secrecy parameters; they are baselines, not proofs.
"""

from __future__ import annotations

from .awec import AwecViewA, AwecViewB
from .core import RandomStream, SignVector, extract, inner_product, masked_inner_product
from .wec import BucketParams, bucket


def _view_output(v: dict):
    if "z" in v:
        return int(v["z"])
    if "out" in v:
        return int(v["out"])
    return None


class AwecDistinguisher:
    name = "distinguisher"

    def evaluate(self, view: AwecViewA, stream: RandomStream) -> int:
        raise NotImplementedError


class ConstantDistinguisher(AwecDistinguisher):
    name = "constant"

    def evaluate(self, view, stream):
        return 1


class RevealedMajorityDistinguisher(AwecDistinguisher):
    """1 iff the signs B revealed sum to a nonnegative value."""

    name = "revealed-majority"

    def evaluate(self, view, stream):
        revealed = view.y_hat_unselected
        return 1 if int(revealed.signs().astype(int).sum()) >= 0 else 0


class VarianceProbeDistinguisher(AwecDistinguisher):
    """Erasure sniffer for additive-noise channels.

    The injected erasure noise inflates the spread of (A's output minus the
    channel estimate), whose null variance is about n/2. Thresholding the
    square at n detects the inflation once the noise budget is a visible
    fraction of n; out-of-regime diagnostic, emits 0 when the view carries
    no estimate.
    """

    name = "variance-probe"

    def evaluate(self, view, stream):
        z = _view_output(view.u)
        if z is None:
            return 0
        o_a = inner_product(extract(view.x, view.r, selected=False), view.y_hat_unselected)
        return 1 if (o_a - z) ** 2 > view.x.n else 0


class AwecEstimator:
    name = "estimator"
    needs_secret = False

    def evaluate(self, view: AwecViewB, stream: RandomStream) -> int:
        raise NotImplementedError


class BlindZeroEstimator(AwecEstimator):
    name = "blind-zero"

    def evaluate(self, view, stream):
        return 0


class PluginEstimator(AwecEstimator):
    """Channel estimate minus the revealed part of the inner product.

    Exact for the non-erasure branch; under erasure it misses A's output by
    the accuracy error plus the injected-noise drift.
    """

    name = "plugin"

    def evaluate(self, view, stream):
        out = _view_output(view.v)
        if out is None:
            return 0
        y_eff = view.y_tilde if view.y_tilde is not None else view.y
        y_r = extract(y_eff, view.r, selected=True)
        return out - inner_product(view.x_selected, y_r)


class ExactOutputEstimator(AwecEstimator):
    """Maximally leaky negative control: reads the generating sample's true
    input through the explicit side channel and reconstructs A's output."""

    name = "exact-oa"
    needs_secret = True

    def evaluate(self, view, stream):
        if view.secret_x is None:
            raise ValueError("exact-oa needs the side channel filled")
        y_eff = view.y_tilde if view.y_tilde is not None else view.y
        return masked_inner_product(view.secret_x, y_eff, view.r, selected=False)


class WecGuesser:
    name = "guesser"

    def evaluate(self, view, params: BucketParams, stream: RandomStream) -> int:
        raise NotImplementedError


class ConstantGuesser(WecGuesser):
    name = "constant"

    def evaluate(self, view, params, stream):
        return 0


class RandomBitGuesser(WecGuesser):
    name = "random-bit"

    def evaluate(self, view, params, stream):
        return stream.coin()


class PluginBucketGuesser(WecGuesser):
    """Plugin estimate pushed through the same bucket-and-parity pipeline."""

    name = "plugin-bucket"

    def __init__(self):
        self._plugin = PluginEstimator()

    def evaluate(self, view, params, stream):
        est = self._plugin.evaluate(view.awec_view, stream)
        try:
            return params.gl_bit(bucket(est, view.s, params.ell), view.r_gl)
        except ValueError:
            return 0


class AuditAdversary:
    name = "audit"

    def evaluate(self, obs: dict, stream: RandomStream) -> int:
        raise NotImplementedError


class ConstantAudit(AuditAdversary):
    name = "constant"

    def evaluate(self, obs, stream):
        return 1


class LeakyCoordinateAudit(AuditAdversary):
    """Reads the leaked coordinate if the view carries one."""

    name = "leaky-coordinate"

    def evaluate(self, obs, stream):
        leak = obs.get("view", {}).get("leak")
        return 1 if leak == 1 else 0


class OutputSignAudit(AuditAdversary):
    name = "output-sign"

    def evaluate(self, obs, stream):
        out = _view_output(obs.get("view", {}))
        return 1 if out is not None and out >= 0 else 0


class FirstTransmittedSignAudit(AuditAdversary):
    """Identity test on the first randomized-response coordinate."""

    name = "rr-first-coordinate"

    def evaluate(self, obs, stream):
        xt = obs.get("view", {}).get("x_tilde")
        if isinstance(xt, SignVector) and xt.n >= 1:
            return 1 if xt[0] == 1 else 0
        return 0


AWEC_DISTINGUISHERS = {
    c.name: c
    for c in (ConstantDistinguisher, RevealedMajorityDistinguisher, VarianceProbeDistinguisher)
}
AWEC_ESTIMATORS = {
    c.name: c for c in (BlindZeroEstimator, PluginEstimator, ExactOutputEstimator)
}
WEC_GUESSERS = {
    c.name: c for c in (ConstantGuesser, RandomBitGuesser, PluginBucketGuesser)
}
AUDIT_ADVERSARIES = {
    c.name: c
    for c in (ConstantAudit, LeakyCoordinateAudit, OutputSignAudit, FirstTransmittedSignAudit)
}

DEFAULT_AWEC_DISTINGUISHERS = ("constant", "revealed-majority")
DEFAULT_AWEC_ESTIMATORS = ("blind-zero",)
DEFAULT_WEC_GUESSERS = ("constant", "random-bit")
DEFAULT_AUDIT_ADVERSARIES = ("constant", "leaky-coordinate", "output-sign")


def resolve(registry: dict, names) -> list:
    out = []
    for name in names:
        if name not in registry:
            raise KeyError(f"unknown adversary key {name!r}; known: {sorted(registry)}")
        out.append(registry[name]())
    return out
