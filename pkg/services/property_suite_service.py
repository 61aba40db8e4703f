"""
Exact-identity and sampler-correctness checks.

The identity group is deterministic given its seed and runs in well under a
second: the Fubini identity between the two Rao-Blackwell estimators, the
harmonic-mean reduction under the slice weight, the equivalence of product
estimator and split sampling densities on a finite space, the affine-in-log-Z
tail under nested-sampling matched weights, deterministic nested-sampling
shrinkage and the identity importance blanket. The sampler group compares
the constrained kernels against exact oracles with scipy.stats.
"""

import logging
import math
from typing import Callable, List, Tuple

import numpy as np
from scipy import integrate, stats

from models import PropertyCheck, WeightMode
from .baselines.crude_monte_carlo import cmc_estimate
from .baselines.cross_entropy import ce_final_estimate, log_likelihood_ratio
from .baselines.nested_sampling import run_nested_sampling
from .split_sampler import SampleBatch, estimate_z, estimate_z_of_m, run_fixed_weight_chain
from .targets.gaussian_mixture import GaussianMixtureModel
from .targets.shortest_path import ShortestPathModel, gibbs_conditional_sweep, path_lengths
from .targets.toy_models import UniformToyModel
from .weight_function import (
    CumulativeWeight,
    inclusion_product_weights,
    standard_product_weights,
    weight_from_knots,
)

logger = logging.getLogger(__name__)


def _check(name: str, group: str, value: float, tolerance: float, detail: str = "",
           passed=None) -> PropertyCheck:
    ok = bool(value <= tolerance) if passed is None else bool(passed)
    level = logging.INFO if ok else logging.WARNING
    logger.log(level, f"{name}: value={value:.3g} tolerance={tolerance:.3g} {'ok' if ok else 'FAILED'}")
    return PropertyCheck(name=name, group=group, passed=ok, value=float(value), tolerance=tolerance, detail=detail)


# Finite-space densities


def product_estimator_density(prior: np.ndarray, likelihoods: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Long-run sampling density (1/T) sum_t pi(x) I(L > m_{t-1}) / Z_{t-1} of the standard product estimator."""
    above = likelihoods[None, :] > thresholds[:, None]
    tails = (above * prior).sum(axis=1)
    return (above * prior / tails[:, None]).mean(axis=0)


def inclusion_density(prior: np.ndarray, likelihoods: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Normalised pi(x) + sum_t (Z_{t-1} - Z_t) / (Z_{t-1} Z_t) pi(x) I(L > m_t), reusing earlier-stage samples."""
    above = likelihoods[None, :] > thresholds[:, None]
    tails = (above * prior).sum(axis=1)
    coef = (tails[:-1] - tails[1:]) / (tails[:-1] * tails[1:])
    density = prior * (1.0 + (coef[:, None] * above[1:]).sum(axis=0))
    return density / density.sum()


def split_sampling_density(prior: np.ndarray, likelihoods: np.ndarray, weight: CumulativeWeight) -> np.ndarray:
    """x-marginal pi(x) Omega(L(x)) / Z_W of the split chain."""
    log_mass = np.array([weight.log_evaluate_below(v) for v in likelihoods.tolist()])
    density = prior * np.exp(log_mass - log_mass.max())
    return density / density.sum()


def split_tail_probability(m: float, tail: Callable[[float], float], omega: Callable[[float], float],
                           atom: float, cap: float) -> float:
    """
    Unnormalised pi_SS(L > m) = Z(m) Omega(m) + integral_m^cap omega(s) Z(s) ds.

    Omega(m) is atom + integral_0^m omega; the weight vanishes above cap.
    """
    lower = min(m, cap)
    omega_m = atom + integrate.quad(omega, 0.0, lower, epsabs=1e-13, epsrel=1e-13)[0]
    rest = integrate.quad(lambda s: omega(s) * tail(s), lower, cap, epsabs=1e-13, epsrel=1e-13)[0]
    return tail(m) * omega_m + rest


class PropertySuiteService:
    """Runs the identity checks and, optionally, the sampler checks."""

    def fubini_identity(self, rng: np.random.Generator, batches: int = 100, size: int = 50) -> PropertyCheck:
        """estimate_z equals the integral of estimate_z_of_m over m on random batches."""
        worst = 0.0
        for _ in range(batches):
            likelihoods = rng.exponential(size=size)
            batch = SampleBatch(likelihoods=likelihoods, thresholds=np.zeros(size),
                                levels=np.zeros(size, dtype=np.int64), log_omega=rng.normal(size=size))
            knots = np.concatenate(([0.0], np.sort(likelihoods)))
            mids = 0.5 * (knots[:-1] + knots[1:])
            integral = sum(estimate_z_of_m(batch, float(m)) * w for m, w in zip(mids, np.diff(knots)))
            direct = estimate_z(batch)
            worst = max(worst, abs(integral - direct) / direct)
        return _check("fubini_identity", "identity", worst, 1e-10, f"{batches} batches of {size}")

    def harmonic_mean_reduction(self, rng: np.random.Generator, size: int = 1000) -> PropertyCheck:
        """With omega = 1 (Omega(L) = L) the split estimate is the harmonic mean."""
        likelihoods = rng.exponential(size=size) + 1e-3
        weight = CumulativeWeight.slice_weight()
        log_omega = np.array([weight.log_evaluate_below(v) for v in likelihoods.tolist()])
        batch = SampleBatch(likelihoods=likelihoods, thresholds=np.zeros(size),
                            levels=np.zeros(size, dtype=np.int64), log_omega=log_omega, weight=weight)
        harmonic = size / np.sum(1.0 / likelihoods)
        return _check("harmonic_mean_reduction", "identity", abs(estimate_z(batch) / harmonic - 1.0), 1e-12)

    def product_estimator_equivalence(self, rng: np.random.Generator, states: int = 8,
                                      levels: int = 4) -> List[PropertyCheck]:
        """
        On a finite space the product estimators and split sampling share their sampling density.

        The standard estimator matches discrete jumps omega_t = 1 / Z_t; the one
        with inclusion matches cumulative weights Omega_t = 1 / Z_t.
        """
        prior = rng.dirichlet(np.ones(states))
        likelihoods = np.sort(rng.uniform(0.1, 1.0, size=states))
        thresholds = np.concatenate(([0.0], likelihoods[1:levels]))
        above = likelihoods[None, :] > thresholds[:, None]
        tails = (above * prior).sum(axis=1)

        standard = weight_from_knots(thresholds, np.log(np.cumsum(1.0 / tails)), WeightMode.DISCRETE)
        inclusion = weight_from_knots(thresholds, -np.log(tails), WeightMode.DISCRETE)
        gap_standard = np.max(np.abs(split_sampling_density(prior, likelihoods, standard)
                                     - product_estimator_density(prior, likelihoods, thresholds)))
        gap_inclusion = np.max(np.abs(split_sampling_density(prior, likelihoods, inclusion)
                                      - inclusion_density(prior, likelihoods, thresholds)))

        rho = math.exp(-1.0)
        t = np.arange(levels + 1, dtype=float)
        closed_standard = rho * (rho ** -t - 1.0) / (1.0 - rho)
        gap_closed = max(
            np.max(np.abs(standard_product_weights(rho, levels) - closed_standard) / np.maximum(closed_standard, 1.0)),
            np.max(np.abs(inclusion_product_weights(rho, levels) * rho ** t - 1.0)),
        )
        return [
            _check("product_estimator_density", "identity", gap_standard, 1e-12, f"{states} states"),
            _check("inclusion_density", "identity", gap_inclusion, 1e-12, f"{states} states"),
            _check("product_weight_closed_forms", "identity", gap_closed, 1e-12, f"rho=e^-1, T={levels}"),
        ]

    def nested_sampling_matching(self, top: float = 10.0, points: int = 9) -> PropertyCheck:
        """
        Under Omega(m) = 1 / Z(m) the split chain's tail is affine in log Z(m).

        With Z(m) = e^-m and the weight cut at m_T the tail is
        (1 + m_T - m) / (1 + m_T), so (Z_SS(m) - 1) / log Z(m) = 1 / (1 + m_T).
        """
        normaliser = split_tail_probability(0.0, lambda s: math.exp(-s), math.exp, 1.0, top)
        slopes = []
        for m in np.linspace(top / (points + 1), top * points / (points + 1), points):
            z_ss = split_tail_probability(float(m), lambda s: math.exp(-s), math.exp, 1.0, top) / normaliser
            slopes.append((z_ss - 1.0) / -m)
        expected = 1.0 / (1.0 + top)
        return _check("nested_sampling_matching", "identity",
                      float(np.max(np.abs(np.array(slopes) - expected))), 1e-8, f"m_T={top:g}")

    def nested_sampling_shrinkage(self, rng: np.random.Generator, particles: int = 7) -> PropertyCheck:
        """After r replacements the remaining mass is (1 - 1/N)^r to the bit."""
        state = run_nested_sampling(UniformToyModel(), rng, n_particles=particles, mcmc_steps=1, epsilon=1e-3)
        expected = (1.0 - 1.0 / particles) ** state.replacements
        return _check("nested_sampling_shrinkage", "identity", abs(state.remaining_mass - expected), 0.0,
                      f"{state.replacements} replacements", passed=state.remaining_mass == expected)

    def identity_blanket(self, seed: int, gamma: float = 1.0, n: int = 20_000) -> List[PropertyCheck]:
        """w(x; u, u) = 1, so importance sampling with v = u reproduces crude Monte Carlo."""
        model = ShortestPathModel()
        u = model.scales
        xs = np.random.default_rng(seed).exponential(size=(1000, 5))
        log_w = log_likelihood_ratio(xs, u, u)
        ce, _, _ = ce_final_estimate(u, u, gamma, n, np.random.default_rng(seed))
        cmc = cmc_estimate(model, gamma, n, np.random.default_rng(seed)).estimate
        return [
            _check("ce_identity_weight", "identity", float(np.max(np.abs(log_w))), 0.0,
                   passed=bool(np.all(np.exp(log_w) == 1.0))),
            _check("ce_identity_equals_cmc", "identity", abs(ce - cmc), 0.0, f"gamma={gamma:g}, N={n}",
                   passed=ce == cmc),
        ]

    # Sampler checks

    def gibbs_conditional(self, rng: np.random.Generator, m: float = 0.5, size: int = 200_000,
                          sweeps: int = 20) -> PropertyCheck:
        """Gibbs draws of S given S > m against a rejection-sampling oracle (two-sample KS)."""
        model = ShortestPathModel()
        oracle: List[np.ndarray] = []
        count = 0
        while count < size:
            s = path_lengths(model.sample_prior_batch(size, rng))
            s = s[s > m]
            oracle.append(s)
            count += s.size
        oracle_s = np.concatenate(oracle)[:size]

        xs = np.full((size, 5), m)
        for _ in range(sweeps):
            xs = gibbs_conditional_sweep(xs, m, rng, model.scales)
        statistic = stats.ks_2samp(path_lengths(xs), oracle_s).statistic
        return _check("gibbs_conditional_ks", "sampler", statistic, 0.01, f"m={m:g}, {size} draws")

    def metropolis_uniform_marginal(self, rng: np.random.Generator, chains: int = 2000,
                                    steps: int = 100) -> PropertyCheck:
        """At m = 0 the mixture kernel keeps the uniform box prior; pooled coordinates are tested by KS."""
        model = GaussianMixtureModel()
        values = []
        for _ in range(chains):
            sample = model.constrained_steps(model.sample_prior(rng), 0.0, rng, steps)
            values.append(sample.x)
        pooled = np.concatenate(values)
        half = model.half_width
        statistic = stats.kstest(pooled, stats.uniform(loc=-half, scale=2 * half).cdf).statistic
        return _check("metropolis_uniform_ks", "sampler", statistic, 0.01, f"{chains} chains x {steps} steps")

    def uniform_occupancy(self, rng: np.random.Generator, levels: int = 5, n: int = 50_000,
                          thin: int = 10) -> PropertyCheck:
        """Discrete weights omega_t = 1 / Z_t on the uniform toy give uniform level occupancy (chi-square)."""
        rho = math.exp(-1.0)
        tails = rho ** np.arange(levels + 1, dtype=float)
        knots = 1.0 - tails
        weight = weight_from_knots(knots, np.log(np.cumsum(1.0 / tails)), WeightMode.DISCRETE)
        batch = run_fixed_weight_chain(UniformToyModel(), weight, n, rng)
        counts = np.bincount(batch.levels[::thin], minlength=levels + 1)
        p_value = stats.chisquare(counts).pvalue
        return _check("uniform_occupancy_chi2", "sampler", p_value, 0.001, f"{levels + 1} levels",
                      passed=p_value > 0.001)

    def run(self, seed: int = 0, sampler_checks: bool = False) -> List[PropertyCheck]:
        """Run the identity group and, when asked, the sampler group."""
        rng = np.random.default_rng(seed)
        checks = [
            self.fubini_identity(rng),
            self.harmonic_mean_reduction(rng),
            *self.product_estimator_equivalence(rng),
            self.nested_sampling_matching(),
            self.nested_sampling_shrinkage(rng),
            *self.identity_blanket(seed),
        ]
        if sampler_checks:
            checks.extend([
                self.gibbs_conditional(rng),
                self.metropolis_uniform_marginal(rng),
                self.uniform_occupancy(rng),
            ])
        failed = sum(not c.passed for c in checks)
        logger.info(f"Property suite: {len(checks) - failed}/{len(checks)} checks passed")
        return checks


# Global property suite service instance
property_suite_service = PropertySuiteService()


def summarise(checks: List[PropertyCheck]) -> Tuple[int, int]:
    """(passed, failed) counts."""
    passed = sum(c.passed for c in checks)
    return passed, len(checks) - passed
