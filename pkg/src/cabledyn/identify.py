"""Genetic-algorithm fit of cable stiffness and drag coefficients.

Steady endpoint forces measured at several relative vehicle offsets pin
down parameters that are hard to measure directly: the equivalent axial
modulus of a composite cable, the normal and tangential drag
coefficients, and optionally the added-mass coefficient.  Each candidate
parameter set is scored by running the forward model to steady state for
every sample and comparing predicted endpoint forces against the
measurements.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .boundary import BoundaryPrescription, ConstantVelocityMotion
from .cable import CableProperties, CurrentField
from .engine import IntegratorConfig, Scenario, run_scenario, steady_state_time
from .errors import ConfigInvalid, DivergedState, EmptyDataset, NotReached

DATASET_COLUMNS = ("X_d", "Y_d", "speed",
                   "Fx1", "Fy1", "Fz1", "Fx2", "Fy2", "Fz2")

# Score assigned to a candidate whose forward run diverges or never
# settles.  Finite so the GA can rank failed candidates below any
# successful one without poisoning the arithmetic.
PENALTY = 1.0e6

DEFAULT_E_BOUNDS = (1.0e5, 1.0e10)
DEFAULT_CN_BOUNDS = (0.1, 3.0)
DEFAULT_CT_BOUNDS = (0.001, 0.5)
DEFAULT_KA_BOUNDS = (0.5, 2.0)


@dataclass(frozen=True)
class TensionSample:
    """One steady measurement: vehicle offsets, speed, endpoint forces.

    lateral_offset is the cross-track separation between the vehicles
    (X_d column), along_offset the along-track stagger (Y_d column).
    Forces are Earth-frame newtons on the cable ends at vehicles A and B.
    """

    lateral_offset: float
    along_offset: float
    speed: float
    force_a: np.ndarray
    force_b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "force_a",
                           np.asarray(self.force_a, dtype=float).reshape(3))
        object.__setattr__(self, "force_b",
                           np.asarray(self.force_b, dtype=float).reshape(3))
        if self.lateral_offset < 0.0 or self.along_offset < 0.0:
            raise ConfigInvalid("offsets must be non-negative")
        if self.speed <= 0.0:
            raise ConfigInvalid("sample speed must be positive")

    @property
    def separation(self):
        return math.hypot(self.lateral_offset, self.along_offset)

    def measured(self):
        """Both endpoint force vectors as one flat 6-array."""
        return np.concatenate([self.force_a, self.force_b])


@dataclass(frozen=True)
class ParamVector:
    """Cable parameters exposed to the search."""

    youngs_modulus: float
    normal_drag_coeff: float
    tangential_drag_coeff: float
    added_mass_coeff: float | None = None

    def as_genes(self, include_ka=False):
        g = [math.log10(self.youngs_modulus),
             self.normal_drag_coeff, self.tangential_drag_coeff]
        if include_ka:
            ka = 1.0 if self.added_mass_coeff is None else self.added_mass_coeff
            g.append(ka)
        return np.array(g)

    @classmethod
    def from_genes(cls, genes, include_ka=False):
        ka = float(genes[3]) if include_ka else None
        return cls(10.0 ** float(genes[0]), float(genes[1]),
                   float(genes[2]), ka)

    def to_dict(self):
        d = {"youngs_modulus": self.youngs_modulus,
             "normal_drag_coeff": self.normal_drag_coeff,
             "tangential_drag_coeff": self.tangential_drag_coeff}
        if self.added_mass_coeff is not None:
            d["added_mass_coeff"] = self.added_mass_coeff
        return d


@dataclass(frozen=True)
class GaConfig:
    """Search hyperparameters.  The modulus gene lives in log10 space."""

    seed: int
    population: int = 48
    generations: int = 60
    tournament: int = 3
    crossover_rate: float = 0.9
    blend_alpha: float = 0.5
    mutation_rate: float = 0.15
    mutation_scale: float = 0.05
    mutation_decay: float = 1.0
    elitism: int = 2
    include_ka: bool = False
    e_bounds: tuple = DEFAULT_E_BOUNDS
    cn_bounds: tuple = DEFAULT_CN_BOUNDS
    ct_bounds: tuple = DEFAULT_CT_BOUNDS
    ka_bounds: tuple = DEFAULT_KA_BOUNDS

    def __post_init__(self):
        if self.population < 8:
            raise ConfigInvalid("population must be at least 8")
        if self.generations < 0:
            raise ConfigInvalid("generations must be non-negative")
        if not 0 < self.tournament <= self.population:
            raise ConfigInvalid("tournament size out of range")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigInvalid(f"{name} must lie in [0, 1]")
        if self.mutation_scale < 0.0 or not 0.0 < self.mutation_decay <= 1.0:
            raise ConfigInvalid("bad mutation scale/decay")
        if not 0 <= self.elitism < self.population:
            raise ConfigInvalid("elitism must be smaller than population")
        for name in ("e_bounds", "cn_bounds", "ct_bounds", "ka_bounds"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigInvalid(f"{name} must be finite with lower < upper")
        if self.e_bounds[0] <= 0.0:
            raise ConfigInvalid("modulus bounds must be positive")

    @property
    def n_genes(self):
        return 4 if self.include_ka else 3

    def gene_bounds(self):
        """(lower, upper) arrays in search space."""
        lo = [math.log10(self.e_bounds[0]), self.cn_bounds[0], self.ct_bounds[0]]
        hi = [math.log10(self.e_bounds[1]), self.cn_bounds[1], self.ct_bounds[1]]
        if self.include_ka:
            lo.append(self.ka_bounds[0])
            hi.append(self.ka_bounds[1])
        return np.array(lo), np.array(hi)

    def to_dict(self):
        return {"seed": self.seed, "population": self.population,
                "generations": self.generations, "tournament": self.tournament,
                "crossover_rate": self.crossover_rate,
                "blend_alpha": self.blend_alpha,
                "mutation_rate": self.mutation_rate,
                "mutation_scale": self.mutation_scale,
                "mutation_decay": self.mutation_decay,
                "elitism": self.elitism, "include_ka": self.include_ka,
                "e_bounds": list(self.e_bounds),
                "cn_bounds": list(self.cn_bounds),
                "ct_bounds": list(self.ct_bounds),
                "ka_bounds": list(self.ka_bounds)}


@dataclass(frozen=True)
class ForwardModel:
    """Recipe for predicting steady endpoint forces of one sample.

    Vehicle A starts at the origin, vehicle B at
    (along_offset, lateral_offset, 0); both tow along +x at the sample
    speed through still water.  The run stops once the endpoint force
    channels hold steady, and the prediction is the mean force over the
    trailing quiet window.
    """

    props: CableProperties
    dt: float = 1e-3
    t_end: float = 40.0
    steady_window: float = 3.0
    steady_tol: float = 0.08
    record_stride: int = 10
    chunk_steps: int = 2000
    use_z: bool = False
    backend: str = "auto"

    @property
    def channel_indices(self):
        """Force channels entering the objective (per-vehicle x, y[, z])."""
        if self.use_z:
            return np.arange(6)
        return np.array([0, 1, 3, 4])

    def apply(self, params):
        kwargs = {"youngs_modulus": params.youngs_modulus,
                  "normal_drag_coeff": params.normal_drag_coeff,
                  "tangential_drag_coeff": params.tangential_drag_coeff}
        if params.added_mass_coeff is not None:
            kwargs["added_mass_coeff"] = params.added_mass_coeff
        return replace(self.props, **kwargs)

    def scenario(self, sample, params):
        # separations past the natural length are legitimate (stretched
        # cable); past 10% initial strain the small-strain law is no
        # longer credible and the sample is treated as a user error
        if sample.separation > 1.1 * self.props.length:
            raise ConfigInvalid(
                f"sample separation {sample.separation:.3f} m exceeds "
                f"1.1x cable length {self.props.length:.3f} m")
        vel = (sample.speed, 0.0, 0.0)
        motion_a = ConstantVelocityMotion((0.0, 0.0, 0.0), vel)
        motion_b = ConstantVelocityMotion(
            (sample.along_offset, sample.lateral_offset, 0.0), vel)
        integ = IntegratorConfig(dt=self.dt, t_end=self.t_end,
                                 record_stride=self.record_stride,
                                 backend=self.backend,
                                 chunk_steps=self.chunk_steps,
                                 stop_on_steady=True,
                                 steady_window=self.steady_window,
                                 steady_tol=self.steady_tol)
        return Scenario(props=self.apply(params),
                        boundary=BoundaryPrescription(motion_a, motion_b),
                        current=CurrentField.zero(),
                        integrator=integ)

    def predict(self, sample, params):
        """Steady endpoint forces, shape (2, 3).

        Raises DivergedState if the run blows up and NotReached if the
        force channels never settle within the time cap.
        """
        record = run_scenario(self.scenario(sample, params))
        t_quiet = steady_state_time(record, window=self.steady_window,
                                    tol=self.steady_tol)
        sel = (record.times >= t_quiet) & \
              (record.times <= t_quiet + self.steady_window)
        mean = record.force_channels()[sel].mean(axis=0)
        return mean.reshape(2, 3)


def residual_matrix(params, samples, model):
    """Measured minus predicted forces, one row of 6 channels per sample.

    Diverged or unsettled forward runs yield a row of NaNs; callers
    decide whether that means a penalty (objective) or a hole (reports).
    """
    if not samples:
        raise EmptyDataset("no tension samples")
    rows = np.empty((len(samples), 6))
    for k, sample in enumerate(samples):
        try:
            pred = model.predict(sample, params)
        except (DivergedState, NotReached):
            rows[k] = np.nan
            continue
        rows[k] = sample.measured() - pred.reshape(-1)
    return rows


def objective(params, samples, model):
    """Mean squared force mismatch over the dataset.

    Each sample contributes the squared norm of its residual restricted
    to the configured channels; failed forward runs contribute PENALTY.
    """
    rows = residual_matrix(params, samples, model)
    idx = model.channel_indices
    total = 0.0
    for row in rows:
        if np.isnan(row).any():
            total += PENALTY
        else:
            r = row[idx]
            total += float(r @ r)
    return total / len(samples)


def rmse_mse_report(samples, params, model):
    """Per-channel RMSE and MSE of the fitted model on a dataset."""
    rows = residual_matrix(params, samples, model)
    rmse = np.sqrt(np.mean(rows ** 2, axis=0))
    report = {"rmse": {}, "mse": {}}
    for j, name in enumerate(DATASET_COLUMNS[3:]):
        report["rmse"][name] = float(rmse[j])
        report["mse"][name] = float(rmse[j] ** 2)
    return report


@dataclass(frozen=True)
class IdentifyResult:
    params: ParamVector
    fitness: float
    history: np.ndarray
    n_evaluations: int
    seed: int
    final_population: np.ndarray

    def to_dict(self):
        return {"params": self.params.to_dict(),
                "fitness": self.fitness,
                "history": [float(v) for v in self.history],
                "n_evaluations": self.n_evaluations,
                "seed": self.seed}


def _resolve_threads(threads):
    if threads is None:
        raw = os.environ.get("CABLEDYN_THREADS", "")
        threads = int(raw) if raw.strip() else 1
    return max(1, int(threads))


def identify(samples, ga, model, threads=None, initial_population=None):
    """Minimize the force-mismatch objective with an elitist GA.

    Reproducible for a fixed (dataset, config, seed) triple regardless of
    thread count: the candidate list order fixes the reduction order, and
    scores are memoized by exact gene values.  Returns the best
    parameters with the per-generation best-fitness history (length
    generations + 1, counting the initial population).
    """
    if not samples:
        raise EmptyDataset("no tension samples")
    rng = np.random.default_rng(ga.seed)
    lo, hi = ga.gene_bounds()
    n_genes = ga.n_genes
    n_workers = _resolve_threads(threads)

    if initial_population is None:
        pop = rng.uniform(lo, hi, size=(ga.population, n_genes))
    else:
        pop = np.array(initial_population, dtype=float)
        if pop.shape != (ga.population, n_genes):
            raise ConfigInvalid("initial population shape mismatch")
        pop = np.clip(pop, lo, hi)

    cache = {}

    def score_one(key):
        return objective(ParamVector.from_genes(np.array(key), ga.include_ka),
                         samples, model)

    def score_all(genes):
        fresh = list(dict.fromkeys(
            tuple(g) for g in genes if tuple(g) not in cache))
        if n_workers > 1 and len(fresh) > 1:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                values = list(pool.map(score_one, fresh))
        else:
            values = [score_one(k) for k in fresh]
        cache.update(zip(fresh, values))
        return np.array([cache[tuple(g)] for g in genes])

    def tournament(fit):
        picks = rng.integers(0, ga.population, size=ga.tournament)
        return pop[picks[np.argmin(fit[picks])]].copy()

    fitness = score_all(pop)
    history = [float(fitness.min())]

    for gen in range(ga.generations):
        order = np.argsort(fitness, kind="stable")
        children = [pop[i].copy() for i in order[:ga.elitism]]
        sigma = ga.mutation_scale * (hi - lo) * ga.mutation_decay ** gen
        while len(children) < ga.population:
            parent = tournament(fitness)
            if rng.random() < ga.crossover_rate:
                other = tournament(fitness)
                low = np.minimum(parent, other)
                high = np.maximum(parent, other)
                span = high - low
                child = rng.uniform(low - ga.blend_alpha * span,
                                    high + ga.blend_alpha * span)
            else:
                child = parent
            jump = rng.normal(0.0, 1.0, n_genes) * sigma
            mask = rng.random(n_genes) < ga.mutation_rate
            child = np.clip(np.where(mask, child + jump, child), lo, hi)
            children.append(child)
        pop = np.vstack(children)
        fitness = score_all(pop)
        history.append(float(fitness.min()))

    best = int(np.argmin(fitness))
    return IdentifyResult(
        params=ParamVector.from_genes(pop[best], ga.include_ka),
        fitness=float(fitness[best]),
        history=np.array(history),
        n_evaluations=len(cache),
        seed=ga.seed,
        final_population=pop)


def generate_dataset(model, params, offsets, speed, noise=0.0, rng=None):
    """Synthesize samples by running the forward model at known params.

    offsets is a sequence of (lateral, along) pairs.  With noise > 0 each
    force component is scaled by 1 + noise * N(0, 1) draws from rng.
    """
    samples = []
    for lateral, along in offsets:
        probe = TensionSample(lateral, along, speed,
                              np.zeros(3), np.zeros(3))
        pred = model.predict(probe, params)
        if noise > 0.0:
            if rng is None:
                raise ConfigInvalid("noise requires an rng")
            pred = pred * (1.0 + noise * rng.standard_normal(pred.shape))
        samples.append(TensionSample(lateral, along, speed,
                                     pred[0], pred[1]))
    return samples


def save_dataset(path, samples):
    """Write samples as CSV with the standard column header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DATASET_COLUMNS)
        for s in samples:
            writer.writerow([repr(float(v)) for v in
                             (s.lateral_offset, s.along_offset, s.speed,
                              *s.force_a, *s.force_b)])


def load_dataset(path):
    """Read a sample CSV; raises EmptyDataset when no data rows exist."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != DATASET_COLUMNS:
            raise ConfigInvalid(
                f"dataset header must be {','.join(DATASET_COLUMNS)}")
        samples = []
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != len(DATASET_COLUMNS):
                raise ConfigInvalid(f"dataset row has {len(row)} fields")
            vals = [float(cell) for cell in row]
            samples.append(TensionSample(vals[0], vals[1], vals[2],
                                         vals[3:6], vals[6:9]))
    if not samples:
        raise EmptyDataset(f"no samples in {path}")
    return samples
