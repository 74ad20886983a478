"""Finite-N empirical-measure chain on the lattice S_N and its particle simulator"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse, stats
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve
from scipy.special import gammaln

from core.errors import (
    InvalidInput,
    InvalidParameters,
    NotIrreducible,
    SolverSingular,
    StepTooLarge,
    TooLarge,
    ZeroMass,
)
from core.rates import RateFamily
from core.simplex import PointLike, as_array, lattice_counts
from tools.parallel import parallel_map
from tools.rng import stream

logger = logging.getLogger("lyapunov_toolkit.core.finite_n")

MAX_STATES = 200_000
DENSE_STATIONARY_LIMIT = 1_000
UNIFORMIZATION_THRESHOLD = 50.0
MASS_TOLERANCE = 1e-10


def lattice_size(n: int, d: int) -> int:
    return int(round(np.exp(gammaln(n + d) - gammaln(d) - gammaln(n + 1))))


@dataclass(frozen=True, eq=False)
class LatticeChain:
    """Generator of the empirical-measure chain; states are count vectors k = N r"""

    n: int
    d: int
    states: np.ndarray
    index: Dict[Tuple[int, ...], int] = field(repr=False)
    generator: sparse.csr_matrix = field(repr=False)
    model_label: str = ""

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def points(self) -> np.ndarray:
        return self.states / self.n

    @property
    def max_rate(self) -> float:
        return float(np.abs(self.generator.diagonal()).max())

    def locate(self, r: PointLike) -> int:
        """Index of the lattice state nearest to r (largest-remainder rounding)"""
        counts = _round_to_lattice(as_array(r), self.n)
        return self.index[tuple(int(k) for k in counts)]


def _round_to_lattice(r: np.ndarray, n: int) -> np.ndarray:
    scaled = r * n
    counts = np.floor(scaled).astype(np.int64)
    remainder = n - counts.sum()
    order = np.argsort(-(scaled - counts), kind="stable")
    counts[order[:remainder]] += 1
    return counts


def build_lattice_chain(model: RateFamily, n: int, d: Optional[int] = None) -> LatticeChain:
    """Sparse generator with rate N r_x Gamma_xy(r) from r to r + (e_y - e_x)/N"""
    d = model.dimension if d is None else d
    if d != model.dimension:
        raise InvalidParameters(f"Model {model.label} has dimension {model.dimension}, not {d}")
    if n < 1:
        raise InvalidParameters(f"Particle count must be positive, got {n}")
    size = lattice_size(n, d)
    if size > MAX_STATES:
        raise TooLarge(f"Lattice with N={n}, d={d} has {size} states (limit {MAX_STATES})")
    states = lattice_counts(n, d)
    index = {tuple(int(k) for k in row): i for i, row in enumerate(states)}
    rows, cols, data = [], [], []
    for i, counts in enumerate(states):
        gamma = model.rates(counts / n)
        for x in np.nonzero(counts)[0]:
            for y in range(d):
                rate = counts[x] * gamma[x, y]
                if y == x or rate <= 0:
                    continue
                target = counts.copy()
                target[x] -= 1
                target[y] += 1
                rows.append(i)
                cols.append(index[tuple(int(k) for k in target)])
                data.append(rate)
    off = sparse.csr_matrix((data, (rows, cols)), shape=(size, size))
    generator = (off - sparse.diags(np.asarray(off.sum(axis=1)).ravel())).tocsr()
    logger.info(f"Lattice chain for {model.label}: N={n}, {size} states, {off.nnz} transitions")
    return LatticeChain(n=n, d=d, states=states, index=index, generator=generator, model_label=model.label)


@dataclass(frozen=True, eq=False)
class LatticeDistribution:
    chain: LatticeChain = field(repr=False)
    mass: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.shape != (len(self.chain),):
            raise InvalidInput(f"Mass vector has shape {mass.shape}, chain has {len(self.chain)} states")
        if mass.min() < -MASS_TOLERANCE or abs(mass.sum() - 1.0) > MASS_TOLERANCE:
            raise InvalidInput(f"Lattice law has min {mass.min():.3e} and total {mass.sum():.12f}")
        mass = np.clip(mass, 0.0, None)
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    def mean(self) -> np.ndarray:
        return self.mass @ self.chain.points

    def rows(self) -> np.ndarray:
        """Table r_1..r_d, mass"""
        return np.column_stack([self.chain.points, self.mass])


def point_mass(chain: LatticeChain, q: PointLike) -> LatticeDistribution:
    mass = np.zeros(len(chain))
    mass[chain.locate(q)] = 1.0
    return LatticeDistribution(chain, mass)


def iid_distribution(chain: LatticeChain, q: PointLike) -> LatticeDistribution:
    """Law of the empirical measure of N i.i.d. draws from q (multinomial)"""
    q = as_array(q)
    mass = stats.multinomial.pmf(chain.states, chain.n, q)
    return LatticeDistribution(chain, mass / mass.sum())


def lattice_distribution(chain: LatticeChain, masses: Dict[Tuple[int, ...], float]) -> LatticeDistribution:
    """Explicit law given as {count vector: mass}"""
    mass = np.zeros(len(chain))
    for counts, value in masses.items():
        key = tuple(int(k) for k in counts)
        if key not in chain.index:
            raise InvalidInput(f"{key} is not a state of the N={chain.n} lattice")
        mass[chain.index[key]] += value
    return LatticeDistribution(chain, mass)


def evolve_distribution(chain: LatticeChain, u0: LatticeDistribution, t: float,
                        dt: Optional[float] = None, method: str = "auto") -> LatticeDistribution:
    """Forward equation du/dt = u L^N by RK4 or uniformization"""
    if t < 0:
        raise InvalidParameters(f"t must be nonnegative, got {t}")
    if t == 0:
        return u0
    max_rate = chain.max_rate
    if max_rate == 0:
        return LatticeDistribution(chain, u0.mass, u0.time + t)
    if method == "auto":
        method = "uniformization" if max_rate * t > UNIFORMIZATION_THRESHOLD else "rk4"
        if method == "uniformization":
            logger.info(f"Switching to uniformization (max rate {max_rate:.3g} x t {t:g} > {UNIFORMIZATION_THRESHOLD:g})")
    if method == "uniformization":
        mass = _uniformize(chain, u0.mass, t)
    elif method == "rk4":
        mass = _rk4(chain, u0.mass, t, dt, max_rate)
    else:
        raise InvalidParameters(f"Unknown evolution method '{method}'")
    drift = abs(mass.sum() - 1.0)
    if drift > MASS_TOLERANCE * max(1.0, t):
        raise SolverSingular(f"Mass drifted by {drift:.3e}")
    return LatticeDistribution(chain, mass / mass.sum(), u0.time + t)


def _rk4(chain: LatticeChain, mass: np.ndarray, t: float, dt: Optional[float], max_rate: float) -> np.ndarray:
    limit = 0.1 / max_rate
    if dt is None:
        dt = limit
    if dt > limit * (1 + 1e-12):
        raise StepTooLarge(f"dt={dt:g} exceeds 0.1 / max rate = {limit:g}")
    transpose = chain.generator.T.tocsr()
    steps = int(np.ceil(t / dt - 1e-9))
    h = t / steps
    u = mass.copy()
    for _ in range(steps):
        k1 = transpose @ u
        k2 = transpose @ (u + 0.5 * h * k1)
        k3 = transpose @ (u + 0.5 * h * k2)
        k4 = transpose @ (u + h * k3)
        u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return np.clip(u, 0.0, None)


def _uniformize(chain: LatticeChain, mass: np.ndarray, t: float, tail: float = 1e-14) -> np.ndarray:
    """u(t) = sum_k Poisson(k; q t) u P^k with P = I + L / q"""
    q = 1.05 * chain.max_rate
    kernel_t = (sparse.identity(len(chain), format="csr") + chain.generator / q).T.tocsr()
    horizon = int(stats.poisson.ppf(1.0 - tail, q * t)) + 1
    weights = stats.poisson.pmf(np.arange(horizon + 1), q * t)
    u = mass.copy()
    result = weights[0] * u
    for k in range(1, horizon + 1):
        u = kernel_t @ u
        result += weights[k] * u
    return result


def _gth(generator: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman elimination; subtraction free, keeps tiny masses accurate"""
    a = np.array(generator, dtype=float)
    size = a.shape[0]
    for k in range(size - 1, 0, -1):
        total = a[k, :k].sum()
        if total <= 0:
            raise NotIrreducible("Lattice chain is not irreducible")
        a[:k, k] /= total
        a[:k, :k] += np.outer(a[:k, k], a[k, :k])
    pi = np.zeros(size)
    pi[0] = 1.0
    for k in range(1, size):
        pi[k] = pi[:k] @ a[:k, k]
    return pi / pi.sum()


def _sparse_stationary(generator: sparse.csr_matrix) -> np.ndarray:
    size = generator.shape[0]
    system = generator.T.tolil()
    system[size - 1, :] = np.ones(size)
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    pi = spsolve(system.tocsc(), rhs)
    if not np.all(np.isfinite(pi)):
        raise SolverSingular("Sparse stationary solve returned non-finite values")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def stationary_of_chain(chain: LatticeChain) -> LatticeDistribution:
    """Stationary law of the lattice chain"""
    count, _ = connected_components(chain.generator, directed=True, connection="strong")
    if count != 1:
        raise NotIrreducible(f"Lattice chain has {count} communicating classes")
    if len(chain) <= DENSE_STATIONARY_LIMIT:
        off = chain.generator.toarray()
        np.fill_diagonal(off, 0.0)
        mass = _gth(off)
    else:
        logger.info(f"Using sparse stationary solve for {len(chain)} states")
        mass = _sparse_stationary(chain.generator)
    residual = float(np.abs(chain.generator.T @ mass).sum())
    if residual > MASS_TOLERANCE * max(1.0, chain.max_rate):
        raise SolverSingular(f"Lattice stationary residual {residual:.3e}")
    return LatticeDistribution(chain, mass, np.inf)


@dataclass
class RateEstimate:
    points: np.ndarray
    values: np.ndarray
    missing: int

    def rows(self) -> np.ndarray:
        """Table r_1..r_d, J_hat"""
        return np.column_stack([self.points, self.values])


def rate_estimate(u: LatticeDistribution, strict: bool = False) -> RateEstimate:
    """q -> -(1/N) log mass(q), shifted so the minimum is 0; zero-mass states are left out"""
    positive = u.mass > 0
    if strict and not positive.all():
        raise ZeroMass(f"{int((~positive).sum())} lattice states have zero mass")
    if not positive.any():
        raise ZeroMass("Lattice law has no positive mass")
    values = -np.log(u.mass[positive]) / u.chain.n
    return RateEstimate(
        points=u.chain.points[positive],
        values=values - values.min(),
        missing=int((~positive).sum()),
    )


def _log_multinomial(states: np.ndarray, n: int) -> np.ndarray:
    return gammaln(n + 1) - gammaln(states + 1).sum(axis=1)


def scaled_relative_entropy(q: PointLike, u: LatticeDistribution) -> float:
    """(1/N) R(product of N copies of q || exchangeable law with empirical-measure law u)

    Summed over types r: the product law puts multinomial(N; Nr) prod q^{Nr}
    on type r and u spreads mass(r) evenly over the multinomial(N; Nr)
    configurations of that type.
    """
    q = as_array(q)
    chain = u.chain
    states = chain.states
    log_q = np.log(np.where(q > 0, q, 1.0))
    charged = np.all((states == 0) | (q[None, :] > 0), axis=1)
    log_config = states @ log_q
    log_type_prob = _log_multinomial(states, chain.n) + log_config
    weight = np.where(charged, np.exp(log_type_prob), 0.0)
    active = weight > 0
    if np.any(active & (u.mass <= 0)):
        raise ZeroMass("q charges a lattice type that the law u does not")
    log_mass_per_config = np.log(u.mass[active]) - _log_multinomial(states[active], chain.n)
    total = weight[active] @ (log_config[active] - log_mass_per_config)
    return float(max(total, 0.0) / chain.n)


@dataclass
class EmpiricalPath:
    jump_times: np.ndarray
    states: np.ndarray
    seed: int
    n: int
    replica: int = 0

    def at(self, times: np.ndarray) -> np.ndarray:
        """Piecewise-constant path sampled at the given times"""
        positions = np.searchsorted(self.jump_times, times, side="right") - 1
        return self.states[np.clip(positions, 0, None)]

    def rows(self) -> np.ndarray:
        """Table t, r_1..r_d"""
        return np.column_stack([self.jump_times, self.states])


@dataclass(frozen=True)
class InitialCondition:
    """Sampler for the initial empirical measure

    kind is 'iid' (N independent draws from q), 'point' (lattice point nearest q)
    or 'lattice' (draw a state from an explicit lattice law).
    """

    kind: str
    q: Optional[Tuple[float, ...]] = None
    law: Optional[LatticeDistribution] = None

    def sample(self, n: int, d: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "iid":
            return rng.multinomial(n, np.asarray(self.q, dtype=float))
        if self.kind == "point":
            return _round_to_lattice(np.asarray(self.q, dtype=float), n)
        if self.kind == "lattice":
            index = rng.choice(len(self.law.chain), p=self.law.mass)
            return self.law.chain.states[index].copy()
        raise InvalidParameters(f"Unknown initial condition kind '{self.kind}'")


def gillespie_simulate(model: RateFamily, n: int, initial: InitialCondition, t_end: float,
                       seed: int, replica: int = 0) -> EmpiricalPath:
    """Exact-jump simulation of the empirical-measure chain"""
    if n < 1:
        raise InvalidParameters(f"Particle count must be positive, got {n}")
    d = model.dimension
    rng = stream(seed, replica)
    counts = np.asarray(initial.sample(n, d, rng), dtype=np.int64)
    times: List[float] = [0.0]
    states: List[np.ndarray] = [counts / n]
    t = 0.0
    off_diagonal = ~np.eye(d, dtype=bool)
    while True:
        gamma = model.rates(counts / n)
        rates = np.where(off_diagonal, counts[:, None] * gamma, 0.0).ravel()
        total = rates.sum()
        if total <= 0:
            break
        t += rng.exponential(1.0 / total)
        if t > t_end:
            break
        edge = int(np.searchsorted(np.cumsum(rates), rng.uniform() * total, side="right"))
        edge = min(edge, rates.size - 1)
        while rates[edge] <= 0:
            edge -= 1
        source, target = divmod(edge, d)
        counts[source] -= 1
        counts[target] += 1
        times.append(t)
        states.append(counts / n)
    return EmpiricalPath(jump_times=np.array(times), states=np.vstack(states), seed=seed, n=n, replica=replica)


def simulate_replicas(model: RateFamily, n: int, initial: InitialCondition, t_end: float,
                      seed: int, replicas: int, jobs: Optional[int] = 1) -> List[EmpiricalPath]:
    return parallel_map(lambda i: gillespie_simulate(model, n, initial, t_end, seed, i), range(replicas), jobs)


def sup_deviation(path: EmpiricalPath, trajectory) -> float:
    """sup over the trajectory time grid of the l1 distance between the path and the ODE solution"""
    sampled = path.at(trajectory.times)
    return float(np.abs(sampled - trajectory.states).sum(axis=1).max())
